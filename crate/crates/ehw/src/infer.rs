//! The complete learning run, from an empty trace to a generalised model.
//!
//! The run is a fixed sequence of phases that restarts from the top whenever
//! a counterexample changes what the learner believes about structure:
//!
//! 1. Backbone passes over a widening alphabet: the learning inputs alone,
//!    then each extra probe input folded in one at a time (the ones that
//!    touch only state registers first). Widening gradually keeps the
//!    sampled machine small while each new input is placed.
//! 2. Random walks over the same alphabets hunt for transitions the
//!    backbone missed and for states the characterization conflates.
//! 3. A final backbone pass over the full sampling set gathers value
//!    variety for synthesis without (if the guard registers are right)
//!    disturbing the state structure.
//! 4. Merge compatible states, synthesise guards and outputs, and walk the
//!    resulting model against the live system. Value disagreements refine
//!    the synthesis in place; structural ones send us back to phase 1.
//!
//! Characterization clashes can surface in any phase. The clashing input is
//! appended to W and every table is rebuilt from the trace — the trace and
//! the homing dictionary are the only state that survives, so nothing
//! already paid for is re-executed on the system.

use serde::Serialize;
use thiserror::Error;

use crate::abstraction::Interface;
use crate::backbone::{LearnError, Session};
use crate::config::LearnerConfig;
use crate::control::Inconsistency;
use crate::dsl::parse_concrete_input;
use crate::efsm::{ConcreteInput, Efsm};
use crate::generalise::{generalise, SynthesisError};
use crate::interp::Sul;
use crate::log::EventKind;
use crate::oracle::{
    efsm_counterexample, nfsm_counterexample, process_counterexample, CeKind,
};
use crate::reduce::{reduce_fsm, ReducedMachine};

/// Hard ceiling on processed counterexamples. Hitting it means refinement
/// is not converging: every round of walks keeps finding new trouble.
const CE_BUDGET: usize = 100;

/// How many times to re-apply the homing sequence when the identified
/// state falls outside the merged machine before giving up.
const REHOME_ATTEMPTS: usize = 10;

#[derive(Debug, Error)]
pub enum InferError {
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error("model synthesis failed: {0}")]
    Synthesis(#[from] SynthesisError),
    #[error("no model after {0} counterexamples; refinement is not converging")]
    CeBudget(usize),
}

/// Cost and size figures for a finished run.
#[derive(Debug, Clone, Serialize)]
pub struct Stats {
    /// Total inputs sent to the system — the final trace length.
    pub steps: usize,
    /// States in the sampled machine when it was last merged.
    pub states_before_reduce: usize,
    /// State blocks after merging.
    pub states_after_reduce: usize,
    /// Transitions in the generalised model.
    pub transitions: usize,
    /// Counterexamples processed along the way.
    pub ce_count: usize,
}

/// A finished run: the model, the merged machine it was synthesised from,
/// and the cost figures.
#[derive(Debug, Clone)]
pub struct Inference {
    pub model: Efsm,
    pub reduced: ReducedMachine,
    pub stats: Stats,
}

/// The cumulative alphabets for the widening backbone passes. Extra probe
/// inputs join in declaration order, except that inputs whose parameters
/// all feed state registers come first: those may split states, and any
/// splitting should happen while the alphabet is still small.
fn ramp_stages(cfg: &LearnerConfig, iface: &Interface) -> Vec<Vec<ConcreteInput>> {
    let touches_only_state_registers = |x: &ConcreteInput| {
        iface
            .input_signature(&x.name)
            .map(|sig| sig.params.iter().all(|(p, _)| cfg.rw.contains(p)))
            .unwrap_or(false)
    };
    let extras: Vec<&ConcreteInput> =
        cfg.i2.iter().filter(|x| !cfg.i1.contains(x)).collect();

    let mut stages = vec![cfg.i1.clone()];
    let mut current = cfg.i1.clone();
    for pass in [true, false] {
        for x in &extras {
            if touches_only_state_registers(x) == pass {
                current.push((*x).clone());
                stages.push(current.clone());
            }
        }
    }
    stages
}

/// Run one backbone pass. A characterization clash is absorbed by
/// extending W with the clashing input and signalled as `false` (restart);
/// anything else is fatal.
fn backbone_stage<S: Sul>(
    session: &mut Session<S>,
    stage: &[ConcreteInput],
    ce_count: &mut usize,
) -> Result<bool, InferError> {
    match session.backbone(stage) {
        Ok(_) => Ok(true),
        Err(LearnError::Inconsistent(Inconsistency::Observation { state, x, .. })) => {
            let input = parse_concrete_input(&x, session.interface())
                .expect("conflicting input renders back into the interface");
            *ce_count += 1;
            let step = session.trace.len();
            session.log.push(
                step,
                EventKind::Ce,
                format!("state {state} answers {x} two ways; extending W with it"),
            );
            session.extend_w(vec![input]);
            Ok(false)
        }
        Err(e) => Err(e.into()),
    }
}

/// The block of the merged machine the learner currently stands in,
/// re-homing if the walk phase left the position unknown or outside.
fn block_here<S: Sul>(
    session: &mut Session<S>,
    reduced: &ReducedMachine,
) -> Result<usize, InferError> {
    for _ in 0..REHOME_ATTEMPTS {
        if let Some(q) = session.position() {
            if let Some(block) = reduced.block_of(q) {
                return Ok(block);
            }
        }
        session.home()?;
    }
    Err(LearnError::Disconnected(
        "homing keeps identifying states outside the merged machine".into(),
    )
    .into())
}

/// Learn a model of the system behind `session`, walking it against the
/// live system until no budgeted walk can tell them apart.
pub fn ehw_main<S: Sul>(session: &mut Session<S>) -> Result<Inference, InferError> {
    let mut ce_count = 0usize;
    let mut salt = 0u64;

    'learning: loop {
        if ce_count > CE_BUDGET {
            return Err(InferError::CeBudget(ce_count));
        }

        let stages = ramp_stages(&session.cfg, session.interface());
        let mut restart = false;
        for stage in &stages {
            if !backbone_stage(session, stage, &mut ce_count)? {
                restart = true;
                break;
            }
        }
        if restart {
            continue 'learning;
        }

        for stage in &stages {
            salt += 1;
            if let Some(ce) = nfsm_counterexample(session, stage, salt)? {
                ce_count += 1;
                process_counterexample(session, &ce);
                continue 'learning;
            }
        }

        let sampling = session.cfg.i_s.clone();
        if !backbone_stage(session, &sampling, &mut ce_count)? {
            continue 'learning;
        }

        loop {
            if ce_count > CE_BUDGET {
                return Err(InferError::CeBudget(ce_count));
            }

            let scc = session
                .scc
                .clone()
                .expect("a successful backbone pass leaves an explored component");
            let reduced =
                reduce_fsm(&session.table, &session.delta, &session.lambda, &scc);
            let block = block_here(session, &reduced)?;
            let model = generalise(
                &reduced,
                session.interface(),
                &session.cfg.rg,
                block,
                session.config(),
                session.cfg.seed,
            )?;

            salt += 1;
            let pool = session.cfg.i_s.clone();
            let Some(ce) = efsm_counterexample(session, &model, &reduced, &pool, salt)?
            else {
                let stats = Stats {
                    steps: session.trace.len(),
                    states_before_reduce: scc.len(),
                    states_after_reduce: reduced.state_count(),
                    transitions: model.transitions.len(),
                    ce_count,
                };
                return Ok(Inference { model, reduced, stats });
            };

            let value_only = matches!(ce.kind, CeKind::Data { .. });
            ce_count += 1;
            process_counterexample(session, &ce);
            if !value_only {
                continue 'learning;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use crate::dsl::parse_efsm;
    use crate::efsm::OutputSpec;
    use crate::expr::Expr;
    use crate::interp::SulMachine;
    use crate::testutil::vending_machine;

    fn session_for(machine: Efsm, config: &str) -> Session<SulMachine> {
        let iface = Interface::of(&machine);
        let cfg = parse_config(config, &iface).expect("fixture config parses");
        let sul = SulMachine::new(machine);
        Session::new(cfg, iface, sul)
    }

    const VENDING_CONFIG: &str = "h = coin(100).vend().select(coffee)\n\
                                  w = select(coffee)\n\
                                  i1 = coin(100)\n\
                                  i1 = select(coffee)\n\
                                  i1 = vend()\n\
                                  is = coin(50)\n\
                                  is = coin(200)\n\
                                  is = select(tea)\n\
                                  rw = i1\n\
                                  rg = i1, i2, b, t\n\
                                  seed = 1\n";

    #[test]
    fn the_vending_model_is_recovered_in_full() {
        let mut session = session_for(vending_machine(), VENDING_CONFIG);
        let inference = ehw_main(&mut session).expect("run converges");

        assert_eq!(inference.stats.states_after_reduce, 2);
        assert_eq!(inference.stats.transitions, 4);
        assert_eq!(inference.stats.steps, session.trace.len());

        let model = &inference.model;
        let arg_of = |wanted: &str| {
            model
                .transitions
                .iter()
                .find_map(|t| match &t.output {
                    OutputSpec::Event { name, args } if name == wanted => {
                        Some(args[0].clone())
                    }
                    _ => None,
                })
        };

        let serve = arg_of("Serve").expect("the model serves something");
        assert_eq!(serve, Expr::reg("i1"));

        let display = arg_of("Display").expect("the model displays a balance");
        let forward = Expr::add(Expr::reg("t"), Expr::param("i2"));
        let flipped = Expr::add(Expr::param("i2"), Expr::reg("t"));
        assert!(
            display == forward || display == flipped,
            "balance is the running total plus the new coin, got {display:?}"
        );
    }

    #[test]
    fn a_single_state_system_needs_only_a_handful_of_steps() {
        let machine = parse_efsm(
            "inputs: ping()\n\
             outputs: Pong()\n\
             \n\
             registers:\n\
             states: s0\n\
             initial: s0\n\
             \n\
             s0 -- ping() / Pong() --> s0\n",
        )
        .expect("one-state machine parses");
        let config = "h = ping()\n\
                      w = ping()\n\
                      i1 = ping()\n\
                      rw =\n\
                      rg =\n\
                      seed = 3\n\
                      nfsm_walks = 2\n\
                      nfsm_walk_len = 3\n\
                      efsm_walks = 2\n\
                      efsm_walk_len = 3\n";
        let mut session = session_for(machine, config);
        let inference = ehw_main(&mut session).expect("run converges");

        assert_eq!(inference.stats.states_after_reduce, 1);
        assert_eq!(inference.stats.transitions, 1);
        assert_eq!(inference.stats.ce_count, 0);
        assert!(
            inference.stats.steps < 20,
            "a one-state system should cost almost nothing, took {}",
            inference.stats.steps
        );
    }

    #[test]
    fn a_conflating_characterization_is_repaired_mid_run() {
        let machine = parse_efsm(
            "inputs: a(), b()\n\
             outputs: A(), B(), C()\n\
             \n\
             registers:\n\
             states: s0, u, v\n\
             initial: s0\n\
             \n\
             s0 -- a() / A() --> u\n\
             s0 -- b() / A() --> v\n\
             u -- a() / A() --> s0\n\
             u -- b() / B() --> s0\n\
             v -- a() / A() --> s0\n\
             v -- b() / C() --> s0\n",
        )
        .expect("three-state machine parses");
        let config = "h = b()\n\
                      w = a()\n\
                      i1 = a()\n\
                      i1 = b()\n\
                      rw =\n\
                      rg =\n\
                      seed = 5\n\
                      nfsm_walks = 40\n\
                      nfsm_walk_len = 12\n";
        let mut session = session_for(machine, config);
        let inference = ehw_main(&mut session).expect("run converges");

        assert!(session.cfg.w.len() >= 2, "W must have grown");
        assert_eq!(inference.stats.states_after_reduce, 3);
        assert!(inference.stats.ce_count >= 1);
        assert_eq!(inference.stats.transitions, 6);
    }

    #[test]
    fn stage_alphabets_widen_one_probe_input_at_a_time() {
        let machine = vending_machine();
        let iface = Interface::of(&machine);
        let config = "h = coin(100).vend().select(coffee)\n\
                      w = select(coffee)\n\
                      i1 = coin(100)\n\
                      i1 = select(coffee)\n\
                      i1 = vend()\n\
                      i2 = select(tea)\n\
                      i2 = coin(50)\n\
                      rw = i1\n\
                      rg = i1, i2, b, t\n\
                      seed = 1\n";
        let cfg = parse_config(config, &iface).expect("config parses");
        let stages = ramp_stages(&cfg, &iface);

        assert_eq!(stages.len(), 3);
        assert_eq!(stages[0], cfg.i1);
        // select's parameter i1 is a state register, so select(tea) widens
        // first even though coin(50) is declared before it.
        assert_eq!(stages[1].last().unwrap().to_string(), "select(tea)");
        assert_eq!(stages[2].last().unwrap().to_string(), "coin(50)");
        assert_eq!(stages[2].len(), cfg.i2.len());
    }
}
