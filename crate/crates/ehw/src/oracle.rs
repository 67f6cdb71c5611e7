//! Random-walk counterexample search, standing in for an equivalence oracle.
//!
//! Walks never reset the system: every probe extends the shared trace, and
//! consistent steps are harvested into the sample table like any other
//! observation. A counterexample is classified by what it takes to absorb
//! it: a new characterization suffix, a new learning input, or merely new
//! sample values.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::backbone::{LearnError, Session, WalkObservation};
use crate::efsm::{ConcreteInput, Efsm};
use crate::interp::{sul_step, RegisterFile, Sul, SulError};
use crate::log::EventKind;
use crate::reduce::ReducedMachine;

/// What a counterexample demands from the learner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CeKind {
    /// Two recorded behaviours disagree at one table state under the same
    /// guard-register values: the characterization set cannot separate the
    /// underlying states. Carries the separating suffix to append.
    WDeficiency { suffix: Vec<ConcreteInput> },
    /// An observed abstract output has no place in the sampled machine.
    /// The input that produced it must be learned systematically.
    Structural { input: ConcreteInput },
    /// Abstract behaviour matches but a concrete parameter value does not.
    /// The walk's inputs become sampling inputs; the already-harvested rows
    /// let the next synthesis pass fit the value.
    Data { inputs: Vec<ConcreteInput> },
}

#[derive(Debug, Clone)]
pub struct Counterexample {
    pub kind: CeKind,
    /// Trace length when the divergence was observed.
    pub step: usize,
    pub detail: String,
}

fn walk_rng(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Random walks over `pool`, checked against the sampled machine only:
/// the observed abstract output must have an outgoing edge at the tracked
/// state and must not contradict a recorded row. Consistent steps are
/// harvested; the first divergence stops the search.
pub fn nfsm_counterexample<S: Sul>(
    session: &mut Session<S>,
    pool: &[ConcreteInput],
    salt: u64,
) -> Result<Option<Counterexample>, LearnError> {
    if pool.is_empty() {
        return Ok(None);
    }
    let mut rng = walk_rng(session.cfg.seed, salt);
    for _ in 0..session.cfg.nfsm_walks {
        if session.position().is_none() {
            session.home()?;
        }
        for _ in 0..session.cfg.nfsm_walk_len {
            let x = pool[rng.gen_range(0..pool.len())].clone();
            let (y, obs) = session.walk_step(&x)?;
            let step = session.trace.len();
            match obs {
                WalkObservation::Consistent => {}
                WalkObservation::Missing => {
                    let detail =
                        format!("{x} gave {y}, which the sampled machine cannot produce");
                    session.log.push(step, EventKind::Ce, &detail);
                    return Ok(Some(Counterexample {
                        kind: CeKind::Structural { input: x },
                        step,
                        detail,
                    }));
                }
                WalkObservation::Contradiction(conflict) => {
                    let detail = conflict.to_string();
                    session.log.push(step, EventKind::Ce, &detail);
                    return Ok(Some(Counterexample {
                        kind: CeKind::WDeficiency { suffix: vec![x] },
                        step,
                        detail,
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// Seed the model's registers from the learner's current view of the
/// system configuration. Values the trace has not determined stay
/// unassigned; synthesized expressions never read outside the guard
/// registers, which homing guarantees are known.
fn model_registers<S: Sul>(session: &Session<S>, model: &Efsm) -> RegisterFile {
    let config = session.config();
    let mut regs = RegisterFile::new();
    for (name, _) in &model.registers {
        match config.get(name) {
            crate::value::Value::Bottom => {}
            v => {
                regs.insert(name.clone(), v.clone());
            }
        }
    }
    regs
}

/// Random concrete walks comparing the symbolic model against the system
/// step by step. Sampled-machine divergences keep their classification;
/// beyond those, an abstract mismatch is structural and a parameter-value
/// mismatch is a data counterexample carrying the walk's inputs.
pub fn efsm_counterexample<S: Sul>(
    session: &mut Session<S>,
    model: &Efsm,
    reduced: &ReducedMachine,
    pool: &[ConcreteInput],
    salt: u64,
) -> Result<Option<Counterexample>, LearnError> {
    if pool.is_empty() {
        return Ok(None);
    }
    let mut rng = walk_rng(session.cfg.seed, salt);
    for _ in 0..session.cfg.efsm_walks {
        if session.position().is_none() {
            session.home()?;
        }
        let q = session.position().expect("homing leaves a known position");
        let Some(block) = reduced.block_of(q) else {
            // Homing identified a state the merged machine does not cover:
            // the model is structurally incomplete before any step.
            let input = session.cfg.h[0].clone();
            let step = session.trace.len();
            let detail = format!("homed to state {q} outside the merged machine");
            session.log.push(step, EventKind::Ce, &detail);
            return Ok(Some(Counterexample {
                kind: CeKind::Structural { input },
                step,
                detail,
            }));
        };
        let mut mstate = format!("q{block}");
        let mut mregs = model_registers(session, model);
        let mut walked: Vec<ConcreteInput> = Vec::new();
        for _ in 0..session.cfg.efsm_walk_len {
            let x = pool[rng.gen_range(0..pool.len())].clone();
            walked.push(x.clone());
            // Predict on the pre-step state; the model is pure.
            let predicted = match sul_step(model, &mstate, &mregs, &x, true) {
                Ok(t) => Some(t),
                Err(SulError::Eval(_)) | Err(SulError::Nondeterminism { .. }) => None,
                Err(e) => return Err(LearnError::Sul(e)),
            };
            let (y, obs) = session.walk_step(&x)?;
            let step = session.trace.len();
            match obs {
                WalkObservation::Consistent => {}
                WalkObservation::Missing => {
                    let detail =
                        format!("{x} gave {y}, which the sampled machine cannot produce");
                    session.log.push(step, EventKind::Ce, &detail);
                    return Ok(Some(Counterexample {
                        kind: CeKind::Structural { input: x },
                        step,
                        detail,
                    }));
                }
                WalkObservation::Contradiction(conflict) => {
                    let detail = conflict.to_string();
                    session.log.push(step, EventKind::Ce, &detail);
                    return Ok(Some(Counterexample {
                        kind: CeKind::WDeficiency { suffix: vec![x] },
                        step,
                        detail,
                    }));
                }
            }
            let Some((my, mstate1, mregs1)) = predicted else {
                let detail = format!("model cannot evaluate {x} in state {mstate}");
                session.log.push(step, EventKind::Ce, &detail);
                return Ok(Some(Counterexample {
                    kind: CeKind::Structural { input: x },
                    step,
                    detail,
                }));
            };
            if my.abstracted() != y.abstracted() {
                let detail = format!("on {x} the model answered {my}, the system {y}");
                session.log.push(step, EventKind::Ce, &detail);
                return Ok(Some(Counterexample {
                    kind: CeKind::Structural { input: x },
                    step,
                    detail,
                }));
            }
            if my != y {
                let detail = format!("on {x} the model answered {my}, the system {y}");
                session.log.push(step, EventKind::Ce, &detail);
                return Ok(Some(Counterexample {
                    kind: CeKind::Data { inputs: walked },
                    step,
                    detail,
                }));
            }
            mstate = mstate1;
            mregs = mregs1;
        }
    }
    Ok(None)
}

/// Fold a counterexample back into the learner. Only a characterization
/// deficiency clears the tables; the other kinds keep all evidence and
/// merely widen an input set.
pub fn process_counterexample<S: Sul>(session: &mut Session<S>, ce: &Counterexample) {
    match &ce.kind {
        CeKind::WDeficiency { suffix } => session.extend_w(suffix.clone()),
        CeKind::Structural { input } => {
            session.add_learning_input(input.clone());
        }
        CeKind::Data { inputs } => {
            for x in inputs {
                session.add_sample_input(x.clone());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::Interface;
    use crate::config::parse_config;
    use crate::dsl::parse_efsm;
    use crate::expr::Expr;
    use crate::generalise::generalise;
    use crate::interp::SulMachine;
    use crate::reduce::reduce_fsm;
    use crate::testutil::vending_machine;

    const VENDING_CONFIG: &str = "\
h = coin(100).vend().select(coffee)
w = select(coffee)
i1 = coin(100)
i1 = select(coffee)
i1 = vend()
is = coin(50)
is = coin(200)
is = select(tea)
rw = i1
rg = i1, i2, b, t
seed = 1
";

    fn learned_vending_with(sampling: bool) -> Session<SulMachine> {
        let machine = vending_machine();
        let iface = Interface::of(&machine);
        let cfg = parse_config(VENDING_CONFIG, &iface).unwrap();
        let sul = SulMachine::new(machine);
        let mut session = Session::new(cfg, iface, sul);
        let i1 = session.cfg.i1.clone();
        session.backbone(&i1).unwrap();
        if sampling {
            let i_s = session.cfg.i_s.clone();
            session.backbone(&i_s).unwrap();
        }
        session
    }

    fn learned_vending() -> Session<SulMachine> {
        learned_vending_with(true)
    }

    fn model_of(session: &Session<SulMachine>) -> (Efsm, ReducedMachine) {
        let scc = session.scc.clone().unwrap();
        let reduced = reduce_fsm(&session.table, &session.delta, &session.lambda, &scc);
        let q0 = session.position().unwrap();
        let block = reduced.block_of(q0).unwrap();
        let model = generalise(
            &reduced,
            session.interface(),
            &session.cfg.rg.clone(),
            block,
            session.config(),
            session.cfg.seed,
        )
        .unwrap();
        (model, reduced)
    }

    #[test]
    fn clean_tables_survive_a_full_walk_budget() {
        let mut session = learned_vending();
        let before = session.trace.len();
        let pool = session.cfg.i1.clone();
        let ce = nfsm_counterexample(&mut session, &pool, 0).unwrap();
        assert!(ce.is_none());
        let budget = session.cfg.nfsm_walks * session.cfg.nfsm_walk_len;
        assert_eq!(session.trace.len(), before + budget);
        assert!(session.position().is_some());
    }

    #[test]
    fn value_divergence_is_a_data_counterexample() {
        let mut session = learned_vending();
        let (model, reduced) = model_of(&session);
        let pool = session.cfg.i_s.clone();
        let ce = efsm_counterexample(&mut session, &model, &reduced, &pool, 1)
            .unwrap()
            .expect("the constant serve parameter must diverge on tea");
        match &ce.kind {
            CeKind::Data { inputs } => {
                assert!(inputs.iter().any(|x| x.to_string() == "select(tea)"));
            }
            other => panic!("expected a data counterexample, got {other:?}"),
        }
        assert!(ce.detail.contains("Serve"));
        assert_eq!(session.log.count(EventKind::Ce), 1);
    }

    #[test]
    fn harvested_walk_rows_repair_the_serve_parameter() {
        let mut session = learned_vending();
        let (model, reduced) = model_of(&session);
        let serve_expr = |m: &Efsm| {
            m.transitions
                .iter()
                .find_map(|t| match &t.output {
                    crate::efsm::OutputSpec::Event { name, args } if name == "Serve" => {
                        Some(args[0].clone())
                    }
                    _ => None,
                })
                .expect("a serve transition")
        };
        assert_eq!(serve_expr(&model), Expr::Sym("coffee".into()));
        drop((model, reduced));
        // Walk, fold the divergence back in, rebuild: the harvested rows
        // alone must eventually give synthesis two serve values to fit.
        for salt in 1..20 {
            if session.position().is_none() {
                session.home().unwrap();
            }
            let (model, reduced) = model_of(&session);
            if serve_expr(&model) == Expr::Reg("i1".into()) {
                return;
            }
            let pool = session.cfg.i_s.clone();
            let ce = efsm_counterexample(&mut session, &model, &reduced, &pool, salt)
                .unwrap()
                .expect("walks must keep finding the divergence until repaired");
            process_counterexample(&mut session, &ce);
        }
        panic!("the serve parameter never became the drink register");
    }

    #[test]
    fn abstract_divergence_is_structural() {
        // Raise the model's serve threshold (and give it the correct serve
        // parameter, so no value divergence can fire first): in the credit
        // window [100, 150) the system serves but the model stays silent.
        let mut session = learned_vending();
        let (mut model, reduced) = model_of(&session);
        for t in &mut model.transitions {
            if t.input != "vend" {
                continue;
            }
            match &mut t.output {
                crate::efsm::OutputSpec::Event { args, .. } => {
                    *args = vec![Expr::Reg("i1".into())];
                    t.guard = Some(Expr::Cmp(
                        crate::expr::CmpOp::Ge,
                        Box::new(Expr::Reg("t".into())),
                        Box::new(Expr::Int(150)),
                    ));
                }
                crate::efsm::OutputSpec::Silent => {
                    t.guard = Some(Expr::Cmp(
                        crate::expr::CmpOp::Lt,
                        Box::new(Expr::Reg("t".into())),
                        Box::new(Expr::Int(150)),
                    ));
                }
            }
        }
        let pool = session.cfg.i1.clone();
        let ce = efsm_counterexample(&mut session, &model, &reduced, &pool, 0)
            .unwrap()
            .expect("the shifted threshold must diverge");
        match &ce.kind {
            CeKind::Structural { input } => assert_eq!(input.to_string(), "vend()"),
            other => panic!(
                "expected a structural counterexample, got {other:?}: {}",
                ce.detail
            ),
        }
    }

    const SHORT_W_SUL: &str = "\
inputs: a(), b()
outputs: A(), B(), C()

registers:
states: s0, u, v
initial: s0

s0 -- a() / A() --> u
s0 -- b() / A() --> v
u -- a() / A() --> s0
u -- b() / B() --> s0
v -- a() / A() --> s0
v -- b() / C() --> s0
";

    const SHORT_W_CONFIG: &str = "\
h = b()
w = a()
i1 = a()
i1 = b()
rw =
rg =
seed = 5
nfsm_walks = 40
nfsm_walk_len = 12
";

    fn short_w_session() -> Session<SulMachine> {
        let machine = parse_efsm(SHORT_W_SUL).unwrap();
        let iface = Interface::of(&machine);
        let cfg = parse_config(SHORT_W_CONFIG, &iface).unwrap();
        let sul = SulMachine::new(machine);
        Session::new(cfg, iface, sul)
    }

    #[test]
    fn walks_expose_a_state_the_characterization_conflates() {
        let mut session = short_w_session();
        let i1 = session.cfg.i1.clone();
        // Every state answers a() with A, so W = {a} folds all three into
        // one table state and the backbone finishes none the wiser.
        let merged = session.backbone(&i1).unwrap();
        assert_eq!(merged.len(), 1);
        let ce = nfsm_counterexample(&mut session, &i1, 0)
            .unwrap()
            .expect("b() must eventually answer C at the merged state");
        let CeKind::WDeficiency { suffix } = &ce.kind else {
            panic!("expected a characterization deficiency, got {:?}", ce.kind);
        };
        assert_eq!(suffix.len(), 1);
        assert_eq!(suffix[0].to_string(), "b()");
        process_counterexample(&mut session, &ce);
        assert_eq!(session.cfg.w.len(), 2);
        assert!(session.delta.entries().next().is_none());
        session.backbone(&i1).unwrap();
        assert_eq!(session.scc.as_ref().unwrap().len(), 3);
    }

    #[test]
    fn processing_widens_only_the_matching_input_set() {
        let machine = vending_machine();
        let iface = Interface::of(&machine);
        let cfg = parse_config(VENDING_CONFIG, &iface).unwrap();
        let sul = SulMachine::new(machine);
        let mut session = Session::new(cfg, iface, sul);
        let coin50 = session
            .cfg
            .i_s
            .iter()
            .find(|x| x.to_string() == "coin(50)")
            .unwrap()
            .clone();

        let i1_before = session.cfg.i1.len();
        process_counterexample(
            &mut session,
            &Counterexample {
                kind: CeKind::Data {
                    inputs: vec![coin50.clone()],
                },
                step: 0,
                detail: String::new(),
            },
        );
        assert_eq!(session.cfg.i1.len(), i1_before);

        process_counterexample(
            &mut session,
            &Counterexample {
                kind: CeKind::Structural {
                    input: coin50.clone(),
                },
                step: 0,
                detail: String::new(),
            },
        );
        assert_eq!(session.cfg.i1.len(), i1_before + 1);
        assert!(session.cfg.i2.contains(&coin50));
    }
}

