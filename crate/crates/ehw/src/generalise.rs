//! From sampled rows to a symbolic machine: output functions and guards.
//!
//! The merged machine says *which* abstract transitions exist and carries
//! the concrete samples for each; this module turns the samples into
//! expressions. Every fit must be exact on all rows — an expression that
//! explains most of the evidence explains none of it, because a single
//! contradicting sample later would go unnoticed.
//!
//! Functions climb a fixed ladder, simplest first: a constant, one
//! terminal, two terminals under `+`/`-`/`*`, then genetic search.
//! Terminals are the guard registers (their pre-step values) and the
//! parameters of the input being fired. Guards climb their own ladder:
//! always-true, one comparison between terminals, one comparison against a
//! sampled constant (`>=` before `>`, thresholds in ascending order, so the
//! smallest separating threshold wins), a conjunction of two such atoms,
//! then genetic search over an integer expression compared against zero.
//!
//! Refused inputs produce no transition at all — a state refuses whatever
//! nothing enables — but their rows still matter as negative evidence for
//! the guards of the branches that do fire. Silent branches stay as guarded
//! self-loops. When nothing on the ladder fits, the branch is enumerated:
//! one transition per distinct sampled context, guarded by equality on that
//! context, so the model stays exact on everything observed.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::abstraction::{Interface, RegisterConfig};
use crate::control::LambdaRow;
use crate::efsm::{AbstractOut, Efsm, EventSignature, OutputSpec, Transition};
use crate::expr::{CmpOp, Expr};
use crate::gp::{self, Case, GpRun};
use crate::reduce::ReducedMachine;
use crate::value::{Domain, Value};

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("no expression separates the samples of `{input}` at state {state}: {detail}")]
    Guard {
        state: usize,
        input: String,
        detail: String,
    },
    #[error("branch `{input}`/{out} at state {state} has no samples to fit")]
    Empty {
        state: usize,
        input: String,
        out: String,
    },
}

/// One fitting environment: the guard registers before the step plus the
/// concrete arguments the input carried.
fn env_of(iface: &Interface, rg: &[String], row: &LambdaRow) -> (BTreeMap<String, Value>, BTreeMap<String, Value>) {
    let regs = rg
        .iter()
        .map(|g| (g.clone(), row.r.get(g).clone()))
        .collect();
    let params = iface
        .input_signature(&row.x.name)
        .map(|sig| {
            sig.params
                .iter()
                .zip(&row.x.args)
                .map(|((p, _), v)| (p.clone(), v.clone()))
                .collect()
        })
        .unwrap_or_default();
    (regs, params)
}

/// Terminals usable in expressions for this input, in tie-break order:
/// guard registers as configured, then the input's own parameters.
fn terminals_for(iface: &Interface, rg: &[String], input: &str, domain: Option<&Domain>) -> Vec<Expr> {
    let wanted = |d: &Domain| match (domain, d) {
        (None, _) => true,
        (Some(Domain::Int), Domain::Int) => true,
        (Some(Domain::Enum(_)), Domain::Enum(_)) => true,
        _ => false,
    };
    let mut out = Vec::new();
    for g in rg {
        if let Some(d) = parameter_domain(iface, g) {
            if wanted(&d) {
                out.push(Expr::Reg(g.clone()));
            }
        }
    }
    if let Some(sig) = iface.input_signature(input) {
        for (p, d) in &sig.params {
            if wanted(d) {
                out.push(Expr::Param(p.clone()));
            }
        }
    }
    out
}

fn parameter_domain(iface: &Interface, name: &str) -> Option<Domain> {
    for sig in iface.inputs.iter().chain(&iface.outputs) {
        for (p, d) in &sig.params {
            if p == name {
                return Some(d.clone());
            }
        }
    }
    None
}

fn fits_all(e: &Expr, cases: &[Case]) -> bool {
    cases
        .iter()
        .all(|c| e.eval_value(&c.regs, &c.params).is_ok_and(|v| v == c.target))
}

/// Integer constants seen anywhere in the cases, ascending.
fn int_pool(cases: &[Case]) -> Vec<i64> {
    let mut pool: Vec<i64> = vec![0, 1];
    for c in cases {
        for v in c.regs.values().chain(c.params.values()).chain([&c.target]) {
            if let Value::Int(n) = v {
                pool.push(*n);
            }
        }
    }
    pool.sort_unstable();
    pool.dedup();
    pool
}

/// Fit one output parameter: constant, single terminal, two terminals
/// under an operator, then genetic search. `None` when nothing is exact.
fn fit_function(cases: &[Case], terminals: &[Expr], seed: u64) -> Option<Expr> {
    let first = &cases[0].target;
    if cases.iter().all(|c| c.target == *first) {
        return Some(match first {
            Value::Int(n) => Expr::Int(*n),
            Value::Sym(s) => Expr::Sym(s.clone()),
            Value::Unit | Value::Bottom => return None,
        });
    }
    for t in terminals {
        if fits_all(t, cases) {
            return Some(t.clone());
        }
    }
    let int_terms: Vec<&Expr> = terminals
        .iter()
        .filter(|t| {
            cases
                .iter()
                .any(|c| matches!(t.eval_value(&c.regs, &c.params), Ok(Value::Int(_))))
        })
        .collect();
    let build = [Expr::add, Expr::sub, Expr::mul];
    for make in &build {
        for a in &int_terms {
            for b in &int_terms {
                let e = make((*a).clone(), (*b).clone());
                if fits_all(&e, cases) {
                    return Some(e);
                }
            }
        }
    }
    if !int_terms.is_empty() && cases.iter().all(|c| matches!(c.target, Value::Int(_))) {
        let owned: Vec<Expr> = int_terms.into_iter().cloned().collect();
        let (e, exact) = gp::evolve(cases, &owned, &int_pool(cases), seed, &GpRun::default());
        if exact {
            return Some(e);
        }
    }
    None
}

/// Environments where a guard must hold / must not hold.
struct GuardCases {
    pos: Vec<(BTreeMap<String, Value>, BTreeMap<String, Value>)>,
    neg: Vec<(BTreeMap<String, Value>, BTreeMap<String, Value>)>,
}

fn guard_holds(e: &Expr, env: &(BTreeMap<String, Value>, BTreeMap<String, Value>)) -> Option<bool> {
    e.eval_truth(&env.0, &env.1).ok()
}

fn separates(e: &Expr, cases: &GuardCases) -> bool {
    cases.pos.iter().all(|env| guard_holds(e, env) == Some(true))
        && cases.neg.iter().all(|env| guard_holds(e, env) == Some(false))
}

/// True on every positive, regardless of the negatives — the requirement
/// for an atom to appear in a conjunction.
fn covers_pos(e: &Expr, cases: &GuardCases) -> bool {
    cases.pos.iter().all(|env| guard_holds(e, env) == Some(true))
}

const CMP_ORDER: [CmpOp; 6] = [
    CmpOp::Ge,
    CmpOp::Gt,
    CmpOp::Le,
    CmpOp::Lt,
    CmpOp::Eq,
    CmpOp::Ne,
];

/// All single-comparison candidate atoms, in tie-break order.
fn guard_atoms(cases: &GuardCases, terminals: &[Expr]) -> Vec<Expr> {
    let mut atoms = Vec::new();
    for op in CMP_ORDER {
        for (i, a) in terminals.iter().enumerate() {
            for b in terminals.iter().skip(i + 1) {
                atoms.push(Expr::cmp(op, a.clone(), b.clone()));
            }
        }
    }
    // Constants each terminal was seen with, ascending; symbols after
    // integers, in first-seen order.
    for op in CMP_ORDER {
        for t in terminals {
            let mut ints = Vec::new();
            let mut syms = Vec::new();
            for env in cases.pos.iter().chain(&cases.neg) {
                match t.eval_value(&env.0, &env.1) {
                    Ok(Value::Int(n)) if !ints.contains(&n) => ints.push(n),
                    Ok(Value::Sym(s)) if !syms.contains(&s) => syms.push(s),
                    _ => {}
                }
            }
            ints.sort_unstable();
            for n in ints {
                atoms.push(Expr::cmp(op, t.clone(), Expr::Int(n)));
            }
            if matches!(op, CmpOp::Eq | CmpOp::Ne) {
                for s in syms {
                    atoms.push(Expr::cmp(op, t.clone(), Expr::Sym(s)));
                }
            }
        }
    }
    atoms
}

/// Fit a guard that accepts every positive environment and rejects every
/// negative one.
fn fit_guard(cases: &GuardCases, terminals: &[Expr], seed: u64) -> Option<Expr> {
    if cases.neg.is_empty() {
        return Some(Expr::Bool(true));
    }
    let atoms = guard_atoms(cases, terminals);
    for a in &atoms {
        if separates(a, cases) {
            return Some(a.clone());
        }
    }
    let covering: Vec<&Expr> = atoms.iter().filter(|a| covers_pos(a, cases)).collect();
    for (i, a) in covering.iter().enumerate() {
        for b in covering.iter().skip(i + 1) {
            let e = Expr::And(Box::new((*a).clone()), Box::new((*b).clone()));
            if separates(&e, cases) {
                return Some(e);
            }
        }
    }
    // Genetic search: evolve an integer expression that is >= 1 on the
    // positives and <= 0 on the negatives, via exact 1/0 targets.
    let int_terms: Vec<Expr> = terminals
        .iter()
        .filter(|t| {
            cases
                .pos
                .iter()
                .chain(&cases.neg)
                .any(|env| matches!(t.eval_value(&env.0, &env.1), Ok(Value::Int(_))))
        })
        .cloned()
        .collect();
    if !int_terms.is_empty() {
        let gp_cases: Vec<Case> = cases
            .pos
            .iter()
            .map(|env| (env, 1))
            .chain(cases.neg.iter().map(|env| (env, 0)))
            .map(|(env, t)| Case {
                regs: env.0.clone(),
                params: env.1.clone(),
                target: Value::Int(t),
            })
            .collect();
        let (e, exact) = gp::evolve(&gp_cases, &int_terms, &int_pool(&gp_cases), seed, &GpRun::default());
        if exact {
            return Some(Expr::cmp(CmpOp::Ge, e, Expr::Int(1)));
        }
    }
    None
}

fn complement(e: &Expr) -> Expr {
    match e {
        Expr::Cmp(op, a, b) => Expr::Cmp(op.negate(), a.clone(), b.clone()),
        Expr::Not(inner) => (**inner).clone(),
        other => Expr::Not(Box::new(other.clone())),
    }
}

/// Equality guard pinning one sampled context exactly.
fn enumerated_guard(env: &(BTreeMap<String, Value>, BTreeMap<String, Value>)) -> Option<Expr> {
    let mut parts = Vec::new();
    for (name, v) in &env.0 {
        let lit = match v {
            Value::Int(n) => Expr::Int(*n),
            Value::Sym(s) => Expr::Sym(s.clone()),
            Value::Unit | Value::Bottom => continue,
        };
        parts.push(Expr::cmp(CmpOp::Eq, Expr::Reg(name.clone()), lit));
    }
    for (name, v) in &env.1 {
        let lit = match v {
            Value::Int(n) => Expr::Int(*n),
            Value::Sym(s) => Expr::Sym(s.clone()),
            Value::Unit | Value::Bottom => continue,
        };
        parts.push(Expr::cmp(CmpOp::Eq, Expr::Param(name.clone()), lit));
    }
    let mut iter = parts.into_iter();
    let first = iter.next()?;
    Some(iter.fold(first, |acc, p| Expr::And(Box::new(acc), Box::new(p))))
}

fn state_name(block: usize) -> String {
    format!("q{block}")
}

fn value_expr(v: &Value) -> Expr {
    match v {
        Value::Int(n) => Expr::Int(*n),
        Value::Sym(s) => Expr::Sym(s.clone()),
        Value::Unit | Value::Bottom => Expr::Int(0),
    }
}

/// Build the symbolic machine for the merged states: one transition per
/// non-refused branch, guards separating sibling branches (refusals count
/// as negatives), output parameters fitted on the ladder, and updates
/// mirroring the parameter registers.
pub fn generalise(
    reduced: &ReducedMachine,
    iface: &Interface,
    rg: &[String],
    initial_block: usize,
    initial_regs: &RegisterConfig,
    seed: u64,
) -> Result<Efsm, SynthesisError> {
    let mut transitions = Vec::new();
    // Branches grouped by (state, input).
    let mut groups: BTreeMap<(usize, String), Vec<AbstractOut>> = BTreeMap::new();
    for (b, input, out) in reduced.rows.keys() {
        groups
            .entry((*b, input.clone()))
            .or_default()
            .push(out.clone());
    }
    for ((block, input), outs) in &groups {
        let block = *block;
        let firing: Vec<AbstractOut> = outs
            .iter()
            .filter(|o| !matches!(o, AbstractOut::Refused))
            .cloned()
            .collect();
        for out in &firing {
            let key = (block, input.clone(), out.clone());
            let rows = &reduced.rows[&key];
            if rows.is_empty() {
                return Err(SynthesisError::Empty {
                    state: block,
                    input: input.clone(),
                    out: format!("{out:?}"),
                });
            }
            let envs: Vec<_> = rows.iter().map(|r| env_of(iface, rg, r)).collect();
            // Guard: siblings (including refusals) are the negatives.
            let neg: Vec<_> = outs
                .iter()
                .filter(|o| *o != out)
                .flat_map(|o| {
                    reduced.rows[&(block, input.clone(), o.clone())]
                        .iter()
                        .map(|r| env_of(iface, rg, r))
                })
                .collect();
            let cases = GuardCases {
                pos: envs.clone(),
                neg,
            };
            let terminals = terminals_for(iface, rg, input, None);
            let guard = if cases.neg.is_empty() {
                None
            } else if firing.len() == 2 && outs.len() == 2 && *out == firing[1] {
                // The second of a two-way split is the complement of the
                // first — synthesize once, negate once.
                let first_key = (block, input.clone(), firing[0].clone());
                let first_cases = GuardCases {
                    pos: reduced.rows[&first_key]
                        .iter()
                        .map(|r| env_of(iface, rg, r))
                        .collect(),
                    neg: envs.clone(),
                };
                match fit_guard(&first_cases, &terminals, seed) {
                    Some(g) => Some(complement(&g)),
                    None => fit_guard(&cases, &terminals, seed),
                }
            } else {
                fit_guard(&cases, &terminals, seed)
            };
            let guard = match (guard, cases.neg.is_empty()) {
                (Some(Expr::Bool(true)), _) | (None, true) => None,
                (Some(g), _) => Some(g),
                (None, false) => {
                    // Nothing separates: enumerate the sampled contexts.
                    enumerate_branch(reduced, iface, rg, block, input, out, &mut transitions)?;
                    continue;
                }
            };
            match build_transition(reduced, iface, rg, block, input, out, guard, seed) {
                Ok(t) => transitions.push(t),
                Err(_) => {
                    enumerate_branch(reduced, iface, rg, block, input, out, &mut transitions)?;
                }
            }
        }
    }

    let mut registers = Vec::new();
    for name in iface.parameter_names() {
        if let Some(d) = parameter_domain(iface, &name) {
            registers.push((name, d));
        }
    }
    let mut initial_registers = BTreeMap::new();
    for (name, _) in &registers {
        match initial_regs.get(name) {
            Value::Bottom => {}
            v => {
                initial_registers.insert(name.clone(), v.clone());
            }
        }
    }
    Ok(Efsm {
        inputs: iface.inputs.clone(),
        outputs: iface.outputs.clone(),
        registers,
        states: (0..reduced.state_count()).map(state_name).collect(),
        initial_state: state_name(initial_block),
        initial_registers,
        transitions,
    })
}

/// One symbolic transition for a branch whose outputs fit the ladder.
fn build_transition(
    reduced: &ReducedMachine,
    iface: &Interface,
    rg: &[String],
    block: usize,
    input: &str,
    out: &AbstractOut,
    guard: Option<Expr>,
    seed: u64,
) -> Result<Transition, SynthesisError> {
    let key = (block, input.to_string(), out.clone());
    let rows = &reduced.rows[&key];
    let target = reduced.delta[&key];
    let mut updates: Vec<(String, Expr)> = Vec::new();
    if let Some(sig) = iface.input_signature(input) {
        for (p, _) in &sig.params {
            updates.push((p.clone(), Expr::Param(p.clone())));
        }
    }
    let output = match out {
        AbstractOut::Silent => OutputSpec::Silent,
        AbstractOut::Event(name) => {
            let sig = iface
                .outputs
                .iter()
                .find(|s| s.name == *name)
                .cloned()
                .unwrap_or(EventSignature {
                    name: name.clone(),
                    params: vec![],
                });
            let mut args = Vec::new();
            for (idx, (p, d)) in sig.params.iter().enumerate() {
                let cases: Vec<Case> = rows
                    .iter()
                    .map(|r| {
                        let (regs, params) = env_of(iface, rg, r);
                        let target = match &r.y {
                            crate::efsm::ConcreteOutput::Event { args, .. } => {
                                args.get(idx).cloned().unwrap_or(Value::Bottom)
                            }
                            _ => Value::Bottom,
                        };
                        Case {
                            regs,
                            params,
                            target,
                        }
                    })
                    .collect();
                let terminals = terminals_for(iface, rg, input, Some(d));
                let e = fit_function(&cases, &terminals, seed).ok_or(SynthesisError::Empty {
                    state: block,
                    input: input.to_string(),
                    out: name.clone(),
                })?;
                updates.push((p.clone(), e.clone()));
                args.push(e);
            }
            OutputSpec::Event {
                name: name.clone(),
                args,
            }
        }
        AbstractOut::Refused => unreachable!("refusals never build transitions"),
    };
    Ok(Transition {
        source: state_name(block),
        input: input.to_string(),
        guard,
        output,
        updates,
        target: state_name(target),
    })
}

/// Last resort: one constant transition per distinct sampled context.
fn enumerate_branch(
    reduced: &ReducedMachine,
    iface: &Interface,
    rg: &[String],
    block: usize,
    input: &str,
    out: &AbstractOut,
    transitions: &mut Vec<Transition>,
) -> Result<(), SynthesisError> {
    let key = (block, input.to_string(), out.clone());
    let rows = &reduced.rows[&key];
    let target = reduced.delta[&key];
    let mut seen = std::collections::BTreeSet::new();
    for row in rows {
        let env = env_of(iface, rg, row);
        if !seen.insert(env.clone()) {
            continue;
        }
        let guard = enumerated_guard(&env).ok_or(SynthesisError::Guard {
            state: block,
            input: input.to_string(),
            detail: "no context to pin an enumerated transition on".into(),
        })?;
        let mut updates: Vec<(String, Expr)> = Vec::new();
        if let Some(sig) = iface.input_signature(input) {
            for (p, _) in &sig.params {
                updates.push((p.clone(), Expr::Param(p.clone())));
            }
        }
        let output = match (&row.y, out) {
            (_, AbstractOut::Silent) => OutputSpec::Silent,
            (crate::efsm::ConcreteOutput::Event { name, args }, _) => {
                let sig_params = iface
                    .outputs
                    .iter()
                    .find(|s| s.name == *name)
                    .map(|s| s.params.clone())
                    .unwrap_or_default();
                for ((p, _), v) in sig_params.iter().zip(args) {
                    updates.push((p.clone(), value_expr(v)));
                }
                OutputSpec::Event {
                    name: name.clone(),
                    args: args.iter().map(value_expr).collect(),
                }
            }
            _ => OutputSpec::Silent,
        };
        transitions.push(Transition {
            source: state_name(block),
            input: input.to_string(),
            guard: Some(guard),
            output,
            updates,
            target: state_name(target),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::Interface;
    use crate::backbone::Session;
    use crate::config::parse_config;
    use crate::interp::SulMachine;
    use crate::reduce::reduce_fsm;
    use crate::testutil::vending_machine;

    fn learned_dispenser() -> (Efsm, Interface) {
        let machine = vending_machine();
        let iface = Interface::of(&machine);
        let cfg = parse_config(
            "\
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
",
            &iface,
        )
        .unwrap();
        let mut s = Session::new(cfg, iface.clone(), SulMachine::new(machine));
        let mut i_o = s.cfg.i1.clone();
        s.backbone(&i_o).unwrap();
        let extras: Vec<_> = s.cfg.i_s.iter().skip(i_o.len()).cloned().collect();
        for x in extras {
            i_o.push(x);
            s.backbone(&i_o).unwrap();
        }
        let scc = s.scc.clone().unwrap();
        let reduced = reduce_fsm(&s.table, &s.delta, &s.lambda, &scc);
        let (q0, r0) = s.post_homing().unwrap().clone();
        let block = reduced.block_of(q0).unwrap();
        let rg = s.cfg.rg.clone();
        let model = generalise(&reduced, &iface, &rg, block, &r0, s.cfg.seed).unwrap();
        (model, iface)
    }

    #[test]
    fn dispenser_model_has_two_states_and_four_transitions() {
        let (model, _) = learned_dispenser();
        assert_eq!(model.states.len(), 2);
        assert_eq!(model.transitions.len(), 4);
        // Refusals are absences: no transition for coin or vend at the
        // state that only accepts select.
        let select_state = &model
            .transitions
            .iter()
            .find(|t| t.input == "select")
            .unwrap()
            .source;
        assert!(model
            .transitions
            .iter()
            .all(|t| t.input == "select" || t.source != *select_state));
    }

    #[test]
    fn dispenser_payment_function_is_a_running_total() {
        let (model, _) = learned_dispenser();
        let coin = model
            .transitions
            .iter()
            .find(|t| t.input == "coin")
            .unwrap();
        match &coin.output {
            OutputSpec::Event { name, args } => {
                assert_eq!(name, "Display");
                assert_eq!(args.len(), 1);
                assert_eq!(
                    args[0],
                    Expr::add(Expr::Reg("t".into()), Expr::Param("i2".into()))
                );
            }
            OutputSpec::Silent => panic!("coin must display the balance"),
        }
        assert!(coin.guard.is_none());
    }

    #[test]
    fn dispenser_serve_is_constant_until_a_counterexample() {
        // Every serve in this run delivered coffee, so the simplest exact
        // function is the constant; the disagreement walks are what later
        // force the selection register into it.
        let (model, _) = learned_dispenser();
        let serve = model
            .transitions
            .iter()
            .find(|t| matches!(&t.output, OutputSpec::Event { name, .. } if name == "Serve"))
            .unwrap();
        match &serve.output {
            OutputSpec::Event { args, .. } => {
                assert_eq!(args[0], Expr::Sym("coffee".into()));
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn dispenser_vend_guards_are_complementary() {
        let (model, _) = learned_dispenser();
        let vends: Vec<&Transition> = model
            .transitions
            .iter()
            .filter(|t| t.input == "vend")
            .collect();
        assert_eq!(vends.len(), 2);
        let serve = vends
            .iter()
            .find(|t| matches!(t.output, OutputSpec::Event { .. }))
            .unwrap();
        let silent = vends
            .iter()
            .find(|t| matches!(t.output, OutputSpec::Silent))
            .unwrap();
        let g = serve.guard.clone().unwrap();
        assert_eq!(silent.guard.clone().unwrap(), complement(&g));
        // The serving branch moves to the selection state; the silent one
        // stays put.
        assert_ne!(serve.source, serve.target);
        assert_eq!(silent.source, silent.target);
    }

    #[test]
    fn constant_and_terminal_rungs_come_before_arithmetic() {
        let cases = vec![
            Case {
                regs: [("t".to_string(), Value::Int(5))].into(),
                params: BTreeMap::new(),
                target: Value::Int(5),
            },
            Case {
                regs: [("t".to_string(), Value::Int(9))].into(),
                params: BTreeMap::new(),
                target: Value::Int(9),
            },
        ];
        let terminals = vec![Expr::Reg("t".into())];
        assert_eq!(fit_function(&cases, &terminals, 1), Some(Expr::Reg("t".into())));
        let constant = vec![Case {
            regs: BTreeMap::new(),
            params: BTreeMap::new(),
            target: Value::Int(0),
        }];
        assert_eq!(fit_function(&constant, &terminals, 1), Some(Expr::Int(0)));
    }

    #[test]
    fn threshold_guard_picks_the_smallest_separating_constant() {
        let env = |t: i64| {
            (
                [("t".to_string(), Value::Int(t))].into(),
                BTreeMap::new(),
            )
        };
        let cases = GuardCases {
            pos: vec![env(100), env(250)],
            neg: vec![env(0), env(50)],
        };
        let terminals = vec![Expr::Reg("t".into())];
        let g = fit_guard(&cases, &terminals, 1).unwrap();
        assert_eq!(
            g,
            Expr::cmp(CmpOp::Ge, Expr::Reg("t".into()), Expr::Int(100))
        );
    }

    #[test]
    fn equality_guard_on_symbols() {
        let env = |s: &str| {
            (
                BTreeMap::new(),
                [("i1".to_string(), Value::sym(s))].into(),
            )
        };
        let cases = GuardCases {
            pos: vec![env("coffee")],
            neg: vec![env("tea")],
        };
        let terminals = vec![Expr::Param("i1".into())];
        let g = fit_guard(&cases, &terminals, 1).unwrap();
        assert_eq!(
            g,
            Expr::cmp(CmpOp::Eq, Expr::Param("i1".into()), Expr::Sym("coffee".into()))
        );
    }
}
