//! Interpreting an EFSM as a running system: single-step semantics, a
//! stateful machine wrapper that serves as the system under learning, and
//! the static/dynamic validity checks a machine must pass before it can be
//! trusted as a deterministic oracle.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::efsm::{ConcreteInput, ConcreteOutput, Efsm, OutputSpec, Transition};
use crate::expr::{CmpOp, EvalError, Expr};
use crate::value::Value;

/// A total register file: declared machine registers plus one register per
/// input/output parameter name (the "last value" registers).
pub type RegisterFile = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SulError {
    #[error("expression evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("nondeterministic machine: {count} guards hold in state `{state}` on `{input}`")]
    Nondeterminism {
        state: String,
        input: String,
        count: usize,
    },
    #[error("unknown input event `{0}`")]
    UnknownInput(String),
    #[error("input `{input}` has {got} argument(s), expected {expected}")]
    Arity {
        input: String,
        got: usize,
        expected: usize,
    },
    #[error("argument {index} of `{input}` is outside the declared domain")]
    DomainViolation { input: String, index: usize },
}

/// Anything that can be driven one concrete input at a time. There is no
/// reset: the stream of inputs a learner sends is a single unbroken run.
pub trait Sul {
    fn step(&mut self, input: &ConcreteInput) -> Result<ConcreteOutput, SulError>;
}

/// The register file a machine starts with: declared initial values where
/// given, unassigned everywhere else (including all parameter registers).
pub fn initial_register_file(machine: &Efsm) -> RegisterFile {
    let mut regs = RegisterFile::new();
    for (name, _) in &machine.registers {
        let v = machine
            .initial_registers
            .get(name)
            .cloned()
            .unwrap_or(Value::Bottom);
        regs.insert(name.clone(), v);
    }
    for name in machine.parameter_names() {
        regs.entry(name).or_insert(Value::Bottom);
    }
    regs
}

fn bind_params(
    machine: &Efsm,
    input: &ConcreteInput,
) -> Result<BTreeMap<String, Value>, SulError> {
    let sig = machine
        .input_signature(&input.name)
        .ok_or_else(|| SulError::UnknownInput(input.name.clone()))?;
    if sig.params.len() != input.args.len() {
        return Err(SulError::Arity {
            input: input.name.clone(),
            got: input.args.len(),
            expected: sig.params.len(),
        });
    }
    let mut bound = BTreeMap::new();
    for (index, ((pname, dom), value)) in sig.params.iter().zip(&input.args).enumerate() {
        if value.is_bottom() || !dom.admits(value) {
            return Err(SulError::DomainViolation {
                input: input.name.clone(),
                index,
            });
        }
        bound.insert(pname.clone(), value.clone());
    }
    Ok(bound)
}

/// Execute one concrete input against an explicit (state, register) pair.
///
/// Exactly one enabled transition fires; its output and update expressions
/// are all evaluated against the pre-transition registers, then the fired
/// input's (and produced output's) parameter registers are refreshed with
/// the concrete values just exchanged. If no transition is enabled the input
/// is refused and nothing changes. A silent transition applies no updates;
/// whether it still refreshes the input's parameter registers is controlled
/// by `refresh_params_on_silent` (the learner assumes it does).
pub fn sul_step(
    machine: &Efsm,
    state: &str,
    regs: &RegisterFile,
    input: &ConcreteInput,
    refresh_params_on_silent: bool,
) -> Result<(ConcreteOutput, String, RegisterFile), SulError> {
    let params = bind_params(machine, input)?;
    let mut enabled: Vec<&Transition> = Vec::new();
    for t in machine.transitions_from(state, &input.name) {
        let holds = match &t.guard {
            None => true,
            Some(g) => g.eval_truth(regs, &params)?,
        };
        if holds {
            enabled.push(t);
        }
    }
    match enabled.len() {
        0 => Ok((ConcreteOutput::Refused, state.to_string(), regs.clone())),
        1 => {
            let t = enabled[0];
            let mut next = regs.clone();
            match &t.output {
                OutputSpec::Silent => {
                    if refresh_params_on_silent {
                        for (name, value) in &params {
                            next.insert(name.clone(), value.clone());
                        }
                    }
                    Ok((ConcreteOutput::Silent, t.target.clone(), next))
                }
                OutputSpec::Event { name, args } => {
                    let mut out_values = Vec::with_capacity(args.len());
                    for e in args {
                        out_values.push(e.eval_value(regs, &params)?);
                    }
                    let mut updated: Vec<(String, Value)> = Vec::new();
                    for (reg, e) in &t.updates {
                        updated.push((reg.clone(), e.eval_value(regs, &params)?));
                    }
                    for (reg, v) in updated {
                        next.insert(reg, v);
                    }
                    for (pname, value) in &params {
                        next.insert(pname.clone(), value.clone());
                    }
                    if let Some(sig) = machine.output_signature(name) {
                        for ((pname, _), value) in sig.params.iter().zip(&out_values) {
                            next.insert(pname.clone(), value.clone());
                        }
                    }
                    Ok((
                        ConcreteOutput::event(name, out_values),
                        t.target.clone(),
                        next,
                    ))
                }
            }
        }
        n => Err(SulError::Nondeterminism {
            state: state.to_string(),
            input: input.name.clone(),
            count: n,
        }),
    }
}

/// A stateful interpreter holding one machine run: the in-process system
/// under learning.
#[derive(Debug, Clone)]
pub struct SulMachine {
    machine: Efsm,
    state: String,
    regs: RegisterFile,
    refresh_params_on_silent: bool,
}

impl SulMachine {
    pub fn new(machine: Efsm) -> SulMachine {
        let state = machine.initial_state.clone();
        let regs = initial_register_file(&machine);
        SulMachine {
            machine,
            state,
            regs,
            refresh_params_on_silent: true,
        }
    }

    pub fn state(&self) -> &str {
        &self.state
    }

    pub fn registers(&self) -> &RegisterFile {
        &self.regs
    }

    pub fn machine(&self) -> &Efsm {
        &self.machine
    }
}

impl Sul for SulMachine {
    fn step(&mut self, input: &ConcreteInput) -> Result<ConcreteOutput, SulError> {
        let (out, next_state, next_regs) = sul_step(
            &self.machine,
            &self.state,
            &self.regs,
            input,
            self.refresh_params_on_silent,
        )?;
        self.state = next_state;
        self.regs = next_regs;
        Ok(out)
    }
}

/// One problem found by `validate_efsm`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    Determinism,
    Observability,
    Connectivity,
    SilentLoop,
    Reference,
    Evaluation,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::Determinism => "determinism",
            ViolationKind::Observability => "observability",
            ViolationKind::Connectivity => "connectivity",
            ViolationKind::SilentLoop => "silent-loop",
            ViolationKind::Reference => "reference",
            ViolationKind::Evaluation => "evaluation",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, kind: ViolationKind, message: String) {
        self.violations.push(Violation { kind, message });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            write!(f, "OK: deterministic, observable, strongly connected")
        } else {
            for (i, v) in self.violations.iter().enumerate() {
                if i > 0 {
                    writeln!(f)?;
                }
                write!(f, "{}: {}", v.kind, v.message)?;
            }
            Ok(())
        }
    }
}

/// Guard shape recognized by the exact single-register overlap analysis:
/// a comparison between one register and an integer constant.
fn threshold_form(e: &Expr) -> Option<(String, CmpOp, i64)> {
    if let Expr::Cmp(op, a, b) = e {
        match (a.as_ref(), b.as_ref()) {
            (Expr::Reg(r), Expr::Int(n)) => Some((r.clone(), *op, *n)),
            (Expr::Int(n), Expr::Reg(r)) => {
                // Flip the comparison so the register is on the left.
                let flipped = match op {
                    CmpOp::Lt => CmpOp::Gt,
                    CmpOp::Le => CmpOp::Ge,
                    CmpOp::Gt => CmpOp::Lt,
                    CmpOp::Ge => CmpOp::Le,
                    CmpOp::Eq => CmpOp::Eq,
                    CmpOp::Ne => CmpOp::Ne,
                };
                Some((r.clone(), flipped, *n))
            }
            _ => None,
        }
    } else {
        None
    }
}

fn holds_at(op: CmpOp, x: i64, c: i64) -> bool {
    match op {
        CmpOp::Eq => x == c,
        CmpOp::Ne => x != c,
        CmpOp::Lt => x < c,
        CmpOp::Le => x <= c,
        CmpOp::Gt => x > c,
        CmpOp::Ge => x >= c,
    }
}

/// Check a pair of transitions sharing (state, input) for guard overlap,
/// exactly, when both guards are threshold comparisons over the same single
/// register (an unguarded transition counts as always true). Returns
/// `Some(true)` if they overlap somewhere, `Some(false)` if provably
/// disjoint, `None` if this analysis does not apply.
fn threshold_overlap(a: &Option<Expr>, b: &Option<Expr>) -> Option<bool> {
    // The truth of a threshold guard is constant between consecutive
    // constants, so probing every constant and its neighbours decides
    // overlap exactly.
    let forms = |g: &Option<Expr>| -> Option<Option<(String, CmpOp, i64)>> {
        match g {
            None => Some(None),
            Some(e) => threshold_form(e).map(Some),
        }
    };
    let fa = forms(a)?;
    let fb = forms(b)?;
    let (reg, consts) = match (&fa, &fb) {
        (None, None) => return Some(true),
        (Some((r, _, c)), None) | (None, Some((r, _, c))) => (r.clone(), vec![*c]),
        (Some((r1, _, c1)), Some((r2, _, c2))) => {
            if r1 != r2 {
                return None;
            }
            (r1.clone(), vec![*c1, *c2])
        }
    };
    let mut probes = BTreeSet::new();
    for c in consts {
        for d in [-1i64, 0, 1] {
            probes.insert(c.saturating_add(d));
        }
    }
    let eval = |form: &Option<(String, CmpOp, i64)>, x: i64| -> bool {
        match form {
            None => true,
            Some((r, op, c)) => {
                debug_assert_eq!(*r, reg);
                holds_at(*op, x, *c)
            }
        }
    };
    Some(probes.iter().any(|&x| eval(&fa, x) && eval(&fb, x)))
}

/// Check the tractability requirements: concrete determinism, observability,
/// strong connectivity of the control structure, and well-formed silent
/// transitions. Determinism is decided exactly for single-register threshold
/// guards and otherwise probed over the register configurations reachable
/// with `probe_domain`.
pub fn validate_efsm(machine: &Efsm, probe_domain: &[ConcreteInput]) -> ValidationReport {
    let mut report = ValidationReport::default();

    check_references(machine, &mut report);
    if !report.ok() {
        // Reference errors make the later passes meaningless (and unsafe).
        return report;
    }

    // Silent transitions: self-loops, no updates.
    for t in &machine.transitions {
        if matches!(t.output, OutputSpec::Silent) {
            if t.source != t.target {
                report.push(
                    ViolationKind::SilentLoop,
                    format!(
                        "omega transition must not change state: `{}` -> `{}` on `{}`",
                        t.source, t.target, t.input
                    ),
                );
            }
            if !t.updates.is_empty() {
                report.push(
                    ViolationKind::SilentLoop,
                    format!(
                        "omega transition on `{}` from `{}` must not update registers",
                        t.input, t.source
                    ),
                );
            }
        }
    }

    // Observability: distinct transitions from one state on one input must
    // have distinct abstract outputs.
    for s in &machine.states {
        for sig in &machine.inputs {
            let ts: Vec<&Transition> = machine.transitions_from(s, &sig.name).collect();
            let mut seen: BTreeMap<String, usize> = BTreeMap::new();
            for t in &ts {
                let label = match &t.output {
                    OutputSpec::Silent => "omega".to_string(),
                    OutputSpec::Event { name, .. } => name.clone(),
                };
                *seen.entry(label).or_insert(0) += 1;
            }
            for (label, n) in seen {
                if n > 1 {
                    report.push(
                        ViolationKind::Observability,
                        format!(
                            "state `{s}` has {n} transitions on `{}` with abstract output `{label}`",
                            sig.name
                        ),
                    );
                }
            }
        }
    }

    // Strong connectivity of the control structure.
    if let Some(missing) = unreachable_pairs(machine) {
        report.push(ViolationKind::Connectivity, missing);
    }

    // Determinism, exact pass: threshold guards over one shared register.
    for s in &machine.states {
        for sig in &machine.inputs {
            let ts: Vec<&Transition> = machine.transitions_from(s, &sig.name).collect();
            for i in 0..ts.len() {
                for j in i + 1..ts.len() {
                    if threshold_overlap(&ts[i].guard, &ts[j].guard) == Some(true) {
                        report.push(
                            ViolationKind::Determinism,
                            format!(
                                "state `{s}` on `{}`: guards `{}` and `{}` overlap",
                                sig.name,
                                guard_text(&ts[i].guard),
                                guard_text(&ts[j].guard)
                            ),
                        );
                    }
                }
            }
        }
    }

    // Determinism and evaluation, dynamic pass: walk the configurations
    // reachable with the probe inputs and count enabled guards everywhere.
    probe_reachable(machine, probe_domain, &mut report);

    report
}

fn guard_text(g: &Option<Expr>) -> String {
    match g {
        None => "true".to_string(),
        Some(e) => e.to_string(),
    }
}

fn check_references(machine: &Efsm, report: &mut ValidationReport) {
    let states: BTreeSet<&String> = machine.states.iter().collect();
    if !states.contains(&machine.initial_state) {
        report.push(
            ViolationKind::Reference,
            format!("initial state `{}` is not declared", machine.initial_state),
        );
    }
    let mut known_regs: BTreeSet<String> =
        machine.registers.iter().map(|(n, _)| n.clone()).collect();
    known_regs.extend(machine.parameter_names());
    for (name, _) in &machine.initial_registers {
        if !known_regs.contains(name) {
            report.push(
                ViolationKind::Reference,
                format!("initial value for undeclared register `{name}`"),
            );
        }
    }
    for (idx, t) in machine.transitions.iter().enumerate() {
        if !states.contains(&t.source) || !states.contains(&t.target) {
            report.push(
                ViolationKind::Reference,
                format!("transition {idx} uses an undeclared state"),
            );
        }
        let sig = match machine.input_signature(&t.input) {
            Some(s) => s,
            None => {
                report.push(
                    ViolationKind::Reference,
                    format!("transition {idx} uses undeclared input `{}`", t.input),
                );
                continue;
            }
        };
        let own_params: BTreeSet<&str> = sig.param_names().collect();
        let check_expr = |e: &Expr, what: &str| -> Vec<String> {
            let mut problems = Vec::new();
            let mut regs = Vec::new();
            e.registers(&mut regs);
            for r in regs {
                if !known_regs.contains(&r) {
                    problems.push(format!(
                        "transition {idx} {what} reads undeclared register `{r}`"
                    ));
                }
            }
            let mut ps = Vec::new();
            e.parameters(&mut ps);
            for p in ps {
                if !own_params.contains(p.as_str()) {
                    problems.push(format!(
                        "transition {idx} {what} reads `{p}`, not a parameter of `{}`",
                        t.input
                    ));
                }
            }
            problems
        };
        let mut problems: Vec<String> = Vec::new();
        if let Some(g) = &t.guard {
            problems.extend(check_expr(g, "guard"));
        }
        if let OutputSpec::Event { name, args } = &t.output {
            match machine.output_signature(name) {
                None => problems.push(format!("transition {idx} emits undeclared output `{name}`")),
                Some(osig) => {
                    if osig.params.len() != args.len() {
                        problems.push(format!(
                            "transition {idx} gives {} argument(s) to `{name}`, expected {}",
                            args.len(),
                            osig.params.len()
                        ));
                    }
                }
            }
            for e in args {
                problems.extend(check_expr(e, "output"));
            }
        }
        for (reg, e) in &t.updates {
            if !known_regs.contains(reg) {
                problems.push(format!(
                    "transition {idx} updates undeclared register `{reg}`"
                ));
            }
            problems.extend(check_expr(e, "update"));
        }
        for message in problems {
            report.push(ViolationKind::Reference, message);
        }
    }
}

fn unreachable_pairs(machine: &Efsm) -> Option<String> {
    let n = machine.states.len();
    let index: BTreeMap<&str, usize> = machine
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let mut fwd = vec![Vec::new(); n];
    let mut back = vec![Vec::new(); n];
    for t in &machine.transitions {
        let (a, b) = (index[t.source.as_str()], index[t.target.as_str()]);
        fwd[a].push(b);
        back[b].push(a);
    }
    let bfs = |adj: &Vec<Vec<usize>>, start: usize| -> Vec<bool> {
        let mut seen = vec![false; adj.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    };
    if n == 0 {
        return Some("machine has no states".to_string());
    }
    let from0 = bfs(&fwd, 0);
    let to0 = bfs(&back, 0);
    let stranded: Vec<&String> = machine
        .states
        .iter()
        .enumerate()
        .filter(|(i, _)| !(from0[*i] && to0[*i]))
        .map(|(_, s)| s)
        .collect();
    if stranded.is_empty() {
        None
    } else {
        Some(format!(
            "control structure is not strongly connected (involving {})",
            stranded
                .iter()
                .map(|s| format!("`{s}`"))
                .collect::<Vec<_>>()
                .join(", ")
        ))
    }
}

fn probe_reachable(machine: &Efsm, probe_domain: &[ConcreteInput], report: &mut ValidationReport) {
    const MAX_CONFIGS: usize = 4096;
    if probe_domain.is_empty() {
        return;
    }
    let start = (
        machine.initial_state.clone(),
        initial_register_file(machine),
    );
    let mut seen: BTreeSet<(String, RegisterFile)> = BTreeSet::new();
    let mut queue = VecDeque::from([start.clone()]);
    seen.insert(start);
    let mut reported: BTreeSet<String> = BTreeSet::new();
    while let Some((state, regs)) = queue.pop_front() {
        for x in probe_domain {
            let params = match bind_params(machine, x) {
                Ok(p) => p,
                Err(e) => {
                    let key = format!("probe-input {x}");
                    if reported.insert(key) {
                        report.push(
                            ViolationKind::Evaluation,
                            format!("probe input {x} is invalid: {e}"),
                        );
                    }
                    continue;
                }
            };
            let mut enabled = 0usize;
            let mut eval_failed = false;
            for t in machine.transitions_from(&state, &x.name) {
                match &t.guard {
                    None => enabled += 1,
                    Some(g) => match g.eval_truth(&regs, &params) {
                        Ok(true) => enabled += 1,
                        Ok(false) => {}
                        Err(e) => {
                            eval_failed = true;
                            let key = format!("eval {state} {}", t.input);
                            if reported.insert(key) {
                                report.push(
                                    ViolationKind::Evaluation,
                                    format!(
                                        "guard on `{}` from `{state}` fails at a reachable configuration: {e}",
                                        t.input
                                    ),
                                );
                            }
                        }
                    },
                }
            }
            if enabled > 1 {
                let key = format!("det {state} {}", x.name);
                if reported.insert(key) {
                    report.push(
                        ViolationKind::Determinism,
                        format!(
                            "{enabled} transitions enabled in `{state}` on {x} at a reachable configuration"
                        ),
                    );
                }
            }
            if eval_failed {
                continue;
            }
            match sul_step(machine, &state, &regs, x, true) {
                Ok((_, s1, r1)) => {
                    if seen.len() < MAX_CONFIGS && seen.insert((s1.clone(), r1.clone())) {
                        queue.push_back((s1, r1));
                    }
                }
                Err(SulError::Nondeterminism { .. }) => {}
                Err(e) => {
                    let key = format!("step {state} {x}");
                    if reported.insert(key) {
                        report.push(
                            ViolationKind::Evaluation,
                            format!("stepping {x} from `{state}` fails: {e}"),
                        );
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{blowup_machine, vending_machine};

    fn val(n: i64) -> Value {
        Value::Int(n)
    }

    #[test]
    fn select_from_fresh_machine() {
        let m = vending_machine();
        let regs = initial_register_file(&m);
        let x = ConcreteInput::new("select", vec![Value::sym("tea")]);
        let (y, s1, r1) = sul_step(&m, "s0", &regs, &x, true).unwrap();
        assert_eq!(y, ConcreteOutput::event("Pay", vec![val(0)]));
        assert_eq!(s1, "s1");
        assert_eq!(r1["r1"], Value::sym("tea"));
        assert_eq!(r1["r2"], val(0));
        // Last-value registers follow the exchanged parameters.
        assert_eq!(r1["i1"], Value::sym("tea"));
        assert_eq!(r1["t"], val(0));
    }

    #[test]
    fn vend_below_threshold_is_silent_and_preserves_registers() {
        let m = vending_machine();
        let mut regs = initial_register_file(&m);
        regs.insert("r1".into(), Value::sym("tea"));
        regs.insert("r2".into(), val(50));
        let (y, s1, r1) = sul_step(&m, "s1", &regs, &ConcreteInput::plain("vend"), true).unwrap();
        assert_eq!(y, ConcreteOutput::Silent);
        assert_eq!(s1, "s1");
        assert_eq!(r1, regs);
    }

    #[test]
    fn refused_input_changes_nothing() {
        let m = vending_machine();
        let regs = initial_register_file(&m);
        let x = ConcreteInput::new("coin", vec![val(100)]);
        let (y, s1, r1) = sul_step(&m, "s0", &regs, &x, true).unwrap();
        assert_eq!(y, ConcreteOutput::Refused);
        assert_eq!(s1, "s0");
        assert_eq!(r1, regs);
    }

    #[test]
    fn replay_of_the_six_event_example_trace() {
        let m = vending_machine();
        let mut sul = SulMachine::new(m);
        let script: Vec<(ConcreteInput, ConcreteOutput)> = vec![
            (
                ConcreteInput::new("select", vec![Value::sym("tea")]),
                ConcreteOutput::event("Pay", vec![val(0)]),
            ),
            (
                ConcreteInput::new("coin", vec![val(50)]),
                ConcreteOutput::event("Display", vec![val(50)]),
            ),
            (ConcreteInput::plain("vend"), ConcreteOutput::Silent),
            (
                ConcreteInput::new("coin", vec![val(50)]),
                ConcreteOutput::event("Display", vec![val(100)]),
            ),
            (
                ConcreteInput::new("coin", vec![val(50)]),
                ConcreteOutput::event("Display", vec![val(150)]),
            ),
            (
                ConcreteInput::plain("vend"),
                ConcreteOutput::event("Serve", vec![Value::sym("tea")]),
            ),
        ];
        for (x, expected) in script {
            let y = sul.step(&x).unwrap();
            assert_eq!(y, expected, "on input {x}");
        }
        assert_eq!(sul.state(), "s0");
    }

    #[test]
    fn vending_machine_validates_cleanly() {
        let m = vending_machine();
        let probe = vec![
            ConcreteInput::new("select", vec![Value::sym("coffee")]),
            ConcreteInput::new("select", vec![Value::sym("tea")]),
            ConcreteInput::new("coin", vec![val(50)]),
            ConcreteInput::new("coin", vec![val(100)]),
            ConcreteInput::plain("vend"),
        ];
        let report = validate_efsm(&m, &probe);
        assert!(report.ok(), "{report}");
        assert_eq!(
            report.to_string(),
            "OK: deterministic, observable, strongly connected"
        );
    }

    #[test]
    fn deleting_a_guard_breaks_determinism() {
        let mut m = vending_machine();
        for t in &mut m.transitions {
            if matches!(t.output, OutputSpec::Silent) {
                t.guard = None;
            }
        }
        let report = validate_efsm(&m, &[]);
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::Determinism));
    }

    #[test]
    fn blowup_machine_validates_cleanly() {
        let m = blowup_machine();
        let probe = vec![
            ConcreteInput::new("a", vec![val(0)]),
            ConcreteInput::new("a", vec![val(1)]),
            ConcreteInput::new("b", vec![val(0)]),
            ConcreteInput::new("b", vec![val(1)]),
        ];
        let report = validate_efsm(&m, &probe);
        assert!(report.ok(), "{report}");
    }

    #[test]
    fn non_self_loop_silent_transition_is_flagged() {
        let mut m = vending_machine();
        for t in &mut m.transitions {
            if matches!(t.output, OutputSpec::Silent) {
                t.target = "s0".into();
            }
        }
        let report = validate_efsm(&m, &[]);
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::SilentLoop
                && v.message.contains("must not change state")));
    }

    #[test]
    fn nondeterminism_at_runtime_is_an_error() {
        let mut m = vending_machine();
        for t in &mut m.transitions {
            if matches!(t.output, OutputSpec::Silent) {
                t.guard = None;
            }
        }
        let mut regs = initial_register_file(&m);
        regs.insert("r1".into(), Value::sym("tea"));
        regs.insert("r2".into(), val(150));
        let r = sul_step(&m, "s1", &regs, &ConcreteInput::plain("vend"), true);
        assert!(matches!(r, Err(SulError::Nondeterminism { .. })));
    }

    #[test]
    fn domain_and_arity_are_enforced() {
        let m = vending_machine();
        let regs = initial_register_file(&m);
        let bad = ConcreteInput::new("select", vec![Value::sym("cocoa")]);
        assert!(matches!(
            sul_step(&m, "s0", &regs, &bad, true),
            Err(SulError::DomainViolation { .. })
        ));
        let bad2 = ConcreteInput::plain("select");
        assert!(matches!(
            sul_step(&m, "s0", &regs, &bad2, true),
            Err(SulError::Arity { .. })
        ));
    }
}
