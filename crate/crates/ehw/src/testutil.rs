//! Machines shared by the unit tests: the drinks dispenser used throughout
//! the documentation and a four-state machine whose guards force the
//! abstraction to split states aggressively.

use crate::efsm::{Efsm, EventSignature, OutputSpec, Transition};
use crate::expr::{CmpOp, Expr};
use crate::value::{Domain, Value};

fn drink_domain() -> Domain {
    Domain::Enum(vec!["tea".to_string(), "coffee".to_string()])
}

/// The two-state drinks dispenser: `select` resets the credit, `coin`
/// accumulates it, `vend` serves once the credit reaches 100.
pub(crate) fn vending_machine() -> Efsm {
    let tr = |source: &str,
              input: &str,
              guard: Option<Expr>,
              output: OutputSpec,
              updates: Vec<(&str, Expr)>,
              target: &str| Transition {
        source: source.to_string(),
        input: input.to_string(),
        guard,
        output,
        updates: updates
            .into_iter()
            .map(|(r, e)| (r.to_string(), e))
            .collect(),
        target: target.to_string(),
    };
    Efsm {
        inputs: vec![
            EventSignature::new("select", vec![("i1", drink_domain())]),
            EventSignature::new("coin", vec![("i2", Domain::Int)]),
            EventSignature::new("vend", vec![]),
        ],
        outputs: vec![
            EventSignature::new("Pay", vec![("t", Domain::Int)]),
            EventSignature::new("Display", vec![("t", Domain::Int)]),
            EventSignature::new("Serve", vec![("b", drink_domain())]),
        ],
        registers: vec![
            ("r1".to_string(), drink_domain()),
            ("r2".to_string(), Domain::Int),
        ],
        states: vec!["s0".to_string(), "s1".to_string()],
        initial_state: "s0".to_string(),
        initial_registers: Default::default(),
        transitions: vec![
            tr(
                "s0",
                "select",
                None,
                OutputSpec::Event {
                    name: "Pay".into(),
                    args: vec![Expr::Int(0)],
                },
                vec![("r1", Expr::param("i1")), ("r2", Expr::Int(0))],
                "s1",
            ),
            tr(
                "s1",
                "coin",
                None,
                OutputSpec::Event {
                    name: "Display".into(),
                    args: vec![Expr::add(Expr::reg("r2"), Expr::param("i2"))],
                },
                vec![("r2", Expr::add(Expr::reg("r2"), Expr::param("i2")))],
                "s1",
            ),
            tr(
                "s1",
                "vend",
                Some(Expr::cmp(CmpOp::Lt, Expr::reg("r2"), Expr::Int(100))),
                OutputSpec::Silent,
                vec![],
                "s1",
            ),
            tr(
                "s1",
                "vend",
                Some(Expr::cmp(CmpOp::Ge, Expr::reg("r2"), Expr::Int(100))),
                OutputSpec::Event {
                    name: "Serve".into(),
                    args: vec![Expr::reg("r1")],
                },
                vec![],
                "s0",
            ),
        ],
    }
}

/// A four-state machine over inputs `a(ia)` / `b(ib)` whose guards compare
/// the two remembered parameters against each other, so distinguishing its
/// states requires tracking register configurations.
pub(crate) fn blowup_machine() -> Efsm {
    let tr = |source: &str,
              input: &str,
              guard: Option<Expr>,
              output: OutputSpec,
              updates: Vec<(&str, Expr)>,
              target: &str| Transition {
        source: source.to_string(),
        input: input.to_string(),
        guard,
        output,
        updates: updates
            .into_iter()
            .map(|(r, e)| (r.to_string(), e))
            .collect(),
        target: target.to_string(),
    };
    let out_a = |e: Expr| OutputSpec::Event {
        name: "A".into(),
        args: vec![e],
    };
    let out_b = || OutputSpec::Event {
        name: "B".into(),
        args: vec![],
    };
    let mut initial_registers = std::collections::BTreeMap::new();
    initial_registers.insert("ra".to_string(), Value::Int(0));
    initial_registers.insert("rb".to_string(), Value::Int(0));
    Efsm {
        inputs: vec![
            EventSignature::new("a", vec![("ia", Domain::Int)]),
            EventSignature::new("b", vec![("ib", Domain::Int)]),
        ],
        outputs: vec![
            EventSignature::new("A", vec![("x", Domain::Int)]),
            EventSignature::new("B", vec![]),
        ],
        registers: vec![
            ("ra".to_string(), Domain::Int),
            ("rb".to_string(), Domain::Int),
        ],
        states: vec![
            "s0".to_string(),
            "s1".to_string(),
            "s2".to_string(),
            "s3".to_string(),
        ],
        initial_state: "s0".to_string(),
        initial_registers,
        transitions: vec![
            tr(
                "s0",
                "a",
                None,
                out_a(Expr::add(Expr::param("ia"), Expr::reg("rb"))),
                vec![("ra", Expr::param("ia"))],
                "s1",
            ),
            tr(
                "s0",
                "b",
                None,
                out_b(),
                vec![("rb", Expr::param("ib"))],
                "s2",
            ),
            tr(
                "s1",
                "a",
                Some(Expr::cmp(CmpOp::Ge, Expr::reg("ra"), Expr::reg("rb"))),
                out_b(),
                vec![("ra", Expr::param("ia"))],
                "s2",
            ),
            tr(
                "s1",
                "a",
                Some(Expr::cmp(CmpOp::Lt, Expr::reg("ra"), Expr::reg("rb"))),
                out_a(Expr::mul(Expr::param("ia"), Expr::reg("rb"))),
                vec![("ra", Expr::param("ia"))],
                "s3",
            ),
            tr(
                "s1",
                "b",
                None,
                out_b(),
                vec![("rb", Expr::param("ib"))],
                "s0",
            ),
            tr(
                "s2",
                "a",
                None,
                out_b(),
                vec![("ra", Expr::param("ia"))],
                "s1",
            ),
            tr(
                "s2",
                "b",
                None,
                out_a(Expr::param("ib")),
                vec![("rb", Expr::param("ib"))],
                "s0",
            ),
            tr(
                "s3",
                "a",
                None,
                out_a(Expr::mul(Expr::param("ia"), Expr::reg("rb"))),
                vec![("ra", Expr::param("ia"))],
                "s0",
            ),
            tr(
                "s3",
                "b",
                Some(Expr::cmp(CmpOp::Ge, Expr::param("ib"), Expr::reg("ra"))),
                out_a(Expr::param("ib")),
                vec![("rb", Expr::param("ib"))],
                "s2",
            ),
            tr(
                "s3",
                "b",
                Some(Expr::cmp(CmpOp::Lt, Expr::param("ib"), Expr::reg("ra"))),
                out_b(),
                vec![("rb", Expr::param("ib"))],
                "s3",
            ),
        ],
    }
}
