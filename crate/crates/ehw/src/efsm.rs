//! The extended finite state machine model: events, transitions, machines,
//! and the concrete/abstract event types exchanged with a running machine.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::expr::Expr;
use crate::value::{Domain, Value};

/// An input or output event type: a name plus its parameter signature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventSignature {
    pub name: String,
    /// Ordered (parameter name, domain) pairs. Parameter names key the
    /// shared register space, so reusing a name across events deliberately
    /// aliases their registers.
    pub params: Vec<(String, Domain)>,
}

impl EventSignature {
    pub fn new(name: &str, params: Vec<(&str, Domain)>) -> EventSignature {
        EventSignature {
            name: name.to_string(),
            params: params
                .into_iter()
                .map(|(n, d)| (n.to_string(), d))
                .collect(),
        }
    }

    pub fn param_names(&self) -> impl Iterator<Item = &str> {
        self.params.iter().map(|(n, _)| n.as_str())
    }
}

/// What a transition emits: a concrete output event built from expressions,
/// or the silent output (accepted but invisible).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputSpec {
    Event { name: String, args: Vec<Expr> },
    Silent,
}

/// One transition of an EFSM.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub source: String,
    /// Abstract input event name.
    pub input: String,
    /// `None` means always enabled.
    pub guard: Option<Expr>,
    pub output: OutputSpec,
    /// Register assignments applied on firing, all evaluated on the
    /// pre-transition register file.
    pub updates: Vec<(String, Expr)>,
    pub target: String,
}

/// A complete machine definition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Efsm {
    pub inputs: Vec<EventSignature>,
    pub outputs: Vec<EventSignature>,
    /// Declared registers with their domains.
    pub registers: Vec<(String, Domain)>,
    pub states: Vec<String>,
    pub initial_state: String,
    /// Registers assigned before the first input; everything else starts
    /// unassigned.
    pub initial_registers: BTreeMap<String, Value>,
    pub transitions: Vec<Transition>,
}

impl Efsm {
    pub fn input_signature(&self, name: &str) -> Option<&EventSignature> {
        self.inputs.iter().find(|s| s.name == name)
    }

    pub fn output_signature(&self, name: &str) -> Option<&EventSignature> {
        self.outputs.iter().find(|s| s.name == name)
    }

    pub fn transitions_from<'a>(
        &'a self,
        state: &'a str,
        input: &'a str,
    ) -> impl Iterator<Item = &'a Transition> {
        self.transitions
            .iter()
            .filter(move |t| t.source == state && t.input == input)
    }

    /// Every parameter name appearing on any input or output signature, in
    /// first-appearance order. These names form the learner's register space.
    pub fn parameter_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for sig in self.inputs.iter().chain(self.outputs.iter()) {
            for (n, _) in &sig.params {
                if !names.iter().any(|x| x == n) {
                    names.push(n.clone());
                }
            }
        }
        names
    }

    /// Domain of a parameter name, taken from its first declaration.
    pub fn parameter_domain(&self, name: &str) -> Option<&Domain> {
        for sig in self.inputs.iter().chain(self.outputs.iter()) {
            for (n, d) in &sig.params {
                if n == name {
                    return Some(d);
                }
            }
        }
        None
    }
}

/// A concrete input event: abstract name plus parameter values.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConcreteInput {
    pub name: String,
    pub args: Vec<Value>,
}

impl ConcreteInput {
    pub fn new(name: &str, args: Vec<Value>) -> ConcreteInput {
        ConcreteInput {
            name: name.to_string(),
            args,
        }
    }

    pub fn plain(name: &str) -> ConcreteInput {
        ConcreteInput::new(name, Vec::new())
    }
}

impl fmt::Display for ConcreteInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            write!(f, "{}()", self.name)
        } else {
            let args: Vec<String> = self.args.iter().map(|v| v.to_string()).collect();
            write!(f, "{}({})", self.name, args.join(","))
        }
    }
}

/// A concrete output event, or one of the two distinguished responses.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConcreteOutput {
    Event { name: String, args: Vec<Value> },
    /// Accepted but invisible; never changes state.
    Silent,
    /// Input not applicable; state and registers unchanged.
    Refused,
}

impl ConcreteOutput {
    pub fn event(name: &str, args: Vec<Value>) -> ConcreteOutput {
        ConcreteOutput::Event {
            name: name.to_string(),
            args,
        }
    }

    pub fn abstracted(&self) -> AbstractOut {
        match self {
            ConcreteOutput::Event { name, .. } => AbstractOut::Event(name.clone()),
            ConcreteOutput::Silent => AbstractOut::Silent,
            ConcreteOutput::Refused => AbstractOut::Refused,
        }
    }
}

impl fmt::Display for ConcreteOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConcreteOutput::Event { name, args } => {
                if args.is_empty() {
                    write!(f, "{name}")
                } else {
                    let args: Vec<String> = args.iter().map(|v| v.to_string()).collect();
                    write!(f, "{}({})", name, args.join(","))
                }
            }
            ConcreteOutput::Silent => write!(f, "omega"),
            ConcreteOutput::Refused => write!(f, "OMEGA"),
        }
    }
}

/// An abstract output: the event name with parameters erased, or one of the
/// two distinguished responses (which abstract to themselves).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AbstractOut {
    Event(String),
    Silent,
    Refused,
}

impl AbstractOut {
    pub fn is_special(&self) -> bool {
        !matches!(self, AbstractOut::Event(_))
    }
}

impl fmt::Display for AbstractOut {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbstractOut::Event(name) => write!(f, "{name}"),
            AbstractOut::Silent => write!(f, "omega"),
            AbstractOut::Refused => write!(f, "OMEGA"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concrete_event_display() {
        let x = ConcreteInput::new("coin", vec![Value::Int(100)]);
        assert_eq!(x.to_string(), "coin(100)");
        assert_eq!(ConcreteInput::plain("vend").to_string(), "vend()");
        let y = ConcreteOutput::event("Serve", vec![Value::sym("tea")]);
        assert_eq!(y.to_string(), "Serve(tea)");
        assert_eq!(ConcreteOutput::Silent.to_string(), "omega");
        assert_eq!(ConcreteOutput::Refused.to_string(), "OMEGA");
    }

    #[test]
    fn abstraction_strips_parameters() {
        let y = ConcreteOutput::event("Pay", vec![Value::Int(0)]);
        assert_eq!(y.abstracted(), AbstractOut::Event("Pay".into()));
        assert_eq!(ConcreteOutput::Silent.abstracted(), AbstractOut::Silent);
        assert_eq!(ConcreteOutput::Refused.abstracted(), AbstractOut::Refused);
    }

    #[test]
    fn parameter_names_collect_in_order_without_duplicates() {
        let m = Efsm {
            inputs: vec![
                EventSignature::new("select", vec![("i1", Domain::Enum(vec!["tea".into()]))]),
                EventSignature::new("coin", vec![("i2", Domain::Int)]),
                EventSignature::new("vend", vec![]),
            ],
            outputs: vec![
                EventSignature::new("Pay", vec![("t", Domain::Int)]),
                EventSignature::new("Display", vec![("t", Domain::Int)]),
                EventSignature::new("Serve", vec![("b", Domain::Enum(vec!["tea".into()]))]),
            ],
            registers: vec![],
            states: vec!["s0".into()],
            initial_state: "s0".into(),
            initial_registers: BTreeMap::new(),
            transitions: vec![],
        };
        assert_eq!(m.parameter_names(), vec!["i1", "i2", "t", "b"]);
    }
}
