//! What the learner is allowed to see: abstraction of concrete events down
//! to event names, last-value register tracking over parameter names, and
//! the append-only trace of everything exchanged with the system under
//! learning.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::efsm::{AbstractOut, ConcreteInput, ConcreteOutput, Efsm, EventSignature};
use crate::value::Value;

/// The externally visible alphabet of a system: input and output event
/// signatures. This is all the learner knows about the interface.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interface {
    pub inputs: Vec<EventSignature>,
    pub outputs: Vec<EventSignature>,
}

impl Interface {
    pub fn of(machine: &Efsm) -> Interface {
        Interface {
            inputs: machine.inputs.clone(),
            outputs: machine.outputs.clone(),
        }
    }

    pub fn input_signature(&self, name: &str) -> Option<&EventSignature> {
        self.inputs.iter().find(|s| s.name == name)
    }

    pub fn output_signature(&self, name: &str) -> Option<&EventSignature> {
        self.outputs.iter().find(|s| s.name == name)
    }

    /// Every parameter name, in first-appearance order over inputs then
    /// outputs, without duplicates. These names are the learner's registers.
    pub fn parameter_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for sig in self.inputs.iter().chain(&self.outputs) {
            for (p, _) in &sig.params {
                if !names.iter().any(|n| n == p) {
                    names.push(p.clone());
                }
            }
        }
        names
    }

    /// Track one exchanged event pair: the input's parameters take the sent
    /// values, and — unless the input was refused — the output's parameters
    /// take the produced values. A refused input leaves the configuration
    /// untouched.
    pub fn rho_step(
        &self,
        r: &RegisterConfig,
        input: &ConcreteInput,
        output: &ConcreteOutput,
    ) -> RegisterConfig {
        let mut next = r.clone();
        if matches!(output, ConcreteOutput::Refused) {
            return next;
        }
        if let Some(sig) = self.input_signature(&input.name) {
            for ((pname, _), value) in sig.params.iter().zip(&input.args) {
                next.set(pname, value.clone());
            }
        }
        if let ConcreteOutput::Event { name, args } = output {
            if let Some(sig) = self.output_signature(name) {
                for ((pname, _), value) in sig.params.iter().zip(args) {
                    next.set(pname, value.clone());
                }
            }
        }
        next
    }

    /// Fold `rho_step` over an i/o sequence.
    pub fn rho(
        &self,
        r: &RegisterConfig,
        steps: &[(ConcreteInput, ConcreteOutput)],
    ) -> RegisterConfig {
        let mut cur = r.clone();
        for (x, y) in steps {
            cur = self.rho_step(&cur, x, y);
        }
        cur
    }
}

/// A register configuration: one value (possibly unassigned) per parameter
/// name. Ordered so it can key maps directly.
#[derive(
    Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub struct RegisterConfig {
    map: BTreeMap<String, Value>,
}

impl RegisterConfig {
    /// All-unassigned configuration over the given register names.
    pub fn bottom<I, S>(names: I) -> RegisterConfig
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        RegisterConfig {
            map: names
                .into_iter()
                .map(|n| (n.into(), Value::Bottom))
                .collect(),
        }
    }

    pub fn get(&self, name: &str) -> &Value {
        self.map.get(name).unwrap_or(&Value::Bottom)
    }

    pub fn set(&mut self, name: &str, value: Value) {
        if let Some(slot) = self.map.get_mut(name) {
            *slot = value;
        }
    }

    /// Keep only the named registers (projection; unknown names are ignored,
    /// never invented).
    pub fn restrict(&self, names: &[String]) -> RegisterConfig {
        RegisterConfig {
            map: self
                .map
                .iter()
                .filter(|(k, _)| names.iter().any(|n| n == *k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    /// True when none of the named registers is unassigned.
    pub fn is_total_on(&self, names: &[String]) -> bool {
        names.iter().all(|n| !self.get(n).is_bottom())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Value)> {
        self.map.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.map.keys()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

impl fmt::Display for RegisterConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (k, v)) in self.map.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        write!(f, "}}")
    }
}

/// One letter of the sampled machine's alphabet paired with the abstract
/// output it produced, e.g. `select(coffee)/Pay` or `vend()/omega`. The
/// input keeps its values: two inputs of the same event with different
/// parameters are different letters and may lead to different states.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AbstractStep {
    pub input: ConcreteInput,
    pub output: AbstractOut,
}

impl fmt::Display for AbstractStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.input, self.output)
    }
}

/// Strip the output values from an i/o sequence.
pub fn abstract_steps(steps: &[(ConcreteInput, ConcreteOutput)]) -> Vec<AbstractStep> {
    steps
        .iter()
        .map(|(x, y)| AbstractStep {
            input: x.clone(),
            output: y.abstracted(),
        })
        .collect()
}

/// One recorded exchange, with the tracked configuration after it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub input: ConcreteInput,
    pub output: ConcreteOutput,
    pub config: RegisterConfig,
}

/// The single unbroken record of everything sent to and received from the
/// system under learning. Steps are numbered from 1 and never removed.
#[derive(Debug, Clone)]
pub struct Trace {
    interface: Interface,
    initial: RegisterConfig,
    steps: Vec<TraceStep>,
}

impl Trace {
    pub fn new(interface: Interface) -> Trace {
        let initial = RegisterConfig::bottom(interface.parameter_names());
        Trace {
            interface,
            initial,
            steps: Vec::new(),
        }
    }

    pub fn interface(&self) -> &Interface {
        &self.interface
    }

    /// Append one exchange; returns its 1-based step number.
    pub fn push(&mut self, input: ConcreteInput, output: ConcreteOutput) -> usize {
        let prev = self.current_config().clone();
        let config = self.interface.rho_step(&prev, &input, &output);
        self.steps.push(TraceStep {
            input,
            output,
            config,
        });
        self.steps.len()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[TraceStep] {
        &self.steps
    }

    /// 0-based access.
    pub fn step(&self, index: usize) -> &TraceStep {
        &self.steps[index]
    }

    pub fn initial_config(&self) -> &RegisterConfig {
        &self.initial
    }

    /// Configuration after the most recent step (initial if none).
    pub fn current_config(&self) -> &RegisterConfig {
        self.steps
            .last()
            .map(|s| &s.config)
            .unwrap_or(&self.initial)
    }

    /// Configuration in force before the (0-based) step ran.
    pub fn config_before(&self, index: usize) -> &RegisterConfig {
        if index == 0 {
            &self.initial
        } else {
            &self.steps[index - 1].config
        }
    }

    /// Abstract outputs of the last `n` steps (shorter if the trace is).
    pub fn abstract_tail(&self, n: usize) -> Vec<AbstractOut> {
        let start = self.steps.len().saturating_sub(n);
        self.steps[start..]
            .iter()
            .map(|s| s.output.abstracted())
            .collect()
    }

    /// Line-delimited export: step number, input, output, and the
    /// configuration after the step projected onto `rg`.
    pub fn render_log(&self, rg: &[String]) -> String {
        let mut out = String::new();
        for (i, s) in self.steps.iter().enumerate() {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                i + 1,
                s.input,
                s.output,
                s.config.restrict(rg)
            ));
        }
        out
    }
}
