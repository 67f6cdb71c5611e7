//! Bounded path planning over the learned transition structure.
//!
//! A plan is a sequence of inputs whose outcomes the learner can predict,
//! followed by one probe input applied at the goal position. A step is
//! predictable when a recorded sample pins its output for the planned
//! guard-register configuration, or — optimistically — when only one
//! abstract output has ever been observed for the (state, input) pair. In
//! the optimistic case the concrete output values are unknown, so registers
//! fed by that output become unknown in the planned configuration and
//! cannot be relied on further down the path.

use std::collections::{BTreeSet, VecDeque};

use crate::abstraction::{Interface, RegisterConfig};
use crate::control::{DeltaMap, LambdaMap, StateId};
use crate::efsm::{AbstractOut, ConcreteInput, ConcreteOutput};
use crate::value::Value;

/// One planned step: the input to apply and the output expected for it.
/// `exact` carries the concrete output when a recorded sample pins it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannedStep {
    pub x: ConcreteInput,
    pub expect: AbstractOut,
    pub exact: Option<ConcreteOutput>,
}

/// A path to a goal position plus the probe input to apply there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    pub steps: Vec<PlannedStep>,
    pub probe: ConcreteInput,
}

impl Plan {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Hard cap on explored positions, guarding against configuration blow-up.
const VISIT_CAP: usize = 100_000;

/// Predict the outcome of applying `x` at `(q, rc)`, if it is predictable.
fn predict(
    iface: &Interface,
    delta: &DeltaMap,
    lambda: &LambdaMap,
    q: StateId,
    rc: &RegisterConfig,
    x: &ConcreteInput,
    pinned_only: bool,
) -> Option<(PlannedStep, StateId, RegisterConfig)> {
    if let Some((y_abs, row)) = lambda.determined_output(q, x, rc) {
        if *y_abs == AbstractOut::Refused {
            return None; // refusals never move the position
        }
        let target = delta.get(q, &x.name, y_abs)?;
        let next = iface.rho_step(rc, x, &row.y);
        let step = PlannedStep {
            x: x.clone(),
            expect: y_abs.clone(),
            exact: Some(row.y.clone()),
        };
        return Some((step, target, next));
    }
    if pinned_only {
        return None;
    }
    let outs = delta.outputs_for(q, &x.name);
    if outs.len() != 1 {
        // Never observed, or a guard split without a pinning sample.
        return None;
    }
    let (y_abs, target) = outs.into_iter().next().unwrap();
    match &y_abs {
        AbstractOut::Refused => None,
        AbstractOut::Silent => {
            let next = iface.rho_step(rc, x, &ConcreteOutput::Silent);
            let step = PlannedStep {
                x: x.clone(),
                expect: AbstractOut::Silent,
                exact: Some(ConcreteOutput::Silent),
            };
            Some((step, target, next))
        }
        AbstractOut::Event(name) => {
            // The output values are unknown at plan time: registers the
            // output feeds become unknown, registers fed by the input take
            // the input's values.
            let mut next = rc.clone();
            if let Some(sig) = iface.input_signature(&x.name) {
                for (i, (p, _)) in sig.params.iter().enumerate() {
                    if let Some(v) = x.args.get(i) {
                        next.set(p, v.clone());
                    }
                }
            }
            if let Some(sig) = iface.output_signature(name) {
                for (p, _) in &sig.params {
                    next.set(p, Value::Bottom);
                }
            }
            let step = PlannedStep {
                x: x.clone(),
                expect: y_abs.clone(),
                exact: None,
            };
            Some((step, target, next))
        }
    }
}

/// Breadth-first search from `from` for a position where `goal` yields a
/// probe input. Steps along the way must be predictable (see module doc);
/// with `pinned_only` set, only sample-pinned steps are taken. Returns the
/// shortest plan; among equal length, the one whose input sequence comes
/// first in `inventory` order.
pub fn plan_path<F>(
    iface: &Interface,
    delta: &DeltaMap,
    lambda: &LambdaMap,
    inventory: &[ConcreteInput],
    from: (StateId, RegisterConfig),
    goal: &F,
    bound: usize,
    pinned_only: bool,
) -> Option<Plan>
where
    F: Fn(StateId, &RegisterConfig) -> Option<ConcreteInput>,
{
    let mut visited: BTreeSet<(StateId, RegisterConfig)> = BTreeSet::new();
    let mut queue: VecDeque<(StateId, RegisterConfig, Vec<PlannedStep>)> = VecDeque::new();
    visited.insert((from.0, from.1.clone()));
    queue.push_back((from.0, from.1, Vec::new()));
    while let Some((q, rc, steps)) = queue.pop_front() {
        if let Some(probe) = goal(q, &rc) {
            return Some(Plan { steps, probe });
        }
        if steps.len() >= bound || visited.len() >= VISIT_CAP {
            continue;
        }
        for x in inventory {
            let Some((step, target, next)) = predict(iface, delta, lambda, q, &rc, x, pinned_only)
            else {
                continue;
            };
            if visited.insert((target, next.clone())) {
                let mut longer = steps.clone();
                longer.push(step);
                queue.push_back((target, next, longer));
            }
        }
    }
    None
}

/// Sort a concrete-input inventory by event name, then argument values, and
/// drop duplicates — the expansion order behind deterministic plans.
pub fn sorted_inventory(inputs: &[ConcreteInput]) -> Vec<ConcreteInput> {
    let mut out: Vec<ConcreteInput> = inputs.to_vec();
    out.sort();
    out.dedup();
    out
}
