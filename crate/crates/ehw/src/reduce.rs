//! Merging states that differ only through their register values.
//!
//! The backbone distinguishes positions by characterization *and* by the
//! tracked-register slice, so one control location of the hidden machine
//! can surface as many nodes — one per register valuation it was first
//! reached with. Reduction folds those back together: states are kept
//! apart only when the evidence forces it, and everything else merges.
//!
//! Three observations force a split:
//! - equal tracked registers but different characterizations — the
//!   responses differ with no register to blame;
//! - contradictory samples — the merged state would answer the same input
//!   under the same guard-register values with different outputs;
//! - diverging successors — the same abstract transition leads the two
//!   states into blocks already known to be apart.
//!
//! Splitting is not an equivalence: a state can be compatible with two
//! states that are incompatible with each other. Members are therefore
//! colored greedily in state order — each goes to the first sub-block it
//! conflicts with nobody in — which keeps the result deterministic.

use std::collections::BTreeSet;

use crate::abstraction::RegisterConfig;
use crate::control::{DeltaMap, LambdaMap, LambdaRow, StateId, StateTable};
use crate::efsm::{AbstractOut, ConcreteInput, ConcreteOutput};

/// The merged machine: blocks of original states, transitions and sample
/// rows lifted to block level.
#[derive(Debug, Clone)]
pub struct ReducedMachine {
    pub blocks: Vec<BTreeSet<StateId>>,
    /// Transitions between blocks, keyed by input name and abstract output.
    pub delta: std::collections::BTreeMap<(usize, String, AbstractOut), usize>,
    /// The union of the members' sample rows, per block-level branch.
    pub rows: std::collections::BTreeMap<(usize, String, AbstractOut), Vec<LambdaRow>>,
}

impl ReducedMachine {
    pub fn block_of(&self, q: StateId) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(&q))
    }

    pub fn state_count(&self) -> usize {
        self.blocks.len()
    }
}

/// Per-state view of the evidence used by the conflict checks.
struct StateView {
    charac: std::collections::BTreeMap<usize, Vec<AbstractOut>>,
    rw: RegisterConfig,
    /// Guard-register slice and concrete input of every sample, with the
    /// output it produced.
    samples: Vec<(RegisterConfig, ConcreteInput, ConcreteOutput)>,
    edges: Vec<(String, AbstractOut, StateId)>,
}

fn direct_conflict(p: &StateView, q: &StateView) -> bool {
    if p.rw == q.rw && p.charac != q.charac {
        return true;
    }
    for (r, x, y) in &p.samples {
        for (r2, x2, y2) in &q.samples {
            if r == r2 && x == x2 && y != y2 {
                return true;
            }
        }
    }
    false
}

fn successor_conflict(
    p: &StateView,
    q: &StateView,
    block: &std::collections::BTreeMap<StateId, usize>,
) -> bool {
    for (input, out, t1) in &p.edges {
        for (input2, out2, t2) in &q.edges {
            if input == input2 && out == out2 && block[t1] != block[t2] {
                return true;
            }
        }
    }
    false
}

/// Partition the given states into as few blocks as the evidence allows.
pub fn reduce_fsm(
    table: &StateTable,
    delta: &DeltaMap,
    lambda: &LambdaMap,
    states: &BTreeSet<StateId>,
) -> ReducedMachine {
    let rg = lambda.rg().to_vec();
    let views: std::collections::BTreeMap<StateId, StateView> = states
        .iter()
        .map(|&q| {
            let node = table.node(q);
            let samples = lambda
                .entries()
                .filter(|((s, _, _), _)| *s == q)
                .flat_map(|(_, rows)| rows.iter())
                .map(|row| (row.r.restrict(&rg), row.x.clone(), row.y.clone()))
                .collect();
            let edges = delta
                .entries()
                .filter(|((s, _, _), t)| *s == q && states.contains(t))
                .map(|((_, input, out), t)| (input.clone(), out.clone(), *t))
                .collect();
            (
                q,
                StateView {
                    charac: node.charac.clone(),
                    rw: node.rw.clone(),
                    samples,
                    edges,
                },
            )
        })
        .collect();

    // One block to start with; refine until stable.
    let mut partition: Vec<Vec<StateId>> = vec![states.iter().copied().collect()];
    loop {
        let block: std::collections::BTreeMap<StateId, usize> = partition
            .iter()
            .enumerate()
            .flat_map(|(i, b)| b.iter().map(move |&q| (q, i)))
            .collect();
        let mut next: Vec<Vec<StateId>> = Vec::new();
        let mut changed = false;
        for old in &partition {
            let mut subs: Vec<Vec<StateId>> = Vec::new();
            for &q in old {
                let fits = subs.iter().position(|sub| {
                    sub.iter().all(|&p| {
                        !direct_conflict(&views[&p], &views[&q])
                            && !successor_conflict(&views[&p], &views[&q], &block)
                    })
                });
                match fits {
                    Some(i) => subs[i].push(q),
                    None => subs.push(vec![q]),
                }
            }
            if subs.len() > 1 {
                changed = true;
            }
            next.extend(subs);
        }
        partition = next;
        if !changed {
            break;
        }
    }

    let blocks: Vec<BTreeSet<StateId>> = partition
        .into_iter()
        .map(|b| b.into_iter().collect())
        .collect();
    let block_of: std::collections::BTreeMap<StateId, usize> = blocks
        .iter()
        .enumerate()
        .flat_map(|(i, b)| b.iter().map(move |&q| (q, i)))
        .collect();

    let mut r_delta = std::collections::BTreeMap::new();
    let mut r_rows: std::collections::BTreeMap<(usize, String, AbstractOut), Vec<LambdaRow>> =
        std::collections::BTreeMap::new();
    for ((q, input, out), target) in delta.entries() {
        if !states.contains(q) || !states.contains(target) {
            continue;
        }
        let key = (block_of[q], input.clone(), out.clone());
        let mapped = block_of[target];
        debug_assert!(
            r_delta.get(&key).is_none_or(|&t| t == mapped),
            "merged states disagree on a successor block"
        );
        r_delta.insert(key, mapped);
    }
    for ((q, input, out), rows) in lambda.entries() {
        if !states.contains(q) {
            continue;
        }
        r_rows
            .entry((block_of[q], input.clone(), out.clone()))
            .or_default()
            .extend(rows.iter().cloned());
    }

    ReducedMachine {
        blocks,
        delta: r_delta,
        rows: r_rows,
    }
}
