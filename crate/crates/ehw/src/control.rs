//! The learner's mutable knowledge about the system: nondeterministic
//! control states identified by their characterization responses plus a
//! slice of tracked registers, the abstract transition map Δ, the concrete
//! sample store Λ, the homing dictionary, and the access table that lets
//! the learner find its way back to configurations it has seen.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::abstraction::{AbstractStep, Interface, RegisterConfig};
use crate::efsm::{AbstractOut, ConcreteInput, ConcreteOutput};

pub type StateId = usize;

/// Characterization data of one node: responses to the characterization
/// sequences (indexed into W) and the tracked-register slice the node was
/// identified with. A node is fully defined once it has a response for
/// every sequence.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct NodeData {
    pub charac: BTreeMap<usize, Vec<AbstractOut>>,
    pub rw: RegisterConfig,
}

impl NodeData {
    fn key(&self) -> (Vec<(usize, Vec<AbstractOut>)>, RegisterConfig) {
        (
            self.charac.iter().map(|(k, v)| (*k, v.clone())).collect(),
            self.rw.clone(),
        )
    }
}

/// All nodes ever created, with interning of the fully defined ones so an
/// equal (characterization, register-slice) pair is always one node.
#[derive(Debug, Clone, Default)]
pub struct StateTable {
    nodes: Vec<NodeData>,
    canon: BTreeMap<(Vec<(usize, Vec<AbstractOut>)>, RegisterConfig), StateId>,
    w_len: usize,
}

impl StateTable {
    pub fn new(w_len: usize) -> StateTable {
        StateTable {
            nodes: Vec::new(),
            canon: BTreeMap::new(),
            w_len,
        }
    }

    pub fn w_len(&self) -> usize {
        self.w_len
    }

    pub fn node(&self, id: StateId) -> &NodeData {
        &self.nodes[id]
    }

    pub fn new_node(&mut self) -> StateId {
        self.nodes.push(NodeData::default());
        self.nodes.len() - 1
    }

    pub fn set_charac(&mut self, id: StateId, w_index: usize, response: Vec<AbstractOut>) {
        self.nodes[id].charac.insert(w_index, response);
    }

    pub fn set_rw(&mut self, id: StateId, rw: RegisterConfig) {
        self.nodes[id].rw = rw;
    }

    pub fn is_complete(&self, id: StateId) -> bool {
        self.nodes[id].charac.len() == self.w_len
    }

    /// Missing characterization index of a node, smallest first.
    pub fn missing_w(&self, id: StateId) -> Option<usize> {
        (0..self.w_len).find(|i| !self.nodes[id].charac.contains_key(i))
    }

    /// Intern a fully defined node: if an equal canonical node exists the
    /// caller must redirect to it; otherwise this node becomes canonical.
    pub fn intern(&mut self, id: StateId) -> StateId {
        debug_assert!(self.is_complete(id));
        let key = self.nodes[id].key();
        *self.canon.entry(key).or_insert(id)
    }

    /// Canonical node for a complete characterization and register slice,
    /// creating it if new.
    pub fn canonical(
        &mut self,
        charac: BTreeMap<usize, Vec<AbstractOut>>,
        rw: RegisterConfig,
    ) -> (StateId, bool) {
        let data = NodeData { charac, rw };
        debug_assert_eq!(data.charac.len(), self.w_len);
        if let Some(&id) = self.canon.get(&data.key()) {
            return (id, false);
        }
        self.nodes.push(data);
        let id = self.nodes.len() - 1;
        self.canon.insert(self.nodes[id].key(), id);
        (id, true)
    }

    /// The canonical (identified) states, ascending.
    pub fn states(&self) -> Vec<StateId> {
        let mut ids: Vec<StateId> = self.canon.values().copied().collect();
        ids.sort_unstable();
        ids
    }

    pub fn state_count(&self) -> usize {
        self.canon.len()
    }
}

/// The abstract transition map: (state, input letter, abstract output) →
/// target node. The letter is the full concrete input — values included —
/// because the same event with different parameters can land in different
/// nodes. Keying on the output keeps it observable by construction.
#[derive(Debug, Clone, Default)]
pub struct DeltaMap {
    map: BTreeMap<(StateId, ConcreteInput, AbstractOut), StateId>,
}

impl DeltaMap {
    pub fn get(&self, q: StateId, input: &ConcreteInput, out: &AbstractOut) -> Option<StateId> {
        self.map.get(&(q, input.clone(), out.clone())).copied()
    }

    pub fn set(&mut self, q: StateId, input: &ConcreteInput, out: AbstractOut, target: StateId) {
        self.map.insert((q, input.clone(), out), target);
    }

    /// All recorded outputs (with targets) for a state and input letter.
    pub fn outputs_for(&self, q: StateId, input: &ConcreteInput) -> Vec<(AbstractOut, StateId)> {
        // Event(\"\") is the least abstract output, so this range starts at
        // the first entry for (q, input).
        self.map
            .range((q, input.clone(), AbstractOut::Event(String::new()))..)
            .take_while(|((s, i, _), _)| *s == q && i == input)
            .map(|((_, _, o), t)| (o.clone(), *t))
            .collect()
    }

    /// Every recorded entry, ascending.
    pub fn entries(
        &self,
    ) -> impl Iterator<Item = (&(StateId, ConcreteInput, AbstractOut), &StateId)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Stepwise lookup of an abstract i/o sequence; undefined as soon as an
/// entry is missing.
pub fn delta_star(delta: &DeltaMap, q: StateId, steps: &[AbstractStep]) -> Option<StateId> {
    let mut cur = q;
    for s in steps {
        cur = delta.get(cur, &s.input, &s.output)?;
    }
    Some(cur)
}

/// Position tracking across steps the learner has just executed: like
/// `delta_star`, but a refused or silent step that is not yet recorded
/// keeps the position (neither can move the system), while a missing
/// producing step loses it.
pub fn track_position(delta: &DeltaMap, q: StateId, steps: &[AbstractStep]) -> Option<StateId> {
    let mut cur = q;
    for s in steps {
        match delta.get(cur, &s.input, &s.output) {
            Some(next) => cur = next,
            None if s.output.is_special() => {}
            None => return None,
        }
    }
    Some(cur)
}

/// One concrete observation attached to an abstract transition: registers
/// before, the concrete exchange, registers after, and where in the trace
/// it happened.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LambdaRow {
    pub r: RegisterConfig,
    pub x: ConcreteInput,
    pub y: ConcreteOutput,
    pub r1: RegisterConfig,
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Inconsistency {
    #[error(
        "characterization conflict after homing response `{eta}`: sequence {w} answered `{new}` \
         at step {new_step} but `{old}` at step {old_step}; the configured h/W cannot identify \
         this system"
    )]
    Homing {
        eta: String,
        w: String,
        old: String,
        new: String,
        old_step: usize,
        new_step: usize,
    },
    #[error(
        "observation conflict at node {state} on `{x}` with guard registers {rg}: output `{new}` \
         at step {new_step} contradicts `{old}` at step {old_step}; the configured W or guard \
         registers cannot explain this system"
    )]
    Observation {
        state: StateId,
        x: String,
        old: String,
        new: String,
        old_step: usize,
        new_step: usize,
        rg: String,
    },
}

/// The concrete sample store. Rows are grouped under the abstract
/// transition they instantiate; inserting a row that contradicts an
/// existing one on the same guard-register slice and concrete input is the
/// learner's signal that its abstraction is too coarse.
#[derive(Debug, Clone)]
pub struct LambdaMap {
    map: BTreeMap<(StateId, String, AbstractOut), Vec<LambdaRow>>,
    rg: Vec<String>,
}

impl LambdaMap {
    pub fn new(rg: Vec<String>) -> LambdaMap {
        LambdaMap {
            map: BTreeMap::new(),
            rg,
        }
    }

    pub fn rg(&self) -> &[String] {
        &self.rg
    }

    /// Insert one observation; `Ok(true)` if it is new information. The
    /// consistency check compares against every row of the same state and
    /// input name (across all abstract outputs).
    /// Would this row contradict a stored one — same concrete input at the
    /// same guard-register configuration, but a different abstract output?
    pub fn check_conflict(&self, q: StateId, row: &LambdaRow) -> Option<Inconsistency> {
        let rg_slice = row.r.restrict(&self.rg);
        for ((s, input, _), rows) in &self.map {
            if *s != q || *input != row.x.name {
                continue;
            }
            for old in rows {
                if old.x == row.x
                    && old.r.restrict(&self.rg) == rg_slice
                    && old.y.abstracted() != row.y.abstracted()
                {
                    return Some(Inconsistency::Observation {
                        state: q,
                        x: row.x.to_string(),
                        old: old.y.to_string(),
                        new: row.y.to_string(),
                        old_step: old.step,
                        new_step: row.step,
                        rg: rg_slice.to_string(),
                    });
                }
            }
        }
        None
    }

    pub fn insert(
        &mut self,
        iface: &Interface,
        q: StateId,
        row: LambdaRow,
    ) -> Result<bool, Inconsistency> {
        debug_assert_eq!(row.r1, iface.rho_step(&row.r, &row.x, &row.y));
        if let Some(conflict) = self.check_conflict(q, &row) {
            return Err(conflict);
        }
        let key = (q, row.x.name.clone(), row.y.abstracted());
        let rows = self.map.entry(key).or_default();
        if rows
            .iter()
            .any(|old| old.r == row.r && old.x == row.x && old.y == row.y)
        {
            return Ok(false);
        }
        rows.push(row);
        Ok(true)
    }

    pub fn rows(&self, q: StateId, input: &str, out: &AbstractOut) -> &[LambdaRow] {
        self.map
            .get(&(q, input.to_string(), out.clone()))
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    /// All rows for a state and input name, over every abstract output.
    pub fn rows_for_input(&self, q: StateId, input: &str) -> Vec<(&AbstractOut, &LambdaRow)> {
        self.map
            .iter()
            .filter(|((s, i, _), _)| *s == q && i == input)
            .flat_map(|((_, _, o), rows)| rows.iter().map(move |r| (o, r)))
            .collect()
    }

    /// The output pinned by the guard registers, if this exact input was
    /// already sampled at a configuration matching on R_g.
    pub fn determined_output(
        &self,
        q: StateId,
        x: &ConcreteInput,
        r: &RegisterConfig,
    ) -> Option<(&AbstractOut, &LambdaRow)> {
        let rg_slice = r.restrict(&self.rg);
        self.rows_for_input(q, &x.name)
            .into_iter()
            .find(|(_, row)| row.x == *x && row.r.restrict(&self.rg) == rg_slice)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(StateId, String, AbstractOut), &Vec<LambdaRow>)> {
        self.map.iter()
    }

    pub fn row_count(&self) -> usize {
        self.map.values().map(|v| v.len()).sum()
    }
}

/// What each homing response is known to mean: the (partial)
/// characterization of the state the system lands in after answering the
/// homing sequence that way.
#[derive(Debug, Clone, Default)]
pub struct HomingDict {
    map: BTreeMap<Vec<AbstractOut>, BTreeMap<usize, (Vec<AbstractOut>, usize)>>,
}

impl HomingDict {
    pub fn observe(
        &mut self,
        eta: &[AbstractOut],
        w_index: usize,
        w_text: &str,
        response: Vec<AbstractOut>,
        step: usize,
    ) -> Result<(), Inconsistency> {
        let entry = self.map.entry(eta.to_vec()).or_default();
        if let Some((old, old_step)) = entry.get(&w_index) {
            if *old != response {
                return Err(Inconsistency::Homing {
                    eta: render_outs(eta),
                    w: w_text.to_string(),
                    old: render_outs(old),
                    new: render_outs(&response),
                    old_step: *old_step,
                    new_step: step,
                });
            }
            return Ok(());
        }
        entry.insert(w_index, (response, step));
        Ok(())
    }

    pub fn missing_w(&self, eta: &[AbstractOut], w_count: usize) -> Option<usize> {
        let known = self.map.get(eta);
        (0..w_count).find(|i| known.map_or(true, |m| !m.contains_key(i)))
    }

    pub fn is_total(&self, eta: &[AbstractOut], w_count: usize) -> bool {
        self.missing_w(eta, w_count).is_none()
    }

    /// Total characterization for a completed response.
    pub fn charac_of(&self, eta: &[AbstractOut]) -> Option<BTreeMap<usize, Vec<AbstractOut>>> {
        self.map
            .get(eta)
            .map(|m| m.iter().map(|(k, (v, _))| (*k, v.clone())).collect())
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

fn render_outs(outs: &[AbstractOut]) -> String {
    outs.iter()
        .map(|o| o.to_string())
        .collect::<Vec<_>>()
        .join(".")
}

/// A concrete i/o path from the position right after a homing answered
/// `eta` to a known (node, configuration) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessEntry {
    pub path: Vec<(ConcreteInput, ConcreteOutput)>,
    pub epoch: usize,
}

/// Known accesses from each homing response, keyed by the full register
/// configuration they land in. Entries from runs older than the previous
/// homing epoch are pruned — they are cheap to rediscover and likely stale.
#[derive(Debug, Clone, Default)]
pub struct AccessTable {
    map: BTreeMap<Vec<AbstractOut>, BTreeMap<(StateId, RegisterConfig), AccessEntry>>,
}

impl AccessTable {
    /// Record an access, keeping the shortest known path per target.
    pub fn record(
        &mut self,
        eta: &[AbstractOut],
        q: StateId,
        r: RegisterConfig,
        path: Vec<(ConcreteInput, ConcreteOutput)>,
        epoch: usize,
    ) {
        let slot = self
            .map
            .entry(eta.to_vec())
            .or_default()
            .entry((q, r))
            .or_insert_with(|| AccessEntry {
                path: path.clone(),
                epoch,
            });
        if path.len() < slot.path.len() {
            slot.path = path;
        }
        slot.epoch = epoch;
    }

    pub fn entries(
        &self,
        eta: &[AbstractOut],
    ) -> impl Iterator<Item = (&(StateId, RegisterConfig), &AccessEntry)> {
        self.map.get(eta).into_iter().flat_map(|m| m.iter())
    }

    /// Drop entries older than the previous epoch.
    pub fn prune(&mut self, current_epoch: usize) {
        let keep_from = current_epoch.saturating_sub(1);
        for m in self.map.values_mut() {
            m.retain(|_, e| e.epoch >= keep_from);
        }
        self.map.retain(|_, m| !m.is_empty());
    }

    pub fn total_entries(&self) -> usize {
        self.map.values().map(|m| m.len()).sum()
    }
}

/// The part of the learned graph actually reachable with evidence: walk
/// from the given seed positions following only sample rows whose
/// guard-register slice matches, and keep the transitions so exercised.
#[derive(Debug, Clone, Default)]
pub struct DeltaMinus {
    pub edges: BTreeSet<(StateId, String, AbstractOut)>,
    pub states: BTreeSet<StateId>,
    pub configs: BTreeSet<(StateId, RegisterConfig)>,
}

pub fn delta_minus(
    delta: &DeltaMap,
    lambda: &LambdaMap,
    seeds: &[(StateId, RegisterConfig)],
) -> DeltaMinus {
    let rg = lambda.rg();
    let mut dm = DeltaMinus::default();
    let mut queue: VecDeque<(StateId, RegisterConfig)> = VecDeque::new();
    for (q, r) in seeds {
        let slice = r.restrict(rg);
        if dm.configs.insert((*q, slice.clone())) {
            queue.push_back((*q, slice));
        }
        dm.states.insert(*q);
    }
    while let Some((q, rgc)) = queue.pop_front() {
        for ((s, input, out), rows) in lambda.entries() {
            if *s != q {
                continue;
            }
            for row in rows {
                if row.r.restrict(rg) != rgc {
                    continue;
                }
                dm.edges.insert((q, input.clone(), out.clone()));
                if let Some(target) = delta.get(q, input, out) {
                    dm.states.insert(target);
                    let next = (target, row.r1.restrict(rg));
                    if dm.configs.insert(next.clone()) {
                        queue.push_back((target, row.r1.restrict(rg)));
                    }
                }
            }
        }
    }
    dm
}

/// Is the state's behaviour for this concrete input already known? Either
/// the input name is refused here (and refusal cannot depend on values), or
/// this exact input has a sample row.
pub fn is_complete_for(
    delta: &DeltaMap,
    lambda: &LambdaMap,
    q: StateId,
    x: &ConcreteInput,
) -> bool {
    let outs = delta.outputs_for(q, &x.name);
    if !outs.is_empty() && outs.iter().all(|(o, _)| *o == AbstractOut::Refused) {
        return true;
    }
    lambda
        .rows_for_input(q, &x.name)
        .iter()
        .any(|(_, row)| row.x == *x)
}

/// A strongly connected, outward-closed component of the evidence graph in
/// which every state is complete for every input of `j`. The learner stops
/// exploring when it finds one.
pub fn find_complete_scc(
    dm: &DeltaMinus,
    delta: &DeltaMap,
    lambda: &LambdaMap,
    j: &[ConcreteInput],
) -> Option<BTreeSet<StateId>> {
    let mut adj: BTreeMap<StateId, BTreeSet<StateId>> = BTreeMap::new();
    for s in &dm.states {
        adj.entry(*s).or_default();
    }
    for (q, input, out) in &dm.edges {
        if let Some(t) = delta.get(*q, input, out) {
            adj.entry(*q).or_default().insert(t);
            adj.entry(t).or_default();
        }
    }
    let reach = |from: StateId| -> BTreeSet<StateId> {
        let mut seen = BTreeSet::from([from]);
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            for &v in adj.get(&u).into_iter().flatten() {
                if seen.insert(v) {
                    queue.push_back(v);
                }
            }
        }
        seen
    };
    let mut assigned: BTreeSet<StateId> = BTreeSet::new();
    for &s in adj.keys() {
        if assigned.contains(&s) {
            continue;
        }
        let fwd = reach(s);
        let scc: BTreeSet<StateId> = fwd
            .iter()
            .copied()
            .filter(|&p| reach(p).contains(&s))
            .collect();
        assigned.extend(&scc);
        // Closed: no kept edge leads out of the component.
        let closed = scc.iter().all(|q| {
            adj.get(q)
                .into_iter()
                .flatten()
                .all(|t| scc.contains(t))
        });
        if !closed {
            continue;
        }
        let complete = scc
            .iter()
            .all(|&q| j.iter().all(|x| is_complete_for(delta, lambda, q, x)));
        if complete {
            return Some(scc);
        }
    }
    None
}
