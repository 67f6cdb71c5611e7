//! The inference engine: homing into an identifiable state, transferring
//! between states without resets, and the backbone loop that learns and
//! samples transitions until the evidence is complete on a strongly
//! connected component.
//!
//! A `Session` owns the one unbroken conversation with the system under
//! learning. Everything the learner believes — the state table, the
//! abstract transition map, the sampled quadruples, the homing dictionary,
//! the access table — lives here, together with the believed position:
//! a known state (or none) plus the register configuration, which is always
//! maintained exactly because it is a pure function of the trace.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::abstraction::{abstract_steps, Interface, RegisterConfig, Trace};
use crate::config::LearnerConfig;
use crate::control::{
    delta_minus, find_complete_scc, is_complete_for, track_position, AccessTable, DeltaMap,
    HomingDict, Inconsistency, LambdaMap, LambdaRow, StateId, StateTable,
};
use crate::efsm::{AbstractOut, ConcreteInput, ConcreteOutput};
use crate::interp::{Sul, SulError};
use crate::log::{EventKind, EventLog};
use crate::planner::{plan_path, sorted_inventory, Plan};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("system under learning failed: {0}")]
    Sul(#[from] SulError),
    #[error(transparent)]
    Inconsistent(#[from] Inconsistency),
    #[error("learning inputs cannot connect the explored graph ({0})")]
    Disconnected(String),
    #[error("homing did not identify a state within {0} applications of h")]
    HomingBudget(usize),
    #[error("h leaves guard registers unknown after homing: {0}")]
    PartialView(String),
}

/// What a transfer produced: the probe step it ended on (or the step at
/// which reality diverged from the plan), or the admission that no target
/// is reachable.
#[derive(Debug, Clone)]
pub enum TransferOutcome {
    Step {
        source: StateId,
        r: RegisterConfig,
        x: ConcreteInput,
        y: ConcreteOutput,
        r1: RegisterConfig,
        step: usize,
    },
    NoPath,
}

/// How an oracle-walk step relates to the tables (see `walk_step`).
#[derive(Debug, Clone)]
pub enum WalkObservation {
    /// Along a known transition; the quadruple was harvested.
    Consistent,
    /// No transition entry for the observed abstract output.
    Missing,
    /// Contradicts a stored quadruple at the same guard configuration.
    Contradiction(Inconsistency),
}

const HOMING_ATTEMPTS: usize = 1000;
/// Search width for path planning after rehoming, where the reachable
/// pinned configurations are finite and must be explored exhaustively.
const WIDE_BOUND: usize = 10_000;

pub struct Session<S: Sul> {
    pub cfg: LearnerConfig,
    iface: Interface,
    sul: S,
    pub trace: Trace,
    pub table: StateTable,
    pub delta: DeltaMap,
    pub lambda: LambdaMap,
    pub homing: HomingDict,
    pub access: AccessTable,
    pub log: EventLog,
    /// The complete component the last backbone call stopped on.
    pub scc: Option<BTreeSet<StateId>>,
    position: Option<StateId>,
    epoch: usize,
    eta: Vec<AbstractOut>,
    post_h: Option<(StateId, RegisterConfig)>,
    /// Trace lengths at which the position equalled the post-homing
    /// position; access paths start at the latest of these.
    anchors: Vec<usize>,
}

fn seq_text(seq: &[ConcreteInput]) -> String {
    seq.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(".")
}

fn outs_text(outs: &[AbstractOut]) -> String {
    outs.iter()
        .map(|o| match o {
            AbstractOut::Event(n) => n.clone(),
            AbstractOut::Silent => "omega".into(),
            AbstractOut::Refused => "OMEGA".into(),
        })
        .collect::<Vec<_>>()
        .join(".")
}

impl<S: Sul> Session<S> {
    pub fn new(cfg: LearnerConfig, iface: Interface, sul: S) -> Session<S> {
        let trace = Trace::new(iface.clone());
        let table = StateTable::new(cfg.w.len());
        let lambda = LambdaMap::new(cfg.rg.clone());
        Session {
            cfg,
            iface,
            sul,
            trace,
            table,
            delta: DeltaMap::default(),
            lambda,
            homing: HomingDict::default(),
            access: AccessTable::default(),
            log: EventLog::new(),
            scc: None,
            position: None,
            epoch: 0,
            eta: Vec::new(),
            post_h: None,
            anchors: Vec::new(),
        }
    }

    pub fn interface(&self) -> &Interface {
        &self.iface
    }

    pub fn position(&self) -> Option<StateId> {
        self.position
    }

    pub fn config(&self) -> &RegisterConfig {
        self.trace.current_config()
    }

    pub fn post_homing(&self) -> Option<&(StateId, RegisterConfig)> {
        self.post_h.as_ref()
    }

    fn note_anchor(&mut self) {
        if let (Some(q), Some((q0, r0))) = (self.position, &self.post_h) {
            if q == *q0 && self.trace.current_config() == r0 {
                let at = self.trace.len();
                if self.anchors.last() != Some(&at) {
                    self.anchors.push(at);
                }
            }
        }
    }

    /// Apply one concrete input to the system. The believed position
    /// follows the observed output through the transition map; a refused or
    /// silent output that has no entry cannot move the system, anything
    /// else unknown loses the position. With `record` set, steps along
    /// known transitions are harvested as quadruples.
    pub(crate) fn apply_one(
        &mut self,
        x: &ConcreteInput,
        record: bool,
    ) -> Result<(usize, ConcreteOutput, RegisterConfig, RegisterConfig), LearnError> {
        let y = self.sul.step(x)?;
        let r = self.trace.current_config().clone();
        let step = self.trace.push(x.clone(), y.clone());
        let r1 = self.trace.current_config().clone();
        let abs = y.abstracted();
        if let Some(q) = self.position {
            match self.delta.get(q, &x.name, &abs) {
                Some(target) => {
                    if record {
                        self.lambda.insert(
                            &self.iface,
                            q,
                            LambdaRow {
                                r: r.clone(),
                                x: x.clone(),
                                y: y.clone(),
                                r1: r1.clone(),
                                step,
                            },
                        )?;
                    }
                    self.position = Some(target);
                }
                None if abs.is_special() => {}
                None => self.position = None,
            }
        }
        self.note_anchor();
        Ok((step, y, r, r1))
    }

    pub(crate) fn apply_seq(
        &mut self,
        seq: &[ConcreteInput],
        record: bool,
    ) -> Result<Vec<ConcreteOutput>, LearnError> {
        let mut outs = Vec::with_capacity(seq.len());
        for x in seq {
            let (_, y, _, _) = self.apply_one(x, record)?;
            outs.push(y);
        }
        Ok(outs)
    }

    /// Apply the homing sequence until its response identifies a state:
    /// an unseen response gets one characterization query per round, an
    /// identified one fixes the position and opens a new homing epoch.
    pub fn home(&mut self) -> Result<(), LearnError> {
        let h = self.cfg.h.clone();
        for _ in 0..HOMING_ATTEMPTS {
            let outs = self.apply_seq(&h, true)?;
            let eta: Vec<AbstractOut> = outs.iter().map(|y| y.abstracted()).collect();
            if let Some(w_idx) = self.homing.missing_w(&eta, self.cfg.w.len()) {
                self.log.push(
                    self.trace.len(),
                    EventKind::Home,
                    format!("response {} not characterized yet", outs_text(&eta)),
                );
                let w = self.cfg.w[w_idx].clone();
                let w_outs = self.apply_seq(&w, false)?;
                let resp: Vec<AbstractOut> = w_outs.iter().map(|y| y.abstracted()).collect();
                self.homing
                    .observe(&eta, w_idx, &seq_text(&w), resp.clone(), self.trace.len())?;
                self.log.push(
                    self.trace.len(),
                    EventKind::Characterize,
                    format!("{} -> {}", seq_text(&w), outs_text(&resp)),
                );
                continue;
            }
            let charac = self
                .homing
                .charac_of(&eta)
                .expect("a fully characterized response has stored entries");
            let r0 = self.trace.current_config().clone();
            let (q, _fresh) = self.table.canonical(charac, r0.restrict(&self.cfg.rw));
            self.position = Some(q);
            self.epoch += 1;
            self.eta = eta.clone();
            self.post_h = Some((q, r0.clone()));
            self.anchors = vec![self.trace.len()];
            self.access
                .record(&eta, q, r0.clone(), Vec::new(), self.epoch);
            self.access.prune(self.epoch);
            if !r0.is_total_on(&self.cfg.rg) {
                return Err(LearnError::PartialView(r0.to_string()));
            }
            self.log.push(
                self.trace.len(),
                EventKind::Home,
                format!("identified state {q} after {}", outs_text(&eta)),
            );
            return Ok(());
        }
        Err(LearnError::HomingBudget(HOMING_ATTEMPTS))
    }

    fn config_after(&self, step: usize) -> &RegisterConfig {
        if step >= self.trace.len() {
            self.trace.current_config()
        } else {
            self.trace.config_before(step)
        }
    }

    /// Store the trace suffix from the latest anchor through 1-based step
    /// `upto` as an access path to `q`, provided it replays through known
    /// transitions from the homed position.
    fn update_access(&mut self, q: StateId, upto: usize) {
        let Some((q0, r0)) = self.post_h.clone() else {
            return;
        };
        let Some(&anchor) = self.anchors.iter().rev().find(|&&a| a <= upto) else {
            return;
        };
        let path: Vec<(ConcreteInput, ConcreteOutput)> = (anchor..upto)
            .map(|i| {
                let s = self.trace.step(i);
                (s.input.clone(), s.output.clone())
            })
            .collect();
        let mut cur = q0;
        let mut rc = r0;
        for (x, y) in &path {
            let abs = y.abstracted();
            match self.delta.get(cur, &x.name, &abs) {
                Some(t) => cur = t,
                None if abs.is_special() => {}
                None => return,
            }
            rc = self.iface.rho_step(&rc, x, y);
        }
        if cur != q || rc != *self.config_after(upto) {
            return;
        }
        self.access.record(&self.eta, q, rc, path, self.epoch);
    }

    /// Where to learn a new input: an identified state in its reference
    /// tracked-register configuration with an input name never applied
    /// there. Half-characterized targets are not learning frontiers; they
    /// are finished through the branch that discovered them.
    fn goal_learn(&self, i1: &[ConcreteInput], q: StateId, rc: &RegisterConfig) -> Option<ConcreteInput> {
        if !self.table.is_complete(q) {
            return None;
        }
        if rc.restrict(&self.cfg.rw) != self.table.node(q).rw {
            return None;
        }
        i1.iter()
            .find(|x| self.delta.outputs_for(q, &x.name).is_empty())
            .cloned()
    }

    /// Where to re-elicit a known branch whose target is not fully
    /// characterized yet: a recorded sample pins the branch at this guard
    /// configuration.
    fn goal_guarded(&self, q: StateId, rc: &RegisterConfig) -> Option<ConcreteInput> {
        if !self.table.is_complete(q) {
            return None;
        }
        let rg = self.lambda.rg().to_vec();
        let rg_slice = rc.restrict(&rg);
        for ((s, input, out), target) in self.delta.entries() {
            if *s != q || self.table.is_complete(*target) {
                continue;
            }
            for row in self.lambda.rows(q, input, out) {
                if row.r.restrict(&rg) == rg_slice {
                    return Some(row.x.clone());
                }
            }
        }
        None
    }

    /// Where to sample: a state whose behaviour for some input of `j` is
    /// not determined yet (refusals are value-independent and need no
    /// sampling).
    fn goal_sample(&self, j: &[ConcreteInput], q: StateId, _rc: &RegisterConfig) -> Option<ConcreteInput> {
        if !self.table.is_complete(q) {
            return None;
        }
        j.iter()
            .find(|x| !is_complete_for(&self.delta, &self.lambda, q, x))
            .cloned()
    }

    fn plan_for_goal(
        &self,
        goal: usize,
        i1: &[ConcreteInput],
        j: &[ConcreteInput],
        from: (StateId, RegisterConfig),
        bound: usize,
        pinned_only: bool,
    ) -> Option<Plan> {
        let g = |q: StateId, rc: &RegisterConfig| match goal {
            0 => self.goal_learn(i1, q, rc),
            1 => self.goal_guarded(q, rc),
            _ => self.goal_sample(j, q, rc),
        };
        // Plans may travel along any input of the current widening set, not
        // just the learning inputs: a state discovered under a probe value
        // is only reachable by replaying that value.
        plan_path(
            &self.iface,
            &self.delta,
            &self.lambda,
            j,
            from,
            &g,
            bound,
            pinned_only,
        )
    }

    /// Move to a position where there is something left to learn or sample
    /// and apply the chosen probe there. First a bounded optimistic search
    /// from the current position; failing that, rehome and plan over
    /// pinned steps from the homed position and the cached accesses.
    pub(crate) fn transfer(&mut self, j: &[ConcreteInput]) -> Result<TransferOutcome, LearnError> {
        let i1 = sorted_inventory(&self.cfg.i1);
        let j_sorted = sorted_inventory(j);
        let q = self.position.expect("transfer requires a known position");
        let bound = self
            .cfg
            .transfer_bound
            .unwrap_or(2 * self.table.state_count() + self.cfg.h.len());
        if !self.cfg.no_bounded_transfer {
            for goal in 0..3 {
                let from = (q, self.trace.current_config().clone());
                if let Some(plan) = self.plan_for_goal(goal, &i1, &j_sorted, from, bound, false) {
                    self.log.push(
                        self.trace.len(),
                        EventKind::Transfer,
                        format!(
                            "plan {} probe {}",
                            seq_text(&plan.steps.iter().map(|s| s.x.clone()).collect::<Vec<_>>()),
                            plan.probe
                        ),
                    );
                    return self.execute(Vec::new(), plan);
                }
            }
        }
        self.home()?;
        let (q0, r0) = self.post_h.clone().expect("home just succeeded");
        for goal in 0..3 {
            let mut best: Option<(usize, usize, Vec<(ConcreteInput, ConcreteOutput)>, Plan)> = None;
            if let Some(p) =
                self.plan_for_goal(goal, &i1, &j_sorted, (q0, r0.clone()), WIDE_BOUND, true)
            {
                best = Some((p.len(), 0, Vec::new(), p));
            }
            let entries: Vec<((StateId, RegisterConfig), Vec<(ConcreteInput, ConcreteOutput)>)> =
                self.access
                    .entries(&self.eta)
                    .filter(|(_, e)| !e.path.is_empty())
                    .map(|(k, e)| (k.clone(), e.path.clone()))
                    .collect();
            for (i, ((aq, ar), path)) in entries.into_iter().enumerate() {
                if let Some(p) =
                    self.plan_for_goal(goal, &i1, &j_sorted, (aq, ar), WIDE_BOUND, true)
                {
                    let total = path.len() + p.len();
                    if best
                        .as_ref()
                        .map_or(true, |b| (total, i + 1) < (b.0, b.1))
                    {
                        best = Some((total, i + 1, path, p));
                    }
                }
            }
            if let Some((_, _, prefix, plan)) = best {
                self.log.push(
                    self.trace.len(),
                    EventKind::Transfer,
                    format!(
                        "rehomed; replay {} steps, plan {} probe {}",
                        prefix.len(),
                        seq_text(&plan.steps.iter().map(|s| s.x.clone()).collect::<Vec<_>>()),
                        plan.probe
                    ),
                );
                return self.execute(prefix, plan);
            }
        }
        Ok(TransferOutcome::NoPath)
    }

    /// Run an access replay and a plan, stopping at the first step whose
    /// output diverges from the expectation — that step is itself the
    /// discovery of a guarded branch and is returned as the outcome.
    fn execute(
        &mut self,
        prefix: Vec<(ConcreteInput, ConcreteOutput)>,
        plan: Plan,
    ) -> Result<TransferOutcome, LearnError> {
        for (x, expected) in &prefix {
            let source = self.position.expect("replay runs along known transitions");
            let (step, y, r, r1) = self.apply_one(x, true)?;
            if y.abstracted() != expected.abstracted() {
                self.log.push(
                    step,
                    EventKind::GuardDiscovered,
                    format!("{x} gave {y}, recorded access had {expected}"),
                );
                return Ok(TransferOutcome::Step {
                    source,
                    r,
                    x: x.clone(),
                    y,
                    r1,
                    step,
                });
            }
        }
        for ps in &plan.steps {
            let source = self.position.expect("plan runs along known transitions");
            let (step, y, r, r1) = self.apply_one(&ps.x, true)?;
            if y.abstracted() != ps.expect {
                self.log.push(
                    step,
                    EventKind::GuardDiscovered,
                    format!("{} gave {y}, expected {:?}", ps.x, ps.expect),
                );
                return Ok(TransferOutcome::Step {
                    source,
                    r,
                    x: ps.x.clone(),
                    y,
                    r1,
                    step,
                });
            }
        }
        let source = self.position.expect("probe applies at a known position");
        if !prefix.is_empty() || !plan.steps.is_empty() {
            self.update_access(source, self.trace.len());
        }
        let (step, y, r, r1) = self.apply_one(&plan.probe, false)?;
        Ok(TransferOutcome::Step {
            source,
            r,
            x: plan.probe,
            y,
            r1,
            step,
        })
    }

    /// Fold one observed step into the tables: refusals and silent steps
    /// become self-loops and leave the position in place; a step along a
    /// fully known transition is a sample; anything else opens (or
    /// continues) learning the target with one characterization query.
    pub(crate) fn record_step(
        &mut self,
        source: StateId,
        r: RegisterConfig,
        x: ConcreteInput,
        y: ConcreteOutput,
        r1: RegisterConfig,
        step: usize,
    ) -> Result<(), LearnError> {
        let abs = y.abstracted();
        if abs.is_special() {
            self.delta.set(source, &x.name, abs, source);
            self.lambda.insert(
                &self.iface,
                source,
                LambdaRow {
                    r,
                    x: x.clone(),
                    y: y.clone(),
                    r1,
                    step,
                },
            )?;
            self.position = Some(source);
            self.log.push(
                step,
                EventKind::Learn,
                format!("{x} -> {y} stays at state {source}"),
            );
            self.note_anchor();
            return Ok(());
        }
        match self.delta.get(source, &x.name, &abs) {
            Some(target) if self.table.is_complete(target) => {
                self.lambda.insert(
                    &self.iface,
                    source,
                    LambdaRow {
                        r,
                        x: x.clone(),
                        y: y.clone(),
                        r1,
                        step,
                    },
                )?;
                self.position = Some(target);
                self.log.push(
                    step,
                    EventKind::Sample,
                    format!("{x} -> {y} at state {source}"),
                );
                self.note_anchor();
                self.update_access(target, step);
                Ok(())
            }
            existing => {
                let stub = existing.unwrap_or_else(|| {
                    let s = self.table.new_node();
                    self.delta.set(source, &x.name, abs.clone(), s);
                    s
                });
                self.lambda.insert(
                    &self.iface,
                    source,
                    LambdaRow {
                        r,
                        x: x.clone(),
                        y: y.clone(),
                        r1: r1.clone(),
                        step,
                    },
                )?;
                self.log.push(
                    step,
                    EventKind::Learn,
                    format!("{x} -> {y} at state {source}, characterizing the target"),
                );
                self.table.set_rw(stub, r1.restrict(&self.cfg.rw));
                let mut applied: Vec<(ConcreteInput, ConcreteOutput)> =
                    vec![(x.clone(), y.clone())];
                if let Some(w_idx) = self.table.missing_w(stub) {
                    let w = self.cfg.w[w_idx].clone();
                    let w_outs = self.apply_seq(&w, false)?;
                    let resp: Vec<AbstractOut> = w_outs.iter().map(|o| o.abstracted()).collect();
                    self.table.set_charac(stub, w_idx, resp.clone());
                    self.log.push(
                        self.trace.len(),
                        EventKind::Characterize,
                        format!("{} -> {}", seq_text(&w), outs_text(&resp)),
                    );
                    for (i, o) in w.iter().zip(w_outs) {
                        applied.push((i.clone(), o));
                    }
                }
                if self.table.is_complete(stub) {
                    let canonical = self.table.intern(stub);
                    if canonical != stub {
                        self.delta.set(source, &x.name, abs, canonical);
                    }
                    self.update_access(canonical, step);
                }
                self.position = track_position(&self.delta, source, &abstract_steps(&applied));
                self.note_anchor();
                Ok(())
            }
        }
    }

    /// Position seeds for the evidence-graph walk: the current position,
    /// the homed position, and every cached access for this epoch's
    /// homing response.
    fn seed_positions(&self) -> Vec<(StateId, RegisterConfig)> {
        let mut seeds = Vec::new();
        if let Some(q) = self.position {
            seeds.push((q, self.trace.current_config().clone()));
        }
        if let Some((q0, r0)) = &self.post_h {
            seeds.push((*q0, r0.clone()));
        }
        for ((q, r), _) in self.access.entries(&self.eta) {
            seeds.push((*q, r.clone()));
        }
        seeds
    }

    /// The learning/sampling loop: home when lost, otherwise move to the
    /// nearest open goal and fold in what the probe revealed, until the
    /// evidence is complete over `i_o` on a strongly connected component.
    pub fn backbone(&mut self, i_o: &[ConcreteInput]) -> Result<BTreeSet<StateId>, LearnError> {
        let i_o_sorted = sorted_inventory(i_o);
        let i1_sorted = sorted_inventory(&self.cfg.i1);
        let i_s_sorted = sorted_inventory(&self.cfg.i_s);
        let mut j = i1_sorted.clone();
        loop {
            if self.position.is_none() {
                self.home()?;
            }
            let seeds = self.seed_positions();
            let dm = delta_minus(&self.delta, &self.lambda, &seeds);
            if let Some(scc) = find_complete_scc(&dm, &self.delta, &self.lambda, &i_o_sorted) {
                self.scc = Some(scc.clone());
                return Ok(scc);
            }
            if j == i1_sorted
                && j != i_o_sorted
                && find_complete_scc(&dm, &self.delta, &self.lambda, &i1_sorted).is_some()
            {
                // Learning over the core inputs is done; widen to sampling.
                j = i_o_sorted.clone();
            }
            match self.transfer(&j)? {
                TransferOutcome::NoPath => {
                    if j != i_s_sorted {
                        // Not connectable with the current inputs; retry
                        // with the full sampling set.
                        j = i_s_sorted.clone();
                    } else {
                        let mut gaps = Vec::new();
                        for q in self.table.states() {
                            for x in &i_o_sorted {
                                if !is_complete_for(&self.delta, &self.lambda, q, x) {
                                    gaps.push(format!("{x} at state {q}"));
                                }
                            }
                        }
                        return Err(LearnError::Disconnected(format!(
                            "{} states explored, {} samples; unreachable: {}",
                            self.table.state_count(),
                            self.lambda.row_count(),
                            gaps.join(", ")
                        )));
                    }
                }
                TransferOutcome::Step {
                    source,
                    r,
                    x,
                    y,
                    r1,
                    step,
                } => self.record_step(source, r, x, y, r1, step)?,
            }
        }
    }

    /// One step of an oracle walk: applied to the system, compared against
    /// the tables, and harvested when consistent. A contradiction or a
    /// missing entry loses the position (the caller stops the walk there).
    pub(crate) fn walk_step(
        &mut self,
        x: &ConcreteInput,
    ) -> Result<(ConcreteOutput, WalkObservation), LearnError> {
        let q = self.position.expect("walks start from a known position");
        let y = self.sul.step(x)?;
        let r = self.trace.current_config().clone();
        let step = self.trace.push(x.clone(), y.clone());
        let r1 = self.trace.current_config().clone();
        let abs = y.abstracted();
        let row = LambdaRow {
            r,
            x: x.clone(),
            y: y.clone(),
            r1,
            step,
        };
        if let Some(conflict) = self.lambda.check_conflict(q, &row) {
            self.position = None;
            return Ok((y, WalkObservation::Contradiction(conflict)));
        }
        match self.delta.get(q, &x.name, &abs) {
            Some(target) => {
                self.lambda
                    .insert(&self.iface, q, row)
                    .expect("conflict was checked above");
                self.position = Some(target);
                self.note_anchor();
                Ok((y, WalkObservation::Consistent))
            }
            None => {
                // A transition the backbone never saw — typically a guard
                // flipping under a register configuration the systematic
                // exploration did not produce. Record it exactly like a
                // learned step so the new target survives the restart the
                // counterexample is about to cause.
                let LambdaRow { r, x, y: out, r1, step } = row;
                self.record_step(q, r, x, out, r1, step)?;
                Ok((y, WalkObservation::Missing))
            }
        }
    }

    /// Append a characterization sequence to W and restart the tables.
    /// The trace and the homing dictionary survive: previous responses
    /// stay valid, they are merely incomplete for the longer W.
    pub fn extend_w(&mut self, suffix: Vec<ConcreteInput>) {
        self.cfg.w.push(suffix);
        self.reset_tables();
    }

    pub fn reset_tables(&mut self) {
        self.table = StateTable::new(self.cfg.w.len());
        self.delta = DeltaMap::default();
        self.lambda = LambdaMap::new(self.cfg.rg.clone());
        self.access = AccessTable::default();
        self.position = None;
        self.post_h = None;
        self.anchors.clear();
        self.scc = None;
    }

    /// Make an input part of the systematically learned set (and of the
    /// supersets). Returns whether it was new there.
    pub fn add_learning_input(&mut self, x: ConcreteInput) -> bool {
        let added = !self.cfg.i1.contains(&x);
        if added {
            self.cfg.i1.push(x.clone());
        }
        if !self.cfg.i2.contains(&x) {
            self.cfg.i2.push(x.clone());
        }
        if !self.cfg.i_s.contains(&x) {
            self.cfg.i_s.push(x);
        }
        added
    }

    /// Make an input available for sampling. Returns whether it was new.
    pub fn add_sample_input(&mut self, x: ConcreteInput) -> bool {
        let added = !self.cfg.i_s.contains(&x);
        if added {
            self.cfg.i_s.push(x);
        }
        added
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::Interface;
    use crate::config::parse_config;
    use crate::dsl::parse_efsm;
    use crate::interp::SulMachine;
    use crate::testutil::vending_machine;
    use crate::value::Value;

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

    fn vending_session() -> Session<SulMachine> {
        let machine = vending_machine();
        let iface = Interface::of(&machine);
        let cfg = parse_config(VENDING_CONFIG, &iface).unwrap();
        Session::new(cfg, iface, SulMachine::new(machine))
    }

    fn tag(out: &AbstractOut) -> String {
        match out {
            AbstractOut::Event(n) => n.clone(),
            AbstractOut::Silent => "omega".into(),
            AbstractOut::Refused => "OMEGA".into(),
        }
    }

    fn abstract_outputs(s: &Session<SulMachine>) -> Vec<String> {
        s.trace
            .steps()
            .iter()
            .map(|st| tag(&st.output.abstracted()))
            .collect()
    }

    /// The run every test below builds on: what the dispenser answers,
    /// step by step, when learned with the config above.
    const RUN: [&str; 37] = [
        "OMEGA", "OMEGA", "Pay", "OMEGA", "Display", "Serve", "Pay", "OMEGA", "Display", "Serve",
        "Pay", // homing identifies a state after step 11
        "Display", "OMEGA", "OMEGA", "Serve", "Pay", // learning state 0, discovering state 2
        "Display", "Serve", "Pay", // rehoming
        "omega", // the planned vend fails: silent branch discovered
        "Display", "Serve", "OMEGA", "Pay", "OMEGA", "Display", "Serve",
        "OMEGA", // state 2 done: complete over the learning inputs
        "Pay", "Display", "Display", // sampling coin(50), coin(200)
        "Display", "Serve", "Pay", // rehoming after the bounded search fails
        "Display", "Serve", "Pay", // replayed access, then select(tea) sampled
    ];

    #[test]
    fn fresh_homing_sequence_is_refused_then_answered() {
        let mut s = vending_session();
        let h = s.cfg.h.clone();
        let outs = s.apply_seq(&h, true).unwrap();
        let tags: Vec<String> = outs.iter().map(|y| tag(&y.abstracted())).collect();
        assert_eq!(tags, ["OMEGA", "OMEGA", "Pay"]);
        assert_eq!(s.trace.len(), 3);
        // An empty sequence is a no-op.
        let before = s.trace.len();
        assert!(s.apply_seq(&[], true).unwrap().is_empty());
        assert_eq!(s.trace.len(), before);
    }

    #[test]
    fn homing_identifies_after_eleven_steps() {
        let mut s = vending_session();
        s.home().unwrap();
        assert_eq!(s.trace.len(), 11);
        assert_eq!(abstract_outputs(&s), RUN[..11].to_vec());
        let q = s.position().unwrap();
        let node = s.table.node(q);
        assert_eq!(node.charac[&0], vec![AbstractOut::Refused]);
        assert_eq!(node.rw.get("i1"), &Value::sym("coffee"));
        // A second homing recognizes the response immediately: one h, no
        // characterization query.
        s.home().unwrap();
        assert_eq!(s.trace.len(), 14);
        assert_eq!(s.table.state_count(), 1);
    }

    #[test]
    fn backbone_learns_the_dispenser_in_28_steps() {
        let mut s = vending_session();
        let i1 = s.cfg.i1.clone();
        let scc = s.backbone(&i1).unwrap();
        assert_eq!(s.trace.len(), 28);
        assert_eq!(abstract_outputs(&s), RUN[..28].to_vec());
        assert_eq!(s.table.state_count(), 2);
        assert_eq!(scc.len(), 2);
        // Six (state, input) pairs; the vend split makes it seven entries.
        let pairs: BTreeSet<(StateId, String)> = s
            .delta
            .entries()
            .map(|((q, i, _), _)| (*q, i.clone()))
            .collect();
        assert_eq!(pairs.len(), 6);
        assert_eq!(s.delta.len(), 7);
        assert_eq!(s.lambda.row_count(), 7);
        // The silent vend branch was discovered by a failed plan.
        assert_eq!(s.log.count(EventKind::GuardDiscovered), 1);
        // The cached access to the vending state was shortened from the
        // four-step path found while learning to the two-step one.
        let q0 = s.post_homing().unwrap().0;
        let q2 = *scc.iter().find(|q| **q != q0).unwrap();
        let entry = s
            .access
            .entries(&s.eta)
            .find(|((q, r), _)| *q == q2 && r.get("t") == &Value::Int(100))
            .map(|(_, e)| e.clone())
            .unwrap();
        assert_eq!(entry.path.len(), 2);
    }

    #[test]
    fn complete_tables_stop_the_backbone_immediately() {
        let mut s = vending_session();
        let i1 = s.cfg.i1.clone();
        s.backbone(&i1).unwrap();
        let len = s.trace.len();
        s.backbone(&i1).unwrap();
        assert_eq!(s.trace.len(), len);
    }

    #[test]
    fn sampling_stages_reproduce_the_full_run() {
        let mut s = vending_session();
        let i1 = s.cfg.i1.clone();
        s.backbone(&i1).unwrap();
        // Widen the sampling set one concrete input at a time, in the
        // order the session file declares them.
        let mut i_o = i1;
        let extras: Vec<ConcreteInput> = s.cfg.i_s.iter().skip(i_o.len()).cloned().collect();
        let mut lens = Vec::new();
        for x in extras {
            i_o.push(x);
            s.backbone(&i_o).unwrap();
            lens.push(s.trace.len());
        }
        assert_eq!(lens, vec![30, 31, 37]);
        assert_eq!(abstract_outputs(&s), RUN.to_vec());
        assert_eq!(s.table.state_count(), 2);
        assert_eq!(s.lambda.row_count(), 13);
        // The concrete values along the sampling tail.
        let want = [
            (30, "coin(50)", "Display(50)"),
            (31, "coin(200)", "Display(250)"),
            (32, "coin(100)", "Display(350)"),
            (35, "coin(100)", "Display(100)"),
            (37, "select(tea)", "Pay(0)"),
        ];
        for (step, input, output) in want {
            let st = s.trace.step(step - 1);
            assert_eq!(st.input.to_string(), input, "step {step}");
            assert_eq!(st.output.to_string(), output, "step {step}");
        }
    }

    #[test]
    fn one_state_machine_is_complete_after_five_steps() {
        let text = "\
inputs: ping()
outputs: Pong()

registers:
states: s
initial: s

s -- ping() / Pong() --> s
";
        let machine = parse_efsm(text).unwrap();
        let iface = Interface::of(&machine);
        let cfg_text = "\
h = ping()
w = ping()
i1 = ping()
rw =
rg =
seed = 1
";
        let cfg = parse_config(cfg_text, &iface).unwrap();
        let mut s = Session::new(cfg, iface, SulMachine::new(machine));
        let i1 = s.cfg.i1.clone();
        let scc = s.backbone(&i1).unwrap();
        assert_eq!(s.trace.len(), 5);
        assert_eq!(s.table.state_count(), 1);
        assert_eq!(scc.len(), 1);
    }

    #[test]
    fn homing_that_cannot_see_guard_registers_is_rejected() {
        let machine = vending_machine();
        let iface = Interface::of(&machine);
        let cfg_text = "\
h = select(coffee)
w = select(coffee)
i1 = select(coffee)
rw = i1
rg = i1, i2, b, t
seed = 1
";
        let cfg = parse_config(cfg_text, &iface).unwrap();
        let mut s = Session::new(cfg, iface, SulMachine::new(machine));
        let err = s.home().unwrap_err();
        assert!(matches!(err, LearnError::PartialView(_)), "{err}");
    }
}
