//! Chronological record of the decisions an inference session takes.
//!
//! Each entry carries the trace position at which the decision was made, so
//! a session can be replayed against the step log afterwards.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// Applied the homing sequence (and possibly a characterization query).
    Home,
    /// Queried a characterization sequence at a fresh state.
    Characterize,
    /// Applied a learning input at a known state.
    Learn,
    /// Applied a sampling input along a known transition.
    Sample,
    /// Moved to another state to continue learning.
    Transfer,
    /// A planned step produced a different output than expected.
    GuardDiscovered,
    /// A counterexample was found against the current model.
    Ce,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = match self {
            EventKind::Home => "HOME",
            EventKind::Characterize => "CHARACTERIZE",
            EventKind::Learn => "LEARN",
            EventKind::Sample => "SAMPLE",
            EventKind::Transfer => "TRANSFER",
            EventKind::GuardDiscovered => "GUARD-DISCOVERED",
            EventKind::Ce => "CE",
        };
        f.write_str(text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    /// Number of trace steps taken when the decision was logged.
    pub step: usize,
    pub kind: EventKind,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct EventLog {
    events: Vec<Event>,
}

impl EventLog {
    pub fn new() -> EventLog {
        EventLog::default()
    }

    pub fn push(&mut self, step: usize, kind: EventKind, detail: impl Into<String>) {
        self.events.push(Event {
            step,
            kind,
            detail: detail.into(),
        });
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&format!("[{:>5}] {} {}\n", e.step, e.kind, e.detail));
        }
        out
    }
}
