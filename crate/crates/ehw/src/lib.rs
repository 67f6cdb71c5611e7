//! Learning extended finite state machines from a single unbroken run.
//!
//! This crate infers a register automaton — control states plus guarded,
//! register-dependent transitions — for a black-box system that cannot be
//! reset. It drives the system with a homing sequence and a characterization
//! set, accumulates a sampled nondeterministic state machine, reduces it,
//! and then generalises the samples into guards and output functions by
//! program synthesis. An EFSM interpreter doubles as the system under
//! learning, so everything here can be exercised end to end in process.

pub mod abstraction;
pub mod backbone;
pub mod config;
pub mod control;
pub mod dot;
pub mod dsl;
pub mod efsm;
pub mod expr;
pub mod generalise;
pub mod gp;
pub mod infer;
pub mod interp;
pub mod log;
pub mod oracle;
pub mod planner;
pub mod reduce;
pub mod value;

#[cfg(test)]
pub(crate) mod testutil;
