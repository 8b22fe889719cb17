//! Deterministic simulation of auditable register emulations.
//!
//! An auditable register stores values dispersed as coded blocks across `n`
//! loggable storage objects, of which up to `f` may be Byzantine. Readers
//! need `tau` blocks to recover a value; an audit gathers the objects' read
//! logs and reports which readers effectively read which values. This crate
//! provides the pieces needed to explore that design space on a desk:
//!
//! * [`dispersal`] — a threshold codec splitting values into `n` blocks such
//!   that any `tau` reconstruct and fewer reveal nothing.
//! * [`object`] — the loggable R/W register, including scripted faulty
//!   behaviour (omissions, fabricated records, crashes).
//! * [`emulation`] — the high-level write/read protocols over the objects,
//!   with fast, signed, totally-ordered, and two-round read variants.
//! * [`audit`] — the evidence-collection algorithm over an auditing quorum.
//! * [`oracle`] — ground-truth property checks (completeness, weak and
//!   strong accuracy) computed from the execution trace alone.
//! * [`scenario`] / [`sim`] — scripted executions under a deterministic
//!   scheduler; same scenario and seed always yield the same trace.
//! * [`search`] — bounded-exhaustive adversary enumeration that finds
//!   counterexamples to the properties or certifies their absence.
//!
//! The crate is `no_std` (with `alloc`); all I/O, file formats, and the
//! command-line harness live in the companion `arsim-cli` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod audit;
pub mod dispersal;
pub mod emulation;
pub mod gf;
pub mod ids;
pub mod object;
pub mod oracle;
pub mod scenario;
pub mod search;
pub mod sim;
pub mod token;
pub mod trace;

pub use ids::{Label, ObjectIndex, ObjectSet, ReaderId, Value, WriterId};
