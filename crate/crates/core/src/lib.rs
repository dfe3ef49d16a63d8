//! mccsim: a deterministic discrete-event simulator of virtual near-memory
//! processors ("memory channel controllers") for disaggregated memory.
//!
//! A host application maps far memory directly into its address space, and
//! additionally instantiates any number of virtual controllers next to that
//! memory. Each controller runs a downloadable channel program against the
//! application's segments and talks to the host through a control area
//! (MMIO-style lifecycle and parameters) and a data area (cache-line mailbox
//! streaming over a modelled coherent interconnect). Far-memory nodes
//! multiplex unbounded controller instances onto a fixed set of processors
//! with round-robin or deficit-based weighted fair queueing, enforce
//! protection with replicated segment tables, and can observe host memory
//! traffic for statistics workloads.
//!
//! Everything runs under a single-threaded event engine: same config and
//! script in, byte-identical event log out.

pub mod address_space;
pub mod asm;
pub mod cp;
pub mod engine;
pub mod host;
pub mod interconnect;
pub mod machine;
pub mod node;
pub mod scenario;
pub mod trace;
pub mod workloads;

pub use engine::{ActorId, AppId, MccId, NodeId, RunOutcome, SimConfig, SimTime};
// pub use machine::Machine; // wired up once machine lands
