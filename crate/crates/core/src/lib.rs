//! Adversarial packet routing in multi-hop radio networks.
//!
//! A routing protocol is the combination of three parts:
//!
//! - a **transmission oracle** ([`oracle`]) telling each node whether it may
//!   transmit in a round,
//! - a **scheduling policy** ([`scheduling`]) choosing which queued packet to
//!   offer,
//! - a **hearing control** ([`engine::HearingControl`]) that is either
//!   proactive (handshake first, only hearable next hops are eligible) or
//!   reactive (transmit first, retry until acknowledged).
//!
//! Packets are injected by a `(b, r)`-bounded adversary ([`adversary`]). The
//! [`engine`] executes rounds deterministically and records an
//! [`engine::ExecutionTrace`], which the [`analysis`] module checks against
//! closed-form queue and delay bounds, growth detection, and the wireline to
//! radio equivalence transform.

pub mod adversary;
pub mod analysis;
pub mod campaign;
pub mod engine;
mod error;
pub mod model;
pub mod oracle;
pub mod rational;
mod rng;
pub mod scenario;
pub mod scheduling;

pub use error::{Error, Result};
pub use model::{Link, NetworkGraph, NodeId, Packet, PacketId, RoundState, WirelineGraph};
pub use rational::Rate;
