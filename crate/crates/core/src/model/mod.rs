//! Network, packet and round-state types shared by every other module.

mod graph;
mod packet;
mod state;

pub use graph::{
    longest_simple_path_length, validate_itinerary, Link, NetworkGraph, NodeId, PathLengthMode, WirelineGraph,
    EXHAUSTIVE_PATH_LIMIT,
};
pub use packet::{Packet, PacketId};
pub use state::RoundState;
