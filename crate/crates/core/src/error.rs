use thiserror::Error;

use crate::model::{NodeId, PacketId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    Graph(String),

    #[error("node {node} out of range for a graph with {n} nodes")]
    NodeOutOfRange { node: NodeId, n: usize },

    #[error("invalid itinerary {path:?}: {reason}")]
    Itinerary { path: Vec<NodeId>, reason: String },

    #[error("exhaustive path search refused: {n} nodes exceeds the limit of {limit}")]
    SizeGuard { n: usize, limit: usize },

    #[error("invalid rate: {0}")]
    Rate(String),

    #[error("bound domain error: {0}")]
    Domain(String),

    #[error("invalid oracle schedule: {0}")]
    Oracle(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("duplicate packet id {0}")]
    DuplicatePacket(PacketId),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
