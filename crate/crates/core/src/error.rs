use thiserror::Error;

/// Contract violations reported by the connectivity structures.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: u32, n: u32 },
    #[error("self-loop on vertex {0}")]
    SelfLoop(u32),
    #[error("edge {{{0}, {1}}} is already present")]
    DuplicateEdge(u32, u32),
    #[error("edge {{{0}, {1}}} is not present")]
    MissingEdge(u32, u32),
    #[error("vertices {0} and {1} are already in the same tree")]
    SameTree(u32, u32),
    #[error("edge {{{0}, {1}}} is not a tree edge")]
    NotTreeEdge(u32, u32),
    #[error("tree name is stale or invalid")]
    StaleTree,
    #[error("corrupted state: {0}")]
    CorruptState(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
