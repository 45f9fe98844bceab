use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("node {id} is out of range for a tree of {size} nodes")]
    InvalidNode { id: usize, size: usize },
    #[error("tree is not sorted: object members must be in key order")]
    Unsorted,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("tree of {size} nodes exceeds the oracle limit of {limit}")]
    SizeLimit { size: usize, limit: usize },
}
