//! JSON edit distance (JEDI), its sorted-tree upper bound, and threshold
//! similarity lookup over JSON corpora.

pub mod bench;
pub mod corpus;
pub mod distance;
pub mod error;
pub mod index;
pub mod oracle;
pub mod order;
pub mod pipeline;
pub mod synth;
pub mod tree;

pub use error::{OracleError, TreeError};
pub use tree::{
    parse_document, JsonNode, JsonTree, Label, LabelKey, Literal, NodeId, NodeType, Number,
    ParseError, ParseErrorKind, RegionSignature,
};
