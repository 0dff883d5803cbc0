//! Property-to-testcase generation: an annotated property corpus plus the
//! protocol flow graph in, primary testcases out.

mod encode;
mod flow;

pub use encode::{encode_corpus, encode_property, parse_properties, EncodeIssue, Property, TargetField};
pub use flow::{FlowDefinition, FlowEdge, FlowGraph};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TestgenError {
    #[error("message not in flow graph: {0}")]
    UnknownMessage(String),
    #[error("state unreachable from start (message {0})")]
    UnreachableState(String),
    #[error("duplicate flow edge: {0}")]
    DuplicateEdge(String),
    #[error("message {0} is UE-sent and cannot be a command")]
    NotCommandable(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
}
