//! The testcase interchange format and the unified campaign log record.

mod command;
mod log;

pub use command::{
    parse_testcase, validate_corpus, Command, CommandValue, MessageVocab, Op, Provenance, Receiver,
    TestCase, TestCaseKind, TransformDescriptor, Violation, DEFAULT_TIMEOUT_MS,
};
pub use log::{emit_log_record, parse_log_record, Direction, LogRecord, MessageRecord, RecordBody};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TestcaseError {
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("constraint violation: {0}")]
    ConstraintViolation(String),
}
