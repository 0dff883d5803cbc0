//! Unified campaign log records, one JSON object per line.

use serde::{Deserialize, Serialize};

use super::command::{Command, Receiver};
use super::TestcaseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Command,
    Report,
}

/// A protocol message observed on the simulated wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageRecord {
    pub sender: Receiver,
    /// "ike" or "sip".
    pub protocol: String,
    /// Frame kind on the simulated link: "ike", "tunnel" (sealed SIP), or
    /// "sip_plain" (IMS-side SIP before sealing).
    #[serde(default)]
    pub transport: String,
    /// Flow-level classification by the reporting agent, when it has one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Payload type names in order (IKE) or the start line (SIP).
    pub detail: Vec<String>,
    /// Set by the reporting agent when the decoded message is an error
    /// indication (Notify error, AKA-Client-Error, SIP 4xx/5xx/6xx, Delete).
    #[serde(default)]
    pub error_indication: bool,
    /// Uppercase hex of the wire bytes, no separators.
    pub hex: String,
}

impl MessageRecord {
    pub fn wire_bytes(&self) -> Option<Vec<u8>> {
        hex::decode(&self.hex).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordBody {
    Command(Command),
    Message(MessageRecord),
    Status(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    /// Virtual-clock milliseconds since run start.
    pub ts_ms: u64,
    pub tc_id: String,
    /// Strictly increasing per run.
    pub seq: u64,
    pub direction: Direction,
    pub entity: Receiver,
    pub body: RecordBody,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub annotations: Vec<String>,
}

impl LogRecord {
    pub fn message(&self) -> Option<&MessageRecord> {
        match &self.body {
            RecordBody::Message(m) => Some(m),
            _ => None,
        }
    }

    pub fn has_annotation(&self, a: &str) -> bool {
        self.annotations.iter().any(|x| x == a)
    }
}

/// One JSON object per line, schema-stable.
pub fn emit_log_record(record: &LogRecord) -> String {
    serde_json::to_string(record).expect("log records serialize")
}

pub fn parse_log_record(line: &str) -> Result<LogRecord, TestcaseError> {
    serde_json::from_str(line).map_err(|e| TestcaseError::SchemaViolation(e.to_string()))
}
