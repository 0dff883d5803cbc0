//! The testcase command language. A testcase is a series of commands, each
//! encoded as a JSON object with exactly ten admissible keywords; anything
//! else is a schema violation.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::TestcaseError;

pub const DEFAULT_TIMEOUT_MS: u64 = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Receiver {
    Ue,
    Epdg,
    Ims,
}

impl fmt::Display for Receiver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Receiver::Ue => f.write_str("ue"),
            Receiver::Epdg => f.write_str("epdg"),
            Receiver::Ims => f.write_str("ims"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    Send,
    Substitute,
    Replay,
    Insert,
    Update,
    Drop,
    Reboot,
    WifiOn,
    WifiOff,
}

impl Op {
    pub fn is_ue_control(self) -> bool {
        matches!(self, Op::Reboot | Op::WifiOn | Op::WifiOff)
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Op::Send => "send",
            Op::Substitute => "substitute",
            Op::Replay => "replay",
            Op::Insert => "insert",
            Op::Update => "update",
            Op::Drop => "drop",
            Op::Reboot => "reboot",
            Op::WifiOn => "wifi_on",
            Op::WifiOff => "wifi_off",
        };
        f.write_str(s)
    }
}

/// Polymorphic command value: integer, string, or octets written with an
/// explicit "0x" prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CommandValue {
    Int(i64),
    Str(String),
    Octets(Vec<u8>),
}

impl CommandValue {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            CommandValue::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            CommandValue::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_octets(&self) -> Option<&[u8]> {
        match self {
            CommandValue::Octets(o) => Some(o),
            _ => None,
        }
    }

    /// Canonical text used in testcase ids and manifests.
    pub fn canonical(&self) -> String {
        match self {
            CommandValue::Int(v) => v.to_string(),
            CommandValue::Str(s) => s.clone(),
            CommandValue::Octets(o) => format!("0x{}", hex::encode_upper(o)),
        }
    }
}

impl Serialize for CommandValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            CommandValue::Int(v) => s.serialize_i64(*v),
            CommandValue::Str(v) => s.serialize_str(v),
            CommandValue::Octets(o) => s.serialize_str(&format!("0x{}", hex::encode_upper(o))),
        }
    }
}

impl<'de> Deserialize<'de> for CommandValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde_json::Value;
        let v = Value::deserialize(d)?;
        match v {
            Value::Number(n) => n
                .as_i64()
                .map(CommandValue::Int)
                .ok_or_else(|| serde::de::Error::custom("value must be an integer")),
            Value::String(s) => {
                if let Some(h) = s.strip_prefix("0x") {
                    let octets = hex::decode(h)
                        .map_err(|_| serde::de::Error::custom(format!("bad hex octets: {s}")))?;
                    Ok(CommandValue::Octets(octets))
                } else {
                    Ok(CommandValue::Str(s))
                }
            }
            other => Err(serde::de::Error::custom(format!(
                "value must be integer, string or 0x-octets, got {other}"
            ))),
        }
    }
}

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_MS
}

/// One directive. The ten JSON keywords are exactly the fields below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Command {
    pub id: u32,
    pub receiver: Receiver,
    pub name: String,
    pub op: Op,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<CommandValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub substitute_with: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replay_index: Option<u32>,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<String>,
}

impl Command {
    pub fn send(id: u32, receiver: Receiver, name: &str) -> Self {
        Command {
            id,
            receiver,
            name: name.to_string(),
            op: Op::Send,
            attribute: None,
            value: None,
            substitute_with: None,
            replay_index: None,
            timeout_ms: DEFAULT_TIMEOUT_MS,
            expect: None,
        }
    }

    pub fn ue(id: u32, op: Op) -> Self {
        Command {
            id,
            receiver: Receiver::Ue,
            name: op.to_string(),
            op,
            attribute: None,
            value: None,
            substitute_with: None,
            replay_index: None,
            timeout_ms: DEFAULT_TIMEOUT_MS,
            expect: None,
        }
    }

    pub fn validate(&self) -> Result<(), TestcaseError> {
        let err = |msg: String| Err(TestcaseError::ConstraintViolation(msg));
        match self.op {
            Op::Update => {
                if self.attribute.is_none() || self.value.is_none() {
                    return err(format!("command {}: update requires attribute and value", self.id));
                }
            }
            Op::Insert => {
                if self.attribute.is_none() || self.value.is_none() {
                    return err(format!("command {}: insert requires attribute and value", self.id));
                }
            }
            Op::Drop => {
                if self.attribute.is_none() {
                    return err(format!("command {}: drop requires attribute", self.id));
                }
            }
            Op::Substitute => {
                if self.substitute_with.is_none() {
                    return err(format!("command {}: substitute requires substitute_with", self.id));
                }
            }
            Op::Replay => {
                if self.replay_index.is_none() {
                    return err(format!("command {}: replay requires replay_index", self.id));
                }
            }
            _ => {}
        }
        match self.receiver {
            Receiver::Ue if !self.op.is_ue_control() => {
                err(format!("command {}: receiver ue admits only reboot/wifi_on/wifi_off", self.id))
            }
            Receiver::Epdg | Receiver::Ims if self.op.is_ue_control() => {
                err(format!("command {}: {} is a ue control operation", self.id, self.op))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestCaseKind {
    Ptc,
    Atc,
}

/// Which transformation produced an adversarial testcase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformDescriptor {
    /// "message" or "attribute".
    pub family: String,
    /// "substitute", "replay", "update" or "drop".
    pub operator: String,
    /// Operator parameter rendered canonically (error name, index,
    /// attribute=value, attribute).
    pub parameter: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub property: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<TransformDescriptor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestCase {
    pub tc_id: String,
    pub kind: TestCaseKind,
    #[serde(default)]
    pub provenance: Provenance,
    pub commands: Vec<Command>,
}

impl TestCase {
    pub fn validate(&self) -> Result<(), TestcaseError> {
        if self.tc_id.is_empty() {
            return Err(TestcaseError::ConstraintViolation("empty tc_id".into()));
        }
        if self.commands.is_empty() {
            return Err(TestcaseError::ConstraintViolation(format!(
                "{}: testcase has no commands",
                self.tc_id
            )));
        }
        for (i, c) in self.commands.iter().enumerate() {
            if c.id != (i + 1) as u32 {
                return Err(TestcaseError::ConstraintViolation(format!(
                    "{}: command at position {} has id {}, expected {}",
                    self.tc_id,
                    i,
                    c.id,
                    i + 1
                )));
            }
            c.validate().map_err(|e| match e {
                TestcaseError::ConstraintViolation(m) => {
                    TestcaseError::ConstraintViolation(format!("{}: {m}", self.tc_id))
                }
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn final_command(&self) -> &Command {
        self.commands.last().expect("validated testcases are non-empty")
    }
}

/// Parse and validate one testcase document.
pub fn parse_testcase(text: &str) -> Result<TestCase, TestcaseError> {
    let tc: TestCase =
        serde_json::from_str(text).map_err(|e| TestcaseError::SchemaViolation(e.to_string()))?;
    tc.validate()?;
    Ok(tc)
}

/// Message-name vocabulary: which entity sends which protocol message.
#[derive(Debug, Clone, Default)]
pub struct MessageVocab {
    senders: HashMap<String, Receiver>,
}

impl MessageVocab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, sender: Receiver) {
        self.senders.insert(name.to_string(), sender);
    }

    pub fn sender(&self, name: &str) -> Option<Receiver> {
        self.senders.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.senders.contains_key(name)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub tc_index: usize,
    pub tc_id: String,
    pub detail: String,
}

/// Corpus-level validation. Returns the violation list instead of failing
/// on the first problem.
pub fn validate_corpus(tcs: &[TestCase], vocab: &MessageVocab) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for (i, tc) in tcs.iter().enumerate() {
        if let Some(&first) = seen.get(tc.tc_id.as_str()) {
            violations.push(Violation {
                tc_index: i,
                tc_id: tc.tc_id.clone(),
                detail: format!("duplicate tc_id (first at index {first})"),
            });
        } else {
            seen.insert(&tc.tc_id, i);
        }
        if let Err(e) = tc.validate() {
            violations.push(Violation { tc_index: i, tc_id: tc.tc_id.clone(), detail: e.to_string() });
            continue;
        }
        for c in &tc.commands {
            if c.op.is_ue_control() {
                continue;
            }
            match vocab.sender(&c.name) {
                None => violations.push(Violation {
                    tc_index: i,
                    tc_id: tc.tc_id.clone(),
                    detail: format!("command {}: unknown message name {}", c.id, c.name),
                }),
                Some(sender) if sender != c.receiver => violations.push(Violation {
                    tc_index: i,
                    tc_id: tc.tc_id.clone(),
                    detail: format!(
                        "command {}: message {} is sent by {}, not {}",
                        c.id, c.name, sender, c.receiver
                    ),
                }),
                _ => {}
            }
        }
    }
    violations
}
