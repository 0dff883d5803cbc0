//! The function and liveness oracles, pure classifiers over run logs.

use serde::{Deserialize, Serialize};

use crate::testcase::{Direction, LogRecord, Receiver, RecordBody};
use crate::testgen::FlowGraph;

use super::OracleError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictKind {
    /// No UE protocol message after the mutated message: correct behavior.
    Ignored,
    /// The UE answered with the message the unmutated flow expects next (or
    /// any non-error message; the conservative default is an alert).
    PositiveResponse,
    /// The UE answered with an error indication.
    NegativeResponse,
}

impl VerdictKind {
    pub fn is_alert(self) -> bool {
        !matches!(self, VerdictKind::Ignored)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    /// Log record sequence numbers backing the classification.
    pub evidence: Vec<u64>,
}

fn final_command_position(records: &[LogRecord]) -> Result<(usize, String), OracleError> {
    records
        .iter()
        .enumerate()
        .rev()
        .find_map(|(i, r)| match (&r.body, r.has_annotation("final_command")) {
            (RecordBody::Command(c), true) => Some((i, c.name.clone())),
            _ => None,
        })
        .ok_or(OracleError::MalformedLog("no final_command marker"))
}

/// Is this record a UE protocol message as observed by a network-side agent?
fn ue_message(r: &LogRecord) -> Option<&crate::testcase::MessageRecord> {
    if r.direction != Direction::Report || r.entity == Receiver::Ue {
        return None;
    }
    r.message().filter(|m| m.sender == Receiver::Ue)
}

/// Classify the UE's reaction to the mutated final command.
pub fn function_oracle(records: &[LogRecord], flow: &FlowGraph) -> Result<Verdict, OracleError> {
    let (marker, final_name) = final_command_position(records)?;
    let expected_next = flow.expected_ue_follow_up(&final_name);
    let after: Vec<&LogRecord> = records[marker + 1..]
        .iter()
        .filter(|r| ue_message(r).is_some())
        .collect();
    if after.is_empty() {
        return Ok(Verdict { kind: VerdictKind::Ignored, evidence: Vec::new() });
    }
    let evidence: Vec<u64> = after.iter().map(|r| r.seq).collect();
    let first = ue_message(after[0]).expect("filtered above");
    if first.error_indication {
        return Ok(Verdict { kind: VerdictKind::NegativeResponse, evidence });
    }
    // a match with the expected next message is the canonical positive case;
    // anything else non-error defaults to positive as well (more alerts,
    // reviewed in the summary)
    let _ = expected_next;
    Ok(Verdict { kind: VerdictKind::PositiveResponse, evidence })
}

/// Did the UE start a fresh handshake during the post-run registration?
pub fn liveness_oracle(records: &[LogRecord]) -> Result<bool, OracleError> {
    if records.is_empty() {
        return Err(OracleError::MalformedLog("empty registration log"));
    }
    Ok(records.iter().any(|r| {
        ue_message(r)
            .and_then(|m| m.name.as_deref())
            .map(|n| n == "ike_sa_init_request")
            .unwrap_or(false)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testcase::{Command, MessageRecord};

    fn flow() -> FlowGraph {
        let def: crate::testgen::FlowDefinition = serde_json::from_str(
            r#"{"start":"s0","edges":[
                {"from":"s0","to":"s1","message":"ike_sa_init_request","sender":"ue"},
                {"from":"s1","to":"s2","message":"ike_sa_init_response","sender":"epdg"},
                {"from":"s2","to":"s3","message":"ike_auth_1_request","sender":"ue"}
            ]}"#,
        )
        .unwrap();
        FlowGraph::build(def).unwrap()
    }

    fn cmd_record(seq: u64, name: &str, is_final: bool) -> LogRecord {
        LogRecord {
            ts_ms: seq,
            tc_id: "t".into(),
            seq,
            direction: Direction::Command,
            entity: Receiver::Epdg,
            body: RecordBody::Command(Command::send(1, Receiver::Epdg, name)),
            annotations: if is_final { vec!["final_command".into()] } else { vec![] },
        }
    }

    fn ue_msg_record(seq: u64, name: &str, error: bool) -> LogRecord {
        LogRecord {
            ts_ms: seq,
            tc_id: "t".into(),
            seq,
            direction: Direction::Report,
            entity: Receiver::Epdg,
            body: RecordBody::Message(MessageRecord {
                sender: Receiver::Ue,
                protocol: "ike".into(),
                transport: "ike".into(),
                name: Some(name.into()),
                detail: vec![],
                error_indication: error,
                hex: "00".into(),
            }),
            annotations: vec![],
        }
    }

    #[test]
    fn silence_is_ignored() {
        let records = vec![cmd_record(0, "ike_sa_init_response", true)];
        let v = function_oracle(&records, &flow()).unwrap();
        assert_eq!(v.kind, VerdictKind::Ignored);
        assert!(v.evidence.is_empty());
    }

    #[test]
    fn expected_follow_up_is_positive() {
        let records = vec![
            cmd_record(0, "ike_sa_init_response", true),
            ue_msg_record(1, "ike_auth_1_request", false),
        ];
        let v = function_oracle(&records, &flow()).unwrap();
        assert_eq!(v.kind, VerdictKind::PositiveResponse);
        assert_eq!(v.evidence, vec![1]);
    }

    #[test]
    fn error_indication_is_negative() {
        let records = vec![
            cmd_record(0, "ike_sa_init_response", true),
            ue_msg_record(1, "notify", true),
        ];
        let v = function_oracle(&records, &flow()).unwrap();
        assert_eq!(v.kind, VerdictKind::NegativeResponse);
    }

    #[test]
    fn messages_before_the_marker_do_not_count() {
        let records = vec![
            ue_msg_record(0, "ike_sa_init_request", false),
            cmd_record(1, "ike_sa_init_response", true),
        ];
        let v = function_oracle(&records, &flow()).unwrap();
        assert_eq!(v.kind, VerdictKind::Ignored);
    }

    #[test]
    fn missing_marker_is_malformed() {
        let records = vec![cmd_record(0, "ike_sa_init_response", false)];
        assert!(matches!(
            function_oracle(&records, &flow()),
            Err(OracleError::MalformedLog(_))
        ));
    }

    #[test]
    fn liveness_checks_only_the_request_emission() {
        let alive = vec![ue_msg_record(0, "ike_sa_init_request", false)];
        assert!(liveness_oracle(&alive).unwrap());
        // progressing further and failing later still passes
        let partial = vec![
            ue_msg_record(0, "ike_sa_init_request", false),
            ue_msg_record(1, "ike_auth_1_request", false),
        ];
        assert!(liveness_oracle(&partial).unwrap());
        let silent = vec![cmd_record(0, "ike_sa_init_response", false)];
        assert!(!liveness_oracle(&silent).unwrap());
        assert!(liveness_oracle(&[]).is_err());
    }
}
