//! Mutation configuration: the error-message list, per-attribute value sets
//! and droppable attributes. The config is the single source of corpus size;
//! issue tags ride along so the summarizer can map alerts back to findings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::crypto::TransformId;
use crate::mutate::known_attribute;
use crate::testcase::CommandValue;

use super::TransformError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorMessageSpec {
    pub name: String,
    /// "ike" or "sip".
    pub protocol: String,
    /// DH group carried by invalid_ke_payload substitutions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    /// Issue ids keyed by the final-command message this substitution is
    /// diagnostic for.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub issues: BTreeMap<String, Vec<u32>>,
}

impl ErrorMessageSpec {
    /// Name as written into `substitute_with`, group parameter included.
    pub fn wire_name(&self) -> String {
        match &self.group {
            Some(g) => format!("{}({g})", self.name),
            None => self.name.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueSet {
    pub values: Vec<CommandValue>,
    /// Issue ids keyed by the canonical rendering of the value.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub issues: BTreeMap<String, Vec<u32>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DropSpec {
    pub attribute: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub issues: Vec<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MutationConfig {
    /// Protocol spoken by each mutable message name.
    pub message_protocols: BTreeMap<String, String>,
    pub error_messages: Vec<ErrorMessageSpec>,
    /// message -> attribute -> value set.
    pub attribute_value_sets: BTreeMap<String, BTreeMap<String, ValueSet>>,
    /// message -> droppable attributes.
    pub droppable_attributes: BTreeMap<String, Vec<DropSpec>>,
}

impl MutationConfig {
    pub fn parse(text: &str) -> Result<Self, TransformError> {
        let config: MutationConfig =
            serde_json::from_str(text).map_err(|e| TransformError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn protocol_of(&self, message: &str) -> Option<&str> {
        self.message_protocols.get(message).map(String::as_str)
    }

    pub fn validate(&self) -> Result<(), TransformError> {
        for (message, protocol) in &self.message_protocols {
            if protocol != "ike" && protocol != "sip" {
                return Err(TransformError::Config(format!(
                    "message {message}: unknown protocol {protocol}"
                )));
            }
        }
        for spec in &self.error_messages {
            if spec.protocol != "ike" && spec.protocol != "sip" {
                return Err(TransformError::Config(format!(
                    "error message {}: unknown protocol {}",
                    spec.name, spec.protocol
                )));
            }
            if spec.name == "invalid_ke_payload" {
                let group = spec.group.as_deref().ok_or_else(|| {
                    TransformError::Config("invalid_ke_payload entries need a group".into())
                })?;
                TransformId::dh(group)
                    .map_err(|_| TransformError::Config(format!("unknown DH group {group}")))?;
            } else if spec.protocol == "ike" && ike_notify_type(&spec.name).is_none() {
                return Err(TransformError::Config(format!("unknown IKE error {}", spec.name)));
            } else if spec.protocol == "sip" && sip_error_status(&spec.name).is_none() {
                return Err(TransformError::Config(format!("unknown SIP error {}", spec.name)));
            }
        }
        for (message, attrs) in &self.attribute_value_sets {
            let protocol = self.protocol_of(message).ok_or_else(|| {
                TransformError::Config(format!("message {message} has no protocol entry"))
            })?;
            for attr in attrs.keys() {
                if !known_attribute(protocol, "update", attr) {
                    return Err(TransformError::Config(format!(
                        "{message}: attribute {attr} not in the {protocol} update vocabulary"
                    )));
                }
            }
        }
        for (message, drops) in &self.droppable_attributes {
            let protocol = self.protocol_of(message).ok_or_else(|| {
                TransformError::Config(format!("message {message} has no protocol entry"))
            })?;
            for d in drops {
                if !known_attribute(protocol, "drop", &d.attribute) {
                    return Err(TransformError::Config(format!(
                        "{message}: attribute {} not in the {protocol} drop vocabulary",
                        d.attribute
                    )));
                }
            }
        }
        Ok(())
    }
}

/// IKE error names to notify types. `payload_malformed` maps to
/// INVALID_SYNTAX, the IKEv2 equivalent.
pub fn ike_notify_type(name: &str) -> Option<u16> {
    use crate::ike::notify;
    match name {
        "invalid_spi" => Some(notify::INVALID_SPI),
        "no_proposal_chosen" => Some(notify::NO_PROPOSAL_CHOSEN),
        "payload_malformed" => Some(notify::INVALID_SYNTAX),
        "authentication_failed" => Some(notify::AUTHENTICATION_FAILED),
        "invalid_ke_payload" => Some(notify::INVALID_KE_PAYLOAD),
        _ => None,
    }
}

pub fn sip_error_status(name: &str) -> Option<(u16, &'static str)> {
    match name {
        "sip_400_bad_request" => Some((400, "Bad Request")),
        "sip_403_forbidden" => Some((403, "Forbidden")),
        "sip_423_interval_too_brief" => Some((423, "Interval Too Brief")),
        _ => None,
    }
}

/// Parsed form of a `substitute_with` directive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubstituteKind {
    IkeNotify { notify_type: u16, group: Option<TransformId> },
    SipStatus { code: u16, reason: &'static str },
}

pub fn parse_substitute(wire_name: &str) -> Option<SubstituteKind> {
    if let Some((name, rest)) = wire_name.split_once('(') {
        let group_name = rest.strip_suffix(')')?;
        let group = TransformId::dh(group_name).ok()?;
        return Some(SubstituteKind::IkeNotify {
            notify_type: ike_notify_type(name)?,
            group: Some(group),
        });
    }
    if let Some((code, reason)) = sip_error_status(wire_name) {
        return Some(SubstituteKind::SipStatus { code, reason });
    }
    ike_notify_type(wire_name).map(|notify_type| SubstituteKind::IkeNotify { notify_type, group: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitute_names_parse() {
        assert_eq!(
            parse_substitute("invalid_spi"),
            Some(SubstituteKind::IkeNotify { notify_type: 11, group: None })
        );
        match parse_substitute("invalid_ke_payload(MODP_768)") {
            Some(SubstituteKind::IkeNotify { notify_type: 17, group: Some(g) }) => {
                assert_eq!(g.name(), "MODP_768")
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(
            parse_substitute("sip_403_forbidden"),
            Some(SubstituteKind::SipStatus { code: 403, reason: "Forbidden" })
        );
        assert_eq!(parse_substitute("mystery"), None);
        assert_eq!(parse_substitute("invalid_ke_payload(MODP_9999)"), None);
    }

    #[test]
    fn config_validation_catches_unknown_attributes() {
        let text = r#"{
            "message_protocols": {"ike_sa_init_response": "ike"},
            "error_messages": [],
            "attribute_value_sets": {
                "ike_sa_init_response": {"security_association.bogus": {"values": [1]}}
            },
            "droppable_attributes": {}
        }"#;
        assert!(matches!(MutationConfig::parse(text), Err(TransformError::Config(_))));
    }

    #[test]
    fn config_requires_group_on_invalid_ke() {
        let text = r#"{
            "message_protocols": {},
            "error_messages": [{"name": "invalid_ke_payload", "protocol": "ike"}],
            "attribute_value_sets": {},
            "droppable_attributes": {}
        }"#;
        assert!(matches!(MutationConfig::parse(text), Err(TransformError::Config(_))));
    }
}
