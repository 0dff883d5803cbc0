//! Structured mutation application: dotted attribute paths edited on parsed
//! messages, with lengths and chains recomputed downstream so exactly the
//! targeted field changes.

use crate::eap::{EapAttribute, EapMessage, AT_AUTN, AT_MAC, AT_RAND};
use crate::ike::{payload_type, IkeMessage, Payload};
use crate::sip::{AuthChallenge, SecurityMechanism, SipMessage};
use crate::testcase::CommandValue;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MutateError {
    #[error("unknown attribute: {0}")]
    UnknownAttribute(String),
    #[error("attribute {0} expects a {1} value")]
    WrongValueType(String, &'static str),
    #[error("mutation target {0} not present in message")]
    TargetMissing(String),
}

pub const IKE_UPDATE_ATTRIBUTES: &[&str] = &[
    "security_association.encr",
    "security_association.prf",
    "security_association.integ",
    "security_association.dh",
    "header.version",
    "header.length",
    "header.message_id",
    "nonce",
    "eap.at_mac",
    "eap.at_rand",
    "eap.at_autn",
];

pub const IKE_DROP_ATTRIBUTES: &[&str] = &[
    "security_association",
    "security_association.encr",
    "key_exchange",
    "nonce",
    "auth",
    "eap",
    "eap.at_mac",
    "eap.at_rand",
];

pub const IKE_INSERT_ATTRIBUTES: &[&str] = &["key_exchange", "nonce", "vendor"];

pub const SIP_UPDATE_ATTRIBUTES: &[&str] =
    &["www_authenticate.algorithm", "security_server.ealg", "security_server.alg"];

pub const SIP_DROP_ATTRIBUTES: &[&str] = &["www_authenticate", "security_server"];

pub fn known_attribute(protocol: &str, op: &str, attribute: &str) -> bool {
    match (protocol, op) {
        ("ike", "update") => IKE_UPDATE_ATTRIBUTES.contains(&attribute),
        ("ike", "drop") => IKE_DROP_ATTRIBUTES.contains(&attribute),
        ("ike", "insert") => IKE_INSERT_ATTRIBUTES.contains(&attribute),
        ("sip", "update") => SIP_UPDATE_ATTRIBUTES.contains(&attribute),
        ("sip", "drop") => SIP_DROP_ATTRIBUTES.contains(&attribute),
        _ => false,
    }
}

fn int_value(attr: &str, value: &CommandValue) -> Result<i64, MutateError> {
    value.as_int().ok_or(MutateError::WrongValueType(attr.to_string(), "integer"))
}

/// Transform ids are u16 on the wire; -1 encodes as 0xFFFF.
fn wire_id(v: i64) -> u16 {
    (v as i32 & 0xFFFF) as u16
}

fn set_sa_transform_id(m: &mut IkeMessage, kind: u8, id: u16, attr: &str) -> Result<(), MutateError> {
    let mut touched = false;
    for p in &mut m.payloads {
        if let Payload::Sa(proposals) = p {
            for prop in proposals {
                for t in &mut prop.transforms {
                    if t.kind == kind {
                        t.id = id;
                        touched = true;
                    }
                }
            }
        }
    }
    if touched {
        Ok(())
    } else {
        Err(MutateError::TargetMissing(attr.to_string()))
    }
}

fn edit_eap<F>(m: &mut IkeMessage, attr: &str, f: F) -> Result<(), MutateError>
where
    F: FnOnce(&mut EapMessage) -> Result<(), MutateError>,
{
    for p in &mut m.payloads {
        if let Payload::Eap(bytes) = p {
            let mut eap = EapMessage::parse(bytes)
                .map_err(|_| MutateError::TargetMissing(attr.to_string()))?;
            f(&mut eap)?;
            *bytes = eap.serialize();
            return Ok(());
        }
    }
    Err(MutateError::TargetMissing(attr.to_string()))
}

fn eap_attr_code(name: &str) -> u8 {
    match name {
        "eap.at_mac" => AT_MAC,
        "eap.at_rand" => AT_RAND,
        "eap.at_autn" => AT_AUTN,
        _ => unreachable!("guarded by the attribute vocabulary"),
    }
}

pub fn apply_ike_update(m: &mut IkeMessage, attr: &str, value: &CommandValue) -> Result<(), MutateError> {
    match attr {
        "security_association.encr" => set_sa_transform_id(m, 1, wire_id(int_value(attr, value)?), attr),
        "security_association.prf" => set_sa_transform_id(m, 2, wire_id(int_value(attr, value)?), attr),
        "security_association.integ" => set_sa_transform_id(m, 3, wire_id(int_value(attr, value)?), attr),
        "security_association.dh" => set_sa_transform_id(m, 4, wire_id(int_value(attr, value)?), attr),
        "header.version" => {
            m.header.version = int_value(attr, value)? as u8;
            Ok(())
        }
        "header.length" => {
            m.length_override = Some(int_value(attr, value)? as u32);
            Ok(())
        }
        "header.message_id" => {
            m.header.message_id = int_value(attr, value)? as u32;
            Ok(())
        }
        "nonce" => {
            let octets = value
                .as_octets()
                .ok_or(MutateError::WrongValueType(attr.into(), "octet"))?;
            for p in &mut m.payloads {
                if let Payload::Nonce(data) = p {
                    *data = octets.to_vec();
                    return Ok(());
                }
            }
            Err(MutateError::TargetMissing(attr.to_string()))
        }
        "eap.at_mac" | "eap.at_rand" | "eap.at_autn" => {
            let octets = value
                .as_octets()
                .ok_or(MutateError::WrongValueType(attr.into(), "octet"))?;
            if octets.len() != 16 {
                return Err(MutateError::WrongValueType(attr.into(), "16-octet"));
            }
            let code = eap_attr_code(attr);
            let mut data = [0u8; 16];
            data.copy_from_slice(octets);
            edit_eap(m, attr, |eap| {
                let slot = eap
                    .attributes
                    .iter_mut()
                    .find(|a| a.attr_type == code)
                    .ok_or(MutateError::TargetMissing(attr.to_string()))?;
                *slot = EapAttribute::full(code, &data);
                Ok(())
            })
        }
        other => Err(MutateError::UnknownAttribute(other.to_string())),
    }
}

pub fn apply_ike_drop(m: &mut IkeMessage, attr: &str) -> Result<(), MutateError> {
    let removed = match attr {
        "security_association" => m.remove_payload(payload_type::SA),
        "key_exchange" => m.remove_payload(payload_type::KE),
        "nonce" => m.remove_payload(payload_type::NONCE),
        "auth" => m.remove_payload(payload_type::AUTH),
        "eap" => m.remove_payload(payload_type::EAP),
        "security_association.encr" => {
            let mut touched = false;
            for p in &mut m.payloads {
                if let Payload::Sa(proposals) = p {
                    for prop in proposals {
                        let before = prop.transforms.len();
                        prop.transforms.retain(|t| t.kind != 1);
                        touched |= prop.transforms.len() != before;
                    }
                }
            }
            touched
        }
        "eap.at_mac" | "eap.at_rand" => {
            let code = eap_attr_code(attr);
            return edit_eap(m, attr, |eap| {
                if eap.remove_attribute(code) {
                    Ok(())
                } else {
                    Err(MutateError::TargetMissing(attr.to_string()))
                }
            });
        }
        other => return Err(MutateError::UnknownAttribute(other.to_string())),
    };
    if removed {
        Ok(())
    } else {
        Err(MutateError::TargetMissing(attr.to_string()))
    }
}

/// Insert a payload built from raw octets. For key_exchange the first two
/// octets are the group number, then two reserved, then key data.
pub fn apply_ike_insert(m: &mut IkeMessage, attr: &str, value: &CommandValue) -> Result<(), MutateError> {
    let octets = value
        .as_octets()
        .ok_or(MutateError::WrongValueType(attr.into(), "octet"))?;
    let payload = match attr {
        "key_exchange" => {
            if octets.len() < 4 {
                return Err(MutateError::WrongValueType(attr.into(), "ke-body octet"));
            }
            Payload::Ke {
                group: u16::from_be_bytes([octets[0], octets[1]]),
                key_data: octets[4..].to_vec(),
            }
        }
        "nonce" => Payload::Nonce(octets.to_vec()),
        "vendor" => Payload::Vendor(octets.to_vec()),
        other => return Err(MutateError::UnknownAttribute(other.to_string())),
    };
    m.payloads.push(payload);
    Ok(())
}

pub fn apply_sip_update(m: &mut SipMessage, attr: &str, value: &CommandValue) -> Result<(), MutateError> {
    let text = value
        .as_str()
        .ok_or(MutateError::WrongValueType(attr.into(), "string"))?;
    match attr {
        "www_authenticate.algorithm" => {
            let header = m
                .header("WWW-Authenticate")
                .ok_or(MutateError::TargetMissing(attr.to_string()))?;
            let mut challenge = AuthChallenge::from_header(header)
                .ok_or(MutateError::TargetMissing(attr.to_string()))?;
            challenge.algorithm = text.to_string();
            m.set_header("WWW-Authenticate", &challenge.to_header());
            Ok(())
        }
        "security_server.ealg" | "security_server.alg" => {
            let header = m
                .header("Security-Server")
                .ok_or(MutateError::TargetMissing(attr.to_string()))?;
            let mut list = SecurityMechanism::list_from_value(header);
            if list.is_empty() {
                return Err(MutateError::TargetMissing(attr.to_string()));
            }
            for mech in &mut list {
                if attr.ends_with(".ealg") {
                    mech.ealg = text.to_string();
                } else {
                    mech.alg = text.to_string();
                }
            }
            m.set_header("Security-Server", &SecurityMechanism::list_to_value(&list));
            Ok(())
        }
        other => Err(MutateError::UnknownAttribute(other.to_string())),
    }
}

pub fn apply_sip_drop(m: &mut SipMessage, attr: &str) -> Result<(), MutateError> {
    let removed = match attr {
        "www_authenticate" => m.remove_header("WWW-Authenticate"),
        "security_server" => m.remove_header("Security-Server"),
        other => return Err(MutateError::UnknownAttribute(other.to_string())),
    };
    if removed {
        Ok(())
    } else {
        Err(MutateError::TargetMissing(attr.to_string()))
    }
}
