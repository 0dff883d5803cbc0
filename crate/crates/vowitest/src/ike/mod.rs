//! Bit-exact IKEv2 message model. Parsing is tolerant — unknown or garbled
//! payloads are preserved as opaque bytes so adversarial traffic is never
//! dropped by the harness itself — while serialization recomputes every
//! length and next-payload field unless a mutation explicitly overrides the
//! header length.

mod build;
mod parse;
mod proposal;
mod secure;

pub use build::serialize_message;
pub use parse::parse_message;
pub use proposal::{select_proposal, AcceptancePolicy, ChosenTransforms};
pub use secure::{open_message, seal_message, SaCrypto};

use std::fmt;

pub const IKE_HEADER_LEN: usize = 28;
pub const IKE_VERSION: u8 = 0x20;

pub const FLAG_INITIATOR: u8 = 0x08;
pub const FLAG_VERSION: u8 = 0x10;
pub const FLAG_RESPONSE: u8 = 0x20;

/// Notify message types used by the harness (RFC 7296 registry values).
pub mod notify {
    pub const UNSUPPORTED_CRITICAL_PAYLOAD: u16 = 1;
    pub const INVALID_SYNTAX: u16 = 7;
    pub const INVALID_SPI: u16 = 11;
    pub const NO_PROPOSAL_CHOSEN: u16 = 14;
    pub const INVALID_KE_PAYLOAD: u16 = 17;
    pub const AUTHENTICATION_FAILED: u16 = 24;

    pub fn is_error(t: u16) -> bool {
        // error notifications occupy 1..16383
        (1..16384).contains(&t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExchangeType(pub u8);

impl ExchangeType {
    pub const IKE_SA_INIT: ExchangeType = ExchangeType(34);
    pub const IKE_AUTH: ExchangeType = ExchangeType(35);
    pub const CREATE_CHILD_SA: ExchangeType = ExchangeType(36);
    pub const INFORMATIONAL: ExchangeType = ExchangeType(37);
}

impl fmt::Display for ExchangeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::IKE_SA_INIT => write!(f, "IKE_SA_INIT"),
            Self::IKE_AUTH => write!(f, "IKE_AUTH"),
            Self::CREATE_CHILD_SA => write!(f, "CREATE_CHILD_SA"),
            Self::INFORMATIONAL => write!(f, "INFORMATIONAL"),
            ExchangeType(other) => write!(f, "EXCHANGE_{other}"),
        }
    }
}

/// Payload type codes (RFC 7296 §3.2).
pub mod payload_type {
    pub const SA: u8 = 33;
    pub const KE: u8 = 34;
    pub const ID_I: u8 = 35;
    pub const ID_R: u8 = 36;
    pub const AUTH: u8 = 39;
    pub const NONCE: u8 = 40;
    pub const NOTIFY: u8 = 41;
    pub const DELETE: u8 = 42;
    pub const VENDOR: u8 = 43;
    pub const ENCRYPTED: u8 = 46;
    pub const EAP: u8 = 48;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IkeHeader {
    pub spi_i: [u8; 8],
    pub spi_r: [u8; 8],
    pub exchange_type: ExchangeType,
    pub version: u8,
    pub flags: u8,
    pub message_id: u32,
}

impl IkeHeader {
    pub fn new(spi_i: [u8; 8], spi_r: [u8; 8], exchange_type: ExchangeType, flags: u8, message_id: u32) -> Self {
        IkeHeader { spi_i, spi_r, exchange_type, version: IKE_VERSION, flags, message_id }
    }

    pub fn is_initiator(&self) -> bool {
        self.flags & FLAG_INITIATOR != 0
    }

    pub fn is_response(&self) -> bool {
        self.flags & FLAG_RESPONSE != 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformAttribute {
    /// Raw attribute type with the AF bit; 0x800E is the TV key-length.
    pub attr_type: u16,
    pub value: Vec<u8>,
}

impl TransformAttribute {
    pub const KEY_LENGTH: u16 = 0x800E;

    pub fn key_length(bits: u16) -> Self {
        TransformAttribute { attr_type: Self::KEY_LENGTH, value: bits.to_be_bytes().to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transform {
    /// Transform type on the wire: 1 ENCR, 2 PRF, 3 INTEG, 4 DH.
    pub kind: u8,
    pub id: u16,
    pub attributes: Vec<TransformAttribute>,
}

impl Transform {
    pub fn new(kind: u8, id: u16) -> Self {
        Transform { kind, id, attributes: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Proposal {
    pub number: u8,
    /// 1 = IKE, 2 = AH, 3 = ESP.
    pub protocol_id: u8,
    pub spi: Vec<u8>,
    pub transforms: Vec<Transform>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NotifyPayload {
    pub protocol_id: u8,
    pub spi: Vec<u8>,
    pub notify_type: u16,
    pub data: Vec<u8>,
}

impl NotifyPayload {
    pub fn error(notify_type: u16) -> Self {
        NotifyPayload { protocol_id: 0, spi: Vec::new(), notify_type, data: Vec::new() }
    }

    /// INVALID_KE_PAYLOAD carries exactly the 2-octet preferred DH group.
    pub fn invalid_ke(group: u16) -> Self {
        NotifyPayload {
            protocol_id: 0,
            spi: Vec::new(),
            notify_type: notify::INVALID_KE_PAYLOAD,
            data: group.to_be_bytes().to_vec(),
        }
    }

    pub fn ke_group(&self) -> Option<u16> {
        if self.notify_type == notify::INVALID_KE_PAYLOAD && self.data.len() == 2 {
            Some(u16::from_be_bytes([self.data[0], self.data[1]]))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdPayload {
    pub id_type: u8,
    pub data: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthPayload {
    pub method: u8,
    pub data: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeletePayload {
    pub protocol_id: u8,
    pub spi_size: u8,
    pub spis: Vec<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Sa(Vec<Proposal>),
    Ke { group: u16, key_data: Vec<u8> },
    IdI(IdPayload),
    IdR(IdPayload),
    Auth(AuthPayload),
    Nonce(Vec<u8>),
    Notify(NotifyPayload),
    Delete(DeletePayload),
    Vendor(Vec<u8>),
    /// IV | ciphertext | tag; `first_inner` is the type code of the first
    /// payload inside the plaintext chain.
    Encrypted { first_inner: u8, data: Vec<u8> },
    Eap(Vec<u8>),
    /// Anything unrecognized or garbled, preserved verbatim.
    Unknown { ptype: u8, body: Vec<u8> },
}

impl Payload {
    pub fn type_code(&self) -> u8 {
        match self {
            Payload::Sa(_) => payload_type::SA,
            Payload::Ke { .. } => payload_type::KE,
            Payload::IdI(_) => payload_type::ID_I,
            Payload::IdR(_) => payload_type::ID_R,
            Payload::Auth(_) => payload_type::AUTH,
            Payload::Nonce(_) => payload_type::NONCE,
            Payload::Notify(_) => payload_type::NOTIFY,
            Payload::Delete(_) => payload_type::DELETE,
            Payload::Vendor(_) => payload_type::VENDOR,
            Payload::Encrypted { .. } => payload_type::ENCRYPTED,
            Payload::Eap(_) => payload_type::EAP,
            Payload::Unknown { ptype, .. } => *ptype,
        }
    }

    pub fn type_name(&self) -> String {
        match self.type_code() {
            payload_type::SA => "SA".into(),
            payload_type::KE => "KE".into(),
            payload_type::ID_I => "IDi".into(),
            payload_type::ID_R => "IDr".into(),
            payload_type::AUTH => "AUTH".into(),
            payload_type::NONCE => "Nonce".into(),
            payload_type::NOTIFY => "Notify".into(),
            payload_type::DELETE => "Delete".into(),
            payload_type::VENDOR => "Vendor".into(),
            payload_type::ENCRYPTED => "SK".into(),
            payload_type::EAP => "EAP".into(),
            other => format!("Payload{other}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct IkeMessage {
    pub header: IkeHeader,
    pub payloads: Vec<Payload>,
    /// Forces the emitted header length field, leaving everything else
    /// intact. This is the channel the message-length mutation uses.
    pub length_override: Option<u32>,
    /// Captured wire bytes, when this message was parsed from the network.
    pub raw: Option<Vec<u8>>,
}

impl PartialEq for IkeMessage {
    fn eq(&self, other: &Self) -> bool {
        // `raw` is capture metadata, not message structure
        self.header == other.header
            && self.payloads == other.payloads
            && self.length_override == other.length_override
    }
}

impl Eq for IkeMessage {}

impl IkeMessage {
    pub fn new(header: IkeHeader, payloads: Vec<Payload>) -> Self {
        IkeMessage { header, payloads, length_override: None, raw: None }
    }

    pub fn payload(&self, type_code: u8) -> Option<&Payload> {
        self.payloads.iter().find(|p| p.type_code() == type_code)
    }

    pub fn remove_payload(&mut self, type_code: u8) -> bool {
        let before = self.payloads.len();
        self.payloads.retain(|p| p.type_code() != type_code);
        self.payloads.len() != before
    }

    pub fn first_notify_error(&self) -> Option<&NotifyPayload> {
        self.payloads.iter().find_map(|p| match p {
            Payload::Notify(n) if notify::is_error(n.notify_type) => Some(n),
            _ => None,
        })
    }

    pub fn payload_type_names(&self) -> Vec<String> {
        self.payloads.iter().map(|p| p.type_name()).collect()
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum IkeError {
    #[error("message truncated ({0} octets)")]
    Truncated(usize),
    #[error("declared length {declared} does not match buffer {actual}")]
    LengthMismatch { declared: u32, actual: usize },
    #[error("dangling next-payload chain at offset {0}")]
    BadChain(usize),
    #[error("payload too large to serialize")]
    Oversize,
    #[error("no acceptable proposal")]
    NoProposalChosen,
    #[error("message carries no encrypted payload")]
    NotEncrypted,
    #[error(transparent)]
    Crypto(#[from] crate::crypto::CryptoError),
}

/// Render bytes as an offset / hex / ascii dump for logs.
pub fn hexdump(bytes: &[u8]) -> String {
    let mut out = String::new();
    for (i, chunk) in bytes.chunks(16).enumerate() {
        let hex: Vec<String> = chunk.iter().map(|b| format!("{b:02X}")).collect();
        let ascii: String = chunk
            .iter()
            .map(|&b| if (0x20..0x7f).contains(&b) { b as char } else { '.' })
            .collect();
        out.push_str(&format!("{:08X}  {:<47}  {}\n", i * 16, hex.join(" "), ascii));
    }
    out
}
