//! EAP-AKA packet codec: the challenge/response payloads carried inside
//! IKE_AUTH exchanges, with AT_MAC computation over the packet.

use hmac::{Hmac, Mac};
use sha1::Sha1;

pub const EAP_TYPE_AKA: u8 = 23;

pub const AT_RAND: u8 = 1;
pub const AT_AUTN: u8 = 2;
pub const AT_RES: u8 = 3;
pub const AT_MAC: u8 = 11;
pub const AT_CLIENT_ERROR_CODE: u8 = 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EapCode {
    Request,
    Response,
    Success,
    Failure,
}

impl EapCode {
    pub fn to_u8(self) -> u8 {
        match self {
            EapCode::Request => 1,
            EapCode::Response => 2,
            EapCode::Success => 3,
            EapCode::Failure => 4,
        }
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            1 => Some(EapCode::Request),
            2 => Some(EapCode::Response),
            3 => Some(EapCode::Success),
            4 => Some(EapCode::Failure),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AkaSubtype {
    Challenge,
    ClientError,
    Other(u8),
}

impl AkaSubtype {
    pub fn to_u8(self) -> u8 {
        match self {
            AkaSubtype::Challenge => 1,
            AkaSubtype::ClientError => 14,
            AkaSubtype::Other(v) => v,
        }
    }

    pub fn from_u8(v: u8) -> Self {
        match v {
            1 => AkaSubtype::Challenge,
            14 => AkaSubtype::ClientError,
            other => AkaSubtype::Other(other),
        }
    }
}

/// One TLV attribute; `value` excludes the two-octet type/length prefix but
/// includes any reserved bytes, so re-serialization is exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EapAttribute {
    pub attr_type: u8,
    pub value: Vec<u8>,
}

impl EapAttribute {
    /// Full-length attribute: 2 reserved octets then 16 octets of data.
    pub fn full(attr_type: u8, data: &[u8; 16]) -> Self {
        let mut value = vec![0u8, 0u8];
        value.extend_from_slice(data);
        EapAttribute { attr_type, value }
    }

    /// AT_RES: RES bit length, then RES padded to a 4-octet boundary.
    pub fn res(res: &[u8]) -> Self {
        let mut value = ((res.len() * 8) as u16).to_be_bytes().to_vec();
        value.extend_from_slice(res);
        while (value.len() + 2) % 4 != 0 {
            value.push(0);
        }
        EapAttribute { attr_type: AT_RES, value }
    }

    /// Extract the 16-octet payload of a full-length attribute.
    pub fn data16(&self) -> Option<[u8; 16]> {
        if self.value.len() != 18 {
            return None;
        }
        let mut out = [0u8; 16];
        out.copy_from_slice(&self.value[2..]);
        Some(out)
    }

    /// Extract the RES bytes of an AT_RES attribute.
    pub fn res_data(&self) -> Option<Vec<u8>> {
        if self.value.len() < 2 {
            return None;
        }
        let bits = u16::from_be_bytes([self.value[0], self.value[1]]) as usize;
        let n = bits / 8;
        self.value.get(2..2 + n).map(|s| s.to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EapMessage {
    pub code: EapCode,
    pub identifier: u8,
    /// Present for Request/Response packets; Success/Failure carry neither
    /// type nor subtype.
    pub subtype: Option<AkaSubtype>,
    pub attributes: Vec<EapAttribute>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EapError {
    #[error("eap packet truncated")]
    Truncated,
    #[error("eap length field inconsistent")]
    LengthMismatch,
    #[error("unknown eap code {0}")]
    UnknownCode(u8),
    #[error("unsupported eap method type {0}")]
    UnsupportedType(u8),
}

impl EapMessage {
    pub fn success(identifier: u8) -> Self {
        EapMessage { code: EapCode::Success, identifier, subtype: None, attributes: Vec::new() }
    }

    pub fn failure(identifier: u8) -> Self {
        EapMessage { code: EapCode::Failure, identifier, subtype: None, attributes: Vec::new() }
    }

    pub fn attribute(&self, attr_type: u8) -> Option<&EapAttribute> {
        self.attributes.iter().find(|a| a.attr_type == attr_type)
    }

    pub fn remove_attribute(&mut self, attr_type: u8) -> bool {
        let before = self.attributes.len();
        self.attributes.retain(|a| a.attr_type != attr_type);
        self.attributes.len() != before
    }

    pub fn serialize(&self) -> Vec<u8> {
        let mut out = vec![self.code.to_u8(), self.identifier, 0, 0];
        if let Some(subtype) = self.subtype {
            out.push(EAP_TYPE_AKA);
            out.push(subtype.to_u8());
            out.extend_from_slice(&[0, 0]);
            for attr in &self.attributes {
                out.push(attr.attr_type);
                out.push(((attr.value.len() + 2) / 4) as u8);
                out.extend_from_slice(&attr.value);
            }
        }
        let len = out.len() as u16;
        out[2..4].copy_from_slice(&len.to_be_bytes());
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, EapError> {
        if bytes.len() < 4 {
            return Err(EapError::Truncated);
        }
        let code = EapCode::from_u8(bytes[0]).ok_or(EapError::UnknownCode(bytes[0]))?;
        let identifier = bytes[1];
        let declared = u16::from_be_bytes([bytes[2], bytes[3]]) as usize;
        if declared != bytes.len() {
            return Err(EapError::LengthMismatch);
        }
        if matches!(code, EapCode::Success | EapCode::Failure) {
            return Ok(EapMessage { code, identifier, subtype: None, attributes: Vec::new() });
        }
        if bytes.len() < 8 {
            return Err(EapError::Truncated);
        }
        if bytes[4] != EAP_TYPE_AKA {
            return Err(EapError::UnsupportedType(bytes[4]));
        }
        let subtype = AkaSubtype::from_u8(bytes[5]);
        let mut attributes = Vec::new();
        let mut off = 8;
        while off < bytes.len() {
            if off + 2 > bytes.len() {
                return Err(EapError::Truncated);
            }
            let attr_type = bytes[off];
            let units = bytes[off + 1] as usize;
            if units == 0 || off + units * 4 > bytes.len() {
                return Err(EapError::Truncated);
            }
            attributes.push(EapAttribute {
                attr_type,
                value: bytes[off + 2..off + units * 4].to_vec(),
            });
            off += units * 4;
        }
        Ok(EapMessage { code, identifier, subtype: Some(subtype), attributes })
    }

    /// Compute AT_MAC: HMAC-SHA1 over the serialized packet with the MAC
    /// field zeroed, truncated to 16 octets.
    pub fn compute_mac(&self, k_aut: &[u8]) -> [u8; 16] {
        let mut copy = self.clone();
        for attr in &mut copy.attributes {
            if attr.attr_type == AT_MAC {
                attr.value = vec![0u8; attr.value.len()];
            }
        }
        let bytes = copy.serialize();
        let mut mac = Hmac::<Sha1>::new_from_slice(k_aut).expect("any key length");
        mac.update(&bytes);
        let full = mac.finalize().into_bytes();
        let mut out = [0u8; 16];
        out.copy_from_slice(&full[..16]);
        out
    }

    /// Append an AT_MAC attribute computed with `k_aut`.
    pub fn with_mac(mut self, k_aut: &[u8]) -> Self {
        self.attributes.push(EapAttribute::full(AT_MAC, &[0u8; 16]));
        let mac = self.compute_mac(k_aut);
        let slot = self.attributes.last_mut().expect("just pushed");
        slot.value[2..].copy_from_slice(&mac);
        self
    }

    pub fn verify_mac(&self, k_aut: &[u8]) -> bool {
        match self.attribute(AT_MAC).and_then(|a| a.data16()) {
            Some(mac) => self.compute_mac(k_aut) == mac,
            None => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn challenge() -> EapMessage {
        EapMessage {
            code: EapCode::Request,
            identifier: 1,
            subtype: Some(AkaSubtype::Challenge),
            attributes: vec![
                EapAttribute::full(AT_RAND, &[0xAA; 16]),
                EapAttribute::full(AT_AUTN, &[0xBB; 16]),
            ],
        }
        .with_mac(b"0123456789abcdef")
    }

    #[test]
    fn round_trip() {
        let m = challenge();
        let bytes = m.serialize();
        let parsed = EapMessage::parse(&bytes).unwrap();
        assert_eq!(parsed, m);
    }

    #[test]
    fn mac_verifies_and_rejects_tamper() {
        let m = challenge();
        assert!(m.verify_mac(b"0123456789abcdef"));
        assert!(!m.verify_mac(b"0123456789abcdeX"));
        let mut bytes = m.serialize();
        // flip one bit of AT_RAND
        bytes[10] ^= 1;
        let tampered = EapMessage::parse(&bytes).unwrap();
        assert!(!tampered.verify_mac(b"0123456789abcdef"));
    }

    #[test]
    fn res_attribute_round_trips() {
        let attr = EapAttribute::res(&[1, 2, 3, 4, 5, 6, 7, 8]);
        assert_eq!(attr.res_data().unwrap(), vec![1, 2, 3, 4, 5, 6, 7, 8]);
        // padded length is a multiple of 4 including the 2-octet header
        assert_eq!((attr.value.len() + 2) % 4, 0);
    }

    #[test]
    fn success_packet_is_four_octets() {
        let m = EapMessage::success(3);
        assert_eq!(m.serialize(), vec![3, 3, 0, 4]);
        assert_eq!(EapMessage::parse(&[3, 3, 0, 4]).unwrap(), m);
    }

    #[test]
    fn length_mismatch_rejected() {
        let mut bytes = challenge().serialize();
        bytes[3] ^= 0x10;
        assert_eq!(EapMessage::parse(&bytes), Err(EapError::LengthMismatch));
    }

    #[test]
    fn removing_mac_changes_packet() {
        let mut m = challenge();
        assert!(m.remove_attribute(AT_MAC));
        assert!(m.attribute(AT_MAC).is_none());
        assert!(!m.verify_mac(b"0123456789abcdef"));
    }
}
