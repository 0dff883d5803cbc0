//! Message parsing. Frame-level problems (truncation, length mismatch, a
//! dangling chain) are errors; anything wrong *inside* a payload body
//! degrades to `Payload::Unknown` so the harness can log it verbatim.

use super::*;

fn parse_proposals(body: &[u8]) -> Option<Vec<Proposal>> {
    let mut proposals = Vec::new();
    let mut off = 0;
    loop {
        if body.len() < off + 8 {
            return None;
        }
        let more = body[off];
        let plen = u16::from_be_bytes([body[off + 2], body[off + 3]]) as usize;
        if plen < 8 || off + plen > body.len() {
            return None;
        }
        let number = body[off + 4];
        let protocol_id = body[off + 5];
        let spi_size = body[off + 6] as usize;
        let n_transforms = body[off + 7] as usize;
        if 8 + spi_size > plen {
            return None;
        }
        let spi = body[off + 8..off + 8 + spi_size].to_vec();

        let mut transforms = Vec::new();
        let mut t_off = off + 8 + spi_size;
        let p_end = off + plen;
        for _ in 0..n_transforms {
            if p_end < t_off + 8 {
                return None;
            }
            let t_len = u16::from_be_bytes([body[t_off + 2], body[t_off + 3]]) as usize;
            if t_len < 8 || t_off + t_len > p_end {
                return None;
            }
            let kind = body[t_off + 4];
            let id = u16::from_be_bytes([body[t_off + 6], body[t_off + 7]]);
            let mut attributes = Vec::new();
            let mut a_off = t_off + 8;
            let t_end = t_off + t_len;
            while a_off < t_end {
                if t_end < a_off + 4 {
                    return None;
                }
                let attr_type = u16::from_be_bytes([body[a_off], body[a_off + 1]]);
                if attr_type & 0x8000 != 0 {
                    attributes.push(TransformAttribute {
                        attr_type,
                        value: body[a_off + 2..a_off + 4].to_vec(),
                    });
                    a_off += 4;
                } else {
                    let v_len = u16::from_be_bytes([body[a_off + 2], body[a_off + 3]]) as usize;
                    if a_off + 4 + v_len > t_end {
                        return None;
                    }
                    attributes.push(TransformAttribute {
                        attr_type,
                        value: body[a_off + 4..a_off + 4 + v_len].to_vec(),
                    });
                    a_off += 4 + v_len;
                }
            }
            transforms.push(Transform { kind, id, attributes });
            t_off = t_end;
        }
        if t_off != p_end {
            return None;
        }
        proposals.push(Proposal { number, protocol_id, spi, transforms });
        off = p_end;
        match more {
            0 => break,
            2 => continue,
            _ => return None,
        }
    }
    if off != body.len() {
        return None;
    }
    Some(proposals)
}

fn parse_body(ptype: u8, next: u8, body: &[u8]) -> Option<Payload> {
    match ptype {
        payload_type::SA => parse_proposals(body).map(Payload::Sa),
        payload_type::KE => {
            if body.len() < 4 {
                return None;
            }
            Some(Payload::Ke {
                group: u16::from_be_bytes([body[0], body[1]]),
                key_data: body[4..].to_vec(),
            })
        }
        payload_type::ID_I | payload_type::ID_R => {
            if body.len() < 4 {
                return None;
            }
            let id = IdPayload { id_type: body[0], data: body[4..].to_vec() };
            Some(if ptype == payload_type::ID_I { Payload::IdI(id) } else { Payload::IdR(id) })
        }
        payload_type::AUTH => {
            if body.len() < 4 {
                return None;
            }
            Some(Payload::Auth(AuthPayload { method: body[0], data: body[4..].to_vec() }))
        }
        payload_type::NONCE => Some(Payload::Nonce(body.to_vec())),
        payload_type::NOTIFY => {
            if body.len() < 4 {
                return None;
            }
            let spi_size = body[1] as usize;
            if body.len() < 4 + spi_size {
                return None;
            }
            Some(Payload::Notify(NotifyPayload {
                protocol_id: body[0],
                notify_type: u16::from_be_bytes([body[2], body[3]]),
                spi: body[4..4 + spi_size].to_vec(),
                data: body[4 + spi_size..].to_vec(),
            }))
        }
        payload_type::DELETE => {
            if body.len() < 4 {
                return None;
            }
            let spi_size = body[1] as usize;
            let count = u16::from_be_bytes([body[2], body[3]]) as usize;
            if body.len() != 4 + spi_size * count {
                return None;
            }
            let spis = (0..count)
                .map(|i| body[4 + i * spi_size..4 + (i + 1) * spi_size].to_vec())
                .collect();
            Some(Payload::Delete(DeletePayload { protocol_id: body[0], spi_size: spi_size as u8, spis }))
        }
        payload_type::VENDOR => Some(Payload::Vendor(body.to_vec())),
        payload_type::ENCRYPTED => Some(Payload::Encrypted { first_inner: next, data: body.to_vec() }),
        payload_type::EAP => Some(Payload::Eap(body.to_vec())),
        _ => None,
    }
}

/// Parse a payload chain starting with payload type `first`. Used both for
/// the outer message and for decrypted inner chains.
pub(super) fn parse_chain(bytes: &[u8], first: u8) -> Result<Vec<Payload>, IkeError> {
    let mut payloads = Vec::new();
    let mut next = first;
    let mut off = 0;
    while next != 0 {
        if bytes.len() < off + 4 {
            return Err(IkeError::BadChain(off));
        }
        let following = bytes[off];
        let plen = u16::from_be_bytes([bytes[off + 2], bytes[off + 3]]) as usize;
        if plen < 4 || off + plen > bytes.len() {
            return Err(IkeError::BadChain(off));
        }
        let body = &bytes[off + 4..off + plen];
        let payload = parse_body(next, following, body)
            .unwrap_or(Payload::Unknown { ptype: next, body: body.to_vec() });
        let is_encrypted = matches!(payload, Payload::Encrypted { .. });
        payloads.push(payload);
        off += plen;
        // the encrypted payload terminates the outer chain; its next field
        // names the first *inner* payload
        next = if is_encrypted { 0 } else { following };
    }
    if off != bytes.len() {
        return Err(IkeError::BadChain(off));
    }
    Ok(payloads)
}

pub fn parse_message(bytes: &[u8]) -> Result<IkeMessage, IkeError> {
    if bytes.len() < IKE_HEADER_LEN {
        return Err(IkeError::Truncated(bytes.len()));
    }
    let declared = u32::from_be_bytes([bytes[24], bytes[25], bytes[26], bytes[27]]);
    if declared as usize != bytes.len() {
        return Err(IkeError::LengthMismatch { declared, actual: bytes.len() });
    }
    let mut spi_i = [0u8; 8];
    let mut spi_r = [0u8; 8];
    spi_i.copy_from_slice(&bytes[0..8]);
    spi_r.copy_from_slice(&bytes[8..16]);
    let header = IkeHeader {
        spi_i,
        spi_r,
        version: bytes[17],
        exchange_type: ExchangeType(bytes[18]),
        flags: bytes[19],
        message_id: u32::from_be_bytes([bytes[20], bytes[21], bytes[22], bytes[23]]),
    };
    let payloads = parse_chain(&bytes[IKE_HEADER_LEN..], bytes[16])?;
    Ok(IkeMessage { header, payloads, length_override: None, raw: Some(bytes.to_vec()) })
}

#[cfg(test)]
mod tests {
    use super::super::build::serialize_message;
    use super::*;

    fn sample_sa_init() -> IkeMessage {
        let proposal = Proposal {
            number: 1,
            protocol_id: 1,
            spi: Vec::new(),
            transforms: vec![
                Transform {
                    kind: 1,
                    id: 12,
                    attributes: vec![TransformAttribute::key_length(128)],
                },
                Transform::new(2, 2),
                Transform::new(3, 2),
                Transform::new(4, 14),
            ],
        };
        IkeMessage::new(
            IkeHeader::new([0x11; 8], [0; 8], ExchangeType::IKE_SA_INIT, FLAG_INITIATOR, 0),
            vec![
                Payload::Sa(vec![proposal]),
                Payload::Ke { group: 14, key_data: vec![0xCD; 256] },
                Payload::Nonce(vec![0xEF; 16]),
            ],
        )
    }

    #[test]
    fn sa_init_round_trip_and_layout() {
        let m = sample_sa_init();
        let bytes = serialize_message(&m).unwrap();
        // hand-computed layout: header, then SA payload
        assert_eq!(bytes[16], payload_type::SA, "first payload code in header");
        assert_eq!(bytes[17], 0x20, "version");
        assert_eq!(bytes[18], 34, "exchange type");
        assert_eq!(bytes[19], FLAG_INITIATOR);
        // SA generic header: next = KE(34), len = 4 + proposal
        assert_eq!(bytes[28], payload_type::KE);
        let sa_len = u16::from_be_bytes([bytes[30], bytes[31]]) as usize;
        // proposal: 8 hdr + transforms: (8+4) + 8 + 8 + 8 = 36 -> 44; SA = 48
        assert_eq!(sa_len, 48);
        // KE payload: next = Nonce(40), group on the wire
        let ke_off = 28 + sa_len;
        assert_eq!(bytes[ke_off], payload_type::NONCE);
        assert_eq!(u16::from_be_bytes([bytes[ke_off + 4], bytes[ke_off + 5]]), 14);

        let parsed = parse_message(&bytes).unwrap();
        assert_eq!(parsed, m);
        assert_eq!(parsed.payloads.len(), 3);
        assert_eq!(parsed.header.exchange_type, ExchangeType::IKE_SA_INIT);
        assert_eq!(parsed.raw.as_deref(), Some(bytes.as_slice()));
    }

    #[test]
    fn truncated_below_header() {
        assert_eq!(parse_message(&[0u8; 27]), Err(IkeError::Truncated(27)));
    }

    #[test]
    fn declared_length_must_match() {
        let mut bytes = serialize_message(&sample_sa_init()).unwrap();
        bytes[27] ^= 1;
        assert!(matches!(parse_message(&bytes), Err(IkeError::LengthMismatch { .. })));
    }

    #[test]
    fn dangling_chain_detected() {
        let mut m = sample_sa_init();
        m.payloads = vec![Payload::Nonce(vec![1, 2, 3])];
        let mut bytes = serialize_message(&m).unwrap();
        // claim another payload follows the nonce
        bytes[28] = payload_type::KE;
        assert!(matches!(parse_message(&bytes), Err(IkeError::BadChain(_))));
    }

    #[test]
    fn garbled_sa_becomes_unknown() {
        let m = IkeMessage::new(
            IkeHeader::new([1; 8], [2; 8], ExchangeType::IKE_SA_INIT, FLAG_RESPONSE, 0),
            vec![Payload::Unknown { ptype: payload_type::SA, body: vec![0xFF, 0x00, 0x00] }],
        );
        let bytes = serialize_message(&m).unwrap();
        let parsed = parse_message(&bytes).unwrap();
        assert!(matches!(parsed.payloads[0], Payload::Unknown { ptype: 33, .. }));
    }

    #[test]
    fn unknown_payload_type_preserved() {
        let m = IkeMessage::new(
            IkeHeader::new([1; 8], [2; 8], ExchangeType::INFORMATIONAL, 0, 7),
            vec![Payload::Unknown { ptype: 201, body: vec![9, 9, 9] }],
        );
        let bytes = serialize_message(&m).unwrap();
        let parsed = parse_message(&bytes).unwrap();
        assert_eq!(parsed, m);
    }
}
