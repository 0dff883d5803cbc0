//! Serialization. Length and next-payload fields are always recomputed from
//! the structure; the only escape hatch is the message-level length override.

use super::*;

fn push_u16(out: &mut Vec<u8>, v: u16) {
    out.extend_from_slice(&v.to_be_bytes());
}

fn transform_bytes(t: &Transform, last: bool) -> Result<Vec<u8>, IkeError> {
    let mut body = Vec::new();
    body.push(if last { 0 } else { 3 });
    body.push(0);
    let mut attrs = Vec::new();
    for a in &t.attributes {
        if a.attr_type & 0x8000 != 0 {
            // TV format: exactly two value octets
            if a.value.len() != 2 {
                return Err(IkeError::Oversize);
            }
            push_u16(&mut attrs, a.attr_type);
            attrs.extend_from_slice(&a.value);
        } else {
            push_u16(&mut attrs, a.attr_type);
            push_u16(&mut attrs, u16::try_from(a.value.len()).map_err(|_| IkeError::Oversize)?);
            attrs.extend_from_slice(&a.value);
        }
    }
    let len = 8 + attrs.len();
    push_u16(&mut body, u16::try_from(len).map_err(|_| IkeError::Oversize)?);
    body.push(t.kind);
    body.push(0);
    push_u16(&mut body, t.id);
    body.extend_from_slice(&attrs);
    Ok(body)
}

fn proposal_bytes(p: &Proposal, last: bool) -> Result<Vec<u8>, IkeError> {
    let mut transforms = Vec::new();
    for (i, t) in p.transforms.iter().enumerate() {
        transforms.extend_from_slice(&transform_bytes(t, i + 1 == p.transforms.len())?);
    }
    let mut body = Vec::new();
    body.push(if last { 0 } else { 2 });
    body.push(0);
    let len = 8 + p.spi.len() + transforms.len();
    push_u16(&mut body, u16::try_from(len).map_err(|_| IkeError::Oversize)?);
    body.push(p.number);
    body.push(p.protocol_id);
    body.push(u8::try_from(p.spi.len()).map_err(|_| IkeError::Oversize)?);
    body.push(u8::try_from(p.transforms.len()).map_err(|_| IkeError::Oversize)?);
    body.extend_from_slice(&p.spi);
    body.extend_from_slice(&transforms);
    Ok(body)
}

pub(super) fn payload_body(p: &Payload) -> Result<Vec<u8>, IkeError> {
    let mut body = Vec::new();
    match p {
        Payload::Sa(proposals) => {
            for (i, prop) in proposals.iter().enumerate() {
                body.extend_from_slice(&proposal_bytes(prop, i + 1 == proposals.len())?);
            }
        }
        Payload::Ke { group, key_data } => {
            push_u16(&mut body, *group);
            push_u16(&mut body, 0);
            body.extend_from_slice(key_data);
        }
        Payload::IdI(id) | Payload::IdR(id) => {
            body.push(id.id_type);
            body.extend_from_slice(&[0, 0, 0]);
            body.extend_from_slice(&id.data);
        }
        Payload::Auth(a) => {
            body.push(a.method);
            body.extend_from_slice(&[0, 0, 0]);
            body.extend_from_slice(&a.data);
        }
        Payload::Nonce(data) => body.extend_from_slice(data),
        Payload::Notify(n) => {
            body.push(n.protocol_id);
            body.push(u8::try_from(n.spi.len()).map_err(|_| IkeError::Oversize)?);
            push_u16(&mut body, n.notify_type);
            body.extend_from_slice(&n.spi);
            body.extend_from_slice(&n.data);
        }
        Payload::Delete(d) => {
            body.push(d.protocol_id);
            body.push(d.spi_size);
            push_u16(&mut body, u16::try_from(d.spis.len()).map_err(|_| IkeError::Oversize)?);
            for spi in &d.spis {
                body.extend_from_slice(spi);
            }
        }
        Payload::Vendor(data) | Payload::Eap(data) => body.extend_from_slice(data),
        Payload::Encrypted { data, .. } => body.extend_from_slice(data),
        Payload::Unknown { body: b, .. } => body.extend_from_slice(b),
    }
    Ok(body)
}

/// Next-payload code that follows payload `i` in the chain. The encrypted
/// payload instead names the first payload of its inner plaintext chain.
fn next_code(payloads: &[Payload], i: usize) -> u8 {
    match &payloads[i] {
        Payload::Encrypted { first_inner, .. } => *first_inner,
        _ => payloads.get(i + 1).map(|p| p.type_code()).unwrap_or(0),
    }
}

/// Serialize the payload chain only (no IKE header). Used for the plaintext
/// inside an encrypted payload.
pub fn serialize_chain(payloads: &[Payload]) -> Result<Vec<u8>, IkeError> {
    let mut out = Vec::new();
    for (i, p) in payloads.iter().enumerate() {
        let body = payload_body(p)?;
        let len = u16::try_from(4 + body.len()).map_err(|_| IkeError::Oversize)?;
        out.push(next_code(payloads, i));
        out.push(0);
        push_u16(&mut out, len);
        out.extend_from_slice(&body);
    }
    Ok(out)
}

pub fn serialize_message(m: &IkeMessage) -> Result<Vec<u8>, IkeError> {
    let chain = serialize_chain(&m.payloads)?;
    let total = IKE_HEADER_LEN + chain.len();
    let length = m.length_override.unwrap_or(u32::try_from(total).map_err(|_| IkeError::Oversize)?);

    let mut out = Vec::with_capacity(total);
    out.extend_from_slice(&m.header.spi_i);
    out.extend_from_slice(&m.header.spi_r);
    out.push(m.payloads.first().map(|p| p.type_code()).unwrap_or(0));
    out.push(m.header.version);
    out.push(m.header.exchange_type.0);
    out.push(m.header.flags);
    out.extend_from_slice(&m.header.message_id.to_be_bytes());
    out.extend_from_slice(&length.to_be_bytes());
    out.extend_from_slice(&chain);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_only_message_is_28_octets() {
        let m = IkeMessage::new(
            IkeHeader::new([1; 8], [0; 8], ExchangeType::IKE_SA_INIT, FLAG_INITIATOR, 0),
            Vec::new(),
        );
        let bytes = serialize_message(&m).unwrap();
        assert_eq!(bytes.len(), 28);
        assert_eq!(&bytes[24..28], &28u32.to_be_bytes());
        assert_eq!(bytes[16], 0); // no first payload
    }

    #[test]
    fn length_override_is_emitted_verbatim() {
        let mut m = IkeMessage::new(
            IkeHeader::new([1; 8], [2; 8], ExchangeType::IKE_SA_INIT, FLAG_RESPONSE, 0),
            vec![Payload::Nonce(vec![0xAB; 16])],
        );
        m.length_override = Some(9999);
        let bytes = serialize_message(&m).unwrap();
        assert_eq!(&bytes[24..28], &9999u32.to_be_bytes());
        // the rest of the message is untouched
        assert_eq!(bytes.len(), 28 + 4 + 16);
    }

    #[test]
    fn tv_attribute_must_be_two_octets() {
        let mut t = Transform::new(1, 12);
        t.attributes.push(TransformAttribute { attr_type: 0x800E, value: vec![1, 2, 3] });
        let p = Payload::Sa(vec![Proposal { number: 1, protocol_id: 1, spi: vec![], transforms: vec![t] }]);
        assert!(matches!(payload_body(&p), Err(IkeError::Oversize)));
    }
}
