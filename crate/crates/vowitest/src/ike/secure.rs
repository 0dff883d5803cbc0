//! Sealing and opening of IKE messages. The integrity tag covers the whole
//! message from the header through the ciphertext, so header tampering after
//! sealing is detected by the receiver.

use crate::crypto::{open_with_aad, seal_with_aad, IkeKeyBundle, TransformId};

use super::build::{serialize_chain, serialize_message};
use super::parse::parse_chain;
use super::*;

/// Negotiated algorithms plus key bundle for one SA direction pair.
#[derive(Debug, Clone)]
pub struct SaCrypto {
    pub encr: TransformId,
    pub integ: TransformId,
    pub keys: IkeKeyBundle,
}

impl SaCrypto {
    fn dir_keys(&self, from_initiator: bool) -> (&[u8], &[u8]) {
        if from_initiator {
            (&self.keys.sk_ei, &self.keys.sk_ai)
        } else {
            (&self.keys.sk_er, &self.keys.sk_ar)
        }
    }
}

fn sk_header_and_aad(m: &IkeMessage, first_inner: u8, sk_data_len: usize) -> Result<Vec<u8>, IkeError> {
    let shell = IkeMessage {
        header: m.header.clone(),
        payloads: vec![Payload::Encrypted { first_inner, data: vec![0u8; sk_data_len] }],
        length_override: m.length_override,
        raw: None,
    };
    let mut bytes = serialize_message(&shell)?;
    bytes.truncate(IKE_HEADER_LEN + 4);
    Ok(bytes)
}

/// Wrap all payloads of `m` into a single encrypted payload.
pub fn seal_message(
    m: &IkeMessage,
    sa: &SaCrypto,
    from_initiator: bool,
    iv_seed: &[u8],
) -> Result<IkeMessage, IkeError> {
    if m.payloads.iter().any(|p| matches!(p, Payload::Encrypted { .. })) {
        return Err(IkeError::NotEncrypted);
    }
    let inner = serialize_chain(&m.payloads)?;
    let first_inner = m.payloads.first().map(|p| p.type_code()).unwrap_or(0);
    let (sk_e, sk_a) = sa.dir_keys(from_initiator);

    // sealed length is deterministic: IV + padded plaintext + tag
    let bs = sa.encr.output_len();
    let pad_len = (bs - (inner.len() + 1) % bs) % bs;
    let sk_data_len = bs + inner.len() + pad_len + 1 + sa.integ.output_len();

    let aad = sk_header_and_aad(m, first_inner, sk_data_len)?;
    let data = seal_with_aad(sa.encr, sa.integ, sk_e, sk_a, &aad, &inner, iv_seed)?;
    debug_assert_eq!(data.len(), sk_data_len);

    Ok(IkeMessage {
        header: m.header.clone(),
        payloads: vec![Payload::Encrypted { first_inner, data }],
        length_override: m.length_override,
        raw: None,
    })
}

/// Invert [`seal_message`]: verify the tag, decrypt, and parse the inner
/// payload chain.
pub fn open_message(m: &IkeMessage, sa: &SaCrypto, from_initiator: bool) -> Result<IkeMessage, IkeError> {
    let (first_inner, data) = match (m.payloads.len(), m.payloads.first()) {
        (1, Some(Payload::Encrypted { first_inner, data })) => (*first_inner, data),
        _ => return Err(IkeError::NotEncrypted),
    };
    let (sk_e, sk_a) = sa.dir_keys(from_initiator);
    let aad = sk_header_and_aad(m, first_inner, data.len())?;
    let inner = open_with_aad(sa.encr, sa.integ, sk_e, sk_a, &aad, data)?;
    let payloads = parse_chain(&inner, first_inner)?;
    Ok(IkeMessage {
        header: m.header.clone(),
        payloads,
        length_override: None,
        raw: m.raw.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{derive_ike_keys, KeyLengths};

    fn sa(prf_shared: &[u8]) -> SaCrypto {
        let encr = TransformId::encr("ENCR_AES_CBC_128").unwrap();
        let integ = TransformId::integ("AUTH_HMAC_SHA1_96").unwrap();
        let prf = TransformId::prf("PRF_HMAC_SHA1").unwrap();
        let keys = derive_ike_keys(
            prf,
            &[1; 16],
            &[2; 16],
            prf_shared,
            &[3; 8],
            &[4; 8],
            KeyLengths::for_transforms(encr, integ, prf),
        )
        .unwrap();
        SaCrypto { encr, integ, keys }
    }

    fn ike_auth_request() -> IkeMessage {
        IkeMessage::new(
            IkeHeader::new([3; 8], [4; 8], ExchangeType::IKE_AUTH, FLAG_INITIATOR, 1),
            vec![
                Payload::IdI(IdPayload { id_type: 3, data: b"001010123456789".to_vec() }),
                Payload::IdR(IdPayload { id_type: 2, data: b"ims".to_vec() }),
            ],
        )
    }

    #[test]
    fn seal_open_round_trip() {
        let sa = sa(&[7; 32]);
        let m = ike_auth_request();
        let sealed = seal_message(&m, &sa, true, b"msg1").unwrap();
        assert_eq!(sealed.payloads.len(), 1);
        // full wire round trip
        let bytes = serialize_message(&sealed).unwrap();
        let reparsed = parse_message(&bytes).unwrap();
        let opened = open_message(&reparsed, &sa, true).unwrap();
        assert_eq!(opened.payloads, m.payloads);
        assert_eq!(opened.header, m.header);
    }

    #[test]
    fn zero_secret_bundle_reveals_imsi() {
        // the vulnerable-UE path: keys derived from an all-zero shared secret
        let zero = vec![0u8; 256];
        let ue = sa(&zero);
        let sealed = seal_message(&ike_auth_request(), &ue, true, b"msg1").unwrap();
        let attacker = sa(&zero);
        let opened = open_message(&sealed, &attacker, true).unwrap();
        match &opened.payloads[0] {
            Payload::IdI(id) => assert_eq!(id.data, b"001010123456789"),
            other => panic!("expected IdI, got {other:?}"),
        }
    }

    #[test]
    fn wrong_bundle_fails_integrity() {
        let sa_good = sa(&[7; 32]);
        let sa_bad = sa(&[8; 32]);
        let sealed = seal_message(&ike_auth_request(), &sa_good, true, b"msg1").unwrap();
        assert!(matches!(
            open_message(&sealed, &sa_bad, true),
            Err(IkeError::Crypto(crate::crypto::CryptoError::IntegrityFailure))
        ));
    }

    #[test]
    fn header_tamper_after_sealing_is_detected() {
        let sa = sa(&[7; 32]);
        let mut sealed = seal_message(&ike_auth_request(), &sa, true, b"msg1").unwrap();
        sealed.header.version = 0x30;
        assert!(open_message(&sealed, &sa, true).is_err());
    }

    #[test]
    fn open_requires_encrypted_payload() {
        let sa = sa(&[7; 32]);
        assert!(matches!(
            open_message(&ike_auth_request(), &sa, true),
            Err(IkeError::NotEncrypted)
        ));
    }

    #[test]
    fn direction_keys_differ() {
        let sa = sa(&[7; 32]);
        let m = ike_auth_request();
        let from_i = seal_message(&m, &sa, true, b"x").unwrap();
        // opening with the responder direction fails
        assert!(open_message(&from_i, &sa, false).is_err());
    }
}
