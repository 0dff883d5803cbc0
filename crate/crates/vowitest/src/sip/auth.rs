//! Digest challenge parsing and response computation.

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use md5::{Digest, Md5};

use super::SipError;

pub const DIGEST_ALGORITHM_AKA: &str = "AKAv1-MD5";
pub const DIGEST_ALGORITHM_MD5: &str = "MD5";

/// The negotiable part of a WWW-Authenticate challenge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthChallenge {
    pub algorithm: String,
    pub nonce: String,
    pub realm: String,
    pub qop: String,
}

impl AuthChallenge {
    pub fn new(realm: &str, nonce: &str, algorithm: &str) -> Self {
        AuthChallenge {
            algorithm: algorithm.to_string(),
            nonce: nonce.to_string(),
            realm: realm.to_string(),
            qop: "auth".to_string(),
        }
    }

    /// Parse from a WWW-Authenticate header value.
    pub fn from_header(value: &str) -> Option<Self> {
        let rest = value.strip_prefix("Digest")?.trim_start();
        let params = parse_auth_params(rest);
        Some(AuthChallenge {
            algorithm: params_get(&params, "algorithm")?,
            nonce: params_get(&params, "nonce")?,
            realm: params_get(&params, "realm")?,
            qop: params_get(&params, "qop").unwrap_or_else(|| "auth".into()),
        })
    }

    pub fn to_header(&self) -> String {
        format!(
            "Digest realm=\"{}\", nonce=\"{}\", algorithm={}, qop=\"{}\"",
            self.realm, self.nonce, self.algorithm, self.qop
        )
    }
}

fn params_get(params: &[(String, String)], key: &str) -> Option<String> {
    params
        .iter()
        .find(|(k, _)| k.eq_ignore_ascii_case(key))
        .map(|(_, v)| v.clone())
}

/// Split `k=v, k="v", ...` lists as used by Digest headers.
pub fn parse_auth_params(s: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut rest = s;
    while !rest.is_empty() {
        let eq = match rest.find('=') {
            Some(i) => i,
            None => break,
        };
        let key = rest[..eq].trim().trim_start_matches(',').trim().to_string();
        rest = &rest[eq + 1..];
        let value;
        if let Some(stripped) = rest.strip_prefix('"') {
            match stripped.find('"') {
                Some(end) => {
                    value = stripped[..end].to_string();
                    rest = &stripped[end + 1..];
                }
                None => {
                    value = stripped.to_string();
                    rest = "";
                }
            }
        } else {
            let end = rest.find(',').unwrap_or(rest.len());
            value = rest[..end].trim().to_string();
            rest = &rest[end..];
        }
        rest = rest.trim_start_matches(',').trim_start();
        if !key.is_empty() {
            out.push((key, value));
        }
    }
    out
}

fn md5_hex(data: &[u8]) -> String {
    hex::encode(Md5::new().chain_update(data).finalize())
}

/// Digest response: H(H(A1) : nonce : H(A2)) with MD5 as H. For AKAv1-MD5
/// the secret is the binary RES; for plain MD5 it is the password bytes.
pub fn compute_digest(
    algorithm: &str,
    identity: &str,
    realm: &str,
    nonce: &str,
    method: &str,
    uri: &str,
    secret: &[u8],
) -> Result<String, SipError> {
    if algorithm != DIGEST_ALGORITHM_AKA && algorithm != DIGEST_ALGORITHM_MD5 {
        return Err(SipError::UnsupportedAlgorithm(algorithm.to_string()));
    }
    let mut a1 = format!("{identity}:{realm}:").into_bytes();
    a1.extend_from_slice(secret);
    let ha1 = md5_hex(&a1);
    let ha2 = md5_hex(format!("{method}:{uri}").as_bytes());
    Ok(md5_hex(format!("{ha1}:{nonce}:{ha2}").as_bytes()))
}

/// Nonce transport for the AKA challenge: base64(RAND | AUTN).
pub fn encode_aka_nonce(rand: &[u8; 16], autn: &[u8; 16]) -> String {
    let mut buf = rand.to_vec();
    buf.extend_from_slice(autn);
    B64.encode(buf)
}

pub fn decode_aka_nonce(nonce: &str) -> Option<([u8; 16], [u8; 16])> {
    let bytes = B64.decode(nonce).ok()?;
    if bytes.len() < 32 {
        return None;
    }
    let mut rand = [0u8; 16];
    let mut autn = [0u8; 16];
    rand.copy_from_slice(&bytes[..16]);
    autn.copy_from_slice(&bytes[16..32]);
    Some((rand, autn))
}
