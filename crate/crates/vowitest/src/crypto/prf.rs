//! Keyed pseudorandom functions and truncated integrity tags.

use hmac::{Hmac, Mac};
use md5::Md5;
use sha1::Sha1;

use super::registry::{TransformId, TransformKind};
use super::CryptoError;

fn hmac_md5(key: &[u8], data: &[u8]) -> Vec<u8> {
    let mut mac = Hmac::<Md5>::new_from_slice(key).expect("hmac accepts any key length");
    mac.update(data);
    mac.finalize().into_bytes().to_vec()
}

fn hmac_sha1(key: &[u8], data: &[u8]) -> Vec<u8> {
    let mut mac = Hmac::<Sha1>::new_from_slice(key).expect("hmac accepts any key length");
    mac.update(data);
    mac.finalize().into_bytes().to_vec()
}

/// Evaluate a registered PRF. Output is 16 octets for PRF_HMAC_MD5 and
/// 20 for PRF_HMAC_SHA1.
pub fn prf_eval(alg: TransformId, key: &[u8], data: &[u8]) -> Result<Vec<u8>, CryptoError> {
    if alg.kind != TransformKind::Prf {
        return Err(CryptoError::UnknownAlgorithm(alg.name().to_string()));
    }
    match alg.name() {
        "PRF_HMAC_MD5" => Ok(hmac_md5(key, data)),
        "PRF_HMAC_SHA1" => Ok(hmac_sha1(key, data)),
        other => Err(CryptoError::UnknownAlgorithm(other.to_string())),
    }
}

/// The prf+ keystream: T1 = prf(K, S | 0x01), Tn = prf(K, Tn-1 | S | n),
/// concatenated until `len` octets are available.
pub fn prf_plus(alg: TransformId, key: &[u8], seed: &[u8], len: usize) -> Result<Vec<u8>, CryptoError> {
    let mut out = Vec::with_capacity(len);
    let mut t: Vec<u8> = Vec::new();
    let mut n: u8 = 1;
    while out.len() < len {
        let mut data = t.clone();
        data.extend_from_slice(seed);
        data.push(n);
        t = prf_eval(alg, key, &data)?;
        out.extend_from_slice(&t);
        n = n.checked_add(1).ok_or(CryptoError::KeystreamExhausted)?;
    }
    out.truncate(len);
    Ok(out)
}

/// Truncated-HMAC integrity tag (12 octets for the *_96 transforms).
pub fn integ_tag(alg: TransformId, key: &[u8], data: &[u8]) -> Result<Vec<u8>, CryptoError> {
    if alg.kind != TransformKind::Integ {
        return Err(CryptoError::UnknownAlgorithm(alg.name().to_string()));
    }
    let full = match alg.name() {
        "AUTH_HMAC_MD5_96" => hmac_md5(key, data),
        "AUTH_HMAC_SHA1_96" => hmac_sha1(key, data),
        other => return Err(CryptoError::UnknownAlgorithm(other.to_string())),
    };
    Ok(full[..alg.output_len()].to_vec())
}

#[cfg(test)]
pub(crate) mod oracle {
    //! Hand-rolled HMAC used as the independent check against the `hmac`
    //! crate path above. Deliberately built from the digest primitives
    //! only (ipad/opad construction per RFC 2104).

    use md5::{Digest, Md5};
    use sha1::Sha1;

    fn hmac_manual<D: Digest + Clone>(block_len: usize, key: &[u8], data: &[u8]) -> Vec<u8> {
        let mut key = key.to_vec();
        if key.len() > block_len {
            key = D::new().chain_update(&key).finalize().to_vec();
        }
        key.resize(block_len, 0);
        let ipad: Vec<u8> = key.iter().map(|b| b ^ 0x36).collect();
        let opad: Vec<u8> = key.iter().map(|b| b ^ 0x5c).collect();
        let inner = D::new().chain_update(&ipad).chain_update(data).finalize();
        D::new().chain_update(&opad).chain_update(inner).finalize().to_vec()
    }

    pub fn hmac_md5(key: &[u8], data: &[u8]) -> Vec<u8> {
        hmac_manual::<Md5>(64, key, data)
    }

    pub fn hmac_sha1(key: &[u8], data: &[u8]) -> Vec<u8> {
        hmac_manual::<Sha1>(64, key, data)
    }
}
