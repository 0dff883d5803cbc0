//! IKE key schedule: SKEYSEED and the seven session keys.

use super::prf::{prf_eval, prf_plus};
use super::registry::TransformId;
use super::CryptoError;

/// The seven keys sliced from the prf+ stream, in schedule order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IkeKeyBundle {
    pub skeyseed: Vec<u8>,
    pub sk_d: Vec<u8>,
    pub sk_ai: Vec<u8>,
    pub sk_ar: Vec<u8>,
    pub sk_ei: Vec<u8>,
    pub sk_er: Vec<u8>,
    pub sk_pi: Vec<u8>,
    pub sk_pr: Vec<u8>,
}

/// Per-key sizes, fixed by the negotiated transforms.
#[derive(Debug, Clone, Copy)]
pub struct KeyLengths {
    pub sk_d: usize,
    pub sk_a: usize,
    pub sk_e: usize,
    pub sk_p: usize,
}

impl KeyLengths {
    pub fn for_transforms(encr: TransformId, integ: TransformId, prf: TransformId) -> Self {
        KeyLengths {
            sk_d: prf.key_len(),
            sk_a: integ.key_len(),
            sk_e: encr.key_len(),
            sk_p: prf.key_len(),
        }
    }

    fn total(&self) -> usize {
        self.sk_d + 2 * self.sk_a + 2 * self.sk_e + 2 * self.sk_p
    }
}

/// SKEYSEED = prf(Ni | Nr, shared); keys = prf+(SKEYSEED, Ni | Nr | SPIi | SPIr)
/// sliced in order SK_d, SK_ai, SK_ar, SK_ei, SK_er, SK_pi, SK_pr.
///
/// An all-zero `shared` is allowed: that is exactly the schedule a UE runs
/// after accepting a KE-less IKE_SA_INIT response, and what an on-path
/// attacker recomputes to read the first IKE_AUTH messages.
pub fn derive_ike_keys(
    prf: TransformId,
    ni: &[u8],
    nr: &[u8],
    shared: &[u8],
    spi_i: &[u8; 8],
    spi_r: &[u8; 8],
    lengths: KeyLengths,
) -> Result<IkeKeyBundle, CryptoError> {
    if ni.is_empty() || nr.is_empty() {
        return Err(CryptoError::EmptyInput("nonce"));
    }
    if shared.is_empty() {
        return Err(CryptoError::EmptyInput("shared secret"));
    }
    let mut nonces = ni.to_vec();
    nonces.extend_from_slice(nr);
    let skeyseed = prf_eval(prf, &nonces, shared)?;

    let mut seed = nonces;
    seed.extend_from_slice(spi_i);
    seed.extend_from_slice(spi_r);
    let stream = prf_plus(prf, &skeyseed, &seed, lengths.total())?;

    let mut off = 0;
    let mut take = |n: usize| {
        let s = stream[off..off + n].to_vec();
        off += n;
        s
    };
    Ok(IkeKeyBundle {
        sk_d: take(lengths.sk_d),
        sk_ai: take(lengths.sk_a),
        sk_ar: take(lengths.sk_a),
        sk_ei: take(lengths.sk_e),
        sk_er: take(lengths.sk_e),
        sk_pi: take(lengths.sk_p),
        sk_pr: take(lengths.sk_p),
        skeyseed,
    })
}
