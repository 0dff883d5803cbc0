//! Diffie-Hellman over the registered MODP groups.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use super::registry::{modp_group, modp_numbers, TransformId, TransformKind};
use super::CryptoError;

/// Private exponent size. Short exponents are standard practice for MODP
/// groups and keep the campaign's ~10^5 exchanges cheap.
const EXPONENT_BITS: usize = 256;

#[derive(Debug, Clone)]
pub struct DhKeyPair {
    pub group: TransformId,
    pub private_exponent: BigUint,
    /// g^x mod p, left-padded with zeros to the group modulus length.
    pub public_value: Vec<u8>,
}

/// Left-pad a big-endian integer encoding to `len` octets.
pub fn left_pad(bytes: &[u8], len: usize) -> Vec<u8> {
    let mut out = vec![0u8; len.saturating_sub(bytes.len())];
    out.extend_from_slice(bytes);
    out
}

/// Generate a deterministic keypair from a seed. Identical seeds yield
/// identical keypairs for the same group.
pub fn dh_keypair(group: TransformId, seed: &[u8]) -> Result<DhKeyPair, CryptoError> {
    let meta = modp_group(group)?;
    if seed.is_empty() {
        return Err(CryptoError::EmptyInput("dh seed"));
    }
    // Domain-separate the RNG stream by group so the same seed can feed
    // several groups in one run.
    let mut h = Sha256::new();
    h.update(b"dh-exponent");
    h.update((group.id as u32).to_be_bytes());
    h.update(seed);
    let mut rng = ChaCha20Rng::from_seed(h.finalize().into());

    let exp_bits = match meta.subgroup_bits {
        Some(q) => (q as usize).min(EXPONENT_BITS),
        None => EXPONENT_BITS,
    };
    let mut buf = vec![0u8; exp_bits / 8];
    loop {
        rng.fill_bytes(&mut buf);
        let x = BigUint::from_bytes_be(&buf);
        if x > BigUint::one() {
            return dh_keypair_from_exponent(group, x);
        }
    }
}

/// Build a keypair from an explicit exponent. Generated keypairs always use
/// exponents > 1; forcing x = 1 is allowed here so tests can check g^1 = g.
pub fn dh_keypair_from_exponent(group: TransformId, exponent: BigUint) -> Result<DhKeyPair, CryptoError> {
    let meta = modp_group(group)?;
    let (p, g) = modp_numbers(group)?;
    if exponent.is_zero() || &exponent >= &(p - BigUint::one()) {
        return Err(CryptoError::InvalidPeerValue);
    }
    let public = g.modpow(&exponent, p);
    Ok(DhKeyPair {
        group,
        private_exponent: exponent,
        public_value: left_pad(&public.to_bytes_be(), meta.modulus_len),
    })
}

/// Compute the shared secret, left-padded to the modulus length.
///
/// An all-zero peer value is the designated zero-secret sentinel: it yields
/// an all-zero shared secret of modulus length. This is the key-derivation
/// input a UE ends up with when it accepts a KE-less IKE_SA_INIT response,
/// and the value an on-path attacker can reproduce.
pub fn dh_shared(group: TransformId, mine: &DhKeyPair, peer_public: &[u8]) -> Result<Vec<u8>, CryptoError> {
    if group.kind != TransformKind::Dh {
        return Err(CryptoError::UnknownGroup(group.name().to_string()));
    }
    let meta = modp_group(group)?;
    if peer_public.iter().all(|&b| b == 0) {
        return Ok(vec![0u8; meta.modulus_len]);
    }
    if peer_public.len() != meta.modulus_len {
        return Err(CryptoError::InvalidPeerValue);
    }
    let (p, _) = modp_numbers(group)?;
    let peer = BigUint::from_bytes_be(peer_public);
    if peer <= BigUint::one() || peer >= p - BigUint::one() {
        return Err(CryptoError::InvalidPeerValue);
    }
    let shared = peer.modpow(&mine.private_exponent, p);
    Ok(left_pad(&shared.to_bytes_be(), meta.modulus_len))
}

/// All-zero sentinel of the group's modulus length.
pub fn zero_shared_secret(group: TransformId) -> Result<Vec<u8>, CryptoError> {
    Ok(vec![0u8; modp_group(group)?.modulus_len])
}
