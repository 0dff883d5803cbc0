//! AKA challenge material and the EAP-AKA key hierarchy.
//!
//! The challenge functions are a keyed-hash test algorithm: HMAC-SHA1 over
//! secret_k | op_key | rand with a domain-separation label per output. It
//! gives the mutual-authentication semantics the harness needs (all-or-
//! nothing AUTN verification, deterministic RES) without carrier key
//! material. A standards-grade algorithm can be plugged in through
//! [`AkaAlgorithm`]; profiles select the algorithm by name.

use hmac::{Hmac, Mac};
use sha1::{Digest, Sha1};

use super::prf::prf_plus;
use super::registry::TransformId;
use super::CryptoError;

pub const RES_LEN: usize = 8;
pub const MSK_LEN: usize = 64;
pub const K_AUT_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AkaVector {
    pub rand: [u8; 16],
    pub autn: [u8; 16],
    pub xres: Vec<u8>,
    pub ck: [u8; 16],
    pub ik: [u8; 16],
    pub msk: Vec<u8>,
    pub k_aut: Vec<u8>,
}

/// Pluggable challenge-function family (f2..f5 analog).
pub trait AkaAlgorithm: Send + Sync {
    fn name(&self) -> &'static str;
    fn autn(&self, k: &[u8; 16], op: &[u8; 16], rand: &[u8; 16]) -> [u8; 16];
    fn res(&self, k: &[u8; 16], op: &[u8; 16], rand: &[u8; 16]) -> Vec<u8>;
    fn ck(&self, k: &[u8; 16], op: &[u8; 16], rand: &[u8; 16]) -> [u8; 16];
    fn ik(&self, k: &[u8; 16], op: &[u8; 16], rand: &[u8; 16]) -> [u8; 16];
}

/// Default keyed-hash test algorithm.
pub struct KeyedHashAka;

fn labeled(k: &[u8; 16], op: &[u8; 16], rand: &[u8; 16], label: &[u8]) -> Vec<u8> {
    let mut mac = Hmac::<Sha1>::new_from_slice(k).expect("any key length");
    mac.update(label);
    mac.update(op);
    mac.update(rand);
    mac.finalize().into_bytes().to_vec()
}

fn take16(v: Vec<u8>) -> [u8; 16] {
    let mut out = [0u8; 16];
    out.copy_from_slice(&v[..16]);
    out
}

impl AkaAlgorithm for KeyedHashAka {
    fn name(&self) -> &'static str {
        "keyed_hash"
    }

    fn autn(&self, k: &[u8; 16], op: &[u8; 16], rand: &[u8; 16]) -> [u8; 16] {
        take16(labeled(k, op, rand, b"autn"))
    }

    fn res(&self, k: &[u8; 16], op: &[u8; 16], rand: &[u8; 16]) -> Vec<u8> {
        labeled(k, op, rand, b"xres")[..RES_LEN].to_vec()
    }

    fn ck(&self, k: &[u8; 16], op: &[u8; 16], rand: &[u8; 16]) -> [u8; 16] {
        take16(labeled(k, op, rand, b"ck"))
    }

    fn ik(&self, k: &[u8; 16], op: &[u8; 16], rand: &[u8; 16]) -> [u8; 16] {
        take16(labeled(k, op, rand, b"ik"))
    }
}

pub fn algorithm_by_name(name: &str) -> Result<&'static dyn AkaAlgorithm, CryptoError> {
    match name {
        "keyed_hash" => Ok(&KeyedHashAka),
        other => Err(CryptoError::UnknownAlgorithm(other.to_string())),
    }
}

/// MK = SHA1(identity | IK | CK); k_aut and msk are sliced from a prf+
/// expansion of MK.
pub fn eap_aka_keys(identity: &str, ik: &[u8; 16], ck: &[u8; 16]) -> (Vec<u8>, Vec<u8>) {
    let mk = Sha1::new()
        .chain_update(identity.as_bytes())
        .chain_update(ik)
        .chain_update(ck)
        .finalize();
    let prf = TransformId::prf("PRF_HMAC_SHA1").expect("registered");
    let stream = prf_plus(prf, &mk, b"aka key expansion", K_AUT_LEN + MSK_LEN)
        .expect("prf registered, finite length");
    let k_aut = stream[..K_AUT_LEN].to_vec();
    let msk = stream[K_AUT_LEN..].to_vec();
    (k_aut, msk)
}

/// Produce a full challenge vector for a subscriber.
pub fn aka_challenge(identity: &str, secret_k: &[u8; 16], op_key: &[u8; 16], rand: &[u8; 16]) -> AkaVector {
    let alg = KeyedHashAka;
    let ck = alg.ck(secret_k, op_key, rand);
    let ik = alg.ik(secret_k, op_key, rand);
    let (k_aut, msk) = eap_aka_keys(identity, &ik, &ck);
    AkaVector {
        rand: *rand,
        autn: alg.autn(secret_k, op_key, rand),
        xres: alg.res(secret_k, op_key, rand),
        ck,
        ik,
        msk,
        k_aut,
    }
}

/// All-or-nothing AUTN verification.
pub fn verify_autn(secret_k: &[u8; 16], op_key: &[u8; 16], rand: &[u8; 16], autn: &[u8; 16]) -> bool {
    KeyedHashAka.autn(secret_k, op_key, rand) == *autn
}

#[cfg(test)]
mod tests {
    use super::*;

    const K: [u8; 16] = [0x11; 16];
    const OP: [u8; 16] = [0x22; 16];
    const RAND: [u8; 16] = [0x33; 16];

    #[test]
    fn vector_is_deterministic() {
        let a = aka_challenge("001010123456789", &K, &OP, &RAND);
        let b = aka_challenge("001010123456789", &K, &OP, &RAND);
        assert_eq!(a, b);
        assert_eq!(a.xres.len(), RES_LEN);
        assert_eq!(a.msk.len(), MSK_LEN);
        assert_eq!(a.k_aut.len(), K_AUT_LEN);
    }

    #[test]
    fn own_autn_verifies() {
        let v = aka_challenge("001010123456789", &K, &OP, &RAND);
        assert!(verify_autn(&K, &OP, &RAND, &v.autn));
    }

    #[test]
    fn bit_flip_fails_verification() {
        let v = aka_challenge("001010123456789", &K, &OP, &RAND);
        for byte in 0..16 {
            let mut autn = v.autn;
            autn[byte] ^= 0x01;
            assert!(!verify_autn(&K, &OP, &RAND, &autn), "byte {byte}");
        }
        let mut rand = RAND;
        rand[5] ^= 0x80;
        assert!(!verify_autn(&K, &OP, &rand, &v.autn));
    }

    #[test]
    fn peer_res_equals_network_xres() {
        // both sides run the shipped default algorithm over the same inputs
        let network = aka_challenge("001010123456789", &K, &OP, &RAND);
        let peer_res = KeyedHashAka.res(&K, &OP, &RAND);
        assert_eq!(network.xres, peer_res);
    }

    #[test]
    fn msk_depends_on_identity() {
        let a = aka_challenge("001010123456789", &K, &OP, &RAND);
        let b = aka_challenge("001019876543210", &K, &OP, &RAND);
        assert_ne!(a.msk, b.msk);
        assert_ne!(a.k_aut, b.k_aut);
        assert_eq!(a.xres, b.xres); // challenge functions do not see the identity
    }

    #[test]
    fn unknown_algorithm_name_rejected() {
        assert!(algorithm_by_name("milenage").is_err());
        assert_eq!(algorithm_by_name("keyed_hash").unwrap().name(), "keyed_hash");
    }
}
