//! Cryptographic primitives for the protocol entities: MODP Diffie-Hellman,
//! PRFs, the IKE key schedule, AKA challenge material, and authenticated
//! sealing. Everything here is a pure function over value inputs.

mod aka;
mod dh;
mod kdf;
mod prf;
mod registry;
mod seal;

pub use aka::{
    aka_challenge, algorithm_by_name, eap_aka_keys, verify_autn, AkaAlgorithm, AkaVector,
    KeyedHashAka, K_AUT_LEN, MSK_LEN, RES_LEN,
};
pub use dh::{dh_keypair, dh_keypair_from_exponent, dh_shared, left_pad, zero_shared_secret, DhKeyPair};
pub use kdf::{derive_ike_keys, IkeKeyBundle, KeyLengths};
pub use prf::{integ_tag, prf_eval, prf_plus};
pub use registry::{modp_group, modp_numbers, modulus_bits, registered, ModpGroup, TransformId, TransformKind};
pub use seal::{open, open_with_aad, seal, seal_with_aad};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CryptoError {
    #[error("unknown DH group: {0}")]
    UnknownGroup(String),
    #[error("unknown algorithm: {0}")]
    UnknownAlgorithm(String),
    #[error("peer public value out of range")]
    InvalidPeerValue,
    #[error("integrity check failed")]
    IntegrityFailure,
    #[error("bad padding")]
    BadPadding,
    #[error("key length does not match algorithm")]
    KeyLength,
    #[error("{0} must not be empty")]
    EmptyInput(&'static str),
    #[error("prf+ keystream exhausted")]
    KeystreamExhausted,
}
