//! SIP registration message model: REGISTER, 401 Unauthorized and 200 OK,
//! with the security-negotiation headers the mutation configs target.

mod auth;
mod message;
mod register;
mod security;

pub use auth::{
    compute_digest, decode_aka_nonce, encode_aka_nonce, parse_auth_params, AuthChallenge,
    DIGEST_ALGORITHM_AKA, DIGEST_ALGORITHM_MD5,
};
pub use message::{parse_sip, serialize_sip, SipKind, SipMessage};
pub use register::{build_register, RegisterParams, WEAK_SIP_ALG, WEAK_SIP_EALG};
pub use security::SecurityMechanism;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SipError {
    #[error("malformed start line: {0}")]
    MalformedStartLine(String),
    #[error("missing CRLFCRLF separator")]
    MissingSeparator,
    #[error("unsupported digest algorithm: {0}")]
    UnsupportedAlgorithm(String),
    #[error("second REGISTER requires a challenge")]
    MissingChallenge,
}
