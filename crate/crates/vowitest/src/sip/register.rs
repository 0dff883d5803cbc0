//! REGISTER construction for the simulated UE.

use super::auth::{compute_digest, AuthChallenge};
use super::message::SipMessage;
use super::security::SecurityMechanism;
use super::SipError;

/// The universally-advertised weak pair. Every profile's first REGISTER
/// carries it in Security-Client; the builder enforces that structurally.
pub const WEAK_SIP_EALG: &str = "des-cbc";
pub const WEAK_SIP_ALG: &str = "hmac-md5-96";

pub struct RegisterParams<'a> {
    pub identity: &'a str,
    pub realm: &'a str,
    pub contact_host: &'a str,
    pub security_client: &'a [SecurityMechanism],
    /// Present on the second REGISTER.
    pub challenge: Option<&'a AuthChallenge>,
    /// Digest secret (binary RES for AKAv1-MD5, password bytes for MD5).
    pub secret: &'a [u8],
    /// Algorithm name to answer with; defaults to the challenge's.
    pub response_algorithm: Option<&'a str>,
    /// Echo of the server's Security-Server selection, second REGISTER only.
    pub security_verify: Option<&'a [SecurityMechanism]>,
    pub cseq: u32,
    pub call_id: &'a str,
    pub tag: &'a str,
    pub branch: &'a str,
}

pub fn build_register(p: &RegisterParams<'_>) -> Result<SipMessage, SipError> {
    if p.cseq > 1 && p.challenge.is_none() {
        return Err(SipError::MissingChallenge);
    }
    let uri = format!("sip:{}", p.realm);
    let aor = format!("sip:{}@{}", p.identity, p.realm);
    let mut m = SipMessage::request("REGISTER", &uri);
    m.push_header("Via", &format!("SIP/2.0/TCP {};branch=z9hG4bK{}", p.contact_host, p.branch));
    m.push_header("Max-Forwards", "70");
    m.push_header("From", &format!("<{aor}>;tag={}", p.tag));
    m.push_header("To", &format!("<{aor}>"));
    m.push_header("Call-ID", p.call_id);
    m.push_header("CSeq", &format!("{} REGISTER", p.cseq));
    m.push_header("Contact", &format!("<sip:{}@{}>", p.identity, p.contact_host));
    m.push_header("Expires", "600000");
    m.push_header("Supported", "sec-agree");
    m.push_header("Require", "sec-agree");
    m.push_header("Proxy-Require", "sec-agree");

    let mut mechanisms = p.security_client.to_vec();
    if !mechanisms.iter().any(|m| m.ealg == WEAK_SIP_EALG && m.alg == WEAK_SIP_ALG) {
        mechanisms.push(SecurityMechanism::ipsec(WEAK_SIP_EALG, WEAK_SIP_ALG));
    }
    m.push_header("Security-Client", &SecurityMechanism::list_to_value(&mechanisms));

    if let Some(challenge) = p.challenge {
        let algorithm = p.response_algorithm.unwrap_or(challenge.algorithm.as_str());
        let response = compute_digest(
            algorithm,
            p.identity,
            &challenge.realm,
            &challenge.nonce,
            "REGISTER",
            &uri,
            p.secret,
        )?;
        m.push_header(
            "Authorization",
            &format!(
                "Digest username=\"{}\", realm=\"{}\", nonce=\"{}\", uri=\"{}\", response=\"{}\", algorithm={}",
                p.identity, challenge.realm, challenge.nonce, uri, response, algorithm
            ),
        );
        if let Some(verify) = p.security_verify {
            m.push_header("Security-Verify", &SecurityMechanism::list_to_value(verify));
        }
    }
    m.push_header("Content-Length", "0");
    Ok(m)
}
