//! The IMS agent: SIP registrar with the challenge flow, command-driven
//! like the ePDG. P/I/S-CSCF collapse into this one endpoint.

use std::collections::{HashMap, VecDeque};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::crypto::aka_challenge;
use crate::mutate;
use crate::sip::{
    compute_digest, encode_aka_nonce, parse_auth_params, parse_sip, serialize_sip, AuthChallenge,
    SecurityMechanism, SipMessage, DIGEST_ALGORITHM_AKA,
};
use crate::testcase::{Command, MessageRecord, Op, Receiver};
use crate::transform::{parse_substitute, SubstituteKind};

use super::envelope::{AgentEnvelope, AgentReport, Delivery, EnvelopeBody};
use super::link::Agent;
use super::Subscriber;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    Idle,
    Challenged,
    Registered,
}

pub struct ImsAgent {
    subscriber: Subscriber,
    rng: ChaCha20Rng,
    stage: Stage,
    realm: String,
    /// The challenge as actually sent (mutations included).
    issued: Option<(AuthChallenge, [u8; 16])>,
    pending: VecDeque<Vec<u8>>,
    history: HashMap<u32, String>,
}

impl ImsAgent {
    pub fn new(subscriber: Subscriber, seed: u64) -> Self {
        let mut h = Sha256::new();
        h.update(b"ims-agent");
        h.update(seed.to_be_bytes());
        ImsAgent {
            subscriber,
            rng: ChaCha20Rng::from_seed(h.finalize().into()),
            stage: Stage::Idle,
            realm: "ims.test".to_string(),
            issued: None,
            pending: VecDeque::new(),
            history: HashMap::new(),
        }
    }

    fn classify(&self, sip: &SipMessage) -> Option<String> {
        if sip.is_request("REGISTER") {
            return match sip.header("CSeq") {
                Some(c) if c.starts_with('1') => Some("sip_register_1".into()),
                Some(c) if c.starts_with('2') => Some("sip_register_2".into()),
                _ => Some("sip_register".into()),
            };
        }
        None
    }

    fn receive_sip(&mut self, hex_text: &str, report: &mut AgentReport) {
        let bytes = match hex::decode(hex_text) {
            Ok(b) => b,
            Err(_) => {
                report.annotations.push("bad_sip_hex".into());
                return;
            }
        };
        let mut record = MessageRecord {
            sender: Receiver::Ue,
            protocol: "sip".into(),
            transport: "sip_plain".into(),
            name: None,
            detail: Vec::new(),
            error_indication: false,
            hex: hex::encode_upper(&bytes),
        };
        if let Ok(sip) = parse_sip(&bytes) {
            record.name = self.classify(&sip);
            record.detail.push(sip.start_line());
            if let Some(sc) = sip.header("Security-Client") {
                let mechs = SecurityMechanism::list_from_value(sc);
                if mechs.iter().any(|m| m.ealg == "des-cbc" && m.alg == "hmac-md5-96") {
                    report.annotations.push("sec_client_weak_pair_present".into());
                }
            }
        }
        self.pending.push_back(bytes);
        report.received.push(record);
    }

    fn timeout_report(&self, cmd: &Command) -> AgentReport {
        AgentReport {
            status: Some("timeout".into()),
            annotations: vec![format!("no_trigger:{}", cmd.name)],
            step_complete: true,
            ..Default::default()
        }
    }

    fn sent_record(&self, name: &str, bytes: &[u8]) -> MessageRecord {
        MessageRecord {
            sender: Receiver::Ims,
            protocol: "sip".into(),
            transport: "sip_plain".into(),
            name: Some(name.to_string()),
            detail: Vec::new(),
            error_indication: false,
            hex: hex::encode_upper(bytes),
        }
    }

    fn apply_mutation(&self, cmd: &Command, m: &mut SipMessage, report: &mut AgentReport) {
        let outcome = match cmd.op {
            Op::Update => mutate::apply_sip_update(
                m,
                cmd.attribute.as_deref().expect("validated command"),
                cmd.value.as_ref().expect("validated command"),
            ),
            Op::Drop => mutate::apply_sip_drop(m, cmd.attribute.as_deref().expect("validated command")),
            _ => Ok(()),
        };
        match outcome {
            Ok(()) if !matches!(cmd.op, Op::Send) => {
                report.annotations.push(format!("mutation_applied:{}", cmd.op))
            }
            Ok(()) => {}
            Err(e) => report.annotations.push(format!("mutation_failed:{e}")),
        }
    }

    fn finish_send(&mut self, cmd: &Command, name: &str, sip: &SipMessage, report: &mut AgentReport) {
        let bytes = serialize_sip(sip);
        let record = self.sent_record(name, &bytes);
        self.history.insert(cmd.id, record.hex.clone());
        report.sent.push(record);
    }

    fn build_401(&mut self, cmd: &Command) -> AgentReport {
        let mut report = AgentReport { step_complete: true, ..Default::default() };
        let register = match self.pending.pop_front() {
            Some(r) => r,
            None => return self.timeout_report(cmd),
        };
        if parse_sip(&register).map(|m| !m.is_request("REGISTER")).unwrap_or(true) {
            report.annotations.push("trigger_not_register".into());
        }
        let mut rand = [0u8; 16];
        self.rng.fill_bytes(&mut rand);
        let vector =
            aka_challenge(&self.subscriber.imsi, &self.subscriber.secret_k, &self.subscriber.op_key, &rand);
        let nonce = encode_aka_nonce(&rand, &vector.autn);
        let challenge = AuthChallenge::new(&self.realm, &nonce, DIGEST_ALGORITHM_AKA);

        let mut sip = SipMessage::response(401, "Unauthorized");
        sip.push_header("WWW-Authenticate", &challenge.to_header());
        sip.push_header(
            "Security-Server",
            &SecurityMechanism::ipsec("aes-cbc", "hmac-sha-1-96").to_value(),
        );
        sip.push_header("Content-Length", "0");
        self.apply_mutation(cmd, &mut sip, &mut report);

        // commit exactly what went on the wire
        let issued = sip
            .header("WWW-Authenticate")
            .and_then(AuthChallenge::from_header)
            .unwrap_or(challenge);
        self.issued = Some((issued, rand));
        self.stage = Stage::Challenged;
        self.finish_send(cmd, &cmd.name, &sip, &mut report);
        report
    }

    fn build_200(&mut self, cmd: &Command) -> AgentReport {
        let mut report = AgentReport { step_complete: true, ..Default::default() };
        let register = match self.pending.pop_front() {
            Some(r) => r,
            None => return self.timeout_report(cmd),
        };
        match (parse_sip(&register).ok(), &self.issued) {
            (Some(sip), Some((challenge, rand))) => {
                let auth_ok = sip
                    .header("Authorization")
                    .map(|value| {
                        let params = parse_auth_params(value.trim_start_matches("Digest").trim_start());
                        let get = |k: &str| {
                            params
                                .iter()
                                .find(|(n, _)| n.eq_ignore_ascii_case(k))
                                .map(|(_, v)| v.clone())
                                .unwrap_or_default()
                        };
                        let vector = aka_challenge(
                            &self.subscriber.imsi,
                            &self.subscriber.secret_k,
                            &self.subscriber.op_key,
                            rand,
                        );
                        let expect = compute_digest(
                            &challenge.algorithm,
                            &self.subscriber.imsi,
                            &challenge.realm,
                            &challenge.nonce,
                            "REGISTER",
                            &format!("sip:{}", self.realm),
                            &vector.xres,
                        );
                        matches!(expect, Ok(e) if e == get("response"))
                    })
                    .unwrap_or(false);
                report
                    .annotations
                    .push(if auth_ok { "digest_ok".into() } else { "digest_mismatch".into() });
                if sip.header("Security-Verify").is_some() {
                    report.annotations.push("security_verify_present".into());
                }
            }
            _ => report.annotations.push("register_2_unparseable".into()),
        }
        let mut sip = SipMessage::response(200, "OK");
        sip.push_header("Content-Length", "0");
        self.apply_mutation(cmd, &mut sip, &mut report);
        self.stage = Stage::Registered;
        report.annotations.push("registered".into());
        self.finish_send(cmd, &cmd.name, &sip, &mut report);
        report
    }

    fn build_substitute(&mut self, cmd: &Command) -> AgentReport {
        let mut report = AgentReport { step_complete: true, ..Default::default() };
        let wire = cmd.substitute_with.as_deref().expect("validated command");
        let (code, reason) = match parse_substitute(wire) {
            Some(SubstituteKind::SipStatus { code, reason }) => (code, reason),
            Some(SubstituteKind::IkeNotify { .. }) => {
                report.annotations.push("ike_error_on_sip_step".into());
                return report;
            }
            None => {
                report.annotations.push(format!("unknown_substitute:{wire}"));
                return report;
            }
        };
        if self.pending.pop_front().is_none() {
            return self.timeout_report(cmd);
        }
        let mut sip = SipMessage::response(code, reason);
        sip.push_header("Content-Length", "0");
        report.annotations.push(format!("substituted:{wire}"));
        self.finish_send(cmd, wire, &sip, &mut report);
        report
    }

    fn execute(&mut self, cmd: &Command) -> AgentReport {
        match cmd.op {
            Op::Replay => {
                let index = cmd.replay_index.expect("validated command");
                match self.history.get(&index).cloned() {
                    Some(hex_text) => {
                        let mut report = AgentReport { step_complete: true, ..Default::default() };
                        report.annotations.push(format!("replayed_command:{index}"));
                        report.sent.push(MessageRecord {
                            sender: Receiver::Ims,
                            protocol: "sip".into(),
                            transport: "sip_plain".into(),
                            name: Some(format!("replay[{index}]")),
                            detail: Vec::new(),
                            error_indication: false,
                            hex: hex_text,
                        });
                        report
                    }
                    None => AgentReport {
                        status: Some("error".into()),
                        annotations: vec![format!("replay_source_missing:{index}")],
                        step_complete: true,
                        ..Default::default()
                    },
                }
            }
            Op::Substitute => self.build_substitute(cmd),
            _ => match cmd.name.as_str() {
                "401_unauthorized" => self.build_401(cmd),
                "200_ok" => self.build_200(cmd),
                other => AgentReport {
                    status: Some("error".into()),
                    annotations: vec![format!("unknown_message_name:{other}")],
                    step_complete: true,
                    ..Default::default()
                },
            },
        }
    }
}

impl Agent for ImsAgent {
    fn handle(&mut self, env: AgentEnvelope) -> Vec<AgentEnvelope> {
        let report = match &env.body {
            EnvelopeBody::Command(cmd) => self.execute(cmd),
            EnvelopeBody::Deliver(Delivery::SipRequest { hex }) => {
                let mut report = AgentReport { step_complete: true, ..Default::default() };
                self.receive_sip(hex, &mut report);
                report
            }
            _ => AgentReport {
                status: Some("error".into()),
                annotations: vec!["unexpected_envelope".into()],
                step_complete: true,
                ..Default::default()
            },
        };
        vec![AgentEnvelope::report(env.seq, Receiver::Ims, report)]
    }
}
