//! The ePDG agent: IKEv2 responder plus tunnel endpoint, command-driven.
//! Responses are built by the state machine, mutations from the current
//! command are applied to exactly that outgoing message, and whatever was
//! actually emitted is what the entity commits to its own state.

use std::collections::{HashMap, VecDeque};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::crypto::{
    aka_challenge, derive_ike_keys, dh_keypair, dh_shared, prf_eval, zero_shared_secret, AkaVector,
    KeyLengths, TransformId, TransformKind,
};
use crate::eap::{AkaSubtype, EapAttribute, EapCode, EapMessage, AT_AUTN, AT_RAND, AT_RES};
use crate::ike::{
    open_message, parse_message, payload_type, seal_message, select_proposal, serialize_message,
    AcceptancePolicy, AuthPayload, ChosenTransforms, ExchangeType, IdPayload, IkeHeader, IkeMessage,
    NotifyPayload, Payload, SaCrypto, FLAG_RESPONSE,
};
use crate::mutate;
use crate::testcase::{Command, MessageRecord, Op, Receiver};
use crate::transform::{parse_substitute, SubstituteKind};

use super::envelope::{AgentEnvelope, AgentReport, Delivery, EnvelopeBody, PacketFrame};
use super::link::Agent;
use super::Subscriber;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    Idle,
    SaInitDone,
    EapInProgress,
    AwaitAuth,
    Established,
}

pub struct EpdgAgent {
    subscriber: Subscriber,
    rng: ChaCha20Rng,
    stage: Stage,
    spi_i: [u8; 8],
    spi_r: [u8; 8],
    ni: Vec<u8>,
    nr: [u8; 16],
    ue_pub: Vec<u8>,
    ue_ke_group: u16,
    chosen: Option<ChosenTransforms>,
    keypair: Option<crate::crypto::DhKeyPair>,
    sa: Option<SaCrypto>,
    vector: Option<AkaVector>,
    ue_first_request_raw: Vec<u8>,
    own_sa_init_response_raw: Vec<u8>,
    /// UE IKE frames awaiting a command.
    pending: VecDeque<Vec<u8>>,
    /// Sent wire frames by command id, the replay source.
    history: HashMap<u32, PacketFrame>,
    seal_counter: u64,
    responder_msg_id: u32,
}

impl EpdgAgent {
    pub fn new(subscriber: Subscriber, seed: u64) -> Self {
        let mut h = Sha256::new();
        h.update(b"epdg-agent");
        h.update(seed.to_be_bytes());
        EpdgAgent {
            subscriber,
            rng: ChaCha20Rng::from_seed(h.finalize().into()),
            stage: Stage::Idle,
            spi_i: [0; 8],
            spi_r: [0; 8],
            ni: Vec::new(),
            nr: [0; 16],
            ue_pub: Vec::new(),
            ue_ke_group: 0,
            chosen: None,
            keypair: None,
            sa: None,
            vector: None,
            ue_first_request_raw: Vec::new(),
            own_sa_init_response_raw: Vec::new(),
            pending: VecDeque::new(),
            history: HashMap::new(),
            seal_counter: 0,
            responder_msg_id: 0,
        }
    }

    fn next_iv_seed(&mut self) -> Vec<u8> {
        self.seal_counter += 1;
        let mut seed = b"epdg-seal".to_vec();
        seed.extend_from_slice(&self.spi_r);
        seed.extend_from_slice(&self.seal_counter.to_be_bytes());
        seed
    }

    fn classify_ike(&self, m: &IkeMessage) -> (Option<String>, bool) {
        let error = m.first_notify_error().is_some() || m.payload(payload_type::DELETE).is_some();
        let name = match (m.header.exchange_type, m.header.message_id) {
            (ExchangeType::IKE_SA_INIT, 0) => Some("ike_sa_init_request".to_string()),
            (ExchangeType::IKE_AUTH, 1) => Some("ike_auth_1_request".to_string()),
            (ExchangeType::IKE_AUTH, 2) => Some("eap_response".to_string()),
            (ExchangeType::IKE_AUTH, 3) => Some("ike_auth_final_request".to_string()),
            (ExchangeType::IKE_AUTH, _) => Some("ike_auth_request".to_string()),
            _ => None,
        };
        (name, error)
    }

    /// Handle a frame arriving from the UE side.
    fn receive_frame(&mut self, frame: &PacketFrame, report: &mut AgentReport) {
        let bytes = frame.bytes();
        match frame.transport.as_str() {
            "tunnel" => {
                let mut record = MessageRecord {
                    sender: Receiver::Ue,
                    protocol: "sip".into(),
                    transport: "tunnel".into(),
                    name: None,
                    detail: Vec::new(),
                    error_indication: false,
                    hex: hex::encode_upper(&bytes),
                };
                if self.stage != Stage::Established || self.sa.is_none() {
                    report.annotations.push("tunnel_before_established".into());
                    report.received.push(record);
                    return;
                }
                let sa = self.sa.as_ref().expect("checked above");
                match crate::crypto::open(sa.encr, sa.integ, &sa.keys.sk_ei, &sa.keys.sk_ai, &bytes) {
                    Ok(plain) => {
                        if let Ok(sip) = crate::sip::parse_sip(&plain) {
                            record.detail.push(sip.start_line());
                            record.name = match sip.header("CSeq") {
                                Some(c) if c.starts_with('1') => Some("sip_register_1".into()),
                                Some(c) if c.starts_with('2') => Some("sip_register_2".into()),
                                _ => Some("sip".into()),
                            };
                            record.error_indication =
                                sip.status_code().map(|c| c >= 400).unwrap_or(false);
                        }
                        report.forwarded_sip.push(hex::encode_upper(&plain));
                        report.annotations.push("sip_forwarded".into());
                    }
                    Err(e) => {
                        report.annotations.push(format!("decrypt_fail:{e}"));
                    }
                }
                report.received.push(record);
            }
            _ => {
                let mut record = MessageRecord {
                    sender: Receiver::Ue,
                    protocol: "ike".into(),
                    transport: "ike".into(),
                    name: None,
                    detail: Vec::new(),
                    error_indication: false,
                    hex: hex::encode_upper(&bytes),
                };
                match parse_message(&bytes) {
                    Ok(m) => {
                        let (name, error) = self.classify_ike(&m);
                        record.name = name;
                        record.error_indication = error;
                        record.detail = m.payload_type_names();
                    }
                    Err(e) => report.annotations.push(format!("unparseable:{e}")),
                }
                self.pending.push_back(bytes);
                report.received.push(record);
            }
        }
    }

    fn sent_record(&self, name: &str, transport: &str, bytes: &[u8]) -> MessageRecord {
        MessageRecord {
            sender: Receiver::Epdg,
            protocol: if transport == "ike" { "ike".into() } else { "sip".into() },
            transport: transport.into(),
            name: Some(name.to_string()),
            detail: Vec::new(),
            error_indication: false,
            hex: hex::encode_upper(bytes),
        }
    }

    fn timeout_report(&self, cmd: &Command) -> AgentReport {
        AgentReport {
            status: Some("timeout".into()),
            annotations: vec![format!("no_trigger:{}", cmd.name)],
            step_complete: true,
            ..Default::default()
        }
    }

    /// Pop the next pending UE frame, parsing it.
    fn take_trigger(&mut self) -> Option<(IkeMessage, Vec<u8>)> {
        while let Some(bytes) = self.pending.pop_front() {
            if let Ok(m) = parse_message(&bytes) {
                return Some((m, bytes));
            }
        }
        None
    }

    fn apply_mutation(&mut self, cmd: &Command, m: &mut IkeMessage, report: &mut AgentReport) {
        let outcome = match cmd.op {
            Op::Update => {
                let attr = cmd.attribute.as_deref().expect("validated command");
                let value = cmd.value.as_ref().expect("validated command");
                let r = mutate::apply_ike_update(m, attr, value);
                // a DH change invalidates the KE payload built for the old
                // group; regenerate so the message stays internally usable
                if r.is_ok() && attr == "security_association.dh" {
                    if let Some(v) = value.as_int() {
                        self.regenerate_ke(m, (v as i32 & 0xFFFF) as u16, report);
                    }
                }
                r
            }
            Op::Drop => mutate::apply_ike_drop(m, cmd.attribute.as_deref().expect("validated command")),
            Op::Insert => mutate::apply_ike_insert(
                m,
                cmd.attribute.as_deref().expect("validated command"),
                cmd.value.as_ref().expect("validated command"),
            ),
            _ => Ok(()),
        };
        match outcome {
            Ok(()) if !matches!(cmd.op, Op::Send) => {
                report.annotations.push(format!("mutation_applied:{}", cmd.op));
            }
            Ok(()) => {}
            Err(e) => report.annotations.push(format!("mutation_failed:{e}")),
        }
    }

    fn regenerate_ke(&mut self, m: &mut IkeMessage, group_id: u16, report: &mut AgentReport) {
        let group = match TransformId::new(TransformKind::Dh, group_id) {
            Some(g) => g,
            None => {
                report.annotations.push(format!("ke_not_regenerated:unknown_group_{group_id}"));
                return;
            }
        };
        let mut seed = vec![0u8; 32];
        self.rng.fill_bytes(&mut seed);
        let kp = dh_keypair(group, &seed).expect("registered group");
        for p in &mut m.payloads {
            if let Payload::Ke { group: g, key_data } = p {
                *g = group.id;
                *key_data = kp.public_value.clone();
            }
        }
        if let Some(chosen) = &mut self.chosen {
            chosen.dh = group;
        }
        self.keypair = Some(kp);
        report.annotations.push(format!("ke_regenerated:{}", group.name()));
    }

    /// Commit negotiated state from the message exactly as mutated, deriving
    /// the keys the UE-visible bytes imply. A dropped KE payload commits the
    /// all-zero shared secret; a dropped nonce commits sixteen zero octets.
    fn commit_sa_init(&mut self, sent: &IkeMessage, raw: &[u8], report: &mut AgentReport) {
        let chosen = match &self.chosen {
            Some(c) => c.clone(),
            None => return,
        };
        let (encr, prf, integ, dh) = match sent.payload(payload_type::SA) {
            Some(Payload::Sa(props)) if !props.is_empty() => {
                let find = |kind: u8| {
                    props[0]
                        .transforms
                        .iter()
                        .find(|t| t.kind == kind)
                        .map(|t| t.id)
                };
                let ids = (find(1), find(2), find(3), find(4));
                let resolve = |kind, id: Option<u16>, fallback: TransformId| {
                    id.and_then(|i| TransformId::new(kind, i)).unwrap_or(fallback)
                };
                (
                    resolve(TransformKind::Encr, ids.0, chosen.encr),
                    resolve(TransformKind::Prf, ids.1, chosen.prf),
                    resolve(TransformKind::Integ, ids.2, chosen.integ),
                    resolve(TransformKind::Dh, ids.3, chosen.dh),
                )
            }
            _ => (chosen.encr, chosen.prf, chosen.integ, chosen.dh),
        };
        let shared = match sent.payload(payload_type::KE) {
            Some(Payload::Ke { .. }) => {
                let kp = self.keypair.as_ref().expect("ke built implies keypair");
                match dh_shared(dh, kp, &self.ue_pub) {
                    Ok(s) => s,
                    Err(_) => {
                        report.annotations.push("shared_secret_unavailable".into());
                        zero_shared_secret(dh).expect("registered group")
                    }
                }
            }
            _ => {
                report.annotations.push("zero_shared_committed".into());
                zero_shared_secret(dh).expect("registered group")
            }
        };
        let nr: Vec<u8> = match sent.payload(payload_type::NONCE) {
            Some(Payload::Nonce(data)) => data.clone(),
            _ => {
                report.annotations.push("zero_nonce_committed".into());
                vec![0u8; 16]
            }
        };
        let lengths = KeyLengths::for_transforms(encr, integ, prf);
        let keys = derive_ike_keys(prf, &self.ni, &nr, &shared, &self.spi_i, &self.spi_r, lengths)
            .expect("nonces non-empty");
        self.sa = Some(SaCrypto { encr, integ, keys });
        self.chosen = Some(ChosenTransforms { proposal_number: chosen.proposal_number, encr, prf, integ, dh });
        self.own_sa_init_response_raw = raw.to_vec();
        self.stage = Stage::SaInitDone;
        let weak: Vec<&str> = [encr, prf, integ, dh].iter().filter(|t| t.is_weak()).map(|t| t.name()).collect();
        if !weak.is_empty() {
            report.annotations.push(format!("weak_sa:{}", weak.join(",")));
        }
    }

    fn build_sa_init_response(&mut self, cmd: &Command) -> AgentReport {
        let mut report = AgentReport { step_complete: true, ..Default::default() };
        let (request, raw) = match self.take_trigger() {
            Some(t) => t,
            None => return self.timeout_report(cmd),
        };
        self.spi_i = request.header.spi_i;
        self.rng.fill_bytes(&mut self.spi_r);
        self.rng.fill_bytes(&mut self.nr);
        self.ue_first_request_raw = raw;

        let offered = match request.payload(payload_type::SA) {
            Some(Payload::Sa(p)) => p.clone(),
            _ => {
                report.annotations.push("request_missing_sa".into());
                return report;
            }
        };
        let (ue_group, ue_pub) = match request.payload(payload_type::KE) {
            Some(Payload::Ke { group, key_data }) => (*group, key_data.clone()),
            _ => {
                report.annotations.push("request_missing_ke".into());
                return report;
            }
        };
        self.ni = match request.payload(payload_type::NONCE) {
            Some(Payload::Nonce(data)) => data.clone(),
            _ => {
                report.annotations.push("request_missing_nonce".into());
                return report;
            }
        };
        let mut chosen = match select_proposal(&offered, &AcceptancePolicy::allow_all_registered()) {
            Ok(c) => c,
            Err(_) => {
                report.annotations.push("no_proposal_chosen".into());
                let reply = IkeMessage::new(
                    IkeHeader::new(self.spi_i, [0; 8], ExchangeType::IKE_SA_INIT, FLAG_RESPONSE, 0),
                    vec![Payload::Notify(NotifyPayload::error(crate::ike::notify::NO_PROPOSAL_CHOSEN))],
                );
                let bytes = serialize_message(&reply).expect("own message");
                let record = self.sent_record("no_proposal_chosen", "ike", &bytes);
                self.history.insert(cmd.id, PacketFrame { transport: "ike".into(), hex: record.hex.clone() });
                report.sent.push(record);
                return report;
            }
        };
        // answer on the group the UE keyed, when it offered that group
        if let Some(g) = TransformId::new(TransformKind::Dh, ue_group) {
            let offered_dh = offered
                .first()
                .map(|p| p.transforms.iter().any(|t| t.kind == 4 && t.id == ue_group))
                .unwrap_or(false);
            if offered_dh {
                chosen.dh = g;
            }
        }
        self.ue_pub = ue_pub;
        self.ue_ke_group = ue_group;

        let mut seed = vec![0u8; 32];
        self.rng.fill_bytes(&mut seed);
        let kp = dh_keypair(chosen.dh, &seed).expect("registered group");
        let mut response = IkeMessage::new(
            IkeHeader::new(self.spi_i, self.spi_r, ExchangeType::IKE_SA_INIT, FLAG_RESPONSE, 0),
            vec![
                Payload::Sa(vec![chosen.to_proposal()]),
                Payload::Ke { group: chosen.dh.id, key_data: kp.public_value.clone() },
                Payload::Nonce(self.nr.to_vec()),
            ],
        );
        self.keypair = Some(kp);
        self.chosen = Some(chosen);

        self.apply_mutation(cmd, &mut response, &mut report);
        let bytes = match serialize_message(&response) {
            Ok(b) => b,
            Err(e) => {
                report.annotations.push(format!("serialize_failed:{e}"));
                return report;
            }
        };
        self.commit_sa_init(&response, &bytes, &mut report);
        let record = self.sent_record(&cmd.name, "ike", &bytes);
        self.history.insert(cmd.id, PacketFrame { transport: "ike".into(), hex: record.hex.clone() });
        report.sent.push(record);
        report
    }

    fn open_trigger(&mut self, cmd: &Command, report: &mut AgentReport) -> Option<IkeMessage> {
        let (message, _raw) = match self.take_trigger() {
            Some(t) => t,
            None => {
                *report = self.timeout_report(cmd);
                return None;
            }
        };
        let sa = match &self.sa {
            Some(sa) => sa.clone(),
            None => {
                report.annotations.push("no_sa_for_decrypt".into());
                return None;
            }
        };
        match open_message(&message, &sa, true) {
            Ok(inner) => Some(inner),
            Err(e) => {
                report.annotations.push(format!("decrypt_fail:{e}"));
                None
            }
        }
    }

    fn seal_and_record(
        &mut self,
        cmd: &Command,
        payloads: Vec<Payload>,
        msg_id: u32,
        report: &mut AgentReport,
    ) {
        let mut inner = IkeMessage::new(
            IkeHeader::new(self.spi_i, self.spi_r, ExchangeType::IKE_AUTH, FLAG_RESPONSE, msg_id),
            payloads,
        );
        self.apply_mutation(cmd, &mut inner, report);
        let sa = match &self.sa {
            Some(sa) => sa.clone(),
            None => {
                report.annotations.push("no_sa_for_seal".into());
                return;
            }
        };
        let iv_seed = self.next_iv_seed();
        let sealed = match seal_message(&inner, &sa, false, &iv_seed) {
            Ok(s) => s,
            Err(e) => {
                report.annotations.push(format!("seal_failed:{e}"));
                return;
            }
        };
        match serialize_message(&sealed) {
            Ok(bytes) => {
                self.responder_msg_id = msg_id;
                let record = self.sent_record(&cmd.name, "ike", &bytes);
                self.history.insert(cmd.id, PacketFrame { transport: "ike".into(), hex: record.hex.clone() });
                report.sent.push(record);
            }
            Err(e) => report.annotations.push(format!("serialize_failed:{e}")),
        }
    }

    fn build_eap_challenge(&mut self, cmd: &Command) -> AgentReport {
        let mut report = AgentReport { step_complete: true, ..Default::default() };
        let inner = match self.open_trigger(cmd, &mut report) {
            Some(m) => m,
            None => return report,
        };
        if let Some(Payload::IdI(id)) = inner.payload(payload_type::ID_I) {
            let claimed = String::from_utf8_lossy(&id.data).to_string();
            report.annotations.push(format!("idi:{claimed}"));
            if claimed != self.subscriber.imsi {
                report.annotations.push("imsi_mismatch".into());
            }
        } else {
            report.annotations.push("missing_idi".into());
        }
        let mut rand = [0u8; 16];
        self.rng.fill_bytes(&mut rand);
        let vector = aka_challenge(&self.subscriber.imsi, &self.subscriber.secret_k, &self.subscriber.op_key, &rand);
        let eap = EapMessage {
            code: EapCode::Request,
            identifier: 1,
            subtype: Some(AkaSubtype::Challenge),
            attributes: vec![EapAttribute::full(AT_RAND, &rand), EapAttribute::full(AT_AUTN, &vector.autn)],
        }
        .with_mac(&vector.k_aut);
        self.vector = Some(vector);
        self.stage = Stage::EapInProgress;
        self.responder_msg_id = 1;
        let payloads = vec![
            Payload::IdR(IdPayload { id_type: 2, data: b"ims".to_vec() }),
            Payload::Eap(eap.serialize()),
        ];
        self.seal_and_record(cmd, payloads, 1, &mut report);
        report
    }

    fn build_eap_success(&mut self, cmd: &Command) -> AgentReport {
        let mut report = AgentReport { step_complete: true, ..Default::default() };
        let inner = match self.open_trigger(cmd, &mut report) {
            Some(m) => m,
            None => return report,
        };
        let verified = match (inner.payload(payload_type::EAP), &self.vector) {
            (Some(Payload::Eap(bytes)), Some(vector)) => match EapMessage::parse(bytes) {
                Ok(eap) => {
                    let res_ok = eap
                        .attribute(AT_RES)
                        .and_then(|a| a.res_data())
                        .map(|res| res == vector.xres)
                        .unwrap_or(false);
                    res_ok && eap.verify_mac(&vector.k_aut)
                }
                Err(_) => false,
            },
            _ => false,
        };
        if verified {
            report.annotations.push("eap_response_verified".into());
        } else {
            report.annotations.push("eap_response_invalid".into());
        }
        let eap = if verified { EapMessage::success(2) } else { EapMessage::failure(2) };
        self.stage = Stage::AwaitAuth;
        self.seal_and_record(cmd, vec![Payload::Eap(eap.serialize())], 2, &mut report);
        report
    }

    fn auth_value(&self, initiator: bool) -> Option<Vec<u8>> {
        let chosen = self.chosen.as_ref()?;
        let sa = self.sa.as_ref()?;
        let vector = self.vector.as_ref()?;
        let (raw, nonce, sk_p, id_bytes): (&[u8], Vec<u8>, &[u8], &[u8]) = if initiator {
            (&self.ue_first_request_raw, self.committed_nr(), &sa.keys.sk_pi, self.subscriber.imsi.as_bytes())
        } else {
            (&self.own_sa_init_response_raw, self.ni.clone(), &sa.keys.sk_pr, b"ims")
        };
        let id_mac = prf_eval(chosen.prf, sk_p, id_bytes).ok()?;
        let mut data = raw.to_vec();
        data.extend_from_slice(&nonce);
        data.extend_from_slice(&id_mac);
        prf_eval(chosen.prf, &vector.msk, &data).ok()
    }

    /// Nr exactly as the committed response carried it (zeros if dropped).
    fn committed_nr(&self) -> Vec<u8> {
        parse_message(&self.own_sa_init_response_raw)
            .ok()
            .and_then(|m| match m.payload(payload_type::NONCE) {
                Some(Payload::Nonce(data)) => Some(data.clone()),
                _ => None,
            })
            .unwrap_or_else(|| vec![0u8; 16])
    }

    fn build_auth_final(&mut self, cmd: &Command) -> AgentReport {
        let mut report = AgentReport { step_complete: true, ..Default::default() };
        let inner = match self.open_trigger(cmd, &mut report) {
            Some(m) => m,
            None => return report,
        };
        let ue_auth_ok = match (inner.payload(payload_type::AUTH), self.auth_value(true)) {
            (Some(Payload::Auth(a)), Some(expect)) => a.data == expect,
            _ => false,
        };
        report
            .annotations
            .push(if ue_auth_ok { "ue_auth_ok".into() } else { "ue_auth_invalid".into() });
        let auth = self.auth_value(false).unwrap_or_default();
        self.stage = Stage::Established;
        report.annotations.push("sa_established".into());
        self.seal_and_record(
            cmd,
            vec![Payload::Auth(AuthPayload { method: 2, data: auth })],
            3,
            &mut report,
        );
        report
    }

    fn build_substitute(&mut self, cmd: &Command) -> AgentReport {
        let mut report = AgentReport { step_complete: true, ..Default::default() };
        let wire = cmd.substitute_with.as_deref().expect("validated command");
        let kind = match parse_substitute(wire) {
            Some(k) => k,
            None => {
                report.annotations.push(format!("unknown_substitute:{wire}"));
                return report;
            }
        };
        let (notify_type, group) = match kind {
            SubstituteKind::IkeNotify { notify_type, group } => (notify_type, group),
            SubstituteKind::SipStatus { .. } => {
                report.annotations.push("sip_error_on_ike_step".into());
                return report;
            }
        };
        let notify = match group {
            Some(g) => NotifyPayload::invalid_ke(g.id),
            None => NotifyPayload::error(notify_type),
        };
        if cmd.name == "ike_sa_init_response" {
            // plaintext error in place of the SA_INIT response
            let (request, _raw) = match self.take_trigger() {
                Some(t) => t,
                None => return self.timeout_report(cmd),
            };
            self.spi_i = request.header.spi_i;
            let reply = IkeMessage::new(
                IkeHeader::new(self.spi_i, [0; 8], ExchangeType::IKE_SA_INIT, FLAG_RESPONSE, 0),
                vec![Payload::Notify(notify)],
            );
            let bytes = serialize_message(&reply).expect("own message");
            report.annotations.push(format!("substituted:{wire}"));
            let record = self.sent_record(wire, "ike", &bytes);
            self.history.insert(cmd.id, PacketFrame { transport: "ike".into(), hex: record.hex.clone() });
            report.sent.push(record);
            return report;
        }
        // sealed error in place of an IKE_AUTH-stage response
        if self.open_trigger(cmd, &mut report).is_none() && report.status.is_some() {
            return report;
        }
        report.annotations.push(format!("substituted:{wire}"));
        let msg_id = self.responder_msg_id + 1;
        self.responder_msg_id = msg_id;
        let mut sub_cmd = cmd.clone();
        sub_cmd.op = Op::Send;
        sub_cmd.name = wire.to_string();
        self.seal_and_record(&sub_cmd, vec![Payload::Notify(notify)], msg_id, &mut report);
        report
    }

    fn execute(&mut self, cmd: &Command) -> AgentReport {
        match cmd.op {
            Op::Replay => {
                let index = cmd.replay_index.expect("validated command");
                match self.history.get(&index).cloned() {
                    Some(frame) => {
                        let mut report = AgentReport { step_complete: true, ..Default::default() };
                        report.annotations.push(format!("replayed_command:{index}"));
                        report.sent.push(MessageRecord {
                            sender: Receiver::Epdg,
                            protocol: "ike".into(),
                            transport: frame.transport.clone(),
                            name: Some(format!("replay[{index}]")),
                            detail: Vec::new(),
                            error_indication: false,
                            hex: frame.hex,
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
                "ike_sa_init_response" => self.build_sa_init_response(cmd),
                "eap_challenge" => self.build_eap_challenge(cmd),
                "eap_success" => self.build_eap_success(cmd),
                "ike_auth_final_response" => self.build_auth_final(cmd),
                other => AgentReport {
                    status: Some("error".into()),
                    annotations: vec![format!("unknown_message_name:{other}")],
                    step_complete: true,
                    ..Default::default()
                },
            },
        }
    }

    fn seal_sip_down(&mut self, sip_hex: &str) -> AgentReport {
        let mut report = AgentReport { step_complete: true, ..Default::default() };
        let plain = match hex::decode(sip_hex) {
            Ok(p) => p,
            Err(_) => {
                report.annotations.push("bad_sip_hex".into());
                return report;
            }
        };
        let sa = match &self.sa {
            Some(sa) => sa.clone(),
            None => {
                report.annotations.push("no_sa_for_sip".into());
                return report;
            }
        };
        let iv_seed = self.next_iv_seed();
        match crate::crypto::seal(sa.encr, sa.integ, &sa.keys.sk_er, &sa.keys.sk_ar, &plain, &iv_seed) {
            Ok(sealed) => {
                report.annotations.push("sip_sealed_down".into());
                report.sent.push(MessageRecord {
                    sender: Receiver::Epdg,
                    protocol: "sip".into(),
                    transport: "tunnel".into(),
                    name: None,
                    detail: Vec::new(),
                    error_indication: false,
                    hex: hex::encode_upper(sealed),
                });
            }
            Err(e) => report.annotations.push(format!("sip_seal_failed:{e}")),
        }
        report
    }
}

impl Agent for EpdgAgent {
    fn handle(&mut self, env: AgentEnvelope) -> Vec<AgentEnvelope> {
        let report = match &env.body {
            EnvelopeBody::Command(cmd) => self.execute(cmd),
            EnvelopeBody::Deliver(Delivery::Packets { frames }) => {
                let mut report = AgentReport { step_complete: true, ..Default::default() };
                for frame in frames {
                    self.receive_frame(frame, &mut report);
                }
                report
            }
            EnvelopeBody::Deliver(Delivery::SipToSeal { hex }) => self.seal_sip_down(hex),
            EnvelopeBody::Deliver(Delivery::SipRequest { .. }) | EnvelopeBody::Report(_) => AgentReport {
                status: Some("error".into()),
                annotations: vec!["unexpected_envelope".into()],
                step_complete: true,
                ..Default::default()
            },
        };
        vec![AgentEnvelope::report(env.seq, Receiver::Epdg, report)]
    }
}
