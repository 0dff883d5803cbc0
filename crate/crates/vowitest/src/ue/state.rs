//! The simulated UE: IKEv2 initiator, EAP-AKA peer and SIP registrar client
//! in one event-driven state machine. Compliance deviations are switched by
//! the profile; the compliant path never answers an adversarial message —
//! it aborts silently and recovers on the next wifi cycle.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::crypto::{
    aka_challenge, derive_ike_keys, dh_keypair, dh_shared, prf_eval, verify_autn, zero_shared_secret,
    KeyLengths, TransformId, TransformKind,
};
use crate::eap::{AkaSubtype, EapAttribute, EapCode, EapMessage, AT_AUTN, AT_RAND};
use crate::ike::{
    open_message, parse_message, payload_type, seal_message, serialize_message, ExchangeType,
    IdPayload, IkeHeader, IkeMessage, Payload, Proposal, SaCrypto, Transform, TransformAttribute,
    FLAG_INITIATOR, IKE_VERSION,
};
use crate::sip::{
    build_register, decode_aka_nonce, parse_sip, serialize_sip, AuthChallenge, RegisterParams,
    SecurityMechanism, SipMessage, DIGEST_ALGORITHM_AKA, DIGEST_ALGORITHM_MD5,
};

use super::profile::UeProfile;

/// A frame on the simulated access link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NetPacket {
    /// An IKEv2 datagram.
    Ike(Vec<u8>),
    /// A sealed SIP frame riding the established channel.
    Tunnel(Vec<u8>),
}

impl NetPacket {
    pub fn bytes(&self) -> &[u8] {
        match self {
            NetPacket::Ike(b) | NetPacket::Tunnel(b) => b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UeStage {
    Off,
    SaInitSent,
    AuthInProgress,
    IkeEstablished,
    SipChallenged,
    Registered,
    Aborted,
}

#[derive(Debug)]
pub enum UeEvent {
    WifiOn,
    WifiOff,
    Network(NetPacket),
}

#[derive(Debug, Default)]
pub struct UeOutput {
    pub packets: Vec<NetPacket>,
    pub annotations: Vec<String>,
}

impl UeOutput {
    fn note(&mut self, a: impl Into<String>) {
        self.annotations.push(a.into());
    }
}

pub struct UeState {
    pub stage: UeStage,
    /// Sticky across wifi cycles under deadlock_on_error.
    pub deadlocked: bool,
    rng: ChaCha20Rng,
    spi_i: [u8; 8],
    spi_r: [u8; 8],
    ni: [u8; 16],
    /// Nr as consumed (16 zero octets on the zero-nonce path).
    nr: Vec<u8>,
    dh_group: Option<TransformId>,
    keypair: Option<crate::crypto::DhKeyPair>,
    sa: Option<SaCrypto>,
    prf: Option<TransformId>,
    msk: Option<Vec<u8>>,
    k_aut: Option<Vec<u8>>,
    res: Option<Vec<u8>>,
    msg_id: u32,
    eap_identifier: u8,
    first_request_raw: Option<Vec<u8>>,
    sa_init_response_raw: Option<Vec<u8>>,
    seal_counter: u64,
    sip_cseq: u32,
    sip_call_id: String,
    sip_tag: String,
    sip_challenge: Option<AuthChallenge>,
    cached_register_2: Vec<NetPacket>,
    /// hash(incoming) -> reply packets, for replay recognition.
    replies: Vec<([u8; 32], Vec<NetPacket>)>,
}

fn hash32(bytes: &[u8]) -> [u8; 32] {
    Sha256::new().chain_update(bytes).finalize().into()
}

/// Create a powered-off UE. `seed` fixes every random choice the UE makes.
pub fn ue_reset(profile: &UeProfile, seed: u64) -> UeState {
    let mut h = Sha256::new();
    h.update(b"ue-state");
    h.update(seed.to_be_bytes());
    h.update(profile.name.as_bytes());
    UeState {
        stage: UeStage::Off,
        deadlocked: false,
        rng: ChaCha20Rng::from_seed(h.finalize().into()),
        spi_i: [0; 8],
        spi_r: [0; 8],
        ni: [0; 16],
        nr: Vec::new(),
        dh_group: None,
        keypair: None,
        sa: None,
        prf: None,
        msk: None,
        k_aut: None,
        res: None,
        msg_id: 0,
        eap_identifier: 0,
        first_request_raw: None,
        sa_init_response_raw: None,
        seal_counter: 0,
        sip_cseq: 0,
        sip_call_id: String::new(),
        sip_tag: String::new(),
        sip_challenge: None,
        cached_register_2: Vec::new(),
        replies: Vec::new(),
    }
}

impl UeState {
    fn abort(&mut self, out: &mut UeOutput, profile: &UeProfile, reason: &str, message_caused: bool) {
        out.note(format!("ue_abort:{reason}"));
        self.stage = UeStage::Aborted;
        if message_caused && profile.flags.deadlock_on_error {
            self.deadlocked = true;
            out.note("ue_deadlocked");
        }
    }

    fn next_iv_seed(&mut self) -> Vec<u8> {
        self.seal_counter += 1;
        let mut seed = b"ue-seal".to_vec();
        seed.extend_from_slice(&self.spi_i);
        seed.extend_from_slice(&self.seal_counter.to_be_bytes());
        seed
    }

    fn advertised_proposal(&self, profile: &UeProfile) -> Proposal {
        let mut transforms = Vec::new();
        for t in &profile.advertised.encr {
            let mut tr = Transform::new(TransformKind::Encr.wire_type(), t.id);
            if t.name() == "ENCR_AES_CBC_128" {
                tr.attributes.push(TransformAttribute::key_length(128));
            }
            transforms.push(tr);
        }
        for t in &profile.advertised.prf {
            transforms.push(Transform::new(TransformKind::Prf.wire_type(), t.id));
        }
        for t in &profile.advertised.integ {
            transforms.push(Transform::new(TransformKind::Integ.wire_type(), t.id));
        }
        for t in &profile.advertised.dh {
            transforms.push(Transform::new(TransformKind::Dh.wire_type(), t.id));
        }
        Proposal { number: 1, protocol_id: 1, spi: Vec::new(), transforms }
    }

    fn build_sa_init(&mut self, profile: &UeProfile, group: TransformId, out: &mut UeOutput) -> NetPacket {
        let mut seed = vec![0u8; 32];
        self.rng.fill_bytes(&mut seed);
        let kp = dh_keypair(group, &seed).expect("registered group");
        self.rng.fill_bytes(&mut self.ni);
        self.dh_group = Some(group);

        let header = IkeHeader::new(self.spi_i, [0; 8], ExchangeType::IKE_SA_INIT, FLAG_INITIATOR, 0);
        let m = IkeMessage::new(
            header,
            vec![
                Payload::Sa(vec![self.advertised_proposal(profile)]),
                Payload::Ke { group: group.id, key_data: kp.public_value.clone() },
                Payload::Nonce(self.ni.to_vec()),
            ],
        );
        self.keypair = Some(kp);
        let bytes = serialize_message(&m).expect("own message serializes");
        self.first_request_raw = Some(bytes.clone());
        out.note(format!("ue_sa_init:{}", group.name()));
        NetPacket::Ike(bytes)
    }

    fn power_on(&mut self, profile: &UeProfile, out: &mut UeOutput) {
        self.rng.fill_bytes(&mut self.spi_i);
        self.spi_r = [0; 8];
        self.msg_id = 0;
        self.sip_cseq = 0;
        self.sa = None;
        self.replies.clear();
        self.sip_call_id = format!("cid-{:016x}", self.rng.gen::<u64>());
        self.sip_tag = format!("{:08x}", self.rng.gen::<u32>());
        let group = profile.advertised.dh[0];
        let packet = self.build_sa_init(profile, group, out);
        self.stage = UeStage::SaInitSent;
        out.packets.push(packet);
    }

    /// Would this UE accept the responder's chosen transform for a kind?
    fn accepts_chosen(&self, profile: &UeProfile, kind: TransformKind, id: u16) -> bool {
        let t = match TransformId::new(kind, id) {
            Some(t) => t,
            None => return false,
        };
        let advertised = match kind {
            TransformKind::Encr => &profile.advertised.encr,
            TransformKind::Integ => &profile.advertised.integ,
            TransformKind::Prf => &profile.advertised.prf,
            TransformKind::Dh => &profile.advertised.dh,
        };
        if advertised.contains(&t) {
            return true;
        }
        if t.is_weak() {
            return match kind {
                TransformKind::Encr => profile.flags.accept_weak_encr,
                TransformKind::Integ => profile.flags.accept_weak_integ,
                TransformKind::Prf => profile.flags.accept_weak_prf,
                TransformKind::Dh => false,
            };
        }
        false
    }

    /// Retry decision for INVALID_KE_PAYLOAD carrying group `g`.
    fn should_retry_ke(&self, profile: &UeProfile, g: TransformId) -> bool {
        let floor_bits = profile
            .downgrade_floor
            .and_then(|f| crate::crypto::modulus_bits(f).ok())
            .unwrap_or_else(|| {
                // default floor: the strongest advertised group
                profile
                    .advertised
                    .dh
                    .iter()
                    .filter_map(|t| crate::crypto::modulus_bits(*t).ok())
                    .max()
                    .unwrap_or(2048)
            });
        let bits = match crate::crypto::modulus_bits(g) {
            Ok(b) => b,
            Err(_) => return false,
        };
        if profile.flags.accept_downgrade_ke {
            return bits >= floor_bits;
        }
        if profile.flags.accept_weak_ke_retry {
            return profile.advertised.dh.contains(&g);
        }
        profile.advertised.dh.contains(&g) && bits >= floor_bits && !g.is_weak()
    }

    fn remember_reply(&mut self, incoming: &[u8], packets: &[NetPacket]) {
        self.replies.push((hash32(incoming), packets.to_vec()));
    }

    fn known_reply(&self, incoming: &[u8]) -> Option<&[NetPacket]> {
        let h = hash32(incoming);
        self.replies.iter().find(|(k, _)| *k == h).map(|(_, v)| v.as_slice())
    }

    fn seal_and_send(
        &mut self,
        payloads: Vec<Payload>,
        exchange: ExchangeType,
        out: &mut UeOutput,
    ) -> NetPacket {
        let sa = self.sa.clone().expect("sealed sends require an SA");
        let header = IkeHeader::new(self.spi_i, self.spi_r, exchange, FLAG_INITIATOR, self.msg_id);
        let m = IkeMessage::new(header, payloads);
        let iv_seed = self.next_iv_seed();
        let sealed = seal_message(&m, &sa, true, &iv_seed).expect("own message seals");
        out.note(format!("ue_send_msg_id:{}", self.msg_id));
        self.msg_id += 1;
        NetPacket::Ike(serialize_message(&sealed).expect("own message serializes"))
    }

    fn send_tunnel_sip(&mut self, sip: &SipMessage) -> NetPacket {
        let sa = self.sa.clone().expect("tunnel requires an SA");
        let iv_seed = self.next_iv_seed();
        let bytes = serialize_sip(sip);
        let sealed = crate::crypto::seal(sa.encr, sa.integ, &sa.keys.sk_ei, &sa.keys.sk_ai, &bytes, &iv_seed)
            .expect("tunnel seal");
        NetPacket::Tunnel(sealed)
    }

    fn auth_data(&self, initiator: bool, id_bytes: &[u8]) -> Vec<u8> {
        let prf = self.prf.expect("negotiated prf");
        let sa = self.sa.as_ref().expect("negotiated sa");
        let msk = self.msk.as_ref().expect("msk present");
        let (raw, nonce, sk_p) = if initiator {
            (self.first_request_raw.as_deref().unwrap_or_default(), self.nr.clone(), &sa.keys.sk_pi)
        } else {
            (self.sa_init_response_raw.as_deref().unwrap_or_default(), self.ni.to_vec(), &sa.keys.sk_pr)
        };
        let id_mac = prf_eval(prf, sk_p, id_bytes).expect("registered prf");
        let mut data = raw.to_vec();
        data.extend_from_slice(&nonce);
        data.extend_from_slice(&id_mac);
        prf_eval(prf, msk, &data).expect("registered prf")
    }
    /// Drive the machine with one event; returns everything the UE emits.
    pub fn step(&mut self, profile: &UeProfile, event: UeEvent) -> UeOutput {
        let mut out = UeOutput::default();
        match event {
            UeEvent::WifiOn => {
                if self.deadlocked {
                    out.note("ue_wifi_on_ignored_deadlock");
                    return out;
                }
                self.power_on(profile, &mut out);
            }
            UeEvent::WifiOff => {
                if !self.deadlocked {
                    self.stage = UeStage::Off;
                }
                out.note("ue_wifi_off");
            }
            UeEvent::Network(packet) => {
                if matches!(self.stage, UeStage::Off) {
                    out.note("ue_dropped_packet_while_off");
                    return out;
                }
                self.handle_packet(profile, packet, &mut out);
            }
        }
        out
    }

    fn handle_packet(&mut self, profile: &UeProfile, packet: NetPacket, out: &mut UeOutput) {
        // replay recognition applies in every stage, including aborted
        if let Some(cached) = self.known_reply(packet.bytes()) {
            let cached: Vec<NetPacket> = cached.to_vec();
            let respond = profile.flags.respond_to_replay
                || profile
                    .flake
                    .as_ref()
                    .map(|f| f.operator == "replay" && self.rng.gen_bool(f.probability))
                    .unwrap_or(false);
            if respond {
                out.note("ue_replay_responded");
                out.packets.extend(cached);
            } else {
                out.note("ue_replay_ignored");
            }
            return;
        }
        if matches!(self.stage, UeStage::Aborted) {
            out.note("ue_ignored_while_aborted");
            return;
        }
        let incoming = packet.bytes().to_vec();
        let mut replies = Vec::new();
        match packet {
            NetPacket::Ike(bytes) => self.handle_ike(profile, &bytes, out, &mut replies),
            NetPacket::Tunnel(bytes) => self.handle_tunnel(profile, &bytes, out, &mut replies),
        }
        if !replies.is_empty() {
            self.remember_reply(&incoming, &replies);
            out.packets.extend(replies);
        }
    }

    fn handle_ike(
        &mut self,
        profile: &UeProfile,
        bytes: &[u8],
        out: &mut UeOutput,
        replies: &mut Vec<NetPacket>,
    ) {
        let m = match parse_message(bytes) {
            Ok(m) => m,
            Err(e) => {
                self.abort(out, profile, &format!("ike_parse:{e}"), true);
                return;
            }
        };
        if m.header.version != IKE_VERSION {
            self.abort(out, profile, "ike_bad_version", true);
            return;
        }
        match (self.stage, m.header.exchange_type) {
            (UeStage::SaInitSent, ExchangeType::IKE_SA_INIT) => {
                self.handle_sa_init_response(profile, &m, bytes, out, replies)
            }
            (UeStage::AuthInProgress, ExchangeType::IKE_AUTH) => {
                self.handle_ike_auth_response(profile, &m, out, replies)
            }
            _ => {
                self.abort(out, profile, "ike_unexpected_exchange", true);
            }
        }
    }

    fn handle_sa_init_response(
        &mut self,
        profile: &UeProfile,
        m: &IkeMessage,
        raw: &[u8],
        out: &mut UeOutput,
        replies: &mut Vec<NetPacket>,
    ) {
        if m.header.message_id != 0 {
            self.abort(out, profile, "ike_bad_message_id", true);
            return;
        }
        if let Some(n) = m.first_notify_error() {
            if let Some(group_num) = n.ke_group() {
                let group = TransformId::new(TransformKind::Dh, group_num);
                match group {
                    Some(g) if self.should_retry_ke(profile, g) => {
                        out.note(format!("ue_ke_retry:{}", g.name()));
                        let packet = self.build_sa_init(profile, g, out);
                        self.stage = UeStage::SaInitSent;
                        replies.push(packet);
                    }
                    _ => {
                        out.note("ue_ke_retry_refused");
                        self.abort(out, profile, "invalid_ke_refused", true);
                    }
                }
            } else {
                self.abort(out, profile, &format!("notify_error:{}", n.notify_type), true);
            }
            return;
        }

        let proposals = match m.payload(payload_type::SA) {
            Some(Payload::Sa(p)) => p,
            _ => {
                self.abort(out, profile, "missing_sa", true);
                return;
            }
        };
        let chosen = proposals.first().map(|p| {
            let find = |kind: u8| p.transforms.iter().find(|t| t.kind == kind).map(|t| t.id);
            (find(1), find(2), find(3), find(4))
        });
        let (encr_id, prf_id, integ_id, dh_id) = match chosen {
            Some((Some(e), Some(p), Some(i), Some(d))) => (e, p, i, d),
            _ => {
                self.abort(out, profile, "sa_incomplete", true);
                return;
            }
        };
        let all_accepted = self.accepts_chosen(profile, TransformKind::Encr, encr_id)
            && self.accepts_chosen(profile, TransformKind::Prf, prf_id)
            && self.accepts_chosen(profile, TransformKind::Integ, integ_id)
            && self.accepts_chosen(profile, TransformKind::Dh, dh_id);
        if !all_accepted {
            self.abort(out, profile, "sa_rejected", true);
            return;
        }
        let encr = TransformId::new(TransformKind::Encr, encr_id).expect("accepted id is registered");
        let prf = TransformId::new(TransformKind::Prf, prf_id).expect("accepted id is registered");
        let integ = TransformId::new(TransformKind::Integ, integ_id).expect("accepted id is registered");
        let dh = TransformId::new(TransformKind::Dh, dh_id).expect("accepted id is registered");
        if Some(dh) != self.dh_group {
            self.abort(out, profile, "dh_group_mismatch", true);
            return;
        }
        let weak_names: Vec<&str> = [encr, prf, integ, dh]
            .iter()
            .filter(|t| t.is_weak())
            .map(|t| t.name())
            .collect();
        if !weak_names.is_empty() {
            out.note(format!("weak_sa:{}", weak_names.join(",")));
        }

        let shared = match m.payload(payload_type::KE) {
            Some(Payload::Ke { group, key_data }) => {
                if *group != dh.id {
                    self.abort(out, profile, "ke_group_mismatch", true);
                    return;
                }
                match dh_shared(dh, self.keypair.as_ref().expect("keypair exists"), key_data) {
                    Ok(s) => s,
                    Err(e) => {
                        self.abort(out, profile, &format!("bad_peer_value:{e}"), true);
                        return;
                    }
                }
            }
            _ => {
                if profile.flags.zero_dh_on_missing_ke {
                    out.note("ue_zero_dh_shared");
                    zero_shared_secret(dh).expect("registered group")
                } else {
                    self.abort(out, profile, "missing_ke", true);
                    return;
                }
            }
        };
        let nr = match m.payload(payload_type::NONCE) {
            Some(Payload::Nonce(data)) => data.clone(),
            _ => {
                if profile.flags.zero_nonce_on_missing_nonce {
                    out.note("ue_zero_nonce");
                    vec![0u8; 16]
                } else {
                    self.abort(out, profile, "missing_nonce", true);
                    return;
                }
            }
        };

        self.spi_r = m.header.spi_r;
        let lengths = KeyLengths::for_transforms(encr, integ, prf);
        let keys = derive_ike_keys(prf, &self.ni, &nr, &shared, &self.spi_i, &self.spi_r, lengths)
            .expect("nonces are non-empty");
        self.sa = Some(SaCrypto { encr, integ, keys });
        self.prf = Some(prf);
        self.nr = nr;
        self.sa_init_response_raw = Some(raw.to_vec());
        self.msg_id = 1;
        self.stage = UeStage::AuthInProgress;
        out.note(format!("ue_sa_established:{},{},{},{}", encr.name(), prf.name(), integ.name(), dh.name()));

        // first IKE_AUTH: identities, no AUTH payload (EAP requested)
        let payloads = vec![
            Payload::IdI(IdPayload { id_type: 3, data: profile.imsi.clone().into_bytes() }),
            Payload::IdR(IdPayload { id_type: 2, data: b"ims".to_vec() }),
        ];
        let packet = self.seal_and_send(payloads, ExchangeType::IKE_AUTH, out);
        replies.push(packet);
    }

    fn handle_ike_auth_response(
        &mut self,
        profile: &UeProfile,
        m: &IkeMessage,
        out: &mut UeOutput,
        replies: &mut Vec<NetPacket>,
    ) {
        // responses must answer the outstanding request
        if self.msg_id == 0 || m.header.message_id != self.msg_id - 1 {
            self.abort(out, profile, "ike_bad_message_id", true);
            return;
        }
        let sa = match &self.sa {
            Some(sa) => sa.clone(),
            None => {
                self.abort(out, profile, "no_sa", true);
                return;
            }
        };
        let inner = match open_message(m, &sa, false) {
            Ok(inner) => inner,
            Err(e) => {
                self.abort(out, profile, &format!("decrypt_fail:{e}"), true);
                return;
            }
        };
        if let Some(n) = inner.first_notify_error() {
            self.abort(out, profile, &format!("notify_error:{}", n.notify_type), true);
            return;
        }
        // only identity, EAP, AUTH, status-notify and vendor payloads belong
        // in the IKE_AUTH responses this flow produces
        let unexpected = inner.payloads.iter().find(|p| {
            !matches!(
                p.type_code(),
                payload_type::ID_R | payload_type::EAP | payload_type::AUTH | payload_type::NOTIFY | payload_type::VENDOR
            )
        });
        if let Some(p) = unexpected {
            self.abort(out, profile, &format!("ike_auth_unexpected_payload:{}", p.type_name()), true);
            return;
        }
        if let Some(Payload::Eap(bytes)) = inner.payload(payload_type::EAP) {
            self.handle_eap(profile, bytes, out, replies);
            return;
        }
        if let Some(Payload::Auth(auth)) = inner.payload(payload_type::AUTH) {
            if self.msk.is_none() {
                self.abort(out, profile, "auth_before_eap", true);
                return;
            }
            let expect = self.auth_data(false, b"ims");
            if auth.data != expect {
                self.abort(out, profile, "responder_auth_invalid", true);
                return;
            }
            self.stage = UeStage::IkeEstablished;
            out.note("ue_ike_established");
            let register = self.build_register_message(profile, None, None, out);
            match register {
                Some(sip) => {
                    let packet = self.send_tunnel_sip(&sip);
                    self.stage = UeStage::SipChallenged;
                    out.note("ue_sip_register_1");
                    replies.push(packet);
                }
                None => self.abort(out, profile, "register_build_failed", false),
            }
            return;
        }
        self.abort(out, profile, "ike_auth_unexpected_content", true);
    }

    fn handle_eap(
        &mut self,
        profile: &UeProfile,
        bytes: &[u8],
        out: &mut UeOutput,
        replies: &mut Vec<NetPacket>,
    ) {
        let eap = match EapMessage::parse(bytes) {
            Ok(e) => e,
            Err(e) => {
                self.abort(out, profile, &format!("eap_parse:{e}"), true);
                return;
            }
        };
        match (eap.code, eap.subtype) {
            (EapCode::Request, Some(AkaSubtype::Challenge)) => {
                let rand = eap.attribute(AT_RAND).and_then(|a| a.data16());
                let autn = eap.attribute(AT_AUTN).and_then(|a| a.data16());
                let (rand, autn) = match (rand, autn) {
                    (Some(r), Some(a)) => (r, a),
                    _ => {
                        self.abort(out, profile, "eap_challenge_malformed", true);
                        return;
                    }
                };
                let k = profile.secret_k().expect("validated profile");
                let op = profile.op_key().expect("validated profile");
                if !verify_autn(&k, &op, &rand, &autn) {
                    self.abort(out, profile, "autn_invalid", true);
                    return;
                }
                let vector = aka_challenge(&profile.imsi, &k, &op, &rand);
                if !eap.verify_mac(&vector.k_aut) {
                    self.abort(out, profile, "at_mac_invalid", true);
                    return;
                }
                self.eap_identifier = eap.identifier;
                self.msk = Some(vector.msk.clone());
                self.k_aut = Some(vector.k_aut.clone());
                self.res = Some(vector.xres.clone());
                out.note("ue_eap_challenge_ok");

                let response = EapMessage {
                    code: EapCode::Response,
                    identifier: eap.identifier,
                    subtype: Some(AkaSubtype::Challenge),
                    attributes: vec![EapAttribute::res(&vector.xres)],
                }
                .with_mac(&vector.k_aut);
                let packet =
                    self.seal_and_send(vec![Payload::Eap(response.serialize())], ExchangeType::IKE_AUTH, out);
                replies.push(packet);
            }
            (EapCode::Success, _) => {
                if self.msk.is_none() {
                    self.abort(out, profile, "eap_success_before_challenge", true);
                    return;
                }
                out.note("ue_eap_success");
                let auth = self.auth_data(true, profile.imsi.as_bytes());
                let packet = self.seal_and_send(
                    vec![Payload::Auth(crate::ike::AuthPayload { method: 2, data: auth })],
                    ExchangeType::IKE_AUTH,
                    out,
                );
                replies.push(packet);
            }
            (EapCode::Failure, _) => {
                self.abort(out, profile, "eap_failure", true);
            }
            _ => {
                self.abort(out, profile, "eap_unexpected", true);
            }
        }
    }

    fn handle_tunnel(
        &mut self,
        profile: &UeProfile,
        bytes: &[u8],
        out: &mut UeOutput,
        replies: &mut Vec<NetPacket>,
    ) {
        let sa = match &self.sa {
            Some(sa) => sa.clone(),
            None => {
                self.abort(out, profile, "tunnel_before_sa", true);
                return;
            }
        };
        let plain = match crate::crypto::open(sa.encr, sa.integ, &sa.keys.sk_er, &sa.keys.sk_ar, bytes) {
            Ok(p) => p,
            Err(e) => {
                self.abort(out, profile, &format!("tunnel_decrypt_fail:{e}"), true);
                return;
            }
        };
        let sip = match parse_sip(&plain) {
            Ok(s) => s,
            Err(e) => {
                self.abort(out, profile, &format!("sip_parse:{e}"), true);
                return;
            }
        };
        match sip.status_code() {
            Some(401) => self.handle_401(profile, &sip, out, replies),
            Some(200) => {
                if matches!(self.stage, UeStage::SipChallenged) {
                    self.stage = UeStage::Registered;
                    out.note("registered");
                } else {
                    self.abort(out, profile, "sip_unexpected_200", true);
                }
            }
            Some(code) if code >= 400 => {
                self.abort(out, profile, &format!("sip_error:{code}"), true);
            }
            _ => {
                self.abort(out, profile, "sip_unexpected", true);
            }
        }
    }

    fn handle_401(
        &mut self,
        profile: &UeProfile,
        sip: &SipMessage,
        out: &mut UeOutput,
        replies: &mut Vec<NetPacket>,
    ) {
        if !matches!(self.stage, UeStage::SipChallenged) {
            self.abort(out, profile, "sip_unexpected_401", true);
            return;
        }
        let challenge = match sip.header("WWW-Authenticate").and_then(AuthChallenge::from_header) {
            Some(c) => c,
            None => {
                self.abort(out, profile, "sip_missing_challenge", true);
                return;
            }
        };
        // a replayed challenge re-seals to fresh tunnel bytes, so recognize
        // it by its nonce rather than by frame hash
        if self.sip_challenge.as_ref().map(|c| c.nonce == challenge.nonce).unwrap_or(false) {
            let respond = profile.flags.respond_to_replay
                || profile
                    .flake
                    .as_ref()
                    .map(|f| f.operator == "replay" && self.rng.gen_bool(f.probability))
                    .unwrap_or(false);
            if respond {
                out.note("ue_replay_responded");
                replies.extend(self.cached_register_2.clone());
            } else {
                out.note("ue_replay_ignored");
            }
            return;
        }
        // sec-agree: the server must answer with its mechanism selection,
        // and a compliant UE walks away from a weak one
        let server_mechs = match sip.header("Security-Server") {
            Some(v) => SecurityMechanism::list_from_value(v),
            None => {
                self.abort(out, profile, "sip_missing_security_server", true);
                return;
            }
        };
        let weak_selected = server_mechs.iter().any(|m| {
            matches!(m.ealg.as_str(), "des-cbc" | "des-ede3-cbc")
                || m.alg == "hmac-md5-96"
        });
        if weak_selected {
            if profile.flags.sip_accept_weak_sec {
                out.note("ue_sip_weak_sec_accepted");
            } else {
                self.abort(out, profile, "sip_weak_sec_refused", true);
                return;
            }
        }

        let response_algorithm = match challenge.algorithm.as_str() {
            DIGEST_ALGORITHM_AKA => DIGEST_ALGORITHM_AKA,
            DIGEST_ALGORITHM_MD5 if profile.flags.sip_accept_md5 => {
                out.note("ue_sip_md5_accepted");
                DIGEST_ALGORITHM_MD5
            }
            DIGEST_ALGORITHM_MD5 if profile.flags.sip_copy_algorithm => {
                out.note("ue_sip_algorithm_copied");
                DIGEST_ALGORITHM_MD5
            }
            other => {
                self.abort(out, profile, &format!("sip_algorithm_unsupported:{other}"), true);
                return;
            }
        };

        // the nonce carries RAND|AUTN regardless of the algorithm label
        let (rand, autn) = match decode_aka_nonce(&challenge.nonce) {
            Some(pair) => pair,
            None => {
                self.abort(out, profile, "sip_nonce_undecodable", true);
                return;
            }
        };
        let k = profile.secret_k().expect("validated profile");
        let op = profile.op_key().expect("validated profile");
        if !verify_autn(&k, &op, &rand, &autn) {
            self.abort(out, profile, "sip_autn_invalid", true);
            return;
        }
        let vector = aka_challenge(&profile.imsi, &k, &op, &rand);
        self.sip_challenge = Some(challenge.clone());

        let register = self.build_register_message(
            profile,
            Some((&challenge, vector.xres.clone(), response_algorithm)),
            Some(&server_mechs),
            out,
        );
        match register {
            Some(sip) => {
                out.note("ue_sip_register_2");
                let packet = self.send_tunnel_sip(&sip);
                self.cached_register_2 = vec![packet.clone()];
                replies.push(packet);
            }
            None => self.abort(out, profile, "register_build_failed", false),
        }
    }

    fn build_register_message(
        &mut self,
        profile: &UeProfile,
        challenge: Option<(&AuthChallenge, Vec<u8>, &str)>,
        security_verify: Option<&[SecurityMechanism]>,
        _out: &mut UeOutput,
    ) -> Option<SipMessage> {
        self.sip_cseq += 1;
        let advertised: Vec<SecurityMechanism> = vec![SecurityMechanism::ipsec("aes-cbc", "hmac-sha-1-96")];
        let branch = format!("{:08x}", self.rng.gen::<u32>());
        let (challenge_ref, secret, algorithm) = match &challenge {
            Some((c, secret, alg)) => (Some(*c), secret.clone(), Some(*alg)),
            None => (None, Vec::new(), None),
        };
        build_register(&RegisterParams {
            identity: &profile.imsi,
            realm: "ims.test",
            contact_host: "ue.invalid",
            security_client: &advertised,
            challenge: challenge_ref,
            secret: &secret,
            response_algorithm: algorithm,
            security_verify,
            cseq: self.sip_cseq,
            call_id: &self.sip_call_id.clone(),
            tag: &self.sip_tag.clone(),
            branch: &branch,
        })
        .ok()
    }
}
