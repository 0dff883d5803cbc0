//! Shared fixtures: repo data paths, the shipped corpus pipeline, and a
//! seeded random IKE message generator for round-trip suites.

#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use vowitest::ike::{
    AuthPayload, DeletePayload, ExchangeType, IdPayload, IkeHeader, IkeMessage, NotifyPayload,
    Payload, Proposal, Transform, TransformAttribute,
};
use vowitest::testcase::TestCase;
use vowitest::testgen::{encode_corpus, parse_properties, FlowGraph, Property};
use vowitest::transform::{generate_corpus, CorpusManifest, MutationConfig};
use vowitest::ue::UeProfile;

pub fn repo_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

pub fn read_repo(rel: &str) -> String {
    let path = repo_path(rel);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn shipped_flow() -> FlowGraph {
    FlowGraph::parse(&read_repo("data/flow.json")).expect("shipped flow graph builds")
}

pub fn shipped_properties() -> Vec<Property> {
    parse_properties(&read_repo("data/properties.json")).expect("shipped properties parse")
}

pub fn shipped_config() -> MutationConfig {
    MutationConfig::parse(&read_repo("data/mutation.json")).expect("shipped config validates")
}

pub fn shipped_profile(name: &str) -> UeProfile {
    UeProfile::load(&repo_path(&format!("profiles/{name}.json"))).expect("shipped profile loads")
}

/// All single-flag profile names, in issue order #1..#10.
pub const ISSUE_PROFILES: [(&str, u32); 10] = [
    ("weak_encr", 1),
    ("weak_integ", 2),
    ("weak_prf", 3),
    ("weak_dh", 4),
    ("weak_ke_retry", 5),
    ("sip_md5", 6),
    ("sip_weak_sec", 7),
    ("zero_dh", 8),
    ("zero_nonce", 9),
    ("downgrade_ke", 10),
];

/// Encode the shipped properties and expand them under the shipped config.
pub fn shipped_corpus() -> (Vec<TestCase>, Vec<TestCase>, CorpusManifest, FlowGraph) {
    let flow = shipped_flow();
    let (ptcs, issues) = encode_corpus(&shipped_properties(), &flow);
    assert!(issues.is_empty(), "shipped corpus encodes cleanly: {issues:?}");
    let (atcs, manifest) = generate_corpus(&ptcs, &shipped_config()).expect("corpus expands");
    (ptcs, atcs, manifest, flow)
}

/// ATCs whose manifest entry carries the given issue tag.
pub fn atcs_tagged(atcs: &[TestCase], manifest: &CorpusManifest, issue: u32) -> Vec<TestCase> {
    let ids: std::collections::BTreeSet<&str> = manifest.tagged_with(issue).into_iter().collect();
    atcs.iter().filter(|t| ids.contains(t.tc_id.as_str())).cloned().collect()
}

fn random_transforms(rng: &mut ChaCha20Rng) -> Vec<Transform> {
    let n = rng.gen_range(1..=4);
    (0..n)
        .map(|_| {
            let mut t = Transform::new(rng.gen_range(1..=4), rng.gen_range(1..=30));
            if rng.gen_bool(0.3) {
                t.attributes.push(TransformAttribute::key_length(rng.gen_range(64..=256)));
            }
            if rng.gen_bool(0.15) {
                let len = rng.gen_range(0..12);
                let mut value = vec![0u8; len];
                rng.fill_bytes(&mut value);
                t.attributes.push(TransformAttribute { attr_type: rng.gen_range(1..0x7FFF), value });
            }
            t
        })
        .collect()
}

fn random_bytes(rng: &mut ChaCha20Rng, n: usize) -> Vec<u8> {
    let mut v = vec![0u8; n];
    rng.fill_bytes(&mut v);
    v
}

fn random_payload(rng: &mut ChaCha20Rng) -> Payload {
    match rng.gen_range(0..10) {
        0 => {
            let n = rng.gen_range(1..=3);
            let proposals = (1..=n)
                .map(|num| {
                    let spi_len = if rng.gen_bool(0.5) { 0 } else { 8 };
                    Proposal {
                        number: num,
                        protocol_id: rng.gen_range(1..=3),
                        spi: random_bytes(rng, spi_len),
                        transforms: random_transforms(rng),
                    }
                })
                .collect();
            Payload::Sa(proposals)
        }
        1 => {
            let len = rng.gen_range(0..256);
            Payload::Ke { group: rng.gen_range(1..=30), key_data: random_bytes(rng, len) }
        }
        2 => {
            let len = rng.gen_range(16..=256);
            Payload::Nonce(random_bytes(rng, len))
        }
        3 => {
            let spi_len = if rng.gen_bool(0.7) { 0 } else { 8 };
            let data_len = rng.gen_range(0..16);
            Payload::Notify(NotifyPayload {
                protocol_id: rng.gen_range(0..=3),
                spi: random_bytes(rng, spi_len),
                notify_type: rng.gen_range(1..=45),
                data: random_bytes(rng, data_len),
            })
        }
        4 | 5 => {
            let len = rng.gen_range(0..32);
            let id = IdPayload { id_type: rng.gen_range(1..=11), data: random_bytes(rng, len) };
            if rng.gen_bool(0.5) {
                Payload::IdI(id)
            } else {
                Payload::IdR(id)
            }
        }
        6 => {
            let len = rng.gen_range(0..64);
            Payload::Auth(AuthPayload { method: rng.gen_range(1..=14), data: random_bytes(rng, len) })
        }
        7 => {
            let len = rng.gen_range(0..32);
            Payload::Vendor(random_bytes(rng, len))
        }
        8 => {
            let spi_size = if rng.gen_bool(0.5) { 4usize } else { 8 };
            let count = rng.gen_range(0..3);
            Payload::Delete(DeletePayload {
                protocol_id: rng.gen_range(1..=3),
                spi_size: spi_size as u8,
                spis: (0..count).map(|_| random_bytes(rng, spi_size)).collect(),
            })
        }
        // unknown payload types survive as opaque bytes; stay clear of the
        // codes the parser knows so the structure round-trips
        _ => {
            let len = rng.gen_range(0..40);
            Payload::Unknown { ptype: rng.gen_range(50..=200), body: random_bytes(rng, len) }
        }
    }
}

/// A structurally valid random message covering all payload types.
pub fn random_message(rng: &mut ChaCha20Rng) -> IkeMessage {
    let mut spi_i = [0u8; 8];
    let mut spi_r = [0u8; 8];
    rng.fill_bytes(&mut spi_i);
    rng.fill_bytes(&mut spi_r);
    let exchange = ExchangeType(*[34u8, 35, 36, 37].iter().nth(rng.gen_range(0..4)).unwrap());
    let header = IkeHeader::new(spi_i, spi_r, exchange, rng.gen_range(0..0x40), rng.gen());
    let n = rng.gen_range(0..=5);
    let mut payloads: Vec<Payload> = (0..n).map(|_| random_payload(rng)).collect();
    if rng.gen_bool(0.2) {
        // an encrypted payload terminates the chain
        let mut data = vec![0u8; rng.gen_range(28..128)];
        rng.fill_bytes(&mut data);
        payloads.push(Payload::Encrypted { first_inner: rng.gen_range(33..=48), data });
    }
    IkeMessage::new(header, payloads)
}

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}
