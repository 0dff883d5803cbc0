//! The two transformation families (message, attribute) and their four
//! operators, plus deterministic cartesian corpus expansion.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::testcase::{CommandValue, Op, TestCase, TestCaseKind, TransformDescriptor};

use super::config::{ErrorMessageSpec, MutationConfig};
use super::TransformError;

fn param_hash(parameter: &str) -> String {
    let digest = Sha256::new().chain_update(parameter.as_bytes()).finalize();
    hex::encode(&digest[..6])
}

fn derive_atc(
    ptc: &TestCase,
    family: &str,
    operator: &str,
    parameter: &str,
    edit: impl FnOnce(&mut crate::testcase::Command),
) -> TestCase {
    let mut atc = ptc.clone();
    atc.tc_id = format!("{}/{}/{}", ptc.tc_id, operator, param_hash(parameter));
    atc.kind = TestCaseKind::Atc;
    atc.provenance.transform = Some(TransformDescriptor {
        family: family.to_string(),
        operator: operator.to_string(),
        parameter: parameter.to_string(),
    });
    edit(atc.commands.last_mut().expect("PTCs are non-empty"));
    atc
}

/// Replace the final command with an error-message send.
pub fn transform_substitute(
    ptc: &TestCase,
    config: &MutationConfig,
    spec: &ErrorMessageSpec,
) -> Result<TestCase, TransformError> {
    let final_cmd = ptc.final_command();
    let protocol = config
        .protocol_of(&final_cmd.name)
        .ok_or_else(|| TransformError::ProtocolMismatch(final_cmd.name.clone()))?;
    if protocol != spec.protocol {
        return Err(TransformError::ProtocolMismatch(format!(
            "{} error on {} step",
            spec.protocol, protocol
        )));
    }
    let wire = spec.wire_name();
    Ok(derive_atc(ptc, "message", "substitute", &wire, |c| {
        c.op = Op::Substitute;
        c.substitute_with = Some(wire.clone());
    }))
}

/// Re-send the message of an earlier command in place of the final one.
pub fn transform_replay(ptc: &TestCase, index: u32) -> Result<TestCase, TransformError> {
    let final_pos = ptc.commands.len() as u32;
    let valid = index >= 1
        && index < final_pos
        && ptc
            .commands
            .get(index as usize - 1)
            .map(|c| c.op == Op::Send && c.receiver == ptc.final_command().receiver)
            .unwrap_or(false);
    if !valid {
        return Err(TransformError::IndexOutOfRange(index));
    }
    let parameter = index.to_string();
    Ok(derive_atc(ptc, "message", "replay", &parameter, |c| {
        c.op = Op::Replay;
        c.replay_index = Some(index);
    }))
}

/// Change one attribute value of the final message.
pub fn transform_update(
    ptc: &TestCase,
    config: &MutationConfig,
    attribute: &str,
    value: &CommandValue,
) -> Result<TestCase, TransformError> {
    let final_cmd = ptc.final_command();
    let known = config
        .attribute_value_sets
        .get(&final_cmd.name)
        .map(|attrs| attrs.contains_key(attribute))
        .unwrap_or(false);
    if !known {
        return Err(TransformError::UnknownAttribute(format!(
            "{attribute} on {}",
            final_cmd.name
        )));
    }
    let parameter = format!("{attribute}={}", value.canonical());
    let value = value.clone();
    let attribute_owned = attribute.to_string();
    Ok(derive_atc(ptc, "attribute", "update", &parameter, move |c| {
        c.op = Op::Update;
        c.attribute = Some(attribute_owned);
        c.value = Some(value);
    }))
}

/// Drop one attribute from the final message.
pub fn transform_drop(
    ptc: &TestCase,
    config: &MutationConfig,
    attribute: &str,
) -> Result<TestCase, TransformError> {
    let final_cmd = ptc.final_command();
    let known = config
        .droppable_attributes
        .get(&final_cmd.name)
        .map(|drops| drops.iter().any(|d| d.attribute == attribute))
        .unwrap_or(false);
    if !known {
        return Err(TransformError::UnknownAttribute(format!(
            "{attribute} on {}",
            final_cmd.name
        )));
    }
    let attribute_owned = attribute.to_string();
    Ok(derive_atc(ptc, "attribute", "drop", attribute, move |c| {
        c.op = Op::Drop;
        c.attribute = Some(attribute_owned);
    }))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ManifestEntry {
    pub tc_id: String,
    pub ptc_id: String,
    pub family: String,
    pub operator: String,
    pub parameter: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub issues: Vec<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CorpusManifest {
    pub atc_count: usize,
    /// SHA-256 over the serialized ATC sequence; regeneration is
    /// byte-identical, so this hash is too.
    pub corpus_hash: String,
    pub entries: Vec<ManifestEntry>,
}

impl CorpusManifest {
    pub fn issues_for(&self, tc_id: &str) -> &[u32] {
        self.entries
            .iter()
            .find(|e| e.tc_id == tc_id)
            .map(|e| e.issues.as_slice())
            .unwrap_or(&[])
    }

    /// All tc_ids tagged with a given issue.
    pub fn tagged_with(&self, issue: u32) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|e| e.issues.contains(&issue))
            .map(|e| e.tc_id.as_str())
            .collect()
    }
}

/// Cartesian expansion of a PTC set under the config: every protocol-
/// compatible substitution, every eligible replay index, every configured
/// (attribute x value) update and every droppable attribute.
pub fn generate_corpus(
    ptcs: &[TestCase],
    config: &MutationConfig,
) -> Result<(Vec<TestCase>, CorpusManifest), TransformError> {
    config.validate()?;
    let mut sorted: Vec<&TestCase> = ptcs.iter().collect();
    sorted.sort_by(|a, b| a.tc_id.cmp(&b.tc_id));

    let mut atcs = Vec::new();
    let mut entries = Vec::new();
    for ptc in sorted {
        let final_cmd = ptc.final_command();
        // (family, operator, parameter, atc, issues)
        let mut batch: Vec<(String, String, String, TestCase, Vec<u32>)> = Vec::new();

        for spec in &config.error_messages {
            if let Ok(atc) = transform_substitute(ptc, config, spec) {
                let issues = spec.issues.get(&final_cmd.name).cloned().unwrap_or_default();
                batch.push(("message".into(), "substitute".into(), spec.wire_name(), atc, issues));
            }
        }
        for index in 1..ptc.commands.len() as u32 {
            if let Ok(atc) = transform_replay(ptc, index) {
                batch.push(("message".into(), "replay".into(), index.to_string(), atc, Vec::new()));
            }
        }
        if let Some(attrs) = config.attribute_value_sets.get(&final_cmd.name) {
            for (attribute, set) in attrs {
                for value in &set.values {
                    let atc = transform_update(ptc, config, attribute, value)?;
                    let issues = set.issues.get(&value.canonical()).cloned().unwrap_or_default();
                    let parameter = format!("{attribute}={}", value.canonical());
                    batch.push(("attribute".into(), "update".into(), parameter, atc, issues));
                }
            }
        }
        if let Some(drops) = config.droppable_attributes.get(&final_cmd.name) {
            for d in drops {
                let atc = transform_drop(ptc, config, &d.attribute)?;
                batch.push(("attribute".into(), "drop".into(), d.attribute.clone(), atc, d.issues.clone()));
            }
        }

        batch.sort_by(|a, b| (&a.0, &a.1, &a.2).cmp(&(&b.0, &b.1, &b.2)));
        for (family, operator, parameter, atc, issues) in batch {
            entries.push(ManifestEntry {
                tc_id: atc.tc_id.clone(),
                ptc_id: ptc.tc_id.clone(),
                family,
                operator,
                parameter,
                issues,
            });
            atcs.push(atc);
        }
    }

    let mut hasher = Sha256::new();
    for atc in &atcs {
        hasher.update(serde_json::to_vec(atc).expect("testcases serialize"));
        hasher.update([0u8]);
    }
    let manifest = CorpusManifest {
        atc_count: atcs.len(),
        corpus_hash: hex::encode(hasher.finalize()),
        entries,
    };
    Ok((atcs, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testcase::{Command, Receiver};

    fn config() -> MutationConfig {
        MutationConfig::parse(
            r#"{
            "message_protocols": {
                "ike_sa_init_response": "ike",
                "eap_challenge": "ike",
                "401_unauthorized": "sip"
            },
            "error_messages": [
                {"name": "invalid_spi", "protocol": "ike"},
                {"name": "invalid_ke_payload", "protocol": "ike", "group": "MODP_768",
                 "issues": {"ike_sa_init_response": [10]}},
                {"name": "invalid_ke_payload", "protocol": "ike", "group": "MODP_1024_160PO",
                 "issues": {"ike_sa_init_response": [5, 10]}},
                {"name": "sip_403_forbidden", "protocol": "sip"}
            ],
            "attribute_value_sets": {
                "ike_sa_init_response": {
                    "security_association.encr": {"values": [2, 3, -1], "issues": {"2": [1], "3": [1]}}
                }
            },
            "droppable_attributes": {
                "ike_sa_init_response": [
                    {"attribute": "key_exchange", "issues": [8]},
                    {"attribute": "nonce", "issues": [9]}
                ]
            }
        }"#,
        )
        .unwrap()
    }

    fn ptc(id: &str, names: &[(&str, Receiver)]) -> TestCase {
        TestCase {
            tc_id: id.into(),
            kind: TestCaseKind::Ptc,
            provenance: Default::default(),
            commands: names
                .iter()
                .enumerate()
                .map(|(i, (name, recv))| Command::send(i as u32 + 1, *recv, name))
                .collect(),
        }
    }

    fn sa_init_ptc() -> TestCase {
        ptc("p01", &[("ike_sa_init_response", Receiver::Epdg)])
    }

    #[test]
    fn substitute_sets_final_command() {
        let cfg = config();
        let spec = &cfg.error_messages[1];
        let atc = transform_substitute(&sa_init_ptc(), &cfg, spec).unwrap();
        let f = atc.final_command();
        assert_eq!(f.op, Op::Substitute);
        assert_eq!(f.substitute_with.as_deref(), Some("invalid_ke_payload(MODP_768)"));
        assert_eq!(atc.kind, TestCaseKind::Atc);
        assert!(atc.tc_id.starts_with("p01/substitute/"));
    }

    #[test]
    fn ike_error_on_sip_step_is_protocol_mismatch() {
        let cfg = config();
        let sip_ptc = ptc("p02", &[("ike_sa_init_response", Receiver::Epdg), ("401_unauthorized", Receiver::Ims)]);
        let spec = &cfg.error_messages[0];
        assert!(matches!(
            transform_substitute(&sip_ptc, &cfg, spec),
            Err(TransformError::ProtocolMismatch(_))
        ));
    }

    #[test]
    fn replay_bounds() {
        let four = ptc(
            "p03",
            &[
                ("ike_sa_init_response", Receiver::Epdg),
                ("eap_challenge", Receiver::Epdg),
                ("eap_challenge", Receiver::Epdg),
                ("eap_challenge", Receiver::Epdg),
            ],
        );
        let atc = transform_replay(&four, 2).unwrap();
        assert_eq!(atc.final_command().op, Op::Replay);
        assert_eq!(atc.final_command().replay_index, Some(2));
        // the first three commands are untouched
        assert_eq!(atc.commands[..3], four.commands[..3]);
        assert!(matches!(transform_replay(&sa_init_ptc(), 0), Err(TransformError::IndexOutOfRange(0))));
        assert!(matches!(transform_replay(&four, 4), Err(TransformError::IndexOutOfRange(4))));
    }

    #[test]
    fn update_and_drop_set_final_command() {
        let cfg = config();
        let atc = transform_update(&sa_init_ptc(), &cfg, "security_association.encr", &CommandValue::Int(2)).unwrap();
        assert_eq!(atc.final_command().op, Op::Update);
        assert_eq!(atc.final_command().value, Some(CommandValue::Int(2)));
        let atc = transform_drop(&sa_init_ptc(), &cfg, "key_exchange").unwrap();
        assert_eq!(atc.final_command().op, Op::Drop);
        assert!(matches!(
            transform_drop(&sa_init_ptc(), &cfg, "auth"),
            Err(TransformError::UnknownAttribute(_))
        ));
    }

    #[test]
    fn every_atc_differs_in_exactly_the_final_command() {
        let cfg = config();
        let ptc = ptc(
            "p04",
            &[("ike_sa_init_response", Receiver::Epdg), ("ike_sa_init_response", Receiver::Epdg)],
        );
        let (atcs, _) = generate_corpus(std::slice::from_ref(&ptc), &cfg).unwrap();
        assert!(!atcs.is_empty());
        for atc in atcs {
            assert_eq!(atc.commands.len(), ptc.commands.len());
            let differing = atc
                .commands
                .iter()
                .zip(&ptc.commands)
                .filter(|(a, b)| a != b)
                .count();
            assert_eq!(differing, 1, "{}", atc.tc_id);
            assert_ne!(atc.commands.last(), ptc.commands.last());
        }
    }

    #[test]
    fn corpus_counting_and_determinism() {
        let cfg = config();
        let ptcs = vec![sa_init_ptc()];
        let (atcs, manifest) = generate_corpus(&ptcs, &cfg).unwrap();
        // substitutions: invalid_spi + 2 invalid_ke; updates: 3; drops: 2; replays: 0
        assert_eq!(atcs.len(), 8);
        assert_eq!(manifest.atc_count, 8);
        let (atcs2, manifest2) = generate_corpus(&ptcs, &cfg).unwrap();
        assert_eq!(manifest, manifest2);
        assert_eq!(atcs, atcs2);
    }

    #[test]
    fn single_update_attribute_with_three_values_gives_three_atcs() {
        let mut cfg = config();
        cfg.error_messages.clear();
        cfg.droppable_attributes.clear();
        let (atcs, _) = generate_corpus(&[sa_init_ptc()], &cfg).unwrap();
        assert_eq!(atcs.len(), 3);
    }

    #[test]
    fn empty_config_generates_nothing() {
        let cfg = MutationConfig::parse(
            r#"{"message_protocols": {"ike_sa_init_response": "ike"}, "error_messages": [],
                "attribute_value_sets": {}, "droppable_attributes": {}}"#,
        )
        .unwrap();
        let (atcs, manifest) = generate_corpus(&[sa_init_ptc()], &cfg).unwrap();
        assert!(atcs.is_empty());
        assert_eq!(manifest.atc_count, 0);
    }

    #[test]
    fn issue_tags_land_in_manifest() {
        let cfg = config();
        let (_, manifest) = generate_corpus(&[sa_init_ptc()], &cfg).unwrap();
        let issue8 = manifest.tagged_with(8);
        assert_eq!(issue8.len(), 1);
        assert!(issue8[0].contains("/drop/"));
        let issue10 = manifest.tagged_with(10);
        assert_eq!(issue10.len(), 2, "both invalid_ke substitutions");
        let issue5 = manifest.tagged_with(5);
        assert_eq!(issue5.len(), 1, "only the advertised weak group");
        let issue1 = manifest.tagged_with(1);
        assert_eq!(issue1.len(), 2, "DES and 3DES updates");
    }

    #[test]
    fn generated_corpus_passes_testcase_validation() {
        let cfg = config();
        let mut vocab = crate::testcase::MessageVocab::new();
        vocab.add("ike_sa_init_response", Receiver::Epdg);
        vocab.add("eap_challenge", Receiver::Epdg);
        vocab.add("401_unauthorized", Receiver::Ims);
        let ptcs = vec![
            sa_init_ptc(),
            ptc(
                "p05",
                &[
                    ("ike_sa_init_response", Receiver::Epdg),
                    ("eap_challenge", Receiver::Epdg),
                    ("401_unauthorized", Receiver::Ims),
                ],
            ),
        ];
        let (atcs, _) = generate_corpus(&ptcs, &cfg).unwrap();
        let violations = crate::testcase::validate_corpus(&atcs, &vocab);
        assert!(violations.is_empty(), "{violations:?}");
    }
}
