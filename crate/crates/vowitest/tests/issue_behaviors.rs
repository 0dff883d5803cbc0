//! Per-issue behavior scenarios: each vulnerability profile reacts to its
//! triggering testcase exactly as documented, and the compliant baseline
//! stays silent.

mod common;

use common::*;
use vowitest::ike::{parse_message, payload_type, Payload};
use vowitest::oracle::{
    function_oracle, liveness_oracle, recover_imsi_zero_dh, registration_testcase, run_campaign,
    run_once, CampaignOptions, VerdictKind,
};
use vowitest::sip::parse_sip;
use vowitest::testbed::Testbed;
use vowitest::testcase::{parse_testcase, LogRecord, Receiver};

fn find_atc(atcs: &[vowitest::testcase::TestCase], ptc: &str, needle: &str) -> vowitest::testcase::TestCase {
    atcs.iter()
        .find(|t| t.tc_id.starts_with(&format!("{ptc}/")) && {
            let f = t.final_command();
            f.substitute_with.as_deref().map(|s| s.contains(needle)).unwrap_or(false)
                || f.attribute.as_deref().map(|a| a == needle).unwrap_or(false)
        })
        .unwrap_or_else(|| panic!("no ATC for {ptc} / {needle}"))
        .clone()
}

fn ue_messages(records: &[LogRecord]) -> Vec<(String, Vec<u8>)> {
    records
        .iter()
        .filter(|r| r.entity != Receiver::Ue)
        .filter_map(|r| {
            let m = r.message()?;
            if m.sender == Receiver::Ue {
                Some((m.name.clone().unwrap_or_default(), m.wire_bytes().unwrap_or_default()))
            } else {
                None
            }
        })
        .collect()
}

#[test]
fn zero_dh_profile_leaks_imsi_to_the_attacker() {
    let (_, atcs, _, flow) = shipped_corpus();
    let atc = find_atc(&atcs, "p36", "key_exchange");
    assert_eq!(atc.final_command().op, vowitest::testcase::Op::Drop);

    let records = run_once(&atc, &shipped_profile("zero_dh"), 11).unwrap();
    let verdict = function_oracle(&records, &flow).unwrap();
    assert_eq!(verdict.kind, VerdictKind::PositiveResponse, "UE answered the KE-less response");
    let notes: Vec<&str> = records.iter().flat_map(|r| r.annotations.iter().map(String::as_str)).collect();
    assert!(notes.contains(&"ue_zero_dh_shared"), "{notes:?}");

    // the attacker recomputes the zero-secret bundle from the log alone
    let imsi = recover_imsi_zero_dh(&records).unwrap();
    assert_eq!(imsi, "001010123456789");
}

#[test]
fn compliant_profile_ignores_the_zero_dh_testcase() {
    let (_, atcs, _, flow) = shipped_corpus();
    let atc = find_atc(&atcs, "p36", "key_exchange");
    let records = run_once(&atc, &shipped_profile("compliant"), 11).unwrap();
    let verdict = function_oracle(&records, &flow).unwrap();
    assert_eq!(verdict.kind, VerdictKind::Ignored);
    assert!(recover_imsi_zero_dh(&records).is_err(), "nothing to decrypt");
}

#[test]
fn downgrade_profile_retries_with_modp_768_exact_transcript() {
    let (_, atcs, _, _) = shipped_corpus();
    let atc = find_atc(&atcs, "p36", "invalid_ke_payload(MODP_768)");

    let records = run_once(&atc, &shipped_profile("downgrade_ke"), 12).unwrap();
    let ue = ue_messages(&records);
    assert_eq!(ue.len(), 2, "initial request plus the downgraded retry: {ue:?}");
    assert_eq!(ue[0].0, "ike_sa_init_request");
    assert_eq!(ue[1].0, "ike_sa_init_request");

    let first = parse_message(&ue[0].1).unwrap();
    let retry = parse_message(&ue[1].1).unwrap();
    let ke_group = |m: &vowitest::ike::IkeMessage| match m.payload(payload_type::KE) {
        Some(Payload::Ke { group, .. }) => *group,
        _ => panic!("no KE payload"),
    };
    assert_eq!(ke_group(&first), 14, "initial key over MODP_2048");
    assert_eq!(ke_group(&retry), 1, "retried key over MODP_768");
    // the retry still proposes the full advertised set
    match retry.payload(payload_type::SA) {
        Some(Payload::Sa(props)) => {
            let dh_ids: Vec<u16> =
                props[0].transforms.iter().filter(|t| t.kind == 4).map(|t| t.id).collect();
            assert_eq!(dh_ids, vec![14]);
        }
        _ => panic!("retry has no SA payload"),
    }

    // the compliant profile refuses the downgrade: transcript ends after one
    // request
    let records = run_once(&atc, &shipped_profile("compliant"), 12).unwrap();
    let ue = ue_messages(&records);
    assert_eq!(ue.len(), 1, "{ue:?}");
    let notes: Vec<&str> = records.iter().flat_map(|r| r.annotations.iter().map(String::as_str)).collect();
    assert!(notes.contains(&"ue_ke_retry_refused"), "{notes:?}");
}

#[test]
fn weak_encr_profile_establishes_des_sa() {
    let (_, atcs, _, flow) = shipped_corpus();
    let atc = atcs
        .iter()
        .find(|t| {
            let f = t.final_command();
            t.tc_id.starts_with("p36/")
                && f.attribute.as_deref() == Some("security_association.encr")
                && f.value.as_ref().and_then(|v| v.as_int()) == Some(2)
        })
        .unwrap()
        .clone();
    let records = run_once(&atc, &shipped_profile("weak_encr"), 13).unwrap();
    assert_eq!(function_oracle(&records, &flow).unwrap().kind, VerdictKind::PositiveResponse);
    let notes: Vec<String> = records.iter().flat_map(|r| r.annotations.clone()).collect();
    assert!(notes.iter().any(|n| n.starts_with("weak_sa:") && n.contains("ENCR_DES")), "{notes:?}");
}

#[test]
fn deadlock_profile_fails_liveness_in_all_repetitions() {
    let (_, atcs, manifest, flow) = shipped_corpus();
    let atc = find_atc(&atcs, "p36", "invalid_spi");
    let result = run_campaign(
        std::slice::from_ref(&atc),
        Some(&manifest),
        &shipped_profile("deadlock"),
        &flow,
        CampaignOptions { master_seed: 5, ..Default::default() },
    )
    .unwrap();
    let outcome = &result.outcomes[0];
    assert!(outcome.function.iter().all(|v| v.kind == VerdictKind::Ignored));
    assert_eq!(outcome.liveness, vec![false, false, false]);
    assert!(outcome.liveness_alert);
    assert!(!outcome.function_alert);
}

#[test]
fn compliant_profile_recovers_liveness_after_every_abort() {
    let (_, atcs, manifest, flow) = shipped_corpus();
    let atc = find_atc(&atcs, "p36", "invalid_spi");
    let result = run_campaign(
        std::slice::from_ref(&atc),
        Some(&manifest),
        &shipped_profile("compliant"),
        &flow,
        CampaignOptions { master_seed: 5, ..Default::default() },
    )
    .unwrap();
    assert_eq!(result.outcomes[0].liveness, vec![true, true, true]);
}

#[test]
fn replay_responder_profile_answers_replays() {
    let (_, atcs, _, flow) = shipped_corpus();
    // p50 ends at eap_success; replaying command 1 resends the SA_INIT response
    let atc = atcs
        .iter()
        .find(|t| t.tc_id.starts_with("p50/replay/") && t.final_command().replay_index == Some(1))
        .unwrap()
        .clone();
    let records = run_once(&atc, &shipped_profile("replay_responder"), 21).unwrap();
    assert_eq!(function_oracle(&records, &flow).unwrap().kind, VerdictKind::PositiveResponse);
    let notes: Vec<&str> = records.iter().flat_map(|r| r.annotations.iter().map(String::as_str)).collect();
    assert!(notes.contains(&"ue_replay_responded"), "{notes:?}");

    let records = run_once(&atc, &shipped_profile("compliant"), 21).unwrap();
    assert_eq!(function_oracle(&records, &flow).unwrap().kind, VerdictKind::Ignored);
    let notes: Vec<&str> = records.iter().flat_map(|r| r.annotations.iter().map(String::as_str)).collect();
    assert!(notes.contains(&"ue_replay_ignored"), "{notes:?}");
}

#[test]
fn sip_copy_profile_echoes_md5_with_aka_computation() {
    let (_, atcs, _, flow) = shipped_corpus();
    let atc = find_atc(&atcs, "p54", "www_authenticate.algorithm");
    let records = run_once(&atc, &shipped_profile("sip_copy"), 22).unwrap();
    assert_eq!(function_oracle(&records, &flow).unwrap().kind, VerdictKind::PositiveResponse);
    let notes: Vec<&str> = records.iter().flat_map(|r| r.annotations.iter().map(String::as_str)).collect();
    assert!(notes.contains(&"ue_sip_algorithm_copied"), "{notes:?}");
    // the emitted Authorization header copies the challenged algorithm name
    let register_2 = records
        .iter()
        .filter(|r| r.entity == Receiver::Ims)
        .filter_map(|r| r.message())
        .find(|m| m.name.as_deref() == Some("sip_register_2"))
        .expect("register 2 reached the IMS");
    let sip = parse_sip(&register_2.wire_bytes().unwrap()).unwrap();
    let auth = sip.header("Authorization").unwrap();
    assert!(auth.contains("algorithm=MD5"), "{auth}");
}

#[test]
fn zero_nonce_profile_continues_without_responder_nonce() {
    let (_, atcs, _, flow) = shipped_corpus();
    let atc = find_atc(&atcs, "p36", "nonce");
    let records = run_once(&atc, &shipped_profile("zero_nonce"), 23).unwrap();
    assert_eq!(function_oracle(&records, &flow).unwrap().kind, VerdictKind::PositiveResponse);
    let notes: Vec<&str> = records.iter().flat_map(|r| r.annotations.iter().map(String::as_str)).collect();
    assert!(notes.contains(&"ue_zero_nonce"), "{notes:?}");

    let records = run_once(&atc, &shipped_profile("compliant"), 23).unwrap();
    assert_eq!(function_oracle(&records, &flow).unwrap().kind, VerdictKind::Ignored);
}

#[test]
fn manual_insert_testcase_is_ignored_by_the_compliant_profile() {
    let text = read_repo("data/manual/insert_ke_in_ike_auth.json");
    let atc = parse_testcase(&text).unwrap();
    let flow = shipped_flow();
    let records = run_once(&atc, &shipped_profile("compliant"), 24).unwrap();
    assert_eq!(function_oracle(&records, &flow).unwrap().kind, VerdictKind::Ignored);
}

#[test]
fn benign_registration_passes_liveness_on_every_shipped_profile() {
    let flow = shipped_flow();
    let registration = registration_testcase(&flow, "reg").unwrap();
    for name in [
        "compliant",
        "weak_encr",
        "weak_integ",
        "weak_prf",
        "weak_dh",
        "weak_ke_retry",
        "sip_md5",
        "sip_weak_sec",
        "zero_dh",
        "zero_nonce",
        "downgrade_ke",
        "kitchen_sink",
        "deadlock",
        "sip_copy",
        "replay_responder",
        "flake",
    ] {
        let mut tb = Testbed::new(shipped_profile(name), 31).unwrap();
        let records = tb.run_testcase(&registration).unwrap();
        assert!(liveness_oracle(&records).unwrap(), "{name} failed benign registration");
        let notes: Vec<&str> =
            records.iter().flat_map(|r| r.annotations.iter().map(String::as_str)).collect();
        assert!(notes.contains(&"registered"), "{name}: {notes:?}");
    }
}

#[test]
fn kitchen_sink_profile_triggers_every_issue() {
    let (_, atcs, manifest, flow) = shipped_corpus();
    // one representative tagged ATC per issue
    let mut subset = Vec::new();
    for issue in 1..=10 {
        let id = manifest.tagged_with(issue)[0].to_string();
        subset.push(atcs.iter().find(|t| t.tc_id == id).unwrap().clone());
    }
    subset.sort_by(|a, b| a.tc_id.cmp(&b.tc_id));
    subset.dedup_by(|a, b| a.tc_id == b.tc_id);
    let result = run_campaign(
        &subset,
        Some(&manifest),
        &shipped_profile("kitchen_sink"),
        &flow,
        CampaignOptions { master_seed: 6, ..Default::default() },
    )
    .unwrap();
    let summary = vowitest::oracle::summarize(&result);
    for issue in 1..=10u32 {
        let row = summary.issues.get(&issue).unwrap_or_else(|| panic!("issue {issue} missing"));
        assert!(row.alerted > 0, "issue {issue} not alerted: {row:?}");
    }
}
