//! The campaign loop: per adversarial testcase, three repetitions of
//! {reset, run ATC, function oracle, reset, normal registration, liveness
//! oracle}, aggregated by majority.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::testbed::{Testbed, TestbedError};
use crate::testcase::{Command, LogRecord, Receiver, TestCase, TestCaseKind};
use crate::testgen::FlowGraph;
use crate::transform::CorpusManifest;
use crate::ue::UeProfile;

use super::verdict::{function_oracle, liveness_oracle, Verdict};
use super::OracleError;

pub const REPETITIONS: usize = 3;

/// Seed for all harness randomness; ADVTEST_SEED overrides.
pub fn seed_from_env() -> u64 {
    std::env::var("ADVTEST_SEED")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(1)
}

fn run_seed(master: u64, tc_id: &str, rep: usize) -> u64 {
    let digest = Sha256::new()
        .chain_update(master.to_be_bytes())
        .chain_update(tc_id.as_bytes())
        .chain_update((rep as u64).to_be_bytes())
        .finalize();
    u64::from_be_bytes(digest[..8].try_into().expect("digest long enough"))
}

/// The benign full-registration walk, derived from the flow graph.
pub fn registration_testcase(flow: &FlowGraph, tc_id: &str) -> Result<TestCase, OracleError> {
    let path = flow
        .path_to_message("200_ok")
        .map_err(|e| OracleError::Campaign(e.to_string()))?;
    let mut commands = Vec::new();
    for edge in path {
        if edge.sender == Receiver::Ue {
            continue;
        }
        commands.push(Command::send(commands.len() as u32 + 1, edge.sender, &edge.message));
    }
    Ok(TestCase {
        tc_id: tc_id.to_string(),
        kind: TestCaseKind::Ptc,
        provenance: Default::default(),
        commands,
    })
}

/// Per-(testcase, profile) oracle outcome over the three repetitions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TcOutcome {
    pub tc_id: String,
    /// Issue ids this ATC is diagnostic for, from the corpus manifest.
    pub issues: Vec<u32>,
    pub function: Vec<Verdict>,
    pub liveness: Vec<bool>,
    /// Majority (at least 2 of 3) of function verdicts were responses.
    pub function_alert: bool,
    /// Majority of liveness checks failed.
    pub liveness_alert: bool,
}

impl TcOutcome {
    pub fn alert(&self) -> bool {
        self.function_alert || self.liveness_alert
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignResult {
    pub profile: String,
    pub seed: u64,
    pub outcomes: Vec<TcOutcome>,
}

impl CampaignResult {
    pub fn alerted_ids(&self) -> Vec<&str> {
        self.outcomes.iter().filter(|o| o.alert()).map(|o| o.tc_id.as_str()).collect()
    }
}

/// Observer for per-run logs (file writers, debuggers). Phase is "atc" or
/// "registration".
pub type LogSink<'a> = &'a mut dyn FnMut(&str, usize, &str, &[LogRecord]);

pub struct CampaignOptions<'a> {
    pub master_seed: u64,
    pub repetitions: usize,
    pub sink: Option<LogSink<'a>>,
}

impl Default for CampaignOptions<'_> {
    fn default() -> Self {
        CampaignOptions { master_seed: seed_from_env(), repetitions: REPETITIONS, sink: None }
    }
}

fn majority(hits: usize, total: usize) -> bool {
    2 * hits > total
}

/// Run the full campaign for one profile over an ATC set.
pub fn run_campaign(
    atcs: &[TestCase],
    manifest: Option<&CorpusManifest>,
    profile: &UeProfile,
    flow: &FlowGraph,
    mut options: CampaignOptions<'_>,
) -> Result<CampaignResult, OracleError> {
    let registration = registration_testcase(flow, "registration")?;
    let mut outcomes = Vec::with_capacity(atcs.len());
    for atc in atcs {
        let mut function = Vec::with_capacity(options.repetitions);
        let mut liveness = Vec::with_capacity(options.repetitions);
        for rep in 0..options.repetitions {
            let seed = run_seed(options.master_seed, &atc.tc_id, rep);
            let mut testbed =
                Testbed::new(profile.clone(), seed).map_err(|e: TestbedError| OracleError::Campaign(e.to_string()))?;
            let atc_log = testbed
                .run_testcase(atc)
                .map_err(|e| OracleError::Campaign(format!("{}: {e}", atc.tc_id)))?;
            let verdict = function_oracle(&atc_log, flow)?;
            if let Some(sink) = options.sink.as_mut() {
                sink(&atc.tc_id, rep, "atc", &atc_log);
            }

            testbed.reset(true);
            let reg_log = testbed
                .run_testcase(&registration)
                .map_err(|e| OracleError::Campaign(format!("{}#reg: {e}", atc.tc_id)))?;
            let alive = liveness_oracle(&reg_log)?;
            if let Some(sink) = options.sink.as_mut() {
                sink(&atc.tc_id, rep, "registration", &reg_log);
            }

            function.push(verdict);
            liveness.push(alive);
        }
        let function_hits = function.iter().filter(|v| v.kind.is_alert()).count();
        let liveness_misses = liveness.iter().filter(|ok| !*ok).count();
        outcomes.push(TcOutcome {
            tc_id: atc.tc_id.clone(),
            issues: manifest.map(|m| m.issues_for(&atc.tc_id).to_vec()).unwrap_or_default(),
            function_alert: majority(function_hits, options.repetitions),
            liveness_alert: majority(liveness_misses, options.repetitions),
            function,
            liveness,
        });
    }
    Ok(CampaignResult { profile: profile.name.clone(), seed: options.master_seed, outcomes })
}

/// Convenience single-run: execute one testcase against a fresh testbed and
/// return its log (no oracles, no repetitions).
pub fn run_once(tc: &TestCase, profile: &UeProfile, master_seed: u64) -> Result<Vec<LogRecord>, OracleError> {
    let seed = run_seed(master_seed, &tc.tc_id, 0);
    let mut testbed =
        Testbed::new(profile.clone(), seed).map_err(|e| OracleError::Campaign(e.to_string()))?;
    testbed.run_testcase(tc).map_err(|e| OracleError::Campaign(e.to_string()))
}


#[cfg(test)]
mod tests {
    use super::super::verdict::VerdictKind;
    use super::*;

    #[test]
    fn majority_rule() {
        assert!(majority(2, 3));
        assert!(majority(3, 3));
        assert!(!majority(1, 3));
        assert!(!majority(0, 3));
    }

    #[test]
    fn run_seed_is_order_free() {
        let a = run_seed(1, "tc-a", 0);
        let b = run_seed(1, "tc-b", 0);
        assert_ne!(a, b);
        assert_eq!(a, run_seed(1, "tc-a", 0));
        assert_ne!(run_seed(1, "tc-a", 1), a);
    }

    #[test]
    fn verdict_kind_alerts() {
        assert!(!VerdictKind::Ignored.is_alert());
        assert!(VerdictKind::PositiveResponse.is_alert());
        assert!(VerdictKind::NegativeResponse.is_alert());
    }
}
