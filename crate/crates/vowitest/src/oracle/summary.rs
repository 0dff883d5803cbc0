//! Campaign result summarization: per-issue alert counts with evidence
//! pointers, machine- and human-readable.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::campaign::CampaignResult;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IssueRow {
    pub tagged: usize,
    pub alerted: usize,
    pub alerted_tc_ids: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub profile: String,
    pub seed: u64,
    pub atc_count: usize,
    pub function_alerts: usize,
    pub liveness_alerts: usize,
    /// Per issue id: how many tagged ATCs exist and how many alerted.
    pub issues: BTreeMap<u32, IssueRow>,
    /// Alerting ATCs that carry no issue tag.
    pub untagged_alerts: Vec<String>,
}

pub fn summarize(result: &CampaignResult) -> Summary {
    let mut issues: BTreeMap<u32, IssueRow> = BTreeMap::new();
    let mut untagged = Vec::new();
    let mut function_alerts = 0;
    let mut liveness_alerts = 0;
    for o in &result.outcomes {
        for issue in &o.issues {
            issues.entry(*issue).or_default().tagged += 1;
        }
        if o.function_alert {
            function_alerts += 1;
        }
        if o.liveness_alert {
            liveness_alerts += 1;
        }
        if o.alert() {
            if o.issues.is_empty() {
                untagged.push(o.tc_id.clone());
            }
            for issue in &o.issues {
                let row = issues.entry(*issue).or_default();
                row.alerted += 1;
                row.alerted_tc_ids.push(o.tc_id.clone());
            }
        }
    }
    Summary {
        profile: result.profile.clone(),
        seed: result.seed,
        atc_count: result.outcomes.len(),
        function_alerts,
        liveness_alerts,
        issues,
        untagged_alerts: untagged,
    }
}

pub fn summary_markdown(s: &Summary) -> String {
    let mut out = String::new();
    out.push_str(&format!("# Campaign summary: profile `{}`\n\n", s.profile));
    out.push_str(&format!(
        "- seed: {}\n- testcases: {}\n- function alerts: {}\n- liveness alerts: {}\n\n",
        s.seed, s.atc_count, s.function_alerts, s.liveness_alerts
    ));
    out.push_str("| issue | tagged ATCs | alerted | hit rate |\n|---|---|---|---|\n");
    for (issue, row) in &s.issues {
        let rate = if row.tagged == 0 {
            "-".to_string()
        } else {
            format!("{}/{}", row.alerted, row.tagged)
        };
        out.push_str(&format!("| #{issue} | {} | {} | {} |\n", row.tagged, row.alerted, rate));
    }
    if !s.untagged_alerts.is_empty() {
        out.push_str("\nUntagged alerts:\n");
        for id in &s.untagged_alerts {
            out.push_str(&format!("- `{id}`\n"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::campaign::TcOutcome;
    use super::super::verdict::{Verdict, VerdictKind};
    use super::*;

    fn outcome(tc_id: &str, issues: Vec<u32>, alert: bool) -> TcOutcome {
        let kind = if alert { VerdictKind::PositiveResponse } else { VerdictKind::Ignored };
        TcOutcome {
            tc_id: tc_id.into(),
            issues,
            function: vec![Verdict { kind, evidence: vec![] }; 3],
            liveness: vec![true; 3],
            function_alert: alert,
            liveness_alert: false,
        }
    }

    #[test]
    fn empty_report_set_is_empty_summary() {
        let s = summarize(&CampaignResult { profile: "p".into(), seed: 0, outcomes: vec![] });
        assert_eq!(s.atc_count, 0);
        assert!(s.issues.is_empty());
        assert!(s.untagged_alerts.is_empty());
    }

    #[test]
    fn totals_match_per_tc_records() {
        let result = CampaignResult {
            profile: "weak_encr".into(),
            seed: 1,
            outcomes: vec![
                outcome("a/update/1", vec![1], true),
                outcome("a/update/2", vec![1], false),
                outcome("a/substitute/3", vec![], true),
            ],
        };
        let s = summarize(&result);
        assert_eq!(s.function_alerts, 2);
        assert_eq!(s.issues[&1].tagged, 2);
        assert_eq!(s.issues[&1].alerted, 1);
        assert_eq!(s.untagged_alerts, vec!["a/substitute/3"]);
        // json round trip keeps totals consistent
        let json = serde_json::to_string(&s).unwrap();
        let back: Summary = serde_json::from_str(&json).unwrap();
        assert_eq!(back.issues[&1].alerted, 1);
        assert_eq!(back.atc_count, 3);
        let md = summary_markdown(&s);
        assert!(md.contains("| #1 | 2 | 1 | 1/2 |"), "{md}");
    }
}
