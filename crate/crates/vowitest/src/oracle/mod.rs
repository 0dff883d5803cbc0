//! Decision oracles, the campaign loop, and result summarization.

mod attack;
mod campaign;
mod summary;
mod verdict;

pub use attack::recover_imsi_zero_dh;
pub use campaign::{
    registration_testcase, run_campaign, run_once, seed_from_env, CampaignOptions, CampaignResult,
    LogSink, TcOutcome, REPETITIONS,
};
pub use summary::{summarize, summary_markdown, IssueRow, Summary};
pub use verdict::{function_oracle, liveness_oracle, Verdict, VerdictKind};

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("malformed log: {0}")]
    MalformedLog(&'static str),
    #[error("campaign failure: {0}")]
    Campaign(String),
}
