//! Controller and agents wired by the command-report envelope protocol.

mod controller;
mod envelope;
mod epdg;
mod ims;
mod link;
mod ue_agent;

pub use controller::Testbed;
pub use envelope::{
    read_frame, write_frame, AgentEnvelope, AgentReport, Delivery, EnvelopeBody, EnvelopeKind,
    PacketFrame,
};
pub use epdg::EpdgAgent;
pub use ims::ImsAgent;
pub use link::{serve_agent, Agent, AgentLink};
pub use ue_agent::UeAgent;

/// Subscriber record shared by the ePDG and IMS entities, keyed by IMSI.
#[derive(Debug, Clone)]
pub struct Subscriber {
    pub imsi: String,
    pub secret_k: [u8; 16],
    pub op_key: [u8; 16],
}

#[derive(Debug, thiserror::Error)]
pub enum TestbedError {
    #[error("agent unreachable: {0}")]
    AgentUnreachable(crate::testcase::Receiver),
    #[error("transport failure: {0}")]
    Io(String),
    #[error("routing loop detected")]
    RoutingLoop,
    #[error("profile error: {0}")]
    Profile(String),
    #[error("testcase error: {0}")]
    Testcase(String),
}
