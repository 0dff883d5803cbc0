//! The simulated UE and its vulnerability-profile library.

mod profile;
mod state;

pub use profile::{AdvertisedTransforms, FlakeBehavior, UeFlags, UeProfile};
pub use state::{ue_reset, NetPacket, UeEvent, UeOutput, UeStage, UeState};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum UeError {
    #[error("profile schema violation: {0}")]
    SchemaViolation(String),
}
