//! PTC-to-ATC expansion via the two transformation families.

mod config;
mod ops;

pub use config::{
    ike_notify_type, parse_substitute, sip_error_status, DropSpec, ErrorMessageSpec, MutationConfig,
    SubstituteKind, ValueSet,
};
pub use ops::{
    generate_corpus, transform_drop, transform_replay, transform_substitute, transform_update,
    CorpusManifest, ManifestEntry,
};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TransformError {
    #[error("protocol mismatch: {0}")]
    ProtocolMismatch(String),
    #[error("replay index {0} out of range")]
    IndexOutOfRange(u32),
    #[error("unknown attribute: {0}")]
    UnknownAttribute(String),
    #[error("config error: {0}")]
    Config(String),
}
