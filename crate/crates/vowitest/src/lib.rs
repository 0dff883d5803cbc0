//! Adversarial testing harness for the VoWiFi UE registration stack.
//!
//! The crate plays the network side of IKEv2 + EAP-AKA + SIP registration
//! against a simulated UE: it compiles protocol properties into primary
//! testcases, mutates them into adversarial ones, executes them through a
//! controller/agent testbed, and classifies the device's reactions with
//! deterministic oracles. The [`guide`] module holds the narrative book;
//! the `vowitest` binary drives the encode/mutate/validate/run pipeline.

pub mod crypto;
pub mod eap;
pub mod guide;
pub mod ike;
pub mod mutate;
pub mod oracle;
pub mod sip;
pub mod testbed;
pub mod testcase;
pub mod testgen;
pub mod transform;
pub mod ue;
