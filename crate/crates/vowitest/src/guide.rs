//! The book under `book/` rendered as rustdoc, chapter by chapter. Every
//! code block in the chapters compiles and runs under `cargo test --doc`,
//! which keeps the narrative and the library in sync.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/testcases.md")]
pub mod testcases {}

#[doc = include_str!("../../../book/src/wire_formats.md")]
pub mod wire_formats {}

#[doc = include_str!("../../../book/src/crypto.md")]
pub mod crypto_suite {}

#[doc = include_str!("../../../book/src/generation.md")]
pub mod generation {}

#[doc = include_str!("../../../book/src/testbed.md")]
pub mod testbed_guide {}

#[doc = include_str!("../../../book/src/profiles.md")]
pub mod profiles {}

#[doc = include_str!("../../../book/src/oracles.md")]
pub mod oracles {}

#[doc = include_str!("../../../book/src/zero_dh.md")]
pub mod zero_dh {}
