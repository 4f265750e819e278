//! Harness library behind the `vhss` binary: plaintext reference evaluation,
//! random program generation, executable security games, benchmarks, and the
//! named parameter profiles the command line accepts.

pub mod bench;
pub mod games;
pub mod oracle;
pub mod profile;
pub mod progen;
pub mod stats;
