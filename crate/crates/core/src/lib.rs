//! Two-server verifiable homomorphic secret sharing over ring-LWE.
//!
//! The library implements a public-key encryption scheme with nearly linear
//! decryption over the negacyclic ring `Z_q[X]/(X^N + 1)`, a two-server
//! homomorphic evaluation layer for restricted straight-line programs, a
//! tag-based verifier that catches tampered partial results, parameter
//! derivation for a range of plaintext bounds, and a binary wire format for
//! every object that crosses a process boundary.

pub mod error;
pub mod params;
pub mod pke;
pub mod program;
pub mod ring;
pub mod sampling;
pub mod vhss;
pub mod wire;

pub use error::{Error, Result};
