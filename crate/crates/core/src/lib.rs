// SPDX-License-Identifier: Apache-2.0

//! Ciphertext-policy attribute-based encryption, a KEM/DEM field envelope
//! with deterministic and randomized modes, an attribute authority, a
//! field-level encrypted document store and the benchmark harness that
//! measures all of it.

pub mod abe;
pub mod authority;
pub mod bench;
pub mod docstore;
pub mod envelope;
pub mod error;
pub mod pairing;
pub mod policy;
mod wire;

pub use error::{Error, ErrorCategory, Result};
