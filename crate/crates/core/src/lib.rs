//! Reliability toolkit for hierarchical RAID (HRAID k/ℓ) arrays.
//!
//! An HRAID k/ℓ array has `N` storage nodes with `M` disks each. Every node
//! runs an intra-node code tolerating `ℓ` disk failures, and an inter-node
//! code across nodes tolerates `k` node failures. Failed components are never
//! replaced; rebuild happens by restriping data over check strips.
//!
//! The crate is split into:
//!
//! - [`layout`]: strip layout generation and verification, an XOR codec for
//!   single-check levels, and the small-write cost model.
//! - [`analytic`]: closed-form node and array reliabilities and their
//!   leading-order behaviour.
//! - [`oracle`]: exact enumeration of fatal failure sets and the exact MTTDL
//!   of the lumped failure chain.
//! - [`simulator`]: seeded, scheduling-independent Monte Carlo MTTDL.

pub mod analytic;
mod combinatorics;
mod config;
mod error;
pub mod layout;
pub mod oracle;
pub mod simulator;

pub use config::{FailureModel, HraidConfig, MAX_TOLERANCE};
pub use error::{Error, Result};
