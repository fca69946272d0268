//! Link-level simulation and analysis of cyclic-prefixed single-carrier
//! transmission assisted by a reconfigurable intelligent surface (RIS).
//!
//! The RIS groups apply phase profiles that turn the incident block into
//! cyclically delayed copies, so the end-to-end channel is a single
//! equivalent circular channel. Optionally the order of the delays carries
//! extra bits (index modulation).

// Negated float comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
pub mod config;
pub mod detection;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod numerics;
pub mod transceiver;

pub use config::SystemConfig;
pub use error::{Error, Result};
pub use numerics::C64;
