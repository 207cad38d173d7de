//! Multi-level polar coded modulation with multi-stage decoding over a
//! sparse (SCMA-style) non-orthogonal uplink.
//!
//! The crate is organised along the signal chain:
//!
//! * [`polar`]: binary polar codes (construction, encoding, CRC, SC/SCL decoding)
//! * [`modem`]: the multi-level Gaussian-integer mapper and its set partition
//! * [`link_design`]: bit-level capacity estimation and capacity-rule rate design
//! * [`scma`]: allocation graph, fading channel, message-passing detection and
//!   the multi-stage receiver
//! * [`complexity`]: closed-form and instrumented function-node cost accounting
//! * [`sim`]: seeded Monte Carlo frame-error-rate driver
//!
//! LLR sign convention, used everywhere: positive values favour bit 0.

#![allow(clippy::needless_range_loop)]

pub mod bits;
pub mod complexity;
pub mod error;
pub mod link_design;
pub mod modem;
mod numeric;
pub mod oracle;
pub mod polar;
pub mod rng;
pub mod scma;
pub mod sim;
pub mod stats;

pub use bits::BitBlock;
pub use error::{Error, Result};
