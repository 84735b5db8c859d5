//! Waveform design for simultaneous wireless information and power transfer
//! under a nonlinear rectenna model.

// `!(x > 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chanmodel;
pub mod error;
pub mod gpsolve;
pub mod par;
pub mod rateenergy;
pub mod rectenna;
pub mod scaling;
pub mod strategies;

pub use error::{Error, Result};
pub use par::Exec;
