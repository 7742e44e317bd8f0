//! Energy-harvesting full-duplex relay with covert signalling: closed-form
//! analysis of the battery chain, covert detection and outage, and a
//! block-level Monte Carlo simulator to check them against.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod covert;
pub mod energy;
pub mod error;
pub mod markov;
pub mod outage;
pub mod params;
pub mod sim;
pub mod special;
pub mod sweep;

pub use error::{Error, Result};
