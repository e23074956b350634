//! Two-terminal source coding laboratory.
//!
//! The crate has three layers:
//!
//! * exact finite-alphabet probability and information measures
//!   ([`prob`], [`chain`]) plus strong-typicality machinery ([`typicality`]);
//! * executable random-coding schemes measured by Monte Carlo — a
//!   typicality codebook ([`codes::point`]), a random-binning code with
//!   side-information decoding ([`codes::binned`]), and their corner-point
//!   composition with time sharing ([`codes::two_terminal`]);
//! * numerical rate-distortion region computation for the classical
//!   one- and two-terminal problems ([`region`]).
//!
//! Everything is deterministic given a seed: parallel loops derive one RNG
//! stream per unit of work, and aggregations reduce in index order.

pub mod chain;
pub mod codes;
pub mod distortion;
pub mod error;
pub mod prob;
pub mod region;
pub mod rng;
pub mod typicality;

pub use error::{Error, Result};
