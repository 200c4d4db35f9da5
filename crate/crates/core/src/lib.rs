//! Computable strongly positive (p,p)-vectors, their ranks, linear
//! projections of complex projective space and pushforwards of atomic
//! positive currents.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, reports and the
//! command line live in the companion `plurirank` crate.

#![no_std]

extern crate alloc;

pub mod currents;
pub mod dimension;
pub mod error;
pub mod exterior;
pub mod genericity;
pub mod linalg;
pub mod positivity;
pub mod projective;
pub mod rng;

pub use error::{Error, Result};
