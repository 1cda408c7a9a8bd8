//! Photon counting statistics and Cramér–Rao limits for absorption and
//! phase-shift spectroscopy of a molecule that switches between two
//! chemical states.

#![no_std]
// `num_traits::Float` supplies f64 math without std. The imports are marked
// `allow(unused_imports)` because std's inherent methods take over whenever
// another crate in the build links std.

extern crate alloc;

pub mod adiabatic;
pub mod error;
pub mod estimation;
pub mod fcs;
pub mod linalg;
pub mod liouvillian;
pub mod oracles;
pub mod params;
pub mod pipeline;
pub mod propagation;

pub use error::{Error, Result};
