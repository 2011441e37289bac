//! spinforge: minimum-time radiofrequency pulse design for selective local
//! control of homonuclear spin pairs.
//!
//! The crate combines four pieces:
//!
//! - an analytic geodesic estimate of the shortest duration over which a
//!   local (single-spin) target transformation is reachable ([`geodesic`]),
//! - a gradient-based fixed-duration pulse optimizer with polar-coordinate
//!   bound handling, smoothing, and an ensemble robustness objective
//!   ([`grape`]),
//! - the minimum-time search that ramps and bisects durations around the
//!   geodesic estimate ([`mintime`]),
//! - a simulated process-tomography verifier producing χ matrices and their
//!   fidelities ([`qpt`]).
//!
//! Supporting modules hold the dense complex matrix kernel ([`matrix`]),
//! the rotating-frame spin model ([`spin`]), piecewise-constant time
//! evolution ([`propagation`]), and file formats ([`pulse_io`], [`config`]).

mod bfgs;
mod lm;
pub mod config;
pub mod error;
pub mod geodesic;
pub mod grape;
pub mod matrix;
pub mod mintime;
pub mod propagation;
pub mod pulse_io;
pub mod qpt;
pub mod spin;

pub use error::{Error, Result};
