//! Simulation and verification toolkit for stochastic dynamical systems on
//! the half-line: random affine recursions, reflected affine recursions and
//! reflected random walks driven by i.i.d. random maps.
//!
//! Modules:
//! - [`distributions`]: laws for map parameters, moments, lattice detection
//! - [`maps`]: map descriptors and system specifications
//! - [`hyperbolic`]: Poincaré half-plane distance for the extended process
//! - [`engine`]: coupled, reproducible, parallel trajectory simulation
//! - [`diagnostics`]: contraction and escape witnesses, classification
//! - [`measures`]: invariant measures, ratio limits, return times, criteria
//! - [`dyadic`]: exact-arithmetic experiments with `|2x−1|` and `|x/2−1|`

pub mod diagnostics;
pub mod distributions;
pub mod dyadic;
pub mod engine;
pub mod error;
pub mod hyperbolic;
pub mod maps;
pub mod measures;
pub mod quad;
pub mod rng;
pub mod wide;

pub use error::{Error, Result};

/// Version of this library, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
