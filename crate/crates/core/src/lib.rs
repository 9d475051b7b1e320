//! Scattering from generalized Smith-Volterra-Cantor potentials.
//!
//! Constructs SVC(ρ, n) potential layouts at arbitrary stage G and
//! computes transmission/reflection coefficients two ways: the
//! super-periodic closed form (O(G²) per energy) and a brute-force
//! transfer-matrix product over all 2^G barriers (O(2^G)), used as
//! ground truth.

pub mod analysis;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod oracle;
pub mod sweep;
pub mod transfer;

pub use engine::{transmission, ScatteringPoint};
pub use error::{Error, Result};
pub use geometry::{build_layout, PotentialSpec, SegmentLayout};
