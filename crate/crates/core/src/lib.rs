//! Solver library for the generalized self-duality system on closed
//! hyperbolic surfaces.
//!
//! The library discretizes a closed genus-g (g >= 2) surface with its
//! hyperbolic metric, builds the line bundle `E = (T^{1,0})^{(k-1)}` with its
//! unitary connection, and minimizes the Donaldson functional
//!
//! ```text
//! D(u, eta) = ∫ { 1/4 |∇u|^2 - u + e^u + 4 ||beta0 + dbar(eta)||^2 e^{(k-1)u} } dA
//! ```
//!
//! over conformal factors `u` and bundle sections `eta`. Critical points
//! solve the coupled system
//!
//! ```text
//! Δu + 2 - 2 e^u - 8(k-1) ||beta||^2 e^{(k-1)u} = 0
//! dbar( e^{(k-1)u} *_E beta ) = 0,     beta = beta0 + dbar(eta),
//! ```
//!
//! i.e. a Liouville-type curvature equation coupled to the holomorphicity of
//! the metric-dual k-differential. Modules:
//!
//! * [`geometry`] — triangulated hyperbolic surfaces, quadrature, Laplacian
//! * [`bundle`] — discrete dbar calculus on `E`, Hodge star, harmonic
//!   projection, holomorphic k-differential bases
//! * [`functional`] — the energy, its first/second variations, the convex
//!   partial minimization in eta
//! * [`solver`] — Newton minimization of the reduced energy, multistart
//!   uniqueness checks, ray sweeps
//! * [`analysis`] — numerical certification of the second-order structure
//! * [`applications`] — k-differential extraction, minimal/CMC immersion
//!   data, fixed-differential continuation and fold detection

pub mod analysis;
pub mod applications;
pub mod bundle;
pub mod error;
pub mod functional;
pub mod geometry;
pub mod hyp;
pub mod linalg;
pub mod solver;

pub use error::{Error, Result};
