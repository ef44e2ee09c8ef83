//! Spectral simulator and operator toolkit for the critical surface
//! quasi-geostrophic (SQG) equation on the unit 2-sphere,
//!
//! ```text
//! θ_t + u·∇θ + Λ^α θ = ν Δθ,     u = ∇^⊥ Λ^{-1} θ,     Λ = (−Δ)^{1/2}
//! ```
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: points on the sphere, geodesic distance, stereographic chart.
//! * [`transform`]: Gauss–Legendre grids, spherical-harmonic analysis and
//!   synthesis, gradients and rotation generators.
//! * [`fractional`]: the fractional Laplace–Beltrami operator by spectral
//!   multiplier, heat-semigroup subordination and singular integral, plus the
//!   commutator probe and the `D(x)` functional.
//! * [`solver`]: integrating-factor Heun time stepper with 2/3 dealiasing.
//! * [`diagnostics`]: norms, maximum principle, nonlinear lower bound,
//!   decay audits and twin-run comparison.
//! * [`io`]: configuration text, binary snapshots, CSV telemetry, run manifests.
//! * [`acceptance`]: the executable verification suite behind `sqg verify`.

pub mod acceptance;
pub mod diagnostics;
pub mod fractional;
pub mod geometry;
pub mod io;
pub mod quadrature;
pub mod solver;
pub mod transform;

pub use diagnostics::DiagnosticsRecord;
pub use fractional::{SemigroupQuadrature, SingularKernel};
pub use geometry::{StereoPoint, UnitVector};
pub use solver::{InitialCondition, SimulationState, SolverConfig};
pub use transform::{Grid, PhysicalField, SpectralField, VelocityField};

/// Version string recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
