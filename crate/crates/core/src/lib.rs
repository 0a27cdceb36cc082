//! Radial solutions and Morse-index bounds for Hamiltonian elliptic systems
//!
//! This crate computes sign-changing radial solutions of
//!
//! ```text
//!   -Δu = H_v(u, v),   -Δv = H_u(u, v)   in Ω,    u = v = 0 on ∂Ω,
//! ```
//!
//! on balls and annuli, then assembles the linearized quadratic form along a
//! solution, splits it into two scalar Sturm-Liouville problems, and turns
//! their spectra into lower bounds for the Morse index of the solution.
//!
//! Pipeline (one module per stage):
//!
//! 1. [`model`]: Hamiltonian families, convexity and coupling scans.
//! 2. [`shooting`]: two-parameter radial shooting for `m`-nodal solutions.
//! 3. [`nodal`]: zero/critical-point extraction and zone diagnostics.
//! 4. [`sturm`]: self-adjoint finite-difference eigensolver for the scalar
//!    problems, in both the regular (`r^{N-1}`) and singular (`r^{N-3}`)
//!    eigenvalue normalizations.
//! 5. [`morse`]: spherical-harmonic multiplicities and index bounds.
//! 6. [`oracle`]: independent cross-checks (coupled block pencil, quadratic
//!    form identities, discrete conservation residuals).
//! 7. [`harness`]: config-driven experiment runner producing reports.
//!
//! Supporting modules: [`grid`] (clustered radial meshes), [`ode`]
//! (Dormand-Prince integrator with dense output), [`constants`] (every
//! tolerance in one place), [`report`] (serializable result types).

pub mod constants;
pub mod domain;
pub mod error;
pub mod grid;
pub mod harness;
pub mod logging;
pub mod model;
pub mod morse;
pub mod nodal;
pub mod ode;
pub mod oracle;
pub mod report;
pub mod shooting;
pub mod sturm;

pub use domain::{Domain, Shape};
pub use error::CoreError;
pub use model::{Hamiltonian, HamiltonianModel, Hessian};
pub use shooting::{ProfileData, RadialSolution, ShootParams};

