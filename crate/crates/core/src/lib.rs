//! Numerical laboratory for the parabolic Kolmogorov equation
//! `u_t - Δu + b·∇u = 0` with form-bounded drift `b`.

pub mod acceptance;
pub mod admissibility;
pub mod drift;
pub mod error;
pub mod formbound;
pub mod grid;
pub mod mollifier;
pub mod moser;
pub mod pde;
pub mod quadrature;
pub mod rational;
pub mod rng;
pub mod scalar;
pub mod sde;

pub use error::{Error, Result};
pub use rational::{Rational, Sign};
pub use scalar::{Field, Real};

pub use moser::MoserScheduleExact;
pub type MoserScheduleF64 = moser::MoserSchedule<f64>;

/// Default floating-point scalar.
pub type Scalar = f64;
pub type Drift = drift::FormBoundedDrift<Scalar>;
pub type Radial = grid::RadialGrid<Scalar>;
pub type Cartesian = grid::CartesianGrid<Scalar>;
