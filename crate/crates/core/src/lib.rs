//! Viscous-dispersive shock profiles for the quantum hydrodynamics system
//! with linear viscosity, and numerical certification of their spectral
//! stability.
//!
//! The pipeline runs bottom-up:
//!
//! - [`shock_data`]: end states, Rankine–Hugoniot algebra, `f(P)`.
//! - [`profile`]: heteroclinic profile `P(y)` by Newton collocation.
//! - [`essential_spectrum`]: Fredholm borders from the dispersion relation.
//! - [`point_spectrum`]: discretized integrated operator and its eigenvalues.
//! - [`energy_estimates`]: `f1`, `f2`, `g` and the constants of the energy estimate.
//!
//! Everything is parameterized by a [`ShockParams`] (γ, μ, k, P⁻, ε, s).

pub mod banded;
pub mod energy_estimates;
pub mod error;
pub mod essential_spectrum;
pub mod export;
pub mod point_spectrum;
pub mod profile;
pub mod shock_data;
pub mod stencil;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use shock_data::{EndStates, ShockParams};
