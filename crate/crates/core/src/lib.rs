//! Relaxation of diffusing atomic spins in linear magnetic-field gradients
//! inside a cubic cell whose walls fully depolarize the spins.
//!
//! * [`model`]: geometry, parameters, the Dirichlet sine eigenbasis and its
//!   position matrix elements.
//! * [`perturbation`]: second-order rates, mode weights and the
//!   perturbative free-induction decay.
//! * [`evolution`]: time-domain free-induction decay (spectral and
//!   finite-difference), `T2` and `Delta Gamma2` extraction.
//! * [`serf`]: steady-state Bloch solutions for a SERF magnetometer, the
//!   `S_x(B_y)` linewidth and its broadening by gradients.
//! * [`cli`]: configuration files, sweeps and CSV/SVG output behind the
//!   `spinrelax` binary.

pub mod cli;
pub mod error;
pub mod evolution;
pub mod linalg;
pub mod model;
pub mod perturbation;
pub mod serf;

pub use error::{Error, Result};
pub use model::{Axis, CellGeometry, GradientField, ModeIndex, ScalarModeVector, SpinParams};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
