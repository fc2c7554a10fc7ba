//! Mean-field Blume–Capel model with spins in `{−1, 0, 1}`.

pub mod error;
pub mod finite_size;
pub mod harness;
mod landscape;
pub mod model;
pub mod phase;
pub mod quadrature;
pub mod sequences;

pub use error::{Error, Result};
pub use model::{ModelParams, SpinValue};
pub use phase::PhaseRegion;
pub use quadrature::QuadratureConfig;
pub use sequences::{Alpha, EvenPolynomial, Regime, SequenceKind, SequenceSpec};
pub use harness::{thermo_magnetization, AsymptoticsReport, Estimator};
