//! Entropy-stable skew-symmetric discretisations of nonlinear conservation
//! laws with summation-by-parts operators.

pub mod boundary;
pub mod cli;
pub mod config;
pub mod disc;
pub mod energy;
pub mod error;
pub mod field;
pub mod grid;
pub mod linalg;
pub mod models;
pub mod sbp;
pub mod spatial;
pub mod timeint;
pub mod verify;

pub use disc::{Discretisation, Weight};
pub use error::{Error, Result};
pub use field::StateField;
pub use grid::{Axis, Face, Grid, Side};
pub use models::{make_model, ModelKind, ModelParams, ModelSpec};
pub use sbp::{build_sbp_operator, Order, SbpOperator1D};
