use thiserror::Error;

use crate::grid::Face;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported SBP order ({0},{1}); available: (2,1), (4,2)")]
    UnsupportedOrder(usize, usize),
    #[error("{n} nodes is below the minimum {min} required by the closure")]
    TooFewNodes { n: usize, min: usize },
    #[error("grid spacing must be positive and finite, got {0}")]
    InvalidSpacing(f64),
    #[error("axis {axis} out of range for a {dim}-dimensional grid")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("weight matrix at node {node} is not symmetric")]
    NonSymmetricWeight { node: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("admissibility violated at node {node}: {reason}")]
    Admissibility { node: usize, reason: String },
    #[error("inadmissible state: {0}")]
    Inadmissible(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid face {face}: {reason}")]
    InvalidFace { face: Face, reason: String },
    #[error("glancing boundary: |U_n| = {un:e} is below delta_n = {delta:e}")]
    Glancing { un: f64, delta: f64 },
    #[error("time step {dt:e} exceeds the CFL limit {limit:e}")]
    Cfl { dt: f64, limit: f64 },
    #[error("blow-up guard tripped at t = {t}: max norm grew by {growth:e}")]
    BlowUp { t: f64, growth: f64 },
    #[error("non-finite value in state at t = {t}")]
    NonFinite { t: f64 },
    #[error("config error{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
