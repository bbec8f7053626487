//! Energies, energy rates and the conservation defect.
//!
//! Conventions: `E = Σ w UᵀPU` carries no ½, so for `P U_t = −R` the rate is
//! `dE/dt = −2⟨U, R⟩` and a face with contraction `Σ w_t Uᵀ(n·A)U` contributes
//! `−2` times that contraction to the boundary flux.

use crate::boundary::Direction;
use crate::boundary::SatConfig;
use crate::disc::{Discretisation, Weight};
use crate::error::Result;
use crate::field::StateField;
use crate::grid::Face;
use crate::models::ModelSpec;
use crate::spatial::{eval_dual_residual, eval_primal_residual, CoeffMode, Residual};

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyReport {
    pub t: f64,
    pub energy: f64,
    pub rate: f64,
    pub boundary_flux: f64,
    pub volume_residual: f64,
    /// `2⟨U, SAT⟩`, the part of the rate produced by the penalties.
    pub sat_contribution: f64,
    /// Boundary flux of each face, summing to `boundary_flux`.
    pub faces: Vec<(Face, f64)>,
    /// Magnitude the volume residual is compared against.
    pub scale: f64,
}

impl EnergyReport {
    pub fn csv_header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["t", "E", "rate", "boundary_flux", "volume_residual"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        h.extend(self.faces.iter().map(|(f, _)| format!("flux_{}", f.name())));
        h
    }

    pub fn csv_record(&self) -> Vec<String> {
        let mut r = vec![
            format!("{:e}", self.t),
            format!("{:e}", self.energy),
            format!("{:e}", self.rate),
            format!("{:e}", self.boundary_flux),
            format!("{:e}", self.volume_residual),
        ];
        r.extend(self.faces.iter().map(|(_, v)| format!("{v:e}")));
        r
    }

    /// `|volume_residual| ≤ tol · scale`
    pub fn conserves(&self, tol: f64) -> bool {
        self.volume_residual.abs() <= tol * self.scale
    }
}

/// `Σ w UᵀP U` with the model's node-dependent norm matrix.
pub fn total_energy(model: &ModelSpec, disc: &Discretisation, u: &StateField) -> Result<f64> {
    model.check_grid(disc.grid())?;
    u.check_shape(model.n_comp(), disc.n_nodes(), "state")?;
    if model.norm_is_identity() {
        return disc.inner_product(u, u, Weight::Identity);
    }
    let norm = |node: usize| model.norm_matrix(&disc.grid().position(node));
    disc.inner_product(u, u, Weight::Nodal(&norm))
}

fn l2(disc: &Discretisation, f: &StateField) -> Result<f64> {
    Ok(disc.inner_product(f, f, Weight::Identity)?.sqrt())
}

/// Builds the report from an already evaluated residual of state `u`.
///
/// `direction` selects the sign relating the spatial operator to the
/// residual: `R = L − …` for the primal, `R = −L − …` for the dual.
pub fn report_from_residual(
    model: &ModelSpec,
    disc: &Discretisation,
    u: &StateField,
    residual: &Residual,
    direction: Direction,
    t: f64,
) -> Result<EnergyReport> {
    let energy = total_energy(model, disc, u)?;
    let sign = match direction {
        Direction::Primal => 1.0,
        Direction::Dual => -1.0,
    };
    let ul = disc.inner_product(u, &residual.spatial, Weight::Identity)?;
    let sat_contribution = match &residual.sat {
        Some(s) => 2.0 * disc.inner_product(u, s, Weight::Identity)?,
        None => 0.0,
    };
    let rate = -2.0 * sign * ul + sat_contribution;
    let faces: Vec<(Face, f64)> = residual
        .face_flux
        .iter()
        .map(|f| (f.face, -2.0 * sign * f.contraction))
        .collect();
    let mut boundary_flux = 0.0;
    let mut face_mag = 0.0;
    for (_, v) in &faces {
        boundary_flux += v;
        face_mag += v.abs();
    }
    let volume_residual = rate - boundary_flux - sat_contribution;
    let scale = 1.0 + l2(disc, u)? * l2(disc, &residual.spatial)? + face_mag;
    Ok(EnergyReport {
        t,
        energy,
        rate,
        boundary_flux,
        volume_residual,
        sat_contribution,
        faces,
        scale,
    })
}

/// Energy balance of `u` under the residual selected by `mode`.
///
/// `CoeffMode::Dual(V)` evaluates the dual residual with coefficients at `V`;
/// use [`dual_energy_report`] for the self-adjoint case `V = Φ`.
pub fn energy_report(
    model: &ModelSpec,
    disc: &Discretisation,
    u: &StateField,
    mode: CoeffMode<'_>,
    sat: &SatConfig,
    t: f64,
) -> Result<EnergyReport> {
    if let CoeffMode::Dual(v) = mode {
        let r = eval_dual_residual(model, disc, u, CoeffMode::Frozen(v), sat, None)?;
        return report_from_residual(model, disc, u, &r, Direction::Dual, t);
    }
    let r = eval_primal_residual(model, disc, u, mode, sat, None)?;
    report_from_residual(model, disc, u, &r, Direction::Primal, t)
}

/// Energy balance of the dual state `phi`; `CoeffMode::Nonlinear` means `V = Φ`.
pub fn dual_energy_report(
    model: &ModelSpec,
    disc: &Discretisation,
    phi: &StateField,
    mode: CoeffMode<'_>,
    sat: &SatConfig,
    t: f64,
) -> Result<EnergyReport> {
    let r = eval_dual_residual(model, disc, phi, mode, sat, None)?;
    report_from_residual(model, disc, phi, &r, Direction::Dual, t)
}

/// Pointwise boundary contraction at one face node.
#[derive(Clone, Copy, Debug)]
pub enum Contraction<'a> {
    /// `Uᵀ(n·A(U))U`
    Nonlinear(&'a [f64]),
    /// `U′ᵀ(n·A(Ū))U′`
    Linearised { mean: &'a [f64], pert: &'a [f64] },
}

/// Free parameters such as the shallow water `α`, `β` are taken from `model`.
pub fn boundary_contraction(
    model: &ModelSpec,
    input: Contraction<'_>,
    pos: &[f64; 3],
    normal: &[f64],
) -> Result<f64> {
    let (v, w) = match input {
        Contraction::Nonlinear(u) => (u, u),
        Contraction::Linearised { mean, pert } => (mean, pert),
    };
    if normal.len() != model.dim() || w.len() != model.n_comp() {
        return Err(crate::error::Error::ShapeMismatch(format!(
            "contraction needs a {}-vector normal and {} components",
            model.dim(),
            model.n_comp()
        )));
    }
    let c = model.coeff_matrices(v, pos)?;
    Ok(c.normal_matrix(normal).quad(w, w))
}
