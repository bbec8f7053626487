//! Semi-discrete residuals of the skew-symmetric form.
//!
//! The primal scheme is `P U_t = −R` with
//!
//! ```text
//! R(U; V) = Σ_i [ D_i (A_i(V) U) + A_i(V)ᵀ D_i U ] + C(V) U − SAT − F
//! ```
//!
//! where the coefficient matrices are injected node by node. The dual scheme
//! in reversed time is `P Φ_τ = −R_dual` with
//! `R_dual(Φ; V) = −[Σ_i D_i (A_i Φ) + A_iᵀ D_i Φ + C Φ] − SAT − G`.

use crate::boundary::{build_sat, Direction, SatConfig};
use crate::disc::Discretisation;
use crate::error::{Error, Result};
use crate::field::StateField;
use crate::grid::Face;
use crate::linalg::Mat;
use crate::models::{coeff_split, Coefficients, ModelKind, ModelSpec};

/// Which field the coefficient matrices are evaluated at.
#[derive(Clone, Copy, Debug)]
pub enum CoeffMode<'a> {
    /// `V = U`
    Nonlinear,
    /// `V` fixed, independent of the state.
    Frozen(&'a StateField),
    /// Perturbation equation of the new linearisation: the state is `U′` and
    /// the coefficients are evaluated at the mean `Ū`.
    NewLinearised(&'a StateField),
    /// Classical advective linearisation about `Ū`; the state is `U′`.
    StandardLinearised(&'a StateField),
    /// Dual problem with coefficients at `V`; for the primal residual this
    /// acts like [`CoeffMode::Frozen`].
    Dual(&'a StateField),
}

impl CoeffMode<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            CoeffMode::Nonlinear => "nonlinear",
            CoeffMode::Frozen(_) => "frozen",
            CoeffMode::NewLinearised(_) => "new-linearised",
            CoeffMode::StandardLinearised(_) => "standard-linearised",
            CoeffMode::Dual(_) => "dual",
        }
    }
}

/// `Σ_face w_t · Uᵀ(n·A)U` for one face.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FaceFlux {
    pub face: Face,
    pub contraction: f64,
}

#[derive(Clone, Debug)]
pub struct Residual {
    /// Full residual, including SAT and forcing.
    pub field: StateField,
    /// The skew-symmetric operator applied to the state, before sign and
    /// penalties: `L(U; V)`.
    pub spatial: StateField,
    pub face_flux: Vec<FaceFlux>,
    pub sat: Option<StateField>,
}

/// `L(U; V) = Σ_i [D_i(A_i U) + A_iᵀ D_i U] + C U` with pointwise coefficients.
pub fn skew_operator(disc: &Discretisation, u: &StateField, coeffs: &[Coefficients]) -> StateField {
    let nc = u.n_comp();
    let nn = u.n_nodes();
    let dim = disc.grid().dim();
    let mut out = StateField::zeros(nc, nn);
    let mut au = StateField::zeros(nc, nn);
    let mut d_au = StateField::zeros(nc, nn);
    let mut du = StateField::zeros(nc, nn);
    let mut x = vec![0.0; nc];
    let mut y = vec![0.0; nc];
    let mut z = vec![0.0; nc];
    for axis in 0..dim {
        for (node, c) in coeffs.iter().enumerate() {
            u.node(node, &mut x);
            c.a[axis].mul_vec(&x, &mut y);
            au.set_node(node, &y);
        }
        disc.derivative_into(&au, axis, &mut d_au);
        disc.derivative_into(u, axis, &mut du);
        for (node, c) in coeffs.iter().enumerate() {
            du.node(node, &mut x);
            c.a[axis].tr_mul_vec(&x, &mut y);
            d_au.node(node, &mut z);
            for k in 0..nc {
                z[k] += y[k];
            }
            out.add_node(node, &z);
        }
    }
    for (node, c) in coeffs.iter().enumerate() {
        u.node(node, &mut x);
        c.c.mul_vec(&x, &mut y);
        out.add_node(node, &y);
    }
    out
}

/// Face contractions `Σ w_t Uᵀ(n·A)U`, computed directly on face nodes.
pub fn face_contractions(
    disc: &Discretisation,
    u: &StateField,
    coeffs: &[Coefficients],
) -> Result<Vec<FaceFlux>> {
    face_bilinear(disc, u, u, coeffs)
}

/// `Σ w_t Φᵀ(n·A)U` per face.
pub fn face_bilinear(
    disc: &Discretisation,
    phi: &StateField,
    u: &StateField,
    coeffs: &[Coefficients],
) -> Result<Vec<FaceFlux>> {
    let nc = u.n_comp();
    let dim = disc.grid().dim();
    let mut a = vec![0.0; nc];
    let mut b = vec![0.0; nc];
    disc.grid()
        .faces()
        .into_iter()
        .map(|face| {
            let mut normal = vec![0.0; dim];
            normal[face.axis] = face.normal_sign();
            let mut s = 0.0;
            for (node, w) in disc.face_quadrature(face)? {
                phi.node(node, &mut a);
                u.node(node, &mut b);
                s += w * coeffs[node].normal_matrix(&normal).quad(&a, &b);
            }
            Ok(FaceFlux {
                face,
                contraction: s,
            })
        })
        .collect()
}

fn check_state(model: &ModelSpec, disc: &Discretisation, u: &StateField, what: &str) -> Result<()> {
    model.check_grid(disc.grid())?;
    u.check_shape(model.n_comp(), disc.n_nodes(), what)?;
    if !u.is_finite() {
        return Err(Error::ShapeMismatch(format!("{what} has non-finite entries")));
    }
    Ok(())
}

fn assemble(
    spatial: StateField,
    sign: f64,
    sat: Option<StateField>,
    forcing: Option<&StateField>,
    face_flux: Vec<FaceFlux>,
) -> Residual {
    let mut field = if sign < 0.0 { spatial.neg() } else { spatial.clone() };
    if let Some(s) = &sat {
        field.axpy(-1.0, s);
    }
    if let Some(f) = forcing {
        field.axpy(-1.0, f);
    }
    Residual {
        field,
        spatial,
        face_flux,
        sat,
    }
}

pub fn eval_primal_residual(
    model: &ModelSpec,
    disc: &Discretisation,
    u: &StateField,
    mode: CoeffMode<'_>,
    sat: &SatConfig,
    forcing: Option<&StateField>,
) -> Result<Residual> {
    check_state(model, disc, u, "state")?;
    if let Some(f) = forcing {
        f.check_shape(model.n_comp(), disc.n_nodes(), "forcing")?;
    }
    let coeffs = match mode {
        CoeffMode::Nonlinear => model.nodal_coefficients(disc, u)?,
        CoeffMode::Frozen(v) | CoeffMode::NewLinearised(v) | CoeffMode::Dual(v) => {
            model.nodal_coefficients(disc, v)?
        }
        CoeffMode::StandardLinearised(mean) => {
            let mut r = eval_standard_linearised_residual(model, disc, mean, u, sat)?;
            if let Some(f) = forcing {
                r.field.axpy(-1.0, f);
            }
            return Ok(r);
        }
    };
    let spatial = skew_operator(disc, u, &coeffs);
    let flux = face_contractions(disc, u, &coeffs)?;
    let sat = build_sat(model, disc, u, &coeffs, sat, Direction::Primal)?;
    Ok(assemble(spatial, 1.0, sat, forcing, flux))
}

/// Dual residual; `CoeffMode::Nonlinear` means `V = Φ` (the self-adjoint case).
pub fn eval_dual_residual(
    model: &ModelSpec,
    disc: &Discretisation,
    phi: &StateField,
    mode: CoeffMode<'_>,
    sat: &SatConfig,
    forcing: Option<&StateField>,
) -> Result<Residual> {
    check_state(model, disc, phi, "dual state")?;
    if let Some(g) = forcing {
        g.check_shape(model.n_comp(), disc.n_nodes(), "dual forcing")?;
    }
    let coeffs = match mode {
        CoeffMode::Nonlinear => model.nodal_coefficients(disc, phi)?,
        CoeffMode::Frozen(v) | CoeffMode::Dual(v) | CoeffMode::NewLinearised(v) => {
            model.nodal_coefficients(disc, v)?
        }
        CoeffMode::StandardLinearised(_) => {
            return Err(Error::Unsupported(
                "the dual of the standard linearisation is not provided".into(),
            ))
        }
    };
    let spatial = skew_operator(disc, phi, &coeffs);
    let flux = face_contractions(disc, phi, &coeffs)?;
    let sat = build_sat(model, disc, phi, &coeffs, sat, Direction::Dual)?;
    Ok(assemble(spatial, -1.0, sat, forcing, flux))
}

/// Mean and perturbation residuals of the coupled linearisation: the mean
/// equation uses the total-state coefficients `A_i(Ū + U′)` acting on `Ū`,
/// the perturbation equation uses `A_i(Ū)` acting on `U′`.
pub fn eval_new_linearised_pair(
    model: &ModelSpec,
    disc: &Discretisation,
    mean: &StateField,
    pert: &StateField,
    sat_mean: &SatConfig,
    sat_pert: &SatConfig,
) -> Result<(Residual, Residual)> {
    check_state(model, disc, mean, "mean state")?;
    check_state(model, disc, pert, "perturbation")?;
    let split = coeff_split(model, disc, mean, pert)?;
    let total = model.nodal_coefficients(disc, &mean.add(pert))?;

    let spatial = skew_operator(disc, mean, &total);
    let flux = face_contractions(disc, mean, &total)?;
    let sat = build_sat(model, disc, mean, &total, sat_mean, Direction::Primal)?;
    let r_mean = assemble(spatial, 1.0, sat, None, flux);

    let spatial = skew_operator(disc, pert, &split.mean);
    let flux = face_contractions(disc, pert, &split.mean)?;
    let sat = build_sat(model, disc, pert, &split.mean, sat_pert, Direction::Primal)?;
    let r_pert = assemble(spatial, 1.0, sat, None, flux);
    Ok((r_mean, r_pert))
}

/// `H = Σ_i [D_i(A′_i U′) + A′_iᵀ D_i U′] + C′ U′`
pub fn eval_remainder_h(
    model: &ModelSpec,
    disc: &Discretisation,
    mean: &StateField,
    pert: &StateField,
) -> Result<StateField> {
    check_state(model, disc, mean, "mean state")?;
    check_state(model, disc, pert, "perturbation")?;
    let split = coeff_split(model, disc, mean, pert)?;
    Ok(skew_operator(disc, pert, &split.pert))
}

fn swe_primitive_matrices(q: &[f64]) -> (Mat, Mat) {
    let (phi, u, v) = (q[0], q[1], q[2]);
    (
        Mat::from_rows([[u, phi, 0.0], [1.0, u, 0.0], [0.0, 0.0, u]]),
        Mat::from_rows([[v, 0.0, phi], [0.0, v, 0.0], [1.0, 0.0, v]]),
    )
}

/// Half the advective matrices, so that `Uᵀ(n·A)U` equals the boundary term
/// `½ U′ᵀ n M U′` of the advective form.
fn standard_coefficients(
    model: &ModelSpec,
    disc: &Discretisation,
    mean: &StateField,
) -> Result<Vec<Coefficients>> {
    let mut q = vec![0.0; model.n_comp()];
    (0..disc.n_nodes())
        .map(|node| {
            mean.node(node, &mut q);
            let pos = disc.grid().position(node);
            let mut c = model.coeff_matrices(&q_admissible(model, &q), &pos).map_err(|e| match e {
                Error::Inadmissible(reason) => Error::Admissibility { node, reason },
                other => other,
            })?;
            match model.kind() {
                ModelKind::Burgers1d => c.a[0] = Mat::from_rows([[0.5 * q[0]]]),
                ModelKind::Swe2d => {
                    let (mx, my) = swe_primitive_matrices(&q);
                    c.a[0] = mx.scale(0.5);
                    c.a[1] = my.scale(0.5);
                }
                _ => unreachable!(),
            }
            c.c = Mat::zeros(model.n_comp());
            Ok(c)
        })
        .collect()
}

// the primitive shallow water mean is (φ, u, v); positivity of φ is the only
// admissibility requirement, which the conservative-variable check shares
fn q_admissible(_model: &ModelSpec, q: &[f64]) -> Vec<f64> {
    q.to_vec()
}

/// Classical advective-form linearisation.
///
/// Burgers: `R = Ū ∘ D U′ + (D Ū) ∘ U′`. Shallow water, in primitive variables
/// `(φ, u, v)` for both `Ū` and `U′`:
/// `R = Σ_i [M_i(Ū) D_i U′ + M_i(U′) D_i Ū] + C U′`.
pub fn eval_standard_linearised_residual(
    model: &ModelSpec,
    disc: &Discretisation,
    mean: &StateField,
    pert: &StateField,
    sat: &SatConfig,
) -> Result<Residual> {
    if !matches!(model.kind(), ModelKind::Burgers1d | ModelKind::Swe2d) {
        return Err(Error::Unsupported(format!(
            "standard linearisation is provided for burgers1d and swe2d, not {}",
            model.kind()
        )));
    }
    check_state(model, disc, mean, "mean state")?;
    check_state(model, disc, pert, "perturbation")?;
    let nc = model.n_comp();
    let nn = disc.n_nodes();
    let mut spatial = StateField::zeros(nc, nn);
    let mut qb = vec![0.0; nc];
    let mut qp = vec![0.0; nc];
    let mut dqb = vec![0.0; nc];
    let mut dqp = vec![0.0; nc];
    let mut y = vec![0.0; nc];
    for axis in 0..disc.grid().dim() {
        let d_mean = disc.apply_derivative(mean, axis)?;
        let d_pert = disc.apply_derivative(pert, axis)?;
        for node in 0..nn {
            mean.node(node, &mut qb);
            pert.node(node, &mut qp);
            d_mean.node(node, &mut dqb);
            d_pert.node(node, &mut dqp);
            match model.kind() {
                ModelKind::Burgers1d => {
                    y[0] = qb[0] * dqp[0] + dqb[0] * qp[0];
                }
                _ => {
                    let (mb, mp) = {
                        let b = swe_primitive_matrices(&qb);
                        let p = swe_primitive_matrices(&qp);
                        if axis == 0 {
                            (b.0, p.0)
                        } else {
                            (b.1, p.1)
                        }
                    };
                    let mut t = vec![0.0; nc];
                    mb.mul_vec(&dqp, &mut y);
                    mp.mul_vec(&dqb, &mut t);
                    for k in 0..nc {
                        y[k] += t[k];
                    }
                }
            }
            spatial.add_node(node, &y);
        }
    }
    if model.kind() == ModelKind::Swe2d {
        for node in 0..nn {
            let pos = disc.grid().position(node);
            let f = model.params().coriolis.at(pos[1]);
            pert.node(node, &mut qp);
            spatial.add_node(node, &[0.0, -f * qp[2], f * qp[1]]);
        }
    }
    let coeffs = standard_coefficients(model, disc, mean)?;
    let flux = face_contractions(disc, pert, &coeffs)?;
    let sat = build_sat(model, disc, pert, &coeffs, sat, Direction::Primal)?;
    Ok(assemble(spatial, 1.0, sat, None, flux))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Axis, Grid};
    use crate::models::{make_model, ModelParams};
    use crate::sbp::Order;

    fn periodic_1d(n: usize, order: Order) -> Discretisation {
        Discretisation::new(Grid::new(vec![Axis::periodic(n, 0.0, 1.0)]).unwrap(), order).unwrap()
    }

    fn burgers() -> ModelSpec {
        make_model(ModelKind::Burgers1d, ModelParams::default()).unwrap()
    }

    #[test]
    fn constant_state_has_zero_residual() {
        let d = periodic_1d(16, Order::Fourth);
        let u = StateField::from_vec(1, 16, vec![0.7; 16]).unwrap();
        let r = eval_primal_residual(&burgers(), &d, &u, CoeffMode::Nonlinear, &SatConfig::none(), None)
            .unwrap();
        assert!(r.field.max_abs() < 1e-13);
        assert!(r.face_flux.is_empty());
    }

    #[test]
    fn dual_is_negated_primal_bitwise() {
        let d = periodic_1d(12, Order::Second);
        let phi = StateField::from_fn(1, 12, |i, v| v[0] = (i as f64 * 0.7).sin());
        let m = burgers();
        let p = eval_primal_residual(&m, &d, &phi, CoeffMode::Nonlinear, &SatConfig::none(), None).unwrap();
        let q = eval_dual_residual(&m, &d, &phi, CoeffMode::Nonlinear, &SatConfig::none(), None).unwrap();
        assert_eq!(q.field, p.field.neg());
    }

    #[test]
    fn remainder_burgers_hand_expansion() {
        // A′ = u′/3, so H = (1/3)[D(u′u′) + u′ D u′]
        let g = Grid::new(vec![Axis::bounded(11, 0.0, 1.0)]).unwrap();
        let d = Discretisation::new(g, Order::Second).unwrap();
        let mean = StateField::from_fn(1, 11, |i, v| v[0] = 1.0 + 0.1 * i as f64);
        let pert = StateField::from_fn(1, 11, |i, v| v[0] = 0.05 * (i as f64).cos());
        let h = eval_remainder_h(&burgers(), &d, &mean, &pert).unwrap();
        let sq = StateField::from_fn(1, 11, |i, v| v[0] = pert.comp(0)[i] * pert.comp(0)[i] / 3.0);
        let dsq = d.apply_derivative(&sq, 0).unwrap();
        let dp = d.apply_derivative(&pert, 0).unwrap();
        for i in 0..11 {
            let expect = dsq.comp(0)[i] + pert.comp(0)[i] / 3.0 * dp.comp(0)[i];
            assert!((h.comp(0)[i] - expect).abs() < 1e-14, "{i}");
        }
    }

    #[test]
    fn standard_linearisation_rejects_euler() {
        let g = Grid::new(vec![Axis::bounded(9, 0.0, 1.0), Axis::bounded(9, 0.0, 1.0)]).unwrap();
        let d = Discretisation::new(g, Order::Second).unwrap();
        let m = make_model(ModelKind::Euler2d, ModelParams::default()).unwrap();
        let z = StateField::zeros(3, 81);
        assert!(matches!(
            eval_standard_linearised_residual(&m, &d, &z, &z, &SatConfig::none()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn swe_admissibility_reported_with_node() {
        let g = Grid::new(vec![Axis::periodic(8, 0.0, 1.0), Axis::periodic(8, 0.0, 1.0)]).unwrap();
        let d = Discretisation::new(g, Order::Second).unwrap();
        let m = make_model(ModelKind::Swe2d, ModelParams::default()).unwrap();
        let mut u = StateField::from_fn(3, 64, |_, v| v.copy_from_slice(&[1.0, 0.1, 0.1]));
        u.comp_mut(0)[5] = -0.1;
        assert!(matches!(
            eval_primal_residual(&m, &d, &u, CoeffMode::Nonlinear, &SatConfig::none(), None),
            Err(Error::Admissibility { node: 5, .. })
        ));
    }
}
