//! Boundary analysis (eigen-counting of required boundary conditions) and
//! weak boundary closures (SAT penalties).

use std::fmt::Write as _;
use std::io::Write;

use crate::disc::Discretisation;
use crate::error::{Error, Result};
use crate::field::StateField;
use crate::grid::{Face, Side};
use crate::linalg::{negative_part, positive_part, symmetric_eigenvalues, Mat};
use crate::models::{Coefficients, ModelKind, ModelSpec};

pub const DEFAULT_DELTA: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Formulation {
    /// `Uᵀ(n_i A_i(U))U`; for shallow water the parameter-free diagonal form.
    Nonlinear,
    /// `U′ᵀ(n_i A_i(Ū))U′`, parameter dependent for shallow water.
    Linearised,
    /// Shallow water boundary term written as a quadratic form in
    /// `(U₁², U_n² + U₁², U_n U_τ)`; requires a non-glancing face.
    NonlinearRewritten { delta_n: f64, delta_1: f64 },
}

impl Formulation {
    pub fn rewritten() -> Self {
        Formulation::NonlinearRewritten {
            delta_n: DEFAULT_DELTA,
            delta_1: DEFAULT_DELTA,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Formulation::Nonlinear => "nonlinear",
            Formulation::Linearised => "linearised",
            Formulation::NonlinearRewritten { .. } => "nonlinear-rewritten",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "nonlinear" => Some(Formulation::Nonlinear),
            "linearised" | "linearized" => Some(Formulation::Linearised),
            "rewritten" | "nonlinear-rewritten" => Some(Formulation::rewritten()),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BoundaryAnalysis {
    pub face: String,
    pub normal: Vec<f64>,
    pub formulation: Formulation,
    pub alpha: f64,
    pub beta: f64,
    /// Symmetric boundary matrix the counts are taken from.
    pub matrix: Mat,
    pub eigenvalues: Vec<f64>,
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
    /// Minimal number of boundary conditions implied.
    pub conditions: usize,
    pub note: Option<String>,
}

fn count_signs(eigs: &[f64]) -> (usize, usize, usize) {
    let scale = eigs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let tol = 1e-12 * scale;
    let mut c = (0, 0, 0);
    for &l in eigs {
        if l < -tol {
            c.0 += 1;
        } else if l > tol {
            c.2 += 1;
        } else {
            c.1 += 1;
        }
    }
    c
}

/// Normal and tangential scaled velocities `(U_n, U_τ)` of a shallow water state.
pub fn swe_normal_tangential(u: &[f64], normal: &[f64]) -> (f64, f64) {
    (
        normal[0] * u[1] + normal[1] * u[2],
        -normal[1] * u[1] + normal[0] * u[2],
    )
}

/// Symmetric part of the boundary matrix for `formulation` at a face state.
///
/// `state` is `U` in the nonlinear formulations and `Ū` in the linearised one.
pub fn analyze_boundary(
    model: &ModelSpec,
    state: &[f64],
    pos: &[f64; 3],
    normal: &[f64],
    formulation: Formulation,
    face_label: &str,
) -> Result<BoundaryAnalysis> {
    if normal.len() != model.dim() {
        return Err(Error::ShapeMismatch(format!(
            "normal has {} entries, model is {}-dimensional",
            normal.len(),
            model.dim()
        )));
    }
    let coeffs = model.coeff_matrices(state, pos)?;
    let full = coeffs.normal_matrix(normal).sym();
    let mut note = None;
    let swe = model.kind() == ModelKind::Swe2d;

    let (matrix, conditions_override) = match formulation {
        Formulation::Linearised => (full, None),
        Formulation::Nonlinear if swe => (swe_nonlinear_matrix(state, normal), None),
        Formulation::Nonlinear => (full, None),
        Formulation::NonlinearRewritten { delta_n, delta_1 } => {
            if !swe {
                return Err(Error::Unsupported(
                    "the rewritten boundary term is defined for swe2d only".into(),
                ));
            }
            let (un, _) = swe_normal_tangential(state, normal);
            if un.abs() < delta_n {
                return Err(Error::Glancing { un, delta: delta_n });
            }
            let s1 = state[0].sqrt();
            if s1 < delta_1 {
                return Err(Error::Inadmissible(format!(
                    "sqrt(U1) = {s1:e} is below delta_1 = {delta_1:e}"
                )));
            }
            let k = 1.0 / (2.0 * un * s1);
            let m = Mat::diag(&[-k, k, k]);
            if un > 0.0 {
                // the rewritten form suggests one outflow condition; the direct
                // contraction u_n(U₁² + ½|U|²) needs none
                let plain = swe_nonlinear_matrix(state, normal);
                let (neg, _, _) = count_signs(&symmetric_eigenvalues(&plain));
                note = Some(
                    "outflow: rewritten form overcounts, minimal count taken from direct contraction"
                        .to_string(),
                );
                (m, Some(neg))
            } else {
                (m, None)
            }
        }
    };
    let eigenvalues = symmetric_eigenvalues(&matrix);
    let (negative, zero, positive) = count_signs(&eigenvalues);
    let conditions = conditions_override.map_or(negative, |c| c.min(negative));
    Ok(BoundaryAnalysis {
        face: face_label.to_string(),
        normal: normal.to_vec(),
        formulation,
        alpha: model.params().alpha,
        beta: model.params().beta,
        matrix,
        eigenvalues,
        negative,
        zero,
        positive,
        conditions,
        note,
    })
}

/// `diag(u_n, ½u_n, ½u_n)`, the parameter-free nonlinear shallow water
/// boundary matrix.
fn swe_nonlinear_matrix(u: &[f64], normal: &[f64]) -> Mat {
    let (un, _) = swe_normal_tangential(u, normal);
    let vn = un / u[0].sqrt();
    Mat::diag(&[vn, 0.5 * vn, 0.5 * vn])
}

/// Shallow water boundary contraction via the rewritten quadratic form:
/// `(−W₁² + W₂² + W₃²) / (2 U_n √U₁)`.
pub fn swe_rewritten_contraction(u: &[f64], normal: &[f64]) -> f64 {
    let (un, ut) = swe_normal_tangential(u, normal);
    let w1 = u[0] * u[0];
    let w2 = un * un + u[0] * u[0];
    let w3 = un * ut;
    (-w1 * w1 + w2 * w2 + w3 * w3) / (2.0 * un * u[0].sqrt())
}

pub fn analysis_table(rows: &[BoundaryAnalysis]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<10} {:<20} {:>6} {:>6}  {:<36} {:>4} {:>4} {:>4} {:>5}",
        "face", "formulation", "alpha", "beta", "eigenvalues", "neg", "zero", "pos", "bcs"
    );
    for r in rows {
        let eig = r
            .eigenvalues
            .iter()
            .map(|e| format!("{e:.6}"))
            .collect::<Vec<_>>()
            .join(", ");
        let _ = writeln!(
            s,
            "{:<10} {:<20} {:>6} {:>6}  {:<36} {:>4} {:>4} {:>4} {:>5}",
            r.face,
            r.formulation.tag(),
            r.alpha,
            r.beta,
            format!("({eig})"),
            r.negative,
            r.zero,
            r.positive,
            r.conditions
        );
        if let Some(n) = &r.note {
            let _ = writeln!(s, "           note: {n}");
        }
    }
    s
}

pub fn write_analysis_csv<W: Write>(out: W, rows: &[BoundaryAnalysis]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "face",
        "formulation",
        "alpha",
        "beta",
        "eigenvalues",
        "negative",
        "zero",
        "positive",
        "conditions",
    ])?;
    for r in rows {
        let eig = r
            .eigenvalues
            .iter()
            .map(|e| format!("{e:e}"))
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            r.face.clone(),
            r.formulation.tag().to_string(),
            r.alpha.to_string(),
            r.beta.to_string(),
            eig,
            r.negative.to_string(),
            r.zero.to_string(),
            r.positive.to_string(),
            r.conditions.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Boundary data on a face: one value vector for the whole face or one per
/// face node (in lexicographic face order).
#[derive(Clone, Debug, PartialEq)]
pub enum FaceData {
    Constant(Vec<f64>),
    PerNode(Vec<Vec<f64>>),
}

impl FaceData {
    fn at(&self, k: usize) -> &[f64] {
        match self {
            FaceData::Constant(v) => v,
            FaceData::PerNode(v) => &v[k],
        }
    }

    fn check(&self, width: usize, nodes: usize, face: Face) -> Result<()> {
        let ok = match self {
            FaceData::Constant(v) => v.len() == width && v.iter().all(|x| x.is_finite()),
            FaceData::PerNode(v) => {
                v.len() == nodes
                    && v.iter().all(|r| r.len() == width && r.iter().all(|x| x.is_finite()))
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidFace {
                face,
                reason: format!("boundary data must be finite with {width} value(s) per node"),
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FaceClosure {
    None,
    /// Penalises the incoming characteristic part of `U − g`.
    Characteristic(FaceData),
    /// Shallow water inflow with the two nonlinear conditions
    /// `U_n² + U₁² = g₂²` and `U_n U_τ = g₃²`; data is `(g₂, g₃)`.
    SweTwoCondition(FaceData),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FaceSat {
    pub face: Face,
    pub closure: FaceClosure,
    /// Penalty scale; 1 is the smallest value that keeps the closure dissipative.
    pub sigma: f64,
    pub delta_n: f64,
}

/// Weak boundary treatment for every face. Faces not listed get no penalty;
/// periodic axes are closed by the operator itself.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SatConfig {
    pub faces: Vec<FaceSat>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Primal,
    Dual,
}

impl SatConfig {
    pub fn none() -> Self {
        SatConfig::default()
    }

    pub fn with(mut self, face: Face, closure: FaceClosure, sigma: f64) -> Self {
        self.faces.retain(|f| f.face != face);
        self.faces.push(FaceSat {
            face,
            closure,
            sigma,
            delta_n: DEFAULT_DELTA,
        });
        self
    }

    pub fn is_active(&self) -> bool {
        self.faces.iter().any(|f| f.closure != FaceClosure::None)
    }

    pub fn validate(&self, model: &ModelSpec, disc: &Discretisation) -> Result<()> {
        for f in &self.faces {
            if f.closure == FaceClosure::None {
                continue;
            }
            disc.grid().check_face(f.face)?;
            if !(f.sigma > 0.0 && f.sigma.is_finite()) {
                return Err(Error::InvalidFace {
                    face: f.face,
                    reason: format!("penalty scale must be positive, got {}", f.sigma),
                });
            }
            let nodes = disc.grid().face_nodes(f.face).len();
            match &f.closure {
                FaceClosure::None => {}
                FaceClosure::Characteristic(d) => d.check(model.n_comp(), nodes, f.face)?,
                FaceClosure::SweTwoCondition(d) => {
                    if model.kind() != ModelKind::Swe2d {
                        return Err(Error::InvalidFace {
                            face: f.face,
                            reason: "two-condition inflow closure needs swe2d".into(),
                        });
                    }
                    d.check(2, nodes, f.face)?;
                }
            }
        }
        Ok(())
    }
}

fn unit_normal(dim: usize, face: Face) -> Vec<f64> {
    let mut n = vec![0.0; dim];
    n[face.axis] = face.normal_sign();
    n
}

/// SAT field added to the residual (`P U_t = −R`, `R = … − SAT`).
///
/// The characteristic closure uses `σ P_b⁻¹ S⁻(U − g)` with `S` the symmetric
/// part of `n·A(V)` at the face node; the dual direction uses
/// `−σ P_b⁻¹ S⁺(Φ − q)`. Returns `None` if no face is penalised.
pub fn build_sat(
    model: &ModelSpec,
    disc: &Discretisation,
    u: &StateField,
    coeffs: &[Coefficients],
    sat: &SatConfig,
    direction: Direction,
) -> Result<Option<StateField>> {
    if !sat.is_active() {
        return Ok(None);
    }
    sat.validate(model, disc)?;
    let nc = model.n_comp();
    let mut out = StateField::zeros(nc, u.n_nodes());
    let mut val = vec![0.0; nc];
    let mut diff = vec![0.0; nc];
    let mut pen = vec![0.0; nc];
    for f in &sat.faces {
        if f.closure == FaceClosure::None {
            continue;
        }
        let op = disc.op(f.face.axis);
        let wn = match f.face.side {
            Side::Low => op.weights()[0],
            Side::High => op.weights()[op.n() - 1],
        };
        let normal = unit_normal(model.dim(), f.face);
        let nodes = disc.grid().face_nodes(f.face);
        for (k, &node) in nodes.iter().enumerate() {
            u.node(node, &mut val);
            match &f.closure {
                FaceClosure::None => {}
                FaceClosure::Characteristic(data) => {
                    let g = data.at(k);
                    for c in 0..nc {
                        diff[c] = val[c] - g[c];
                    }
                    let s = coeffs[node].normal_matrix(&normal).sym();
                    let (m, sign) = match direction {
                        Direction::Primal => (negative_part(&s), 1.0),
                        Direction::Dual => (positive_part(&s), -1.0),
                    };
                    m.mul_vec(&diff, &mut pen);
                    for p in pen.iter_mut() {
                        *p *= sign * f.sigma / wn;
                    }
                    out.add_node(node, &pen);
                }
                FaceClosure::SweTwoCondition(data) => {
                    if direction == Direction::Dual {
                        return Err(Error::Unsupported(
                            "two-condition inflow closure is primal only".into(),
                        ));
                    }
                    let g = data.at(k);
                    let (un, ut) = swe_normal_tangential(&val, &normal);
                    if un >= 0.0 {
                        continue;
                    }
                    if -un < f.delta_n {
                        return Err(Error::Glancing {
                            un,
                            delta: f.delta_n,
                        });
                    }
                    let w2 = un * un + val[0] * val[0];
                    let w3 = un * ut;
                    let (g2, g3) = (g[0] * g[0], g[1] * g[1]);
                    let mismatch = (w2 - g2) * (w2 + g2) + (w3 - g3) * (w3 + g3);
                    let uu: f64 = val.iter().map(|x| x * x).sum();
                    // rank-one penalty along U: Uᵀ·SAT·P_b = −σ·mismatch / (2|U_n|√U₁)
                    let coef = -f.sigma * mismatch / (2.0 * (-un) * val[0].sqrt() * wn * uu);
                    for c in 0..nc {
                        pen[c] = coef * val[c];
                    }
                    out.add_node(node, &pen);
                }
            }
        }
    }
    Ok(Some(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_model, ModelParams};

    fn swe() -> ModelSpec {
        make_model(ModelKind::Swe2d, ModelParams::default()).unwrap()
    }

    #[test]
    fn linearised_inflow_needs_three() {
        let m = swe();
        // ū = -1 with φ̄ = 4: Ū = (4, -2, 0)
        let a = analyze_boundary(&m, &[4.0, -2.0, 0.0], &[0.0; 3], &[1.0, 0.0], Formulation::Linearised, "x-high")
            .unwrap();
        assert!((a.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((a.eigenvalues[1] + 0.5).abs() < 1e-14);
        assert!((a.eigenvalues[2] + 0.5).abs() < 1e-14);
        assert_eq!(a.conditions, 3);
    }

    #[test]
    fn rewritten_inflow_needs_two_outflow_none() {
        let m = swe();
        let a = analyze_boundary(&m, &[2.0, -1.0, 0.3], &[0.0; 3], &[1.0, 0.0], Formulation::rewritten(), "x")
            .unwrap();
        assert_eq!((a.negative, a.conditions), (2, 2));
        let b = analyze_boundary(&m, &[2.0, 1.0, 0.3], &[0.0; 3], &[1.0, 0.0], Formulation::rewritten(), "x")
            .unwrap();
        assert_eq!(b.negative, 1);
        assert_eq!(b.conditions, 0);
        assert!(b.note.is_some());
        let c = analyze_boundary(&m, &[2.0, 1.0, 0.3], &[0.0; 3], &[1.0, 0.0], Formulation::Nonlinear, "x")
            .unwrap();
        assert_eq!(c.conditions, 0);
    }

    #[test]
    fn glancing_is_rejected_and_zero_speed_counted() {
        let m = swe();
        assert!(matches!(
            analyze_boundary(&m, &[2.0, 0.0, 0.3], &[0.0; 3], &[1.0, 0.0], Formulation::rewritten(), "x"),
            Err(Error::Glancing { .. })
        ));
        let a = analyze_boundary(&m, &[2.0, 0.0, 0.3], &[0.0; 3], &[1.0, 0.0], Formulation::Nonlinear, "x")
            .unwrap();
        assert_eq!(a.zero, 3);
        assert_eq!(a.conditions, 0);
    }

    #[test]
    fn rewritten_matches_direct_contraction() {
        let u = [1.7, -0.4, 0.9];
        let n = [0.6, 0.8];
        let (un, _) = swe_normal_tangential(&u, &n);
        let direct = un / u[0].sqrt() * (u[0] * u[0] + 0.5 * (u[1] * u[1] + u[2] * u[2]));
        let rew = swe_rewritten_contraction(&u, &n);
        assert!((direct - rew).abs() <= 1e-13 * direct.abs());
    }

    #[test]
    fn table_and_csv_render() {
        let m = swe();
        let a = analyze_boundary(&m, &[4.0, -2.0, 0.0], &[0.0; 3], &[1.0, 0.0], Formulation::Linearised, "x-high")
            .unwrap();
        let t = analysis_table(std::slice::from_ref(&a));
        assert!(t.contains("linearised"));
        let mut buf = Vec::new();
        write_analysis_csv(&mut buf, &[a]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("face,formulation"));
        assert_eq!(s.lines().count(), 2);
    }
}
