//! The four model systems written in the skew-symmetric form
//!
//! ```text
//! P U_t + Σ_i [ (A_i(V) U)_{x_i} + A_i(V)ᵀ U_{x_i} ] + C(V) U = F
//! ```
//!
//! with `C + Cᵀ = 0`. Each model supplies its norm matrix `P`, the
//! coefficient matrices `A_i(V)` and the zero-order term `C(V)`.

use crate::disc::Discretisation;
use crate::error::{Error, Result};
use crate::field::StateField;
use crate::grid::Grid;
use crate::linalg::Mat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Scalar inviscid Burgers, `u`.
    Burgers1d,
    /// Incompressible Euler, `(u, v, p)`.
    Euler2d,
    /// Incompressible Euler in cylindrical coordinates, `(u, v, w, p)` on `(r, θ, z)`.
    Euler3dCyl,
    /// Shallow water in energy variables `(φ, √φ u, √φ v)`.
    Swe2d,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Burgers1d,
        ModelKind::Euler2d,
        ModelKind::Euler3dCyl,
        ModelKind::Swe2d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Burgers1d => "burgers1d",
            ModelKind::Euler2d => "euler2d",
            ModelKind::Euler3dCyl => "euler3d_cyl",
            ModelKind::Swe2d => "swe2d",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn n_comp(self) -> usize {
        match self {
            ModelKind::Burgers1d => 1,
            ModelKind::Euler2d => 3,
            ModelKind::Euler3dCyl => 4,
            ModelKind::Swe2d => 3,
        }
    }

    pub fn dim(self) -> usize {
        match self {
            ModelKind::Burgers1d => 1,
            ModelKind::Euler2d | ModelKind::Swe2d => 2,
            ModelKind::Euler3dCyl => 3,
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Coriolis parameter as a function of `y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coriolis {
    Constant(f64),
    /// `f0 + beta * y`
    BetaPlane { f0: f64, beta: f64 },
}

impl Coriolis {
    pub fn at(&self, y: f64) -> f64 {
        match *self {
            Coriolis::Constant(f) => f,
            Coriolis::BetaPlane { f0, beta } => f0 + beta * y,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Free parameter of the x-direction shallow water matrix.
    pub alpha: f64,
    /// Free parameter of the y-direction shallow water matrix.
    pub beta: f64,
    /// Gravitational constant (m/s²); the geopotential is `φ = g h`.
    pub gravity: f64,
    pub coriolis: Coriolis,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            alpha: 1.0,
            beta: 1.0,
            gravity: 9.81,
            coriolis: Coriolis::Constant(0.0),
        }
    }
}

/// Pointwise coefficient matrices at one node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coefficients {
    pub dim: usize,
    pub a: [Mat; 3],
    pub c: Mat,
}

impl Coefficients {
    fn new(dim: usize, a: &[Mat], c: Mat) -> Self {
        let n = c.n();
        let mut arr = [Mat::zeros(n); 3];
        arr[..a.len()].copy_from_slice(a);
        Coefficients { dim, a: arr, c }
    }

    /// `Σ_i n_i A_i`
    pub fn normal_matrix(&self, normal: &[f64]) -> Mat {
        let mut m = Mat::zeros(self.c.n());
        for (k, &nk) in normal.iter().enumerate().take(self.dim) {
            if nk != 0.0 {
                m = m.add(&self.a[k].scale(nk));
            }
        }
        m
    }

    pub fn sub(&self, other: &Coefficients) -> Coefficients {
        let mut out = *self;
        for k in 0..self.dim {
            out.a[k] = self.a[k].sub(&other.a[k]);
        }
        out.c = self.c.sub(&other.c);
        out
    }

    pub fn add(&self, other: &Coefficients) -> Coefficients {
        let mut out = *self;
        for k in 0..self.dim {
            out.a[k] = self.a[k].add(&other.a[k]);
        }
        out.c = self.c.add(&other.c);
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    kind: ModelKind,
    params: ModelParams,
}

pub fn make_model(kind: ModelKind, params: ModelParams) -> Result<ModelSpec> {
    ModelSpec::new(kind, params)
}

impl ModelSpec {
    pub fn new(kind: ModelKind, params: ModelParams) -> Result<Self> {
        if !(params.alpha.is_finite() && params.beta.is_finite()) {
            return Err(Error::InvalidParameter("alpha and beta must be finite".into()));
        }
        if kind == ModelKind::Swe2d && !(params.gravity > 0.0 && params.gravity.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gravity must be positive, got {}",
                params.gravity
            )));
        }
        Ok(ModelSpec { kind, params })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn n_comp(&self) -> usize {
        self.kind.n_comp()
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    /// Same model with different shallow water free parameters.
    pub fn with_alpha_beta(&self, alpha: f64, beta: f64) -> ModelSpec {
        ModelSpec {
            kind: self.kind,
            params: ModelParams {
                alpha,
                beta,
                ..self.params
            },
        }
    }

    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        if grid.dim() != self.dim() {
            return Err(Error::ShapeMismatch(format!(
                "{} needs a {}-dimensional grid, got {}",
                self.kind,
                self.dim(),
                grid.dim()
            )));
        }
        if self.kind == ModelKind::Euler3dCyl && grid.axis(0).min <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "cylindrical grid needs r_min > 0, got {}",
                grid.axis(0).min
            )));
        }
        Ok(())
    }

    /// Norm matrix `P` at a node.
    pub fn norm_matrix(&self, pos: &[f64; 3]) -> Mat {
        match self.kind {
            ModelKind::Burgers1d => Mat::identity(1),
            ModelKind::Euler2d => Mat::diag(&[1.0, 1.0, 0.0]),
            ModelKind::Euler3dCyl => {
                let r = pos[0];
                Mat::diag(&[r, r, r, 0.0])
            }
            ModelKind::Swe2d => Mat::identity(3),
        }
    }

    /// Time marching is only defined when `P` is invertible; here it is then
    /// the identity.
    pub fn norm_is_identity(&self) -> bool {
        matches!(self.kind, ModelKind::Burgers1d | ModelKind::Swe2d)
    }

    pub fn check_admissible(&self, v: &[f64], pos: &[f64; 3]) -> Result<()> {
        if v.len() != self.n_comp() {
            return Err(Error::ShapeMismatch(format!(
                "{} expects {} components, got {}",
                self.kind,
                self.n_comp(),
                v.len()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Inadmissible("non-finite state".into()));
        }
        match self.kind {
            ModelKind::Swe2d if !(v[0] > 0.0) => Err(Error::Inadmissible(format!(
                "geopotential must be positive, got {}",
                v[0]
            ))),
            ModelKind::Euler3dCyl if !(pos[0] > 0.0) => {
                Err(Error::Inadmissible(format!("radius must be positive, got {}", pos[0])))
            }
            _ => Ok(()),
        }
    }

    /// `A_i(V)` for each axis and `C(V)` at a node.
    pub fn coeff_matrices(&self, v: &[f64], pos: &[f64; 3]) -> Result<Coefficients> {
        self.check_admissible(v, pos)?;
        Ok(match self.kind {
            ModelKind::Burgers1d => Coefficients::new(
                1,
                &[Mat::from_rows([[v[0] / 3.0]])],
                Mat::zeros(1),
            ),
            ModelKind::Euler2d => {
                let (a, b) = euler2d_flux_matrices(v);
                Coefficients::new(2, &[a.scale(0.5), b.scale(0.5)], Mat::zeros(3))
            }
            ModelKind::Euler3dCyl => {
                let r = pos[0];
                let (a, b, c) = cyl_flux_matrices(v);
                Coefficients::new(
                    3,
                    &[a.scale(0.5 * r), b.scale(0.5), c.scale(0.5 * r)],
                    cyl_zero_order(v),
                )
            }
            ModelKind::Swe2d => {
                let (al, be) = (self.params.alpha, self.params.beta);
                let s = v[0].sqrt();
                let u = v[1] / s;
                let w = v[2] / s;
                let a1 = Mat::from_rows([
                    [al * u, (1.0 - 3.0 * al) * s, 0.0],
                    [2.0 * al * s, 0.5 * u, 0.0],
                    [0.0, 0.0, 0.5 * u],
                ]);
                let a2 = Mat::from_rows([
                    [be * w, 0.0, (1.0 - 3.0 * be) * s],
                    [0.0, 0.5 * w, 0.0],
                    [2.0 * be * s, 0.0, 0.5 * w],
                ]);
                let f = self.params.coriolis.at(pos[1]);
                let c = Mat::from_rows([[0.0, 0.0, 0.0], [0.0, 0.0, -f], [0.0, f, 0.0]]);
                Coefficients::new(2, &[a1, a2], c)
            }
        })
    }

    /// Largest characteristic speed at a node, used for the CFL guard.
    pub fn max_wave_speed(&self, v: &[f64], pos: &[f64; 3]) -> Result<f64> {
        self.check_admissible(v, pos)?;
        Ok(match self.kind {
            ModelKind::Burgers1d => v[0].abs(),
            ModelKind::Swe2d => {
                let s = v[0].sqrt();
                (v[1] / s).abs().max((v[2] / s).abs()) + s
            }
            // incompressible: pressure waves are instantaneous, report advection plus one
            ModelKind::Euler2d => v[0].abs().max(v[1].abs()) + 1.0,
            ModelKind::Euler3dCyl => {
                let r = pos[0];
                v[0].abs().max((v[1] / r).abs()).max(v[2].abs()) + 1.0
            }
        })
    }

    /// Coefficients at every node of a field `v`.
    pub fn nodal_coefficients(
        &self,
        disc: &Discretisation,
        v: &StateField,
    ) -> Result<Vec<Coefficients>> {
        self.check_grid(disc.grid())?;
        v.check_shape(self.n_comp(), disc.n_nodes(), "coefficient field")?;
        let mut buf = vec![0.0; self.n_comp()];
        (0..disc.n_nodes())
            .map(|node| {
                v.node(node, &mut buf);
                let pos = disc.grid().position(node);
                self.coeff_matrices(&buf, &pos).map_err(|e| match e {
                    Error::Inadmissible(reason) => Error::Admissibility { node, reason },
                    other => other,
                })
            })
            .collect()
    }
}

/// Matrices `A`, `B` of the primitive incompressible Euler system
/// `Ĩ U_t + A U_x + B U_y = 0`.
pub fn euler2d_flux_matrices(v: &[f64]) -> (Mat, Mat) {
    let (u, w) = (v[0], v[1]);
    (
        Mat::from_rows([[u, 0.0, 1.0], [0.0, u, 0.0], [1.0, 0.0, 0.0]]),
        Mat::from_rows([[w, 0.0, 0.0], [0.0, w, 1.0], [0.0, 1.0, 0.0]]),
    )
}

/// Matrices `A`, `B`, `C` of the cylindrical incompressible Euler system.
pub fn cyl_flux_matrices(v: &[f64]) -> (Mat, Mat, Mat) {
    let (u, w, z) = (v[0], v[1], v[2]);
    (
        Mat::from_rows([
            [u, 0.0, 0.0, 1.0],
            [0.0, u, 0.0, 0.0],
            [0.0, 0.0, u, 0.0],
            [1.0, 0.0, 0.0, 0.0],
        ]),
        Mat::from_rows([
            [w, 0.0, 0.0, 0.0],
            [0.0, w, 0.0, 1.0],
            [0.0, 0.0, w, 0.0],
            [0.0, 1.0, 0.0, 0.0],
        ]),
        Mat::from_rows([
            [z, 0.0, 0.0, 0.0],
            [0.0, z, 0.0, 0.0],
            [0.0, 0.0, z, 1.0],
            [0.0, 0.0, 1.0, 0.0],
        ]),
    )
}

/// Source vector `R(U) = (-v² - p, u v, 0, 0)` of the cylindrical system.
pub fn cyl_source(v: &[f64]) -> [f64; 4] {
    [-v[1] * v[1] - v[3], v[0] * v[1], 0.0, 0.0]
}

/// Skew-symmetric zero-order matrix `D(U)` of the cylindrical system.
pub fn cyl_zero_order(v: &[f64]) -> Mat {
    let w = v[1];
    Mat::from_rows([
        [0.0, -w, 0.0, -0.5],
        [w, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
        [0.5, 0.0, 0.0, 0.0],
    ])
}

/// Advective matrices `𝒜(U)`, `ℬ(U)` of `U_t + 𝒜 U_x + ℬ U_y + C U = 0`, the
/// shallow water equations in energy variables before the skew split.
pub fn swe_advective_matrices(v: &[f64]) -> (Mat, Mat) {
    let s = v[0].sqrt();
    let s3 = s * s * s;
    let (u2, u3) = (v[1], v[2]);
    let a = Mat::from_rows([
        [0.5 * u2 / s, s, 0.0],
        [s - u2 * u2 / (4.0 * s3), 1.5 * u2 / s, 0.0],
        [-u2 * u3 / (4.0 * s3), 0.5 * u3 / s, u2 / s],
    ]);
    let b = Mat::from_rows([
        [0.5 * u3 / s, 0.0, s],
        [-u2 * u3 / (4.0 * s3), u3 / s, 0.5 * u2 / s],
        [s - u3 * u3 / (4.0 * s3), 0.0, 1.5 * u3 / s],
    ]);
    (a, b)
}

/// `(φ, u, v) → (φ, √φ u, √φ v)`
pub fn swe_transform(primitive: &StateField) -> Result<StateField> {
    if primitive.n_comp() != 3 {
        return Err(Error::ShapeMismatch("shallow water state has 3 components".into()));
    }
    let mut out = StateField::zeros(3, primitive.n_nodes());
    let mut q = [0.0; 3];
    for node in 0..primitive.n_nodes() {
        primitive.node(node, &mut q);
        if !(q[0] > 0.0) {
            return Err(Error::Admissibility {
                node,
                reason: format!("geopotential must be positive, got {}", q[0]),
            });
        }
        let s = q[0].sqrt();
        out.set_node(node, &[q[0], s * q[1], s * q[2]]);
    }
    Ok(out)
}

/// `(U₁, U₂, U₃) → (U₁, U₂/√U₁, U₃/√U₁)`
pub fn swe_inverse(state: &StateField) -> Result<StateField> {
    if state.n_comp() != 3 {
        return Err(Error::ShapeMismatch("shallow water state has 3 components".into()));
    }
    let mut out = StateField::zeros(3, state.n_nodes());
    let mut q = [0.0; 3];
    for node in 0..state.n_nodes() {
        state.node(node, &mut q);
        if !(q[0] > 0.0) {
            return Err(Error::Admissibility {
                node,
                reason: format!("geopotential must be positive, got {}", q[0]),
            });
        }
        let s = q[0].sqrt();
        out.set_node(node, &[q[0], q[1] / s, q[2] / s]);
    }
    Ok(out)
}

/// Mean and perturbation coefficients of `A_i(Ū + U′) = Ā_i + A′_i`.
#[derive(Clone, Debug)]
pub struct CoefficientSplit {
    pub mean: Vec<Coefficients>,
    pub pert: Vec<Coefficients>,
}

impl CoefficientSplit {
    /// `Ā + A′` at every node.
    pub fn total(&self) -> Vec<Coefficients> {
        self.mean.iter().zip(&self.pert).map(|(m, p)| m.add(p)).collect()
    }
}

/// Splits the coefficients as `A′ = A(Ū + U′) − A(Ū)`, likewise for `C`.
pub fn coeff_split(
    model: &ModelSpec,
    disc: &Discretisation,
    mean: &StateField,
    pert: &StateField,
) -> Result<CoefficientSplit> {
    let bar = model.nodal_coefficients(disc, mean)?;
    let total = model.nodal_coefficients(disc, &mean.add(pert))?;
    let pert = total.iter().zip(&bar).map(|(t, b)| t.sub(b)).collect();
    Ok(CoefficientSplit { mean: bar, pert })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;
    use crate::sbp::Order;

    fn swe(alpha: f64, beta: f64, coriolis: Coriolis) -> ModelSpec {
        make_model(
            ModelKind::Swe2d,
            ModelParams {
                alpha,
                beta,
                coriolis,
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn burgers_coefficient_is_a_third() {
        let m = make_model(ModelKind::Burgers1d, ModelParams::default()).unwrap();
        let c = m.coeff_matrices(&[0.75], &[0.0; 3]).unwrap();
        assert_eq!(c.a[0][(0, 0)], 0.25);
        assert_eq!(c.c[(0, 0)], 0.0);
        assert_eq!(m.n_comp(), 1);
    }

    #[test]
    fn swe_a1_at_rest_alpha_one() {
        let m = swe(1.0, 1.0, Coriolis::Constant(0.0));
        let c = m.coeff_matrices(&[1.0, 0.0, 0.0], &[0.0; 3]).unwrap();
        let expect = Mat::from_rows([[0.0, -2.0, 0.0], [2.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        assert_eq!(c.a[0], expect);
        assert_eq!(c.c, Mat::zeros(3));
    }

    #[test]
    fn euler2d_a1_matches_half_flux_matrix() {
        let m = make_model(ModelKind::Euler2d, ModelParams::default()).unwrap();
        let c = m.coeff_matrices(&[1.0, 1.0, 1.0], &[0.0; 3]).unwrap();
        let expect = Mat::from_rows([[0.5, 0.0, 0.5], [0.0, 0.5, 0.0], [0.5, 0.0, 0.0]]);
        assert_eq!(c.a[0], expect);
        let (a, b) = euler2d_flux_matrices(&[0.3, -0.7, 2.0]);
        assert!(a.is_symmetric(0.0) && b.is_symmetric(0.0));
    }

    #[test]
    fn cylindrical_zero_order_entries() {
        let m = make_model(ModelKind::Euler3dCyl, ModelParams::default()).unwrap();
        let c = m.coeff_matrices(&[0.1, 0.7, -0.2, 3.0], &[1.5, 0.0, 0.0]).unwrap();
        let d = c.c;
        assert_eq!(d[(0, 1)], -0.7);
        assert_eq!(d[(1, 0)], 0.7);
        assert_eq!(d[(0, 3)], -0.5);
        assert_eq!(d[(3, 0)], 0.5);
        let nonzero = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .filter(|&(i, j)| d[(i, j)] != 0.0)
            .count();
        assert_eq!(nonzero, 4);
        assert!(m.coeff_matrices(&[0.0; 4], &[0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn zero_order_terms_are_skew() {
        let models = [
            make_model(ModelKind::Burgers1d, ModelParams::default()).unwrap(),
            make_model(ModelKind::Euler2d, ModelParams::default()).unwrap(),
            make_model(ModelKind::Euler3dCyl, ModelParams::default()).unwrap(),
            swe(0.3, -1.2, Coriolis::BetaPlane { f0: 1.0, beta: 0.5 }),
        ];
        let states: [&[f64]; 4] = [&[0.4], &[0.1, -0.3, 2.0], &[0.2, 0.9, -0.4, 1.0], &[1.3, 0.2, -0.5]];
        for (m, v) in models.iter().zip(states) {
            let c = m.coeff_matrices(v, &[1.0, 0.7, 0.2]).unwrap().c;
            let s = c.add(&c.transpose());
            assert!(s.max_abs() <= 1e-15, "{}", m.kind());
        }
    }

    #[test]
    fn swe_positivity_is_a_hard_error() {
        let m = swe(1.0, 1.0, Coriolis::Constant(0.0));
        assert!(matches!(
            m.coeff_matrices(&[0.0, 0.0, 0.0], &[0.0; 3]),
            Err(Error::Inadmissible(_))
        ));
        assert!(make_model(
            ModelKind::Swe2d,
            ModelParams {
                gravity: 0.0,
                ..Default::default()
            }
        )
        .is_err());
    }

    #[test]
    fn swe_transform_examples() {
        let prim = StateField::from_vec(3, 1, vec![4.0, 1.0, -2.0]).unwrap();
        let u = swe_transform(&prim).unwrap();
        assert_eq!(u.as_slice(), &[4.0, 2.0, -4.0]);
        // U₁² + U₂² + U₃² = φ² + φ(u² + v²)
        let e: f64 = u.as_slice().iter().map(|x| x * x).sum();
        assert_eq!(e, 16.0 + 4.0 * 5.0);
        let back = swe_inverse(&u).unwrap();
        assert_eq!(back, prim);
        let bad = StateField::from_vec(3, 1, vec![-1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(swe_transform(&bad), Err(Error::Admissibility { node: 0, .. })));
    }

    #[test]
    fn split_vanishes_with_perturbation() {
        let g = Grid::new(vec![Axis::bounded(9, 0.0, 1.0)]).unwrap();
        let d = Discretisation::new(g, Order::Second).unwrap();
        let m = make_model(ModelKind::Burgers1d, ModelParams::default()).unwrap();
        let mean = StateField::from_vec(1, 9, vec![2.0; 9]).unwrap();
        let zero = StateField::zeros(1, 9);
        let s = coeff_split(&m, &d, &mean, &zero).unwrap();
        assert!(s.pert.iter().all(|c| c.a[0][(0, 0)] == 0.0 && c.c[(0, 0)] == 0.0));

        let pert = StateField::from_vec(1, 9, vec![0.1; 9]).unwrap();
        let s = coeff_split(&m, &d, &mean, &pert).unwrap();
        for c in &s.pert {
            assert!((c.a[0][(0, 0)] - 0.1 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn cylindrical_grid_needs_positive_radius() {
        let m = make_model(ModelKind::Euler3dCyl, ModelParams::default()).unwrap();
        let g = Grid::new(vec![
            Axis::bounded(9, 0.0, 1.0),
            Axis::bounded(9, 0.0, 1.0),
            Axis::bounded(9, 0.0, 1.0),
        ])
        .unwrap();
        assert!(m.check_grid(&g).is_err());
    }
}
