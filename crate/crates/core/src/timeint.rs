//! Classical RK4 marching of `P U_t = −R` for models whose norm matrix is the
//! identity, including the coupled mean/perturbation system and the dual
//! problem in reversed time.

use crate::boundary::{Direction, SatConfig};
use crate::disc::Discretisation;
use crate::energy::{dual_energy_report, energy_report, report_from_residual, EnergyReport};
use crate::error::{Error, Result};
use crate::field::StateField;
use crate::models::ModelSpec;
use crate::spatial::{eval_dual_residual, eval_new_linearised_pair, eval_primal_residual, CoeffMode};

pub const DEFAULT_CFL: f64 = 0.2;
pub const BLOW_UP_FACTOR: f64 = 1e3;

/// One classical fourth-order Runge–Kutta step of `U_t = rhs(t, U)`.
pub fn rk4_step<F>(mut rhs: F, u: &StateField, t: f64, dt: f64) -> Result<StateField>
where
    F: FnMut(f64, &StateField) -> Result<StateField>,
{
    let k1 = rhs(t, u)?;
    let mut s = u.clone();
    s.axpy(0.5 * dt, &k1);
    let k2 = rhs(t + 0.5 * dt, &s)?;
    let mut s = u.clone();
    s.axpy(0.5 * dt, &k2);
    let k3 = rhs(t + 0.5 * dt, &s)?;
    let mut s = u.clone();
    s.axpy(dt, &k3);
    let k4 = rhs(t + dt, &s)?;
    let mut out = u.clone();
    out.axpy(dt / 6.0, &k1);
    out.axpy(dt / 3.0, &k2);
    out.axpy(dt / 3.0, &k3);
    out.axpy(dt / 6.0, &k4);
    Ok(out)
}

#[derive(Clone, Debug)]
pub enum MarchMode {
    /// `V = U`
    Nonlinear,
    /// Coefficients fixed at `V`.
    Frozen(StateField),
    /// Perturbation equation with coefficients at a fixed mean; the marched
    /// state is `U′`.
    NewLinearised { mean: StateField },
    /// Advective linearisation about a fixed mean; the marched state is `U′`.
    StandardLinearised { mean: StateField },
    /// Mean and perturbation advanced together. The scenario's initial data is
    /// `Ū₀` and `pert` is `U′₀`; the mean equation sees `A(Ū + U′)`.
    Coupled { pert: StateField },
    /// Dual problem in `τ` with `V = Φ`.
    Dual,
    /// Dual problem in `τ` with coefficients fixed at `V`.
    DualFrozen(StateField),
}

impl MarchMode {
    pub fn name(&self) -> &'static str {
        match self {
            MarchMode::Nonlinear => "nonlinear",
            MarchMode::Frozen(_) => "frozen",
            MarchMode::NewLinearised { .. } => "new-linearised",
            MarchMode::StandardLinearised { .. } => "standard-linearised",
            MarchMode::Coupled { .. } => "coupled",
            MarchMode::Dual => "dual",
            MarchMode::DualFrozen(_) => "dual-frozen",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub model: ModelSpec,
    pub disc: Discretisation,
    pub initial: StateField,
    pub mode: MarchMode,
    /// Time-independent forcing `F` (or `G` in dual modes).
    pub forcing: Option<StateField>,
    pub sat: SatConfig,
    /// Closure of the perturbation equation in coupled mode.
    pub sat_pert: SatConfig,
    pub dt: f64,
    pub t_end: f64,
    /// Report every `stride` steps (and at the final time).
    pub stride: usize,
    pub cfl: f64,
}

#[derive(Clone, Debug)]
pub struct MarchResult {
    pub reports: Vec<EnergyReport>,
    /// Final marched state; in coupled mode the mean and perturbation stacked.
    pub final_state: StateField,
    pub steps: usize,
}

impl Scenario {
    pub fn new(model: ModelSpec, disc: Discretisation, initial: StateField, dt: f64, t_end: f64) -> Self {
        Scenario {
            model,
            disc,
            initial,
            mode: MarchMode::Nonlinear,
            forcing: None,
            sat: SatConfig::none(),
            sat_pert: SatConfig::none(),
            dt,
            t_end,
            stride: 1,
            cfl: DEFAULT_CFL,
        }
    }

    pub fn with_mode(mut self, mode: MarchMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.model.norm_is_identity() {
            return Err(Error::Unsupported(format!(
                "time marching {} needs an invertible norm matrix",
                self.model.kind()
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= self.dt) {
            return Err(Error::InvalidParameter(format!(
                "final time {} is shorter than one step {}",
                self.t_end, self.dt
            )));
        }
        if self.stride == 0 {
            return Err(Error::InvalidParameter("report stride must be at least 1".into()));
        }
        if !(self.cfl > 0.0) {
            return Err(Error::InvalidParameter(format!("CFL number must be positive, got {}", self.cfl)));
        }
        self.model.check_grid(self.disc.grid())?;
        let (nc, nn) = (self.model.n_comp(), self.disc.n_nodes());
        self.initial.check_shape(nc, nn, "initial data")?;
        match &self.mode {
            MarchMode::Frozen(v) | MarchMode::DualFrozen(v) => v.check_shape(nc, nn, "frozen field")?,
            MarchMode::NewLinearised { mean } | MarchMode::StandardLinearised { mean } => {
                mean.check_shape(nc, nn, "mean field")?
            }
            MarchMode::Coupled { pert } => pert.check_shape(nc, nn, "initial perturbation")?,
            _ => {}
        }
        if let Some(f) = &self.forcing {
            f.check_shape(nc, nn, "forcing")?;
        }
        self.sat.validate(&self.model, &self.disc)?;
        self.sat_pert.validate(&self.model, &self.disc)?;
        Ok(())
    }

    fn start_state(&self) -> StateField {
        match &self.mode {
            MarchMode::Coupled { pert } => StateField::stack(&self.initial, pert),
            _ => self.initial.clone(),
        }
    }

    /// Field the coefficient matrices, and hence the wave speed, depend on.
    fn coefficient_field(&self, state: &StateField) -> StateField {
        match &self.mode {
            MarchMode::Nonlinear | MarchMode::Dual => state.clone(),
            MarchMode::Frozen(v) | MarchMode::DualFrozen(v) => v.clone(),
            MarchMode::NewLinearised { mean } | MarchMode::StandardLinearised { mean } => mean.clone(),
            MarchMode::Coupled { .. } => {
                let (m, p) = state.split(self.model.n_comp());
                m.add(&p)
            }
        }
    }

    /// `dt ≤ c · h_min / max wave speed`
    pub fn cfl_limit(&self, state: &StateField) -> Result<f64> {
        let v = self.coefficient_field(state);
        let mut buf = vec![0.0; self.model.n_comp()];
        let mut speed = 0.0f64;
        for node in 0..self.disc.n_nodes() {
            v.node(node, &mut buf);
            let s = self
                .model
                .max_wave_speed(&buf, &self.disc.grid().position(node))
                .map_err(|e| match e {
                    Error::Inadmissible(reason) => Error::Admissibility { node, reason },
                    other => other,
                })?;
            speed = speed.max(s);
        }
        if speed == 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(self.cfl * self.disc.grid().min_spacing() / speed)
    }

    /// `U_t = −R(U)` for the scenario's mode.
    pub fn tendency(&self, state: &StateField) -> Result<StateField> {
        let (m, d) = (&self.model, &self.disc);
        let f = self.forcing.as_ref();
        let r = match &self.mode {
            MarchMode::Nonlinear => eval_primal_residual(m, d, state, CoeffMode::Nonlinear, &self.sat, f)?,
            MarchMode::Frozen(v) => eval_primal_residual(m, d, state, CoeffMode::Frozen(v), &self.sat, f)?,
            MarchMode::NewLinearised { mean } => {
                eval_primal_residual(m, d, state, CoeffMode::NewLinearised(mean), &self.sat, f)?
            }
            MarchMode::StandardLinearised { mean } => {
                eval_primal_residual(m, d, state, CoeffMode::StandardLinearised(mean), &self.sat, f)?
            }
            MarchMode::Dual => eval_dual_residual(m, d, state, CoeffMode::Nonlinear, &self.sat, f)?,
            MarchMode::DualFrozen(v) => eval_dual_residual(m, d, state, CoeffMode::Frozen(v), &self.sat, f)?,
            MarchMode::Coupled { .. } => {
                let (mean, pert) = state.split(m.n_comp());
                let (mut rm, rp) = eval_new_linearised_pair(m, d, &mean, &pert, &self.sat, &self.sat_pert)?;
                if let Some(f) = f {
                    rm.field.axpy(-1.0, f);
                }
                return Ok(StateField::stack(&rm.field, &rp.field).neg());
            }
        };
        Ok(r.field.neg())
    }

    /// Energy balance of the marched state (forcing excluded).
    pub fn report(&self, state: &StateField, t: f64) -> Result<EnergyReport> {
        let (m, d) = (&self.model, &self.disc);
        match &self.mode {
            MarchMode::Nonlinear => energy_report(m, d, state, CoeffMode::Nonlinear, &self.sat, t),
            MarchMode::Frozen(v) => energy_report(m, d, state, CoeffMode::Frozen(v), &self.sat, t),
            MarchMode::NewLinearised { mean } => {
                energy_report(m, d, state, CoeffMode::NewLinearised(mean), &self.sat, t)
            }
            MarchMode::StandardLinearised { mean } => {
                energy_report(m, d, state, CoeffMode::StandardLinearised(mean), &self.sat, t)
            }
            MarchMode::Dual => dual_energy_report(m, d, state, CoeffMode::Nonlinear, &self.sat, t),
            MarchMode::DualFrozen(v) => dual_energy_report(m, d, state, CoeffMode::Frozen(v), &self.sat, t),
            MarchMode::Coupled { .. } => {
                let (mean, pert) = state.split(m.n_comp());
                let (rm, rp) = eval_new_linearised_pair(m, d, &mean, &pert, &self.sat, &self.sat_pert)?;
                let a = report_from_residual(m, d, &mean, &rm, Direction::Primal, t)?;
                let b = report_from_residual(m, d, &pert, &rp, Direction::Primal, t)?;
                Ok(combine(a, b))
            }
        }
    }
}

fn combine(a: EnergyReport, b: EnergyReport) -> EnergyReport {
    let faces = a
        .faces
        .iter()
        .zip(&b.faces)
        .map(|((f, x), (_, y))| (*f, x + y))
        .collect();
    EnergyReport {
        t: a.t,
        energy: a.energy + b.energy,
        rate: a.rate + b.rate,
        boundary_flux: a.boundary_flux + b.boundary_flux,
        volume_residual: a.volume_residual + b.volume_residual,
        sat_contribution: a.sat_contribution + b.sat_contribution,
        faces,
        scale: a.scale + b.scale,
    }
}

/// Marches the scenario to its final time, reporting every `stride` steps.
///
/// Aborts on a CFL violation, loss of admissibility, non-finite values, or
/// when the max norm exceeds `10³` times its initial value (or `10³` if the
/// initial state is zero).
pub fn march(scenario: &Scenario) -> Result<MarchResult> {
    scenario.validate()?;
    let mut state = scenario.start_state();
    let reference = match state.max_abs() {
        m if m > 0.0 => m,
        _ => 1.0,
    };
    let n_full = (scenario.t_end / scenario.dt + 1e-9).floor() as usize;
    let tail = scenario.t_end - n_full as f64 * scenario.dt;
    let tail = if tail > 1e-12 * scenario.t_end { tail } else { 0.0 };
    let steps = n_full + usize::from(tail > 0.0);

    let mut reports = vec![scenario.report(&state, 0.0)?];
    let mut t = 0.0;
    for step in 0..steps {
        let dt = if step < n_full { scenario.dt } else { tail };
        let limit = scenario.cfl_limit(&state)?;
        if dt > limit {
            return Err(Error::Cfl { dt, limit });
        }
        state = rk4_step(|_, s| scenario.tendency(s), &state, t, dt)?;
        t = if step + 1 == n_full && tail == 0.0 {
            scenario.t_end
        } else {
            t + dt
        };
        if !state.is_finite() {
            return Err(Error::NonFinite { t });
        }
        let growth = state.max_abs() / reference;
        if growth > BLOW_UP_FACTOR {
            return Err(Error::BlowUp { t, growth });
        }
        if (step + 1) % scenario.stride == 0 || step + 1 == steps {
            reports.push(scenario.report(&state, t)?);
        }
    }
    Ok(MarchResult {
        reports,
        final_state: state,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Axis, Grid};
    use crate::models::{make_model, ModelKind, ModelParams};
    use crate::sbp::Order;
    use std::f64::consts::PI;

    #[test]
    fn zero_rhs_leaves_state() {
        let u = StateField::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let out = rk4_step(|_, s| Ok(StateField::zeros(s.n_comp(), s.n_nodes())), &u, 0.0, 0.3).unwrap();
        assert_eq!(out, u);
    }

    #[test]
    fn scalar_decay_one_step() {
        let u = StateField::from_vec(1, 1, vec![1.0]).unwrap();
        let out = rk4_step(|_, s| Ok(s.neg()), &u, 0.0, 0.1).unwrap();
        assert!((out.comp(0)[0] - 0.9048375).abs() < 1e-7);
        assert!((out.comp(0)[0] - (-0.1f64).exp()).abs() < 1e-7);
    }

    fn burgers_scenario(n: usize, dt: f64) -> Scenario {
        let g = Grid::new(vec![Axis::periodic(n, 0.0, 1.0)]).unwrap();
        let d = Discretisation::new(g, Order::Fourth).unwrap();
        let u0 = StateField::from_vec(1, n, d.grid().axis(0).coords().iter().map(|x| 0.1 * (2.0 * PI * x).sin()).collect())
            .unwrap();
        Scenario::new(make_model(ModelKind::Burgers1d, ModelParams::default()).unwrap(), d, u0, dt, 0.2)
    }

    #[test]
    fn periodic_burgers_conserves_per_step() {
        let s = burgers_scenario(32, 0.01);
        let r = march(&s).unwrap();
        assert_eq!(r.steps, 20);
        assert_eq!(r.reports.len(), 21);
        assert!(r.reports.iter().all(|x| x.conserves(1e-12)));
    }

    #[test]
    fn coupled_with_zero_perturbation_matches_nonlinear() {
        let s = burgers_scenario(16, 0.02);
        let a = march(&s).unwrap();
        let c = s.clone().with_mode(MarchMode::Coupled {
            pert: StateField::zeros(1, 16),
        });
        let b = march(&c).unwrap();
        let (mean, pert) = b.final_state.split(1);
        assert_eq!(mean, a.final_state);
        assert_eq!(pert.max_abs(), 0.0);
    }

    #[test]
    fn guards() {
        let mut s = burgers_scenario(16, 1.0);
        s.t_end = 2.0;
        assert!(matches!(march(&s), Err(Error::Cfl { .. })));
        let g = Grid::new(vec![Axis::bounded(9, 0.0, 1.0), Axis::bounded(9, 0.0, 1.0)]).unwrap();
        let d = Discretisation::new(g, Order::Second).unwrap();
        let e = Scenario::new(
            make_model(ModelKind::Euler2d, ModelParams::default()).unwrap(),
            d,
            StateField::zeros(3, 81),
            0.01,
            0.1,
        );
        assert!(matches!(march(&e), Err(Error::Unsupported(_))));
    }
}
