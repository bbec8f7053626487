//! Scenario files.
//!
//! A scenario is a TOML document with the sections `[model]`, `[grid]`,
//! `[initial]`, `[mean]`, `[perturbation]`, `[forcing]`, `[boundary]`,
//! `[time]`, `[output]`, `[run]` and `[analysis]`. Unknown keys are rejected.
//! See `scenarios/README.md` for the schema.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use toml::Spanned;

use crate::boundary::{FaceClosure, FaceData, Formulation, SatConfig, DEFAULT_DELTA};
use crate::disc::Discretisation;
use crate::error::{Error, Result};
use crate::field::StateField;
use crate::grid::{Axis, Face, Grid};
use crate::models::{make_model, swe_transform, Coriolis, ModelKind, ModelParams, ModelSpec};
use crate::sbp::Order;
use crate::timeint::{MarchMode, Scenario, DEFAULT_CFL};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub model: ModelSection,
    pub grid: GridSection,
    pub initial: Option<ProfileSection>,
    pub mean: Option<ProfileSection>,
    pub perturbation: Option<ProfileSection>,
    pub forcing: Option<ProfileSection>,
    #[serde(default)]
    pub boundary: BoundarySection,
    pub time: Option<TimeSection>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub run: RunSection,
    pub analysis: Option<AnalysisSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: Spanned<String>,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "gravity")]
    pub gravity: f64,
    /// Coriolis parameter at `y = 0`, 1/s.
    #[serde(default)]
    pub coriolis: f64,
    /// `df/dy`, 1/(m s); a nonzero value selects the beta plane.
    #[serde(default)]
    pub coriolis_beta: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// `"2,1"` or `"4,2"`
    pub order: Spanned<String>,
    pub n: Vec<usize>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    #[serde(default)]
    pub periodic: Vec<bool>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    /// `"state"` or, for swe2d, `"primitive"` (`φ, u, v`).
    #[serde(default = "state_vars")]
    pub variables: Spanned<String>,
    pub components: Vec<ComponentProfile>,
}

/// `offset + amplitude · Π_i shape_i(2π wave_i (x_i − min_i) / L_i)` plus
/// seeded uniform noise in `[−noise, noise]`.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentProfile {
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub wave: Vec<f64>,
    /// Per axis: `"sin"`, `"cos"` or `"one"` (the default).
    #[serde(default)]
    pub shape: Vec<Spanned<String>>,
    #[serde(default)]
    pub noise: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySection {
    #[serde(default)]
    pub faces: Vec<FaceSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaceSection {
    /// `x-low`, `y-high`, `r-low`, …
    pub face: Spanned<String>,
    /// `none`, `characteristic` or `swe-two-condition`
    pub closure: Spanned<String>,
    /// Boundary data: `n_comp` values, or `(g₂, g₃)` for the two-condition closure.
    #[serde(default)]
    pub data: Vec<f64>,
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default = "delta")]
    pub delta_n: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(default = "default_modes")]
    pub modes: Vec<Spanned<String>>,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "one_usize")]
    pub stride: usize,
    #[serde(default = "cfl")]
    pub cfl: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<String>,
    pub stem: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "seed")]
    pub seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { seed: seed() }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    pub state: Vec<f64>,
    pub normal: Vec<f64>,
    #[serde(default = "state_vars")]
    pub variables: Spanned<String>,
    #[serde(default = "all_formulations")]
    pub formulations: Vec<Spanned<String>>,
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn gravity() -> f64 {
    9.81
}
fn delta() -> f64 {
    DEFAULT_DELTA
}
fn cfl() -> f64 {
    DEFAULT_CFL
}
fn seed() -> u64 {
    42
}
fn state_vars() -> Spanned<String> {
    Spanned::new(0..0, "state".to_string())
}
fn default_modes() -> Vec<Spanned<String>> {
    vec![Spanned::new(0..0, "nonlinear".to_string())]
}
fn all_formulations() -> Vec<Spanned<String>> {
    ["nonlinear", "linearised", "rewritten"]
        .iter()
        .map(|s| Spanned::new(0..0, s.to_string()))
        .collect()
}

/// What a mode name in `[time] modes` asks for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeName {
    Nonlinear,
    Frozen,
    NewLinearised,
    StandardLinearised,
    Coupled,
    Dual,
    DualFrozen,
    /// No marching: the energy balance of the initial state only.
    Identity,
}

impl ModeName {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "nonlinear" => ModeName::Nonlinear,
            "frozen" => ModeName::Frozen,
            "new-linearised" => ModeName::NewLinearised,
            "standard-linearised" => ModeName::StandardLinearised,
            "coupled" => ModeName::Coupled,
            "dual" => ModeName::Dual,
            "dual-frozen" => ModeName::DualFrozen,
            "identity" => ModeName::Identity,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            ModeName::Nonlinear => "nonlinear",
            ModeName::Frozen => "frozen",
            ModeName::NewLinearised => "new-linearised",
            ModeName::StandardLinearised => "standard-linearised",
            ModeName::Coupled => "coupled",
            ModeName::Dual => "dual",
            ModeName::DualFrozen => "dual-frozen",
            ModeName::Identity => "identity",
        }
    }
}

/// A parsed document together with its source, for line-numbered errors.
#[derive(Debug)]
pub struct Config {
    pub doc: ConfigDocument,
    source: String,
    pub stem: String,
}

fn line_of(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

impl Config {
    pub fn parse(source: &str, stem: &str) -> Result<Config> {
        let doc: ConfigDocument = toml::from_str(source).map_err(|e| Error::Config {
            line: e.span().map(|s| line_of(source, s.start)),
            msg: e.message().to_string(),
        })?;
        Ok(Config {
            doc,
            source: source.to_string(),
            stem: stem.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Config> {
        let source = std::fs::read_to_string(path).map_err(|e| Error::Config {
            line: None,
            msg: format!("cannot read {}: {e}", path.display()),
        })?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
        Config::parse(&source, stem)
    }

    fn err<T>(&self, at: &Spanned<String>, msg: String) -> Result<T> {
        let span = at.span();
        let line = (span.end > 0).then(|| line_of(&self.source, span.start));
        Err(Error::Config { line, msg })
    }

    fn plain<T>(&self, msg: String) -> Result<T> {
        Err(Error::Config { line: None, msg })
    }

    pub fn model(&self) -> Result<ModelSpec> {
        let m = &self.doc.model;
        let Some(kind) = ModelKind::parse(m.kind.get_ref()) else {
            return self.err(
                &m.kind,
                format!(
                    "unknown model '{}'; expected burgers1d, euler2d, euler3d_cyl or swe2d",
                    m.kind.get_ref()
                ),
            );
        };
        let coriolis = if m.coriolis_beta != 0.0 {
            Coriolis::BetaPlane {
                f0: m.coriolis,
                beta: m.coriolis_beta,
            }
        } else {
            Coriolis::Constant(m.coriolis)
        };
        make_model(
            kind,
            ModelParams {
                alpha: m.alpha,
                beta: m.beta,
                gravity: m.gravity,
                coriolis,
            },
        )
    }

    pub fn order(&self) -> Result<Order> {
        let o = &self.doc.grid.order;
        match o.get_ref().replace(' ', "").trim_matches(|c| c == '(' || c == ')') {
            "2,1" => Ok(Order::Second),
            "4,2" => Ok(Order::Fourth),
            other => self.err(o, format!("unsupported SBP order '{other}'; expected \"2,1\" or \"4,2\"")),
        }
    }

    /// Grid with every axis count multiplied by `2^level` (bounded axes keep
    /// their end points: `n → 2^level (n − 1) + 1`).
    pub fn discretisation_at(&self, level: usize) -> Result<Discretisation> {
        let g = &self.doc.grid;
        let dim = g.n.len();
        if g.min.len() != dim || g.max.len() != dim || (!g.periodic.is_empty() && g.periodic.len() != dim) {
            return self.plain(format!(
                "[grid] n, min, max and periodic must have the same length ({dim})"
            ));
        }
        let axes = (0..dim)
            .map(|k| {
                let periodic = g.periodic.get(k).copied().unwrap_or(false);
                if periodic {
                    Axis::periodic(g.n[k] << level, g.min[k], g.max[k])
                } else {
                    Axis::bounded(((g.n[k].max(1) - 1) << level) + 1, g.min[k], g.max[k])
                }
            })
            .collect();
        Discretisation::new(Grid::new(axes)?, self.order()?)
    }

    pub fn discretisation(&self) -> Result<Discretisation> {
        self.discretisation_at(0)
    }

    pub fn seed(&self) -> u64 {
        self.doc.run.seed
    }

    fn profile(
        &self,
        section: &ProfileSection,
        name: &str,
        model: &ModelSpec,
        disc: &Discretisation,
        stream: u64,
    ) -> Result<StateField> {
        let nc = model.n_comp();
        if section.components.len() != nc {
            return self.plain(format!(
                "[{name}] has {} components, {} needs {nc}",
                section.components.len(),
                model.kind()
            ));
        }
        let primitive = match section.variables.get_ref().as_str() {
            "state" => false,
            "primitive" if model.kind() == ModelKind::Swe2d => true,
            other => {
                return self.err(
                    &section.variables,
                    format!("[{name}] variables must be \"state\" or, for swe2d, \"primitive\"; got '{other}'"),
                )
            }
        };
        let dim = disc.grid().dim();
        let mut shapes = Vec::with_capacity(nc);
        for (c, comp) in section.components.iter().enumerate() {
            if comp.wave.len() > dim || comp.shape.len() > dim {
                return self.plain(format!("[{name}] component {c}: more wave/shape entries than axes"));
            }
            let mut s = Vec::with_capacity(dim);
            for k in 0..dim {
                let f: fn(f64) -> f64 = match comp.shape.get(k).map(|s| s.get_ref().as_str()) {
                    None | Some("one") => |_| 1.0,
                    Some("sin") => f64::sin,
                    Some("cos") => f64::cos,
                    Some(other) => {
                        return self.err(
                            &comp.shape[k],
                            format!("[{name}] unknown shape '{other}'; expected sin, cos or one"),
                        )
                    }
                };
                s.push(f);
            }
            shapes.push(s);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed());
        rng.set_stream(stream);
        let grid = disc.grid();
        let field = StateField::from_fn(nc, disc.n_nodes(), |node, v| {
            let pos = grid.position(node);
            for (c, comp) in section.components.iter().enumerate() {
                let mut prod = 1.0;
                for k in 0..dim {
                    let ax = grid.axis(k);
                    let w = comp.wave.get(k).copied().unwrap_or(0.0);
                    prod *= shapes[c][k](2.0 * PI * w * (pos[k] - ax.min) / (ax.max - ax.min));
                }
                let noise = if comp.noise > 0.0 {
                    rng.gen_range(-comp.noise..comp.noise)
                } else {
                    0.0
                };
                v[c] = comp.offset + comp.amplitude * prod + noise;
            }
        });
        if primitive {
            swe_transform(&field)
        } else {
            Ok(field)
        }
    }

    fn section(&self, name: &str) -> Option<&ProfileSection> {
        match name {
            "initial" => self.doc.initial.as_ref(),
            "mean" => self.doc.mean.as_ref(),
            "perturbation" => self.doc.perturbation.as_ref(),
            "forcing" => self.doc.forcing.as_ref(),
            _ => None,
        }
    }

    /// Evaluates the profile section `name` on `disc`.
    pub fn field(&self, name: &str, model: &ModelSpec, disc: &Discretisation) -> Result<StateField> {
        let stream = match name {
            "initial" => 0,
            "mean" => 1,
            "perturbation" => 2,
            _ => 3,
        };
        match self.section(name) {
            Some(s) => self.profile(s, name, model, disc, stream),
            None => self.plain(format!("section [{name}] is required for this scenario")),
        }
    }

    pub fn sat(&self, model: &ModelSpec) -> Result<SatConfig> {
        let mut sat = SatConfig::none();
        for f in &self.doc.boundary.faces {
            let Some(face) = Face::parse(f.face.get_ref()) else {
                return self.err(&f.face, format!("unknown face '{}'", f.face.get_ref()));
            };
            let closure = match f.closure.get_ref().as_str() {
                "none" => FaceClosure::None,
                "characteristic" => {
                    let data = if f.data.is_empty() {
                        vec![0.0; model.n_comp()]
                    } else {
                        f.data.clone()
                    };
                    FaceClosure::Characteristic(FaceData::Constant(data))
                }
                "swe-two-condition" => FaceClosure::SweTwoCondition(FaceData::Constant(f.data.clone())),
                other => {
                    return self.err(
                        &f.closure,
                        format!("unknown closure '{other}'; expected none, characteristic or swe-two-condition"),
                    )
                }
            };
            sat = sat.with(face, closure, f.sigma);
            if let Some(last) = sat.faces.last_mut() {
                last.delta_n = f.delta_n;
            }
        }
        Ok(sat)
    }

    pub fn modes(&self) -> Result<Vec<ModeName>> {
        let Some(t) = &self.doc.time else {
            return Ok(vec![ModeName::Identity]);
        };
        t.modes
            .iter()
            .map(|m| match ModeName::parse(m.get_ref()) {
                Some(x) => Ok(x),
                None => self.err(m, format!("unknown mode '{}'", m.get_ref())),
            })
            .collect()
    }

    pub fn output_dir(&self) -> &str {
        self.doc.output.dir.as_deref().unwrap_or("out")
    }

    pub fn output_stem(&self) -> &str {
        self.doc.output.stem.as_deref().unwrap_or(&self.stem)
    }

    /// Time-marching scenario for `mode` at refinement `level`; the time step
    /// is halved with each level.
    pub fn scenario(&self, mode: ModeName, level: usize) -> Result<Scenario> {
        let model = self.model()?;
        let disc = self.discretisation_at(level)?;
        let Some(t) = &self.doc.time else {
            return self.plain("section [time] is required to march".into());
        };
        let initial = self.field("initial", &model, &disc)?;
        let march_mode = match mode {
            ModeName::Nonlinear => MarchMode::Nonlinear,
            ModeName::Frozen => MarchMode::Frozen(self.field("mean", &model, &disc)?),
            ModeName::NewLinearised => MarchMode::NewLinearised {
                mean: self.field("mean", &model, &disc)?,
            },
            ModeName::StandardLinearised => MarchMode::StandardLinearised {
                mean: self.field("mean", &model, &disc)?,
            },
            ModeName::Coupled => MarchMode::Coupled {
                pert: self.field("perturbation", &model, &disc)?,
            },
            ModeName::Dual => MarchMode::Dual,
            ModeName::DualFrozen => MarchMode::DualFrozen(self.field("mean", &model, &disc)?),
            ModeName::Identity => {
                return self.plain("the identity mode does not march".into());
            }
        };
        let forcing = match &self.doc.forcing {
            Some(_) => Some(self.field("forcing", &model, &disc)?),
            None => None,
        };
        let sat = self.sat(&model)?;
        let mut s = Scenario::new(model, disc, initial, t.dt / (1 << level) as f64, t.t_end);
        s.mode = march_mode;
        s.forcing = forcing;
        s.sat_pert = sat.clone();
        s.sat = sat;
        s.stride = t.stride << level;
        s.cfl = t.cfl;
        Ok(s)
    }

    /// State, normal and formulations of the `[analysis]` section.
    pub fn analysis(&self) -> Result<(Vec<f64>, Vec<f64>, Vec<Formulation>)> {
        let Some(a) = &self.doc.analysis else {
            return self.plain("section [analysis] is required".into());
        };
        let model = self.model()?;
        let state = match a.variables.get_ref().as_str() {
            "state" => a.state.clone(),
            "primitive" if model.kind() == ModelKind::Swe2d && a.state.len() == 3 => {
                if !(a.state[0] > 0.0) {
                    return self.plain("geopotential must be positive".into());
                }
                let s = a.state[0].sqrt();
                vec![a.state[0], s * a.state[1], s * a.state[2]]
            }
            other => return self.err(&a.variables, format!("unsupported variables '{other}'")),
        };
        let forms = a
            .formulations
            .iter()
            .map(|f| match Formulation::parse(f.get_ref()) {
                Some(x) => Ok(x),
                None => self.err(f, format!("unknown formulation '{}'", f.get_ref())),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((state, a.normal.clone(), forms))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BURGERS: &str = r#"
[model]
kind = "burgers1d"

[grid]
order = "4,2"
n = [32]
min = [0.0]
max = [1.0]
periodic = [true]

[[initial.components]]
amplitude = 0.1
wave = [1]
shape = ["sin"]

[time]
dt = 0.01
t_end = 0.1
"#;

    #[test]
    fn parses_and_builds_scenario() {
        let c = Config::parse(BURGERS, "b").unwrap();
        let s = c.scenario(ModeName::Nonlinear, 0).unwrap();
        assert_eq!(s.disc.n_nodes(), 32);
        assert!((s.initial.comp(0)[8] - 0.1).abs() < 1e-15);
        let s1 = c.scenario(ModeName::Nonlinear, 1).unwrap();
        assert_eq!(s1.disc.n_nodes(), 64);
        assert_eq!(s1.dt, 0.005);
        assert_eq!(c.output_stem(), "b");
    }

    #[test]
    fn unknown_key_reports_line() {
        let src = BURGERS.replace("t_end = 0.1", "t_end = 0.1\nbogus = 3");
        match Config::parse(&src, "b") {
            Err(Error::Config { line: Some(l), msg }) => {
                assert_eq!(l, 20, "{msg}");
                assert!(msg.contains("bogus"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_model_name_reports_line() {
        let src = BURGERS.replace("burgers1d", "kdv");
        let c = Config::parse(&src, "b").unwrap();
        assert!(matches!(c.model(), Err(Error::Config { line: Some(3), .. })));
    }

    #[test]
    fn primitive_shallow_water_profile() {
        let src = r#"
[model]
kind = "swe2d"
[grid]
order = "2,1"
n = [8, 8]
min = [0.0, 0.0]
max = [1.0, 1.0]
[initial]
variables = "primitive"
[[initial.components]]
offset = 4.0
[[initial.components]]
offset = 1.0
[[initial.components]]
offset = 0.0
"#;
        let c = Config::parse(src, "s").unwrap();
        let m = c.model().unwrap();
        let d = c.discretisation().unwrap();
        let u = c.field("initial", &m, &d).unwrap();
        assert_eq!(u.node_vec(5), vec![4.0, 2.0, 0.0]);
        assert_eq!(c.modes().unwrap(), vec![ModeName::Identity]);
    }
}
