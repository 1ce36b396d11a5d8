//! Run configuration: a TOML document describing one run, and the
//! conversion of that document into library objects.

use std::path::Path;

use serde::Deserialize;

use projdyn::dynamics::{IntegratorOptions, Method, PhaseState, ReactionField, INITIAL_STATE_TOL};
use projdyn::forces::{
    braden_potential, gradient_field, inverse_quadratic_potential, kepler_field, linear_field,
    quadric_power_field, zero_field, ForceField, GradientMode, Potential,
};
use projdyn::geometry::{Covector, LinOperator, SymForm, Vector};
use projdyn::instances::{random_ellipsoid, random_tangent_state, rng, standard_free_state};
use projdyn::problems::{EllipsoidData, JacobiParams};
use projdyn::screens::Screen;
use projdyn::suite::SuiteOptions;

use crate::error::CliError;

pub const DEFAULT_SEED: u64 = 2024;

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Free,
    Constrained,
    Neumann,
    Braden,
    Jacobi,
    Custom,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Zero,
    Linear {
        matrix: Vec<Vec<f64>>,
    },
    Kepler {
        #[serde(default = "one")]
        mu: f64,
    },
    /// `scale · Mq / ⟨Gq,q⟩²` from the top-level `g`, `a`.
    Braden {
        #[serde(default = "one")]
        scale: f64,
    },
    /// `scale · Mq · ⟨Gq,q⟩^((degree−1)/2)` from the top-level `g`, `a`.
    QuadricPower {
        #[serde(default = "one")]
        scale: f64,
        degree: f64,
    },
    /// Gradient of `k / ⟨Cq,q⟩`, `C` defaulting to the identity.
    InverseQuadratic {
        matrix: Option<Vec<Vec<f64>>>,
        #[serde(default = "one")]
        k: f64,
    },
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScreenSpec {
    Sphere,
    Linear { ell: Vec<f64> },
    Quadric { matrix: Vec<Vec<f64>> },
    /// `√⟨Gq,q⟩` from the top-level `g`.
    G,
    /// `√⟨Aq,q⟩` from the top-level `a`.
    A,
    /// `√⟨Bq,q⟩` with `B = G A⁻¹ G`.
    B,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReactionSpec {
    Central,
    Linear { matrix: Vec<Vec<f64>> },
    /// Along `Mq` with `M = G⁻¹A`.
    Jacobi,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    pub method: Option<String>,
    pub dt: Option<f64>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub initial_step: Option<f64>,
    pub max_step: Option<f64>,
    pub max_steps: Option<usize>,
    pub stabilize: Option<bool>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<String>,
    pub name: Option<String>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProjectSpec {
    /// CSV of a run. Relative paths resolve against the output directory.
    pub source: String,
    /// Also integrate the constrained system and report the deviation.
    #[serde(default)]
    pub reference: bool,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    pub criteria: Option<Vec<String>>,
    pub instances: Option<usize>,
    pub dim: Option<usize>,
    pub reduction_degree: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Option<ProblemKind>,
    pub dim: Option<usize>,
    pub seed: Option<u64>,
    pub t_end: Option<f64>,
    pub g: Option<Vec<Vec<f64>>>,
    pub a: Option<Vec<Vec<f64>>>,
    pub nu: Option<f64>,
    pub eta: Option<f64>,
    pub q0: Option<Vec<f64>>,
    pub p0: Option<Vec<f64>>,
    /// Speed of a generated initial state.
    pub speed: Option<f64>,
    pub field: Option<FieldSpec>,
    pub screen: Option<ScreenSpec>,
    pub reaction: Option<ReactionSpec>,
    #[serde(default)]
    pub integrator: IntegratorSpec,
    #[serde(default)]
    pub output: OutputSpec,
    pub project: Option<ProjectSpec>,
    #[serde(default)]
    pub verify: VerifySpec,
}

fn one() -> f64 {
    1.0
}

fn cfg<T>(r: projdyn::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Config(e.to_string()))
}

/// Command-line values that take precedence over the document.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub rtol: Option<f64>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::parse(&text)
    }

    pub fn apply(&mut self, o: Overrides) {
        if o.seed.is_some() {
            self.seed = o.seed;
        }
        if o.rtol.is_some() {
            self.integrator.rtol = o.rtol;
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn problem(&self) -> Result<ProblemKind, CliError> {
        self.problem.ok_or_else(|| CliError::Config("missing `problem`".into()))
    }

    pub fn t_end(&self) -> Result<f64, CliError> {
        match self.t_end {
            Some(t) if t > 0.0 && t.is_finite() => Ok(t),
            Some(t) => Err(CliError::Config(format!("t_end must be positive and finite, got {t}"))),
            None => Err(CliError::Config("missing `t_end`".into())),
        }
    }

    /// The dimension, checked against every array that implies one.
    pub fn dim(&self) -> Result<usize, CliError> {
        let mut implied: Vec<(&str, usize)> = Vec::new();
        if let Some(d) = self.dim {
            implied.push(("dim", d));
        }
        for (name, m) in [("g", &self.g), ("a", &self.a)] {
            if let Some(m) = m {
                implied.push((name, m.len()));
            }
        }
        for (name, v) in [("q0", &self.q0), ("p0", &self.p0)] {
            if let Some(v) = v {
                implied.push((name, v.len()));
            }
        }
        match &self.field {
            Some(FieldSpec::Linear { matrix }) | Some(FieldSpec::InverseQuadratic { matrix: Some(matrix), .. }) => {
                implied.push(("field.matrix", matrix.len()))
            }
            _ => {}
        }
        match &self.screen {
            Some(ScreenSpec::Linear { ell }) => implied.push(("screen.ell", ell.len())),
            Some(ScreenSpec::Quadric { matrix }) => implied.push(("screen.matrix", matrix.len())),
            _ => {}
        }
        if let Some(ReactionSpec::Linear { matrix }) = &self.reaction {
            implied.push(("reaction.matrix", matrix.len()));
        }
        let Some(&(first, n)) = implied.first() else {
            return Err(CliError::Config("cannot infer the dimension; set `dim`".into()));
        };
        if n == 0 {
            return Err(CliError::Config(format!("{first} has dimension 0")));
        }
        for (name, m) in implied {
            if m != n {
                return Err(CliError::Config(format!("{name} has dimension {m}, {first} has {n}")));
            }
        }
        Ok(n)
    }

    pub fn integrator(&self) -> Result<IntegratorOptions, CliError> {
        let s = &self.integrator;
        let mut o = IntegratorOptions::default();
        match s.method.as_deref() {
            None | Some("dopri5") | Some("dormand_prince") => o.method = Method::DormandPrince,
            Some("rk4") => o.method = Method::Rk4,
            Some(m) => return Err(CliError::Config(format!("unknown integrator method `{m}`"))),
        }
        if let Some(x) = s.dt {
            o.dt = x;
        }
        if let Some(x) = s.rtol {
            o.rtol = x;
        }
        if let Some(x) = s.atol {
            o.atol = x;
        }
        if let Some(x) = s.initial_step {
            o.initial_step = x;
        }
        if s.max_step.is_some() {
            o.max_step = s.max_step;
        }
        if let Some(x) = s.max_steps {
            o.max_steps = x;
        }
        if let Some(x) = s.stabilize {
            o.stabilize = x;
        }
        cfg(o.validate())?;
        Ok(o)
    }

    /// `G`, `A` from the document, or seeded random ones when both are absent.
    pub fn ellipsoid(&self) -> Result<EllipsoidData, CliError> {
        let n = self.dim()?;
        match (&self.g, &self.a) {
            (Some(g), Some(a)) => cfg(EllipsoidData::new(cfg(SymForm::spd(g))?, cfg(SymForm::spd(a))?)),
            (None, None) => cfg(random_ellipsoid(self.seed(), n)),
            _ => Err(CliError::Config("give both `g` and `a`, or neither".into())),
        }
    }

    fn needs_ellipsoid(&self) -> bool {
        matches!(self.field, Some(FieldSpec::Braden { .. }) | Some(FieldSpec::QuadricPower { .. }))
            || matches!(self.screen, Some(ScreenSpec::G) | Some(ScreenSpec::A) | Some(ScreenSpec::B))
            || matches!(self.reaction, Some(ReactionSpec::Jacobi))
    }

    fn ellipsoid_if_needed(&self) -> Result<Option<EllipsoidData>, CliError> {
        if self.needs_ellipsoid() {
            self.ellipsoid().map(Some)
        } else {
            Ok(None)
        }
    }

    /// The configured force field and, when one is known, its potential and
    /// the metric it is a gradient for.
    pub fn field(&self) -> Result<(ForceField, Option<(SymForm, Potential)>), CliError> {
        let n = self.dim()?;
        let spec = self.field.as_ref().ok_or_else(|| CliError::Config("missing [field]".into()))?;
        let data = self.ellipsoid_if_needed()?;
        Ok(match spec {
            FieldSpec::Zero => (zero_field(n), None),
            FieldSpec::Linear { matrix } => (linear_field(cfg(LinOperator::from_rows(matrix))?), None),
            FieldSpec::Kepler { mu } => {
                let mu = *mu;
                let u = Potential::new(n, -1.0, "kepler", move |q| mu / q.norm());
                (kepler_field(n, mu), Some((SymForm::identity(n), u)))
            }
            FieldSpec::Braden { scale } => {
                let data = data.expect("ellipsoid data");
                let u = braden_potential(&data.g, *scale);
                (cfg(data.braden_field(*scale))?, Some((data.b.clone(), u)))
            }
            FieldSpec::QuadricPower { scale, degree } => {
                let data = data.expect("ellipsoid data");
                (cfg(quadric_power_field(&data.g, &data.a, *scale, *degree))?, None)
            }
            FieldSpec::InverseQuadratic { matrix, k } => {
                let c = match matrix {
                    Some(m) => cfg(SymForm::spd(m))?,
                    None => SymForm::identity(n),
                };
                let u = inverse_quadratic_potential(&c, *k);
                let id = SymForm::identity(n);
                let f = cfg(gradient_field(&id, &u, GradientMode::Analytic))?.into_field();
                (f, Some((id, u)))
            }
        })
    }

    pub fn screen(&self) -> Result<Screen, CliError> {
        let n = self.dim()?;
        let spec = self.screen.as_ref().ok_or_else(|| CliError::Config("missing [screen]".into()))?;
        let data = self.ellipsoid_if_needed()?;
        match spec {
            ScreenSpec::Sphere => Ok(Screen::unit_sphere(n)),
            ScreenSpec::Linear { ell } => cfg(Screen::linear(Covector::new(ell.clone()))),
            ScreenSpec::Quadric { matrix } => cfg(Screen::quadric(cfg(SymForm::spd(matrix))?)),
            ScreenSpec::G => Ok(data.expect("ellipsoid data").g_screen()),
            ScreenSpec::A => Ok(data.expect("ellipsoid data").a_screen()),
            ScreenSpec::B => Ok(data.expect("ellipsoid data").b_screen()),
        }
    }

    pub fn reaction(&self) -> Result<ReactionField, CliError> {
        match &self.reaction {
            None | Some(ReactionSpec::Central) => Ok(ReactionField::Central),
            Some(ReactionSpec::Linear { matrix }) => Ok(ReactionField::Linear(cfg(LinOperator::from_rows(matrix))?)),
            Some(ReactionSpec::Jacobi) => Ok(ReactionField::Linear(self.ellipsoid()?.m)),
        }
    }

    pub fn jacobi_params(&self) -> Result<JacobiParams, CliError> {
        Ok(JacobiParams {
            data: self.ellipsoid()?,
            nu: self.nu.unwrap_or(0.0),
        })
    }

    fn explicit_state(&self) -> Result<Option<PhaseState>, CliError> {
        match (&self.q0, &self.p0) {
            (Some(q), Some(p)) => Ok(Some(cfg(PhaseState::new(0.0, Vector::new(q.clone()), Vector::new(p.clone())))?)),
            (None, None) => Ok(None),
            _ => Err(CliError::Config("give both `q0` and `p0`, or neither".into())),
        }
    }

    /// `q0`, `p0` from the document, or a seeded tangent state on `screen`.
    pub fn state_on(&self, screen: &Screen) -> Result<PhaseState, CliError> {
        match self.explicit_state()? {
            Some(s) => {
                let off = (cfg(screen.h(&s.q))? - 1.0).abs();
                let normal = cfg(screen.dh(&s.q))?.at(&s.p).abs();
                if off > INITIAL_STATE_TOL || normal > INITIAL_STATE_TOL {
                    return Err(CliError::Config(format!(
                        "initial state is not on the screen: |h(q0) - 1| = {off:e}, |Dh(q0)[p0]| = {normal:e}"
                    )));
                }
                Ok(s)
            }
            None => cfg(random_tangent_state(&mut rng(self.seed()), screen, self.speed.unwrap_or(1.0))),
        }
    }

    /// `q0`, `p0` from the document, or the standard free state of the
    /// seeded ellipsoid.
    pub fn free_state(&self) -> Result<PhaseState, CliError> {
        match self.explicit_state()? {
            Some(s) => Ok(s),
            None => cfg(standard_free_state(self.seed(), &self.ellipsoid()?)),
        }
    }

    pub fn suite_options(&self) -> Result<SuiteOptions, CliError> {
        let mut o = SuiteOptions {
            seed: self.seed(),
            integrator: self.integrator()?,
            ..SuiteOptions::default()
        };
        if let Some(d) = self.verify.dim.or(self.dim) {
            o.dim = d;
        }
        if let Some(k) = self.verify.instances {
            o.instances = k;
        }
        if let Some(d) = self.verify.reduction_degree {
            o.reduction_degree = d;
        }
        if o.dim < 2 || o.instances == 0 {
            return Err(CliError::Config("verify needs dim >= 2 and at least one instance".into()));
        }
        Ok(o)
    }
}
