//! Free and constrained second-order dynamics.
//!
//! A constrained system moves on a screen `h = 1` under `q̈ = f(q) + λ d(q)`,
//! where `d` is a reaction direction transverse to the screen and `λ` is the
//! unique multiplier that makes `d²h/dt² = 0`:
//!
//! ```text
//! λ = −(D²h(q)(p,p) + Dh(q)[f(q)]) / Dh(q)[d(q)]
//! ```

mod ode;
mod trajectory;

use std::fmt;
use std::sync::Arc;

pub use trajectory::{quintic_hermite, Channel, PhaseState, Trajectory, TrajectoryMeta};

use crate::error::{Error, Result};
use crate::forces::{ForceField, Potential};
use crate::geometry::{LinOperator, SymForm, Vector};
use crate::screens::Screen;
use ode::Flow;

/// `|Dh(q)[d(q)]|` below this aborts: the reaction is (nearly) tangent.
pub const TRANSVERSALITY_THRESHOLD: f64 = 1e-10;

/// Tolerance of the on-screen and tangency preconditions of [`multiplier`].
pub const STATE_TOL: f64 = 1e-8;

/// Tolerance of the initial-state preconditions of [`integrate_constrained`].
pub const INITIAL_STATE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Classical fixed-step fourth-order Runge-Kutta.
    Rk4,
    /// Adaptive Dormand-Prince 5(4).
    DormandPrince,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorOptions {
    pub method: Method,
    /// Step of the fixed-step method.
    pub dt: f64,
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: f64,
    pub max_step: Option<f64>,
    pub max_steps: usize,
    /// Re-project onto the screen after every accepted step.
    pub stabilize: bool,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            method: Method::DormandPrince,
            dt: 1e-2,
            rtol: 1e-10,
            atol: 1e-10,
            initial_step: 1e-3,
            max_step: None,
            max_steps: 10_000_000,
            stabilize: true,
        }
    }
}

impl IntegratorOptions {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        IntegratorOptions {
            rtol,
            atol,
            ..Default::default()
        }
    }

    pub fn rk4(dt: f64) -> Self {
        IntegratorOptions {
            method: Method::Rk4,
            dt,
            ..Default::default()
        }
    }

    pub fn stabilized(mut self, on: bool) -> Self {
        self.stabilize = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive, got {x}")))
            }
        };
        match self.method {
            Method::Rk4 => positive("dt", self.dt)?,
            Method::DormandPrince => {
                positive("rtol", self.rtol)?;
                positive("atol", self.atol)?;
                positive("initial_step", self.initial_step)?;
                if let Some(m) = self.max_step {
                    positive("max_step", m)?;
                }
            }
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidArgument("max_steps must be positive".into()));
        }
        Ok(())
    }
}

type DirectionFn = dyn Fn(&Vector) -> Vector + Send + Sync;

/// Direction `d(q)` of the constraint force.
#[derive(Clone)]
pub enum ReactionField {
    /// `d(q) = q`
    Central,
    /// `d(q) = L q`
    Linear(LinOperator),
    Custom {
        label: String,
        direction: Arc<DirectionFn>,
    },
}

impl fmt::Debug for ReactionField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReactionField::Central => f.write_str("Central"),
            ReactionField::Linear(l) => f.debug_tuple("Linear").field(l).finish(),
            ReactionField::Custom { label, .. } => f.debug_struct("Custom").field("label", label).finish(),
        }
    }
}

impl ReactionField {
    pub fn custom<F>(label: impl Into<String>, direction: F) -> Self
    where
        F: Fn(&Vector) -> Vector + Send + Sync + 'static,
    {
        ReactionField::Custom {
            label: label.into(),
            direction: Arc::new(direction),
        }
    }

    pub fn direction(&self, q: &Vector) -> Vector {
        match self {
            ReactionField::Central => q.clone(),
            ReactionField::Linear(l) => l.apply(q),
            ReactionField::Custom { direction, .. } => direction(q),
        }
    }

    pub fn label(&self) -> &str {
        match self {
            ReactionField::Central => "central",
            ReactionField::Linear(_) => "linear",
            ReactionField::Custom { label, .. } => label,
        }
    }
}

/// A force field constrained to a screen by a reaction along `d(q)`.
#[derive(Clone, Debug)]
pub struct ConstrainedSystem {
    pub field: ForceField,
    pub screen: Screen,
    pub reaction: ReactionField,
}

impl ConstrainedSystem {
    pub fn new(field: ForceField, screen: Screen, reaction: ReactionField) -> Result<Self> {
        if field.dim() != screen.dim() {
            return Err(Error::DimensionMismatch {
                expected: screen.dim(),
                found: field.dim(),
            });
        }
        Ok(ConstrainedSystem { field, screen, reaction })
    }

    /// Shorthand for a central reaction.
    pub fn central(field: ForceField, screen: Screen) -> Result<Self> {
        Self::new(field, screen, ReactionField::Central)
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn describe(&self) -> String {
        format!(
            "{} field on {} screen, {} reaction",
            self.field.label(),
            self.screen.label(),
            self.reaction.label()
        )
    }

    /// Multiplier without the on-screen preconditions; used inside stages.
    fn multiplier_raw(&self, q: &Vector, p: &Vector, f: &Vector) -> Result<f64> {
        let dh = self.screen.dh(q)?;
        let d = self.reaction.direction(q);
        let denom = dh.at(&d);
        if !(denom.abs() > TRANSVERSALITY_THRESHOLD) {
            return Err(Error::Transversality {
                value: denom,
                q: q.as_slice().to_vec(),
            });
        }
        Ok(-(self.screen.d2h(q, p, p)? + dh.at(f)) / denom)
    }

    fn accel_raw(&self, q: &Vector, p: &Vector) -> Result<(Vector, f64)> {
        let f = self.field.evaluate(q)?;
        let lambda = self.multiplier_raw(q, p, &f)?;
        let d = self.reaction.direction(q);
        Ok((f.add_scaled(lambda, &d), lambda))
    }

    fn check_state(&self, q: &Vector, p: &Vector, tol: f64) -> Result<()> {
        if p.dim() != q.dim() {
            return Err(Error::DimensionMismatch {
                expected: q.dim(),
                found: p.dim(),
            });
        }
        let h = self.screen.h(q)?;
        if (h - 1.0).abs() > tol {
            return Err(Error::OffScreen { residual: (h - 1.0).abs() });
        }
        let tangency = self.screen.dh(q)?.at(p).abs();
        if tangency > tol * p.norm().max(1.0) {
            return Err(Error::NotTangent { residual: tangency });
        }
        Ok(())
    }
}

/// The multiplier `λ` at an on-screen, tangent state.
pub fn multiplier(system: &ConstrainedSystem, q: &Vector, p: &Vector) -> Result<f64> {
    system.check_state(q, p, STATE_TOL)?;
    let f = system.field.evaluate(q)?;
    system.multiplier_raw(q, p, &f)
}

/// `f(q) + λ d(q)`.
pub fn constrained_accel(system: &ConstrainedSystem, q: &Vector, p: &Vector) -> Result<Vector> {
    system.check_state(q, p, STATE_TOL)?;
    Ok(system.accel_raw(q, p)?.0)
}

/// `E = ½⟨p,p⟩_metric − U(q)`, the sign convention under which a force
/// `+∇U` conserves `E`.
pub fn energy(metric: &SymForm, potential: &Potential, state: &PhaseState) -> Result<f64> {
    if metric.dim() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: metric.dim(),
            found: state.dim(),
        });
    }
    Ok(0.5 * metric.quad(&state.p) - potential.value(&state.q)?)
}

fn split(y: &[f64], n: usize) -> (Vector, Vector) {
    (Vector::new(y[..n].to_vec()), Vector::new(y[n..2 * n].to_vec()))
}

/// Appell time to track while integrating a free trajectory.
#[derive(Clone, Debug)]
pub struct AppellTracker {
    pub screen: Screen,
    /// Stop the run once `τ` reaches this value.
    pub tau_end: Option<f64>,
}

/// Integrate `q̈ = f(q)`.
pub fn integrate_free(
    field: &ForceField,
    state0: &PhaseState,
    t_end: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    integrate_free_tracked(field, state0, t_end, opts, None)
}

/// Integrate `q̈ = f(q)`, optionally carrying `τ` with `dτ/dt = h(q)⁻²` as an
/// extra ODE component. With a tracker the trajectory gets `tau` and `h`
/// channels.
pub fn integrate_free_tracked(
    field: &ForceField,
    state0: &PhaseState,
    t_end: f64,
    opts: &IntegratorOptions,
    tracker: Option<&AppellTracker>,
) -> Result<Trajectory> {
    let n = field.dim();
    if state0.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: state0.dim(),
        });
    }
    let a0 = field.evaluate(&state0.q)?;
    if let Some(tr) = tracker {
        if tr.screen.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: tr.screen.dim(),
            });
        }
    }

    let mut traj = Trajectory::empty();
    traj.meta.description = format!("free motion under {} field", field.label());
    traj.meta.options = Some(opts.clone());
    traj.meta.tau_screen = tracker.map(|t| t.screen.clone());
    traj.push(state0.clone(), a0);
    if let Some(tr) = tracker {
        traj.channel_mut(Channel::Tau).push(0.0);
        traj.channel_mut(Channel::H).push(tr.screen.h(&state0.q)?);
    }

    let mut y: Vec<f64> = state0.q.iter().chain(state0.p.iter()).copied().collect();
    if tracker.is_some() {
        y.push(0.0);
    }

    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let (q, p) = split(y, n);
        let f = field.evaluate(&q)?;
        dy[..n].copy_from_slice(p.as_slice());
        dy[n..2 * n].copy_from_slice(f.as_slice());
        if let Some(tr) = tracker {
            let h = tr.screen.h(&q)?;
            dy[2 * n] = 1.0 / (h * h);
        }
        Ok(())
    };

    let stats = ode::integrate(rhs, state0.t, &mut y, t_end, opts, |t, y| {
        let (q, p) = split(y, n);
        let a = field.evaluate(&q).map_err(|e| e.at_time(t))?;
        let mut flow = Flow::Continue;
        if let Some(tr) = tracker {
            let tau = y[2 * n];
            let h = tr.screen.h(&q).map_err(|e| e.at_time(t))?;
            traj.channel_mut(Channel::Tau).push(tau);
            traj.channel_mut(Channel::H).push(h);
            if tr.tau_end.is_some_and(|end| tau >= end) {
                flow = Flow::Stop;
            }
        }
        traj.push(PhaseState { t, q, p }, a);
        Ok(flow)
    })?;
    traj.meta.accepted_steps = stats.accepted;
    traj.meta.rejected_steps = stats.rejected;
    Ok(traj)
}

/// Integrate the constrained system from an on-screen, tangent state.
///
/// Records the `lambda` and `h` channels at every accepted step. With
/// `opts.stabilize` each accepted state is re-projected: `q ← q/h(q)` and
/// `p ← p − Dh(q)[p] q`.
pub fn integrate_constrained(
    system: &ConstrainedSystem,
    state0: &PhaseState,
    t_end: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    let n = system.dim();
    if state0.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: state0.dim(),
        });
    }
    system.check_state(&state0.q, &state0.p, INITIAL_STATE_TOL)?;
    let (a0, l0) = system.accel_raw(&state0.q, &state0.p)?;

    let mut traj = Trajectory::empty();
    traj.meta.description = system.describe();
    traj.meta.options = Some(opts.clone());
    traj.push(state0.clone(), a0);
    traj.channel_mut(Channel::Lambda).push(l0);
    traj.channel_mut(Channel::H).push(system.screen.h(&state0.q)?);

    let mut y: Vec<f64> = state0.q.iter().chain(state0.p.iter()).copied().collect();

    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let (q, p) = split(y, n);
        let (a, _) = system.accel_raw(&q, &p)?;
        dy[..n].copy_from_slice(p.as_slice());
        dy[n..].copy_from_slice(a.as_slice());
        Ok(())
    };

    let stats = ode::integrate(rhs, state0.t, &mut y, t_end, opts, |t, y| {
        let (mut q, mut p) = split(y, n);
        if opts.stabilize {
            q = system.screen.project_point(&q).map_err(|e| e.at_time(t))?;
            p = system.screen.tangent_project(&q, &p).map_err(|e| e.at_time(t))?;
            y[..n].copy_from_slice(q.as_slice());
            y[n..].copy_from_slice(p.as_slice());
        }
        let (a, lambda) = system.accel_raw(&q, &p).map_err(|e| e.at_time(t))?;
        traj.channel_mut(Channel::Lambda).push(lambda);
        traj.channel_mut(Channel::H).push(system.screen.h(&q).map_err(|e| e.at_time(t))?);
        traj.push(PhaseState { t, q, p }, a);
        Ok(Flow::Continue)
    })?;
    traj.meta.accepted_steps = stats.accepted;
    traj.meta.rejected_steps = stats.rejected;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forces::{gradient_field, inverse_quadratic_potential, zero_field, GradientMode};
    use crate::geometry::Covector;
    use std::f64::consts::PI;

    fn prop2_system() -> (ConstrainedSystem, Potential) {
        let id = SymForm::identity(2);
        let u = inverse_quadratic_potential(&id, 1.0);
        let f = gradient_field(&id, &u, GradientMode::Analytic).unwrap().into_field();
        (ConstrainedSystem::central(f, Screen::unit_sphere(2)).unwrap(), u)
    }

    fn v2(a: f64, b: f64) -> Vector {
        Vector::from([a, b])
    }

    #[test]
    fn multiplier_examples() {
        let (sys, _) = prop2_system();
        assert_eq!(multiplier(&sys, &v2(1.0, 0.0), &v2(0.0, 1.0)).unwrap(), 1.0);

        let free = ConstrainedSystem::central(zero_field(2), Screen::unit_sphere(2)).unwrap();
        assert_eq!(multiplier(&free, &v2(1.0, 0.0), &v2(0.0, 1.0)).unwrap(), -1.0);

        let line = ConstrainedSystem::central(zero_field(2), Screen::linear(Covector::from([0.0, 1.0])).unwrap())
            .unwrap();
        assert_eq!(multiplier(&line, &v2(3.0, 1.0), &v2(2.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn multiplier_preconditions() {
        let (sys, _) = prop2_system();
        assert!(matches!(
            multiplier(&sys, &v2(2.0, 0.0), &v2(0.0, 1.0)),
            Err(Error::OffScreen { .. })
        ));
        assert!(matches!(
            multiplier(&sys, &v2(1.0, 0.0), &v2(1.0, 1.0)),
            Err(Error::NotTangent { .. })
        ));
        // reaction tangent to the circle at (1,0)
        let tangent = ConstrainedSystem::new(
            zero_field(2),
            Screen::unit_sphere(2),
            ReactionField::custom("rotated", |q| Vector::from([-q[1], q[0]])),
        )
        .unwrap();
        assert!(matches!(
            multiplier(&tangent, &v2(1.0, 0.0), &v2(0.0, 1.0)),
            Err(Error::Transversality { .. })
        ));
    }

    #[test]
    fn multiplier_is_unique() {
        // perturbing λ by δ leaves d²h/dt² = δ Dh(q)[d(q)]
        let g = SymForm::spd(&[vec![2.0, 0.4], vec![0.4, 1.0]]).unwrap();
        let screen = Screen::quadric(g).unwrap();
        let sys = ConstrainedSystem::new(
            crate::forces::kepler_field(2, 1.0),
            screen.clone(),
            ReactionField::Linear(LinOperator::from_rows(&[vec![1.0, 0.3], vec![0.1, 1.2]]).unwrap()),
        )
        .unwrap();
        let q = screen.project_point(&v2(0.3, 0.8)).unwrap();
        let p = screen.tangent_project(&q, &v2(1.0, -0.4)).unwrap();
        let lambda = multiplier(&sys, &q, &p).unwrap();
        let f = sys.field.evaluate(&q).unwrap();
        let d = sys.reaction.direction(&q);
        let dh = screen.dh(&q).unwrap();
        let hdd = |l: f64| screen.d2h(&q, &p, &p).unwrap() + dh.at(&f.add_scaled(l, &d));
        assert!(hdd(lambda).abs() <= 1e-14);
        let delta = 0.01;
        assert!((hdd(lambda + delta) - delta * dh.at(&d)).abs() <= 1e-14);
    }

    #[test]
    fn constrained_accel_examples() {
        let free = ConstrainedSystem::central(zero_field(2), Screen::unit_sphere(2)).unwrap();
        assert_eq!(constrained_accel(&free, &v2(1.0, 0.0), &v2(0.0, 1.0)).unwrap(), v2(-1.0, 0.0));
        let (sys, _) = prop2_system();
        assert_eq!(constrained_accel(&sys, &v2(1.0, 0.0), &v2(0.0, 1.0)).unwrap(), v2(-1.0, 0.0));

        // tangent force, zero velocity, linear screen: λ = 0
        let push = crate::forces::ForceField::new(2, -3.0, "push", |_| Vector::from([1.0, 0.0]));
        let line = ConstrainedSystem::central(push, Screen::linear(Covector::from([0.0, 1.0])).unwrap()).unwrap();
        assert_eq!(constrained_accel(&line, &v2(0.5, 1.0), &v2(0.0, 0.0)).unwrap(), v2(1.0, 0.0));
    }

    #[test]
    fn energy_examples() {
        let (_, u) = prop2_system();
        let id = SymForm::identity(2);
        let s = PhaseState::new(0.0, v2(1.0, 0.0), v2(0.0, 1.0)).unwrap();
        assert_eq!(energy(&id, &u, &s).unwrap(), -0.5);

        let zero_u = Potential::new(2, -2.0, "zero", |_| 0.0);
        let rest = PhaseState::new(0.0, v2(0.3, 0.2), v2(0.0, 0.0)).unwrap();
        assert_eq!(energy(&id, &zero_u, &rest).unwrap(), 0.0);

        let neumann = crate::forces::neumann_potential(&id, &SymForm::diag(&[1.0, 2.0]).unwrap());
        assert_eq!(energy(&id, &neumann, &s).unwrap(), 0.0);
    }

    #[test]
    fn free_line() {
        let s0 = PhaseState::new(0.0, v2(1.0, 0.0), v2(0.0, 1.0)).unwrap();
        let tr = integrate_free(&zero_field(2), &s0, 2.0, &IntegratorOptions::default()).unwrap();
        for s in tr.samples() {
            assert!(s.q.distance(&v2(1.0, s.t)) <= 1e-12);
        }
        assert_eq!(tr.last().t, 2.0);
    }

    #[test]
    fn great_circle() {
        let sys = ConstrainedSystem::central(zero_field(2), Screen::unit_sphere(2)).unwrap();
        let s0 = PhaseState::new(0.0, v2(1.0, 0.0), v2(0.0, 1.0)).unwrap();
        let tr = integrate_constrained(&sys, &s0, PI, &IntegratorOptions::default()).unwrap();
        assert!(tr.last().q.distance(&v2(-1.0, 0.0)) <= 1e-8);
        for s in tr.samples() {
            assert!(s.q.distance(&v2(s.t.cos(), s.t.sin())) <= 1e-8);
        }
        for &l in tr.channel(Channel::Lambda).unwrap() {
            assert!((l + 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn domain_exit_reports_time() {
        // radial fall into the origin
        let s0 = PhaseState::new(0.0, v2(1.0, 0.0), v2(-1.0, 0.0)).unwrap();
        let err = integrate_free(&crate::forces::kepler_field(2, 1.0), &s0, 5.0, &IntegratorOptions::default())
            .unwrap_err();
        match err {
            Error::DomainExit { t, .. } => assert!(t > 0.0 && t < 5.0),
            Error::StepSizeUnderflow { t, .. } => assert!(t > 0.0 && t < 5.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_off_screen_start() {
        let sys = ConstrainedSystem::central(zero_field(2), Screen::unit_sphere(2)).unwrap();
        let s0 = PhaseState::new(0.0, v2(1.0 + 1e-6, 0.0), v2(0.0, 1.0)).unwrap();
        assert!(matches!(
            integrate_constrained(&sys, &s0, 1.0, &IntegratorOptions::default()),
            Err(Error::OffScreen { .. })
        ));
    }
}
