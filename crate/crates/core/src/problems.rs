//! The three systems built from a pair of positive definite forms `(G, A)`,
//! and the maps between them.
//!
//! With `M = G⁻¹A` and `B = G A⁻¹ G`:
//!
//! - Neumann: the field `Mq/⟨Gq,q⟩²` on the sphere `⟨Gq,q⟩ = 1`;
//! - intermediate: the field `η Mq/⟨Gq,q⟩²` on the sphere `⟨Bq,q⟩ = 1`;
//! - Jacobi: `Q̈ = μ MQ + ν Q` on the ellipsoid `⟨AQ,Q⟩ = 1`.
//!
//! `Q ↦ q = MQ` sends Jacobi trajectories to intermediate ones with the same
//! time and `η = μ⟨AQ,MQ⟩²`; central projection onto the `G`-sphere with the
//! Appell time change then lands on the Neumann system.

use crate::dynamics::{
    energy, integrate_constrained, multiplier, Channel, ConstrainedSystem, IntegratorOptions, PhaseState,
    ReactionField, Trajectory,
};
use crate::error::{Error, Result};
use crate::forces::{braden_potential, linear_field, neumann_potential, BradenField, ForceField};
use crate::geometry::{LinOperator, SymForm, Vector};
use crate::projective::{compare_paths, compare_trajectories, project_trajectory, Deviation, ReparamTrajectory};
use crate::screens::Screen;

/// Condition estimates of `A` above this are rejected.
pub const MAX_CONDITION: f64 = 1e8;

/// A pair `(G, A)` of positive definite forms with `M = G⁻¹A` and
/// `B = G A⁻¹ G`.
#[derive(Clone, Debug)]
pub struct EllipsoidData {
    pub g: SymForm,
    pub a: SymForm,
    pub m: LinOperator,
    pub b: SymForm,
}

impl EllipsoidData {
    pub fn new(g: SymForm, a: SymForm) -> Result<Self> {
        let cond = a.condition_estimate()?;
        if cond > MAX_CONDITION {
            return Err(Error::IllConditioned {
                estimate: cond,
                limit: MAX_CONDITION,
            });
        }
        let braden = BradenField::new(&g, &a, 1.0)?;
        Ok(EllipsoidData {
            g,
            a,
            m: braden.m,
            b: braden.b,
        })
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    /// Entrywise `max |GM − ᵗMG|`.
    pub fn symmetry_residual(&self) -> f64 {
        let gm = self.g.to_operator().compose(&self.m);
        gm.sub(&gm.transpose()).max_abs()
    }

    /// `scale · Mq/⟨Gq,q⟩²`.
    pub fn braden_field(&self, scale: f64) -> Result<ForceField> {
        crate::forces::braden_field(&self.g, &self.a, scale)
    }

    pub fn g_screen(&self) -> Screen {
        Screen::Quadric(self.g.clone())
    }

    pub fn a_screen(&self) -> Screen {
        Screen::Quadric(self.a.clone())
    }

    pub fn b_screen(&self) -> Screen {
        Screen::Quadric(self.b.clone())
    }
}

/// Ellipsoid data with the strength `ν` of the potential `ν⟨GQ,Q⟩/2`.
#[derive(Clone, Debug)]
pub struct JacobiParams {
    pub data: EllipsoidData,
    pub nu: f64,
}

/// The Neumann system: Braden field of scale 1 on the `G`-sphere.
pub fn neumann_system(data: &EllipsoidData) -> Result<ConstrainedSystem> {
    neumann_system_scaled(data, 1.0)
}

/// The Neumann system with the field scaled by `scale`. The correspondence
/// chain lands here with `scale = η`.
pub fn neumann_system_scaled(data: &EllipsoidData, scale: f64) -> Result<ConstrainedSystem> {
    ConstrainedSystem::central(data.braden_field(scale)?, data.g_screen())
}

/// `½⟨Gp,p⟩ − ½⟨Aq,q⟩/⟨Gq,q⟩²`.
pub fn neumann_energy(data: &EllipsoidData, state: &PhaseState) -> Result<f64> {
    energy(&data.g, &neumann_potential(&data.g, &data.a), state)
}

/// The intermediate system: Braden field of scale `eta` on the `B`-sphere.
pub fn braden_system(data: &EllipsoidData, eta: f64) -> Result<ConstrainedSystem> {
    ConstrainedSystem::central(data.braden_field(eta)?, data.b_screen())
}

/// `½⟨Bp,p⟩ + ½η/⟨Gq,q⟩`: the Braden field is the `B`-gradient of
/// `−½η/⟨Gq,q⟩`.
pub fn braden_energy(data: &EllipsoidData, eta: f64, state: &PhaseState) -> Result<f64> {
    energy(&data.b, &braden_potential(&data.g, eta), state)
}

/// The Jacobi system: force `νQ`, the `A`-ellipsoid, reaction along `MQ`.
pub fn jacobi_system(params: &JacobiParams) -> Result<ConstrainedSystem> {
    let nu = params.nu;
    let n = params.data.dim();
    let field = linear_field(LinOperator::identity(n).scaled(nu)).with_label("jacobi");
    ConstrainedSystem::new(field, params.data.a_screen(), ReactionField::Linear(params.data.m.clone()))
}

/// `½⟨GQ̇,Q̇⟩ − ν⟨GQ,Q⟩/2`, conserved because the reaction `MQ` is
/// `G`-normal to the ellipsoid.
pub fn jacobi_energy(params: &JacobiParams, state: &PhaseState) -> f64 {
    0.5 * params.data.g.quad(&state.p) - 0.5 * params.nu * params.data.g.quad(&state.q)
}

/// Joachimsthal's constant `η = μ⟨AQ,MQ⟩²`.
pub fn joachimsthal(params: &JacobiParams, state: &PhaseState) -> Result<f64> {
    let system = jacobi_system(params)?;
    let mu = multiplier(&system, &state.q, &state.p)?;
    let s = params.data.a.bilinear(&state.q, &params.data.m.apply(&state.q));
    Ok(mu * s * s)
}

/// `Q ↦ MQ / ‖MQ‖_G`.
pub fn gauss_map(data: &EllipsoidData, q: &Vector) -> Result<Vector> {
    data.g_screen().project_point(&data.m.apply(q))
}

/// Integrate the Jacobi system and record the `eta` and `energy` channels.
pub fn jacobi_run(
    params: &JacobiParams,
    state0: &PhaseState,
    t_end: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    let system = jacobi_system(params)?;
    let mut traj = integrate_constrained(&system, state0, t_end, opts)?;
    let (a, m) = (&params.data.a, &params.data.m);
    let mus = traj.channel(Channel::Lambda).expect("multiplier channel").to_vec();
    let etas = traj
        .samples()
        .iter()
        .zip(mus)
        .map(|(s, mu)| {
            let k = a.bilinear(&s.q, &m.apply(&s.q));
            mu * k * k
        })
        .collect();
    traj.set_channel(Channel::Eta, etas)?;
    traj.record_channel(Channel::Energy, |s| Ok(jacobi_energy(params, s)))?;
    Ok(traj)
}

/// `q = MQ`, `q̇ = MQ̇`, `q̈ = MQ̈`, same time parameter.
pub fn knorrer_step1(data: &EllipsoidData, jacobi: &Trajectory) -> Result<Trajectory> {
    let m = &data.m;
    let samples = jacobi
        .samples()
        .iter()
        .map(|s| PhaseState {
            t: s.t,
            q: m.apply(&s.q),
            p: m.apply(&s.p),
        })
        .collect();
    let accel = jacobi.accelerations().iter().map(|a| m.apply(a)).collect();
    let mut out = Trajectory::new(samples, accel)?;
    out.meta.description = format!("image under Q -> MQ of [{}]", jacobi.meta.description);
    out.meta.options = jacobi.meta.options.clone();
    out.meta.seed = jacobi.meta.seed;
    Ok(out)
}

/// `max |⟨Bq,q⟩ − 1|` over the samples.
pub fn b_sphere_residual(data: &EllipsoidData, traj: &Trajectory) -> f64 {
    traj.samples()
        .iter()
        .map(|s| (data.b.quad(&s.q) - 1.0).abs())
        .fold(0.0, f64::max)
}

/// `max ‖q̈ − η Mq/⟨Gq,q⟩² − νq‖` over the samples, with `q̈` the stored
/// accelerations.
pub fn intermediate_residual(data: &EllipsoidData, nu: f64, eta: f64, traj: &Trajectory) -> Result<f64> {
    let field = data.braden_field(eta)?;
    let mut worst: f64 = 0.0;
    for (s, a) in traj.samples().iter().zip(traj.accelerations()) {
        let rhs = field.evaluate(&s.q)?.add_scaled(nu, &s.q);
        worst = worst.max(a.distance(&rhs));
    }
    Ok(worst)
}

/// Central projection onto the `G`-sphere with the Appell time change.
pub fn knorrer_step2(data: &EllipsoidData, intermediate: &Trajectory) -> Result<ReparamTrajectory> {
    project_trajectory(intermediate, &data.g_screen())
}

/// Everything measured by [`orbit_exchange_report`].
#[derive(Clone, Debug)]
pub struct ExchangeReport {
    pub nu: f64,
    /// Joachimsthal constant at the initial state.
    pub eta: f64,
    /// `max |η(t) − η(0)| / |η(0)|` along the Jacobi run.
    pub eta_drift: f64,
    pub jacobi_energy_drift: f64,
    /// `max |⟨Bq,q⟩ − 1|` along the image of the Jacobi run.
    pub b_residual: f64,
    /// `max ‖q̈ − η Mq/⟨Gq,q⟩² − νq‖` along the image.
    pub step1_residual: f64,
    /// `max |multiplier − ν|` along the intermediate run.
    pub multiplier_gap: f64,
    /// `max − min` of the intermediate multiplier.
    pub multiplier_spread: f64,
    /// Image of the Jacobi run against the intermediate run.
    pub trajectory_deviation: Deviation,
    /// Projected image against a Neumann run of scale `η`.
    pub chain_deviation: Deviation,
    /// `max ‖projected position − gauss_map(Q)‖`.
    pub gauss_gap: f64,
    pub jacobi: Trajectory,
    pub intermediate: Trajectory,
    pub projected: ReparamTrajectory,
    pub neumann: Trajectory,
}

/// Run the Jacobi system, map it by `Q ↦ MQ`, integrate the intermediate
/// system of scale `η` from the image of the initial state, then project
/// the image onto the `G`-sphere and compare with a Neumann run.
pub fn orbit_exchange_report(
    params: &JacobiParams,
    state0: &PhaseState,
    t_end: f64,
    opts: &IntegratorOptions,
) -> Result<ExchangeReport> {
    let data = &params.data;
    let jacobi = jacobi_run(params, state0, t_end, opts)?;
    let etas = jacobi.channel(Channel::Eta).expect("eta channel");
    let eta = etas[0];
    let eta_drift = jacobi.channel_drift(Channel::Eta).unwrap_or(0.0) / eta.abs();
    let jacobi_energy_drift = jacobi.channel_drift(Channel::Energy).unwrap_or(0.0);

    let image = knorrer_step1(data, &jacobi)?;
    let b_residual = b_sphere_residual(data, &image);
    let step1_residual = intermediate_residual(data, params.nu, eta, &image)?;

    let intermediate = integrate_constrained(&braden_system(data, eta)?, image.first(), t_end, opts)?;
    let nus = intermediate.channel(Channel::Lambda).expect("multiplier channel");
    let multiplier_gap = nus.iter().map(|l| (l - params.nu).abs()).fold(0.0, f64::max);
    let (lo, hi) = nus
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &l| (lo.min(l), hi.max(l)));
    let trajectory_deviation = compare_paths(&image, &intermediate, None)?;

    let projected = knorrer_step2(data, &image)?;
    let neumann_start = projected.path.first().clone();
    let neumann = integrate_constrained(
        &neumann_system_scaled(data, eta)?,
        &neumann_start,
        projected.path.last().t,
        opts,
    )?;
    let chain_deviation = compare_trajectories(&projected, &neumann, None)?;
    let mut gauss_gap: f64 = 0.0;
    for (s, src) in projected.path.samples().iter().zip(jacobi.samples()) {
        gauss_gap = gauss_gap.max(s.q.distance(&gauss_map(data, &src.q)?));
    }

    Ok(ExchangeReport {
        nu: params.nu,
        eta,
        eta_drift,
        jacobi_energy_drift,
        b_residual,
        step1_residual,
        multiplier_gap,
        multiplier_spread: hi - lo,
        trajectory_deviation,
        chain_deviation,
        gauss_gap,
        jacobi,
        intermediate,
        projected,
        neumann,
    })
}
