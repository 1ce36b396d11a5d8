//! Central projection of whole trajectories onto a screen with the Appell
//! change of time `dτ/dt = h(q)⁻²`.
//!
//! For a field of degree −3, a free trajectory `q(t)` projects to
//! `q₁(τ) = q/h(q)`, which solves the constrained equation
//! `q₁'' = f(q₁) + λ q₁` with `λ = −h³ḧ`.

use crate::dynamics::{
    integrate_constrained, integrate_free_tracked, multiplier, AppellTracker, Channel, ConstrainedSystem,
    IntegratorOptions, PhaseState, Trajectory,
};
use crate::error::{Error, Result};
use crate::forces::ForceField;
use crate::screens::Screen;

/// Largest mismatch between the initial states of two compared trajectories.
pub const INITIAL_MATCH_TOL: f64 = 1e-10;

// Five-point Gauss-Legendre nodes and weights on [−1, 1].
const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// A trajectory on a screen, parametrized by Appell time `τ`.
///
/// `path.samples()[i].t` is `τ`; `origin_t[i]` is the time of the sample it
/// came from.
#[derive(Clone, Debug)]
pub struct ReparamTrajectory {
    pub path: Trajectory,
    pub origin_t: Vec<f64>,
    pub screen: Screen,
}

impl ReparamTrajectory {
    pub fn taus(&self) -> Vec<f64> {
        self.path.times()
    }
}

const QUAD_REL_TOL: f64 = 1e-14;
const QUAD_MAX_DEPTH: u32 = 24;

fn gauss5<F: Fn(f64) -> Result<f64>>(g: &F, a: f64, b: f64) -> Result<f64> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut sum = 0.0;
    for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
        sum += w * g(mid + half * x)?;
    }
    Ok(half * sum)
}

fn adaptive_gauss5<F: Fn(f64) -> Result<f64>>(g: &F, a: f64, b: f64, whole: f64, depth: u32) -> Result<f64> {
    let mid = 0.5 * (a + b);
    let left = gauss5(g, a, mid)?;
    let right = gauss5(g, mid, b)?;
    let split = left + right;
    if depth >= QUAD_MAX_DEPTH || (split - whole).abs() <= QUAD_REL_TOL * split.abs().max(1e-300) {
        return Ok(split);
    }
    Ok(adaptive_gauss5(g, a, mid, left, depth + 1)? + adaptive_gauss5(g, mid, b, right, depth + 1)?)
}

/// Appell time `τ(t) = ∫ h(q(s))⁻² ds` at every sample, starting from 0.
///
/// Uses the `tau` channel when it was integrated for the same screen;
/// otherwise integrates the quintic Hermite interpolant with five-point
/// Gauss-Legendre on each step, bisecting a panel until its halves agree.
pub fn appell_time(traj: &Trajectory, screen: &Screen) -> Result<Vec<f64>> {
    if screen.dim() != traj.dim() {
        return Err(Error::DimensionMismatch {
            expected: screen.dim(),
            found: traj.dim(),
        });
    }
    for s in traj.samples() {
        screen.h(&s.q).map_err(|e| e.at_time(s.t))?;
    }
    if traj.meta.tau_screen.as_ref() == Some(screen) {
        if let Some(tau) = traj.channel(Channel::Tau) {
            return Ok(tau.to_vec());
        }
    }
    let samples = traj.samples();
    let acc = traj.accelerations();
    let mut tau = Vec::with_capacity(samples.len());
    tau.push(0.0);
    let mut total = 0.0;
    for i in 1..samples.len() {
        let (a, b) = (&samples[i - 1], &samples[i]);
        let inv_h2 = |t: f64| -> Result<f64> {
            let (q, _) = crate::dynamics::quintic_hermite(a.t, (&a.q, &a.p, &acc[i - 1]), b.t, (&b.q, &b.p, &acc[i]), t);
            let h = screen.h(&q).map_err(|e| e.at_time(t))?;
            Ok(1.0 / (h * h))
        };
        let whole = gauss5(&inv_h2, a.t, b.t)?;
        total += adaptive_gauss5(&inv_h2, a.t, b.t, whole, 0)?;
        tau.push(total);
    }
    Ok(tau)
}

/// Project every sample: `q₁ = q/h`, `q₁' = h q̇ − ḣ q`,
/// `q₁'' = h³ q̈ − h² ḧ q`, parametrized by Appell time.
pub fn project_trajectory(traj: &Trajectory, screen: &Screen) -> Result<ReparamTrajectory> {
    let tau = appell_time(traj, screen)?;
    if tau.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "Appell time is not strictly increasing; samples too close to resolve".into(),
        ));
    }
    let mut samples = Vec::with_capacity(traj.len());
    let mut accel = Vec::with_capacity(traj.len());
    let mut hs = Vec::with_capacity(traj.len());
    for ((s, a), &tau) in traj.samples().iter().zip(traj.accelerations()).zip(&tau) {
        let h = screen.h(&s.q)?;
        let dh = screen.dh(&s.q)?;
        let hdot = dh.at(&s.p);
        let hddot = screen.d2h(&s.q, &s.p, &s.p)? + dh.at(a);
        let q1 = screen.project_point(&s.q)?;
        let p1 = s.p.scaled(h).add_scaled(-hdot, &s.q);
        let a1 = a.scaled(h * h * h).add_scaled(-h * h * hddot, &s.q);
        samples.push(PhaseState { t: tau, q: q1, p: p1 });
        accel.push(a1);
        hs.push(h);
    }
    let mut path = Trajectory::new(samples, accel)?;
    path.meta.description = format!("central projection of [{}]", traj.meta.description);
    path.meta.options = traj.meta.options.clone();
    path.meta.seed = traj.meta.seed;
    path.set_channel(Channel::Tau, tau)?;
    path.set_channel(Channel::H, hs)?;
    Ok(ReparamTrajectory {
        path,
        origin_t: traj.times(),
        screen: screen.clone(),
    })
}

/// `λ = −h³ ḧ` along a free trajectory, with `ḧ = D²h(q)(q̇,q̇) + Dh(q)[f(q)]`.
///
/// Since `D²h(q)(q, ·) = 0`, the second derivative is taken on the part
/// `q̇ − (ḣ/h) q` transverse to the ray. Far out a free run is nearly
/// radial, and evaluating it on `q̇` itself loses a factor `h²` of accuracy
/// to cancellation.
pub fn lambda_from_h(traj: &Trajectory, field: &ForceField, screen: &Screen) -> Result<Vec<f64>> {
    traj.samples()
        .iter()
        .map(|s| {
            let h = screen.h(&s.q)?;
            let dh = screen.dh(&s.q)?;
            let f = field.evaluate(&s.q)?;
            let u = s.p.add_scaled(-dh.at(&s.p) / h, &s.q);
            let hddot = screen.d2h(&s.q, &u, &u)? + dh.at(&f);
            Ok(-h * h * h * hddot)
        })
        .collect()
}

/// Maximum deviations found by [`compare_paths`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Deviation {
    pub position: f64,
    pub velocity: f64,
    /// Number of reference samples compared.
    pub samples: usize,
    /// Parameter window actually compared.
    pub window: (f64, f64),
}

/// Compare `b` against `a` at every sample of `a` inside the common
/// parameter range (further restricted to `window` if given), interpolating
/// `b` with quintic Hermite.
pub fn compare_paths(a: &Trajectory, b: &Trajectory, window: Option<(f64, f64)>) -> Result<Deviation> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let (a0, a1) = a.span();
    let (b0, b1) = b.span();
    let (mut lo, mut hi) = (a0.max(b0), a1.min(b1));
    if let Some((w0, w1)) = window {
        lo = lo.max(w0);
        hi = hi.min(w1);
    }
    if !(hi > lo) {
        return Err(Error::NoOverlap { a0, a1, b0, b1 });
    }
    let mut dev = Deviation {
        position: 0.0,
        velocity: 0.0,
        samples: 0,
        window: (lo, hi),
    };
    for s in a.samples().iter().filter(|s| s.t >= lo && s.t <= hi) {
        let (q, p) = b.interpolate(s.t)?;
        dev.position = dev.position.max(q.distance(&s.q));
        dev.velocity = dev.velocity.max(p.distance(&s.p));
        dev.samples += 1;
    }
    Ok(dev)
}

/// Compare a projected trajectory with a constrained run `b` on the same
/// screen, resampling `b` onto the `τ` grid of `a`.
pub fn compare_trajectories(a: &ReparamTrajectory, b: &Trajectory, window: Option<(f64, f64)>) -> Result<Deviation> {
    let (sa, sb) = (a.path.first(), b.first());
    let gap = if sa.q.dim() == sb.q.dim() {
        sa.q.distance(&sb.q).max(sa.p.distance(&sb.p)).max((sa.t - sb.t).abs())
    } else {
        f64::INFINITY
    };
    if !(gap <= INITIAL_MATCH_TOL) {
        return Err(Error::InitialMismatch { gap });
    }
    compare_paths(&a.path, b, window)
}

/// The constrained initial state matched to a free one: `(q/h, h q̇ − ḣ q)`.
pub fn matched_state(screen: &Screen, free: &PhaseState) -> Result<PhaseState> {
    let h = screen.h(&free.q)?;
    let hdot = screen.dh(&free.q)?.at(&free.p);
    Ok(PhaseState {
        t: 0.0,
        q: screen.project_point(&free.q)?,
        p: free.p.scaled(h).add_scaled(-hdot, &free.q),
    })
}

/// Result of [`reduction_check`].
#[derive(Clone, Debug)]
pub struct ReductionReport {
    pub free: Trajectory,
    pub projected: ReparamTrajectory,
    pub constrained: Trajectory,
    pub deviation: Deviation,
    /// `max |λ_from_h − multiplier(projected state)|`.
    pub lambda_gap: f64,
}

/// Run the free field with Appell time tracked until `τ ≥ tau_end` (or
/// `t_max`), project it onto `screen`, integrate the centrally constrained
/// system from the matched initial state, and compare over `[0, tau_end]`.
///
/// Nothing here assumes the field has degree −3; for other degrees the
/// deviation measures how far the reduction fails.
pub fn reduction_check(
    field: &ForceField,
    screen: &Screen,
    state0: &PhaseState,
    tau_end: f64,
    t_max: f64,
    opts: &IntegratorOptions,
) -> Result<ReductionReport> {
    let tracker = AppellTracker {
        screen: screen.clone(),
        tau_end: Some(tau_end),
    };
    let free = integrate_free_tracked(field, state0, state0.t + t_max, opts, Some(&tracker))?;
    let projected = project_trajectory(&free, screen)?;
    let system = ConstrainedSystem::central(field.clone(), screen.clone())?;
    let start = projected.path.first().clone();
    let tau_last = projected.path.last().t;
    let constrained = integrate_constrained(&system, &start, tau_last, opts)?;
    let deviation = compare_trajectories(&projected, &constrained, Some((0.0, tau_end)))?;

    let lambdas = lambda_from_h(&free, field, screen)?;
    let mut lambda_gap: f64 = 0.0;
    for (s, l) in projected.path.samples().iter().zip(lambdas) {
        // re-tangent to absorb rounding in the projected velocity
        let p = screen.tangent_project(&s.q, &s.p)?;
        lambda_gap = lambda_gap.max((multiplier(&system, &s.q, &p)? - l).abs());
    }
    Ok(ReductionReport {
        free,
        projected,
        constrained,
        deviation,
        lambda_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forces::zero_field;
    use crate::geometry::{Covector, Vector};

    fn line(n: usize, t_end: f64) -> Trajectory {
        let times: Vec<f64> = (0..=n).map(|i| t_end * i as f64 / n as f64).collect();
        Trajectory::from_fn(&times, |t| {
            (Vector::from([1.0, t]), Vector::from([0.0, 1.0]), Vector::from([0.0, 0.0]))
        })
        .unwrap()
    }

    #[test]
    fn appell_time_examples() {
        let circle = Screen::unit_sphere(2);
        // on the screen: τ = t
        let times: Vec<f64> = (0..=100).map(|i| 0.03 * i as f64).collect();
        let arc = Trajectory::from_fn(&times, |t| {
            (
                Vector::from([t.cos(), t.sin()]),
                Vector::from([-t.sin(), t.cos()]),
                Vector::from([-t.cos(), -t.sin()]),
            )
        })
        .unwrap();
        for (tau, t) in appell_time(&arc, &circle).unwrap().iter().zip(&times) {
            assert!((tau - t).abs() <= 1e-12);
        }

        // radial ray: τ = t/(1+t)
        let q0 = Vector::from([0.6, 0.8]);
        let times: Vec<f64> = (0..=200).map(|i| 0.01 * i as f64).collect();
        let ray = Trajectory::from_fn(&times, |t| (q0.scaled(1.0 + t), q0.clone(), Vector::zeros(2))).unwrap();
        for (tau, t) in appell_time(&ray, &circle).unwrap().iter().zip(&times) {
            assert!((tau - t / (1.0 + t)).abs() <= 1e-10);
        }

        // free line onto the circle: τ = arctan t
        let l = line(400, 4.0);
        for (tau, s) in appell_time(&l, &circle).unwrap().iter().zip(l.samples()) {
            assert!((tau - s.t.atan()).abs() <= 1e-10);
        }
        // widely spaced samples are refined by panel bisection
        let sparse = line(3, 30.0);
        for (tau, s) in appell_time(&sparse, &circle).unwrap().iter().zip(sparse.samples()) {
            assert!((tau - s.t.atan()).abs() <= 1e-12);
        }
    }

    #[test]
    fn tau_channel_is_preferred() {
        let circle = Screen::unit_sphere(2);
        let s0 = PhaseState::new(0.0, Vector::from([1.0, 0.0]), Vector::from([0.0, 1.0])).unwrap();
        let tracker = AppellTracker {
            screen: circle.clone(),
            tau_end: None,
        };
        let tr = integrate_free_tracked(&zero_field(2), &s0, 3.0, &IntegratorOptions::default(), Some(&tracker))
            .unwrap();
        let tau = appell_time(&tr, &circle).unwrap();
        assert_eq!(tau.as_slice(), tr.channel(Channel::Tau).unwrap());
        for (tau, s) in tau.iter().zip(tr.samples()) {
            assert!((tau - s.t.atan()).abs() <= 1e-10);
        }
    }

    #[test]
    fn project_line_onto_circle() {
        let circle = Screen::unit_sphere(2);
        let pr = project_trajectory(&line(400, 4.0), &circle).unwrap();
        for s in pr.path.samples() {
            let tau = s.t;
            assert!(s.q.distance(&Vector::from([tau.cos(), tau.sin()])) <= 1e-10);
            assert!(s.p.distance(&Vector::from([-tau.sin(), tau.cos()])) <= 1e-10);
            assert!((circle.h(&s.q).unwrap() - 1.0).abs() <= 1e-12);
            assert!(circle.dh(&s.q).unwrap().at(&s.p).abs() <= 1e-10);
        }
    }

    #[test]
    fn project_ray_collapses() {
        let circle = Screen::unit_sphere(2);
        let q0 = Vector::from([0.6, 0.8]);
        let times: Vec<f64> = (0..=20).map(|i| 0.1 * i as f64).collect();
        let ray = Trajectory::from_fn(&times, |t| (q0.scaled(1.0 + t), q0.clone(), Vector::zeros(2))).unwrap();
        let pr = project_trajectory(&ray, &circle).unwrap();
        for s in pr.path.samples() {
            assert!(s.q.distance(&q0) <= 1e-15);
            assert!(s.p.norm() <= 1e-15);
        }
    }

    #[test]
    fn lambda_from_h_examples() {
        let circle = Screen::unit_sphere(2);
        for l in lambda_from_h(&line(50, 5.0), &zero_field(2), &circle).unwrap() {
            assert!((l + 1.0).abs() <= 1e-12);
        }
        let flat = Screen::linear(Covector::from([1.0, 0.0])).unwrap();
        for l in lambda_from_h(&line(50, 5.0), &zero_field(2), &flat).unwrap() {
            assert_eq!(l, 0.0);
        }
    }

    #[test]
    fn comparison_examples() {
        let l = line(100, 2.0);
        let pr = project_trajectory(&l, &Screen::unit_sphere(2)).unwrap();
        let d = compare_trajectories(&pr, &pr.path, None).unwrap();
        assert_eq!((d.position, d.velocity), (0.0, 0.0));

        let sys = ConstrainedSystem::central(zero_field(2), Screen::unit_sphere(2)).unwrap();
        let run = integrate_constrained(&sys, pr.path.first(), 1.2, &IntegratorOptions::default()).unwrap();
        let d = compare_trajectories(&pr, &run, None).unwrap();
        assert!(d.position <= 1e-8 && d.velocity <= 1e-8, "{d:?}");

        let shifted = PhaseState::new(0.0, Vector::from([0.0, 1.0]), Vector::from([-1.0, 0.0])).unwrap();
        let other = integrate_constrained(&sys, &shifted, 1.0, &IntegratorOptions::default()).unwrap();
        assert!(matches!(
            compare_trajectories(&pr, &other, None),
            Err(Error::InitialMismatch { .. })
        ));
        assert!(matches!(
            compare_paths(&pr.path, &run, Some((5.0, 6.0))),
            Err(Error::NoOverlap { .. })
        ));
    }

    #[test]
    fn free_line_reduction() {
        let s0 = PhaseState::new(0.0, Vector::from([1.0, 0.0]), Vector::from([0.0, 1.0])).unwrap();
        let rep = reduction_check(
            &zero_field(2),
            &Screen::unit_sphere(2),
            &s0,
            1.0,
            100.0,
            &IntegratorOptions::default(),
        )
        .unwrap();
        assert!(rep.deviation.position <= 1e-9, "{:?}", rep.deviation);
        assert!(rep.lambda_gap <= 1e-9);
    }
}
