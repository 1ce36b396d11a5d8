//! Explicit Runge-Kutta stepping for first-order systems `y' = F(t, y)`.
//!
//! Two methods: classical fixed-step RK4 and the Dormand-Prince 5(4)
//! embedded pair with standard step-size control. After every accepted step
//! a caller hook sees (and may modify) the new state; this is where
//! constraint stabilization, domain checks and sample recording happen.

use crate::dynamics::{IntegratorOptions, Method};
use crate::error::{Error, Result};

/// Returned by the post-step hook.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Flow {
    Continue,
    Stop,
}

#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Stats {
    pub accepted: usize,
    pub rejected: usize,
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// 5th-order weights equal the last row of A; E = b5 − b4.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// Integrate from `(t0, y)` to `t_end`. `y` holds the final state on return.
pub(crate) fn integrate<R, H>(
    mut rhs: R,
    t0: f64,
    y: &mut Vec<f64>,
    t_end: f64,
    opts: &IntegratorOptions,
    mut on_accept: H,
) -> Result<Stats>
where
    R: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    H: FnMut(f64, &mut [f64]) -> Result<Flow>,
{
    opts.validate()?;
    if !(t_end > t0) {
        return Err(Error::InvalidArgument(format!("t_end = {t_end} must exceed t0 = {t0}")));
    }
    match opts.method {
        Method::Rk4 => rk4(&mut rhs, t0, y, t_end, opts, &mut on_accept),
        Method::DormandPrince => dopri5(&mut rhs, t0, y, t_end, opts, &mut on_accept),
    }
}

fn rk4<R, H>(rhs: &mut R, t0: f64, y: &mut [f64], t_end: f64, opts: &IntegratorOptions, on_accept: &mut H) -> Result<Stats>
where
    R: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    H: FnMut(f64, &mut [f64]) -> Result<Flow>,
{
    let n = y.len();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut stats = Stats::default();
    let mut t = t0;
    while t < t_end {
        if stats.accepted >= opts.max_steps {
            return Err(Error::StepLimit { t, max_steps: opts.max_steps });
        }
        let mut h = opts.dt;
        // absorb a tiny remainder into the last step
        let last = t + h >= t_end || t_end - (t + h) < 1e-9 * h;
        if last {
            h = t_end - t;
        }
        let mid = t + 0.5 * h;
        rhs(t, y, &mut k1).map_err(|e| e.at_time(t))?;
        axpy(&mut tmp, y, 0.5 * h, &k1);
        rhs(mid, &tmp, &mut k2).map_err(|e| e.at_time(mid))?;
        axpy(&mut tmp, y, 0.5 * h, &k2);
        rhs(mid, &tmp, &mut k3).map_err(|e| e.at_time(mid))?;
        axpy(&mut tmp, y, h, &k3);
        rhs(t + h, &tmp, &mut k4).map_err(|e| e.at_time(t + h))?;
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t = if last { t_end } else { t + h };
        stats.accepted += 1;
        if on_accept(t, y)? == Flow::Stop {
            break;
        }
    }
    Ok(stats)
}

fn axpy(out: &mut [f64], y: &[f64], a: f64, x: &[f64]) {
    for ((o, yi), xi) in out.iter_mut().zip(y).zip(x) {
        *o = yi + a * xi;
    }
}

/// Largest component of the error scaled by `atol + rtol·|y|`, so that an
/// accepted step keeps every component within its tolerance.
fn error_norm(y: &[f64], y_new: &[f64], err: &[f64], opts: &IntegratorOptions) -> f64 {
    y.iter()
        .zip(y_new)
        .zip(err)
        .map(|((a, b), e)| (e / (opts.atol + opts.rtol * a.abs().max(b.abs()))).abs())
        .fold(0.0, f64::max)
}

fn dopri5<R, H>(rhs: &mut R, t0: f64, y: &mut [f64], t_end: f64, opts: &IntegratorOptions, on_accept: &mut H) -> Result<Stats>
where
    R: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    H: FnMut(f64, &mut [f64]) -> Result<Flow>,
{
    let n = y.len();
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut stats = Stats::default();
    let mut t = t0;
    let mut h = opts.initial_step.min(t_end - t0);
    let max_step = opts.max_step.unwrap_or(f64::INFINITY);

    while t < t_end {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::StepLimit { t, max_steps: opts.max_steps });
        }
        h = h.min(max_step);
        let last = t + h >= t_end || t_end - (t + h) < 1e-12 * t_end.abs().max(1.0);
        if last {
            h = t_end - t;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepSizeUnderflow { t, h });
        }

        rhs(t, y, &mut k[0]).map_err(|e| e.at_time(t))?;
        for s in 1..7 {
            let (done, rest) = k.split_at_mut(s);
            for (i, out) in tmp.iter_mut().enumerate() {
                *out = y[i] + h * done.iter().zip(&A[s]).map(|(kj, a)| a * kj[i]).sum::<f64>();
            }
            rhs(t + C[s] * h, &tmp, &mut rest[0]).map_err(|e| e.at_time(t + C[s] * h))?;
        }
        // stage 7 was evaluated at the 5th-order solution
        y_new.copy_from_slice(&tmp);
        for i in 0..n {
            err[i] = h * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>();
        }
        let en = error_norm(y, &y_new, &err, opts);

        if en <= 1.0 {
            t = if last { t_end } else { t + h };
            y.copy_from_slice(&y_new);
            stats.accepted += 1;
            let factor = if en == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * en.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            h *= factor;
            if on_accept(t, y)? == Flow::Stop {
                break;
            }
        } else {
            stats.rejected += 1;
            h *= (SAFETY * en.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
        }
    }
    Ok(stats)
}
