use std::collections::BTreeMap;
use std::fmt;

use crate::dynamics::IntegratorOptions;
use crate::error::{Error, Result};
use crate::geometry::Vector;
use crate::screens::Screen;

/// Position, velocity and the current time parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseState {
    pub t: f64,
    pub q: Vector,
    pub p: Vector,
}

impl PhaseState {
    pub fn new(t: f64, q: Vector, p: Vector) -> Result<Self> {
        if q.dim() != p.dim() {
            return Err(Error::DimensionMismatch {
                expected: q.dim(),
                found: p.dim(),
            });
        }
        Ok(PhaseState { t, q, p })
    }

    pub fn dim(&self) -> usize {
        self.q.dim()
    }
}

/// Auxiliary series recorded alongside a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Channel {
    Tau,
    H,
    Lambda,
    Energy,
    Eta,
}

impl Channel {
    pub const ALL: [Channel; 5] = [Channel::Tau, Channel::H, Channel::Lambda, Channel::Energy, Channel::Eta];

    pub fn name(self) -> &'static str {
        match self {
            Channel::Tau => "tau",
            Channel::H => "h",
            Channel::Lambda => "lambda",
            Channel::Energy => "energy",
            Channel::Eta => "eta",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Provenance of a trajectory.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryMeta {
    pub description: String,
    pub options: Option<IntegratorOptions>,
    pub seed: Option<u64>,
    /// Screen whose Appell time is stored in the `tau` channel.
    pub tau_screen: Option<Screen>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

/// Time-ordered phase samples with their accelerations and auxiliary channels.
///
/// Accelerations are kept so that resampling can use quintic Hermite
/// interpolation, which is exact for quintics and keeps interpolation error
/// far below integration tolerances at natural step sizes.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    samples: Vec<PhaseState>,
    accel: Vec<Vector>,
    channels: BTreeMap<Channel, Vec<f64>>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn new(samples: Vec<PhaseState>, accel: Vec<Vector>) -> Result<Self> {
        if samples.len() != accel.len() {
            return Err(Error::InvalidArgument(format!(
                "{} samples but {} accelerations",
                samples.len(),
                accel.len()
            )));
        }
        if samples.is_empty() {
            return Err(Error::InvalidArgument("empty trajectory".into()));
        }
        let dim = samples[0].dim();
        for (s, a) in samples.iter().zip(&accel) {
            if s.dim() != dim || a.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: s.dim().max(a.dim()),
                });
            }
        }
        if samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::InvalidArgument("time parameter must be strictly increasing".into()));
        }
        Ok(Trajectory {
            samples,
            accel,
            channels: BTreeMap::new(),
            meta: TrajectoryMeta::default(),
        })
    }

    /// Build from a closed-form curve sampled at `times`.
    pub fn from_fn<F>(times: &[f64], curve: F) -> Result<Self>
    where
        F: Fn(f64) -> (Vector, Vector, Vector),
    {
        let mut samples = Vec::with_capacity(times.len());
        let mut accel = Vec::with_capacity(times.len());
        for &t in times {
            let (q, p, a) = curve(t);
            samples.push(PhaseState::new(t, q, p)?);
            accel.push(a);
        }
        Self::new(samples, accel)
    }

    pub(crate) fn push(&mut self, state: PhaseState, accel: Vector) {
        self.samples.push(state);
        self.accel.push(accel);
    }

    pub(crate) fn empty() -> Self {
        Trajectory {
            samples: Vec::new(),
            accel: Vec::new(),
            channels: BTreeMap::new(),
            meta: TrajectoryMeta::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples[0].dim()
    }

    pub fn samples(&self) -> &[PhaseState] {
        &self.samples
    }

    pub fn accelerations(&self) -> &[Vector] {
        &self.accel
    }

    pub fn first(&self) -> &PhaseState {
        &self.samples[0]
    }

    pub fn last(&self) -> &PhaseState {
        self.samples.last().expect("trajectory is never empty")
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn span(&self) -> (f64, f64) {
        (self.first().t, self.last().t)
    }

    pub fn channel(&self, c: Channel) -> Option<&[f64]> {
        self.channels.get(&c).map(|v| v.as_slice())
    }

    pub fn channels(&self) -> impl Iterator<Item = (Channel, &[f64])> {
        self.channels.iter().map(|(c, v)| (*c, v.as_slice()))
    }

    pub fn set_channel(&mut self, c: Channel, values: Vec<f64>) -> Result<()> {
        if values.len() != self.samples.len() {
            return Err(Error::InvalidArgument(format!(
                "channel {c} has {} values for {} samples",
                values.len(),
                self.samples.len()
            )));
        }
        self.channels.insert(c, values);
        Ok(())
    }

    /// Fill a channel by evaluating `f` at every sample.
    pub fn record_channel<F>(&mut self, c: Channel, f: F) -> Result<()>
    where
        F: Fn(&PhaseState) -> Result<f64>,
    {
        let values = self.samples.iter().map(f).collect::<Result<Vec<_>>>()?;
        self.set_channel(c, values)
    }

    pub(crate) fn channel_mut(&mut self, c: Channel) -> &mut Vec<f64> {
        self.channels.entry(c).or_default()
    }

    /// Largest `|x(t) − x(0)|` over a channel.
    pub fn channel_drift(&self, c: Channel) -> Option<f64> {
        let v = self.channel(c)?;
        let x0 = *v.first()?;
        Some(v.iter().fold(0.0, |m, x| m.max((x - x0).abs())))
    }

    /// Index `i` with `t_i <= t <= t_{i+1}`.
    fn bracket(&self, t: f64) -> Result<usize> {
        let (t0, t1) = self.span();
        if !(t >= t0 && t <= t1) {
            return Err(Error::InvalidArgument(format!("t = {t} outside [{t0}, {t1}]")));
        }
        let i = self.samples.partition_point(|s| s.t <= t);
        Ok(i.saturating_sub(1).min(self.samples.len().saturating_sub(2)))
    }

    /// Position and velocity at parameter `t` by quintic Hermite interpolation.
    pub fn interpolate(&self, t: f64) -> Result<(Vector, Vector)> {
        if self.samples.len() == 1 {
            let s = &self.samples[0];
            if t == s.t {
                return Ok((s.q.clone(), s.p.clone()));
            }
        }
        let i = self.bracket(t)?;
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        if t == a.t {
            return Ok((a.q.clone(), a.p.clone()));
        }
        if t == b.t {
            return Ok((b.q.clone(), b.p.clone()));
        }
        Ok(quintic_hermite(
            a.t,
            (&a.q, &a.p, &self.accel[i]),
            b.t,
            (&b.q, &b.p, &self.accel[i + 1]),
            t,
        ))
    }
}

/// Quintic Hermite interpolation from positions, velocities and
/// accelerations at both ends. Returns position and velocity.
pub fn quintic_hermite(
    t0: f64,
    left: (&Vector, &Vector, &Vector),
    t1: f64,
    right: (&Vector, &Vector, &Vector),
    t: f64,
) -> (Vector, Vector) {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let (s2, s3) = (s * s, s * s * s);
    let (s4, s5) = (s3 * s, s3 * s2);
    let w = [
        1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5,
        s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5,
        0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5,
        0.5 * s3 - s4 + 0.5 * s5,
        -4.0 * s3 + 7.0 * s4 - 3.0 * s5,
        10.0 * s3 - 15.0 * s4 + 6.0 * s5,
    ];
    let dw = [
        -30.0 * s2 + 60.0 * s3 - 30.0 * s4,
        1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4,
        s - 4.5 * s2 + 6.0 * s3 - 2.5 * s4,
        1.5 * s2 - 4.0 * s3 + 2.5 * s4,
        -12.0 * s2 + 28.0 * s3 - 15.0 * s4,
        30.0 * s2 - 60.0 * s3 + 30.0 * s4,
    ];
    let (x0, v0, a0) = left;
    let (x1, v1, a1) = right;
    let n = x0.dim();
    let mut pos = Vec::with_capacity(n);
    let mut vel = Vec::with_capacity(n);
    for k in 0..n {
        let c = [x0[k], h * v0[k], h * h * a0[k], h * h * a1[k], h * v1[k], x1[k]];
        pos.push(c.iter().zip(&w).map(|(c, w)| c * w).sum());
        vel.push(c.iter().zip(&dw).map(|(c, w)| c * w).sum::<f64>() / h);
    }
    (Vector::new(pos), Vector::new(vel))
}
