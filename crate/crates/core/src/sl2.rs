//! Phase-space vector fields of a second-order system and numerical checks
//! of their bracket relations.
//!
//! On `(q, p)` space, with `f` the force field:
//!
//! ```text
//! X = (p, f(q))    Y = (q, −p)    Z = (0, q)    Y_β = (q, β p)
//! ```
//!
//! For `f` of degree −3 these satisfy `[X,Y] = 2X`, `[Y,Z] = 2Z`,
//! `[Z,X] = Y`; for degree `α`, `[X,Y_β] = (1−β) X` with `2β = α + 1`.
//! Brackets use `[F,H](x) = J_H(x)·F(x) − J_F(x)·H(x)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::forces::ForceField;
use crate::geometry::Vector;

/// A point of phase space.
pub type PhasePoint = (Vector, Vector);

type PhaseFn = dyn Fn(&Vector, &Vector) -> Result<PhasePoint> + Send + Sync;

#[derive(Clone)]
pub struct PhaseVectorField {
    pub label: String,
    dim: usize,
    eval: Arc<PhaseFn>,
}

impl fmt::Debug for PhaseVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhaseVectorField")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .finish()
    }
}

impl PhaseVectorField {
    pub fn new<F>(dim: usize, label: impl Into<String>, eval: F) -> Self
    where
        F: Fn(&Vector, &Vector) -> Result<PhasePoint> + Send + Sync + 'static,
    {
        PhaseVectorField {
            label: label.into(),
            dim,
            eval: Arc::new(eval),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, q: &Vector, p: &Vector) -> Result<PhasePoint> {
        for v in [q, p] {
            if v.dim() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: v.dim(),
                });
            }
        }
        (self.eval)(q, p)
    }
}

/// The dynamics field `X`, the scaling field `Y` and the vertical field `Z`.
pub fn make_xyz(field: &ForceField) -> (PhaseVectorField, PhaseVectorField, PhaseVectorField) {
    let n = field.dim();
    let f = field.clone();
    let x = PhaseVectorField::new(n, "X", move |q, p| Ok((p.clone(), f.evaluate(q)?)));
    (x, y_beta(n, -1.0), PhaseVectorField::new(n, "Z", |q, _| Ok((Vector::zeros(q.dim()), q.clone()))))
}

/// `Y_β = (q, β p)`; `Y_{−1}` is `Y`.
pub fn y_beta(dim: usize, beta: f64) -> PhaseVectorField {
    let label = if beta == -1.0 { "Y".to_string() } else { format!("Y_{beta}") };
    PhaseVectorField::new(dim, label, move |q, p| Ok((q.clone(), p.scaled(beta))))
}

/// `1e-5 · max(1, ‖(q,p)‖)`.
pub fn default_phase_step(q: &Vector, p: &Vector) -> f64 {
    1e-5 * (q.dot(q) + p.dot(p)).sqrt().max(1.0)
}

/// `J_F(x)·v` by a central difference along the unit vector of `v`.
fn directional(field: &PhaseVectorField, x: &PhasePoint, v: &PhasePoint, step: f64) -> Result<PhasePoint> {
    let norm = (v.0.dot(&v.0) + v.1.dot(&v.1)).sqrt();
    if norm == 0.0 {
        let n = x.0.dim();
        return Ok((Vector::zeros(n), Vector::zeros(n)));
    }
    let e = step / norm;
    let plus = field.eval(&x.0.add_scaled(e, &v.0), &x.1.add_scaled(e, &v.1))?;
    let minus = field.eval(&x.0.add_scaled(-e, &v.0), &x.1.add_scaled(-e, &v.1))?;
    let s = norm / (2.0 * step);
    Ok(((&plus.0 - &minus.0).scaled(s), (&plus.1 - &minus.1).scaled(s)))
}

/// `[F,H](x) = J_H(x)·F(x) − J_F(x)·H(x)` by central differences.
pub fn lie_bracket(f: &PhaseVectorField, h: &PhaseVectorField, x: &PhasePoint, step: f64) -> Result<PhasePoint> {
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!("fd step must be positive, got {step}")));
    }
    let fx = f.eval(&x.0, &x.1)?;
    let hx = h.eval(&x.0, &x.1)?;
    let a = directional(h, x, &fx, step)?;
    let b = directional(f, x, &hx, step)?;
    Ok((&a.0 - &b.0, &a.1 - &b.1))
}

fn residual(bracket: &PhasePoint, coeff: f64, target: &PhasePoint) -> f64 {
    let dq = bracket.0.add_scaled(-coeff, &target.0);
    let dp = bracket.1.add_scaled(-coeff, &target.1);
    (dq.dot(&dq) + dp.dot(&dp)).sqrt()
}

/// Largest bracket residuals over a set of probe points.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Sl2Report {
    /// `‖[X,Y] − 2X‖`
    pub xy: f64,
    /// `‖[Y,Z] − 2Z‖`
    pub yz: f64,
    /// `‖[Z,X] − Y‖`
    pub zx: f64,
}

impl Sl2Report {
    pub fn max(&self) -> f64 {
        self.xy.max(self.yz).max(self.zx)
    }
}

/// The three bracket residuals at a single phase point.
pub fn sl2_residuals(field: &ForceField, x: &PhasePoint, step: Option<f64>) -> Result<Sl2Report> {
    let (xf, yf, zf) = make_xyz(field);
    let step = step.unwrap_or_else(|| default_phase_step(&x.0, &x.1));
    let xv = xf.eval(&x.0, &x.1)?;
    let yv = yf.eval(&x.0, &x.1)?;
    let zv = zf.eval(&x.0, &x.1)?;
    Ok(Sl2Report {
        xy: residual(&lie_bracket(&xf, &yf, x, step)?, 2.0, &xv),
        yz: residual(&lie_bracket(&yf, &zf, x, step)?, 2.0, &zv),
        zx: residual(&lie_bracket(&zf, &xf, x, step)?, 1.0, &yv),
    })
}

/// Maximum bracket residuals over `points`. With `step = None` each point
/// uses [`default_phase_step`].
pub fn verify_sl2(field: &ForceField, points: &[PhasePoint], step: Option<f64>) -> Result<Sl2Report> {
    let mut report = Sl2Report::default();
    for x in points {
        let r = sl2_residuals(field, x, step)?;
        report.xy = report.xy.max(r.xy);
        report.yz = report.yz.max(r.yz);
        report.zx = report.zx.max(r.zx);
    }
    Ok(report)
}

/// `max ‖[X,Y_β] − (1−β)X‖` over `points`, with `β = (α+1)/2` for the
/// declared degree `α` of the field.
pub fn verify_beta(field: &ForceField, points: &[PhasePoint], step: Option<f64>) -> Result<f64> {
    let beta = 0.5 * (field.degree() + 1.0);
    let (xf, _, _) = make_xyz(field);
    let yb = y_beta(field.dim(), beta);
    let mut worst: f64 = 0.0;
    for x in points {
        let step = step.unwrap_or_else(|| default_phase_step(&x.0, &x.1));
        let b = lie_bracket(&xf, &yb, x, step)?;
        worst = worst.max(residual(&b, 1.0 - beta, &xf.eval(&x.0, &x.1)?));
    }
    Ok(worst)
}
