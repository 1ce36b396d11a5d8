//! Screens: hypersurfaces `h(q) = 1` cut out by a positively 1-homogeneous
//! function `h`, and central projection onto them.

use crate::error::{Error, Result};
use crate::geometry::{Covector, SymForm, Vector};

/// Tolerance on `|h(q) − 1|` accepted by operations that need a point on
/// the screen.
pub const ON_SCREEN_TOL: f64 = 1e-8;

/// A positively 1-homogeneous screen function.
#[derive(Clone, Debug, PartialEq)]
pub enum Screen {
    /// `h(q) = ℓ(q)` on the half-space `ℓ(q) > 0`.
    Linear(Covector),
    /// `h(q) = √⟨Cq,q⟩` with `C` positive definite.
    Quadric(SymForm),
}

/// Consistency residuals of a screen at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScreenResiduals {
    /// `|Dh(q)[q] − h(q)|`
    pub euler: f64,
    /// `|Dh(q)[v] − FD|`
    pub first: f64,
    /// `|D²h(q)(v,v) − FD|`
    pub second: f64,
}

impl Screen {
    pub fn linear(ell: Covector) -> Result<Screen> {
        if ell.is_zero() {
            return Err(Error::InvalidArgument("linear screen needs a nonzero covector".into()));
        }
        Ok(Screen::Linear(ell))
    }

    pub fn quadric(c: SymForm) -> Result<Screen> {
        if !c.spd_checked() {
            return Err(Error::InvalidArgument(
                "quadric screen needs a certified positive definite form".into(),
            ));
        }
        Ok(Screen::Quadric(c))
    }

    /// The unit sphere of the standard inner product.
    pub fn unit_sphere(dim: usize) -> Screen {
        Screen::Quadric(SymForm::identity(dim))
    }

    pub fn dim(&self) -> usize {
        match self {
            Screen::Linear(l) => l.dim(),
            Screen::Quadric(c) => c.dim(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Screen::Linear(_) => "linear",
            Screen::Quadric(_) => "quadric",
        }
    }

    fn raw_h(&self, q: &Vector) -> f64 {
        match self {
            Screen::Linear(l) => l.at(q),
            Screen::Quadric(c) => c.quad(q).max(0.0).sqrt(),
        }
    }

    pub fn in_domain(&self, q: &Vector) -> bool {
        q.dim() == self.dim() && self.raw_h(q) > 0.0
    }

    fn check(&self, q: &Vector) -> Result<f64> {
        if q.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: q.dim(),
            });
        }
        let h = self.raw_h(q);
        if !(h > 0.0) {
            return Err(Error::OutsideDomain(format!(
                "{} screen: h(q) = {h} at q = {q:?}",
                self.label()
            )));
        }
        Ok(h)
    }

    pub fn h(&self, q: &Vector) -> Result<f64> {
        self.check(q)
    }

    /// `Dh(q)`, homogeneous of degree 0.
    pub fn dh(&self, q: &Vector) -> Result<Covector> {
        let h = self.check(q)?;
        Ok(match self {
            Screen::Linear(l) => l.clone(),
            Screen::Quadric(c) => c.lower(q).scaled(1.0 / h),
        })
    }

    /// `D²h(q)(u, v)`, homogeneous of degree −1.
    pub fn d2h(&self, q: &Vector, u: &Vector, v: &Vector) -> Result<f64> {
        let h = self.check(q)?;
        Ok(match self {
            Screen::Linear(_) => 0.0,
            Screen::Quadric(c) => {
                c.bilinear(u, v) / h - c.bilinear(q, u) * c.bilinear(q, v) / (h * h * h)
            }
        })
    }

    /// Central projection `q / h(q)` onto the screen.
    pub fn project_point(&self, q: &Vector) -> Result<Vector> {
        let h = self.check(q)?;
        Ok(Vector::new(q.iter().map(|x| x / h).collect()))
    }

    /// Remove the radial component of `v` at a point `q` of the screen:
    /// `v − Dh(q)[v] · q`.
    pub fn tangent_project(&self, q: &Vector, v: &Vector) -> Result<Vector> {
        let h = self.check(q)?;
        if (h - 1.0).abs() > ON_SCREEN_TOL {
            return Err(Error::OffScreen { residual: (h - 1.0).abs() });
        }
        if v.dim() != q.dim() {
            return Err(Error::DimensionMismatch {
                expected: q.dim(),
                found: v.dim(),
            });
        }
        let dh = self.dh(q)?;
        // Dh(q)[q] = h(q), so dividing by h makes the result exactly tangent
        // even with the small off-screen slack allowed above.
        Ok(v.add_scaled(-dh.at(v) / h, q))
    }

    /// Euler and finite-difference residuals at `q` in direction `v`.
    pub fn residuals(&self, q: &Vector, v: &Vector, step: f64) -> Result<ScreenResiduals> {
        let h = self.check(q)?;
        let dh = self.dh(q)?;
        let euler = (dh.at(q) - h).abs();
        let plus = q.add_scaled(step, v);
        let minus = q.add_scaled(-step, v);
        let fd1 = (self.h(&plus)? - self.h(&minus)?) / (2.0 * step);
        let first = (dh.at(v) - fd1).abs();
        let fd2 = (self.dh(&plus)?.at(v) - self.dh(&minus)?.at(v)) / (2.0 * step);
        let second = (self.d2h(q, v, v)? - fd2).abs();
        Ok(ScreenResiduals { euler, first, second })
    }
}

/// `(euler, Dh, D²h)` residuals of a screen at `q` in direction `v`.
pub fn screen_residuals(screen: &Screen, q: &Vector, v: &Vector, step: f64) -> Result<ScreenResiduals> {
    screen.residuals(q, v, step)
}
