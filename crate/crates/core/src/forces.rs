//! Force fields on open semi-cones with a declared homogeneity degree.
//!
//! A [`ForceField`] is a cheap-to-clone handle around an evaluation closure,
//! a domain predicate and an optional analytic Jacobian. The degree is a
//! declared value; [`homogeneity_residual`] and [`euler_residual`] certify it.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{default_fd_step, fd_jacobian, Covector, LinOperator, SymForm, Vector};

type VecFn = dyn Fn(&Vector) -> Vector + Send + Sync;
type ScalarFn = dyn Fn(&Vector) -> f64 + Send + Sync;
type CovecFn = dyn Fn(&Vector) -> Covector + Send + Sync;
type JacFn = dyn Fn(&Vector) -> LinOperator + Send + Sync;
type Predicate = dyn Fn(&Vector) -> bool + Send + Sync;

/// Residual above which a potential's Euler identity raises a warning.
pub const POTENTIAL_EULER_WARN: f64 = 1e-6;

fn nonzero(q: &Vector) -> bool {
    q.iter().any(|&x| x != 0.0)
}

/// A vector field `f: Ω -> V`, positively homogeneous of a declared degree.
#[derive(Clone)]
pub struct ForceField {
    dim: usize,
    degree: f64,
    label: String,
    eval: Arc<VecFn>,
    domain: Arc<Predicate>,
    jacobian: Option<Arc<JacFn>>,
}

impl fmt::Debug for ForceField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ForceField")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("degree", &self.degree)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .finish()
    }
}

impl ForceField {
    /// A field defined on `V \ {0}`.
    pub fn new<F>(dim: usize, degree: f64, label: impl Into<String>, eval: F) -> Self
    where
        F: Fn(&Vector) -> Vector + Send + Sync + 'static,
    {
        ForceField {
            dim,
            degree,
            label: label.into(),
            eval: Arc::new(eval),
            domain: Arc::new(nonzero),
            jacobian: None,
        }
    }

    /// Replace the domain predicate. It must describe an open semi-cone.
    pub fn with_domain<P>(mut self, domain: P) -> Self
    where
        P: Fn(&Vector) -> bool + Send + Sync + 'static,
    {
        self.domain = Arc::new(domain);
        self
    }

    pub fn with_jacobian<J>(mut self, jac: J) -> Self
    where
        J: Fn(&Vector) -> LinOperator + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(jac));
        self
    }

    /// Override the declared degree without touching the evaluation.
    pub fn with_degree(mut self, degree: f64) -> Self {
        self.degree = degree;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> f64 {
        self.degree
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn in_domain(&self, q: &Vector) -> bool {
        q.dim() == self.dim && q.iter().all(|x| x.is_finite()) && (self.domain)(q)
    }

    /// `f(q)`, or a domain error when `q ∉ Ω`.
    pub fn evaluate(&self, q: &Vector) -> Result<Vector> {
        if q.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: q.dim(),
            });
        }
        if !self.in_domain(q) {
            return Err(Error::OutsideDomain(format!("{} at q = {:?}", self.label, q)));
        }
        Ok((self.eval)(q))
    }

    /// Analytic Jacobian when available, central differences otherwise.
    pub fn jacobian(&self, q: &Vector) -> Result<LinOperator> {
        match &self.jacobian {
            Some(jac) => {
                self.evaluate(q)?;
                Ok(jac(q))
            }
            None => self.fd_jacobian(q, default_fd_step(q)),
        }
    }

    pub fn fd_jacobian(&self, q: &Vector, step: f64) -> Result<LinOperator> {
        fd_jacobian(|x| self.evaluate(x), q, step)
    }
}

/// `f ≡ 0`, homogeneous of every degree; declared as −3.
pub fn zero_field(dim: usize) -> ForceField {
    ForceField::new(dim, -3.0, "zero", move |_| Vector::zeros(dim))
        .with_domain(|_| true)
        .with_jacobian(move |_| LinOperator::zeros(dim))
}

/// `f(q) = M q`, degree 1.
pub fn linear_field(m: LinOperator) -> ForceField {
    let jac = m.clone();
    ForceField::new(m.dim(), 1.0, "linear", move |q| m.apply(q))
        .with_domain(|_| true)
        .with_jacobian(move |_| jac.clone())
}

/// Attractive inverse-square field `f(q) = −μ q / ‖q‖³`, degree −2.
pub fn kepler_field(dim: usize, mu: f64) -> ForceField {
    ForceField::new(dim, -2.0, "kepler", move |q| {
        let r = q.norm();
        q.scaled(-mu / (r * r * r))
    })
    .with_jacobian(move |q| {
        let r = q.norm();
        let r2 = r * r;
        LinOperator::identity(q.dim())
            .scaled(-mu / (r2 * r))
            .add_outer(3.0 * mu / (r2 * r2 * r), q, q)
    })
}

/// `‖s^(−degree) f(sq) − f(q)‖ / max(1, ‖f(q)‖)`.
pub fn homogeneity_residual(field: &ForceField, q: &Vector, s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {s}")));
    }
    let f = field.evaluate(q)?;
    let fs = field.evaluate(&q.scaled(s))?;
    let diff = fs.scaled(s.powf(-field.degree())) - f.clone();
    Ok(diff.norm() / f.norm().max(1.0))
}

/// `‖Df(q) q − degree · f(q)‖`.
pub fn euler_residual(field: &ForceField, q: &Vector) -> Result<f64> {
    let f = field.evaluate(q)?;
    let jq = field.jacobian(q)?.apply(q);
    Ok(jq.add_scaled(-field.degree(), &f).norm())
}

/// The field `f(q) = η M q / ⟨Gq,q⟩²` with `M = G⁻¹A`, together with the
/// derived data `M` and `B = G A⁻¹ G`.
#[derive(Clone, Debug)]
pub struct BradenField {
    pub g: SymForm,
    pub a: SymForm,
    pub m: LinOperator,
    pub b: SymForm,
    pub scale: f64,
}

impl BradenField {
    pub fn new(g: &SymForm, a: &SymForm, scale: f64) -> Result<Self> {
        if g.dim() != a.dim() {
            return Err(Error::DimensionMismatch {
                expected: g.dim(),
                found: a.dim(),
            });
        }
        if !g.spd_checked() || !a.spd_checked() {
            return Err(Error::InvalidArgument(
                "G and A must be certified positive definite".into(),
            ));
        }
        let m = g.inverse()?.compose(&a.to_operator());
        let a_inv = a.inverse()?;
        let g_op = g.to_operator();
        let b = SymForm::spd_from_operator(&g_op.compose(&a_inv).compose(&g_op))?;
        Ok(BradenField {
            g: g.clone(),
            a: a.clone(),
            m,
            b,
            scale,
        })
    }

    /// Entrywise `max |GM − ᵗM G|`.
    pub fn symmetry_residual(&self) -> f64 {
        let gm = self.g.to_operator().compose(&self.m);
        gm.sub(&gm.transpose()).max_abs()
    }

    pub fn field(&self) -> ForceField {
        let (g, m, scale) = (self.g.clone(), self.m.clone(), self.scale);
        let (gj, mj) = (g.clone(), m.clone());
        let dom = g.clone();
        ForceField::new(g.dim(), -3.0, "braden", move |q| {
            let gq = g.quad(q);
            m.apply(q).scaled(scale / (gq * gq))
        })
        .with_domain(move |q| dom.quad(q) > 0.0)
        .with_jacobian(move |q| {
            // η [ M / g² − 4 (Mq)(Gq)ᵀ / g³ ]
            let gq = gj.quad(q);
            let mq = mj.apply(q);
            let g_q = gj.apply(q);
            mj.scaled(scale / (gq * gq))
                .add_outer(-4.0 * scale / (gq * gq * gq), &mq, &g_q)
        })
    }
}

/// `f(q) = scale · M q / ⟨Gq,q⟩²`, degree −3, with analytic Jacobian.
pub fn braden_field(g: &SymForm, a: &SymForm, scale: f64) -> Result<ForceField> {
    Ok(BradenField::new(g, a, scale)?.field())
}

/// `f(q) = scale · M q · ⟨Gq,q⟩^((degree−1)/2)`, homogeneous of `degree`;
/// degree −3 gives the Braden field.
pub fn quadric_power_field(g: &SymForm, a: &SymForm, scale: f64, degree: f64) -> Result<ForceField> {
    let base = BradenField::new(g, a, scale)?;
    let k = 0.5 * (degree - 1.0);
    let (g, m) = (base.g, base.m);
    let (gj, mj) = (g.clone(), m.clone());
    let dom = g.clone();
    Ok(ForceField::new(g.dim(), degree, format!("quadric power {degree}"), move |q| {
        m.apply(q).scaled(scale * g.quad(q).powf(k))
    })
    .with_domain(move |q| dom.quad(q) > 0.0)
    .with_jacobian(move |q| {
        // scale [ M gᵏ + 2k gᵏ⁻¹ (Mq)(Gq)ᵀ ]
        let gq = gj.quad(q);
        mj.scaled(scale * gq.powf(k))
            .add_outer(2.0 * k * scale * gq.powf(k - 1.0), &mj.apply(q), &gj.apply(q))
    }))
}

/// A scalar function on a semi-cone, positively homogeneous of a declared
/// degree, with an optional analytic differential.
#[derive(Clone)]
pub struct Potential {
    dim: usize,
    degree: f64,
    label: String,
    value: Arc<ScalarFn>,
    gradient: Option<Arc<CovecFn>>,
    domain: Arc<Predicate>,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("degree", &self.degree)
            .finish()
    }
}

impl Potential {
    pub fn new<F>(dim: usize, degree: f64, label: impl Into<String>, value: F) -> Self
    where
        F: Fn(&Vector) -> f64 + Send + Sync + 'static,
    {
        Potential {
            dim,
            degree,
            label: label.into(),
            value: Arc::new(value),
            gradient: None,
            domain: Arc::new(nonzero),
        }
    }

    /// Attach the analytic differential `DU(q)`.
    pub fn with_differential<F>(mut self, du: F) -> Self
    where
        F: Fn(&Vector) -> Covector + Send + Sync + 'static,
    {
        self.gradient = Some(Arc::new(du));
        self
    }

    pub fn with_domain<P>(mut self, domain: P) -> Self
    where
        P: Fn(&Vector) -> bool + Send + Sync + 'static,
    {
        self.domain = Arc::new(domain);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> f64 {
        self.degree
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn has_differential(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn in_domain(&self, q: &Vector) -> bool {
        q.dim() == self.dim && (self.domain)(q)
    }

    pub fn value(&self, q: &Vector) -> Result<f64> {
        if !self.in_domain(q) {
            return Err(Error::OutsideDomain(format!("{} at q = {:?}", self.label, q)));
        }
        Ok((self.value)(q))
    }

    /// `DU(q)`: analytic if attached, central differences otherwise.
    pub fn differential(&self, q: &Vector) -> Result<Covector> {
        match &self.gradient {
            Some(du) => {
                self.value(q)?;
                Ok(du(q))
            }
            None => self.fd_differential(q),
        }
    }

    pub fn fd_differential(&self, q: &Vector) -> Result<Covector> {
        let h = default_fd_step(q);
        let n = q.dim();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let e = Vector::basis(n, i);
            let up = self.value(&q.add_scaled(h, &e))?;
            let down = self.value(&q.add_scaled(-h, &e))?;
            out.push((up - down) / (2.0 * h));
        }
        Ok(Covector::new(out))
    }

    /// `|DU(q)[q] − degree · U(q)| / max(1, |U(q)|)`.
    pub fn euler_residual(&self, q: &Vector) -> Result<f64> {
        let u = self.value(q)?;
        let du = self.differential(q)?;
        Ok((du.at(q) - self.degree * u).abs() / u.abs().max(1.0))
    }
}

/// `U(q) = k / ⟨Cq,q⟩`, degree −2.
pub fn inverse_quadratic_potential(c: &SymForm, k: f64) -> Potential {
    let (cv, cd, cdom) = (c.clone(), c.clone(), c.clone());
    Potential::new(c.dim(), -2.0, "inverse-quadratic", move |q| k / cv.quad(q))
        .with_differential(move |q| {
            let s = cd.quad(q);
            cd.lower(q).scaled(-2.0 * k / (s * s))
        })
        .with_domain(move |q| cdom.quad(q) > 0.0)
}

/// `U(q) = −½ η ⟨Gq,q⟩⁻¹`: the potential whose `B`-gradient is the Braden field.
pub fn braden_potential(g: &SymForm, scale: f64) -> Potential {
    let mut u = inverse_quadratic_potential(g, -0.5 * scale);
    u.label = "braden".into();
    u
}

/// `U(q) = ½ ⟨Aq,q⟩ / ⟨Gq,q⟩²`, degree −2: the homogeneous extension of the
/// quadratic potential from the `G`-sphere.
pub fn neumann_potential(g: &SymForm, a: &SymForm) -> Potential {
    let (gv, av) = (g.clone(), a.clone());
    let (gd, ad) = (g.clone(), a.clone());
    let gdom = g.clone();
    Potential::new(g.dim(), -2.0, "neumann", move |q| {
        let s = gv.quad(q);
        0.5 * av.quad(q) / (s * s)
    })
    .with_differential(move |q| {
        let s = gd.quad(q);
        let aq = ad.quad(q);
        let a_q = ad.apply(q);
        let g_q = gd.apply(q);
        let v = a_q.scaled(1.0 / (s * s)).add_scaled(-2.0 * aq / (s * s * s), &g_q);
        Covector::new(v.into_vec())
    })
    .with_domain(move |q| gdom.quad(q) > 0.0)
}

/// `U(q) = ½ k ⟨Cq,q⟩`, degree 2.
pub fn quadratic_potential(c: &SymForm, k: f64) -> Potential {
    let (cv, cd) = (c.clone(), c.clone());
    Potential::new(c.dim(), 2.0, "quadratic", move |q| 0.5 * k * cv.quad(q))
        .with_differential(move |q| cd.lower(q).scaled(k))
        .with_domain(|_| true)
}

/// How the gradient of a potential is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradientMode {
    Analytic,
    FiniteDifference,
}

/// A field `f = metric⁻¹ DU` together with the constructor's diagnostics.
#[derive(Clone, Debug)]
pub struct PotentialField {
    pub metric: SymForm,
    pub potential: Potential,
    pub mode: GradientMode,
    /// Euler-identity violations of `U` found at probe points.
    pub warnings: Vec<String>,
    field: ForceField,
}

impl PotentialField {
    pub fn field(&self) -> &ForceField {
        &self.field
    }

    pub fn into_field(self) -> ForceField {
        self.field
    }
}

fn probe_points(dim: usize) -> Vec<Vector> {
    let mut pts: Vec<Vector> = (0..dim).map(|i| Vector::basis(dim, i)).collect();
    pts.push(Vector::new(vec![1.0 / (dim as f64).sqrt(); dim]));
    pts.push(Vector::new(
        (0..dim).map(|i| if i % 2 == 0 { 0.8 } else { -0.6 }).collect(),
    ));
    pts
}

/// Gradient of `U` with respect to the inner product `metric`.
pub fn gradient_field(
    metric: &SymForm,
    potential: &Potential,
    mode: GradientMode,
) -> Result<PotentialField> {
    if metric.dim() != potential.dim() {
        return Err(Error::DimensionMismatch {
            expected: metric.dim(),
            found: potential.dim(),
        });
    }
    if !metric.spd_checked() {
        return Err(Error::InvalidArgument("metric must be certified positive definite".into()));
    }
    if mode == GradientMode::Analytic && !potential.has_differential() {
        return Err(Error::InvalidArgument(format!(
            "potential {} has no analytic differential",
            potential.label()
        )));
    }

    let mut warnings = Vec::new();
    for q in probe_points(potential.dim()) {
        if !potential.in_domain(&q) {
            continue;
        }
        let res = match mode {
            GradientMode::Analytic => potential.euler_residual(&q)?,
            GradientMode::FiniteDifference => {
                let u = potential.value(&q)?;
                let du = potential.fd_differential(&q)?;
                (du.at(&q) - potential.degree() * u).abs() / u.abs().max(1.0)
            }
        };
        if res > POTENTIAL_EULER_WARN {
            warnings.push(format!(
                "potential {} violates Euler's identity for degree {} at {:?}: residual {res:e}",
                potential.label(),
                potential.degree(),
                q
            ));
        }
    }

    let (m, u) = (metric.clone(), potential.clone());
    let dom = potential.clone();
    let field = ForceField::new(
        potential.dim(),
        potential.degree() - 1.0,
        format!("grad {}", potential.label()),
        move |q| {
            let du = match mode {
                GradientMode::Analytic => u.differential(q),
                GradientMode::FiniteDifference => u.fd_differential(q),
            }
            .expect("domain checked by the field");
            m.solve(&du.to_vector()).expect("metric is SPD")
        },
    )
    .with_domain(move |q| dom.in_domain(q));

    Ok(PotentialField {
        metric: metric.clone(),
        potential: potential.clone(),
        mode,
        warnings,
        field,
    })
}

/// Extension of a force field on the affine hyperplane `ℓ(q) = 1` to a field
/// on the half-space `ℓ(q) > 0`, homogeneous of degree −3.
///
/// The hyperplane is charted by dropping the coordinate `k` where `|ℓ_k|` is
/// largest. The base force `F(x)` is lifted to the tangent vector of the
/// hyperplane whose chart components are `F(x)`, so `ℓ(f) = 0` everywhere.
/// When `ℓ` is a coordinate functional the `k`-th component is simply 0.
#[derive(Clone, Debug)]
pub struct ProjectiveExtension {
    pub chart_axis: Covector,
    pub base: ForceField,
    axis: usize,
}

impl ProjectiveExtension {
    pub fn new(ell: &Covector, base: &ForceField) -> Result<Self> {
        if ell.is_zero() {
            return Err(Error::InvalidArgument("chart covector must be nonzero".into()));
        }
        if base.dim() + 1 != ell.dim() {
            return Err(Error::DimensionMismatch {
                expected: ell.dim() - 1,
                found: base.dim(),
            });
        }
        let axis = ell
            .as_slice()
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(bi, bv), (i, &x)| if x.abs() > bv { (i, x.abs()) } else { (bi, bv) })
            .0;
        Ok(ProjectiveExtension {
            chart_axis: ell.clone(),
            base: base.clone(),
            axis,
        })
    }

    /// Chart coordinates of a point on the hyperplane.
    pub fn chart(&self, q: &Vector) -> Vector {
        Vector::new(
            q.iter()
                .enumerate()
                .filter(|&(i, _)| i != self.axis)
                .map(|(_, &x)| x)
                .collect(),
        )
    }

    /// Inverse chart: the point of the hyperplane with chart coordinates `x`.
    pub fn embed(&self, x: &Vector) -> Vector {
        let ell = self.chart_axis.as_slice();
        let lk = ell[self.axis];
        let mut out = Vec::with_capacity(x.dim() + 1);
        let mut rest = 1.0;
        let mut it = x.iter();
        for (i, &li) in ell.iter().enumerate() {
            if i == self.axis {
                out.push(0.0);
            } else {
                let xi = *it.next().expect("chart dimension");
                rest -= li * xi;
                out.push(xi);
            }
        }
        out[self.axis] = rest / lk;
        Vector::new(out)
    }

    /// Tangent lift of a chart vector: the vector `w` with chart part `v` and
    /// `ℓ(w) = 0`.
    pub fn lift(&self, v: &Vector) -> Vector {
        let ell = self.chart_axis.as_slice();
        let mut out = Vec::with_capacity(v.dim() + 1);
        let mut s = 0.0;
        let mut it = v.iter();
        for (i, &li) in ell.iter().enumerate() {
            if i == self.axis {
                out.push(0.0);
            } else {
                let vi = *it.next().expect("chart dimension");
                s += li * vi;
                out.push(vi);
            }
        }
        out[self.axis] = -s / ell[self.axis];
        Vector::new(out)
    }

    fn lift_operator(&self, j: &LinOperator) -> Vec<Vec<f64>> {
        // rows of L·J where L is the (n+1)×n lift matrix
        let n = j.dim();
        let ell = self.chart_axis.as_slice();
        let lk = ell[self.axis];
        let others: Vec<usize> = (0..=n).filter(|&i| i != self.axis).collect();
        let mut rows = vec![vec![0.0; n]; n + 1];
        for (r, &i) in others.iter().enumerate() {
            rows[i] = (0..n).map(|c| j.get(r, c)).collect();
        }
        rows[self.axis] = (0..n)
            .map(|c| -others.iter().enumerate().map(|(r, &i)| ell[i] * j.get(r, c)).sum::<f64>() / lk)
            .collect();
        rows
    }

    pub fn field(&self) -> ForceField {
        let dim = self.chart_axis.dim();
        let this = self.clone();
        let dom = self.clone();
        let mut field = ForceField::new(dim, -3.0, format!("projective {}", self.base.label()), move |q| {
            let h = this.chart_axis.at(q);
            let x = this.chart(&q.scaled(1.0 / h));
            let fx = this.base.evaluate(&x).expect("domain checked by the field");
            this.lift(&fx).scaled(h.powi(-3))
        })
        .with_domain(move |q| {
            let h = dom.chart_axis.at(q);
            h > 0.0 && dom.base.in_domain(&dom.chart(&q.scaled(1.0 / h)))
        });
        if self.base.has_analytic_jacobian() {
            let this = self.clone();
            field = field.with_jacobian(move |q| {
                // f(q) = ℓ(q)^-3 L F(x(q)),  x(q) = P q / ℓ(q),  Dx = (P − x ℓᵀ)/ℓ
                let n = dim - 1;
                let h = this.chart_axis.at(q);
                let x = this.chart(&q.scaled(1.0 / h));
                let fx = this.base.evaluate(&x).expect("domain checked by the field");
                let jf = this.base.jacobian(&x).expect("domain checked by the field");
                let ljf = this.lift_operator(&jf);
                let ell = this.chart_axis.as_slice();
                let lf = this.lift(&fx);
                let mut out = LinOperator::zeros(dim);
                let others: Vec<usize> = (0..dim).filter(|&i| i != this.axis).collect();
                for i in 0..dim {
                    for c in 0..dim {
                        // (LJ_F · Dx)[i][c]
                        let mut s = 0.0;
                        for r in 0..n {
                            let p_rc = if others[r] == c { 1.0 } else { 0.0 };
                            s += ljf[i][r] * (p_rc - x[r] * ell[c]) / h;
                        }
                        let v = -3.0 * h.powi(-4) * lf[i] * ell[c] + h.powi(-3) * s;
                        out.set(i, c, v);
                    }
                }
                out
            });
        }
        field
    }
}

/// Degree −3 extension of `base` off the hyperplane `ℓ(q) = 1`.
pub fn projective_extension(ell: &Covector, base: &ForceField) -> Result<ForceField> {
    Ok(ProjectiveExtension::new(ell, base)?.field())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Vector, b: &Vector, tol: f64) -> bool {
        a.distance(b) <= tol
    }

    #[test]
    fn braden_evaluations() {
        let g = SymForm::identity(2);
        let a = SymForm::diag(&[1.0, 4.0]).unwrap();
        let f = braden_field(&g, &a, 1.0).unwrap();
        assert_eq!(f.degree(), -3.0);
        assert!(close(&f.evaluate(&Vector::from([1.0, 0.0])).unwrap(), &Vector::from([1.0, 0.0]), 0.0));
        assert!(close(&f.evaluate(&Vector::from([2.0, 0.0])).unwrap(), &Vector::from([0.125, 0.0]), 1e-16));
        assert!(close(&f.evaluate(&Vector::from([1.0, 1.0])).unwrap(), &Vector::from([0.25, 1.0]), 1e-16));

        let iso = braden_field(&g, &g, 1.0).unwrap();
        assert!(close(&iso.evaluate(&Vector::from([0.0, 2.0])).unwrap(), &Vector::from([0.0, 0.125]), 1e-16));
        assert!(matches!(iso.evaluate(&Vector::from([0.0, 0.0])), Err(Error::OutsideDomain(_))));
    }

    #[test]
    fn braden_rejects_uncertified_forms() {
        let indefinite = SymForm::new(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(braden_field(&SymForm::identity(2), &indefinite, 1.0).is_err());
        assert!(braden_field(&indefinite, &SymForm::identity(2), 1.0).is_err());
    }

    #[test]
    fn zero_field_vanishes() {
        let z = zero_field(3);
        assert_eq!(z.evaluate(&Vector::from([0.3, 1.0, -2.0])).unwrap(), Vector::zeros(3));
        assert_eq!(euler_residual(&z, &Vector::from([0.3, 1.0, -2.0])).unwrap(), 0.0);
    }

    #[test]
    fn homogeneity_residual_examples() {
        let f = braden_field(&SymForm::identity(2), &SymForm::diag(&[1.0, 4.0]).unwrap(), 1.0).unwrap();
        assert!(homogeneity_residual(&f, &Vector::from([1.0, 0.0]), 2.0).unwrap() <= 1e-14);

        // true degree −2 declared as −3
        let wrong = kepler_field(2, 1.0).with_degree(-3.0);
        let r = homogeneity_residual(&wrong, &Vector::from([1.0, 0.0]), 2.0).unwrap();
        assert!((r - 1.0).abs() <= 1e-15, "{r}");
        assert!(homogeneity_residual(&wrong, &Vector::from([1.0, 0.0]), 0.0).is_err());
    }

    #[test]
    fn euler_residual_examples() {
        let f = braden_field(&SymForm::identity(2), &SymForm::diag(&[1.0, 4.0]).unwrap(), 1.0).unwrap();
        let q = Vector::from([1.0, 0.0]);
        // finite-difference route
        let jq = f.fd_jacobian(&q, 1e-5).unwrap().apply(&q);
        let fd = jq.add_scaled(3.0, &f.evaluate(&q).unwrap()).norm();
        assert!(fd <= 1e-8, "{fd}");
        assert!(euler_residual(&f, &q).unwrap() <= 1e-14);

        let m = LinOperator::from_rows(&[vec![1.0, 2.0], vec![-0.5, 3.0]]).unwrap();
        let lin = ForceField::new(2, 1.0, "linear-fd", move |q| m.apply(q));
        assert!(!lin.has_analytic_jacobian());
        assert!(euler_residual(&lin, &Vector::from([0.7, -0.2])).unwrap() <= 1e-10);
    }

    #[test]
    fn braden_analytic_jacobian_matches_fd() {
        let g = SymForm::spd(&[vec![2.0, 0.3], vec![0.3, 1.0]]).unwrap();
        let a = SymForm::spd(&[vec![1.0, -0.2], vec![-0.2, 0.5]]).unwrap();
        let f = braden_field(&g, &a, 0.7).unwrap();
        let q = Vector::from([0.4, -0.9]);
        let an = f.jacobian(&q).unwrap();
        let fd = f.fd_jacobian(&q, 1e-6).unwrap();
        assert!(an.sub(&fd).max_abs() <= 1e-8);
    }

    #[test]
    fn gradient_field_examples() {
        let pf = gradient_field(
            &SymForm::identity(2),
            &inverse_quadratic_potential(&SymForm::identity(2), 1.0),
            GradientMode::Analytic,
        )
        .unwrap();
        assert!(pf.warnings.is_empty());
        assert_eq!(pf.field().degree(), -3.0);
        let f = pf.field().evaluate(&Vector::from([1.0, 0.0])).unwrap();
        assert!(close(&f, &Vector::from([-2.0, 0.0]), 1e-15));

        let fd = gradient_field(
            &SymForm::identity(2),
            &inverse_quadratic_potential(&SymForm::identity(2), 1.0),
            GradientMode::FiniteDifference,
        )
        .unwrap();
        let f = fd.field().evaluate(&Vector::from([1.0, 0.0])).unwrap();
        assert!(close(&f, &Vector::from([-2.0, 0.0]), 1e-8));
    }

    #[test]
    fn gradient_field_warns_on_wrong_degree() {
        let c = SymForm::identity(2);
        let cc = c.clone();
        let u = Potential::new(2, -1.0, "mislabelled", move |q| 1.0 / cc.quad(q));
        let pf = gradient_field(&c, &u, GradientMode::FiniteDifference).unwrap();
        assert!(!pf.warnings.is_empty());
        assert!(gradient_field(&c, &u, GradientMode::Analytic).is_err());
    }

    #[test]
    fn projective_extension_examples() {
        let ell = Covector::from([0.0, 0.0, 1.0]);
        let ext = projective_extension(&ell, &zero_field(2)).unwrap();
        assert_eq!(ext.evaluate(&Vector::from([0.3, 0.2, 1.5])).unwrap(), Vector::zeros(3));

        let kepler = kepler_field(2, 1.0);
        let ext = projective_extension(&ell, &kepler).unwrap();
        let x = Vector::from([0.6, -0.8]);
        let fx = kepler.evaluate(&x).unwrap();
        let on = ext.evaluate(&Vector::from([0.6, -0.8, 1.0])).unwrap();
        assert!(close(&on, &Vector::from([fx[0], fx[1], 0.0]), 1e-15));
        let off = ext.evaluate(&Vector::from([1.2, -1.6, 2.0])).unwrap();
        assert!(close(&off, &on.scaled(0.125), 1e-15));
        assert!(matches!(
            ext.evaluate(&Vector::from([0.3, 0.1, -1.0])),
            Err(Error::OutsideDomain(_))
        ));
        assert!(projective_extension(&Covector::from([0.0, 0.0, 0.0]), &kepler).is_err());
    }

    #[test]
    fn projective_extension_general_chart_is_tangent() {
        let ell = Covector::from([0.5, -2.0, 0.25]);
        let ext = ProjectiveExtension::new(&ell, &kepler_field(2, 1.0)).unwrap();
        let x = Vector::from([0.7, 0.1]);
        let q = ext.embed(&x);
        assert!((ell.at(&q) - 1.0).abs() <= 1e-15);
        assert!(close(&ext.chart(&q), &x, 1e-15));
        let f = ext.field();
        let fq = f.evaluate(&q).unwrap();
        assert!(ell.at(&fq).abs() <= 1e-15);
        let an = f.jacobian(&q.scaled(1.3)).unwrap();
        let fd = f.fd_jacobian(&q.scaled(1.3), 1e-6).unwrap();
        assert!(an.sub(&fd).max_abs() <= 1e-7, "{:?} vs {:?}", an, fd);
    }

    #[test]
    fn quadric_power_field_matches_braden_at_minus_three() {
        let g = SymForm::spd(&[vec![1.5, 0.2], vec![0.2, 0.8]]).unwrap();
        let a = SymForm::diag(&[0.7, 1.9]).unwrap();
        let q = Vector::from([0.4, -0.9]);
        let p3 = quadric_power_field(&g, &a, 1.3, -3.0).unwrap();
        let br = braden_field(&g, &a, 1.3).unwrap();
        assert!(close(&p3.evaluate(&q).unwrap(), &br.evaluate(&q).unwrap(), 1e-14));
        let p2 = quadric_power_field(&g, &a, 1.0, -2.0).unwrap();
        assert!(homogeneity_residual(&p2, &q, 1.7).unwrap() <= 1e-14);
        assert!(euler_residual(&p2, &q).unwrap() <= 1e-13);
        let fd = p2.fd_jacobian(&q, 1e-5).unwrap();
        assert!(p2.jacobian(&q).unwrap().sub(&fd).max_abs() <= 1e-8);
    }

}
