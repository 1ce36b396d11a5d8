//! Small dense linear algebra with the dimension fixed at runtime.
//!
//! Vectors live in `V`, covectors in `V*`. A [`SymForm`] is a symmetric map
//! `V -> V*` (the inner products and quadrics of the library) and a
//! [`LinOperator`] is an endomorphism `V -> V`. Everything here is a plain
//! immutable value.

use std::fmt;
use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

/// Relative pivot threshold used when certifying positive definiteness.
pub const SPD_PIVOT_THRESHOLD: f64 = 1e-12;

/// Relative finite-difference step used when no step is supplied.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// A point or velocity in `V`.
#[derive(Clone, PartialEq, Default)]
pub struct Vector(Vec<f64>);

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl Vector {
    pub fn new(coords: Vec<f64>) -> Self {
        Vector(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    /// The `i`-th standard basis vector.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[i] = 1.0;
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    /// Euclidean coordinate dot product. Panics on a dimension mismatch.
    pub fn dot(&self, other: &Vector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dot: dimension mismatch");
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scaled(&self, s: f64) -> Vector {
        Vector(self.0.iter().map(|x| s * x).collect())
    }

    /// `self + s * other`
    pub fn add_scaled(&self, s: f64, other: &Vector) -> Vector {
        assert_eq!(self.dim(), other.dim(), "add_scaled: dimension mismatch");
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + s * b).collect())
    }

    /// Euclidean distance.
    pub fn distance(&self, other: &Vector) -> f64 {
        (self - other).norm()
    }

    /// Sine of the angle between two nonzero vectors.
    pub fn sin_angle(&self, other: &Vector) -> f64 {
        let (a, b) = (self.norm(), other.norm());
        if a == 0.0 || b == 0.0 {
            return 0.0;
        }
        let c = (self.dot(other) / (a * b)).clamp(-1.0, 1.0);
        (1.0 - c * c).max(0.0).sqrt()
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl<const N: usize> From<[f64; N]> for Vector {
    fn from(v: [f64; N]) -> Self {
        Vector(v.to_vec())
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl<'a> Add<&'a Vector> for &'a Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        self.add_scaled(1.0, rhs)
    }
}

impl<'a> Sub<&'a Vector> for &'a Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        self.add_scaled(-1.0, rhs)
    }
}

impl Add for Vector {
    type Output = Vector;
    fn add(self, rhs: Vector) -> Vector {
        &self + &rhs
    }
}

impl Sub for Vector {
    type Output = Vector;
    fn sub(self, rhs: Vector) -> Vector {
        &self - &rhs
    }
}

impl AddAssign<&Vector> for Vector {
    fn add_assign(&mut self, rhs: &Vector) {
        assert_eq!(self.dim(), rhs.dim(), "add_assign: dimension mismatch");
        self.0.iter_mut().zip(&rhs.0).for_each(|(a, b)| *a += b);
    }
}

impl SubAssign<&Vector> for Vector {
    fn sub_assign(&mut self, rhs: &Vector) {
        assert_eq!(self.dim(), rhs.dim(), "sub_assign: dimension mismatch");
        self.0.iter_mut().zip(&rhs.0).for_each(|(a, b)| *a -= b);
    }
}

impl Mul<&Vector> for f64 {
    type Output = Vector;
    fn mul(self, rhs: &Vector) -> Vector {
        rhs.scaled(self)
    }
}

impl Mul<Vector> for f64 {
    type Output = Vector;
    fn mul(self, rhs: Vector) -> Vector {
        rhs.scaled(self)
    }
}

impl Neg for &Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self.scaled(-1.0)
    }
}

/// A linear functional on `V`, e.g. the derivative of a screen function.
#[derive(Clone, PartialEq)]
pub struct Covector(Vec<f64>);

impl fmt::Debug for Covector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Covector{:?}", self.0)
    }
}

impl Covector {
    pub fn new(coords: Vec<f64>) -> Self {
        Covector(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }

    /// Pairing with a vector; panics on a dimension mismatch.
    pub fn at(&self, v: &Vector) -> f64 {
        assert_eq!(self.dim(), v.dim(), "pairing: dimension mismatch");
        self.0.iter().zip(v.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn scaled(&self, s: f64) -> Covector {
        Covector(self.0.iter().map(|x| s * x).collect())
    }

    /// Reinterpret the coordinates as a vector (Euclidean identification).
    pub fn to_vector(&self) -> Vector {
        Vector(self.0.clone())
    }
}

impl From<Vec<f64>> for Covector {
    fn from(v: Vec<f64>) -> Self {
        Covector(v)
    }
}

impl<const N: usize> From<[f64; N]> for Covector {
    fn from(v: [f64; N]) -> Self {
        Covector(v.to_vec())
    }
}

/// `w(v)`, the coordinate dot product.
pub fn pair(w: &Covector, v: &Vector) -> Result<f64> {
    check_dim(w.dim(), v.dim())?;
    Ok(w.at(v))
}

/// Square matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct LinOperator {
    dim: usize,
    entries: Vec<f64>,
}

impl fmt::Debug for LinOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

impl LinOperator {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::InvalidArgument("empty matrix".into()));
        }
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            check_dim(dim, row.len())?;
            entries.extend_from_slice(row);
        }
        Ok(LinOperator { dim, entries })
    }

    pub fn zeros(dim: usize) -> Self {
        LinOperator {
            dim,
            entries: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diag(&vec![1.0; dim])
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut op = Self::zeros(d.len());
        for (i, &x) in d.iter().enumerate() {
            op.set(i, i, x);
        }
        op
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        self.entries[i * self.dim + j] = x;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> Vector {
        Vector((0..self.dim).map(|i| self.get(i, j)).collect())
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        assert_eq!(self.dim, v.dim(), "apply: dimension mismatch");
        Vector(
            self.entries
                .chunks(self.dim)
                .map(|row| row.iter().zip(v.iter()).map(|(a, b)| a * b).sum())
                .collect(),
        )
    }

    pub fn transpose(&self) -> LinOperator {
        let mut t = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// `self * other`
    pub fn compose(&self, other: &LinOperator) -> LinOperator {
        assert_eq!(self.dim, other.dim, "compose: dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, (0..n).map(|k| self.get(i, k) * other.get(k, j)).sum());
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> LinOperator {
        LinOperator {
            dim: self.dim,
            entries: self.entries.iter().map(|x| s * x).collect(),
        }
    }

    pub fn sub(&self, other: &LinOperator) -> LinOperator {
        assert_eq!(self.dim, other.dim, "sub: dimension mismatch");
        LinOperator {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn add(&self, other: &LinOperator) -> LinOperator {
        self.sub(&other.scaled(-1.0))
    }

    /// Rank-one update `self + s * u vᵀ`.
    pub fn add_outer(&self, s: f64, u: &Vector, v: &Vector) -> LinOperator {
        let mut out = self.clone();
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.entries[i * self.dim + j] += s * u[i] * v[j];
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Lower-triangular Cholesky factor `L` with `F = L Lᵀ`.
#[derive(Clone, Debug, PartialEq)]
struct Cholesky {
    dim: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    fn factor(dim: usize, a: &[f64]) -> Result<Self> {
        let max_diag = (0..dim).map(|i| a[i * dim + i].abs()).fold(0.0, f64::max);
        let threshold = SPD_PIVOT_THRESHOLD * max_diag.max(f64::MIN_POSITIVE);
        let mut l = vec![0.0; dim * dim];
        for j in 0..dim {
            let mut d = a[j * dim + j];
            for k in 0..j {
                d -= l[j * dim + k] * l[j * dim + k];
            }
            if !(d > threshold) {
                return Err(Error::NotPositiveDefinite { index: j, pivot: d });
            }
            let djj = d.sqrt();
            l[j * dim + j] = djj;
            for i in (j + 1)..dim {
                let mut s = a[i * dim + j];
                for k in 0..j {
                    s -= l[i * dim + k] * l[j * dim + k];
                }
                l[i * dim + j] = s / djj;
            }
        }
        Ok(Cholesky { dim, lower: l })
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let l = &self.lower;
        let mut y = rhs.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= l[i * n + k] * y[k];
            }
            y[i] /= l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                y[i] -= l[k * n + i] * y[k];
            }
            y[i] /= l[i * n + i];
        }
        y
    }
}

/// Symmetric bilinear form `V -> V*`, stored with exact symmetry.
///
/// When built through [`SymForm::spd`] the form carries its Cholesky factor,
/// which both certifies positive definiteness and serves [`SymForm::solve`].
#[derive(Clone, PartialEq)]
pub struct SymForm {
    dim: usize,
    entries: Vec<f64>,
    factor: Option<Cholesky>,
}

impl fmt::Debug for SymForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymForm")
            .field("rows", &self.rows())
            .field("spd_checked", &self.spd_checked())
            .finish()
    }
}

impl SymForm {
    /// Build from rows; the matrix must be square and exactly symmetric.
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let op = LinOperator::from_rows(rows)?;
        for i in 0..op.dim {
            for j in 0..i {
                if op.get(i, j) != op.get(j, i) {
                    return Err(Error::NotSymmetric(format!(
                        "entry ({i},{j}) = {} but ({j},{i}) = {}",
                        op.get(i, j),
                        op.get(j, i)
                    )));
                }
            }
        }
        Ok(SymForm {
            dim: op.dim,
            entries: op.entries,
            factor: None,
        })
    }

    /// Build and certify positive definiteness.
    pub fn spd(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(rows)?.certified()
    }

    /// Symmetrize `(X + Xᵀ)/2` and certify. Used for derived forms such as
    /// `G A⁻¹ G` whose computed entries are symmetric only up to rounding.
    pub fn spd_from_operator(op: &LinOperator) -> Result<Self> {
        let n = op.dim;
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                entries[i * n + j] = 0.5 * (op.get(i, j) + op.get(j, i));
            }
        }
        SymForm {
            dim: n,
            entries,
            factor: None,
        }
        .certified()
    }

    pub fn identity(dim: usize) -> Self {
        Self::diag(&vec![1.0; dim]).expect("identity is SPD")
    }

    /// Diagonal form; certified SPD when every entry is positive.
    pub fn diag(d: &[f64]) -> Result<Self> {
        let op = LinOperator::diag(d);
        let form = SymForm {
            dim: d.len(),
            entries: op.entries,
            factor: None,
        };
        if d.iter().all(|&x| x > 0.0) {
            form.certified()
        } else {
            Ok(form)
        }
    }

    fn certified(mut self) -> Result<Self> {
        self.factor = Some(Cholesky::factor(self.dim, &self.entries)?);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spd_checked(&self) -> bool {
        self.factor.is_some()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn to_operator(&self) -> LinOperator {
        LinOperator {
            dim: self.dim,
            entries: self.entries.clone(),
        }
    }

    /// `F v` as a covector.
    pub fn lower(&self, v: &Vector) -> Covector {
        Covector(self.to_operator_ref_apply(v))
    }

    /// `F v` with coordinates read as a vector.
    pub fn apply(&self, v: &Vector) -> Vector {
        Vector(self.to_operator_ref_apply(v))
    }

    fn to_operator_ref_apply(&self, v: &Vector) -> Vec<f64> {
        assert_eq!(self.dim, v.dim(), "SymForm::apply: dimension mismatch");
        self.entries
            .chunks(self.dim)
            .map(|row| row.iter().zip(v.iter()).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `⟨F q, q⟩`; panics on a dimension mismatch.
    pub fn quad(&self, q: &Vector) -> f64 {
        self.bilinear(q, q)
    }

    /// `⟨F u, v⟩`; panics on a dimension mismatch.
    ///
    /// Summation runs over `i <= j` pairs only, so the result is bit-for-bit
    /// symmetric in its two arguments.
    pub fn bilinear(&self, u: &Vector, v: &Vector) -> f64 {
        assert_eq!(self.dim, u.dim(), "bilinear: dimension mismatch");
        assert_eq!(self.dim, v.dim(), "bilinear: dimension mismatch");
        let n = self.dim;
        let mut s = 0.0;
        for i in 0..n {
            s += self.entries[i * n + i] * (u[i] * v[i]);
            for j in (i + 1)..n {
                s += self.entries[i * n + j] * (u[i] * v[j] + u[j] * v[i]);
            }
        }
        s
    }

    /// `F⁻¹ rhs`. Requires positive definiteness (certified on the fly when
    /// the form was not built as SPD).
    pub fn solve(&self, rhs: &Vector) -> Result<Vector> {
        check_dim(self.dim, rhs.dim())?;
        let x = match &self.factor {
            Some(c) => c.solve(rhs.as_slice()),
            None => Cholesky::factor(self.dim, &self.entries)?.solve(rhs.as_slice()),
        };
        Ok(Vector(x))
    }

    /// `F⁻¹` as an operator.
    pub fn inverse(&self) -> Result<LinOperator> {
        let mut inv = LinOperator::zeros(self.dim);
        for j in 0..self.dim {
            let col = self.solve(&Vector::basis(self.dim, j))?;
            for i in 0..self.dim {
                inv.set(i, j, col[i]);
            }
        }
        Ok(inv)
    }

    /// Spectral condition number estimate from power and inverse-power
    /// iteration. Only meaningful for SPD forms.
    pub fn condition_estimate(&self) -> Result<f64> {
        let n = self.dim;
        let start = Vector((0..n).map(|i| 1.0 + 0.1 * i as f64).collect());
        let mut v = start.scaled(1.0 / start.norm());
        let mut lmax = 0.0;
        for _ in 0..200 {
            let w = self.apply(&v);
            lmax = w.norm();
            if lmax == 0.0 {
                break;
            }
            v = w.scaled(1.0 / lmax);
        }
        let mut v = start.scaled(1.0 / start.norm());
        let mut inv_lmin = 0.0;
        for _ in 0..200 {
            let w = self.solve(&v)?;
            inv_lmin = w.norm();
            v = w.scaled(1.0 / inv_lmin);
        }
        Ok(lmax * inv_lmin)
    }
}

/// `⟨F u, v⟩` with dimension checking.
pub fn form_apply(form: &SymForm, u: &Vector, v: &Vector) -> Result<f64> {
    check_dim(form.dim(), u.dim())?;
    check_dim(form.dim(), v.dim())?;
    Ok(form.bilinear(u, v))
}

/// `F⁻¹ rhs`; fails with a domain error if `F` is not positive definite.
pub fn solve(form: &SymForm, rhs: &Vector) -> Result<Vector> {
    form.solve(rhs)
}

/// Default central-difference step at `q`: `1e-5 · max(1, ‖q‖)`.
pub fn default_fd_step(q: &Vector) -> f64 {
    DEFAULT_FD_STEP * q.norm().max(1.0)
}

/// Central-difference Jacobian of `map` at `q`.
pub fn fd_jacobian<F>(map: F, q: &Vector, step: f64) -> Result<LinOperator>
where
    F: Fn(&Vector) -> Result<Vector>,
{
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!("fd step must be positive, got {step}")));
    }
    let n = q.dim();
    let mut jac: Option<LinOperator> = None;
    for j in 0..n {
        let e = Vector::basis(n, j);
        let plus = map(&q.add_scaled(step, &e))?;
        let minus = map(&q.add_scaled(-step, &e))?;
        let col = (&plus - &minus).scaled(0.5 / step);
        check_dim(n, col.dim())?;
        let jac = jac.get_or_insert_with(|| LinOperator::zeros(n));
        for i in 0..col.dim() {
            jac.set(i, j, col[i]);
        }
    }
    jac.ok_or_else(|| Error::InvalidArgument("zero-dimensional input".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn pair_examples() {
        let e0 = Covector::from([1.0, 0.0]);
        assert_eq!(pair(&e0, &Vector::from([0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(pair(&Covector::from([1.0, 2.0]), &Vector::from([3.0, 4.0])).unwrap(), 11.0);
        assert_eq!(pair(&Covector::from([0.0, 0.0]), &Vector::from([5.0, 7.0])).unwrap(), 0.0);
        assert!(matches!(
            pair(&e0, &Vector::from([1.0, 2.0, 3.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn form_apply_examples() {
        let id = SymForm::identity(2);
        let u = Vector::from([3.0, 4.0]);
        assert_eq!(form_apply(&id, &u, &u).unwrap(), 25.0);
        let d = SymForm::diag(&[1.0, 4.0]).unwrap();
        assert_eq!(
            form_apply(&d, &Vector::from([1.0, 0.0]), &Vector::from([0.0, 1.0])).unwrap(),
            0.0
        );
        assert!(form_apply(&d, &u, &Vector::from([1.0])).is_err());
    }

    #[test]
    fn solve_examples() {
        let v = Vector::from([0.3, -1.2]);
        assert_eq!(solve(&SymForm::identity(2), &v).unwrap(), v);
        let x = solve(&SymForm::diag(&[2.0, 8.0]).unwrap(), &Vector::from([2.0, 8.0])).unwrap();
        assert!(approx(x[0], 1.0, 1e-15) && approx(x[1], 1.0, 1e-15));
        let x = solve(&SymForm::diag(&[4.0, 1.0]).unwrap(), &Vector::from([1.0, 0.0])).unwrap();
        assert!(approx(x[0], 0.25, 1e-15) && x[1] == 0.0);
    }

    #[test]
    fn rejects_non_spd_and_asymmetric() {
        let indefinite = SymForm::new(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(
            indefinite.solve(&Vector::from([1.0, 0.0])),
            Err(Error::NotPositiveDefinite { .. })
        ));
        assert!(SymForm::spd(&[vec![1.0, 2.0], vec![2.0, 1.0]]).is_err());
        assert!(matches!(
            SymForm::new(&[vec![1.0, 2.0], vec![2.5, 1.0]]),
            Err(Error::NotSymmetric(_))
        ));
        assert!(SymForm::new(&[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn fd_jacobian_examples() {
        let q = Vector::from([0.4, -1.3, 2.0]);
        let id = fd_jacobian(|v| Ok(v.clone()), &q, 1e-5).unwrap();
        assert!(id.sub(&LinOperator::identity(3)).max_abs() <= 1e-10);

        let sq = fd_jacobian(|v| Ok(Vector::from([v[0] * v[0], 0.0])), &Vector::from([1.0, 0.0]), 1e-5)
            .unwrap();
        let expected = LinOperator::from_rows(&[vec![2.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(sq.sub(&expected).max_abs() <= 1e-9);

        let c = fd_jacobian(|_| Ok(Vector::from([1.0, 2.0, 3.0])), &q, 1e-5).unwrap();
        assert_eq!(c.max_abs(), 0.0);
        assert!(fd_jacobian(|_| Ok(Vector::from([1.0, 2.0])), &q, 1e-5).is_err());

        assert!(fd_jacobian(|v| Ok(v.clone()), &q, 0.0).is_err());
    }

    #[test]
    fn condition_estimate_of_diagonal() {
        let d = SymForm::diag(&[0.5, 2.0, 50.0]).unwrap();
        assert!(approx(d.condition_estimate().unwrap(), 100.0, 1e-6));
    }

    fn spd_strategy(n: usize) -> impl Strategy<Value = SymForm> {
        (proptest::collection::vec(-1.0f64..1.0, n * n), 0.1f64..2.0).prop_map(move |(r, shift)| {
            let mut rows = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..n {
                    let s: f64 = (0..n).map(|k| r[k * n + i] * r[k * n + j]).sum();
                    rows[i][j] = s;
                }
                rows[i][i] += shift;
            }
            for i in 0..n {
                for j in 0..i {
                    rows[i][j] = rows[j][i];
                }
            }
            SymForm::spd(&rows).unwrap()
        })
    }

    proptest! {
        #[test]
        fn form_apply_is_exactly_symmetric(
            f in spd_strategy(3),
            u in proptest::collection::vec(-10.0f64..10.0, 3),
            v in proptest::collection::vec(-10.0f64..10.0, 3),
        ) {
            let (u, v) = (Vector::new(u), Vector::new(v));
            prop_assert_eq!(form_apply(&f, &u, &v).unwrap(), form_apply(&f, &v, &u).unwrap());
        }

        #[test]
        fn solve_round_trips(f in spd_strategy(4), rhs in proptest::collection::vec(-5.0f64..5.0, 4)) {
            let rhs = Vector::new(rhs);
            let x = f.solve(&rhs).unwrap();
            let back = f.apply(&x);
            prop_assert!((&back - &rhs).norm() <= 1e-12 * rhs.norm().max(1.0));
        }

        #[test]
        fn fd_jacobian_of_linear_map(
            m in proptest::collection::vec(-1.0f64..1.0, 9),
            q in proptest::collection::vec(-1.0f64..1.0, 3),
        ) {
            let rows: Vec<Vec<f64>> = m.chunks(3).map(|r| r.to_vec()).collect();
            let op = LinOperator::from_rows(&rows).unwrap();
            let jac = fd_jacobian(|v| Ok(op.apply(v)), &Vector::new(q), 1e-5).unwrap();
            prop_assert!(jac.sub(&op).max_abs() <= 1e-9);
        }
    }
}
