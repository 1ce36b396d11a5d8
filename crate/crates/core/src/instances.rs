//! Seeded random instances: SPD matrices, ellipsoid data, states and probe
//! points. Every generator is a pure function of its seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::PhaseState;
use crate::error::Result;
use crate::geometry::{LinOperator, SymForm, Vector};
use crate::problems::EllipsoidData;
use crate::screens::Screen;
use crate::sl2::PhasePoint;

/// Eigenvalue range of generated SPD matrices.
pub const EIGEN_RANGE: (f64, f64) = (0.5, 2.0);

/// Tangential speed of the standard free state.
pub const STANDARD_TANGENT_SPEED: f64 = 0.3;
/// Outward radial speed of the standard free state, `Dh(q)[p]`.
pub const STANDARD_RADIAL_SPEED: f64 = 0.3;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vector(rng: &mut impl Rng, dim: usize, lo: f64, hi: f64) -> Vector {
    Vector::new((0..dim).map(|_| rng.gen_range(lo..hi)).collect())
}

pub fn random_unit_vector(rng: &mut impl Rng, dim: usize) -> Vector {
    loop {
        let v = random_vector(rng, dim, -1.0, 1.0);
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v.scaled(1.0 / n);
        }
    }
}

/// Orthogonal matrix from Gram-Schmidt on random columns.
pub fn random_orthogonal(rng: &mut impl Rng, dim: usize) -> LinOperator {
    let mut cols: Vec<Vector> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v = random_vector(rng, dim, -1.0, 1.0);
        for c in &cols {
            v = v.add_scaled(-c.dot(&v), c);
        }
        let n = v.norm();
        if n > 0.1 {
            cols.push(v.scaled(1.0 / n));
        }
    }
    let mut op = LinOperator::zeros(dim);
    for (j, c) in cols.iter().enumerate() {
        for i in 0..dim {
            op.set(i, j, c[i]);
        }
    }
    op
}

/// `Q diag(λ) Qᵀ` with eigenvalues uniform in `range`.
pub fn random_spd(rng: &mut impl Rng, dim: usize, range: (f64, f64)) -> Result<SymForm> {
    let q = random_orthogonal(rng, dim);
    let d: Vec<f64> = (0..dim).map(|_| rng.gen_range(range.0..range.1)).collect();
    SymForm::spd_from_operator(&q.compose(&LinOperator::diag(&d)).compose(&q.transpose()))
}

/// Random `(G, A)` with eigenvalues in [`EIGEN_RANGE`].
pub fn random_ellipsoid(seed: u64, dim: usize) -> Result<EllipsoidData> {
    let mut r = rng(seed);
    let g = random_spd(&mut r, dim, EIGEN_RANGE)?;
    let a = random_spd(&mut r, dim, EIGEN_RANGE)?;
    EllipsoidData::new(g, a)
}

/// A point on the screen with a tangent velocity of the given speed.
pub fn random_tangent_state(rng: &mut impl Rng, screen: &Screen, speed: f64) -> Result<PhaseState> {
    let dim = screen.dim();
    loop {
        let q = random_unit_vector(rng, dim);
        if !screen.in_domain(&q) {
            continue;
        }
        let q = screen.project_point(&q)?;
        let v = screen.tangent_project(&q, &random_unit_vector(rng, dim))?;
        let n = v.norm();
        if n > 0.1 {
            let p = v.scaled(speed / n);
            // one more pass removes the rounding left by the rescale
            let p = screen.tangent_project(&q, &p)?;
            return PhaseState::new(0.0, q, p);
        }
    }
}

/// Initial state of the standard free run: a random point of the
/// `G`-sphere moving outward, so that the run leaves the sphere and the
/// projection has real work to do.
pub fn standard_free_state(seed: u64, data: &EllipsoidData) -> Result<PhaseState> {
    let mut r = rng(seed ^ 0x5eed);
    let screen = Screen::quadric(data.g.clone())?;
    let on = random_tangent_state(&mut r, &screen, STANDARD_TANGENT_SPEED)?;
    let p = on.p.add_scaled(STANDARD_RADIAL_SPEED, &on.q);
    PhaseState::new(0.0, on.q, p)
}

/// Points with norm in `[0.5, 2]` accepted by `keep`.
pub fn random_points<F>(seed: u64, dim: usize, count: usize, keep: F) -> Vec<Vector>
where
    F: Fn(&Vector) -> bool,
{
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let q = random_unit_vector(&mut r, dim).scaled(r.gen_range(0.5..2.0));
        if keep(&q) {
            out.push(q);
        }
    }
    out
}

/// Phase points with `q` as in [`random_points`] and `p` in `[−1, 1]ⁿ`.
pub fn random_phase_points<F>(seed: u64, dim: usize, count: usize, keep: F) -> Vec<PhasePoint>
where
    F: Fn(&Vector) -> bool,
{
    let qs = random_points(seed, dim, count, keep);
    let mut r = rng(seed.wrapping_add(1));
    qs.into_iter().map(|q| (q, random_vector(&mut r, dim, -1.0, 1.0))).collect()
}
