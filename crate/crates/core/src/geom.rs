//! Small dense linear algebra on the sphere: unit directions, frames of
//! central hyperplanes, rotations, and deterministic spherical grids.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Tolerance used for every "is this orthogonal" precondition.
pub const ORTHO_TOL: f64 = 1e-10;

/// Geodesic rotations refuse pairs with `<a,b>` at or below `-1 + ANTIPODAL_TOL`.
pub const ANTIPODAL_TOL: f64 = 1e-8;

/// A unit vector on `S^{n-1}`, `n >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction(DVector<f64>);

impl Direction {
    /// Normalizes `v`. Fails on zero, non-finite, or one-dimensional input.
    pub fn new(v: DVector<f64>) -> Result<Self> {
        if v.len() < 2 {
            return Err(Error::DimensionTooSmall { min: 2, found: v.len() });
        }
        let norm = v.norm();
        if !norm.is_finite() || norm <= f64::MIN_POSITIVE {
            return Err(Error::NotUnit { norm });
        }
        Ok(Direction(v / norm))
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(coords))
    }

    /// The standard basis vector `e_{axis+1}` of `R^n`.
    pub fn axis(n: usize, axis: usize) -> Self {
        assert!(n >= 2 && axis < n, "axis {axis} out of range for R^{n}");
        let mut v = DVector::zeros(n);
        v[axis] = 1.0;
        Direction(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }

    pub fn coords(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn dot(&self, other: &Direction) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn negated(&self) -> Direction {
        Direction(-&self.0)
    }

    /// Spherical distance in radians, accurate for nearly equal and nearly
    /// antipodal pairs.
    pub fn angle_to(&self, other: &Direction) -> f64 {
        2.0 * (&self.0 - &other.0).norm().atan2((&self.0 + &other.0).norm())
    }
}

impl Serialize for Direction {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.as_slice().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Direction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let coords = Vec::<f64>::deserialize(deserializer)?;
        Direction::from_slice(&coords).map_err(serde::de::Error::custom)
    }
}

/// An orthonormal basis of the central hyperplane `normal^⊥`, stored as the
/// columns of an `n x (n-1)` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionFrame {
    normal: Direction,
    basis: DMatrix<f64>,
}

impl SectionFrame {
    /// Wraps a caller-supplied basis after checking the frame invariants.
    pub fn with_basis(normal: Direction, basis: DMatrix<f64>) -> Result<Self> {
        let n = normal.dim();
        if basis.nrows() != n || basis.ncols() + 1 != n {
            return Err(Error::DimensionMismatch { expected: n, found: basis.nrows() });
        }
        let gram = basis.transpose() * &basis;
        let off_identity = (gram - DMatrix::identity(n - 1, n - 1)).amax();
        let leak = (basis.transpose() * normal.as_vector()).amax();
        if off_identity > 1e-12 || leak > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "frame is not orthonormal (gram error {off_identity:e}, normal leak {leak:e})"
            )));
        }
        Ok(SectionFrame { normal, basis })
    }

    pub fn normal(&self) -> &Direction {
        &self.normal
    }

    /// The `n x (n-1)` frame matrix `B`.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn ambient_dim(&self) -> usize {
        self.normal.dim()
    }

    /// Frame coordinates `Bᵀx`.
    pub fn to_frame(&self, x: &DVector<f64>) -> DVector<f64> {
        self.basis.tr_mul(x)
    }

    /// Ambient point `Bu`.
    pub fn from_frame(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.basis * u
    }

    pub fn column(&self, i: usize) -> Direction {
        Direction(self.basis.column(i).into_owned())
    }
}

/// Deterministic orthonormal completion of `xi`.
///
/// Candidate axes are taken in order of increasing `|xi_i|` (ties by index)
/// and orthogonalized twice against `xi` and the accepted vectors. The axis
/// with the largest component is the one left out.
pub fn orthonormal_frame(xi: &Direction) -> SectionFrame {
    let n = xi.dim();
    let x = xi.as_vector();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| x[i].abs().total_cmp(&x[j].abs()).then(i.cmp(&j)));

    let mut accepted: Vec<DVector<f64>> = Vec::with_capacity(n - 1);
    for &axis in order.iter().take(n - 1) {
        let mut v = DVector::zeros(n);
        v[axis] = 1.0;
        for _ in 0..2 {
            v -= x * x.dot(&v);
            for b in &accepted {
                v -= b * b.dot(&v);
            }
        }
        let norm = v.norm();
        accepted.push(v / norm);
    }
    let basis = DMatrix::from_columns(&accepted);
    SectionFrame { normal: xi.clone(), basis }
}

/// Invertible square matrix with its inverse cached.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
    det_sign: f64,
}

impl LinearMap {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: matrix.ncols() });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularMap);
        }
        let opnorm = spectral_norm(&matrix);
        let det = matrix.determinant();
        if opnorm == 0.0 || det.abs() <= 1e-12 * opnorm.powi(n as i32) {
            return Err(Error::SingularMap);
        }
        let inverse = matrix.clone().try_inverse().ok_or(Error::SingularMap)?;
        Ok(LinearMap { matrix, inverse, det_sign: det.signum() })
    }

    pub fn identity(n: usize) -> Self {
        LinearMap {
            matrix: DMatrix::identity(n, n),
            inverse: DMatrix::identity(n, n),
            det_sign: 1.0,
        }
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
    }

    pub fn scaling(n: usize, s: f64) -> Result<Self> {
        Self::new(DMatrix::identity(n, n) * s)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn inverse_matrix(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn det_sign(&self) -> f64 {
        self.det_sign
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x
    }

    pub fn apply_inverse(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.inverse * y
    }

    pub fn inverse(&self) -> LinearMap {
        LinearMap {
            matrix: self.inverse.clone(),
            inverse: self.matrix.clone(),
            det_sign: self.det_sign,
        }
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &LinearMap) -> LinearMap {
        LinearMap {
            matrix: &self.matrix * &inner.matrix,
            inverse: &inner.inverse * &self.inverse,
            det_sign: self.det_sign * inner.det_sign,
        }
    }

    pub fn operator_norm(&self) -> f64 {
        spectral_norm(&self.matrix)
    }
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// The rotation in the plane `span(a, b)` that carries `a` to `b` and fixes
/// the orthogonal complement pointwise.
///
/// With `K = b aᵀ - a bᵀ` and `c = <a,b>`, `R = I + K + K²/(1 + c)`.
pub fn geodesic_rotation(a: &Direction, b: &Direction) -> Result<LinearMap> {
    let n = a.dim();
    if b.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.dim() });
    }
    let c = a.dot(b);
    if c <= -1.0 + ANTIPODAL_TOL {
        return Err(Error::AntipodalInput { dot: c });
    }
    let av = a.as_vector();
    let bv = b.as_vector();
    let k = bv * av.transpose() - av * bv.transpose();
    let r = DMatrix::identity(n, n) + &k + (&k * &k) / (1.0 + c);
    // R is orthogonal, so Rᵀ is its exact inverse up to rounding.
    let inverse = r.transpose();
    Ok(LinearMap { matrix: r, inverse, det_sign: 1.0 })
}

/// Unit circle point at angle `2πk/m`, exact at quarter turns.
pub(crate) fn circle_point(k: usize, m: usize) -> (f64, f64) {
    let k = k % m;
    if (4 * k).is_multiple_of(m) {
        match 4 * k / m {
            0 => return (1.0, 0.0),
            1 => return (0.0, 1.0),
            2 => return (-1.0, 0.0),
            _ => return (0.0, -1.0),
        }
    }
    let angle = 2.0 * PI * k as f64 / m as f64;
    let (s, c) = angle.sin_cos();
    (c, s)
}

/// `m` equally spaced points of the great circle through `theta` and `zeta`,
/// starting at `theta`.
pub fn great_circle(theta: &Direction, zeta: &Direction, m: usize) -> Result<Vec<Direction>> {
    if theta.dim() != zeta.dim() {
        return Err(Error::DimensionMismatch { expected: theta.dim(), found: zeta.dim() });
    }
    if m < 4 {
        return Err(Error::InvalidArgument(format!("great circle needs m >= 4, got {m}")));
    }
    let dot = theta.dot(zeta);
    if dot.abs() > ORTHO_TOL {
        return Err(Error::NotOrthogonal { dot });
    }
    Ok((0..m)
        .map(|k| {
            let (c, s) = circle_point(k, m);
            Direction::new(theta.as_vector() * c + zeta.as_vector() * s)
                .expect("orthonormal combination is nonzero")
        })
        .collect())
}

/// Flips `v` so that its last nonzero coordinate is positive.
fn canonical_hemisphere(mut v: DVector<f64>) -> DVector<f64> {
    if let Some(last) = v.iter().rev().find(|c| **c != 0.0) {
        if *last < 0.0 {
            v.neg_mut();
        }
    }
    v
}

/// Golden-angle offset derived from a seed; zero for seed 0.
fn seed_phase(seed: u64) -> f64 {
    let golden = 0.618_033_988_749_894_9_f64;
    2.0 * PI * ((seed as f64) * golden).fract()
}

/// `count` points of one closed hemisphere, no two antipodal.
///
/// `n = 2`: equally spaced half circle. `n = 3`: Fibonacci spiral on the
/// upper hemisphere. `n >= 4`: seeded Kronecker (R_d) sequence pushed to the
/// sphere by Box–Muller pairs.
pub fn hemisphere_points(n: usize, count: usize, seed: u64) -> Vec<Direction> {
    assert!(n >= 2, "sphere grids need n >= 2");
    let count = count.max(1);
    match n {
        2 => (0..count)
            .map(|k| {
                let (c, s) = circle_point(k, 2 * count);
                Direction(DVector::from_vec(vec![c, s]))
            })
            .collect(),
        3 => {
            let golden_angle = PI * (3.0 - 5f64.sqrt());
            let phase = seed_phase(seed);
            (0..count)
                .map(|i| {
                    let z = 1.0 - (i as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let phi = i as f64 * golden_angle + phase;
                    let v = DVector::from_vec(vec![r * phi.cos(), r * phi.sin(), z]);
                    Direction::new(v).expect("spiral point is unit")
                })
                .collect()
        }
        _ => {
            let pairs = n.div_ceil(2);
            let d = 2 * pairs;
            // Plastic-number generalization: g^(d+1) = g + 1.
            let mut g = 2.0f64;
            for _ in 0..64 {
                g = (1.0 + g).powf(1.0 / (d as f64 + 1.0));
            }
            let alpha: Vec<f64> = (0..d).map(|j| (1.0 / g).powi(j as i32 + 1)).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let offset: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
            let mut out = Vec::with_capacity(count);
            let mut i = 0u64;
            while out.len() < count {
                i += 1;
                let mut coords = Vec::with_capacity(d);
                for p in 0..pairs {
                    let u1 = 1.0 - (offset[2 * p] + i as f64 * alpha[2 * p]).fract();
                    let u2 = (offset[2 * p + 1] + i as f64 * alpha[2 * p + 1]).fract();
                    let r = (-2.0 * u1.ln()).sqrt();
                    let (s, c) = (2.0 * PI * u2).sin_cos();
                    coords.push(r * c);
                    coords.push(r * s);
                }
                coords.truncate(n);
                if let Ok(dir) = Direction::new(DVector::from_vec(coords)) {
                    out.push(Direction(canonical_hemisphere(dir.0)));
                }
            }
            out
        }
    }
}

/// Antipodally symmetric grid on `S^{n-1}` with at least `resolution` points.
///
/// The first half is [`hemisphere_points`], the second half its exact
/// negation in the same order.
pub fn sphere_grid(n: usize, resolution: usize, seed: u64) -> Vec<Direction> {
    let mut half = resolution.div_ceil(2).max(1);
    if n == 2 && half % 2 == 1 {
        // Keep ±e2 on the circle grid.
        half += 1;
    }
    let upper = hemisphere_points(n, half, seed);
    let lower: Vec<Direction> = upper.iter().map(Direction::negated).collect();
    upper.into_iter().chain(lower).collect()
}

/// Largest spherical distance from a grid point to its nearest neighbour in
/// the grid (brute force).
pub fn max_nearest_neighbor_angle(grid: &[Direction]) -> f64 {
    let mut worst = 0.0f64;
    for (i, a) in grid.iter().enumerate() {
        let nearest = grid
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, b)| a.angle_to(b))
            .fold(f64::INFINITY, f64::min);
        if nearest.is_finite() {
            worst = worst.max(nearest);
        }
    }
    worst
}

/// Estimate of the covering radius of `grid`: the largest distance from a
/// dense probe set to the grid.
pub fn covering_radius(grid: &[Direction]) -> f64 {
    let Some(first) = grid.first() else {
        return f64::INFINITY;
    };
    let probes = sphere_grid(first.dim(), 8 * grid.len().max(64), 0x5eed);
    probes
        .iter()
        .map(|p| grid.iter().map(|g| p.angle_to(g)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Symmetric part `(M + Mᵀ)/2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `f(Q)` for symmetric `Q`, applied through the eigen-decomposition.
pub fn sym_apply(q: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(q));
    let vals = eig.eigenvalues.map(f);
    let v = &eig.eigenvectors;
    symmetrize(&(v * DMatrix::from_diagonal(&vals) * v.transpose()))
}

/// Deterministic random helpers used by tests, benches and the CLI.
pub mod sampling {
    use super::*;

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    pub fn gaussian<R: Rng>(rng: &mut R) -> f64 {
        let u1: f64 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }

    pub fn gaussian_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| gaussian(rng))
    }

    pub fn random_direction<R: Rng>(rng: &mut R, n: usize) -> Direction {
        loop {
            if let Ok(d) = Direction::new(gaussian_vector(rng, n)) {
                return d;
            }
        }
    }

    /// Uniform unit vector orthogonal to `xi`.
    pub fn random_orthogonal<R: Rng>(rng: &mut R, xi: &Direction) -> Direction {
        loop {
            let mut v = gaussian_vector(rng, xi.dim());
            for _ in 0..2 {
                let proj = v.dot(xi.as_vector());
                v -= xi.as_vector() * proj;
            }
            if let Ok(d) = Direction::new(v) {
                return d;
            }
        }
    }

    /// Random orthogonal matrix (QR of a Gaussian matrix, sign-fixed).
    pub fn random_orthogonal_matrix<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
        let g = DMatrix::from_fn(n, n, |_, _| gaussian(rng));
        let qr = g.qr();
        let mut q = qr.q();
        let r = qr.r();
        for j in 0..n {
            if r[(j, j)] < 0.0 {
                let mut col = q.column_mut(j);
                col.neg_mut();
            }
        }
        q
    }

    /// Well-conditioned random element of `GL(n)`: `U diag(s) V` with
    /// singular values drawn from `[lo, hi]`.
    pub fn random_gl<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> LinearMap {
        let u = random_orthogonal_matrix(rng, n);
        let v = random_orthogonal_matrix(rng, n);
        let s = DVector::from_fn(n, |_, _| rng.gen_range(lo..=hi));
        LinearMap::new(u * DMatrix::from_diagonal(&s) * v).expect("well-conditioned")
    }

    /// Random SPD matrix whose ellipsoid has semi-axes in `[lo, hi]`.
    pub fn random_spd<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> DMatrix<f64> {
        let u = random_orthogonal_matrix(rng, n);
        let inv_sq = DVector::from_fn(n, |_, _| {
            let a: f64 = rng.gen_range(lo..=hi);
            1.0 / (a * a)
        });
        symmetrize(&(&u * DMatrix::from_diagonal(&inv_sq) * u.transpose()))
    }
}

#[cfg(test)]
mod tests {
    use super::sampling::*;
    use super::*;

    fn dir(c: &[f64]) -> Direction {
        Direction::from_slice(c).unwrap()
    }

    #[test]
    fn frame_of_coordinate_axes_is_canonical() {
        let f = orthonormal_frame(&Direction::axis(3, 2));
        assert_eq!(f.column(0), Direction::axis(3, 0));
        assert_eq!(f.column(1), Direction::axis(3, 1));
        let f = orthonormal_frame(&Direction::axis(3, 0));
        assert_eq!(f.column(0), Direction::axis(3, 1));
        assert_eq!(f.column(1), Direction::axis(3, 2));
    }

    #[test]
    fn frame_of_diagonal_is_orthonormal() {
        let xi = dir(&[1.0, 1.0, 1.0]);
        let f = orthonormal_frame(&xi);
        let gram = f.basis().transpose() * f.basis();
        assert!((gram - DMatrix::identity(2, 2)).amax() < 1e-12);
        assert!((f.basis().transpose() * xi.as_vector()).amax() < 1e-12);
    }

    #[test]
    fn frame_is_bitwise_deterministic() {
        let xi = dir(&[0.3, -0.2, 0.9, 0.1]);
        assert_eq!(orthonormal_frame(&xi), orthonormal_frame(&xi));
        assert_eq!(orthonormal_frame(&xi).basis(), orthonormal_frame(&xi.negated()).basis());
    }

    #[test]
    fn planar_quarter_turn() {
        let r = geodesic_rotation(&Direction::axis(3, 0), &Direction::axis(3, 1)).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!((r.matrix() - expected).amax() < 1e-15);
    }

    #[test]
    fn rotation_of_equal_directions_is_identity() {
        let a = dir(&[0.2, 0.4, -0.5]);
        let r = geodesic_rotation(&a, &a).unwrap();
        assert_eq!(r.matrix(), &DMatrix::identity(3, 3));
    }

    #[test]
    fn rotation_to_half_angle() {
        let a = Direction::axis(3, 0);
        let b = dir(&[1.0, 1.0, 0.0]);
        let r = geodesic_rotation(&a, &b).unwrap();
        let rtr = r.matrix().transpose() * r.matrix();
        assert!((rtr - DMatrix::identity(3, 3)).amax() < 1e-12);
        assert!((r.apply(a.as_vector()) - b.as_vector()).amax() < 1e-12);
    }

    #[test]
    fn antipodal_rotation_is_rejected() {
        let a = Direction::axis(3, 0);
        assert!(matches!(
            geodesic_rotation(&a, &a.negated()),
            Err(Error::AntipodalInput { .. })
        ));
    }

    #[test]
    fn rotation_round_trip_is_identity() {
        let mut rng = rng(7);
        for _ in 0..100 {
            let n = rng.gen_range(2..=6);
            let a = random_direction(&mut rng, n);
            let b = random_direction(&mut rng, n);
            if a.dot(&b) < -0.99 {
                continue;
            }
            let ab = geodesic_rotation(&a, &b).unwrap();
            let ba = geodesic_rotation(&b, &a).unwrap();
            let id = ba.compose(&ab);
            assert!((id.matrix() - DMatrix::identity(n, n)).amax() < 1e-10);
        }
    }

    #[test]
    fn rotation_fixes_complement() {
        let a = dir(&[1.0, 2.0, 0.0, 0.0]);
        let b = dir(&[0.0, 1.0, 1.0, 0.0]);
        let r = geodesic_rotation(&a, &b).unwrap();
        let e4 = Direction::axis(4, 3);
        assert!((r.apply(e4.as_vector()) - e4.as_vector()).amax() < 1e-15);
    }

    #[test]
    fn circle_grid_contains_axes() {
        let g = sphere_grid(2, 4, 0);
        assert_eq!(g.len(), 4);
        for axis in 0..2 {
            let e = Direction::axis(2, axis);
            assert!(g.contains(&e));
            assert!(g.contains(&e.negated()));
        }
    }

    #[test]
    fn grids_are_exactly_antipodal() {
        for n in 2..=5 {
            let g = sphere_grid(n, 101, 3);
            assert!(g.len() >= 101);
            for p in &g {
                assert!((p.as_vector().norm() - 1.0).abs() < 1e-12);
                assert!(g.contains(&p.negated()));
            }
        }
    }

    #[test]
    fn grid_is_reproducible() {
        for n in 2..=5 {
            assert_eq!(sphere_grid(n, 300, 11), sphere_grid(n, 300, 11));
        }
    }

    #[test]
    fn fibonacci_grid_nearest_neighbor_spacing() {
        // Oracle: brute force over all pairs of the emitted grid.
        let g = sphere_grid(3, 1000, 0);
        let mut worst = 0.0f64;
        for (i, a) in g.iter().enumerate() {
            let mut best = f64::INFINITY;
            for (j, b) in g.iter().enumerate() {
                if i != j {
                    let c = a.dot(b).clamp(-1.0, 1.0);
                    best = best.min(c.acos());
                }
            }
            worst = worst.max(best);
        }
        assert!(worst < 0.2, "max nearest-neighbour angle {worst}");
        assert!((max_nearest_neighbor_angle(&g) - worst).abs() < 1e-6);
    }

    #[test]
    fn covering_radius_shrinks_with_resolution() {
        let coarse = covering_radius(&sphere_grid(3, 100, 0));
        let fine = covering_radius(&sphere_grid(3, 400, 0));
        assert!(fine < coarse, "{fine} !< {coarse}");
    }

    #[test]
    fn great_circle_quarter_turns() {
        let pts = great_circle(&Direction::axis(3, 0), &Direction::axis(3, 1), 4).unwrap();
        let expected = [
            Direction::axis(3, 0),
            Direction::axis(3, 1),
            Direction::axis(3, 0).negated(),
            Direction::axis(3, 1).negated(),
        ];
        assert_eq!(pts, expected);
    }

    #[test]
    fn great_circle_spacing_is_uniform() {
        let theta = Direction::axis(3, 0);
        let zeta = Direction::axis(3, 2);
        let pts = great_circle(&theta, &zeta, 8).unwrap();
        for p in &pts {
            assert!((p.as_vector().norm() - 1.0).abs() < 1e-15);
            assert_eq!(p.as_vector()[1], 0.0);
        }
        let mut rng = rng(3);
        let theta = random_direction(&mut rng, 4);
        let zeta = random_orthogonal(&mut rng, &theta);
        let pts = great_circle(&theta, &zeta, 37).unwrap();
        for k in 0..pts.len() {
            let gap = pts[k].angle_to(&pts[(k + 1) % pts.len()]);
            assert!((gap - 2.0 * PI / 37.0).abs() < 1e-12);
        }
    }

    #[test]
    fn great_circle_rejects_non_orthogonal() {
        let a = Direction::axis(3, 0);
        let b = dir(&[1.0, 1.0, 0.0]);
        assert!(matches!(great_circle(&a, &b, 8), Err(Error::NotOrthogonal { .. })));
    }

    #[test]
    fn singular_map_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(LinearMap::new(m), Err(Error::SingularMap));
    }
}
