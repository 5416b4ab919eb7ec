//! Origin-symmetric convex bodies with gauge, radial and support evaluation.
//!
//! Every body kind is validated at construction, so a [`BodyModel`] value is
//! always a genuine origin-symmetric convex body with the origin in its
//! interior. Evaluations are pure and exactly symmetric: `gauge(x)` and
//! `gauge(-x)` are bit-equal because both are evaluated at the same
//! canonical representative of `±x`.

mod lp;
mod parse;

use std::borrow::Cow;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{self, covering_radius, Direction, LinearMap, SectionFrame};

pub use parse::{parse_body_spec, parse_body_spec_in};

/// A centered ellipsoid `{x : xᵀQx <= 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidRep {
    q: DMatrix<f64>,
    q_inv: DMatrix<f64>,
}

impl EllipsoidRep {
    /// Accepts `Q` symmetric within `1e-12` (relative) and positive definite.
    pub fn new(q: DMatrix<f64>) -> Result<Self> {
        let n = q.nrows();
        if q.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: q.ncols() });
        }
        if n < 1 || q.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidBody("ellipsoid matrix must be finite".into()));
        }
        let scale = q.amax().max(f64::MIN_POSITIVE);
        if (&q - q.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidBody("ellipsoid matrix is not symmetric".into()));
        }
        let q = geom::symmetrize(&q);
        let min_eig = SymmetricEigen::new(q.clone()).eigenvalues.min();
        if min_eig <= 0.0 {
            return Err(Error::InvalidBody(format!(
                "ellipsoid matrix is not positive definite (min eigenvalue {min_eig:e})"
            )));
        }
        let q_inv = geom::symmetrize(&q.clone().try_inverse().ok_or(Error::SingularMap)?);
        Ok(EllipsoidRep { q, q_inv })
    }

    pub fn unit_ball(n: usize) -> Self {
        EllipsoidRep { q: DMatrix::identity(n, n), q_inv: DMatrix::identity(n, n) }
    }

    pub fn from_semi_axes(axes: &[f64]) -> Result<Self> {
        if axes.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
            return Err(Error::InvalidBody("semi-axes must be positive".into()));
        }
        let diag = DVector::from_iterator(axes.len(), axes.iter().map(|a| 1.0 / (a * a)));
        Self::new(DMatrix::from_diagonal(&diag))
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn q_inv(&self) -> &DMatrix<f64> {
        &self.q_inv
    }

    pub fn gauge(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.q * x)).max(0.0).sqrt()
    }

    pub fn support_vec(&self, v: &DVector<f64>) -> f64 {
        v.dot(&(&self.q_inv * v)).max(0.0).sqrt()
    }

    pub fn radial(&self, theta: &Direction) -> f64 {
        1.0 / self.gauge(theta.as_vector())
    }

    /// Semi-axis lengths in ascending order.
    pub fn semi_axes(&self) -> Vec<f64> {
        let mut axes: Vec<f64> = SymmetricEigen::new(self.q.clone())
            .eigenvalues
            .iter()
            .map(|l| 1.0 / l.sqrt())
            .collect();
        axes.sort_by(f64::total_cmp);
        axes
    }

    /// `det(Q)^{-1/2}`, proportional to the volume.
    pub fn volume_factor(&self) -> f64 {
        1.0 / self.q.determinant().sqrt()
    }

    /// `{x : xᵀQ⁻¹x <= 1}`.
    pub fn polar(&self) -> EllipsoidRep {
        EllipsoidRep { q: self.q_inv.clone(), q_inv: self.q.clone() }
    }

    /// `φ(E)`, with `Q' = φ⁻ᵀ Q φ⁻¹`.
    pub fn linear_image(&self, phi: &LinearMap) -> Result<EllipsoidRep> {
        let inv = phi.inverse_matrix();
        EllipsoidRep::new(geom::symmetrize(&(inv.transpose() * &self.q * inv)))
    }

    pub fn scaled(&self, s: f64) -> Result<EllipsoidRep> {
        EllipsoidRep::new(&self.q / (s * s))
    }

    /// The matrix `A = Q^{-1/2}` with `E = A·B^n`.
    pub fn sqrt_shape(&self) -> DMatrix<f64> {
        geom::sym_apply(&self.q, |l| 1.0 / l.sqrt())
    }
}

/// The unit ball of the ℓp norm on `R^n`, `1 <= p < ∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpBall {
    p: f64,
    n: usize,
}

fn lp_norm(x: &DVector<f64>, p: f64) -> f64 {
    if p == 1.0 {
        return x.iter().map(|v| v.abs()).sum();
    }
    if p.is_infinite() {
        return x.amax();
    }
    let m = x.amax();
    if m == 0.0 {
        return 0.0;
    }
    if p == 2.0 {
        return x.norm();
    }
    m * x.iter().map(|v| (v.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
}

impl LpBall {
    pub fn new(n: usize, p: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::DimensionTooSmall { min: 2, found: n });
        }
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::InvalidBody(format!("lp ball needs finite p >= 1, got {p}")));
        }
        Ok(LpBall { p, n })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn gauge(&self, x: &DVector<f64>) -> f64 {
        lp_norm(x, self.p)
    }

    /// Dual norm `‖v‖_q`, `1/p + 1/q = 1`.
    pub fn support_vec(&self, v: &DVector<f64>) -> f64 {
        if self.p == 1.0 {
            lp_norm(v, f64::INFINITY)
        } else {
            lp_norm(v, self.p / (self.p - 1.0))
        }
    }
}

/// `{x : |<a_i, x>| <= 1 for all i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolytopeH {
    rows: Vec<DVector<f64>>,
    start: Vec<usize>,
}

impl PolytopeH {
    /// Requires at least `n` rows of rank `n` (boundedness).
    pub fn new(rows: Vec<DVector<f64>>) -> Result<Self> {
        let n = rows.first().map(|r| r.len()).unwrap_or(0);
        if n < 1 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidBody("polytope rows must be nonempty and of equal length".into()));
        }
        if rows.iter().any(|r| r.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidBody("polytope rows must be finite".into()));
        }
        if rows.len() < n {
            return Err(Error::InvalidBody(format!("need at least {n} rows, got {}", rows.len())));
        }
        let start = lp::independent_columns(&rows)
            .ok_or_else(|| Error::InvalidBody("polytope rows do not have full rank".into()))?;
        Ok(PolytopeH { rows, start })
    }

    pub fn dim(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[DVector<f64>] {
        &self.rows
    }

    /// The rows together with their negatives: the symmetric vertex set of
    /// the polar body.
    pub fn symmetric_rows(&self) -> Vec<DVector<f64>> {
        self.rows.iter().flat_map(|r| [r.clone(), -r]).collect()
    }

    pub fn gauge(&self, x: &DVector<f64>) -> f64 {
        self.rows.iter().map(|a| a.dot(x).abs()).fold(0.0, f64::max)
    }

    pub fn support_vec(&self, v: &DVector<f64>) -> f64 {
        lp::min_l1_representation(&self.rows, &self.start, v).value
    }

    /// A point of the body maximizing `<x, v>`.
    pub fn support_point(&self, v: &DVector<f64>) -> DVector<f64> {
        lp::min_l1_representation(&self.rows, &self.start, v).dual
    }
}

/// `conv{v_j}` for a vertex list closed under negation.
#[derive(Debug, Clone, PartialEq)]
pub struct PolytopeV {
    vertices: Vec<DVector<f64>>,
    start: Vec<usize>,
}

impl PolytopeV {
    pub fn new(vertices: Vec<DVector<f64>>) -> Result<Self> {
        let n = vertices.first().map(|r| r.len()).unwrap_or(0);
        if n < 1 || vertices.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidBody("vertices must be nonempty and of equal length".into()));
        }
        if vertices.iter().any(|r| r.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidBody("vertices must be finite".into()));
        }
        for v in &vertices {
            let tol = 1e-9 * v.norm().max(1.0);
            if !vertices.iter().any(|w| (v + w).amax() <= tol) {
                return Err(Error::InvalidBody("vertices must come in ± pairs".into()));
            }
        }
        let start = lp::independent_columns(&vertices)
            .ok_or_else(|| Error::InvalidBody("vertices do not span the space".into()))?;
        Ok(PolytopeV { vertices, start })
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn vertices(&self) -> &[DVector<f64>] {
        &self.vertices
    }

    pub fn gauge(&self, x: &DVector<f64>) -> f64 {
        lp::min_l1_representation(&self.vertices, &self.start, x).value
    }

    pub fn support_vec(&self, v: &DVector<f64>) -> f64 {
        self.vertices.iter().map(|w| w.dot(v).abs()).fold(0.0, f64::max)
    }
}

/// `φ(K)` for a base body without a closed-form image.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearImage {
    base: Box<BodyModel>,
    map: LinearMap,
}

impl LinearImage {
    pub fn base(&self) -> &BodyModel {
        &self.base
    }

    pub fn map(&self) -> &LinearMap {
        &self.map
    }
}

/// The central section `K ∩ ξ⊥` in frame coordinates, evaluated through the
/// ambient gauge: `‖u‖ = ‖Bu‖_K`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionGauge {
    ambient: Box<BodyModel>,
    frame: SectionFrame,
}

impl SectionGauge {
    pub fn ambient(&self) -> &BodyModel {
        &self.ambient
    }

    pub fn frame(&self) -> &SectionFrame {
        &self.frame
    }

    fn gauge(&self, u: &DVector<f64>) -> f64 {
        self.ambient.gauge(&self.frame.from_frame(u))
    }

    /// `h_{K∩ξ⊥}(v) = min_s h_K(Bv + sξ)`: the polar of a section is the
    /// projection of the polar. Golden-section search on the convex
    /// one-dimensional function, bracketed by `|s| <= h_K(Bv)/ρ_K(ξ)`.
    fn support_vec(&self, v: &DVector<f64>) -> f64 {
        let w = self.frame.from_frame(v);
        let xi = self.frame.normal().as_vector();
        let f = |s: f64| self.ambient.support_vec(&(&w + xi * s));
        let f0 = f(0.0);
        if f0 == 0.0 {
            return 0.0;
        }
        let bound = f0 * self.ambient.gauge(xi) * (1.0 + 1e-9) + 1e-300;
        let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (-bound, bound);
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        let mut best = f0.min(fc).min(fd);
        for _ in 0..200 {
            if (b - a) <= 1e-15 * bound {
                break;
            }
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = f(c);
                best = best.min(fc);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = f(d);
                best = best.min(fd);
            }
        }
        best
    }
}

/// Tagged union of the supported origin-symmetric convex bodies.
#[derive(Debug, Clone, PartialEq)]
pub enum BodyModel {
    Ellipsoid(EllipsoidRep),
    LpBall(LpBall),
    PolytopeH(PolytopeH),
    PolytopeV(PolytopeV),
    LinearImage(LinearImage),
    Section(SectionGauge),
}

/// Representative of `±x` whose first nonzero coordinate is positive.
fn canonical(x: &DVector<f64>) -> Cow<'_, DVector<f64>> {
    match x.iter().find(|v| **v != 0.0) {
        Some(v) if *v < 0.0 => Cow::Owned(-x),
        _ => Cow::Borrowed(x),
    }
}

impl BodyModel {
    pub fn unit_ball(n: usize) -> Self {
        BodyModel::Ellipsoid(EllipsoidRep::unit_ball(n))
    }

    pub fn ellipsoid(q: DMatrix<f64>) -> Result<Self> {
        EllipsoidRep::new(q).map(BodyModel::Ellipsoid)
    }

    pub fn ellipsoid_from_semi_axes(axes: &[f64]) -> Result<Self> {
        EllipsoidRep::from_semi_axes(axes).map(BodyModel::Ellipsoid)
    }

    pub fn lp_ball(n: usize, p: f64) -> Result<Self> {
        LpBall::new(n, p).map(BodyModel::LpBall)
    }

    pub fn polytope_h(rows: Vec<DVector<f64>>) -> Result<Self> {
        PolytopeH::new(rows).map(BodyModel::PolytopeH)
    }

    pub fn polytope_v(vertices: Vec<DVector<f64>>) -> Result<Self> {
        PolytopeV::new(vertices).map(BodyModel::PolytopeV)
    }

    /// `[-1, 1]^n` as an H-polytope with rows `e_i`.
    pub fn cube(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::DimensionTooSmall { min: 2, found: n });
        }
        Self::polytope_h((0..n).map(|i| unit_vector(n, i)).collect())
    }

    /// The ℓ1 ball as an H-polytope: rows `(1, ±1, ..., ±1)`.
    pub fn cross_polytope(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::DimensionTooSmall { min: 2, found: n });
        }
        let rows = (0..1usize << (n - 1))
            .map(|mask| {
                DVector::from_fn(n, |i, _| {
                    if i == 0 || mask >> (i - 1) & 1 == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                })
            })
            .collect();
        Self::polytope_h(rows)
    }

    pub fn from_spec(spec: &str) -> Result<Self> {
        parse_body_spec(spec)
    }

    pub fn dim(&self) -> usize {
        match self {
            BodyModel::Ellipsoid(e) => e.dim(),
            BodyModel::LpBall(b) => b.dim(),
            BodyModel::PolytopeH(p) => p.dim(),
            BodyModel::PolytopeV(p) => p.dim(),
            BodyModel::LinearImage(l) => l.map.dim(),
            BodyModel::Section(s) => s.frame.ambient_dim() - 1,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            BodyModel::Ellipsoid(_) => "ellipsoid",
            BodyModel::LpBall(_) => "lp-ball",
            BodyModel::PolytopeH(_) => "polytope-h",
            BodyModel::PolytopeV(_) => "polytope-v",
            BodyModel::LinearImage(_) => "linear-image",
            BodyModel::Section(_) => "section",
        }
    }

    fn gauge_raw(&self, x: &DVector<f64>) -> f64 {
        match self {
            BodyModel::Ellipsoid(e) => e.gauge(x),
            BodyModel::LpBall(b) => b.gauge(x),
            BodyModel::PolytopeH(p) => p.gauge(x),
            BodyModel::PolytopeV(p) => p.gauge(x),
            BodyModel::LinearImage(l) => l.base.gauge(&l.map.apply_inverse(x)),
            BodyModel::Section(s) => s.gauge(x),
        }
    }

    fn support_raw(&self, v: &DVector<f64>) -> f64 {
        match self {
            BodyModel::Ellipsoid(e) => e.support_vec(v),
            BodyModel::LpBall(b) => b.support_vec(v),
            BodyModel::PolytopeH(p) => p.support_vec(v),
            BodyModel::PolytopeV(p) => p.support_vec(v),
            BodyModel::LinearImage(l) => l.base.support_vec(&l.map.matrix().tr_mul(v)),
            BodyModel::Section(s) => s.support_vec(v),
        }
    }

    /// Minkowski gauge `‖x‖_K = inf{a >= 0 : x ∈ aK}`.
    ///
    /// Panics if `x` has the wrong dimension.
    pub fn gauge(&self, x: &DVector<f64>) -> f64 {
        assert_eq!(x.len(), self.dim(), "gauge: vector dimension mismatch");
        self.gauge_raw(&canonical(x))
    }

    /// Radial function `ρ_K(θ) = 1/‖θ‖_K`.
    pub fn radial(&self, theta: &Direction) -> f64 {
        1.0 / self.gauge(theta.as_vector())
    }

    /// Support function extended homogeneously to all of `R^n`.
    pub fn support_vec(&self, v: &DVector<f64>) -> f64 {
        assert_eq!(v.len(), self.dim(), "support: vector dimension mismatch");
        self.support_raw(&canonical(v))
    }

    /// `h_K(θ) = max{<x, θ> : x ∈ K}`.
    pub fn support(&self, theta: &Direction) -> f64 {
        self.support_vec(theta.as_vector())
    }

    /// The boundary point `ρ_K(θ)·θ`.
    pub fn boundary_point(&self, theta: &Direction) -> DVector<f64> {
        theta.as_vector() * self.radial(theta)
    }

    /// `φ(K)`, kept in closed form whenever the kind allows it.
    pub fn linear_image(&self, phi: &LinearMap) -> Result<BodyModel> {
        if phi.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: phi.dim() });
        }
        Ok(match self {
            BodyModel::Ellipsoid(e) => BodyModel::Ellipsoid(e.linear_image(phi)?),
            BodyModel::PolytopeH(p) => {
                let inv_t = phi.inverse_matrix().transpose();
                BodyModel::PolytopeH(PolytopeH::new(p.rows.iter().map(|a| &inv_t * a).collect())?)
            }
            BodyModel::PolytopeV(p) => {
                BodyModel::PolytopeV(PolytopeV::new(p.vertices.iter().map(|v| phi.apply(v)).collect())?)
            }
            BodyModel::LinearImage(l) => BodyModel::LinearImage(LinearImage {
                base: l.base.clone(),
                map: phi.compose(&l.map),
            }),
            other => BodyModel::LinearImage(LinearImage {
                base: Box::new(other.clone()),
                map: phi.clone(),
            }),
        })
    }

    /// `sK` for `s > 0`.
    pub fn scaled(&self, s: f64) -> Result<BodyModel> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidArgument(format!("scale must be positive, got {s}")));
        }
        self.linear_image(&LinearMap::scaling(self.dim(), s)?)
    }

    /// Wraps `K ∩ ξ⊥` as a gauge body in the given frame.
    pub(crate) fn section_gauge(&self, frame: SectionFrame) -> BodyModel {
        BodyModel::Section(SectionGauge { ambient: Box::new(self.clone()), frame })
    }

    /// Checks that the origin is interior on a validation grid:
    /// every radial value is finite and at least `min_radius`.
    pub fn check_interior(&self, grid: &[Direction], min_radius: f64) -> Result<()> {
        for theta in grid {
            let r = self.radial(theta);
            if !r.is_finite() || r < min_radius {
                return Err(Error::InvalidBody(format!(
                    "radial value {r} below {min_radius} at {:?}",
                    theta.coords()
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn unit_vector(n: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}

/// Support-function sup-distance restricted to a grid, with the grid's
/// covering radius for error accounting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridHausdorff {
    pub distance: f64,
    pub covering_radius: f64,
}

/// `max_θ |h_K(θ) - h_L(θ)|` over `grid`; a lower bound on the Hausdorff
/// distance that converges as the grid refines.
pub fn hausdorff(k: &BodyModel, l: &BodyModel, grid: &[Direction]) -> Result<f64> {
    if k.dim() != l.dim() {
        return Err(Error::DimensionMismatch { expected: k.dim(), found: l.dim() });
    }
    if grid.is_empty() {
        return Err(Error::InvalidArgument("hausdorff grid is empty".into()));
    }
    let mut worst = 0.0f64;
    for theta in grid {
        if theta.dim() != k.dim() {
            return Err(Error::DimensionMismatch { expected: k.dim(), found: theta.dim() });
        }
        worst = worst.max((k.support(theta) - l.support(theta)).abs());
    }
    Ok(worst)
}

pub fn hausdorff_report(k: &BodyModel, l: &BodyModel, grid: &[Direction]) -> Result<GridHausdorff> {
    Ok(GridHausdorff { distance: hausdorff(k, l, grid)?, covering_radius: covering_radius(grid) })
}
