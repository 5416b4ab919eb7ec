//! John (maximum-volume inscribed) ellipsoids of origin-symmetric bodies.
//!
//! For an H-polytope `P = {x : |<a_i, x>| <= 1}` the John ellipsoid is the
//! polar of the minimum-volume centered ellipsoid enclosing the rows `±a_i`.
//! The enclosing problem is solved on its weight dual, `max log det Σ u_i
//! a_i a_iᵀ` over the simplex, by Frank–Wolfe (Khachiyan) steps with
//! Wolfe–Atwood away steps. Smooth bodies go through an outer tangent
//! polytope followed by a shrink back inside the body.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::bodies::{hausdorff, BodyModel, EllipsoidRep, PolytopeH};
use crate::error::{Error, Result};
use crate::geom::{self, sphere_grid, Direction, LinearMap};

pub const MVEE_MAX_ITERATIONS: usize = 1_000_000;

/// How a [`JohnResult`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum JohnMethod {
    /// The body is an ellipsoid and is its own John ellipsoid.
    Exact,
    /// Polar of the enclosing ellipsoid of the H-rows.
    Polytope,
    /// Tangent-halfspace outer polytope, then shrunk into the body.
    OuterApproximation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JohnSettings {
    /// Relative optimality of the enclosing-ellipsoid solve.
    pub eps: f64,
    /// Number of tangent halfspaces used for bodies without an H-form.
    pub facet_directions: usize,
    /// Grid size of the containment check behind the shrink factor.
    pub validation_points: usize,
    /// Ratio threshold for reporting a grid direction as a contact.
    pub contact_tol: f64,
}

impl Default for JohnSettings {
    fn default() -> Self {
        JohnSettings { eps: 1e-10, facet_directions: 512, validation_points: 4096, contact_tol: 1e-6 }
    }
}

impl JohnSettings {
    pub fn with_eps(eps: f64) -> Self {
        JohnSettings { eps, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JohnResult {
    #[serde(serialize_with = "serialize_ellipsoid")]
    pub ellipsoid: EllipsoidRep,
    pub eps: f64,
    pub iterations: usize,
    /// Directions where the ellipsoid touches the body boundary.
    pub contact_directions: Vec<Direction>,
    pub method: JohnMethod,
    /// `max_i pᵢᵀM⁻¹pᵢ / d` at termination (1 for the exact case).
    pub certificate_ratio: f64,
    /// Shrink applied after the outer approximation (1 otherwise).
    pub shrink_factor: f64,
    /// Number of halfspaces in the polytope that was solved (0 for exact).
    pub facet_count: usize,
}

fn serialize_ellipsoid<S: serde::Serializer>(
    e: &EllipsoidRep,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let n = e.dim();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| e.q()[(i, j)]).collect()).collect();
    rows.serialize(s)
}

impl JohnResult {
    pub fn body(&self) -> BodyModel {
        BodyModel::Ellipsoid(self.ellipsoid.clone())
    }

    /// `max ρ_J/ρ_K` over `grid` and the recorded contacts; 1 at a contact.
    pub fn contact_ratio(&self, k: &BodyModel, grid: &[Direction]) -> f64 {
        grid.iter()
            .chain(&self.contact_directions)
            .map(|theta| self.ellipsoid.radial(theta) / k.radial(theta))
            .fold(0.0, f64::max)
    }

    /// Largest relative containment violation `ρ_J/ρ_K - 1` on `grid`.
    pub fn containment_excess(&self, k: &BodyModel, grid: &[Direction]) -> f64 {
        grid.iter()
            .map(|theta| self.ellipsoid.radial(theta) / k.radial(theta) - 1.0)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Output of the enclosing-ellipsoid solve.
#[derive(Debug, Clone)]
pub struct MveeSolution {
    /// `{x : xᵀ Q x <= 1}` with `Q = M⁻¹/κ_max`; contains every point.
    pub ellipsoid: EllipsoidRep,
    pub weights: Vec<f64>,
    /// `pᵢᵀ M⁻¹ pᵢ` at termination.
    pub kappas: Vec<f64>,
    pub kappa_max: f64,
    pub iterations: usize,
}

impl MveeSolution {
    /// The certificate `κ_max / d`; at most `1 + eps` on return.
    pub fn certificate_ratio(&self) -> f64 {
        self.kappa_max / self.ellipsoid.dim() as f64
    }
}

fn weighted_moment(points: &[DVector<f64>], weights: &[f64]) -> DMatrix<f64> {
    let d = points[0].len();
    let mut m = DMatrix::zeros(d, d);
    for (p, &u) in points.iter().zip(weights) {
        if u > 0.0 {
            m.ger(u, p, p, 1.0);
        }
    }
    geom::symmetrize(&m)
}

/// `vech(yyᵀ)` with off-diagonal entries scaled by √2, so that
/// `<w(y), w(z)> = (yᵀz)²`.
fn lifted(y: &DVector<f64>) -> DVector<f64> {
    let d = y.len();
    let mut w = DVector::zeros(d * (d + 1) / 2);
    let mut k = 0;
    for a in 0..d {
        w[k] = y[a] * y[a];
        k += 1;
        for b in a + 1..d {
            w[k] = std::f64::consts::SQRT_2 * y[a] * y[b];
            k += 1;
        }
    }
    w
}

/// Symmetric matrix with coordinates `x` in the orthonormal basis matching
/// [`lifted`].
fn unlift(x: &DVector<f64>, d: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(d, d);
    let mut k = 0;
    for a in 0..d {
        m[(a, a)] = x[k];
        k += 1;
        for b in a + 1..d {
            m[(a, b)] = x[k] / std::f64::consts::SQRT_2;
            m[(b, a)] = m[(a, b)];
            k += 1;
        }
    }
    m
}

fn lift_matrix(m: &DMatrix<f64>) -> DVector<f64> {
    let d = m.nrows();
    let mut x = DVector::zeros(d * (d + 1) / 2);
    let mut k = 0;
    for a in 0..d {
        x[k] = m[(a, a)];
        k += 1;
        for b in a + 1..d {
            x[k] = std::f64::consts::SQRT_2 * m[(a, b)];
            k += 1;
        }
    }
    x
}

/// Barrier weight past which the slacks `1 - pᵀXp` are too close to
/// rounding level to give a useful certificate.
const BARRIER_T_MAX: f64 = 1e9;

/// Primal barrier phase: `min t·(-log det X) - Σ log(1 - pᵢᵀXpᵢ)` for
/// increasing `t`, with Newton systems of size `d(d+1)/2`. Returns dual
/// weights `uᵢ ∝ 1/sᵢ` and the Newton step count.
fn barrier_weights(points: &[DVector<f64>], eps: f64) -> Result<(Vec<f64>, usize)> {
    let d = points[0].len();
    let df = d as f64;
    let r = d * (d + 1) / 2;
    let lifts: Vec<DVector<f64>> = points.iter().map(lifted).collect();
    let radius = points.iter().map(|p| p.norm_squared()).fold(0.0, f64::max);
    if radius == 0.0 {
        return Err(Error::DegeneratePoints);
    }
    let mut x = lift_matrix(&DMatrix::from_diagonal_element(d, d, 0.5 / radius));
    let slacks_of = |x: &DVector<f64>| -> Vec<f64> { lifts.iter().map(|w| 1.0 - w.dot(x)).collect() };
    let weights_of = |slacks: &[f64]| -> Vec<f64> {
        let total: f64 = slacks.iter().map(|s| 1.0 / s).sum();
        slacks.iter().map(|s| 1.0 / (s * total)).collect()
    };
    let mut slacks = slacks_of(&x);
    let mut t = 1.0;
    let mut steps = 0;
    // On the central path max κ <= d + m/t; stop once that is within reach.
    let t_goal = (points.len() as f64 / (0.1 * eps * df)).min(BARRIER_T_MAX);
    loop {
        let xm = unlift(&x, d);
        let x_inv = xm.cholesky().ok_or(Error::DegeneratePoints)?.inverse();
        let mut grad = -lift_matrix(&x_inv) * t;
        let mut hess = DMatrix::zeros(r, r);
        for k in 0..r {
            let mut e = DVector::zeros(r);
            e[k] = 1.0;
            let col = lift_matrix(&(&x_inv * unlift(&e, d) * &x_inv));
            for l in 0..r {
                hess[(l, k)] = t * col[l];
            }
        }
        for (w, s) in lifts.iter().zip(&slacks) {
            grad += w / *s;
            hess.ger(1.0 / (s * s), w, w, 1.0);
        }
        let chol = geom::symmetrize(&hess).cholesky().ok_or(Error::DegeneratePoints)?;
        let step = -chol.solve(&grad);
        let decrement = (-grad.dot(&step)).max(0.0).sqrt();
        if decrement < 1e-3 {
            if t >= t_goal {
                return Ok((weights_of(&slacks), steps));
            }
            t = (t * 10.0).min(t_goal);
            continue;
        }
        let mut alpha = if decrement < 0.25 { 1.0 } else { 1.0 / (1.0 + decrement) };
        loop {
            let trial = &x + &step * alpha;
            let trial_slacks = slacks_of(&trial);
            if trial_slacks.iter().all(|s| *s > 0.0) && unlift(&trial, d).cholesky().is_some() {
                x = trial;
                slacks = trial_slacks;
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-20 {
                return Ok((weights_of(&slacks), steps));
            }
        }
        steps += 1;
        if steps >= MVEE_MAX_ITERATIONS {
            return Err(Error::NoConvergence { iterations: steps });
        }
    }
}

/// Centered minimum-volume ellipsoid enclosing `points` (and, implicitly,
/// their negatives). Works on any spanning point set.
///
/// The weights `u` maximize `log det Σ uᵢpᵢpᵢᵀ` over the simplex; the
/// solver stops once `max κᵢ <= (1+eps)d` with `κᵢ = pᵢᵀM⁻¹pᵢ`. A primal
/// barrier phase gets close to the optimum, then Frank–Wolfe steps with
/// Wolfe–Atwood away steps finish from its weights. On their own the
/// first-order steps crawl on point sets with clusters of nearly parallel
/// points, which tangent polytopes of smooth bodies produce.
pub fn mvee_centered(points: &[DVector<f64>], eps: f64) -> Result<MveeSolution> {
    if !(eps > 0.0 && eps <= 0.1) {
        return Err(Error::InvalidArgument(format!("mvee eps must lie in (0, 0.1], got {eps}")));
    }
    let Some(first) = points.first() else {
        return Err(Error::DegeneratePoints);
    };
    let d = first.len();
    if let Some(p) = points.iter().find(|p| p.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: p.len() });
    }
    let df = d as f64;
    let (mut u, steps) = barrier_weights(points, eps)?;
    let mut moment = weighted_moment(points, &u);
    let mut kappas = vec![0.0; points.len()];

    for iteration in steps..=MVEE_MAX_ITERATIONS {
        if iteration % 64 == 63 {
            moment = weighted_moment(points, &u);
        }
        let chol = moment.clone().cholesky().ok_or(Error::DegeneratePoints)?;
        let l = chol.l();
        if l.diagonal().min() <= 1e-12 * moment.diagonal().amax().sqrt() {
            return Err(Error::DegeneratePoints);
        }
        let mut up = (0, f64::NEG_INFINITY);
        let mut down = (usize::MAX, f64::INFINITY);
        for (i, p) in points.iter().enumerate() {
            let k = l.solve_lower_triangular(p).expect("positive diagonal").norm_squared();
            kappas[i] = k;
            if k > up.1 {
                up = (i, k);
            }
            if u[i] > 0.0 && k < down.1 {
                down = (i, k);
            }
        }
        let (j, kappa_max) = up;
        if kappa_max <= (1.0 + eps) * df {
            let q = geom::symmetrize(&(chol.inverse() / kappa_max));
            return Ok(MveeSolution {
                ellipsoid: EllipsoidRep::new(q)?,
                weights: u,
                kappas,
                kappa_max,
                iterations: iteration,
            });
        }
        let forward_gap = kappa_max / df - 1.0;
        let away_gap = 1.0 - down.1 / df;
        let (idx, beta) = if away_gap > forward_gap && down.0 != usize::MAX && u[down.0] < 1.0 {
            let (k, kappa) = down;
            let floor = -u[k] / (1.0 - u[k]);
            let beta = if kappa > 1.0 { ((kappa - df) / (df * (kappa - 1.0))).max(floor) } else { floor };
            (k, beta)
        } else {
            (j, (kappa_max - df) / (df * (kappa_max - 1.0)))
        };
        for w in u.iter_mut() {
            *w *= 1.0 - beta;
        }
        u[idx] += beta;
        if u[idx] < 1e-300 {
            u[idx] = 0.0;
        }
        moment *= 1.0 - beta;
        moment.ger(beta, &points[idx], &points[idx], 1.0);
    }
    Err(Error::NoConvergence { iterations: MVEE_MAX_ITERATIONS })
}

/// Minimum-volume centered ellipsoid of a symmetric point set, up to a
/// volume factor `(1+eps)^{d/2}`; stops once `max_i pᵢᵀM⁻¹pᵢ <= (1+eps)d`.
pub fn mvee(points: &[DVector<f64>], eps: f64) -> Result<EllipsoidRep> {
    for p in points {
        let tol = 1e-9 * p.norm().max(1.0);
        if !points.iter().any(|q| (p + q).amax() <= tol) {
            return Err(Error::InvalidArgument("mvee points must be closed under negation".into()));
        }
    }
    Ok(mvee_centered(points, eps)?.ellipsoid)
}

/// `{x : xᵀQx <= 1} ↦ {x : xᵀQ⁻¹x <= 1}`.
pub fn polar_ellipsoid(e: &EllipsoidRep) -> EllipsoidRep {
    e.polar()
}

fn ellipsoid_axis_contacts(e: &EllipsoidRep) -> Vec<Direction> {
    let eig = SymmetricEigen::new(e.q().clone());
    (0..e.dim())
        .filter_map(|i| Direction::new(eig.eigenvectors.column(i).into_owned()).ok())
        .flat_map(|d| [d.negated(), d])
        .collect()
}

/// John ellipsoid of an H-polytope as the polar of the enclosing ellipsoid
/// of its rows.
pub fn john_polytope_h(p: &PolytopeH, eps: f64) -> Result<JohnResult> {
    let sol = mvee_centered(p.rows(), eps)?;
    let outer = &sol.ellipsoid;
    let inner = outer.polar();
    // Rows with κ at the maximum sit on the enclosing boundary; the matching
    // inner contact point is the support point of J in that row direction.
    let mut contact_directions = Vec::new();
    for (a, &k) in p.rows().iter().zip(&sol.kappas) {
        if k >= sol.kappa_max * (1.0 - 1e-6) {
            if let Ok(d) = Direction::new(outer.q() * a) {
                contact_directions.push(d.negated());
                contact_directions.push(d);
            }
        }
    }
    Ok(JohnResult {
        ellipsoid: inner,
        eps,
        iterations: sol.iterations,
        contact_directions,
        method: JohnMethod::Polytope,
        certificate_ratio: sol.certificate_ratio(),
        shrink_factor: 1.0,
        facet_count: p.rows().len(),
    })
}

/// Local pattern search on the sphere for the minimum of `f` near `start`.
fn pattern_minimize(f: impl Fn(&Direction) -> f64, start: &Direction, step0: f64) -> (Direction, f64) {
    let n = start.dim();
    let mut best = start.clone();
    let mut best_val = f(start);
    let mut step = step0;
    while step > 1e-7 {
        let frame = geom::orthonormal_frame(&best);
        let mut improved = false;
        for i in 0..n - 1 {
            for sign in [1.0, -1.0] {
                let cand = Direction::new(best.as_vector() + frame.basis().column(i) * (sign * step))
                    .expect("perturbation of a unit vector is nonzero");
                let v = f(&cand);
                if v < best_val {
                    best = cand;
                    best_val = v;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (best, best_val)
}

const MAX_CUT_ROUNDS: usize = 200;
const CUTS_PER_ROUND: usize = 8;
const CUT_TOL: f64 = 1e-9;
/// Cutting-plane polytopes carry clusters of nearly parallel facets, for
/// which the weight problem is degenerate and the certificate cannot be
/// pushed much below this.
pub const GENERAL_EPS_FLOOR: f64 = 1e-7;

/// John ellipsoid of a general body by cutting planes. Start from the
/// tangent polytope `{x : <x, θ> <= h_K(θ)}` over `facet_directions`, take
/// its John ellipsoid `E`, and add tangent halfspaces in the directions
/// where `h_E > h_K` until `E` fits. A final radial shrink `s <= 1` puts
/// `sE` inside `K` on the validation grid.
pub fn john_general(
    k: &BodyModel,
    facet_directions: &[Direction],
    settings: &JohnSettings,
) -> Result<JohnResult> {
    let n = k.dim();
    if facet_directions.len() < n * (n - 1) {
        return Err(Error::InvalidArgument(format!(
            "need at least {} facet directions in dimension {n}, got {}",
            n * (n - 1),
            facet_directions.len()
        )));
    }
    let eps = settings.eps.max(GENERAL_EPS_FLOOR);
    let tangent_row = |theta: &Direction| theta.as_vector() / k.support(theta);
    let mut rows: Vec<DVector<f64>> = facet_directions.iter().map(tangent_row).collect();
    let first = john_polytope_h(&PolytopeH::new(rows.clone())?, eps)?;
    // A badly placed initial facet set is reported before any refinement.
    let validation = sphere_grid(n, settings.validation_points, 0);
    let coarse = validation
        .iter()
        .map(|d| k.radial(d) / first.ellipsoid.radial(d))
        .fold(f64::INFINITY, f64::min);
    if coarse < 0.5 {
        return Err(Error::ShrinkBelowHalf { factor: coarse });
    }

    let support_k: Vec<f64> = validation.iter().map(|d| k.support(d)).collect();
    let step0 = (4.0 * std::f64::consts::PI / settings.validation_points as f64)
        .powf(1.0 / (n - 1) as f64)
        .min(0.5);
    let mut current = first;
    let mut iterations = current.iterations;
    for _ in 0..MAX_CUT_ROUNDS {
        let e = &current.ellipsoid;
        let mut excess: Vec<(f64, usize)> = validation
            .iter()
            .zip(&support_k)
            .enumerate()
            .map(|(i, (d, h))| (h / e.support_vec(d.as_vector()), i))
            .collect();
        excess.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut added = 0;
        for &(_, i) in excess.iter().take(CUTS_PER_ROUND) {
            let (d, v) =
                pattern_minimize(|d| k.support(d) / e.support_vec(d.as_vector()), &validation[i], step0);
            if v < 1.0 - CUT_TOL {
                rows.push(tangent_row(&d));
                added += 1;
            }
        }
        if added == 0 {
            break;
        }
        current = john_polytope_h(&PolytopeH::new(rows.clone())?, eps)?;
        iterations += current.iterations;
    }

    let e = &current.ellipsoid;
    let radial_ratio = |d: &Direction| k.radial(d) / e.radial(d);
    let mut ratios: Vec<(f64, usize)> =
        validation.iter().enumerate().map(|(i, d)| (radial_ratio(d), i)).collect();
    ratios.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut shrink = ratios[0].0;
    let mut refined = Vec::new();
    for &(_, i) in ratios.iter().take(CUTS_PER_ROUND) {
        let (d, v) = pattern_minimize(radial_ratio, &validation[i], step0);
        shrink = shrink.min(v);
        refined.push(d);
    }
    let shrink = shrink.min(1.0);
    if shrink < 0.5 {
        return Err(Error::ShrinkBelowHalf { factor: shrink });
    }
    let ellipsoid = e.scaled(shrink)?;
    let contact_directions: Vec<Direction> = validation
        .iter()
        .chain(&refined)
        .filter(|d| ellipsoid.radial(d) / k.radial(d) >= 1.0 - settings.contact_tol)
        .cloned()
        .collect();
    Ok(JohnResult {
        ellipsoid,
        eps,
        iterations,
        contact_directions,
        method: JohnMethod::OuterApproximation,
        certificate_ratio: current.certificate_ratio,
        shrink_factor: shrink,
        facet_count: rows.len(),
    })
}

/// John ellipsoid of any body, routed to the most exact pipeline available.
pub fn john_ellipsoid(k: &BodyModel, settings: &JohnSettings) -> Result<JohnResult> {
    match k {
        BodyModel::Ellipsoid(e) => Ok(JohnResult {
            ellipsoid: e.clone(),
            eps: settings.eps,
            iterations: 0,
            contact_directions: ellipsoid_axis_contacts(e),
            method: JohnMethod::Exact,
            certificate_ratio: 1.0,
            shrink_factor: 1.0,
            facet_count: 0,
        }),
        BodyModel::PolytopeH(p) => john_polytope_h(p, settings.eps),
        BodyModel::LinearImage(l) => {
            let base = john_ellipsoid(l.base(), settings)?;
            map_john(&base, l.map())
        }
        other => {
            let facets = sphere_grid(other.dim(), settings.facet_directions, 0);
            john_general(other, &facets, settings)
        }
    }
}

/// `φ(J(K))`, with contacts carried along.
pub fn map_john(j: &JohnResult, phi: &LinearMap) -> Result<JohnResult> {
    Ok(JohnResult {
        ellipsoid: j.ellipsoid.linear_image(phi)?,
        contact_directions: j
            .contact_directions
            .iter()
            .filter_map(|d| Direction::new(phi.apply(d.as_vector())).ok())
            .collect(),
        ..j.clone()
    })
}

/// Grid-Hausdorff distance between `J(φK)` and `φ(J(K))`.
pub fn john_invariance_check(
    k: &BodyModel,
    phi: &LinearMap,
    grid: &[Direction],
    eps: f64,
) -> Result<f64> {
    if !matches!(k, BodyModel::PolytopeH(_) | BodyModel::Ellipsoid(_)) {
        return Err(Error::InvalidArgument(
            "invariance check needs a polytope-h or ellipsoid body".into(),
        ));
    }
    let settings = JohnSettings::with_eps(eps);
    let image_first = john_ellipsoid(&k.linear_image(phi)?, &settings)?;
    let john_first = map_john(&john_ellipsoid(k, &settings)?, phi)?;
    hausdorff(&image_first.body(), &john_first.body(), grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::sampling::*;
    use rand::Rng;

    fn v(c: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(c)
    }

    fn symmetric(points: &[DVector<f64>]) -> Vec<DVector<f64>> {
        points.iter().flat_map(|p| [p.clone(), -p]).collect()
    }

    #[test]
    fn mvee_of_axis_points_is_unit_ball() {
        let pts = symmetric(&[v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0]), v(&[0.0, 0.0, 1.0])]);
        let e = mvee(&pts, 1e-8).unwrap();
        assert!((e.q() - DMatrix::identity(3, 3)).amax() < 1e-6);
    }

    #[test]
    fn mvee_of_axis_pairs_in_the_plane() {
        // Oracle: symmetry forces an axis-aligned ellipse through (1,0) and
        // (0,2); brute-force minimal area a·b over a >= 1, b >= 2.
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..=400 {
            for j in 0..=400 {
                let (a, b) = (1.0 + i as f64 * 0.005, 2.0 + j as f64 * 0.005);
                if a * b < best.0 {
                    best = (a * b, a, b);
                }
            }
        }
        let pts = symmetric(&[v(&[1.0, 0.0]), v(&[0.0, 2.0])]);
        let e = mvee(&pts, 1e-9).unwrap();
        let expected = DMatrix::from_diagonal(&v(&[1.0 / (best.1 * best.1), 1.0 / (best.2 * best.2)]));
        assert!((e.q() - expected).amax() < 1e-6);
    }

    #[test]
    fn mvee_certificate_on_random_points() {
        let mut rng = rng(3);
        let half: Vec<DVector<f64>> = (0..100).map(|_| gaussian_vector(&mut rng, 3)).collect();
        let pts = symmetric(&half);
        let eps = 1e-6;
        let sol = mvee_centered(&pts, eps).unwrap();
        assert!(sol.kappa_max <= (1.0 + eps) * 3.0);
        for p in &pts {
            assert!(p.dot(&(sol.ellipsoid.q() * p)) <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn mvee_rejects_bad_input() {
        let flat = symmetric(&[v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0])]);
        assert_eq!(mvee(&flat, 1e-6).unwrap_err(), Error::DegeneratePoints);
        let lopsided = vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])];
        assert!(matches!(mvee(&lopsided, 1e-6), Err(Error::InvalidArgument(_))));
        assert!(mvee(&symmetric(&[v(&[1.0, 0.0])]), 0.5).is_err());
    }

    #[test]
    fn polar_examples() {
        let i = EllipsoidRep::unit_ball(2);
        assert_eq!(polar_ellipsoid(&i), i);
        let e = EllipsoidRep::new(DMatrix::from_diagonal(&v(&[4.0, 1.0 / 9.0]))).unwrap();
        let p = polar_ellipsoid(&e);
        assert!((p.q() - DMatrix::from_diagonal(&v(&[0.25, 9.0]))).amax() < 1e-15);
        let mut rng = rng(6);
        for _ in 0..100 {
            let e = EllipsoidRep::new(random_spd(&mut rng, 3, 0.2, 5.0)).unwrap();
            let back = polar_ellipsoid(&polar_ellipsoid(&e));
            assert!((back.q() - e.q()).amax() < 1e-12 * e.q().amax());
        }
    }

    #[test]
    fn john_of_cube_is_unit_ball() {
        for n in 3..=5 {
            let BodyModel::PolytopeH(p) = BodyModel::cube(n).unwrap() else { unreachable!() };
            let j = john_polytope_h(&p, 1e-10).unwrap();
            assert!((j.ellipsoid.q() - DMatrix::identity(n, n)).amax() < 1e-6);
            assert!(!j.contact_directions.is_empty());
        }
    }

    #[test]
    fn john_of_cross_polytope_is_inscribed_ball() {
        // Oracle: distance from the origin to the facet x+y+z = 1.
        let r = 1.0 / 3f64.sqrt();
        let BodyModel::PolytopeH(p) = BodyModel::cross_polytope(3).unwrap() else { unreachable!() };
        let j = john_polytope_h(&p, 1e-10).unwrap();
        for a in j.ellipsoid.semi_axes() {
            assert!((a - r).abs() < 1e-5);
        }
    }

    #[test]
    fn john_of_scaled_cube() {
        let phi = LinearMap::diagonal(&[1.0, 2.0, 3.0]).unwrap();
        let k = BodyModel::cube(3).unwrap().linear_image(&phi).unwrap();
        let j = john_ellipsoid(&k, &JohnSettings::default()).unwrap();
        let expected = DMatrix::from_diagonal(&v(&[1.0, 0.25, 1.0 / 9.0]));
        assert!((j.ellipsoid.q() - expected).amax() < 1e-6);
    }

    #[test]
    fn containment_and_contact_for_random_polytopes() {
        let mut rng = rng(10);
        let grid = sphere_grid(3, 1000, 0);
        for _ in 0..5 {
            let rows: Vec<DVector<f64>> = (0..12).map(|_| gaussian_vector(&mut rng, 3)).collect();
            let k = BodyModel::polytope_h(rows).unwrap();
            let j = john_ellipsoid(&k, &JohnSettings::default()).unwrap();
            // Boundary samples of J must satisfy the H-constraints.
            for theta in &grid {
                let x = j.ellipsoid.radial(theta) * theta.as_vector();
                assert!(k.gauge(&x) <= 1.0 + 1e-9);
            }
            assert!(j.contact_ratio(&k, &grid) >= 1.0 - 1e-6);
            assert!(j.certificate_ratio <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn dropping_rows_never_shrinks_john_volume() {
        let mut rng = rng(11);
        let eps = 1e-9;
        for _ in 0..10 {
            let rows: Vec<DVector<f64>> = (0..10).map(|_| gaussian_vector(&mut rng, 3)).collect();
            let keep = rng.gen_range(5..10);
            let big = PolytopeH::new(rows[..keep].to_vec());
            let Ok(big) = big else { continue };
            let small = PolytopeH::new(rows).unwrap();
            let v_small = john_polytope_h(&small, eps).unwrap().ellipsoid.volume_factor();
            let v_big = john_polytope_h(&big, eps).unwrap().ellipsoid.volume_factor();
            assert!(v_small <= v_big * (1.0 + 2.0 * eps));
        }
    }

    #[test]
    fn ellipsoid_is_its_own_john_ellipsoid_through_the_general_route() {
        let k = BodyModel::ellipsoid_from_semi_axes(&[1.0, 2.0, 3.0]).unwrap();
        let facets = sphere_grid(3, 500, 0);
        let j = john_general(&k, &facets, &JohnSettings::default()).unwrap();
        let d = hausdorff(&j.body(), &k, &sphere_grid(3, 360, 0)).unwrap();
        assert!(d < 1e-3, "hausdorff {d}");
        assert!(j.shrink_factor <= 1.0);
    }

    #[test]
    fn lp_ball_john_radius() {
        // Oracle: J is a ball of radius min_θ ρ_K(θ) by symmetry; minimize
        // over a dense grid.
        for (p, closed_form) in [(1.5, 3f64.powf(0.5 - 1.0 / 1.5)), (4.0, 1.0)] {
            let k = BodyModel::lp_ball(3, p).unwrap();
            let oracle = sphere_grid(3, 200_000, 0)
                .iter()
                .map(|d| k.radial(d))
                .fold(f64::INFINITY, f64::min);
            assert!((oracle - closed_form).abs() < 1e-3);
            let facets = sphere_grid(3, 2000, 0);
            let j = john_general(&k, &facets, &JohnSettings::default()).unwrap();
            for a in j.ellipsoid.semi_axes() {
                assert!((a - closed_form).abs() < 1e-2, "p={p}: axis {a} vs {closed_form}");
            }
        }
    }

    #[test]
    fn coarse_facets_trigger_shrink_error() {
        let k = BodyModel::lp_ball(5, 1.0).unwrap();
        let mut facets = Vec::new();
        for i in 0..5 {
            let mut tilted = DVector::zeros(5);
            tilted[i] = 1.0;
            tilted[(i + 1) % 5] = 0.01;
            let tilted = Direction::new(tilted).unwrap();
            facets.extend([Direction::axis(5, i), Direction::axis(5, i).negated()]);
            facets.extend([tilted.negated(), tilted]);
        }
        assert!(matches!(
            john_general(&k, &facets, &JohnSettings::default()),
            Err(Error::ShrinkBelowHalf { .. })
        ));
    }

    #[test]
    fn invariance_under_rotations_and_scalings() {
        let cube = BodyModel::cube(3).unwrap();
        let grid = sphere_grid(3, 500, 0);
        let mut rng = rng(2);
        let rot = LinearMap::new(random_orthogonal_matrix(&mut rng, 3)).unwrap();
        assert!(john_invariance_check(&cube, &rot, &grid, 1e-10).unwrap() <= 1e-6);
        let diag = LinearMap::diagonal(&[1.0, 2.0, 3.0]).unwrap();
        assert!(john_invariance_check(&cube, &diag, &grid, 1e-10).unwrap() <= 1e-6);
    }

    #[test]
    fn invariance_on_random_polytopes() {
        let mut rng = rng(33);
        let grid = sphere_grid(3, 1000, 0);
        for _ in 0..10 {
            let rows: Vec<DVector<f64>> = (0..20).map(|_| gaussian_vector(&mut rng, 3)).collect();
            let k = BodyModel::polytope_h(rows).unwrap();
            let phi = random_gl(&mut rng, 3, 0.5, 2.0);
            let d = john_invariance_check(&k, &phi, &grid, 1e-10).unwrap();
            assert!(d <= 1e-5, "{d}");
        }
    }

    #[test]
    fn general_route_rejects_thin_facet_sets() {
        let k = BodyModel::lp_ball(3, 3.0).unwrap();
        let facets = sphere_grid(3, 4, 0);
        assert!(matches!(
            john_general(&k, &facets, &JohnSettings::default()),
            Err(Error::InvalidArgument(_))
        ));
    }
}
