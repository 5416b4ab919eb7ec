//! Linear maps carrying one central section onto another.
//!
//! A transport `φ` from `ξ0` to `ξ` sends `K ∩ ξ0⊥` onto `K ∩ ξ⊥` and `ξ0`
//! to `ξ`. It is assembled blockwise: an `(n-1)×(n-1)` block `T` acting
//! between the canonical frames of the two hyperplanes, plus the forced
//! column `ξ0 ↦ ξ`, i.e. `φ = B₁ T B₀ᵀ + ξ ξ0ᵀ`.

use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use nalgebra::DMatrix;
use serde::Serialize;

use crate::bodies::{hausdorff, BodyModel, EllipsoidRep};
use crate::error::{Error, Result};
use crate::geom::{
    self, geodesic_rotation, orthonormal_frame, sampling, sphere_grid, Direction, LinearMap,
    ANTIPODAL_TOL,
};
use crate::john::{john_ellipsoid, JohnSettings};
use crate::sections::section;

/// Frame directions used for the final section error.
pub const SECTION_ERROR_GRID: usize = 360;
/// Coarser grid for the fitting objective.
const FIT_GRID: usize = 120;

#[derive(Debug, Clone, PartialEq)]
pub struct TransportMap {
    pub map: LinearMap,
    pub source_xi: Direction,
    pub target_xi: Direction,
    /// Grid-Hausdorff distance between `map(K∩ξ0⊥)` and `K∩ξ⊥`.
    pub section_error: f64,
}

impl TransportMap {
    /// The block `B₁ᵀ φ B₀` between the canonical section frames.
    pub fn section_block(&self) -> Result<LinearMap> {
        frame_block(&self.map, &self.source_xi, &self.target_xi)
    }

    /// `|φ(ξ0) - ξ|`.
    pub fn anchor_error(&self) -> f64 {
        (self.map.apply(self.source_xi.as_vector()) - self.target_xi.as_vector()).amax()
    }
}

/// Best attempt of a fit that did not reach its tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct FitFailure {
    pub best_error: f64,
    pub best: TransportMap,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitOutcome {
    Success(TransportMap),
    Failure(FitFailure),
}

impl FitOutcome {
    pub fn is_success(&self) -> bool {
        matches!(self, FitOutcome::Success(_))
    }

    /// The fitted map whether or not it met the tolerance.
    pub fn best(&self) -> &TransportMap {
        match self {
            FitOutcome::Success(t) => t,
            FitOutcome::Failure(f) => &f.best,
        }
    }

    pub fn into_result(self) -> Result<TransportMap> {
        match self {
            FitOutcome::Success(t) => Ok(t),
            FitOutcome::Failure(f) => Err(Error::TransportFailed { best_error: f.best_error }),
        }
    }
}

/// `φ = B₁ T B₀ᵀ + ξ ξ0ᵀ`.
pub fn assemble(block: &DMatrix<f64>, xi0: &Direction, xi: &Direction) -> Result<LinearMap> {
    let b0 = orthonormal_frame(xi0);
    let b1 = orthonormal_frame(xi);
    let m = b1.basis() * block * b0.basis().transpose() + xi.as_vector() * xi0.as_vector().transpose();
    LinearMap::new(m)
}

/// `B₁ᵀ φ B₀` in the canonical frames of `ξ0⊥` and `ξ⊥`.
pub fn frame_block(phi: &LinearMap, xi0: &Direction, xi: &Direction) -> Result<LinearMap> {
    let b0 = orthonormal_frame(xi0);
    let b1 = orthonormal_frame(xi);
    LinearMap::new(b1.basis().transpose() * phi.matrix() * b0.basis())
}

/// Grid-Hausdorff distance between `φ(K∩ξ0⊥)` and `K∩ξ⊥`, compared in the
/// frame of `ξ⊥`.
pub fn section_error(k: &BodyModel, phi: &LinearMap, xi0: &Direction, xi: &Direction) -> Result<f64> {
    let s0 = section(k, xi0)?;
    let s1 = section(k, xi)?;
    let block = frame_block(phi, xi0, xi)?;
    let image = s0.body.linear_image(&block)?;
    hausdorff(&image, &s1.body, &sphere_grid(k.dim() - 1, SECTION_ERROR_GRID, 0))
}

fn check_pair(k_dim: usize, xi0: &Direction, xi: &Direction) -> Result<()> {
    for d in [xi0, xi] {
        if d.dim() != k_dim {
            return Err(Error::DimensionMismatch { expected: k_dim, found: d.dim() });
        }
    }
    if k_dim < 3 {
        return Err(Error::DimensionTooSmall { min: 3, found: k_dim });
    }
    Ok(())
}

/// Exact transport for `K = {x : xᵀQx <= 1}`.
///
/// With `A = Q^{-1/2}` the body is `A·Bⁿ`, and `S = A·R·A⁻¹` with `R` the
/// geodesic rotation from `Aξ0/|Aξ0|` to `Aξ/|Aξ|` maps `ξ0⊥` onto `ξ⊥`
/// and the section onto the section.
pub fn ellipsoid_transport(e: &EllipsoidRep, xi0: &Direction, xi: &Direction) -> Result<TransportMap> {
    let n = e.dim();
    check_pair(n, xi0, xi)?;
    let dot = xi0.dot(xi);
    if dot < -1.0 + ANTIPODAL_TOL {
        return Err(Error::AntipodalInput { dot });
    }
    let k = BodyModel::Ellipsoid(e.clone());
    if xi0 == xi {
        return Ok(TransportMap {
            map: LinearMap::identity(n),
            source_xi: xi0.clone(),
            target_xi: xi.clone(),
            section_error: 0.0,
        });
    }
    let a = e.sqrt_shape();
    let a_inv = e.q().clone() * &a;
    let nu0 = Direction::new(&a * xi0.as_vector())?;
    let nu = Direction::new(&a * xi.as_vector())?;
    let r = geodesic_rotation(&nu0, &nu)?;
    let s = &a * r.matrix() * &a_inv;
    let proj = DMatrix::identity(n, n) - xi0.as_vector() * xi0.as_vector().transpose();
    let m = s * proj + xi.as_vector() * xi0.as_vector().transpose();
    let map = LinearMap::new(m)?;
    let section_error = section_error(&k, &map, xi0, xi)?;
    Ok(TransportMap { map, source_xi: xi0.clone(), target_xi: xi.clone(), section_error })
}

/// Deterministic midpoint used to route around antipodal pairs.
pub fn antipodal_midpoint(xi0: &Direction) -> Direction {
    orthonormal_frame(xi0).column(0)
}

/// [`ellipsoid_transport`], composing two transports through a midpoint
/// when `ξ` is (nearly) `-ξ0`.
pub fn ellipsoid_transport_routed(e: &EllipsoidRep, xi0: &Direction, xi: &Direction) -> Result<TransportMap> {
    match ellipsoid_transport(e, xi0, xi) {
        Err(Error::AntipodalInput { .. }) => {
            let mid = antipodal_midpoint(xi0);
            let first = ellipsoid_transport(e, xi0, &mid)?;
            let second = ellipsoid_transport(e, &mid, xi)?;
            let map = second.map.compose(&first.map);
            let section_error = section_error(&BodyModel::Ellipsoid(e.clone()), &map, xi0, xi)?;
            Ok(TransportMap { map, source_xi: xi0.clone(), target_xi: xi.clone(), section_error })
        }
        other => other,
    }
}

/// Sup-norm distance of support functions on `grid` between `T(s0)` and
/// the body whose supports are `target`; `h_{T s0}(v) = h_{s0}(Tᵀv)`.
#[derive(Clone)]
struct BlockObjective<'a> {
    s0: &'a BodyModel,
    grid: &'a [Direction],
    target: Vec<f64>,
    dim: usize,
}

impl BlockObjective<'_> {
    fn eval(&self, block: &DMatrix<f64>) -> f64 {
        if !block.iter().all(|v| v.is_finite()) {
            return f64::INFINITY;
        }
        let bt = block.transpose();
        self.grid
            .iter()
            .zip(&self.target)
            .map(|(v, h)| (self.s0.support_vec(&(&bt * v.as_vector())) - h).abs())
            .fold(0.0, f64::max)
    }

    fn to_block(&self, p: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, p)
    }
}

impl CostFunction for BlockObjective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.eval(&self.to_block(p)))
    }
}

fn orthogonal_candidates(m: usize, seed: u64) -> Vec<DMatrix<f64>> {
    if m == 2 {
        let steps = 72;
        let mut out = Vec::with_capacity(2 * steps);
        for k in 0..steps {
            let (c, s) = geom::circle_point(k, steps);
            let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
            let refl = DMatrix::from_row_slice(2, 2, &[c, s, s, -c]);
            out.push(rot);
            out.push(refl);
        }
        out
    } else {
        let mut rng = sampling::rng(seed);
        let mut out = vec![DMatrix::identity(m, m)];
        out.extend((0..63).map(|_| sampling::random_orthogonal_matrix(&mut rng, m)));
        out
    }
}

/// Searches the `(n-1)×(n-1)` section block minimizing the grid-Hausdorff
/// distance between `T(K∩ξ0⊥)` and `K∩ξ⊥`.
///
/// Candidates: the geodesic rotation, and `A₁ U A₀⁻¹` where `Aᵢ` map the
/// unit ball onto the John ellipsoids of the sections and `U` ranges over
/// an orthogonal scan. The best candidate is polished by Nelder–Mead with at
/// most `max_iters` iterations. The result is a [`FitOutcome::Success`]
/// iff the final section error is at most `tol`.
pub fn fit_transport(
    k: &BodyModel,
    xi0: &Direction,
    xi: &Direction,
    tol: f64,
    max_iters: u64,
) -> Result<FitOutcome> {
    let n = k.dim();
    check_pair(n, xi0, xi)?;
    let m = n - 1;
    let s0 = section(k, xi0)?;
    let s1 = section(k, xi)?;
    let grid = sphere_grid(m, FIT_GRID, 0);
    let objective = BlockObjective {
        s0: &s0.body,
        target: grid.iter().map(|v| s1.body.support(v)).collect(),
        grid: &grid,
        dim: m,
    };

    let mut candidates = Vec::new();
    if xi0.dot(xi) > -1.0 + ANTIPODAL_TOL {
        let r = geodesic_rotation(xi0, xi)?;
        candidates.push(s1.frame.basis().transpose() * r.matrix() * s0.frame.basis());
    }
    let settings = JohnSettings::default();
    let j0 = john_ellipsoid(&s0.body, &settings)?.ellipsoid;
    let j1 = john_ellipsoid(&s1.body, &settings)?.ellipsoid;
    let a0_inv = j0.q() * j0.sqrt_shape();
    let a1 = j1.sqrt_shape();
    for u in orthogonal_candidates(m, 0) {
        candidates.push(&a1 * u * &a0_inv);
    }
    let (mut best, best_cost) = candidates
        .into_iter()
        .map(|c| {
            let v = objective.eval(&c);
            (c, v)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("candidate list is nonempty");

    if best_cost > 0.0 && max_iters > 0 {
        let start: Vec<f64> = best.transpose().iter().copied().collect();
        let scale = 0.05 * geom::spectral_norm(&best).max(1e-3);
        let mut simplex = vec![start.clone()];
        for i in 0..start.len() {
            let mut p = start.clone();
            p[i] += scale;
            simplex.push(p);
        }
        let solver = NelderMead::new(simplex)
            .with_sd_tolerance(1e-14)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let outcome = Executor::new(objective.clone(), solver)
            .configure(|state| state.max_iters(max_iters))
            .run()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let state = outcome.state();
        if let Some(p) = state.best_param.as_ref() {
            let polished = objective.to_block(p);
            let v = objective.eval(&polished);
            if v < best_cost {
                best = polished;
            }
        }
    }

    let map = assemble(&best, xi0, xi)?;
    let section_error = section_error(k, &map, xi0, xi)?;
    let fitted = TransportMap { map, source_xi: xi0.clone(), target_xi: xi.clone(), section_error };
    Ok(if section_error <= tol {
        FitOutcome::Success(fitted)
    } else {
        FitOutcome::Failure(FitFailure { best_error: section_error, best: fitted })
    })
}

/// Exact transport for ellipsoids, fitted otherwise.
pub fn transport(k: &BodyModel, xi0: &Direction, xi: &Direction, tol: f64) -> Result<TransportMap> {
    match k {
        BodyModel::Ellipsoid(e) => ellipsoid_transport_routed(e, xi0, xi),
        _ => fit_transport(k, xi0, xi, tol, 2000)?.into_result(),
    }
}

/// A-priori bound `max ρ_K / min ρ_K` on the operator norm of a transport;
/// exact for ellipsoids, sampled on `grid` otherwise.
pub fn opnorm_bound(k: &BodyModel, grid: &[Direction]) -> f64 {
    if let BodyModel::Ellipsoid(e) = k {
        let axes = e.semi_axes();
        return axes[axes.len() - 1] / axes[0];
    }
    let (lo, hi) = grid
        .iter()
        .map(|d| k.radial(d))
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r)));
    hi / lo
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityStep {
    pub angle: f64,
    /// `‖φ_{i+1} - φ_i‖_op`.
    pub gap: f64,
    /// `|‖φ_{i+1}‖_op - ‖φ_i‖_op|`.
    pub norm_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityReport {
    pub steps: Vec<ContinuityStep>,
    pub max_gap: f64,
    pub max_norm_gap: f64,
    /// `max gap/angle` over steps with a nonzero angle.
    pub modulus: f64,
    pub max_section_error: f64,
}

/// Largest angle allowed between consecutive path points.
pub const MAX_PATH_STEP: f64 = 0.2;

/// Lifts a path of normals to transports `φ_i` with `φ_0 = id` by chaining
/// step transports, `φ_{i+1} = T_i ∘ φ_i`, and reports how much
/// consecutive maps differ.
pub fn lift_continuity_check(k: &BodyModel, path: &[Direction], tol: f64) -> Result<ContinuityReport> {
    let n = k.dim();
    let Some(start) = path.first() else {
        return Err(Error::InvalidArgument("path is empty".into()));
    };
    let mut current = LinearMap::identity(n);
    let mut steps = Vec::with_capacity(path.len().saturating_sub(1));
    let mut max_section_error = 0.0f64;
    for pair in path.windows(2) {
        let angle = pair[0].angle_to(&pair[1]);
        if angle > MAX_PATH_STEP {
            return Err(Error::InvalidArgument(format!(
                "consecutive path points are {angle:.3} rad apart (limit {MAX_PATH_STEP})"
            )));
        }
        let step = transport(k, &pair[0], &pair[1], tol)?;
        let next = step.map.compose(&current);
        let gap = geom::spectral_norm(&(next.matrix() - current.matrix()));
        let norm_gap = (next.operator_norm() - current.operator_norm()).abs();
        max_section_error = max_section_error.max(section_error(k, &next, start, &pair[1])?);
        steps.push(ContinuityStep { angle, gap, norm_gap });
        current = next;
    }
    let max_gap = steps.iter().map(|s| s.gap).fold(0.0, f64::max);
    let max_norm_gap = steps.iter().map(|s| s.norm_gap).fold(0.0, f64::max);
    let modulus = steps
        .iter()
        .filter(|s| s.angle > 0.0)
        .map(|s| s.gap / s.angle)
        .fold(0.0, f64::max);
    Ok(ContinuityReport { steps, max_gap, max_norm_gap, modulus, max_section_error })
}
