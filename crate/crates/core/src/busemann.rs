//! Are all central plane sections centered ellipses? Fit each one, then fit
//! one quadratic form to every sampled boundary point.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rayon::prelude::*;
use serde::Serialize;

use crate::bodies::BodyModel;
use crate::error::{Error, Result};
use crate::geom::sampling::{random_direction, random_orthogonal, rng};
use crate::geom::{circle_point, hemisphere_points, orthonormal_frame, Direction};

pub const MIN_PLANES: usize = 20;
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConicFit {
    #[serde(serialize_with = "ser_matrix2")]
    pub q2: Matrix2<f64>,
    /// RMS of `pᵀQ₂p - 1` over the samples.
    pub residual: f64,
}

fn ser_matrix2<S: serde::Serializer>(m: &Matrix2<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::Serialize;
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]].serialize(s)
}

fn ser_rows<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::Serialize;
    m.row_iter().map(|r| r.iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>().serialize(s)
}

impl ConicFit {
    pub fn is_ellipse(&self) -> bool {
        self.q2[(0, 0)] > 0.0 && self.q2.determinant() > 0.0
    }
}

/// Least squares over the monomials of a symmetric form, rows already built.
fn solve_form(design: &DMatrix<f64>) -> Result<(DVector<f64>, f64)> {
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if smax == 0.0 || svd.singular_values.min() <= RANK_TOL * smax {
        return Err(Error::RankDeficient);
    }
    let ones = DVector::from_element(design.nrows(), 1.0);
    let coef = svd.solve(&ones, 0.0).map_err(|_| Error::RankDeficient)?;
    let r = design * &coef - ones;
    Ok((coef, (r.norm_squared() / design.nrows() as f64).sqrt()))
}

/// Centered conic `pᵀQ₂p = 1` through the points in the least-squares sense.
pub fn fit_centered_conic(points: &[Vector2<f64>]) -> Result<ConicFit> {
    if points.len() < 6 {
        return Err(Error::RankDeficient);
    }
    let design = DMatrix::from_fn(points.len(), 3, |i, j| {
        let p = points[i];
        [p.x * p.x, 2.0 * p.x * p.y, p.y * p.y][j]
    });
    let (c, residual) = solve_form(&design)?;
    Ok(ConicFit { q2: Matrix2::new(c[0], c[1], c[1], c[2]), residual })
}

/// A plane through the origin spanned by two orthonormal vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaneFit {
    pub u: Direction,
    pub v: Direction,
    pub fit: ConicFit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectionEllipseReport {
    pub planes: Vec<PlaneFit>,
    pub max_residual: f64,
    pub worst_plane: usize,
    pub tol: f64,
    pub holds: bool,
}

/// In dimension 3 the planes are `ξ⊥` over a hemisphere lattice of `ξ`;
/// above that they are random orthonormal pairs drawn from `seed`.
pub fn sample_planes(n: usize, plane_count: usize, seed: u64) -> Vec<(Direction, Direction)> {
    if n == 3 {
        hemisphere_points(3, plane_count, seed)
            .iter()
            .map(|xi| {
                let f = orthonormal_frame(xi);
                (f.column(0), f.column(1))
            })
            .collect()
    } else {
        let mut rng = rng(seed);
        (0..plane_count)
            .map(|_| {
                let u = random_direction(&mut rng, n);
                let v = random_orthogonal(&mut rng, &u);
                (u, v)
            })
            .collect()
    }
}

/// Boundary of `K ∩ span(u, v)` at `samples` angles, in plane coordinates.
fn plane_boundary(k: &BodyModel, u: &Direction, v: &Direction, samples: usize) -> Vec<Vector2<f64>> {
    (0..samples)
        .map(|j| {
            let (c, s) = circle_point(j, samples);
            let x = u.as_vector() * c + v.as_vector() * s;
            Vector2::new(c, s) / k.gauge(&x)
        })
        .collect()
}

fn check_counts(k: &BodyModel, plane_count: usize, samples: usize) -> Result<()> {
    if k.dim() < 3 {
        return Err(Error::DimensionTooSmall { min: 3, found: k.dim() });
    }
    if plane_count < MIN_PLANES {
        return Err(Error::InvalidArgument(format!("need at least {MIN_PLANES} planes, got {plane_count}")));
    }
    if samples < 6 {
        return Err(Error::InvalidArgument(format!("need at least 6 samples per plane, got {samples}")));
    }
    Ok(())
}

pub fn sections_all_ellipses(
    k: &BodyModel,
    plane_count: usize,
    samples_per_plane: usize,
    tol: f64,
    seed: u64,
) -> Result<SectionEllipseReport> {
    check_counts(k, plane_count, samples_per_plane)?;
    let planes: Vec<PlaneFit> = sample_planes(k.dim(), plane_count, seed)
        .into_par_iter()
        .map(|(u, v)| {
            let fit = fit_centered_conic(&plane_boundary(k, &u, &v, samples_per_plane))?;
            Ok(PlaneFit { u, v, fit })
        })
        .collect::<Result<_>>()?;
    let (worst_plane, max_residual) = planes
        .iter()
        .map(|p| p.fit.residual)
        .enumerate()
        .fold((0, 0.0), |b, (i, r)| if r > b.1 { (i, r) } else { b });
    let holds = max_residual <= tol && planes.iter().all(|p| p.fit.is_ellipse());
    Ok(SectionEllipseReport { planes, max_residual, worst_plane, tol, holds })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadricFit {
    #[serde(serialize_with = "ser_rows")]
    pub q: DMatrix<f64>,
    pub residual: f64,
}

/// One symmetric `Q` with `xᵀQx ≈ 1` on every sampled section boundary.
/// Fails with `NotPositiveDefinite` when the best form is not an ellipsoid.
pub fn assemble_quadric(k: &BodyModel, plane_count: usize, samples_per_plane: usize, seed: u64) -> Result<QuadricFit> {
    check_counts(k, plane_count, samples_per_plane)?;
    let n = k.dim();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let points: Vec<DVector<f64>> = sample_planes(n, plane_count, seed)
        .iter()
        .flat_map(|(u, v)| {
            plane_boundary(k, u, v, samples_per_plane)
                .into_iter()
                .map(|p| u.as_vector() * p.x + v.as_vector() * p.y)
                .collect::<Vec<_>>()
        })
        .collect();
    let design = DMatrix::from_fn(points.len(), pairs.len(), |r, c| {
        let (i, j) = pairs[c];
        let x = &points[r];
        if i == j {
            x[i] * x[i]
        } else {
            2.0 * x[i] * x[j]
        }
    });
    let (coef, residual) = solve_form(&design)?;
    let mut q = DMatrix::zeros(n, n);
    for (c, &(i, j)) in pairs.iter().enumerate() {
        q[(i, j)] = coef[c];
        q[(j, i)] = coef[c];
    }
    if q.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(QuadricFit { q, residual })
}

/// Largest gauge of a midpoint of two boundary points over `pairs` random
/// pairs; at most 1 for a convex body.
pub fn midpoint_convexity(k: &BodyModel, pairs: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let n = k.dim();
    (0..pairs)
        .map(|_| {
            let x = k.boundary_point(&random_direction(&mut rng, n));
            let y = k.boundary_point(&random_direction(&mut rng, n));
            k.gauge(&((x + y) * 0.5))
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::sampling::{random_gl, random_spd};
    use crate::geom::LinearMap;

    fn curve(samples: usize, f: impl Fn(f64, f64) -> f64) -> Vec<Vector2<f64>> {
        (0..samples)
            .map(|j| {
                let (c, s) = circle_point(j, samples);
                Vector2::new(c, s) / f(c, s)
            })
            .collect()
    }

    /// Independent normal-equation solve, for comparison.
    fn normal_equations(points: &[Vector2<f64>]) -> (Matrix2<f64>, f64) {
        let mut a = nalgebra::Matrix3::<f64>::zeros();
        let mut b = nalgebra::Vector3::<f64>::zeros();
        for p in points {
            let row = nalgebra::Vector3::new(p.x * p.x, 2.0 * p.x * p.y, p.y * p.y);
            a += row * row.transpose();
            b += row;
        }
        let c = a.lu().solve(&b).unwrap();
        let rms = (points
            .iter()
            .map(|p| (c[0] * p.x * p.x + 2.0 * c[1] * p.x * p.y + c[2] * p.y * p.y - 1.0).powi(2))
            .sum::<f64>()
            / points.len() as f64)
            .sqrt();
        (Matrix2::new(c[0], c[1], c[1], c[2]), rms)
    }

    #[test]
    fn exact_conics() {
        let fit = fit_centered_conic(&curve(360, |c, s| (c * c / 4.0 + s * s).sqrt())).unwrap();
        assert!((fit.q2 - Matrix2::new(0.25, 0.0, 0.0, 1.0)).amax() < 1e-10);
        assert!(fit.residual < 1e-12);
        let fit = fit_centered_conic(&curve(360, |c, s| (c * c + s * s).sqrt())).unwrap();
        assert!((fit.q2 - Matrix2::identity()).amax() < 1e-12 && fit.residual < 1e-12);
        assert!(fit.is_ellipse());
    }

    #[test]
    fn p4_curve_is_not_a_conic() {
        let pts = curve(360, |c, s| (c.powi(4) + s.powi(4)).powf(0.25));
        let fit = fit_centered_conic(&pts).unwrap();
        let (q, rms) = normal_equations(&pts);
        assert!((fit.q2 - q).amax() < 1e-9);
        assert!((fit.residual - rms).abs() < 1e-9);
        assert!(fit.residual >= 0.01, "{}", fit.residual);
    }

    #[test]
    fn degenerate_points() {
        let line: Vec<_> = (1..10).map(|i| Vector2::new(i as f64, 2.0 * i as f64)).collect();
        assert_eq!(fit_centered_conic(&line), Err(Error::RankDeficient));
        assert_eq!(fit_centered_conic(&line[..3]), Err(Error::RankDeficient));
    }

    #[test]
    fn residual_is_scale_free() {
        let pts = curve(100, |c, s| (c.powi(4) + s.powi(4)).powf(0.25));
        let base = fit_centered_conic(&pts).unwrap();
        for scale in [0.5, 2.0] {
            let scaled: Vec<_> = pts.iter().map(|p| p * scale).collect();
            let fit = fit_centered_conic(&scaled).unwrap();
            assert!((fit.residual - base.residual).abs() < 1e-10);
            assert!((fit.q2 * scale * scale - base.q2).amax() < 1e-9);
        }
    }

    #[test]
    fn section_reports() {
        let ell = BodyModel::ellipsoid_from_semi_axes(&[1.0, 2.0, 3.0]).unwrap();
        let r = sections_all_ellipses(&ell, 50, 360, 1e-9, 0).unwrap();
        assert!(r.holds && r.max_residual <= 1e-9);
        let ball = sections_all_ellipses(&BodyModel::unit_ball(3), 20, 90, 1e-12, 0).unwrap();
        assert!(ball.max_residual <= 1e-12);
        let lp = sections_all_ellipses(&BodyModel::lp_ball(3, 4.0).unwrap(), 50, 360, 1e-9, 0).unwrap();
        assert!(!lp.holds && lp.max_residual >= 0.01, "{}", lp.max_residual);
        assert!(sections_all_ellipses(&ell, 10, 360, 1e-9, 0).is_err());
        let high = sections_all_ellipses(&BodyModel::ellipsoid_from_semi_axes(&[1.0, 2.0, 3.0, 0.5]).unwrap(), 30, 60, 1e-9, 4)
            .unwrap();
        assert!(high.holds);
    }

    #[test]
    fn quadric_round_trips() {
        let ell = BodyModel::ellipsoid_from_semi_axes(&[1.0, 2.0, 3.0]).unwrap();
        let fit = assemble_quadric(&ell, 50, 120, 0).unwrap();
        let want = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.25, 1.0 / 9.0]));
        assert!((&fit.q - want).amax() < 1e-8 && fit.residual < 1e-10);

        let mut r = rng(8);
        for _ in 0..10 {
            let phi: LinearMap = random_gl(&mut r, 3, 0.5, 2.0);
            let k = BodyModel::unit_ball(3).linear_image(&phi).unwrap();
            let fit = assemble_quadric(&k, 20, 60, 1).unwrap();
            let m = phi.matrix();
            let want = (m * m.transpose()).try_inverse().unwrap();
            assert!((&fit.q - &want).norm() <= 1e-6 * want.norm());
        }
        for seed in 0..20 {
            let q = random_spd(&mut r, 4, 0.3, 3.0);
            let fit = assemble_quadric(&BodyModel::ellipsoid(q.clone()).unwrap(), 25, 24, seed).unwrap();
            assert!((&fit.q - &q).norm() <= 1e-6 * q.norm());
        }
        let lp = assemble_quadric(&BodyModel::lp_ball(3, 4.0).unwrap(), 50, 120, 0).unwrap();
        assert!(lp.residual >= 0.01, "{}", lp.residual);
    }

    #[test]
    fn convexity_of_passing_bodies() {
        let ell = BodyModel::ellipsoid_from_semi_axes(&[1.0, 2.0, 3.0]).unwrap();
        assert!(midpoint_convexity(&ell, 1000, 5) <= 1.0 + 1e-9);
    }
}
