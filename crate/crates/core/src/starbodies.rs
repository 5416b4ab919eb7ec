//! Radial profiles of the families `E_α`, `Ẽ_β` and the ellipsoid
//! certificate built from them.
//!
//! With `v(θ, ξ) = ρ_{J(K∩ξ⊥)}(θ) / ρ_K(θ)` the invariant value,
//! `ρ_{E_α}(θ) = ρ_K(θ)·sup_ξ min(v, α)` and
//! `ρ_{Ẽ_β}(θ) = ρ_K(θ)·inf_ξ max(v, β)`, both over a finite ξ-scan of `θ⊥`.

use rayon::prelude::*;
use serde::Serialize;

use crate::bodies::hausdorff;
use crate::error::{Error, Result};
use crate::geom::{sphere_grid, Direction};
use crate::levelset::{
    section_circle, t_star_search, xi_scan, InvariantTable, TSearch, JohnMemo, DEFAULT_CIRCLE_RESOLUTION,
    MIN_XI_PER_THETA,
};
use crate::sections::section_with_frame;

/// Which definition of `E_α` the toolkit evaluates; written into reports.
pub const E_ALPHA_READING: &str = "radial formula over sections of K (not transported sections of K∩ξ0⊥)";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StarBodySample {
    pub alpha: f64,
    pub beta: f64,
    pub e_alpha: f64,
    pub e_tilde_beta: f64,
}

fn check_param(name: &str, a: f64) -> Result<()> {
    if (0.0..=1.0).contains(&a) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must lie in [0, 1], got {a}")))
    }
}

fn scan_values(memo: &JohnMemo, theta: &Direction, xi_count: usize) -> Result<Vec<f64>> {
    if xi_count < MIN_XI_PER_THETA {
        return Err(Error::InvalidArgument(format!(
            "xi scan must have at least {MIN_XI_PER_THETA} directions, got {xi_count}"
        )));
    }
    xi_scan(theta, xi_count)
        .iter()
        .map(|xi| memo.invariant_value(theta, xi).map(|s| s.value))
        .collect()
}

fn sup_min(values: &[f64], alpha: f64) -> f64 {
    values.iter().map(|v| v.min(alpha)).fold(f64::NEG_INFINITY, f64::max)
}

fn inf_max(values: &[f64], beta: f64) -> f64 {
    values.iter().map(|v| v.max(beta)).fold(f64::INFINITY, f64::min)
}

pub fn e_alpha_radial(memo: &JohnMemo, alpha: f64, theta: &Direction, xi_count: usize) -> Result<f64> {
    check_param("alpha", alpha)?;
    let values = scan_values(memo, theta, xi_count)?;
    Ok(memo.body().radial(theta) * sup_min(&values, alpha))
}

pub fn e_tilde_beta_radial(memo: &JohnMemo, beta: f64, theta: &Direction, xi_count: usize) -> Result<f64> {
    check_param("beta", beta)?;
    let values = scan_values(memo, theta, xi_count)?;
    Ok(memo.body().radial(theta) * inf_max(&values, beta))
}

/// Both profiles at one direction from a single ξ-scan.
pub fn star_sample(memo: &JohnMemo, alpha: f64, beta: f64, theta: &Direction, xi_count: usize) -> Result<StarBodySample> {
    check_param("alpha", alpha)?;
    check_param("beta", beta)?;
    let values = scan_values(memo, theta, xi_count)?;
    let rho = memo.body().radial(theta);
    Ok(StarBodySample {
        alpha,
        beta,
        e_alpha: rho * sup_min(&values, alpha),
        e_tilde_beta: rho * inf_max(&values, beta),
    })
}

/// Profiles of `E_α` and `Ẽ_β` over every direction of a prebuilt table.
pub fn star_profile(memo: &JohnMemo, table: &InvariantTable, alpha: f64, beta: f64) -> Result<Vec<StarBodySample>> {
    check_param("alpha", alpha)?;
    check_param("beta", beta)?;
    Ok(table
        .thetas
        .iter()
        .zip(&table.values)
        .map(|(theta, values)| {
            let rho = memo.body().radial(theta);
            StarBodySample {
                alpha,
                beta,
                e_alpha: rho * sup_min(values, alpha),
                e_tilde_beta: rho * inf_max(values, beta),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertGrids {
    pub theta: usize,
    pub xi: usize,
    pub t_steps: usize,
    /// Directions on the section circle of `ξ0`.
    pub circle: usize,
    pub seed: u64,
}

impl Default for CertGrids {
    fn default() -> Self {
        CertGrids { theta: 1000, xi: 32, t_steps: 32, circle: DEFAULT_CIRCLE_RESOLUTION, seed: 0 }
    }
}

/// Ten times the John tolerance plus the level tolerance.
pub fn default_tol(john_eps: f64, level_eps: f64) -> f64 {
    10.0 * john_eps + level_eps
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    EllipsoidConfirmed,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub t0: f64,
    pub m: f64,
    pub covered_fraction: f64,
    /// `max_θ |ρ_{E_t0}(θ) - t0·ρ_K(θ)|`.
    pub e_residual: f64,
    pub e_tilde_residual: f64,
    /// Grid Hausdorff distance between `J(K∩ξ0⊥)` and `t0·(K∩ξ0⊥)`.
    pub section_residual: f64,
    pub tol: f64,
    pub verdict: Verdict,
    pub reading: &'static str,
}

/// Find the covering level `t0` and test the three identities it should
/// satisfy when every section is an ellipse.
pub fn identity_certificate(
    memo: &JohnMemo,
    xi0: &Direction,
    grids: &CertGrids,
    level_eps: f64,
    tol: f64,
) -> Result<Certificate> {
    let n = memo.body().dim();
    let table = InvariantTable::build(memo, &sphere_grid(n, grids.theta, grids.seed), grids.xi)?;
    let search = t_star_search(memo, &table, xi0, level_eps, grids.t_steps)?;
    certify_search(memo, &table, &search, xi0, grids.circle, tol)
}

/// [`identity_certificate`] from an already built table and `t0` search.
pub fn certify_search(
    memo: &JohnMemo,
    table: &InvariantTable,
    search: &TSearch,
    xi0: &Direction,
    circle_resolution: usize,
    tol: f64,
) -> Result<Certificate> {
    let n = memo.body().dim();
    let t0 = search.t0;

    let (e_residual, e_tilde_residual) = table
        .thetas
        .par_iter()
        .zip(&table.values)
        .map(|(theta, values)| {
            let rho = memo.body().radial(theta);
            let target = t0 * rho;
            ((rho * sup_min(values, t0) - target).abs(), (rho * inf_max(values, t0) - target).abs())
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));

    let sj = memo.section_john(xi0)?;
    let sec = section_with_frame(memo.body(), sj.frame.clone())?;
    let circle = sphere_grid(n - 1, circle_resolution, 0);
    let section_residual = hausdorff(&sj.john.body(), &sec.body.scaled(t0)?, &circle)?;

    let confirmed = e_residual <= tol && e_tilde_residual <= tol && section_residual <= tol;
    Ok(Certificate {
        t0,
        m: search.m,
        covered_fraction: search.report.covered_fraction,
        e_residual,
        e_tilde_residual,
        section_residual,
        tol,
        verdict: if confirmed { Verdict::EllipsoidConfirmed } else { Verdict::Rejected },
        reading: E_ALPHA_READING,
    })
}

/// One-sided radial excesses of `t0·(K∩ξ0⊥)` over `J` and of `J` over
/// `t0·(K∩ξ0⊥)` on the section circle; both vanish iff the two sets agree
/// at grid resolution.
pub fn emptiness_check(memo: &JohnMemo, xi0: &Direction, t0: f64, resolution: usize) -> Result<(f64, f64)> {
    let mut outer: f64 = 0.0;
    let mut inner: f64 = 0.0;
    for theta in section_circle(xi0, resolution) {
        let rho_k = memo.body().radial(&theta);
        let rho_j = memo.invariant_value(&theta, xi0)?.value * rho_k;
        outer = outer.max(t0 * rho_k - rho_j);
        inner = inner.max(rho_j - t0 * rho_k);
    }
    Ok((outer, inner))
}
