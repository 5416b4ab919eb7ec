//! The invariant `t(θ, ξ) = ρ_{J(K∩ξ⊥)}(θ)·‖θ‖_K`, its level sets over the
//! sphere, and the search for a level covering every direction.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::bodies::{BodyModel, EllipsoidRep};
use crate::error::{Error, Result};
use crate::geom::{self, hemisphere_points, orthonormal_frame, Direction, SectionFrame, ORTHO_TOL};
use crate::john::{john_ellipsoid, JohnResult, JohnSettings};
use crate::sections::section;
use crate::transport::TransportMap;

pub const DEFAULT_LEVEL_EPS: f64 = 0.005;
pub const DEFAULT_CIRCLE_RESOLUTION: usize = 720;
pub const MIN_XI_PER_THETA: usize = 8;
pub const MIN_T_STEPS: usize = 16;

/// John ellipsoid of one section, in the canonical frame of its normal.
#[derive(Debug, Clone)]
pub struct SectionJohn {
    pub frame: SectionFrame,
    pub john: JohnResult,
}

/// A body together with a cache of section John ellipsoids keyed by the
/// exact bits of the sign-normalized normal.
#[derive(Debug)]
pub struct JohnMemo {
    body: BodyModel,
    settings: JohnSettings,
    cache: RwLock<HashMap<Vec<u64>, Arc<SectionJohn>>>,
}

/// `ξ` and `-ξ` cut the same section; pick the one whose first nonzero
/// coordinate is positive.
pub fn canonical_normal(xi: &Direction) -> Direction {
    match xi.coords().iter().find(|c| **c != 0.0) {
        Some(c) if *c < 0.0 => xi.negated(),
        _ => xi.clone(),
    }
}

impl JohnMemo {
    pub fn new(body: BodyModel, settings: JohnSettings) -> Result<Self> {
        if body.dim() < 3 {
            return Err(Error::DimensionTooSmall { min: 3, found: body.dim() });
        }
        Ok(JohnMemo { body, settings, cache: RwLock::new(HashMap::new()) })
    }

    pub fn with_eps(body: BodyModel, john_eps: f64) -> Result<Self> {
        Self::new(body, JohnSettings::with_eps(john_eps))
    }

    pub fn body(&self) -> &BodyModel {
        &self.body
    }

    pub fn settings(&self) -> &JohnSettings {
        &self.settings
    }

    pub fn len(&self) -> usize {
        self.cache.read().expect("memo lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn section_john(&self, xi: &Direction) -> Result<Arc<SectionJohn>> {
        let xi = canonical_normal(xi);
        let key: Vec<u64> = xi.coords().iter().map(|c| c.to_bits()).collect();
        if let Some(hit) = self.cache.read().expect("memo lock").get(&key) {
            return Ok(hit.clone());
        }
        let s = section(&self.body, &xi)?;
        let john = john_ellipsoid(&s.body, &self.settings)?;
        let entry = Arc::new(SectionJohn { frame: s.frame, john });
        // Identical keys produce identical entries, so the first writer wins.
        Ok(self.cache.write().expect("memo lock").entry(key).or_insert(entry).clone())
    }

    /// Transport-free invariant: `‖θ‖_K / ‖Bᵀθ‖_J` with `J` the John
    /// ellipsoid of `K∩ξ⊥` in the frame `B` of `ξ⊥`.
    pub fn invariant_value(&self, theta: &Direction, xi: &Direction) -> Result<InvariantSample> {
        let dot = theta.dot(xi);
        if dot.abs() > ORTHO_TOL {
            return Err(Error::NotOrthogonal { dot });
        }
        let sj = self.section_john(xi)?;
        let u = sj.frame.to_frame(theta.as_vector());
        let value = self.body.gauge(theta.as_vector()) / sj.john.ellipsoid.gauge(&u);
        Ok(InvariantSample { theta: theta.clone(), xi: xi.clone(), value })
    }

    /// The same value routed through an explicit transport `φ_ξ` from `ξ0`:
    /// `ρ_{φ_ξ(J(K∩ξ0⊥))}(θ)·‖θ‖_K`.
    pub fn transported_value(&self, theta: &Direction, phi: &TransportMap) -> Result<f64> {
        let dot = theta.dot(&phi.target_xi);
        if dot.abs() > ORTHO_TOL {
            return Err(Error::NotOrthogonal { dot });
        }
        let source = self.section_john(&phi.source_xi)?;
        // The memo frame of ±ξ0 is the canonical frame of ξ0 itself.
        let moved: EllipsoidRep = source.john.ellipsoid.linear_image(&phi.section_block()?)?;
        let u = orthonormal_frame(&phi.target_xi).to_frame(theta.as_vector());
        Ok(self.body.gauge(theta.as_vector()) / moved.gauge(&u))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantSample {
    pub theta: Direction,
    pub xi: Direction,
    pub value: f64,
}

/// One-off [`JohnMemo::invariant_value`].
pub fn invariant_value(k: &BodyModel, theta: &Direction, xi: &Direction, john_eps: f64) -> Result<InvariantSample> {
    JohnMemo::with_eps(k.clone(), john_eps)?.invariant_value(theta, xi)
}

/// `count` normals on the sphere of `θ⊥`, one per antipodal pair: a half
/// circle for `n = 3`, a hemisphere lattice otherwise.
pub fn xi_scan(theta: &Direction, count: usize) -> Vec<Direction> {
    let frame = orthonormal_frame(theta);
    let n = theta.dim();
    let local: Vec<DVector<f64>> = if n == 3 {
        (0..count)
            .map(|k| {
                let (c, s) = geom::circle_point(k, 2 * count);
                DVector::from_vec(vec![c, s])
            })
            .collect()
    } else {
        hemisphere_points(n - 1, count, 0).into_iter().map(Direction::into_vector).collect()
    };
    local
        .iter()
        .map(|u| Direction::new(frame.from_frame(u)).expect("frame image of a unit vector"))
        .collect()
}

/// Invariant values for every θ of a grid against its ξ-scan.
#[derive(Debug, Clone, Serialize)]
pub struct InvariantTable {
    pub thetas: Vec<Direction>,
    pub xis: Vec<Vec<Direction>>,
    pub values: Vec<Vec<f64>>,
}

impl InvariantTable {
    pub fn build(memo: &JohnMemo, theta_grid: &[Direction], xi_per_theta: usize) -> Result<Self> {
        if xi_per_theta < MIN_XI_PER_THETA {
            return Err(Error::InvalidArgument(format!(
                "xi_per_theta must be at least {MIN_XI_PER_THETA}, got {xi_per_theta}"
            )));
        }
        let rows: Vec<(Vec<Direction>, Vec<f64>)> = theta_grid
            .par_iter()
            .map(|theta| {
                let xis = xi_scan(theta, xi_per_theta);
                let values = xis
                    .iter()
                    .map(|xi| memo.invariant_value(theta, xi).map(|s| s.value))
                    .collect::<Result<Vec<f64>>>()?;
                Ok((xis, values))
            })
            .collect::<Result<_>>()?;
        let (xis, values) = rows.into_iter().unzip();
        Ok(InvariantTable { thetas: theta_grid.to_vec(), xis, values })
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn samples(&self) -> impl Iterator<Item = InvariantSample> + '_ {
        self.thetas.iter().zip(self.xis.iter().zip(&self.values)).flat_map(|(theta, (xis, vals))| {
            xis.iter().zip(vals).map(move |(xi, v)| InvariantSample {
                theta: theta.clone(),
                xi: xi.clone(),
                value: *v,
            })
        })
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn covered(&self, i: usize, t: f64, eps: f64) -> bool {
        self.values[i].iter().any(|v| (v - t).abs() <= eps)
    }

    fn covered_count(&self, t: f64, eps: f64) -> usize {
        (0..self.len()).filter(|&i| self.covered(i, t, eps)).count()
    }

    fn fraction(&self, t: f64, eps: f64) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.covered_count(t, eps) as f64 / self.len() as f64
    }

    /// Which grid directions lie in `Λ_t` at tolerance `eps`.
    pub fn coverage(&self, t: f64, eps: f64) -> CoverageReport {
        let mut witnesses = Vec::new();
        let mut uncovered = Vec::new();
        for (i, theta) in self.thetas.iter().enumerate() {
            let hits: Vec<usize> = (0..self.values[i].len())
                .filter(|&j| (self.values[i][j] - t).abs() <= eps)
                .collect();
            let chosen = hits
                .iter()
                .copied()
                .min_by(|&a, &b| lex_cmp(self.xis[i][a].coords(), self.xis[i][b].coords()));
            match chosen {
                Some(j) => witnesses.push(Witness {
                    theta_index: i,
                    theta: theta.clone(),
                    xi: self.xis[i][j].clone(),
                    value: self.values[i][j],
                    alternatives: hits.len() - 1,
                }),
                None => uncovered.push(theta.clone()),
            }
        }
        let grid_size = self.len();
        let covered_fraction = if grid_size == 0 { 0.0 } else { witnesses.len() as f64 / grid_size as f64 };
        CoverageReport { t, eps, grid_size, covered_fraction, witnesses, uncovered }
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub theta_index: usize,
    pub theta: Direction,
    /// Lexicographically smallest scanned ξ with `|value - t| <= eps`.
    pub xi: Direction,
    pub value: f64,
    /// Further scanned ξ that would also witness θ.
    pub alternatives: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub t: f64,
    pub eps: f64,
    pub grid_size: usize,
    pub covered_fraction: f64,
    pub witnesses: Vec<Witness>,
    pub uncovered: Vec<Direction>,
}

/// Sampled `Λ_t`: θ is covered iff some scanned ξ ⊥ θ has
/// `|t(θ, ξ) - t| <= eps`.
pub fn level_set(
    memo: &JohnMemo,
    t: f64,
    eps: f64,
    theta_grid: &[Direction],
    xi_per_theta: usize,
) -> Result<CoverageReport> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidArgument(format!("level t must lie in (0, 1], got {t}")));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("level eps must be positive, got {eps}")));
    }
    Ok(InvariantTable::build(memo, theta_grid, xi_per_theta)?.coverage(t, eps))
}

/// `resolution` directions on the sphere of `ξ⊥`, one per antipodal pair.
pub fn section_circle(xi: &Direction, resolution: usize) -> Vec<Direction> {
    xi_scan(xi, resolution)
}

fn section_values(memo: &JohnMemo, xi: &Direction, resolution: usize) -> Result<Vec<f64>> {
    section_circle(xi, resolution)
        .iter()
        .map(|theta| memo.invariant_value(theta, xi).map(|s| s.value))
        .collect()
}

/// `m = min t(θ, ξ0)` over θ on the section circle of `ξ0`.
pub fn infimum_m(memo: &JohnMemo, xi0: &Direction, resolution: usize) -> Result<f64> {
    Ok(section_values(memo, xi0, resolution)?.into_iter().fold(f64::INFINITY, f64::min))
}

/// `max t(θ, ξ)` over the section circle of `ξ`; 1 where `J` touches the
/// section boundary.
pub fn contact_check(memo: &JohnMemo, xi: &Direction, resolution: usize) -> Result<f64> {
    Ok(section_values(memo, xi, resolution)?.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// `Λ_t[θ](η) = φ_η ∘ φ_ξ⁻¹ (θ)`, normalized.
pub fn orbit_map(theta: &Direction, phi_xi: &TransportMap, phi_eta: &TransportMap) -> Result<Direction> {
    if phi_xi.source_xi != phi_eta.source_xi {
        return Err(Error::InvalidArgument("transports must share their source normal".into()));
    }
    let dot = theta.dot(&phi_xi.target_xi);
    if dot.abs() > ORTHO_TOL {
        return Err(Error::NotOrthogonal { dot });
    }
    let back = phi_xi.map.apply_inverse(theta.as_vector());
    Direction::new(phi_eta.map.apply(&back))
}

/// Orbit of θ under `η` running through `etas`, split by the sign of a test
/// functional. An orbit meeting both open hemispheres cannot stay in one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquatorProxy {
    pub positive: usize,
    pub negative: usize,
    pub crosses: bool,
}

pub fn equator_proxy(
    theta: &Direction,
    phi_xi: &TransportMap,
    phi_etas: &[TransportMap],
    functional: &Direction,
) -> Result<EquatorProxy> {
    let (mut positive, mut negative) = (0, 0);
    for phi_eta in phi_etas {
        let image = orbit_map(theta, phi_xi, phi_eta)?;
        let s = image.dot(functional);
        if s > ORTHO_TOL {
            positive += 1;
        } else if s < -ORTHO_TOL {
            negative += 1;
        }
    }
    Ok(EquatorProxy { positive, negative, crosses: positive > 0 && negative > 0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub t: f64,
    pub covered_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TSearch {
    pub t0: f64,
    pub m: f64,
    pub report: CoverageReport,
    /// Every evaluated level, sorted by `t`.
    pub curve: Vec<CurvePoint>,
    /// Whether the coarse scan looked non-unimodal and a fine scan ran.
    pub fallback_scan: bool,
}

const GOLDEN_ITERATIONS: usize = 40;
const FALLBACK_REFINEMENT: usize = 8;

fn unimodal(fractions: &[f64]) -> bool {
    // Nondecreasing then nonincreasing.
    let mut falling = false;
    for w in fractions.windows(2) {
        if w[1] < w[0] {
            falling = true;
        } else if w[1] > w[0] && falling {
            return false;
        }
    }
    true
}

/// Level `t0` with maximal sampled coverage over `[m - eps, 1 + eps]`,
/// `m = infimum_m(ξ0)`. A coarse scan of `t_steps` levels is refined by
/// golden section around its best level (or by a fine scan when the coarse
/// curve is not unimodal). `t0` is the midpoint of the maximal-coverage
/// plateau among all evaluated levels.
pub fn t_star_search(
    memo: &JohnMemo,
    table: &InvariantTable,
    xi0: &Direction,
    eps: f64,
    t_steps: usize,
) -> Result<TSearch> {
    if t_steps < MIN_T_STEPS {
        return Err(Error::InvalidArgument(format!("t_steps must be at least {MIN_T_STEPS}, got {t_steps}")));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("level eps must be positive, got {eps}")));
    }
    let m = infimum_m(memo, xi0, DEFAULT_CIRCLE_RESOLUTION)?;
    let (lo, hi) = (m - eps, 1.0 + eps);
    let mut evaluated: Vec<CurvePoint> = Vec::new();
    let eval = |t: f64, evaluated: &mut Vec<CurvePoint>| -> f64 {
        let f = table.fraction(t, eps);
        evaluated.push(CurvePoint { t, covered_fraction: f });
        f
    };
    let step = (hi - lo) / (t_steps - 1) as f64;
    let coarse: Vec<f64> = (0..t_steps).map(|i| eval(lo + step * i as f64, &mut evaluated)).collect();
    let fallback_scan = !unimodal(&coarse);
    if fallback_scan {
        let fine_steps = (t_steps - 1) * FALLBACK_REFINEMENT;
        let fine = (hi - lo) / fine_steps as f64;
        for i in 0..=fine_steps {
            if i % FALLBACK_REFINEMENT != 0 {
                eval(lo + fine * i as f64, &mut evaluated);
            }
        }
    } else {
        let best = coarse
            .iter()
            .enumerate()
            .fold(0, |b, (i, f)| if *f > coarse[b] { i } else { b });
        let (mut a, mut b) = (
            lo + step * best.saturating_sub(1) as f64,
            lo + step * (best + 1).min(t_steps - 1) as f64,
        );
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let mut fc = eval(c, &mut evaluated);
        let mut fd = eval(d, &mut evaluated);
        for _ in 0..GOLDEN_ITERATIONS {
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = eval(c, &mut evaluated);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = eval(d, &mut evaluated);
            }
        }
    }
    evaluated.sort_by(|x, y| x.t.total_cmp(&y.t));
    evaluated.dedup_by(|x, y| x.t == y.t);

    let best_fraction = evaluated.iter().map(|p| p.covered_fraction).fold(0.0, f64::max);
    let first_best = evaluated
        .iter()
        .position(|p| p.covered_fraction == best_fraction)
        .expect("at least one level evaluated");
    let mut last_best = first_best;
    while last_best + 1 < evaluated.len() && evaluated[last_best + 1].covered_fraction == best_fraction {
        last_best += 1;
    }
    let mut t0 = 0.5 * (evaluated[first_best].t + evaluated[last_best].t);
    let mut report = table.coverage(t0, eps);
    if report.covered_fraction < best_fraction {
        t0 = evaluated[first_best].t;
        report = table.coverage(t0, eps);
    }
    Ok(TSearch { t0, m, report, curve: evaluated, fallback_scan })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NestingPair {
    pub p: f64,
    pub q: f64,
    /// `|Λ_q \ Λ_p| / |Λ_q|` on the grid (0 when `Λ_q` is empty).
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NestingReport {
    pub eps: f64,
    pub pairs: Vec<NestingPair>,
    pub max_ratio: f64,
}

/// How far the sampled level sets are from nesting `Λ_q ⊆ Λ_p` for
/// consecutive `p <= q` in `t_list`.
pub fn nesting_check(table: &InvariantTable, t_list: &[f64], eps: f64) -> Result<NestingReport> {
    if t_list.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("t_list must be sorted ascending".into()));
    }
    let pairs: Vec<NestingPair> = t_list
        .windows(2)
        .map(|w| {
            let (p, q) = (w[0], w[1]);
            let in_q: Vec<usize> = (0..table.len()).filter(|&i| table.covered(i, q, eps)).collect();
            let missing = in_q.iter().filter(|&&i| !table.covered(i, p, eps)).count();
            let ratio = if in_q.is_empty() { 0.0 } else { missing as f64 / in_q.len() as f64 };
            NestingPair { p, q, ratio }
        })
        .collect();
    let max_ratio = pairs.iter().map(|p| p.ratio).fold(0.0, f64::max);
    Ok(NestingReport { eps, pairs, max_ratio })
}
