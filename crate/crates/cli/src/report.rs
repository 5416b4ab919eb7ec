use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use isosect_core::bodies::parse_body_spec_in;
use isosect_core::busemann::{assemble_quadric, midpoint_convexity, sections_all_ellipses, QuadricFit, SectionEllipseReport};
use isosect_core::geom::{covering_radius, great_circle, sphere_grid};
use isosect_core::john::{john_ellipsoid, JohnMethod, JohnResult, JohnSettings, GENERAL_EPS_FLOOR};
use isosect_core::levelset::{t_star_search, CurvePoint, InvariantTable, JohnMemo, TSearch};
use isosect_core::starbodies::{certify_search, emptiness_check, star_sample, Certificate, Verdict, E_ALPHA_READING};
use isosect_core::{BodyModel, CoverageReport, Direction};

use crate::config::{ExperimentConfig, Pipeline};
use crate::output::{CsvTable, PlotData};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const NO_DATA: &str = "no-data: this pipeline produces no sample tables";
const PROFILE_POINTS: usize = 180;
const CONVEXITY_PAIRS: usize = 1000;

#[derive(Debug, Clone, Serialize)]
pub struct JohnSummary {
    pub semi_axes: Vec<f64>,
    #[serde(flatten)]
    pub john: JohnResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelsetResult {
    pub t0: f64,
    pub m: f64,
    pub fallback_scan: bool,
    pub coverage: CoverageReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertifyResult {
    pub certificate: Certificate,
    /// Radial excesses `t0·(K∩ξ0⊥)` over `J` and `J` over `t0·(K∩ξ0⊥)`.
    pub emptiness: (f64, f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct StarbodiesResult {
    pub t0: f64,
    pub alpha: f64,
    /// Largest `|ρ_E - α·ρ_K|` and `|ρ_Ẽ - α·ρ_K|` along the profile circles.
    pub e_residual: f64,
    pub e_tilde_residual: f64,
    pub reading: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct BusemannResult {
    pub sections: SectionEllipseReport,
    pub quadric: Option<QuadricFit>,
    pub quadric_error: Option<String>,
    pub midpoint_gauge_max: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "pipeline", rename_all = "lowercase")]
pub enum PipelineResult {
    John(JohnSummary),
    Levelset(LevelsetResult),
    Certify(CertifyResult),
    Busemann(BusemannResult),
    Starbodies(StarbodiesResult),
}

/// Every tolerance a reported number depends on.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorBudget {
    pub john_eps: f64,
    pub level_eps: f64,
    pub cert_tol: f64,
    pub theta_covering_radius: Option<f64>,
    pub circle_covering_radius: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub toolkit_version: &'static str,
    pub config: ExperimentConfig,
    pub result: PipelineResult,
    pub error_budget: ErrorBudget,
    pub notes: Vec<String>,
    pub files: Vec<String>,
    pub wall_time_s: f64,
    pub content_hash: String,
    #[serde(skip)]
    pub plot: PlotData,
}

impl RunReport {
    pub fn verdict(&self) -> Option<Verdict> {
        match &self.result {
            PipelineResult::Certify(c) => Some(c.certificate.verdict),
            _ => None,
        }
    }

    /// 0 on success, 2 when the certificate rejects the body.
    pub fn exit_code(&self) -> u8 {
        if self.verdict() == Some(Verdict::Rejected) {
            2
        } else {
            0
        }
    }
}

fn reference_normal(config: &ExperimentConfig, n: usize) -> Result<Direction> {
    match &config.xi0 {
        Some(c) => {
            if c.len() != n {
                bail!("config invalid: xi0 has {} coordinates, body has dimension {n}", c.len());
            }
            Direction::from_slice(c).context("config invalid: xi0")
        }
        None => Ok(Direction::axis(n, n - 1)),
    }
}

fn fmt(x: f64) -> String {
    format!("{x:e}")
}

fn coord_header(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}_{i}")).collect()
}

fn invariant_csv(table: &InvariantTable, n: usize) -> CsvTable {
    let mut header = coord_header("theta", n);
    header.extend(coord_header("xi", n));
    header.push("value".into());
    let rows = table
        .samples()
        .map(|s| {
            let mut row: Vec<String> = s.theta.coords().iter().chain(s.xi.coords()).map(|c| fmt(*c)).collect();
            row.push(fmt(s.value));
            row
        })
        .collect();
    CsvTable { name: "invariant_samples.csv".into(), header, rows }
}

fn curve_csv(curve: &[CurvePoint]) -> CsvTable {
    CsvTable {
        name: "coverage_curve.csv".into(),
        header: vec!["t".into(), "covered_fraction".into()],
        rows: curve.iter().map(|p| vec![fmt(p.t), fmt(p.covered_fraction)]).collect(),
    }
}

/// Radial profiles of `E_α`, `Ẽ_α` along the great circles of consecutive
/// coordinate planes.
fn profile_csv(memo: &JohnMemo, alpha: f64, xi: usize) -> Result<(CsvTable, f64, f64)> {
    let n = memo.body().dim();
    let mut header = vec!["circle".to_string(), "index".to_string()];
    header.extend(coord_header("theta", n));
    header.extend(["rho_k", "e_alpha", "e_tilde_beta", "alpha"].map(String::from));
    let mut rows = Vec::new();
    let (mut e_res, mut et_res): (f64, f64) = (0.0, 0.0);
    for c in 0..n - 1 {
        let circle = great_circle(&Direction::axis(n, c), &Direction::axis(n, c + 1), PROFILE_POINTS)?;
        for (i, theta) in circle.iter().enumerate() {
            let s = star_sample(memo, alpha, alpha, theta, xi)?;
            let rho = memo.body().radial(theta);
            e_res = e_res.max((s.e_alpha - alpha * rho).abs());
            et_res = et_res.max((s.e_tilde_beta - alpha * rho).abs());
            let mut row = vec![c.to_string(), i.to_string()];
            row.extend(theta.coords().iter().map(|x| fmt(*x)));
            row.extend([rho, s.e_alpha, s.e_tilde_beta, alpha].map(fmt));
            rows.push(row);
        }
    }
    Ok((CsvTable { name: "star_profiles.csv".into(), header, rows }, e_res, et_res))
}

fn plane_csv(report: &SectionEllipseReport, n: usize) -> CsvTable {
    let mut header = vec!["plane".to_string()];
    header.extend(coord_header("u", n));
    header.extend(coord_header("v", n));
    header.extend(["q11", "q12", "q22", "residual"].map(String::from));
    let rows = report
        .planes
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut row = vec![i.to_string()];
            row.extend(p.u.coords().iter().chain(p.v.coords()).map(|x| fmt(*x)));
            row.extend([p.fit.q2[(0, 0)], p.fit.q2[(0, 1)], p.fit.q2[(1, 1)], p.fit.residual].map(fmt));
            row
        })
        .collect();
    CsvTable { name: "plane_fits.csv".into(), header, rows }
}

struct Computed {
    result: PipelineResult,
    budget: ErrorBudget,
    plot: PlotData,
    notes: Vec<String>,
}

fn table_and_search(
    memo: &JohnMemo,
    config: &ExperimentConfig,
    xi0: &Direction,
) -> Result<(InvariantTable, TSearch, f64)> {
    let n = memo.body().dim();
    let grid = sphere_grid(n, config.grids.theta, config.seed);
    let radius = covering_radius(&grid);
    let table = InvariantTable::build(memo, &grid, config.grids.xi).context("invariant table over the sphere")?;
    let search = t_star_search(memo, &table, xi0, config.eps.level, config.grids.t_steps)
        .context("search for the covering level t0")?;
    Ok((table, search, radius))
}

fn effective_john_eps(k: &BodyModel, eps: f64) -> f64 {
    match k {
        BodyModel::Ellipsoid(_) | BodyModel::PolytopeH(_) => eps,
        _ => eps.max(GENERAL_EPS_FLOOR),
    }
}

fn compute(config: &ExperimentConfig, base: &Path) -> Result<Computed> {
    let k = parse_body_spec_in(&config.body_spec, base).with_context(|| format!("body spec `{}`", config.body_spec))?;
    let n = k.dim();
    let mut budget = ErrorBudget {
        john_eps: effective_john_eps(&k, config.eps.john),
        level_eps: config.eps.level,
        cert_tol: config.cert_tol(),
        theta_covering_radius: None,
        circle_covering_radius: None,
    };
    let mut plot = PlotData::default();
    let mut notes = Vec::new();
    let settings = JohnSettings::with_eps(config.eps.john);

    let result = match config.pipeline {
        Pipeline::John => {
            let john = john_ellipsoid(&k, &settings).context("John ellipsoid of the body")?;
            if john.method == JohnMethod::OuterApproximation {
                budget.john_eps = john.eps;
            }
            notes.push(NO_DATA.into());
            PipelineResult::John(JohnSummary { semi_axes: john.ellipsoid.semi_axes(), john })
        }
        Pipeline::Levelset | Pipeline::Certify | Pipeline::Starbodies => {
            let xi0 = reference_normal(config, n)?;
            let memo = JohnMemo::new(k, settings).context("section John ellipsoids")?;
            let (table, search, radius) = table_and_search(&memo, config, &xi0)?;
            budget.theta_covering_radius = Some(radius);
            plot.tables.push(invariant_csv(&table, n));
            plot.tables.push(curve_csv(&search.curve));
            match config.pipeline {
                Pipeline::Levelset => PipelineResult::Levelset(LevelsetResult {
                    t0: search.t0,
                    m: search.m,
                    fallback_scan: search.fallback_scan,
                    coverage: search.report,
                }),
                Pipeline::Certify => {
                    budget.circle_covering_radius =
                        Some(covering_radius(&sphere_grid(n - 1, config.grids.circle, 0)));
                    let certificate =
                        certify_search(&memo, &table, &search, &xi0, config.grids.circle, budget.cert_tol)
                            .context("identity certificate at t0")?;
                    let emptiness = emptiness_check(&memo, &xi0, search.t0, config.grids.circle)
                        .context("set-difference check on the reference section")?;
                    let alpha = search.t0.clamp(0.0, 1.0);
                    plot.tables.push(profile_csv(&memo, alpha, config.grids.xi)?.0);
                    notes.push(format!("E_alpha reading: {E_ALPHA_READING}"));
                    PipelineResult::Certify(CertifyResult { certificate, emptiness })
                }
                _ => {
                    let alpha = search.t0.clamp(0.0, 1.0);
                    let (csv, e_residual, e_tilde_residual) =
                        profile_csv(&memo, alpha, config.grids.xi).context("star-body radial profiles")?;
                    plot.tables.push(csv);
                    PipelineResult::Starbodies(StarbodiesResult {
                        t0: search.t0,
                        alpha,
                        e_residual,
                        e_tilde_residual,
                        reading: E_ALPHA_READING,
                    })
                }
            }
        }
        Pipeline::Busemann => {
            let g = &config.grids;
            let sections = sections_all_ellipses(&k, g.planes, g.plane_samples, budget.cert_tol, config.seed)
                .context("section ellipse test")?;
            let (quadric, quadric_error) = match assemble_quadric(&k, g.planes, g.plane_samples, config.seed) {
                Ok(q) => (Some(q), None),
                Err(e) => (None, Some(e.to_string())),
            };
            if !sections.holds {
                notes.push("sections are not all ellipses at the requested tolerance".into());
            }
            plot.tables.push(plane_csv(&sections, n));
            PipelineResult::Busemann(BusemannResult {
                sections,
                quadric,
                quadric_error,
                midpoint_gauge_max: midpoint_convexity(&k, CONVEXITY_PAIRS, config.seed),
            })
        }
    };
    Ok(Computed { result, budget, plot, notes })
}

/// SHA-256 over everything a run computes: the config minus its output
/// directory, the result, the error budget and every CSV byte.
pub fn content_hash(config: &ExperimentConfig, result: &PipelineResult, budget: &ErrorBudget, plot: &PlotData) -> Result<String> {
    let mut echo = config.clone();
    echo.out_dir = Default::default();
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(&(&echo, result, budget))?);
    for t in &plot.tables {
        h.update(t.name.as_bytes());
        h.update(t.to_bytes()?);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

/// Runs the configured pipeline without touching the file system beyond
/// reading polytope files relative to `base`.
pub fn compute_report(config: &ExperimentConfig, base: &Path) -> Result<RunReport> {
    config.validate()?;
    let start = Instant::now();
    let Computed { result, budget, plot, notes } = compute(config, base)?;
    let content_hash = content_hash(config, &result, &budget, &plot)?;
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        toolkit_version: TOOLKIT_VERSION,
        config: config.clone(),
        result,
        error_budget: budget,
        notes,
        files: plot.tables.iter().map(|t| t.name.clone()).collect(),
        wall_time_s: start.elapsed().as_secs_f64(),
        content_hash,
        plot,
    })
}

/// Computes the report, writes the CSV tables and `report.json` into the
/// output directory and returns the report.
pub fn run_in(config: &ExperimentConfig, base: &Path) -> Result<RunReport> {
    let report = compute_report(config, base)?;
    crate::output::emit_plot_data(&report)?;
    crate::output::write_atomic(&config.out_dir.join("report.json"), &serde_json::to_vec_pretty(&report)?)?;
    Ok(report)
}

pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    run_in(config, Path::new("."))
}
