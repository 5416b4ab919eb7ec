//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::DVector;

use isosect_cli::report::PipelineResult;
use isosect_cli::{compute_report, run, ExperimentConfig, Pipeline};
use isosect_core::busemann::{assemble_quadric, sections_all_ellipses};
use isosect_core::geom::sampling::{gaussian_vector, random_direction, random_gl, random_orthogonal, random_spd, rng};
use isosect_core::geom::sphere_grid;
use isosect_core::john::{john_ellipsoid, john_invariance_check, JohnSettings};
use isosect_core::levelset::{
    contact_check, infimum_m, orbit_map, section_circle, t_star_search, InvariantTable, JohnMemo,
};
use isosect_core::sections::section;
use isosect_core::starbodies::{emptiness_check, identity_certificate, CertGrids, Verdict};
use isosect_core::transport::{ellipsoid_transport, ellipsoid_transport_routed, opnorm_bound};
use isosect_core::{BodyModel, Direction, EllipsoidRep};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

fn random_ellipsoid(seed: u64) -> EllipsoidRep {
    EllipsoidRep::new(random_spd(&mut rng(seed), 3, 0.5, 2.0)).unwrap()
}

fn gauge_linearity() -> Outcome {
    let mut r = rng(1);
    let pairs: Vec<DVector<f64>> = (0..4)
        .flat_map(|_| {
            let v = gaussian_vector(&mut r, 3);
            [-&v, v]
        })
        .collect();
    let rows: Vec<DVector<f64>> = (0..7).map(|_| gaussian_vector(&mut r, 3)).collect();
    let lp = BodyModel::lp_ball(3, 3.0).map_err(e)?;
    let kinds = vec![
        BodyModel::ellipsoid(random_spd(&mut r, 3, 0.5, 2.0)).map_err(e)?,
        lp.clone(),
        BodyModel::cube(3).map_err(e)?,
        BodyModel::cross_polytope(3).map_err(e)?,
        BodyModel::polytope_h(rows).map_err(e)?,
        BodyModel::polytope_v(pairs).map_err(e)?,
        lp.linear_image(&random_gl(&mut r, 3, 0.5, 2.0)).map_err(e)?,
        section(&BodyModel::lp_ball(4, 1.5).map_err(e)?, &random_direction(&mut r, 4)).map_err(e)?.body,
    ];
    let mut worst: f64 = 0.0;
    for k in &kinds {
        for _ in 0..100 {
            let phi = random_gl(&mut r, k.dim(), 0.5, 2.0);
            let x = gaussian_vector(&mut r, k.dim());
            let image = k.linear_image(&phi).map_err(e)?;
            worst = worst.max((k.gauge(&x) - image.gauge(&phi.apply(&x))).abs());
        }
    }
    ensure(worst <= 1e-10, format!("max gauge gap {worst:.3e}"))?;
    Ok(format!("{} body kinds x 100 maps, max gap {worst:.2e}", kinds.len()))
}

fn radius_of(spec: &str) -> Result<(f64, f64, f64), String> {
    let j = john_ellipsoid(&BodyModel::from_spec(spec).map_err(e)?, &JohnSettings::default()).map_err(e)?;
    let axes = j.ellipsoid.semi_axes();
    Ok((axes[0], axes[axes.len() - 1], j.certificate_ratio))
}

fn john_oracles() -> Outcome {
    let mut worst_cert: f64 = 0.0;
    let mut check = |spec: &str, r: f64, tol: f64| -> Result<(), String> {
        let (lo, hi, cert) = radius_of(spec)?;
        worst_cert = worst_cert.max(cert);
        ensure(
            (lo - r).abs() <= tol && (hi - r).abs() <= tol,
            format!("{spec}: semi-axes in [{lo}, {hi}], want {r} within {tol}"),
        )
    };
    for n in 3..=5 {
        check(&format!("cube:{n}"), 1.0, 1e-6)?;
    }
    check("crosspolytope:3", 3f64.powf(-0.5), 1e-5)?;
    check("lp:3:1.5", 3f64.powf(-1.0 / 6.0), 1e-2)?;
    check("lp:3:4", 1.0, 1e-2)?;
    ensure(worst_cert <= 1.0 + 1e-7, format!("certificate ratio {worst_cert}"))?;
    Ok(format!("cube 3..5, crosspolytope, lp 1.5 and 4 on target; max kappa/d = {worst_cert:.12}"))
}

fn linear_invariance() -> Outcome {
    let mut r = rng(3);
    let grid = sphere_grid(3, 1000, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let rows: Vec<DVector<f64>> = (0..10).map(|_| gaussian_vector(&mut r, 3)).collect();
        let k = BodyModel::polytope_h(rows).map_err(e)?;
        let phi = random_gl(&mut r, 3, 0.5, 2.0);
        worst = worst.max(john_invariance_check(&k, &phi, &grid, 1e-10).map_err(e)?);
    }
    ensure(worst <= 1e-5, format!("max Hausdorff {worst:.3e}"))?;
    Ok(format!("10 polytopes, max grid Hausdorff {worst:.2e}"))
}

fn transport_exactness() -> Outcome {
    let mut r = rng(4);
    let (mut sec, mut anchor, mut over): (f64, f64, f64) = (0.0, 0.0, f64::NEG_INFINITY);
    for _ in 0..200 {
        let el = EllipsoidRep::new(random_spd(&mut r, 3, 0.3, 3.0)).unwrap();
        let xi0 = random_direction(&mut r, 3);
        let xi = random_direction(&mut r, 3);
        let t = ellipsoid_transport(&el, &xi0, &xi).map_err(e)?;
        sec = sec.max(t.section_error);
        anchor = anchor.max(t.anchor_error());
        over = over.max(t.map.operator_norm() - opnorm_bound(&BodyModel::Ellipsoid(el), &[]));
    }
    ensure(sec <= 1e-9 && anchor <= 1e-10 && over <= 1e-8, format!("{sec:.2e} {anchor:.2e} {over:.2e}"))?;
    Ok(format!("200 maps: section error {sec:.2e}, anchor {anchor:.2e}, norm excess {over:.2e}"))
}

fn gamma_chain() -> Outcome {
    let mut r = rng(5);
    let xi0 = Direction::axis(3, 2);
    let (mut gap, mut orbit): (f64, f64) = (0.0, 0.0);
    for trial in 0..500 {
        let el = random_ellipsoid(1000 + trial / 50);
        let memo = JohnMemo::with_eps(BodyModel::Ellipsoid(el.clone()), 1e-10).map_err(e)?;
        let xi = random_direction(&mut r, 3);
        let eta = random_direction(&mut r, 3);
        let theta = random_orthogonal(&mut r, &xi);
        let phi_xi = ellipsoid_transport_routed(&el, &xi0, &xi).map_err(e)?;
        let phi_eta = ellipsoid_transport_routed(&el, &xi0, &eta).map_err(e)?;
        let v = memo.invariant_value(&theta, &xi).map_err(e)?.value;
        gap = gap.max((v - memo.transported_value(&theta, &phi_xi).map_err(e)?).abs());
        let image = orbit_map(&theta, &phi_xi, &phi_eta).map_err(e)?;
        orbit = orbit.max((v - memo.invariant_value(&image, &eta).map_err(e)?.value).abs());
    }
    ensure(gap <= 1e-6 && orbit <= 1e-6, format!("gap {gap:.2e}, orbit {orbit:.2e}"))?;
    Ok(format!("500 samples: transported gap {gap:.2e}, orbit drift {orbit:.2e}"))
}

fn positive_case() -> Outcome {
    let mut r = rng(6);
    let xi0 = Direction::axis(3, 2);
    let mut worst_t: f64 = 0.0;
    let mut min_contact: f64 = f64::INFINITY;
    let mut spread: f64 = 0.0;
    for trial in 0..10 {
        let memo = JohnMemo::with_eps(BodyModel::Ellipsoid(random_ellipsoid(2000 + trial)), 1e-10).map_err(e)?;
        let table = InvariantTable::build(&memo, &sphere_grid(3, 500, trial), 16).map_err(e)?;
        let search = t_star_search(&memo, &table, &xi0, 1e-4, 32).map_err(e)?;
        ensure(search.report.covered_fraction == 1.0, format!("coverage {}", search.report.covered_fraction))?;
        worst_t = worst_t.max((search.t0 - 1.0).abs());
        spread = spread.max((table.max_value() - 1.0).abs()).max((table.min_value() - 1.0).abs());
        for _ in 0..20 {
            min_contact = min_contact.min(contact_check(&memo, &random_direction(&mut r, 3), 360).map_err(e)?);
        }
    }
    ensure(worst_t <= 1e-4, format!("t0 off by {worst_t:.2e}"))?;
    ensure(min_contact >= 1.0 - 1e-3, format!("contact {min_contact}"))?;
    ensure(spread <= 1e-4, format!("values spread {spread:.2e}"))?;
    Ok(format!("10 ellipsoids: |t0-1| <= {worst_t:.2e}, min contact {min_contact:.9}, value spread {spread:.2e}"))
}

fn negative_control() -> Outcome {
    let memo = JohnMemo::with_eps(BodyModel::cross_polytope(3).unwrap(), 1e-10).map_err(e)?;
    let e3 = Direction::axis(3, 2);
    let a = 0.5f64.sqrt();
    let values: Vec<f64> = section_circle(&e3, 720)
        .iter()
        .map(|t| memo.invariant_value(t, &e3).map(|s| s.value))
        .collect::<Result<_, _>>()
        .map_err(e)?;
    ensure(values.iter().any(|v| (v - a).abs() <= 1e-4), "no value near 1/sqrt 2")?;
    ensure(values.iter().any(|v| (v - 1.0).abs() <= 1e-4), "no value near 1")?;
    let m = infimum_m(&memo, &e3, 720).map_err(e)?;
    ensure((m - a).abs() <= 1e-4, format!("m = {m}"))?;
    let table = InvariantTable::build(&memo, &sphere_grid(3, 1000, 0), 32).map_err(e)?;
    let best = t_star_search(&memo, &table, &e3, 0.005, 32).map_err(e)?;
    let best_fraction = best.curve.iter().map(|p| p.covered_fraction).fold(0.0, f64::max);
    ensure(best_fraction < 1.0, format!("coverage reached {best_fraction}"))?;
    let mut config = ExperimentConfig::new("crosspolytope:3", Pipeline::Certify);
    config.grids.theta = 1000;
    let report = compute_report(&config, std::path::Path::new(".")).map_err(e)?;
    let PipelineResult::Certify(c) = &report.result else { return Err("wrong pipeline".into()) };
    ensure(c.certificate.verdict == Verdict::Rejected, "verdict not Rejected")?;
    ensure(report.exit_code() == 2, "exit code not 2")?;
    ensure(
        c.certificate.section_residual >= 0.2,
        format!("section residual {} at t0 = {}", c.certificate.section_residual, c.certificate.t0),
    )?;
    Ok(format!(
        "m = {m:.6}, best coverage {best_fraction:.3}, Rejected at t0 = {:.4} with section residual {:.4}",
        c.certificate.t0, c.certificate.section_residual
    ))
}

fn identities() -> Outcome {
    let eps = 1e-4;
    let xi0 = Direction::axis(3, 2);
    let grids = CertGrids { theta: 1000, xi: 16, ..CertGrids::default() };
    let mut worst: f64 = 0.0;
    for trial in 0..10 {
        let el = random_ellipsoid(3000 + trial);
        let rho_max = *el.semi_axes().last().unwrap();
        let memo = JohnMemo::with_eps(BodyModel::Ellipsoid(el), 1e-10).map_err(e)?;
        let c = identity_certificate(&memo, &xi0, &grids, eps, 2.0 * eps * rho_max).map_err(e)?;
        ensure(c.verdict == Verdict::EllipsoidConfirmed, format!("trial {trial} rejected: {c:?}"))?;
        ensure(
            c.e_residual <= 2.0 * eps * rho_max && c.e_tilde_residual <= 2.0 * eps * rho_max,
            format!("residuals {} {}", c.e_residual, c.e_tilde_residual),
        )?;
        let (a, b) = emptiness_check(&memo, &xi0, c.t0, 720).map_err(e)?;
        ensure(a <= 1e-6 && b <= 1e-6, format!("emptiness ({a}, {b})"))?;
        worst = worst.max(c.e_residual).max(c.e_tilde_residual).max(a).max(b);
    }
    Ok(format!("10 ellipsoids confirmed, largest residual {worst:.2e}"))
}

fn section_verifier() -> Outcome {
    let ell = BodyModel::ellipsoid_from_semi_axes(&[1.0, 2.0, 3.0]).unwrap();
    let r = sections_all_ellipses(&ell, 50, 360, 1e-9, 0).map_err(e)?;
    ensure(r.max_residual <= 1e-9, format!("ellipsoid residual {}", r.max_residual))?;
    let mut rel: f64 = 0.0;
    for seed in 0..20 {
        let q = random_spd(&mut rng(4000 + seed), 3, 0.3, 3.0);
        let fit = assemble_quadric(&BodyModel::ellipsoid(q.clone()).unwrap(), 30, 60, seed).map_err(e)?;
        rel = rel.max((&fit.q - &q).norm() / q.norm());
    }
    ensure(rel <= 1e-6, format!("quadric error {rel:.2e}"))?;
    let lp = sections_all_ellipses(&BodyModel::lp_ball(3, 4.0).unwrap(), 50, 360, 1e-9, 0).map_err(e)?;
    ensure(lp.max_residual >= 0.01, format!("lp residual {}", lp.max_residual))?;
    let ball = sections_all_ellipses(&BodyModel::unit_ball(3), 50, 360, 1e-12, 0).map_err(e)?;
    ensure(ball.max_residual <= 1e-12, format!("ball residual {}", ball.max_residual))?;
    Ok(format!(
        "ellipsoid {:.1e}, quadric rel error {rel:.1e}, lp4 {:.4}, ball {:.1e}",
        r.max_residual, lp.max_residual, ball.max_residual
    ))
}

fn reproducibility() -> Outcome {
    let dirs = [tempfile::tempdir().map_err(e)?, tempfile::tempdir().map_err(e)?];
    let mut hashes = Vec::new();
    let mut bytes = Vec::new();
    for d in &dirs {
        let mut config = ExperimentConfig::new("cube:3", Pipeline::Certify);
        config.grids.theta = 300;
        config.grids.xi = 16;
        config.seed = 11;
        config.out_dir = d.path().to_path_buf();
        let report = run(&config).map_err(e)?;
        hashes.push(report.content_hash.clone());
        let mut files = Vec::new();
        for name in &report.files {
            files.push(std::fs::read(d.path().join(name)).map_err(e)?);
        }
        bytes.push(files);
    }
    ensure(hashes[0] == hashes[1], "content hashes differ")?;
    ensure(!bytes[0].is_empty() && bytes[0] == bytes[1], "csv bytes differ")?;

    let mut worst_drop: f64 = 0.0;
    let xi0 = Direction::axis(3, 2);
    for trial in 0..5 {
        let memo = JohnMemo::with_eps(BodyModel::Ellipsoid(random_ellipsoid(5000 + trial)), 1e-10).map_err(e)?;
        let mut fractions = Vec::new();
        for res in [250, 500] {
            let table = InvariantTable::build(&memo, &sphere_grid(3, res, 0), 16).map_err(e)?;
            fractions.push(t_star_search(&memo, &table, &xi0, 1e-3, 32).map_err(e)?.report.covered_fraction);
        }
        worst_drop = worst_drop.max(fractions[0] - fractions[1]);
    }
    ensure(worst_drop <= 0.01, format!("coverage dropped by {worst_drop}"))?;
    Ok(format!("hash {} reproduced over {} csv files; max refinement drop {worst_drop}", &hashes[0][..12], bytes[0].len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("gauge under linear maps", gauge_linearity),
        ("John solver oracles", john_oracles),
        ("John ellipsoid linear invariance", linear_invariance),
        ("ellipsoid transport exactness", transport_exactness),
        ("transported invariant and orbit map", gamma_chain),
        ("ellipsoid level sets cover the sphere at t0 = 1", positive_case),
        ("crosspolytope negative control", negative_control),
        ("star-body identities and emptiness", identities),
        ("section ellipse verifier", section_verifier),
        ("reproducibility and refinement", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} ({secs:.1}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} ({secs:.1}s)", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
