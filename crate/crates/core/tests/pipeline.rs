//! End-to-end runs through spec parsing, John ellipsoids, level sets and the
//! certificate.

use approx::assert_relative_eq;

use isosect_core::busemann::{assemble_quadric, sections_all_ellipses};
use isosect_core::geom::sphere_grid;
use isosect_core::john::{john_ellipsoid, JohnMethod, JohnSettings};
use isosect_core::levelset::{infimum_m, InvariantTable, JohnMemo};
use isosect_core::starbodies::{emptiness_check, identity_certificate, CertGrids, Verdict};
use isosect_core::{BodyModel, Direction, Error};

#[test]
fn spec_to_certificate() {
    let k = BodyModel::from_spec("ellipsoid:1,2,3").unwrap();
    let memo = JohnMemo::new(k, JohnSettings::with_eps(1e-10)).unwrap();
    let xi0 = Direction::axis(3, 2);
    let grids = CertGrids { theta: 300, xi: 16, ..CertGrids::default() };
    let cert = identity_certificate(&memo, &xi0, &grids, 1e-4, 2e-4).unwrap();
    assert_eq!(cert.verdict, Verdict::EllipsoidConfirmed);
    assert_relative_eq!(cert.t0, 1.0, epsilon = 1e-4);
    let (a, b) = emptiness_check(&memo, &xi0, cert.t0, 360).unwrap();
    assert!(a <= 1e-6 && b <= 1e-6);
}

#[test]
fn cube_john_is_the_ball() {
    let k = BodyModel::from_spec("cube:3").unwrap();
    let j = john_ellipsoid(&k, &JohnSettings::default()).unwrap();
    assert_eq!(j.method, JohnMethod::Polytope);
    for a in j.ellipsoid.semi_axes() {
        assert_relative_eq!(a, 1.0, epsilon = 1e-6);
    }
}

#[test]
fn four_dimensional_sections() {
    let k = BodyModel::from_spec("crosspolytope:4").unwrap();
    let memo = JohnMemo::new(k, JohnSettings::with_eps(1e-9)).unwrap();
    let xi = Direction::axis(4, 3);
    // The section is the 3-dimensional cross-polytope; its John ball has
    // radius 3^{-1/2} and touches the boundary only at facet normals.
    let m = infimum_m(&memo, &xi, 400).unwrap();
    assert!(m > 0.5 && m < 1.0);
    let table = InvariantTable::build(&memo, &sphere_grid(4, 60, 0), 8).unwrap();
    assert!(table.max_value() <= 1.0 + 1e-6);
    assert!(table.min_value() > 0.0);
}

#[test]
fn busemann_round_trip_through_spec() {
    let k = BodyModel::from_spec("ellipsoid:2,1,0.5").unwrap();
    let r = sections_all_ellipses(&k, 30, 90, 1e-9, 0).unwrap();
    assert!(r.holds);
    let q = assemble_quadric(&k, 30, 90, 0).unwrap().q;
    assert_relative_eq!(q[(0, 0)], 0.25, epsilon = 1e-9);
    assert_relative_eq!(q[(2, 2)], 4.0, epsilon = 1e-8);
}

#[test]
fn bad_specs_and_planes() {
    assert!(matches!(BodyModel::from_spec("blob:3"), Err(Error::Parse(_))));
    assert!(BodyModel::from_spec("lp:3:0.5").is_err());
    let plane = BodyModel::from_spec("ball:2").unwrap();
    assert!(matches!(
        JohnMemo::new(plane, JohnSettings::default()),
        Err(Error::DimensionTooSmall { .. })
    ));
}
