mod common;

use std::f64::consts::PI;

use common::*;
use mcflab::mesh::geodesic::{component_diameters, DiameterOptions};
use mcflab::mesh::io::{parse_obj, parse_off, to_off};
use mcflab::mesh::{
    check_control_params, estimate_curvature, intrinsic_diameter, surface_integral, ControlParams,
    DiameterMethod, TriMesh,
};
use mcflab::{Error, Vec3};
use proptest::prelude::*;

fn exact() -> DiameterOptions {
    DiameterOptions {
        method: DiameterMethod::ExactGraph,
        ..DiameterOptions::default()
    }
}

#[test]
fn unit_sphere_curvature() {
    let m = sphere(1.0, 4);
    let c = estimate_curvature(&m).unwrap();
    for v in 0..m.n_vertices() {
        assert!((c.mean[v] - 2.0).abs() < 0.04, "H = {}", c.mean[v]);
        assert!((c.lambda1[v] - 1.0).abs() < 0.02 && (c.lambda2[v] - 1.0).abs() < 0.02);
        assert!(c.lambda1[v] <= c.lambda2[v]);
        assert_eq!(c.mean[v], c.lambda1[v] + c.lambda2[v]);
        let a2 = c.lambda1[v].powi(2) + c.lambda2[v].powi(2);
        assert!((c.norm_a[v].powi(2) - a2).abs() <= 1e-12 * a2);
    }
    let total: f64 = c.vertex_area.iter().sum();
    assert!(rel(total, m.area()) < 1e-12);
}

#[test]
fn cylinder_barrel_curvature() {
    let g = capped_cylinder(1.0, 6.0, 48);
    let c = estimate_curvature(&g.mesh).unwrap();
    let mut scored = 0;
    for (v, &a) in g.truth.axial.iter().enumerate() {
        if !(1.5..=4.5).contains(&a) {
            continue;
        }
        scored += 1;
        assert!(c.lambda1[v].abs() < 0.02, "λ1 = {}", c.lambda1[v]);
        assert!((c.lambda2[v] - 1.0).abs() < 0.02, "λ2 = {}", c.lambda2[v]);
        assert!((c.mean[v] - 1.0).abs() < 0.02);
    }
    assert!(scored > 100);
}

#[test]
fn curvature_halves_when_mesh_doubles() {
    let m = torus(1.0, 0.3, 16).mesh;
    let c1 = estimate_curvature(&m).unwrap();
    let c2 = estimate_curvature(&m.scaled(2.0).unwrap()).unwrap();
    for v in 0..m.n_vertices() {
        for (a, b) in [
            (c1.lambda1[v], c2.lambda1[v]),
            (c1.lambda2[v], c2.lambda2[v]),
            (c1.mean[v], c2.mean[v]),
        ] {
            assert!(
                (a - 2.0 * b).abs() <= 1e-10 * a.abs().max(1.0),
                "{a} vs {b}"
            );
        }
        assert!((c2.vertex_area[v] - 4.0 * c1.vertex_area[v]).abs() <= 1e-12 * c2.vertex_area[v]);
    }
}

#[test]
fn sphere_h_error_halves_per_level() {
    let errs: Vec<f64> = (2..=5)
        .map(|level| {
            let c = estimate_curvature(&sphere(1.0, level)).unwrap();
            c.mean.iter().map(|h| (h - 2.0).abs()).fold(0.0, f64::max)
        })
        .collect();
    for w in errs.windows(2) {
        assert!(w[1] <= 0.5 * w[0] * 1.05, "errors {errs:?}");
    }
}

#[test]
fn gauss_bonnet_sphere_and_torus() {
    let s = sphere(1.0, 4);
    let c = estimate_curvature(&s).unwrap();
    let k: Vec<f64> = (0..c.len()).map(|v| c.gauss(v)).collect();
    assert!((surface_integral(&s, &k).unwrap() - 4.0 * PI).abs() < 0.02 * 4.0 * PI);

    let t = torus(1.0, 0.3, 32).mesh;
    let c = estimate_curvature(&t).unwrap();
    let k: Vec<f64> = (0..c.len()).map(|v| c.gauss(v)).collect();
    let abs_k: Vec<f64> = k.iter().map(|x| x.abs()).collect();
    // χ = 0: judge against the total absolute curvature (8π for a torus of revolution)
    let gb = surface_integral(&t, &k).unwrap();
    let scale = surface_integral(&t, &abs_k).unwrap();
    assert!(gb.abs() < 0.02 * scale, "∫K = {gb}, ∫|K| = {scale}");
    assert_eq!(t.euler_characteristic(), 0);
}

#[test]
fn surface_integral_oracles() {
    let s = sphere(1.0, 4);
    let c = estimate_curvature(&s).unwrap();
    let ones = vec![1.0; s.n_vertices()];
    assert!(rel(surface_integral(&s, &ones).unwrap(), 4.0 * PI) < 0.005);
    assert_eq!(
        surface_integral(&s, &vec![0.0; s.n_vertices()]).unwrap(),
        0.0
    );
    assert!(rel(surface_integral(&s, &c.mean).unwrap(), 8.0 * PI) < 0.02);
    assert!(matches!(
        surface_integral(&s, &[1.0, 2.0]),
        Err(Error::LengthMismatch { .. })
    ));
}

#[test]
fn sphere_diameter_is_pi() {
    let s = sphere(1.0, 3);
    let d = intrinsic_diameter(&s, &exact()).unwrap();
    assert!(rel(d.diameter, PI) < 0.05, "{}", d.diameter);
    let l = intrinsic_diameter(&s, &DiameterOptions::default()).unwrap();
    assert!(l.diameter <= d.diameter + 1e-12);
    assert!(rel(l.diameter, PI) < 0.05);
}

#[test]
fn capped_cylinder_diameter() {
    let g = capped_cylinder(0.2, 4.0, 24);
    let d = intrinsic_diameter(&g.mesh, &DiameterOptions::default()).unwrap();
    let expect = 4.0 + PI * 0.2;
    assert!(rel(d.diameter, expect) < 0.05, "{} vs {expect}", d.diameter);
}

#[test]
fn two_components_are_rejected_then_split() {
    let a = sphere(1.0, 2);
    let b = a.transformed(|p| p + Vec3::new(5.0, 0.0, 0.0)).unwrap();
    let both = a.disjoint_union(&b).unwrap();
    assert!(matches!(
        intrinsic_diameter(&both, &exact()),
        Err(Error::DisconnectedMesh(2))
    ));
    let per = component_diameters(&both, &exact()).unwrap();
    assert_eq!(per.len(), 2);
    assert!((per[0].diameter - per[1].diameter).abs() < 1e-9);
}

#[test]
fn control_checks_on_sphere_and_torus() {
    let s = sphere(1.0, 4);
    let c = estimate_curvature(&s).unwrap();
    let ok = check_control_params(&s, &c, &ControlParams::new(1.0, 1.0, 3.0, 20.0).unwrap());
    assert!(ok.all_ok(), "{ok:?}");
    let tight = check_control_params(&s, &c, &ControlParams::new(2.5, 1.0, 3.0, 20.0).unwrap());
    assert!(!tight.alpha_ok.ok);

    let t = torus(1.0, 0.05, 24).mesh;
    let c = estimate_curvature(&t).unwrap();
    let r = check_control_params(&t, &c, &ControlParams::new(0.5, 1.0, 100.0, 10.0).unwrap());
    assert!(r.beta_two_convex.ok);
    assert!(c.lambda1.iter().cloned().fold(f64::INFINITY, f64::min) < 0.0);
    assert!(ControlParams::new(1.0, 1.5, 1.0, 1.0).is_err());
}

#[test]
fn off_round_trip_and_quads_rejected() {
    let s = sphere(1.0, 1);
    let back = parse_off(&to_off(&s)).unwrap();
    assert_eq!(back.faces(), s.faces());
    for (p, q) in back.vertices().iter().zip(s.vertices()) {
        assert_eq!(p, q);
    }
    let quad = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
    assert!(matches!(parse_obj(quad), Err(Error::Parse(_))));
}

#[test]
fn invalid_meshes_are_rejected() {
    let v = vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()];
    // open: a single triangle
    assert!(matches!(
        TriMesh::new(v.clone(), vec![[0, 1, 2]]),
        Err(Error::NonManifoldMesh(..))
    ));
    // flipped face on a tetrahedron
    let flipped = vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 2, 3]];
    assert!(matches!(
        TriMesh::new(v.clone(), flipped),
        Err(Error::NonOrientable(..))
    ));
    let mut flat = v.clone();
    flat[3] = Vec3::new(0.5, 0.0, 0.0);
    let tet = vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]];
    assert!(TriMesh::new(v, tet.clone()).is_ok());
    assert!(matches!(
        TriMesh::new(flat, tet),
        Err(Error::DegenerateFace(..))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn rigid_motion_leaves_curvature_fixed(
        ax in (-1.0f64..1.0, -1.0f64..1.0, 0.1f64..1.0),
        angle in -3.0f64..3.0,
        shift in (-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0),
    ) {
        let m = torus(1.0, 0.4, 12).mesh;
        let rot = rotation(Vec3::new(ax.0, ax.1, ax.2), angle);
        let moved = rigid(&m, &rot, Vec3::new(shift.0, shift.1, shift.2));
        let (c1, c2) = (estimate_curvature(&m).unwrap(), estimate_curvature(&moved).unwrap());
        for v in 0..m.n_vertices() {
            for (a, b) in [(c1.lambda1[v], c2.lambda1[v]), (c1.lambda2[v], c2.lambda2[v]), (c1.norm_a[v], c2.norm_a[v])] {
                prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
            }
            prop_assert!((rot * c1.normal_at(v) - c2.normal_at(v)).norm() < 1e-9);
        }
        prop_assert!(rel(moved.area(), m.area()) < 1e-9);
        let d1 = intrinsic_diameter(&m, &exact()).unwrap().diameter;
        let d2 = intrinsic_diameter(&moved, &exact()).unwrap().diameter;
        prop_assert!(rel(d2, d1) < 1e-9);
    }

    #[test]
    fn scaling_is_covariant(s in 0.1f64..10.0) {
        let m = sphere(1.0, 2);
        let c1 = estimate_curvature(&m).unwrap();
        let c2 = estimate_curvature(&m.scaled(s).unwrap()).unwrap();
        for v in 0..m.n_vertices() {
            prop_assert!((c2.mean[v] * s - c1.mean[v]).abs() <= 1e-10 * c1.mean[v].abs());
            prop_assert!((c2.norm_a[v] * s - c1.norm_a[v]).abs() <= 1e-10 * c1.norm_a[v].abs());
        }
    }
}
