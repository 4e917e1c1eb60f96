#![allow(dead_code)]

use std::f64::consts::PI;

use mcflab::flow::{rescaled_dt, rescaled_step, FlowHistory, FlowState, StopReason};
use mcflab::mesh::{estimate_curvature, CurvatureField, TriMesh};
use mcflab::neck::{assemble_tubes, detect_necks, Tube};
use mcflab::scenario::{generate, icosphere, Generated, Generator, Scenario};
use mcflab::Vec3;
use nalgebra::{Rotation3, Unit};

pub fn sphere(radius: f64, level: u32) -> TriMesh {
    icosphere(radius, level).unwrap()
}

pub fn capped_cylinder(radius: f64, length: f64, around: usize) -> Generated {
    generate(&Scenario::new(
        "cyl",
        Generator::CappedCylinder {
            radius,
            length,
            around,
            ripple: 0.0,
            ripple_wavelength: 1.0,
        },
    ))
    .unwrap()
}

pub fn torus(major: f64, minor: f64, around: usize) -> Generated {
    generate(&Scenario::new(
        "torus",
        Generator::Torus {
            major,
            minor,
            around,
        },
    ))
    .unwrap()
}

pub fn elbow(radius: f64, bend_radius: f64, around: usize) -> Generated {
    generate(&Scenario::new(
        "elbow",
        Generator::BentTube {
            radius,
            bend_radius,
            leg_length: 1.0,
            angle_deg: 90.0,
            around,
        },
    ))
    .unwrap()
}

pub fn rotation(axis: Vec3, angle: f64) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle)
}

pub fn rigid(mesh: &TriMesh, rot: &Rotation3<f64>, shift: Vec3) -> TriMesh {
    mesh.transformed(|p| rot * p + shift).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Capped cylinder of radius `√(1 − 2t)` centered on the origin at each of
/// `n + 1` snapshots `t = i·dt`, snapshot `i` turned by `i·tilt_deg` about
/// the x axis.
pub fn shrinking_cylinder(n: usize, dt: f64, tilt_deg: f64) -> FlowHistory {
    let base = capped_cylinder(1.0, 12.0, 32)
        .mesh
        .transformed(|p| p - Vec3::new(0.0, 0.0, 6.0))
        .unwrap();
    let states = (0..=n)
        .map(|i| {
            let t = i as f64 * dt;
            let r = (1.0 - 2.0 * t).sqrt();
            let rot = rotation(Vec3::x(), (i as f64 * tilt_deg).to_radians());
            let mesh = base
                .transformed(|p| rot * Vec3::new(p.x * r, p.y * r, p.z))
                .unwrap();
            FlowState::new(mesh, t).unwrap()
        })
        .collect();
    FlowHistory::from_states(states, StopReason::TMax).unwrap()
}

/// Tubes assembled from the necks detected at `eps`.
pub fn tubes_of(mesh: &TriMesh, eps: f64, window: f64) -> (CurvatureField, Vec<Tube>) {
    let curv = estimate_curvature(mesh).unwrap();
    let necks = detect_necks(mesh, &curv, eps, window).unwrap();
    let tubes = assemble_tubes(mesh, &necks);
    (curv, tubes)
}

/// Largest arc/chord ratio on a circle of radius `bend` for chords shorter
/// than `cutoff`.
pub fn arc_chord(bend: f64, cutoff: f64) -> f64 {
    let half = (cutoff / (2.0 * bend)).min(1.0).asin();
    half / half.sin()
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// F of the round sphere of radius `r` about its center, integrating the
/// Gaussian weight over polar angle.
pub fn sphere_f_oracle(r: f64) -> f64 {
    simpson(
        |th| 2.0 * PI * r * r * th.sin() * (-r * r / 4.0).exp(),
        0.0,
        PI,
        2000,
    ) / (4.0 * PI)
}

/// F of the cylinder of radius `r`, axial extent `[-half, half]`, about
/// the origin on its axis.
pub fn cylinder_f_oracle(r: f64, half: f64) -> f64 {
    simpson(
        |z| 2.0 * PI * r * (-(r * r + z * z) / 4.0).exp(),
        -half,
        half,
        4000,
    ) / (4.0 * PI)
}

/// Double-double arithmetic for the increment-sum oracle.
#[derive(Clone, Copy)]
pub struct Dd(f64, f64);

pub fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    Dd(s, (a - (s - bb)) + (b - bb))
}

impl Dd {
    pub fn add(self, o: Dd) -> Dd {
        let s = two_sum(self.0, o.0);
        let lo = s.1 + self.1 + o.1;
        two_sum(s.0, lo)
    }

    pub fn abs(self) -> Dd {
        if self.0 < 0.0 {
            Dd(-self.0, -self.1)
        } else {
            self
        }
    }

    pub fn sqrt(self) -> Dd {
        if self.0 == 0.0 {
            return Dd(0.0, 0.0);
        }
        let y = self.0.sqrt();
        // exact y² via fma, then one Newton correction
        let sq_lo = y.mul_add(y, -(y * y));
        let resid = (self.0 - y * y) - sq_lo + self.1;
        two_sum(y, resid / (2.0 * y))
    }
}

pub fn oracle_sum(values: &[f64]) -> f64 {
    let mut acc = Dd(0.0, 0.0);
    for w in values.windows(2) {
        acc = acc.add(two_sum(w[1], -w[0]).abs().sqrt());
    }
    acc.0 + acc.1
}

/// Largest vertex displacement per step of rescaled flow about the origin,
/// in units of `mean edge · ds`, over vertices selected by `mask`.
pub fn max_rescaled_motion(
    mesh: &TriMesh,
    mask: impl Fn(&Vec3) -> bool,
    steps: usize,
) -> (f64, f64) {
    let origin = Vec3::zeros();
    let edge = mesh.mean_edge_length();
    let mut st = FlowState::new(mesh.clone(), 0.0).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..steps {
        let ds = rescaled_dt(&st, 0.01);
        let next = rescaled_step(&st, &origin, ds, 1e-3).unwrap();
        for (p, q) in st.mesh.vertices().iter().zip(next.mesh.vertices()) {
            if mask(p) {
                worst = worst.max((q - p).norm() / (edge * ds));
            }
        }
        st = next;
    }
    (worst, edge)
}
