//! Deterministic initial surfaces with analytic ground truth.
//!
//! Every generator returns a validated, outward oriented, embedded
//! [`TriMesh`] plus a [`GroundTruth`] record of what is known in closed form
//! (radius, centerline, barrel extent, expected Euler characteristic).

mod intersect;
pub mod sweep;

use std::f64::consts::PI;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{io, TriMesh, Vec3};

pub use intersect::find_self_intersection;
use sweep::{sweep_closed, sweep_open, Centerline, Profile, ProfileSample};

/// Initial-data generator and its geometric parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum Generator {
    /// Subdivided icosahedron projected to the sphere.
    Sphere {
        radius: f64,
        level: u32,
        #[serde(default)]
        center: [f64; 3],
    },
    /// Straight tube of `radius` with a barrel of `length` along z and
    /// hemispherical caps. `ripple` adds an axisymmetric radial perturbation
    /// of relative amplitude `ripple` and wavelength `ripple_wavelength`.
    CappedCylinder {
        radius: f64,
        length: f64,
        around: usize,
        #[serde(default)]
        ripple: f64,
        #[serde(default = "default_ripple_wavelength")]
        ripple_wavelength: f64,
    },
    /// Two balls joined by a thin mean convex neck.
    Dumbbell {
        ball_radius: f64,
        neck_radius: f64,
        separation: f64,
        around_neck: usize,
        max_edge: f64,
    },
    /// Torus of revolution about the z axis.
    Torus {
        major: f64,
        minor: f64,
        around: usize,
    },
    /// Capped tube whose centerline is two straight legs joined by a
    /// circular arc of `bend_radius` turning through `angle_deg`.
    BentTube {
        radius: f64,
        bend_radius: f64,
        leg_length: f64,
        angle_deg: f64,
        around: usize,
    },
    /// Capped tube around a z-axis centerline perturbed by `octaves`
    /// sinusoids; octave `j` has wavelength `wavelength / 2^j` and amplitude
    /// `amplitude · decay^j`, with random phases from the seed.
    WigglyTube {
        radius: f64,
        length: f64,
        amplitude: f64,
        wavelength: f64,
        octaves: u32,
        decay: f64,
        around: usize,
    },
    FromFile {
        path: PathBuf,
    },
}

fn default_ripple_wavelength() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(flatten)]
    pub generator: Generator,
    #[serde(default)]
    pub seed: u64,
}

/// Analytic facts about a generated surface.
#[derive(Debug, Clone, Default, Serialize)]
pub struct GroundTruth {
    pub radius: Option<f64>,
    pub area: Option<f64>,
    pub centerline_length: Option<f64>,
    pub centerline_closed: bool,
    /// Centerline polyline (empty when not applicable).
    pub centerline: Vec<[f64; 3]>,
    pub euler_characteristic: Option<i64>,
    /// Axial coordinate of every vertex along the centerline (empty for
    /// spheres and files).
    #[serde(skip)]
    pub axial: Vec<f64>,
    /// Vertices on the straight or ripple-free barrel, away from caps.
    #[serde(skip)]
    pub barrel: Vec<bool>,
}

pub struct Generated {
    pub mesh: TriMesh,
    pub truth: GroundTruth,
}

impl Scenario {
    pub fn new(name: &str, generator: Generator) -> Self {
        Self {
            name: name.to_string(),
            generator,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Builds the scenario mesh, checks it is embedded, and attaches ground truth.
pub fn generate(scenario: &Scenario) -> Result<Generated> {
    let out = match &scenario.generator {
        Generator::Sphere {
            radius,
            level,
            center,
        } => {
            positive(&[("radius", *radius)])?;
            if *level > 7 {
                return Err(Error::InvalidParams(format!(
                    "icosphere level {level} too large"
                )));
            }
            let c = Vec3::from(*center);
            let mesh = icosphere(*radius, *level)?.transformed(|p| p + c)?;
            Generated {
                mesh,
                truth: GroundTruth {
                    radius: Some(*radius),
                    area: Some(4.0 * PI * radius * radius),
                    euler_characteristic: Some(2),
                    ..Default::default()
                },
            }
        }
        Generator::CappedCylinder {
            radius,
            length,
            around,
            ripple,
            ripple_wavelength,
        } => {
            positive(&[
                ("radius", *radius),
                ("length", *length),
                ("ripple_wavelength", *ripple_wavelength),
            ])?;
            min_around(*around)?;
            if !(0.0..0.5).contains(ripple) {
                return Err(Error::InvalidParams(format!(
                    "ripple {ripple} must lie in [0, 0.5)"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
            let phase = if *ripple > 0.0 {
                rng.gen::<f64>() * 2.0 * PI
            } else {
                0.0
            };
            let (r, l, amp, wl) = (*radius, *length, *ripple, *ripple_wavelength);
            // ripple fades out over one radius at each end so the caps stay round
            let rho = move |a: f64| {
                let fade = ((a / r).min((l - a) / r)).clamp(0.0, 1.0);
                r * (1.0 + amp * fade * (2.0 * PI * a / wl + phase).sin())
            };
            let h = 2.0 * PI * r / *around as f64;
            let line = Centerline::straight(l);
            let swept = sweep_open(&line, &capped_profile(r, l, h, rho));
            let barrel = swept.axial.iter().map(|&a| a >= 0.0 && a <= l).collect();
            Generated {
                mesh: TriMesh::new(swept.vertices, swept.faces)?,
                truth: GroundTruth {
                    radius: Some(r),
                    area: (amp == 0.0).then(|| 2.0 * PI * r * l + 4.0 * PI * r * r),
                    centerline_length: Some(l),
                    centerline: line.polyline(2).iter().map(|p| [p.x, p.y, p.z]).collect(),
                    euler_characteristic: Some(2),
                    axial: swept.axial,
                    barrel,
                    ..Default::default()
                },
            }
        }
        Generator::Dumbbell {
            ball_radius,
            neck_radius,
            separation,
            around_neck,
            max_edge,
        } => {
            positive(&[
                ("ball_radius", *ball_radius),
                ("neck_radius", *neck_radius),
                ("separation", *separation),
                ("max_edge", *max_edge),
            ])?;
            min_around(*around_neck)?;
            if *neck_radius >= 0.5 * ball_radius || *separation <= 2.0 * ball_radius * 0.8 {
                return Err(Error::InvalidParams(
                    "dumbbell needs neck < R/2 and separation > 1.6 R".into(),
                ));
            }
            dumbbell(
                *ball_radius,
                *neck_radius,
                *separation,
                *around_neck,
                *max_edge,
            )?
        }
        Generator::Torus {
            major,
            minor,
            around,
        } => {
            positive(&[("major", *major), ("minor", *minor)])?;
            min_around(*around)?;
            if minor >= major {
                return Err(Error::InvalidParams(format!(
                    "torus needs minor < major, got r = {minor}, R = {major}"
                )));
            }
            let n = 2048;
            let pts = (0..n)
                .map(|i| {
                    let th = 2.0 * PI * i as f64 / n as f64;
                    Vec3::new(major * th.cos(), major * th.sin(), 0.0)
                })
                .collect();
            let line = Centerline::new(pts, true);
            let h = 2.0 * PI * minor / *around as f64;
            let rings = ((2.0 * PI * major / h).round() as usize).max(3);
            let swept = sweep_closed(&line, *minor, *around, rings);
            Generated {
                mesh: TriMesh::new(swept.vertices, swept.faces)?,
                truth: GroundTruth {
                    radius: Some(*minor),
                    area: Some(4.0 * PI * PI * major * minor),
                    centerline_length: Some(2.0 * PI * major),
                    centerline_closed: true,
                    centerline: line.polyline(256).iter().map(|p| [p.x, p.y, p.z]).collect(),
                    euler_characteristic: Some(0),
                    barrel: vec![true; swept.axial.len()],
                    axial: swept.axial,
                    ..Default::default()
                },
            }
        }
        Generator::BentTube {
            radius,
            bend_radius,
            leg_length,
            angle_deg,
            around,
        } => {
            positive(&[
                ("radius", *radius),
                ("bend_radius", *bend_radius),
                ("leg_length", *leg_length),
                ("angle_deg", *angle_deg),
            ])?;
            min_around(*around)?;
            if *bend_radius <= 2.0 * radius {
                return Err(Error::InvalidParams(
                    "bend radius must exceed twice the tube radius".into(),
                ));
            }
            let line = Centerline::new(
                elbow_points(*leg_length, *bend_radius, angle_deg.to_radians()),
                false,
            );
            tube_along(&line, *radius, *around)?
        }
        Generator::WigglyTube {
            radius,
            length,
            amplitude,
            wavelength,
            octaves,
            decay,
            around,
        } => {
            positive(&[
                ("radius", *radius),
                ("length", *length),
                ("wavelength", *wavelength),
            ])?;
            min_around(*around)?;
            if *octaves == 0 || *octaves > 4 || !(0.0..1.0).contains(decay) || *amplitude < 0.0 {
                return Err(Error::InvalidParams(
                    "wiggly tube needs 1..=4 octaves, decay in [0,1), amplitude >= 0".into(),
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
            let phases: Vec<(f64, f64)> = (0..*octaves)
                .map(|_| (rng.gen::<f64>() * 2.0 * PI, rng.gen::<f64>() * 2.0 * PI))
                .collect();
            let n = 4096;
            let pts = (0..=n)
                .map(|i| {
                    let z = length * i as f64 / n as f64;
                    // taper so the ends are straight for the caps
                    let taper = (PI * z / length).sin().powi(2);
                    let (mut x, mut y) = (0.0, 0.0);
                    for (j, (px, py)) in phases.iter().enumerate() {
                        let k = 2.0 * PI * 2f64.powi(j as i32) / wavelength;
                        let amp = amplitude * decay.powi(j as i32);
                        x += amp * (k * z + px).sin();
                        y += amp * (k * z + py).sin();
                    }
                    Vec3::new(taper * x, taper * y, z)
                })
                .collect();
            let line = Centerline::new(pts, false);
            tube_along(&line, *radius, *around)?
        }
        Generator::FromFile { path } => {
            if !path.exists() {
                return Err(Error::InvalidParams(format!(
                    "mesh file {} does not exist",
                    path.display()
                )));
            }
            Generated {
                mesh: io::read_mesh(path)?,
                truth: GroundTruth::default(),
            }
        }
    };
    if let Some((a, b)) = find_self_intersection(&out.mesh) {
        return Err(Error::SelfIntersecting(a, b));
    }
    Ok(out)
}

fn positive(values: &[(&str, f64)]) -> Result<()> {
    for (name, v) in values {
        if !(v.is_finite() && *v > 0.0) {
            return Err(Error::InvalidParams(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    Ok(())
}

fn min_around(n: usize) -> Result<()> {
    if n < 6 {
        return Err(Error::InvalidParams(format!(
            "need at least 6 vertices around, got {n}"
        )));
    }
    Ok(())
}

/// Icosphere with `10·4^level + 2` vertices.
pub fn icosphere(radius: f64, level: u32) -> Result<TriMesh> {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut midpoint = std::collections::HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
            *midpoint.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    TriMesh::new(verts.into_iter().map(|p| p * radius).collect(), faces)
}

/// Barrel `[0, l]` with radius `rho(a)` and hemispherical caps of radius `r`.
fn capped_profile(r: f64, l: f64, h: f64, rho: impl Fn(f64) -> f64) -> Profile {
    let mut samples = Vec::new();
    let n_cap = 400;
    for i in 0..n_cap {
        let phi = 0.5 * PI * i as f64 / n_cap as f64;
        samples.push(ProfileSample::uniform(-r * phi.cos(), r * phi.sin(), h));
    }
    let n_barrel = ((l / r) * 400.0).ceil() as usize;
    for i in 0..=n_barrel {
        let a = l * i as f64 / n_barrel as f64;
        samples.push(ProfileSample::uniform(a, rho(a), h));
    }
    for i in (0..n_cap).rev() {
        let phi = 0.5 * PI * i as f64 / n_cap as f64;
        samples.push(ProfileSample::uniform(l + r * phi.cos(), r * phi.sin(), h));
    }
    Profile { samples }
}

fn tube_along(line: &Centerline, r: f64, around: usize) -> Result<Generated> {
    let l = line.length();
    let h = 2.0 * PI * r / around as f64;
    let swept = sweep_open(line, &capped_profile(r, l, h, |_| r));
    let barrel = swept.axial.iter().map(|&a| a >= 0.0 && a <= l).collect();
    let n_poly = ((l / h).ceil() as usize).max(16);
    Ok(Generated {
        mesh: TriMesh::new(swept.vertices, swept.faces)?,
        truth: GroundTruth {
            radius: Some(r),
            centerline_length: Some(l),
            centerline: line
                .polyline(n_poly)
                .iter()
                .map(|p| [p.x, p.y, p.z])
                .collect(),
            euler_characteristic: Some(2),
            axial: swept.axial,
            barrel,
            ..Default::default()
        },
    })
}

fn elbow_points(leg: f64, bend: f64, angle: f64) -> Vec<Vec3> {
    // first leg along +z ending at the origin, arc in the xz plane, second leg
    let mut pts = Vec::new();
    let n_leg = 200;
    for i in 0..n_leg {
        pts.push(Vec3::new(0.0, 0.0, -leg + leg * i as f64 / n_leg as f64));
    }
    let n_arc = ((angle * bend / 0.002).ceil() as usize).max(64);
    let center = Vec3::new(bend, 0.0, 0.0);
    for i in 0..=n_arc {
        let th = angle * i as f64 / n_arc as f64;
        pts.push(center + Vec3::new(-bend * th.cos(), 0.0, bend * th.sin()));
    }
    let end = *pts.last().unwrap();
    let dir = Vec3::new(angle.sin(), 0.0, angle.cos());
    for i in 1..=n_leg {
        pts.push(end + dir * (leg * i as f64 / n_leg as f64));
    }
    pts
}

/// Profile radius squared of the dumbbell, a log-sum-exp blend of two balls
/// and a quartic neck. Returns `(g, a²)` where `a²` is tuned so `g(0) = r²`.
struct DumbbellProfile {
    ball: f64,
    half_sep: f64,
    neck_sq: f64,
    slope: f64,
    quartic: f64,
    smooth: f64,
}

impl DumbbellProfile {
    fn new(ball: f64, neck: f64, separation: f64) -> Self {
        let half_sep = 0.5 * separation;
        let smooth = 0.25 * ball * ball;
        let gs0 = ball * ball - half_sep * half_sep;
        let neck_sq = smooth * ((neck * neck / smooth).exp() - 2.0 * (gs0 / smooth).exp()).ln();
        Self {
            ball,
            half_sep,
            neck_sq,
            slope: 0.5,
            quartic: 0.1 / (ball * ball),
            smooth,
        }
    }

    fn g(&self, z: f64) -> f64 {
        let b2 = self.ball * self.ball;
        let terms = [
            b2 - (z - self.half_sep).powi(2),
            b2 - (z + self.half_sep).powi(2),
            self.neck_sq + self.slope * z * z - self.quartic * z.powi(4),
        ];
        let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        m + self.smooth
            * terms
                .iter()
                .map(|t| ((t - m) / self.smooth).exp())
                .sum::<f64>()
                .ln()
    }

    /// Positive root of `g`, the pole position.
    fn pole(&self) -> f64 {
        let (mut lo, mut hi) = (self.half_sep, self.half_sep + 2.0 * self.ball);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Ring spacing at the dumbbell waist relative to the neck radius.
pub const NECK_AXIAL_FRACTION: f64 = 0.008;
/// Growth of the ring spacing with distance from the waist.
pub const NECK_AXIAL_GROWTH: f64 = 0.15;

fn dumbbell(
    ball: f64,
    neck: f64,
    separation: f64,
    around_neck: usize,
    max_edge: f64,
) -> Result<Generated> {
    let prof = DumbbellProfile::new(ball, neck, separation);
    if !(prof.neck_sq > 0.0) {
        return Err(Error::InvalidParams(
            "neck radius too small for the blend".into(),
        ));
    }
    let zp = prof.pole();
    let ring_spacing = |z: f64, rho: f64| {
        let reference = if z.abs() < prof.half_sep {
            rho
        } else {
            prof.ball
        };
        (2.0 * PI * reference / around_neck as f64).min(max_edge)
    };
    // rings bunch up at the waist so the pinch stays resolved as the neck
    // radius drops well below its initial value
    let h_waist = NECK_AXIAL_FRACTION * neck;
    let meridian_spacing =
        |z: f64, rho: f64| (h_waist + NECK_AXIAL_GROWTH * z.abs()).min(ring_spacing(z, rho));
    // sample by polar angle near the poles, uniformly in z elsewhere
    let mut zs = Vec::new();
    let n = 20000;
    for i in 0..=n {
        let u = -1.0 + 2.0 * i as f64 / n as f64;
        // cubic stretch concentrates samples near the poles
        let z = zp * (1.5 * u - 0.5 * u.powi(3));
        zs.push(z);
    }
    let samples = zs
        .into_iter()
        .map(|z| {
            let rho = prof.g(z).max(0.0).sqrt();
            ProfileSample {
                axial: z + zp,
                radius: rho,
                ring_spacing: ring_spacing(z, rho),
                meridian_spacing: meridian_spacing(z, rho),
            }
        })
        .collect::<Vec<_>>();
    let line = Centerline::straight(2.0 * zp);
    let swept = sweep_open(&line, &Profile { samples });
    let axial: Vec<f64> = swept.axial.iter().map(|a| a - zp).collect();
    let vertices = swept
        .vertices
        .iter()
        .map(|p| p - Vec3::new(0.0, 0.0, zp))
        .collect();
    let mesh = TriMesh::new(vertices, swept.faces)?;
    Ok(Generated {
        mesh,
        truth: GroundTruth {
            radius: Some(neck),
            centerline_length: Some(2.0 * zp),
            centerline: vec![[0.0, 0.0, -zp], [0.0, 0.0, zp]],
            euler_characteristic: Some(2),
            barrel: axial
                .iter()
                .map(|z| z.abs() < prof.half_sep - ball * 0.5)
                .collect(),
            axial,
            ..Default::default()
        },
    })
}
