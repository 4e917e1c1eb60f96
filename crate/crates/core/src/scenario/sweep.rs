//! Tubes swept along a centerline with a radius profile.
//!
//! Rings are placed along the meridian arclength with a target spacing `h`
//! and each ring gets `≈ 2πρ/h` vertices, so triangles stay close to
//! equilateral from the poles to the widest ring. Neighbouring rings with
//! different vertex counts are stitched by an angular zipper.

use std::f64::consts::PI;

use crate::mesh::Vec3;

/// Dense polyline centerline with rotation-minimizing frames.
#[derive(Debug, Clone)]
pub struct Centerline {
    points: Vec<Vec3>,
    arclen: Vec<f64>,
    tangents: Vec<Vec3>,
    normals: Vec<Vec3>,
    closed: bool,
}

impl Centerline {
    /// Builds from densely sampled points. For closed curves the last point
    /// must not repeat the first.
    pub fn new(points: Vec<Vec3>, closed: bool) -> Self {
        let n = points.len();
        assert!(n >= 2);
        let mut arclen = vec![0.0; n + closed as usize];
        for i in 1..arclen.len() {
            arclen[i] = arclen[i - 1] + (points[i % n] - points[i - 1]).norm();
        }
        let tangents: Vec<Vec3> = (0..n)
            .map(|i| {
                let (prev, next) = if closed {
                    (points[(i + n - 1) % n], points[(i + 1) % n])
                } else {
                    (points[i.saturating_sub(1)], points[(i + 1).min(n - 1)])
                };
                (next - prev).normalize()
            })
            .collect();
        // double-reflection rotation minimizing frame
        let t0 = tangents[0];
        let helper = if t0.x.abs() < 0.9 {
            Vec3::x()
        } else {
            Vec3::y()
        };
        let mut normals = Vec::with_capacity(n);
        normals.push((helper - t0 * t0.dot(&helper)).normalize());
        for i in 0..n - 1 {
            let v1 = points[i + 1] - points[i];
            let c1 = v1.norm_squared();
            let r_l = normals[i] - v1 * (2.0 / c1 * v1.dot(&normals[i]));
            let t_l = tangents[i] - v1 * (2.0 / c1 * v1.dot(&tangents[i]));
            let v2 = tangents[i + 1] - t_l;
            let c2 = v2.norm_squared();
            let r = if c2 > 0.0 {
                r_l - v2 * (2.0 / c2 * v2.dot(&r_l))
            } else {
                r_l
            };
            let t = tangents[i + 1];
            normals.push((r - t * t.dot(&r)).normalize());
        }
        Self {
            points,
            arclen,
            tangents,
            normals,
            closed,
        }
    }

    pub fn straight(length: f64) -> Self {
        Self::new(vec![Vec3::zeros(), Vec3::new(0.0, 0.0, length)], false)
    }

    pub fn length(&self) -> f64 {
        *self.arclen.last().unwrap()
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Position and frame `(point, tangent, e1, e2)` at arclength `a`.
    /// Open curves are continued linearly past their ends.
    pub fn frame(&self, a: f64) -> (Vec3, Vec3, Vec3, Vec3) {
        let n = self.points.len();
        let total = self.length();
        let (point, t, e1) = if self.closed {
            let a = a.rem_euclid(total);
            let i = self.segment(a);
            let s = (a - self.arclen[i]) / (self.arclen[i + 1] - self.arclen[i]);
            let j = (i + 1) % n;
            let p = self.points[i].lerp(&self.points[j], s);
            let t = self.tangents[i].lerp(&self.tangents[j], s).normalize();
            let e = self.normals[i].lerp(&self.normals[j], s);
            (p, t, e)
        } else if a <= 0.0 {
            (
                self.points[0] + self.tangents[0] * a,
                self.tangents[0],
                self.normals[0],
            )
        } else if a >= total {
            let t = self.tangents[n - 1];
            (self.points[n - 1] + t * (a - total), t, self.normals[n - 1])
        } else {
            let i = self.segment(a);
            let s = (a - self.arclen[i]) / (self.arclen[i + 1] - self.arclen[i]);
            let p = self.points[i].lerp(&self.points[i + 1], s);
            let t = self.tangents[i].lerp(&self.tangents[i + 1], s).normalize();
            let e = self.normals[i].lerp(&self.normals[i + 1], s);
            (p, t, e)
        };
        let e1 = (e1 - t * t.dot(&e1)).normalize();
        let e2 = t.cross(&e1);
        (point, t, e1, e2)
    }

    fn segment(&self, a: f64) -> usize {
        let segs = self.arclen.len() - 1;
        match self.arclen.binary_search_by(|x| x.partial_cmp(&a).unwrap()) {
            Ok(i) => i.min(segs - 1),
            Err(i) => i.saturating_sub(1).min(segs - 1),
        }
    }

    /// The centerline resampled at `n` points.
    pub fn polyline(&self, n: usize) -> Vec<Vec3> {
        let total = self.length();
        let m = if self.closed { n } else { n - 1 };
        (0..n)
            .map(|i| self.frame(total * i as f64 / m as f64).0)
            .collect()
    }
}

/// Meridian profile `ρ(a)` of an open tube running pole to pole, sampled
/// densely together with the target edge length at each sample.
pub struct Profile {
    /// Radius is zero at both ends.
    pub samples: Vec<ProfileSample>,
}

#[derive(Debug, Clone, Copy)]
pub struct ProfileSample {
    pub axial: f64,
    pub radius: f64,
    /// Target edge length around the ring.
    pub ring_spacing: f64,
    /// Target distance to the next ring along the meridian.
    pub meridian_spacing: f64,
}

impl ProfileSample {
    pub fn uniform(axial: f64, radius: f64, spacing: f64) -> Self {
        Self {
            axial,
            radius,
            ring_spacing: spacing,
            meridian_spacing: spacing,
        }
    }
}

/// Output of a sweep: positions, faces, and the axial coordinate of every
/// vertex.
pub struct Swept {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    pub axial: Vec<f64>,
}

fn ring_points(line: &Centerline, a: f64, rho: f64, count: usize, offset: f64) -> Vec<Vec3> {
    let (c, _, e1, e2) = line.frame(a);
    (0..count)
        .map(|i| {
            let th = offset + 2.0 * PI * i as f64 / count as f64;
            c + (e1 * th.cos() + e2 * th.sin()) * rho
        })
        .collect()
}

/// Stitches ring `lo` (angles `alo`) to ring `hi` (angles `ahi`), both
/// counterclockwise about the local tangent, `hi` further along it.
fn zipper(lo: &[usize], alo: &[f64], hi: &[usize], ahi: &[f64], faces: &mut Vec<[usize; 3]>) {
    let (na, nb) = (lo.len(), hi.len());
    let tau = 2.0 * PI;
    let rel = |x: f64| (x - alo[0]).rem_euclid(tau);
    // start on hi at the vertex angularly closest to lo[0], at angle in (-π, π]
    let j0 = (0..nb)
        .min_by(|&x, &y| {
            let dx = rel(ahi[x]).min(tau - rel(ahi[x]));
            let dy = rel(ahi[y]).min(tau - rel(ahi[y]));
            dx.partial_cmp(&dy).unwrap()
        })
        .unwrap();
    let b0 = if rel(ahi[j0]) > PI {
        rel(ahi[j0]) - tau
    } else {
        rel(ahi[j0])
    };
    let ang_lo = |i: usize| if i >= na { tau } else { rel(alo[i]) };
    let ang_hi = |j: usize| {
        if j >= nb {
            b0 + tau
        } else {
            b0 + (ahi[(j0 + j) % nb] - ahi[j0]).rem_euclid(tau)
        }
    };
    let (mut i, mut j) = (0, 0);
    while i < na || j < nb {
        let advance_lo = j == nb || (i < na && ang_lo(i + 1) <= ang_hi(j + 1));
        let a = lo[i % na];
        let b = hi[(j0 + j) % nb];
        if advance_lo {
            faces.push([a, lo[(i + 1) % na], b]);
            i += 1;
        } else {
            faces.push([a, hi[(j0 + j + 1) % nb], b]);
            j += 1;
        }
    }
}

/// Sweeps an open tube: pole, rings, pole.
pub fn sweep_open(line: &Centerline, profile: &Profile) -> Swept {
    let s = &profile.samples;
    // accumulated ring count along the meridian arclength
    let mut count = vec![0.0; s.len()];
    for k in 1..s.len() {
        let ds = ((s[k].axial - s[k - 1].axial).powi(2) + (s[k].radius - s[k - 1].radius).powi(2))
            .sqrt();
        count[k] = count[k - 1]
            + ds * 0.5 * (1.0 / s[k].meridian_spacing + 1.0 / s[k - 1].meridian_spacing);
    }
    let total = *count.last().unwrap();
    let m = total.round().max(2.0) as usize;
    let mut vertices = Vec::new();
    let mut axial = Vec::new();
    let mut faces = Vec::new();

    let (p0, ..) = line.frame(s[0].axial);
    vertices.push(p0);
    axial.push(s[0].axial);
    let mut prev: Vec<usize> = vec![0];
    let mut prev_ang: Vec<f64> = vec![0.0];
    let mut k = 0;
    for ring in 1..m {
        let target = total * ring as f64 / m as f64;
        while count[k + 1] < target {
            k += 1;
        }
        let w = (target - count[k]) / (count[k + 1] - count[k]);
        let a = s[k].axial + w * (s[k + 1].axial - s[k].axial);
        let rho = s[k].radius + w * (s[k + 1].radius - s[k].radius);
        let h = s[k].ring_spacing + w * (s[k + 1].ring_spacing - s[k].ring_spacing);
        let n = ((2.0 * PI * rho / h).round() as usize).max(3);
        let offset = if ring % 2 == 1 { PI / n as f64 } else { 0.0 };
        let start = vertices.len();
        vertices.extend(ring_points(line, a, rho, n, offset));
        axial.extend(std::iter::repeat(a).take(n));
        let idx: Vec<usize> = (start..start + n).collect();
        let ang: Vec<f64> = (0..n)
            .map(|i| offset + 2.0 * PI * i as f64 / n as f64)
            .collect();
        if prev.len() == 1 {
            for i in 0..n {
                faces.push([prev[0], idx[(i + 1) % n], idx[i]]);
            }
        } else {
            zipper(&prev, &prev_ang, &idx, &ang, &mut faces);
        }
        prev = idx;
        prev_ang = ang;
    }
    let last = s.last().unwrap();
    let (p1, ..) = line.frame(last.axial);
    let pole = vertices.len();
    vertices.push(p1);
    axial.push(last.axial);
    let n = prev.len();
    for i in 0..n {
        faces.push([prev[i], prev[(i + 1) % n], pole]);
    }
    Swept {
        vertices,
        faces,
        axial,
    }
}

/// Sweeps a closed tube of constant radius along a closed centerline.
pub fn sweep_closed(line: &Centerline, radius: f64, around: usize, rings: usize) -> Swept {
    let total = line.length();
    let mut vertices = Vec::with_capacity(around * rings);
    let mut axial = Vec::with_capacity(around * rings);
    let mut faces = Vec::new();
    let ang_of = |ring: usize| -> Vec<f64> {
        let offset = if ring % 2 == 1 {
            PI / around as f64
        } else {
            0.0
        };
        (0..around)
            .map(|i| offset + 2.0 * PI * i as f64 / around as f64)
            .collect()
    };
    for ring in 0..rings {
        let a = total * ring as f64 / rings as f64;
        let offset = if ring % 2 == 1 {
            PI / around as f64
        } else {
            0.0
        };
        vertices.extend(ring_points(line, a, radius, around, offset));
        axial.extend(std::iter::repeat(a).take(around));
    }
    for ring in 0..rings {
        let next = (ring + 1) % rings;
        let lo: Vec<usize> = (ring * around..(ring + 1) * around).collect();
        let hi: Vec<usize> = (next * around..(next + 1) * around).collect();
        zipper(&lo, &ang_of(ring), &hi, &ang_of(next), &mut faces);
    }
    Swept {
        vertices,
        faces,
        axial,
    }
}
