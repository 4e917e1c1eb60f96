//! Self-intersection test by segment/triangle crossings on a uniform grid.

use std::collections::HashMap;

use crate::mesh::{TriMesh, Vec3};

fn segment_hits_triangle(p: &Vec3, q: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> bool {
    let dir = q - p;
    let e1 = b - a;
    let e2 = c - a;
    let h = dir.cross(&e2);
    let det = e1.dot(&h);
    let scale = e1.norm() * e2.norm() * dir.norm();
    if det.abs() <= 1e-12 * scale {
        return false;
    }
    let inv = 1.0 / det;
    let s = p - a;
    let u = inv * s.dot(&h);
    if !(0.0..=1.0).contains(&u) {
        return false;
    }
    let qv = s.cross(&e1);
    let v = inv * dir.dot(&qv);
    if v < 0.0 || u + v > 1.0 {
        return false;
    }
    let t = inv * e2.dot(&qv);
    (0.0..=1.0).contains(&t)
}

/// First pair of vertex-disjoint faces that intersect, if any.
pub fn find_self_intersection(mesh: &TriMesh) -> Option<(usize, usize)> {
    let verts = mesh.vertices();
    let faces = mesh.faces();
    let cell = 2.0 * mesh.mean_edge_length();
    let key = |p: &Vec3| -> [i64; 3] {
        [
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        ]
    };
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for (fi, f) in faces.iter().enumerate() {
        let lo = verts[f[0]].inf(&verts[f[1]]).inf(&verts[f[2]]);
        let hi = verts[f[0]].sup(&verts[f[1]]).sup(&verts[f[2]]);
        let (kl, kh) = (key(&lo), key(&hi));
        for x in kl[0]..=kh[0] {
            for y in kl[1]..=kh[1] {
                for z in kl[2]..=kh[2] {
                    grid.entry([x, y, z]).or_default().push(fi);
                }
            }
        }
    }
    let mut keys: Vec<_> = grid.keys().copied().collect();
    keys.sort_unstable();
    for k in keys {
        let bucket = &grid[&k];
        for (i, &fa) in bucket.iter().enumerate() {
            for &fb in &bucket[i + 1..] {
                let (a, b) = (faces[fa], faces[fb]);
                if a.iter().any(|v| b.contains(v)) {
                    continue;
                }
                let ta = [verts[a[0]], verts[a[1]], verts[a[2]]];
                let tb = [verts[b[0]], verts[b[1]], verts[b[2]]];
                let crosses = |s: &[Vec3; 3], t: &[Vec3; 3]| {
                    (0..3)
                        .any(|e| segment_hits_triangle(&s[e], &s[(e + 1) % 3], &t[0], &t[1], &t[2]))
                };
                if crosses(&ta, &tb) || crosses(&tb, &ta) {
                    return Some((fa.min(fb), fa.max(fb)));
                }
            }
        }
    }
    None
}
