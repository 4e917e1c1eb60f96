//! Per-vertex shape operator from a local quadric fit.
//!
//! At each vertex the 2-ring is expressed in a tangent frame built on the
//! area-weighted vertex normal and fitted by least squares with
//! `w = a u² + b uv + c v² + d u + e v`. The linear terms absorb the tilt
//! between the averaged normal and the true surface normal; the Weingarten
//! map is then `g⁻¹·II` of that graph at the origin. The quadratic
//! features carry a chord correction so round spheres and circular normal
//! sections are fitted without the quartic bias of a plain paraboloid.

use nalgebra::{Matrix2, Matrix5, Vector5};
use serde::Serialize;

use super::{TriMesh, Vec3};
use crate::error::{Error, Result};

/// Curvature data at every vertex, principal curvatures sorted ascending.
///
/// Sign convention: normals point outward and a round sphere has positive
/// principal curvatures.
#[derive(Debug, Clone, Serialize)]
pub struct CurvatureField {
    pub normal: Vec<[f64; 3]>,
    /// Symmetric shape operator `[s11, s12, s22]` in the vertex tangent frame.
    pub shape_operator: Vec<[f64; 3]>,
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub mean: Vec<f64>,
    pub norm_a: Vec<f64>,
    pub vertex_area: Vec<f64>,
}

impl CurvatureField {
    pub fn normal_at(&self, v: usize) -> Vec3 {
        Vec3::from(self.normal[v])
    }

    pub fn max_norm_a(&self) -> f64 {
        self.norm_a.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_mean(&self) -> f64 {
        self.mean.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_mean(&self) -> f64 {
        self.mean.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn gauss(&self, v: usize) -> f64 {
        self.lambda1[v] * self.lambda2[v]
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }
}

/// Area-weighted vertex normals (sum of raw face normals, normalized).
pub fn vertex_normals(mesh: &TriMesh) -> Vec<Vec3> {
    let mut normals = vec![Vec3::zeros(); mesh.n_vertices()];
    for (fi, f) in mesh.faces().iter().enumerate() {
        let n = mesh.face_normal_raw(fi);
        for &v in f {
            normals[v] += n;
        }
    }
    for n in &mut normals {
        let len = n.norm();
        if len > 0.0 {
            *n /= len;
        }
    }
    normals
}

/// Orthonormal tangent pair completing `n` to a right-handed frame.
pub fn tangent_frame(n: &Vec3) -> (Vec3, Vec3) {
    let helper = if n.x.abs() < 0.9 {
        Vec3::x()
    } else {
        Vec3::y()
    };
    let e1 = (helper - n * n.dot(&helper)).normalize();
    let e2 = n.cross(&e1);
    (e1, e2)
}

fn fit_vertex(mesh: &TriMesh, v: usize, n: &Vec3) -> (Matrix2<f64>, f64, f64) {
    let p0 = mesh.vertices()[v];
    let (e1, e2) = tangent_frame(n);
    let mut ata = Matrix5::<f64>::zeros();
    let mut atb = Vector5::<f64>::zeros();
    // normalize coordinates by the local scale so the normal equations are
    // well conditioned regardless of mesh size
    let ring = &mesh.topology().two_ring[v];
    let scale = ring
        .iter()
        .map(|&w| (mesh.vertices()[w] - p0).norm())
        .sum::<f64>()
        / ring.len() as f64;
    for &w in ring {
        let d = (mesh.vertices()[w] - p0) / scale;
        let (x, y, z) = (d.dot(&e1), d.dot(&e2), d.dot(n));
        // on a circle through p0 the chord obeys 2κz = ρ² + z², so scaling
        // the quadratic features by (ρ² + z²)/ρ² removes the quartic bias
        let rho2 = x * x + y * y;
        let k = if rho2 > 0.0 {
            (rho2 + z * z) / rho2
        } else {
            1.0
        };
        let row = Vector5::new(k * x * x, k * x * y, k * y * y, x, y);
        ata += row * row.transpose();
        atb += row * z;
    }
    let coef = ata
        .cholesky()
        .map(|c| c.solve(&atb))
        .or_else(|| ata.lu().solve(&atb))
        .unwrap_or_else(Vector5::zeros);
    let (a, b, c) = (coef[0] / scale, coef[1] / scale, coef[2] / scale);
    let (d, e) = (coef[3], coef[4]);

    let w = (1.0 + d * d + e * e).sqrt();
    // outward normal: convex surfaces bend to negative w
    let second = Matrix2::new(2.0 * a, b, b, 2.0 * c) * (-1.0 / w);
    let metric = Matrix2::new(1.0 + d * d, d * e, d * e, 1.0 + e * e);
    // symmetric representative g^{-1/2} II g^{-1/2} of the Weingarten map
    let eig = metric.symmetric_eigen();
    let inv_sqrt = eig.eigenvectors
        * Matrix2::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()))
        * eig.eigenvectors.transpose();
    let s = inv_sqrt * second * inv_sqrt;
    let s = (s + s.transpose()) * 0.5;
    let tr = s[(0, 0)] + s[(1, 1)];
    let disc = ((s[(0, 0)] - s[(1, 1)]).powi(2) * 0.25 + s[(0, 1)] * s[(0, 1)]).sqrt();
    (s, 0.5 * tr - disc, 0.5 * tr + disc)
}

/// Estimates normals, shape operators and principal curvatures at every vertex.
pub fn estimate_curvature(mesh: &TriMesh) -> Result<CurvatureField> {
    for fi in 0..mesh.n_faces() {
        let a = mesh.face_area(fi);
        if !(a > 0.0) {
            return Err(Error::DegenerateFace(fi, a));
        }
    }
    let normals = vertex_normals(mesh);
    let n = mesh.n_vertices();
    let mut field = CurvatureField {
        normal: Vec::with_capacity(n),
        shape_operator: Vec::with_capacity(n),
        lambda1: Vec::with_capacity(n),
        lambda2: Vec::with_capacity(n),
        mean: Vec::with_capacity(n),
        norm_a: Vec::with_capacity(n),
        vertex_area: mesh.vertex_areas(),
    };
    for (v, nv) in normals.iter().enumerate() {
        let (s, l1, l2) = fit_vertex(mesh, v, nv);
        field.normal.push([nv.x, nv.y, nv.z]);
        field.shape_operator.push([s[(0, 0)], s[(0, 1)], s[(1, 1)]]);
        field.lambda1.push(l1);
        field.lambda2.push(l2);
        field.mean.push(l1 + l2);
        field.norm_a.push((l1 * l1 + l2 * l2).sqrt());
    }
    Ok(field)
}

/// `Σ field(v)·area(v)` with barycentric vertex areas.
pub fn surface_integral(mesh: &TriMesh, field: &[f64]) -> Result<f64> {
    if field.len() != mesh.n_vertices() {
        return Err(Error::LengthMismatch {
            expected: mesh.n_vertices(),
            got: field.len(),
        });
    }
    Ok(weighted_sum(&mesh.vertex_areas(), field))
}

/// Same as [`surface_integral`] with precomputed vertex areas.
pub fn weighted_sum(areas: &[f64], field: &[f64]) -> f64 {
    areas.iter().zip(field).map(|(a, f)| a * f).sum()
}
