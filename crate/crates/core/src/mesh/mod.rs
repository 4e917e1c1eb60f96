//! Closed oriented triangle surfaces and the discrete geometry built on them.
//!
//! A [`TriMesh`] owns its vertex positions and shares an immutable
//! [`Topology`] (adjacency, edge list, 2-rings) with every mesh derived from
//! it by moving vertices. Flow steps therefore never rebuild connectivity.

pub mod control;
pub mod curvature;
pub mod geodesic;
pub mod io;

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub use control::{check_control_params, ControlParams, ControlReport};
pub use curvature::{estimate_curvature, surface_integral, CurvatureField};
pub use geodesic::{intrinsic_diameter, DiameterMethod, DiameterReport};

pub type Vec3 = Vector3<f64>;

/// Connectivity shared between all meshes with the same face list.
#[derive(Debug)]
pub struct Topology {
    pub faces: Vec<[usize; 3]>,
    /// Undirected edges with `a < b`.
    pub edges: Vec<(usize, usize)>,
    /// Sorted one-ring vertex neighbours.
    pub neighbors: Vec<Vec<usize>>,
    /// Faces incident to each vertex.
    pub vertex_faces: Vec<Vec<usize>>,
    /// Vertices within two edge hops, excluding the vertex itself.
    pub two_ring: Vec<Vec<usize>>,
    /// Connected component id per vertex.
    pub component: Vec<usize>,
    pub n_components: usize,
}

impl Topology {
    fn build(n_vertices: usize, faces: Vec<[usize; 3]>) -> Result<Self> {
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                if v >= n_vertices {
                    return Err(Error::BadIndex {
                        face: fi,
                        vertex: v,
                        count: n_vertices,
                    });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::DegenerateFace(fi, 0.0));
            }
        }
        // directed half-edge counts; a closed oriented surface has every
        // directed edge exactly once and its twin exactly once
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 3);
        for f in &faces {
            for k in 0..3 {
                *directed.entry((f[k], f[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        let mut edges = Vec::with_capacity(directed.len() / 2);
        for (&(a, b), &count) in &directed {
            let twin = directed.get(&(b, a)).copied().unwrap_or(0);
            if count + twin != 2 {
                let (lo, hi) = (a.min(b), a.max(b));
                return Err(Error::NonManifoldMesh(lo, hi, count + twin));
            }
            if count != 1 || twin != 1 {
                return Err(Error::NonOrientable(a.min(b), a.max(b)));
            }
            if a < b {
                edges.push((a, b));
            }
        }
        edges.sort_unstable();

        let mut neighbors = vec![Vec::new(); n_vertices];
        for &(a, b) in &edges {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for n in &mut neighbors {
            n.sort_unstable();
        }
        let mut vertex_faces = vec![Vec::new(); n_vertices];
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                vertex_faces[v].push(fi);
            }
        }
        let two_ring = (0..n_vertices)
            .map(|v| {
                let mut ring: Vec<usize> = neighbors[v]
                    .iter()
                    .flat_map(|&w| neighbors[w].iter().copied().chain(std::iter::once(w)))
                    .filter(|&w| w != v)
                    .collect();
                ring.sort_unstable();
                ring.dedup();
                ring
            })
            .collect();

        let mut component = vec![usize::MAX; n_vertices];
        let mut n_components = 0;
        for start in 0..n_vertices {
            if component[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            component[start] = n_components;
            while let Some(v) = stack.pop() {
                for &w in &neighbors[v] {
                    if component[w] == usize::MAX {
                        component[w] = n_components;
                        stack.push(w);
                    }
                }
            }
            n_components += 1;
        }

        Ok(Self {
            faces,
            edges,
            neighbors,
            vertex_faces,
            two_ring,
            component,
            n_components,
        })
    }
}

/// Closed, consistently oriented triangle surface in R³ with outward normals.
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    topo: Arc<Topology>,
}

impl TriMesh {
    /// Builds a mesh and checks every surface invariant. Components with
    /// negative enclosed volume are reoriented so normals point outward.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if let Some(i) = vertices
            .iter()
            .position(|p| !p.iter().all(|c| c.is_finite()))
        {
            return Err(Error::NonFiniteVertex(i));
        }
        let topo = Topology::build(vertices.len(), faces)?;
        let mut mesh = Self {
            vertices,
            topo: Arc::new(topo),
        };
        mesh.check_faces()?;

        let volumes = mesh.component_volumes();
        if volumes.iter().any(|&v| v < 0.0) {
            let comp = &mesh.topo.component;
            let faces = mesh
                .topo
                .faces
                .iter()
                .map(|f| {
                    if volumes[comp[f[0]]] < 0.0 {
                        [f[0], f[2], f[1]]
                    } else {
                        *f
                    }
                })
                .collect();
            let topo = Topology::build(mesh.vertices.len(), faces)?;
            mesh.topo = Arc::new(topo);
        }
        Ok(mesh)
    }

    /// Same connectivity, new positions. Only positions are re-validated.
    pub fn with_positions(&self, vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::LengthMismatch {
                expected: self.vertices.len(),
                got: vertices.len(),
            });
        }
        if let Some(i) = vertices
            .iter()
            .position(|p| !p.iter().all(|c| c.is_finite()))
        {
            return Err(Error::NonFiniteVertex(i));
        }
        let mesh = Self {
            vertices,
            topo: Arc::clone(&self.topo),
        };
        mesh.check_faces()?;
        Ok(mesh)
    }

    fn check_faces(&self) -> Result<()> {
        for fi in 0..self.topo.faces.len() {
            let a = self.face_area(fi);
            if !(a > 0.0) {
                return Err(Error::DegenerateFace(fi, a));
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.topo.faces
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_faces(&self) -> usize {
        self.topo.faces.len()
    }

    pub fn n_edges(&self) -> usize {
        self.topo.edges.len()
    }

    /// V − E + F.
    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.n_edges() as i64 + self.n_faces() as i64
    }

    pub fn shares_topology(&self, other: &TriMesh) -> bool {
        Arc::ptr_eq(&self.topo, &other.topo)
    }

    /// Unnormalized face normal (twice the area times the unit normal).
    pub fn face_normal_raw(&self, fi: usize) -> Vec3 {
        let [a, b, c] = self.topo.faces[fi];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        (pb - pa).cross(&(pc - pa))
    }

    pub fn face_area(&self, fi: usize) -> f64 {
        0.5 * self.face_normal_raw(fi).norm()
    }

    pub fn area(&self) -> f64 {
        (0..self.n_faces()).map(|f| self.face_area(f)).sum()
    }

    /// Barycentric vertex areas: one third of each incident face.
    pub fn vertex_areas(&self) -> Vec<f64> {
        let mut areas = vec![0.0; self.n_vertices()];
        for (fi, f) in self.topo.faces.iter().enumerate() {
            let a = self.face_area(fi) / 3.0;
            for &v in f {
                areas[v] += a;
            }
        }
        areas
    }

    /// Enclosed volume per connected component (divergence theorem).
    pub fn component_volumes(&self) -> Vec<f64> {
        let mut vols = vec![0.0; self.topo.n_components];
        for f in &self.topo.faces {
            let (a, b, c) = (
                self.vertices[f[0]],
                self.vertices[f[1]],
                self.vertices[f[2]],
            );
            vols[self.topo.component[f[0]]] += a.dot(&b.cross(&c)) / 6.0;
        }
        vols
    }

    pub fn volume(&self) -> f64 {
        self.component_volumes().iter().sum()
    }

    /// Triangle quality 4√3·area / Σ edge², equal to 1 for equilateral faces.
    pub fn face_quality(&self, fi: usize) -> f64 {
        let [a, b, c] = self.topo.faces[fi];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        let s = (pb - pa).norm_squared() + (pc - pb).norm_squared() + (pa - pc).norm_squared();
        4.0 * 3f64.sqrt() * self.face_area(fi) / s
    }

    pub fn min_quality(&self) -> f64 {
        (0..self.n_faces())
            .map(|f| self.face_quality(f))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn edge_length(&self, e: (usize, usize)) -> f64 {
        (self.vertices[e.0] - self.vertices[e.1]).norm()
    }

    pub fn mean_edge_length(&self) -> f64 {
        let e = &self.topo.edges;
        e.iter().map(|&e| self.edge_length(e)).sum::<f64>() / e.len() as f64
    }

    pub fn min_edge_length(&self) -> f64 {
        self.topo
            .edges
            .iter()
            .map(|&e| self.edge_length(e))
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest triangle altitude, the finest length scale the mesh resolves.
    pub fn min_altitude(&self) -> f64 {
        let v = &self.vertices;
        self.topo
            .faces
            .iter()
            .map(|&[a, b, c]| {
                let twice_area = (v[b] - v[a]).cross(&(v[c] - v[a])).norm();
                let longest = (v[b] - v[a])
                    .norm()
                    .max((v[c] - v[b]).norm())
                    .max((v[a] - v[c]).norm());
                twice_area / longest
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Mean length of the edges incident to `v`.
    pub fn local_edge_length(&self, v: usize) -> f64 {
        let n = &self.topo.neighbors[v];
        n.iter()
            .map(|&w| (self.vertices[v] - self.vertices[w]).norm())
            .sum::<f64>()
            / n.len() as f64
    }

    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for p in &self.vertices {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }

    /// Maps every vertex position through `f`.
    pub fn transformed(&self, f: impl Fn(&Vec3) -> Vec3) -> Result<Self> {
        self.with_positions(self.vertices.iter().map(f).collect())
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        self.transformed(|p| p * s)
    }

    /// Splits the mesh into one mesh per connected component, with vertex
    /// maps back into the original indexing.
    pub fn split_components(&self) -> Result<Vec<(TriMesh, Vec<usize>)>> {
        let topo = &self.topo;
        let mut out = Vec::with_capacity(topo.n_components);
        for c in 0..topo.n_components {
            let old: Vec<usize> = (0..self.n_vertices())
                .filter(|&v| topo.component[v] == c)
                .collect();
            let mut new_index = vec![usize::MAX; self.n_vertices()];
            for (i, &v) in old.iter().enumerate() {
                new_index[v] = i;
            }
            let faces = topo
                .faces
                .iter()
                .filter(|f| topo.component[f[0]] == c)
                .map(|f| [new_index[f[0]], new_index[f[1]], new_index[f[2]]])
                .collect();
            let verts = old.iter().map(|&v| self.vertices[v]).collect();
            out.push((TriMesh::new(verts, faces)?, old));
        }
        Ok(out)
    }

    /// Concatenates two meshes into one (disjoint union).
    pub fn disjoint_union(&self, other: &TriMesh) -> Result<Self> {
        let off = self.n_vertices();
        let mut verts = self.vertices.clone();
        verts.extend_from_slice(&other.vertices);
        let mut faces = self.topo.faces.clone();
        faces.extend(
            other
                .faces()
                .iter()
                .map(|f| [f[0] + off, f[1] + off, f[2] + off]),
        );
        TriMesh::new(verts, faces)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tetra() -> (Vec<Vec3>, Vec<[usize; 3]>) {
        let v = vec![
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(1.0, -1.0, -1.0),
            Vec3::new(-1.0, 1.0, -1.0),
            Vec3::new(-1.0, -1.0, 1.0),
        ];
        let f = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
        (v, f)
    }

    #[test]
    fn tetra_is_valid_and_outward() {
        let (v, f) = tetra();
        let m = TriMesh::new(v, f).unwrap();
        assert_eq!(m.euler_characteristic(), 2);
        assert!(m.volume() > 0.0);
    }

    #[test]
    fn inward_orientation_is_flipped() {
        let (v, f) = tetra();
        let flipped = f.iter().map(|f| [f[0], f[2], f[1]]).collect();
        let m = TriMesh::new(v, flipped).unwrap();
        assert!(m.volume() > 0.0);
    }

    #[test]
    fn open_mesh_is_rejected() {
        let (v, mut f) = tetra();
        f.pop();
        assert!(matches!(
            TriMesh::new(v, f),
            Err(Error::NonManifoldMesh(..))
        ));
    }

    #[test]
    fn inconsistent_orientation_is_rejected() {
        let (v, mut f) = tetra();
        f[0] = [0, 2, 1];
        assert!(matches!(TriMesh::new(v, f), Err(Error::NonOrientable(..))));
    }

    #[test]
    fn collapsed_face_is_rejected() {
        let (mut v, f) = tetra();
        v[3] = (v[0] + v[1]) * 0.5;
        v[2] = v[0] * 0.25 + v[1] * 0.75;
        assert!(matches!(TriMesh::new(v, f), Err(Error::DegenerateFace(..))));
    }

    #[test]
    fn nan_vertex_is_rejected() {
        let (mut v, f) = tetra();
        v[2].x = f64::NAN;
        assert!(matches!(TriMesh::new(v, f), Err(Error::NonFiniteVertex(2))));
    }

    #[test]
    fn vertex_areas_sum_to_area() {
        let (v, f) = tetra();
        let m = TriMesh::new(v, f).unwrap();
        let s: f64 = m.vertex_areas().iter().sum();
        assert!((s - m.area()).abs() <= 1e-12 * m.area());
    }

    #[test]
    fn union_splits_back() {
        let (v, f) = tetra();
        let a = TriMesh::new(v, f).unwrap();
        let b = a.transformed(|p| p + Vec3::new(5.0, 0.0, 0.0)).unwrap();
        let u = a.disjoint_union(&b).unwrap();
        assert_eq!(u.topology().n_components, 2);
        let parts = u.split_components().unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[1].1, vec![4, 5, 6, 7]);
    }
}
