//! Scalar diagnostics on surfaces and flow histories: Gaussian area,
//! entropy, Huisken's quantity, curvature integrals, Topping's ratio, the
//! regularity scale and the superlevel-set reduction estimates.
//!
//! Everything is specialised to surfaces in R³, so the Gaussian weight is
//! `(4π)⁻¹ e^{-|x|²/4}` and `|H|^{n-1} = |H|`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{FlowHistory, FlowState};
use crate::mesh::curvature::weighted_sum;
use crate::mesh::geodesic::{farthest, DiameterOptions, GeodesicGraph};
use crate::mesh::{intrinsic_diameter, CurvatureField, TriMesh, Vec3};
use crate::neck::Tube;

const INV_4PI: f64 = 1.0 / (4.0 * PI);
/// Lumping cells per bounding-box half diagonal in the coarse entropy scan.
const LUMP_CELLS: f64 = 40.0;

/// Faces longer than this many kernel widths `1/scale` are subdivided
/// before the midpoint rule is applied.
pub const QUADRATURE_RESOLUTION: f64 = 1.0;
const MAX_SUBDIVISION: u32 = 6;

/// Midpoint-rule integral of `e^{-s2|x|²/4}` over the triangle (`p*` relative
/// to the center), split into four until its longest edge is below
/// `QUADRATURE_RESOLUTION / scale`.
fn face_gauss(pa: Vec3, pb: Vec3, pc: Vec3, area: f64, s2: f64, depth: u32) -> f64 {
    let m = [(pa + pb) * 0.5, (pb + pc) * 0.5, (pc + pa) * 0.5];
    let l2 = (pa - pb)
        .norm_squared()
        .max((pb - pc).norm_squared())
        .max((pc - pa).norm_squared());
    let fine = s2 * l2 <= QUADRATURE_RESOLUTION * QUADRATURE_RESOLUTION;
    let far = {
        let d = ((pa + pb + pc) / 3.0).norm() - l2.sqrt();
        d > 0.0 && 0.25 * s2 * d * d > 12.0
    };
    if fine || far || depth == MAX_SUBDIVISION {
        return area
            * m.iter()
                .map(|x| (-0.25 * s2 * x.norm_squared()).exp())
                .sum::<f64>()
            / 3.0;
    }
    let q = 0.25 * area;
    face_gauss(pa, m[0], m[2], q, s2, depth + 1)
        + face_gauss(m[0], pb, m[1], q, s2, depth + 1)
        + face_gauss(m[2], m[1], pc, q, s2, depth + 1)
        + face_gauss(m[0], m[1], m[2], q, s2, depth + 1)
}

/// `F(scale·(M − center))` by the three-edge-midpoint rule, with faces
/// that are coarse against the kernel width subdivided first.
pub fn gaussian_area(mesh: &TriMesh, center: &Vec3, scale: f64) -> f64 {
    let v = mesh.vertices();
    let s2 = scale * scale;
    let mut sum = 0.0;
    for (fi, &[a, b, c]) in mesh.faces().iter().enumerate() {
        sum += face_gauss(
            v[a] - center,
            v[b] - center,
            v[c] - center,
            mesh.face_area(fi),
            s2,
            0,
        );
    }
    sum * s2 * INV_4PI
}

/// Grid and refinement settings for the entropy search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropySearch {
    /// Centers per axis over the bounding box.
    pub grid: usize,
    /// Log-spaced scales in `[scale_lo, scale_hi] / R_bb`.
    pub scales: usize,
    pub scale_lo: f64,
    pub scale_hi: f64,
    /// Golden-section sweeps over (center, log scale) after the grid.
    pub refine_rounds: usize,
    /// Coarse grid maxima refined independently.
    pub candidates: usize,
    /// Vertices seeding curvature-focal candidates: centers `x − k·n/H`
    /// (`k` = 1 for a cylinder axis, 2 for a sphere center) at scale
    /// `√2·|A|`, which is the F-maximizing zoom of both model shapes. These
    /// reach necks far thinner than the bounding-box grid resolves.
    #[serde(default = "default_focal")]
    pub focal: usize,
}

fn default_focal() -> usize {
    48
}

impl Default for EntropySearch {
    fn default() -> Self {
        Self {
            grid: 11,
            scales: 25,
            scale_lo: 0.05,
            scale_hi: 20.0,
            refine_rounds: 3,
            candidates: 3,
            focal: default_focal(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyEstimate {
    /// Largest `F` found; a lower bound on the entropy.
    pub lambda: f64,
    pub center: [f64; 3],
    pub scale: f64,
    /// Center spacing of the coarse grid per axis.
    pub grid_step: [f64; 3],
    /// Spacing of the coarse scale grid in `log a`.
    pub log_scale_step: f64,
    /// Bracket half-width after the last refinement sweep, as a fraction of
    /// the coarse spacing.
    pub refined_fraction: f64,
}

/// Vertex areas lumped into cubic cells of side `cell` at their
/// area-weighted centroids; ordered by cell so sums are deterministic.
fn lumped_points(mesh: &TriMesh, cell: f64) -> Vec<(Vec3, f64)> {
    let areas = mesh.vertex_areas();
    let mut cells: BTreeMap<(i64, i64, i64), (Vec3, f64)> = BTreeMap::new();
    for (p, &a) in mesh.vertices().iter().zip(&areas) {
        let key = (
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        );
        let e = cells.entry(key).or_insert((Vec3::zeros(), 0.0));
        e.0 += p * a;
        e.1 += a;
    }
    cells
        .into_values()
        .filter(|&(_, a)| a > 0.0)
        .map(|(s, a)| (s / a, a))
        .collect()
}

/// `F` at every grid center and scale on lumped area points.
fn coarse_scan(
    points: &[(Vec3, f64)],
    centers: &[Vec3],
    scales: &[f64],
) -> Vec<(f64, usize, usize)> {
    let mut out = Vec::with_capacity(centers.len() * scales.len());
    let mut d2 = vec![0.0; points.len()];
    for (ci, c) in centers.iter().enumerate() {
        for (k, (p, _)) in points.iter().enumerate() {
            d2[k] = (p - c).norm_squared();
        }
        for (si, &a) in scales.iter().enumerate() {
            let q = 0.25 * a * a;
            let mut sum = 0.0;
            for (k, &d) in d2.iter().enumerate() {
                let e = q * d;
                if e < 40.0 {
                    sum += points[k].1 * (-e).exp();
                }
            }
            out.push((sum * a * a * INV_4PI, ci, si));
        }
    }
    out
}

fn golden_max(f: &mut impl FnMut(f64) -> f64, lo: f64, hi: f64, iters: usize) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Best `search.candidates` focal starts, each with a bracket of one focal
/// length in space and a factor e^{1/2} in scale.
fn focal_starts(mesh: &TriMesh, search: &EntropySearch) -> Vec<([f64; 4], [f64; 4])> {
    if search.focal == 0 {
        return Vec::new();
    }
    let Ok(curv) = crate::mesh::estimate_curvature(mesh) else {
        return Vec::new();
    };
    let n = mesh.n_vertices();
    // half the seeds at the most curved vertices, the rest spread by index
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| curv.norm_a[b].total_cmp(&curv.norm_a[a]).then(a.cmp(&b)));
    let top = search.focal.div_ceil(2).min(n);
    let mut seeds: Vec<usize> = order[..top].to_vec();
    let rest = search.focal.saturating_sub(top);
    if rest > 0 {
        seeds.extend((0..rest).map(|i| i * n / rest));
    }
    seeds.sort_unstable();
    seeds.dedup();
    let mut found: Vec<(f64, [f64; 4], [f64; 4])> = Vec::new();
    for v in seeds {
        let h = curv.mean[v];
        let a = std::f64::consts::SQRT_2 * curv.norm_a[v];
        if !(h > 0.0 && a.is_finite() && a > 0.0) {
            continue;
        }
        let x = mesh.vertices()[v];
        let nv = curv.normal_at(v);
        for k in [1.0, 2.0] {
            let c = x - nv * (k / h);
            let f = gaussian_area(mesh, &c, a);
            let w = 1.0 / a;
            found.push((f, [c.x, c.y, c.z, a.ln()], [w, w, w, 0.5]));
        }
    }
    found.sort_by(|p, q| q.0.total_cmp(&p.0));
    found.truncate(search.candidates.max(1));
    found.into_iter().map(|(_, x, w)| (x, w)).collect()
}

/// Lower bound on `λ(M) = sup F(aM − b)` from a coarse grid over centers in
/// the bounding box and log-spaced scales, then coordinate-wise golden
/// section refinement around the best grid points and the best
/// curvature-focal candidates.
pub fn entropy(mesh: &TriMesh, search: &EntropySearch) -> Result<EntropyEstimate> {
    if search.grid < 2
        || search.scales < 2
        || !(search.scale_lo > 0.0 && search.scale_hi > search.scale_lo)
    {
        return Err(Error::InvalidParams("entropy search grid too small".into()));
    }
    let (lo, hi) = mesh.bounding_box();
    let r_bb = 0.5 * (hi - lo).norm();
    let n = search.grid;
    let step = (hi - lo) / (n - 1) as f64;
    let mut centers = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                centers
                    .push(lo + Vec3::new(i as f64 * step.x, j as f64 * step.y, k as f64 * step.z));
            }
        }
    }
    let (la, lb) = ((search.scale_lo / r_bb).ln(), (search.scale_hi / r_bb).ln());
    let dlog = (lb - la) / (search.scales - 1) as f64;
    let scales: Vec<f64> = (0..search.scales)
        .map(|i| (la + i as f64 * dlog).exp())
        .collect();

    let mut scan = coarse_scan(&lumped_points(mesh, r_bb / LUMP_CELLS), &centers, &scales);
    scan.sort_by(|x, y| y.0.total_cmp(&x.0));
    let mut picked: Vec<(usize, usize)> = Vec::new();
    for &(_, ci, si) in &scan {
        if picked.len() >= search.candidates.max(1) {
            break;
        }
        // distinct basins only: skip grid neighbours of earlier picks
        let near = picked.iter().any(|&(cj, sj)| {
            let (a, b) = (centers[ci], centers[cj]);
            ((a - b).component_div(&step.map(|s| if s > 0.0 { s } else { 1.0 })))
                .abs()
                .max()
                <= 1.5
                && (si as i64 - sj as i64).abs() <= 2
        });
        if !near {
            picked.push((ci, si));
        }
    }

    let half = [step.x, step.y, step.z, dlog];
    let mut starts: Vec<([f64; 4], [f64; 4])> = picked
        .iter()
        .map(|&(ci, si)| {
            (
                [centers[ci].x, centers[ci].y, centers[ci].z, scales[si].ln()],
                half,
            )
        })
        .collect();
    starts.extend(focal_starts(mesh, search));
    let mut starts: Vec<(f64, [f64; 4], [f64; 4])> = starts
        .into_iter()
        .map(|(x, w)| {
            (
                gaussian_area(mesh, &Vec3::new(x[0], x[1], x[2]), x[3].exp()),
                x,
                w,
            )
        })
        .collect();
    starts.sort_by(|p, q| q.0.total_cmp(&p.0));
    starts.truncate(search.candidates.max(1));

    let mut best = (f64::NEG_INFINITY, Vec3::zeros(), 1.0);
    for (mut fx, mut x, half) in starts {
        let mut width = half;
        for _ in 0..search.refine_rounds {
            for d in 0..4 {
                if width[d] == 0.0 {
                    continue;
                }
                let mut g = |val: f64| {
                    let mut y = x;
                    y[d] = val;
                    gaussian_area(mesh, &Vec3::new(y[0], y[1], y[2]), y[3].exp())
                };
                let (arg, val) = golden_max(&mut g, x[d] - width[d], x[d] + width[d], 12);
                if val > fx {
                    fx = val;
                    x[d] = arg;
                }
            }
            for w in &mut width {
                *w *= 0.5;
            }
        }
        if fx > best.0 {
            best = (fx, Vec3::new(x[0], x[1], x[2]), x[3].exp());
        }
    }
    Ok(EntropyEstimate {
        lambda: best.0,
        center: [best.1.x, best.1.y, best.1.z],
        scale: best.2,
        grid_step: [step.x, step.y, step.z],
        log_scale_step: dlog,
        refined_fraction: 0.5f64.powi(search.refine_rounds as i32),
    })
}

/// Surface of `history` at time `t`, linearly interpolated between the
/// bracketing snapshots.
pub fn mesh_at(history: &FlowHistory, t: f64) -> Result<TriMesh> {
    let states = &history.states;
    let (first, last) = (states[0].t, history.last().t);
    let tol = 1e-12 * (1.0 + t.abs());
    if t < first - tol || t > last + tol {
        return Err(Error::InvalidParams(format!(
            "t = {t} outside history [{first}, {last}]"
        )));
    }
    let k = states.partition_point(|s| s.t < t - tol);
    let upper = &states[k.min(states.len() - 1)];
    if (upper.t - t).abs() <= tol || k == 0 {
        return Ok(upper.mesh.clone());
    }
    let lower: &FlowState = &states[k - 1];
    let w = (t - lower.t) / (upper.t - lower.t);
    let pos = lower
        .mesh
        .vertices()
        .iter()
        .zip(upper.mesh.vertices())
        .map(|(a, b)| a * (1.0 - w) + b * w)
        .collect();
    lower.mesh.with_positions(pos)
}

/// Huisken's quantity `∫ (4π(t₀−t))⁻¹ e^{-|x−x₀|²/4(t₀−t)} dμ` at time `t`.
pub fn huisken_phi(history: &FlowHistory, x0: &Vec3, t0: f64, t: f64) -> Result<f64> {
    if t >= t0 {
        return Err(Error::TimeOutOfRange { t, t0 });
    }
    let mesh = mesh_at(history, t)?;
    Ok(gaussian_area(&mesh, x0, 1.0 / (t0 - t).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurvatureKind {
    H,
    A,
}

/// `∫ |H|^p dμ` or `∫ |A|^p dμ` with barycentric vertex areas.
pub fn curvature_integral(
    mesh: &TriMesh,
    curv: &CurvatureField,
    which: CurvatureKind,
    power: f64,
) -> Result<f64> {
    if !(power >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "power = {power} must be non-negative"
        )));
    }
    if curv.len() != mesh.n_vertices() {
        return Err(Error::LengthMismatch {
            expected: mesh.n_vertices(),
            got: curv.len(),
        });
    }
    let src = match which {
        CurvatureKind::H => &curv.mean,
        CurvatureKind::A => &curv.norm_a,
    };
    let field: Vec<f64> = src
        .iter()
        .map(|x| {
            if power == 0.0 {
                1.0
            } else {
                x.abs().powf(power)
            }
        })
        .collect();
    Ok(weighted_sum(&curv.vertex_area, &field))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ToppingReport {
    pub diam: f64,
    pub int_h: f64,
    pub ratio: f64,
}

/// Intrinsic diameter against `∫|H| dμ`.
pub fn topping_check(
    mesh: &TriMesh,
    curv: &CurvatureField,
    opts: &DiameterOptions,
) -> Result<ToppingReport> {
    let diam = intrinsic_diameter(mesh, opts)?.diameter;
    let int_h = curvature_integral(mesh, curv, CurvatureKind::H, 1.0)?;
    Ok(ToppingReport {
        diam,
        int_h,
        ratio: diam / int_h,
    })
}

/// Normal coherence threshold standing in for the smooth-graph condition.
pub const GRAPH_PROXY_DEGREES: f64 = 60.0;
const RM_RELATIVE_RESOLUTION: f64 = 1e-3;

#[derive(Debug, Clone, Serialize)]
pub struct RegularityScaleField {
    pub r: Vec<f64>,
    /// True where the normal-coherence proxy, not the curvature bound,
    /// limited `r`.
    pub graph_limited: Vec<bool>,
    pub snapshot: usize,
    /// Largest spatial radius searched (the cap).
    pub spatial_radius: f64,
    /// Time range of snapshots actually available to the search.
    pub time_window: (f64, f64),
    /// The unit backward/forward window was cut off by the history ends.
    pub truncated: bool,
    pub proxy_degrees: f64,
}

impl RegularityScaleField {
    /// `∫ r_M⁻¹ dμ` on the given surface.
    pub fn integral_inverse(&self, mesh: &TriMesh) -> f64 {
        let inv: Vec<f64> = self.r.iter().map(|r| 1.0 / r).collect();
        weighted_sum(&mesh.vertex_areas(), &inv)
    }
}

/// Uniform hash grid over one snapshot's vertices.
struct PointGrid<'a> {
    pts: &'a [Vec3],
    cell: f64,
    origin: Vec3,
    dims: [usize; 3],
    start: Vec<usize>,
    items: Vec<usize>,
}

impl<'a> PointGrid<'a> {
    fn new(pts: &'a [Vec3], cell: f64) -> Self {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for p in pts {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let dims = [0, 1, 2].map(|k| (((hi[k] - lo[k]) / cell).floor() as usize + 1).min(256));
        let cell = (0..3)
            .map(|k| (hi[k] - lo[k]) / dims[k] as f64)
            .fold(cell, f64::max)
            * (1.0 + 1e-9);
        let mut grid = Self {
            pts,
            cell,
            origin: lo,
            dims,
            start: Vec::new(),
            items: Vec::new(),
        };
        let n_cells = dims[0] * dims[1] * dims[2];
        let mut count = vec![0usize; n_cells + 1];
        let ids: Vec<usize> = pts.iter().map(|p| grid.cell_of(p)).collect();
        for &c in &ids {
            count[c + 1] += 1;
        }
        for c in 0..n_cells {
            count[c + 1] += count[c];
        }
        let mut fill = count.clone();
        let mut items = vec![0; pts.len()];
        for (i, &c) in ids.iter().enumerate() {
            items[fill[c]] = i;
            fill[c] += 1;
        }
        grid.start = count;
        grid.items = items;
        grid
    }

    fn coords(&self, p: &Vec3) -> [usize; 3] {
        [0, 1, 2].map(|k| {
            (((p[k] - self.origin[k]) / self.cell).floor().max(0.0) as usize).min(self.dims[k] - 1)
        })
    }

    fn cell_of(&self, p: &Vec3) -> usize {
        let [i, j, k] = self.coords(p);
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    fn within(&self, c: &Vec3, r: f64, mut visit: impl FnMut(usize, f64)) {
        let lo = self.coords(&(c - Vec3::repeat(r)));
        let hi = self.coords(&(c + Vec3::repeat(r)));
        for i in lo[0]..=hi[0] {
            for j in lo[1]..=hi[1] {
                for k in lo[2]..=hi[2] {
                    let cell = (i * self.dims[1] + j) * self.dims[2] + k;
                    for &q in &self.items[self.start[cell]..self.start[cell + 1]] {
                        let d = (self.pts[q] - c).norm();
                        if d < r {
                            visit(q, d);
                        }
                    }
                }
            }
        }
    }
}

/// Per-vertex regularity scale at snapshot `k`: the largest `r ≤ 1` such
/// that `r·|A| ≤ 1` at every vertex within distance `r` of the base point
/// on every snapshot with `|t′ − t_k| < r²`, and the normals inside the ball
/// at `t_k` stay within [`GRAPH_PROXY_DEGREES`] of the base normal.
pub fn regularity_scale(history: &FlowHistory, k: usize) -> Result<RegularityScaleField> {
    if history.is_empty() {
        return Err(Error::EmptyHistory);
    }
    if k >= history.len() {
        return Err(Error::InvalidParams(format!("snapshot {k} out of range")));
    }
    let tk = history.states[k].t;
    let window: Vec<&FlowState> = history
        .states
        .iter()
        .filter(|s| (s.t - tk).abs() < 1.0)
        .collect();
    let time_window = (window[0].t, window[window.len() - 1].t);
    let truncated = history.states[0].t > tk - 1.0 || history.last().t < tk + 1.0;
    let base = &history.states[k];
    let cell = 4.0 * base.mesh.mean_edge_length();
    let grids: Vec<PointGrid> = window
        .iter()
        .map(|s| PointGrid::new(s.mesh.vertices(), cell))
        .collect();
    let cos_proxy = GRAPH_PROXY_DEGREES.to_radians().cos();

    let n = base.mesh.n_vertices();
    let mut r_out = vec![0.0; n];
    let mut limited = vec![false; n];
    let mut cand: Vec<(f64, f64, f64)> = Vec::new();
    let mut normal_cand: Vec<(f64, f64)> = Vec::new();
    for v in 0..n {
        let x = base.mesh.vertices()[v];
        let a_v = base.curv.norm_a[v];
        let hi = if a_v > 1.0 { 1.0 / a_v } else { 1.0 };
        // (distance, |Δt|, |A|) for every candidate at the largest radius
        cand.clear();
        for (s, g) in window.iter().zip(&grids) {
            let dt = (s.t - tk).abs();
            if dt >= hi * hi {
                continue;
            }
            g.within(&x, hi, |q, d| cand.push((d, dt, s.curv.norm_a[q])));
        }
        normal_cand.clear();
        let nv = base.curv.normal_at(v);
        grids[window.iter().position(|s| std::ptr::eq(*s, base)).unwrap()].within(
            &x,
            hi,
            |q, d| normal_cand.push((d, nv.dot(&base.curv.normal_at(q)))),
        );
        let curv_ok = |r: f64| {
            cand.iter()
                .all(|&(d, dt, a)| d >= r || dt >= r * r || r * a <= 1.0)
        };
        let graph_ok = |r: f64| normal_cand.iter().all(|&(d, c)| d >= r || c >= cos_proxy);
        let ok = |r: f64| curv_ok(r) && graph_ok(r);
        let r = if ok(hi) {
            hi
        } else {
            let (mut lo, mut up) = (0.0, hi);
            while up - lo > RM_RELATIVE_RESOLUTION * up {
                let mid = 0.5 * (lo + up);
                if ok(mid) {
                    lo = mid;
                } else {
                    up = mid;
                }
            }
            limited[v] = curv_ok(up);
            lo
        };
        r_out[v] = r;
    }
    Ok(RegularityScaleField {
        r: r_out,
        graph_limited: limited,
        snapshot: k,
        spatial_radius: 1.0,
        time_window,
        truncated,
        proxy_degrees: GRAPH_PROXY_DEGREES,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReductionEstimate {
    pub h_bar: f64,
    /// Longest sampled geodesic inside `{H > 2H̄}`.
    pub d_est: f64,
    /// Longest tube lying inside `{H > H̄}`.
    pub l_est: f64,
    pub superlevel_vertices: usize,
    pub sources: usize,
}

/// Farthest-point sampled sources used for `D_est`.
pub const REDUCTION_SOURCES: usize = 64;

/// Estimates of the two reduction quantities: `D` from graph geodesics
/// restricted to `{H > 2H̄}` and `L` from the given tubes.
pub fn reduction_quantities(
    mesh: &TriMesh,
    curv: &CurvatureField,
    tubes: &[Tube],
    h_bar: f64,
) -> Result<ReductionEstimate> {
    if !(h_bar > 0.0) {
        return Err(Error::InvalidParams(format!(
            "H̄ = {h_bar} must be positive"
        )));
    }
    let mask: Vec<bool> = curv.mean.iter().map(|&h| h > 2.0 * h_bar).collect();
    let members: Vec<usize> = (0..mask.len()).filter(|&v| mask[v]).collect();
    let mut d_est = 0.0;
    let mut sources = 0;
    if !members.is_empty() {
        let graph = GeodesicGraph::new(mesh, 1, Some(&mask));
        // farthest-point sampling among superlevel vertices; each sweep also
        // yields the longest path from its source
        let mut min_dist = vec![f64::INFINITY; mesh.n_vertices()];
        let mut src = members[0];
        for _ in 0..REDUCTION_SOURCES.min(members.len()) {
            let dist = graph.distances(&[src]);
            sources += 1;
            let inside: Vec<f64> = members.iter().map(|&v| dist[v]).collect();
            d_est = f64::max(d_est, farthest(&inside).1);
            for &v in &members {
                min_dist[v] = min_dist[v].min(dist[v]);
            }
            // next source: farthest from all chosen, unreachable ones first
            let next = members
                .iter()
                .copied()
                .max_by(|&a, &b| min_dist[a].total_cmp(&min_dist[b]))
                .unwrap();
            if min_dist[next] == 0.0 {
                break;
            }
            src = next;
        }
    }
    let high: Vec<bool> = curv.mean.iter().map(|&h| h > h_bar).collect();
    let l_est = tubes
        .iter()
        .filter(|t| {
            let m = t.vertex_mask(mesh);
            m.iter().zip(&high).all(|(&inside, &hi)| !inside || hi)
        })
        .map(|t| t.length)
        .fold(0.0, f64::max);
    Ok(ReductionEstimate {
        h_bar,
        d_est,
        l_est,
        superlevel_vertices: members.len(),
        sources,
    })
}

/// One row of the per-run functional series.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FunctionalSample {
    pub t: f64,
    pub area: f64,
    pub f_origin: f64,
    /// NaN when entropy is not requested.
    #[serde(deserialize_with = "crate::serde_f64::nan")]
    pub entropy: f64,
    /// NaN once the surface has split.
    #[serde(deserialize_with = "crate::serde_f64::nan")]
    pub diam: f64,
    pub int_h_1: f64,
    pub int_a_1: f64,
    pub max_h: f64,
    pub max_a: f64,
    #[serde(deserialize_with = "crate::serde_f64::nan")]
    pub int_rinv: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SeriesOptions {
    pub entropy: EntropySearch,
    pub diameter: DiameterOptions,
    /// Skip the regularity scale (reported as NaN) to save time.
    pub regularity: bool,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            entropy: EntropySearch::default(),
            diameter: DiameterOptions::default(),
            regularity: true,
        }
    }
}

pub fn functional_sample(
    history: &FlowHistory,
    k: usize,
    opts: &SeriesOptions,
) -> Result<FunctionalSample> {
    let s = &history.states[k];
    let diam = match intrinsic_diameter(&s.mesh, &opts.diameter) {
        Ok(r) => r.diameter,
        Err(Error::DisconnectedMesh(_)) => f64::NAN,
        Err(e) => return Err(e),
    };
    let int_rinv = if opts.regularity {
        regularity_scale(history, k)?.integral_inverse(&s.mesh)
    } else {
        f64::NAN
    };
    Ok(FunctionalSample {
        t: s.t,
        area: s.mesh.area(),
        f_origin: gaussian_area(&s.mesh, &Vec3::zeros(), 1.0),
        entropy: entropy(&s.mesh, &opts.entropy)?.lambda,
        diam,
        int_h_1: curvature_integral(&s.mesh, &s.curv, CurvatureKind::H, 1.0)?,
        int_a_1: curvature_integral(&s.mesh, &s.curv, CurvatureKind::A, 1.0)?,
        max_h: s.curv.max_mean(),
        max_a: s.curv.max_norm_a(),
        int_rinv,
    })
}

/// Functional samples at every snapshot.
pub fn functional_series(
    history: &FlowHistory,
    opts: &SeriesOptions,
) -> Result<Vec<FunctionalSample>> {
    (0..history.len())
        .map(|k| functional_sample(history, k, opts))
        .collect()
}

pub const SERIES_HEADER: &str = "t,area,F_origin,entropy,diam,int_H_1,int_A_1,maxH,maxA,int_rinv";

pub fn series_csv(samples: &[FunctionalSample]) -> String {
    let mut out = String::from(SERIES_HEADER);
    out.push('\n');
    for s in samples {
        let _ = writeln!(
            out,
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            s.t,
            s.area,
            s.f_origin,
            s.entropy,
            s.diam,
            s.int_h_1,
            s.int_a_1,
            s.max_h,
            s.max_a,
            s.int_rinv
        );
    }
    out
}

/// Regularity field as `vertex,r,graph_limited` rows.
pub fn regularity_csv(field: &RegularityScaleField) -> String {
    let mut out = String::from("vertex,r,graph_limited\n");
    for (v, (r, g)) in field.r.iter().zip(&field.graph_limited).enumerate() {
        let _ = writeln!(out, "{v},{r:?},{}", u8::from(*g));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::icosphere;

    #[test]
    fn gaussian_area_scale_center_identity() {
        let m = icosphere(1.3, 2).unwrap();
        let (a, b) = (0.7, Vec3::new(0.2, -0.1, 0.4));
        let direct = gaussian_area(&m.transformed(|p| p * a - b).unwrap(), &Vec3::zeros(), 1.0);
        let via = gaussian_area(&m, &(b / a), a);
        assert!((direct - via).abs() < 1e-12 * direct);
    }

    #[test]
    fn curvature_integral_power_zero_is_area() {
        let m = icosphere(1.0, 2).unwrap();
        let c = crate::mesh::estimate_curvature(&m).unwrap();
        let a = curvature_integral(&m, &c, CurvatureKind::A, 0.0).unwrap();
        assert!((a - m.area()).abs() < 1e-12);
        assert!(curvature_integral(&m, &c, CurvatureKind::H, -1.0).is_err());
    }

    #[test]
    fn golden_section_finds_parabola_peak() {
        let mut f = |x: f64| -(x - 0.3).powi(2);
        let (x, _) = golden_max(&mut f, -1.0, 1.0, 40);
        assert!((x - 0.3).abs() < 1e-6);
    }

    #[test]
    fn empty_superlevel_gives_zero() {
        let m = icosphere(1.0, 2).unwrap();
        let c = crate::mesh::estimate_curvature(&m).unwrap();
        let r = reduction_quantities(&m, &c, &[], 3.0).unwrap();
        assert_eq!((r.d_est, r.l_est, r.superlevel_vertices), (0.0, 0.0, 0));
    }
}
