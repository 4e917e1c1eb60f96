//! Necks, strong-neck tracks, axis tilt and tubes.
//!
//! A neck fit compares the surface inside a ball `B_{r/ε_w}(p)` with the
//! round cylinder of radius `r` through `p`. Closeness is measured in C⁰
//! (radial deviation over `r`) plus the angle between the surface normal
//! and the cylinder's radial direction; higher derivatives are not used.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowHistory;
use crate::mesh::curvature::{tangent_frame, weighted_sum};
use crate::mesh::{CurvatureField, TriMesh, Vec3};

/// Default window: the fit ball has radius `r / NECK_WINDOW`.
pub const NECK_WINDOW: f64 = 0.5;
pub const MIN_SUPPORT: usize = 30;
/// Normal covariance with `e₀/e₁` above this is not a neck.
pub const DEGENERATE_ISOTROPY: f64 = 0.3;
/// Seed test `|λ₁| ≤ CYLINDRICITY·λ₂`.
pub const CYLINDRICITY: f64 = 0.35;
/// Largest angle between neighbouring necks of one tube.
pub const TUBE_MAX_ANGLE_DEG: f64 = 30.0;
/// Radial band, relative to `r`, for vertices counted as part of a tube.
pub const TUBE_RADIAL_BAND: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeckFit {
    pub center: [f64; 3],
    pub axis: [f64; 3],
    pub radius: f64,
    pub eps_measured: f64,
    /// `ε_w`: the ball radius is `ball_radius`, normally `radius / window`.
    pub window: f64,
    pub ball_radius: f64,
    pub seed: usize,
    pub support: usize,
    /// `e₀/e₁` of the normal covariance.
    pub isotropy: f64,
}

impl NeckFit {
    pub fn p(&self) -> Vec3 {
        Vec3::from(self.center)
    }

    pub fn v(&self) -> Vec3 {
        Vec3::from(self.axis)
    }

    /// Half-length along the axis of the cylinder patch inside the fit ball.
    pub fn axial_reach(&self) -> f64 {
        (self.ball_radius.powi(2) - self.radius.powi(2))
            .max(0.0)
            .sqrt()
    }
}

/// Flips `v` so its first clearly nonzero component among (z, y, x) is positive.
pub fn normalize_axis_sign(v: Vec3) -> Vec3 {
    for k in [2, 1, 0] {
        if v[k].abs() > 1e-9 {
            return if v[k] < 0.0 { -v } else { v };
        }
    }
    v
}

/// Least-squares circle through 2-D points: algebraic start, then
/// Gauss-Newton on the geometric residual.
fn fit_circle(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let mut m = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    for &(x, y) in pts {
        let row = Vector3::new(x, y, 1.0);
        m += row * row.transpose();
        rhs += row * -(x * x + y * y);
    }
    let sol = m.lu().solve(&rhs).unwrap_or_else(Vector3::zeros);
    let (mut a, mut b) = (-0.5 * sol[0], -0.5 * sol[1]);
    let mut r = (a * a + b * b - sol[2]).max(0.0).sqrt();
    for _ in 0..10 {
        let mut jtj = Matrix3::<f64>::zeros();
        let mut jtr = Vector3::<f64>::zeros();
        for &(x, y) in pts {
            let d = ((x - a).powi(2) + (y - b).powi(2)).sqrt().max(1e-300);
            let j = Vector3::new(-(x - a) / d, -(y - b) / d, -1.0);
            let res = d - r;
            jtj += j * j.transpose();
            jtr += j * res;
        }
        let Some(step) = jtj.lu().solve(&-jtr) else {
            break;
        };
        a += step[0];
        b += step[1];
        r += step[2];
        if step.norm() <= 1e-15 * (1.0 + r.abs()) {
            break;
        }
    }
    (a, b, r.abs())
}

/// Fits a round cylinder to the vertices within `ball_radius` of `seed`.
pub fn fit_cylinder(
    mesh: &TriMesh,
    curv: &CurvatureField,
    seed: usize,
    ball_radius: f64,
) -> Result<NeckFit> {
    fit_in_ball(mesh, curv, &mesh.vertices()[seed], seed, ball_radius)
}

/// Cylinder fit to the vertices inside `B_radius(center)`. The returned
/// center is the axis point level with `center`.
pub fn fit_in_ball(
    mesh: &TriMesh,
    curv: &CurvatureField,
    center: &Vec3,
    seed: usize,
    ball_radius: f64,
) -> Result<NeckFit> {
    let verts = mesh.vertices();
    let x0 = *center;
    let ball: Vec<usize> = (0..verts.len())
        .filter(|&v| (verts[v] - x0).norm() < ball_radius)
        .collect();
    if ball.len() < MIN_SUPPORT {
        return Err(Error::InsufficientSupport(ball.len(), MIN_SUPPORT));
    }
    let mut cov = Matrix3::<f64>::zeros();
    for &v in &ball {
        let n = curv.normal_at(v);
        cov += n * n.transpose();
    }
    cov /= ball.len() as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let (e0, e1) = (
        eig.eigenvalues[order[0]].max(0.0),
        eig.eigenvalues[order[1]],
    );
    let isotropy = if e1 > 1e-12 { e0 / e1 } else { 1.0 };
    if isotropy > DEGENERATE_ISOTROPY {
        return Err(Error::DegenerateFit(isotropy));
    }
    let axis = normalize_axis_sign(eig.eigenvectors.column(order[0]).into_owned().normalize());
    let (e1v, e2v) = tangent_frame(&axis);
    let origin = ball.iter().map(|&v| verts[v]).sum::<Vec3>() / ball.len() as f64;
    let planar: Vec<(f64, f64)> = ball
        .iter()
        .map(|&v| {
            let d = verts[v] - origin;
            (d.dot(&e1v), d.dot(&e2v))
        })
        .collect();
    let (a, b, r) = fit_circle(&planar);
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::DegenerateFit(isotropy));
    }
    let p = origin + e1v * a + e2v * b + axis * (x0 - origin).dot(&axis);
    let mut eps: f64 = 0.0;
    for &v in &ball {
        let d = verts[v] - p;
        let radial = d - axis * d.dot(&axis);
        let rho = radial.norm();
        let angle = if rho > 0.0 {
            (curv.normal_at(v).dot(&(radial / rho)))
                .clamp(-1.0, 1.0)
                .acos()
        } else {
            std::f64::consts::PI
        };
        eps = eps.max((rho - r).abs() / r + angle);
    }
    Ok(NeckFit {
        center: [p.x, p.y, p.z],
        axis: [axis.x, axis.y, axis.z],
        radius: r,
        eps_measured: eps,
        window: r / ball_radius,
        ball_radius,
        seed,
        support: ball.len(),
        isotropy,
    })
}

/// Fit in `B_{r/window}(p)`: start from the curvature guess `1/λ₂` around
/// the seed vertex, then refit twice centred on the fitted axis point.
pub fn fit_neck_at(
    mesh: &TriMesh,
    curv: &CurvatureField,
    seed: usize,
    r_guess: f64,
    window: f64,
) -> Result<NeckFit> {
    let mut fit = fit_cylinder(mesh, curv, seed, r_guess / window)?;
    for _ in 0..2 {
        fit = fit_in_ball(mesh, curv, &fit.p(), seed, fit.radius / window)?;
    }
    fit.window = window;
    Ok(fit)
}

/// Necks of one surface: every cylindrical vertex (`|λ₁| ≤ CYLINDRICITY·λ₂`)
/// is a seed, tried in order of decreasing cylindricity unless an earlier
/// accepted neck already sits within `r/2` of its estimated axis point
/// (`r/4` for a rejected attempt).
pub fn detect_necks(
    mesh: &TriMesh,
    curv: &CurvatureField,
    eps_threshold: f64,
    window: f64,
) -> Result<Vec<NeckFit>> {
    if !(eps_threshold > 0.0 && eps_threshold < 0.5) {
        return Err(Error::InvalidParams(format!(
            "eps_threshold = {eps_threshold} outside (0, 0.5)"
        )));
    }
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::InvalidParams(format!(
            "window = {window} outside (0, 1]"
        )));
    }
    let mut seeds: Vec<(f64, usize)> = (0..curv.len())
        .filter(|&v| {
            curv.lambda2[v] > 0.0 && curv.lambda1[v].abs() <= CYLINDRICITY * curv.lambda2[v]
        })
        .map(|v| (1.0 - curv.lambda1[v].abs() / curv.lambda2[v], v))
        .collect();
    seeds.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut tried: Vec<(Vec3, f64)> = Vec::new();
    let mut fits: Vec<NeckFit> = Vec::new();
    for &(_, v) in &seeds {
        let r_guess = 1.0 / curv.lambda2[v];
        let guess = mesh.vertices()[v] - curv.normal_at(v) * r_guess;
        if tried
            .iter()
            .any(|(c, r)| (c - guess).norm() < 0.5 * r.min(r_guess))
        {
            continue;
        }
        let fit = match fit_neck_at(mesh, curv, v, r_guess, window) {
            Ok(f) => f,
            Err(Error::InsufficientSupport(..)) | Err(Error::DegenerateFit(_)) => {
                tried.push((guess, r_guess));
                continue;
            }
            Err(e) => return Err(e),
        };
        if fit.eps_measured <= eps_threshold {
            tried.push((guess, r_guess));
            tried.push((fit.p(), fit.radius));
            fits.push(fit);
        } else {
            // a rejected ball may just clip a cap; keep nearby seeds alive
            tried.push((guess, 0.5 * r_guess));
        }
    }
    // keep the better of two fits with nearby centers
    fits.sort_by(|a, b| a.eps_measured.total_cmp(&b.eps_measured));
    let mut kept: Vec<NeckFit> = Vec::new();
    for f in fits {
        if !kept
            .iter()
            .any(|k| (k.p() - f.p()).norm() < 0.5 * k.radius.min(f.radius))
        {
            kept.push(f);
        }
    }
    Ok(kept)
}

/// Fraction of the masked vertices inside at least one neck's fit ball.
pub fn ball_coverage(mesh: &TriMesh, necks: &[NeckFit], mask: &[bool]) -> f64 {
    let verts = mesh.vertices();
    let (mut hit, mut total) = (0usize, 0usize);
    for (v, _) in mask.iter().enumerate().filter(|(_, m)| **m) {
        total += 1;
        if necks
            .iter()
            .any(|n| (verts[v] - n.p()).norm() < n.ball_radius)
        {
            hit += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        hit as f64 / total as f64
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrackSample {
    pub t: f64,
    pub fit: NeckFit,
    /// `√(2(t* − t))`.
    pub r_law: f64,
    /// `|r_fit / r_law − 1|`.
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrackEnd {
    pub t: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct StrongNeckTrack {
    pub p: [f64; 3],
    pub t_star: f64,
    /// Increasing in time.
    pub samples: Vec<TrackSample>,
    pub max_eps_over_track: f64,
    pub max_residual: f64,
    /// First snapshot (going backward) that broke the track, if any.
    pub lost: Option<TrackEnd>,
    pub eps1: f64,
    pub tol_r: f64,
    pub lookback: f64,
}

impl StrongNeckTrack {
    pub fn span(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrackOptions {
    pub eps1: f64,
    #[serde(deserialize_with = "crate::serde_f64::inf")]
    pub lookback: f64,
    pub tol_r: f64,
    pub window: f64,
}

impl Default for TrackOptions {
    fn default() -> Self {
        Self {
            eps1: 0.3,
            lookback: f64::INFINITY,
            tol_r: 0.1,
            window: NECK_WINDOW,
        }
    }
}

fn nearest_vertex(mesh: &TriMesh, p: &Vec3) -> usize {
    mesh.vertices()
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (a.1 - p)
                .norm_squared()
                .total_cmp(&(b.1 - p).norm_squared())
        })
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Follows `neck` (fitted on the last snapshot) backward in time against
/// the shrinking-cylinder law `r(t) = √(2(t* − t))`, `t* = t̄ + r²/2`.
/// At every snapshot a cylinder is fitted in `B_{r(t)/window}` around the
/// vertex nearest `p`; the track stops at the first snapshot whose fit fails,
/// whose eps exceeds `eps1`, or whose radius misses the law by more than
/// `tol_r`.
pub fn track_strong_neck(
    history: &FlowHistory,
    neck: &NeckFit,
    opts: &TrackOptions,
) -> Result<StrongNeckTrack> {
    if !(opts.eps1 > 0.0 && opts.tol_r > 0.0 && opts.lookback > 0.0 && opts.window > 0.0) {
        return Err(Error::InvalidParams(
            "track thresholds must be positive".into(),
        ));
    }
    let t_bar = history.last().t;
    let t_star = t_bar + 0.5 * neck.radius * neck.radius;
    let p = neck.p();
    let mut samples = Vec::new();
    let mut lost = None;
    for state in history.states.iter().rev() {
        if state.t < t_bar - opts.lookback {
            break;
        }
        let r_law = (2.0 * (t_star - state.t)).sqrt();
        let seed = nearest_vertex(&state.mesh, &p);
        let reason = match fit_in_ball(&state.mesh, &state.curv, &p, seed, r_law / opts.window) {
            Err(e) => Some(e.to_string()),
            Ok(mut fit) => {
                fit.window = opts.window;
                let residual = (fit.radius / r_law - 1.0).abs();
                if fit.eps_measured > opts.eps1 {
                    Some(format!("eps {:.4} > eps1 {}", fit.eps_measured, opts.eps1))
                } else if residual > opts.tol_r {
                    Some(format!(
                        "radius residual {residual:.4} > tol_r {}",
                        opts.tol_r
                    ))
                } else {
                    samples.push(TrackSample {
                        t: state.t,
                        fit,
                        r_law,
                        residual,
                    });
                    None
                }
            }
        };
        if let Some(reason) = reason {
            lost = Some(TrackEnd { t: state.t, reason });
            break;
        }
    }
    if samples.is_empty() {
        let end = lost.expect("a track without samples has a loss");
        return Err(Error::TrackLost {
            time: end.t,
            reason: end.reason,
        });
    }
    samples.reverse();
    let max_eps = samples
        .iter()
        .map(|s| s.fit.eps_measured)
        .fold(0.0, f64::max);
    let max_residual = samples.iter().map(|s| s.residual).fold(0.0, f64::max);
    Ok(StrongNeckTrack {
        p: neck.center,
        t_star,
        samples,
        max_eps_over_track: max_eps,
        max_residual,
        lost,
        eps1: opts.eps1,
        tol_r: opts.tol_r,
        lookback: opts.lookback,
    })
}

fn angle_deg(a: &Vec3, b: &Vec3) -> f64 {
    (a.dot(b) / (a.norm() * b.norm()))
        .clamp(-1.0, 1.0)
        .acos()
        .to_degrees()
}

#[derive(Debug, Clone, Serialize)]
pub struct TiltReport {
    pub total_tilt_deg: f64,
    pub profile_deg: Vec<f64>,
}

/// Angle between the first and last axis of a track, and between
/// consecutive axes, after sign normalization.
pub fn measure_tilt(track: &StrongNeckTrack) -> Result<TiltReport> {
    if track.samples.len() < 2 {
        return Err(Error::TooShort(track.samples.len()));
    }
    let axes: Vec<Vec3> = track
        .samples
        .iter()
        .map(|s| normalize_axis_sign(s.fit.v()))
        .collect();
    Ok(TiltReport {
        total_tilt_deg: angle_deg(&axes[0], &axes[axes.len() - 1]),
        profile_deg: axes.windows(2).map(|w| angle_deg(&w[0], &w[1])).collect(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Tube {
    pub necks: Vec<NeckFit>,
    /// Arclength-sampled central curve.
    pub gamma: Vec<[f64; 3]>,
    /// Arclength of each neck center along `gamma`.
    pub neck_arclength: Vec<f64>,
    /// Length of `gamma` plus, on open tubes, the axial reach of the two end
    /// fits.
    pub length: f64,
    /// Angle between consecutive neck axes, degrees.
    pub tilt_profile: Vec<f64>,
    pub closed: bool,
}

impl Tube {
    pub fn gamma_length(&self) -> f64 {
        polyline_length(&self.gamma, false)
    }

    /// Vertices lying on the model cylinder of one of the necks: within the
    /// radial band and inside the axial slab certified by that fit.
    pub fn vertex_mask(&self, mesh: &TriMesh) -> Vec<bool> {
        let n = self.necks.len();
        mesh.vertices()
            .iter()
            .map(|x| {
                if n == 0 {
                    return false;
                }
                // each vertex belongs to its nearest neck centre
                let (i, f) = self
                    .necks
                    .iter()
                    .enumerate()
                    .min_by(|a, b| {
                        (x - a.1.p())
                            .norm_squared()
                            .total_cmp(&(x - b.1.p()).norm_squared())
                    })
                    .unwrap();
                let d = x - f.p();
                let v = f.v();
                let axial = d.dot(&v);
                let rho = (d - v * axial).norm();
                if (rho - f.radius).abs() > TUBE_RADIAL_BAND * f.radius {
                    return false;
                }
                if self.closed {
                    return true;
                }
                // open ends extend only by the certified reach
                let s = d.dot(&self.travel_direction(i));
                let back_ok = i > 0 || s >= -f.axial_reach();
                let fwd_ok = i + 1 < n || s < f.axial_reach();
                back_ok && fwd_ok
            })
            .collect()
    }

    fn travel_direction(&self, i: usize) -> Vec3 {
        let n = self.necks.len();
        let v = self.necks[i].v();
        let next = if i + 1 < n {
            Some(i + 1)
        } else if self.closed {
            Some(0)
        } else {
            None
        };
        let dir = match next {
            Some(j) => self.necks[j].p() - self.necks[i].p(),
            None if i > 0 => self.necks[i].p() - self.necks[i - 1].p(),
            None => v,
        };
        if dir.dot(&v) < 0.0 {
            -v
        } else {
            v
        }
    }
}

fn polyline_length(pts: &[[f64; 3]], closed: bool) -> f64 {
    let p: Vec<Vec3> = pts.iter().map(|&q| Vec3::from(q)).collect();
    let mut l: f64 = p.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
    if closed && p.len() > 1 {
        l += (p[0] - p[p.len() - 1]).norm();
    }
    l
}

/// Catmull-Rom spline through `pts`, `per_segment` samples per span.
fn catmull_rom(pts: &[Vec3], closed: bool, per_segment: usize) -> (Vec<Vec3>, Vec<usize>) {
    let n = pts.len();
    let at = |i: isize| -> Vec3 {
        if closed {
            pts[i.rem_euclid(n as isize) as usize]
        } else {
            pts[i.clamp(0, n as isize - 1) as usize]
        }
    };
    let spans = if closed { n } else { n - 1 };
    let mut out = Vec::new();
    let mut knots = Vec::with_capacity(n);
    for s in 0..spans {
        let i = s as isize;
        let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
        knots.push(out.len());
        for k in 0..per_segment {
            let t = k as f64 / per_segment as f64;
            let (t2, t3) = (t * t, t * t * t);
            out.push(
                (p1 * 2.0
                    + (p2 - p0) * t
                    + (p0 * 2.0 - p1 * 5.0 + p2 * 4.0 - p3) * t2
                    + (p1 * 3.0 - p0 - p2 * 3.0 + p3) * t3)
                    * 0.5,
            );
        }
    }
    if closed {
        out.push(pts[0]);
    } else {
        knots.push(out.len());
        out.push(pts[n - 1]);
    }
    (out, knots)
}

fn linked(a: &NeckFit, b: &NeckFit) -> bool {
    let reach = (a.radius / a.window).min(b.radius / b.window);
    let angle = angle_deg(&a.v(), &b.v()).min(angle_deg(&a.v(), &-b.v()));
    (a.p() - b.p()).norm() < reach && angle < TUBE_MAX_ANGLE_DEG
}

/// Orders one connected group of necks into a chain: start at the neck
/// farthest from the group's first member and repeatedly step to the
/// nearest linked neck ahead along the current travel direction.
fn chain(necks: &[NeckFit], group: &[usize]) -> Vec<usize> {
    let first = necks[group[0]].p();
    let start = *group
        .iter()
        .max_by(|&&a, &&b| {
            (necks[a].p() - first)
                .norm()
                .total_cmp(&(necks[b].p() - first).norm())
        })
        .unwrap();
    let mut order = vec![start];
    let mut used = vec![false; necks.len()];
    used[start] = true;
    let mut dir: Option<Vec3> = None;
    loop {
        let cur = &necks[*order.last().unwrap()];
        let axis = match dir {
            Some(d) if d.dot(&cur.v()) < 0.0 => -cur.v(),
            Some(_) => cur.v(),
            None => cur.v(),
        };
        let next = group
            .iter()
            .copied()
            .filter(|&j| !used[j] && linked(cur, &necks[j]))
            .filter(|&j| dir.is_none() || (necks[j].p() - cur.p()).dot(&axis) > 0.0)
            .min_by(|&a, &b| {
                (necks[a].p() - cur.p())
                    .norm()
                    .total_cmp(&(necks[b].p() - cur.p()).norm())
            });
        let Some(j) = next else { break };
        let step = necks[j].p() - cur.p();
        dir = Some(if step.dot(&axis) >= 0.0 { axis } else { -axis });
        used[j] = true;
        order.push(j);
    }
    order
}

/// Groups necks into tubes by overlap and alignment and builds each tube's
/// central curve.
pub fn assemble_tubes(_mesh: &TriMesh, necks: &[NeckFit]) -> Vec<Tube> {
    let n = necks.len();
    let mut comp = vec![usize::MAX; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = groups.len();
        let mut stack = vec![s];
        comp[s] = id;
        let mut members = Vec::new();
        while let Some(i) = stack.pop() {
            members.push(i);
            for j in 0..n {
                if comp[j] == usize::MAX && linked(&necks[i], &necks[j]) {
                    comp[j] = id;
                    stack.push(j);
                }
            }
        }
        members.sort_unstable();
        groups.push(members);
    }
    let mut tubes = Vec::new();
    for group in &groups {
        let order = chain(necks, group);
        let ordered: Vec<NeckFit> = order.iter().map(|&i| necks[i]).collect();
        let closed = ordered.len() > 3 && linked(&ordered[0], &ordered[ordered.len() - 1]);
        let centers: Vec<Vec3> = ordered.iter().map(|f| f.p()).collect();
        let (gamma, knots) = if centers.len() == 1 {
            (centers.clone(), vec![0])
        } else {
            catmull_rom(&centers, closed, 8)
        };
        let mut arclength = vec![0.0; gamma.len()];
        for k in 1..gamma.len() {
            arclength[k] = arclength[k - 1] + (gamma[k] - gamma[k - 1]).norm();
        }
        let neck_arclength: Vec<f64> = knots
            .iter()
            .take(ordered.len())
            .map(|&k| arclength[k])
            .collect();
        let mut length = *arclength.last().unwrap_or(&0.0);
        if !closed {
            length += ordered[0].axial_reach() + ordered[ordered.len() - 1].axial_reach();
        }
        let mut tilt_profile: Vec<f64> = ordered
            .windows(2)
            .map(|w| angle_deg(&w[0].v(), &w[1].v()).min(angle_deg(&w[0].v(), &-w[1].v())))
            .collect();
        if closed {
            let (a, b) = (&ordered[ordered.len() - 1], &ordered[0]);
            tilt_profile.push(angle_deg(&a.v(), &b.v()).min(angle_deg(&a.v(), &-b.v())));
        }
        tubes.push(Tube {
            necks: ordered,
            gamma: gamma.iter().map(|p| [p.x, p.y, p.z]).collect(),
            neck_arclength,
            length,
            tilt_profile,
            closed,
        });
    }
    tubes
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DistanceComparison {
    pub max_ratio: f64,
    pub witness: (usize, usize),
    pub pairs: usize,
}

/// Largest `d_γ(p_i, p_j) / |p_i − p_j|` over neck pairs closer than `cutoff`.
pub fn tube_distance_comparison(tube: &Tube, cutoff: f64) -> Result<DistanceComparison> {
    let n = tube.necks.len();
    if n < 3 {
        return Err(Error::TooShort(n));
    }
    let period = tube.gamma_length();
    let mut best = DistanceComparison {
        max_ratio: 1.0,
        witness: (0, 0),
        pairs: 0,
    };
    for i in 0..n {
        for j in i + 1..n {
            let chord = (tube.necks[i].p() - tube.necks[j].p()).norm();
            if chord >= cutoff || chord == 0.0 {
                continue;
            }
            let mut arc = (tube.neck_arclength[j] - tube.neck_arclength[i]).abs();
            if tube.closed {
                arc = arc.min(period - arc);
            }
            best.pairs += 1;
            let ratio = arc / chord;
            if ratio > best.max_ratio {
                best.max_ratio = ratio;
                best.witness = (i, j);
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TubeIntegral {
    pub int_h: f64,
    pub length: f64,
    pub c_observed: f64,
    pub vertices: usize,
}

/// `∫ H dμ` over the tube's vertices and its ratio to the tube length.
pub fn tube_integral_estimate(
    mesh: &TriMesh,
    curv: &CurvatureField,
    tube: &Tube,
) -> Result<TubeIntegral> {
    if curv.len() != mesh.n_vertices() {
        return Err(Error::LengthMismatch {
            expected: mesh.n_vertices(),
            got: curv.len(),
        });
    }
    let mask = tube.vertex_mask(mesh);
    let field: Vec<f64> = mask
        .iter()
        .zip(&curv.mean)
        .map(|(&m, &h)| if m { h.abs() } else { 0.0 })
        .collect();
    let int_h = weighted_sum(&curv.vertex_area, &field);
    Ok(TubeIntegral {
        int_h,
        length: tube.length,
        c_observed: int_h / tube.length,
        vertices: mask.iter().filter(|&&m| m).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_sign_rule() {
        assert_eq!(normalize_axis_sign(Vec3::new(0.0, 0.0, -1.0)), Vec3::z());
        assert_eq!(
            normalize_axis_sign(Vec3::new(1.0, -1.0, 0.0)),
            Vec3::new(-1.0, 1.0, 0.0)
        );
        assert_eq!(normalize_axis_sign(Vec3::new(-1.0, 0.0, 0.0)), Vec3::x());
    }

    #[test]
    fn circle_fit_recovers_circle() {
        let pts: Vec<(f64, f64)> = (0..40)
            .map(|i| {
                let a = i as f64 * 0.157;
                (1.5 + 0.7 * a.cos(), -2.0 + 0.7 * a.sin())
            })
            .collect();
        let (a, b, r) = fit_circle(&pts);
        assert!((a - 1.5).abs() < 1e-10 && (b + 2.0).abs() < 1e-10 && (r - 0.7).abs() < 1e-10);
    }

    #[test]
    fn catmull_rom_interpolates() {
        let pts = vec![
            Vec3::zeros(),
            Vec3::x(),
            Vec3::new(2.0, 1.0, 0.0),
            Vec3::new(3.0, 1.0, 0.0),
        ];
        let (curve, knots) = catmull_rom(&pts, false, 5);
        for (k, p) in knots.iter().zip(&pts) {
            assert!((curve[*k] - p).norm() < 1e-12);
        }
    }
}
