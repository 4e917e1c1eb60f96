//! Explicit time integration of mean curvature flow and of the rescaled flow
//! `∂ₛx = H⃗ + ½x⊥`.
//!
//! Vertices move along the area-weighted normal with the quadric-fit mean
//! curvature, so the motion uses exactly the `H` and `n` that the
//! diagnostics see. The step is
//! `dt = min(dt_max, cfl / max|A|², edge_cfl · h²)` with `h` the smallest
//! triangle altitude.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{estimate_curvature, CurvatureField, TriMesh, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub cfl: f64,
    pub dt_max: f64,
    pub stop_max_a: f64,
    pub stop_quality: f64,
    /// Mesh-scale stability limit: `dt ≤ edge_cfl · h²`, `h` the smallest
    /// triangle altitude.
    /// Binding only where the mesh is much finer than the curvature scale.
    #[serde(default = "default_edge_cfl")]
    pub edge_cfl: f64,
    /// Hard stop on flow time.
    #[serde(default = "default_t_max", deserialize_with = "crate::serde_f64::inf")]
    pub t_max: f64,
    /// Area-weighted tangential relaxation after each step. Off by default
    /// because it breaks the material vertex correspondence.
    #[serde(default)]
    pub tangential_relaxation: bool,
}

fn default_edge_cfl() -> f64 {
    0.25
}

fn default_t_max() -> f64 {
    f64::INFINITY
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            cfl: 0.01,
            dt_max: 1e-2,
            stop_max_a: 100.0,
            stop_quality: 0.02,
            edge_cfl: default_edge_cfl(),
            t_max: f64::INFINITY,
            tangential_relaxation: false,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::InvalidParams(format!(
                "cfl = {} must lie in (0, 1)",
                self.cfl
            )));
        }
        if !(self.dt_max >= 0.0
            && self.stop_max_a > 0.0
            && self.stop_quality > 0.0
            && self.edge_cfl > 0.0
            && self.t_max > 0.0)
        {
            return Err(Error::InvalidParams(
                "step thresholds must be positive".into(),
            ));
        }
        Ok(())
    }

    /// The time step for a surface with the given `max|A|` and smallest altitude.
    pub fn dt_for(&self, max_a: f64, min_edge: f64) -> f64 {
        let curvature = if max_a > 0.0 {
            self.cfl / (max_a * max_a)
        } else {
            f64::INFINITY
        };
        self.dt_max
            .min(curvature)
            .min(self.edge_cfl * min_edge * min_edge)
    }
}

/// A surface at one time with its curvature.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    pub mesh: TriMesh,
    pub curv: CurvatureField,
}

impl FlowState {
    pub fn new(mesh: TriMesh, t: f64) -> Result<Self> {
        let curv = estimate_curvature(&mesh)?;
        Ok(Self { t, mesh, curv })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxA,
    Quality,
    TMax,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::MaxA => "maxA",
            StopReason::Quality => "quality",
            StopReason::TMax => "t_max",
        }
    }
}

/// Snapshots of one run. All states share the initial face list.
#[derive(Debug, Clone)]
pub struct FlowHistory {
    pub states: Vec<FlowState>,
    pub stop_reason: StopReason,
    pub steps: usize,
    pub ctrl: StepControl,
}

impl FlowHistory {
    /// A history assembled from externally produced states (synthetic
    /// solutions, loaded snapshots). Times must be strictly increasing and
    /// all meshes must share vertex count and faces.
    pub fn from_states(states: Vec<FlowState>, stop_reason: StopReason) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::EmptyHistory);
        }
        let first = &states[0].mesh;
        for w in states.windows(2) {
            if !(w[1].t > w[0].t) {
                return Err(Error::InvalidParams(format!(
                    "history times not increasing at t = {}",
                    w[1].t
                )));
            }
        }
        for s in &states {
            if s.mesh.n_vertices() != first.n_vertices() || s.mesh.faces() != first.faces() {
                return Err(Error::InvalidParams(
                    "history snapshots differ in connectivity".into(),
                ));
            }
        }
        Ok(Self {
            states,
            stop_reason,
            steps: 0,
            ctrl: StepControl::default(),
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &FlowState {
        self.states.last().expect("history is never empty")
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    /// Index of the snapshot closest in time to `t`.
    pub fn nearest(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, s) in self.states.iter().enumerate() {
            if (s.t - t).abs() < (self.states[best].t - t).abs() {
                best = i;
            }
        }
        best
    }
}

fn advance(
    state: &FlowState,
    velocity: impl Fn(usize, &Vec3, &Vec3) -> f64,
    dt: f64,
    t_new: f64,
    relax: bool,
) -> Result<FlowState> {
    let verts = state.mesh.vertices();
    let mut moved: Vec<Vec3> = verts
        .iter()
        .enumerate()
        .map(|(v, p)| {
            let n = state.curv.normal_at(v);
            p + n * (dt * velocity(v, p, &n))
        })
        .collect();
    if relax {
        moved = tangential_relax(&state.mesh, &moved, &state.curv);
    }
    let mesh = state.mesh.with_positions(moved)?;
    FlowState::new(mesh, t_new)
}

/// Moves each vertex halfway toward the area-weighted centroid of its
/// one-ring, projected to the tangent plane.
fn tangential_relax(mesh: &TriMesh, pos: &[Vec3], curv: &CurvatureField) -> Vec<Vec3> {
    let topo = mesh.topology();
    (0..pos.len())
        .map(|v| {
            let mut c = Vec3::zeros();
            let mut w = 0.0;
            for &f in &topo.vertex_faces[v] {
                let [a, b, d] = topo.faces[f];
                let area = 0.5 * (pos[b] - pos[a]).cross(&(pos[d] - pos[a])).norm();
                c += (pos[a] + pos[b] + pos[d]) * (area / 3.0);
                w += area;
            }
            let delta = c / w - pos[v];
            let n = curv.normal_at(v);
            pos[v] + (delta - n * n.dot(&delta)) * 0.5
        })
        .collect()
}

fn quality_gate(state: FlowState, ctrl: &StepControl) -> Result<FlowState> {
    let q = state.mesh.min_quality();
    if q < ctrl.stop_quality {
        return Err(Error::QualityCollapse {
            quality: q,
            threshold: ctrl.stop_quality,
            time: state.t,
        });
    }
    Ok(state)
}

/// One explicit step of mean curvature flow, `x ← x − dt·H·n`.
pub fn mcf_step(state: &FlowState, ctrl: &StepControl) -> Result<FlowState> {
    let dt = ctrl.dt_for(state.curv.max_norm_a(), state.mesh.min_altitude());
    if dt == 0.0 {
        return Ok(state.clone());
    }
    let h = &state.curv.mean;
    let next = advance(
        state,
        |v, _, _| -h[v],
        dt,
        state.t + dt,
        ctrl.tangential_relaxation,
    )
    .map_err(|e| collapse_from(e, state.t + dt, ctrl))?;
    quality_gate(next, ctrl)
}

fn collapse_from(e: Error, time: f64, ctrl: &StepControl) -> Error {
    match e {
        Error::DegenerateFace(..) | Error::NonFiniteVertex(_) => Error::QualityCollapse {
            quality: 0.0,
            threshold: ctrl.stop_quality,
            time,
        },
        other => other,
    }
}

/// Change of variables between unrescaled flow time `t` and rescaled time
/// `s = −log(t* − t)` about the space-time point `(center, t*)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaledFrame {
    pub center: [f64; 3],
    pub t_star: f64,
}

impl RescaledFrame {
    pub fn s_of_t(&self, t: f64) -> f64 {
        -(self.t_star - t).ln()
    }

    pub fn t_of_s(&self, s: f64) -> f64 {
        self.t_star - (-s).exp()
    }

    /// `Σ = (M_t − center)/√(t* − t)`.
    pub fn rescale(&self, mesh: &TriMesh, t: f64) -> Result<TriMesh> {
        if t >= self.t_star {
            return Err(Error::TimeOutOfRange { t, t0: self.t_star });
        }
        let c = Vec3::from(self.center);
        let k = 1.0 / (self.t_star - t).sqrt();
        mesh.transformed(|p| (p - c) * k)
    }

    /// Rescaled snapshot of an unrescaled state; the state time becomes `s`.
    pub fn rescale_state(&self, state: &FlowState) -> Result<FlowState> {
        FlowState::new(self.rescale(&state.mesh, state.t)?, self.s_of_t(state.t))
    }
}

/// One explicit step of rescaled flow `x ← x + ds·(−H + ½⟨x − c, n⟩)·n`,
/// positions taken relative to `center`. The state time is the rescaled time.
pub fn rescaled_step(
    state: &FlowState,
    center: &Vec3,
    ds: f64,
    stop_quality: f64,
) -> Result<FlowState> {
    let h = &state.curv.mean;
    let ctrl = StepControl {
        stop_quality,
        ..StepControl::default()
    };
    let next = advance(
        state,
        |v, p, n| -h[v] + 0.5 * (p - center).dot(n),
        ds,
        state.t + ds,
        false,
    )
    .map_err(|e| collapse_from(e, state.t + ds, &ctrl))?;
    quality_gate(next, &ctrl)
}

/// Largest stable rescaled step for the given CFL factor,
/// `min(cfl / max(|A|², 1), edge_cfl · h²)` with the default `edge_cfl`.
pub fn rescaled_dt(state: &FlowState, cfl: f64) -> f64 {
    let h = state.mesh.min_altitude();
    (cfl / state.curv.max_norm_a().powi(2).max(1.0)).min(StepControl::default().edge_cfl * h * h)
}

/// Growth factor of `max|A|` that forces an extra snapshot.
pub const SNAPSHOT_GROWTH: f64 = 1.25;

/// Integrates mean curvature flow from `initial` until `max|A|` reaches
/// `stop_max_a`, the mesh quality collapses, or `t_max` passes. Snapshots
/// are kept every `snapshot_every` of flow time, whenever `max|A|` has grown
/// by [`SNAPSHOT_GROWTH`] since the last one, and at the final state.
pub fn run_flow(initial: &TriMesh, ctrl: &StepControl, snapshot_every: f64) -> Result<FlowHistory> {
    ctrl.validate()?;
    if !(snapshot_every > 0.0) {
        return Err(Error::InvalidParams(
            "snapshot cadence must be positive".into(),
        ));
    }
    let mut state = FlowState::new(initial.clone(), 0.0)?;
    let mut states = vec![state.clone()];
    let mut next_snap = snapshot_every;
    let mut steps = 0;
    let stop = loop {
        if state.curv.max_norm_a() >= ctrl.stop_max_a {
            break StopReason::MaxA;
        }
        if state.t >= ctrl.t_max {
            break StopReason::TMax;
        }
        let mut step_ctrl = *ctrl;
        // land exactly on t_max
        step_ctrl.dt_max = ctrl.dt_max.min(ctrl.t_max - state.t);
        match mcf_step(&state, &step_ctrl) {
            Ok(next) => state = next,
            Err(Error::QualityCollapse { .. }) => break StopReason::Quality,
            Err(e) => return Err(e),
        }
        steps += 1;
        let last_a = states.last().map_or(0.0, |s| s.curv.max_norm_a());
        if state.t >= next_snap || state.curv.max_norm_a() >= SNAPSHOT_GROWTH * last_a {
            states.push(state.clone());
            while next_snap <= state.t {
                next_snap += snapshot_every;
            }
        }
    };
    if states.last().map(|s| s.t) != Some(state.t) {
        states.push(state);
    }
    Ok(FlowHistory {
        states,
        stop_reason: stop,
        steps,
        ctrl: *ctrl,
    })
}

/// Integrates rescaled flow about `center` for `s_max` units of rescaled
/// time. The mesh is translated so `center` sits at the origin and the
/// returned history stores rescaled time in `t`, with snapshots every
/// `snapshot_every`.
pub fn run_rescaled(
    initial: &TriMesh,
    center: &Vec3,
    cfl: f64,
    s_max: f64,
    snapshot_every: f64,
    stop_quality: f64,
) -> Result<FlowHistory> {
    if !(cfl > 0.0 && s_max > 0.0 && snapshot_every > 0.0) {
        return Err(Error::InvalidParams(
            "rescaled run needs positive cfl, s_max and cadence".into(),
        ));
    }
    let shifted: Vec<Vec3> = initial.vertices().iter().map(|x| x - center).collect();
    let mut state = FlowState::new(initial.with_positions(shifted)?, 0.0)?;
    let origin = Vec3::zeros();
    let mut states = vec![state.clone()];
    let mut next_snap = snapshot_every;
    let mut steps = 0;
    let stop = loop {
        if state.t >= s_max - 1e-12 {
            break StopReason::TMax;
        }
        // land on snapshot times exactly so gap series are evenly spaced
        let ds = rescaled_dt(&state, cfl)
            .min(next_snap - state.t)
            .min(s_max - state.t);
        match rescaled_step(&state, &origin, ds, stop_quality) {
            Ok(next) => state = next,
            Err(Error::QualityCollapse { .. }) => break StopReason::Quality,
            Err(e) => return Err(e),
        }
        steps += 1;
        if state.t >= next_snap - 1e-12 {
            state.t = next_snap;
            states.push(state.clone());
            next_snap += snapshot_every;
        }
    };
    if states.last().map(|s| s.t) != Some(state.t) {
        states.push(state);
    }
    let ctrl = StepControl {
        cfl,
        stop_quality,
        t_max: s_max,
        ..StepControl::default()
    };
    Ok(FlowHistory {
        states,
        stop_reason: stop,
        steps,
        ctrl,
    })
}
