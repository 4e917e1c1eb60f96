//! Experiment orchestration: configuration, runs, bundles on disk and
//! verdict reports.
//!
//! A bundle directory holds
//! `manifest.json`, `bundle.json` (everything the report needs),
//! `history/` (one OFF file per snapshot plus `index.csv`), `series.csv`,
//! `phi.csv`, `necks.json`, `tracks.json`, `tubes.json`, `ls.json` and
//! `plots/*.svg`. Nothing time- or host-dependent is written, so equal
//! configs give byte-identical bundles.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{
    run_flow, run_rescaled, FlowHistory, FlowState, StepControl, StopReason, SNAPSHOT_GROWTH,
};
use crate::functionals::{
    functional_sample, huisken_phi, series_csv, EntropySearch, FunctionalSample, SeriesOptions,
    GRAPH_PROXY_DEGREES, QUADRATURE_RESOLUTION, REDUCTION_SOURCES,
};
use crate::lojasiewicz::{
    measure_ls_inequality, tilt_sum_chain, ChainReport, LsMeasurement, LsOptions, CHAIN_SLACK,
    HYPOTHESIS_SLACK,
};
use crate::mesh::control::ALPHA_PENETRATION_EDGES;
use crate::mesh::geodesic::DiameterOptions;
use crate::mesh::io::{read_mesh, write_off};
use crate::mesh::Vec3;
use crate::neck::{
    assemble_tubes, detect_necks, measure_tilt, track_strong_neck, tube_distance_comparison,
    tube_integral_estimate, NeckFit, StrongNeckTrack, TiltReport, TrackOptions, Tube, CYLINDRICITY,
    DEGENERATE_ISOTROPY, MIN_SUPPORT, NECK_WINDOW, TUBE_MAX_ANGLE_DEG, TUBE_RADIAL_BAND,
};
use crate::scenario::{generate, Generator, Scenario, NECK_AXIAL_FRACTION, NECK_AXIAL_GROWTH};
use crate::svg::line_plot;

/// Absolute slack for the entropy, Φ and rescaled-F monotonicity suites.
pub const MONOTONE_SLACK: f64 = 5e-3;
/// Relative slack for area monotonicity.
pub const AREA_SLACK: f64 = 1e-6;

/// Versioned regression pins for the standard suite.
pub const STANDARD_EXPECTATIONS: &str = include_str!("../expectations.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FlowMode {
    #[default]
    Mcf,
    /// Rescaled flow about `center`; history time is rescaled time.
    Rescaled { center: [f64; 3], s_max: f64 },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct Diagnostics {
    /// Full functional sample on every k-th snapshot (and always the last).
    pub functionals_every: usize,
    pub entropy: EntropySearch,
    pub diameter: DiameterOptions,
    pub regularity: bool,
    pub phi: bool,
    pub neck_eps: f64,
    pub neck_window: f64,
    pub track: TrackOptions,
    /// Thinnest final necks to track backward.
    pub max_tracks: usize,
    /// Chord cutoff for the tube distance comparison.
    pub distance_cutoff: f64,
    pub ls: LsOptions,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Self {
            functionals_every: 1,
            entropy: EntropySearch::default(),
            diameter: DiameterOptions::default(),
            regularity: true,
            phi: true,
            neck_eps: 0.1,
            neck_window: NECK_WINDOW,
            track: TrackOptions::default(),
            max_tracks: 1,
            distance_cutoff: 0.5,
            ls: LsOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub control: StepControl,
    pub snapshot_every: f64,
    #[serde(default)]
    pub flow: FlowMode,
    #[serde(default)]
    pub diagnostics: Diagnostics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario, control: StepControl, snapshot_every: f64) -> Self {
        Self {
            scenario,
            control,
            snapshot_every,
            flow: FlowMode::Mcf,
            diagnostics: Diagnostics::default(),
            out_dir: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.control.validate()?;
        let d = &self.diagnostics;
        if !(self.snapshot_every > 0.0) {
            return Err(Error::InvalidParams(
                "snapshot_every must be positive".into(),
            ));
        }
        if d.functionals_every == 0 {
            return Err(Error::InvalidParams(
                "functionals_every must be at least 1".into(),
            ));
        }
        if !(d.neck_eps > 0.0
            && d.neck_window > 0.0
            && d.neck_window <= 1.0
            && d.distance_cutoff > 0.0)
        {
            return Err(Error::InvalidParams("neck thresholds out of range".into()));
        }
        if let FlowMode::Rescaled { s_max, .. } = self.flow {
            if !(s_max > 0.0) {
                return Err(Error::InvalidParams(
                    "rescaled s_max must be positive".into(),
                ));
            }
        }
        if let Generator::FromFile { path } = &self.scenario.generator {
            if !path.exists() {
                return Err(Error::InvalidParams(format!(
                    "mesh file {} does not exist",
                    path.display()
                )));
            }
        }
        Ok(())
    }
}

/// Every numeric threshold the run consumes, by name.
pub fn threshold_registry(config: &ExperimentConfig) -> BTreeMap<String, f64> {
    let c = &config.control;
    let d = &config.diagnostics;
    let mut m = BTreeMap::new();
    let mut put = |k: &str, v: f64| {
        m.insert(k.to_string(), v);
    };
    put("ALPHA_PENETRATION_EDGES", ALPHA_PENETRATION_EDGES);
    put("NECK_WINDOW", NECK_WINDOW);
    put("MIN_SUPPORT", MIN_SUPPORT as f64);
    put("DEGENERATE_ISOTROPY", DEGENERATE_ISOTROPY);
    put("CYLINDRICITY", CYLINDRICITY);
    put("TUBE_MAX_ANGLE_DEG", TUBE_MAX_ANGLE_DEG);
    put("TUBE_RADIAL_BAND", TUBE_RADIAL_BAND);
    put("GRAPH_PROXY_DEGREES", GRAPH_PROXY_DEGREES);
    put("REDUCTION_SOURCES", REDUCTION_SOURCES as f64);
    put("HYPOTHESIS_SLACK", HYPOTHESIS_SLACK);
    put("CHAIN_SLACK", CHAIN_SLACK);
    put("NECK_AXIAL_FRACTION", NECK_AXIAL_FRACTION);
    put("NECK_AXIAL_GROWTH", NECK_AXIAL_GROWTH);
    put("SNAPSHOT_GROWTH", SNAPSHOT_GROWTH);
    put("QUADRATURE_RESOLUTION", QUADRATURE_RESOLUTION);
    put("MONOTONE_SLACK", MONOTONE_SLACK);
    put("AREA_SLACK", AREA_SLACK);
    put("control.cfl", c.cfl);
    put("control.dt_max", c.dt_max);
    put("control.edge_cfl", c.edge_cfl);
    put("control.stop_max_a", c.stop_max_a);
    put("control.stop_quality", c.stop_quality);
    put("control.t_max", c.t_max);
    put("snapshot_every", config.snapshot_every);
    put("diagnostics.neck_eps", d.neck_eps);
    put("diagnostics.neck_window", d.neck_window);
    put("diagnostics.distance_cutoff", d.distance_cutoff);
    put("diagnostics.track.eps1", d.track.eps1);
    put("diagnostics.track.tol_r", d.track.tol_r);
    put("diagnostics.track.lookback", d.track.lookback);
    put("diagnostics.track.window", d.track.window);
    put("diagnostics.ls.mu", d.ls.mu);
    put("diagnostics.ls.gate_eps", d.ls.gate_eps);
    put("diagnostics.ls.gate_radius", d.ls.gate_radius);
    put("diagnostics.entropy.scale_lo", d.entropy.scale_lo);
    put("diagnostics.entropy.scale_hi", d.entropy.scale_hi);

    m
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageError {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub crate_version: String,
    pub config: ExperimentConfig,
    /// Non-finite values are written as `null`.
    pub thresholds: BTreeMap<String, Option<f64>>,
    pub stop_reason: StopReason,
    pub steps: usize,
    pub snapshots: usize,
    pub final_time: f64,
    pub partial: bool,
    pub errors: Vec<StageError>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhiSeries {
    pub x0: [f64; 3],
    pub t0: f64,
    pub t: Vec<f64>,
    pub phi: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrackDigest {
    pub t_star: f64,
    pub samples: usize,
    pub span: f64,
    pub max_residual: f64,
    pub max_eps: f64,
    pub total_tilt_deg: Option<f64>,
    pub lost: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TubeDigest {
    pub necks: usize,
    pub length: f64,
    pub closed: bool,
    pub c_observed: Option<f64>,
    pub distance_ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LsDigest {
    pub z_value: Option<f64>,
    pub gated: Option<usize>,
    pub min_k: Option<f64>,
    pub chain_lhs: Option<f64>,
    pub chain_rhs: Option<f64>,
    pub chain_holds: Option<bool>,
    pub telescoping_error: Option<f64>,
}

/// Everything [`report`] needs; stored as `bundle.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleSummary {
    pub manifest: Manifest,
    pub series: Vec<FunctionalSample>,
    pub phi: Option<PhiSeries>,
    pub final_necks: usize,
    pub tracks: Vec<TrackDigest>,
    pub tubes: Vec<TubeDigest>,
    pub ls: Option<LsDigest>,
}

pub struct ExperimentBundle {
    pub summary: BundleSummary,
    pub history: FlowHistory,
    pub necks: Vec<NeckFit>,
    pub tracks: Vec<StrongNeckTrack>,
    pub tilts: Vec<Option<TiltReport>>,
    pub tubes: Vec<Tube>,
    pub ls: Option<LsMeasurement>,
    pub chain: Option<ChainReport>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Runs the flow and every diagnostic. Module failures after the flow are
/// recorded in the manifest and the bundle is flagged partial. When
/// `out_dir` is set the bundle is also written there.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentBundle> {
    config.validate()?;
    let generated = generate(&config.scenario)?;
    let d = &config.diagnostics;
    let history = match config.flow {
        FlowMode::Mcf => run_flow(&generated.mesh, &config.control, config.snapshot_every)?,
        FlowMode::Rescaled { center, s_max } => run_rescaled(
            &generated.mesh,
            &Vec3::from(center),
            config.control.cfl,
            s_max,
            config.snapshot_every,
            config.control.stop_quality,
        )?,
    };
    let mut errors = Vec::new();
    let mut record = |stage: &str, e: Error| {
        errors.push(StageError {
            stage: stage.to_string(),
            message: e.to_string(),
        })
    };

    let n = history.len();
    let mut picks: Vec<usize> = (0..n).step_by(d.functionals_every).collect();
    if picks.last() != Some(&(n - 1)) {
        picks.push(n - 1);
    }
    let opts = SeriesOptions {
        entropy: d.entropy,
        diameter: d.diameter,
        regularity: d.regularity,
    };
    let mut series = Vec::new();
    for &k in &picks {
        match functional_sample(&history, k, &opts) {
            Ok(s) => series.push(s),
            Err(e) => record(&format!("functionals[{k}]"), e),
        }
    }

    let phi = if d.phi && config.flow == FlowMode::Mcf {
        let last = history.last();
        let (vmax, amax) =
            last.curv
                .norm_a
                .iter()
                .copied()
                .enumerate()
                .fold(
                    (0, 0.0),
                    |best, (v, a)| if a > best.1 { (v, a) } else { best },
                );
        // parabolic estimate of the singular time: r² = 2(t* − t), |A| = 1/r
        let x0 = last.mesh.vertices()[vmax];
        let t0 = last.t + 0.5 / (amax * amax).max(1e-12);
        let mut ts = Vec::new();
        let mut vals = Vec::new();
        for s in &history.states {
            match huisken_phi(&history, &x0, t0, s.t) {
                Ok(v) => {
                    ts.push(s.t);
                    vals.push(v);
                }
                Err(e) => record("phi", e),
            }
        }
        Some(PhiSeries {
            x0: [x0.x, x0.y, x0.z],
            t0,
            t: ts,
            phi: vals,
        })
    } else {
        None
    };

    let last = history.last();
    let necks = match detect_necks(&last.mesh, &last.curv, d.neck_eps, d.neck_window) {
        Ok(v) => v,
        Err(e) => {
            record("necks", e);
            Vec::new()
        }
    };

    let mut tracks = Vec::new();
    let mut tilts = Vec::new();
    let mut track_digests = Vec::new();
    if config.flow == FlowMode::Mcf && d.max_tracks > 0 {
        let mut order: Vec<&NeckFit> = necks.iter().collect();
        order.sort_by(|a, b| a.radius.total_cmp(&b.radius));
        for neck in order.into_iter().take(d.max_tracks) {
            match track_strong_neck(&history, neck, &d.track) {
                Ok(track) => {
                    let tilt = measure_tilt(&track).ok();
                    track_digests.push(TrackDigest {
                        t_star: track.t_star,
                        samples: track.samples.len(),
                        span: track.span(),
                        max_residual: track.max_residual,
                        max_eps: track.max_eps_over_track,
                        total_tilt_deg: tilt.as_ref().map(|t| t.total_tilt_deg),
                        lost: track
                            .lost
                            .as_ref()
                            .map(|l| format!("t = {}: {}", l.t, l.reason)),
                    });
                    tracks.push(track);
                    tilts.push(tilt);
                }
                Err(e) => record("track", e),
            }
        }
    }

    let tubes = assemble_tubes(&last.mesh, &necks);
    let tube_digests = tubes
        .iter()
        .map(|t| TubeDigest {
            necks: t.necks.len(),
            length: t.length,
            closed: t.closed,
            c_observed: tube_integral_estimate(&last.mesh, &last.curv, t)
                .ok()
                .map(|i| i.c_observed),
            distance_ratio: tube_distance_comparison(t, d.distance_cutoff)
                .ok()
                .map(|c| c.max_ratio),
        })
        .collect();

    let (ls, chain) = if let FlowMode::Rescaled { .. } = config.flow {
        let ls = measure_ls_inequality(&history, &d.ls)
            .map_err(|e| record("ls", e))
            .ok();
        let chain = tilt_sum_chain(
            &history,
            series.first().map(|s| s.entropy).filter(|l| l.is_finite()),
        )
        .map_err(|e| record("chain", e))
        .ok();
        (ls, chain)
    } else {
        (None, None)
    };
    let ls_digest = (ls.is_some() || chain.is_some()).then(|| LsDigest {
        z_value: ls.as_ref().map(|m| m.z_value),
        gated: ls.as_ref().map(|m| m.gated),
        min_k: ls.as_ref().and_then(|m| finite(m.min_k)),
        chain_lhs: chain.as_ref().map(|c| c.lhs),
        chain_rhs: chain.as_ref().map(|c| c.rhs),
        chain_holds: chain.as_ref().map(|c| c.holds),
        telescoping_error: chain.as_ref().map(|c| c.telescoping_error),
    });

    let manifest = Manifest {
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        // the output location is not part of the experiment
        config: ExperimentConfig {
            out_dir: None,
            ..config.clone()
        },
        thresholds: threshold_registry(config)
            .into_iter()
            .map(|(k, v)| (k, finite(v)))
            .collect(),
        stop_reason: history.stop_reason,
        steps: history.steps,
        snapshots: history.len(),
        final_time: history.last().t,
        partial: history.stop_reason == StopReason::Quality || !errors.is_empty(),
        errors,
    };
    let bundle = ExperimentBundle {
        summary: BundleSummary {
            manifest,
            series,
            phi,
            final_necks: necks.len(),
            tracks: track_digests,
            tubes: tube_digests,
            ls: ls_digest,
        },
        history,
        necks,
        tracks,
        tilts,
        tubes,
        ls,
        chain,
    };
    if let Some(dir) = &config.out_dir {
        write_bundle(&bundle, dir)?;
    }
    Ok(bundle)
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// `snapshot,time,area,maxH,maxA,stop_reason`; only the last row carries
/// the stop reason.
pub fn history_index_csv(history: &FlowHistory) -> String {
    let mut out = String::from("snapshot,time,area,maxH,maxA,stop_reason\n");
    for (k, s) in history.states.iter().enumerate() {
        let reason = if k + 1 == history.len() {
            history.stop_reason.as_str()
        } else {
            ""
        };
        let _ = writeln!(
            out,
            "{k},{:?},{:?},{:?},{:?},{reason}",
            s.t,
            s.mesh.area(),
            s.curv.max_mean(),
            s.curv.max_norm_a()
        );
    }
    out
}

fn snapshot_name(k: usize) -> String {
    format!("snap_{k:04}.off")
}

pub fn write_history(history: &FlowHistory, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (k, s) in history.states.iter().enumerate() {
        write_off(&s.mesh, &dir.join(snapshot_name(k)))?;
    }
    fs::write(dir.join("index.csv"), history_index_csv(history))?;
    Ok(())
}

/// Reads a `history/` directory written by [`write_history`].
pub fn load_history(dir: &Path) -> Result<FlowHistory> {
    let index = fs::read_to_string(dir.join("index.csv"))?;
    let mut states = Vec::new();
    let mut stop = StopReason::TMax;
    for (line_no, line) in index.lines().enumerate().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let bad = || Error::Parse(format!("index.csv line {}: {line}", line_no + 1));
        if cols.len() < 6 {
            return Err(bad());
        }
        let k: usize = cols[0].parse().map_err(|_| bad())?;
        let t: f64 = cols[1].parse().map_err(|_| bad())?;
        stop = match cols[5] {
            "" => stop,
            "maxA" => StopReason::MaxA,
            "quality" => StopReason::Quality,
            "t_max" => StopReason::TMax,
            _ => return Err(bad()),
        };
        let mesh = read_mesh(&dir.join(snapshot_name(k)))?;
        let mesh = match states.first() {
            Some(first) => {
                let first: &FlowState = first;
                first.mesh.with_positions(mesh.vertices().to_vec())?
            }
            None => mesh,
        };
        states.push(FlowState::new(mesh, t)?);
    }
    FlowHistory::from_states(states, stop)
}

pub fn phi_csv(phi: &PhiSeries) -> String {
    let mut out = String::from("t,phi\n");
    for (t, p) in phi.t.iter().zip(&phi.phi) {
        let _ = writeln!(out, "{t:?},{p:?}");
    }
    out
}

/// One SVG per functional quantity against time.
pub fn series_plots(series: &[FunctionalSample]) -> Vec<(String, String)> {
    let t: Vec<f64> = series.iter().map(|s| s.t).collect();
    let columns: [(&str, fn(&FunctionalSample) -> f64); 9] = [
        ("area", |s| s.area),
        ("F_origin", |s| s.f_origin),
        ("entropy", |s| s.entropy),
        ("diam", |s| s.diam),
        ("int_H_1", |s| s.int_h_1),
        ("int_A_1", |s| s.int_a_1),
        ("maxH", |s| s.max_h),
        ("maxA", |s| s.max_a),
        ("int_rinv", |s| s.int_rinv),
    ];
    columns
        .iter()
        .map(|(name, f)| {
            let y: Vec<f64> = series.iter().map(f).collect();
            (format!("{name}.svg"), line_plot(name, "t", name, &t, &y))
        })
        .collect()
}

pub fn write_bundle(bundle: &ExperimentBundle, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let s = &bundle.summary;
    fs::write(dir.join("manifest.json"), to_json(&s.manifest)?)?;
    fs::write(dir.join("bundle.json"), to_json(s)?)?;
    write_history(&bundle.history, &dir.join("history"))?;
    fs::write(dir.join("series.csv"), series_csv(&s.series))?;
    if let Some(phi) = &s.phi {
        fs::write(dir.join("phi.csv"), phi_csv(phi))?;
    }
    fs::write(dir.join("necks.json"), to_json(&bundle.necks)?)?;
    let tracks: Vec<_> = bundle.tracks.iter().zip(&bundle.tilts).collect();
    fs::write(dir.join("tracks.json"), to_json(&tracks)?)?;
    fs::write(dir.join("tubes.json"), to_json(&bundle.tubes)?)?;
    if bundle.ls.is_some() || bundle.chain.is_some() {
        fs::write(dir.join("ls.json"), to_json(&(&bundle.ls, &bundle.chain))?)?;
    }
    let plots = dir.join("plots");
    fs::create_dir_all(&plots)?;
    for (name, svg) in series_plots(&s.series) {
        fs::write(plots.join(name), svg)?;
    }
    Ok(())
}

pub fn load_summary(dir: &Path) -> Result<BundleSummary> {
    Ok(serde_json::from_str(&fs::read_to_string(
        dir.join("bundle.json"),
    )?)?)
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Pin {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

/// Per-scenario regression pins keyed by report statistic name.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Expectations {
    pub version: u32,
    pub scenarios: BTreeMap<String, BTreeMap<String, Pin>>,
}

impl Expectations {
    pub fn standard() -> Self {
        serde_json::from_str(STANDARD_EXPECTATIONS).expect("bundled expectations parse")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Monotonicity {
    pub quantity: String,
    pub slack: f64,
    /// Largest increase between consecutive samples (relative for area).
    pub max_increase: f64,
    pub violations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub statistic: String,
    pub value: Option<f64>,
    pub pin: Pin,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub scenario: String,
    pub stop_reason: StopReason,
    pub final_time: f64,
    pub snapshots: usize,
    pub partial: bool,
    pub statistics: BTreeMap<String, Option<f64>>,
    pub monotonicity: Vec<Monotonicity>,
    pub verdicts: Vec<Verdict>,
    /// Monotonicity violations; these alone decide the exit code.
    pub hard_failures: usize,
    pub errors: Vec<StageError>,
}

fn monotone(quantity: &str, values: &[f64], slack: f64, relative: bool) -> Monotonicity {
    let vals: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let mut max_increase = f64::NEG_INFINITY;
    let mut violations = 0;
    for w in vals.windows(2) {
        let inc = if relative {
            (w[1] - w[0]) / w[0].abs().max(f64::MIN_POSITIVE)
        } else {
            w[1] - w[0]
        };
        max_increase = max_increase.max(inc);
        if inc > slack {
            violations += 1;
        }
    }
    Monotonicity {
        quantity: quantity.to_string(),
        slack,
        max_increase: max_increase.max(0.0),
        violations,
    }
}

fn variation(values: &[f64]) -> Option<f64> {
    let first = *values.first()?;
    values
        .iter()
        .filter(|v| v.is_finite())
        .map(|v| (v / first - 1.0).abs())
        .reduce(f64::max)
}

fn max_finite(values: impl Iterator<Item = f64>) -> Option<f64> {
    values.filter(|v| v.is_finite()).reduce(f64::max)
}

/// Summary statistics, monotonicity suites and pinned verdicts.
pub fn report(summary: &BundleSummary, expectations: &Expectations) -> Report {
    let s = &summary.series;
    let col = |f: fn(&FunctionalSample) -> f64| s.iter().map(f).collect::<Vec<f64>>();
    let (diam, int_a, int_h, max_a, max_h, ent) = (
        col(|x| x.diam),
        col(|x| x.int_a_1),
        col(|x| x.int_h_1),
        col(|x| x.max_a),
        col(|x| x.max_h),
        col(|x| x.entropy),
    );
    let growth = |v: &[f64]| Some(max_finite(v.iter().copied())? / v.first()?);
    let mut st: BTreeMap<String, Option<f64>> = BTreeMap::new();
    st.insert("max_diam".into(), max_finite(diam.iter().copied()));
    st.insert("diam_variation".into(), variation(&diam));
    st.insert("max_int_A".into(), max_finite(int_a.iter().copied()));
    st.insert("int_A_variation".into(), variation(&int_a));
    st.insert("max_int_H".into(), max_finite(int_h.iter().copied()));
    st.insert("int_H_deviation".into(), variation(&int_h));
    st.insert(
        "max_int_rinv".into(),
        max_finite(s.iter().map(|x| x.int_rinv)),
    );
    st.insert("max_A_growth".into(), growth(&max_a));
    st.insert("max_H_growth".into(), growth(&max_h));
    let finite_ent: Vec<f64> = ent.iter().copied().filter(|v| v.is_finite()).collect();
    st.insert(
        "entropy_drop".into(),
        finite_ent
            .first()
            .zip(finite_ent.last())
            .map(|(a, b)| a - b),
    );
    st.insert(
        "topping_max_ratio".into(),
        max_finite(s.iter().map(|x| x.diam / x.int_h_1)),
    );
    st.insert("final_necks".into(), Some(summary.final_necks as f64));
    st.insert("tracks".into(), Some(summary.tracks.len() as f64));
    if let Some(t) = summary.tracks.first() {
        st.insert("track_samples".into(), Some(t.samples as f64));
        st.insert("track_max_residual".into(), Some(t.max_residual));
        st.insert("total_tilt_deg".into(), t.total_tilt_deg);
    }
    st.insert("tubes".into(), Some(summary.tubes.len() as f64));
    if let Some(ls) = &summary.ls {
        st.insert("ls_min_k".into(), ls.min_k);
        st.insert("ls_gated".into(), ls.gated.map(|g| g as f64));
        st.insert(
            "chain_ratio".into(),
            ls.chain_lhs
                .zip(ls.chain_rhs)
                .map(|(l, r)| if r > 0.0 { l / r } else { f64::NAN })
                .and_then(finite),
        );
        st.insert("telescoping_error".into(), ls.telescoping_error);
    }

    let rescaled = matches!(summary.manifest.config.flow, FlowMode::Rescaled { .. });
    let mut mono = vec![monotone("entropy", &ent, MONOTONE_SLACK, false)];
    if rescaled {
        mono.push(monotone(
            "F_origin",
            &col(|x| x.f_origin),
            MONOTONE_SLACK,
            false,
        ));
    } else {
        mono.push(monotone("area", &col(|x| x.area), AREA_SLACK, true));
    }
    if let Some(phi) = &summary.phi {
        mono.push(monotone("phi", &phi.phi, MONOTONE_SLACK, false));
    }
    let hard_failures = mono.iter().map(|m| m.violations).sum();

    let name = &summary.manifest.config.scenario.name;
    let verdicts = expectations
        .scenarios
        .get(name)
        .map(|pins| {
            pins.iter()
                .map(|(stat, pin)| {
                    let value = st.get(stat).copied().flatten();
                    let pass = value.is_some_and(|v| {
                        pin.min.map_or(true, |m| v >= m) && pin.max.map_or(true, |m| v <= m)
                    });
                    Verdict {
                        statistic: stat.clone(),
                        value,
                        pin: *pin,
                        pass,
                    }
                })
                .collect()
        })
        .unwrap_or_default();

    Report {
        scenario: name.clone(),
        stop_reason: summary.manifest.stop_reason,
        final_time: summary.manifest.final_time,
        snapshots: summary.manifest.snapshots,
        partial: summary.manifest.partial,
        statistics: st,
        monotonicity: mono,
        verdicts,
        hard_failures,
        errors: summary.manifest.errors.clone(),
    }
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        i32::from(self.hard_failures > 0)
    }

    pub fn verdicts_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn text(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.6}"));
        let mut out = String::new();
        let _ = writeln!(
            out,
            "scenario {}: stop {} at t = {:.6} after {} snapshots{}",
            self.scenario,
            self.stop_reason.as_str(),
            self.final_time,
            self.snapshots,
            if self.partial { " (partial)" } else { "" }
        );
        for (k, v) in &self.statistics {
            let _ = writeln!(out, "  {k:<20} {}", fmt(*v));
        }
        let _ = writeln!(out, "monotonicity:");
        for m in &self.monotonicity {
            let _ = writeln!(
                out,
                "  {:<20} max increase {:.3e} (slack {:.1e}) violations {} {}",
                m.quantity,
                m.max_increase,
                m.slack,
                m.violations,
                if m.violations == 0 { "PASS" } else { "FAIL" }
            );
        }
        if !self.verdicts.is_empty() {
            let _ = writeln!(out, "verdicts:");
        }
        for v in &self.verdicts {
            let bound = match (v.pin.min, v.pin.max) {
                (Some(a), Some(b)) => format!("in [{a}, {b}]"),
                (Some(a), None) => format!(">= {a}"),
                (None, Some(b)) => format!("<= {b}"),
                (None, None) => "unpinned".to_string(),
            };
            let _ = writeln!(
                out,
                "  {:<20} {} {bound} {}",
                v.statistic,
                fmt(v.value),
                if v.pass { "PASS" } else { "FAIL" }
            );
        }
        for e in &self.errors {
            let _ = writeln!(out, "error in {}: {}", e.stage, e.message);
        }
        out
    }
}

/// The six standard scenarios with their run settings.
pub fn standard_suite() -> Vec<ExperimentConfig> {
    let base = StepControl::default();
    let mut out = Vec::new();

    let sphere = Scenario::new(
        "sphere",
        Generator::Sphere {
            radius: 1.0,
            level: 4,
            center: [0.0; 3],
        },
    );
    out.push(ExperimentConfig::new(
        sphere,
        StepControl { t_max: 0.2, ..base },
        0.01,
    ));

    let cylinder = Scenario::new(
        "perturbed_cylinder",
        Generator::CappedCylinder {
            radius: 2f64.sqrt(),
            length: 16.0,
            around: 48,
            ripple: 0.02,
            ripple_wavelength: 2.0,
        },
    )
    .with_seed(1);
    let mut c = ExperimentConfig::new(cylinder, base, 0.05);
    // normal-only motion stretches the cap junction; past s ≈ 0.6 the caps
    // lose resolution
    c.flow = FlowMode::Rescaled {
        center: [0.0, 0.0, 8.0],
        s_max: 0.5,
    };
    c.diagnostics.regularity = false;
    out.push(c);

    let dumbbell = Scenario::new(
        "dumbbell",
        Generator::Dumbbell {
            ball_radius: 1.0,
            neck_radius: 0.15,
            separation: 3.0,
            around_neck: 48,
            max_edge: 0.1,
        },
    );
    let ctrl = StepControl {
        stop_max_a: 180.0,
        stop_quality: 0.01,
        edge_cfl: 0.4,
        ..base
    };
    let mut c = ExperimentConfig::new(dumbbell, ctrl, 1e-3);
    c.diagnostics.functionals_every = 2;
    // a surface neckpinch approaches the cylinder only logarithmically, so
    // the waist is a loose neck at desk resolution
    c.diagnostics.neck_eps = 0.45;
    c.diagnostics.neck_window = 0.7;
    c.diagnostics.track = TrackOptions {
        eps1: 0.45,
        window: 0.7,
        ..TrackOptions::default()
    };
    out.push(c);

    let torus = Scenario::new(
        "thin_torus",
        Generator::Torus {
            major: 1.0,
            minor: 0.05,
            around: 24,
        },
    );
    let mut c = ExperimentConfig::new(
        torus,
        StepControl {
            stop_max_a: 300.0,
            ..base
        },
        1e-4,
    );
    c.diagnostics.neck_eps = 0.2;
    c.diagnostics.neck_window = 0.7;
    out.push(c);

    let elbow = Scenario::new(
        "elbow",
        Generator::BentTube {
            radius: 0.2,
            bend_radius: 1.0,
            leg_length: 1.0,
            angle_deg: 90.0,
            around: 24,
        },
    );
    let mut c = ExperimentConfig::new(
        elbow,
        StepControl {
            t_max: 0.01,
            ..base
        },
        1e-3,
    );
    c.diagnostics.neck_eps = 0.2;
    c.diagnostics.neck_window = 0.7;
    // nothing pinches before t_max, so there is no strong neck to follow
    c.diagnostics.max_tracks = 0;
    out.push(c);

    let wiggly = Scenario::new(
        "wiggly_tube",
        Generator::WigglyTube {
            radius: 0.2,
            length: 4.0,
            amplitude: 0.08,
            wavelength: 2.0,
            octaves: 3,
            decay: 0.4,
            around: 24,
        },
    )
    .with_seed(7);
    let mut c = ExperimentConfig::new(
        wiggly,
        StepControl {
            t_max: 0.01,
            ..base
        },
        1e-3,
    );
    c.diagnostics.neck_eps = 0.2;
    c.diagnostics.neck_window = 0.7;
    c.diagnostics.max_tracks = 0;
    out.push(c);
    out
}

pub fn standard_scenario(name: &str) -> Option<ExperimentConfig> {
    standard_suite()
        .into_iter()
        .find(|c| c.scenario.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_counts_increases_beyond_slack() {
        let m = monotone("x", &[1.0, 0.9, 0.904, 0.95, f64::NAN, 0.9], 5e-3, false);
        assert_eq!(m.violations, 1);
        assert!((m.max_increase - 0.046).abs() < 1e-12);
        let a = monotone("area", &[1.0, 1.0 + 5e-7, 1.0], 1e-6, true);
        assert_eq!(a.violations, 0);
    }

    #[test]
    fn variation_is_relative_to_first() {
        assert_eq!(variation(&[2.0, 2.5, 1.0]), Some(0.5));
        assert_eq!(variation(&[]), None);
    }

    #[test]
    fn standard_suite_is_valid_and_pinned() {
        let suite = standard_suite();
        assert_eq!(suite.len(), 6);
        let exp = Expectations::standard();
        for c in &suite {
            c.validate().unwrap();
            assert!(
                exp.scenarios.contains_key(&c.scenario.name),
                "{} unpinned",
                c.scenario.name
            );
        }
    }

    #[test]
    fn config_json_round_trip() {
        for c in standard_suite() {
            let text = serde_json::to_string(&c).unwrap();
            let back = ExperimentConfig::from_json(&text).unwrap();
            assert_eq!(serde_json::to_string(&back).unwrap(), text);
        }
    }
}
