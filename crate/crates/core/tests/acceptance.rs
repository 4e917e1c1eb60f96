//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs the six-scenario standard suite once and reuses it.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use common::*;
use mcflab::experiment::{
    report, run_experiment, standard_suite, Expectations, ExperimentBundle, Report,
};
use mcflab::flow::{run_flow, StepControl};
use mcflab::functionals::gaussian_area;
use mcflab::lojasiewicz::{
    check_hypotheses, decay_bound_check, empirical_delta, sqrt_increment_sum, verify_certificate,
    DeltaOptions, Family, FamilyManifest, LojSequence,
};
use mcflab::mesh::estimate_curvature;
use mcflab::neck::{
    ball_coverage, detect_necks, fit_neck_at, measure_tilt, track_strong_neck,
    tube_distance_comparison, tube_integral_estimate, TrackOptions, NECK_WINDOW,
};
use mcflab::Vec3;

struct Run {
    bundle: ExperimentBundle,
    report: Report,
    elapsed: Duration,
}

fn criterion(n: usize, name: &str, result: Result<String, String>, failed: &mut usize) {
    match result {
        Ok(detail) => println!("criterion {n} PASS {name}: {detail}"),
        Err(detail) => {
            *failed += 1;
            println!("criterion {n} FAIL {name}: {detail}");
        }
    }
}

fn check(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn shrinking_sphere() -> Result<String, String> {
    let start = Instant::now();
    let ctrl = StepControl {
        dt_max: 1.0,
        stop_max_a: 1e9,
        t_max: 0.15,
        ..StepControl::default()
    };
    let h = run_flow(&sphere(1.0, 4), &ctrl, 0.01).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for st in &h.states {
        let exact = (1.0 - 4.0 * st.t).sqrt();
        for p in st.mesh.vertices() {
            worst = worst.max(rel(p.norm(), exact));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst < 0.01 && secs < 60.0 && (h.last().t - 0.15).abs() < 1e-12,
        format!(
            "max |R/√(1−4t) − 1| = {worst:.2e} to t = {:.3} in {secs:.1} s",
            h.last().t
        ),
    )
}

fn self_shrinkers() -> Result<String, String> {
    let (s, _) = max_rescaled_motion(&sphere(2.0, 4), |_| true, 100);
    let cyl = capped_cylinder(2f64.sqrt(), 16.0, 48)
        .mesh
        .transformed(|p| p - Vec3::new(0.0, 0.0, 8.0))
        .unwrap();
    // the caps are not part of the shrinker; judge the middle of the barrel
    let (c, _) = max_rescaled_motion(&cyl, |p| p.z.abs() < 4.0, 100);
    check(
        s < 2.0 && c < 2.0,
        format!("max step motion / (edge·ds): sphere {s:.3}, cylinder {c:.3} (limit 2)"),
    )
}

fn gaussian_areas() -> Result<String, String> {
    let fs = gaussian_area(&sphere(2.0, 4), &Vec3::zeros(), 1.0);
    let fs_oracle = sphere_f_oracle(2.0);
    let cyl = capped_cylinder(2f64.sqrt(), 16.0, 48).mesh;
    let fc = gaussian_area(&cyl, &Vec3::new(0.0, 0.0, 8.0), 1.0);
    let fc_oracle = cylinder_f_oracle(2f64.sqrt(), 8.0);
    let (es, ec) = (rel(fs, fs_oracle), rel(fc, fc_oracle));
    check(
        es < 0.01 && ec < 0.01 && rel(fs_oracle, 4.0 / 1f64.exp()) < 1e-9,
        format!("F(S²_2) = {fs:.5} (oracle {fs_oracle:.5}, err {es:.1e}); F(cyl) = {fc:.5} (oracle {fc_oracle:.5}, err {ec:.1e})"),
    )
}

fn monotonicity(runs: &[Run]) -> Result<String, String> {
    let mut ok = true;
    let mut parts = Vec::new();
    for r in runs {
        for m in &r.report.monotonicity {
            if m.quantity == "area" {
                continue;
            }
            ok &= m.violations == 0 && m.slack <= 5e-3;
            parts.push(format!(
                "{}/{} {:.1e}",
                r.report.scenario, m.quantity, m.max_increase
            ));
        }
        ok &= !r.report.partial;
    }
    ok &= runs.len() == 6;
    check(
        ok,
        format!("{} runs, worst increases: {}", runs.len(), parts.join(", ")),
    )
}

fn find<'a>(runs: &'a [Run], name: &str) -> Result<&'a Run, String> {
    runs.iter()
        .find(|r| r.report.scenario == name)
        .ok_or(format!("no {name} run"))
}

fn stat(r: &Run, key: &str) -> f64 {
    r.report
        .statistics
        .get(key)
        .copied()
        .flatten()
        .unwrap_or(f64::NAN)
}

fn boundedness(runs: &[Run]) -> Result<String, String> {
    let d = find(runs, "dumbbell")?;
    let t = find(runs, "thin_torus")?;
    let (dv, av, ag) = (
        stat(d, "diam_variation"),
        stat(d, "int_A_variation"),
        stat(d, "max_A_growth"),
    );
    let target = 4.0 * PI * PI;
    let h_dev = t
        .bundle
        .summary
        .series
        .iter()
        .map(|s| rel(s.int_h_1, target))
        .fold(0.0, f64::max);
    let hg = stat(t, "max_H_growth");
    let limit = Duration::from_secs(600);
    check(
        dv < 0.3 && av < 0.5 && ag >= 20.0 && h_dev <= 0.25 && hg >= 10.0 && d.elapsed < limit && t.elapsed < limit,
        format!(
            "dumbbell: diam var {dv:.3}, ∫|A| var {av:.3}, max|A| ×{ag:.1} in {:.0} s; torus: ∫H off 4π² by {h_dev:.3}, maxH ×{hg:.1} in {:.0} s",
            d.elapsed.as_secs_f64(),
            t.elapsed.as_secs_f64()
        ),
    )
}

fn neck_machinery(runs: &[Run]) -> Result<String, String> {
    let s = sphere(1.0, 4);
    let sc = estimate_curvature(&s).unwrap();
    let false_necks = detect_necks(&s, &sc, 0.1, NECK_WINDOW)
        .map_err(|e| e.to_string())?
        .len();

    let g = capped_cylinder(0.2, 4.0, 24);
    let gc = estimate_curvature(&g.mesh).unwrap();
    let necks = detect_necks(&g.mesh, &gc, 0.1, NECK_WINDOW).map_err(|e| e.to_string())?;
    let coverage = ball_coverage(&g.mesh, &necks, &g.truth.barrel);

    let d = find(runs, "dumbbell")?;
    let track = d
        .bundle
        .summary
        .tracks
        .first()
        .ok_or("dumbbell produced no track")?;

    let tilt_of = |deg: f64| -> Result<f64, String> {
        let h = shrinking_cylinder(50, 0.008, deg);
        let last = h.last();
        let seed = (0..last.mesh.n_vertices())
            .min_by(|&a, &b| {
                let q = Vec3::new(0.5, 0.0, 0.0);
                (last.mesh.vertices()[a] - q)
                    .norm()
                    .total_cmp(&(last.mesh.vertices()[b] - q).norm())
            })
            .unwrap();
        let neck = fit_neck_at(&last.mesh, &last.curv, seed, 0.5, NECK_WINDOW)
            .map_err(|e| e.to_string())?;
        let tr =
            track_strong_neck(&h, &neck, &TrackOptions::default()).map_err(|e| e.to_string())?;
        if tr.samples.len() != h.len() {
            return Err(format!(
                "synthetic track kept {} of {} snapshots",
                tr.samples.len(),
                h.len()
            ));
        }
        Ok(measure_tilt(&tr).map_err(|e| e.to_string())?.total_tilt_deg)
    };
    let (straight, rotated) = (tilt_of(0.0)?, tilt_of(0.2)?);
    check(
        false_necks == 0
            && coverage >= 0.95
            && track.samples >= 2
            && track.max_residual <= 0.1
            && straight < 1.0
            && (rotated - 10.0).abs() <= 1.0,
        format!(
            "sphere necks {false_necks}, barrel coverage {coverage:.3}, dumbbell track {} samples residual {:.4}, tilt straight {straight:.3}° rotated {rotated:.3}°",
            track.samples, track.max_residual
        ),
    )
}

fn tube_estimates() -> Result<String, String> {
    let c_of = |r: f64| -> Result<f64, String> {
        let g = capped_cylinder(r, 6.0, 32);
        let (c, tubes) = tubes_of(&g.mesh, 0.1, NECK_WINDOW);
        let t = tubes
            .iter()
            .max_by(|a, b| a.length.total_cmp(&b.length))
            .ok_or("no tube")?;
        Ok(tube_integral_estimate(&g.mesh, &c, t)
            .map_err(|e| e.to_string())?
            .c_observed)
    };
    let (c1, c2) = (c_of(0.4)?, c_of(0.2)?);
    // bent tubes are read with the curved-tube neck settings
    let ratio = |mesh: &mcflab::TriMesh| -> Result<f64, String> {
        let (_, tubes) = tubes_of(mesh, 0.2, 0.7);
        let t = tubes
            .iter()
            .max_by_key(|t| t.necks.len())
            .ok_or("no tube")?;
        Ok(tube_distance_comparison(t, 0.5)
            .map_err(|e| e.to_string())?
            .max_ratio)
    };
    let oracle = arc_chord(1.0, 0.5);
    let (re, rt) = (
        ratio(&elbow(0.1, 1.0, 16).mesh)?,
        ratio(&torus(1.0, 0.1, 16).mesh)?,
    );
    check(
        rel(c1, 2.0 * PI) <= 0.03 && rel(c2, 2.0 * PI) <= 0.03 && rel(c2, c1) <= 0.03 && re <= 1.05 * oracle && rt <= 1.05 * oracle,
        format!("c_observed {c1:.4} (r 0.4), {c2:.4} (r 0.2) vs 2π; distance ratio elbow {re:.4}, torus {rt:.4} vs arc/chord {oracle:.4}"),
    )
}

fn lojasiewicz_suite() -> Result<String, String> {
    let start = Instant::now();
    let e = |e: mcflab::Error| e.to_string();
    let pl: Vec<f64> = (0..201).map(|t| (t as f64 + 10.0).powf(-2.0)).collect();
    let flags =
        check_hypotheses(&LojSequence::new(pl.clone(), 1e3, 0.5, 1.0).map_err(e)?).map_err(e)?;
    let sum_err = rel(sqrt_increment_sum(&pl), oracle_sum(&pl));

    let (k, mu) = (10.0, 0.5);
    let m = FamilyManifest::new(Family::PowerLaw, k, mu, 1.0, 200).map_err(e)?;
    let mut c: f64 = 0.0;
    for i in 0..200 {
        for (t, f) in m.shape(1, i).into_iter().enumerate().skip(1) {
            c = c.max(f * (t as f64).powf(1.0 / mu));
        }
    }
    let mut decay_fail = 0;
    for i in 0..200 {
        if !decay_bound_check(&LojSequence::new(m.shape(2, i), k, mu, 1.0).map_err(e)?, c)
            .map_err(e)?
            .holds
        {
            decay_fail += 1;
        }
    }

    let mut cert_fail = 0;
    let mut deltas = Vec::new();
    for family in [Family::PowerLaw, Family::Geometric, Family::RandomGeometric] {
        let cert = empirical_delta(k, mu, 0.1, family, &DeltaOptions::default()).map_err(e)?;
        let v = verify_certificate(&cert, 0.5).map_err(e)?;
        cert_fail += v.failures + (v.checked != 200) as usize;
        deltas.push(format!("{} {:.3e}", family.as_str(), cert.delta_hat));
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        flags.all() && sum_err <= 1e-12 && decay_fail < 10 && cert_fail == 0 && secs < 120.0,
        format!(
            "hypotheses {}, sum err {sum_err:.1e}, decay failures {decay_fail}/200, δ̂ [{}], half-amplitude failures {cert_fail}, {secs:.1} s",
            flags.all(),
            deltas.join(", ")
        ),
    )
}

fn ls_measurement(runs: &[Run]) -> Result<String, String> {
    let p = find(runs, "perturbed_cylinder")?;
    let ls = p.bundle.summary.ls.as_ref().ok_or("no LS digest")?;
    let min_k = ls.min_k.unwrap_or(f64::INFINITY);
    let gated = ls.gated.unwrap_or(0);
    let (lhs, rhs) = (
        ls.chain_lhs.unwrap_or(f64::NAN),
        ls.chain_rhs.unwrap_or(f64::NAN),
    );
    let tele = ls.telescoping_error.unwrap_or(f64::INFINITY);
    check(
        min_k.is_finite() && gated >= 3 && lhs <= 1.05 * rhs && tele <= 1e-12,
        format!("min K {min_k:.4}, gated snapshots {gated}, chain {lhs:.4e} ≤ 1.05·{rhs:.4e}, telescoping error {tele:.1e}"),
    )
}

fn main() {
    let mut failed = 0;
    criterion(1, "shrinking sphere", shrinking_sphere(), &mut failed);
    criterion(
        2,
        "self-shrinker fixed points",
        self_shrinkers(),
        &mut failed,
    );
    criterion(3, "Gaussian areas", gaussian_areas(), &mut failed);

    let exp = Expectations::standard();
    let mut runs = Vec::new();
    let mut suite_error = None;
    for cfg in standard_suite() {
        let start = Instant::now();
        match run_experiment(&cfg) {
            Ok(bundle) => {
                let report = report(&bundle.summary, &exp);
                runs.push(Run {
                    bundle,
                    report,
                    elapsed: start.elapsed(),
                });
            }
            Err(e) => suite_error = Some(format!("{}: {e}", cfg.scenario.name)),
        }
    }
    let suite = |f: fn(&[Run]) -> Result<String, String>| match &suite_error {
        Some(e) => Err(format!("standard suite failed: {e}")),
        None => f(&runs),
    };
    criterion(4, "monotonicity suites", suite(monotonicity), &mut failed);
    criterion(5, "boundedness verdicts", suite(boundedness), &mut failed);
    criterion(6, "neck machinery", suite(neck_machinery), &mut failed);
    criterion(7, "tube estimates", tube_estimates(), &mut failed);
    criterion(
        8,
        "discrete Lojasiewicz suite",
        lojasiewicz_suite(),
        &mut failed,
    );
    criterion(9, "LS measurement", suite(ls_measurement), &mut failed);

    println!("acceptance: {} of 9 criteria pass", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
