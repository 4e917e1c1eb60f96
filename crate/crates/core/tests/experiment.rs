use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use mcflab::experiment::{
    load_history, load_summary, report, run_experiment, standard_suite, threshold_registry,
    Expectations, ExperimentConfig, Pin,
};
use mcflab::flow::StepControl;
use mcflab::scenario::{Generator, Scenario};
use mcflab::Error;

fn small_sphere() -> ExperimentConfig {
    let ctrl = StepControl {
        t_max: 0.02,
        ..StepControl::default()
    };
    ExperimentConfig::new(
        Scenario::new(
            "small",
            Generator::Sphere {
                radius: 1.0,
                level: 2,
                center: [0.0; 3],
            },
        ),
        ctrl,
        0.01,
    )
}

fn files(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(
                    p.strip_prefix(dir).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                );
            }
        }
    }
    out
}

#[test]
fn bundles_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let mut a = small_sphere();
    a.out_dir = Some(tmp.path().join("a"));
    let mut b = small_sphere();
    b.out_dir = Some(tmp.path().join("b"));
    let ba = run_experiment(&a).unwrap();
    run_experiment(&b).unwrap();
    let (fa, fb) = (files(&tmp.path().join("a")), files(&tmp.path().join("b")));
    for name in [
        "manifest.json",
        "bundle.json",
        "series.csv",
        "history/index.csv",
    ] {
        assert!(fa.contains_key(Path::new(name)), "missing {name}");
    }
    assert_eq!(fa, fb);

    let summary = load_summary(&tmp.path().join("a")).unwrap();
    let exp = Expectations::standard();
    assert_eq!(
        report(&summary, &exp).text(),
        report(&ba.summary, &exp).text()
    );
    let h = load_history(&tmp.path().join("a/history")).unwrap();
    assert_eq!(h.len(), ba.history.len());
    assert!(!summary.manifest.partial);
    assert!(summary.manifest.thresholds.contains_key("control.cfl"));
}

#[test]
fn monotonicity_violations_set_the_exit_code() {
    let b = run_experiment(&small_sphere()).unwrap();
    let exp = Expectations::default();
    let clean = report(&b.summary, &exp);
    assert_eq!(clean.exit_code(), 0);
    assert!(clean.monotonicity.iter().any(|m| m.quantity == "entropy"));

    let mut bad = b.summary.clone();
    bad.series[1].entropy = bad.series[0].entropy + 0.1;
    let r = report(&bad, &exp);
    assert_eq!(r.exit_code(), 1);
    assert_eq!(r.hard_failures, 1);

    // a failed pin is reported but does not by itself fail the run
    let mut pins = Expectations::default();
    pins.scenarios.insert(
        "small".into(),
        [(
            "topping_max_ratio".to_string(),
            Pin {
                min: None,
                max: Some(0.01),
            },
        )]
        .into_iter()
        .collect(),
    );
    let r = report(&b.summary, &pins);
    assert!(!r.verdicts_pass());
    assert_eq!(r.exit_code(), 0);
}

#[test]
fn invalid_configs_are_rejected() {
    let mut c = small_sphere();
    c.scenario.generator = Generator::FromFile {
        path: "/nonexistent/mesh.off".into(),
    };
    assert!(matches!(run_experiment(&c), Err(Error::InvalidParams(_))));
    let mut c = small_sphere();
    c.snapshot_every = 0.0;
    assert!(matches!(c.validate(), Err(Error::InvalidParams(_))));
    let mut c = small_sphere();
    c.diagnostics.neck_window = 1.5;
    assert!(c.validate().is_err());
    assert!(ExperimentConfig::from_json("{\"scenario\": 3}").is_err());
}

#[test]
fn config_json_round_trip() {
    for c in standard_suite() {
        let text = serde_json::to_string(&c).unwrap();
        let back = ExperimentConfig::from_json(&text).unwrap();
        let (ra, rb) = (threshold_registry(&c), threshold_registry(&back));
        assert_eq!(ra.len(), rb.len());
        for (k, v) in &ra {
            let w = rb[k];
            assert!(v == &w || (v.is_nan() && w.is_nan()), "{k}: {v} vs {w}");
        }
        assert_eq!(back.scenario, c.scenario);
    }
}

/// Every numeric module constant must be listed in the threshold registry.
#[test]
fn registry_lists_every_numeric_constant() {
    let registry = threshold_registry(&small_sphere());
    let mut stack = vec![Path::new(env!("CARGO_MANIFEST_DIR")).join("src")];
    let mut seen = 0;
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
                continue;
            }
            for line in fs::read_to_string(&p).unwrap().lines() {
                let Some(rest) = line.trim().strip_prefix("pub const ") else {
                    continue;
                };
                let (name, ty) = rest.split_once(':').unwrap();
                let ty = ty.trim_start();
                if ty.starts_with("f64") || ty.starts_with("usize") {
                    seen += 1;
                    assert!(
                        registry.contains_key(name),
                        "{name} in {} is not registered",
                        p.display()
                    );
                }
            }
        }
    }
    assert!(seen >= 15);
}
