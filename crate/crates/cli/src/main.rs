use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use mcflab::experiment::{
    load_history, load_summary, report, run_experiment, standard_scenario, standard_suite,
    Expectations, ExperimentConfig,
};
use mcflab::flow::FlowHistory;
use mcflab::lojasiewicz::{
    check_hypotheses, decay_bound_check, empirical_delta, measure_ls_inequality,
    parse_sequence_csv, sqrt_increment_sum, verify_certificate, DeltaOptions, Family, LojSequence,
    LsOptions,
};
use mcflab::mesh::io::{read_mesh, write_off};
use mcflab::mesh::{estimate_curvature, CurvatureField, TriMesh};
use mcflab::neck::{
    assemble_tubes, detect_necks, measure_tilt, track_strong_neck, tube_distance_comparison,
    tube_integral_estimate, TrackOptions, NECK_WINDOW,
};
use mcflab::scenario::{generate, Scenario};

#[derive(Parser)]
#[command(name = "mcflab", version, about = "Mean curvature flow laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an initial surface as OFF plus its ground truth JSON.
    Gen(GenArgs),
    /// Run an experiment and write its bundle.
    Run(RunArgs),
    /// Detect necks on a mesh or a history snapshot.
    Necks(NeckArgs),
    /// Track the thinnest final neck of a history backward in time.
    Track(TrackArgs),
    /// Assemble tubes from the necks of a mesh or snapshot.
    Tubes(TubeArgs),
    /// Discrete Lojasiewicz tools.
    Loj {
        #[command(subcommand)]
        command: LojCommand,
    },
    /// Verdict table for a bundle; exits nonzero on monotonicity failures.
    Report(ReportArgs),
}

#[derive(Args)]
struct ScenarioSource {
    /// JSON file with a scenario (for `gen`) or an experiment config (for `run`).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Name from the standard suite instead of a config file.
    #[arg(long)]
    standard: Option<String>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    source: ScenarioSource,
    /// Output OFF path; ground truth goes next to it as `<stem>.truth.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: ScenarioSource,
    /// Bundle directory (overrides `out_dir` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Pins to judge the run against; defaults to the bundled standard pins.
    #[arg(long)]
    expectations: Option<PathBuf>,
}

#[derive(Args)]
struct SurfaceSource {
    #[arg(long, conflicts_with = "history")]
    mesh: Option<PathBuf>,
    /// History directory of a bundle (`<bundle>/history`).
    #[arg(long)]
    history: Option<PathBuf>,
    /// Snapshot index within the history; defaults to the last one.
    #[arg(long)]
    snapshot: Option<usize>,
}

#[derive(Args)]
struct NeckArgs {
    #[command(flatten)]
    source: SurfaceSource,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = NECK_WINDOW)]
    window: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrackArgs {
    #[arg(long)]
    history: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 0.3)]
    eps1: f64,
    #[arg(long, default_value_t = 0.1)]
    tol_r: f64,
    #[arg(long, default_value_t = NECK_WINDOW)]
    window: f64,
    #[arg(long, default_value_t = f64::INFINITY)]
    lookback: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TubeArgs {
    #[command(flatten)]
    source: SurfaceSource,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = NECK_WINDOW)]
    window: f64,
    /// Chord cutoff for the distance comparison.
    #[arg(long, default_value_t = 0.5)]
    cutoff: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum LojCommand {
    /// Check the lemma hypotheses (and optionally the decay bound) on a sequence.
    Check {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        k: f64,
        #[arg(long, default_value_t = 0.5)]
        mu: f64,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        /// Constant of the decay bound `f(t) ≤ C t^{-1/μ}`.
        #[arg(long)]
        c: Option<f64>,
    },
    /// `Σ |f(j) − f(j−1)|^{1/2}` of a sequence.
    Sum {
        #[arg(long)]
        input: PathBuf,
    },
    /// Empirical δ for (K, μ, ε) on a generator family, with certificate re-check.
    Delta {
        #[arg(long)]
        k: f64,
        #[arg(long, default_value_t = 0.5)]
        mu: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value = "power_law")]
        family: String,
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Łojasiewicz–Simon measurement on a rescaled history.
    LsMeasure {
        #[arg(long)]
        history: PathBuf,
        /// `F(Z)`; measured on a model cylinder when omitted.
        #[arg(long)]
        z: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        mu: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long)]
    expectations: Option<PathBuf>,
    /// Machine-readable verdicts; defaults to `<bundle>/report.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn load_surface(src: &SurfaceSource) -> Result<(TriMesh, CurvatureField)> {
    match (&src.mesh, &src.history) {
        (Some(path), None) => {
            let mesh = read_mesh(path).with_context(|| format!("reading {}", path.display()))?;
            let curv = estimate_curvature(&mesh)?;
            Ok((mesh, curv))
        }
        (None, Some(dir)) => {
            let h =
                load_history(dir).with_context(|| format!("reading history {}", dir.display()))?;
            let k = src.snapshot.unwrap_or(h.len() - 1);
            let Some(state) = h.states.get(k) else {
                bail!("history has {} snapshots, asked for {k}", h.len())
            };
            Ok((state.mesh.clone(), state.curv.clone()))
        }
        _ => bail!("give exactly one of --mesh or --history"),
    }
}

fn experiment_config(src: &ScenarioSource) -> Result<ExperimentConfig> {
    let mut cfg = match (&src.config, &src.standard) {
        (Some(path), None) => {
            ExperimentConfig::load(path).with_context(|| format!("reading {}", path.display()))?
        }
        (None, Some(name)) => standard_scenario(name).with_context(|| {
            let names: Vec<String> = standard_suite()
                .into_iter()
                .map(|c| c.scenario.name)
                .collect();
            format!(
                "unknown standard scenario {name}; known: {}",
                names.join(", ")
            )
        })?,
        _ => bail!("give exactly one of --config or --standard"),
    };
    if let Some(seed) = src.seed {
        cfg.scenario.seed = seed;
    }
    Ok(cfg)
}

fn cmd_gen(args: &GenArgs) -> Result<()> {
    let mut scenario = match (&args.source.config, &args.source.standard) {
        (Some(path), None) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<Scenario>(&text)?
        }
        (None, Some(_)) => experiment_config(&args.source)?.scenario,
        _ => bail!("give exactly one of --config or --standard"),
    };
    if let Some(seed) = args.source.seed {
        scenario.seed = seed;
    }
    let g = generate(&scenario)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    write_off(&g.mesh, &args.out)?;
    let truth = args.out.with_extension("truth.json");
    emit(&g.truth, Some(&truth))?;
    println!(
        "{}: {} vertices, {} faces, area {:.6}, chi {}",
        args.out.display(),
        g.mesh.n_vertices(),
        g.mesh.n_faces(),
        g.mesh.area(),
        g.mesh.euler_characteristic()
    );
    Ok(())
}

fn expectations(path: Option<&Path>) -> Result<Expectations> {
    Ok(match path {
        Some(p) => Expectations::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => Expectations::standard(),
    })
}

fn cmd_run(args: &RunArgs) -> Result<ExitCode> {
    let mut cfg = experiment_config(&args.source)?;
    if let Some(out) = &args.out {
        cfg.out_dir = Some(out.clone());
    }
    let bundle = run_experiment(&cfg)?;
    let rep = report(
        &bundle.summary,
        &expectations(args.expectations.as_deref())?,
    );
    print!("{}", rep.text());
    if let Some(dir) = &cfg.out_dir {
        emit(&rep, Some(&dir.join("report.json")))?;
    }
    Ok(ExitCode::from(rep.exit_code() as u8))
}

fn cmd_necks(args: &NeckArgs) -> Result<()> {
    let (mesh, curv) = load_surface(&args.source)?;
    let necks = detect_necks(&mesh, &curv, args.eps, args.window)?;
    eprintln!("{} necks", necks.len());
    emit(&necks, args.out.as_deref())
}

fn cmd_track(args: &TrackArgs) -> Result<()> {
    let h: FlowHistory = load_history(&args.history)?;
    let last = h.last();
    let necks = detect_necks(&last.mesh, &last.curv, args.eps, args.window)?;
    let Some(neck) = necks.iter().min_by(|a, b| a.radius.total_cmp(&b.radius)) else {
        bail!(
            "no neck at the final snapshot (eps {}, window {})",
            args.eps,
            args.window
        )
    };
    let opts = TrackOptions {
        eps1: args.eps1,
        lookback: args.lookback,
        tol_r: args.tol_r,
        window: args.window,
    };
    let track = track_strong_neck(&h, neck, &opts)?;
    let tilt = measure_tilt(&track).ok();
    eprintln!(
        "track: {} samples over {:.6}, max residual {:.4}, tilt {}",
        track.samples.len(),
        track.span(),
        track.max_residual,
        tilt.as_ref().map_or("n/a".to_string(), |t| format!(
            "{:.3} deg",
            t.total_tilt_deg
        ))
    );
    emit(&(&track, &tilt), args.out.as_deref())
}

#[derive(Serialize)]
struct TubeOut<'a> {
    tube: &'a mcflab::neck::Tube,
    int_h: Option<f64>,
    c_observed: Option<f64>,
    distance_ratio: Option<f64>,
}

fn cmd_tubes(args: &TubeArgs) -> Result<()> {
    let (mesh, curv) = load_surface(&args.source)?;
    let necks = detect_necks(&mesh, &curv, args.eps, args.window)?;
    let tubes = assemble_tubes(&mesh, &necks);
    let out: Vec<TubeOut> = tubes
        .iter()
        .map(|t| {
            let integral = tube_integral_estimate(&mesh, &curv, t).ok();
            TubeOut {
                tube: t,
                int_h: integral.map(|i| i.int_h),
                c_observed: integral.map(|i| i.c_observed),
                distance_ratio: tube_distance_comparison(t, args.cutoff)
                    .ok()
                    .map(|d| d.max_ratio),
            }
        })
        .collect();
    for t in &out {
        eprintln!(
            "tube: {} necks, L {:.4}, closed {}, c_observed {:?}, distance ratio {:?}",
            t.tube.necks.len(),
            t.tube.length,
            t.tube.closed,
            t.c_observed,
            t.distance_ratio
        );
    }
    emit(&out, args.out.as_deref())
}

fn read_sequence(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_sequence_csv(&text)?)
}

fn cmd_loj(cmd: &LojCommand) -> Result<()> {
    match cmd {
        LojCommand::Check {
            input,
            k,
            mu,
            delta,
            c,
        } => {
            let seq = LojSequence::new(read_sequence(input)?, *k, *mu, *delta)?;
            let flags = check_hypotheses(&seq)?;
            let decay = match c {
                Some(c) => Some(decay_bound_check(&seq, *c)?),
                None => None,
            };
            emit(
                &serde_json::json!({ "hypotheses": flags, "all": flags.all(), "decay": decay }),
                None,
            )
        }
        LojCommand::Sum { input } => {
            println!("{:?}", sqrt_increment_sum(&read_sequence(input)?));
            Ok(())
        }
        LojCommand::Delta {
            k,
            mu,
            eps,
            family,
            n,
            seed,
            out,
        } => {
            let family: Family = family.parse()?;
            let opts = DeltaOptions {
                n_sequences: *n,
                seed: *seed,
                ..DeltaOptions::default()
            };
            let cert = empirical_delta(*k, *mu, *eps, family, &opts)?;
            let check = verify_certificate(&cert, 0.5)?;
            eprintln!(
                "delta_hat {:e} (cap hit: {}), half-amplitude failures {}",
                cert.delta_hat, cert.hit_cap, check.failures
            );
            emit(
                &serde_json::json!({ "certificate": cert, "half_amplitude_check": check }),
                out.as_deref(),
            )
        }
        LojCommand::LsMeasure {
            history,
            z,
            mu,
            out,
        } => {
            let h = load_history(history)?;
            let opts = LsOptions {
                z_value: *z,
                mu: *mu,
                ..LsOptions::default()
            };
            let m = measure_ls_inequality(&h, &opts)?;
            eprintln!(
                "gated {} of {} snapshots, minimal K {:e}",
                m.gated,
                h.len(),
                m.min_k
            );
            emit(&m, out.as_deref())
        }
    }
}

fn cmd_report(args: &ReportArgs) -> Result<ExitCode> {
    let summary = load_summary(&args.bundle)
        .with_context(|| format!("reading bundle {}", args.bundle.display()))?;
    let rep = report(&summary, &expectations(args.expectations.as_deref())?);
    print!("{}", rep.text());
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| args.bundle.join("report.json"));
    emit(&rep, Some(&out))?;
    Ok(ExitCode::from(rep.exit_code() as u8))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a).map(|_| ExitCode::SUCCESS),
        Command::Run(a) => cmd_run(a),
        Command::Necks(a) => cmd_necks(a).map(|_| ExitCode::SUCCESS),
        Command::Track(a) => cmd_track(a).map(|_| ExitCode::SUCCESS),
        Command::Tubes(a) => cmd_tubes(a).map(|_| ExitCode::SUCCESS),
        Command::Loj { command } => cmd_loj(command).map(|_| ExitCode::SUCCESS),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
