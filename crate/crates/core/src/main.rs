use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use coordinfer::coordination::{detect_coordination_intervals, find_initiators, DetectConfig, MinerConfig};
use coordinfer::evaluate::{classify_datasets, cross_validate, CvConfig, RiskReport};
use coordinfer::fit::{ThresholdVector, DEFAULT_MIX_THRESHOLD};
use coordinfer::forest::ForestConfig;
use coordinfer::io::{
    load_events, load_trajectory_csv, save_manifest, save_trajectory_csv, write_features_csv, write_json,
    write_step_errors_csv, FillPolicy, ManifestEntry,
};
use coordinfer::simulate::{event_seed, simulate, Regime, SimSpec};
use coordinfer::strategies::DEFAULT_AR_LAG;
use coordinfer::{Error, Result};

#[derive(Parser)]
#[command(
    name = "coordinfer",
    version,
    about = "Simulate coordinated movement and infer per-agent strategies"
)]
struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate seeded coordination events.
    Simulate(SimulateArgs),
    /// Find coordination intervals and their initiators.
    Detect(DetectArgs),
    /// Fit, select and evaluate per-agent strategies with cross validation.
    Fit(FitArgs),
    /// Cross-validated classification of datasets by generating regime.
    Classify(ClassifyArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// HM, LRA, HM_AND_LRA, MIXED or RANDOM.
    #[arg(long, value_parser = parse_regime)]
    model: Regime,
    #[arg(long, default_value_t = 20)]
    agents: usize,
    #[arg(long, default_value_t = 400)]
    steps: usize,
    /// Follow probability; required for HM and rejected otherwise.
    #[arg(long)]
    rho: Option<f64>,
    /// Per-step probability of the hierarchical rule; MIXED only.
    #[arg(long)]
    mix_prob: Option<f64>,
    #[arg(long, default_value_t = 1)]
    events: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for the event files and manifest.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InputArgs {
    /// Trajectory CSV files.
    #[arg(long = "in", num_args = 1..)]
    inputs: Vec<PathBuf>,
    /// Event manifest (alternative to --in).
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Carry positions forward over missing rows instead of rejecting them.
    #[arg(long, value_parser = ["forward"])]
    fill: Option<String>,
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 0.9)]
    sigma: f64,
    #[arg(long, default_value_t = 60)]
    omega: usize,
    #[arg(long, default_value_t = 240)]
    window: usize,
    #[arg(long, default_value_t = 50.0)]
    density_percentile: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Threshold triples `k1,k2,k3`; repeat the flag or separate with `;`.
    #[arg(long, num_args = 1..)]
    kappa_grid: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_AR_LAG)]
    p_ar: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MIX_THRESHOLD)]
    mix_threshold: f64,
    #[arg(long, default_value_t = 0.9)]
    sigma: f64,
    #[arg(long, default_value_t = 60)]
    omega: usize,
    #[arg(long, value_parser = ["forward"])]
    fill: Option<String>,
    #[arg(long)]
    out: PathBuf,
    /// Also write per-step test errors as CSV.
    #[arg(long)]
    step_errors: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    trees: usize,
    #[arg(long, default_value_t = 4)]
    depth: usize,
    #[arg(long, value_parser = ["forward"])]
    fill: Option<String>,
    #[arg(long)]
    out: PathBuf,
    /// Also write the per-dataset features as CSV.
    #[arg(long)]
    features_csv: Option<PathBuf>,
}

fn parse_regime(s: &str) -> std::result::Result<Regime, String> {
    Regime::parse(s).ok_or_else(|| format!("unknown model {s:?} (expected HM, LRA, HM_AND_LRA, MIXED or RANDOM)"))
}

fn fill_policy(f: &Option<String>) -> FillPolicy {
    match f.as_deref() {
        Some("forward") => FillPolicy::Forward,
        _ => FillPolicy::Reject,
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidParam(msg.into())
}

fn run_simulate(a: &SimulateArgs) -> Result<()> {
    match (a.model, a.rho) {
        (Regime::Hm, None) => return Err(usage("--model hm requires --rho")),
        (m, Some(_)) if m != Regime::Hm => return Err(usage("--rho is only valid with --model hm")),
        _ => {}
    }
    if a.mix_prob.is_some() && a.model != Regime::Mixed {
        return Err(usage("--mix-prob is only valid with --model mixed"));
    }
    if a.events == 0 {
        return Err(usage("--events must be at least 1"));
    }
    let mut base = SimSpec::new(a.model, a.seed);
    base.n_agents = a.agents;
    base.n_steps = a.steps;
    base.rho = a.rho.unwrap_or(1.0);
    base.mix_prob = a.mix_prob.unwrap_or(0.5);
    base.validate()?;
    std::fs::create_dir_all(&a.out)?;
    let mut entries = Vec::with_capacity(a.events);
    for k in 0..a.events {
        let mut spec = base.clone();
        spec.seed = event_seed(a.seed, k as u64);
        let ts = simulate(&spec)?;
        let name = format!("event_{k:03}.csv");
        save_trajectory_csv(&ts, &a.out.join(&name))?;
        entries.push(ManifestEntry {
            path: name.into(),
            informed_ids: ts.informed().iter().map(|&i| ts.agent_ids()[i]).collect(),
            label: Some(a.model),
            seed: Some(spec.seed),
        });
    }
    save_manifest(&entries, &a.out.join("manifest.json"))?;
    log::info!("wrote {} events to {}", a.events, a.out.display());
    Ok(())
}

#[derive(Serialize)]
struct DetectedInterval {
    start: usize,
    end: usize,
    sigma: f64,
    initiators: Vec<u32>,
}

#[derive(Serialize)]
struct DetectedEvent {
    source: String,
    intervals: Vec<DetectedInterval>,
}

#[derive(Serialize)]
struct DetectReport<'a> {
    config: &'a DetectConfig,
    events: Vec<DetectedEvent>,
}

fn run_detect(a: &DetectArgs) -> Result<()> {
    let fill = fill_policy(&a.input.fill);
    let mut sets = Vec::new();
    for p in &a.input.inputs {
        sets.push(load_trajectory_csv(p, &[], fill)?);
    }
    if let Some(m) = &a.input.manifest {
        sets.extend(load_events(m, fill)?.into_iter().map(|e| e.0));
    }
    if sets.is_empty() {
        return Err(usage("detect needs --in or --manifest"));
    }
    let cfg = DetectConfig {
        sigma: a.sigma,
        omega: a.omega,
        window: a.window,
        density_percentile: a.density_percentile,
    };
    if !(0.0..=1.0).contains(&cfg.sigma) || !(0.0..=100.0).contains(&cfg.density_percentile) {
        return Err(usage("--sigma must be in [0, 1] and --density-percentile in [0, 100]"));
    }
    let mut events = Vec::new();
    for ts in &sets {
        let found = detect_coordination_intervals(ts.directions(), &cfg)?;
        let intervals = found
            .iter()
            .map(|iv| DetectedInterval {
                start: iv.start,
                end: iv.end,
                sigma: iv.sigma,
                initiators: find_initiators(ts.directions(), iv, cfg.sigma, cfg.omega)
                    .into_iter()
                    .map(|i| ts.agent_ids()[i])
                    .collect(),
            })
            .collect();
        events.push(DetectedEvent {
            source: source_name(ts),
            intervals,
        });
    }
    write_json(&DetectReport { config: &cfg, events }, &a.out)
}

fn source_name(ts: &coordinfer::trajectory::TrajectorySet) -> String {
    match &ts.provenance {
        coordinfer::trajectory::Provenance::Ingested { source } => source.clone(),
        coordinfer::trajectory::Provenance::Simulated(s) => format!("simulated:{}:{}", s.model, s.seed),
    }
}

fn parse_kappa_grid(values: &[String]) -> Result<Vec<ThresholdVector>> {
    let mut grid = Vec::new();
    for v in values
        .iter()
        .flat_map(|v| v.split(';'))
        .map(str::trim)
        .filter(|v| !v.is_empty())
    {
        let parts: Vec<f64> = v
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| usage(format!("--kappa-grid: {v:?} is not a numeric triple")))?;
        if parts.len() != 3 {
            return Err(usage(format!("--kappa-grid: {v:?} needs exactly three values")));
        }
        grid.push(ThresholdVector::new(parts[0], parts[1], parts[2])?);
    }
    if grid.is_empty() {
        return Ok(coordinfer::fit::default_kappa_grid());
    }
    Ok(grid)
}

#[derive(Serialize)]
struct FitReport<'a> {
    manifest: String,
    #[serde(flatten)]
    report: &'a RiskReport,
}

fn run_fit(a: &FitArgs) -> Result<()> {
    let grid = parse_kappa_grid(&a.kappa_grid)?;
    if a.p_ar == 0 {
        return Err(usage("--p-ar must be at least 1"));
    }
    let events: Vec<_> = load_events(&a.manifest, fill_policy(&a.fill))?
        .into_iter()
        .map(|e| e.0)
        .collect();
    let cfg = CvConfig {
        folds: a.folds,
        kappa_grid: grid,
        p_ar: a.p_ar,
        seed: a.seed,
        miner: MinerConfig {
            sigma: a.sigma,
            omega: a.omega,
        },
        mix_threshold: a.mix_threshold,
    };
    let report = cross_validate(&events, &cfg)?;
    write_json(
        &FitReport {
            manifest: a.manifest.display().to_string(),
            report: &report,
        },
        &a.out,
    )?;
    if let Some(p) = &a.step_errors {
        write_step_errors_csv(&report.step_errors, p)?;
    }
    Ok(())
}

fn run_classify(a: &ClassifyArgs) -> Result<()> {
    let events = load_events(&a.manifest, fill_policy(&a.fill))?;
    let unlabeled = events.iter().filter(|e| e.1.is_none()).count();
    if unlabeled > 0 {
        return Err(Error::MissingLabel(format!(
            "{unlabeled} of {} manifest entries have no label",
            events.len()
        )));
    }
    let labeled: Vec<_> = events.into_iter().map(|(ts, l)| (ts, l.unwrap())).collect();
    let forest = ForestConfig {
        n_trees: a.trees,
        max_depth: a.depth,
        seed: a.seed,
        ..ForestConfig::default()
    };
    let report = classify_datasets(&labeled, a.folds, a.seed, &forest)?;
    write_json(&report, &a.out)?;
    if let Some(p) = &a.features_csv {
        let labels: Vec<Regime> = labeled.iter().map(|l| l.1).collect();
        write_features_csv(&report.features, &labels, p)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    let result = match &cli.command {
        Command::Simulate(a) => run_simulate(a),
        Command::Detect(a) => run_detect(a),
        Command::Fit(a) => run_fit(a),
        Command::Classify(a) => run_classify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
