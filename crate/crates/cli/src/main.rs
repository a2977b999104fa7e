//! `tempath run` evolves a dipole beam through the pulse in both formalisms;
//! `tempath oracle` writes the lattice convergence tables.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tempath::experiment::{
    compare_formalisms, convergence_order, free_slice_convergence, impulsive_convergence,
    reg_eta_convergence, run_experiment, ExperimentConfig, ExperimentError, Formalism,
    ObservableAxis,
};
use tempath::lattice::{sample_fourier_paths, FourierSampler};
use tempath::Event;
use thiserror::Error;

use config::RunConfig;
use output::{Artifact, FormalismSummary, RunInfo, SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Config(m) => CliError::Config(m),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "tempath",
    version,
    about = "Stern-Gerlach in time with a quantum time coordinate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment and write distributions, summary and plots.
    Run(CommonArgs),
    /// Write lattice-vs-closed-form convergence tables and a path ensemble.
    Oracle(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the seed in the config file.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    oracle_check: bool,
    #[arg(long, value_enum)]
    formalism: Option<FormalismArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormalismArg {
    Path4d,
    Schrodinger,
    Both,
}

impl From<FormalismArg> for Formalism {
    fn from(f: FormalismArg) -> Self {
        match f {
            FormalismArg::Path4d => Formalism::Path4d,
            FormalismArg::Schrodinger => Formalism::Schrodinger,
            FormalismArg::Both => Formalism::Both,
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("TEMPATH_THREADS") else {
        return Ok(());
    };
    let n: usize = value.parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        CliError::Config(format!(
            "TEMPATH_THREADS must be a positive integer, got {value:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

struct Loaded {
    file: RunConfig,
    experiment: ExperimentConfig,
    seed: u64,
}

fn load(args: &CommonArgs) -> Result<Loaded, CliError> {
    let file = RunConfig::load(&args.config)?;
    let experiment = file.experiment(args.formalism.map(Into::into), args.oracle_check)?;
    let seed = args.seed.unwrap_or(file.seed);
    Ok(Loaded {
        file,
        experiment,
        seed,
    })
}

#[derive(Serialize)]
struct Summary {
    schema_version: u32,
    mass: f64,
    t0: f64,
    t3: f64,
    e0_bar: f64,
    e1_bar: f64,
    t_bar: f64,
    formalisms: Vec<FormalismSummary>,
    comparison: Option<tempath::experiment::ComparisonReport>,
}

fn cmd_run(args: &CommonArgs, started: f64) -> Result<(), CliError> {
    let loaded = load(args)?;
    let config = &loaded.experiment;
    let result = run_experiment(config)?;

    let mut artifacts = vec![Artifact::text(
        "distributions.csv",
        output::distributions_csv(&result),
    )];
    let comparison = match (
        result.get(Formalism::Path4d),
        result.get(Formalism::Schrodinger),
    ) {
        (Some(a), Some(b)) => {
            let report = compare_formalisms(a, b);
            artifacts.push(Artifact::text("comparison.csv", report.to_csv()));
            Some(report)
        }
        _ => None,
    };
    if let Some(p4) = result
        .get(Formalism::Path4d)
        .filter(|_| config.oracle_check)
    {
        artifacts.push(Artifact::text(
            "oracle_errors.csv",
            output::oracle_errors_csv(p4),
        ));
    }
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        mass: config.mass,
        t0: config.t0,
        t3: config.t3,
        e0_bar: config.field.e0_bar,
        e1_bar: config.field.e1_bar,
        t_bar: config.field.t_bar,
        formalisms: result.runs.iter().map(FormalismSummary::from).collect(),
        comparison,
    };
    artifacts.push(Artifact::json("summary.json", &summary));
    for axis in [ObservableAxis::T, ObservableAxis::X, ObservableAxis::V] {
        artifacts.push(Artifact::text(
            &format!("plots/{}.svg", axis.name()),
            output::svg_plot(&result, axis),
        ));
    }
    output::write_all(
        &args.out,
        &artifacts,
        RunInfo {
            command: "run",
            config_path: &args.config,
            seed: loaded.seed,
            started_unix: started,
        },
    )
}

#[derive(Serialize)]
struct OracleSummary {
    schema_version: u32,
    free_slices_max_rel_l2: f64,
    pulse_orders: Vec<PulseOrder>,
    reg_eta_max_rel_l2: f64,
    ensemble_p: f64,
    ensemble_mean_action: f64,
    ensemble_action_variance: f64,
    straight_action: f64,
    overshoot_fraction: f64,
}

#[derive(Serialize)]
struct PulseOrder {
    p: f64,
    order: f64,
}

fn cmd_oracle(args: &CommonArgs, started: f64) -> Result<(), CliError> {
    let loaded = load(args)?;
    let config = &loaded.experiment;
    let conv = &loaded.file.convergence;

    let free = free_slice_convergence(config, &conv.n_slices)?;
    let etas = reg_eta_convergence(config, conv.reg_eta_slices, &conv.reg_eta)?;
    let mut pulse_csv = String::from("p,delta_t,rel_l2\n");
    let mut orders = Vec::new();
    for &p in &config.spectrum.eigenvalues {
        if p * config.field.e1_bar == 0.0 && p * config.field.e0_bar == 0.0 {
            continue;
        }
        let rows = impulsive_convergence(config, p, &conv.delta_t)?;
        for r in &rows {
            pulse_csv.push_str(&format!(
                "{:.12e},{:.12e},{:.12e}\n",
                p, r.parameter, r.rel_l2
            ));
        }
        if rows.len() > 1 {
            orders.push(PulseOrder {
                p,
                order: convergence_order(&rows),
            });
        }
    }

    let p = config
        .spectrum
        .eigenvalues
        .iter()
        .copied()
        .fold(0.0, |a: f64, b: f64| if b.abs() > a.abs() { b } else { a });
    let field = if config.field.delta_t > 0.0 {
        config.field
    } else {
        config.field.with_duration(config.oracle.pulse_width)
    };
    let pulse = field
        .finite_pulse()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let span = config.t3 - config.t0;
    let pk = &config.packet;
    let start = Event::new(pk.t_a, pk.x_a);
    let end = Event::new(
        pk.t_a + pk.omega_a / config.mass * span,
        pk.x_a + pk.k_a / config.mass * span,
    );
    let sampler = FourierSampler {
        n_modes: conv.n_modes,
        ..FourierSampler::default()
    };
    let ensemble = sample_fourier_paths(
        &sampler,
        loaded.seed,
        (config.t0, config.t3),
        (start, end),
        conv.n_paths,
        config.mass,
        &pulse.potential(p),
    )
    .map_err(|e| CliError::Numerical(e.to_string()))?;
    let mut paths_csv = String::from("path,action\n");
    for (i, a) in ensemble.actions.iter().enumerate() {
        paths_csv.push_str(&format!("{i},{a:.12e}\n"));
    }

    let summary = OracleSummary {
        schema_version: SCHEMA_VERSION,
        free_slices_max_rel_l2: free.iter().map(|r| r.rel_l2).fold(0.0, f64::max),
        pulse_orders: orders,
        reg_eta_max_rel_l2: etas.iter().map(|r| r.rel_l2).fold(0.0, f64::max),
        ensemble_p: p,
        ensemble_mean_action: ensemble.mean_action,
        ensemble_action_variance: ensemble.action_variance,
        straight_action: ensemble.straight_action,
        overshoot_fraction: ensemble.overshoot_fraction,
    };
    let artifacts = vec![
        Artifact::text(
            "free_slices.csv",
            output::convergence_csv("n_slices", &free),
        ),
        Artifact::text("pulse_delta_t.csv", pulse_csv),
        Artifact::text("reg_eta.csv", output::convergence_csv("reg_eta", &etas)),
        Artifact::text("path_ensemble.csv", paths_csv),
        Artifact::json("oracle_summary.json", &summary),
    ];
    output::write_all(
        &args.out,
        &artifacts,
        RunInfo {
            command: "oracle",
            config_path: &args.config,
            seed: loaded.seed,
            started_unix: started,
        },
    )
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    let started = output::unix_now();
    match &cli.command {
        Command::Run(args) => cmd_run(args, started),
        Command::Oracle(args) => cmd_oracle(args, started),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tempath: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
