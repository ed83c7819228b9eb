use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use influence_rl::diffusion::validate_network;
use influence_rl::error::{Error, Result};
use influence_rl::harness::{
    compare, diagnostics, diagnostics_from_records, emit_plot, emit_regret_plot, export, read_trajectories_csv,
    run_experiment, write_json, BoundContext, ExperimentConfig, RunSummary,
};
use influence_rl::netgen::NetworkSpec;

#[derive(Parser)]
#[command(name = "influence-rl", version, about = "Online adaptive influence maximization simulator")]
struct Cli {
    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Base seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// Number of runs; overrides the config.
    #[arg(long)]
    runs: Option<usize>,
    /// Horizon; overrides the config.
    #[arg(long)]
    horizon: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a network from a spec file and write it as JSON.
    Generate {
        /// Network spec (TOML).
        #[arg(short, long)]
        spec: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Seed; overrides the spec.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run one policy: trajectories CSV, summary JSON, plot.
    Run(RunArgs),
    /// Run a policy grid with regret against the known-model reference.
    Compare(RunArgs),
    /// Check the active-pair and switch-count bounds on exported trajectories.
    Diagnose {
        /// Experiment config the trajectories came from.
        #[arg(short, long)]
        config: PathBuf,
        /// Trajectories CSV.
        #[arg(short, long)]
        trajectories: PathBuf,
        /// Summary JSON; adds the elliptical-potential check.
        #[arg(short, long)]
        summary: Option<PathBuf>,
    },
}

fn load_config(args: &RunArgs) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    if args.threads.is_some() {
        cfg.threads = args.threads;
    }
    if let Some(r) = args.runs {
        cfg.runs = r;
    }
    if let Some(h) = args.horizon {
        cfg.horizon = h;
    }
    cfg.validate()?;
    let out =
        args.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
    fs::create_dir_all(&out)?;
    Ok((cfg, out))
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { spec, out, seed } => {
            let mut spec = NetworkSpec::from_toml(&fs::read_to_string(spec)?)?;
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            let model = spec.generate()?;
            let report = validate_network(&model);
            if !report.passes() {
                return Err(Error::InvalidInput(format!("{} violations", report.violations.len())));
            }
            fs::write(&out, model.to_json()?)?;
            println!(
                "wrote {} (N = {}, K = {}, d = {})",
                out.display(),
                model.n_users(),
                model.n_contents(),
                model.dim()
            );
        }
        Command::Run(args) => {
            let (cfg, out) = load_config(&args)?;
            let output = run_experiment(&cfg)?;
            let (csv, json) = export(&out, &output)?;
            let plot = out.join(format!("{}.svg", output.summary.policy));
            emit_plot(&plot, &cfg.name, &[&output.summary])?;
            let model = cfg.network_model()?;
            let report = diagnostics(&output.summary.diagnostics, &BoundContext::new(&model, &cfg)?);
            write_json(&out.join("diagnostics.json"), &report)?;
            print_summary(&output.summary);
            println!("wrote {}, {}, {}", csv.display(), json.display(), plot.display());
        }
        Command::Compare(args) => {
            let (cfg, out) = load_config(&args)?;
            let cmp = compare(&cfg)?;
            for o in &cmp.outputs {
                export(&out, o)?;
                print_summary(&o.summary);
            }
            let summaries: Vec<&RunSummary> = cmp.outputs.iter().map(|o| &o.summary).collect();
            emit_plot(&out.join("comparison.svg"), &cfg.name, &summaries)?;
            if !cmp.regrets.is_empty() {
                write_json(&out.join("regret.json"), &cmp.regrets)?;
                emit_regret_plot(&out.join("regret.svg"), &cfg.name, &cmp.regrets)?;
            }
            println!("wrote results to {}", out.display());
        }
        Command::Diagnose { config, trajectories, summary } => {
            let cfg = ExperimentConfig::load(&config)?;
            let model = cfg.network_model()?;
            let bounds = BoundContext::new(&model, &cfg)?;
            let runs = match summary {
                Some(p) => serde_json::from_str::<RunSummary>(&fs::read_to_string(p)?)?.diagnostics,
                None => diagnostics_from_records(&read_trajectories_csv(&trajectories)?, &bounds),
            };
            let report = diagnostics(&runs, &bounds);
            println!("{}", serde_json::to_string_pretty(&report)?);
            if !report.deterministic_bounds_hold() {
                return Err(Error::InvalidInput("a deterministic bound is violated".into()));
            }
        }
    }
    Ok(())
}

fn print_summary(s: &RunSummary) {
    println!(
        "{:<18} runs {}/{}  final mean {:.4}  85% band [{:.4}, {:.4}]  {:.1}s",
        s.policy,
        s.runs_completed,
        s.runs_requested,
        s.final_mean(),
        s.ci_low.last().copied().unwrap_or(0.0),
        s.ci_high.last().copied().unwrap_or(0.0),
        s.wall_clock_secs
    );
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
