use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use treebandit::config::{ConfigMap, ExperimentConfig};
use treebandit::runner::{baseline_trace, run_and_write, sweep_alpha, World};
use treebandit::schema_file::SchemaDeclaration;
use treebandit::theory_report::{write_report, TheoryMode};
use treebandit::trace_io::save_traces;
use treebandit::ingest::ingest_csv;
use treebandit_core::env::PreprocessSpec;
use treebandit_core::policy::TreePolicyConfig;

#[derive(Parser)]
#[command(name = "treebandit", version, about = "Tree-based contextual bandits: experiments and theory checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run replications of one policy and write traces.csv and summary.csv.
    Run(RunArgs),
    /// Fit OfflineTree on a dataset and write its trace on the held-out rows.
    Baseline {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        horizon: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a numerical theory report.
    Theory {
        #[arg(long, value_parser = ["lemma1", "lemma2", "theorem1", "slopes"])]
        mode: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a UCB policy over a grid of exploration constants.
    Sweep {
        #[arg(long, value_parser = ["alpha"])]
        param: String,
        #[arg(long, value_delimiter = ',', default_value = "0.0001,0.001,0.01,0.1,1,10")]
        grid: Vec<f64>,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args)]
struct RunArgs {
    /// key = value file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    policy: Option<String>,
    #[arg(long, requires = "schema", conflicts_with = "sim")]
    dataset: Option<PathBuf>,
    #[arg(long, requires = "dataset")]
    schema: Option<PathBuf>,
    /// Use the simulator (default when no dataset is given).
    #[arg(long)]
    sim: bool,
    /// Truth file for the simulator.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Report regret relative to OfflineTree.
    #[arg(long)]
    relative: bool,
    /// Any other configuration key, as key=value.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl RunArgs {
    fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let mut map = match &self.config {
            Some(path) => ConfigMap::load(path)?,
            None => ConfigMap::default(),
        };
        for kv in &self.overrides {
            let (k, v) = kv.split_once('=').with_context(|| format!("`--set {kv}`: expected KEY=VALUE"))?;
            map.set(k.trim(), v.trim())?;
        }
        let path = |p: &PathBuf| p.display().to_string();
        let flags: [(&str, Option<String>); 9] = [
            ("policy", self.policy.clone()),
            ("dataset", self.dataset.as_ref().map(path)),
            ("schema", self.schema.as_ref().map(path)),
            ("truth", self.truth.as_ref().map(path)),
            ("horizon", self.horizon.map(|v| v.to_string())),
            ("reps", self.reps.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("out", self.out.as_ref().map(path)),
            ("alpha", self.alpha.map(|v| v.to_string())),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                map.set(k, v)?;
            }
        }
        if self.dataset.is_some() {
            map.set("env", "dataset")?;
        }
        if self.sim {
            map.set("env", "sim")?;
        }
        if self.relative {
            map.set("relative", "true")?;
        }
        Ok(ExperimentConfig::from_map(&map)?)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run(args) => {
            let config = args.resolve()?;
            let world = World::load(&config)?;
            let stats = run_and_write(&config, &world)?;
            log::info!("wrote {}", config.out.display());
            Ok(partial(stats.failures.len()))
        }
        Command::Baseline { dataset, schema, horizon, seed, out } => {
            let declaration = SchemaDeclaration::load(&schema)?;
            let (table, report) = ingest_csv(&dataset, &declaration, &PreprocessSpec::default())?;
            log::info!("{}: {report}", dataset.display());
            let trace = baseline_trace(&std::sync::Arc::new(table), horizon, seed, &TreePolicyConfig::default())?;
            save_traces(&out, std::slice::from_ref(&trace))?;
            if let Some(f) = &trace.failure {
                bail!("baseline failed: {f}");
            }
            log::info!("OfflineTree R(T) = {} over {horizon} held-out rows", trace.final_regret());
            Ok(ExitCode::SUCCESS)
        }
        Command::Theory { mode, out } => {
            let mode: TheoryMode = mode.parse()?;
            let file = std::fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            write_report(mode, std::io::BufWriter::new(file))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { param: _, grid, mut run } => {
            // the grid supplies the constant; any value keeps a bare `linucb` parseable
            run.alpha = run.alpha.or(grid.first().copied());
            let config = run.resolve()?;
            let world = World::load(&config)?;
            let points = sweep_alpha(&config, &world, &grid)?;
            Ok(partial(points.iter().map(|p| p.stats.failures.len()).sum()))
        }
    }
}

/// Outputs are written even when some replications failed; the exit code still says so.
fn partial(failures: usize) -> ExitCode {
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        log::error!("{failures} replication(s) failed; see the failure lines in the trace files");
        ExitCode::from(2)
    }
}
