//! Replications, OfflineTree baselines and exploration-constant sweeps.

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use treebandit_core::env::{shuffled_order, BanditEnvironment, ClassificationEnv, ClassificationTable, Encoder, SportsEnv, TruthSpec};
use treebandit_core::harness::{
    build_policy, mean_and_se, relative_regret, replication_seed, run_experiment, shuffle_seed, stream, summarize, PolicySetup,
    RegretTrace, Stream, SummaryStats,
};
use treebandit_core::policy::{OfflineTree, PolicySpec, TreePolicyConfig};

use crate::config::{EnvSpec, ExperimentConfig};
use crate::error::{io, Error, Result};
use crate::ingest::{ingest_csv, IngestReport};
use crate::schema_file::SchemaDeclaration;
use crate::trace_io::{save_summary, save_traces};
use crate::truth_file::load_truth;

/// A loaded environment description, shared by all replications.
#[derive(Debug, Clone)]
pub enum World {
    Simulator { truth: Arc<TruthSpec>, encoder: Arc<Encoder> },
    Dataset { table: Arc<ClassificationTable>, encoder: Arc<Encoder>, report: IngestReport },
}

impl World {
    pub fn load(config: &ExperimentConfig) -> Result<Self> {
        match &config.env {
            EnvSpec::Simulator { truth } => {
                let truth = match truth {
                    Some(path) => load_truth(path)?,
                    None => TruthSpec::sports_default(),
                };
                Ok(Self::simulator(Arc::new(truth), config)?)
            }
            EnvSpec::Dataset { data, schema } => {
                let declaration = SchemaDeclaration::load(schema)?;
                let (table, report) = ingest_csv(data, &declaration, &config.preprocess)?;
                log::info!("{}: {report}", data.display());
                Self::dataset(Arc::new(table), report, config)
            }
        }
    }

    pub fn simulator(truth: Arc<TruthSpec>, config: &ExperimentConfig) -> Result<Self> {
        let encoder = Arc::new(Encoder::fit(truth.schema().clone(), [], &config.preprocess)?);
        Ok(Self::Simulator { truth, encoder })
    }

    pub fn dataset(table: Arc<ClassificationTable>, report: IngestReport, config: &ExperimentConfig) -> Result<Self> {
        let encoder = Encoder::fit(table.schema().clone(), table.contexts().iter(), &config.preprocess)?;
        for &f in encoder.dropped_features() {
            log::warn!("continuous feature `{}` has zero variance; dropped from the linear encoding", table.schema().feature(f).name);
        }
        Ok(Self::Dataset { table, encoder: Arc::new(encoder), report })
    }

    pub fn num_actions(&self) -> usize {
        match self {
            Self::Simulator { truth, .. } => truth.num_actions(),
            Self::Dataset { table, .. } => table.num_classes(),
        }
    }

    fn encoder(&self) -> &Arc<Encoder> {
        match self {
            Self::Simulator { encoder, .. } | Self::Dataset { encoder, .. } => encoder,
        }
    }

    fn environment(&self, seed: u64) -> Box<dyn BanditEnvironment + Send> {
        match self {
            Self::Simulator { truth, .. } => Box::new(SportsEnv::new(truth.clone())),
            Self::Dataset { table, .. } => Box::new(ClassificationEnv::new(table.clone(), shuffle_seed(seed))),
        }
    }
}

/// OfflineTree on `table` for replication `seed`: the held-out rows are exactly the first
/// `horizon` rows that the replication's classification environment will replay.
pub fn baseline_trace(table: &Arc<ClassificationTable>, horizon: usize, seed: u64, tree: &TreePolicyConfig) -> Result<RegretTrace> {
    if horizon >= table.len() {
        return Err(Error::Config(format!(
            "horizon {horizon} leaves no training rows for OfflineTree ({} rows)",
            table.len()
        )));
    }
    let holdout = &shuffled_order(table.len(), shuffle_seed(seed))[..horizon];
    let mut policy = OfflineTree::fit(table, holdout, &tree.cart, &mut stream(seed, Stream::Baseline))?;
    let mut env = ClassificationEnv::new(table.clone(), shuffle_seed(seed));
    Ok(run_experiment(&mut policy, &mut env, horizon, seed))
}

fn failed(message: String) -> RegretTrace {
    RegretTrace { steps: Vec::new(), failure: Some(message) }
}

/// One replication with seed `base + index`. Errors become a failed trace.
pub fn run_replication(config: &ExperimentConfig, world: &World, index: usize) -> RegretTrace {
    let seed = replication_seed(config.seed, index);
    let baseline = |table| baseline_trace(table, config.horizon, seed, &config.tree);
    let trace = if config.policy == PolicySpec::OfflineTree {
        match world {
            World::Dataset { table, .. } => baseline(table).unwrap_or_else(|e| failed(e.to_string())),
            World::Simulator { .. } => return failed("offline-tree needs a dataset environment".into()),
        }
    } else {
        let setup = PolicySetup {
            schema: world.encoder().schema().clone(),
            num_actions: world.num_actions(),
            encoder: world.encoder().clone(),
            horizon: config.horizon,
            tree: config.tree.clone(),
            seed,
        };
        match build_policy(config.policy, &setup) {
            Ok(mut policy) => run_experiment(policy.as_mut(), world.environment(seed).as_mut(), config.horizon, seed),
            Err(e) => return failed(e.to_string()),
        }
    };
    match world {
        World::Dataset { table, .. } if config.relative => match baseline(table) {
            Ok(base) => {
                let n = trace.len().min(base.len());
                let cut = |t: &RegretTrace| RegretTrace { steps: t.steps[..n].to_vec(), failure: t.failure.clone() };
                relative_regret(&cut(&trace), &cut(&base)).unwrap_or_else(|e| failed(e.to_string()))
            }
            Err(e) => RegretTrace { failure: Some(format!("baseline: {e}")), ..trace },
        },
        _ => trace,
    }
}

/// All replications, in index order. Replications run in parallel; each owns its policy,
/// environment and random streams, so the result does not depend on scheduling.
pub fn run_replications(config: &ExperimentConfig, world: &World) -> Vec<RegretTrace> {
    (0..config.replications).into_par_iter().map(|i| run_replication(config, world, i)).collect()
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io(dir))
}

fn report_failures(stats: &SummaryStats) {
    for (i, message) in &stats.failures {
        log::error!("replication {i} failed: {message}");
    }
}

/// Runs `config` and writes `traces.csv`, `summary.csv` and the resolved `config.txt` into
/// `config.out`.
pub fn run_and_write(config: &ExperimentConfig, world: &World) -> Result<SummaryStats> {
    let traces = run_replications(config, world);
    let stats = summarize(&traces);
    create_dir(&config.out)?;
    save_traces(&config.out.join("traces.csv"), &traces)?;
    save_summary(&config.out.join("summary.csv"), &stats.rows)?;
    let path = config.out.join("config.txt");
    std::fs::write(&path, config.to_text()).map_err(io(&path))?;
    report_failures(&stats);
    Ok(stats)
}

/// Outcome of one grid value of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub alpha: f64,
    pub stats: SummaryStats,
    pub mean_final_regret: f64,
    pub std_error: f64,
}

pub const SWEEP_HEADER: [&str; 5] = ["alpha", "mean_final_regret", "std_error", "replications", "failures"];

/// Runs the configured UCB policy once per `alpha`, writing `traces_alpha=<a>.csv` and
/// `summary_alpha=<a>.csv` per value and `sweep_summary.csv` over the grid.
pub fn sweep_alpha(config: &ExperimentConfig, world: &World, grid: &[f64]) -> Result<Vec<SweepPoint>> {
    if grid.is_empty() {
        return Err(Error::Config("empty sweep grid".into()));
    }
    create_dir(&config.out)?;
    let mut points = Vec::with_capacity(grid.len());
    for &alpha in grid {
        let policy = config
            .policy
            .with_alpha(alpha)
            .ok_or_else(|| Error::Config(format!("policy `{}` has no exploration constant to sweep", config.policy)))?;
        let point_config = ExperimentConfig { policy, ..config.clone() };
        let traces = run_replications(&point_config, world);
        let stats = summarize(&traces);
        report_failures(&stats);
        save_traces(&config.out.join(format!("traces_alpha={alpha}.csv")), &traces)?;
        save_summary(&config.out.join(format!("summary_alpha={alpha}.csv")), &stats.rows)?;
        let (mean_final_regret, std_error) = mean_and_se(&stats.final_regrets);
        log::info!("alpha={alpha}: mean R(T) = {mean_final_regret} ± {std_error}");
        points.push(SweepPoint { alpha, stats, mean_final_regret, std_error });
    }
    let path = config.out.join("sweep_summary.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|source| Error::Csv { path: path.clone(), source })?;
    let csv_err = |source| Error::Csv { path: path.clone(), source };
    w.write_record(SWEEP_HEADER).map_err(csv_err)?;
    for p in &points {
        w.write_record([
            p.alpha.to_string(),
            p.mean_final_regret.to_string(),
            p.std_error.to_string(),
            p.stats.final_regrets.len().to_string(),
            p.stats.failures.len().to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io(&path))?;
    Ok(points)
}

