//! The regret loop, replication summaries, and policy construction from spec strings.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::{BanditEnvironment, Encoder};
use crate::error::{Error, Result};
use crate::math::sqrt;
use crate::policy::{
    ContextFreeTs, LinUcb, LogisticUcb, Policy, PolicySpec, TreeBootstrap, TreeHeuristic, TreePolicyConfig, DEFAULT_DELTA,
};
use crate::schema::FeatureSchema;

/// Independent random streams derived from one replication seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Contexts = 1,
    Rewards = 2,
    Policy = 3,
    Refit = 4,
    Shuffle = 5,
    Baseline = 6,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// Seed of replication `index`.
pub fn replication_seed(base_seed: u64, index: usize) -> u64 {
    base_seed.wrapping_add(index as u64)
}

/// Row order seed for dataset environments in replication `seed`.
pub fn shuffle_seed(seed: u64) -> u64 {
    stream(seed, Stream::Shuffle).next_u64()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretStep {
    /// 1-based step index.
    pub t: usize,
    /// Zero-based action index.
    pub action: usize,
    pub reward: bool,
    pub instant_regret: f64,
    pub cumulative_regret: f64,
}

/// Per-step record of one run. A run that hit an error keeps its completed steps and the
/// error message.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegretTrace {
    pub steps: Vec<RegretStep>,
    pub failure: Option<String>,
}

impl RegretTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn final_regret(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.cumulative_regret)
    }

    pub fn rewards(&self) -> usize {
        self.steps.iter().filter(|s| s.reward).count()
    }

    /// Mean instantaneous regret over the last `window` steps.
    pub fn tail_regret_rate(&self, window: usize) -> f64 {
        let w = window.min(self.steps.len());
        if w == 0 {
            return 0.0;
        }
        let start = self.steps.len() - w;
        let before = if start == 0 { 0.0 } else { self.steps[start - 1].cumulative_regret };
        (self.final_regret() - before) / w as f64
    }
}

/// Plays `policy` against `env` for `horizon` steps.
///
/// Contexts, rewards and the policy's choices draw from separate streams of `seed`, so two
/// policies run with the same seed see the same contexts and the same reward noise.
pub fn run_experiment(policy: &mut dyn Policy, env: &mut dyn BanditEnvironment, horizon: usize, seed: u64) -> RegretTrace {
    let mut contexts = stream(seed, Stream::Contexts);
    let mut rewards = stream(seed, Stream::Rewards);
    let mut choices = stream(seed, Stream::Policy);
    let mut trace = RegretTrace { steps: Vec::with_capacity(horizon), failure: None };
    if policy.num_actions() != env.num_actions() {
        trace.failure = Some(format!("policy has {} actions, environment {}", policy.num_actions(), env.num_actions()));
        return trace;
    }
    let mut cumulative = 0.0;
    for t in 1..=horizon {
        let step = (|| -> Result<RegretStep> {
            let context = env.next_context(&mut contexts)?;
            let action = policy.select(&context, &mut choices)?;
            if action >= env.num_actions() {
                return Err(Error::InvalidAction { action, num_actions: env.num_actions() });
            }
            let probs = env.oracle_probs(&context)?;
            let reward = env.realize_reward(&context, action, &mut rewards)?;
            let best = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let instant_regret = best - probs[action];
            cumulative += instant_regret;
            policy.update(&context, action, reward)?;
            Ok(RegretStep { t, action, reward, instant_regret, cumulative_regret: cumulative })
        })();
        match step {
            Ok(s) => trace.steps.push(s),
            Err(e) => {
                trace.failure = Some(format!("step {t}: {e}"));
                break;
            }
        }
    }
    trace
}

/// `trace − baseline`, step by step.
pub fn relative_regret(trace: &RegretTrace, baseline: &RegretTrace) -> Result<RegretTrace> {
    if trace.len() != baseline.len() {
        return Err(Error::HorizonMismatch(trace.len(), baseline.len()));
    }
    let steps = trace
        .steps
        .iter()
        .zip(&baseline.steps)
        .map(|(s, b)| {
            if s.t != b.t {
                return Err(Error::InvalidArgument(format!("step indices {} and {} are not aligned", s.t, b.t)));
            }
            Ok(RegretStep {
                instant_regret: s.instant_regret - b.instant_regret,
                cumulative_regret: s.cumulative_regret - b.cumulative_regret,
                ..*s
            })
        })
        .collect::<Result<_>>()?;
    Ok(RegretTrace { steps, failure: trace.failure.clone().or_else(|| baseline.failure.clone()) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub t: usize,
    pub mean_cumulative_regret: f64,
    pub std_error: f64,
    /// Replications that reached step `t`.
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SummaryStats {
    pub rows: Vec<SummaryRow>,
    /// `R(T)` of every replication that completed without error.
    pub final_regrets: Vec<f64>,
    /// `(replication index, message)` of failed replications.
    pub failures: Vec<(usize, String)>,
}

/// Mean and standard error of `values` (sample standard deviation over `√n`).
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    if values.iter().all(|&v| v == values[0]) {
        return (values[0], 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, sqrt(var / n as f64))
}

/// Per-step mean cumulative regret across replications. Failed replications contribute the
/// steps they completed and are listed in `failures`.
pub fn summarize(traces: &[RegretTrace]) -> SummaryStats {
    let horizon = traces.iter().map(RegretTrace::len).max().unwrap_or(0);
    let mut column = Vec::with_capacity(traces.len());
    let rows = (0..horizon)
        .map(|i| {
            column.clear();
            column.extend(traces.iter().filter_map(|tr| tr.steps.get(i)).map(|s| s.cumulative_regret));
            let (mean, se) = mean_and_se(&column);
            SummaryRow { t: i + 1, mean_cumulative_regret: mean, std_error: se, replications: column.len() }
        })
        .collect();
    let final_regrets = traces.iter().filter(|t| t.failure.is_none()).map(RegretTrace::final_regret).collect();
    let failures = traces.iter().enumerate().filter_map(|(i, t)| t.failure.clone().map(|f| (i, f))).collect();
    SummaryStats { rows, final_regrets, failures }
}

/// Everything an online policy may need to be constructed.
#[derive(Debug, Clone)]
pub struct PolicySetup {
    pub schema: Arc<FeatureSchema>,
    pub num_actions: usize,
    /// Encoding for the linear baselines.
    pub encoder: Arc<Encoder>,
    pub horizon: usize,
    pub tree: TreePolicyConfig,
    /// Seed for policy-internal refits.
    pub seed: u64,
}

/// Builds an online policy. `offline-tree` needs a classification table and is constructed by
/// the caller instead.
pub fn build_policy(spec: PolicySpec, setup: &PolicySetup) -> Result<Box<dyn Policy + Send>> {
    let k = setup.num_actions;
    Ok(match spec {
        PolicySpec::TreeBootstrap => Box::new(TreeBootstrap::new(setup.schema.clone(), k, setup.tree.cart.clone(), setup.tree.guard)?),
        PolicySpec::TreeHeuristic => Box::new(TreeHeuristic::new(
            setup.schema.clone(),
            k,
            setup.tree.cart.clone(),
            setup.tree.prior_successes,
            setup.tree.prior_failures,
            stream(setup.seed, Stream::Refit).next_u64(),
        )?
        .with_refit_growth(setup.tree.refit_growth)?),
        PolicySpec::ContextFreeTs => Box::new(ContextFreeTs::new(k)?),
        PolicySpec::LinUcb { alpha } => Box::new(LinUcb::new(setup.encoder.clone(), k, alpha)?),
        PolicySpec::LogisticUcb { alpha } => {
            Box::new(LogisticUcb::new(setup.encoder.clone(), k, alpha, setup.horizon as u64, DEFAULT_DELTA)?)
        }
        PolicySpec::OfflineTree => {
            return Err(Error::InvalidConfig("offline-tree is fit on a dataset's holdout complement, not built online".into()))
        }
    })
}
