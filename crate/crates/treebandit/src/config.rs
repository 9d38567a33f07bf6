//! Experiment configuration: flat `key = value` lines (`#` starts a comment). Command-line
//! flags are applied on top of the file with [`ConfigMap::set`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use treebandit_core::env::PreprocessSpec;
use treebandit_core::policy::{PolicySpec, TreePolicyConfig};

use crate::error::{io, parse_error, Error, Result};

/// Every key a configuration may set.
pub const KEYS: [&str; 21] = [
    "policy",
    "env",
    "truth",
    "dataset",
    "schema",
    "horizon",
    "reps",
    "seed",
    "out",
    "alpha",
    "relative",
    "min_leaf_size",
    "cv_folds",
    "complexity_grid",
    "failure_threshold",
    "prior_injection",
    "prior_successes",
    "prior_failures",
    "refit_growth",
    "rare_class_cutoff",
    "standardize_continuous",
];

/// Raw key/value pairs, validated against [`KEYS`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap(BTreeMap<String, String>);

impl ConfigMap {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut map = Self::default();
        for (i, line) in text.lines().enumerate() {
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content.split_once('=').ok_or_else(|| parse_error(path, i + 1, "expected `key = value`"))?;
            map.set(k.trim(), v.trim()).map_err(|e| parse_error(path, i + 1, e.to_string()))?;
        }
        Ok(map)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&std::fs::read_to_string(path).map_err(io(path))?, path)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(Error::Config(format!("unknown key `{key}` (known: {})", KEYS.join(", "))));
        }
        self.0.insert(key.to_string(), value.into());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| v.parse().map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`"))))
            .transpose()
    }

    fn required<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.parsed(key)?.ok_or_else(|| Error::Config(format!("`{key}` is required")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvSpec {
    /// The simulated sports-ads world; `None` uses the shipped truth.
    Simulator { truth: Option<PathBuf> },
    Dataset { data: PathBuf, schema: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub policy: PolicySpec,
    pub env: EnvSpec,
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    pub out: PathBuf,
    /// Report regret relative to OfflineTree (dataset environments only).
    pub relative: bool,
    pub tree: TreePolicyConfig,
    pub preprocess: PreprocessSpec,
}

impl ExperimentConfig {
    pub fn from_map(map: &ConfigMap) -> Result<Self> {
        let alpha = map.parsed::<f64>("alpha")?;
        let mut policy: PolicySpec = match (map.get("policy"), alpha) {
            // a bare `linucb` takes its constant from the `alpha` key
            (Some(name @ ("linucb" | "logucb")), Some(a)) => format!("{name}:alpha={a}")
                .parse()
                .map_err(|e| Error::Config(format!("`policy`: {e}")))?,
            _ => map.required("policy")?,
        };
        if let Some(alpha) = alpha {
            policy = policy
                .with_alpha(alpha)
                .ok_or_else(|| Error::Config(format!("policy `{policy}` has no exploration constant")))?;
        }
        let env = match map.get("env").unwrap_or(if map.get("dataset").is_some() { "dataset" } else { "sim" }) {
            "sim" => Some(EnvSpec::Simulator { truth: map.get("truth").map(PathBuf::from) }),
            "dataset" => Some(EnvSpec::Dataset {
                data: map.required("dataset")?,
                schema: map.required("schema")?,
            }),
            _ => None,
        }
        .ok_or_else(|| Error::Config("`env` must be `sim` or `dataset`".into()))?;

        let mut tree = TreePolicyConfig::default();
        if let Some(v) = map.parsed("min_leaf_size")? {
            tree.cart.min_leaf_size = v;
        }
        if let Some(v) = map.parsed("cv_folds")? {
            tree.cart.cv_folds = v;
        }
        if let Some(v) = map.get("complexity_grid") {
            tree.cart.complexity_grid = v
                .split(',')
                .map(|c| c.trim().parse().map_err(|_| Error::Config(format!("`complexity_grid`: cannot parse `{c}`"))))
                .collect::<Result<_>>()?;
        }
        if let Some(v) = map.get("failure_threshold") {
            tree.guard.failure_threshold = match v {
                "none" | "inf" => None,
                _ => Some(v.parse().map_err(|_| Error::Config(format!("`failure_threshold`: cannot parse `{v}`")))?),
            };
        }
        if let Some(v) = map.parsed("prior_injection")? {
            tree.guard.prior_injection = v;
        }
        if let Some(v) = map.parsed("prior_successes")? {
            tree.prior_successes = v;
        }
        if let Some(v) = map.parsed("prior_failures")? {
            tree.prior_failures = v;
        }
        if let Some(v) = map.parsed("refit_growth")? {
            tree.refit_growth = v;
        }
        tree.cart.validate()?;
        tree.guard.validate()?;

        let mut preprocess = PreprocessSpec::default();
        if let Some(v) = map.parsed("rare_class_cutoff")? {
            preprocess.rare_class_cutoff = v;
        }
        if let Some(v) = map.parsed("standardize_continuous")? {
            preprocess.standardize_continuous = v;
        }

        let config = Self {
            policy,
            env,
            horizon: map.required("horizon")?,
            replications: map.parsed("reps")?.unwrap_or(20),
            seed: map.parsed("seed")?.unwrap_or(0),
            out: map.parsed("out")?.unwrap_or_else(|| PathBuf::from("out")),
            relative: map.parsed("relative")?.unwrap_or(false),
            tree,
            preprocess,
        };
        if config.horizon == 0 || config.replications == 0 {
            return Err(Error::Config("horizon and reps must be at least 1".into()));
        }
        if config.relative && !matches!(config.env, EnvSpec::Dataset { .. }) {
            return Err(Error::Config("`relative` needs a dataset environment".into()));
        }
        Ok(config)
    }

    /// Canonical text form; parsing it yields the same configuration.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| writeln!(s, "{k} = {v}").expect("writing to a string");
        kv("policy", &self.policy);
        match &self.env {
            EnvSpec::Simulator { truth } => {
                kv("env", &"sim");
                if let Some(t) = truth {
                    kv("truth", &t.display());
                }
            }
            EnvSpec::Dataset { data, schema } => {
                kv("env", &"dataset");
                kv("dataset", &data.display());
                kv("schema", &schema.display());
            }
        }
        kv("horizon", &self.horizon);
        kv("reps", &self.replications);
        kv("seed", &self.seed);
        kv("out", &self.out.display());
        kv("relative", &self.relative);
        kv("min_leaf_size", &self.tree.cart.min_leaf_size);
        kv("cv_folds", &self.tree.cart.cv_folds);
        let grid: Vec<String> = self.tree.cart.complexity_grid.iter().map(f64::to_string).collect();
        kv("complexity_grid", &grid.join(","));
        match self.tree.guard.failure_threshold {
            Some(t) => kv("failure_threshold", &t),
            None => kv("failure_threshold", &"none"),
        }
        kv("prior_injection", &self.tree.guard.prior_injection);
        kv("prior_successes", &self.tree.prior_successes);
        kv("prior_failures", &self.tree.prior_failures);
        kv("refit_growth", &self.tree.refit_growth);
        kv("rare_class_cutoff", &self.preprocess.rare_class_cutoff);
        kv("standardize_continuous", &self.preprocess.standardize_continuous);
        s
    }
}
