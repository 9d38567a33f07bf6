//! Action-selection policies: the bootstrapped and heuristic tree policies and the benchmark
//! baselines.
//!
//! Actions are zero-based indices `0..K` everywhere in the library; user-facing output numbers
//! them `1..K`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::schema::ContextVector;

mod linucb;
mod logistic_ucb;
mod offline_tree;
mod thompson;
mod tree_bootstrap;
mod tree_heuristic;

pub use linucb::{lin_ucb_score, LinUcb};
pub use logistic_ucb::{confidence_radius, LogisticUcb, DEFAULT_DELTA};
pub use offline_tree::{offline_tree_fit, OfflineTree};
pub use thompson::ContextFreeTs;
pub use tree_bootstrap::TreeBootstrap;
pub use tree_heuristic::{TreeHeuristic, DEFAULT_REFIT_GROWTH};

/// The select/update contract shared by every policy.
pub trait Policy {
    fn num_actions(&self) -> usize;

    /// Chooses an action in `0..num_actions()` for `context`.
    fn select(&mut self, context: &ContextVector, rng: &mut dyn RngCore) -> Result<usize>;

    /// Records the reward observed for `action` at `context`.
    fn update(&mut self, context: &ContextVector, action: usize, reward: bool) -> Result<()>;

    /// Number of observations recorded for `action`.
    fn history_len(&self, action: usize) -> usize;
}

pub(crate) fn check_action(action: usize, num_actions: usize) -> Result<()> {
    if action < num_actions {
        Ok(())
    } else {
        Err(Error::InvalidAction { action, num_actions })
    }
}

/// Textual policy identifiers accepted by the harness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicySpec {
    TreeBootstrap,
    TreeHeuristic,
    ContextFreeTs,
    LinUcb { alpha: f64 },
    LogisticUcb { alpha: f64 },
    OfflineTree,
}

impl PolicySpec {
    /// Same family with a different UCB width; `None` for policies without one.
    pub fn with_alpha(self, alpha: f64) -> Option<Self> {
        match self {
            PolicySpec::LinUcb { .. } => Some(PolicySpec::LinUcb { alpha }),
            PolicySpec::LogisticUcb { .. } => Some(PolicySpec::LogisticUcb { alpha }),
            _ => None,
        }
    }
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, params) = s.split_once(':').unwrap_or((s, ""));
        let alpha = || -> Result<f64> {
            let value = params
                .strip_prefix("alpha=")
                .ok_or_else(|| Error::UnknownPolicy(format!("{s} (expected `{name}:alpha=<v>`)")))?;
            let alpha: f64 = value.parse().map_err(|_| Error::UnknownPolicy(format!("{s} (bad alpha)")))?;
            if alpha.is_finite() && alpha >= 0.0 {
                Ok(alpha)
            } else {
                Err(Error::UnknownPolicy(format!("{s} (alpha must be finite and non-negative)")))
            }
        };
        let plain = |spec| if params.is_empty() { Ok(spec) } else { Err(Error::UnknownPolicy(s.to_string())) };
        match name {
            "tree-bootstrap" => plain(PolicySpec::TreeBootstrap),
            "tree-heuristic" => plain(PolicySpec::TreeHeuristic),
            "ts-free" => plain(PolicySpec::ContextFreeTs),
            "offline-tree" => plain(PolicySpec::OfflineTree),
            "linucb" => Ok(PolicySpec::LinUcb { alpha: alpha()? }),
            "logucb" => Ok(PolicySpec::LogisticUcb { alpha: alpha()? }),
            _ => Err(Error::UnknownPolicy(s.to_string())),
        }
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::TreeBootstrap => f.write_str("tree-bootstrap"),
            PolicySpec::TreeHeuristic => f.write_str("tree-heuristic"),
            PolicySpec::ContextFreeTs => f.write_str("ts-free"),
            PolicySpec::OfflineTree => f.write_str("offline-tree"),
            PolicySpec::LinUcb { alpha } => write!(f, "linucb:alpha={alpha}"),
            PolicySpec::LogisticUcb { alpha } => write!(f, "logucb:alpha={alpha}"),
        }
    }
}

/// How TreeBootstrap keeps a single early failure from starving an arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GuardConfig {
    /// Failures without a success after which an arm is eliminated; `None` never eliminates.
    pub failure_threshold: Option<u64>,
    /// Seed every arm with one fabricated success and one fabricated failure instead of forcing.
    pub prior_injection: bool,
}

impl Default for GuardConfig {
    fn default() -> Self {
        Self { failure_threshold: Some(20), prior_injection: false }
    }
}

impl GuardConfig {
    pub fn validate(&self) -> Result<()> {
        if self.failure_threshold == Some(0) {
            return Err(Error::InvalidConfig("failure threshold must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArmMode {
    /// No success yet: offered ahead of every free arm.
    Forced,
    Free,
    /// Too many failures without a success: never offered again.
    Eliminated,
}

/// Per-arm forced-exploration bookkeeping.
///
/// With prior injection the fabricated success counts as seen, so no arm is ever forced or
/// eliminated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArmGuard {
    config: GuardConfig,
    successes: Vec<u64>,
    failures: Vec<u64>,
}

impl ArmGuard {
    pub fn new(num_actions: usize, config: GuardConfig) -> Self {
        let seeded = u64::from(config.prior_injection);
        Self { config, successes: vec![seeded; num_actions], failures: vec![seeded; num_actions] }
    }

    pub fn config(&self) -> &GuardConfig {
        &self.config
    }

    pub fn mode(&self, action: usize) -> ArmMode {
        if self.successes[action] > 0 {
            ArmMode::Free
        } else if self.config.failure_threshold.is_some_and(|t| self.failures[action] >= t) {
            ArmMode::Eliminated
        } else {
            ArmMode::Forced
        }
    }

    pub fn record(&mut self, action: usize, reward: bool) {
        if reward {
            self.successes[action] += 1;
        } else {
            self.failures[action] += 1;
        }
    }

    /// The forced arm to offer next: fewest failures so far, then lowest index. Forced arms
    /// thus take turns, and an empty start offers arm 0 first.
    pub fn next_forced(&self) -> Option<usize> {
        (0..self.successes.len())
            .filter(|&a| self.mode(a) == ArmMode::Forced)
            .min_by_key(|&a| (self.failures[a], a))
    }

    pub fn playable(&self, action: usize) -> bool {
        self.mode(action) != ArmMode::Eliminated
    }

    pub fn seen(&self, action: usize) -> (u64, u64) {
        (self.successes[action], self.failures[action])
    }
}

/// Settings shared by the policies that build trees.
#[derive(Debug, Clone, PartialEq)]
pub struct TreePolicyConfig {
    pub cart: crate::tree::CartConfig,
    pub guard: GuardConfig,
    /// Prior successes `S0` added to leaf counts by TreeHeuristic.
    pub prior_successes: f64,
    /// Prior failures `F0` added to leaf counts by TreeHeuristic.
    pub prior_failures: f64,
    /// TreeHeuristic refit factor; see [`TreeHeuristic::with_refit_growth`].
    pub refit_growth: f64,
}

impl Default for TreePolicyConfig {
    fn default() -> Self {
        Self {
            cart: crate::tree::CartConfig::default(),
            guard: GuardConfig::default(),
            prior_successes: 1.0,
            prior_failures: 1.0,
            refit_growth: tree_heuristic::DEFAULT_REFIT_GROWTH,
        }
    }
}

/// Human-readable name list, used in error messages.
pub fn known_policies() -> String {
    ["tree-bootstrap", "tree-heuristic", "ts-free", "linucb:alpha=<v>", "logucb:alpha=<v>", "offline-tree"].join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_strings_round_trip() {
        for s in ["tree-bootstrap", "tree-heuristic", "ts-free", "offline-tree", "linucb:alpha=0.1", "logucb:alpha=10"] {
            let spec: PolicySpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert_eq!("linucb:alpha=0.0001".parse::<PolicySpec>().unwrap(), PolicySpec::LinUcb { alpha: 0.0001 });
        for bad in ["linucb", "linucb:alpha=x", "logucb:alpha=-1", "ts-free:alpha=1", "forest"] {
            assert!(matches!(bad.parse::<PolicySpec>(), Err(Error::UnknownPolicy(_))), "{bad}");
        }
    }

    #[test]
    fn guard_transitions() {
        let mut g = ArmGuard::new(2, GuardConfig { failure_threshold: Some(10), prior_injection: false });
        assert_eq!(g.next_forced(), Some(0));
        g.record(0, true);
        assert_eq!(g.mode(0), ArmMode::Free);
        for i in 1..=10 {
            assert_eq!(g.mode(1), ArmMode::Forced);
            g.record(1, false);
            assert_eq!(g.mode(1) == ArmMode::Eliminated, i == 10);
        }
        assert_eq!(g.next_forced(), None);
        assert!(!g.playable(1));

        let g = ArmGuard::new(3, GuardConfig { failure_threshold: None, prior_injection: true });
        assert!((0..3).all(|a| g.mode(a) == ArmMode::Free));
        let mut g = ArmGuard::new(1, GuardConfig { failure_threshold: None, prior_injection: false });
        for _ in 0..1000 {
            g.record(0, false);
        }
        assert_eq!(g.mode(0), ArmMode::Forced);
    }

    #[test]
    fn forced_arms_take_turns() {
        let mut g = ArmGuard::new(3, GuardConfig::default());
        let order: Vec<usize> = (0..6)
            .map(|_| {
                let a = g.next_forced().unwrap();
                g.record(a, false);
                a
            })
            .collect();
        assert_eq!(order, [0, 1, 2, 0, 1, 2]);
    }
}
