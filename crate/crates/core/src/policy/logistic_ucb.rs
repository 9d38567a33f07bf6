use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use super::linucb::retune_due;
use super::{check_action, Policy};
use crate::env::Encoder;
use crate::error::{Error, Result};
use crate::linear::{fit_logistic, select_logistic_lambda, LinearRows, REGULARIZATION_GRID};
use crate::math::{argmax_uniform, dot, ln, logistic, sqrt, Cholesky, Matrix};
use crate::schema::ContextVector;

/// Confidence level `δ` of the width `ρ`.
pub const DEFAULT_DELTA: f64 = 0.05;

/// `ρ(s) = √(M' · ln s · ln(sT/δ))`, taken as `+∞` for `s ≤ 1` where `ln s ≤ 0`.
pub fn confidence_radius(dim: usize, pulls: u64, horizon: u64, delta: f64) -> f64 {
    if pulls <= 1 {
        return f64::INFINITY;
    }
    let s = pulls as f64;
    sqrt(dim as f64 * ln(s) * ln(s * horizon as f64 / delta))
}

#[derive(Debug, Clone)]
struct Arm {
    design: Matrix,
    factor: Option<Cholesky>,
    theta: Vec<f64>,
    rows: LinearRows,
    lambda: f64,
    tuned_at: usize,
}

/// Generalised-linear UCB with a logistic link: `𝓛(x·θ̂_a) + α ρ(t_a) ‖x‖_{X_a⁻¹}`.
#[derive(Debug, Clone)]
pub struct LogisticUcb {
    encoder: Arc<Encoder>,
    alpha: f64,
    horizon: u64,
    delta: f64,
    arms: Vec<Arm>,
}

impl LogisticUcb {
    pub fn new(encoder: Arc<Encoder>, num_actions: usize, alpha: f64, horizon: u64, delta: f64) -> Result<Self> {
        if num_actions == 0 {
            return Err(Error::InvalidConfig("at least one action is required".into()));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidConfig(format!("alpha {alpha} must be finite and non-negative")));
        }
        if horizon == 0 || !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidConfig(format!("need horizon ≥ 1 and δ in (0, 1), got {horizon} and {delta}")));
        }
        let d = encoder.dimension();
        let arm = Arm {
            design: Matrix::identity(d),
            factor: None,
            theta: vec![0.0; d],
            rows: LinearRows::default(),
            lambda: 1.0,
            tuned_at: 0,
        };
        Ok(Self { encoder, alpha, horizon, delta, arms: vec![arm; num_actions] })
    }

    pub fn theta(&self, action: usize) -> &[f64] {
        &self.arms[action].theta
    }

    pub fn design_matrix(&self, action: usize) -> &Matrix {
        &self.arms[action].design
    }

    /// Exploration term `ρ(t_a) ‖x‖_{X_a⁻¹}` of `action` at an encoded context.
    pub fn width(&mut self, action: usize, x: &[f64]) -> Result<f64> {
        let dim = self.encoder.dimension();
        let arm = &mut self.arms[action];
        let rho = confidence_radius(dim, arm.rows.len() as u64, self.horizon, self.delta);
        if rho.is_infinite() {
            return Ok(rho);
        }
        if arm.factor.is_none() {
            arm.factor = Some(
                arm.design.cholesky().ok_or_else(|| Error::NumericalFailure("design matrix is not positive definite".into()))?,
            );
        }
        let norm = sqrt(arm.factor.as_ref().expect("filled above").inverse_quadratic_form(x));
        Ok(rho * norm)
    }

    /// UCB score of every arm at an encoded context.
    pub fn scores(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        (0..self.arms.len())
            .map(|a| {
                let w = self.width(a, x)?;
                if w.is_infinite() {
                    // too few pulls for a finite radius: explore unconditionally
                    return Ok(f64::INFINITY);
                }
                let s = logistic(dot(x, &self.arms[a].theta)) + self.alpha * w;
                if s.is_finite() {
                    Ok(s)
                } else {
                    Err(Error::NumericalFailure(format!("non-finite UCB score {s}")))
                }
            })
            .collect()
    }
}

impl Policy for LogisticUcb {
    fn num_actions(&self) -> usize {
        self.arms.len()
    }

    fn select(&mut self, context: &ContextVector, rng: &mut dyn RngCore) -> Result<usize> {
        let x = self.encoder.encode(context)?;
        let scores = self.scores(&x)?;
        Ok(argmax_uniform(&scores, rng).expect("at least one arm"))
    }

    fn update(&mut self, context: &ContextVector, action: usize, reward: bool) -> Result<()> {
        check_action(action, self.arms.len())?;
        let x = self.encoder.encode(context)?;
        let dim = self.encoder.dimension();
        let arm = &mut self.arms[action];
        arm.design.add_outer(&x, 1.0);
        arm.factor = None;
        arm.rows.push(x, if reward { 1.0 } else { 0.0 });
        let n = arm.rows.len();
        if retune_due(n, arm.tuned_at) {
            if let Some(lambda) = select_logistic_lambda(&arm.rows, dim, &REGULARIZATION_GRID)? {
                arm.lambda = lambda;
            }
            let xs: Vec<&[f64]> = arm.rows.xs.iter().map(|x| x.as_slice()).collect();
            arm.theta = fit_logistic(&xs, &arm.rows.ys, dim, arm.lambda)?;
            arm.tuned_at = n;
        }
        Ok(())
    }

    fn history_len(&self, action: usize) -> usize {
        self.arms[action].rows.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::PreprocessSpec;
    use crate::schema::{Feature, FeatureSchema};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn encoder() -> Arc<Encoder> {
        let schema = Arc::new(FeatureSchema::new(vec![Feature::categorical("g", ["a", "b"])]).unwrap());
        Arc::new(Encoder::fit(schema, [], &PreprocessSpec::default()).unwrap())
    }

    #[test]
    fn radius_formula() {
        let expected = sqrt(2.0 * ln(8.0) * ln(800.0 / 0.05));
        assert!((confidence_radius(2, 8, 100, 0.05) - expected).abs() < 1e-12);
        assert!(confidence_radius(2, 1, 100, 0.05).is_infinite());
        assert!(confidence_radius(2, 0, 100, 0.05).is_infinite());
    }

    #[test]
    fn width_at_identity_design() {
        let mut p = LogisticUcb::new(encoder(), 1, 1.0, 100, 0.05).unwrap();
        let ctx = ContextVector::from_levels(&[1]);
        for _ in 0..8 {
            p.update(&ctx, 0, true).unwrap();
        }
        // x = (1, 0) never touched the design, so ‖x‖ in the inverse metric is 1
        let w = p.width(0, &[1.0, 0.0]).unwrap();
        assert!((w - confidence_radius(2, 8, 100, 0.05)).abs() < 1e-12);
    }

    #[test]
    fn learns_to_prefer_the_better_arm() {
        let mut p = LogisticUcb::new(encoder(), 2, 0.01, 2000, DEFAULT_DELTA).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut late = [0; 2];
        for t in 0..2000 {
            let level = rng.random_range(0..2u32);
            let ctx = ContextVector::from_levels(&[level]);
            let a = p.select(&ctx, &mut rng).unwrap();
            let best = level as usize;
            let reward = rng.random_bool(if a == best { 0.8 } else { 0.2 });
            p.update(&ctx, a, reward).unwrap();
            if t >= 1500 {
                late[usize::from(a == best)] += 1;
            }
        }
        assert!(late[1] > 400, "{late:?}");
        assert!(p.theta(0)[0] > p.theta(0)[1]);
    }
}
