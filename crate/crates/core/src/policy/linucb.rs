use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use super::{check_action, Policy};
use crate::env::Encoder;
use crate::error::{Error, Result};
use crate::linear::{ridge_solve, select_ridge_lambda, LinearRows, REGULARIZATION_GRID};
use crate::math::{argmax_uniform, dot, sqrt, Matrix};
use crate::schema::ContextVector;

/// Rows up to which the regularisation is retuned after every update; beyond it, on doubling.
pub(crate) const RETUNE_EVERY_UPDATE_UNTIL: usize = 100;

pub(crate) fn retune_due(rows: usize, last: usize) -> bool {
    rows <= RETUNE_EVERY_UPDATE_UNTIL || rows >= 2 * last
}

/// `x·θ + α √(xᵀ A⁻¹ x)` with `θ = (A + λI)⁻¹ b`.
pub fn lin_ucb_score(a: &Matrix, b: &[f64], lambda: f64, alpha: f64, x: &[f64]) -> Result<f64> {
    let theta = ridge_solve(a, b, lambda)?;
    let width = a
        .cholesky()
        .ok_or_else(|| Error::NumericalFailure("design matrix is not positive definite".into()))?
        .inverse_quadratic_form(x);
    finite(dot(x, &theta) + alpha * sqrt(width))
}

fn finite(score: f64) -> Result<f64> {
    if score.is_finite() {
        Ok(score)
    } else {
        Err(Error::NumericalFailure(format!("non-finite UCB score {score}")))
    }
}

#[derive(Debug, Clone)]
struct Arm {
    design: Matrix,
    response: Vec<f64>,
    rows: LinearRows,
    lambda: f64,
    tuned_at: usize,
    /// `(θ, Cholesky factor of A)` for the current state.
    cache: Option<(Vec<f64>, crate::math::Cholesky)>,
}

/// Ridge-regression upper-confidence-bound policy over encoded contexts.
#[derive(Debug, Clone)]
pub struct LinUcb {
    encoder: Arc<Encoder>,
    alpha: f64,
    arms: Vec<Arm>,
}

impl LinUcb {
    pub fn new(encoder: Arc<Encoder>, num_actions: usize, alpha: f64) -> Result<Self> {
        if num_actions == 0 {
            return Err(Error::InvalidConfig("at least one action is required".into()));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidConfig(format!("alpha {alpha} must be finite and non-negative")));
        }
        let d = encoder.dimension();
        let arm = Arm {
            design: Matrix::identity(d),
            response: vec![0.0; d],
            rows: LinearRows::default(),
            lambda: 1.0,
            tuned_at: 0,
            cache: None,
        };
        Ok(Self { encoder, alpha, arms: vec![arm; num_actions] })
    }

    pub fn design_matrix(&self, action: usize) -> &Matrix {
        &self.arms[action].design
    }

    pub fn response(&self, action: usize) -> &[f64] {
        &self.arms[action].response
    }

    /// Ridge weight currently used by `action`.
    pub fn lambda(&self, action: usize) -> f64 {
        self.arms[action].lambda
    }

    /// UCB score of every arm at an encoded context.
    pub fn scores(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        let alpha = self.alpha;
        self.arms
            .iter_mut()
            .map(|arm| {
                if arm.cache.is_none() {
                    let theta = ridge_solve(&arm.design, &arm.response, arm.lambda)?;
                    let chol = arm
                        .design
                        .cholesky()
                        .ok_or_else(|| Error::NumericalFailure("design matrix is not positive definite".into()))?;
                    arm.cache = Some((theta, chol));
                }
                let (theta, chol) = arm.cache.as_ref().expect("filled above");
                finite(dot(x, theta) + alpha * sqrt(chol.inverse_quadratic_form(x)))
            })
            .collect()
    }
}

impl Policy for LinUcb {
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
        let r = if reward { 1.0 } else { 0.0 };
        let dim = self.encoder.dimension();
        let arm = &mut self.arms[action];
        arm.design.add_outer(&x, 1.0);
        for (b, xi) in arm.response.iter_mut().zip(&x) {
            *b += r * xi;
        }
        arm.rows.push(x, r);
        arm.cache = None;
        let n = arm.rows.len();
        if retune_due(n, arm.tuned_at) {
            if let Some(lambda) = select_ridge_lambda(&arm.rows, dim, 1.0, &REGULARIZATION_GRID)? {
                arm.lambda = lambda;
            }
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
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn encoder() -> Arc<Encoder> {
        let schema = Arc::new(FeatureSchema::new(vec![Feature::categorical("g", ["a", "b", "c"])]).unwrap());
        Arc::new(Encoder::fit(schema, [], &PreprocessSpec::default()).unwrap())
    }

    #[test]
    fn hand_computed_score() {
        let mut a = Matrix::zeros(1);
        a.set(0, 0, 2.0);
        let s = lin_ucb_score(&a, &[1.0], 1.0, 1.0, &[1.0]).unwrap();
        assert!((s - (1.0 / 3.0 + 1.0 / sqrt(2.0))).abs() < 1e-15);
    }

    #[test]
    fn update_adds_outer_product() {
        let mut p = LinUcb::new(encoder(), 2, 1.0).unwrap();
        let ctx = ContextVector::from_levels(&[1]);
        let before = p.design_matrix(1).clone();
        p.update(&ctx, 1, true).unwrap();
        let x = [0.0, 1.0, 0.0];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(p.design_matrix(1).get(i, j), before.get(i, j) + x[i] * x[j]);
            }
        }
        assert_eq!(p.response(1), &x);
        assert_eq!(p.design_matrix(0), &Matrix::identity(3));
    }

    #[test]
    fn fresh_arms_tie_at_alpha_norm() {
        let mut p = LinUcb::new(encoder(), 3, 0.7).unwrap();
        let scores = p.scores(&[0.0, 0.0, 1.0]).unwrap();
        assert!(scores.iter().all(|&s| (s - 0.7).abs() < 1e-15));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut hits = [0; 3];
        for _ in 0..3000 {
            hits[p.select(&ContextVector::from_levels(&[2]), &mut rng).unwrap()] += 1;
        }
        assert!(hits.iter().all(|&h| h > 850), "{hits:?}");
    }
}
