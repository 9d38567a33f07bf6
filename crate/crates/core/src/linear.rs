//! Ridge and L2-regularised logistic regression with cross-validated regularisation, used by the
//! UCB baselines.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{dot, exp, ln, logistic, Cholesky, Matrix};

/// Candidate regularisation weights searched by cross-validation.
pub const REGULARIZATION_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

/// Number of deterministic folds (row `i` goes to fold `i mod CV_FOLDS`).
pub const CV_FOLDS: usize = 5;

/// Rows of a real-valued regression problem.
#[derive(Debug, Clone, Default)]
pub struct LinearRows {
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<f64>,
}

impl LinearRows {
    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn push(&mut self, x: Vec<f64>, y: f64) {
        self.xs.push(x);
        self.ys.push(y);
    }
}

fn factor(m: &Matrix) -> Result<Cholesky> {
    m.cholesky().ok_or_else(|| Error::NumericalFailure("matrix is not positive definite".into()))
}

/// Ridge solution of `(gram + λI) θ = xty`.
pub fn ridge_solve(gram: &Matrix, xty: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let mut m = gram.clone();
    m.add_diagonal(lambda);
    Ok(factor(&m)?.solve(xty))
}

/// Picks `λ` from `grid` by `CV_FOLDS`-fold squared loss for the estimator
/// `θ = (base·I + XᵀX + λI)⁻¹ Xᵀy`. Ties keep the smaller `λ`.
///
/// Returns `None` when there are fewer rows than folds.
pub fn select_ridge_lambda(rows: &LinearRows, dim: usize, base: f64, grid: &[f64]) -> Result<Option<f64>> {
    if rows.len() < CV_FOLDS || grid.is_empty() {
        return Ok(None);
    }
    let mut fold_gram = vec![Matrix::zeros(dim); CV_FOLDS];
    let mut fold_xty = vec![vec![0.0; dim]; CV_FOLDS];
    for (i, (x, &y)) in rows.xs.iter().zip(&rows.ys).enumerate() {
        fold_gram[i % CV_FOLDS].add_outer(x, 1.0);
        for (acc, xi) in fold_xty[i % CV_FOLDS].iter_mut().zip(x) {
            *acc += y * xi;
        }
    }
    let mut total_gram = Matrix::zeros(dim);
    total_gram.add_diagonal(base);
    let mut total_xty = vec![0.0; dim];
    for (gram, xty) in fold_gram.iter().zip(&fold_xty) {
        total_gram.add_assign(gram);
        for (t, v) in total_xty.iter_mut().zip(xty) {
            *t += v;
        }
    }

    let mut best: Option<(f64, f64)> = None;
    for &lambda in grid {
        let mut loss = 0.0;
        for f in 0..CV_FOLDS {
            let mut gram = total_gram.clone();
            gram.sub_assign(&fold_gram[f]);
            let xty: Vec<f64> = total_xty.iter().zip(&fold_xty[f]).map(|(a, b)| a - b).collect();
            let theta = ridge_solve(&gram, &xty, lambda)?;
            for (x, &y) in rows.xs.iter().zip(&rows.ys).skip(f).step_by(CV_FOLDS) {
                let r = y - dot(x, &theta);
                loss += r * r;
            }
        }
        if best.is_none_or(|(_, l)| loss < l) {
            best = Some((lambda, loss));
        }
    }
    Ok(best.map(|(lambda, _)| lambda))
}

const NEWTON_MAX_ITER: usize = 100;

/// Minimises `Σ [log(1 + e^{x·θ}) − y x·θ] + (λ/2)‖θ‖²` by damped Newton iterations.
pub fn fit_logistic(xs: &[&[f64]], ys: &[f64], dim: usize, lambda: f64) -> Result<Vec<f64>> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidConfig(format!("logistic penalty must be positive, got {lambda}")));
    }
    let objective = |theta: &[f64]| -> f64 {
        let mut v = 0.5 * lambda * dot(theta, theta);
        for (x, &y) in xs.iter().zip(ys) {
            let z = dot(x, theta);
            // log(1 + e^z) computed stably
            v += if z > 0.0 { z + libm::log1p(exp(-z)) } else { libm::log1p(exp(z)) } - y * z;
        }
        v
    };
    let mut theta = vec![0.0; dim];
    let mut value = objective(&theta);
    for _ in 0..NEWTON_MAX_ITER {
        let mut grad: Vec<f64> = theta.iter().map(|t| lambda * t).collect();
        let mut hess = Matrix::zeros(dim);
        hess.add_diagonal(lambda);
        for (x, &y) in xs.iter().zip(ys) {
            let mu = logistic(dot(x, &theta));
            for (g, xi) in grad.iter_mut().zip(x.iter()) {
                *g += (mu - y) * xi;
            }
            hess.add_outer(x, mu * (1.0 - mu));
        }
        let step = factor(&hess)?.solve(&grad);
        let mut scale = 1.0;
        let mut next: Vec<f64>;
        let mut next_value;
        loop {
            next = theta.iter().zip(&step).map(|(t, s)| t - scale * s).collect();
            next_value = objective(&next);
            if next_value <= value || scale < 1e-10 {
                break;
            }
            scale *= 0.5;
        }
        let moved = step.iter().fold(0.0f64, |m, s| m.max((scale * s).abs()));
        theta = next;
        let improvement = value - next_value;
        value = next_value;
        if !value.is_finite() {
            return Err(Error::NumericalFailure("logistic objective diverged".into()));
        }
        if moved < 1e-9 || improvement.abs() < 1e-12 * (1.0 + value.abs()) {
            return Ok(theta);
        }
    }
    Err(Error::NonConvergence(NEWTON_MAX_ITER))
}

/// Picks `λ` from `grid` by `CV_FOLDS`-fold held-out log-loss. Ties keep the smaller `λ`.
///
/// Returns `None` when there are fewer rows than folds.
pub fn select_logistic_lambda(rows: &LinearRows, dim: usize, grid: &[f64]) -> Result<Option<f64>> {
    if rows.len() < CV_FOLDS || grid.is_empty() {
        return Ok(None);
    }
    let mut best: Option<(f64, f64)> = None;
    for &lambda in grid {
        let mut loss = 0.0;
        for f in 0..CV_FOLDS {
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            for (i, (x, &y)) in rows.xs.iter().zip(&rows.ys).enumerate() {
                if i % CV_FOLDS != f {
                    xs.push(x.as_slice());
                    ys.push(y);
                }
            }
            let theta = fit_logistic(&xs, &ys, dim, lambda)?;
            for (x, &y) in rows.xs.iter().zip(&rows.ys).skip(f).step_by(CV_FOLDS) {
                let p = logistic(dot(x, &theta)).clamp(1e-12, 1.0 - 1e-12);
                loss -= y * ln(p) + (1.0 - y) * ln(1.0 - p);
            }
        }
        if best.is_none_or(|(_, l)| loss < l) {
            best = Some((lambda, loss));
        }
    }
    Ok(best.map(|(lambda, _)| lambda))
}
