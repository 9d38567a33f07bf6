//! Scalar math for `no_std` builds plus a few small dense linear-algebra helpers.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln C(n, k)`.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Binomial(n, p) probability mass at `k`.
pub fn binomial_pmf(n: u64, p: f64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    if p <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    exp(ln_choose(n, k) + k as f64 * ln(p) + (n - k) as f64 * libm::log1p(-p))
}

/// Whole Binomial(n, p) pmf vector, indices `0..=n`.
pub fn binomial_pmf_vec(n: u64, p: f64) -> Vec<f64> {
    (0..=n).map(|k| binomial_pmf(n, p, k)).collect()
}

/// Logistic link `e^y / (1 + e^y)`, evaluated without overflow.
pub fn logistic(y: f64) -> f64 {
    if y >= 0.0 {
        1.0 / (1.0 + exp(-y))
    } else {
        let e = exp(y);
        e / (1.0 + e)
    }
}

/// Index of the maximum score, ties broken uniformly at random.
///
/// Returns `None` for an empty slice or when every score is NaN.
pub fn argmax_uniform<R: Rng + ?Sized>(scores: &[f64], rng: &mut R) -> Option<usize> {
    let mut best = f64::NEG_INFINITY;
    let mut chosen = None;
    let mut ties = 0u32;
    for (i, &s) in scores.iter().enumerate() {
        if s.is_nan() {
            continue;
        }
        if chosen.is_none() || s > best {
            best = s;
            chosen = Some(i);
            ties = 1;
        } else if s == best {
            // reservoir sampling over the tied set
            ties += 1;
            if rng.random_range(0..ties) == 0 {
                chosen = Some(i);
            }
        }
    }
    chosen
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    /// `self += w * x xᵀ`.
    pub fn add_outer(&mut self, x: &[f64], w: f64) {
        let d = self.dim;
        for i in 0..d {
            let xi = w * x[i];
            if xi == 0.0 {
                continue;
            }
            let row = &mut self.data[i * d..(i + 1) * d];
            for (r, xj) in row.iter_mut().zip(x) {
                *r += xi * xj;
            }
        }
    }

    pub fn add_diagonal(&mut self, v: f64) {
        for i in 0..self.dim {
            self.data[i * self.dim + i] += v;
        }
    }

    pub fn add_assign(&mut self, other: &Matrix) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn sub_assign(&mut self, other: &Matrix) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    pub fn cholesky(&self) -> Option<Cholesky> {
        Cholesky::new(self)
    }
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    pub fn new(a: &Matrix) -> Option<Self> {
        let d = a.dim;
        let mut l = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l[i * d + k] * l[j * d + k];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return None;
                    }
                    l[i * d + i] = sqrt(s);
                } else {
                    l[i * d + j] = s / l[j * d + j];
                }
            }
        }
        Some(Self { dim: d, lower: l })
    }

    /// Solves `L y = b` in place.
    fn forward(&self, b: &mut [f64]) {
        let d = self.dim;
        for i in 0..d {
            let mut s = b[i];
            for k in 0..i {
                s -= self.lower[i * d + k] * b[k];
            }
            b[i] = s / self.lower[i * d + i];
        }
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut x = b.to_vec();
        self.forward(&mut x);
        for i in (0..d).rev() {
            let mut s = x[i];
            for k in i + 1..d {
                s -= self.lower[k * d + i] * x[k];
            }
            x[i] = s / self.lower[i * d + i];
        }
        x
    }

    /// `xᵀ A⁻¹ x`, computed as `‖L⁻¹ x‖²`.
    pub fn inverse_quadratic_form(&self, x: &[f64]) -> f64 {
        let mut y = x.to_vec();
        self.forward(&mut y);
        dot(&y, &y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pmf_sums_to_one() {
        let s: f64 = binomial_pmf_vec(37, 0.3).iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert_eq!(binomial_pmf(4, 0.5, 2), 0.375);
    }

    #[test]
    fn logistic_is_symmetric() {
        assert_eq!(logistic(0.0), 0.5);
        for y in [1.0, -1.0, 3.0, -3.0, 800.0] {
            assert!((logistic(y) + logistic(-y) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn argmax_breaks_ties_uniformly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut hits = [0u32; 3];
        for _ in 0..30_000 {
            hits[argmax_uniform(&[1.0, 0.0, 1.0], &mut rng).unwrap()] += 1;
        }
        assert_eq!(hits[1], 0);
        assert!((hits[0] as f64 / 30_000.0 - 0.5).abs() < 0.02);
        assert_eq!(argmax_uniform(&[], &mut rng), None);
        assert_eq!(argmax_uniform(&[f64::INFINITY, 2.0], &mut rng), Some(0));
    }

    #[test]
    fn cholesky_solves() {
        let mut a = Matrix::identity(2);
        a.add_outer(&[1.0, 2.0], 1.0);
        let c = a.cholesky().unwrap();
        let x = c.solve(&[1.0, 0.0]);
        // A = [[2,2],[2,5]], A^-1 = [[5,-2],[-2,2]]/6
        assert!((x[0] - 5.0 / 6.0).abs() < 1e-12);
        assert!((x[1] + 2.0 / 6.0).abs() < 1e-12);
        assert!((c.inverse_quadratic_form(&[1.0, 0.0]) - 5.0 / 6.0).abs() < 1e-12);
    }
}
