//! Numerical checks of the Beta-versus-scaled-binomial approximation that links bootstrap
//! sampling to Thompson sampling.
//!
//! Everything here is exact up to floating point except [`ts_action_probs`], which integrates
//! by adaptive Gauss–Kronrod quadrature.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::math::{binomial_pmf, binomial_pmf_vec, exp, floor, ln, ln_gamma, sqrt};

/// Largest joint support enumerated exactly by [`bootstrap_action_probs`].
pub const MAX_ENUMERATION_SUPPORT: u128 = 10_000_000;

/// Absolute accuracy targeted by [`ts_action_probs`].
pub const QUADRATURE_TOLERANCE: f64 = 1e-6;

/// An arm's history: `n` Bernoulli rows of which `successes` were 1, with at least one of each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArmSummary {
    n: u64,
    successes: u64,
}

impl ArmSummary {
    pub fn new(n: u64, successes: u64) -> Result<Self> {
        if n < 2 || successes == 0 || successes >= n {
            return Err(Error::InvalidArgument(format!(
                "arm needs n ≥ 2 and 0 < successes < n, got n = {n}, successes = {successes}"
            )));
        }
        Ok(Self { n, successes })
    }

    /// Arm with rate `p`; `n·p` must be an integer (to within 1e-9).
    pub fn from_rate(n: u64, p: f64) -> Result<Self> {
        let s = n as f64 * p;
        let rounded = libm::round(s);
        if !(s - rounded).abs().lt(&1e-9) || rounded < 0.0 {
            return Err(Error::InvalidArgument(format!("n·p = {s} is not an integer")));
        }
        Self::new(n, rounded as u64)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn successes(&self) -> u64 {
        self.successes
    }

    pub fn p(&self) -> f64 {
        self.successes as f64 / self.n as f64
    }

    /// Beta parameters `(n p, n (1 − p))`.
    pub fn beta_params(&self) -> (u64, u64) {
        (self.successes, self.n - self.successes)
    }

    /// Same rate with `factor` times as many rows.
    pub fn scaled(&self, factor: u64) -> Result<Self> {
        Self::new(self.n * factor, self.successes * factor)
    }
}

/// `P(Binomial(n, p) ≥ k)`, summed outward from the term nearest the mode so that underflow
/// only ever drops negligible terms.
pub fn binomial_upper_tail(n: u64, p: f64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n || p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let ratio = p / (1.0 - p);
    let mode = (floor((n + 1) as f64 * p) as u64).min(n);
    if k > mode {
        let mut term = binomial_pmf(n, p, k);
        let mut total = term;
        for j in k..n {
            term *= (n - j) as f64 / (j + 1) as f64 * ratio;
            total += term;
            if term <= total * 1e-18 {
                break;
            }
        }
        total.min(1.0)
    } else {
        let mut term = binomial_pmf(n, p, k - 1);
        let mut lower = term;
        for j in (1..k).rev() {
            term *= j as f64 / (n - j + 1) as f64 / ratio;
            lower += term;
            if term <= lower * 1e-18 {
                break;
            }
        }
        (1.0 - lower).max(0.0)
    }
}

/// Regularized incomplete beta `I_z(α, β)` for integer parameters, via
/// `I_z(α, β) = P(Binomial(α + β − 1, z) ≥ α)`.
pub fn beta_cdf(alpha: u64, beta: u64, z: f64) -> Result<f64> {
    if alpha == 0 || beta == 0 {
        return Err(Error::InvalidArgument(format!("Beta({alpha}, {beta}) needs positive integer parameters")));
    }
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::InvalidArgument(format!("z = {z} outside [0, 1]")));
    }
    Ok(binomial_upper_tail(alpha + beta - 1, z, alpha))
}

fn beta_pdf(alpha: u64, beta: u64, z: f64) -> f64 {
    if z <= 0.0 || z >= 1.0 {
        let inside = if z <= 0.0 { alpha == 1 } else { beta == 1 };
        return if inside { exp(ln_gamma((alpha + beta) as f64) - ln_gamma(alpha as f64) - ln_gamma(beta as f64)) } else { 0.0 };
    }
    let (a, b) = (alpha as f64, beta as f64);
    exp(ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + (a - 1.0) * ln(z) + (b - 1.0) * libm::log1p(-z))
}

/// `P(Y/n ≤ z)` for `Y ~ Binomial(n, p)`.
pub fn scaled_binomial_cdf(n: u64, p: f64, z: f64) -> Result<f64> {
    if n == 0 || !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("need n ≥ 1 and p in (0, 1), got n = {n}, p = {p}")));
    }
    if z < 0.0 {
        return Ok(0.0);
    }
    if z >= 1.0 {
        return Ok(1.0);
    }
    // largest k with k/n ≤ z, robust to n·z rounding just below an integer
    let mut k = floor(n as f64 * z) as u64;
    if ((k + 1) as f64 / n as f64) <= z {
        k += 1;
    }
    Ok(1.0 - binomial_upper_tail(n, p, k + 1))
}

/// Supremum over `z` of the distance between the Beta(np, n(1−p)) and Binomial(n, p)/n CDFs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfDistanceReport {
    pub n: u64,
    pub p: f64,
    pub sup_distance: f64,
    /// Location of the supremum.
    pub z_star: f64,
    /// Whether the supremum is the left limit at `z_star`.
    pub left_limit: bool,
}

/// Exact supremum of `|F_beta − F_binomial|`: only the Beta CDF moves between the binomial jump
/// points `k/n`, so the supremum is attained at a jump point or its left limit.
pub fn sup_cdf_distance(arm: ArmSummary) -> Result<CdfDistanceReport> {
    let (n, p) = (arm.n, arm.p());
    let (alpha, beta) = arm.beta_params();
    let pmf = binomial_pmf_vec(n, p);
    let mut report = CdfDistanceReport { n, p, sup_distance: 0.0, z_star: 0.0, left_limit: false };
    let mut below = 0.0;
    for k in 0..=n {
        let z = k as f64 / n as f64;
        let f = beta_cdf(alpha, beta, z)?;
        let at = if k == n { 1.0 } else { (below + pmf[k as usize]).min(1.0) };
        if k > 0 && (f - below).abs() > report.sup_distance {
            report.sup_distance = (f - below).abs();
            report.z_star = z;
            report.left_limit = true;
        }
        if (f - at).abs() > report.sup_distance {
            report.sup_distance = (f - at).abs();
            report.z_star = z;
            report.left_limit = false;
        }
        below = at;
    }
    Ok(report)
}

fn support_size(arms: &[ArmSummary]) -> u128 {
    arms.iter().fold(1u128, |acc, a| acc.saturating_mul(a.n as u128 + 1))
}

/// Indices of arms whose resampled proportion `k_a / n_a` is maximal, compared exactly.
fn maximizers(arms: &[ArmSummary], counts: &[u64], out: &mut Vec<usize>) {
    out.clear();
    out.push(0);
    for a in 1..arms.len() {
        let best = out[0];
        let lhs = counts[a] as u128 * arms[best].n as u128;
        let rhs = counts[best] as u128 * arms[a].n as u128;
        match lhs.cmp(&rhs) {
            Ordering::Greater => {
                out.clear();
                out.push(a);
            }
            Ordering::Equal => out.push(a),
            Ordering::Less => {}
        }
    }
}

/// Exact probability that each arm wins when every arm's history is resampled once and the
/// arm with the highest resampled success rate is played, ties split uniformly.
pub fn bootstrap_action_probs(arms: &[ArmSummary]) -> Result<Vec<f64>> {
    if arms.is_empty() {
        return Err(Error::InvalidArgument("no arms".into()));
    }
    let support = support_size(arms);
    if support > MAX_ENUMERATION_SUPPORT {
        return Err(Error::SupportTooLarge(support));
    }
    let pmfs: Vec<Vec<f64>> = arms.iter().map(|a| binomial_pmf_vec(a.n, a.p())).collect();
    let mut probs = vec![0.0; arms.len()];
    let mut counts = vec![0u64; arms.len()];
    let mut ties = Vec::with_capacity(arms.len());
    loop {
        let mass: f64 = counts.iter().zip(&pmfs).map(|(&k, pmf)| pmf[k as usize]).product();
        if mass > 0.0 {
            maximizers(arms, &counts, &mut ties);
            let share = mass / ties.len() as f64;
            for &a in &ties {
                probs[a] += share;
            }
        }
        // odometer over the joint support
        let mut i = 0;
        loop {
            if i == arms.len() {
                return Ok(probs);
            }
            counts[i] += 1;
            if counts[i] <= arms[i].n {
                break;
            }
            counts[i] = 0;
            i += 1;
        }
    }
}

/// Monte Carlo estimate of [`bootstrap_action_probs`] with per-arm standard errors, for supports
/// too large to enumerate.
pub fn bootstrap_action_probs_mc<R: Rng + ?Sized>(arms: &[ArmSummary], draws: u64, rng: &mut R) -> Result<(Vec<f64>, Vec<f64>)> {
    if arms.is_empty() || draws == 0 {
        return Err(Error::InvalidArgument("need arms and at least one draw".into()));
    }
    let dists: Vec<Binomial> = arms
        .iter()
        .map(|a| Binomial::new(a.n, a.p()).map_err(|e| Error::NumericalFailure(format!("{e}"))))
        .collect::<Result<_>>()?;
    let mut wins = vec![0u64; arms.len()];
    let mut counts = vec![0u64; arms.len()];
    let mut ties = Vec::with_capacity(arms.len());
    for _ in 0..draws {
        for (c, d) in counts.iter_mut().zip(&dists) {
            *c = d.sample(rng);
        }
        maximizers(arms, &counts, &mut ties);
        wins[ties[rng.random_range(0..ties.len())]] += 1;
    }
    let probs: Vec<f64> = wins.iter().map(|&w| w as f64 / draws as f64).collect();
    let se = probs.iter().map(|&p| sqrt(p * (1.0 - p) / draws as f64)).collect();
    Ok((probs, se))
}

// Gauss–Kronrod 7/15 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// One 15-point Kronrod estimate and its difference from the embedded 7-point Gauss rule.
fn gauss_kronrod<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)> {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let centre = f(c)?;
    let mut kronrod = WGK[7] * centre;
    let mut gauss = WG[3] * centre;
    for j in 0..7 {
        let pair = f(c - h * XGK[j])? + f(c + h * XGK[j])?;
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Ok((kronrod * h, ((kronrod - gauss) * h).abs()))
}

const MAX_PANELS: usize = 20_000;

/// Adaptive Gauss–Kronrod integral over consecutive `breakpoints`, bisecting panels until each
/// meets its share of the absolute tolerance `tol`.
pub fn integrate<F: FnMut(f64) -> Result<f64>>(mut f: F, breakpoints: &[f64], tol: f64) -> Result<f64> {
    let span = breakpoints[breakpoints.len() - 1] - breakpoints[0];
    let mut stack: Vec<(f64, f64)> = breakpoints.windows(2).filter(|w| w[1] > w[0]).map(|w| (w[0], w[1])).collect();
    let mut total = 0.0;
    let mut panels = 0;
    while let Some((a, b)) = stack.pop() {
        panels += 1;
        if panels > MAX_PANELS {
            return Err(Error::NonConvergence(MAX_PANELS));
        }
        let (value, err) = gauss_kronrod(&mut f, a, b)?;
        if err <= tol * (b - a) / span || b - a < 1e-12 {
            total += value;
        } else {
            let m = 0.5 * (a + b);
            stack.push((a, m));
            stack.push((m, b));
        }
    }
    Ok(total)
}

/// Probability that each arm wins under Thompson sampling with `Beta(np, n(1−p))` posteriors:
/// `∫ f_k(z) Π_{j≠k} F_j(z) dz`.
pub fn ts_action_probs(arms: &[ArmSummary]) -> Result<Vec<f64>> {
    if arms.len() < 2 {
        return Err(Error::InvalidArgument("need at least two arms".into()));
    }
    // panel edges around each posterior's bulk so narrow peaks are never stepped over
    let mut breaks = vec![0.0, 1.0];
    for arm in arms {
        let (a, b) = arm.beta_params();
        let (a, b) = (a as f64, b as f64);
        let mean = a / (a + b);
        let sd = sqrt(a * b / ((a + b) * (a + b) * (a + b + 1.0)));
        for c in [-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0] {
            let z = mean + c * sd;
            if z > 0.0 && z < 1.0 {
                breaks.push(z);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let params: Vec<(u64, u64)> = arms.iter().map(ArmSummary::beta_params).collect();
    (0..arms.len())
        .map(|k| {
            let integrand = |z: f64| -> Result<f64> {
                let mut v = beta_pdf(params[k].0, params[k].1, z);
                for (j, &(a, b)) in params.iter().enumerate() {
                    if j != k && v != 0.0 {
                        v *= beta_cdf(a, b, z.clamp(0.0, 1.0))?;
                    }
                }
                Ok(v)
            };
            integrate(integrand, &breaks, QUADRATURE_TOLERANCE * 1e-3)
        })
        .collect()
}

/// Largest single-outcome probability of an arm's resampled proportion, against the
/// Stirling-type bound `(1 + 1/(4n)) / √(2π n p (1−p))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TieBoundReport {
    pub n: u64,
    pub p: f64,
    pub tie_cap: f64,
    pub argmax: u64,
    pub bound: f64,
    pub ok: bool,
}

pub fn tie_bound_check(arm: ArmSummary) -> TieBoundReport {
    let (n, p) = (arm.n, arm.p());
    let pmf = binomial_pmf_vec(n, p);
    let (argmax, tie_cap) = pmf
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i as u64, v) } else { best });
    let bound = (1.0 + 1.0 / (4.0 * n as f64)) / sqrt(2.0 * core::f64::consts::PI * n as f64 * p * (1.0 - p));
    TieBoundReport { n, p, tie_cap, argmax, bound, ok: tie_cap <= bound }
}

/// [`tie_bound_check`] for every valid arm with `2 ≤ n ≤ max_n`.
pub fn tie_bound_exhaustive(max_n: u64) -> Vec<TieBoundReport> {
    (2..=max_n)
        .flat_map(|n| (1..n).map(move |s| tie_bound_check(ArmSummary { n, successes: s })))
        .collect()
}

/// Thompson-versus-bootstrap action probabilities for one arm set.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionProbReport {
    pub arms: Vec<ArmSummary>,
    pub ts_probs: Vec<f64>,
    pub bootstrap_probs: Vec<f64>,
    pub max_abs_diff: f64,
    /// `Σ 1/√n_j`, the rate in the closeness bound.
    pub bound: f64,
}

pub fn theorem1_report(arms: &[ArmSummary]) -> Result<ActionProbReport> {
    let bootstrap_probs = bootstrap_action_probs(arms)?;
    let ts_probs = ts_action_probs(arms)?;
    let max_abs_diff = ts_probs.iter().zip(&bootstrap_probs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let bound = arms.iter().map(|a| 1.0 / sqrt(a.n as f64)).sum();
    Ok(ActionProbReport { arms: arms.to_vec(), ts_probs, bootstrap_probs, max_abs_diff, bound })
}

/// Values below this are treated as exactly zero when fitting rates.
const ZERO_DIFF: f64 = 1e-12;

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 4 {
        return Err(Error::InvalidArgument(format!("need at least 4 paired points, got {} and {}", xs.len(), ys.len())));
    }
    if let Some(y) = ys.iter().find(|&&y| !(y > ZERO_DIFF)) {
        return Err(Error::SlopeUndefined(format!("value {y} is zero or negative")));
    }
    let lx: Vec<f64> = xs.iter().map(|&x| ln(x)).collect();
    let ly: Vec<f64> = ys.iter().map(|&y| ln(y)).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::SlopeUndefined("all abscissae are equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// A fitted convergence rate and the points it was fitted on.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeReport {
    /// `(n, value)` pairs.
    pub points: Vec<(u64, f64)>,
    pub slope: f64,
}

/// Rate at which [`sup_cdf_distance`] shrinks with `n` at fixed `p`.
pub fn lemma1_slope(p: f64, ns: &[u64]) -> Result<SlopeReport> {
    let points = ns
        .iter()
        .map(|&n| Ok((n, sup_cdf_distance(ArmSummary::from_rate(n, p)?)?.sup_distance)))
        .collect::<Result<Vec<_>>>()?;
    slope_of(points)
}

/// Rate at which the Thompson/bootstrap gap shrinks when every arm's `n` is multiplied by each
/// of `factors` at fixed rates. Abscissa: the first arm's `n`.
pub fn theorem1_slope(base: &[ArmSummary], factors: &[u64]) -> Result<SlopeReport> {
    let points = factors
        .iter()
        .map(|&f| {
            let arms = base.iter().map(|a| a.scaled(f)).collect::<Result<Vec<_>>>()?;
            Ok((arms[0].n, theorem1_report(&arms)?.max_abs_diff))
        })
        .collect::<Result<Vec<_>>>()?;
    slope_of(points)
}

fn slope_of(points: Vec<(u64, f64)>) -> Result<SlopeReport> {
    let xs: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let slope = loglog_slope(&xs, &ys)?;
    Ok(SlopeReport { points, slope })
}
