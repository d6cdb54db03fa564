//! Matrix completion under uniform sampling at random.
//!
//! Observations are `yᵢ = A0[rowᵢ, colᵢ] + σ ξᵢ` with cells drawn i.i.d. uniformly
//! (with replacement) from the `m1 x m2` grid. The estimator minimises
//! `‖A − X‖₂ + λ‖A‖₁` where `X = (μ²/n) Σ yᵢ Xᵢ` and `μ² = m1·m2`; its solution
//! shrinks the singular values of `X` with [`solve_sqrt_shrinkage`].

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::diagnostics::{compute_delta, compute_m};
use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, svd, Matrix, SvdFactors, DEFAULT_RANK_TOL};
use crate::shrinkage::{soft_threshold, solve_sqrt_shrinkage};

/// Gaussian value of the constant in the bound on ‖M‖∞.
pub const C_STAR_GAUSSIAN: f64 = 6.5;

/// Observed cells, 0-based, possibly repeated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignList {
    m1: usize,
    m2: usize,
    cells: Vec<(usize, usize)>,
}

impl DesignList {
    pub fn new(m1: usize, m2: usize, cells: Vec<(usize, usize)>) -> Result<Self> {
        if m1 == 0 || m2 == 0 {
            return Err(Error::Dimension(format!("grid must be nonempty, got {m1}x{m2}")));
        }
        if let Some(&(r, c)) = cells.iter().find(|&&(r, c)| r >= m1 || c >= m2) {
            return Err(Error::Dimension(format!(
                "cell ({r}, {c}) outside the {m1}x{m2} grid"
            )));
        }
        Ok(Self { m1, m2, cells })
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn m2(&self) -> usize {
        self.m2
    }

    pub fn cells(&self) -> &[(usize, usize)] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Standardised noise distribution (mean 0, variance 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseLaw {
    #[default]
    Gaussian,
    Rademacher,
    /// Uniform on `[−√3, √3]`.
    Uniform,
}

impl NoiseLaw {
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            NoiseLaw::Gaussian => rng.sample(StandardNormal),
            NoiseLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            NoiseLaw::Uniform => {
                let half = 3f64.sqrt();
                rng.random_range(-half..half)
            }
        }
    }
}

impl FromStr for NoiseLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(NoiseLaw::Gaussian),
            "rademacher" => Ok(NoiseLaw::Rademacher),
            "uniform" => Ok(NoiseLaw::Uniform),
            other => Err(Error::Config(format!(
                "unknown noise law '{other}' (expected gaussian, rademacher or uniform)"
            ))),
        }
    }
}

impl fmt::Display for NoiseLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseLaw::Gaussian => "gaussian",
            NoiseLaw::Rademacher => "rademacher",
            NoiseLaw::Uniform => "uniform",
        })
    }
}

/// Noise level and law. The estimator never sees `sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub law: NoiseLaw,
    /// Sub-Gaussian constant; informational only. All three laws satisfy it with 1.
    pub k: f64,
}

impl NoiseSpec {
    /// `sigma = 0` is accepted for noiseless sanity runs.
    pub fn new(sigma: f64, law: NoiseLaw) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise level must be finite and nonnegative, got {sigma}"
            )));
        }
        Ok(Self { sigma, law, k: 1.0 })
    }
}

/// Simulated truth with its sup-norm bound and spikiness.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub a0: Matrix,
    /// Numerical rank at [`DEFAULT_RANK_TOL`].
    pub rank: usize,
    /// Known bound `a ≥ ‖A0‖_sup`.
    pub a: f64,
    /// `√(m1 m2) ‖A0‖_sup / ‖A0‖₂`, reported as 0 for the zero matrix.
    pub spikiness: f64,
}

impl GroundTruth {
    /// Wraps a known matrix; `a` defaults to its sup-norm.
    pub fn new(a0: Matrix, a: Option<f64>) -> Result<Self> {
        let sup = a0.sup_norm();
        let a = a.unwrap_or(sup);
        if a < sup {
            return Err(Error::InvalidParameter(format!(
                "a = {a} is below the sup-norm {sup} of the truth"
            )));
        }
        let rank = numerical_rank(&a0, DEFAULT_RANK_TOL)?;
        let spikiness = spikiness(&a0);
        Ok(Self {
            a0,
            rank,
            a,
            spikiness,
        })
    }

    /// Product of two standard-normal factors of width `rank`, rescaled so its
    /// sup-norm equals `a`.
    pub fn generate<R: Rng + ?Sized>(
        m1: usize,
        m2: usize,
        rank: usize,
        a: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if m1 == 0 || m2 == 0 {
            return Err(Error::Dimension(format!("truth must be nonempty, got {m1}x{m2}")));
        }
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidParameter(format!("a must be positive, got {a}")));
        }
        if rank == 0 {
            return Self::new(Matrix::zeros(m1, m2), Some(a));
        }
        let left = Matrix::from_fn(m1, rank, |_, _| rng.sample(StandardNormal));
        let right = Matrix::from_fn(rank, m2, |_, _| rng.sample(StandardNormal));
        let product = left.matmul(&right);
        let scaled = product.scale(a / product.sup_norm());
        Self::new(scaled, Some(a))
    }

    pub fn m1(&self) -> usize {
        self.a0.rows()
    }

    pub fn m2(&self) -> usize {
        self.a0.cols()
    }
}

/// Spikiness ratio `√(m1 m2) ‖A‖_sup / ‖A‖₂`; 0 for the zero matrix.
pub fn spikiness(a: &Matrix) -> f64 {
    let fro = a.frobenius_norm();
    if fro == 0.0 {
        return 0.0;
    }
    ((a.rows() * a.cols()) as f64).sqrt() * a.sup_norm() / fro
}

/// Observed entries together with the grid they came from.
#[derive(Debug, Clone)]
pub struct CompletionDataset {
    pub m1: usize,
    pub m2: usize,
    pub design: DesignList,
    pub y: Vec<f64>,
    /// `μ² = m1 · m2`.
    pub mu2: f64,
}

impl CompletionDataset {
    pub fn new(design: DesignList, y: Vec<f64>) -> Result<Self> {
        if design.len() != y.len() {
            return Err(Error::Dimension(format!(
                "{} cells but {} observations",
                design.len(),
                y.len()
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("observation {i} is not finite")));
        }
        Ok(Self {
            m1: design.m1(),
            m2: design.m2(),
            mu2: (design.m1() * design.m2()) as f64,
            design,
            y,
        })
    }

    /// From `(row, col, value)` triples.
    pub fn from_triples(m1: usize, m2: usize, triples: &[(usize, usize, f64)]) -> Result<Self> {
        let cells = triples.iter().map(|&(r, c, _)| (r, c)).collect();
        let y = triples.iter().map(|&(_, _, v)| v).collect();
        Self::new(DesignList::new(m1, m2, cells)?, y)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// `m = m1 + m2`.
    pub fn m(&self) -> usize {
        self.m1 + self.m2
    }

    pub fn min_dim(&self) -> usize {
        self.m1.min(self.m2)
    }

    pub fn triples(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.design.cells().iter().zip(&self.y).map(|(&(r, c), &v)| (r, c, v))
    }
}

/// Draws `n` cells i.i.d. uniformly over the `m1 x m2` grid.
pub fn sample_design<R: Rng + ?Sized>(m1: usize, m2: usize, n: usize, rng: &mut R) -> DesignList {
    assert!(m1 > 0 && m2 > 0, "grid must be nonempty");
    let cells = (0..n)
        .map(|_| (rng.random_range(0..m1), rng.random_range(0..m2)))
        .collect();
    DesignList { m1, m2, cells }
}

/// Noisy observations of `truth` at the design cells.
pub fn synthesize<R: Rng + ?Sized>(
    truth: &GroundTruth,
    noise: &NoiseSpec,
    design: &DesignList,
    rng: &mut R,
) -> Result<CompletionDataset> {
    if (design.m1(), design.m2()) != truth.a0.shape() {
        return Err(Error::Dimension(format!(
            "design grid {}x{} does not match truth {}x{}",
            design.m1(),
            design.m2(),
            truth.m1(),
            truth.m2()
        )));
    }
    let y = design
        .cells()
        .iter()
        .map(|&(r, c)| {
            let xi = noise.law.sample(rng);
            truth.a0[(r, c)] + noise.sigma * xi
        })
        .collect();
    CompletionDataset::new(design.clone(), y)
}

/// Unscaled accumulation `Σ yᵢ Xᵢ`.
pub fn accumulate_observations(dataset: &CompletionDataset) -> Matrix {
    let mut acc = Matrix::zeros(dataset.m1, dataset.m2);
    for (r, c, v) in dataset.triples() {
        acc[(r, c)] += v;
    }
    acc
}

/// `X = (μ²/n) Σ yᵢ Xᵢ`; unobserved cells are zero.
pub fn build_x(dataset: &CompletionDataset) -> Matrix {
    let acc = accumulate_observations(dataset);
    if dataset.n() == 0 {
        return acc;
    }
    acc.scale(dataset.mu2 / dataset.n() as f64)
}

/// Fully data-driven regularisation level
///
/// ```text
/// λ = 2c*·√(log m / (m1∧m2)) + 4a·√(2n·log m / (m1∧m2)) / ‖Σ yᵢXᵢ‖₂
/// ```
///
/// with `m = m1 + m2` and the natural logarithm.
pub fn lambda_theory(dataset: &CompletionDataset, a: f64, c_star: f64) -> Result<f64> {
    if !(a > 0.0 && c_star > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "a and c* must be positive, got a = {a}, c* = {c_star}"
        )));
    }
    let acc_norm = accumulate_observations(dataset).frobenius_norm();
    if acc_norm == 0.0 {
        return Err(Error::ZeroObservations);
    }
    Ok(lambda_theory_from_norm(
        dataset.m1,
        dataset.m2,
        dataset.n(),
        acc_norm,
        a,
        c_star,
    ))
}

/// [`lambda_theory`] given `‖Σ yᵢXᵢ‖₂` directly.
pub fn lambda_theory_from_norm(
    m1: usize,
    m2: usize,
    n: usize,
    acc_norm: f64,
    a: f64,
    c_star: f64,
) -> f64 {
    let log_m = ((m1 + m2) as f64).ln();
    let min_dim = m1.min(m2) as f64;
    2.0 * c_star * (log_m / min_dim).sqrt()
        + 4.0 * a * (2.0 * n as f64 * log_m / min_dim).sqrt() / acc_norm
}

/// Smallest λ meeting `λ ≥ 3Δ`, i.e. `3‖M‖∞/‖M‖₂`. Needs the truth.
pub fn lambda_oracle(dataset: &CompletionDataset, truth: &GroundTruth) -> Result<f64> {
    let m = compute_m(dataset, truth)?;
    let (delta, _) = compute_delta(&m)?;
    Ok(3.0 * delta)
}

/// Output of the square-root estimator.
#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub a_hat: Matrix,
    pub lambda: f64,
    pub rank_hat: usize,
    /// `F(Â) = ‖Â − X‖₂ + λ‖Â‖₁`.
    pub objective: f64,
    /// `‖Â − X‖₂`.
    pub residual_fro: f64,
    /// Singular values of `X`.
    pub x_singulars: Vec<f64>,
    /// Singular values of `Â`, aligned with `x_singulars`.
    pub shrunk: Vec<f64>,
}

/// Square-root estimator on a dataset.
pub fn estimate(dataset: &CompletionDataset, lambda: f64) -> Result<EstimateReport> {
    estimate_matrix(&build_x(dataset), lambda)
}

/// Square-root estimator given `X` directly.
pub fn estimate_matrix(x: &Matrix, lambda: f64) -> Result<EstimateReport> {
    estimate_from_factors(&svd(x)?, lambda)
}

/// Square-root estimator reusing an existing SVD of `X`.
pub fn estimate_from_factors(factors: &SvdFactors, lambda: f64) -> Result<EstimateReport> {
    let sol = solve_sqrt_shrinkage(&factors.singulars, lambda, 0.0)?;
    Ok(EstimateReport {
        a_hat: factors.reconstruct_with(&sol.s),
        lambda,
        rank_hat: sol.retained,
        objective: sol.objective,
        residual_fro: sol.radius,
        x_singulars: factors.singulars.clone(),
        shrunk: sol.s,
    })
}

/// `F(A) = ‖A − X‖₂ + λ‖A‖₁`.
pub fn completion_objective(a: &Matrix, x: &Matrix, lambda: f64) -> Result<f64> {
    let nuclear: f64 = crate::linalg::singular_values(a)?.iter().sum();
    Ok(a.sub(x).frobenius_norm() + lambda * nuclear)
}

/// Regularisation of the known-σ competitor: three times the high-probability
/// bound on `‖M‖∞`, `3(c*σ + 2a)√(2 log m / ((m1∧m2) n))`.
pub fn baseline_lambda(m1: usize, m2: usize, n: usize, sigma: f64, a: f64, c_star: f64) -> f64 {
    3.0 * crate::diagnostics::operator_norm_tail_bound(m1, m2, n, sigma, a, c_star)
}

/// Soft-threshold level `μ² λ / 2` of the squared-loss estimator.
pub fn baseline_tau(mu2: f64, lambda: f64) -> f64 {
    mu2 * lambda / 2.0
}

/// Known-σ estimator: minimiser of `‖A − X‖₂² + λμ²‖A‖₁` at the theoretical λ.
pub fn estimate_baseline_known_sigma(
    dataset: &CompletionDataset,
    sigma: f64,
    a: f64,
    c_star: f64,
) -> Result<Matrix> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "the known-σ baseline needs σ > 0, got {sigma}"
        )));
    }
    let lambda = baseline_lambda(dataset.m1, dataset.m2, dataset.n(), sigma, a, c_star);
    let factors = svd(&build_x(dataset))?;
    Ok(baseline_from_factors(&factors, baseline_tau(dataset.mu2, lambda)))
}

/// Singular value soft-thresholding of `X` at `tau`.
pub fn baseline_from_factors(factors: &SvdFactors, tau: f64) -> Matrix {
    factors.reconstruct_with(&soft_threshold(&factors.singulars, tau))
}

/// Which of the completion risk bounds' hypotheses hold for one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    /// `n > 8 (m1∧m2) log² m`.
    pub n_lower: bool,
    pub n_lower_margin: f64,
    /// `4n ≤ m1 m2`.
    pub n_upper: bool,
    pub n_upper_margin: f64,
    /// Smallest ρ for which the spikiness/rank condition holds.
    pub rho_spikiness: f64,
    pub spikiness_ok: bool,
    /// `Δ`, absent when `M = 0`.
    pub delta: Option<f64>,
    /// `λ ≥ 3Δ`.
    pub lambda_ok: bool,
    /// `λ √(2 rank A0)`, the oracle-inequality form.
    pub rho: f64,
    pub rho_ok: bool,
    /// `λ √(rank A0)`, the residual-bound form.
    pub rho_weak: f64,
    pub rho_weak_ok: bool,
}

impl HypothesisReport {
    /// Conditions of the oracle inequality at `A = A0`.
    pub fn oracle_inequality_applies(&self) -> bool {
        self.lambda_ok && self.rho_ok
    }

    /// Conditions of the residual lower bound.
    pub fn residual_bound_applies(&self) -> bool {
        self.lambda_ok && self.rho_weak_ok
    }
}

/// Relative slack when comparing `λ` against `3Δ`, so that the oracle choice
/// `λ = 3Δ` recomputed elsewhere still counts as satisfying it.
pub const LAMBDA_SLACK: f64 = 1e-12;

pub fn check_hypotheses(
    dataset: &CompletionDataset,
    truth: &GroundTruth,
    lambda: f64,
    c_star: f64,
) -> HypothesisReport {
    let delta = compute_m(dataset, truth)
        .ok()
        .and_then(|m| compute_delta(&m).ok())
        .map(|(d, _)| d);
    hypotheses_with_delta(dataset, truth, lambda, c_star, delta)
}

pub(crate) fn hypotheses_with_delta(
    dataset: &CompletionDataset,
    truth: &GroundTruth,
    lambda: f64,
    c_star: f64,
    delta: Option<f64>,
) -> HypothesisReport {
    let (m1, m2, n) = (dataset.m1 as f64, dataset.m2 as f64, dataset.n() as f64);
    let log_m = (m1 + m2).ln();
    let min_dim = m1.min(m2);

    let n_lower_threshold = 8.0 * min_dim * log_m * log_m;
    let n_upper_threshold = m1 * m2 / 4.0;

    let rank = truth.rank as f64;
    let rho_spikiness = if truth.rank == 0 {
        0.0
    } else {
        let fro = truth.a0.frobenius_norm();
        rank.sqrt()
            * (2.0 * c_star * (log_m / min_dim).sqrt()
                + 4.0 * truth.a * (m1 * m2).sqrt() / fro * (2.0 * log_m / min_dim).sqrt())
    };

    let lambda_ok = delta.is_some_and(|d| lambda >= 3.0 * d * (1.0 - LAMBDA_SLACK));
    let rho = lambda * (2.0 * rank).sqrt();
    let rho_weak = lambda * rank.sqrt();

    HypothesisReport {
        n_lower: n > n_lower_threshold,
        n_lower_margin: n - n_lower_threshold,
        n_upper: n <= n_upper_threshold,
        n_upper_margin: n_upper_threshold - n,
        rho_spikiness,
        spikiness_ok: rho_spikiness < 1.0,
        delta,
        lambda_ok,
        rho,
        rho_ok: rho < 1.0,
        rho_weak,
        rho_weak_ok: rho_weak < 1.0,
    }
}
