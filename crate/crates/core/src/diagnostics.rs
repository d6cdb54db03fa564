//! Quantities that appear in the hypotheses and conclusions of the completion and
//! regression guarantees, evaluated on simulated data where the truth is known.

use std::collections::HashMap;

use crate::completion::{accumulate_observations, build_x, CompletionDataset, DesignList, GroundTruth};
use crate::error::{Error, Result};
use crate::linalg::{operator_norm, Matrix};

/// Per-trial diagnostics for a completion instance.
#[derive(Debug, Clone)]
pub struct DiagnosticsRecord {
    /// `M = (X − A0) / μ²`.
    pub m: Matrix,
    /// `Δ = ‖M‖∞ / ‖M‖₂`; `None` when `M = 0`.
    pub delta: Option<f64>,
    /// `Δ∞ = ‖M‖∞`.
    pub delta_inf: f64,
    /// `‖M‖₂`.
    pub fro_m: f64,
    /// `‖(1/n) Σ yᵢXᵢ‖₂`.
    pub fro_acc: f64,
    /// `Σ_{i<j} ⟨Xᵢ, Xⱼ⟩`.
    pub collisions: u64,
    pub spikiness: f64,
}

impl DiagnosticsRecord {
    pub fn compute(dataset: &CompletionDataset, truth: &GroundTruth) -> Result<Self> {
        let m = compute_m(dataset, truth)?;
        let fro_m = m.frobenius_norm();
        let delta_inf = operator_norm(&m)?;
        let delta = (fro_m > 0.0).then(|| delta_inf / fro_m);
        Ok(Self {
            m,
            delta,
            delta_inf,
            fro_m,
            fro_acc: normalized_accumulation_norm(dataset),
            collisions: count_collisions(&dataset.design),
            spikiness: truth.spikiness,
        })
    }
}

/// `‖(1/n) Σ yᵢXᵢ‖₂`; 0 for an empty dataset.
pub fn normalized_accumulation_norm(dataset: &CompletionDataset) -> f64 {
    if dataset.n() == 0 {
        return 0.0;
    }
    accumulate_observations(dataset).frobenius_norm() / dataset.n() as f64
}

/// `M = μ⁻² (X − A0)`.
pub fn compute_m(dataset: &CompletionDataset, truth: &GroundTruth) -> Result<Matrix> {
    if truth.a0.shape() != (dataset.m1, dataset.m2) {
        return Err(Error::Dimension(format!(
            "truth is {}x{}, dataset grid is {}x{}",
            truth.m1(),
            truth.m2(),
            dataset.m1,
            dataset.m2
        )));
    }
    Ok(build_x(dataset).sub(&truth.a0).scale(1.0 / dataset.mu2))
}

/// `(Δ, Δ∞) = (σ₁(M)/‖M‖₂, σ₁(M))`.
pub fn compute_delta(m: &Matrix) -> Result<(f64, f64)> {
    let fro = m.frobenius_norm();
    if fro == 0.0 {
        return Err(Error::ZeroNoiseMatrix);
    }
    let op = operator_norm(m)?;
    Ok((op / fro, op))
}

/// High-probability bound `(c*σ + 2a) √(2 log m / ((m1∧m2) n))` on `Δ∞`.
pub fn operator_norm_tail_bound(m1: usize, m2: usize, n: usize, sigma: f64, a: f64, c_star: f64) -> f64 {
    let log_m = ((m1 + m2) as f64).ln();
    (c_star * sigma + 2.0 * a) * (2.0 * log_m / (m1.min(m2) as f64 * n as f64)).sqrt()
}

/// Truth values of the three bounds on `‖M‖₂`, with the quantities compared.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseNormCheck {
    /// `σ²/(2n) ≤ ‖M‖₂² ≤ 2(‖A0‖₂²/(n m1 m2) + σ²/n)`.
    pub clause_i: bool,
    /// `‖(1/n)Σ yᵢXᵢ‖₂² ≥ ‖A0‖₂²/(n m1 m2)`.
    pub clause_ii: bool,
    /// `‖M‖₂ ≥ ½ ‖(1/n)Σ yᵢXᵢ‖₂`.
    pub clause_iii: bool,
    /// Whether `4n ≤ m1 m2`, the stated precondition. Reported, not enforced.
    pub precondition: bool,
    pub fro_m_sq: f64,
    pub fro_acc_sq: f64,
    pub lower_i: f64,
    pub upper_i: f64,
    pub lower_ii: f64,
}

pub fn noise_norm_check(
    dataset: &CompletionDataset,
    truth: &GroundTruth,
    sigma: f64,
) -> Result<NoiseNormCheck> {
    let m = compute_m(dataset, truth)?;
    let n = dataset.n() as f64;
    let mu2 = dataset.mu2;
    let a0_sq = truth.a0.frobenius_norm_sq();

    let fro_m_sq = m.frobenius_norm_sq();
    let fro_acc = normalized_accumulation_norm(dataset);
    let fro_acc_sq = fro_acc * fro_acc;

    let lower_i = sigma * sigma / (2.0 * n);
    let upper_i = 2.0 * (a0_sq / (n * mu2) + sigma * sigma / n);
    let lower_ii = a0_sq / (n * mu2);

    Ok(NoiseNormCheck {
        clause_i: lower_i <= fro_m_sq && fro_m_sq <= upper_i,
        clause_ii: fro_acc_sq >= lower_ii,
        clause_iii: fro_m_sq.sqrt() >= 0.5 * fro_acc,
        precondition: 4.0 * n <= mu2,
        fro_m_sq,
        fro_acc_sq,
        lower_i,
        upper_i,
        lower_ii,
    })
}

/// `Σ_{i<j} ⟨Xᵢ, Xⱼ⟩`: the number of observation pairs sharing a cell.
pub fn count_collisions(design: &DesignList) -> u64 {
    let mut counts: HashMap<(usize, usize), u64> = HashMap::with_capacity(design.len());
    for &cell in design.cells() {
        *counts.entry(cell).or_insert(0) += 1;
    }
    counts.values().map(|&c| c * (c - 1) / 2).sum()
}

/// Expected collision count `n(n−1) / (2 m1 m2)` under uniform sampling.
pub fn expected_collisions(m1: usize, m2: usize, n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / (2.0 * (m1 * m2) as f64)
}

fn check_rho(rho: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::RhoOutOfRange(rho));
    }
    Ok(())
}

/// Oracle inequality at `A = A0`: `(2λμ²/(1−ρ))² ‖M‖₂² rank(A0)`.
pub fn completion_oracle_rhs(rank0: usize, lambda: f64, mu2: f64, fro_m: f64, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    let factor = 2.0 * lambda * mu2 / (1.0 - rho);
    Ok(factor * factor * fro_m * fro_m * rank0 as f64)
}

/// `C* = 16 (2c*σ² + (18 + 2c*) a²) / (1 − ρ)²`.
pub fn completion_rate_constant(sigma: f64, a: f64, c_star: f64, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    Ok(16.0 * (2.0 * c_star * sigma * sigma + (18.0 + 2.0 * c_star) * a * a) / (1.0 - rho).powi(2))
}

/// Per-entry risk bound `C* (m1∨m2)/n · rank(A0) · log m`.
#[allow(clippy::too_many_arguments)]
pub fn completion_rate_rhs(
    m1: usize,
    m2: usize,
    n: usize,
    rank0: usize,
    sigma: f64,
    a: f64,
    c_star: f64,
    rho: f64,
) -> Result<f64> {
    let c = completion_rate_constant(sigma, a, c_star, rho)?;
    let log_m = ((m1 + m2) as f64).ln();
    Ok(c * m1.max(m2) as f64 / n as f64 * rank0 as f64 * log_m)
}

/// Regression oracle inequality at `A = A0`: `(2λ/(1−ρ))² ‖E‖₂² rank(VA0)`.
pub fn regression_oracle_rhs(lambda: f64, fro_e: f64, rank_va0: usize, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    let factor = 2.0 * lambda / (1.0 - rho);
    Ok(factor * factor * fro_e * fro_e * rank_va0 as f64)
}

/// Residual lower-bound factor `(3 − √(1+ρ²)) / (3 + √(1+ρ²))`.
pub fn residual_bound_factor(rho: f64) -> f64 {
    let s = (1.0 + rho * rho).sqrt();
    (3.0 - s) / (3.0 + s)
}
