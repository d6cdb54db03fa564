//! Matrix regression `U = V A0 + E` with unknown noise level.
//!
//! The estimator minimises `‖U − VA‖₂ + λ‖VA‖₁`. Writing `B = VA`, the constraint is
//! that the columns of `B` lie in col(V). With `Z = P_V U` and `c = ‖P_V⊥ U‖₂`,
//! `‖U − B‖₂² = ‖Z − B‖₂² + c²`, so the problem is the spectral subproblem on the
//! singular values of `Z` with offset `c`. The left singular vectors of `Z` already
//! lie in col(V), hence the shrunk reconstruction is feasible and optimal.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::completion::{GroundTruth, NoiseSpec};
use crate::error::{Error, Result};
use crate::linalg::{
    column_projector, min_norm_solve, numerical_rank, operator_norm, singular_values, svd,
    ColumnSpaceProjector, Matrix,
};
use crate::shrinkage::solve_sqrt_shrinkage;

#[derive(Debug, Clone)]
pub struct RegressionDataset {
    /// `l x m1` predictors.
    pub v: Matrix,
    /// `l x m2` responses.
    pub u: Matrix,
    /// Numerical rank of `v`.
    pub rank_v: usize,
}

impl RegressionDataset {
    pub fn new(v: Matrix, u: Matrix, rank_tol: f64) -> Result<Self> {
        if v.rows() != u.rows() {
            return Err(Error::Dimension(format!(
                "predictors have {} rows, responses {}",
                v.rows(),
                u.rows()
            )));
        }
        let rank_v = numerical_rank(&v, rank_tol)?;
        Ok(Self { v, u, rank_v })
    }

    pub fn l(&self) -> usize {
        self.v.rows()
    }

    pub fn m1(&self) -> usize {
        self.v.cols()
    }

    pub fn m2(&self) -> usize {
        self.u.cols()
    }
}

/// `(α, β)` controlling the dimension-only λ; `γ = (1+β)/(1−α)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionLambdaParams {
    alpha: f64,
    beta: f64,
}

impl RegressionLambdaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        (1.0 + self.beta) / (1.0 - self.alpha)
    }
}

impl Default for RegressionLambdaParams {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            beta: 0.5,
        }
    }
}

/// `λ = γ (√m2 + √r) / √(l m2)`. Depends on dimensions only.
pub fn lambda_regression(l: usize, m2: usize, r: usize, params: &RegressionLambdaParams) -> f64 {
    params.gamma() * ((m2 as f64).sqrt() + (r as f64).sqrt()) / ((l * m2) as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankCondition {
    pub holds: bool,
    /// `ρ² l m2 / (2γ² (√m2 + √r)²)`.
    pub rhs: f64,
    /// `rhs − rank(VA0)`.
    pub margin: f64,
}

/// `rank(VA0) ≤ ρ² l m2 / (2γ² (√m2 + √r)²)`.
pub fn check_rank_condition(
    l: usize,
    m2: usize,
    r: usize,
    rank_va0: usize,
    rho: f64,
    params: &RegressionLambdaParams,
) -> RankCondition {
    let g = params.gamma();
    let root = (m2 as f64).sqrt() + (r as f64).sqrt();
    let rhs = rho * rho * (l * m2) as f64 / (2.0 * g * g * root * root);
    RankCondition {
        holds: rank_va0 as f64 <= rhs,
        rhs,
        margin: rhs - rank_va0 as f64,
    }
}

#[derive(Debug, Clone)]
pub struct RegressionEstimate {
    /// Minimum-Frobenius-norm coefficients, `m1 x m2`.
    pub a_hat: Matrix,
    /// Fitted responses `V Â`, `l x m2`.
    pub b_hat: Matrix,
    pub lambda: f64,
    /// `rank(V Â)`.
    pub rank_va: usize,
    /// `‖U − B̂‖₂`.
    pub residual: f64,
    /// `G(Â) = ‖U − VÂ‖₂ + λ‖VÂ‖₁`.
    pub objective: f64,
    /// `‖P_V⊥ U‖₂`.
    pub unexplained: f64,
}

/// Square-root regression estimator via its exact spectral reduction.
pub fn estimate_regression(
    dataset: &RegressionDataset,
    lambda: f64,
    rank_tol: f64,
) -> Result<RegressionEstimate> {
    let projector = column_projector(&dataset.v, rank_tol)?;
    estimate_with_projector(dataset, &projector, lambda, rank_tol)
}

pub(crate) fn estimate_with_projector(
    dataset: &RegressionDataset,
    projector: &ColumnSpaceProjector,
    lambda: f64,
    rank_tol: f64,
) -> Result<RegressionEstimate> {
    let z = projector.project(&dataset.u);
    let unexplained = dataset.u.sub(&z).frobenius_norm();
    let factors = svd(&z)?;
    let sol = solve_sqrt_shrinkage(&factors.singulars, lambda, unexplained)?;
    let b_hat = factors.reconstruct_with(&sol.s);
    let a_hat = min_norm_solve(&dataset.v, &b_hat, rank_tol)?;
    Ok(RegressionEstimate {
        residual: dataset.u.sub(&b_hat).frobenius_norm(),
        a_hat,
        b_hat,
        lambda,
        rank_va: sol.retained,
        objective: sol.objective,
        unexplained,
    })
}

/// `G(A) = ‖U − VA‖₂ + λ‖VA‖₁`.
pub fn regression_objective(dataset: &RegressionDataset, a: &Matrix, lambda: f64) -> Result<f64> {
    let va = dataset.v.matmul(a);
    let nuclear: f64 = singular_values(&va)?.iter().sum();
    Ok(dataset.u.sub(&va).frobenius_norm() + lambda * nuclear)
}

/// Simulated regression instance with Gaussian predictors and noise.
#[derive(Debug, Clone)]
pub struct RegressionSimulation {
    pub dataset: RegressionDataset,
    pub a0: Matrix,
    /// The noise matrix `E`.
    pub noise: Matrix,
    pub rank_va0: usize,
    pub sigma: f64,
}

impl RegressionSimulation {
    /// `V` has i.i.d. standard-normal entries, `E` i.i.d. entries `σξ` with `ξ` from
    /// the noise law, and `A0` is a rank-`rank` product of Gaussian factors with
    /// sup-norm `a`.
    #[allow(clippy::too_many_arguments)]
    pub fn generate<R: Rng + ?Sized>(
        l: usize,
        m1: usize,
        m2: usize,
        rank: usize,
        a: f64,
        noise: &NoiseSpec,
        rank_tol: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if l == 0 || m1 == 0 || m2 == 0 {
            return Err(Error::Dimension(format!("dimensions must be positive: l={l}, m1={m1}, m2={m2}")));
        }
        let v = Matrix::from_fn(l, m1, |_, _| rng.sample(StandardNormal));
        let truth = GroundTruth::generate(m1, m2, rank, a, rng)?;
        let e = Matrix::from_fn(l, m2, |_, _| noise.sigma * noise.law.sample(rng));
        let signal = v.matmul(&truth.a0);
        let rank_va0 = numerical_rank(&signal, rank_tol)?;
        let u = signal.add(&e);
        Ok(Self {
            dataset: RegressionDataset::new(v, u, rank_tol)?,
            a0: truth.a0,
            noise: e,
            rank_va0,
            sigma: noise.sigma,
        })
    }

    /// `Δ' = ‖P_V E‖∞ / ‖E‖₂`.
    pub fn delta_prime(&self, projector: &ColumnSpaceProjector) -> Result<f64> {
        let fro = self.noise.frobenius_norm();
        if fro == 0.0 {
            return Err(Error::ZeroNoiseMatrix);
        }
        Ok(operator_norm(&projector.project(&self.noise))? / fro)
    }

    /// `‖V(Â − A0)‖₂²`.
    pub fn prediction_error(&self, estimate: &RegressionEstimate) -> f64 {
        estimate
            .b_hat
            .sub(&self.dataset.v.matmul(&self.a0))
            .frobenius_norm_sq()
    }
}
