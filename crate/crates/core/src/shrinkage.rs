//! Exact solver for the spectral subproblem
//!
//! ```text
//!     minimize over s ≥ 0:   √(‖s − σ‖² + c²) + λ Σ sᵢ
//! ```
//!
//! Both square-root estimators reduce to it once the data matrix is diagonalised:
//! completion with `c = 0`, regression with `c` equal to the residual that no
//! coefficient matrix can explain.
//!
//! Away from the exact-fit kink the optimum has the form `sᵢ = max(σᵢ − λr, 0)`
//! where `r` is the value of the square-root term. If the top `k` values survive,
//! squaring the stationarity condition gives
//!
//! ```text
//!     r² (1 − kλ²) = Σ_{i>k} σᵢ² + c²
//! ```
//!
//! so each `k` with `kλ² < 1` yields one candidate, accepted when
//! `σ_k > λr ≥ σ_{k+1}`. When `c = 0` the point `s = σ` (zero residual) is optimal
//! iff `λ² · #{σᵢ > 0} ≤ 1`.

use crate::error::{Error, Result};

/// Optimal shrunk spectrum for one subproblem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkageSolution {
    /// Shrunk singular values, nonincreasing, `0 ≤ sᵢ ≤ σᵢ`.
    pub s: Vec<f64>,
    /// Number of strictly positive entries of `s`.
    pub retained: usize,
    /// `√(‖s − σ‖² + c²)`.
    pub radius: f64,
    /// Objective value at `s`.
    pub objective: f64,
}

impl ShrinkageSolution {
    fn from_spectrum(sigma: &[f64], s: Vec<f64>, lambda: f64, c: f64) -> Self {
        let radius = residual_radius(sigma, &s, c);
        let objective = radius + lambda * s.iter().sum::<f64>();
        let retained = s.iter().filter(|&&x| x > 0.0).count();
        Self {
            s,
            retained,
            radius,
            objective,
        }
    }

    /// Soft-threshold level `λ · radius` applied to the input spectrum.
    pub fn threshold(&self, lambda: f64) -> f64 {
        lambda * self.radius
    }
}

fn residual_radius(sigma: &[f64], s: &[f64], c: f64) -> f64 {
    let fit: f64 = sigma.iter().zip(s).map(|(a, b)| (a - b) * (a - b)).sum();
    (fit + c * c).sqrt()
}

/// Objective `√(‖s − σ‖² + c²) + λ Σ sᵢ`.
pub fn shrinkage_objective(sigma: &[f64], s: &[f64], lambda: f64, c: f64) -> f64 {
    assert_eq!(sigma.len(), s.len());
    residual_radius(sigma, s, c) + lambda * s.iter().sum::<f64>()
}

fn validate_spectrum(sigma: &[f64]) -> Result<()> {
    for (i, &x) in sigma.iter().enumerate() {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::UnsortedSpectrum { index: i });
        }
        if i > 0 && x > sigma[i - 1] {
            return Err(Error::UnsortedSpectrum { index: i });
        }
    }
    Ok(())
}

fn validate_lambda_c(lambda: f64, c: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    if !(c.is_finite() && c >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "c must be nonnegative and finite, got {c}"
        )));
    }
    Ok(())
}

fn shrink_at(sigma: &[f64], t: f64) -> Vec<f64> {
    sigma.iter().map(|&x| (x - t).max(0.0)).collect()
}

/// Closed-form global minimiser by a finite scan over the number of retained values.
///
/// `sigma` must be nonnegative and nonincreasing. Ties `σ_{k+1} = λr` are accepted
/// at both `k` and `k + 1`; the two candidates give the same `s`.
pub fn solve_sqrt_shrinkage(sigma: &[f64], lambda: f64, c: f64) -> Result<ShrinkageSolution> {
    validate_lambda_c(lambda, c)?;
    validate_spectrum(sigma)?;
    let p = sigma.len();
    if p == 0 {
        return Ok(ShrinkageSolution {
            s: Vec::new(),
            retained: 0,
            radius: c,
            objective: c,
        });
    }

    // tail[k] = Σ_{i ≥ k} σᵢ² (0-based), accumulated from the small end.
    let mut tail = vec![0.0; p + 1];
    for k in (0..p).rev() {
        tail[k] = tail[k + 1] + sigma[k] * sigma[k];
    }
    let lam2 = lambda * lambda;
    let slack = 1e-12 * (sigma[0] + c);

    let mut best: Option<ShrinkageSolution> = None;
    let mut fallback: Option<ShrinkageSolution> = None;
    let consider = |slot: &mut Option<ShrinkageSolution>, cand: ShrinkageSolution| {
        if slot.as_ref().is_none_or(|b| cand.objective < b.objective) {
            *slot = Some(cand);
        }
    };

    for k in 0..=p {
        let denom = 1.0 - k as f64 * lam2;
        if denom <= 0.0 {
            break;
        }
        let r = ((tail[k] + c * c) / denom).sqrt();
        let t = lambda * r;
        let upper = if k == 0 { f64::INFINITY } else { sigma[k - 1] };
        let lower = if k == p { 0.0 } else { sigma[k] };
        let cand = ShrinkageSolution::from_spectrum(sigma, shrink_at(sigma, t), lambda, c);
        if t <= upper + slack && t + slack >= lower {
            consider(&mut best, cand);
        } else {
            consider(&mut fallback, cand);
        }
    }

    if c == 0.0 {
        let positive = sigma.iter().filter(|&&x| x > 0.0).count();
        if lam2 * positive as f64 <= 1.0 {
            let cand = ShrinkageSolution::from_spectrum(sigma, sigma.to_vec(), lambda, c);
            consider(&mut best, cand);
        }
    }

    // Every candidate is feasible, so when rounding rejects all of them the cheapest
    // one is still the right answer.
    Ok(best
        .or(fallback)
        .expect("k = 0 is always a candidate since 1 - 0·λ² > 0"))
}

/// Independent brute-force minimiser for desk-scale spectra (length ≤ 8).
///
/// Searches the threshold `t` on `[0, σ₁ + λ√(‖σ‖² + c²)]` with nested uniform grids,
/// zooming onto the best grid point until the bracket is narrower than `tol`, and
/// returns `s = max(σ − t, 0)`. Along this family the objective is unimodal, so the
/// search cannot lock onto a spurious local minimum.
pub fn oracle_sqrt_shrinkage(
    sigma: &[f64],
    lambda: f64,
    c: f64,
    tol: f64,
) -> Result<ShrinkageSolution> {
    const MAX_LEN: usize = 8;
    const GRID: usize = 400;

    validate_lambda_c(lambda, c)?;
    if sigma.len() > MAX_LEN {
        return Err(Error::InvalidParameter(format!(
            "oracle is limited to spectra of length {MAX_LEN}, got {}",
            sigma.len()
        )));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    if sigma.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidParameter("spectrum must be finite and nonnegative".into()));
    }

    let norm2: f64 = sigma.iter().map(|x| x * x).sum();
    let top = sigma.iter().cloned().fold(0.0, f64::max);
    let eval = |t: f64| shrinkage_objective(sigma, &shrink_at(sigma, t), lambda, c);

    let (mut lo, mut hi) = (0.0, top + lambda * (norm2 + c * c).sqrt());
    let mut best_t = 0.0;
    let mut best_val = eval(0.0);
    while hi - lo >= tol {
        let step = (hi - lo) / GRID as f64;
        let mut idx = 0;
        let mut local = f64::INFINITY;
        for i in 0..=GRID {
            let t = if i == GRID { hi } else { lo + step * i as f64 };
            let v = eval(t);
            if v < local {
                local = v;
                idx = i;
            }
            if v < best_val {
                best_val = v;
                best_t = t;
            }
        }
        let new_lo = lo + step * idx.saturating_sub(1) as f64;
        let new_hi = (lo + step * (idx + 1) as f64).min(hi);
        if new_hi - new_lo >= hi - lo {
            break;
        }
        lo = new_lo;
        hi = new_hi;
    }
    Ok(ShrinkageSolution::from_spectrum(
        sigma,
        shrink_at(sigma, best_t),
        lambda,
        c,
    ))
}

/// Entrywise `max(σᵢ − τ, 0)`: the proximal step of the squared-loss estimator.
pub fn soft_threshold(sigma: &[f64], tau: f64) -> Vec<f64> {
    debug_assert!(tau >= 0.0);
    shrink_at(sigma, tau)
}
