//! Support-recovery metrics, support-restricted refinement, and empirical
//! diagnostics for the restricted-eigenvalue and geometric-convergence
//! properties of the estimator.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, ArrayView1};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{RenError, Result};
use crate::linalg::{dot, matvec};
use crate::model::{l1_norm, l2_norm, GroundTruth, Solution, TrimmedSurrogates};
use crate::par::{map_indexed, Execution};

/// Indices of the `k` largest `|β_i|`, ties broken toward lower indices,
/// returned in increasing index order.
pub fn top_k_support(beta: ArrayView1<f64>, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..beta.len()).collect();
    idx.sort_by(|&a, &b| beta[b].abs().total_cmp(&beta[a].abs()).then(a.cmp(&b)));
    idx.truncate(k);
    idx.sort_unstable();
    idx
}

/// Indices with `|β_i| > threshold`.
pub fn threshold_support(beta: ArrayView1<f64>, threshold: f64) -> Vec<usize> {
    beta.iter().enumerate().filter(|(_, b)| b.abs() > threshold).map(|(i, _)| i).collect()
}

/// `|top_k(β̂) ∩ Λ*|` with `k = |Λ*|`.
pub fn support_recovery_count(beta_hat: ArrayView1<f64>, truth: &GroundTruth) -> usize {
    let mut on = vec![false; beta_hat.len()];
    for &j in &truth.support {
        if j < on.len() {
            on[j] = true;
        }
    }
    top_k_support(beta_hat, truth.k()).into_iter().filter(|&j| on[j]).count()
}

/// `‖β̂ − β*‖₂ / ‖β*‖₂`.
pub fn l2_recovery_error(beta_hat: ArrayView1<f64>, truth: &GroundTruth) -> Result<f64> {
    if beta_hat.len() != truth.beta_star.len() {
        return Err(RenError::DimensionMismatch(format!(
            "estimate has length {}, truth has {}",
            beta_hat.len(),
            truth.beta_star.len()
        )));
    }
    let denom = l2_norm(truth.beta_star.view());
    if denom == 0.0 {
        return Err(RenError::InvalidParameter("true regressor is zero".into()));
    }
    Ok(l2_norm((&beta_hat - &truth.beta_star).view()) / denom)
}

pub const MAX_REFINE_CONDITION: f64 = 1e12;

/// Least squares restricted to the top-k support of `beta_hat`:
/// solves `Γ̂_{S,S} z = γ̂_S` and scatters `z` back into a p-vector.
pub fn refine(surrogates: &TrimmedSurrogates, beta_hat: ArrayView1<f64>, k: usize) -> Result<Array1<f64>> {
    let p = surrogates.dim();
    if beta_hat.len() != p {
        return Err(RenError::DimensionMismatch(format!("estimate has length {}, expected {p}", beta_hat.len())));
    }
    if k == 0 || k > p {
        return Err(RenError::InvalidParameter(format!("support size {k} outside 1..={p}")));
    }
    let support = top_k_support(beta_hat, k);
    let g = surrogates.gamma_mat();
    let sub = DMatrix::from_fn(k, k, |a, b| g[[support[a], support[b]]]);
    let rhs = DVector::from_fn(k, |a, _| surrogates.gamma_vec()[support[a]]);

    let eig = sub.clone().symmetric_eigen();
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v.abs()), hi.max(v.abs())));
    let condition = if lo == 0.0 { f64::INFINITY } else { hi / lo };
    if !(condition <= MAX_REFINE_CONDITION) {
        return Err(RenError::IllConditioned { condition });
    }
    let z = sub
        .lu()
        .solve(&rhs)
        .ok_or(RenError::IllConditioned { condition: f64::INFINITY })?;
    let mut out = Array1::zeros(p);
    for (a, &j) in support.iter().enumerate() {
        out[j] = z[a];
    }
    Ok(out)
}

/// Curvature and tolerance for the lower/upper restricted-eigenvalue bounds
/// `μ₁‖θ‖₂² − τ‖θ‖₁² ≤ θᵀΓ̂θ ≤ μ₂‖θ‖₂² + τ‖θ‖₁²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct REParameters {
    pub mu1: f64,
    pub mu2: f64,
    pub tau: f64,
}

impl REParameters {
    pub fn new(mu1: f64, mu2: f64, tau: f64) -> Result<Self> {
        if !(mu1 > 0.0 && mu2 >= mu1 && tau >= 0.0) {
            return Err(RenError::InvalidParameter(format!(
                "need mu1 > 0, mu2 >= mu1, tau >= 0 (got {mu1}, {mu2}, {tau})"
            )));
        }
        Ok(REParameters { mu1, mu2, tau })
    }

    /// High-probability constants for the trimmed elastic-net surrogate given
    /// the covariance spectrum:
    /// `μ₁ = αλ_min/2 + (1−α)`, `μ₂ = 3αλ_max/2 + (1−α)`, `τ = αλ_min/8`.
    pub fn for_surrogate(alpha: f64, lambda_min: f64, lambda_max: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(RenError::InvalidParameter(format!("alpha {alpha} outside [0, 1]")));
        }
        Self::new(
            alpha * lambda_min / 2.0 + (1.0 - alpha),
            3.0 * alpha * lambda_max / 2.0 + (1.0 - alpha),
            alpha * lambda_min / 8.0,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReReport {
    pub trials: usize,
    pub lower_violations: usize,
    /// Smallest `θᵀΓ̂θ − (μ₁‖θ‖₂² − τ‖θ‖₁²)`; negative means a violation.
    pub lower_min_margin: f64,
    pub upper_violations: usize,
    /// Smallest `(μ₂‖θ‖₂² + τ‖θ‖₁²) − θᵀΓ̂θ`.
    pub upper_min_margin: f64,
}

/// A random direction in the cone `‖θ‖₁ ≤ 2√k‖θ‖₂`: Gaussian values on a
/// uniform support of size at most `4k`, scaled to unit l2 norm.
pub fn sample_cone_direction(p: usize, k: usize, rng: &mut impl Rng) -> Array1<f64> {
    let max_size = (4 * k).clamp(1, p);
    loop {
        let size = rng.random_range(1..=max_size);
        let support = index::sample(rng, p, size);
        let mut theta = Array1::zeros(p);
        for j in support.iter() {
            theta[j] = StandardNormal.sample(rng);
        }
        let norm = l2_norm(theta.view());
        if norm > 0.0 {
            return theta / norm;
        }
    }
}

fn re_margins(surrogates: &TrimmedSurrogates, params: &REParameters, theta: ArrayView1<f64>) -> (f64, f64) {
    let quad = dot(theta, matvec(surrogates.gamma_mat(), theta, Execution::Sequential).view());
    let l2sq = dot(theta, theta);
    let l1sq = l1_norm(theta).powi(2);
    let lower = quad - (params.mu1 * l2sq - params.tau * l1sq);
    let upper = (params.mu2 * l2sq + params.tau * l1sq) - quad;
    (lower, upper)
}

/// Evaluates both RE bounds on caller-supplied directions.
pub fn check_re_directions(
    surrogates: &TrimmedSurrogates,
    params: &REParameters,
    directions: &[Array1<f64>],
) -> Result<ReReport> {
    let p = surrogates.dim();
    if let Some(d) = directions.iter().find(|d| d.len() != p) {
        return Err(RenError::DimensionMismatch(format!("direction of length {}, expected {p}", d.len())));
    }
    let margins: Vec<(f64, f64)> = directions.iter().map(|d| re_margins(surrogates, params, d.view())).collect();
    Ok(summarize_margins(&margins))
}

fn summarize_margins(margins: &[(f64, f64)]) -> ReReport {
    ReReport {
        trials: margins.len(),
        lower_violations: margins.iter().filter(|m| m.0 < 0.0).count(),
        lower_min_margin: margins.iter().map(|m| m.0).fold(f64::INFINITY, f64::min),
        upper_violations: margins.iter().filter(|m| m.1 < 0.0).count(),
        upper_min_margin: margins.iter().map(|m| m.1).fold(f64::INFINITY, f64::min),
    }
}

/// Samples `trials` cone directions (one seeded stream per trial) and counts
/// violations of the lower and upper RE bounds.
pub fn check_lower_re(
    surrogates: &TrimmedSurrogates,
    params: &REParameters,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<ReReport> {
    if trials == 0 {
        return Err(RenError::InvalidParameter("need at least one trial".into()));
    }
    let p = surrogates.dim();
    let margins = map_indexed(Execution::default(), trials, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let theta = sample_cone_direction(p, k, &mut rng);
        re_margins(surrogates, params, theta.view())
    });
    Ok(summarize_margins(&margins))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceReport {
    /// Fitted per-iteration contraction of `‖β^t − β^final‖₂²`; 1 when no
    /// contracting segment exists.
    pub gamma_fit: f64,
    /// First iteration at which the squared distance stops contracting.
    pub floor_index: usize,
}

pub const MIN_TRACE_LEN: usize = 10;
pub const FLOOR_RATIO: f64 = 0.99;

/// Fits the geometric contraction rate of a solver run's distance trace.
pub fn convergence_diagnostic(solution: &Solution) -> Result<ConvergenceReport> {
    let trace = solution.distance_trace.as_deref().unwrap_or(&[]);
    let squared: Vec<f64> = trace.iter().map(|d| d * d).collect();
    fit_contraction(&squared)
}

/// Least-squares fit of `log g_t` against `t` over the segment before the
/// floor, where the floor is the first `t` with `g_{t+1}/g_t > 0.99` or
/// `g_{t+1} = 0`.
pub fn fit_contraction(squared_distances: &[f64]) -> Result<ConvergenceReport> {
    if squared_distances.len() < MIN_TRACE_LEN {
        return Err(RenError::TraceTooShort { needed: MIN_TRACE_LEN, got: squared_distances.len() });
    }
    let g = squared_distances;
    let floor_index = (0..g.len() - 1)
        .find(|&t| !(g[t] > 0.0) || !(g[t + 1] > 0.0) || g[t + 1] / g[t] > FLOOR_RATIO)
        .unwrap_or(g.len() - 1);
    // Points 0..=floor_index all have g_t > 0 except possibly a zero at the end.
    let points: Vec<(f64, f64)> = (0..=floor_index)
        .filter(|&t| g[t] > 0.0)
        .map(|t| (t as f64, g[t].ln()))
        .collect();
    if points.len() < 2 {
        return Ok(ConvergenceReport { gamma_fit: 1.0, floor_index });
    }
    let n = points.len() as f64;
    let mean_t = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_l = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_t) * (p.1 - mean_l)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_t).powi(2)).sum();
    Ok(ConvergenceReport { gamma_fit: (sxy / sxx).exp(), floor_index })
}
