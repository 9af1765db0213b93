//! Projected gradient descent for
//! `min ½βᵀΓ̂β − ⟨γ̂, β⟩  subject to  ‖β‖₁ ≤ R`.
//!
//! Each step is `β ← Π_R(β − (1/η)(Γ̂β − γ̂))`. With `StepMode::Auto`,
//! `η = 2·λ̂_max(Γ̂)`, which keeps the step well inside the descent region of
//! the convex part even when Γ̂ is indefinite.

use ndarray::{Array1, ArrayView1};

use crate::error::{RenError, Result};
use crate::linalg::{dot, lambda_max, matvec};
use crate::model::{l1_norm, l2_norm, IterateHistory, Solution, SolverConfig, StepMode, StepPolicy, TrimmedSurrogates};
use crate::par::Execution;
use crate::projection::project_l1_ball;

fn check_dim(surrogates: &TrimmedSurrogates, beta: ArrayView1<f64>) -> Result<()> {
    if beta.len() != surrogates.dim() {
        return Err(RenError::DimensionMismatch(format!(
            "beta has length {}, surrogates have dimension {}",
            beta.len(),
            surrogates.dim()
        )));
    }
    Ok(())
}

/// `½βᵀΓ̂β − ⟨γ̂, β⟩`.
pub fn objective(surrogates: &TrimmedSurrogates, beta: ArrayView1<f64>) -> Result<f64> {
    check_dim(surrogates, beta)?;
    let g_beta = matvec(surrogates.gamma_mat(), beta, Execution::Sequential);
    Ok(objective_from_product(surrogates, beta, g_beta.view()))
}

fn objective_from_product(surrogates: &TrimmedSurrogates, beta: ArrayView1<f64>, g_beta: ArrayView1<f64>) -> f64 {
    0.5 * dot(beta, g_beta) - dot(surrogates.gamma_vec(), beta)
}

/// `Γ̂β − γ̂`.
pub fn gradient(surrogates: &TrimmedSurrogates, beta: ArrayView1<f64>) -> Result<Array1<f64>> {
    check_dim(surrogates, beta)?;
    let g_beta = matvec(surrogates.gamma_mat(), beta, Execution::Sequential);
    Ok(g_beta - surrogates.gamma_vec())
}

/// Curvature constant `η` for the step `1/η`.
pub fn estimate_eta(surrogates: &TrimmedSurrogates, policy: &StepPolicy) -> Result<f64> {
    estimate_eta_with(surrogates, policy, Execution::default())
}

pub fn estimate_eta_with(surrogates: &TrimmedSurrogates, policy: &StepPolicy, exec: Execution) -> Result<f64> {
    match policy.mode {
        StepMode::Fixed(eta) if eta > 0.0 && eta.is_finite() => Ok(eta),
        StepMode::Fixed(eta) => Err(RenError::InvalidParameter(format!("fixed eta {eta} must be positive"))),
        StepMode::Auto => {
            let lmax = match lambda_max(surrogates.gamma_mat(), policy.power_iters, policy.power_tol, exec) {
                Ok(l) => l,
                Err(RenError::PowerIteration { iterations, last_estimate }) => {
                    return Err(RenError::PowerIteration { iterations, last_estimate: 2.0 * last_estimate })
                }
                Err(e) => return Err(e),
            };
            if lmax <= 0.0 {
                return Err(RenError::InvalidParameter(format!(
                    "largest eigenvalue {lmax} is not positive; supply a fixed step"
                )));
            }
            Ok(2.0 * lmax)
        }
    }
}

/// Runs projected gradient descent from `beta0` (zero when `None`).
pub fn pgd_solve(
    surrogates: &TrimmedSurrogates,
    config: &SolverConfig,
    beta0: Option<ArrayView1<f64>>,
) -> Result<Solution> {
    config.validate()?;
    let eta = estimate_eta_with(surrogates, &config.step, config.execution)?;
    pgd_solve_with_eta(surrogates, config, eta, beta0)
}

/// As [`pgd_solve`] with a precomputed `eta`.
pub fn pgd_solve_with_eta(
    surrogates: &TrimmedSurrogates,
    config: &SolverConfig,
    eta: f64,
    beta0: Option<ArrayView1<f64>>,
) -> Result<Solution> {
    config.validate()?;
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(RenError::InvalidParameter(format!("eta {eta} must be positive")));
    }
    let p = surrogates.dim();
    let radius = config.radius;
    let exec = config.execution;

    let mut beta = match beta0 {
        Some(b) => {
            check_dim(surrogates, b)?;
            let norm = l1_norm(b);
            if !norm.is_finite() || norm > radius * (1.0 + 1e-9) {
                return Err(RenError::InfeasibleStart { norm, radius });
            }
            b.to_owned()
        }
        None => Array1::zeros(p),
    };

    let keep = |t: usize| match config.history {
        IterateHistory::Off => false,
        IterateHistory::First(n) => t < n,
        IterateHistory::All => true,
    };
    let mut history = Vec::new();
    if keep(0) {
        history.push(beta.clone());
    }

    let step = 1.0 / eta;
    let mut g_beta = matvec(surrogates.gamma_mat(), beta.view(), exec);
    let mut objective_trace = vec![objective_from_product(surrogates, beta.view(), g_beta.view())];
    let mut iterations = 0;
    let mut converged = false;

    for t in 1..=config.max_iters {
        // β − (1/η)(Γ̂β − γ̂)
        let mut candidate = beta.clone();
        candidate.scaled_add(-step, &g_beta);
        candidate.scaled_add(step, &surrogates.gamma_vec());
        if candidate.iter().any(|v| !v.is_finite()) {
            return Err(RenError::Diverged { iteration: t });
        }
        let next = project_l1_ball(candidate.view(), radius)?;

        let change = l2_norm((&next - &beta).view());
        let scale = l2_norm(beta.view()).max(1.0);
        beta = next;
        iterations = t;

        g_beta = matvec(surrogates.gamma_mat(), beta.view(), exec);
        let obj = objective_from_product(surrogates, beta.view(), g_beta.view());
        if !obj.is_finite() {
            return Err(RenError::Diverged { iteration: t });
        }
        objective_trace.push(obj);
        if keep(t) {
            history.push(beta.clone());
        }
        if change <= config.tol * scale {
            converged = true;
            break;
        }
    }

    let distance_trace = match config.history {
        IterateHistory::Off => None,
        _ => Some(history.iter().map(|b| l2_norm((b - &beta).view())).collect()),
    };

    Ok(Solution { beta_hat: beta, iterations, converged, eta, objective_trace, distance_trace })
}
