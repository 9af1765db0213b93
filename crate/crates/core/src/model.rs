//! Domain types shared by every stage of the estimator.
//!
//! All types are immutable once constructed and are `Send + Sync`, so a
//! single dataset or surrogate pair can be read from many workers at once.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{RenError, Result};
use crate::par::Execution;

/// Population covariance of the authentic covariates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CovarianceSpec {
    Identity,
    /// Unit diagonal with every off-diagonal entry equal to `rho`.
    Equicorrelated { rho: f64 },
}

impl CovarianceSpec {
    pub fn lambda_min(&self, p: usize) -> f64 {
        match *self {
            CovarianceSpec::Identity => 1.0,
            CovarianceSpec::Equicorrelated { rho } if p > 1 => 1.0 - rho,
            CovarianceSpec::Equicorrelated { .. } => 1.0,
        }
    }

    pub fn lambda_max(&self, p: usize) -> f64 {
        match *self {
            CovarianceSpec::Identity => 1.0,
            CovarianceSpec::Equicorrelated { rho } => 1.0 + (p as f64 - 1.0) * rho,
        }
    }
}

/// Annotations known only for synthetic data.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub beta_star: Array1<f64>,
    /// Sorted indices of the nonzero entries of `beta_star`.
    pub support: Vec<usize>,
    /// Sorted row indices of uncorrupted observations.
    pub authentic_rows: Vec<usize>,
    /// Sorted row indices of corrupted observations.
    pub outlier_rows: Vec<usize>,
    pub sigma_x: f64,
    pub sigma_eps: f64,
    pub covariance: CovarianceSpec,
}

impl GroundTruth {
    pub fn k(&self) -> usize {
        self.support.len()
    }

    pub fn l1_norm(&self) -> f64 {
        l1_norm(self.beta_star.view())
    }

    pub(crate) fn validate(&self, rows: usize, n_outliers: usize) -> Result<()> {
        let p = self.beta_star.len();
        if self.support.iter().any(|&j| j >= p) {
            return Err(RenError::InvalidParameter("support index out of range".into()));
        }
        let nonzero = self.beta_star.iter().filter(|b| **b != 0.0).count();
        if nonzero != self.support.len() || self.support.iter().any(|&j| self.beta_star[j] == 0.0) {
            return Err(RenError::InvalidParameter(
                "beta_star must be nonzero exactly on its support".into(),
            ));
        }
        if self.outlier_rows.len() != n_outliers {
            return Err(RenError::InvalidParameter(format!(
                "{} outlier rows recorded, expected {}",
                self.outlier_rows.len(),
                n_outliers
            )));
        }
        let mut seen = vec![false; rows];
        for &r in self.authentic_rows.iter().chain(&self.outlier_rows) {
            if r >= rows || std::mem::replace(&mut seen[r], true) {
                return Err(RenError::InvalidParameter(
                    "authentic and outlier rows must partition the row indices".into(),
                ));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(RenError::InvalidParameter(
                "authentic and outlier rows must partition the row indices".into(),
            ));
        }
        Ok(())
    }
}

/// Observations `(X, y)` with `n_authentic + n_outliers` rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    covariates: Array2<f64>,
    responses: Array1<f64>,
    n_authentic: usize,
    n_outliers: usize,
    truth: Option<GroundTruth>,
}

impl Dataset {
    pub fn new(
        covariates: Array2<f64>,
        responses: Array1<f64>,
        n_authentic: usize,
        n_outliers: usize,
        truth: Option<GroundTruth>,
    ) -> Result<Self> {
        let (rows, p) = covariates.dim();
        if p == 0 {
            return Err(RenError::InvalidParameter("need at least one covariate".into()));
        }
        if rows != responses.len() || rows != n_authentic + n_outliers {
            return Err(RenError::DimensionMismatch(format!(
                "{rows} covariate rows, {} responses, {n_authentic} authentic + {n_outliers} outliers",
                responses.len()
            )));
        }
        if let Some(t) = &truth {
            if t.beta_star.len() != p {
                return Err(RenError::DimensionMismatch(format!(
                    "beta_star has length {}, data has {p} covariates",
                    t.beta_star.len()
                )));
            }
            t.validate(rows, n_outliers)?;
        }
        Ok(Dataset { covariates, responses, n_authentic, n_outliers, truth })
    }

    pub fn covariates(&self) -> ArrayView2<'_, f64> {
        self.covariates.view()
    }

    pub fn responses(&self) -> ArrayView1<'_, f64> {
        self.responses.view()
    }

    pub fn n_authentic(&self) -> usize {
        self.n_authentic
    }

    pub fn n_outliers(&self) -> usize {
        self.n_outliers
    }

    pub fn rows(&self) -> usize {
        self.covariates.nrows()
    }

    pub fn p(&self) -> usize {
        self.covariates.ncols()
    }

    pub fn truth(&self) -> Option<&GroundTruth> {
        self.truth.as_ref()
    }

    /// Returns a copy with rows reordered so that new row `r` is old row `perm[r]`.
    pub fn permuted_rows(&self, perm: &[usize]) -> Result<Dataset> {
        let rows = self.rows();
        let mut seen = vec![false; rows];
        if perm.len() != rows || perm.iter().any(|&r| r >= rows || std::mem::replace(&mut seen[r], true)) {
            return Err(RenError::InvalidParameter("not a permutation of the rows".into()));
        }
        let covariates = self.covariates.select(ndarray::Axis(0), perm);
        let responses = self.responses.select(ndarray::Axis(0), perm);
        let truth = self.truth.as_ref().map(|t| {
            let mut inverse = vec![0; rows];
            for (new, &old) in perm.iter().enumerate() {
                inverse[old] = new;
            }
            let remap = |idx: &[usize]| {
                let mut v: Vec<usize> = idx.iter().map(|&r| inverse[r]).collect();
                v.sort_unstable();
                v
            };
            GroundTruth {
                authentic_rows: remap(&t.authentic_rows),
                outlier_rows: remap(&t.outlier_rows),
                ..t.clone()
            }
        });
        Dataset::new(covariates, responses, self.n_authentic, self.n_outliers, truth)
    }
}

/// The robust pair `(Γ̂, γ̂)` standing in for the covariance and its
/// product with the true regressor.
#[derive(Clone, Debug, PartialEq)]
pub struct TrimmedSurrogates {
    gamma_mat: Array2<f64>,
    gamma_vec: Array1<f64>,
    alpha: f64,
    trim_count: usize,
}

impl TrimmedSurrogates {
    /// Wraps an arbitrary symmetric quadratic. Symmetry is checked exactly.
    pub fn from_parts(
        gamma_mat: Array2<f64>,
        gamma_vec: Array1<f64>,
        alpha: f64,
        trim_count: usize,
    ) -> Result<Self> {
        let (r, c) = gamma_mat.dim();
        if r != c || r != gamma_vec.len() {
            return Err(RenError::DimensionMismatch(format!(
                "gamma_mat is {r}x{c}, gamma_vec has length {}",
                gamma_vec.len()
            )));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(RenError::InvalidParameter(format!("alpha {alpha} outside [0, 1]")));
        }
        if gamma_mat.iter().chain(gamma_vec.iter()).any(|v| !v.is_finite()) {
            return Err(RenError::NonFinite("surrogates"));
        }
        for i in 0..r {
            for j in (i + 1)..r {
                if gamma_mat[[i, j]] != gamma_mat[[j, i]] {
                    return Err(RenError::InvalidParameter(format!(
                        "gamma_mat is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(TrimmedSurrogates { gamma_mat, gamma_vec, alpha, trim_count })
    }

    pub(crate) fn from_parts_unchecked(
        gamma_mat: Array2<f64>,
        gamma_vec: Array1<f64>,
        alpha: f64,
        trim_count: usize,
    ) -> Self {
        TrimmedSurrogates { gamma_mat, gamma_vec, alpha, trim_count }
    }

    pub fn gamma_mat(&self) -> ArrayView2<'_, f64> {
        self.gamma_mat.view()
    }

    pub fn gamma_vec(&self) -> ArrayView1<'_, f64> {
        self.gamma_vec.view()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn trim_count(&self) -> usize {
        self.trim_count
    }

    pub fn dim(&self) -> usize {
        self.gamma_vec.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepMode {
    Fixed(f64),
    /// `η = 2·λ̂_max(Γ̂)` by power iteration.
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepPolicy {
    pub mode: StepMode,
    pub power_iters: usize,
    pub power_tol: f64,
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy { mode: StepMode::Auto, power_iters: 1000, power_tol: 1e-6 }
    }
}

impl StepPolicy {
    pub fn fixed(eta: f64) -> Self {
        StepPolicy { mode: StepMode::Fixed(eta), ..Default::default() }
    }
}

/// Which iterates `pgd_solve` keeps for the retroactive distance trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IterateHistory {
    Off,
    /// The first `n` iterates, starting with `β⁰`.
    First(usize),
    All,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub radius: f64,
    pub step: StepPolicy,
    pub tol: f64,
    pub max_iters: usize,
    pub history: IterateHistory,
    pub execution: Execution,
}

impl SolverConfig {
    pub fn new(radius: f64) -> Self {
        SolverConfig {
            radius,
            step: StepPolicy::default(),
            tol: 1e-8,
            max_iters: 5000,
            history: IterateHistory::First(512),
            execution: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(RenError::InvalidParameter(format!("radius {} must be positive", self.radius)));
        }
        if !(self.tol > 0.0) {
            return Err(RenError::InvalidParameter(format!("tol {} must be positive", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(RenError::InvalidParameter("max_iters must be at least 1".into()));
        }
        match self.step.mode {
            StepMode::Fixed(eta) if !(eta > 0.0 && eta.is_finite()) => {
                Err(RenError::InvalidParameter(format!("fixed eta {eta} must be positive")))
            }
            _ => Ok(()),
        }
    }
}

/// Output of the projected gradient solver.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub beta_hat: Array1<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// The curvature constant actually used; the step is `1/eta`.
    pub eta: f64,
    /// Objective at `β⁰, β¹, …, β^final`.
    pub objective_trace: Vec<f64>,
    /// `‖β^t − β^final‖₂` for each retained iterate.
    pub distance_trace: Option<Vec<f64>>,
}

pub fn l1_norm(v: ArrayView1<f64>) -> f64 {
    v.iter().fold(0.0, |acc, x| acc + x.abs())
}

pub fn l2_norm(v: ArrayView1<f64>) -> f64 {
    v.iter().fold(0.0, |acc, x| acc + x * x).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn dataset_rejects_row_mismatch() {
        let x = Array2::<f64>::zeros((3, 2));
        let y = Array1::<f64>::zeros(3);
        assert!(Dataset::new(x.clone(), y.clone(), 2, 1, None).is_ok());
        assert!(matches!(
            Dataset::new(x.clone(), y, 3, 1, None),
            Err(RenError::DimensionMismatch(_))
        ));
        assert!(Dataset::new(x, Array1::zeros(2), 2, 0, None).is_err());
    }

    #[test]
    fn truth_must_partition_rows() {
        let truth = GroundTruth {
            beta_star: array![1.0, 0.0],
            support: vec![0],
            authentic_rows: vec![0, 1],
            outlier_rows: vec![1],
            sigma_x: 1.0,
            sigma_eps: 0.0,
            covariance: CovarianceSpec::Identity,
        };
        let x = Array2::<f64>::zeros((3, 2));
        assert!(Dataset::new(x.clone(), Array1::zeros(3), 2, 1, Some(truth.clone())).is_err());
        let fixed = GroundTruth { outlier_rows: vec![2], ..truth };
        assert!(Dataset::new(x, Array1::zeros(3), 2, 1, Some(fixed)).is_ok());
    }

    #[test]
    fn permutation_remaps_truth() {
        let truth = GroundTruth {
            beta_star: array![1.0],
            support: vec![0],
            authentic_rows: vec![0, 1],
            outlier_rows: vec![2],
            sigma_x: 1.0,
            sigma_eps: 0.0,
            covariance: CovarianceSpec::Identity,
        };
        let x = array![[1.0], [2.0], [3.0]];
        let d = Dataset::new(x, array![1.0, 2.0, 3.0], 2, 1, Some(truth)).unwrap();
        let q = d.permuted_rows(&[2, 0, 1]).unwrap();
        assert_eq!(q.responses(), array![3.0, 1.0, 2.0]);
        assert_eq!(q.truth().unwrap().outlier_rows, vec![0]);
        assert_eq!(q.truth().unwrap().authentic_rows, vec![1, 2]);
        assert!(d.permuted_rows(&[0, 0, 1]).is_err());
    }

    #[test]
    fn surrogates_require_exact_symmetry() {
        let ok = TrimmedSurrogates::from_parts(array![[1.0, 2.0], [2.0, 1.0]], array![0.0, 0.0], 1.0, 0);
        assert!(ok.is_ok());
        let bad = TrimmedSurrogates::from_parts(
            array![[1.0, 2.0], [2.0 + 1e-15, 1.0]],
            array![0.0, 0.0],
            1.0,
            0,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn solver_config_validation() {
        assert!(SolverConfig::new(1.0).validate().is_ok());
        assert!(SolverConfig::new(0.0).validate().is_err());
        let mut c = SolverConfig::new(1.0);
        c.max_iters = 0;
        assert!(c.validate().is_err());
        c = SolverConfig::new(1.0);
        c.step = StepPolicy::fixed(-1.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn equicorrelated_spectrum() {
        let c = CovarianceSpec::Equicorrelated { rho: 0.4 };
        assert!((c.lambda_min(10) - 0.6).abs() < 1e-15);
        assert!((c.lambda_max(10) - 4.6).abs() < 1e-12);
    }
}
