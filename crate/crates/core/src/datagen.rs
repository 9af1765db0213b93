//! Synthetic sparse-regression data with adversarial decoy outliers.
//!
//! Authentic rows follow `y = ⟨x, β*⟩ + ε` with `x ~ N(0, Σ_x/n)` and
//! `ε ~ N(0, σ_ε²/n)`. Outlier rows are built to fit a *wrong* model exactly:
//! they are consistent with a regressor `θ*` supported off the true support,
//! which is what makes untrimmed estimators pick the wrong coordinates.
//!
//! Every random artifact draws from its own ChaCha stream derived from the
//! root seed, so changing the outlier count leaves the authentic data intact.

use ndarray::{s, Array1, Array2};
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{RenError, Result};
use crate::model::{l1_norm, l2_norm, CovarianceSpec, Dataset, GroundTruth, IterateHistory, SolverConfig, StepPolicy};
use crate::par::Execution;
use crate::solver::pgd_solve;
use crate::trimming::TrimmedGram;

/// Covariance structure of the authentic covariates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Design {
    Independent,
    Equicorrelated { rho: f64 },
}

impl Design {
    /// The correlation level used by the correlated benchmark.
    pub const DEFAULT_RHO: f64 = 0.4;

    pub fn covariance(&self) -> CovarianceSpec {
        match *self {
            Design::Independent => CovarianceSpec::Identity,
            Design::Equicorrelated { rho } => CovarianceSpec::Equicorrelated { rho },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneratorSpec {
    pub p: usize,
    pub n: usize,
    pub k: usize,
    /// `n_o / n`; the outlier count is `round(outlier_fraction · n)`.
    pub outlier_fraction: f64,
    pub sigma_eps: f64,
    pub design: Design,
    pub seed: u64,
}

impl GeneratorSpec {
    /// Full-scale independent design: p = 4000, n = 1600, k = 10, σ_ε = 2.
    pub fn independent_benchmark(outlier_fraction: f64, seed: u64) -> Self {
        GeneratorSpec {
            p: 4000,
            n: 1600,
            k: 10,
            outlier_fraction,
            sigma_eps: 2.0,
            design: Design::Independent,
            seed,
        }
    }

    /// Full-scale correlated design: equicorrelation 0.4 and σ_ε = 1.
    pub fn correlated_benchmark(outlier_fraction: f64, seed: u64) -> Self {
        GeneratorSpec {
            sigma_eps: 1.0,
            design: Design::Equicorrelated { rho: Design::DEFAULT_RHO },
            ..Self::independent_benchmark(outlier_fraction, seed)
        }
    }

    pub fn n_outliers(&self) -> usize {
        (self.outlier_fraction * self.n as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(RenError::InvalidParameter(m));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.k == 0 || self.k >= self.p {
            return bad(format!("need 1 <= k < p, got k = {}, p = {}", self.k, self.p));
        }
        if !(self.outlier_fraction >= 0.0 && self.outlier_fraction.is_finite()) {
            return bad(format!("outlier fraction {} must be non-negative", self.outlier_fraction));
        }
        if !(self.sigma_eps >= 0.0 && self.sigma_eps.is_finite()) {
            return bad(format!("sigma_eps {} must be non-negative", self.sigma_eps));
        }
        if let Design::Equicorrelated { rho } = self.design {
            if !(0.0..1.0).contains(&rho) {
                return bad(format!("correlation {rho} outside [0, 1)"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
#[repr(u64)]
enum Stream {
    Support = 1,
    Signs,
    Covariates,
    Noise,
    OutlierSigns,
    Decoys,
    Permutation,
}

fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

const DECOY_ATTEMPTS: usize = 100;
const DECOY_GUARD: f64 = 1e-6;

/// Uniform size-k support with ±1 entries.
pub fn generate_truth(spec: &GeneratorSpec) -> Result<GroundTruth> {
    spec.validate()?;
    let mut support = index::sample(&mut stream(spec.seed, Stream::Support), spec.p, spec.k).into_vec();
    support.sort_unstable();
    let mut signs = stream(spec.seed, Stream::Signs);
    let mut beta_star = Array1::zeros(spec.p);
    for &j in &support {
        beta_star[j] = if signs.random_bool(0.5) { 1.0 } else { -1.0 };
    }
    let covariance = spec.design.covariance();
    let n_outliers = spec.n_outliers();
    Ok(GroundTruth {
        beta_star,
        support,
        authentic_rows: (0..spec.n).collect(),
        outlier_rows: (spec.n..spec.n + n_outliers).collect(),
        sigma_x: covariance.lambda_max(spec.p).sqrt(),
        sigma_eps: spec.sigma_eps,
        covariance,
    })
}

/// `n` authentic rows and their responses.
pub fn generate_authentic(spec: &GeneratorSpec, truth: &GroundTruth) -> Result<(Array2<f64>, Array1<f64>)> {
    spec.validate()?;
    let (n, p) = (spec.n, spec.p);
    let scale = 1.0 / (n as f64).sqrt();
    let mut rng = stream(spec.seed, Stream::Covariates);
    let mut x = Array2::zeros((n, p));
    match spec.design {
        Design::Independent => {
            for v in x.iter_mut() {
                let g: f64 = StandardNormal.sample(&mut rng);
                *v = g * scale;
            }
        }
        Design::Equicorrelated { rho } => {
            let (a, b) = ((1.0 - rho).sqrt(), rho.sqrt());
            for mut row in x.rows_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                for v in row.iter_mut() {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    *v = (a * g + b * z) * scale;
                }
            }
        }
    }
    let mut noise = stream(spec.seed, Stream::Noise);
    let noise_scale = spec.sigma_eps * scale;
    let y = Array1::from_shape_fn(n, |i| {
        let signal = truth.support.iter().fold(0.0, |acc, &j| acc + x[[i, j]] * truth.beta_star[j]);
        let e: f64 = StandardNormal.sample(&mut noise);
        if noise_scale == 0.0 {
            signal
        } else {
            signal + noise_scale * e
        }
    });
    Ok((x, y))
}

/// Complement of the support, in increasing order.
pub fn off_support(p: usize, support: &[usize]) -> Vec<usize> {
    let mut on = vec![false; p];
    for &j in support {
        on[j] = true;
    }
    (0..p).filter(|&j| !on[j]).collect()
}

/// `θ* = argmin_{‖θ‖₁ ≤ ‖β*‖₁} ‖y^A − X^A_{(Λ*)^c} θ‖₂`, solved by projected
/// gradient descent on the induced quadratic.
pub fn decoy_regressor(truth: &GroundTruth, x: &Array2<f64>, y: &Array1<f64>) -> Result<Array1<f64>> {
    let off = off_support(truth.beta_star.len(), &truth.support);
    let x_off = x.select(ndarray::Axis(1), &off);
    let n = x_off.nrows();
    let sub = Dataset::new(x_off, y.clone(), n, 0, None)?;
    let surrogates = TrimmedGram::compute(&sub, 0, Execution::Sequential)?.surrogates(1.0)?;
    let config = SolverConfig {
        radius: truth.l1_norm(),
        step: StepPolicy { power_iters: 2000, power_tol: 1e-6, ..StepPolicy::default() },
        tol: 1e-10,
        max_iters: 20_000,
        history: IterateHistory::Off,
        execution: Execution::Sequential,
    };
    let theta = pgd_solve(&surrogates, &config, None)?.beta_hat;
    if theta.iter().all(|&t| t == 0.0) {
        return Err(RenError::DegenerateDecoy(
            "decoy regressor is exactly zero; increase n or change the seed".into(),
        ));
    }
    Ok(theta)
}

/// Outlier rows `(X^O, y^O)` consistent with the decoy model.
///
/// On the true support `X^O = (3/√n)·S` with `S` uniform ±1, and
/// `y^O = −X^O_{Λ*}β*`. Off the support each row is
/// `(y^O_i / ⟨B_i, θ*⟩)·B_i` with Gaussian `B_i`, redrawn while
/// `|⟨B_i, θ*⟩| < 10⁻⁶‖θ*‖₂`.
pub fn generate_outliers(
    spec: &GeneratorSpec,
    truth: &GroundTruth,
    authentic: (&Array2<f64>, &Array1<f64>),
) -> Result<(Array2<f64>, Array1<f64>)> {
    spec.validate()?;
    let n_o = spec.n_outliers();
    let p = spec.p;
    if n_o == 0 {
        return Ok((Array2::zeros((0, p)), Array1::zeros(0)));
    }
    let (x_a, y_a) = authentic;
    if x_a.ncols() != p || x_a.nrows() != y_a.len() {
        return Err(RenError::DimensionMismatch("authentic block does not match spec".into()));
    }
    let theta = decoy_regressor(truth, x_a, y_a)?;
    let theta_norm = l2_norm(theta.view());
    let off = off_support(p, &truth.support);

    let magnitude = 3.0 / (spec.n as f64).sqrt();
    let mut signs = stream(spec.seed, Stream::OutlierSigns);
    let mut decoys = stream(spec.seed, Stream::Decoys);
    let mut x = Array2::zeros((n_o, p));
    let mut y = Array1::zeros(n_o);
    let mut b = Array1::<f64>::zeros(off.len());
    for i in 0..n_o {
        for &j in &truth.support {
            x[[i, j]] = if signs.random_bool(0.5) { magnitude } else { -magnitude };
        }
        let fitted = truth.support.iter().fold(0.0, |acc, &j| acc + x[[i, j]] * truth.beta_star[j]);
        y[i] = -fitted;

        let mut attempts = 0;
        let projection = loop {
            for v in b.iter_mut() {
                *v = StandardNormal.sample(&mut decoys);
            }
            let d = b.dot(&theta);
            if d.abs() >= DECOY_GUARD * theta_norm {
                break d;
            }
            attempts += 1;
            if attempts >= DECOY_ATTEMPTS {
                return Err(RenError::DegenerateDecoy(format!(
                    "no usable decoy direction for outlier row {i} after {DECOY_ATTEMPTS} draws"
                )));
            }
        };
        let ratio = y[i] / projection;
        let mut row = x.slice_mut(s![i, ..]);
        for (slot, &j) in off.iter().enumerate() {
            row[j] = ratio * b[slot];
        }
    }
    Ok((x, y))
}

/// Stacks authentic over outlier rows and applies a seeded row shuffle.
pub fn assemble_dataset(
    spec: &GeneratorSpec,
    truth: GroundTruth,
    authentic: (Array2<f64>, Array1<f64>),
    outliers: (Array2<f64>, Array1<f64>),
) -> Result<Dataset> {
    let (x_a, y_a) = authentic;
    let (x_o, y_o) = outliers;
    let p = truth.beta_star.len();
    if x_a.ncols() != p || x_o.ncols() != p || x_a.nrows() != y_a.len() || x_o.nrows() != y_o.len() {
        return Err(RenError::DimensionMismatch("authentic and outlier blocks disagree".into()));
    }
    let (n, n_o) = (x_a.nrows(), x_o.nrows());
    let x = ndarray::concatenate(ndarray::Axis(0), &[x_a.view(), x_o.view()])
        .map_err(|e| RenError::DimensionMismatch(e.to_string()))?;
    let y = ndarray::concatenate(ndarray::Axis(0), &[y_a.view(), y_o.view()])
        .map_err(|e| RenError::DimensionMismatch(e.to_string()))?;
    let truth = GroundTruth {
        authentic_rows: (0..n).collect(),
        outlier_rows: (n..n + n_o).collect(),
        ..truth
    };
    let stacked = Dataset::new(x, y, n, n_o, Some(truth))?;
    let mut perm: Vec<usize> = (0..n + n_o).collect();
    perm.shuffle(&mut stream(spec.seed, Stream::Permutation));
    stacked.permuted_rows(&perm)
}

/// Truth, authentic rows, outliers, and assembly in one call.
pub fn generate_dataset(spec: &GeneratorSpec) -> Result<Dataset> {
    let truth = generate_truth(spec)?;
    let authentic = generate_authentic(spec, &truth)?;
    let outliers = generate_outliers(spec, &truth, (&authentic.0, &authentic.1))?;
    assemble_dataset(spec, truth, authentic, outliers)
}

/// Checks `‖θ*‖₁ ≤ ‖β*‖₁` within a relative slack.
pub fn decoy_is_feasible(truth: &GroundTruth, theta: &Array1<f64>) -> bool {
    l1_norm(theta.view()) <= truth.l1_norm() * (1.0 + 1e-9)
}
