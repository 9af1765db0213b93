//! Grid sweeps over outlier fraction, α, and seed.
//!
//! Each `(fraction, seed)` pair generates one dataset and one trimmed Gram
//! matrix, shared by every α in the grid. Pairs run in parallel; each owns
//! its RNG streams, and rows are emitted in `(fraction, α, seed)` order
//! regardless of scheduling.

use std::time::Instant;

use crate::datagen::{generate_dataset, GeneratorSpec};
use crate::error::{RenError, Result};
use crate::evaluation::{l2_recovery_error, refine, support_recovery_count};
use crate::model::{Dataset, IterateHistory, SolverConfig};
use crate::par::{map_indexed, Execution};
use crate::solver::pgd_solve;
use crate::trimming::TrimmedGram;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrimPolicy {
    /// Trim exactly the number of planted outliers.
    Oracle,
    Fixed(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RadiusPolicy {
    /// `R = ‖β*‖₁`.
    Oracle,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    /// Template; `outlier_fraction` and `seed` are overwritten per cell.
    pub generator: GeneratorSpec,
    pub outlier_fractions: Vec<f64>,
    pub alphas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub refine: bool,
    pub trim_count: TrimPolicy,
    /// Template; `radius` is overwritten per cell by `radius_policy`.
    pub solver: SolverConfig,
    pub radius_policy: RadiusPolicy,
    /// When false, `runtime_ms` is left empty so output is byte-reproducible.
    pub record_runtime: bool,
    pub execution: Execution,
}

impl ExperimentSpec {
    pub fn new(generator: GeneratorSpec) -> Self {
        let mut solver = SolverConfig::new(1.0);
        solver.history = IterateHistory::Off;
        ExperimentSpec {
            generator,
            outlier_fractions: vec![generator.outlier_fraction],
            alphas: vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
            seeds: vec![generator.seed],
            refine: false,
            trim_count: TrimPolicy::Oracle,
            solver,
            radius_policy: RadiusPolicy::Oracle,
            record_runtime: true,
            execution: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(RenError::InvalidParameter(m.into()));
        if self.outlier_fractions.is_empty() || self.alphas.is_empty() || self.seeds.is_empty() {
            return bad("sweep lists must be non-empty");
        }
        if self.outlier_fractions.iter().any(|f| !(0.0..1.0).contains(f)) {
            return bad("outlier fractions must lie in [0, 1)");
        }
        if self.alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return bad("alphas must lie in [0, 1]");
        }
        if let RadiusPolicy::Fixed(r) = self.radius_policy {
            if !(r > 0.0 && r.is_finite()) {
                return bad("fixed radius must be positive");
            }
        }
        let mut probe = self.generator;
        probe.outlier_fraction = self.outlier_fractions[0];
        probe.validate()?;
        let mut solver = self.solver;
        solver.radius = 1.0;
        solver.validate()
    }

    pub fn cell_count(&self) -> usize {
        self.outlier_fractions.len() * self.alphas.len() * self.seeds.len()
    }
}

/// One `(fraction, α, seed)` cell of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub seed: u64,
    pub alpha: f64,
    pub outlier_fraction: f64,
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub recovered_support: Option<usize>,
    pub l2_error: Option<f64>,
    pub refined_l2_error: Option<f64>,
    pub iterations: Option<usize>,
    pub runtime_ms: Option<f64>,
    pub converged: Option<bool>,
    pub status: String,
}

pub const STATUS_OK: &str = "ok";

impl ResultRow {
    fn empty(spec: &GeneratorSpec, alpha: f64, status: String) -> Self {
        ResultRow {
            seed: spec.seed,
            alpha,
            outlier_fraction: spec.outlier_fraction,
            n: spec.n,
            p: spec.p,
            k: spec.k,
            recovered_support: None,
            l2_error: None,
            refined_l2_error: None,
            iterations: None,
            runtime_ms: None,
            converged: None,
            status,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == STATUS_OK
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn run_cell_group(spec: &ExperimentSpec, fraction: f64, seed: u64) -> Vec<ResultRow> {
    let gen = GeneratorSpec { outlier_fraction: fraction, seed, ..spec.generator };
    let fail_all = |status: String| spec.alphas.iter().map(|&a| ResultRow::empty(&gen, a, status.clone())).collect();

    let data = match generate_dataset(&gen) {
        Ok(d) => d,
        Err(e) => return fail_all(format!("datagen_error: {e}")),
    };
    let trim = match spec.trim_count {
        TrimPolicy::Oracle => data.n_outliers(),
        TrimPolicy::Fixed(t) => t,
    };

    let gram_start = Instant::now();
    let needs_gram = spec.alphas.iter().any(|&a| a > 0.0);
    let gram = if needs_gram {
        TrimmedGram::compute(&data, trim, spec.execution)
    } else {
        TrimmedGram::compute_cross_only(&data, trim, spec.execution)
    };
    let gram_ms = elapsed_ms(gram_start);
    let gram = match gram {
        Ok(g) => g,
        Err(e) => return fail_all(format!("surrogate_error: {e}")),
    };

    spec.alphas
        .iter()
        .map(|&alpha| {
            let start = Instant::now();
            let mut row = solve_cell(spec, &gen, &data, &gram, alpha);
            if spec.record_runtime {
                let shared = if alpha > 0.0 { gram_ms } else { 0.0 };
                row.runtime_ms = Some(elapsed_ms(start) + shared);
            }
            row
        })
        .collect()
}

fn solve_cell(spec: &ExperimentSpec, gen: &GeneratorSpec, data: &Dataset, gram: &TrimmedGram, alpha: f64) -> ResultRow {
    let truth = data.truth().expect("synthetic data carries ground truth");
    let surrogates = match gram.surrogates(alpha) {
        Ok(s) => s,
        Err(e) => return ResultRow::empty(gen, alpha, format!("surrogate_error: {e}")),
    };
    let mut config = spec.solver;
    config.execution = spec.execution;
    config.radius = match spec.radius_policy {
        RadiusPolicy::Oracle => truth.l1_norm(),
        RadiusPolicy::Fixed(r) => r,
    };
    let solution = match pgd_solve(&surrogates, &config, None) {
        Ok(s) => s,
        Err(e) => return ResultRow::empty(gen, alpha, format!("solve_error: {e}")),
    };
    let mut row = ResultRow::empty(gen, alpha, STATUS_OK.into());
    row.iterations = Some(solution.iterations);
    row.converged = Some(solution.converged);
    row.recovered_support = Some(support_recovery_count(solution.beta_hat.view(), truth));
    row.l2_error = match l2_recovery_error(solution.beta_hat.view(), truth) {
        Ok(e) => Some(e),
        Err(e) => {
            row.status = format!("metric_error: {e}");
            None
        }
    };
    if spec.refine {
        match refine(&surrogates, solution.beta_hat.view(), truth.k()) {
            Ok(r) => row.refined_l2_error = l2_recovery_error(r.view(), truth).ok(),
            Err(e) => row.status = format!("refine_error: {e}"),
        }
    }
    row
}

/// Runs the full grid. Per-cell failures are recorded in `status`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let seeds = spec.seeds.len();
    let groups = map_indexed(spec.execution, spec.outlier_fractions.len() * seeds, |g| {
        run_cell_group(spec, spec.outlier_fractions[g / seeds], spec.seeds[g % seeds])
    });
    // groups[f * seeds + s][a] → rows ordered by (f, a, s)
    let mut rows = Vec::with_capacity(spec.cell_count());
    for f in 0..spec.outlier_fractions.len() {
        let block = &groups[f * seeds..(f + 1) * seeds];
        for a in 0..spec.alphas.len() {
            rows.extend(block.iter().map(|cells| cells[a].clone()));
        }
    }
    Ok(rows)
}

/// Per-`(fraction, α)` aggregates over the successful seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub outlier_fraction: f64,
    pub alpha: f64,
    pub cells: usize,
    pub ok_cells: usize,
    pub median_support: Option<f64>,
    pub mean_support: Option<f64>,
    pub median_l2_error: Option<f64>,
    pub mean_l2_error: Option<f64>,
    pub median_refined_l2_error: Option<f64>,
    pub mean_refined_l2_error: Option<f64>,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { 0.5 * (v[mid - 1] + v[mid]) })
}

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Groups rows by `(fraction, α)` in first-appearance order.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(f64, f64)> = Vec::new();
    for r in rows {
        let key = (r.outlier_fraction, r.alpha);
        if !keys.iter().any(|k| k.0.to_bits() == key.0.to_bits() && k.1.to_bits() == key.1.to_bits()) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(fraction, alpha)| {
            let group: Vec<&ResultRow> = rows
                .iter()
                .filter(|r| r.outlier_fraction.to_bits() == fraction.to_bits() && r.alpha.to_bits() == alpha.to_bits())
                .collect();
            let support: Vec<f64> = group.iter().filter_map(|r| r.recovered_support.map(|s| s as f64)).collect();
            let l2: Vec<f64> = group.iter().filter_map(|r| r.l2_error).collect();
            let refined: Vec<f64> = group.iter().filter_map(|r| r.refined_l2_error).collect();
            SummaryRow {
                outlier_fraction: fraction,
                alpha,
                cells: group.len(),
                ok_cells: group.iter().filter(|r| r.is_ok()).count(),
                median_support: median(&support),
                mean_support: mean(&support),
                median_l2_error: median(&l2),
                mean_l2_error: mean(&l2),
                median_refined_l2_error: median(&refined),
                mean_refined_l2_error: mean(&refined),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::Design;

    fn tiny() -> ExperimentSpec {
        let gen = GeneratorSpec {
            p: 30,
            n: 25,
            k: 2,
            outlier_fraction: 0.1,
            sigma_eps: 0.5,
            design: Design::Independent,
            seed: 0,
        };
        let mut spec = ExperimentSpec::new(gen);
        spec.outlier_fractions = vec![0.0, 0.2];
        spec.alphas = vec![0.0, 0.5, 1.0];
        spec.seeds = vec![1, 2, 3, 4, 5];
        spec.record_runtime = false;
        spec
    }

    #[test]
    fn grid_cardinality_and_order() {
        let rows = run_experiment(&tiny()).unwrap();
        assert_eq!(rows.len(), 30);
        let keys: Vec<(f64, f64, u64)> = rows.iter().map(|r| (r.outlier_fraction, r.alpha, r.seed)).collect();
        let mut sorted = keys.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
        assert_eq!(keys, sorted);
    }

    #[test]
    fn execution_modes_agree() {
        let mut spec = tiny();
        spec.execution = Execution::Sequential;
        let a = run_experiment(&spec).unwrap();
        spec.execution = Execution::Parallel;
        let b = run_experiment(&spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = tiny();
        spec.alphas.clear();
        assert!(run_experiment(&spec).is_err());
        let mut spec = tiny();
        spec.outlier_fractions = vec![1.0];
        assert!(run_experiment(&spec).is_err());
    }

    #[test]
    fn oversized_trim_fails_cells_not_sweep() {
        let mut spec = tiny();
        spec.trim_count = TrimPolicy::Fixed(1000);
        let rows = run_experiment(&spec).unwrap();
        assert_eq!(rows.len(), 30);
        assert!(rows.iter().all(|r| !r.is_ok() && r.l2_error.is_none() && r.recovered_support.is_none()));
    }

    #[test]
    fn summary_arithmetic() {
        let gen = tiny().generator;
        let mk = |seed, s: usize| ResultRow {
            recovered_support: Some(s),
            l2_error: Some(s as f64),
            ..ResultRow::empty(&GeneratorSpec { seed, ..gen }, 0.5, STATUS_OK.into())
        };
        let rows = vec![mk(1, 3), mk(2, 5), mk(3, 5)];
        let sum = summarize(&rows);
        assert_eq!(sum.len(), 1);
        assert_eq!(sum[0].median_support, Some(5.0));
        assert_eq!(sum[0].mean_support, Some(13.0 / 3.0));
        let single = summarize(&rows[..1]);
        assert_eq!(single[0].median_support, Some(3.0));
        assert_eq!(single[0].mean_l2_error, Some(3.0));
        assert_eq!(single[0].median_refined_l2_error, None);
    }

    #[test]
    fn summary_preserves_cell_count() {
        let rows = run_experiment(&tiny()).unwrap();
        let sum = summarize(&rows);
        assert_eq!(sum.len(), 6);
        assert_eq!(sum.iter().map(|s| s.cells).sum::<usize>(), rows.len());
    }

    #[test]
    fn median_even_count() {
        assert_eq!(median(&[1.0, 4.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }
}
