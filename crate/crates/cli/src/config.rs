//! Run settings from a `key = value` file and command-line flags.
//!
//! File keys are the long flag names without the leading dashes
//! (`sigma-eps`, `outlier-fractions`, ...); underscores are accepted in
//! place of dashes. Lists are comma-separated; seeds may also be a
//! half-open range `a..b`. Lines starting with `#` are comments.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::Parser;

use ren_core::datagen::{Design, GeneratorSpec};
use ren_core::experiment::{ExperimentSpec, RadiusPolicy, TrimPolicy};
use ren_core::Execution;

#[derive(Parser, Debug, Default, Clone, PartialEq)]
#[command(name = "ren", version, about = "Robust elastic net sweep runner")]
pub struct Cli {
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Noise level; defaults to 2 for the independent design, 1 for correlated.
    #[arg(long)]
    pub sigma_eps: Option<f64>,
    /// `independent` or `correlated`.
    #[arg(long)]
    pub design: Option<String>,
    /// Equicorrelation level of the correlated design.
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub outlier_fractions: Option<String>,
    #[arg(long)]
    pub alphas: Option<String>,
    /// Comma-separated seeds or a range `a..b`.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Also report the least-squares refit on the recovered support.
    #[arg(long)]
    pub refine: bool,
    /// `oracle` (the l1 norm of the true coefficients) or a positive value.
    #[arg(long)]
    pub radius: Option<String>,
    /// `oracle` (the planted outlier count) or a fixed count.
    #[arg(long)]
    pub trim_count: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Per-cell CSV; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional per-(fraction, alpha) summary CSV.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Leave runtime_ms empty so repeated runs give identical bytes.
    #[arg(long)]
    pub no_timing: bool,
    /// Run every cell on the calling thread.
    #[arg(long)]
    pub sequential: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Fully resolved run.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub spec: ExperimentSpec,
    pub out: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

pub fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| anyhow!("{what}: cannot parse {s:?}")))
        .collect()
}

pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a.trim().parse().with_context(|| format!("seeds: bad range start in {text:?}"))?;
        let b: u64 = b.trim().parse().with_context(|| format!("seeds: bad range end in {text:?}"))?;
        if b <= a {
            bail!("seeds: empty range {text:?}");
        }
        return Ok((a..b).collect());
    }
    parse_list(text, "seeds")
}

fn parse_flag(value: &str, key: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => bail!("{key}: expected true or false, got {value:?}"),
    }
}

fn scalar<T: std::str::FromStr>(value: &str, key: &str) -> Result<T> {
    value.parse().map_err(|_| anyhow!("{key}: cannot parse {value:?}"))
}

/// Reads `key = value` lines into a [`Cli`] with only those fields set.
pub fn parse_config(text: &str) -> Result<Cli> {
    let mut c = Cli::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected key = value", lineno + 1))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim().to_string();
        let k = key.as_str();
        match k {
            "p" => c.p = Some(scalar(&value, k)?),
            "n" => c.n = Some(scalar(&value, k)?),
            "k" => c.k = Some(scalar(&value, k)?),
            "sigma-eps" => c.sigma_eps = Some(scalar(&value, k)?),
            "design" => c.design = Some(value),
            "rho" => c.rho = Some(scalar(&value, k)?),
            "outlier-fractions" => c.outlier_fractions = Some(value),
            "alphas" => c.alphas = Some(value),
            "seeds" => c.seeds = Some(value),
            "refine" => c.refine = parse_flag(&value, k)?,
            "radius" => c.radius = Some(value),
            "trim-count" => c.trim_count = Some(value),
            "tol" => c.tol = Some(scalar(&value, k)?),
            "max-iters" => c.max_iters = Some(scalar(&value, k)?),
            "out" => c.out = Some(value.into()),
            "summary" => c.summary = Some(value.into()),
            "no-timing" => c.no_timing = parse_flag(&value, k)?,
            "sequential" => c.sequential = parse_flag(&value, k)?,
            _ => bail!("line {}: unknown key {key:?}", lineno + 1),
        }
    }
    Ok(c)
}

impl Cli {
    /// Flag values take precedence over `file`.
    pub fn over(self, file: Cli) -> Cli {
        Cli {
            p: self.p.or(file.p),
            n: self.n.or(file.n),
            k: self.k.or(file.k),
            sigma_eps: self.sigma_eps.or(file.sigma_eps),
            design: self.design.or(file.design),
            rho: self.rho.or(file.rho),
            outlier_fractions: self.outlier_fractions.or(file.outlier_fractions),
            alphas: self.alphas.or(file.alphas),
            seeds: self.seeds.or(file.seeds),
            refine: self.refine || file.refine,
            radius: self.radius.or(file.radius),
            trim_count: self.trim_count.or(file.trim_count),
            tol: self.tol.or(file.tol),
            max_iters: self.max_iters.or(file.max_iters),
            out: self.out.or(file.out),
            summary: self.summary.or(file.summary),
            no_timing: self.no_timing || file.no_timing,
            sequential: self.sequential || file.sequential,
            config: self.config,
        }
    }

    /// Loads the config file if one was named and merges it under the flags.
    pub fn with_config_file(self) -> Result<Cli> {
        match &self.config {
            None => Ok(self),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                let file = parse_config(&text).with_context(|| format!("in config {}", path.display()))?;
                Ok(self.over(file))
            }
        }
    }

    pub fn resolve(self) -> Result<Run> {
        let design = match self.design.as_deref().unwrap_or("independent") {
            "independent" => Design::Independent,
            "correlated" => Design::Equicorrelated { rho: self.rho.unwrap_or(Design::DEFAULT_RHO) },
            other => bail!("design: expected independent or correlated, got {other:?}"),
        };
        let default_sigma = match design {
            Design::Independent => 2.0,
            Design::Equicorrelated { .. } => 1.0,
        };
        let outlier_fractions = match &self.outlier_fractions {
            Some(s) => parse_list(s, "outlier-fractions")?,
            None => vec![0.2],
        };
        let generator = GeneratorSpec {
            p: self.p.unwrap_or(200),
            n: self.n.unwrap_or(150),
            k: self.k.unwrap_or(5),
            outlier_fraction: outlier_fractions.first().copied().unwrap_or(0.0),
            sigma_eps: self.sigma_eps.unwrap_or(default_sigma),
            design,
            seed: 0,
        };
        let mut spec = ExperimentSpec::new(generator);
        spec.outlier_fractions = outlier_fractions;
        if let Some(s) = &self.alphas {
            spec.alphas = parse_list(s, "alphas")?;
        }
        spec.seeds = match &self.seeds {
            Some(s) => parse_seeds(s)?,
            None => (0..10).collect(),
        };
        spec.refine = self.refine;
        spec.radius_policy = match self.radius.as_deref() {
            None | Some("oracle") => RadiusPolicy::Oracle,
            Some(v) => RadiusPolicy::Fixed(scalar(v, "radius")?),
        };
        spec.trim_count = match self.trim_count.as_deref() {
            None | Some("oracle") => TrimPolicy::Oracle,
            Some(v) => TrimPolicy::Fixed(scalar(v, "trim-count")?),
        };
        if let Some(tol) = self.tol {
            spec.solver.tol = tol;
        }
        if let Some(m) = self.max_iters {
            spec.solver.max_iters = m;
        }
        spec.record_runtime = !self.no_timing;
        if self.sequential {
            spec.execution = Execution::Sequential;
            spec.solver.execution = Execution::Sequential;
        }
        spec.validate()?;
        Ok(Run { spec, out: self.out, summary: self.summary })
    }
}
