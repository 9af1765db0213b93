//! Robust elastic net regression.
//!
//! The estimator replaces the Gram matrix `XᵀX` and the correlation `Xᵀy`
//! of the elastic net with *trimmed* inner products, which drop the
//! largest-magnitude elementwise products before summing. The resulting
//! quadratic program over an l1 ball is solved by projected gradient
//! descent. Setting `alpha = 1` gives a robust Lasso; `alpha = 0` gives
//! robust soft thresholding.
//!
//! ```
//! use ren_core::datagen::{generate_dataset, Design, GeneratorSpec};
//! use ren_core::evaluation::support_recovery_count;
//! use ren_core::model::SolverConfig;
//! use ren_core::{pgd_solve, trimming::build_surrogates};
//!
//! let spec = GeneratorSpec {
//!     p: 60, n: 50, k: 3, outlier_fraction: 0.1, sigma_eps: 0.5,
//!     design: Design::Independent, seed: 1,
//! };
//! let data = generate_dataset(&spec).unwrap();
//! let truth = data.truth().unwrap();
//! let surrogates = build_surrogates(&data, 0.0, data.n_outliers()).unwrap();
//! let solution = pgd_solve(&surrogates, &SolverConfig::new(truth.l1_norm()), None).unwrap();
//! assert!(support_recovery_count(solution.beta_hat.view(), truth) <= 3);
//! ```

// Negated float comparisons below double as NaN rejection.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod csvio;
pub mod datagen;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod linalg;
pub mod model;
pub mod par;
pub mod projection;
pub mod solver;
pub mod trimming;

pub use error::{RenError, Result};
pub use model::{Dataset, GroundTruth, Solution, SolverConfig, StepPolicy, TrimmedSurrogates};
pub use par::Execution;
pub use projection::project_l1_ball;
pub use solver::{estimate_eta, gradient, objective, pgd_solve};
pub use trimming::{build_surrogates, trimmed_inner_product};
