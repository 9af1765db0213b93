//! Desk-scale sweep on the independent design; prints per-cell aggregates.
//!
//! cargo run --release -p ren-core --example desk_sweep

use ren_core::datagen::{Design, GeneratorSpec};
use ren_core::experiment::{run_experiment, summarize, ExperimentSpec, TrimPolicy};

fn main() -> ren_core::Result<()> {
    let gen = GeneratorSpec {
        p: 200,
        n: 150,
        k: 5,
        outlier_fraction: 0.2,
        sigma_eps: 0.5,
        design: Design::Independent,
        seed: 0,
    };
    let mut spec = ExperimentSpec::new(gen);
    spec.outlier_fractions = vec![0.1, 0.2, 0.3];
    spec.alphas = vec![0.0, 0.5, 1.0];
    spec.seeds = (0..20).collect();
    spec.refine = true;
    for (label, trim) in [("trimmed", TrimPolicy::Oracle), ("untrimmed", TrimPolicy::Fixed(0))] {
        spec.trim_count = trim;
        let start = std::time::Instant::now();
        let rows = run_experiment(&spec)?;
        println!("{label} ({:.1}s)", start.elapsed().as_secs_f64());
        let failed = rows.iter().filter(|r| !r.is_ok()).count();
        let unconverged = rows.iter().filter(|r| r.converged == Some(false)).count();
        println!("  failed cells {failed}, unconverged {unconverged}");
        for s in summarize(&rows) {
            println!(
                "  fraction {:.2} alpha {:.1}: support median {:?} mean {:.2?}  l2 median {:.3?}  refined median {:.3?}",
                s.outlier_fraction,
                s.alpha,
                s.median_support,
                s.mean_support,
                s.median_l2_error,
                s.median_refined_l2_error
            );
        }
        for r in rows.iter().filter(|r| !r.is_ok()).take(3) {
            println!("  {}", r.status);
        }
    }
    Ok(())
}
