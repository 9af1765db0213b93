use approx::assert_relative_eq;
use ndarray::{Array1, Array2};
use proptest::prelude::*;

use ren_core::csvio::{emit_csv, load_csv, read_dataset, write_dataset};
use ren_core::datagen::{generate_dataset, Design, GeneratorSpec};
use ren_core::evaluation::support_recovery_count;
use ren_core::experiment::ResultRow;
use ren_core::model::{l1_norm, l2_norm};
use ren_core::trimming::build_surrogates_with;
use ren_core::{project_l1_ball, trimmed_inner_product, Dataset, Execution};

fn pairs(max_len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1..=max_len).prop_flat_map(|m| {
        (prop::collection::vec(-100.0..100.0f64, m), prop::collection::vec(-100.0..100.0f64, m))
    })
}

fn tip(u: &[f64], v: &[f64], trim: usize) -> f64 {
    trimmed_inner_product(Array1::from(u.to_vec()).view(), Array1::from(v.to_vec()).view(), trim).unwrap()
}

fn small_spec() -> impl Strategy<Value = GeneratorSpec> {
    (0u64..1000, 0.0..0.3f64, prop::bool::ANY).prop_map(|(seed, outlier_fraction, correlated)| GeneratorSpec {
        p: 24,
        n: 30,
        k: 3,
        outlier_fraction,
        sigma_eps: 0.5,
        design: if correlated { Design::Equicorrelated { rho: 0.4 } } else { Design::Independent },
        seed,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn trimming_is_symmetric_in_its_arguments((u, v) in pairs(40), frac in 0.0..1.0f64) {
        let trim = ((u.len() as f64) * frac) as usize;
        prop_assert_eq!(tip(&u, &v, trim).to_bits(), tip(&v, &u, trim).to_bits());
    }

    #[test]
    fn trimming_ignores_joint_permutation((u, v) in pairs(40), frac in 0.0..1.0f64, rot in 0usize..40) {
        let trim = ((u.len() as f64) * frac) as usize;
        let m = u.len();
        let shift = rot % m;
        let ur: Vec<f64> = (0..m).map(|i| u[(i + shift) % m]).collect();
        let vr: Vec<f64> = (0..m).map(|i| v[(i + shift) % m]).collect();
        // Summation order changes, so agreement is up to rounding.
        let scale: f64 = u.iter().zip(&v).map(|(a, b)| (a * b).abs()).sum::<f64>().max(1.0);
        prop_assert!((tip(&u, &v, trim) - tip(&ur, &vr, trim)).abs() <= 1e-12 * scale);
    }

    #[test]
    fn trimming_more_never_raises_the_kept_magnitude((u, v) in pairs(40)) {
        let kept_abs = |trim: usize| {
            let abs_u: Vec<f64> = u.iter().map(|x| x.abs()).collect();
            let abs_v: Vec<f64> = v.iter().map(|x| x.abs()).collect();
            tip(&abs_u, &abs_v, trim)
        };
        for trim in 1..u.len() {
            prop_assert!(kept_abs(trim) <= kept_abs(trim - 1));
        }
    }

    #[test]
    fn a_single_planted_spike_has_bounded_influence((u, v) in pairs(40), spike in 1e3..1e12f64) {
        let m = u.len();
        let mut us = u.clone();
        let mut vs = v.clone();
        us.push(spike);
        vs.push(spike);
        // With one extra trimmed slot the spike is always dropped, so the
        // result is bounded by the clean sum of absolute products.
        let bound: f64 = u.iter().zip(&v).map(|(a, b)| (a * b).abs()).sum();
        prop_assert!(tip(&us, &vs, 1).abs() <= bound * (1.0 + 1e-12) + 1e-300);
        prop_assert_eq!(m + 1, us.len());
    }

    #[test]
    fn projection_is_feasible_idempotent_and_sign_preserving(
        v in prop::collection::vec(-50.0..50.0f64, 1..200),
        frac in 0.01..1.5f64,
    ) {
        let norm: f64 = v.iter().map(|x| x.abs()).sum();
        prop_assume!(norm > 0.0);
        let radius = norm * frac;
        let x = Array1::from(v.clone());
        let once = project_l1_ball(x.view(), radius).unwrap();
        prop_assert!(l1_norm(once.view()) <= radius * (1.0 + 1e-9));
        let twice = project_l1_ball(once.view(), radius).unwrap();
        for (a, b) in once.iter().zip(&twice) {
            assert_relative_eq!(*a, *b, epsilon = 1e-12, max_relative = 1e-12);
        }
        for (p, o) in once.iter().zip(&v) {
            prop_assert!(*p == 0.0 || p.signum() == o.signum());
            prop_assert!(p.abs() <= o.abs());
        }
    }

    #[test]
    fn projection_is_non_expansive(
        (a, b) in (1usize..100).prop_flat_map(|p| (prop::collection::vec(-10.0..10.0f64, p), prop::collection::vec(-10.0..10.0f64, p))),
        radius in 0.1..20.0f64,
    ) {
        let (a, b) = (Array1::from(a), Array1::from(b));
        let pa = project_l1_ball(a.view(), radius).unwrap();
        let pb = project_l1_ball(b.view(), radius).unwrap();
        prop_assert!(l2_norm((&pa - &pb).view()) <= l2_norm((&a - &b).view()) * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn support_count_is_scale_invariant(seed in 0u64..500, scale in 1e-3..1e3f64) {
        let data = generate_dataset(&GeneratorSpec { p: 24, n: 30, k: 3, outlier_fraction: 0.1, sigma_eps: 0.5, design: Design::Independent, seed }).unwrap();
        let truth = data.truth().unwrap();
        let beta = truth.beta_star.mapv(|b| b + 0.01) + data.covariates().row(0);
        prop_assert_eq!(
            support_recovery_count(beta.view(), truth),
            support_recovery_count((&beta * scale).view(), truth)
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn datagen_is_a_function_of_its_spec(spec in small_spec()) {
        let a = generate_dataset(&spec).unwrap();
        let b = generate_dataset(&spec).unwrap();
        prop_assert_eq!(a.covariates(), b.covariates());
        prop_assert_eq!(a.responses(), b.responses());
        prop_assert_eq!(a.truth(), b.truth());
    }

    #[test]
    fn parallel_and_sequential_surrogates_are_bit_identical(spec in small_spec(), alpha in 0.0..=1.0f64) {
        let data = generate_dataset(&spec).unwrap();
        let n_o = data.n_outliers();
        let seq = build_surrogates_with(&data, alpha, n_o, Execution::Sequential).unwrap();
        let par = build_surrogates_with(&data, alpha, n_o, Execution::Parallel).unwrap();
        prop_assert_eq!(seq, par);
    }

    #[test]
    fn surrogates_ignore_row_order(spec in small_spec(), alpha in 0.0..=1.0f64, trim in 0usize..8) {
        // Planted outliers share exact magnitudes, and ties are broken by row
        // index, so the property is stated for tie-free Gaussian rows only.
        let data = generate_dataset(&GeneratorSpec { outlier_fraction: 0.0, ..spec }).unwrap();
        let rows = data.rows();
        let reversed: Vec<usize> = (0..rows).rev().collect();
        let flipped = data.permuted_rows(&reversed).unwrap();
        let a = build_surrogates_with(&data, alpha, trim, Execution::Sequential).unwrap();
        let b = build_surrogates_with(&flipped, alpha, trim, Execution::Sequential).unwrap();
        for (x, y) in a.gamma_mat().iter().zip(b.gamma_mat().iter()) {
            assert_relative_eq!(*x, *y, epsilon = 1e-12, max_relative = 1e-10);
        }
        for (x, y) in a.gamma_vec().iter().zip(b.gamma_vec().iter()) {
            assert_relative_eq!(*x, *y, epsilon = 1e-12, max_relative = 1e-10);
        }
    }

    #[test]
    fn dataset_csv_round_trip(spec in small_spec()) {
        let data = generate_dataset(&spec).unwrap();
        let mut buf = Vec::new();
        write_dataset(&data, &mut buf).unwrap();
        let back: Dataset = read_dataset(buf.as_slice(), None).unwrap();
        prop_assert_eq!(back.covariates(), data.covariates());
        prop_assert_eq!(back.responses(), data.responses());
        prop_assert_eq!(back.n_outliers(), data.n_outliers());
    }
}

fn arb_row() -> impl Strategy<Value = ResultRow> {
    (
        any::<u64>(),
        prop::num::f64::NORMAL | prop::num::f64::ZERO | prop::num::f64::SUBNORMAL,
        prop::option::of(0usize..50),
        prop::option::of(prop::num::f64::POSITIVE),
        prop::option::of(any::<bool>()),
        "[a-z_ ,:\"]{0,20}",
    )
        .prop_map(|(seed, alpha, support, l2, converged, status)| ResultRow {
            seed,
            alpha,
            outlier_fraction: 0.25,
            n: 150,
            p: 200,
            k: 5,
            recovered_support: support,
            l2_error: l2,
            refined_l2_error: l2.map(|v| v / 3.0),
            iterations: support,
            runtime_ms: None,
            converged,
            status,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn result_csv_round_trip_is_lossless(rows in prop::collection::vec(arb_row(), 0..20)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        emit_csv(&rows, &path).unwrap();
        let back = load_csv(&path).unwrap();
        prop_assert_eq!(back.len(), rows.len());
        for (a, b) in rows.iter().zip(&back) {
            prop_assert_eq!(a.alpha.to_bits(), b.alpha.to_bits());
            prop_assert_eq!(a, b);
        }
    }
}

#[test]
fn surrogate_matrix_is_symmetric() {
    let data = generate_dataset(&GeneratorSpec { p: 120, n: 90, k: 4, outlier_fraction: 0.2, sigma_eps: 0.5, design: Design::Independent, seed: 4 }).unwrap();
    let s = build_surrogates_with(&data, 0.6, data.n_outliers(), Execution::default()).unwrap();
    let g: Array2<f64> = s.gamma_mat().to_owned();
    assert_eq!(g, g.t());
}
