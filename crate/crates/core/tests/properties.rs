mod common;

use common::{random_connected_graph, random_instance, random_problems, rng};
use dlm_core::analysis::{check_bounds, consensus_error_bounds, global_subgradient_bound};
use dlm_core::oracle::verify_kkt;
use dlm_core::spectral::{deflated_power_iteration, Sigma2Options};
use dlm_core::weights::{lazy_max_degree_weights, validate_weight_matrix_with};
use dlm_core::{
    metropolis_weights, parse_case, run_dlm, solve_centralized, synth_ieee118_style, RunTrace,
    StepSchedule,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn dense_sigma2(entries: &[f64], n: usize) -> f64 {
    let m = DMatrix::from_row_slice(n, n, entries);
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv[1]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sigma2_agrees_with_dense_svd(seed in any::<u64>(), n in 2usize..=20, p in 0.0..0.6f64) {
        let mut r = rng(seed);
        let g = random_connected_graph(&mut r, n, p);
        for w in [metropolis_weights(&g).unwrap(), lazy_max_degree_weights(&g).unwrap()] {
            prop_assert!((w.sigma2() - dense_sigma2(w.entries(), n)).abs() <= 1e-8);
            prop_assert!(w.sigma2() < 1.0);
        }
    }

    #[test]
    fn metropolis_is_doubly_stochastic(seed in any::<u64>(), n in 2usize..=30, p in 0.0..1.0f64) {
        let mut r = rng(seed);
        let g = random_connected_graph(&mut r, n, p);
        let w = metropolis_weights(&g).unwrap();
        prop_assert!(validate_weight_matrix_with(&w.to_rows(), &g, 1e-12, &Sigma2Options::default()).is_ok());
    }

    #[test]
    fn mean_multiplier_follows_average_step(seed in any::<u64>(), n in 2usize..=8) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, n);
        let w = metropolis_weights(&inst.graph).unwrap();
        let lam0: Vec<f64> = (0..n).map(|_| r.gen_range(-3.0..3.0)).collect();
        let trace = run_dlm(&inst.problems, &w, &StepSchedule::RecipSqrt, 200, &lam0).unwrap();
        let rows = trace.rows();
        for k in 0..200 {
            let drift: f64 = inst.problems.iter().zip(&rows[k + 1].x).map(|(p, x)| p.share - x).sum();
            let expected = rows[k].mean_lambda() - trace.alphas()[k] * drift / n as f64;
            prop_assert!((rows[k + 1].mean_lambda() - expected).abs() <= 1e-9 * (1.0 + expected.abs()));
        }
    }

    #[test]
    fn iterates_stay_in_their_intervals(seed in any::<u64>(), n in 2usize..=8) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, n);
        let w = metropolis_weights(&inst.graph).unwrap();
        let lam0: Vec<f64> = (0..n).map(|_| r.gen_range(-50.0..50.0)).collect();
        let trace = run_dlm(&inst.problems, &w, &StepSchedule::Recip, 300, &lam0).unwrap();
        for row in &trace.rows()[1..] {
            for (x, p) in row.x.iter().zip(&inst.problems) {
                prop_assert!(p.interval.lo() <= *x && *x <= p.interval.hi());
            }
        }
    }

    #[test]
    fn consensus_error_stays_below_bound(seed in any::<u64>(), n in 2usize..=10) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, n);
        let w = metropolis_weights(&inst.graph).unwrap();
        let lam0: Vec<f64> = (0..n).map(|_| r.gen_range(-5.0..5.0)).collect();
        let trace = run_dlm(&inst.problems, &w, &StepSchedule::RecipSqrt, 300, &lam0).unwrap();
        let l1: f64 = lam0.iter().map(|l| l.abs()).sum();
        let c = global_subgradient_bound(&inst.problems);
        let bounds = consensus_error_bounds(300, &StepSchedule::RecipSqrt, w.sigma2(), l1, c, n).unwrap();
        for (row, b) in trace.rows().iter().zip(bounds) {
            prop_assert!(row.spread() <= b * (1.0 + 1e-12));
        }
    }

    #[test]
    fn oracle_satisfies_kkt(seed in any::<u64>(), n in 1usize..=12) {
        let mut r = rng(seed);
        let (problems, total) = random_problems(&mut r, n);
        let sol = solve_centralized(&problems, total).unwrap();
        prop_assert!(verify_kkt(&problems, &sol));
        prop_assert!(sol.residual <= 1e-9);
        for (x, p) in sol.x_star.iter().zip(&problems) {
            prop_assert!(p.interval.contains(*x));
        }
    }
}

#[test]
fn power_iteration_matches_dense_svd_beyond_dense_threshold() {
    let mut r = rng(3);
    for n in [70, 96] {
        let g = random_connected_graph(&mut r, n, 0.05);
        let w = metropolis_weights(&g).unwrap();
        let dense = dense_sigma2(w.entries(), n);
        assert!((w.sigma2() - dense).abs() < 1e-6, "n={n}: {} vs {dense}", w.sigma2());
        let forced = deflated_power_iteration(w.entries(), n, &Sigma2Options::default()).unwrap();
        assert_eq!(forced, w.sigma2());
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let mut r = rng(99);
    let inst = random_instance(&mut r, 7);
    let w = metropolis_weights(&inst.graph).unwrap();
    let lam0 = vec![0.0; 7];
    let a = run_dlm(&inst.problems, &w, &StepSchedule::RecipSqrt, 500, &lam0).unwrap();
    let b = run_dlm(&inst.problems, &w, &StepSchedule::RecipSqrt, 500, &lam0).unwrap();
    assert_eq!(a.to_trace_csv(), b.to_trace_csv());
    assert_eq!(a.to_summary_csv(), b.to_summary_csv());
}

#[test]
fn trace_csv_round_trip_preserves_bound_report() {
    let mut r = rng(5);
    let inst = random_instance(&mut r, 6);
    let w = metropolis_weights(&inst.graph).unwrap();
    let sched = StepSchedule::RecipSqrt;
    let trace = run_dlm(&inst.problems, &w, &sched, 1000, &[0.0; 6]).unwrap();
    let back = RunTrace::from_csv(&trace.to_trace_csv(), &inst.problems, sched).unwrap();
    assert_eq!(back.rows(), trace.rows());
    assert_eq!(back.to_summary_csv(), trace.to_summary_csv());
    let lam = solve_centralized(&inst.problems, inst.total).unwrap().lam_star;
    let checkpoints = [1000, 1, 100, 10, 10];
    let a = check_bounds(&trace, &inst.problems, &w, lam, &checkpoints).unwrap();
    let b = check_bounds(&back, &inst.problems, &w, lam, &checkpoints).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert!(a.satisfied());
    let ks: Vec<usize> = a.dual_gap.unwrap().iter().map(|g| g.check.k).collect();
    assert_eq!(ks, [1, 10, 100, 1000]);
}

#[test]
fn synthetic_cases_round_trip_through_text() {
    for seed in 0..10 {
        let case = synth_ieee118_style(seed, 54).unwrap();
        assert_eq!(case.generators.len(), 54);
        assert_eq!(parse_case(&case.to_text()).unwrap(), case);
        assert_eq!(synth_ieee118_style(seed, 54).unwrap(), case);
    }
}
