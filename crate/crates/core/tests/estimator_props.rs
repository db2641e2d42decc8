use proptest::prelude::*;
use qae_core::estimators::{
    crt_estimate, crt_reconstruct, crt_solve, direct_estimate, hybrid_estimate, mle_estimate, Algorithm, Branch,
    HybridCalibration, OffsetSet, PosteriorGrid,
};
use qae_core::simulator::analytic_success_prob;
use qae_core::{DepthCounts, NoiseModel};
use std::f64::consts::{FRAC_PI_2, PI};

fn exact_counts(theta: f64, depth: usize, shots: u64) -> DepthCounts {
    let good = (analytic_success_prob(theta, depth) * shots as f64).round() as u64;
    DepthCounts::new(depth, good, shots - good, 0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn posterior_is_normalized(good in 0u64..200, bad in 0u64..200, depth in 0usize..8, noisy in any::<bool>()) {
        let mut grid = PosteriorGrid::uniform(0.001).unwrap();
        let model = NoiseModel::default();
        grid.update(&DepthCounts::new(depth, good, bad, 5), noisy.then_some(&model)).unwrap();
        let w = grid.weights();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(w.iter().all(|x| x.is_finite() && *x >= 0.0));
        prop_assert_eq!(w.len(), grid.len());
    }

    #[test]
    fn crt_solve_round_trip(d in 2u64..60, v_frac in 0.0..1.0f64, k1 in -3i64..3, k2 in -3i64..3) {
        let (n1, n2) = (2 * d - 1, 2 * d + 1);
        let v = ((n1 * n2) as f64 * v_frac) as u64 % (n1 * n2);
        let r1 = (v % n1) as i64 + k1 * n1 as i64;
        let r2 = (v % n2) as i64 + k2 * n2 as i64;
        prop_assert_eq!(crt_solve(r1, n1, r2, n2).unwrap(), v);
    }

    #[test]
    fn crt_exact_on_grid(d in 2usize..8, v_frac in 0.0..1.0f64) {
        let m = (4 * d * d - 1) as u64;
        let v = ((m as f64 * v_frac) as u64).min(m / 2);
        let theta = v as f64 * PI / m as f64;
        let ctx = crt_reconstruct(
            analytic_success_prob(theta, d),
            analytic_success_prob(theta, d - 1),
            theta,
            d,
            OffsetSet::Extended,
        )
        .unwrap();
        prop_assert!((ctx.theta() - theta).abs() < 1e-12, "D={} v={} got {}", d, v, ctx.theta());
    }

    #[test]
    fn hybrid_returns_one_of_its_inputs(
        t_mle in 0.0..FRAC_PI_2,
        t_crt in 0.0..FRAC_PI_2,
        beta in 0.0..10.0f64,
        gap in 0.0..0.2f64,
    ) {
        let mle = mle_estimate(&[exact_counts(t_mle, 0, 100), exact_counts(t_mle, 1, 100), exact_counts(t_mle, 2, 100)], 0.001, None).unwrap();
        let crt = crt_estimate(&exact_counts(t_crt, 4, 100), &exact_counts(t_crt, 3, 100), &mle, 4, OffsetSet::Extended).unwrap();
        let cal = HybridCalibration { mle_avg_depth2: gap, crt_exact_at_d: 0.0, beta_hybrid: beta };
        let h = hybrid_estimate(&mle, &crt, &cal);
        prop_assert_eq!(h.algorithm(), Algorithm::Hybrid);
        prop_assert_eq!(h.oracle_calls(), crt.oracle_calls());
        let far = (mle.p_hat() - crt.p_hat()).abs() > beta * gap;
        match h.branch() {
            Some(Branch::Mle) => prop_assert!(far && h.p_hat() == mle.p_hat()),
            Some(Branch::Crt) => prop_assert!(!far && h.p_hat() == crt.p_hat()),
            None => prop_assert!(false, "hybrid must tag its branch"),
        }
    }
}

#[test]
fn exact_counts_recover_grid_points_cumulatively() {
    let eps = 0.001;
    let grid = PosteriorGrid::uniform(eps).unwrap();
    let n = grid.len();
    for j in 0..50 {
        let k = 1 + j * (n - 2) / 49;
        let theta = grid.theta(k);
        assert!((theta - PI * k as f64 * eps / 2.0).abs() < 1e-12);
        let mut counts = Vec::new();
        for d in 0..8 {
            counts.push(exact_counts(theta, d, 1_000_000));
            let est = mle_estimate(&counts, eps, None).unwrap();
            assert!((est.theta_hat() - theta).abs() <= 1e-12, "k={k} D={d}: {} vs {theta}", est.theta_hat());
        }
    }
}

#[test]
fn noise_aware_likelihood_undoes_known_damping() {
    let model = NoiseModel::linear(0.1, 0.1, 0.6, 7).unwrap();
    let theta = 0.6;
    let counts: Vec<DepthCounts> = (0..8)
        .map(|d| {
            let good = (model.noisy_prob(theta, d).unwrap() * 1e6).round() as u64;
            DepthCounts::new(d, good, 1_000_000 - good, 0)
        })
        .collect();
    let aware = mle_estimate(&counts, 0.001, Some(&model)).unwrap();
    assert!((aware.theta_hat() - theta).abs() < 0.002, "{}", aware.theta_hat());
    let depth0 = direct_estimate(&counts[0]).unwrap();
    assert!((depth0.theta_hat() - theta).abs() > 0.01);
}

#[test]
fn crt_error_bounded_off_grid() {
    for d in 2..8 {
        let m = (4 * d * d - 1) as f64;
        for i in 0..200 {
            let theta = (i as f64 + 0.37) / 200.0 * FRAC_PI_2;
            let ctx = crt_reconstruct(
                analytic_success_prob(theta, d),
                analytic_success_prob(theta, d - 1),
                theta,
                d,
                OffsetSet::Extended,
            )
            .unwrap();
            assert!((ctx.theta() - theta).abs() <= PI / m + 1e-12, "D={d} θ={theta}: {}", ctx.theta());
        }
    }
}

#[test]
fn oracle_calls_are_not_double_counted() {
    let theta = 0.3;
    let low: Vec<DepthCounts> = (0..=2).map(|d| exact_counts(theta, d, 10)).collect();
    let mle = mle_estimate(&low, 0.001, None).unwrap();
    assert_eq!(mle.oracle_calls(), 10 * (1 + 3 + 5));
    let crt = crt_estimate(&exact_counts(theta, 2, 10), &low[1], &mle, 2, OffsetSet::Extended).unwrap();
    assert_eq!(crt.oracle_calls(), mle.oracle_calls());
    let crt =
        crt_estimate(&exact_counts(theta, 5, 10), &exact_counts(theta, 4, 10), &mle, 5, OffsetSet::Extended).unwrap();
    assert_eq!(crt.oracle_calls(), 10 * (1 + 3 + 5 + 9 + 11));
}
