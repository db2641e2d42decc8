use proptest::prelude::*;
use qae_core::noise::{depolarized_prob, noise_floor, sample_noisy_counts, sample_noisy_shots};
use qae_core::{CorrelatedNoise, NoiseModel, ProbabilityPrior};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::FRAC_PI_2;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn mixture_and_cosine_forms_agree(theta in 0.0..FRAC_PI_2, d in 0usize..8, beta in 0.0..0.9f64, g in 0.0..3.0f64) {
        let model = NoiseModel::new(beta, vec![g; 8]).unwrap();
        let eta = model.effective_eta(d).unwrap();
        prop_assert!((1.0 - eta - (1.0 - beta) * (-g).exp()).abs() < 1e-14);
        let ideal = ((2 * d + 1) as f64 * theta).sin().powi(2);
        let mixture = (1.0 - eta) * ideal + eta / 2.0;
        prop_assert!((model.noisy_prob(theta, d).unwrap() - mixture).abs() < 1e-14);
        prop_assert!((depolarized_prob(theta, d, eta) - mixture).abs() < 1e-14);
    }

    #[test]
    fn noise_contracts_toward_half(theta in 0.0..FRAC_PI_2, d in 0usize..8, eta in 0.0..=1.0f64) {
        let ideal = depolarized_prob(theta, d, 0.0);
        let noisy = depolarized_prob(theta, d, eta);
        prop_assert!((noisy - 0.5).abs() <= (ideal - 0.5).abs() + 1e-15);
        prop_assert!((0.0..=1.0).contains(&noisy));
    }
}

/// Pearson statistic of a 2×2 table.
fn chi_square_2x2(a: [u64; 2], b: [u64; 2]) -> f64 {
    let n = (a[0] + a[1] + b[0] + b[1]) as f64;
    let rows = [(a[0] + a[1]) as f64, (b[0] + b[1]) as f64];
    let cols = [(a[0] + b[0]) as f64, (a[1] + b[1]) as f64];
    let obs = [[a[0], a[1]], [b[0], b[1]]];
    let mut stat = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let e = rows[i] * cols[j] / n;
            stat += (obs[i][j] as f64 - e).powi(2) / e;
        }
    }
    stat
}

fn good_bad(model: &NoiseModel, seed: u64) -> [u64; 2] {
    let c = sample_noisy_shots(0.4, 2, 100_000, model, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    [c.good, c.bad]
}

#[test]
fn degenerate_correlation_matches_independent_noise() {
    let base = NoiseModel::new(0.1, vec![0.2; 4]).unwrap();
    let independent = good_bad(&base, 1);
    for c in [CorrelatedNoise { p_switch: 1.0, burst_scale: 4.0 }, CorrelatedNoise { p_switch: 0.01, burst_scale: 1.0 }]
    {
        let corr = good_bad(&base.clone().with_correlation(c).unwrap(), 2);
        // 0.1% critical value of χ² with one degree of freedom
        let stat = chi_square_2x2(independent, corr);
        assert!(stat < 10.83, "{c:?}: {stat}");
    }
}

#[test]
fn correlated_noise_keeps_marginal_rate() {
    let model = NoiseModel::new(0.05, vec![0.3; 4])
        .unwrap()
        .with_correlation(CorrelatedNoise { p_switch: 0.05, burst_scale: 3.0 })
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let runs = 400;
    let fractions: Vec<f64> = (0..runs)
        .map(|_| sample_noisy_counts(0.9, 1, 500, &model, &mut rng).unwrap().good_fraction().unwrap())
        .collect();
    let mean = fractions.iter().sum::<f64>() / runs as f64;
    let var = fractions.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (runs - 1) as f64;
    let eta = model.effective_eta(1).unwrap();
    let expected = (1.0 - eta) * 0.9 + eta / 2.0;
    assert!((mean - expected).abs() < 5.0 * (var / runs as f64).sqrt(), "{mean} vs {expected}");
    let binomial = expected * (1.0 - expected) / 500.0;
    assert!(var > 1.5 * binomial, "bursts should widen run-to-run spread: {var} vs {binomial}");
}

#[test]
fn leak_moves_shots_to_discarded() {
    let model = NoiseModel::noiseless(2).with_leak(0.2).unwrap();
    let c = sample_noisy_counts(1.0, 0, 50_000, &model, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    assert_eq!(c.bad, 0);
    let frac = c.discarded as f64 / 50_000.0;
    assert!((frac - 0.2).abs() < 0.01, "{frac}");
}

#[test]
fn floor_scales_with_eta() {
    let model = NoiseModel::new(0.2, vec![0.0]).unwrap();
    let uniform_p = noise_floor(&model, 0, &ProbabilityPrior::UniformP).unwrap();
    assert!((uniform_p - 0.2 * 0.25).abs() < 1e-9);
    let point = noise_floor(&model, 0, &ProbabilityPrior::PointMass(0.1)).unwrap();
    assert!((point - 0.2 * 0.4).abs() < 1e-15);
    // E|½ − p| for p = (x·y)² with Haar x, y: 1/π
    let haar = ProbabilityPrior::Haar.mean_distance_from_half();
    assert!((haar - 1.0 / std::f64::consts::PI).abs() < 1e-6, "{haar}");
}

#[test]
fn rejects_bad_parameters() {
    assert!(NoiseModel::new(1.0, vec![0.0]).is_err());
    assert!(NoiseModel::new(0.0, vec![]).is_err());
    assert!(NoiseModel::new(0.0, vec![0.2, 0.1]).is_err());
    assert!(NoiseModel::new(0.0, vec![-0.1]).is_err());
    let m = NoiseModel::noiseless(1);
    assert!(m.clone().with_correlation(CorrelatedNoise { p_switch: 0.5, burst_scale: 0.5 }).is_err());
    assert!(m.effective_eta(2).is_err());
}
