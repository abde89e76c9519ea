use cannings_core::limit::{continuous_block_count, piecewise_kingman_tree, PairRateClock};
use cannings_core::rng::{replicate, stream};
use cannings_core::tree::build_tree;
use cannings_core::verify::{
    chi_square_gof, chi_square_homogeneity, ks_one_sample, ks_two_sample, truncated_exp_cdf,
};
use cannings_core::{ContinuousProfile, DiscreteProfile, Error, OffspringLaw};
use rand::Rng;

/// Nominal rejection rate at level 0.05 over 200 seeds, within two standard errors.
fn assert_calibrated(p_values: &[f64]) {
    let n = p_values.len() as f64;
    let rate = p_values.iter().filter(|&&p| p < 0.05).count() as f64 / n;
    let se = (0.05 * 0.95 / n).sqrt();
    assert!((rate - 0.05).abs() <= 2.0 * se + 1.0 / n, "rejection rate {rate}");
}

#[test]
fn sample_height_matches_its_cdf() {
    let ell = ContinuousProfile::new(vec![(0.0, 0.5), (0.3, 2.0), (1.0, 1.0), (1.4, 0.0)]).unwrap();
    let mut rng = stream(11, 0);
    let draws: Vec<f64> = (0..100_000)
        .map(|_| ell.sample_height(rng.random()))
        .collect();
    let r = ks_one_sample(&draws, |x| ell.height_cdf(x), |x| ell.height_cdf(x)).unwrap();
    assert!(r.statistic < 0.01, "{r:?}");
}

#[test]
fn subtree_leaf_depths_are_uniform_vertex_depths() {
    let profile = DiscreteProfile::new(vec![3, 5, 4, 6, 2]).unwrap();
    let tree = build_tree(&profile, &OffspringLaw::WrightFisher, &mut stream(12, 0)).unwrap();
    let h_q = tree.extinction();
    let sizes: Vec<f64> = (0..h_q).map(|s| tree.generation_size(s) as f64).collect();
    let total: f64 = sizes.iter().sum();
    let k = 3;
    let samples = replicate(13, 10_000, |rng| tree.sample_k_point_subtree(k, rng)).unwrap();
    let mut counts = vec![0u64; h_q];
    for sub in &samples {
        for &h in &sub.leaves {
            counts[h.round() as usize] += 1;
        }
    }
    let probs: Vec<f64> = sizes.iter().map(|s| s / total).collect();
    let r = chi_square_gof(&counts, &probs);
    assert!(r.p_value > 0.001, "{r:?}");
}

#[test]
fn ks_two_sample_is_calibrated_under_the_null() {
    let clock = PairRateClock::constant(1.0, 10.0).unwrap();
    let p: Vec<f64> = (0..200u64)
        .map(|seed| {
            let draw = |index| {
                replicate(seed * 2 + index, 400, |rng| {
                    Ok::<_, Error>(continuous_block_count(&clock, 5.0, 4, rng)?[1].0)
                })
                .unwrap()
            };
            ks_two_sample(&draw(0), &draw(1)).unwrap().p_value
        })
        .collect();
    assert_calibrated(&p);
}

#[test]
fn chi_square_is_calibrated_under_the_null() {
    let p: Vec<f64> = (0..200u64)
        .map(|seed| {
            let mut rng = stream(seed, 0);
            let mut draw = || {
                let mut h = vec![0u64; 5];
                for _ in 0..500 {
                    h[(rng.random::<f64>().powi(2) * 5.0) as usize] += 1;
                }
                h
            };
            let (a, b) = (draw(), draw());
            chi_square_homogeneity(&a, &b).p_value
        })
        .collect();
    assert_calibrated(&p);
}

#[test]
fn constant_rate_first_merges_are_exponential() {
    let clock = PairRateClock::constant(2.0, 100.0).unwrap();
    let times = replicate(14, 100_000, |rng| {
        Ok::<_, Error>(continuous_block_count(&clock, 50.0, 3, rng)?[1].0)
    })
    .unwrap();
    let (cdf, left) = truncated_exp_cdf(3.0 * 2.0, 50.0);
    let r = ks_one_sample(&times, cdf, left).unwrap();
    assert!(r.statistic < 0.01, "{r:?}");
}

#[test]
fn left_right_orientation_is_a_fair_coin() {
    let clock = PairRateClock::constant(4.0, 1.0).unwrap();
    let mut rng = stream(15, 0);
    let reps = 20_000;
    let mut high_left = 0usize;
    let mut merged = 0usize;
    for _ in 0..reps {
        let t = piecewise_kingman_tree(&clock, &[0.8, 0.7], &mut rng).unwrap();
        if t.merges.is_empty() {
            continue;
        }
        merged += 1;
        if t.leaves[0] == 0.8 {
            high_left += 1;
        }
    }
    let p = high_left as f64 / merged as f64;
    assert!((p - 0.5).abs() < 3.0 * (0.25 / merged as f64).sqrt(), "{p} over {merged}");
}
