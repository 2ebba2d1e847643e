use flowpool::rankpool::{
    approx_rank_pool, full_energy, optimize, ranking_scores, FeatureMode, FrameFeature,
    RankPoolParams, RankingModel,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pair_sum(features: &[Vec<f64>]) -> Vec<f64> {
    let dim = features[0].len();
    let mut out = vec![0.0; dim];
    for t in 0..features.len() {
        for q in t + 1..features.len() {
            for k in 0..dim {
                out[k] += features[q][k] - features[t][k];
            }
        }
    }
    out
}

fn wrap(features: &[Vec<f64>]) -> Vec<FrameFeature> {
    features
        .iter()
        .map(|f| FrameFeature::new(f.clone()).unwrap())
        .collect()
}

#[test]
fn approximate_pooling_matches_pair_sums() {
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = rng.random_range(2..=10);
        let dim = rng.random_range(1..=6);
        let raw: Vec<Vec<f64>> = (0..t)
            .map(|_| (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect())
            .collect();
        let pooled = approx_rank_pool(&wrap(&raw)).unwrap();
        for (a, b) in pooled.as_slice().iter().zip(pair_sum(&raw)) {
            assert!((a - b).abs() <= 1e-9, "seed {seed}: {a} vs {b}");
        }
    }
}

#[test]
fn constant_sequences_pool_to_zero() {
    for t in 2..=10 {
        let raw = vec![vec![0.37, -2.5, 1e6]; t];
        let pooled = approx_rank_pool(&wrap(&raw)).unwrap();
        assert!(pooled.as_slice().iter().all(|&v| v == 0.0));
    }
}

fn pairwise_accuracy(scores: &[f64]) -> f64 {
    let (mut ok, mut total) = (0, 0);
    for t in 0..scores.len() {
        for q in t + 1..scores.len() {
            total += 1;
            if scores[q] > scores[t] {
                ok += 1;
            }
        }
    }
    ok as f64 / total as f64
}

#[test]
fn exact_solver_orders_monotone_sequences() {
    let params = RankPoolParams::default();
    for t in 4..=10 {
        for (start, slope) in [(0.0, 1.0), (3.0, -0.5), (-1.0, 0.2)] {
            let raw: Vec<Vec<f64>> = (0..t).map(|i| vec![start + slope * i as f64]).collect();
            let feats = wrap(&raw);
            let d = optimize(&feats, &params).unwrap();
            let acc = pairwise_accuracy(&ranking_scores(&d, &feats).unwrap());
            assert!(acc >= 0.95, "T={t} slope {slope}: accuracy {acc}");
            let e = full_energy(&feats, &d, params.lambda).unwrap();
            let e0 = full_energy(&feats, &RankingModel::zeros(1), params.lambda).unwrap();
            assert_eq!(e0, 1.0);
            assert!(e < e0, "T={t}: energy {e}");
        }
    }
}

#[test]
fn time_averaging_changes_features_not_direction() {
    let raw: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, 0.0]).collect();
    let feats = wrap(&raw);
    let averaged = flowpool::rankpool::extract_features(&raw, FeatureMode::TimeAveraged).unwrap();
    assert_ne!(feats, averaged);
    let d = approx_rank_pool(&averaged).unwrap();
    assert!(d.as_slice()[0] > 0.0 && d.as_slice()[1] == 0.0);
}

proptest! {
    #[test]
    fn pooling_is_linear(
        a in proptest::collection::vec(-3.0f64..3.0, 5),
        b in proptest::collection::vec(-3.0f64..3.0, 5),
        k in -4.0f64..4.0,
    ) {
        let fa: Vec<Vec<f64>> = a.iter().map(|&v| vec![v]).collect();
        let fb: Vec<Vec<f64>> = b.iter().map(|&v| vec![v]).collect();
        let mix: Vec<Vec<f64>> = a.iter().zip(&b).map(|(x, y)| vec![k * x + y]).collect();
        let pa = approx_rank_pool(&wrap(&fa)).unwrap().as_slice()[0];
        let pb = approx_rank_pool(&wrap(&fb)).unwrap().as_slice()[0];
        let pm = approx_rank_pool(&wrap(&mix)).unwrap().as_slice()[0];
        prop_assert!((pm - (k * pa + pb)).abs() <= 1e-9);
    }
}
