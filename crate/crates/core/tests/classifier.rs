use flowpool::eval::{
    compute_metrics, predict, split, train, training_loss, FcClassifier, LabeledExample, Metrics,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Counts the confusion matrix one case at a time.
fn brute_force(probs: &[f64], labels: &[u8], threshold: f64) -> (usize, usize, usize, usize) {
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for i in 0..probs.len() {
        let predicted_fall = probs[i] >= threshold;
        let is_fall = labels[i] == 1;
        if predicted_fall && is_fall {
            tp += 1;
        } else if predicted_fall {
            fp += 1;
        } else if is_fall {
            fn_ += 1;
        } else {
            tn += 1;
        }
    }
    (tp, fp, tn, fn_)
}

fn check(probs: &[f64], labels: &[u8], threshold: f64) {
    let m = compute_metrics(probs, labels, threshold).unwrap();
    let (tp, fp, tn, fn_) = brute_force(probs, labels, threshold);
    assert_eq!((m.tp, m.fp, m.tn, m.fn_), (tp, fp, tn, fn_));
    let ratio = |a: usize, b: usize| (a + b > 0).then(|| a as f64 / (a + b) as f64);
    assert_eq!(m.sensitivity, ratio(tp, fn_));
    assert_eq!(m.specificity, ratio(tn, fp));
    assert_eq!(m.accuracy, (tp + tn) as f64 / probs.len() as f64);
    for r in [m.sensitivity, m.specificity, Some(m.accuracy)]
        .into_iter()
        .flatten()
    {
        assert!((0.0..=1.0).contains(&r));
    }
}

#[test]
fn metrics_match_exhaustive_enumeration() {
    // Every (prediction, label) assignment for lengths 1..=10, with
    // probabilities straddling the threshold.
    for n in 1..=10usize {
        for code in 0u32..(1 << (2 * n)) {
            let probs: Vec<f64> = (0..n)
                .map(|i| if code >> i & 1 == 1 { 0.75 } else { 0.25 })
                .collect();
            let labels: Vec<u8> = (0..n).map(|i| (code >> (n + i) & 1) as u8).collect();
            check(&probs, &labels, 0.5);
        }
    }
}

#[test]
fn metrics_match_random_trials() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..1000 {
        let n = rng.random_range(1..=40);
        let probs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..=1)).collect();
        let threshold = if rng.random_bool(0.2) {
            probs[0]
        } else {
            rng.random()
        };
        check(&probs, &labels, threshold);
    }
}

#[test]
fn worked_example() {
    let m = Metrics::from_counts(9, 2, 8, 1);
    assert_eq!(m.sensitivity, Some(0.9));
    assert_eq!(m.specificity, Some(0.8));
    assert_eq!(m.accuracy, 0.85);
}

fn blobs(seed: u64, n: usize) -> Vec<LabeledExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let label = (i % 2) as u8;
            let shift = if label == 1 { 0.6 } else { 0.4 };
            LabeledExample {
                features: (0..8)
                    .map(|_| shift + rng.random_range(-0.15..0.15))
                    .collect(),
                label,
            }
        })
        .collect()
}

#[test]
fn training_reduces_loss_and_separates() {
    let data = blobs(1, 60);
    let clf = train(&data, 300, 1.0).unwrap();
    assert!(training_loss(&clf, &data) <= training_loss(&FcClassifier::zeros(8), &data));
    let again = train(&data, 300, 1.0).unwrap();
    assert_eq!(clf, again);

    let test = blobs(2, 40);
    let probs: Vec<f64> = test
        .iter()
        .map(|e| predict(&clf, &e.features).unwrap())
        .collect();
    let labels: Vec<u8> = test.iter().map(|e| e.label).collect();
    assert!(compute_metrics(&probs, &labels, 0.5).unwrap().accuracy >= 0.9);
}

#[test]
fn prediction_is_monotone_in_the_logit() {
    let clf = FcClassifier {
        weights: vec![1.0, -2.0],
        bias: 0.1,
        trained: true,
    };
    let mut last = 0.0;
    for k in -50..=50 {
        let p = predict(&clf, &[k as f64 * 0.3, 0.0]).unwrap();
        assert!(p >= last);
        last = p;
    }
    assert!(predict(&clf, &[1.0]).is_err());
}

#[test]
fn split_partitions_and_repeats() {
    let items: Vec<(usize, u8)> = (0..60).map(|i| (i, (i < 30) as u8)).collect();
    let (a, b) = split(&items, |x| x.1, 0.7, 42).unwrap();
    assert_eq!((a.len(), b.len()), (42, 18));
    let mut all: Vec<usize> = a.iter().chain(&b).map(|x| x.0).collect();
    all.sort();
    assert_eq!(all, (0..60).collect::<Vec<_>>());
    assert_eq!(split(&items, |x| x.1, 0.7, 42).unwrap(), (a, b));
    let single: Vec<(usize, u8)> = (0..10).map(|i| (i, 0)).collect();
    assert!(split(&single, |x| x.1, 0.7, 1).is_err());
}
