//! Binary classification over dynamic images: a single fully connected layer
//! with a logistic output, confusion-count metrics, a deterministic
//! train/test split and a per-stage timing harness.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dynflow::{flow_stack, pool_clip_flow, PipelineConfig};
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::rankpool::DynamicImage;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub features: Vec<f64>,
    /// Fall = 1.
    pub label: u8,
}

impl LabeledExample {
    /// Display-normalized, flattened dynamic image.
    pub fn from_dynamic_image(img: &DynamicImage, label: u8) -> Self {
        Self {
            features: img.display(),
            label,
        }
    }
}

/// One fully connected layer with a logistic link.
#[derive(Debug, Clone, PartialEq)]
pub struct FcClassifier {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub trained: bool,
}

impl FcClassifier {
    pub fn zeros(len: usize) -> Self {
        Self {
            weights: vec![0.0; len],
            bias: 0.0,
            trained: false,
        }
    }

    pub fn feature_len(&self) -> usize {
        self.weights.len()
    }

    fn logit(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }
}

pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `logistic(<w, x> + b)`.
pub fn predict(clf: &FcClassifier, features: &[f64]) -> Result<f64> {
    if features.len() != clf.feature_len() {
        return Err(Error::input(format!(
            "classifier expects {} features, got {}",
            clf.feature_len(),
            features.len()
        )));
    }
    Ok(logistic(clf.logit(features)))
}

/// Numerically stable `-log p(label | z)`.
fn cross_entropy(z: f64, label: u8) -> f64 {
    // log(1 + e^z) - y z
    let softplus = if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    };
    softplus - f64::from(label) * z
}

/// Mean cross-entropy over the dataset.
pub fn training_loss(clf: &FcClassifier, data: &[LabeledExample]) -> f64 {
    data.iter()
        .map(|ex| cross_entropy(clf.logit(&ex.features), ex.label))
        .sum::<f64>()
        / data.len() as f64
}

fn check_dataset(data: &[LabeledExample]) -> Result<usize> {
    if data.len() < 2 {
        return Err(Error::input("training needs at least 2 examples"));
    }
    let len = data[0].features.len();
    if data.iter().any(|ex| ex.features.len() != len) {
        return Err(Error::input("examples differ in feature length"));
    }
    if data
        .iter()
        .any(|ex| ex.label > 1 || ex.features.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::input("labels must be 0/1 and features finite"));
    }
    let positives = data.iter().filter(|ex| ex.label == 1).count();
    if positives == 0 || positives == data.len() {
        return Err(Error::input("training data must contain both classes"));
    }
    Ok(len)
}

/// Halvings tried before an epoch is abandoned.
const MAX_BACKTRACKS: usize = 30;

/// Full-batch gradient descent on mean cross-entropy from zero weights.
///
/// Each epoch starts from step `rate` and halves it until the loss does not
/// increase, so the loss sequence is non-increasing.
pub fn train(data: &[LabeledExample], epochs: usize, rate: f64) -> Result<FcClassifier> {
    let len = check_dataset(data)?;
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::input(format!(
            "learning rate must be positive, got {rate}"
        )));
    }
    let n = data.len() as f64;
    let mut clf = FcClassifier::zeros(len);
    let mut loss = training_loss(&clf, data);
    let mut grad_w = vec![0.0; len];

    for _ in 0..epochs {
        grad_w.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_b = 0.0;
        for ex in data {
            let err = (logistic(clf.logit(&ex.features)) - f64::from(ex.label)) / n;
            grad_b += err;
            grad_w
                .iter_mut()
                .zip(&ex.features)
                .for_each(|(g, x)| *g += err * x);
        }

        let mut step = rate;
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACKS {
            let candidate = FcClassifier {
                weights: clf
                    .weights
                    .iter()
                    .zip(&grad_w)
                    .map(|(w, g)| w - step * g)
                    .collect(),
                bias: clf.bias - step * grad_b,
                trained: true,
            };
            let candidate_loss = training_loss(&candidate, data);
            if candidate_loss <= loss {
                clf = candidate;
                loss = candidate_loss;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    clf.trained = true;
    Ok(clf)
}

/// Confusion counts and the derived rates. Rates whose denominator is empty
/// are `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub accuracy: f64,
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
        let total = tp + fp + tn + fn_;
        Self {
            tp,
            fp,
            tn,
            fn_,
            sensitivity: ratio(tp, tp + fn_),
            specificity: ratio(tn, tn + fp),
            accuracy: ratio(tp + tn, total).unwrap_or(0.0),
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Predicts positive when `prob >= threshold`.
pub fn compute_metrics(probs: &[f64], labels: &[u8], threshold: f64) -> Result<Metrics> {
    if probs.len() != labels.len() || probs.is_empty() {
        return Err(Error::input(format!(
            "need equal, non-zero numbers of probabilities and labels, got {} and {}",
            probs.len(),
            labels.len()
        )));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&p, &y) in probs.iter().zip(labels) {
        match (p >= threshold, y == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    Ok(Metrics::from_counts(tp, fp, tn, fn_))
}

/// Deterministic shuffle, then the first `round(n * fraction)` items train.
/// `label` reports each item's class; both classes must land in both parts.
pub fn split<T: Clone>(
    items: &[T],
    label: impl Fn(&T) -> u8,
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::input(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (items.len() as f64 * train_fraction).round() as usize;
    let (a, b) = order.split_at(n_train);
    let pick = |idx: &[usize]| idx.iter().map(|&i| items[i].clone()).collect::<Vec<_>>();
    let (train, test) = (pick(a), pick(b));
    for (name, part) in [("train", &train), ("test", &test)] {
        let pos = part.iter().filter(|x| label(x) == 1).count();
        if pos == 0 || pos == part.len() {
            return Err(Error::input(format!(
                "{name} split is missing a class; try another seed"
            )));
        }
    }
    Ok((train, test))
}

/// Wall-clock totals for one pipeline stage.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageTiming {
    pub total: f64,
    pub mean: f64,
}

impl StageTiming {
    fn from_total(total: Duration, clips: usize) -> Self {
        let total = total.as_secs_f64();
        Self {
            total,
            mean: total / clips as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub clips: usize,
    pub flow: StageTiming,
    pub pooling: StageTiming,
    pub classification: StageTiming,
    /// Wall time of the whole run.
    pub total: f64,
    /// Classifier inputs when each clip is summarized by one dynamic image.
    pub dynamic_inputs: usize,
    /// Classifier inputs when every flow field is fed separately.
    pub stack_inputs: usize,
    pub probabilities: Vec<f64>,
}

impl TimingReport {
    /// Flow-stack inputs per dynamic-image input.
    pub fn input_ratio(&self) -> f64 {
        self.stack_inputs as f64 / self.dynamic_inputs as f64
    }
}

/// Times flow, pooling and classification separately for every clip, all on
/// the calling thread.
pub fn benchmark(
    clips: &[Vec<GrayImage>],
    cfg: &PipelineConfig,
    clf: &FcClassifier,
) -> Result<TimingReport> {
    if clips.is_empty() {
        return Err(Error::input("benchmark needs at least one clip"));
    }
    cfg.validate()?;
    let start = Instant::now();
    let (mut flow_t, mut pool_t, mut class_t) = (Duration::ZERO, Duration::ZERO, Duration::ZERO);
    let (mut dynamic_inputs, mut stack_inputs) = (0, 0);
    let mut probabilities = Vec::with_capacity(clips.len());

    for frames in clips {
        let t0 = Instant::now();
        let stack = flow_stack(frames, &cfg.flow)?;
        let t1 = Instant::now();
        let image = pool_clip_flow(&stack, cfg)?;
        let t2 = Instant::now();
        probabilities.push(predict(clf, &image.display())?);
        let t3 = Instant::now();

        flow_t += t1 - t0;
        pool_t += t2 - t1;
        class_t += t3 - t2;
        dynamic_inputs += 1;
        stack_inputs += stack.len();
    }

    let n = clips.len();
    Ok(TimingReport {
        clips: n,
        flow: StageTiming::from_total(flow_t, n),
        pooling: StageTiming::from_total(pool_t, n),
        classification: StageTiming::from_total(class_t, n),
        total: start.elapsed().as_secs_f64(),
        dynamic_inputs,
        stack_inputs,
        probabilities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn toy_separable() -> Vec<LabeledExample> {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        (0..40)
            .map(|i| {
                let label = (i % 2) as u8;
                let c = if label == 1 { 1.0 } else { -1.0 };
                LabeledExample {
                    features: vec![c + rng.random_range(-0.8..0.8), rng.random_range(-1.0..1.0)],
                    label,
                }
            })
            .collect()
    }

    #[test]
    fn separable_toy_set_is_learned() {
        let data = toy_separable();
        let clf = train(&data, 500, 1.0).unwrap();
        let probs: Vec<f64> = data
            .iter()
            .map(|ex| predict(&clf, &ex.features).unwrap())
            .collect();
        let labels: Vec<u8> = data.iter().map(|ex| ex.label).collect();
        assert_eq!(compute_metrics(&probs, &labels, 0.5).unwrap().accuracy, 1.0);
        assert!(clf.trained);
    }

    #[test]
    fn zero_features_only_move_bias() {
        let data: Vec<_> = [1, 1, 1, 0]
            .iter()
            .map(|&label| LabeledExample {
                features: vec![0.0; 3],
                label,
            })
            .collect();
        let clf = train(&data, 2000, 1.0).unwrap();
        assert_eq!(clf.weights, vec![0.0; 3]);
        // Class log-odds ln(3/1).
        assert!((clf.bias - 3f64.ln()).abs() < 1e-3, "{}", clf.bias);
    }

    #[test]
    fn training_is_deterministic_and_monotone() {
        let data = toy_separable();
        let a = train(&data, 50, 5.0).unwrap();
        let b = train(&data, 50, 5.0).unwrap();
        assert_eq!(a, b);
        let init = training_loss(&FcClassifier::zeros(2), &data);
        let mut prev = init;
        for epochs in 1..20 {
            let l = training_loss(&train(&data, epochs, 5.0).unwrap(), &data);
            assert!(l <= prev);
            prev = l;
        }
    }

    #[test]
    fn train_rejects_bad_data() {
        let one_class = vec![
            LabeledExample {
                features: vec![1.0],
                label: 1,
            },
            LabeledExample {
                features: vec![2.0],
                label: 1,
            },
        ];
        assert!(train(&one_class, 10, 0.1).is_err());
        assert!(train(&one_class[..1], 10, 0.1).is_err());
    }

    #[test]
    fn predict_cases() {
        let clf = FcClassifier::zeros(3);
        assert_eq!(predict(&clf, &[1.0, 2.0, 3.0]).unwrap(), 0.5);
        let big = FcClassifier {
            weights: vec![100.0],
            bias: 0.0,
            trained: true,
        };
        assert!(predict(&big, &[10.0]).unwrap() > 1.0 - 1e-12);
        assert!(predict(&big, &[-10.0]).unwrap() < 1e-12);
        assert!(predict(&big, &[1.0, 2.0]).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let w: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            let b = rng.random_range(-1.0..1.0);
            let z: f64 = w.iter().zip(&x).map(|(a, c)| a * c).sum::<f64>() + b;
            let clf = FcClassifier {
                weights: w,
                bias: b,
                trained: true,
            };
            assert!((predict(&clf, &x).unwrap() - 1.0 / (1.0 + (-z).exp())).abs() < 1e-12);
        }
    }

    #[test]
    fn predict_monotone_in_logit() {
        let mut prev = 0.0;
        for i in -400..=400 {
            let z = i as f64 / 10.0;
            let p = logistic(z);
            assert!(p >= prev && (0.0..=1.0).contains(&p));
            prev = p;
        }
    }

    #[test]
    fn worked_metrics_example() {
        let mut probs = vec![];
        let mut labels = vec![];
        for (p, y, n) in [(0.9, 1, 9), (0.1, 1, 1), (0.1, 0, 8), (0.9, 0, 2)] {
            probs.extend(std::iter::repeat_n(p, n));
            labels.extend(std::iter::repeat_n(y, n));
        }
        let m = compute_metrics(&probs, &labels, 0.5).unwrap();
        assert_eq!((m.tp, m.fn_, m.tn, m.fp), (9, 1, 8, 2));
        assert_eq!(m.sensitivity, Some(0.9));
        assert_eq!(m.specificity, Some(0.8));
        assert_eq!(m.accuracy, 0.85);

        let perfect = compute_metrics(&[1.0, 0.0], &[1, 0], 0.5).unwrap();
        assert_eq!(
            (perfect.sensitivity, perfect.specificity, perfect.accuracy),
            (Some(1.0), Some(1.0), 1.0)
        );
        let no_negatives = compute_metrics(&[0.7], &[1], 0.5).unwrap();
        assert_eq!(no_negatives.specificity, None);
        assert!(compute_metrics(&[0.5], &[1, 0], 0.5).is_err());
    }

    #[test]
    fn split_cases() {
        let items: Vec<u8> = (0..60).map(|i| (i % 2) as u8).collect();
        let (a, b) = split(&items, |x| *x, 0.7, 4).unwrap();
        assert_eq!((a.len(), b.len()), (42, 18));
        let (a2, b2) = split(&items, |x| *x, 0.7, 4).unwrap();
        assert_eq!((a.clone(), b.clone()), (a2, b2));

        let tagged: Vec<(usize, u8)> = (0..60).map(|i| (i, (i % 2) as u8)).collect();
        let (a, b) = split(&tagged, |x| x.1, 0.7, 8).unwrap();
        let mut all: Vec<usize> = a.iter().chain(&b).map(|x| x.0).collect();
        all.sort_unstable();
        assert_eq!(all, (0..60).collect::<Vec<_>>());

        let lopsided: Vec<u8> = vec![1, 0, 0, 0, 0, 0, 0, 0, 0, 0];
        assert!(split(&lopsided, |x| *x, 0.5, 0).is_err());
        assert!(split(&items, |x| *x, 1.0, 0).is_err());
    }
}
