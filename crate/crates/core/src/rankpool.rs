//! Rank pooling: learn a linear scoring function whose scores order a
//! sequence's frames in time, and use its parameters as a single summary of
//! the sequence (a dynamic image).
//!
//! The regularized objective is
//!
//! ```text
//! E(d) = lambda/2 |d|^2 + 2/(T(T-1)) * sum_{q>t} max(0, 1 - S(q|d) + S(t|d))
//! ```
//!
//! with `S(t|d) = <d, psi_t>`. [`optimize`] minimizes it directly;
//! [`approx_rank_pool`] takes the single descent step from `d = 0`, where every
//! hinge is active, giving `d = sum_t (2t - T - 1) psi_t`.

use crate::error::{Error, Result};
use crate::image::{min_max, FlowField, GrayImage};

/// Per-frame feature vector `psi_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFeature(Vec<f64>);

impl FrameFeature {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("feature vector contains non-finite entries"));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Ranking parameters `d`; reshaped, this is the dynamic image.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingModel(Vec<f64>);

impl RankingModel {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input(
                "ranking parameters contain non-finite entries",
            ));
        }
        Ok(Self(values))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeatureMode {
    /// `psi_t` is the flattened frame.
    #[default]
    Raw,
    /// `V_t = (1/t) sum_{s<=t} psi_s`.
    TimeAveraged,
}

impl std::str::FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(FeatureMode::Raw),
            "time-averaged" | "time_averaged" => Ok(FeatureMode::TimeAveraged),
            other => Err(Error::input(format!("unknown feature mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankPoolParams {
    /// Weight of the `|d|^2` regularizer.
    pub lambda: f64,
    /// Fixed subgradient step size.
    pub step: f64,
    pub max_epochs: usize,
    /// Stop once the relative energy improvement drops below this.
    pub tol: f64,
    pub feature_mode: FeatureMode,
}

impl Default for RankPoolParams {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            step: 1e-3,
            max_epochs: 200,
            tol: 1e-6,
            feature_mode: FeatureMode::Raw,
        }
    }
}

impl RankPoolParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda", self.lambda),
            ("step", self.step),
            ("tol", self.tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::input(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_epochs == 0 {
            return Err(Error::input("max_epochs must be at least 1"));
        }
        Ok(())
    }
}

/// Something that flattens into a per-frame feature vector.
pub trait FeatureSource {
    fn dims(&self) -> (usize, usize);
    fn channels(&self) -> usize;
    /// Channel-major flattening.
    fn flatten(&self) -> Vec<f64>;
}

impl FeatureSource for GrayImage {
    fn dims(&self) -> (usize, usize) {
        GrayImage::dims(self)
    }

    fn channels(&self) -> usize {
        1
    }

    fn flatten(&self) -> Vec<f64> {
        self.as_slice().to_vec()
    }
}

impl FeatureSource for FlowField {
    fn dims(&self) -> (usize, usize) {
        FlowField::dims(self)
    }

    fn channels(&self) -> usize {
        2
    }

    fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.u1().len());
        out.extend_from_slice(self.u1());
        out.extend_from_slice(self.u2());
        out
    }
}

impl FeatureSource for Vec<f64> {
    fn dims(&self) -> (usize, usize) {
        (self.len(), 1)
    }

    fn channels(&self) -> usize {
        1
    }

    fn flatten(&self) -> Vec<f64> {
        self.clone()
    }
}

pub fn extract_features<S: FeatureSource>(
    sequence: &[S],
    mode: FeatureMode,
) -> Result<Vec<FrameFeature>> {
    let first = sequence
        .first()
        .ok_or_else(|| Error::input("cannot extract features from an empty sequence"))?;
    if let Some(i) = sequence
        .iter()
        .position(|s| s.dims() != first.dims() || s.channels() != first.channels())
    {
        return Err(Error::input(format!(
            "element {i} differs in size from element 0"
        )));
    }
    let raw = sequence
        .iter()
        .map(|s| FrameFeature::new(s.flatten()))
        .collect::<Result<Vec<_>>>()?;
    Ok(match mode {
        FeatureMode::Raw => raw,
        FeatureMode::TimeAveraged => {
            let mut sum = vec![0.0; first.flatten().len()];
            raw.iter()
                .enumerate()
                .map(|(t, f)| {
                    sum.iter_mut().zip(f.as_slice()).for_each(|(s, v)| *s += v);
                    let k = 1.0 / (t + 1) as f64;
                    FrameFeature(sum.iter().map(|s| s * k).collect())
                })
                .collect()
        }
    })
}

fn check_lengths(d: &RankingModel, features: &[FrameFeature]) -> Result<()> {
    if let Some(t) = features.iter().position(|f| f.len() != d.len()) {
        return Err(Error::input(format!(
            "feature {t} has length {}, ranking model has {}",
            features[t].len(),
            d.len()
        )));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `S(t|d) = <d, psi_t>` for every frame.
pub fn ranking_scores(d: &RankingModel, features: &[FrameFeature]) -> Result<Vec<f64>> {
    check_lengths(d, features)?;
    Ok(features.iter().map(|f| dot(&d.0, &f.0)).collect())
}

fn require_pairs(features: &[FrameFeature]) -> Result<()> {
    if features.len() < 2 {
        return Err(Error::input(format!(
            "rank pooling needs at least 2 frames, got {}",
            features.len()
        )));
    }
    Ok(())
}

fn hinge_sum(scores: &[f64]) -> f64 {
    let mut total = 0.0;
    for t in 0..scores.len() {
        for q in t + 1..scores.len() {
            total += (1.0 - scores[q] + scores[t]).max(0.0);
        }
    }
    total
}

/// `sum_{q>t} max(0, 1 - S(q|d) + S(t|d))`.
pub fn hinge_energy(features: &[FrameFeature], d: &RankingModel) -> Result<f64> {
    require_pairs(features)?;
    Ok(hinge_sum(&ranking_scores(d, features)?))
}

fn pair_weight(t: usize) -> f64 {
    2.0 / (t as f64 * (t as f64 - 1.0))
}

/// `lambda/2 |d|^2 + 2/(T(T-1)) * hinge_energy`.
pub fn full_energy(features: &[FrameFeature], d: &RankingModel, lambda: f64) -> Result<f64> {
    let hinge = hinge_energy(features, d)?;
    let t = features.len() as f64;
    Ok(0.5 * lambda * d.norm_sq() + 2.0 * hinge / (t * (t - 1.0)))
}

/// Full-batch subgradient descent on [`full_energy`] from `d = 0`.
///
/// Returns the lowest-energy iterate seen, so the result never scores worse
/// than `d = 0`.
pub fn optimize(features: &[FrameFeature], params: &RankPoolParams) -> Result<RankingModel> {
    params.validate()?;
    require_pairs(features)?;
    let dim = features[0].len();
    let mut d = RankingModel::zeros(dim);
    check_lengths(&d, features)?;

    let t_len = features.len();
    let weight = pair_weight(t_len);
    let energy = |d: &RankingModel| full_energy(features, d, params.lambda);

    let mut best = d.clone();
    let mut best_energy = energy(&d)?;
    let mut prev_energy = best_energy;
    let mut coeffs = vec![0.0; t_len];

    for _ in 0..params.max_epochs {
        let scores = ranking_scores(&d, features)?;
        coeffs.iter_mut().for_each(|c| *c = 0.0);
        for t in 0..t_len {
            for q in t + 1..t_len {
                if 1.0 - scores[q] + scores[t] > 0.0 {
                    coeffs[t] += 1.0;
                    coeffs[q] -= 1.0;
                }
            }
        }
        let mut grad: Vec<f64> = d.0.iter().map(|v| params.lambda * v).collect();
        for (c, f) in coeffs.iter().zip(features) {
            if *c != 0.0 {
                let c = weight * c;
                grad.iter_mut().zip(&f.0).for_each(|(g, v)| *g += c * v);
            }
        }
        d.0.iter_mut()
            .zip(&grad)
            .for_each(|(x, g)| *x -= params.step * g);

        let e = energy(&d)?;
        if e < best_energy {
            best_energy = e;
            best.0.copy_from_slice(&d.0);
        }
        let improvement = (prev_energy - e) / prev_energy.abs().max(f64::MIN_POSITIVE);
        if improvement < params.tol {
            break;
        }
        prev_energy = e;
    }
    Ok(best)
}

/// Weights `alpha_t = 2t - T - 1` for `t = 1..=T`.
pub fn pooling_coefficients(t_len: usize) -> Vec<f64> {
    (1..=t_len)
        .map(|t| (2 * t) as f64 - t_len as f64 - 1.0)
        .collect()
}

/// Closed-form approximate rank pooling `d = sum_t alpha_t psi_t`, equal to
/// `sum_{q>t} (psi_q - psi_t)`.
///
/// The weights are antisymmetric, so the sum is taken over mirrored
/// differences `psi_{T+1-t} - psi_t`; a constant sequence then pools to
/// exactly zero.
pub fn approx_rank_pool(features: &[FrameFeature]) -> Result<RankingModel> {
    require_pairs(features)?;
    let dim = features[0].len();
    check_lengths(&RankingModel::zeros(dim), features)?;
    let alphas = pooling_coefficients(features.len());
    let n = features.len();
    let mut d = vec![0.0; dim];
    for t in 0..n / 2 {
        let weight = -alphas[t];
        let (early, late) = (&features[t].0, &features[n - 1 - t].0);
        for ((x, a), b) in d.iter_mut().zip(early).zip(late) {
            *x += weight * (b - a);
        }
    }
    Ok(RankingModel(d))
}

/// Pooled parameters reshaped into `channels` planes of `width x height`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicImage {
    width: usize,
    height: usize,
    channels: usize,
    values: Vec<f64>,
}

impl DynamicImage {
    pub fn new(width: usize, height: usize, channels: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::input("dynamic image dimensions must be positive"));
        }
        if values.len() != width * height * channels {
            return Err(Error::input(format!(
                "{} values cannot fill {channels} planes of {width}x{height}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("dynamic image contains non-finite values"));
        }
        Ok(Self {
            width,
            height,
            channels,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Raw values, channel-major.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.width * self.height;
        &self.values[c * n..(c + 1) * n]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Min-max rescale of all values to `[0, 1]`; constant input maps to 0.5.
    pub fn display(&self) -> Vec<f64> {
        let (lo, hi) = min_max(&self.values);
        if hi <= lo {
            return vec![0.5; self.values.len()];
        }
        let k = 1.0 / (hi - lo);
        self.values.iter().map(|v| (v - lo) * k).collect()
    }
}

pub fn to_dynamic_image(
    d: &RankingModel,
    width: usize,
    height: usize,
    channels: usize,
) -> Result<DynamicImage> {
    DynamicImage::new(width, height, channels, d.0.clone())
}
