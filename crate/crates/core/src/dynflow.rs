//! Enhanced dynamic optical flow: TV-L1 flow between consecutive frames,
//! small vectors suppressed, then the whole flow stack rank-pooled into one
//! two-channel image.

use crate::error::{Error, Result};
use crate::image::{FlowField, GrayImage};
use crate::rankpool::{
    approx_rank_pool, extract_features, hinge_energy, optimize, to_dynamic_image, DynamicImage,
    FeatureMode, RankPoolParams, RankingModel,
};
use crate::tvl1::{compute_flow, data_term, FlowParams};

/// Flow fields between consecutive frames of one clip.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipFlow {
    fields: Vec<FlowField>,
}

impl ClipFlow {
    pub fn new(fields: Vec<FlowField>) -> Result<Self> {
        let first = fields
            .first()
            .ok_or_else(|| Error::input("a clip flow needs at least one field"))?;
        if fields.iter().any(|f| f.dims() != first.dims()) {
            return Err(Error::input("flow fields differ in size"));
        }
        Ok(Self { fields })
    }

    pub fn fields(&self) -> &[FlowField] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.fields[0].dims()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PoolMethod {
    /// Subgradient solve of the full rank-pooling objective.
    Exact,
    /// Closed-form `sum_t (2t - T - 1) psi_t`.
    #[default]
    Approximate,
}

impl std::str::FromStr for PoolMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(PoolMethod::Exact),
            "approx" | "approximate" => Ok(PoolMethod::Approximate),
            other => Err(Error::input(format!("unknown pooling method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub flow: FlowParams,
    pub pool: RankPoolParams,
    /// Flow vectors shorter than this (pixels) are zeroed before pooling.
    pub flow_threshold: f64,
    pub method: PoolMethod,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            flow: FlowParams::default(),
            pool: RankPoolParams::default(),
            flow_threshold: 0.1,
            method: PoolMethod::Approximate,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.flow.validate()?;
        self.pool.validate()?;
        if !(self.flow_threshold.is_finite() && self.flow_threshold >= 0.0) {
            return Err(Error::input(format!(
                "flow_threshold must be finite and non-negative, got {}",
                self.flow_threshold
            )));
        }
        Ok(())
    }
}

/// Flow from each frame to the next, in order.
pub fn flow_stack(frames: &[GrayImage], params: &FlowParams) -> Result<ClipFlow> {
    if frames.len() < 2 {
        return Err(Error::input(format!(
            "a flow stack needs at least 2 frames, got {}",
            frames.len()
        )));
    }
    let fields = frames
        .windows(2)
        .map(|pair| compute_flow(&pair[0], &pair[1], params))
        .collect::<Result<Vec<_>>>()?;
    ClipFlow::new(fields)
}

/// Zeroes every vector whose magnitude is below `t_min`.
pub fn threshold_flow(flow: &FlowField, t_min: f64) -> FlowField {
    let (mut u1, mut u2) = (flow.u1().to_vec(), flow.u2().to_vec());
    for (a, b) in u1.iter_mut().zip(u2.iter_mut()) {
        if a.hypot(*b) < t_min {
            *a = 0.0;
            *b = 0.0;
        }
    }
    let (w, h) = flow.dims();
    FlowField::from_raw(w, h, u1, u2)
}

/// Rank-pools an already computed flow stack.
pub fn pool_clip_flow(clip: &ClipFlow, cfg: &PipelineConfig) -> Result<DynamicImage> {
    if clip.len() < 2 {
        return Err(Error::input("pooling needs at least 2 flow fields"));
    }
    let thresholded: Vec<FlowField> = clip
        .fields()
        .iter()
        .map(|f| threshold_flow(f, cfg.flow_threshold))
        .collect();
    let features = extract_features(&thresholded, cfg.pool.feature_mode)?;
    let d = match cfg.method {
        PoolMethod::Approximate => approx_rank_pool(&features)?,
        PoolMethod::Exact => optimize(&features, &cfg.pool)?,
    };
    let (w, h) = clip.dims();
    to_dynamic_image(&d, w, h, 2)
}

/// The full pipeline: one two-channel dynamic image (u1 plane, u2 plane)
/// per clip of at least 3 frames.
pub fn dynamic_optical_flow(frames: &[GrayImage], cfg: &PipelineConfig) -> Result<DynamicImage> {
    cfg.validate()?;
    if frames.len() < 3 {
        return Err(Error::input(format!(
            "dynamic optical flow needs at least 3 frames, got {}",
            frames.len()
        )));
    }
    let clip = flow_stack(frames, &cfg.flow)?;
    pool_clip_flow(&clip, cfg)
}

/// Diagnostic combining the flow data terms of every consecutive pair with
/// the ranking hinge energy of `d` on the (raw) flow features.
pub fn enhanced_energy(
    frames: &[GrayImage],
    clip: &ClipFlow,
    d: &RankingModel,
    lambda: f64,
) -> Result<f64> {
    if frames.len() != clip.len() + 1 {
        return Err(Error::input(format!(
            "{} frames cannot pair with {} flow fields",
            frames.len(),
            clip.len()
        )));
    }
    let data = frames
        .windows(2)
        .zip(clip.fields())
        .map(|(pair, flow)| data_term(&pair[0], &pair[1], flow, lambda))
        .sum::<Result<f64>>()?;
    let features = extract_features(clip.fields(), FeatureMode::Raw)?;
    Ok(data + hinge_energy(&features, d)?)
}
