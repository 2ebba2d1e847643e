//! Deterministic synthetic clips with known motion: a textured rectangular
//! actor over a static textured background, moving with a fall or an
//! everyday-activity profile, plus a progressive global lighting ramp.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::image::{gaussian_blur, GrayImage};

/// Intensity band of the static background.
const BACKGROUND_RANGE: (f64, f64) = (0.10, 0.35);
/// Intensity band of the actor; kept below 0.68 so a +0.32 ramp stays unclipped.
const ACTOR_RANGE: (f64, f64) = (0.40, 0.65);
/// Smoothing applied to white noise to make a trackable texture.
const TEXTURE_SIGMA: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClipKind {
    Fall,
    Walk,
    Sit,
    Lie,
}

impl ClipKind {
    pub const ADL: [ClipKind; 3] = [ClipKind::Walk, ClipKind::Sit, ClipKind::Lie];

    /// Binary label, fall = 1.
    pub fn label(self) -> u8 {
        u8::from(self == ClipKind::Fall)
    }

    pub fn name(self) -> &'static str {
        match self {
            ClipKind::Fall => "fall",
            ClipKind::Walk => "walk",
            ClipKind::Sit => "sit",
            ClipKind::Lie => "lie",
        }
    }
}

impl std::str::FromStr for ClipKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fall" => Ok(ClipKind::Fall),
            "walk" => Ok(ClipKind::Walk),
            "sit" => Ok(ClipKind::Sit),
            "lie" => Ok(ClipKind::Lie),
            other => Err(Error::input(format!("unknown clip kind '{other}'"))),
        }
    }
}

/// Actor rectangle at frame 0 (top-left corner) and its texture seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Actor {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
    pub texture_seed: u64,
}

impl Default for Actor {
    fn default() -> Self {
        Self {
            x: 8,
            y: 6,
            width: 10,
            height: 24,
            texture_seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipSpec {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub kind: ClipKind,
    pub actor: Actor,
    /// Standard deviation of additive Gaussian pixel noise.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for ClipSpec {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            frames: 40,
            kind: ClipKind::Walk,
            actor: Actor::default(),
            noise_sigma: 0.01,
            seed: 0,
        }
    }
}

impl ClipSpec {
    pub fn validate(&self) -> Result<()> {
        if self.frames < 3 {
            return Err(Error::input(format!(
                "a clip needs at least 3 frames, got {}",
                self.frames
            )));
        }
        let a = &self.actor;
        if a.width == 0 || a.height == 0 {
            return Err(Error::input("actor must have positive size"));
        }
        if a.x + a.width > self.width || a.y + a.height > self.height {
            return Err(Error::input(format!(
                "actor {}x{} at ({}, {}) does not fit a {}x{} frame",
                a.width, a.height, a.x, a.y, self.width, self.height
            )));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::input("noise_sigma must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Progressive global brightness change over a window of frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightingRamp {
    /// Total intensity change reached at the end of the window.
    pub delta: f64,
    pub ramp_len: usize,
    pub start: usize,
}

impl Default for LightingRamp {
    fn default() -> Self {
        Self {
            delta: 0.32,
            ramp_len: 32,
            start: 0,
        }
    }
}

impl LightingRamp {
    pub fn validate(&self) -> Result<()> {
        if !(-0.5..=0.5).contains(&self.delta) {
            return Err(Error::input(format!(
                "ramp delta must lie in [-0.5, 0.5], got {}",
                self.delta
            )));
        }
        if self.ramp_len == 0 {
            return Err(Error::input("ramp_len must be at least 1"));
        }
        Ok(())
    }

    /// Offset added to frame `i`, zero outside the window.
    pub fn offset(&self, i: usize) -> f64 {
        if i >= self.start && i < self.start + self.ramp_len {
            self.delta * (i - self.start + 1) as f64 / self.ramp_len as f64
        } else {
            0.0
        }
    }
}

/// Oracle data for a generated clip.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub kind: ClipKind,
    /// Fall = 1.
    pub label: u8,
    /// Actor displacement from frame t to t + 1, `(dx, dy)` in pixels.
    pub displacements: Vec<[f64; 2]>,
    /// Actor top-left corner in every frame.
    pub positions: Vec<(usize, usize)>,
    pub actor_size: (usize, usize),
}

#[derive(Debug, Clone)]
pub struct Clip {
    pub frames: Vec<GrayImage>,
    pub truth: GroundTruth,
}

/// Blurred white noise rescaled to span `[0, 1]`.
pub fn smooth_texture(width: usize, height: usize, sigma: f64, seed: u64) -> Result<GrayImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = GrayImage::from_fn(width, height, |_, _| rng.random::<f64>())?;
    let blurred = gaussian_blur(&noise, sigma);
    let (lo, hi) = blurred.min_max();
    if hi <= lo {
        return Ok(blurred);
    }
    blurred.map(|v| (v - lo) / (hi - lo))
}

/// Frame index where vertical motion starts, in `[T/3, T/2]`.
fn motion_onset(frames: usize, rng: &mut ChaCha8Rng) -> usize {
    rng.random_range(frames / 3..=frames / 2)
}

/// Unclamped actor offset `(dx, dy)` relative to frame 0 for every frame.
/// Walkers head toward the side of the frame with more room.
fn motion_profile(spec: &ClipSpec, rng: &mut ChaCha8Rng) -> Vec<(i64, i64)> {
    let (kind, frames) = (spec.kind, spec.frames);
    let onset = motion_onset(frames, rng);
    match kind {
        ClipKind::Walk => {
            let slack = spec.width - spec.actor.width;
            let dir = if spec.actor.x <= slack / 2 { 1 } else { -1 };
            (0..frames as i64).map(|t| (dir * t, 0)).collect()
        }
        ClipKind::Fall => {
            // Vertical speed grows by 1 px/frame each frame after onset
            // until the frame boundary stops the actor.
            let mut dy = 0;
            (0..frames)
                .map(|t| {
                    if t > onset {
                        dy += (t - onset) as i64;
                    }
                    (0, dy)
                })
                .collect()
        }
        ClipKind::Sit | ClipKind::Lie => {
            // One pixel down every other frame, then rest.
            let travel = if kind == ClipKind::Sit { 6 } else { 12 };
            (0..frames)
                .map(|t| {
                    let steps = if t > onset {
                        ((t - onset) as i64 + 1) / 2
                    } else {
                        0
                    };
                    (0, steps.min(travel))
                })
                .collect()
        }
    }
}

/// Renders a clip and its ground truth. Motion that would carry the actor
/// outside the frame is clamped at the boundary.
pub fn generate_clip(spec: &ClipSpec) -> Result<Clip> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let actor = spec.actor;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let background = smooth_texture(w, h, TEXTURE_SIGMA, rng.random())?;
    let skin = smooth_texture(actor.width, actor.height, TEXTURE_SIGMA, actor.texture_seed)?;
    let scale = |v: f64, (lo, hi): (f64, f64)| lo + (hi - lo) * v;

    let max_x = (w - actor.width) as i64;
    let max_y = (h - actor.height) as i64;
    let positions: Vec<(usize, usize)> = motion_profile(spec, &mut rng)
        .into_iter()
        .map(|(dx, dy)| {
            (
                (actor.x as i64 + dx).clamp(0, max_x) as usize,
                (actor.y as i64 + dy).clamp(0, max_y) as usize,
            )
        })
        .collect();

    let noise = Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::input(e.to_string()))?;
    let mut frames = Vec::with_capacity(spec.frames);
    for &(ax, ay) in &positions {
        let frame = GrayImage::from_fn(w, h, |x, y| {
            let inside = x >= ax && x < ax + actor.width && y >= ay && y < ay + actor.height;
            let v = if inside {
                scale(skin.get(x - ax, y - ay), ACTOR_RANGE)
            } else {
                scale(background.get(x, y), BACKGROUND_RANGE)
            };
            if spec.noise_sigma > 0.0 {
                (v + noise.sample(&mut rng)).clamp(0.0, 1.0)
            } else {
                v
            }
        })?;
        frames.push(frame);
    }

    let displacements = positions
        .windows(2)
        .map(|p| [p[1].0 as f64 - p[0].0 as f64, p[1].1 as f64 - p[0].1 as f64])
        .collect();
    Ok(Clip {
        frames,
        truth: GroundTruth {
            kind: spec.kind,
            label: spec.kind.label(),
            displacements,
            positions,
            actor_size: (actor.width, actor.height),
        },
    })
}

/// Adds the ramp offset to every pixel of the frames inside its window,
/// clamping to `[0, 1]`. Frames outside the window are returned unchanged.
pub fn apply_lighting(frames: &[GrayImage], ramp: &LightingRamp) -> Result<Vec<GrayImage>> {
    ramp.validate()?;
    frames
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let offset = ramp.offset(i);
            if offset == 0.0 {
                Ok(f.clone())
            } else {
                f.map(|v| (v + offset).clamp(0.0, 1.0))
            }
        })
        .collect()
}

/// `n_fall` fall clips followed by `n_adl` clips cycling walk, sit, lie.
///
/// Each clip gets its own seed, actor texture and horizontal placement drawn
/// from `seed`; `base` supplies everything else.
pub fn generate_dataset(
    n_fall: usize,
    n_adl: usize,
    base: &ClipSpec,
    ramp: Option<&LightingRamp>,
    seed: u64,
) -> Result<Vec<Clip>> {
    base.validate()?;
    if let Some(r) = ramp {
        r.validate()?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kinds = std::iter::repeat_n(ClipKind::Fall, n_fall)
        .chain((0..n_adl).map(|i| ClipKind::ADL[i % ClipKind::ADL.len()]));
    kinds
        .map(|kind| {
            let clip_seed: u64 = rng.random();
            let texture_seed: u64 = rng.random();
            let slack = base.width - base.actor.width;
            let x = if kind == ClipKind::Walk {
                // Start near an edge so the walk has room to run.
                let margin = rng.random_range(0..=slack / 8);
                if rng.random_bool(0.5) {
                    margin
                } else {
                    slack - margin
                }
            } else {
                let centre = slack / 2;
                rng.random_range(centre - slack / 8..=centre + slack / 8)
            };
            let spec = ClipSpec {
                kind,
                seed: clip_seed,
                actor: Actor {
                    x,
                    texture_seed,
                    ..base.actor
                },
                ..*base
            };
            let mut clip = generate_clip(&spec)?;
            if let Some(r) = ramp {
                clip.frames = apply_lighting(&clip.frames, r)?;
            }
            Ok(clip)
        })
        .collect()
}
