use flowpool::dynflow::{
    dynamic_optical_flow, flow_stack, pool_clip_flow, PipelineConfig, PoolMethod,
};
use flowpool::synth::{
    apply_lighting, generate_clip, generate_dataset, smooth_texture, ClipKind, ClipSpec,
    LightingRamp,
};
use flowpool::GrayImage;

fn static_clip(frames: usize, seed: u64) -> Vec<GrayImage> {
    let tex = smooth_texture(64, 64, 1.5, seed)
        .unwrap()
        .map(|v| 0.1 + 0.5 * v)
        .unwrap();
    vec![tex; frames]
}

#[test]
fn static_clip_under_lighting_ramp_stays_quiet() {
    let t = 40;
    let frames = apply_lighting(&static_clip(t, 4), &LightingRamp::default()).unwrap();
    let img = dynamic_optical_flow(&frames, &PipelineConfig::default()).unwrap();
    assert_eq!((img.width(), img.height(), img.channels()), (64, 64, 2));
    assert!(
        img.max_abs() <= 1e-2 * t as f64,
        "max |value| {}",
        img.max_abs()
    );
}

#[test]
fn accelerating_texture_pools_to_its_direction() {
    let tex = smooth_texture(96, 96, 1.5, 12).unwrap();
    let mut offset = 0.0;
    let frames: Vec<GrayImage> = (0..6)
        .map(|k| {
            offset += 0.25 * k as f64;
            GrayImage::from_fn(64, 64, |x, y| {
                tex.sample(x as f64 + 16.0 - offset, y as f64 + 16.0)
            })
            .unwrap()
        })
        .collect();
    let img = dynamic_optical_flow(&frames, &PipelineConfig::default()).unwrap();
    let interior = |c: usize| {
        let plane = img.channel(c);
        let mut s = 0.0;
        for y in 8..56 {
            for x in 8..56 {
                s += plane[y * 64 + x];
            }
        }
        s / (48.0 * 48.0)
    };
    // Steps 0, .25, .5, .75, 1.0 (the first is thresholded away) pool to
    // sum_t (2t - T - 1) * step_t = 5.0 along x.
    assert!((interior(0) - 5.0).abs() < 0.5, "u1 {}", interior(0));
    assert!(interior(1).abs() < 0.2, "u2 {}", interior(1));
}

#[test]
fn exact_and_approximate_pooling_agree_in_sign() {
    let spec = ClipSpec {
        width: 32,
        height: 40,
        frames: 10,
        kind: ClipKind::Fall,
        noise_sigma: 0.0,
        seed: 2,
        ..Default::default()
    };
    let clip = generate_clip(&ClipSpec {
        actor: flowpool::synth::Actor {
            height: 12,
            ..spec.actor
        },
        ..spec
    })
    .unwrap();
    let cfg = PipelineConfig::default();
    let stack = flow_stack(&clip.frames, &cfg.flow).unwrap();
    let approx = pool_clip_flow(&stack, &cfg).unwrap();
    let exact = pool_clip_flow(
        &stack,
        &PipelineConfig {
            method: PoolMethod::Exact,
            ..cfg
        },
    )
    .unwrap();
    let sum = |v: &[f64]| v.iter().sum::<f64>();
    assert!(sum(approx.channel(1)) > 0.0);
    assert!(sum(exact.channel(1)) > 0.0);
}

#[test]
fn lighting_alters_only_the_ramp_window() {
    let clip = generate_clip(&ClipSpec {
        noise_sigma: 0.0,
        kind: ClipKind::Sit,
        ..Default::default()
    })
    .unwrap();
    let ramp = LightingRamp::default();
    let lit = apply_lighting(&clip.frames, &ramp).unwrap();
    let mut previous = 0.0;
    for (i, (a, b)) in clip.frames.iter().zip(&lit).enumerate() {
        assert!(b.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
        // Frames are dark enough that nothing clips; the change is one offset.
        let diffs: Vec<f64> = a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| y - x)
            .collect();
        let d = diffs[0];
        assert!(diffs.iter().all(|v| (v - d).abs() < 1e-12));
        if i < 32 {
            assert!(d > previous, "frame {i}");
            previous = d;
        } else {
            assert_eq!(a, b, "frame {i}");
        }
    }
    assert!((previous - 0.32).abs() < 1e-12);
}

#[test]
fn datasets_are_reproducible() {
    let spec = ClipSpec {
        frames: 6,
        ..Default::default()
    };
    let a = generate_dataset(2, 3, &spec, Some(&LightingRamp::default()), 8).unwrap();
    let b = generate_dataset(2, 3, &spec, Some(&LightingRamp::default()), 8).unwrap();
    let c = generate_dataset(2, 3, &spec, Some(&LightingRamp::default()), 9).unwrap();
    assert_eq!(a.len(), 5);
    assert!(a
        .iter()
        .zip(&b)
        .all(|(x, y)| x.frames == y.frames && x.truth == y.truth));
    assert!(a.iter().zip(&c).any(|(x, y)| x.frames != y.frames));
    let labels: Vec<u8> = a.iter().map(|c| c.truth.label).collect();
    assert_eq!(labels, [1, 1, 0, 0, 0]);
}
