use flowpool::synth::smooth_texture;
use flowpool::tvl1::{compute_flow, compute_flow_observed, flow_energy, FlowParams};
use flowpool::{FlowField, GrayImage};

const SIZE: usize = 64;
const PAD: usize = 8;
const BORDER: usize = 8;

/// A textured frame and a copy displaced by `shift`, so that the true flow
/// from the first to the second is `shift` everywhere.
fn shifted_pair(shift: (f64, f64), seed: u64) -> (GrayImage, GrayImage) {
    let tex = smooth_texture(SIZE + 2 * PAD, SIZE + 2 * PAD, 1.5, seed).unwrap();
    let p = PAD as f64;
    let i0 = GrayImage::from_fn(SIZE, SIZE, |x, y| tex.get(x + PAD, y + PAD)).unwrap();
    let i1 = GrayImage::from_fn(SIZE, SIZE, |x, y| {
        tex.sample(x as f64 + p - shift.0, y as f64 + p - shift.1)
    })
    .unwrap();
    (i0, i1)
}

fn interior_epe(flow: &FlowField, truth: (f64, f64)) -> f64 {
    let mut sum = 0.0;
    let mut n = 0;
    for y in BORDER..SIZE - BORDER {
        for x in BORDER..SIZE - BORDER {
            let (a, b) = flow.get(x, y);
            sum += (a - truth.0).hypot(b - truth.1);
            n += 1;
        }
    }
    sum / n as f64
}

const SHIFTS: [(f64, f64); 4] = [(1.0, 0.0), (0.0, 2.0), (2.0, 2.0), (0.5, 0.0)];

#[test]
fn recovers_translations() {
    let params = FlowParams::default();
    for (k, &shift) in SHIFTS.iter().enumerate() {
        let (i0, i1) = shifted_pair(shift, 100 + k as u64);
        let flow = compute_flow(&i0, &i1, &params).unwrap();
        let epe = interior_epe(&flow, shift);
        assert!(epe <= 0.25, "shift {shift:?}: endpoint error {epe}");

        let zero = FlowField::zeros(SIZE, SIZE).unwrap();
        let e = flow_energy(&i0, &i1, &flow, params.lambda).unwrap();
        let e0 = flow_energy(&i0, &i1, &zero, params.lambda).unwrap();
        assert!(e <= e0, "shift {shift:?}: energy {e} above zero-flow {e0}");
    }
}

#[test]
fn negative_shift_has_negative_flow() {
    let (i0, i1) = shifted_pair((-1.0, 0.0), 7);
    let flow = compute_flow(&i0, &i1, &FlowParams::default()).unwrap();
    assert!(interior_epe(&flow, (-1.0, 0.0)) <= 0.25);
}

#[test]
fn identical_frames_and_dual_feasibility() {
    let tex = smooth_texture(SIZE, SIZE, 1.5, 9).unwrap();
    let mut worst_dual: f64 = 0.0;
    let mut updates = 0;
    let flow = compute_flow_observed(&tex, &tex, &FlowParams::default(), |s| {
        worst_dual = worst_dual.max(s.p.max_magnitude());
        updates += 1;
    })
    .unwrap();
    assert!(flow.max_magnitude() <= 1e-2, "{}", flow.max_magnitude());
    assert!(updates > 0);
    assert!(worst_dual <= 1.0 + 1e-12);

    let (i0, i1) = shifted_pair((2.0, 2.0), 3);
    let mut worst: f64 = 0.0;
    compute_flow_observed(&i0, &i1, &FlowParams::default(), |s| {
        worst = worst.max(s.p.max_magnitude())
    })
    .unwrap();
    assert!(worst <= 1.0 + 1e-12 && worst > 0.0);
}

#[test]
fn global_brightness_offset_is_not_motion() {
    let tex = smooth_texture(SIZE, SIZE, 1.5, 21)
        .unwrap()
        .map(|v| 0.8 * v)
        .unwrap();
    let brighter = tex.map(|v| v + 0.15).unwrap();
    let flow = compute_flow(&tex, &brighter, &FlowParams::default()).unwrap();
    assert!(flow.max_magnitude() <= 1e-2, "{}", flow.max_magnitude());
}

#[test]
fn flow_is_deterministic() {
    let (i0, i1) = shifted_pair((0.5, 0.0), 5);
    let p = FlowParams::default();
    assert_eq!(
        compute_flow(&i0, &i1, &p).unwrap(),
        compute_flow(&i0, &i1, &p).unwrap()
    );
}

#[test]
fn rejects_mismatched_frames() {
    let a = GrayImage::filled(16, 16, 0.5).unwrap();
    let b = GrayImage::filled(16, 12, 0.5).unwrap();
    assert!(compute_flow(&a, &b, &FlowParams::default()).is_err());
    let bad = FlowParams {
        tau: 0.3,
        ..Default::default()
    };
    assert!(compute_flow(&a, &a, &bad).is_err());
}
