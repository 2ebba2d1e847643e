//! Coarse-to-fine TV-L1 optical flow.
//!
//! Minimizes `sum_x lambda |I0(x) - I1(x + u(x))| + |grad u1| + |grad u2|` by
//! linearizing the data term around the current flow at each warp and
//! alternating two sub-problems coupled through `theta`:
//!
//! * a pointwise thresholding step for the auxiliary field `v` ([`solve_v`]);
//! * a TV-denoising step for `u` solved with a projected dual iteration
//!   ([`update_dual`]).
//!
//! Intensities are normalized per pair and scaled to `[0, 255]` before
//! solving, the range the default parameters are tuned for.

use crate::error::{Error, Result};
use crate::image::{
    build_pyramid, gradient, median_filter_flow, preprocess_pair, prolongate, warp, FlowField,
    GrayImage,
};

/// Intensity range the solver works in after pair normalization.
pub const INTENSITY_SCALE: f64 = 255.0;

/// Pixels whose squared warped gradient falls below this keep `v = u`.
pub const GRADIENT_GUARD: f64 = 1e-10;

/// Solver parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams {
    /// Data-term weight.
    pub lambda: f64,
    /// Coupling between `u` and the auxiliary field `v`.
    pub theta: f64,
    /// Dual step; must be in `(0, 0.25]`.
    pub tau: f64,
    /// Inner loop stops once the mean `|delta u|` drops below this.
    pub epsilon: f64,
    pub n_scales: usize,
    pub n_warps: usize,
    pub max_outer: usize,
    pub max_inner: usize,
    pub zoom: f64,
    pub median_radius: usize,
    /// Subtract each frame's mean during pair normalization.
    pub remove_mean: bool,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            lambda: 0.15,
            theta: 0.3,
            tau: 0.25,
            epsilon: 0.01,
            n_scales: 5,
            n_warps: 5,
            max_outer: 10,
            max_inner: 30,
            zoom: 0.5,
            median_radius: 1,
            remove_mean: true,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::input(format!("{name} must be positive, got {v}")))
            }
        };
        positive("lambda", self.lambda)?;
        positive("theta", self.theta)?;
        positive("epsilon", self.epsilon)?;
        if !(self.tau > 0.0 && self.tau <= 0.25) {
            return Err(Error::input(format!(
                "tau must lie in (0, 0.25], got {}",
                self.tau
            )));
        }
        if !(self.zoom > 0.0 && self.zoom < 1.0) {
            return Err(Error::input(format!(
                "zoom must lie in (0, 1), got {}",
                self.zoom
            )));
        }
        for (name, v) in [
            ("n_scales", self.n_scales),
            ("n_warps", self.n_warps),
            ("max_outer", self.max_outer),
            ("max_inner", self.max_inner),
        ] {
            if v == 0 {
                return Err(Error::input(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }
}

/// Dual variables: one 2-vector per pixel for each flow component.
#[derive(Debug, Clone, PartialEq)]
pub struct DualField {
    width: usize,
    height: usize,
    /// `p1 = (p11, p12)` dual to `u1`.
    pub p11: Vec<f64>,
    pub p12: Vec<f64>,
    /// `p2 = (p21, p22)` dual to `u2`.
    pub p21: Vec<f64>,
    pub p22: Vec<f64>,
}

impl DualField {
    pub fn zeros(width: usize, height: usize) -> Self {
        let n = width * height;
        Self {
            width,
            height,
            p11: vec![0.0; n],
            p12: vec![0.0; n],
            p21: vec![0.0; n],
            p22: vec![0.0; n],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Largest per-pixel magnitude over both dual vectors.
    pub fn max_magnitude(&self) -> f64 {
        let p1 = self.p11.iter().zip(&self.p12).map(|(a, b)| a.hypot(*b));
        let p2 = self.p21.iter().zip(&self.p22).map(|(a, b)| a.hypot(*b));
        p1.chain(p2).fold(0.0, f64::max)
    }
}

/// Primal flow, auxiliary field and duals for one pyramid level.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub u: FlowField,
    pub v: FlowField,
    pub p: DualField,
}

/// Data term linearized around the flow `u0` used for the current warp.
#[derive(Debug, Clone)]
pub struct WarpedPair {
    width: usize,
    height: usize,
    i1x: Vec<f64>,
    i1y: Vec<f64>,
    grad_sq: Vec<f64>,
    /// `I1w - I0 - grad I1w . u0`, so that `rho(u) = rho_const + grad I1w . u`.
    rho_const: Vec<f64>,
}

impl WarpedPair {
    /// `i1_warped`, `i1x_warped`, `i1y_warped` are `I1` and its gradients
    /// sampled at `x + u0(x)`.
    pub fn new(
        i0: &GrayImage,
        i1_warped: &GrayImage,
        i1x_warped: &GrayImage,
        i1y_warped: &GrayImage,
        u0: &FlowField,
    ) -> Result<Self> {
        let dims = i0.dims();
        if [
            i1_warped.dims(),
            i1x_warped.dims(),
            i1y_warped.dims(),
            u0.dims(),
        ]
        .iter()
        .any(|d| *d != dims)
        {
            return Err(Error::input("linearized data term inputs differ in size"));
        }
        let n = dims.0 * dims.1;
        let (gx, gy) = (i1x_warped.as_slice(), i1y_warped.as_slice());
        let mut grad_sq = Vec::with_capacity(n);
        let mut rho_const = Vec::with_capacity(n);
        for i in 0..n {
            grad_sq.push(gx[i] * gx[i] + gy[i] * gy[i]);
            rho_const.push(
                i1_warped.as_slice()[i]
                    - i0.as_slice()[i]
                    - gx[i] * u0.u1()[i]
                    - gy[i] * u0.u2()[i],
            );
        }
        Ok(Self {
            width: dims.0,
            height: dims.1,
            i1x: gx.to_vec(),
            i1y: gy.to_vec(),
            grad_sq,
            rho_const,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Linearized residual `rho(u)` at pixel `i`.
    #[inline]
    pub fn residual(&self, i: usize, u1: f64, u2: f64) -> f64 {
        self.rho_const[i] + self.i1x[i] * u1 + self.i1y[i] * u2
    }
}

/// Pointwise minimizer of `|u - v|^2 / (2 theta) + lambda |rho(v)|` over `v`.
pub fn solve_v(data: &WarpedPair, u: &FlowField, lambda: f64, theta: f64) -> Result<FlowField> {
    if data.dims() != u.dims() {
        return Err(Error::input("solve_v: flow and data term differ in size"));
    }
    let lt = lambda * theta;
    let n = data.width * data.height;
    let (mut v1, mut v2) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let (u1, u2) = (u.u1()[i], u.u2()[i]);
        let g = data.grad_sq[i];
        if g < GRADIENT_GUARD {
            v1.push(u1);
            v2.push(u2);
            continue;
        }
        let rho = data.residual(i, u1, u2);
        let (d1, d2) = if rho < -lt * g {
            (lt * data.i1x[i], lt * data.i1y[i])
        } else if rho > lt * g {
            (-lt * data.i1x[i], -lt * data.i1y[i])
        } else {
            (-rho * data.i1x[i] / g, -rho * data.i1y[i] / g)
        };
        v1.push(u1 + d1);
        v2.push(u2 + d2);
    }
    Ok(FlowField::from_raw(data.width, data.height, v1, v2))
}

/// Forward differences; zero on the last column / row.
pub fn forward_gradient(u: &[f64], width: usize, height: usize) -> (Vec<f64>, Vec<f64>) {
    let mut gx = vec![0.0; width * height];
    let mut gy = vec![0.0; width * height];
    forward_gradient_into(u, width, height, &mut gx, &mut gy);
    (gx, gy)
}

fn forward_gradient_into(u: &[f64], width: usize, height: usize, gx: &mut [f64], gy: &mut [f64]) {
    for y in 0..height {
        let row = y * width;
        for x in 0..width {
            let i = row + x;
            gx[i] = if x + 1 < width { u[i + 1] - u[i] } else { 0.0 };
            gy[i] = if y + 1 < height {
                u[i + width] - u[i]
            } else {
                0.0
            };
        }
    }
}

/// Backward-difference divergence, the negative adjoint of [`forward_gradient`]:
/// `<grad u, p> = -<u, div p>`.
pub fn divergence(px: &[f64], py: &[f64], width: usize, height: usize) -> Vec<f64> {
    let mut div = vec![0.0; width * height];
    divergence_into(px, py, width, height, &mut div);
    div
}

fn divergence_into(px: &[f64], py: &[f64], width: usize, height: usize, div: &mut [f64]) {
    for y in 0..height {
        for x in 0..width {
            let i = y * width + x;
            let dx = if width == 1 {
                0.0
            } else if x == 0 {
                px[i]
            } else if x + 1 == width {
                -px[i - 1]
            } else {
                px[i] - px[i - 1]
            };
            let dy = if height == 1 {
                0.0
            } else if y == 0 {
                py[i]
            } else if y + 1 == height {
                -py[i - width]
            } else {
                py[i] - py[i - width]
            };
            div[i] = dx + dy;
        }
    }
}

/// Projected dual step for one component; the denominator keeps `|p| <= 1`.
fn dual_step(px: &mut [f64], py: &mut [f64], gx: &[f64], gy: &[f64], step: f64) {
    for i in 0..px.len() {
        let norm = 1.0 + step * gx[i].hypot(gy[i]);
        px[i] = (px[i] + step * gx[i]) / norm;
        py[i] = (py[i] + step * gy[i]) / norm;
    }
}

/// Outcome of [`update_dual`].
#[derive(Debug, Clone)]
pub struct DualUpdate {
    pub u: FlowField,
    pub p: DualField,
    pub iterations: usize,
}

/// Solves the TV sub-problem `min_u |grad u| + |u - v|^2 / (2 theta)` for both
/// components by iterating `u = v + theta div p` and the projected dual ascent
/// `p <- (p + (tau/theta) grad u) / (1 + (tau/theta) |grad u|)`.
///
/// Stops after `n_inner` iterations or once the mean `|delta u|` (against the
/// previous iterate, starting from `u_prev`) falls below `epsilon`.
pub fn update_dual(
    v: &FlowField,
    u_prev: &FlowField,
    mut p: DualField,
    theta: f64,
    tau: f64,
    n_inner: usize,
    epsilon: f64,
) -> Result<DualUpdate> {
    let (w, h) = v.dims();
    if u_prev.dims() != (w, h) || p.dims() != (w, h) {
        return Err(Error::input("update_dual: fields differ in size"));
    }
    let step = tau / theta;
    let n = w * h;
    let (mut u1, mut u2) = (u_prev.u1().to_vec(), u_prev.u2().to_vec());
    let (mut div1, mut div2) = (vec![0.0; n], vec![0.0; n]);
    let (mut gx, mut gy) = (vec![0.0; n], vec![0.0; n]);
    let mut iterations = 0;
    for _ in 0..n_inner {
        iterations += 1;
        divergence_into(&p.p11, &p.p12, w, h, &mut div1);
        divergence_into(&p.p21, &p.p22, w, h, &mut div2);
        let mut change = 0.0;
        for i in 0..n {
            let a = v.u1()[i] + theta * div1[i];
            let b = v.u2()[i] + theta * div2[i];
            change += (a - u1[i]).hypot(b - u2[i]);
            u1[i] = a;
            u2[i] = b;
        }
        forward_gradient_into(&u1, w, h, &mut gx, &mut gy);
        dual_step(&mut p.p11, &mut p.p12, &gx, &gy, step);
        forward_gradient_into(&u2, w, h, &mut gx, &mut gy);
        dual_step(&mut p.p21, &mut p.p22, &gx, &gy, step);
        if change / (n as f64) < epsilon {
            break;
        }
    }
    Ok(DualUpdate {
        u: FlowField::from_raw(w, h, u1, u2),
        p,
        iterations,
    })
}

fn check_pair(i0: &GrayImage, i1: &GrayImage) -> Result<()> {
    if i0.dims() != i1.dims() {
        return Err(Error::input(format!(
            "frame pair differs in size: {}x{} vs {}x{}",
            i0.width(),
            i0.height(),
            i1.width(),
            i1.height()
        )));
    }
    if i0
        .as_slice()
        .iter()
        .chain(i1.as_slice())
        .any(|v| !v.is_finite())
    {
        return Err(Error::input("frame pair contains non-finite samples"));
    }
    if i0.width() < 2 || i0.height() < 2 {
        return Err(Error::input("frames must be at least 2x2 pixels"));
    }
    Ok(())
}

/// Flow `u` from `i0` to `i1`, i.e. `i0(x) ~ i1(x + u(x))`.
pub fn compute_flow(i0: &GrayImage, i1: &GrayImage, params: &FlowParams) -> Result<FlowField> {
    compute_flow_observed(i0, i1, params, |_| {})
}

/// [`compute_flow`] that reports the solver state after every dual update.
pub fn compute_flow_observed(
    i0: &GrayImage,
    i1: &GrayImage,
    params: &FlowParams,
    mut observe: impl FnMut(&SolverState),
) -> Result<FlowField> {
    params.validate()?;
    check_pair(i0, i1)?;

    let (a, b) = preprocess_pair(i0, i1, params.remove_mean)?;
    let a = a.map(|v| v * INTENSITY_SCALE)?;
    let b = b.map(|v| v * INTENSITY_SCALE)?;
    let pyr0 = build_pyramid(&a, params.n_scales, params.zoom)?;
    let pyr1 = build_pyramid(&b, params.n_scales, params.zoom)?;

    let (cw, ch) = pyr0.coarsest().dims();
    let mut u = FlowField::zeros(cw, ch)?;

    for level in (0..pyr0.len()).rev() {
        let (l0, l1) = (&pyr0.levels[level], &pyr1.levels[level]);
        let (w, h) = l0.dims();
        let (i1x, i1y) = gradient(l1)?;
        let mut p = DualField::zeros(w, h);

        for _ in 0..params.n_warps {
            let data = WarpedPair::new(l0, &warp(l1, &u)?, &warp(&i1x, &u)?, &warp(&i1y, &u)?, &u)?;
            for _ in 0..params.max_outer {
                let v = solve_v(&data, &u, params.lambda, params.theta)?;
                let step = update_dual(
                    &v,
                    &u,
                    p,
                    params.theta,
                    params.tau,
                    params.max_inner,
                    params.epsilon,
                )?;
                let state = SolverState {
                    u: step.u,
                    v,
                    p: step.p,
                };
                observe(&state);
                u = median_filter_flow(&state.u, params.median_radius);
                p = state.p;
            }
        }

        if level > 0 {
            let (fw, fh) = pyr0.levels[level - 1].dims();
            u = prolongate(&u, fw, fh)?;
        }
    }
    Ok(u)
}

/// Discrete TV-L1 energy: `sum_x lambda |I0(x) - I1(x + u(x))|` with bilinear
/// sampling, plus the isotropic forward-difference total variation of both
/// flow components.
///
/// Intensity differences are measured on the solver's 8-bit scale
/// ([`INTENSITY_SCALE`]) so `lambda` carries the same meaning as
/// [`FlowParams::lambda`].
pub fn flow_energy(i0: &GrayImage, i1: &GrayImage, flow: &FlowField, lambda: f64) -> Result<f64> {
    if i0.dims() != i1.dims() || i0.dims() != flow.dims() {
        return Err(Error::input("flow_energy: inputs differ in size"));
    }
    Ok(data_term(i0, i1, flow, lambda)? + total_variation(flow))
}

/// `sum_x lambda |I0(x) - I1(x + u(x))|`, intensities in 8-bit units.
pub fn data_term(i0: &GrayImage, i1: &GrayImage, flow: &FlowField, lambda: f64) -> Result<f64> {
    let warped = warp(i1, flow)?;
    if i0.dims() != warped.dims() {
        return Err(Error::input("data_term: inputs differ in size"));
    }
    Ok(lambda
        * INTENSITY_SCALE
        * i0.as_slice()
            .iter()
            .zip(warped.as_slice())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>())
}

/// `sum_x |grad u1(x)| + |grad u2(x)|` with forward differences.
pub fn total_variation(flow: &FlowField) -> f64 {
    let (w, h) = flow.dims();
    [flow.u1(), flow.u2()]
        .iter()
        .map(|c| {
            let (gx, gy) = forward_gradient(c, w, h);
            gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).sum::<f64>()
        })
        .sum()
}
