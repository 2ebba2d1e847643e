//! Flow fields as colour images: hue encodes direction, saturation encodes
//! magnitude relative to the field's largest vector, value is always full.

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::FlowField;

/// 8-bit RGB raster, row-major, three bytes per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }
}

/// Direction of `(u1, u2)` in degrees, `[0, 360)`, measured from +x towards +y.
pub fn flow_angle(u1: f64, u2: f64) -> f64 {
    let deg = u2.atan2(u1).to_degrees();
    if deg < 0.0 {
        deg + 360.0
    } else {
        deg
    }
}

pub fn hsv_to_rgb(hue: f64, sat: f64, val: f64) -> [f64; 3] {
    let h = hue.rem_euclid(360.0) / 60.0;
    let c = val * sat;
    let x = c * (1.0 - ((h % 2.0) - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = val - c;
    [r + m, g + m, b + m]
}

/// Colour-codes a flow field. An all-zero field comes out all white.
pub fn flow_to_rgb(flow: &FlowField) -> RgbImage {
    let (w, h) = flow.dims();
    let max = flow.max_magnitude();
    let mut data = Vec::with_capacity(w * h * 3);
    for (&a, &b) in flow.u1().iter().zip(flow.u2()) {
        let sat = if max > 0.0 { a.hypot(b) / max } else { 0.0 };
        let rgb = hsv_to_rgb(flow_angle(a, b), sat, 1.0);
        data.extend(rgb.map(|c| (c.clamp(0.0, 1.0) * 255.0).round() as u8));
    }
    RgbImage {
        width: w,
        height: h,
        data,
    }
}

/// Binary (P6) portable pixmap.
pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(&img.data);
    out
}

pub fn write_ppm(path: &Path, img: &RgbImage) -> Result<()> {
    std::fs::write(path, encode_ppm(img)).map_err(|e| Error::io(path, e))
}
