//! Blue-to-red rainbow ramp, double threshold filter and PNG export.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::diffuse::ScalarRaster;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Ramp color at `t ∈ [0, 1]`: hue sweeps 240° (blue) to 0° (red) at full
/// saturation and 50% lightness.
pub fn rainbow(t: f64) -> [u8; 3] {
    let hue = 240.0 * (1.0 - t.clamp(0.0, 1.0));
    let h = hue / 60.0;
    let x = 1.0 - ((h % 2.0) - 1.0).abs();
    let (r, g, b) = match h as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        _ => (x, 0.0, 1.0),
    };
    [(r * 255.0_f64).round() as u8, (g * 255.0_f64).round() as u8, (b * 255.0_f64).round() as u8]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorFilter {
    pub t_min: f64,
    pub t_max: f64,
    #[serde(default)]
    pub reversed: bool,
}

impl ColorFilter {
    pub fn new(t_min: f64, t_max: f64) -> Result<Self> {
        if !(t_min <= t_max) {
            return Err(Error::InvalidArgument(format!("t_min {t_min} exceeds t_max {t_max}")));
        }
        Ok(Self { t_min, t_max, reversed: false })
    }

    /// Ramp position of `v`, or `None` when `v` falls below `t_min`.
    pub fn position(&self, v: f64) -> Option<f64> {
        if v < self.t_min {
            return None;
        }
        let t = if v >= self.t_max { 1.0 } else { (v - self.t_min) / (self.t_max - self.t_min) };
        Some(if self.reversed { 1.0 - t } else { t })
    }

    /// RGBA of one value under a global layer opacity in `[0, 1]`.
    pub fn color(&self, v: f64, opacity: f64) -> [u8; 4] {
        match self.position(v) {
            None => [0, 0, 0, 0],
            Some(t) => {
                let [r, g, b] = rainbow(t);
                [r, g, b, (opacity.clamp(0.0, 1.0) * 255.0).round() as u8]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbaImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl RgbaImage {
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 4] {
        let i = 4 * (y as usize * self.width as usize + x as usize);
        self.pixels[i..i + 4].try_into().unwrap()
    }

    /// 8-bit RGBA PNG.
    pub fn write_png<W: Write>(&self, w: W) -> Result<()> {
        let mut enc = png::Encoder::new(w, self.width, self.height);
        enc.set_color(png::ColorType::Rgba);
        enc.set_depth(png::BitDepth::Eight);
        let to_err = |e: png::EncodingError| Error::data("png", e.to_string());
        let mut writer = enc.write_header().map_err(to_err)?;
        writer.write_image_data(&self.pixels).map_err(to_err)?;
        writer.finish().map_err(to_err)
    }
}

pub fn apply_color_filter<T: Scalar>(raster: &ScalarRaster<T>, filter: &ColorFilter, opacity: f64) -> RgbaImage {
    let pixels = raster.values.iter().flat_map(|v| filter.color(v.as_f64(), opacity)).collect();
    RgbaImage { width: raster.width, height: raster.height, pixels }
}
