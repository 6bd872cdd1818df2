//! Radial point diffusion of cell means into a scalar raster.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::viewport::Viewport;
use crate::field::GridMetricField;
use crate::geo::Lattice;
use crate::scalar::Scalar;

/// Default diffusion reach in grid radii.
pub const DEFAULT_RADIUS_GRID_RADII: f64 = 3.0;

const BAND_ROWS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionParams {
    /// Kernel reach in screen pixels at zoom 1.
    pub radius_px: f64,
    /// Keep the ground radius constant when zooming.
    pub adaptive: bool,
}

impl DiffusionParams {
    /// Three grid radii, converted to pixels of `viewport`.
    pub fn default_for(lattice: &Lattice, viewport: &Viewport) -> Self {
        let radius_m = DEFAULT_RADIUS_GRID_RADII * lattice.grid_radius_m();
        Self { radius_px: radius_m * viewport.pixels_per_meter(lattice.frame), adaptive: true }
    }

    pub fn effective_radius_px(&self, zoom: f64) -> f64 {
        adapt_radius(self.radius_px, zoom, self.adaptive)
    }
}

/// Radius in pixels after zooming the map by `zoom_delta`. An adaptive
/// radius keeps its ground extent, so its pixel size scales with the zoom.
pub fn adapt_radius<T: Scalar>(base_radius_px: T, zoom_delta: T, adaptive: bool) -> T {
    if adaptive {
        base_radius_px * zoom_delta
    } else {
        base_radius_px
    }
}

/// Linear cone: `value · max(0, 1 − d/r)`.
pub fn cone<T: Scalar>(value: T, d: T, radius: T) -> T {
    value * (T::one() - d / radius).max(T::zero())
}

/// Seed in pixel coordinates (pixel `(i, j)` has its center at `(i + ½, j + ½)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seed<T> {
    pub x: T,
    pub y: T,
    pub value: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarRaster<T> {
    pub width: u32,
    pub height: u32,
    /// Row-major, top row first.
    pub values: Vec<T>,
    pub value_range: (T, T),
}

impl<T: Scalar> ScalarRaster<T> {
    pub fn from_values(width: u32, height: u32, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), width as usize * height as usize);
        let value_range = if values.is_empty() {
            (T::zero(), T::zero())
        } else {
            values.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)))
        };
        ScalarRaster { width, height, values, value_range }
    }

    pub fn get(&self, x: u32, y: u32) -> T {
        self.values[y as usize * self.width as usize + x as usize]
    }

    pub fn max_position(&self) -> Option<(u32, u32)> {
        let (i, _) = self.values.iter().enumerate().fold(None::<(usize, T)>, |best, (i, &v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((i, v)),
        })?;
        Some(((i % self.width as usize) as u32, (i / self.width as usize) as u32))
    }

    /// Little-endian `f32` payload.
    pub fn to_f32_le(&self) -> Vec<u8> {
        self.values.iter().flat_map(|v| (v.as_f64() as f32).to_le_bytes()).collect()
    }
}

/// Sums the cone of every seed over the raster, in parallel row bands.
pub fn rasterize<T: Scalar>(seeds: &[Seed<T>], width: u32, height: u32, radius_px: T) -> ScalarRaster<T> {
    let (w, h) = (width as usize, height as usize);
    let mut values = vec![T::zero(); w * h];
    let half = T::of(0.5);
    if radius_px > T::zero() {
        values.par_chunks_mut(w * BAND_ROWS).enumerate().for_each(|(band, out)| {
            let y0 = band * BAND_ROWS;
            let y1 = y0 + out.len() / w;
            for s in seeds {
                let top = (s.y - radius_px - half).ceil().max(T::of(y0 as f64));
                let bottom = (s.y + radius_px - half).floor().min(T::of(y1 as f64 - 1.0));
                let left = (s.x - radius_px - half).ceil().max(T::zero());
                let right = (s.x + radius_px - half).floor().min(T::of(w as f64 - 1.0));
                if top > bottom || left > right {
                    continue;
                }
                let (top, bottom) = (top.to_usize().unwrap(), bottom.to_usize().unwrap());
                let (left, right) = (left.to_usize().unwrap(), right.to_usize().unwrap());
                for py in top..=bottom {
                    let dy = T::of(py as f64) + half - s.y;
                    let row = &mut out[(py - y0) * w..(py - y0 + 1) * w];
                    for (px, cell) in row.iter_mut().enumerate().take(right + 1).skip(left) {
                        let dx = T::of(px as f64) + half - s.x;
                        let d = dx.hypot(dy);
                        if d < radius_px {
                            *cell = *cell + cone(s.value, d, radius_px);
                        }
                    }
                }
            }
        });
    }
    ScalarRaster::from_values(width, height, values)
}

/// Seeds for lattice-cell values inside the viewport or within the radius of it.
pub fn seeds_for<T, I>(lattice: &Lattice, viewport: &Viewport, radius_px: T, cells: I) -> Vec<Seed<T>>
where
    T: Scalar,
    I: IntoIterator<Item = (crate::Cell, T)>,
{
    let r = radius_px.as_f64();
    let (w, h) = (f64::from(viewport.width), f64::from(viewport.height));
    cells
        .into_iter()
        .filter_map(|(cell, value)| {
            let (lon, lat) = lattice.center(cell);
            let (x, y) = viewport.to_pixel(lon, lat);
            (x > -r && x < w + r && y > -r && y < h + r).then(|| Seed { x: T::of(x), y: T::of(y), value })
        })
        .collect()
}

/// Diffuses every occupied cell of `field` over `viewport`.
pub fn rasterize_field<T: Scalar>(
    field: &GridMetricField<T>,
    lattice: &Lattice,
    viewport: &Viewport,
    params: &DiffusionParams,
) -> ScalarRaster<T> {
    let radius = T::of(params.effective_radius_px(viewport.zoom));
    let seeds = seeds_for(
        lattice,
        viewport,
        radius,
        field.cells.iter().filter(|(_, s)| s.count > 0).map(|(c, s)| (*c, s.mean)),
    );
    rasterize(&seeds, viewport.width, viewport.height, radius)
}
