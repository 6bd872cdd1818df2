//! Map viewport: lon/lat bbox drawn into a pixel rectangle with
//! Web-Mercator rows, so rasters align with slippy-map base layers.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geo::{BBox, LocalFrame};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Viewport {
    pub bbox: BBox,
    pub width: u32,
    pub height: u32,
    /// Scale factor relative to the base map resolution.
    pub zoom: f64,
}

/// Web-Mercator y (radians) of a latitude in degrees.
pub fn mercator_y(lat: f64) -> f64 {
    (PI / 4.0 + lat.to_radians() / 2.0).tan().ln()
}

pub fn inverse_mercator_y(y: f64) -> f64 {
    (2.0 * y.exp().atan() - PI / 2.0).to_degrees()
}

impl Viewport {
    pub fn new(bbox: BBox, width: u32, height: u32) -> Self {
        Self { bbox, width, height, zoom: 1.0 }
    }

    pub fn is_valid(&self) -> bool {
        self.width >= 1
            && self.height >= 1
            && self.bbox.is_valid()
            && self.bbox.lat_min > -85.06
            && self.bbox.lat_max < 85.06
            && self.zoom.is_finite()
            && self.zoom > 0.0
    }

    /// Pixel coordinates of a location (continuous; pixel centers at `i + ½`).
    pub fn to_pixel(&self, lon: f64, lat: f64) -> (f64, f64) {
        let x = (lon - self.bbox.lon_min) / self.bbox.width() * f64::from(self.width);
        let top = mercator_y(self.bbox.lat_max);
        let bottom = mercator_y(self.bbox.lat_min);
        let y = (top - mercator_y(lat)) / (top - bottom) * f64::from(self.height);
        (x, y)
    }

    pub fn to_lonlat(&self, x: f64, y: f64) -> (f64, f64) {
        let lon = self.bbox.lon_min + x / f64::from(self.width) * self.bbox.width();
        let top = mercator_y(self.bbox.lat_max);
        let bottom = mercator_y(self.bbox.lat_min);
        (lon, inverse_mercator_y(top - y / f64::from(self.height) * (top - bottom)))
    }

    /// Horizontal screen pixels per ground meter at the frame's reference latitude.
    pub fn pixels_per_meter(&self, frame: LocalFrame) -> f64 {
        f64::from(self.width) / (self.bbox.width() * frame.meters_per_deg_lon)
    }

    /// The same viewport moved by whole pixels (positive `dy` moves down).
    pub fn shifted(&self, dx: i32, dy: i32) -> Viewport {
        let dlon = f64::from(dx) * self.bbox.width() / f64::from(self.width);
        let top = mercator_y(self.bbox.lat_max);
        let bottom = mercator_y(self.bbox.lat_min);
        let dm = f64::from(dy) * (top - bottom) / f64::from(self.height);
        Viewport {
            bbox: BBox::new(
                self.bbox.lon_min + dlon,
                inverse_mercator_y(bottom - dm),
                self.bbox.lon_max + dlon,
                inverse_mercator_y(top - dm),
            ),
            ..*self
        }
    }
}
