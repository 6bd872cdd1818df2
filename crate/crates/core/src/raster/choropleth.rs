use rayon::prelude::*;

use super::{ScalarRaster, Viewport};
use crate::geo::{DemographicKind, DivisionLayer};

/// Per-pixel division lookup: every pixel takes the value of the division
/// holding its center, 0 outside all divisions or where the value is missing.
pub fn rasterize_divisions(layer: &DivisionLayer<'_>, kind: DemographicKind, viewport: &Viewport) -> ScalarRaster<f64> {
    let values: Vec<Option<f64>> =
        layer.members.iter().map(|d| d.demographics.and_then(|demo| demo.get(kind))).collect();
    let w = viewport.width as usize;
    let mut out = vec![0.0; w * viewport.height as usize];
    if w > 0 {
        out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
            for (x, px) in row.iter_mut().enumerate() {
                let (lon, lat) = viewport.to_lonlat(x as f64 + 0.5, y as f64 + 0.5);
                *px = layer.division_of(lon, lat).and_then(|i| values[i]).unwrap_or(0.0);
            }
        });
    }
    ScalarRaster::from_values(viewport.width, viewport.height, out)
}
