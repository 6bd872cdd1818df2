use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{ClassBreakdown, GridMetricField};
use crate::entropy::MetricKind;
use crate::geo::{polygons_contain, BBox, Cell, Lattice, Polygon};
use crate::scalar::{KahanSum, Scalar};

/// A selection on the map, resolved to cells by their centers.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Cells(BTreeSet<Cell>),
    Rect(BBox),
    Polygons(Vec<Polygon>),
}

fn index_range(lo: f64, hi: f64, origin: f64, step: f64, n: u32) -> std::ops::RangeInclusive<u32> {
    let a = ((lo - origin) / step).floor() - 1.0;
    let b = ((hi - origin) / step).ceil() + 1.0;
    let clamp = |v: f64| v.clamp(0.0, f64::from(n) - 1.0) as u32;
    if b < 0.0 || a > f64::from(n) - 1.0 {
        #[allow(clippy::reversed_empty_ranges)]
        return 1..=0;
    }
    clamp(a)..=clamp(b)
}

/// Lattice cells whose center lies inside the region.
pub fn region_cells(lattice: &Lattice, region: &Region) -> BTreeSet<Cell> {
    let scan = |b: BBox, inside: &dyn Fn((f64, f64)) -> bool| -> BTreeSet<Cell> {
        let cols = index_range(b.lon_min, b.lon_max, lattice.origin_lon, lattice.step_lon, lattice.cols);
        let rows = index_range(b.lat_min, b.lat_max, lattice.origin_lat, lattice.step_lat, lattice.rows);
        rows.flat_map(|row| cols.clone().map(move |col| Cell::new(col, row)))
            .filter(|&c| inside(lattice.center(c)))
            .collect()
    };
    match region {
        Region::Cells(cells) => {
            cells.iter().copied().filter(|c| c.col < lattice.cols && c.row < lattice.rows).collect()
        }
        Region::Rect(b) => scan(*b, &|p| b.contains(p.0, p.1)),
        Region::Polygons(polys) => {
            let mut b = BBox::new(f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
            for [x, y] in polys.iter().flat_map(|p| p.exterior.iter()) {
                b = BBox::new(b.lon_min.min(*x), b.lat_min.min(*y), b.lon_max.max(*x), b.lat_max.max(*y));
            }
            if !b.lon_min.is_finite() {
                return BTreeSet::new();
            }
            scan(b, &|p| polygons_contain(polys, p))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary<T> {
    /// Count-weighted mean of the cell means; for density, the mean
    /// record count per occupied cell.
    pub mean: T,
    /// Stamped records in the region.
    pub count: u64,
    /// Occupied cells in the region.
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionStats<T> {
    pub cells: usize,
    pub metrics: BTreeMap<MetricKind, MetricSummary<T>>,
    /// Normalized class distribution of the users behind each metric.
    pub breakdown: BTreeMap<MetricKind, Vec<T>>,
}

impl<T> RegionStats<T> {
    pub fn is_empty(&self) -> bool {
        self.metrics.is_empty()
    }
}

pub fn region_stats<T: Scalar>(
    fields: &[(&GridMetricField<T>, Option<&ClassBreakdown<T>>)],
    cells: &BTreeSet<Cell>,
) -> RegionStats<T> {
    let mut stats = RegionStats { cells: cells.len(), metrics: BTreeMap::new(), breakdown: BTreeMap::new() };
    for (field, breakdown) in fields {
        let (mut weighted, mut count, mut occupied) = (KahanSum::new(), 0u64, 0usize);
        for stat in cells.iter().filter_map(|c| field.get(*c)) {
            let n = T::of(f64::from(stat.count));
            weighted.add(if field.metric == MetricKind::Density { n } else { stat.mean * n });
            count += u64::from(stat.count);
            occupied += 1;
        }
        if occupied == 0 {
            continue;
        }
        let denom = if field.metric == MetricKind::Density { occupied as f64 } else { count as f64 };
        stats
            .metrics
            .insert(field.metric, MetricSummary { mean: weighted.value() / T::of(denom), count, cells: occupied });
        if let Some(b) = breakdown {
            let mut acc = vec![T::zero(); b.classes];
            for v in cells.iter().filter_map(|c| b.cells.get(c)) {
                acc.iter_mut().zip(v).for_each(|(a, x)| *a = *a + *x);
            }
            let total: T = acc.iter().copied().sum();
            if total > T::zero() {
                acc.iter_mut().for_each(|a| *a = *a / total);
            }
            stats.breakdown.insert(field.metric, acc);
        }
    }
    stats
}

/// Cells whose mean is within `tolerance` of the mean at the clicked point.
/// `None` when the point has no value.
pub fn iso_cells<T: Scalar>(
    field: &GridMetricField<T>,
    lattice: &Lattice,
    lon: f64,
    lat: f64,
    tolerance: T,
) -> Option<(T, Vec<Cell>)> {
    let value = field.get(lattice.assign(lon, lat)?)?.mean;
    let cells = field.cells.iter().filter(|(_, s)| (s.mean - value).abs() <= tolerance).map(|(c, _)| *c).collect();
    Some((value, cells))
}
