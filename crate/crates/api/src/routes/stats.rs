use std::collections::{BTreeMap, BTreeSet};

use axum::extract::State;
use axum::Json;
use serde::{Deserialize, Serialize};
use uf_core::entropy::MetricKind;
use uf_core::field::{field_histogram, iso_cells, region_cells, region_stats, MetricSummary, Region};
use uf_core::geo::Polygon;
use uf_core::{BBox, Cell, Histogram};

use crate::error::{ApiError, ApiResult};
use crate::extract::{self, Query};
use crate::params;
use crate::snapshot::{AppState, CityData};

pub const DEFAULT_BINS: usize = 20;

#[derive(Debug, Deserialize)]
pub struct HistogramQuery {
    pub city: String,
    pub metric: String,
    pub filter: Option<String>,
    pub bins: Option<i64>,
}

#[derive(Debug, Serialize)]
pub struct HistogramResponse {
    pub city: String,
    pub metric: MetricKind,
    pub filter: String,
    /// Occupied cells binned.
    pub cells: usize,
    #[serde(flatten)]
    pub histogram: Histogram,
}

pub async fn histogram(
    State(state): State<AppState>,
    Query(q): Query<HistogramQuery>,
) -> ApiResult<Json<HistogramResponse>> {
    let city = state.snapshot().city(&q.city)?;
    let metric = params::metric(&q.metric)?;
    let filter = params::filter(q.filter.as_deref())?;
    let bins = q.bins.unwrap_or(DEFAULT_BINS as i64);
    if !(1..=10_000).contains(&bins) {
        return Err(ApiError::invalid("bins must be in 1..=10000"));
    }
    let entry = city.field(metric, filter)?;
    let histogram = field_histogram(&entry.field, bins as usize)?;
    Ok(Json(HistogramResponse {
        city: city.name.clone(),
        metric,
        filter: filter.to_string(),
        cells: entry.field.len(),
        histogram,
    }))
}

/// A map selection. `polygon` takes GeoJSON-style rings, exterior first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Selection {
    Rect {
        bbox: [f64; 4],
    },
    Polygon {
        coordinates: Vec<Vec<[f64; 2]>>,
    },
    #[serde(alias = "division_id")]
    Division {
        id: String,
    },
    IsoPoint {
        metric: String,
        lon: f64,
        lat: f64,
        tolerance: f64,
    },
}

#[derive(Debug, Deserialize)]
pub struct RegionRequest {
    pub city: String,
    pub filter: Option<String>,
    /// Defaults to every cached metric for the filter.
    pub metrics: Option<Vec<String>>,
    pub selection: Selection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoResult {
    pub metric: MetricKind,
    /// Mean at the clicked point; absent when its cell is empty.
    pub value: Option<f64>,
    pub tolerance: f64,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionResponse {
    pub city: String,
    pub filter: String,
    /// Lattice cells in the selection.
    pub cells: usize,
    pub metrics: BTreeMap<MetricKind, MetricSummary<f64>>,
    pub breakdown: BTreeMap<MetricKind, Vec<f64>>,
    pub iso: Option<IsoResult>,
}

fn closed_ring(ring: &[[f64; 2]]) -> ApiResult<Vec<[f64; 2]>> {
    if ring.iter().flatten().any(|v| !v.is_finite()) {
        return Err(ApiError::invalid("polygon coordinates must be finite"));
    }
    let mut r = ring.to_vec();
    if r.first() != r.last() {
        r.push(r[0]);
    }
    let distinct: BTreeSet<(u64, u64)> = r.iter().map(|[x, y]| (x.to_bits(), y.to_bits())).collect();
    if distinct.len() < 3 {
        return Err(ApiError::invalid("polygon rings need at least three distinct vertices"));
    }
    let area: f64 = r.windows(2).map(|w| w[0][0] * w[1][1] - w[1][0] * w[0][1]).sum();
    if area.abs() < 1e-18 {
        return Err(ApiError::invalid("polygon ring has zero area"));
    }
    Ok(r)
}

pub fn selection_polygon(coordinates: &[Vec<[f64; 2]>], city_bbox: &BBox) -> ApiResult<Polygon> {
    let (exterior, holes) = coordinates.split_first().ok_or_else(|| ApiError::invalid("polygon has no rings"))?;
    let exterior = closed_ring(exterior)?;
    let holes = holes.iter().map(|h| closed_ring(h)).collect::<ApiResult<Vec<_>>>()?;
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &exterior {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    if !BBox::new(lo[0], lo[1], hi[0], hi[1]).intersects(city_bbox) {
        return Err(ApiError::invalid("polygon lies outside the city"));
    }
    Ok(Polygon { exterior, holes })
}

fn requested_metrics(city: &CityData, req: &RegionRequest, filter: uf_core::TimeFilter) -> ApiResult<Vec<MetricKind>> {
    match &req.metrics {
        Some(names) => {
            let ms = names.iter().map(|n| params::metric(n)).collect::<ApiResult<Vec<_>>>()?;
            for &m in &ms {
                city.field(m, filter)?;
            }
            Ok(ms)
        }
        None => Ok(MetricKind::ALL.into_iter().filter(|&m| city.fields.contains_key(&(m, filter))).collect()),
    }
}

/// Resolves a selection to lattice cells, plus the iso result for point selections.
pub fn resolve(
    city: &CityData,
    filter: uf_core::TimeFilter,
    sel: &Selection,
) -> ApiResult<(BTreeSet<Cell>, Option<IsoResult>)> {
    let bbox = city.config.bbox;
    match sel {
        Selection::Rect { bbox: [a, b, c, d] } => {
            let r = params::checked_bbox(BBox::new(*a, *b, *c, *d))?;
            if !r.intersects(&bbox) {
                return Err(ApiError::invalid("rectangle lies outside the city"));
            }
            Ok((region_cells(&city.lattice, &Region::Rect(r)), None))
        }
        Selection::Polygon { coordinates } => {
            let poly = selection_polygon(coordinates, &bbox)?;
            Ok((region_cells(&city.lattice, &Region::Polygons(vec![poly])), None))
        }
        Selection::Division { id } => {
            let d = city.divisions.get(id).ok_or_else(|| ApiError::not_found(format!("unknown division {id:?}")))?;
            Ok((region_cells(&city.lattice, &Region::Polygons(d.polygons.clone())), None))
        }
        Selection::IsoPoint { metric, lon, lat, tolerance } => {
            let metric = params::metric(metric)?;
            if !(lon.is_finite() && lat.is_finite() && bbox.contains(*lon, *lat)) {
                return Err(ApiError::invalid("iso point lies outside the city"));
            }
            if !(tolerance.is_finite() && *tolerance >= 0.0) {
                return Err(ApiError::invalid("tolerance must be a non-negative number"));
            }
            let field = &city.field(metric, filter)?.field;
            let (value, cells) = match iso_cells(field, &city.lattice, *lon, *lat, *tolerance) {
                Some((v, cells)) => (Some(v), cells),
                None => (None, Vec::new()),
            };
            let set = cells.iter().copied().collect();
            Ok((set, Some(IsoResult { metric, value, tolerance: *tolerance, cells })))
        }
    }
}

pub fn stats_for(
    city: &CityData,
    filter: uf_core::TimeFilter,
    metrics: &[MetricKind],
    cells: &BTreeSet<Cell>,
) -> ApiResult<uf_core::Stats> {
    let entries = metrics.iter().map(|&m| city.field(m, filter)).collect::<ApiResult<Vec<_>>>()?;
    let fields: Vec<_> = entries.iter().map(|e| (&e.field, e.breakdown.as_ref())).collect();
    Ok(region_stats(&fields, cells))
}

pub async fn region(
    State(state): State<AppState>,
    extract::Json(req): extract::Json<RegionRequest>,
) -> ApiResult<Json<RegionResponse>> {
    let city = state.snapshot().city(&req.city)?;
    let filter = params::filter(req.filter.as_deref())?;
    let metrics = requested_metrics(&city, &req, filter)?;
    let (cells, iso) = resolve(&city, filter, &req.selection)?;
    let stats = stats_for(&city, filter, &metrics, &cells)?;
    Ok(Json(RegionResponse {
        city: city.name.clone(),
        filter: filter.to_string(),
        cells: stats.cells,
        metrics: stats.metrics,
        breakdown: stats.breakdown,
        iso,
    }))
}
