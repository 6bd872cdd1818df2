use std::collections::BTreeMap;

use axum::extract::State;
use axum::Json;
use serde::{Deserialize, Serialize};
use uf_core::entropy::MetricKind;
use uf_core::field::{region_cells, Region};
use uf_core::geo::Level;

use crate::error::{ApiError, ApiResult};
use crate::extract::Query;
use crate::params;
use crate::routes::stats::stats_for;
use crate::snapshot::AppState;

/// Normalized value when every region shares the same value.
pub const COLLAPSED_AXIS: f64 = 0.5;

#[derive(Debug, Deserialize)]
pub struct StarPlotQuery {
    pub city: String,
    pub level: Option<String>,
    pub filter: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarPlotDatum {
    pub id: String,
    pub name: String,
    pub level: Level,
    pub centroid: [f64; 2],
    pub cells: usize,
    /// The four facet axes, min/max normalized across the level's regions.
    pub axes: BTreeMap<MetricKind, f64>,
    pub density_norm: f64,
    /// Region means before normalization; absent when the region has no data.
    pub raw: BTreeMap<MetricKind, Option<f64>>,
}

/// `(v - min) / (max - min)` over the present values; a collapsed range
/// maps to [`COLLAPSED_AXIS`] and a missing value to 0.
pub fn normalize(values: &[Option<f64>]) -> Vec<f64> {
    let present = values.iter().flatten();
    let (lo, hi) = present.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    values
        .iter()
        .map(|v| match v {
            None => 0.0,
            Some(_) if hi <= lo => COLLAPSED_AXIS,
            Some(v) => ((v - lo) / (hi - lo)).clamp(0.0, 1.0),
        })
        .collect()
}

pub async fn starplot(
    State(state): State<AppState>,
    Query(q): Query<StarPlotQuery>,
) -> ApiResult<Json<Vec<StarPlotDatum>>> {
    let city = state.snapshot().city(&q.city)?;
    let filter = params::filter(q.filter.as_deref())?;
    let level: Level = match q.level.as_deref() {
        None | Some("") => Level::Div,
        Some(s) => s.parse().map_err(ApiError::invalid)?,
    };
    let layer = city.divisions.layer(level);
    if layer.is_empty() {
        return Err(ApiError::not_found(format!("{} has no {level} divisions", city.name)));
    }
    let mut metrics = MetricKind::FACET_AXES.to_vec();
    metrics.push(MetricKind::Density);

    let mut data = Vec::with_capacity(layer.len());
    let mut raw_columns: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(layer.len()); metrics.len()];
    for d in &layer.members {
        let cells = region_cells(&city.lattice, &Region::Polygons(d.polygons.clone()));
        let stats = stats_for(&city, filter, &metrics, &cells)?;
        let mut raw = BTreeMap::new();
        for (k, m) in metrics.iter().enumerate() {
            let v = stats.metrics.get(m).map(|s| s.mean);
            raw_columns[k].push(v);
            raw.insert(*m, v);
        }
        let (cx, cy) = d.centroid();
        data.push(StarPlotDatum {
            id: d.id.clone(),
            name: d.name.clone(),
            level,
            centroid: [cx, cy],
            cells: cells.len(),
            axes: BTreeMap::new(),
            density_norm: 0.0,
            raw,
        });
    }
    for (k, m) in metrics.iter().enumerate() {
        for (datum, v) in data.iter_mut().zip(normalize(&raw_columns[k])) {
            if *m == MetricKind::Density {
                datum.density_norm = v;
            } else {
                datum.axes.insert(*m, v);
            }
        }
    }
    Ok(Json(data))
}
