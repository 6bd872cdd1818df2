use std::collections::BTreeSet;

use axum::extract::State;
use axum::Json;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use uf_core::entropy::{MetricKind, TimeFilter};
use uf_core::geo::{DemographicKind, DivisionSet, Level, Poi, PoiClass, POI_CLASS_COUNT};
use uf_core::{BBox, Cell, MetricField};

use crate::error::{ApiError, ApiResult};
use crate::extract::Query;
use crate::params;
use crate::snapshot::AppState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedField {
    pub metric: MetricKind,
    pub filter: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityDescriptor {
    pub name: String,
    pub bbox: BBox,
    pub epoch: String,
    pub lattice_step_m: f64,
    pub cols: u32,
    pub rows: u32,
    pub levels: Vec<Level>,
    /// Filters with at least one cached field.
    pub filters: Vec<String>,
    pub fields: Vec<CachedField>,
    pub demographics: Vec<DemographicKind>,
    pub pois: usize,
}

pub async fn cities(State(state): State<AppState>) -> Json<Vec<CityDescriptor>> {
    let snap = state.snapshot();
    let out = snap
        .cities
        .values()
        .map(|c| {
            let filters: BTreeSet<TimeFilter> = c.fields.keys().map(|(_, f)| *f).collect();
            CityDescriptor {
                name: c.name.clone(),
                bbox: c.config.bbox,
                epoch: c.config.epoch.to_string(),
                lattice_step_m: c.lattice.step_m,
                cols: c.lattice.cols,
                rows: c.lattice.rows,
                levels: c.divisions.levels(),
                filters: filters.iter().map(|f| f.to_string()).collect(),
                fields: c.fields.keys().map(|(m, f)| CachedField { metric: *m, filter: f.to_string() }).collect(),
                demographics: c.demographics(),
                pois: c.pois.len(),
            }
        })
        .collect();
    Json(out)
}

#[derive(Debug, Deserialize)]
pub struct PoiQuery {
    pub city: String,
    pub class: Option<i64>,
    pub metric: Option<String>,
    pub filter: Option<String>,
    /// Share of the ranked cells to keep; 1 keeps every POI of the class.
    pub q: Option<f64>,
}

/// Cells whose mean reaches the value ranked `floor(q·(n−1))` in descending order.
pub fn top_cells(field: &MetricField, q: f64) -> BTreeSet<Cell> {
    let mut means: Vec<f64> = field.means().collect();
    if means.is_empty() {
        return BTreeSet::new();
    }
    means.sort_by(|a, b| b.total_cmp(a));
    let threshold = means[(q * (means.len() - 1) as f64).floor() as usize];
    field.cells.iter().filter(|(_, s)| s.mean >= threshold).map(|(c, _)| *c).collect()
}

pub async fn pois(State(state): State<AppState>, Query(q): Query<PoiQuery>) -> ApiResult<Json<Vec<Poi>>> {
    let city = state.snapshot().city(&q.city)?;
    let class = q
        .class
        .and_then(|c| u8::try_from(c).ok())
        .and_then(PoiClass::new)
        .ok_or_else(|| ApiError::invalid(format!("class must be in 0..{POI_CLASS_COUNT}")))?;
    let share = q.q.unwrap_or(1.0);
    if !(0.0..=1.0).contains(&share) {
        return Err(ApiError::invalid("q must be in [0, 1]"));
    }
    let filter = params::filter(q.filter.as_deref())?;
    let of_class = city.pois.iter().filter(|p| p.class == class);
    let out = match q.metric.as_deref() {
        Some(m) if share < 1.0 => {
            let field = &city.field(params::metric(m)?, filter)?.field;
            let keep = top_cells(field, share);
            of_class.filter(|p| city.lattice.assign(p.lon, p.lat).is_some_and(|c| keep.contains(&c))).cloned().collect()
        }
        Some(m) => {
            city.field(params::metric(m)?, filter)?;
            of_class.cloned().collect()
        }
        None => of_class.cloned().collect(),
    };
    Ok(Json(out))
}

#[derive(Debug, Deserialize)]
pub struct DivisionQuery {
    pub city: String,
    pub level: Option<String>,
}

/// GeoJSON FeatureCollection; demographics ride along in the properties.
pub async fn divisions(State(state): State<AppState>, Query(q): Query<DivisionQuery>) -> ApiResult<Json<Value>> {
    let city = state.snapshot().city(&q.city)?;
    let level: Option<Level> = match q.level.as_deref() {
        None | Some("") => None,
        Some(s) => Some(s.parse().map_err(ApiError::invalid)?),
    };
    let chosen: Vec<_> =
        city.divisions.divisions.iter().filter(|d| level.is_none_or(|l| d.level == l)).cloned().collect();
    let mut fc = DivisionSet { divisions: chosen.clone() }.to_geojson();
    if let Some(features) = fc.get_mut("features").and_then(Value::as_array_mut) {
        for (f, d) in features.iter_mut().zip(&chosen) {
            let (Some(props), Some(demo)) = (f.get_mut("properties").and_then(Value::as_object_mut), d.demographics)
            else {
                continue;
            };
            for k in DemographicKind::ALL {
                if let Some(v) = demo.get(k) {
                    props.insert(k.as_str().to_string(), v.into());
                }
            }
        }
    }
    Ok(Json(fc))
}
