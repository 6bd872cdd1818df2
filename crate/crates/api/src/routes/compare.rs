use axum::extract::State;
use axum::Json;
use serde::{Deserialize, Serialize};
use uf_core::entropy::{DayType, TimeBand, TimeFilter};

use crate::error::{ApiError, ApiResult};
use crate::extract::Query;
use crate::params::{self, Layer};
use crate::snapshot::{AppState, CityData};

pub const MAX_TIME_VIEWS: usize = 6;
pub const MAX_CITY_VIEWS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompareMode {
    /// Time-of-day bands of one city, 3×2.
    Time,
    /// Weekday against weekend, 2×1.
    Week,
    /// Up to four cities, 2×2.
    City,
}

#[derive(Debug, Deserialize)]
pub struct CompareQuery {
    pub mode: CompareMode,
    pub metric: String,
    /// Time and week modes.
    pub city: Option<String>,
    /// City mode, comma separated.
    pub cities: Option<String>,
    /// Comma separated filters; city mode takes a single one.
    pub filters: Option<String>,
    pub filter: Option<String>,
    pub bbox: Option<String>,
    pub width: Option<u32>,
    pub height: Option<u32>,
    pub zoom: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewDescriptor {
    pub city: String,
    pub metric: String,
    pub filter: String,
    /// Relative `/raster` URL for the view.
    pub raster: String,
    /// Min and max cell mean of the view's field; absent for demographics.
    pub field_range: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareBundle {
    pub mode: CompareMode,
    pub metric: String,
    /// Union of the views' field ranges, for a shared color scale.
    pub shared_range: Option<[f64; 2]>,
    pub views: Vec<ViewDescriptor>,
}

#[derive(Serialize)]
struct RasterParams<'a> {
    city: &'a str,
    metric: &'a str,
    filter: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    bbox: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    width: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    height: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    zoom: Option<f64>,
}

fn time_filters(q: &CompareQuery) -> ApiResult<Vec<TimeFilter>> {
    let mut bands: Vec<TimeBand> = match q.filters.as_deref() {
        None => TimeBand::DAYTIME.to_vec(),
        Some(s) => params::list(s)
            .into_iter()
            .map(|f| match params::filter(Some(f))? {
                TimeFilter::TimeOfDay(b) => Ok(b),
                _ => Err(ApiError::invalid(format!("{f:?} is not a time-of-day band"))),
            })
            .collect::<ApiResult<_>>()?,
    };
    bands.sort();
    bands.dedup();
    if !(2..=MAX_TIME_VIEWS).contains(&bands.len()) {
        return Err(ApiError::invalid(format!("time mode takes 2 to {MAX_TIME_VIEWS} distinct bands")));
    }
    Ok(bands.into_iter().map(TimeFilter::TimeOfDay).collect())
}

fn week_filters(q: &CompareQuery) -> ApiResult<Vec<TimeFilter>> {
    let both = vec![TimeFilter::DayOfWeek(DayType::Weekday), TimeFilter::DayOfWeek(DayType::Weekend)];
    if let Some(s) = q.filters.as_deref() {
        let mut given = params::list(s).into_iter().map(|f| params::filter(Some(f))).collect::<ApiResult<Vec<_>>>()?;
        given.sort();
        if given != both {
            return Err(ApiError::invalid("week mode compares exactly weekday and weekend"));
        }
    }
    Ok(both)
}

fn descriptor(city: &CityData, layer: Layer, filter: TimeFilter, q: &CompareQuery) -> ApiResult<ViewDescriptor> {
    let field_range = match layer {
        Layer::Field(m) => {
            let field = &city.field(m, filter)?.field;
            field
                .means()
                .fold(None, |acc: Option<[f64; 2]>, v| Some(acc.map_or([v, v], |[lo, hi]| [lo.min(v), hi.max(v)])))
        }
        Layer::Demographic(_) => None,
        Layer::Facet => return Err(ApiError::invalid("the facet view is served by /starplot")),
    };
    let p = RasterParams {
        city: &city.name,
        metric: layer.name(),
        filter: filter.to_string(),
        bbox: q.bbox.as_deref(),
        width: q.width,
        height: q.height,
        zoom: q.zoom,
    };
    let query = serde_urlencoded::to_string(&p).map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(ViewDescriptor {
        city: city.name.clone(),
        metric: layer.name().to_string(),
        filter: filter.to_string(),
        raster: format!("/raster?{query}"),
        field_range,
    })
}

pub async fn compare(State(state): State<AppState>, Query(q): Query<CompareQuery>) -> ApiResult<Json<CompareBundle>> {
    let snap = state.snapshot();
    let layer = Layer::parse(&q.metric)?;
    let views: Vec<(std::sync::Arc<CityData>, TimeFilter)> = match q.mode {
        CompareMode::Time | CompareMode::Week => {
            let name = q.city.as_deref().ok_or_else(|| ApiError::invalid("city is required"))?;
            let filters = if q.mode == CompareMode::Time { time_filters(&q)? } else { week_filters(&q)? };
            let city = snap.city(name)?;
            filters.into_iter().map(|f| (city.clone(), f)).collect()
        }
        CompareMode::City => {
            let names = params::list(q.cities.as_deref().unwrap_or(""));
            if !(2..=MAX_CITY_VIEWS).contains(&names.len()) {
                return Err(ApiError::invalid(format!("city mode takes 2 to {MAX_CITY_VIEWS} cities")));
            }
            let filter = params::filter(q.filter.as_deref().or(q.filters.as_deref()))?;
            names.into_iter().map(|n| snap.city(n).map(|c| (c, filter))).collect::<ApiResult<_>>()?
        }
    };
    if let (Some(b), Some((city, _))) = (q.bbox.as_deref(), views.first()) {
        params::viewport(city, Some(b), q.width, q.height, q.zoom)?;
    }
    let views = views.iter().map(|(c, f)| descriptor(c, layer, *f, &q)).collect::<ApiResult<Vec<_>>>()?;
    let shared_range = views.iter().filter_map(|v| v.field_range).reduce(|a, b| [a[0].min(b[0]), a[1].max(b[1])]);
    Ok(Json(CompareBundle { mode: q.mode, metric: layer.name().to_string(), shared_range, views }))
}
