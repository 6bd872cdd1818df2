use axum::body::Bytes;
use axum::extract::State;
use axum::http::header;
use axum::response::{IntoResponse, Response};
use serde::{Deserialize, Serialize};
use uf_core::geo::Level;
use uf_core::raster::{rasterize_divisions, rasterize_field, DiffusionParams};
use uf_core::BBox;

use crate::error::{ApiError, ApiResult};
use crate::extract::Query;
use crate::params::{self, Layer};
use crate::snapshot::AppState;

pub const RASTER_CONTENT_TYPE: &str = "application/vnd.uf.raster";

#[derive(Debug, Deserialize)]
pub struct RasterQuery {
    pub city: String,
    pub metric: String,
    pub filter: Option<String>,
    pub bbox: Option<String>,
    pub width: Option<u32>,
    pub height: Option<u32>,
    pub zoom: Option<f64>,
    pub radius_px: Option<f64>,
    #[serde(default)]
    pub adaptive: bool,
}

/// JSON header that precedes the float32 payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterHeader {
    pub city: String,
    pub metric: String,
    pub filter: String,
    pub bbox: BBox,
    pub width: u32,
    pub height: u32,
    pub zoom: f64,
    /// Effective kernel radius; absent for demographics layers.
    pub radius_px: Option<f64>,
    pub adaptive: bool,
    /// Min and max of the float32 payload.
    pub value_range: [f32; 2],
}

/// `[u32 LE header length][header JSON][width·height f32 LE, row-major, top row first]`.
pub fn encode(header: &RasterHeader, values: &[f32]) -> Vec<u8> {
    let json = serde_json::to_vec(header).expect("header serializes");
    let mut out = Vec::with_capacity(4 + json.len() + 4 * values.len());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Inverse of [`encode`].
pub fn decode(bytes: &[u8]) -> Option<(RasterHeader, Vec<f32>)> {
    let len = u32::from_le_bytes(bytes.get(..4)?.try_into().ok()?) as usize;
    let header: RasterHeader = serde_json::from_slice(bytes.get(4..4 + len)?).ok()?;
    let body = bytes.get(4 + len..)?;
    if body.len() % 4 != 0 {
        return None;
    }
    let values = body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    Some((header, values))
}

fn range(values: &[f32]) -> [f32; 2] {
    if values.is_empty() {
        return [0.0, 0.0];
    }
    values.iter().fold([f32::INFINITY, f32::NEG_INFINITY], |[lo, hi], &v| [lo.min(v), hi.max(v)])
}

pub async fn raster(State(state): State<AppState>, Query(q): Query<RasterQuery>) -> ApiResult<Response> {
    let city = state.snapshot().city(&q.city)?;
    let layer = Layer::parse(&q.metric)?;
    let filter = params::filter(q.filter.as_deref())?;
    let view = params::viewport(&city, q.bbox.as_deref(), q.width, q.height, q.zoom)?;
    if let Some(r) = q.radius_px {
        if !(r.is_finite() && r > 0.0) {
            return Err(ApiError::invalid("radius_px must be positive"));
        }
    }
    match layer {
        Layer::Facet => return Err(ApiError::invalid("the facet view is served by /starplot")),
        Layer::Field(m) => {
            city.field(m, filter)?;
        }
        Layer::Demographic(_) => {}
    }
    let adaptive = q.adaptive;
    let radius = q.radius_px;
    let bytes = tokio::task::spawn_blocking(move || {
        let (values, radius_px) = match layer {
            Layer::Field(m) => {
                let entry = city.field(m, filter).expect("checked above");
                let mut p = DiffusionParams::default_for(&city.lattice, &view);
                if let Some(r) = radius {
                    p.radius_px = r;
                }
                p.adaptive = adaptive;
                let r = rasterize_field(&entry.field, &city.lattice, &view, &p);
                (r.values, Some(p.effective_radius_px(view.zoom)))
            }
            Layer::Demographic(k) => (rasterize_divisions(&city.divisions.layer(Level::Div), k, &view).values, None),
            Layer::Facet => unreachable!(),
        };
        let values: Vec<f32> = values.into_iter().map(|v| v as f32).collect();
        let header = RasterHeader {
            city: city.name.clone(),
            metric: layer.name().to_string(),
            filter: filter.to_string(),
            bbox: view.bbox,
            width: view.width,
            height: view.height,
            zoom: view.zoom,
            radius_px,
            adaptive,
            value_range: range(&values),
        };
        encode(&header, &values)
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, RASTER_CONTENT_TYPE)], Bytes::from(bytes)).into_response())
}
