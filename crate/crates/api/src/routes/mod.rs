pub mod catalog;
pub mod compare;
pub mod raster;
pub mod starplot;
pub mod stats;

use axum::extract::State;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::{json, Value};

use crate::error::{ApiError, ApiResult};
use crate::snapshot::AppState;

async fn reload(State(state): State<AppState>) -> ApiResult<Json<Value>> {
    let n = state.reload().map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(Json(json!({ "cities": n })))
}

async fn fallback() -> ApiError {
    ApiError::not_found("no such route")
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/cities", get(catalog::cities))
        .route("/raster", get(raster::raster))
        .route("/histogram", get(stats::histogram))
        .route("/region/stats", post(stats::region))
        .route("/starplot", get(starplot::starplot))
        .route("/compare", get(compare::compare))
        .route("/pois", get(catalog::pois))
        .route("/divisions", get(catalog::divisions))
        .route("/reload", post(reload))
        .fallback(fallback)
        .with_state(state)
}
