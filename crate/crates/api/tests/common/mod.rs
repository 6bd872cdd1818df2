#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use axum::body::{to_bytes, Body, Bytes};
use axum::http::{Request, StatusCode};
use serde_json::Value;
use tower::ServiceExt;
use uf_api::{router, AppState};
use uf_core::entropy::{MetricKind, TimeFilter};
use uf_core::field::{FieldJob, PScope};
use uf_core::pipeline::{run_grid_profiles, run_ingest, run_metrics, run_synth, RECORDS_FILE};
use uf_core::store::CityDir;
use uf_core::synth::SyntheticCitySpec;

pub struct Fixture {
    pub root: PathBuf,
    pub state: AppState,
}

pub fn small_spec(seed: u64) -> SyntheticCitySpec {
    let mut spec = SyntheticCitySpec::with_seed(seed);
    for (k, v) in spec.users_per_archetype.iter_mut() {
        *v = if k == "TOURIST" { 40 } else { 5 };
    }
    spec
}

pub fn every_job() -> Vec<FieldJob> {
    MetricKind::ALL.iter().flat_map(|&m| TimeFilter::every().into_iter().map(move |f| (m, f))).collect()
}

/// synth → ingest → grid-profiles → metrics for every (metric, filter).
pub fn build_city(dir: &Path, seed: u64, empty_records: bool) {
    let city = CityDir::new(dir);
    run_synth(&small_spec(seed), &city).unwrap();
    let input = dir.join(RECORDS_FILE);
    if empty_records {
        fs::write(&input, b"").unwrap();
    }
    run_ingest(&city, &input, &city.shard_dir(), 4, 2).unwrap();
    run_grid_profiles(&city).unwrap();
    run_metrics(&city, &city.shard_dir(), &every_job(), 2, PScope::Filtered).unwrap();
}

/// Three cities under one root, built once per test binary: `alpha` and
/// `beta` from different seeds, `hollow` with no records at all.
pub fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let root = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(format!("{}-fixture", env!("CARGO_CRATE_NAME")));
        let _ = fs::remove_dir_all(&root);
        build_city(&root.join("alpha"), 2015, false);
        build_city(&root.join("beta"), 7, false);
        build_city(&root.join("hollow"), 3, true);
        let state = AppState::load(&root).unwrap();
        Fixture { root, state }
    })
}

pub fn city_dir(name: &str) -> CityDir {
    CityDir::new(fixture().root.join(name))
}

pub async fn send(state: &AppState, req: Request<Body>) -> (StatusCode, Bytes) {
    let resp = router(state.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    (status, to_bytes(resp.into_body(), usize::MAX).await.unwrap())
}

pub async fn get(uri: &str) -> (StatusCode, Bytes) {
    send(&fixture().state, Request::get(uri).body(Body::empty()).unwrap()).await
}

pub async fn get_json(uri: &str) -> (StatusCode, Value) {
    let (s, b) = get(uri).await;
    (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
}

pub async fn post_json(uri: &str, body: &Value) -> (StatusCode, Value) {
    let req = Request::post(uri)
        .header("content-type", "application/json")
        .body(Body::from(serde_json::to_vec(body).unwrap()))
        .unwrap();
    let (s, b) = send(&fixture().state, req).await;
    (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
}

/// Asserts a JSON error body with the given status.
pub fn assert_error(status: StatusCode, body: &Value, expected: StatusCode) {
    assert_eq!(status, expected, "{body}");
    assert!(body["code"].is_string() && body["message"].is_string(), "{body}");
}
