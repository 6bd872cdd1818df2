mod common;

use std::collections::BTreeSet;

use axum::http::StatusCode;
use common::*;
use serde_json::{json, Value};
use uf_api::decode_raster;
use uf_core::entropy::{MetricKind, TimeFilter};
use uf_core::field::field_histogram;
use uf_core::geo::{DemographicKind, Level};
use uf_core::raster::{inverse_mercator_y, mercator_y};
use uf_core::Lattice;

fn lattice(name: &str) -> Lattice {
    Lattice::new(&city_dir(name).load_config().unwrap()).unwrap()
}

#[tokio::test]
async fn cities_describe_each_directory() {
    let (s, body) = get_json("/cities").await;
    assert_eq!(s, StatusCode::OK);
    let names: Vec<&str> = body.as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["alpha", "beta", "hollow"]);
    let alpha = &body[0];
    let cfg = city_dir("alpha").load_config().unwrap();
    assert_eq!(alpha["bbox"], serde_json::to_value(cfg.bbox).unwrap());
    assert_eq!(alpha["levels"], json!(["DIV", "SUBDISTRICT"]));
    assert_eq!(alpha["fields"].as_array().unwrap().len(), 50);
    assert_eq!(alpha["filters"].as_array().unwrap().len(), 10);
    assert_eq!(alpha["demographics"], json!(["gdp", "population", "house_price"]));
}

#[tokio::test]
async fn empty_deployment_lists_nothing() {
    let tmp = tempfile_dir("empty");
    let state = uf_api::AppState::load(&tmp).unwrap();
    let (s, b) = send(&state, axum::http::Request::get("/cities").body(axum::body::Body::empty()).unwrap()).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(&b[..], b"[]");
    assert!(uf_api::AppState::load(tmp.join("missing")).is_err());
}

fn tempfile_dir(tag: &str) -> std::path::PathBuf {
    let p = std::path::PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(format!("{}-{tag}", env!("CARGO_CRATE_NAME")));
    let _ = std::fs::remove_dir_all(&p);
    std::fs::create_dir_all(&p).unwrap();
    p
}

#[tokio::test]
async fn reload_swaps_in_new_cities() {
    let root = tempfile_dir("reload");
    let state = uf_api::AppState::load(&root).unwrap();
    assert!(state.snapshot().cities.is_empty());
    let src = city_dir("hollow");
    let dst = root.join("copy");
    std::fs::create_dir_all(dst.join("fields")).unwrap();
    for f in ["city.json", "pois.csv", "divisions.geojson", "demographics.csv"] {
        std::fs::copy(src.root.join(f), dst.join(f)).unwrap();
    }
    let req = axum::http::Request::post("/reload").body(axum::body::Body::empty()).unwrap();
    let (s, b) = send(&state, req).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(serde_json::from_slice::<Value>(&b).unwrap()["cities"], 1);
    assert!(state.snapshot().cities.contains_key("copy"));
}

/// Viewport of `2k+1` pixels whose center pixel sits exactly on `(lon, lat)`.
fn centered_bbox(lon: f64, lat: f64, half_lon: f64, half_merc: f64) -> String {
    let y = mercator_y(lat);
    format!(
        "{},{},{},{}",
        lon - half_lon,
        inverse_mercator_y(y - half_merc),
        lon + half_lon,
        inverse_mercator_y(y + half_merc)
    )
}

#[tokio::test]
async fn density_raster_peaks_at_the_densest_cell() {
    let l = lattice("alpha");
    let field = city_dir("alpha").load_field(MetricKind::Density, TimeFilter::All).unwrap();
    let (cell, stat) = field.cells.iter().max_by(|a, b| a.1.mean.total_cmp(&b.1.mean)).unwrap();
    let (lon, lat) = l.center(*cell);
    let side = 101u32;
    let half_lon = 10.0 * l.step_lon;
    let px_per_lon = f64::from(side) / (2.0 * half_lon);
    let spacing_px = l.step_lon * px_per_lon;
    let half_merc = (mercator_y(lat + l.step_lat * 10.0) - mercator_y(lat - l.step_lat * 10.0)) / 2.0;
    let bbox = centered_bbox(lon, lat, half_lon, half_merc);
    // the radius stays under half the cell spacing so cones never overlap
    let uri = format!(
        "/raster?city=alpha&metric=density&bbox={bbox}&width={side}&height={side}&radius_px={}",
        0.4 * spacing_px
    );
    let (s, bytes) = get(&uri).await;
    assert_eq!(s, StatusCode::OK);
    let (h, values) = decode_raster(&bytes).unwrap();
    let peak = values[(side / 2 * side + side / 2) as usize];
    assert!((f64::from(peak) - stat.mean).abs() < 1e-3, "{peak} vs {}", stat.mean);
    assert_eq!(h.value_range[1], peak);
}

#[tokio::test]
async fn zero_record_city_renders_all_zero() {
    let (s, bytes) = get("/raster?city=hollow&metric=vibrancy&filter=midnight&width=64&height=48").await;
    assert_eq!(s, StatusCode::OK);
    let (h, values) = decode_raster(&bytes).unwrap();
    assert_eq!((h.width, h.height), (64, 48));
    assert_eq!(values.len(), 64 * 48);
    assert!(values.iter().all(|v| *v == 0.0));
    assert_eq!(h.value_range, [0.0, 0.0]);
}

#[tokio::test]
async fn raster_errors() {
    for (uri, status) in [
        ("/raster?city=alpha&metric=bogus", StatusCode::NOT_FOUND),
        ("/raster?city=nowhere&metric=density", StatusCode::NOT_FOUND),
        ("/raster?city=alpha&metric=density&bbox=116.2,39.8,116.4,89.5", StatusCode::UNPROCESSABLE_ENTITY),
        ("/raster?city=alpha&metric=density&bbox=116.4,39.8,116.2,39.9", StatusCode::UNPROCESSABLE_ENTITY),
        ("/raster?city=alpha&metric=density&bbox=10,10,11,11", StatusCode::UNPROCESSABLE_ENTITY),
        ("/raster?city=alpha&metric=density&width=0", StatusCode::UNPROCESSABLE_ENTITY),
        ("/raster?city=alpha&metric=density&zoom=0", StatusCode::UNPROCESSABLE_ENTITY),
        ("/raster?city=alpha&metric=density&radius_px=-1", StatusCode::UNPROCESSABLE_ENTITY),
        ("/raster?city=alpha&metric=density&filter=sometimes", StatusCode::UNPROCESSABLE_ENTITY),
        ("/raster?city=alpha&metric=facet", StatusCode::UNPROCESSABLE_ENTITY),
        ("/raster?metric=density", StatusCode::UNPROCESSABLE_ENTITY),
    ] {
        let (s, body) = get_json(uri).await;
        assert_error(s, &body, status);
    }
}

#[tokio::test]
async fn rasters_are_stateless_and_bracketed() {
    for metric in ["fluidity", "vibrancy", "commutation", "diversity", "density"] {
        let uri =
            format!("/raster?city=alpha&metric={metric}&filter=evening&width=160&height=120&zoom=2&adaptive=true");
        let (_, a) = get(&uri).await;
        let (_, b) = get(&uri).await;
        assert_eq!(a, b);
        let (h, values) = decode_raster(&a).unwrap();
        assert!(values.iter().all(|v| *v >= h.value_range[0] && *v <= h.value_range[1]));
        assert!(values.iter().any(|v| *v > 0.0));
        // three grid radii at zoom 1, doubled by the adaptive zoom
        let l = lattice("alpha");
        let px_per_m = 160.0 / ((h.bbox.lon_max - h.bbox.lon_min) * l.frame.meters_per_deg_lon);
        let expected = 2.0 * 3.0 * l.grid_radius_m() * px_per_m;
        assert!((h.radius_px.unwrap() - expected).abs() < 1e-9);
    }
}

#[tokio::test]
async fn adaptive_radius_only_matters_off_unit_zoom() {
    let base = "/raster?city=alpha&metric=diversity&width=90&height=70";
    let payload = |b: &[u8]| decode_raster(b).unwrap().1;
    let (_, fixed1) = get(&format!("{base}&zoom=1")).await;
    let (_, adapt1) = get(&format!("{base}&zoom=1&adaptive=true")).await;
    assert_eq!(payload(&fixed1), payload(&adapt1));
    let (_, fixed2) = get(&format!("{base}&zoom=2")).await;
    let (_, adapt2) = get(&format!("{base}&zoom=2&adaptive=true")).await;
    assert_ne!(payload(&fixed2), payload(&adapt2));
    assert_eq!(payload(&fixed1), payload(&fixed2));
}

#[tokio::test]
async fn demographic_layers_are_uniform_per_division() {
    let divisions = city_dir("alpha").load_divisions().unwrap();
    let cfg = city_dir("alpha").load_config().unwrap();
    let (w, h) = (200u32, 160u32);
    let (s, bytes) = get(&format!("/raster?city=alpha&metric=house_price&width={w}&height={h}")).await;
    assert_eq!(s, StatusCode::OK);
    let (header, values) = decode_raster(&bytes).unwrap();
    assert_eq!(header.radius_px, None);
    let view = uf_core::raster::Viewport::new(cfg.bbox, w, h);
    for d in &divisions.layer(Level::Div).members {
        let expected = d.demographics.unwrap().get(DemographicKind::HousePrice).unwrap() as f32;
        let (x, y) = view.to_pixel(d.centroid().0, d.centroid().1);
        assert_eq!(values[(y as u32 * w + x as u32) as usize], expected, "{}", d.id);
    }
}

#[tokio::test]
async fn histogram_passes_the_field_through() {
    let field = city_dir("alpha").load_field(MetricKind::Vibrancy, TimeFilter::All).unwrap();
    for bins in [1usize, 7, 20] {
        let (s, body) = get_json(&format!("/histogram?city=alpha&metric=vibrancy&bins={bins}")).await;
        assert_eq!(s, StatusCode::OK);
        let expected = serde_json::to_value(field_histogram(&field, bins).unwrap()).unwrap();
        for key in ["min", "max", "bin_width", "counts", "densities"] {
            assert_eq!(body[key], expected[key], "{key}");
        }
        if bins == 1 {
            let width = body["bin_width"].as_f64().unwrap();
            assert!((body["densities"][0].as_f64().unwrap() - 1.0 / width).abs() < 1e-12);
        }
    }
    let (s, body) = get_json("/histogram?city=alpha&metric=vibrancy&bins=0").await;
    assert_error(s, &body, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, body) = get_json("/histogram?city=alpha&metric=nope").await;
    assert_error(s, &body, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn whole_city_rectangle_gives_city_means() {
    let dir = city_dir("alpha");
    let b = dir.load_config().unwrap().bbox;
    let sel = json!({"kind": "rect", "bbox": [b.lon_min, b.lat_min, b.lon_max, b.lat_max]});
    let (s, body) = post_json("/region/stats", &json!({"city": "alpha", "selection": sel})).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body["cells"].as_u64().unwrap() as usize, lattice("alpha").len());
    for m in MetricKind::ALL {
        let f = dir.load_field(m, TimeFilter::All).unwrap();
        let n: u64 = f.total_count();
        let mean = if m == MetricKind::Density {
            n as f64 / f.len() as f64
        } else {
            f.cells.values().map(|s| s.mean * f64::from(s.count)).sum::<f64>() / n as f64
        };
        let got = &body["metrics"][m.as_str()];
        assert!((got["mean"].as_f64().unwrap() - mean).abs() < 1e-9, "{m:?}");
        assert_eq!(got["count"].as_u64().unwrap(), n);
        assert_eq!(got["cells"].as_u64().unwrap() as usize, f.len());
    }
    // POI-class breakdown for record metrics, division breakdown for fluidity
    for (m, classes) in [("vibrancy", 10), ("diversity", 10), ("fluidity", 16), ("commutation", 16)] {
        let breakdown = body["breakdown"][m].as_array().unwrap();
        assert_eq!(breakdown.len(), classes, "{m}");
        let total: f64 = breakdown.iter().map(|v| v.as_f64().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
}

#[tokio::test]
async fn division_selection_equals_its_polygon() {
    let divisions = city_dir("alpha").load_divisions().unwrap();
    for id in ["D00", "D05", "S013"] {
        let d = divisions.get(id).unwrap();
        let coords: Vec<Vec<[f64; 2]>> = d.polygons[0].rings().cloned().collect();
        let by_id = post_json(
            "/region/stats",
            &json!({"city": "alpha", "filter": "noon", "selection": {"kind": "division", "id": id}}),
        )
        .await;
        let by_poly = post_json(
            "/region/stats",
            &json!({"city": "alpha", "filter": "noon", "selection": {"kind": "polygon", "coordinates": coords}}),
        )
        .await;
        assert_eq!(by_id.0, StatusCode::OK);
        assert_eq!(by_id.1, by_poly.1);
    }
    let (s, body) =
        post_json("/region/stats", &json!({"city": "alpha", "selection": {"kind": "division", "id": "ZZ"}})).await;
    assert_error(s, &body, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn invalid_geometry_is_rejected() {
    for sel in [
        json!({"kind": "rect", "bbox": [116.3, 39.9, 116.2, 39.95]}),
        json!({"kind": "rect", "bbox": [0.0, 0.0, 1.0, 1.0]}),
        json!({"kind": "polygon", "coordinates": [[[116.3, 39.9], [116.31, 39.91]]]}),
        json!({"kind": "polygon", "coordinates": [[[116.3, 39.9], [116.31, 39.91], [116.32, 39.92], [116.3, 39.9]]]}),
        json!({"kind": "polygon", "coordinates": []}),
        json!({"kind": "iso_point", "metric": "vibrancy", "lon": 0.0, "lat": 0.0, "tolerance": 0.1}),
        json!({"kind": "iso_point", "metric": "vibrancy", "lon": 116.3, "lat": 39.9, "tolerance": -1.0}),
        json!({"kind": "circle"}),
    ] {
        let (s, body) = post_json("/region/stats", &json!({"city": "alpha", "selection": sel})).await;
        assert_error(s, &body, StatusCode::UNPROCESSABLE_ENTITY);
    }
}

#[tokio::test]
async fn iso_point_matches_a_linear_scan() {
    let l = lattice("alpha");
    let field = city_dir("alpha").load_field(MetricKind::Diversity, TimeFilter::All).unwrap();
    for (i, (cell, stat)) in field.cells.iter().enumerate().step_by(field.len() / 6 + 1) {
        let (lon, lat) = l.center(*cell);
        let tol = [0.0, 0.01, 0.05, 0.2, 1.0][i % 5];
        let sel = json!({"kind": "iso_point", "metric": "diversity", "lon": lon, "lat": lat, "tolerance": tol});
        let (s, body) =
            post_json("/region/stats", &json!({"city": "alpha", "selection": sel, "metrics": ["diversity"]})).await;
        assert_eq!(s, StatusCode::OK);
        let expected: Vec<Value> = field
            .cells
            .iter()
            .filter(|(_, s2)| (s2.mean - stat.mean).abs() <= tol)
            .map(|(c, _)| json!({"col": c.col, "row": c.row}))
            .collect();
        assert_eq!(body["iso"]["cells"], Value::Array(expected.clone()));
        assert_eq!(body["iso"]["value"].as_f64().unwrap(), stat.mean);
        assert_eq!(body["cells"].as_u64().unwrap() as usize, expected.len());
    }
}

#[tokio::test]
async fn starplot_normalizes_region_stats() {
    let (s, body) = get_json("/starplot?city=alpha&level=DIV&filter=all").await;
    assert_eq!(s, StatusCode::OK);
    let regions = body.as_array().unwrap();
    assert_eq!(regions.len(), 16);
    let axes = ["fluidity", "vibrancy", "commutation", "diversity", "density"];
    let mut raw: Vec<Vec<Option<f64>>> = vec![Vec::new(); 5];
    for r in regions {
        let (_, stats) =
            post_json("/region/stats", &json!({"city": "alpha", "selection": {"kind": "division", "id": r["id"]}}))
                .await;
        for (k, a) in axes.iter().enumerate() {
            let v = stats["metrics"][a]["mean"].as_f64();
            match (r["raw"][a].as_f64(), v) {
                (Some(x), Some(y)) => assert!((x - y).abs() <= 1e-6),
                (x, y) => assert_eq!(x, y),
            }
            raw[k].push(v);
        }
    }
    for (k, a) in axes.iter().enumerate() {
        let present = raw[k].iter().flatten();
        let lo = present.clone().cloned().fold(f64::INFINITY, f64::min);
        let hi = present.cloned().fold(f64::NEG_INFINITY, f64::max);
        for (r, v) in regions.iter().zip(&raw[k]) {
            let got =
                if *a == "density" { r["density_norm"].as_f64().unwrap() } else { r["axes"][a].as_f64().unwrap() };
            let expected = match v {
                None => 0.0,
                Some(v) if hi > lo => (v - lo) / (hi - lo),
                Some(_) => 0.5,
            };
            assert!((0.0..=1.0).contains(&got));
            assert!((got - expected).abs() <= 1e-6, "{a}");
        }
    }
    let (s, body) = get_json("/starplot?city=alpha&level=WARD").await;
    assert_error(s, &body, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn compare_bundles() {
    let (s, body) = get_json("/compare?mode=time&city=alpha&metric=vibrancy").await;
    assert_eq!(s, StatusCode::OK);
    let filters: Vec<&str> = body["views"].as_array().unwrap().iter().map(|v| v["filter"].as_str().unwrap()).collect();
    assert_eq!(filters, ["morning", "forenoon", "noon", "afternoon", "evening", "night"]);
    let (_, body) = get_json("/compare?mode=time&city=alpha&metric=vibrancy&filters=night,morning").await;
    let filters: Vec<&str> = body["views"].as_array().unwrap().iter().map(|v| v["filter"].as_str().unwrap()).collect();
    assert_eq!(filters, ["morning", "night"]);

    let (s, body) = get_json("/compare?mode=week&city=alpha&metric=density").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body["views"].as_array().unwrap().len(), 2);
    let shared = body["shared_range"].as_array().unwrap();
    for v in body["views"].as_array().unwrap() {
        assert!(v["field_range"][0].as_f64() >= shared[0].as_f64());
        let (s, bytes) = get(v["raster"].as_str().unwrap()).await;
        assert_eq!(s, StatusCode::OK);
        assert!(decode_raster(&bytes).is_some());
    }

    let (s, body) = get_json("/compare?mode=city&cities=alpha,beta&metric=fluidity&filter=weekend").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body["views"][1]["city"], "beta");

    for uri in [
        "/compare?mode=city&cities=alpha,beta,alpha,beta,alpha&metric=fluidity",
        "/compare?mode=city&cities=alpha&metric=fluidity",
        "/compare?mode=time&city=alpha&metric=vibrancy&filters=morning",
        "/compare?mode=time&city=alpha&metric=vibrancy&filters=morning,weekday",
        "/compare?mode=week&city=alpha&metric=vibrancy&filters=weekday",
        "/compare?mode=sideways&city=alpha&metric=vibrancy",
    ] {
        let (s, body) = get_json(uri).await;
        assert_error(s, &body, StatusCode::UNPROCESSABLE_ENTITY);
    }
    let (s, body) = get_json("/compare?mode=city&cities=alpha,atlantis&metric=fluidity").await;
    assert_error(s, &body, StatusCode::NOT_FOUND);
}

fn poi_ids(body: &Value) -> BTreeSet<String> {
    body.as_array().unwrap().iter().map(|p| p["id"].as_str().unwrap().to_string()).collect()
}

#[tokio::test]
async fn pois_follow_the_metric_quantile() {
    let dir = city_dir("alpha");
    let pois = dir.load_pois().unwrap();
    let l = lattice("alpha");
    let field = dir.load_field(MetricKind::Density, TimeFilter::All).unwrap();
    let mut means: Vec<f64> = field.means().collect();
    means.sort_by(|a, b| b.total_cmp(a));
    for class in [1u8, 6, 8] {
        let all: BTreeSet<String> = pois.iter().filter(|p| u8::from(p.class) == class).map(|p| p.id.clone()).collect();
        let (_, body) = get_json(&format!("/pois?city=alpha&class={class}&metric=density&q=1.0")).await;
        assert_eq!(poi_ids(&body), all);
        for q in [0.0, 0.1, 0.35, 0.9] {
            let threshold = means[(q * (means.len() - 1) as f64).floor() as usize];
            let expected: BTreeSet<String> = pois
                .iter()
                .filter(|p| u8::from(p.class) == class)
                .filter(|p| l.assign(p.lon, p.lat).and_then(|c| field.get(c)).is_some_and(|s| s.mean >= threshold))
                .map(|p| p.id.clone())
                .collect();
            let (s, body) = get_json(&format!("/pois?city=alpha&class={class}&metric=density&q={q}")).await;
            assert_eq!(s, StatusCode::OK);
            assert_eq!(poi_ids(&body), expected, "class {class} q {q}");
        }
    }
    for uri in
        ["/pois?city=alpha&class=10", "/pois?city=alpha&class=-1", "/pois?city=alpha", "/pois?city=alpha&class=1&q=1.5"]
    {
        let (s, body) = get_json(uri).await;
        assert_error(s, &body, StatusCode::UNPROCESSABLE_ENTITY);
    }
}

#[tokio::test]
async fn divisions_come_back_as_geojson() {
    let (s, body) = get_json("/divisions?city=alpha&level=DIV").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body["type"], "FeatureCollection");
    let features = body["features"].as_array().unwrap();
    assert_eq!(features.len(), 16);
    assert!(features.iter().all(|f| f["properties"]["level"] == "DIV" && f["properties"]["gdp"].is_number()));
    let (_, all) = get_json("/divisions?city=alpha").await;
    assert_eq!(all["features"].as_array().unwrap().len(), 16 + 64);
    let (s, body) = get_json("/nowhere").await;
    assert_error(s, &body, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn histogram_region_and_starplot_agree() {
    let b = city_dir("beta").load_config().unwrap().bbox;
    for filter in ["all", "afternoon", "weekend"] {
        let sel = json!({"kind": "rect", "bbox": [b.lon_min, b.lat_min, b.lon_max, b.lat_max]});
        let (_, stats) = post_json("/region/stats", &json!({"city": "beta", "filter": filter, "selection": sel})).await;
        let (_, stars) = get_json(&format!("/starplot?city=beta&filter={filter}")).await;
        for m in MetricKind::ALL {
            let (_, h) = get_json(&format!("/histogram?city=beta&metric={m}&filter={filter}&bins=13")).await;
            let binned: u64 = h["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
            assert_eq!(binned, stats["metrics"][m.as_str()]["cells"].as_u64().unwrap());
            assert_eq!(h["cells"].as_u64().unwrap(), binned);
            let integral: f64 = h["densities"].as_array().unwrap().iter().map(|d| d.as_f64().unwrap()).sum::<f64>()
                * h["bin_width"].as_f64().unwrap();
            assert!((integral - 1.0).abs() < 1e-6);
            // division means weighted back up give the city mean
            if m != MetricKind::Density {
                let (mut weighted, mut n) = (0.0, 0u64);
                for r in stars.as_array().unwrap() {
                    let (_, d) = post_json(
                        "/region/stats",
                        &json!({"city": "beta", "filter": filter, "metrics": [m.as_str()], "selection": {"kind": "division", "id": r["id"]}}),
                    )
                    .await;
                    if let Some(s) = d["metrics"][m.as_str()].as_object() {
                        assert!((r["raw"][m.as_str()].as_f64().unwrap() - s["mean"].as_f64().unwrap()).abs() <= 1e-6);
                        weighted += s["mean"].as_f64().unwrap() * s["count"].as_f64().unwrap();
                        n += s["count"].as_u64().unwrap();
                    }
                }
                let city_mean = stats["metrics"][m.as_str()]["mean"].as_f64().unwrap();
                assert!((weighted / n as f64 - city_mean).abs() <= 1e-6, "{m:?} {filter}");
            }
        }
    }
}
