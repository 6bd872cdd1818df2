use chrono::NaiveDate;
use proptest::prelude::*;
use uf_core::entropy::{MetricKind, TimeFilter};
use uf_core::field::CellStat;
use uf_core::raster::{apply_color_filter, rasterize, rasterize_field, ColorFilter, DiffusionParams, Seed, Viewport};
use uf_core::{BBox, Cell, CityConfig, Lattice, MetricField};

/// O(pixels · seeds) renderer.
fn brute(seeds: &[Seed<f64>], w: u32, h: u32, r: f64) -> Vec<f64> {
    let mut out = vec![0.0; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let (cx, cy) = (f64::from(x) + 0.5, f64::from(y) + 0.5);
            out[(y * w + x) as usize] = seeds
                .iter()
                .map(|s| {
                    let d = ((cx - s.x).powi(2) + (cy - s.y).powi(2)).sqrt();
                    if d < r {
                        s.value * (1.0 - d / r)
                    } else {
                        0.0
                    }
                })
                .sum();
        }
    }
    out
}

fn seeds(max: usize, w: f64, h: f64) -> impl Strategy<Value = Vec<Seed<f64>>> {
    prop::collection::vec((-10.0..w + 10.0, -10.0..h + 10.0, 0.0..5.0f64), 0..=max)
        .prop_map(|v| v.into_iter().map(|(x, y, value)| Seed { x, y, value }).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_brute_force(s in seeds(20, 70.0, 45.0), r in 0.5..25.0f64) {
        let raster = rasterize(&s, 70, 45, r);
        let oracle = brute(&s, 70, 45, r);
        for (a, b) in raster.values.iter().zip(&oracle) {
            prop_assert!((a - b).abs() <= 1e-6);
        }
        let (lo, hi) = raster.value_range;
        prop_assert!(raster.values.iter().all(|v| *v >= lo && *v <= hi));
    }

    #[test]
    fn superposition_is_linear(a in seeds(10, 40.0, 40.0), b in seeds(10, 40.0, 40.0), r in 1.0..15.0f64) {
        let both: Vec<Seed<f64>> = a.iter().chain(&b).copied().collect();
        let (ra, rb, rab) = (rasterize(&a, 40, 40, r), rasterize(&b, 40, 40, r), rasterize(&both, 40, 40, r));
        for i in 0..rab.values.len() {
            prop_assert!((rab.values[i] - ra.values[i] - rb.values[i]).abs() <= 1e-6);
        }
    }

    #[test]
    fn cone_volume_is_close_to_closed_form(r in 10.0..40.0f64, v in 0.1..10.0f64, fx in 0.0..1.0f64, fy in 0.0..1.0f64) {
        let size = (2.0 * r) as u32 + 10;
        let s = [Seed { x: f64::from(size) / 2.0 + fx, y: f64::from(size) / 2.0 + fy, value: v }];
        let sum: f64 = rasterize(&s, size, size, r).values.iter().sum();
        let cone = v * std::f64::consts::PI * r * r / 3.0;
        prop_assert!((sum - cone).abs() / cone < 0.02, "sum {} cone {}", sum, cone);
    }

    #[test]
    fn colors_stay_transparent_below_t_min(s in seeds(8, 30.0, 30.0), t_min in 0.0..3.0f64, span in 0.0..3.0f64, reversed in any::<bool>()) {
        let raster = rasterize(&s, 30, 30, 8.0);
        let filter = ColorFilter { t_min, t_max: t_min + span, reversed };
        let img = apply_color_filter(&raster, &filter, 0.7);
        for (i, v) in raster.values.iter().enumerate() {
            let alpha = img.pixels[4 * i + 3];
            prop_assert_eq!(alpha == 0, *v < t_min);
        }
    }
}

#[test]
fn single_seed_endpoints_are_exact() {
    let r = rasterize(&[Seed { x: 20.5, y: 20.5, value: 3.25 }], 41, 41, 10.0_f64);
    assert_eq!(r.get(20, 20), 3.25);
    assert_eq!(r.get(30, 20), 0.0);
    assert_eq!(r.get(20, 10), 0.0);
}

fn field_city() -> (Lattice, MetricField) {
    let cfg =
        CityConfig::new("t", BBox::new(116.30, 39.90, 116.34, 39.93), NaiveDate::from_ymd_opt(2015, 7, 1).unwrap());
    let l = Lattice::new(&cfg).unwrap();
    let mut f = MetricField::empty(MetricKind::Vibrancy, TimeFilter::All, l.cols, l.rows);
    for (i, c) in l.cells().enumerate().filter(|(i, _)| i % 7 == 0) {
        f.cells.insert(c, CellStat { mean: 0.5 + (i % 5) as f64, count: 1 });
    }
    (l, f)
}

#[test]
fn whole_pixel_pan_shifts_the_raster() {
    let (l, f) = field_city();
    let view = Viewport::new(BBox::new(116.305, 39.905, 116.325, 39.92), 120, 100);
    let params = DiffusionParams { radius_px: 9.0, adaptive: false };
    let a = rasterize_field(&f, &l, &view, &params);
    let (dx, dy) = (7, -4);
    let b = rasterize_field(&f, &l, &view.shifted(dx, dy), &params);
    for y in 0..100i32 {
        for x in 0..120i32 {
            let (sx, sy) = (x + dx, y + dy);
            if (0..120).contains(&sx) && (0..100).contains(&sy) {
                let (va, vb) = (a.get(sx as u32, sy as u32), b.get(x as u32, y as u32));
                assert!((va - vb).abs() < 1e-6, "({x},{y}): {va} vs {vb}");
            }
        }
    }
}

#[test]
fn default_radius_is_three_grid_radii() {
    let (l, _) = field_city();
    let view = Viewport::new(l.bbox, 400, 300);
    let p = DiffusionParams::default_for(&l, &view);
    let meters = p.radius_px / view.pixels_per_meter(l.frame);
    assert!((meters - 300.0).abs() < 1e-9);
}

#[test]
fn seeds_just_outside_the_view_still_reach_it() {
    let (l, mut f) = field_city();
    f.cells.clear();
    let cell = Cell::new(0, 0);
    f.cells.insert(cell, CellStat { mean: 2.0, count: 1 });
    let (lon, lat) = l.center(cell);
    // the cell center sits 3 px left of the view
    let view = Viewport::new(BBox::new(116.30, 39.90, 116.31, 39.91), 100, 100);
    let px = view.bbox.width() / 100.0;
    let view = Viewport { bbox: BBox::new(lon + 3.0 * px, lat - 0.005, lon + 103.0 * px, lat + 0.005), ..view };
    let r = rasterize_field(&f, &l, &view, &DiffusionParams { radius_px: 10.0, adaptive: false });
    assert!(r.get(0, 50) > 0.0);
}
