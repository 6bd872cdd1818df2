use std::collections::{BTreeMap, HashMap};

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_xoshiro::SplitMix64;
use uf_core::entropy::{
    build_user_vector, record_entropy, shannon_entropy, user_entropy, Basis, FeatureRow, MetricKind, TimeBand,
    TimeFilter,
};
use uf_core::field::{compute_metric_fields, FieldJob, MetricContext, PScope};
use uf_core::geo::{grid_poi_profiles, Level};
use uf_core::ingest::{filter_and_discretize, parse_record, CleanRecord, Discretized};
use uf_core::synth::{generate_city, generate_records, SyntheticCity, SyntheticCitySpec};
use uf_core::{Lattice, MetricField, Profiles};

fn prob_vector(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.0..1.0f64], m).prop_filter_map("all zero", |w| {
        let s: f64 = w.iter().sum();
        (s > 0.0).then(|| w.iter().map(|v| v / s).collect())
    })
}

fn direct_entropy(p: &[f64]) -> f64 {
    let mut h = 0.0;
    for &v in p {
        if v > 0.0 {
            h -= v * v.ln();
        }
    }
    h
}

/// q rows that each sum to one.
fn rows(m: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prob_vector(m), 1..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn entropy_in_range_and_matches_direct_sum(p in (1usize..16).prop_flat_map(prob_vector)) {
        let h = shannon_entropy(&p);
        prop_assert!((h - direct_entropy(&p)).abs() <= 1e-12);
        prop_assert!(h >= 0.0 && h <= (p.len() as f64).ln() + 1e-12);
    }

    #[test]
    fn record_entropies_decompose_into_user_entropy(q in rows(10)) {
        let v = build_user_vector("1", Basis::Poi, 10, q.iter().map(|r| FeatureRow::Dense(r.as_slice())));
        let h_p = user_entropy(&v).unwrap();
        let sum: f64 = q.iter().map(|r| record_entropy(r, &v.p).unwrap()).sum();
        let n = q.len() as f64;
        prop_assert!((sum - n * h_p).abs() <= 1e-9 * n * h_p + 1e-12);
        // Gibbs: mean record entropy is a cross-entropy, never below H_p
        prop_assert!(sum / n >= h_p - 1e-12);
    }

    #[test]
    fn f32_entropy_tracks_f64(p in (2usize..12).prop_flat_map(prob_vector)) {
        let p32: Vec<f32> = p.iter().map(|&v| v as f32).collect();
        prop_assert!((f64::from(shannon_entropy(&p32)) - shannon_entropy(&p)).abs() < 1e-5);
    }
}

struct Fixture {
    city: SyntheticCity,
    lattice: Lattice,
    profiles: Profiles,
    records: Vec<CleanRecord>,
}

fn fixture(seed: u64) -> Fixture {
    let mut spec = SyntheticCitySpec::with_seed(seed);
    for (k, v) in spec.users_per_archetype.iter_mut() {
        *v = if k == "TOURIST" { 20 } else { 2 };
    }
    let city = generate_city(&spec).unwrap();
    let lines = generate_records(&spec, &city).unwrap().lines;
    let records = lines
        .iter()
        .enumerate()
        .filter_map(|(i, l)| match filter_and_discretize(parse_record(l, i as u64).unwrap(), spec.epoch) {
            Discretized::Kept(r) => Some(r),
            _ => None,
        })
        .collect();
    let lattice = Lattice::new(&city.config).unwrap();
    let profiles = grid_poi_profiles(&lattice, &city.pois, &city.config);
    Fixture { city, lattice, profiles, records }
}

impl Fixture {
    fn ctx(&self) -> MetricContext<'_, f64> {
        MetricContext {
            lattice: &self.lattice,
            profiles: &self.profiles,
            divisions: self.city.divisions.layer(Level::Div),
            epoch: self.city.config.epoch,
            p_scope: PScope::Filtered,
        }
    }

    fn fields(&self, shards: &[Vec<CleanRecord>], jobs: &[FieldJob], workers: usize) -> Vec<MetricField> {
        compute_metric_fields(shards, jobs, &self.ctx(), workers).unwrap().into_iter().map(|o| o.field).collect()
    }
}

/// Unsharded reference: group by device, build p from the filtered
/// records, stamp per-record values, average per cell.
fn naive_field(fx: &Fixture, metric: MetricKind, filter: TimeFilter) -> BTreeMap<(u32, u32), (f64, u32)> {
    let layer = fx.city.divisions.layer(Level::Div);
    let epoch = fx.city.config.epoch;
    let mut by_user: BTreeMap<&str, Vec<&CleanRecord>> = BTreeMap::new();
    for r in &fx.records {
        by_user.entry(r.mid.as_str()).or_default().push(r);
    }
    let mut sums: BTreeMap<(u32, u32), (f64, u32)> = BTreeMap::new();
    for recs in by_user.values() {
        let mine: Vec<_> = recs
            .iter()
            .filter(|r| filter.matches(r.timeslot, epoch))
            .filter_map(|r| fx.lattice.assign(r.lon, r.lat).map(|c| (*r, c)))
            .collect();
        let row = |r: &CleanRecord, c| -> Option<Vec<f64>> {
            match metric.basis() {
                Some(Basis::Poi) => {
                    let q = fx.profiles.row(c).to_vec();
                    q.iter().any(|v| *v > 0.0).then_some(q)
                }
                Some(Basis::Div) => layer.division_of(r.lon, r.lat).map(|d| {
                    let mut v = vec![0.0; layer.len()];
                    v[d] = 1.0;
                    v
                }),
                None => Some(vec![1.0]),
            }
        };
        let rows: Vec<(uf_core::Cell, Vec<f64>)> =
            mine.iter().filter_map(|(r, c)| row(r, *c).map(|q| (*c, q))).collect();
        if metric == MetricKind::Density {
            for (c, _) in &rows {
                sums.entry((c.col, c.row)).or_default().1 += 1;
            }
            continue;
        }
        if rows.is_empty() {
            continue;
        }
        let m = rows[0].1.len();
        let mut p = vec![0.0; m];
        for (_, q) in &rows {
            for k in 0..m {
                p[k] += q[k] / rows.len() as f64;
            }
        }
        let h_p = direct_entropy(&p);
        for (c, q) in &rows {
            let v = if metric.is_record_entropy() {
                -(0..m).filter(|&k| q[k] > 0.0).map(|k| q[k] * p[k].ln()).sum::<f64>()
            } else {
                h_p
            };
            let e = sums.entry((c.col, c.row)).or_default();
            e.0 += v;
            e.1 += 1;
        }
    }
    sums.into_iter()
        .map(|(k, (s, n))| (k, (if metric == MetricKind::Density { f64::from(n) } else { s / f64::from(n) }, n)))
        .collect()
}

fn shards_of(records: &[CleanRecord], n: usize) -> Vec<Vec<CleanRecord>> {
    let mut shards = vec![Vec::new(); n];
    for r in records {
        shards[uf_core::ingest::shard_index(&r.mid, n)].push(r.clone());
    }
    shards
}

#[test]
fn sharded_fields_match_the_naive_reference() {
    let fx = fixture(77);
    assert!((4_000..7_000).contains(&fx.records.len()), "{} records", fx.records.len());
    let filters = [
        TimeFilter::All,
        TimeFilter::TimeOfDay(TimeBand::Evening),
        TimeFilter::DayOfWeek(uf_core::entropy::DayType::Weekend),
    ];
    let jobs: Vec<FieldJob> = MetricKind::ALL.iter().flat_map(|&m| filters.iter().map(move |&f| (m, f))).collect();
    let fields = fx.fields(&shards_of(&fx.records, 16), &jobs, 4);
    for (field, &(metric, filter)) in fields.iter().zip(&jobs) {
        let oracle = naive_field(&fx, metric, filter);
        assert_eq!(field.cells.len(), oracle.len(), "{metric:?} {filter:?}");
        for (cell, stat) in &field.cells {
            let (mean, count) = oracle[&(cell.col, cell.row)];
            assert_eq!(stat.count, count);
            assert!((stat.mean - mean).abs() < 1e-9, "{metric:?} {filter:?} {cell:?}: {} vs {mean}", stat.mean);
        }
    }
}

#[test]
fn shuffling_records_and_shards_keeps_every_mean() {
    let fx = fixture(78);
    let jobs: Vec<FieldJob> = MetricKind::ALL.iter().map(|&m| (m, TimeFilter::All)).collect();
    let base = fx.fields(&shards_of(&fx.records, 8), &jobs, 1);
    let mut rng = SplitMix64::seed_from_u64(5);
    let mut shuffled = fx.records.clone();
    shuffled.shuffle(&mut rng);
    // devices spread over a different shard count, in a different order
    let mut shards = shards_of(&shuffled, 5);
    shards.reverse();
    let other = fx.fields(&shards, &jobs, 3);
    for (a, b) in base.iter().zip(&other) {
        assert_eq!(a.cells.keys().collect::<Vec<_>>(), b.cells.keys().collect::<Vec<_>>());
        for (x, y) in a.cells.values().zip(b.cells.values()) {
            assert_eq!(x.count, y.count);
            assert!((x.mean - y.mean).abs() <= 1e-9);
        }
    }
}

#[test]
fn worker_count_does_not_change_a_single_bit() {
    let fx = fixture(79);
    let jobs: Vec<FieldJob> = MetricKind::ALL.iter().map(|&m| (m, TimeFilter::All)).collect();
    let shards = shards_of(&fx.records, 16);
    let one = fx.fields(&shards, &jobs, 1);
    let eight = fx.fields(&shards, &jobs, 8);
    for (a, b) in one.iter().zip(&eight) {
        assert_eq!(a.to_cache_bytes(), b.to_cache_bytes());
    }
}

#[test]
fn time_filters_nest_and_conserve_records() {
    let fx = fixture(80);
    let shards = shards_of(&fx.records, 4);
    let filters = TimeFilter::every();
    for metric in MetricKind::ALL {
        let jobs: Vec<FieldJob> = filters.iter().map(|&f| (metric, f)).collect();
        let fields = fx.fields(&shards, &jobs, 2);
        let by_filter: HashMap<TimeFilter, &MetricField> = filters.iter().copied().zip(fields.iter()).collect();
        let all = by_filter[&TimeFilter::All];
        for (cell, stat) in &all.cells {
            let bands: u32 = TimeBand::ALL
                .iter()
                .filter_map(|&b| by_filter[&TimeFilter::TimeOfDay(b)].get(*cell))
                .map(|s| s.count)
                .sum();
            assert_eq!(stat.count, bands, "{metric:?} {cell:?}");
        }
        let days: u64 = [uf_core::entropy::DayType::Weekday, uf_core::entropy::DayType::Weekend]
            .iter()
            .map(|&d| by_filter[&TimeFilter::DayOfWeek(d)].total_count())
            .sum();
        assert_eq!(days, all.total_count());
        if metric == MetricKind::Density {
            assert_eq!(all.total_count(), fx.records.len() as u64);
            for f in &fields {
                let expected = fx.records.iter().filter(|r| f.filter.matches(r.timeslot, fx.city.config.epoch)).count();
                assert_eq!(f.total_count(), expected as u64);
            }
        }
    }
}
