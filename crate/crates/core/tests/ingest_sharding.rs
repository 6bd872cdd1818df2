use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Cursor;
use std::path::Path;

use chrono::NaiveDate;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use uf_core::ingest::{
    parse_record, read_shard, shard_by_device, shard_index, CleansingWindow, IngestOptions, ShardSet, MANIFEST_FILE,
};

fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(2015, 7, 1).unwrap()
}

/// Random input rows with a sprinkling of coarse sources and malformed lines.
fn random_input(seed: u64, n: usize, devices: u32) -> String {
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut out = String::with_capacity(n * 48);
    for _ in 0..n {
        let roll: f64 = rng.random();
        if roll < 0.01 {
            out.push_str("not,a,record\n");
            continue;
        }
        let src = match rng.random_range(0..20) {
            0 => "BASESTATION",
            1 => "IP",
            2..=9 => "WIFI",
            _ => "GPS",
        };
        let (h, m, d) = (rng.random_range(0..24), rng.random_range(0..60), rng.random_range(1..=28));
        let lon = 116.2 + rng.random::<f64>() * 0.2;
        let lat = 39.8 + rng.random::<f64>() * 0.16;
        let mid = 13_800_000_000u64 + u64::from(rng.random_range(0..devices));
        out.push_str(&format!("{h:02}:{m:02}/07/{d:02}/2015,{lon:.6},{lat:.6},{mid},{src}\n"));
    }
    out
}

fn run(input: &str, dir: &Path, shards: usize, workers: usize) -> uf_core::ingest::IngestManifest {
    let mut opts = IngestOptions::new(shards, epoch());
    opts.workers = workers;
    opts.dataset_days = Some(28);
    opts.flush_bytes = 4096;
    shard_by_device(Cursor::new(input.as_bytes()), dir, &opts).unwrap()
}

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn serial_and_eight_writers_produce_identical_shards() {
    let n = 1_000_000;
    let input = random_input(99, n, 20_000);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ma = run(&input, a.path(), 16, 1);
    let mb = run(&input, b.path(), 16, 8);
    assert_eq!(ma, mb);
    assert_eq!(dir_bytes(a.path()), dir_bytes(b.path()));
    assert!(ma.is_total());
}

#[test]
fn manifest_digests_match_shard_bytes() {
    let input = random_input(3, 5_000, 300);
    let dir = tempfile::tempdir().unwrap();
    run(&input, dir.path(), 4, 2);
    let set = ShardSet::open(dir.path()).unwrap();
    for (info, path) in set.manifest.shards.iter().zip(set.shard_paths()) {
        assert_eq!(info.sha256, uf_core::digest::sha256_file(&path).unwrap());
    }
    assert!(dir.path().join(MANIFEST_FILE).exists());
}

#[test]
fn one_shard_holds_everything() {
    let input = random_input(4, 2_000, 50);
    let dir = tempfile::tempdir().unwrap();
    let m = run(&input, dir.path(), 1, 3);
    assert_eq!(m.shards.len(), 1);
    assert_eq!(m.shards[0].records, m.retained_records);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn totality_and_device_locality(seed in any::<u64>(), n in 0usize..1500, devices in 1u32..60, shards in 1usize..9, workers in 1usize..5) {
        let input = random_input(seed, n, devices);
        let dir = tempfile::tempdir().unwrap();
        let m = run(&input, dir.path(), shards, workers);
        prop_assert_eq!(m.input_lines, n as u64);
        prop_assert_eq!(
            m.input_lines,
            m.dropped_source + m.rejected_total() + m.removed_by_cleansing + m.shards.iter().map(|s| s.records).sum::<u64>()
        );
        let set = ShardSet::open(dir.path()).unwrap();
        let mut seen: HashMap<String, usize> = HashMap::new();
        for (i, path) in set.shard_paths().iter().enumerate() {
            let recs = read_shard(path).unwrap();
            prop_assert!(recs.windows(2).all(|w| w[0].mid <= w[1].mid));
            for r in recs {
                prop_assert_eq!(shard_index(&r.mid, shards), i);
                prop_assert_eq!(*seen.entry(r.mid.clone()).or_insert(i), i);
            }
        }
        // rejected lines are exactly the ones parse_record refuses
        let parsed = input.lines().enumerate().filter(|(i, l)| parse_record(l, *i as u64).is_ok()).count() as u64;
        prop_assert_eq!(parsed, n as u64 - m.rejected_total());
    }

    #[test]
    fn cleansing_is_monotone(base in 1u64..5000, extra in 0u64..5000, days in 1u32..120) {
        let w = CleansingWindow::default();
        let months = uf_core::ingest::months_spanned(days);
        let above = |n: u64| n as f64 / months > w.max_monthly;
        if above(base) {
            prop_assert!(!w.retains(base + extra, months));
        }
    }
}
