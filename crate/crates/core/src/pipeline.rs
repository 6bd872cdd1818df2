//! File-to-file stages over a [`CityDir`]. Every stage writes
//! `<stage>.manifest.json` with its parameters and the digests of what it
//! read and wrote, so a manifest names the exact outputs of the stage before.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::digest::sha256_file;
use crate::entropy::{MetricKind, TimeFilter};
use crate::error::{IoContext, Result};
use crate::field::{compute_metric_fields, FieldJob, FieldStats, MetricContext, PScope};
use crate::geo::{grid_poi_profiles, Lattice, Level};
use crate::ingest::{shard_by_device, IngestManifest, IngestOptions, ShardSet, MANIFEST_FILE};
use crate::store::CityDir;
use crate::synth::{generate_city, generate_records, SyntheticCitySpec};
use crate::Profiles;

pub const RECORDS_FILE: &str = "records.csv";
pub const USERS_FILE: &str = "users.csv";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    /// Relative to the city directory when inside it.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: String,
    pub params: Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub elapsed_ms: u64,
}

impl StageManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).at(path)?;
        serde_json::from_slice(&bytes).map_err(|e| crate::Error::data(path.display().to_string(), e.to_string()))
    }

    pub fn output(&self, path: &str) -> Option<&FileDigest> {
        self.outputs.iter().find(|d| d.path == path)
    }
}

fn digest(city: &CityDir, path: &Path) -> Result<FileDigest> {
    let shown = path.strip_prefix(&city.root).unwrap_or(path);
    Ok(FileDigest { path: shown.to_string_lossy().replace('\\', "/"), sha256: sha256_file(path)? })
}

fn digests(city: &CityDir, paths: &[PathBuf]) -> Result<Vec<FileDigest>> {
    paths.iter().filter(|p| p.exists()).map(|p| digest(city, p)).collect()
}

fn finish(
    city: &CityDir,
    stage: &str,
    params: Value,
    inputs: &[PathBuf],
    outputs: &[PathBuf],
    started: Instant,
) -> Result<StageManifest> {
    let m = StageManifest {
        stage: stage.to_string(),
        params,
        inputs: digests(city, inputs)?,
        outputs: digests(city, outputs)?,
        elapsed_ms: started.elapsed().as_millis() as u64,
    };
    let path = city.manifest_path(stage);
    let text = serde_json::to_string_pretty(&m).expect("manifest serializes");
    fs::write(&path, text + "\n").at(&path)?;
    Ok(m)
}

#[derive(Debug, Clone)]
pub struct SynthSummary {
    pub users: usize,
    pub records: usize,
    pub manifest: StageManifest,
}

/// Writes the city files, `records.csv` and `users.csv` into `city`.
pub fn run_synth(spec: &SyntheticCitySpec, city: &CityDir) -> Result<SynthSummary> {
    let started = Instant::now();
    spec.validate()?;
    let generated = generate_city(spec)?;
    generated.write_to(&city.root)?;
    let records = generate_records(spec, &generated)?;
    let rec_path = city.root.join(RECORDS_FILE);
    let mut w = BufWriter::new(File::create(&rec_path).at(&rec_path)?);
    records.write_to(&mut w).and_then(|_| w.flush()).at(&rec_path)?;
    let users_path = city.root.join(USERS_FILE);
    let mut w = BufWriter::new(File::create(&users_path).at(&users_path)?);
    records.write_users(&mut w).and_then(|_| w.flush()).at(&users_path)?;
    let outputs =
        [city.config_path(), city.pois_path(), city.divisions_path(), city.demographics_path(), rec_path, users_path];
    let params = serde_json::to_value(spec).expect("spec serializes");
    let manifest = finish(city, "synth", params, &[], &outputs, started)?;
    Ok(SynthSummary { users: records.users.len(), records: records.lines.len(), manifest })
}

/// Shards `input` into `out` (normally `city/shards`).
pub fn run_ingest(city: &CityDir, input: &Path, out: &Path, shards: usize, workers: usize) -> Result<IngestManifest> {
    let started = Instant::now();
    let cfg = city.load_config()?;
    let mut opts = IngestOptions::new(shards, cfg.epoch);
    opts.workers = workers.max(1);
    opts.dataset_days = cfg.dataset_days;
    opts.window = cfg.cleansing;
    let reader = BufReader::with_capacity(1 << 20, File::open(input).at(input)?);
    let dir = out.to_path_buf();
    let manifest = shard_by_device(reader, &dir, &opts)?;
    let mut outputs = vec![dir.join(MANIFEST_FILE)];
    outputs.extend(ShardSet::open(&dir)?.shard_paths());
    let params =
        json!({ "shards": shards, "workers": opts.workers, "epoch": cfg.epoch, "dataset_days": manifest.dataset_days });
    finish(city, "ingest", params, &[input.to_path_buf(), city.config_path()], &outputs, started)?;
    Ok(manifest)
}

/// Computes and caches the per-cell POI-class profiles.
pub fn run_grid_profiles(city: &CityDir) -> Result<Profiles> {
    let started = Instant::now();
    let cfg = city.load_config()?;
    let pois = city.load_pois()?;
    let lattice = Lattice::new(&cfg)?;
    let grid: Profiles = grid_poi_profiles(&lattice, &pois, &cfg);
    let path = city.profiles_path();
    let mut w = BufWriter::new(File::create(&path).at(&path)?);
    grid.write_cache(&mut w).and_then(|_| w.flush()).at(&path)?;
    let params =
        json!({ "lattice_step_m": cfg.lattice_step_m, "poi_valid_range_m": cfg.poi_valid_range_m, "pois": pois.len() });
    finish(city, "grid-profiles", params, &[city.config_path(), city.pois_path()], &[path], started)?;
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSummary {
    pub metric: MetricKind,
    pub filter: TimeFilter,
    pub cells: usize,
    pub stats: FieldStats,
}

/// Computes the requested fields from the shards in `shard_dir` and caches
/// them under `city/fields`.
pub fn run_metrics(
    city: &CityDir,
    shard_dir: &Path,
    jobs: &[FieldJob],
    workers: usize,
    p_scope: PScope,
) -> Result<Vec<FieldSummary>> {
    let started = Instant::now();
    let cfg = city.load_config()?;
    let lattice = Lattice::new(&cfg)?;
    let profiles: Profiles = city.load_profiles()?;
    let divisions = city.load_divisions()?;
    let shard_set = ShardSet::open(shard_dir)?;
    let shard_paths = shard_set.shard_paths();
    let ctx = MetricContext {
        lattice: &lattice,
        profiles: &profiles,
        divisions: divisions.layer(Level::Div),
        epoch: cfg.epoch,
        p_scope,
    };
    let outputs = compute_metric_fields(shard_paths.as_slice(), jobs, &ctx, workers)?;
    let dir = city.field_dir();
    fs::create_dir_all(&dir).at(&dir)?;
    let mut written = Vec::new();
    let mut summary = Vec::with_capacity(outputs.len());
    for out in outputs {
        let (metric, filter) = (out.field.metric, out.field.filter);
        let path = city.field_path(metric, filter);
        fs::write(&path, out.field.to_cache_bytes()).at(&path)?;
        written.push(path);
        let bd_path = city.breakdown_path(metric, filter);
        match &out.breakdown {
            Some(b) => {
                fs::write(&bd_path, b.to_cache_bytes()).at(&bd_path)?;
                written.push(bd_path);
            }
            None if bd_path.exists() => fs::remove_file(&bd_path).at(&bd_path)?,
            None => {}
        }
        summary.push(FieldSummary { metric, filter, cells: out.field.len(), stats: out.stats });
    }
    let mut inputs = vec![city.config_path(), city.profiles_path(), city.divisions_path()];
    inputs.push(shard_dir.join(MANIFEST_FILE));
    let params = json!({
        "jobs": jobs.iter().map(|(m, f)| crate::store::field_stem(*m, *f)).collect::<Vec<_>>(),
        "p_scope": p_scope,
        "workers": workers,
    });
    finish(city, "metrics", params, &inputs, &written, started)?;
    Ok(summary)
}

/// Logical CPU count, at least 1.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> SyntheticCitySpec {
        let mut spec = SyntheticCitySpec::with_seed(11);
        for v in spec.users_per_archetype.values_mut() {
            *v = 2;
        }
        spec
    }

    #[test]
    fn stages_chain_their_digests() {
        let tmp = tempfile::tempdir().unwrap();
        let city = CityDir::new(tmp.path());
        let synth = run_synth(&small_spec(), &city).unwrap();
        let ingest = run_ingest(&city, &city.root.join(RECORDS_FILE), &city.shard_dir(), 4, 2).unwrap();
        assert_eq!(ingest.input_lines, synth.records as u64);
        run_grid_profiles(&city).unwrap();
        let jobs = [(MetricKind::Density, TimeFilter::All), (MetricKind::Vibrancy, TimeFilter::All)];
        run_metrics(&city, &city.shard_dir(), &jobs, 2, PScope::Filtered).unwrap();

        let s = StageManifest::load(&city.manifest_path("synth")).unwrap();
        let i = StageManifest::load(&city.manifest_path("ingest")).unwrap();
        let g = StageManifest::load(&city.manifest_path("grid-profiles")).unwrap();
        let m = StageManifest::load(&city.manifest_path("metrics")).unwrap();
        let records = i.inputs.iter().find(|d| d.path == RECORDS_FILE).unwrap();
        assert_eq!(s.output(RECORDS_FILE), Some(records));
        assert_eq!(g.inputs.iter().find(|d| d.path == "pois.csv"), s.output("pois.csv"));
        let shard_manifest = format!("shards/{MANIFEST_FILE}");
        assert_eq!(m.inputs.iter().find(|d| d.path == shard_manifest), i.output(&shard_manifest));
        assert_eq!(m.inputs.iter().find(|d| d.path == "profiles.ufgp"), g.output("profiles.ufgp"));
        assert!(m.output("fields/vibrancy@all.ufbd").is_some());
        assert!(m.output("fields/density@all.ufbd").is_none());
        let mut expected = jobs.to_vec();
        expected.sort();
        assert_eq!(city.cached_fields().unwrap(), expected);
    }
}
