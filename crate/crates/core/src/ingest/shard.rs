//! Out-of-core partitioning of cleansed records by device id.
//!
//! Pass one streams the input once, parsing and filtering on the reading
//! thread and fanning rows out to writer threads through bounded channels.
//! Every shard is owned by exactly one writer and receives rows in input
//! order, so the partial files do not depend on the writer count. Pass two
//! handles each shard independently: it groups rows by device (stable sort),
//! drops devices outside the cleansing window and writes the final file.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc::{sync_channel, Receiver};
use std::thread;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tracing::{debug, info, warn};

use super::cleanse::{months_spanned, CleansingWindow};
use super::record::{filter_and_discretize, parse_record, CleanRecord, Discretized, RejectKind, SLOTS_PER_DAY};
use crate::digest::sha256_file;
use crate::error::{Error, IoContext, Result};

/// Marker present while a shard directory is being (re)built.
pub const INCOMPLETE_MARKER: &str = "INCOMPLETE";
pub const MANIFEST_FILE: &str = "manifest.json";

const BATCH_ROWS: usize = 4096;
const CHANNEL_BATCHES: usize = 8;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes.iter().fold(OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

pub fn shard_index(mid: &str, shard_count: usize) -> usize {
    (fnv1a64(mid.as_bytes()) % shard_count as u64) as usize
}

pub fn shard_file_name(index: usize) -> String {
    format!("shard_{index:05}.rec")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestOptions {
    pub shards: usize,
    /// Concurrent shard writers; also the width of the cleansing pass.
    pub workers: usize,
    pub epoch: NaiveDate,
    /// Dataset length used for monthly rates; derived from the latest slot when absent.
    pub dataset_days: Option<u32>,
    pub window: CleansingWindow,
    /// Per-writer buffered bytes before flushing to disk.
    pub flush_bytes: usize,
}

impl IngestOptions {
    pub fn new(shards: usize, epoch: NaiveDate) -> Self {
        Self { shards, workers: 1, epoch, dataset_days: None, window: CleansingWindow::default(), flush_bytes: 8 << 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardInfo {
    pub index: usize,
    pub file: String,
    pub records: u64,
    pub devices: u64,
    pub sha256: String,
}

/// Manifest written next to the shards of one ingest run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestManifest {
    pub shard_count: usize,
    pub epoch: NaiveDate,
    pub dataset_days: u32,
    pub window: CleansingWindow,
    pub input_lines: u64,
    pub rejected: BTreeMap<RejectKind, u64>,
    pub dropped_source: u64,
    pub removed_by_cleansing: u64,
    pub removed_devices: u64,
    pub retained_records: u64,
    pub retained_devices: u64,
    pub shards: Vec<ShardInfo>,
}

impl IngestManifest {
    pub fn rejected_total(&self) -> u64 {
        self.rejected.values().sum()
    }

    /// Every input line is accounted for exactly once.
    pub fn is_total(&self) -> bool {
        let sharded: u64 = self.shards.iter().map(|s| s.records).sum();
        sharded == self.retained_records
            && self.input_lines == self.dropped_source + self.rejected_total() + self.removed_by_cleansing + sharded
    }
}

/// A directory of device-partitioned shard files plus its manifest.
#[derive(Debug, Clone)]
pub struct ShardSet {
    pub dir: PathBuf,
    pub manifest: IngestManifest,
}

impl ShardSet {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        if dir.join(INCOMPLETE_MARKER).exists() {
            return Err(Error::data(dir.display().to_string(), "shard set is incomplete; rerun ingest"));
        }
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).at(&path)?;
        let manifest =
            serde_json::from_str(&text).map_err(|e| Error::data(path.display().to_string(), e.to_string()))?;
        Ok(Self { dir, manifest })
    }

    pub fn shard_paths(&self) -> Vec<PathBuf> {
        self.manifest.shards.iter().map(|s| self.dir.join(&s.file)).collect()
    }
}

/// Reads every record of one shard file.
pub fn read_shard(path: &Path) -> Result<Vec<CleanRecord>> {
    let text = fs::read_to_string(path).at(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            CleanRecord::parse_line(l)
                .ok_or_else(|| Error::data(format!("{}:{}", path.display(), i + 1), "malformed shard row"))
        })
        .collect()
}

/// Splits `records` (grouped by device) into per-device slices.
pub fn device_groups(records: &[CleanRecord]) -> impl Iterator<Item = &[CleanRecord]> {
    records.chunk_by(|a, b| a.mid == b.mid)
}

fn partial_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("{}.partial", shard_file_name(index)))
}

fn clear_previous_run(dir: &Path) -> Result<()> {
    for entry in fs::read_dir(dir).at(dir)? {
        let path = entry.at(dir)?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if name.starts_with("shard_") && (name.ends_with(".rec") || name.ends_with(".partial")) || name == MANIFEST_FILE
        {
            fs::remove_file(&path).at(&path)?;
        }
    }
    Ok(())
}

type Batch = Vec<(usize, String)>;

fn run_writer(dir: &Path, rx: Receiver<Batch>, flush_bytes: usize) -> Result<()> {
    let mut buffers: HashMap<usize, Vec<u8>> = HashMap::new();
    let mut buffered = 0usize;
    let flush = |buffers: &mut HashMap<usize, Vec<u8>>| -> Result<()> {
        for (&index, buf) in buffers.iter_mut().filter(|(_, b)| !b.is_empty()) {
            let path = partial_path(dir, index);
            let mut f = OpenOptions::new().create(true).append(true).open(&path).at(&path)?;
            f.write_all(buf).at(&path)?;
            buf.clear();
        }
        Ok(())
    };
    for batch in rx {
        for (index, line) in batch {
            let buf = buffers.entry(index).or_default();
            buf.extend_from_slice(line.as_bytes());
            buf.push(b'\n');
            buffered += line.len() + 1;
        }
        if buffered >= flush_bytes {
            flush(&mut buffers)?;
            buffered = 0;
        }
    }
    flush(&mut buffers)
}

#[derive(Debug, Default)]
struct ReadStats {
    input_lines: u64,
    rejected: BTreeMap<RejectKind, u64>,
    dropped_source: u64,
    max_slot: Option<u32>,
}

/// Streams `input` into `opts.shards` device-partitioned files under `out_dir`
/// and returns the run manifest (also written to `out_dir/manifest.json`).
pub fn shard_by_device<R: BufRead>(input: R, out_dir: &Path, opts: &IngestOptions) -> Result<IngestManifest> {
    if opts.shards == 0 {
        return Err(Error::InvalidArgument("shard count must be at least 1".into()));
    }
    let workers = opts.workers.clamp(1, opts.shards);
    fs::create_dir_all(out_dir).at(out_dir)?;
    let marker = out_dir.join(INCOMPLETE_MARKER);
    fs::write(&marker, b"").at(&marker)?;
    clear_previous_run(out_dir)?;

    let stats = thread::scope(|scope| -> Result<ReadStats> {
        let mut senders = Vec::with_capacity(workers);
        let mut handles = Vec::with_capacity(workers);
        for _ in 0..workers {
            let (tx, rx) = sync_channel::<Batch>(CHANNEL_BATCHES);
            senders.push(tx);
            handles.push(scope.spawn(move || run_writer(out_dir, rx, opts.flush_bytes)));
        }
        let mut batches: Vec<Batch> = vec![Vec::with_capacity(BATCH_ROWS); workers];
        let mut stats = ReadStats::default();
        let mut read_err = None;
        let mut send_failed = false;

        'lines: for (i, line) in input.lines().enumerate() {
            let line = match line {
                Ok(l) => l,
                Err(e) => {
                    read_err = Some(e);
                    break;
                }
            };
            if line.trim().is_empty() {
                continue;
            }
            stats.input_lines += 1;
            let raw = match parse_record(&line, i as u64 + 1) {
                Ok(r) => r,
                Err(rej) => {
                    debug!(line = rej.line, kind = ?rej.kind, "rejected input line");
                    *stats.rejected.entry(rej.kind).or_default() += 1;
                    continue;
                }
            };
            let rec = match filter_and_discretize(raw, opts.epoch) {
                Discretized::Kept(rec) => rec,
                Discretized::DroppedSource => {
                    stats.dropped_source += 1;
                    continue;
                }
                Discretized::BeforeEpoch => {
                    *stats.rejected.entry(RejectKind::BeforeEpoch).or_default() += 1;
                    continue;
                }
            };
            stats.max_slot = stats.max_slot.max(Some(rec.timeslot));
            let index = shard_index(&rec.mid, opts.shards);
            let w = index % workers;
            batches[w].push((index, rec.to_line()));
            if batches[w].len() >= BATCH_ROWS {
                let batch = std::mem::replace(&mut batches[w], Vec::with_capacity(BATCH_ROWS));
                if senders[w].send(batch).is_err() {
                    send_failed = true;
                    break 'lines;
                }
            }
        }
        if !send_failed {
            for (tx, batch) in senders.iter().zip(batches) {
                if !batch.is_empty() && tx.send(batch).is_err() {
                    break;
                }
            }
        }
        drop(senders);
        for h in handles {
            h.join().expect("shard writer panicked")?;
        }
        if let Some(e) = read_err {
            return Err(Error::io("<input>", e));
        }
        Ok(stats)
    })?;

    let dataset_days = opts.dataset_days.unwrap_or_else(|| stats.max_slot.map_or(1, |s| s / SLOTS_PER_DAY + 1));
    let months = months_spanned(dataset_days);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let finished: Vec<Result<(ShardInfo, u64, u64)>> = pool.install(|| {
        (0..opts.shards).into_par_iter().map(|index| finish_shard(out_dir, index, months, opts.window)).collect()
    });

    let mut shards = Vec::with_capacity(opts.shards);
    let (mut removed_records, mut removed_devices) = (0, 0);
    for r in finished {
        let (info, rr, rd) = r?;
        removed_records += rr;
        removed_devices += rd;
        shards.push(info);
    }

    let manifest = IngestManifest {
        shard_count: opts.shards,
        epoch: opts.epoch,
        dataset_days,
        window: opts.window,
        input_lines: stats.input_lines,
        rejected: stats.rejected,
        dropped_source: stats.dropped_source,
        removed_by_cleansing: removed_records,
        removed_devices,
        retained_records: shards.iter().map(|s| s.records).sum(),
        retained_devices: shards.iter().map(|s| s.devices).sum(),
        shards,
    };
    if manifest.rejected_total() > 0 {
        warn!(rejected = ?manifest.rejected, "rejected input lines");
    }
    let path = out_dir.join(MANIFEST_FILE);
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json).at(&path)?;
    fs::remove_file(&marker).at(&marker)?;
    info!(
        lines = manifest.input_lines,
        retained = manifest.retained_records,
        devices = manifest.retained_devices,
        "ingest finished"
    );
    Ok(manifest)
}

/// Groups, cleanses and finalizes one shard. Returns removed record and device counts.
fn finish_shard(dir: &Path, index: usize, months: f64, window: CleansingWindow) -> Result<(ShardInfo, u64, u64)> {
    let partial = partial_path(dir, index);
    let mut records = if partial.exists() { read_shard(&partial)? } else { Vec::new() };
    records.sort_by(|a, b| a.mid.cmp(&b.mid));

    let file = shard_file_name(index);
    let path = dir.join(&file);
    let mut out = BufWriter::new(File::create(&path).at(&path)?);
    let (mut kept_records, mut kept_devices, mut removed_records, mut removed_devices) = (0u64, 0u64, 0u64, 0u64);
    for group in device_groups(&records) {
        let n = group.len() as u64;
        if window.retains(n, months) {
            for rec in group {
                writeln!(out, "{}", rec.to_line()).at(&path)?;
            }
            kept_records += n;
            kept_devices += 1;
        } else {
            removed_records += n;
            removed_devices += 1;
        }
    }
    out.flush().at(&path)?;
    drop(out);
    if partial.exists() {
        fs::remove_file(&partial).at(&partial)?;
    }
    let info = ShardInfo { index, file, records: kept_records, devices: kept_devices, sha256: sha256_file(&path)? };
    Ok((info, removed_records, removed_devices))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv1a_reference_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn single_shard_takes_everything() {
        for mid in ["1", "42", "1470076020481"] {
            assert_eq!(shard_index(mid, 1), 0);
        }
    }

    #[test]
    fn shard_names_are_zero_padded() {
        assert_eq!(shard_file_name(7), "shard_00007.rec");
        assert_eq!(shard_file_name(12345), "shard_12345.rec");
    }
}
