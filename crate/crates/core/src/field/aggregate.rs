//! Shard-parallel metric stamping with an ordered, cell-keyed merge.
//!
//! Each shard is processed on its own and produces partial (sum, count)
//! maps. Partials are merged in shard order, so the merged field is
//! bit-identical for any worker count.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CellStat, ClassBreakdown, GridMetricField};
use crate::entropy::{
    build_user_vector, record_entropy_of_row, user_entropy, Basis, FeatureRow, MetricKind, TimeFilter,
};
use crate::error::{Error, Result};
use crate::geo::{DivisionLayer, Lattice, ProfileGrid, POI_CLASS_COUNT};
use crate::ingest::{device_groups, read_shard, CleanRecord};
use crate::scalar::{KahanSum, Scalar};
use crate::Cell;

/// Which records the user vector is normalized over when a time filter is active.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PScope {
    /// Rebuild the vector from the filtered records only.
    #[default]
    Filtered,
    /// Keep the vector of all the user's records.
    Global,
}

pub struct MetricContext<'a, T> {
    pub lattice: &'a Lattice,
    pub profiles: &'a ProfileGrid<T>,
    pub divisions: DivisionLayer<'a>,
    pub epoch: NaiveDate,
    pub p_scope: PScope,
}

impl<'a, T: Scalar> MetricContext<'a, T> {
    fn classes(&self, basis: Basis) -> usize {
        match basis {
            Basis::Poi => POI_CLASS_COUNT,
            Basis::Div => self.divisions.len(),
        }
    }
}

pub type FieldJob = (MetricKind, TimeFilter);

/// Source of device-grouped shards.
pub trait ShardSource: Sync {
    fn shard_count(&self) -> usize;
    fn load(&self, index: usize) -> Result<Vec<CleanRecord>>;
}

impl ShardSource for [PathBuf] {
    fn shard_count(&self) -> usize {
        self.len()
    }

    fn load(&self, index: usize) -> Result<Vec<CleanRecord>> {
        read_shard(&self[index])
    }
}

impl ShardSource for Vec<PathBuf> {
    fn shard_count(&self) -> usize {
        self.len()
    }

    fn load(&self, index: usize) -> Result<Vec<CleanRecord>> {
        read_shard(&self[index])
    }
}

impl ShardSource for [Vec<CleanRecord>] {
    fn shard_count(&self) -> usize {
        self.len()
    }

    fn load(&self, index: usize) -> Result<Vec<CleanRecord>> {
        let mut shard = self[index].clone();
        shard.sort_by(|a, b| a.mid.cmp(&b.mid));
        Ok(shard)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldStats {
    /// Records read from shards.
    pub records: u64,
    /// Records outside the city bbox.
    pub out_of_bbox: u64,
    /// In-bbox records passing the time filter.
    pub filtered: u64,
    /// Records that received a metric value.
    pub stamped: u64,
    pub users: u64,
    /// Users with filtered records but no usable feature row.
    pub unusable_users: u64,
}

impl FieldStats {
    fn merge(&mut self, o: &FieldStats) {
        self.records += o.records;
        self.out_of_bbox += o.out_of_bbox;
        self.filtered += o.filtered;
        self.stamped += o.stamped;
        self.users += o.users;
        self.unusable_users += o.unusable_users;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldOutput<T> {
    pub field: GridMetricField<T>,
    pub breakdown: Option<ClassBreakdown<T>>,
    pub stats: FieldStats,
}

#[derive(Debug, Clone, Default)]
struct Partial<T> {
    cells: HashMap<Cell, (KahanSum<T>, u32)>,
    breakdown: HashMap<Cell, Vec<T>>,
    stats: FieldStats,
}

impl<T: Scalar> Partial<T> {
    fn stamp(&mut self, cell: Cell, value: T) {
        let e = self.cells.entry(cell).or_insert((KahanSum::new(), 0));
        e.0.add(value);
        e.1 += 1;
        self.stats.stamped += 1;
    }

    fn add_breakdown(&mut self, cell: Cell, p: &[T]) {
        let acc = self.breakdown.entry(cell).or_insert_with(|| vec![T::zero(); p.len()]);
        for (a, &v) in acc.iter_mut().zip(p) {
            *a = *a + v;
        }
    }

    fn merge(&mut self, other: Partial<T>) {
        for (cell, (sum, count)) in other.cells {
            let e = self.cells.entry(cell).or_insert((KahanSum::new(), 0));
            e.0.merge(&sum);
            e.1 += count;
        }
        for (cell, v) in other.breakdown {
            match self.breakdown.get_mut(&cell) {
                Some(acc) => acc.iter_mut().zip(v).for_each(|(a, b)| *a = *a + b),
                None => {
                    self.breakdown.insert(cell, v);
                }
            }
        }
        self.stats.merge(&other.stats);
    }
}

struct Located<'r, T> {
    rec: &'r CleanRecord,
    cell: Cell,
    row: FeatureRow<'r, T>,
}

fn feature_row<'a, T: Scalar>(
    ctx: &'a MetricContext<'a, T>,
    basis: Option<Basis>,
    rec: &CleanRecord,
    cell: Cell,
) -> FeatureRow<'a, T> {
    match basis {
        Some(Basis::Poi) => FeatureRow::Dense(ctx.profiles.row(cell)),
        Some(Basis::Div) => ctx.divisions.division_of(rec.lon, rec.lat).map_or(FeatureRow::Missing, FeatureRow::OneHot),
        None => FeatureRow::Missing,
    }
}

fn stamp_device<T: Scalar>(ctx: &MetricContext<'_, T>, job: FieldJob, records: &[CleanRecord], out: &mut Partial<T>) {
    let (metric, filter) = job;
    let basis = metric.basis();
    let located: Vec<Located<'_, T>> = records
        .iter()
        .filter_map(|rec| {
            let cell = ctx.lattice.assign(rec.lon, rec.lat)?;
            Some(Located { rec, cell, row: feature_row(ctx, basis, rec, cell) })
        })
        .collect();
    out.stats.records += records.len() as u64;
    out.stats.out_of_bbox += (records.len() - located.len()) as u64;
    let selected: Vec<&Located<'_, T>> = located.iter().filter(|l| filter.matches(l.rec.timeslot, ctx.epoch)).collect();
    out.stats.filtered += selected.len() as u64;
    if selected.is_empty() {
        return;
    }
    out.stats.users += 1;

    let Some(basis) = basis else {
        for l in &selected {
            out.stamp(l.cell, T::one());
        }
        return;
    };
    let m = ctx.classes(basis);
    let mid = &records[0].mid;
    let user = match ctx.p_scope {
        PScope::Filtered => build_user_vector(mid, basis, m, selected.iter().map(|l| l.row)),
        PScope::Global => build_user_vector(mid, basis, m, located.iter().map(|l| l.row)),
    };
    let Some(h_user) = user_entropy(&user) else {
        out.stats.unusable_users += 1;
        return;
    };
    for l in selected.iter().filter(|l| l.row.is_usable()) {
        let value = if metric.is_record_entropy() {
            match record_entropy_of_row(l.row, &user.p) {
                Some(v) => v,
                None => continue,
            }
        } else {
            h_user
        };
        out.stamp(l.cell, value);
        out.add_breakdown(l.cell, &user.p);
    }
}

fn process_shard<T: Scalar>(ctx: &MetricContext<'_, T>, jobs: &[FieldJob], records: &[CleanRecord]) -> Vec<Partial<T>> {
    let mut partials: Vec<Partial<T>> = jobs.iter().map(|_| Partial::default()).collect();
    for group in device_groups(records) {
        for (job, partial) in jobs.iter().zip(partials.iter_mut()) {
            stamp_device(ctx, *job, group, partial);
        }
    }
    partials
}

const MERGE_BATCH: usize = 64;

/// Computes several (metric, filter) fields in one pass over the shards.
pub fn compute_metric_fields<T, S>(
    shards: &S,
    jobs: &[FieldJob],
    ctx: &MetricContext<'_, T>,
    workers: usize,
) -> Result<Vec<FieldOutput<T>>>
where
    T: Scalar,
    S: ShardSource + ?Sized,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut merged: Vec<Partial<T>> = jobs.iter().map(|_| Partial::default()).collect();
    let n = shards.shard_count();
    for start in (0..n).step_by(MERGE_BATCH) {
        let end = (start + MERGE_BATCH).min(n);
        let batch: Vec<Result<Vec<Partial<T>>>> = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map(|i| shards.load(i).map(|records| process_shard(ctx, jobs, &records)))
                .collect()
        });
        for partials in batch {
            for (acc, p) in merged.iter_mut().zip(partials?) {
                acc.merge(p);
            }
        }
    }
    Ok(jobs.iter().zip(merged).map(|(&job, partial)| finish(ctx, job, partial)).collect())
}

pub fn compute_metric_field<T, S>(
    shards: &S,
    metric: MetricKind,
    filter: TimeFilter,
    ctx: &MetricContext<'_, T>,
    workers: usize,
) -> Result<FieldOutput<T>>
where
    T: Scalar,
    S: ShardSource + ?Sized,
{
    Ok(compute_metric_fields(shards, &[(metric, filter)], ctx, workers)?.remove(0))
}

fn finish<T: Scalar>(ctx: &MetricContext<'_, T>, (metric, filter): FieldJob, partial: Partial<T>) -> FieldOutput<T> {
    let (cols, rows) = (ctx.lattice.cols, ctx.lattice.rows);
    let cells: BTreeMap<Cell, CellStat<T>> = partial
        .cells
        .into_iter()
        .map(|(cell, (sum, count))| {
            let mean = if metric == MetricKind::Density {
                T::of(f64::from(count))
            } else {
                sum.value() / T::of(f64::from(count))
            };
            (cell, CellStat { mean, count })
        })
        .collect();
    let breakdown = metric.basis().map(|basis| ClassBreakdown {
        metric,
        filter,
        basis,
        classes: ctx.classes(basis),
        cols,
        rows,
        cells: partial.breakdown.into_iter().collect(),
    });
    FieldOutput { field: GridMetricField { metric, filter, cols, rows, cells }, breakdown, stats: partial.stats }
}
