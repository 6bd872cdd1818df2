//! Per-cell metric fields: aggregation from shards, binary caches,
//! distributions and region statistics.

mod aggregate;
mod cache;
mod histogram;
mod region;

use std::collections::BTreeMap;

pub use aggregate::{
    compute_metric_field, compute_metric_fields, FieldJob, FieldOutput, FieldStats, MetricContext, PScope, ShardSource,
};
pub use cache::{BREAKDOWN_MAGIC, FIELD_MAGIC};
pub use histogram::{field_histogram, DistributionHistogram};
pub use region::{iso_cells, region_cells, region_stats, MetricSummary, Region, RegionStats};

use crate::entropy::{Basis, MetricKind, TimeFilter};
use crate::geo::Cell;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellStat<T> {
    pub mean: T,
    pub count: u32,
}

/// Aggregate of one metric under one time filter. Only cells with at
/// least one stamped record are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMetricField<T> {
    pub metric: MetricKind,
    pub filter: TimeFilter,
    pub cols: u32,
    pub rows: u32,
    pub cells: BTreeMap<Cell, CellStat<T>>,
}

impl<T: Copy> GridMetricField<T> {
    pub fn empty(metric: MetricKind, filter: TimeFilter, cols: u32, rows: u32) -> Self {
        Self { metric, filter, cols, rows, cells: BTreeMap::new() }
    }

    pub fn get(&self, cell: Cell) -> Option<&CellStat<T>> {
        self.cells.get(&cell)
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn total_count(&self) -> u64 {
        self.cells.values().map(|c| u64::from(c.count)).sum()
    }

    pub fn means(&self) -> impl Iterator<Item = T> + '_ {
        self.cells.values().map(|c| c.mean)
    }
}

/// Per-cell sum of the feature vectors of the users behind each stamped
/// record; normalized over a region it gives the class breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassBreakdown<T> {
    pub metric: MetricKind,
    pub filter: TimeFilter,
    pub basis: Basis,
    pub classes: usize,
    pub cols: u32,
    pub rows: u32,
    pub cells: BTreeMap<Cell, Vec<T>>,
}
