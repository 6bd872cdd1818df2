use serde::{Deserialize, Serialize};

use super::GridMetricField;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Density histogram of per-cell means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionHistogram<T> {
    pub min: T,
    pub max: T,
    pub bin_width: T,
    pub counts: Vec<u64>,
    /// `counts / (cells · bin_width)`; integrates to one.
    pub densities: Vec<T>,
}

impl<T: Scalar> DistributionHistogram<T> {
    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Left edge of bin `i`.
    pub fn edge(&self, i: usize) -> T {
        self.min + self.bin_width * T::of(i as f64)
    }
}

/// Equal-width bins over `[min, max]` of the cell means. A field whose
/// means are all equal is binned over `[v - 0.5, v + 0.5]`.
pub fn field_histogram<T: Scalar>(field: &GridMetricField<T>, bins: usize) -> Result<DistributionHistogram<T>> {
    if bins == 0 {
        return Err(Error::InvalidArgument("histogram needs at least one bin".into()));
    }
    let mut means = field.means().peekable();
    if means.peek().is_none() {
        return Ok(DistributionHistogram {
            min: T::zero(),
            max: T::zero(),
            bin_width: T::zero(),
            counts: Vec::new(),
            densities: Vec::new(),
        });
    }
    let (mut lo, mut hi) = field.means().fold((T::infinity(), T::neg_infinity()), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo == hi {
        let half = T::of(0.5);
        lo = lo - half;
        hi = hi + half;
    }
    let width = (hi - lo) / T::of(bins as f64);
    let mut counts = vec![0u64; bins];
    for v in means {
        let i = ((v - lo) / width).floor().to_usize().unwrap_or(0).min(bins - 1);
        counts[i] += 1;
    }
    let n = T::of(field.len() as f64);
    let densities = counts.iter().map(|&c| T::of(c as f64) / (n * width)).collect();
    Ok(DistributionHistogram { min: lo, max: hi, bin_width: width, counts, densities })
}
