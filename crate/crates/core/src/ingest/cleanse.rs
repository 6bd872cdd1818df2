//! Device-level cleansing by monthly record rate.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

/// Days per normalized month.
pub const DAYS_PER_MONTH: f64 = 30.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceSummary {
    pub mid: String,
    pub record_count: u64,
    pub months_spanned: f64,
}

/// Inclusive window on records per month.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CleansingWindow {
    pub min_monthly: f64,
    pub max_monthly: f64,
}

impl Default for CleansingWindow {
    fn default() -> Self {
        Self { min_monthly: 1.0, max_monthly: 2500.0 }
    }
}

impl CleansingWindow {
    pub fn retains(&self, record_count: u64, months_spanned: f64) -> bool {
        let rate = record_count as f64 / months_spanned;
        rate >= self.min_monthly && rate <= self.max_monthly
    }
}

pub fn months_spanned(dataset_days: u32) -> f64 {
    f64::from(dataset_days) / DAYS_PER_MONTH
}

/// Returns the device ids whose monthly rate falls inside `window`.
pub fn cleanse_devices(summaries: &[DeviceSummary], window: CleansingWindow) -> HashSet<String> {
    summaries
        .iter()
        .filter(|s| {
            debug_assert!(s.months_spanned > 0.0);
            window.retains(s.record_count, s.months_spanned)
        })
        .map(|s| s.mid.clone())
        .collect()
}
