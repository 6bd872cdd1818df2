use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};
use crate::geo::{BBox, POI_CLASS_COUNT};

pub const HOMEBODY: &str = "HOMEBODY";
pub const COMMUTER: &str = "COMMUTER";
pub const WANDERER: &str = "WANDERER";
pub const TOURIST: &str = "TOURIST";

/// Class of the only POIs placed in residential divisions.
pub const RESIDENTIAL_CLASS: u8 = 6;
/// Classes of the extra POIs in the tourist division.
pub const TOURIST_CLASSES: [u8; 2] = [1, 8];

/// How one group of synthetic users moves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchetypeSpec {
    pub name: String,
    pub poi_class_weights: [f64; POI_CLASS_COUNT],
    /// Weights over DIV divisions for the user's home; empty means no home.
    #[serde(default)]
    pub home_division_weights: Vec<f64>,
    /// Share of records placed in the home division.
    #[serde(default)]
    pub home_share: f64,
    /// Weights over DIV divisions for records away from home.
    #[serde(default)]
    pub division_weights: Vec<f64>,
    /// Away divisions drawn per user; `None` keeps every weighted division.
    #[serde(default)]
    pub divisions_per_user: Option<usize>,
    /// Inclusive range.
    pub records_per_user: [u32; 2],
    /// Weights over the seven time-of-day bands, Morning first.
    pub time_profile: [f64; 7],
}

fn usable(w: &[f64]) -> bool {
    w.iter().all(|v| v.is_finite() && *v >= 0.0) && w.iter().any(|v| *v > 0.0)
}

impl ArchetypeSpec {
    pub fn has_home(&self) -> bool {
        !self.home_division_weights.is_empty()
    }

    pub fn validate(&self, divisions: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("archetype {}: {m}", self.name)));
        if !usable(&self.poi_class_weights) {
            return bad("poi_class_weights must be non-negative and not all zero");
        }
        if !usable(&self.time_profile) {
            return bad("time_profile must be non-negative and not all zero");
        }
        if self.has_home() && (self.home_division_weights.len() != divisions || !usable(&self.home_division_weights)) {
            return bad("home_division_weights must cover every division and not be all zero");
        }
        if !(0.0..=1.0).contains(&self.home_share) || (!self.has_home() && self.home_share > 0.0) {
            return bad("home_share must be in [0, 1] and needs a home");
        }
        let needs_away = !self.has_home() || self.home_share < 1.0;
        if needs_away && (self.division_weights.len() != divisions || !usable(&self.division_weights)) {
            return bad("division_weights must cover every division and not be all zero");
        }
        if self.divisions_per_user == Some(0) {
            return bad("divisions_per_user must be positive");
        }
        let [lo, hi] = self.records_per_user;
        if lo == 0 || lo > hi {
            return bad("records_per_user must be a non-empty range of positive counts");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCitySpec {
    pub seed: u64,
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default = "default_bbox")]
    pub bbox: BBox,
    /// DIV tiling is `divisions × divisions`; SUBDISTRICT halves each tile.
    #[serde(default = "default_divisions")]
    pub divisions: u32,
    #[serde(default = "default_pois_per_class")]
    pub pois_per_class: u32,
    /// Extra entertainment and landscape POIs in the tourist division.
    #[serde(default = "default_tourist_pois")]
    pub tourist_pois: u32,
    /// DIV indices (row-major from the south-west tile) holding only
    /// accommodation POIs. Defaults to a checkerboard.
    #[serde(default)]
    pub residential: Option<Vec<usize>>,
    /// Defaults to the non-residential tile nearest the center.
    #[serde(default)]
    pub tourist_division: Option<usize>,
    /// Distance kept between residential POIs and their division's border.
    #[serde(default = "default_margin")]
    pub residential_margin_m: f64,
    #[serde(default = "default_epoch")]
    pub epoch: NaiveDate,
    #[serde(default = "default_days")]
    pub days: u32,
    /// Share of records tagged with a coarse source, dropped at ingest.
    #[serde(default = "default_noise")]
    pub coarse_source_share: f64,
    #[serde(default = "default_users")]
    pub users_per_archetype: BTreeMap<String, u32>,
    /// Defaults to the four built-in archetypes for this layout.
    #[serde(default)]
    pub archetypes: Option<Vec<ArchetypeSpec>>,
}

fn default_name() -> String {
    "synthville".into()
}
fn default_bbox() -> BBox {
    BBox::new(116.20, 39.80, 116.40, 39.96)
}
fn default_divisions() -> u32 {
    4
}
fn default_pois_per_class() -> u32 {
    80
}
fn default_tourist_pois() -> u32 {
    12
}
fn default_margin() -> f64 {
    1000.0
}
fn default_epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(2015, 7, 1).expect("valid date")
}
fn default_days() -> u32 {
    28
}
fn default_noise() -> f64 {
    0.05
}
fn default_users() -> BTreeMap<String, u32> {
    [(HOMEBODY, 40), (COMMUTER, 40), (WANDERER, 40), (TOURIST, 200)]
        .into_iter()
        .map(|(k, v)| (k.to_owned(), v))
        .collect()
}

impl Default for SyntheticCitySpec {
    fn default() -> Self {
        Self::with_seed(42)
    }
}

impl SyntheticCitySpec {
    pub fn with_seed(seed: u64) -> Self {
        serde_json::from_value(serde_json::json!({ "seed": seed })).expect("defaults deserialize")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).at(path)?;
        let spec: Self =
            serde_json::from_str(&text).map_err(|e| Error::data(path.display().to_string(), e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn division_count(&self) -> usize {
        (self.divisions * self.divisions) as usize
    }

    pub fn residential_divisions(&self) -> Vec<usize> {
        let k = self.divisions as usize;
        match &self.residential {
            Some(r) => {
                let mut r = r.clone();
                r.sort_unstable();
                r.dedup();
                r
            }
            None => (0..k * k).filter(|i| (i / k + i % k).is_multiple_of(2)).collect(),
        }
    }

    pub fn mixed_divisions(&self) -> Vec<usize> {
        let res = self.residential_divisions();
        (0..self.division_count()).filter(|i| !res.contains(i)).collect()
    }

    pub fn tourist(&self) -> Option<usize> {
        if self.tourist_division.is_some() {
            return self.tourist_division;
        }
        let k = self.divisions as usize;
        let mid = (k as f64 - 1.0) / 2.0;
        let dist = |i: usize| {
            let (r, c) = ((i / k) as f64, (i % k) as f64);
            (r - mid).powi(2) + (c - mid).powi(2)
        };
        self.mixed_divisions().into_iter().min_by(|a, b| dist(*a).total_cmp(&dist(*b)).then(a.cmp(b)))
    }

    pub fn archetypes(&self) -> Vec<ArchetypeSpec> {
        self.archetypes.clone().unwrap_or_else(|| default_archetypes(self))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !self.bbox.is_valid() {
            return Err(Error::UnsupportedRegion(format!("bbox {} is degenerate", self.bbox)));
        }
        if self.divisions == 0 {
            return bad("divisions must be at least 1".into());
        }
        if self.days == 0 {
            return bad("days must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.coarse_source_share) {
            return bad("coarse_source_share must be in [0, 1)".into());
        }
        if !(self.residential_margin_m >= 0.0) {
            return bad("residential_margin_m must be non-negative".into());
        }
        let n = self.division_count();
        if let Some(i) = self.residential_divisions().into_iter().find(|&i| i >= n) {
            return bad(format!("residential division {i} is outside the {n}-tile grid"));
        }
        if let Some(t) = self.tourist() {
            if t >= n || self.residential_divisions().contains(&t) {
                return bad(format!("tourist division {t} must be a non-residential tile"));
            }
        }
        let archetypes = self.archetypes();
        for a in &archetypes {
            a.validate(n)?;
        }
        for name in self.users_per_archetype.keys() {
            if !archetypes.iter().any(|a| &a.name == name) {
                return bad(format!("users_per_archetype names unknown archetype {name}"));
            }
        }
        Ok(())
    }
}

fn indicator(n: usize, members: &[usize]) -> Vec<f64> {
    (0..n).map(|i| if members.contains(&i) { 1.0 } else { 0.0 }).collect()
}

/// The four built-in archetypes for the spec's division layout. Archetypes
/// whose divisions do not exist in the layout are left out.
pub fn default_archetypes(spec: &SyntheticCitySpec) -> Vec<ArchetypeSpec> {
    let n = spec.division_count();
    let residential = spec.residential_divisions();
    let mixed = spec.mixed_divisions();
    let mut out = Vec::new();
    let mut one_hot = [0.0; POI_CLASS_COUNT];
    one_hot[usize::from(RESIDENTIAL_CLASS)] = 1.0;
    let mut push = |name: &str, class_w, home: &[usize], share, away: &[usize], per_user, records, time| {
        out.push(ArchetypeSpec {
            name: name.into(),
            poi_class_weights: class_w,
            home_division_weights: if home.is_empty() { Vec::new() } else { indicator(n, home) },
            home_share: share,
            division_weights: if away.is_empty() { Vec::new() } else { indicator(n, away) },
            divisions_per_user: per_user,
            records_per_user: records,
            time_profile: time,
        });
    };
    if !residential.is_empty() {
        push(HOMEBODY, one_hot, &residential, 1.0, &[], None, [500, 600], [2.0, 1.0, 1.0, 1.0, 3.0, 3.0, 1.0]);
    }
    if !residential.is_empty() && !mixed.is_empty() {
        let mut w = [0.0; POI_CLASS_COUNT];
        w[6] = 0.5;
        w[7] = 0.4;
        w[0] = 0.1;
        push(COMMUTER, w, &residential, 0.5, &mixed, Some(1), [500, 600], [3.0, 2.0, 1.0, 2.0, 3.0, 1.0, 0.5]);
    }
    if !mixed.is_empty() {
        push(
            WANDERER,
            [1.0; POI_CLASS_COUNT],
            &[],
            0.0,
            &mixed,
            None,
            [1000, 1200],
            [1.0, 2.0, 2.0, 2.0, 2.0, 1.0, 0.5],
        );
    }
    if let (false, Some(t)) = (residential.is_empty(), spec.tourist()) {
        let mut w = [0.0; POI_CLASS_COUNT];
        w[usize::from(RESIDENTIAL_CLASS)] = 0.2;
        for c in TOURIST_CLASSES {
            w[usize::from(c)] = 0.4;
        }
        push(TOURIST, w, &residential, 0.8, &[t], None, [20, 40], [1.0, 3.0, 2.0, 3.0, 2.0, 1.0, 0.2]);
    }
    out
}
