//! On-disk layout of one city directory, shared by the pipeline stages and
//! the service.
//!
//! ```text
//! city.json            CityConfig
//! pois.csv             id,class_id,lon,lat,kind,radius_m
//! divisions.geojson    DIV / SUBDISTRICT polygons
//! demographics.csv     division_id,gdp,population,house_price
//! shards/              ingest output
//! profiles.ufgp        per-cell POI-class profiles
//! fields/<metric>@<filter>.ufmf|.ufbd
//! <stage>.manifest.json
//! ```

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use crate::entropy::{MetricKind, TimeFilter};
use crate::error::{IoContext, Result};
use crate::field::{ClassBreakdown, GridMetricField};
use crate::geo::{load_demographics, read_pois, CityConfig, DivisionSet, Poi, ProfileGrid};
use crate::scalar::Scalar;

pub const CITY_FILE: &str = "city.json";
pub const POI_FILE: &str = "pois.csv";
pub const DIVISION_FILE: &str = "divisions.geojson";
pub const DEMOGRAPHICS_FILE: &str = "demographics.csv";
pub const SHARD_DIR: &str = "shards";
pub const PROFILE_FILE: &str = "profiles.ufgp";
pub const FIELD_DIR: &str = "fields";
pub const FIELD_EXT: &str = "ufmf";
pub const BREAKDOWN_EXT: &str = "ufbd";

/// `<metric>@<filter>`.
pub fn field_stem(metric: MetricKind, filter: TimeFilter) -> String {
    format!("{metric}@{filter}")
}

pub fn parse_field_stem(stem: &str) -> Option<(MetricKind, TimeFilter)> {
    let (m, f) = stem.split_once('@')?;
    Some((m.parse().ok()?, f.parse().ok()?))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CityDir {
    pub root: PathBuf,
}

impl CityDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn config_path(&self) -> PathBuf {
        self.root.join(CITY_FILE)
    }

    pub fn pois_path(&self) -> PathBuf {
        self.root.join(POI_FILE)
    }

    pub fn divisions_path(&self) -> PathBuf {
        self.root.join(DIVISION_FILE)
    }

    pub fn demographics_path(&self) -> PathBuf {
        self.root.join(DEMOGRAPHICS_FILE)
    }

    pub fn shard_dir(&self) -> PathBuf {
        self.root.join(SHARD_DIR)
    }

    pub fn profiles_path(&self) -> PathBuf {
        self.root.join(PROFILE_FILE)
    }

    pub fn field_dir(&self) -> PathBuf {
        self.root.join(FIELD_DIR)
    }

    pub fn field_path(&self, metric: MetricKind, filter: TimeFilter) -> PathBuf {
        self.field_dir().join(format!("{}.{FIELD_EXT}", field_stem(metric, filter)))
    }

    pub fn breakdown_path(&self, metric: MetricKind, filter: TimeFilter) -> PathBuf {
        self.field_dir().join(format!("{}.{BREAKDOWN_EXT}", field_stem(metric, filter)))
    }

    pub fn manifest_path(&self, stage: &str) -> PathBuf {
        self.root.join(format!("{stage}.manifest.json"))
    }

    pub fn is_city(&self) -> bool {
        self.config_path().is_file()
    }

    pub fn load_config(&self) -> Result<CityConfig> {
        CityConfig::load(&self.config_path())
    }

    pub fn load_pois(&self) -> Result<Vec<Poi>> {
        let path = self.pois_path();
        read_pois(BufReader::new(File::open(&path).at(&path)?))
    }

    /// Divisions with demographics attached. Both files are optional.
    pub fn load_divisions(&self) -> Result<DivisionSet> {
        let path = self.divisions_path();
        if !path.exists() {
            return Ok(DivisionSet::default());
        }
        let mut set = DivisionSet::from_geojson(BufReader::new(File::open(&path).at(&path)?))?;
        let demo = self.demographics_path();
        if demo.exists() {
            let report = load_demographics(&mut set, BufReader::new(File::open(&demo).at(&demo)?))?;
            if !report.unknown_ids.is_empty() {
                tracing::warn!(ids = ?report.unknown_ids, "demographics rows for unknown divisions");
            }
        }
        Ok(set)
    }

    pub fn load_profiles<T: Scalar>(&self) -> Result<ProfileGrid<T>> {
        let path = self.profiles_path();
        ProfileGrid::read_cache(BufReader::new(File::open(&path).at(&path)?))
    }

    /// Cached (metric, filter) pairs, sorted.
    pub fn cached_fields(&self) -> Result<Vec<(MetricKind, TimeFilter)>> {
        let dir = self.field_dir();
        if !dir.is_dir() {
            return Ok(Vec::new());
        }
        let mut out: Vec<(MetricKind, TimeFilter)> = fs::read_dir(&dir)
            .at(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == FIELD_EXT))
            .filter_map(|p| parse_field_stem(p.file_stem()?.to_str()?))
            .collect();
        out.sort();
        Ok(out)
    }

    pub fn load_field(&self, metric: MetricKind, filter: TimeFilter) -> Result<GridMetricField<f64>> {
        let path = self.field_path(metric, filter);
        GridMetricField::from_cache_bytes(&fs::read(&path).at(&path)?)
    }

    pub fn load_breakdown(&self, metric: MetricKind, filter: TimeFilter) -> Result<Option<ClassBreakdown<f64>>> {
        let path = self.breakdown_path(metric, filter);
        if !path.exists() {
            return Ok(None);
        }
        ClassBreakdown::from_cache_bytes(&fs::read(&path).at(&path)?).map(Some)
    }
}

/// City directories directly under `root`, sorted by name.
pub fn list_cities(root: &Path) -> Result<Vec<(String, CityDir)>> {
    let mut out: Vec<(String, CityDir)> = fs::read_dir(root)
        .at(root)?
        .filter_map(|e| e.ok())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), CityDir::new(e.path())))
        .filter(|(_, d)| d.is_city())
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::TimeBand;

    #[test]
    fn stems_round_trip() {
        for m in MetricKind::ALL {
            for f in TimeFilter::every() {
                assert_eq!(parse_field_stem(&field_stem(m, f)), Some((m, f)));
            }
        }
        assert_eq!(field_stem(MetricKind::Density, TimeFilter::TimeOfDay(TimeBand::Noon)), "density@noon");
        assert_eq!(parse_field_stem("nope@all"), None);
    }
}
