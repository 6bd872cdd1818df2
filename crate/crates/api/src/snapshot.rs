use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use uf_core::entropy::{MetricKind, TimeFilter};
use uf_core::geo::{DemographicKind, DivisionSet, Poi};
use uf_core::store::{list_cities, CityDir};
use uf_core::{CityConfig, ClassBreakdown, Lattice, MetricField};

use crate::error::{ApiError, ApiResult};

#[derive(Debug)]
pub struct FieldEntry {
    pub field: MetricField,
    pub breakdown: Option<ClassBreakdown>,
}

/// Everything the service knows about one city, read once per snapshot.
#[derive(Debug)]
pub struct CityData {
    pub name: String,
    pub config: CityConfig,
    pub lattice: Lattice,
    pub divisions: DivisionSet,
    pub pois: Vec<Poi>,
    pub fields: BTreeMap<(MetricKind, TimeFilter), FieldEntry>,
}

impl CityData {
    pub fn load(name: &str, dir: &CityDir) -> uf_core::Result<Self> {
        let config = dir.load_config()?;
        let lattice = Lattice::new(&config)?;
        let divisions = dir.load_divisions()?;
        let pois = if dir.pois_path().exists() { dir.load_pois()? } else { Vec::new() };
        let mut fields = BTreeMap::new();
        for (metric, filter) in dir.cached_fields()? {
            let field = dir.load_field(metric, filter)?;
            if (field.cols, field.rows) != (lattice.cols, lattice.rows) {
                return Err(uf_core::Error::data(
                    dir.field_path(metric, filter).display().to_string(),
                    "field shape does not match the city lattice",
                ));
            }
            let breakdown = dir.load_breakdown(metric, filter)?;
            fields.insert((metric, filter), FieldEntry { field, breakdown });
        }
        Ok(Self { name: name.to_string(), config, lattice, divisions, pois, fields })
    }

    pub fn field(&self, metric: MetricKind, filter: TimeFilter) -> ApiResult<&FieldEntry> {
        self.fields.get(&(metric, filter)).ok_or_else(|| {
            ApiError::not_found(format!("no cached {metric} field for filter {filter} in {}", self.name))
        })
    }

    pub fn demographics(&self) -> Vec<DemographicKind> {
        DemographicKind::ALL
            .into_iter()
            .filter(|&k| self.divisions.divisions.iter().any(|d| d.demographics.and_then(|x| x.get(k)).is_some()))
            .collect()
    }
}

#[derive(Debug, Default)]
pub struct Snapshot {
    pub cities: BTreeMap<String, Arc<CityData>>,
}

impl Snapshot {
    /// Loads every city directory under `root`. Cities that fail to load are
    /// skipped with a warning.
    pub fn load(root: &Path) -> uf_core::Result<Self> {
        let mut cities = BTreeMap::new();
        for (name, dir) in list_cities(root)? {
            match CityData::load(&name, &dir) {
                Ok(city) => {
                    tracing::info!(city = %name, fields = city.fields.len(), "loaded city");
                    cities.insert(name, Arc::new(city));
                }
                Err(e) => tracing::warn!(city = %name, error = %e, "skipping city"),
            }
        }
        Ok(Self { cities })
    }

    pub fn city(&self, name: &str) -> ApiResult<Arc<CityData>> {
        self.cities.get(name).cloned().ok_or_else(|| ApiError::not_found(format!("unknown city {name:?}")))
    }
}

/// Shared handler state. Reloads swap the whole snapshot.
#[derive(Debug, Clone)]
pub struct AppState {
    data_dir: Arc<PathBuf>,
    snapshot: Arc<RwLock<Arc<Snapshot>>>,
}

impl AppState {
    pub fn load(data_dir: impl Into<PathBuf>) -> uf_core::Result<Self> {
        let data_dir = data_dir.into();
        if !data_dir.is_dir() {
            return Err(uf_core::Error::io(
                &data_dir,
                std::io::Error::new(std::io::ErrorKind::NotFound, "data directory does not exist"),
            ));
        }
        let snapshot = Snapshot::load(&data_dir)?;
        Ok(Self { data_dir: Arc::new(data_dir), snapshot: Arc::new(RwLock::new(Arc::new(snapshot))) })
    }

    pub fn data_dir(&self) -> &Path {
        &self.data_dir
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshot.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    /// Re-reads the data directory; the old snapshot stays live on failure.
    pub fn reload(&self) -> uf_core::Result<usize> {
        let fresh = Snapshot::load(&self.data_dir)?;
        let n = fresh.cities.len();
        *self.snapshot.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(fresh);
        Ok(n)
    }
}
