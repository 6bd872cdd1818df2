//! City configuration and the square lattice used for grid aggregation.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};
use crate::ingest::CleansingWindow;

/// Meters per degree of latitude (and of longitude at the equator).
pub const METERS_PER_DEGREE: f64 = 111_320.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub lon_min: f64,
    pub lat_min: f64,
    pub lon_max: f64,
    pub lat_max: f64,
}

impl BBox {
    pub fn new(lon_min: f64, lat_min: f64, lon_max: f64, lat_max: f64) -> Self {
        Self { lon_min, lat_min, lon_max, lat_max }
    }

    pub fn contains(&self, lon: f64, lat: f64) -> bool {
        lon >= self.lon_min && lon <= self.lon_max && lat >= self.lat_min && lat <= self.lat_max
    }

    pub fn intersects(&self, other: &BBox) -> bool {
        self.lon_min <= other.lon_max
            && other.lon_min <= self.lon_max
            && self.lat_min <= other.lat_max
            && other.lat_min <= self.lat_max
    }

    pub fn width(&self) -> f64 {
        self.lon_max - self.lon_min
    }

    pub fn height(&self) -> f64 {
        self.lat_max - self.lat_min
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.lon_min + self.lon_max) / 2.0, (self.lat_min + self.lat_max) / 2.0)
    }

    /// Grows the box by `lon`/`lat` degrees on every side.
    pub fn expanded(&self, lon: f64, lat: f64) -> BBox {
        BBox::new(self.lon_min - lon, self.lat_min - lat, self.lon_max + lon, self.lat_max + lat)
    }

    pub fn is_valid(&self) -> bool {
        [self.lon_min, self.lat_min, self.lon_max, self.lat_max].iter().all(|v| v.is_finite())
            && self.lon_min < self.lon_max
            && self.lat_min < self.lat_max
    }
}

impl fmt::Display for BBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.lon_min, self.lat_min, self.lon_max, self.lat_max)
    }
}

impl FromStr for BBox {
    type Err = String;

    /// `lon_min,lat_min,lon_max,lat_max`
    fn from_str(s: &str) -> Result<Self, String> {
        let v: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad bbox component {p:?}: {e}")))
            .collect::<Result<_, _>>()?;
        match v[..] {
            [a, b, c, d] => Ok(BBox::new(a, b, c, d)),
            _ => Err(format!("bbox needs 4 comma-separated numbers, got {}", v.len())),
        }
    }
}

fn default_step() -> f64 {
    200.0
}

fn default_valid_range() -> f64 {
    500.0
}

/// Per-city parameters, stored as `city.json` in the city directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityConfig {
    pub name: String,
    pub bbox: BBox,
    pub ref_lat: f64,
    #[serde(default = "default_step")]
    pub lattice_step_m: f64,
    #[serde(default = "default_valid_range")]
    pub poi_valid_range_m: f64,
    /// First day of the dataset; time slots count from its midnight.
    pub epoch: NaiveDate,
    #[serde(default)]
    pub dataset_days: Option<u32>,
    #[serde(default)]
    pub cleansing: CleansingWindow,
}

impl CityConfig {
    pub fn new(name: impl Into<String>, bbox: BBox, epoch: NaiveDate) -> Self {
        Self {
            name: name.into(),
            ref_lat: bbox.center().1,
            bbox,
            lattice_step_m: default_step(),
            poi_valid_range_m: default_valid_range(),
            epoch,
            dataset_days: None,
            cleansing: CleansingWindow::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).at(path)?;
        let cfg: CityConfig =
            serde_json::from_str(&text).map_err(|e| Error::data(path.display().to_string(), e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec_pretty(self).expect("city config serializes");
        fs::write(path, json).at(path)
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.bbox;
        if !b.is_valid() {
            if b.lon_min > b.lon_max {
                return Err(Error::UnsupportedRegion(format!("bbox {b} crosses the antimeridian")));
            }
            return Err(Error::UnsupportedRegion(format!("bbox {b} is degenerate")));
        }
        if b.lon_min < -180.0 || b.lon_max > 180.0 {
            return Err(Error::UnsupportedRegion(format!("bbox {b} leaves [-180, 180]")));
        }
        if b.lat_min <= -90.0 || b.lat_max >= 90.0 {
            return Err(Error::UnsupportedRegion(format!("bbox {b} touches a pole")));
        }
        if !(self.ref_lat.abs() < 90.0) {
            return Err(Error::UnsupportedRegion(format!("reference latitude {} is not usable", self.ref_lat)));
        }
        if !(self.lattice_step_m > 0.0) {
            return Err(Error::InvalidArgument("lattice_step_m must be positive".into()));
        }
        if !(self.poi_valid_range_m >= self.lattice_step_m / 2.0) {
            return Err(Error::InvalidArgument("poi_valid_range_m must be at least half the lattice step".into()));
        }
        Ok(())
    }

    pub fn frame(&self) -> LocalFrame {
        LocalFrame::new(self.ref_lat)
    }
}

/// Equirectangular meters around a reference latitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    pub meters_per_deg_lon: f64,
    pub meters_per_deg_lat: f64,
}

impl LocalFrame {
    pub fn new(ref_lat: f64) -> Self {
        Self {
            meters_per_deg_lon: METERS_PER_DEGREE * ref_lat.to_radians().cos(),
            meters_per_deg_lat: METERS_PER_DEGREE,
        }
    }

    /// Offset in meters from `a` to `b`.
    pub fn offset_m(&self, a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
        ((b.0 - a.0) * self.meters_per_deg_lon, (b.1 - a.1) * self.meters_per_deg_lat)
    }

    pub fn distance_m(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        let (dx, dy) = self.offset_m(a, b);
        dx.hypot(dy)
    }
}

/// Column/row index of a lattice point (and of its square Voronoi cell).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub col: u32,
    pub row: u32,
}

impl Cell {
    pub fn new(col: u32, row: u32) -> Self {
        Self { col, row }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub bbox: BBox,
    pub origin_lon: f64,
    pub origin_lat: f64,
    pub step_lon: f64,
    pub step_lat: f64,
    pub step_m: f64,
    pub cols: u32,
    pub rows: u32,
    pub frame: LocalFrame,
}

fn cell_count(span: f64, step: f64) -> u32 {
    // Absorb representation error so exact multiples are not rounded up.
    let n = (span / step - 1e-9).ceil();
    n.max(1.0) as u32
}

impl Lattice {
    pub fn new(cfg: &CityConfig) -> Result<Self> {
        cfg.validate()?;
        let frame = cfg.frame();
        let step_lat = cfg.lattice_step_m / frame.meters_per_deg_lat;
        let step_lon = cfg.lattice_step_m / frame.meters_per_deg_lon;
        Ok(Self {
            bbox: cfg.bbox,
            origin_lon: cfg.bbox.lon_min,
            origin_lat: cfg.bbox.lat_min,
            step_lon,
            step_lat,
            step_m: cfg.lattice_step_m,
            cols: cell_count(cfg.bbox.width(), step_lon),
            rows: cell_count(cfg.bbox.height(), step_lat),
            frame,
        })
    }

    pub fn len(&self) -> usize {
        self.cols as usize * self.rows as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Nearest lattice point of an in-bbox location: two multiplications
    /// and a rounding per axis. `None` outside the bbox.
    pub fn assign(&self, lon: f64, lat: f64) -> Option<Cell> {
        if !self.bbox.contains(lon, lat) {
            return None;
        }
        let col = ((lon - self.origin_lon) * (1.0 / self.step_lon)).round();
        let row = ((lat - self.origin_lat) * (1.0 / self.step_lat)).round();
        Some(Cell { col: (col.max(0.0) as u32).min(self.cols - 1), row: (row.max(0.0) as u32).min(self.rows - 1) })
    }

    pub fn center(&self, cell: Cell) -> (f64, f64) {
        (self.origin_lon + f64::from(cell.col) * self.step_lon, self.origin_lat + f64::from(cell.row) * self.step_lat)
    }

    /// Row-major linear index.
    pub fn index(&self, cell: Cell) -> usize {
        cell.row as usize * self.cols as usize + cell.col as usize
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell { col: (index % self.cols as usize) as u32, row: (index / self.cols as usize) as u32 }
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.rows).flat_map(move |row| (0..self.cols).map(move |col| Cell { col, row }))
    }

    /// Grid radius (half the lattice step) in meters.
    pub fn grid_radius_m(&self) -> f64 {
        self.step_m / 2.0
    }
}
