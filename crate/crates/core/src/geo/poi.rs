//! Points of interest and their CSV file.

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const POI_CLASS_COUNT: usize = 10;

pub const POI_CLASS_NAMES: [&str; POI_CLASS_COUNT] = [
    "Food & Supply",
    "Entertainment & Leisure",
    "Education",
    "Transportation",
    "Healthcare & Emergency",
    "Financial & Bank",
    "Accommodation",
    "Office & Commercial",
    "Natural Landscape",
    "Factory & Manufacturer",
];

/// Influence spread of a point POI, in meters.
pub const POINT_POI_SIGMA_M: f64 = 100.0;
/// Area POIs spread over this multiple of their radius.
pub const AREA_SIGMA_FACTOR: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct PoiClass(u8);

impl PoiClass {
    pub fn new(id: u8) -> Option<Self> {
        (usize::from(id) < POI_CLASS_COUNT).then_some(Self(id))
    }

    pub fn index(self) -> usize {
        usize::from(self.0)
    }

    pub fn name(self) -> &'static str {
        POI_CLASS_NAMES[self.index()]
    }

    pub fn all() -> impl Iterator<Item = PoiClass> {
        (0..POI_CLASS_COUNT as u8).map(PoiClass)
    }
}

impl TryFrom<u8> for PoiClass {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, String> {
        PoiClass::new(v).ok_or_else(|| format!("POI class {v} is outside 0..{POI_CLASS_COUNT}"))
    }
}

impl From<PoiClass> for u8 {
    fn from(c: PoiClass) -> u8 {
        c.0
    }
}

impl fmt::Display for PoiClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoiKind {
    Point,
    Area,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poi {
    pub id: String,
    #[serde(rename = "class_id")]
    pub class: PoiClass,
    pub lon: f64,
    pub lat: f64,
    pub kind: PoiKind,
    /// Area POIs only.
    pub radius_m: Option<f64>,
}

impl Poi {
    pub fn point(id: impl Into<String>, class: PoiClass, lon: f64, lat: f64) -> Self {
        Self { id: id.into(), class, lon, lat, kind: PoiKind::Point, radius_m: None }
    }

    pub fn area(id: impl Into<String>, class: PoiClass, lon: f64, lat: f64, radius_m: f64) -> Self {
        Self { id: id.into(), class, lon, lat, kind: PoiKind::Area, radius_m: Some(radius_m) }
    }

    /// Standard deviation of the POI's Gaussian influence in meters.
    pub fn sigma_m(&self) -> f64 {
        match self.kind {
            PoiKind::Point => POINT_POI_SIGMA_M,
            PoiKind::Area => AREA_SIGMA_FACTOR * self.radius_m.unwrap_or(0.0),
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if !self.lon.is_finite() || !self.lat.is_finite() {
            return Err("non-finite coordinates".into());
        }
        match (self.kind, self.radius_m) {
            (PoiKind::Area, Some(r)) if r > 0.0 => Ok(()),
            (PoiKind::Area, _) => Err("area POI needs radius_m > 0".into()),
            (PoiKind::Point, _) => Ok(()),
        }
    }
}

/// Reads `id,class_id,lon,lat,kind,radius_m` rows (header required).
pub fn read_pois<R: Read>(reader: R) -> Result<Vec<Poi>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut pois = Vec::new();
    for (i, row) in rdr.deserialize::<Poi>().enumerate() {
        let ctx = || format!("POI row {}", i + 2);
        let poi = row.map_err(|e| Error::data(ctx(), e.to_string()))?;
        poi.validate().map_err(|m| Error::data(ctx(), m))?;
        pois.push(poi);
    }
    Ok(pois)
}

pub fn write_pois<W: Write>(writer: W, pois: &[Poi]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for p in pois {
        w.serialize(p).map_err(|e| Error::data("POI file", e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io("POI file", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let pois = vec![
            Poi::point("a", PoiClass::new(3).unwrap(), 116.1, 39.9),
            Poi::area("b", PoiClass::new(8).unwrap(), 116.2, 39.95, 250.0),
        ];
        let mut buf = Vec::new();
        write_pois(&mut buf, &pois).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("id,class_id,lon,lat,kind,radius_m\n"));
        assert_eq!(read_pois(&buf[..]).unwrap(), pois);
    }

    #[test]
    fn rejects_bad_rows() {
        let bad_class = "id,class_id,lon,lat,kind,radius_m\nx,10,1,1,point,\n";
        assert!(read_pois(bad_class.as_bytes()).is_err());
        let no_radius = "id,class_id,lon,lat,kind,radius_m\nx,1,1,1,area,\n";
        assert!(read_pois(no_radius.as_bytes()).is_err());
        let empty = "id,class_id,lon,lat,kind,radius_m\n";
        assert!(read_pois(empty.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn sigma_rules() {
        let c = PoiClass::new(0).unwrap();
        assert_eq!(Poi::point("p", c, 0.0, 0.0).sigma_m(), 100.0);
        assert_eq!(Poi::area("a", c, 0.0, 0.0, 200.0).sigma_m(), 300.0);
    }
}
