//! Administrative divisions: GeoJSON polygons, even-odd membership tests
//! and attached demographics.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::lattice::BBox;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Level {
    Div,
    Subdistrict,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Div => "DIV",
            Level::Subdistrict => "SUBDISTRICT",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "DIV" => Ok(Level::Div),
            "SUBDISTRICT" => Ok(Level::Subdistrict),
            _ => Err(format!("unknown division level {s:?}")),
        }
    }
}

pub type Ring = Vec<[f64; 2]>;

#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub exterior: Ring,
    pub holes: Vec<Ring>,
}

impl Polygon {
    pub fn rect(b: BBox) -> Self {
        Self {
            exterior: vec![
                [b.lon_min, b.lat_min],
                [b.lon_max, b.lat_min],
                [b.lon_max, b.lat_max],
                [b.lon_min, b.lat_max],
                [b.lon_min, b.lat_min],
            ],
            holes: Vec::new(),
        }
    }

    pub fn rings(&self) -> impl Iterator<Item = &Ring> {
        std::iter::once(&self.exterior).chain(&self.holes)
    }
}

/// Even-odd crossing test of `p` against a ring (closed or not).
pub fn ring_crossings(ring: &[[f64; 2]], p: (f64, f64)) -> bool {
    let (x, y) = p;
    let n = ring.len();
    let mut inside = false;
    if n < 3 {
        return false;
    }
    let mut j = n - 1;
    for i in 0..n {
        let [xi, yi] = ring[i];
        let [xj, yj] = ring[j];
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Even-odd membership over every ring of every polygon.
pub fn polygons_contain(polys: &[Polygon], p: (f64, f64)) -> bool {
    polys.iter().flat_map(Polygon::rings).fold(false, |acc, ring| acc ^ ring_crossings(ring, p))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Demographics {
    pub gdp: Option<f64>,
    pub population: Option<f64>,
    pub house_price: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemographicKind {
    Gdp,
    Population,
    HousePrice,
}

impl DemographicKind {
    pub const ALL: [DemographicKind; 3] =
        [DemographicKind::Gdp, DemographicKind::Population, DemographicKind::HousePrice];

    pub fn as_str(self) -> &'static str {
        match self {
            DemographicKind::Gdp => "gdp",
            DemographicKind::Population => "population",
            DemographicKind::HousePrice => "house_price",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl Demographics {
    pub fn get(&self, kind: DemographicKind) -> Option<f64> {
        match kind {
            DemographicKind::Gdp => self.gdp,
            DemographicKind::Population => self.population,
            DemographicKind::HousePrice => self.house_price,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Division {
    pub id: String,
    pub name: String,
    pub level: Level,
    pub polygons: Vec<Polygon>,
    pub demographics: Option<Demographics>,
    bbox: BBox,
}

fn rings_bbox<'a>(rings: impl Iterator<Item = &'a Ring>) -> BBox {
    let mut b = BBox::new(f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for [x, y] in rings.flatten() {
        b.lon_min = b.lon_min.min(*x);
        b.lat_min = b.lat_min.min(*y);
        b.lon_max = b.lon_max.max(*x);
        b.lat_max = b.lat_max.max(*y);
    }
    b
}

impl Division {
    pub fn new(id: impl Into<String>, name: impl Into<String>, level: Level, polygons: Vec<Polygon>) -> Self {
        let bbox = rings_bbox(polygons.iter().map(|p| &p.exterior));
        Self { id: id.into(), name: name.into(), level, polygons, demographics: None, bbox }
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    pub fn contains(&self, lon: f64, lat: f64) -> bool {
        self.bbox.contains(lon, lat) && polygons_contain(&self.polygons, (lon, lat))
    }

    /// Area-weighted centroid of the exteriors (planar, in degrees).
    pub fn centroid(&self) -> (f64, f64) {
        let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
        for poly in &self.polygons {
            for w in poly.exterior.windows(2) {
                let ([x0, y0], [x1, y1]) = (w[0], w[1]);
                let cross = x0 * y1 - x1 * y0;
                a += cross;
                cx += (x0 + x1) * cross;
                cy += (y0 + y1) * cross;
            }
        }
        if a.abs() < 1e-18 {
            return self.bbox.center();
        }
        (cx / (3.0 * a), cy / (3.0 * a))
    }
}

/// All divisions of a city, at every level.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DivisionSet {
    pub divisions: Vec<Division>,
}

/// Divisions of one level, indexed 0..M in file order.
#[derive(Debug, Clone)]
pub struct DivisionLayer<'a> {
    pub level: Level,
    pub members: Vec<&'a Division>,
}

impl<'a> DivisionLayer<'a> {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Index of the division containing `p`, if any.
    pub fn division_of(&self, lon: f64, lat: f64) -> Option<usize> {
        self.members.iter().position(|d| d.contains(lon, lat))
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.members.iter().position(|d| d.id == id)
    }

    /// Checks that no two divisions overlap by more than `tol` degrees.
    pub fn validate_disjoint(&self, tol: f64) -> Result<()> {
        for (i, a) in self.members.iter().enumerate() {
            for b in &self.members[i + 1..] {
                if a.bbox.expanded(-tol, -tol).intersects(&b.bbox.expanded(-tol, -tol)) && overlaps(a, b, tol) {
                    return Err(Error::data(
                        format!("{} divisions", self.level),
                        format!("{} and {} overlap", a.id, b.id),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0) };
    ((p[0] - a[0] - t * dx).powi(2) + (p[1] - a[1] - t * dy).powi(2)).sqrt()
}

fn boundary_distance(d: &Division, p: [f64; 2]) -> f64 {
    d.polygons
        .iter()
        .flat_map(Polygon::rings)
        .flat_map(|r| r.windows(2))
        .map(|w| segment_distance(p, w[0], w[1]))
        .fold(f64::INFINITY, f64::min)
}

fn strictly_inside(d: &Division, p: [f64; 2], tol: f64) -> bool {
    d.contains(p[0], p[1]) && boundary_distance(d, p) > tol
}

fn proper_crossing(a0: [f64; 2], a1: [f64; 2], b0: [f64; 2], b1: [f64; 2], tol: f64) -> bool {
    let orient = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
    let (d1, d2) = (orient(b0, b1, a0), orient(b0, b1, a1));
    let (d3, d4) = (orient(a0, a1, b0), orient(a0, a1, b1));
    let eps = tol * tol;
    ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps)) && ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps))
}

fn overlaps(a: &Division, b: &Division, tol: f64) -> bool {
    let vertices = |d: &Division| -> Vec<[f64; 2]> { d.polygons.iter().flat_map(|p| p.exterior.clone()).collect() };
    if vertices(a).into_iter().any(|v| strictly_inside(b, v, tol))
        || vertices(b).into_iter().any(|v| strictly_inside(a, v, tol))
    {
        return true;
    }
    let (ca, cb) = (a.centroid(), b.centroid());
    if strictly_inside(b, [ca.0, ca.1], tol) && strictly_inside(a, [ca.0, ca.1], tol)
        || strictly_inside(a, [cb.0, cb.1], tol) && strictly_inside(b, [cb.0, cb.1], tol)
    {
        return true;
    }
    let edges = |d: &'_ Division| -> Vec<([f64; 2], [f64; 2])> {
        d.polygons.iter().flat_map(|p| p.exterior.windows(2).map(|w| (w[0], w[1])).collect::<Vec<_>>()).collect()
    };
    let eb = edges(b);
    edges(a).iter().any(|&(a0, a1)| eb.iter().any(|&(b0, b1)| proper_crossing(a0, a1, b0, b1, tol)))
}

fn parse_ring(v: &Value) -> Option<Ring> {
    v.as_array()?
        .iter()
        .map(|pt| {
            let pt = pt.as_array()?;
            Some([pt.first()?.as_f64()?, pt.get(1)?.as_f64()?])
        })
        .collect()
}

fn parse_polygon(v: &Value) -> Option<Polygon> {
    let rings: Vec<Ring> = v.as_array()?.iter().map(parse_ring).collect::<Option<_>>()?;
    let mut it = rings.into_iter();
    Some(Polygon { exterior: it.next()?, holes: it.collect() })
}

fn ring_json(r: &Ring) -> Value {
    Value::Array(r.iter().map(|[x, y]| json!([x, y])).collect())
}

impl DivisionSet {
    pub fn layer(&self, level: Level) -> DivisionLayer<'_> {
        DivisionLayer { level, members: self.divisions.iter().filter(|d| d.level == level).collect() }
    }

    pub fn get(&self, id: &str) -> Option<&Division> {
        self.divisions.iter().find(|d| d.id == id)
    }

    pub fn levels(&self) -> Vec<Level> {
        let mut levels: Vec<Level> = self.divisions.iter().map(|d| d.level).collect();
        levels.sort();
        levels.dedup();
        levels
    }

    /// Parses a FeatureCollection of Polygon/MultiPolygon features with
    /// `id`, `name` and `level` properties.
    pub fn from_geojson<R: Read>(reader: R) -> Result<Self> {
        let ctx = "division file";
        let root: Value = serde_json::from_reader(reader).map_err(|e| Error::data(ctx, e.to_string()))?;
        let features = root
            .get("features")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::data(ctx, "expected a FeatureCollection"))?;
        let mut divisions = Vec::with_capacity(features.len());
        for (i, f) in features.iter().enumerate() {
            let fctx = || format!("{ctx} feature {i}");
            let props = f.get("properties").ok_or_else(|| Error::data(fctx(), "missing properties"))?;
            let text = |k: &str| -> Option<String> {
                match props.get(k)? {
                    Value::String(s) => Some(s.clone()),
                    Value::Number(n) => Some(n.to_string()),
                    _ => None,
                }
            };
            let id = text("id").ok_or_else(|| Error::data(fctx(), "missing id"))?;
            let name = text("name").unwrap_or_else(|| id.clone());
            let level: Level = text("level")
                .ok_or_else(|| Error::data(fctx(), "missing level"))?
                .parse()
                .map_err(|e: String| Error::data(fctx(), e))?;
            let geom = f.get("geometry").ok_or_else(|| Error::data(fctx(), "missing geometry"))?;
            let coords = geom.get("coordinates");
            let polygons = match geom.get("type").and_then(Value::as_str) {
                Some("Polygon") => coords.and_then(parse_polygon).map(|p| vec![p]),
                Some("MultiPolygon") => {
                    coords.and_then(Value::as_array).and_then(|ps| ps.iter().map(parse_polygon).collect())
                }
                _ => None,
            }
            .ok_or_else(|| Error::data(fctx(), "geometry must be a Polygon or MultiPolygon"))?;
            divisions.push(Division::new(id, name, level, polygons));
        }
        Ok(Self { divisions })
    }

    pub fn to_geojson(&self) -> Value {
        let features = self
            .divisions
            .iter()
            .map(|d| {
                let polys: Vec<Value> =
                    d.polygons.iter().map(|p| Value::Array(p.rings().map(ring_json).collect())).collect();
                let geometry = if polys.len() == 1 {
                    json!({"type": "Polygon", "coordinates": polys[0]})
                } else {
                    json!({"type": "MultiPolygon", "coordinates": polys})
                };
                json!({
                    "type": "Feature",
                    "properties": {"id": d.id, "name": d.name, "level": d.level.as_str()},
                    "geometry": geometry,
                })
            })
            .collect();
        json!({"type": "FeatureCollection", "features": Value::Array(features)})
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DemographicsReport {
    pub attached: usize,
    pub unknown_ids: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct DemographicsRow {
    division_id: String,
    gdp: Option<f64>,
    population: Option<f64>,
    house_price: Option<f64>,
}

/// Attaches `division_id,gdp,population,house_price` rows to matching
/// divisions. Unknown ids are skipped and reported.
pub fn load_demographics<R: Read>(divisions: &mut DivisionSet, reader: R) -> Result<DemographicsReport> {
    let mut report = DemographicsReport::default();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    if rdr.headers().map(|h| h.is_empty()).unwrap_or(true) {
        return Ok(report);
    }
    let mut rows: BTreeMap<String, Demographics> = BTreeMap::new();
    for (i, row) in rdr.deserialize::<DemographicsRow>().enumerate() {
        let row = row.map_err(|e| Error::data(format!("demographics row {}", i + 2), e.to_string()))?;
        for v in [row.gdp, row.population, row.house_price].into_iter().flatten() {
            if !(v >= 0.0) {
                return Err(Error::data(format!("demographics row {}", i + 2), "values must be non-negative"));
            }
        }
        rows.insert(
            row.division_id,
            Demographics { gdp: row.gdp, population: row.population, house_price: row.house_price },
        );
    }
    for (id, demo) in rows {
        match divisions.divisions.iter_mut().find(|d| d.id == id) {
            Some(d) => {
                d.demographics = Some(demo);
                report.attached += 1;
            }
            None => report.unknown_ids.push(id),
        }
    }
    Ok(report)
}
