use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, LogNormal};
use rand_xoshiro::SplitMix64;

use super::spec::{SyntheticCitySpec, RESIDENTIAL_CLASS, TOURIST_CLASSES};
use crate::error::{Error, IoContext, Result};
use crate::geo::{
    write_pois, BBox, CityConfig, Demographics, Division, DivisionSet, Level, LocalFrame, Poi, PoiClass, Polygon,
};
use crate::store::{CITY_FILE, DEMOGRAPHICS_FILE, DIVISION_FILE, POI_FILE};

/// Radius of the tourist division's area POIs.
pub const ATTRACTION_RADIUS_M: f64 = 120.0;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Independent SplitMix64 stream for one purpose (`tag`) of a seed.
pub fn stream(seed: u64, tag: u64) -> SplitMix64 {
    let mut mix = SplitMix64::seed_from_u64(seed ^ tag.wrapping_mul(GOLDEN));
    SplitMix64::seed_from_u64(mix.random())
}

pub(crate) mod tags {
    pub const POIS: u64 = 1;
    pub const DEMOGRAPHICS: u64 = 2;
    pub const USERS: u64 = 3;
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCity {
    pub config: CityConfig,
    pub pois: Vec<Poi>,
    /// DIV tiles first (row-major from the south-west), then SUBDISTRICT tiles.
    pub divisions: DivisionSet,
    /// For each DIV tile, indices into `pois`.
    pub pois_by_division: Vec<Vec<usize>>,
    pub residential: Vec<usize>,
    pub tourist: Option<usize>,
}

impl SyntheticCity {
    pub fn div_tile(&self, index: usize) -> &Division {
        &self.divisions.divisions[index]
    }

    pub fn div_count(&self) -> usize {
        self.pois_by_division.len()
    }

    /// Writes the city files into `dir`, creating it.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).at(dir)?;
        self.config.save(&dir.join(CITY_FILE))?;
        let path = dir.join(POI_FILE);
        write_pois(BufWriter::new(File::create(&path).at(&path)?), &self.pois)?;
        let path = dir.join(DIVISION_FILE);
        let json = serde_json::to_vec(&self.divisions.to_geojson()).expect("geojson serializes");
        fs::write(&path, json).at(&path)?;
        let path = dir.join(DEMOGRAPHICS_FILE);
        let mut w = BufWriter::new(File::create(&path).at(&path)?);
        self.write_demographics(&mut w).at(&path)?;
        w.flush().at(&path)
    }

    pub fn write_demographics<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "division_id,gdp,population,house_price")?;
        for d in &self.divisions.divisions {
            if let Some(demo) = d.demographics {
                let f = |v: Option<f64>| v.map(|v| format!("{v:.2}")).unwrap_or_default();
                writeln!(w, "{},{},{},{}", d.id, f(demo.gdp), f(demo.population), f(demo.house_price))?;
            }
        }
        Ok(())
    }
}

fn tile(b: BBox, k: u32, i: usize) -> BBox {
    let (r, c) = ((i / k as usize) as f64, (i % k as usize) as f64);
    let (w, h) = (b.width() / f64::from(k), b.height() / f64::from(k));
    let lon_max = if c as u32 + 1 == k { b.lon_max } else { b.lon_min + (c + 1.0) * w };
    let lat_max = if r as u32 + 1 == k { b.lat_max } else { b.lat_min + (r + 1.0) * h };
    BBox::new(b.lon_min + c * w, b.lat_min + r * h, lon_max, lat_max)
}

fn inset(b: BBox, frame: LocalFrame, margin_m: f64) -> BBox {
    let dx = (margin_m / frame.meters_per_deg_lon).min(0.45 * b.width());
    let dy = (margin_m / frame.meters_per_deg_lat).min(0.45 * b.height());
    b.expanded(-dx, -dy)
}

fn uniform_in<R: Rng>(rng: &mut R, b: BBox) -> (f64, f64) {
    (rng.random_range(b.lon_min..b.lon_max), rng.random_range(b.lat_min..b.lat_max))
}

fn tiling(spec: &SyntheticCitySpec) -> DivisionSet {
    let k = spec.divisions;
    let mut divisions: Vec<Division> = (0..spec.division_count())
        .map(|i| {
            let id = format!("D{:02}", i);
            Division::new(id.clone(), format!("District {i}"), Level::Div, vec![Polygon::rect(tile(spec.bbox, k, i))])
        })
        .collect();
    divisions.extend((0..(4 * k * k) as usize).map(|i| {
        let id = format!("S{:03}", i);
        Division::new(
            id.clone(),
            format!("Subdistrict {i}"),
            Level::Subdistrict,
            vec![Polygon::rect(tile(spec.bbox, 2 * k, i))],
        )
    }));
    DivisionSet { divisions }
}

/// Builds POIs, divisions and demographics for `spec`. Accommodation POIs
/// go to every tile, other classes only to non-residential tiles, and
/// residential POIs keep `residential_margin_m` from their tile border.
pub fn generate_city(spec: &SyntheticCitySpec) -> Result<SyntheticCity> {
    spec.validate()?;
    let mut config = CityConfig::new(spec.name.clone(), spec.bbox, spec.epoch);
    config.dataset_days = Some(spec.days);
    config.validate()?;
    let frame = config.frame();

    let mut divisions = tiling(spec);
    let n = spec.division_count();
    let residential = spec.residential_divisions();
    let mixed = spec.mixed_divisions();
    let tourist = spec.tourist();

    let mut rng = stream(spec.seed, tags::POIS);
    let mut pois = Vec::new();
    let mut pois_by_division = vec![Vec::new(); n];
    let mut place = |pois: &mut Vec<Poi>, div: usize, poi: Poi| {
        pois_by_division[div].push(pois.len());
        pois.push(poi);
    };
    for class in PoiClass::all() {
        let hosts: &[usize] = if u8::from(class) == RESIDENTIAL_CLASS { &[] } else { &mixed };
        for j in 0..spec.pois_per_class {
            let div = if hosts.is_empty() { rng.random_range(0..n) } else { hosts[rng.random_range(0..hosts.len())] };
            let mut area = tile(spec.bbox, spec.divisions, div);
            if residential.contains(&div) {
                area = inset(area, frame, spec.residential_margin_m);
            }
            let (lon, lat) = uniform_in(&mut rng, area);
            place(&mut pois, div, Poi::point(format!("P{}-{:05}", u8::from(class), j), class, lon, lat));
        }
    }
    if let Some(t) = tourist {
        let area = tile(spec.bbox, spec.divisions, t);
        for j in 0..spec.tourist_pois {
            let class = PoiClass::new(TOURIST_CLASSES[j as usize % TOURIST_CLASSES.len()]).expect("valid class");
            let (lon, lat) = uniform_in(&mut rng, inset(area, frame, 2.0 * ATTRACTION_RADIUS_M));
            place(&mut pois, t, Poi::area(format!("T{:04}", j), class, lon, lat, ATTRACTION_RADIUS_M));
        }
    }

    let mut rng = stream(spec.seed, tags::DEMOGRAPHICS);
    let lognormal =
        |mean: f64, sigma: f64| LogNormal::new(mean.ln(), sigma).map_err(|e| Error::InvalidArgument(e.to_string()));
    let (pop_res, pop_mixed) = (lognormal(300_000.0, 0.3)?, lognormal(150_000.0, 0.3)?);
    let (gdp_pc, price) = (lognormal(80_000.0, 0.25)?, lognormal(40_000.0, 0.2)?);
    let mut div_demo = Vec::with_capacity(n);
    for i in 0..n {
        let is_res = residential.contains(&i);
        let population = if is_res { pop_res.sample(&mut rng) } else { pop_mixed.sample(&mut rng) };
        let per_capita = gdp_pc.sample(&mut rng) * if is_res { 0.7 } else { 1.5 };
        let house_price = price.sample(&mut rng) * if Some(i) == tourist { 1.4 } else { 1.0 };
        div_demo.push(Demographics {
            gdp: Some(population * per_capita),
            population: Some(population),
            house_price: Some(house_price),
        });
    }
    let k = spec.divisions as usize;
    for (s, d) in divisions.divisions[n..].iter_mut().enumerate() {
        let parent = (s / (2 * k) / 2) * k + (s % (2 * k)) / 2;
        let share = 0.25 * rng.random_range(0.8..1.2);
        let p = div_demo[parent];
        let price_jitter = rng.random_range(0.9..1.1);
        d.demographics = Some(Demographics {
            gdp: p.gdp.map(|v| v * share),
            population: p.population.map(|v| v * share),
            house_price: p.house_price.map(|v| v * price_jitter),
        });
    }
    for (d, demo) in divisions.divisions[..n].iter_mut().zip(div_demo) {
        d.demographics = Some(demo);
    }

    Ok(SyntheticCity { config, pois, divisions, pois_by_division, residential, tourist })
}
