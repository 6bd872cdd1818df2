use std::io::Write;

use chrono::{Duration, NaiveDateTime};
use rand::distr::weighted::WeightedIndex;
use rand::seq::index::sample_weighted;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use super::city::{stream, tags, SyntheticCity};
use super::spec::{ArchetypeSpec, SyntheticCitySpec};
use crate::entropy::TimeBand;
use crate::error::{Error, Result};
use crate::geo::{Poi, POI_CLASS_COUNT};
use crate::ingest::{format_timestamp, Source};

/// Location jitter around the chosen POI.
pub const JITTER_SIGMA_M: f64 = 50.0;
/// Per-axis bound on the jitter.
pub const JITTER_CLAMP_M: f64 = 150.0;
/// Share of precise records tagged GPS; the rest are WIFI.
const GPS_SHARE: f64 = 0.7;

/// Ground truth for one generated user.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SyntheticUser {
    pub mid: String,
    pub archetype: String,
    /// DIV tile index.
    pub home: Option<usize>,
    pub records: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticRecords {
    pub users: Vec<SyntheticUser>,
    /// Input rows in time order.
    pub lines: Vec<String>,
}

impl SyntheticRecords {
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for line in &self.lines {
            writeln!(w, "{line}")?;
        }
        w.flush()
    }

    pub fn write_users<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "mid,archetype,home,records")?;
        for u in &self.users {
            let home = u.home.map(|h| h.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{},{}", u.mid, u.archetype, home, u.records)?;
        }
        w.flush()
    }
}

/// Device id: archetype position, then user position.
pub fn synthetic_mid(archetype: usize, user: u32) -> String {
    format!("1{:02}{:08}", archetype, user)
}

struct UserPlan {
    home: Option<usize>,
    away: Vec<usize>,
    away_weights: Option<WeightedIndex<f64>>,
}

fn weighted(w: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(w.iter().copied()).map_err(|e| Error::InvalidArgument(e.to_string()))
}

fn plan_user<R: Rng>(rng: &mut R, a: &ArchetypeSpec) -> Result<UserPlan> {
    let home = if a.has_home() { Some(weighted(&a.home_division_weights)?.sample(rng)) } else { None };
    if a.has_home() && a.home_share >= 1.0 {
        return Ok(UserPlan { home, away: Vec::new(), away_weights: None });
    }
    let candidates: Vec<(usize, f64)> =
        a.division_weights.iter().copied().enumerate().filter(|&(i, w)| w > 0.0 && Some(i) != home).collect();
    if candidates.is_empty() {
        return Err(Error::InvalidArgument(format!("archetype {} has no division to visit", a.name)));
    }
    let away: Vec<usize> = match a.divisions_per_user {
        Some(n) if n < candidates.len() => {
            let picked = sample_weighted(rng, candidates.len(), |i| candidates[i].1, n)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            let mut idx: Vec<usize> = picked.into_iter().map(|i| candidates[i].0).collect();
            idx.sort_unstable();
            idx
        }
        _ => candidates.iter().map(|c| c.0).collect(),
    };
    let w: Vec<f64> = away.iter().map(|&d| a.division_weights[d]).collect();
    Ok(UserPlan { home, away, away_weights: Some(weighted(&w)?) })
}

struct Sampler<'a> {
    city: &'a SyntheticCity,
    jitter: Normal<f64>,
    bands: WeightedIndex<f64>,
    days: u32,
    noise: f64,
}

impl Sampler<'_> {
    fn location<R: Rng>(&self, rng: &mut R, a: &ArchetypeSpec, div: usize) -> (f64, f64) {
        let pois = &self.city.pois_by_division[div];
        let mut by_class: [Vec<&Poi>; POI_CLASS_COUNT] = Default::default();
        for &i in pois {
            let p = &self.city.pois[i];
            by_class[p.class.index()].push(p);
        }
        let w: Vec<f64> =
            (0..POI_CLASS_COUNT).map(|c| if by_class[c].is_empty() { 0.0 } else { a.poi_class_weights[c] }).collect();
        let chosen: Option<&Poi> = match WeightedIndex::new(&w) {
            Ok(idx) => {
                let list = &by_class[idx.sample(rng)];
                Some(list[rng.random_range(0..list.len())])
            }
            Err(_) if !pois.is_empty() => Some(&self.city.pois[pois[rng.random_range(0..pois.len())]]),
            Err(_) => None,
        };
        let bbox = self.city.config.bbox;
        let (lon, lat) = match chosen {
            Some(p) => {
                let frame = self.city.config.frame();
                let dx = self.jitter.sample(rng).clamp(-JITTER_CLAMP_M, JITTER_CLAMP_M);
                let dy = self.jitter.sample(rng).clamp(-JITTER_CLAMP_M, JITTER_CLAMP_M);
                (p.lon + dx / frame.meters_per_deg_lon, p.lat + dy / frame.meters_per_deg_lat)
            }
            None => {
                let b = self.city.div_tile(div).bbox();
                (rng.random_range(b.lon_min..b.lon_max), rng.random_range(b.lat_min..b.lat_max))
            }
        };
        (lon.clamp(bbox.lon_min, bbox.lon_max), lat.clamp(bbox.lat_min, bbox.lat_max))
    }

    fn time<R: Rng>(&self, rng: &mut R) -> NaiveDateTime {
        let band = TimeBand::ALL[self.bands.sample(rng)];
        let (h0, h1) = band.hours();
        let day = rng.random_range(0..self.days);
        let minute = rng.random_range(h0 * 60..h1 * 60);
        self.city.config.epoch.and_hms_opt(0, 0, 0).expect("midnight")
            + Duration::days(i64::from(day))
            + Duration::minutes(i64::from(minute))
    }

    fn source<R: Rng>(&self, rng: &mut R) -> Source {
        if rng.random_bool(self.noise) {
            if rng.random_bool(0.5) {
                Source::BaseStation
            } else {
                Source::Ip
            }
        } else if rng.random_bool(GPS_SHARE) {
            Source::Gps
        } else {
            Source::Wifi
        }
    }
}

type Row = (NaiveDateTime, String, u32, String);

fn user_rows(
    sampler: &Sampler<'_>,
    seed: u64,
    a: &ArchetypeSpec,
    archetype: usize,
    user: u32,
) -> Result<(SyntheticUser, Vec<Row>)> {
    let mut rng = stream(seed, tags::USERS ^ ((archetype as u64) << 40) ^ (u64::from(user) << 8));
    let bands = WeightedIndex::new(a.time_profile).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let sampler = Sampler { bands, ..*sampler };
    let plan = plan_user(&mut rng, a)?;
    let mid = synthetic_mid(archetype, user);
    let [lo, hi] = a.records_per_user;
    let n = rng.random_range(lo..=hi);
    let mut rows = Vec::with_capacity(n as usize);
    for seq in 0..n {
        let div = match (plan.home, &plan.away_weights) {
            (Some(h), _) if plan.away.is_empty() || rng.random_bool(a.home_share) => h,
            (_, Some(w)) => plan.away[w.sample(&mut rng)],
            (h, None) => h.expect("plan without destinations has a home"),
        };
        let (lon, lat) = sampler.location(&mut rng, a, div);
        let t = sampler.time(&mut rng);
        let src = sampler.source(&mut rng);
        rows.push((t, mid.clone(), seq, format!("{},{lon:.6},{lat:.6},{mid},{src}", format_timestamp(&t))));
    }
    let user = SyntheticUser { mid, archetype: a.name.clone(), home: plan.home, records: n };
    Ok((user, rows))
}

/// Movement records for every user of every archetype, as ingest input rows.
/// Each user draws from its own stream, so output does not depend on the
/// thread count.
pub fn generate_records(spec: &SyntheticCitySpec, city: &SyntheticCity) -> Result<SyntheticRecords> {
    spec.validate()?;
    let archetypes = spec.archetypes();
    let sampler = Sampler {
        city,
        jitter: Normal::new(0.0, JITTER_SIGMA_M).expect("positive sigma"),
        bands: WeightedIndex::new([1.0]).expect("non-empty"),
        days: spec.days,
        noise: spec.coarse_source_share,
    };
    let jobs: Vec<(usize, u32)> = archetypes
        .iter()
        .enumerate()
        .flat_map(|(i, a)| (0..spec.users_per_archetype.get(&a.name).copied().unwrap_or(0)).map(move |u| (i, u)))
        .collect();
    let per_user: Vec<(SyntheticUser, Vec<Row>)> =
        jobs.par_iter().map(|&(i, u)| user_rows(&sampler, spec.seed, &archetypes[i], i, u)).collect::<Result<_>>()?;
    let mut users = Vec::with_capacity(per_user.len());
    let mut rows = Vec::new();
    for (u, r) in per_user {
        users.push(u);
        rows.extend(r);
    }
    rows.par_sort_unstable_by(|a, b| (a.0, &a.1, a.2).cmp(&(b.0, &b.1, b.2)));
    Ok(SyntheticRecords { users, lines: rows.into_iter().map(|r| r.3).collect() })
}
