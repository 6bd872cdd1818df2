//! Per-cell POI-class probability profiles and their binary cache.
//!
//! The class probability of a lattice point is the normalized sum of the
//! Gaussian densities of every POI within the valid range, evaluated at the
//! point's distance to that POI. Records inherit the profile of their cell.

use std::collections::HashMap;
use std::io::{Read, Write};

use rayon::prelude::*;

use super::lattice::{CityConfig, Lattice, LocalFrame};
use super::poi::{Poi, POI_CLASS_COUNT};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::Cell;

pub const PROFILE_MAGIC: &[u8; 4] = b"UFGP";

/// Zero-mean normal density with standard deviation `sigma`, at `x`.
pub fn normal_pdf<T: Scalar>(x: T, sigma: T) -> T {
    let two = T::of(2.0);
    (-(x * x) / (two * sigma * sigma)).exp() / (sigma * (two * T::PI()).sqrt())
}

/// Profile of one cell: a probability vector over the POI classes, or all
/// zeros when no POI lies within range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoiProfile<'a, T> {
    pub cell: Cell,
    pub q: &'a [T],
}

/// Dense row-major profiles for every lattice cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileGrid<T> {
    cols: u32,
    rows: u32,
    q: Vec<T>,
}

impl<T: Scalar> ProfileGrid<T> {
    pub fn zeros(cols: u32, rows: u32) -> Self {
        Self { cols, rows, q: vec![T::zero(); cols as usize * rows as usize * POI_CLASS_COUNT] }
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    fn offset(&self, cell: Cell) -> usize {
        (cell.row as usize * self.cols as usize + cell.col as usize) * POI_CLASS_COUNT
    }

    pub fn row(&self, cell: Cell) -> &[T] {
        let o = self.offset(cell);
        &self.q[o..o + POI_CLASS_COUNT]
    }

    pub fn row_mut(&mut self, cell: Cell) -> &mut [T] {
        let o = self.offset(cell);
        &mut self.q[o..o + POI_CLASS_COUNT]
    }

    /// True when no POI influences the cell.
    pub fn is_empty_at(&self, cell: Cell) -> bool {
        self.row(cell).iter().all(|v| v.is_zero())
    }

    pub fn profiles(&self) -> impl Iterator<Item = GridPoiProfile<'_, T>> {
        let cols = self.cols;
        self.q.chunks_exact(POI_CLASS_COUNT).enumerate().map(move |(i, q)| GridPoiProfile {
            cell: Cell::new((i % cols as usize) as u32, (i / cols as usize) as u32),
            q,
        })
    }

    /// Little-endian cache: magic, `cols`, `rows`, class count, then
    /// row-major `f32` class vectors.
    pub fn write_cache<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(PROFILE_MAGIC)?;
        for v in [self.cols, self.rows, POI_CLASS_COUNT as u32] {
            w.write_all(&v.to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(self.q.len() * 4);
        for v in &self.q {
            buf.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
        }
        w.write_all(&buf)
    }

    pub fn read_cache<R: Read>(mut r: R) -> Result<Self> {
        let ctx = "profile cache";
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes).map_err(|e| Error::io(ctx, e))?;
        if bytes.len() < 16 || &bytes[..4] != PROFILE_MAGIC {
            return Err(Error::data(ctx, "missing UFGP header"));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
        let (cols, rows, classes) = (word(0), word(1), word(2));
        if classes as usize != POI_CLASS_COUNT {
            return Err(Error::data(ctx, format!("expected {POI_CLASS_COUNT} classes, found {classes}")));
        }
        let n = cols as usize * rows as usize * POI_CLASS_COUNT;
        let body = &bytes[16..];
        if body.len() != n * 4 {
            return Err(Error::data(ctx, format!("expected {} payload bytes, found {}", n * 4, body.len())));
        }
        let q = body.chunks_exact(4).map(|c| T::of(f64::from(f32::from_le_bytes(c.try_into().unwrap())))).collect();
        Ok(Self { cols, rows, q })
    }
}

/// Uniform bucket grid over POIs, with buckets as wide as the query radius.
pub struct PoiIndex<'a> {
    pois: &'a [Poi],
    frame: LocalFrame,
    origin: (f64, f64),
    bucket_m: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl<'a> PoiIndex<'a> {
    pub fn new(pois: &'a [Poi], frame: LocalFrame, origin: (f64, f64), bucket_m: f64) -> Self {
        let mut index = Self { pois, frame, origin, bucket_m, buckets: HashMap::new() };
        for (i, p) in pois.iter().enumerate() {
            let key = index.bucket((p.lon, p.lat));
            index.buckets.entry(key).or_default().push(i);
        }
        index
    }

    fn bucket(&self, p: (f64, f64)) -> (i64, i64) {
        let (x, y) = self.frame.offset_m(self.origin, p);
        ((x / self.bucket_m).floor() as i64, (y / self.bucket_m).floor() as i64)
    }

    /// POIs within `radius_m` (at most the bucket size) of `p`, with distances.
    pub fn within(&self, p: (f64, f64), radius_m: f64) -> impl Iterator<Item = (&'a Poi, f64)> + '_ {
        debug_assert!(radius_m <= self.bucket_m);
        let (bx, by) = self.bucket(p);
        (-1..=1)
            .flat_map(move |dy| (-1..=1).map(move |dx| (bx + dx, by + dy)))
            .filter_map(|k| self.buckets.get(&k))
            .flatten()
            .filter_map(move |&i| {
                let poi = &self.pois[i];
                let d = self.frame.distance_m(p, (poi.lon, poi.lat));
                (d <= radius_m).then_some((poi, d))
            })
    }
}

/// Accumulates the unnormalized class weights at one location.
pub fn class_weights<T: Scalar>(index: &PoiIndex<'_>, at: (f64, f64), valid_range_m: f64) -> [T; POI_CLASS_COUNT] {
    let mut acc = [T::zero(); POI_CLASS_COUNT];
    for (poi, d) in index.within(at, valid_range_m) {
        acc[poi.class.index()] = acc[poi.class.index()] + normal_pdf(T::of(d), T::of(poi.sigma_m()));
    }
    acc
}

/// Normalizes `w` in place to sum to one; leaves an all-zero vector alone.
pub fn normalize<T: Scalar>(w: &mut [T]) {
    let total: T = w.iter().copied().sum();
    if total > T::zero() {
        w.iter_mut().for_each(|v| *v = *v / total);
    }
}

/// Computes the class profile of every lattice cell center.
pub fn grid_poi_profiles<T: Scalar>(lattice: &Lattice, pois: &[Poi], cfg: &CityConfig) -> ProfileGrid<T> {
    let range = cfg.poi_valid_range_m;
    let index = PoiIndex::new(pois, lattice.frame, (lattice.origin_lon, lattice.origin_lat), range);
    let mut grid = ProfileGrid::zeros(lattice.cols, lattice.rows);
    let row_len = lattice.cols as usize * POI_CLASS_COUNT;
    grid.q.par_chunks_mut(row_len).enumerate().for_each(|(row, out)| {
        for (col, q) in out.chunks_exact_mut(POI_CLASS_COUNT).enumerate() {
            let center = lattice.center(Cell::new(col as u32, row as u32));
            let mut w = class_weights::<T>(&index, center, range);
            normalize(&mut w);
            q.copy_from_slice(&w);
        }
    });
    grid
}
