//! Little-endian binary caches for fields (`UFMF`) and class breakdowns (`UFBD`).
//!
//! Field layout: magic, metric code (u8), filter code (u8), cols (u32),
//! rows (u32), then `(col u32, row u32, mean f32, count u32)` tuples in
//! cell order until end of file.
//!
//! Breakdown layout: magic, metric code (u8), filter code (u8), cols (u32),
//! rows (u32), classes (u32), then `(col u32, row u32, classes × f32)`.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::{CellStat, ClassBreakdown, GridMetricField};
use crate::entropy::{MetricKind, TimeFilter};
use crate::error::{Error, Result};
use crate::geo::Cell;
use crate::scalar::Scalar;

pub const FIELD_MAGIC: &[u8; 4] = b"UFMF";
pub const BREAKDOWN_MAGIC: &[u8; 4] = b"UFBD";

const HEADER_LEN: usize = 14;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    ctx: &'static str,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let s = self.bytes.get(self.pos..self.pos + n).ok_or_else(|| Error::data(self.ctx, "truncated file"))?;
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn at_end(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

fn header(c: &mut Cursor<'_>, magic: &[u8; 4]) -> Result<(MetricKind, TimeFilter, u32, u32)> {
    if c.take(4)? != magic {
        return Err(Error::data(c.ctx, "bad magic bytes"));
    }
    let metric = MetricKind::from_code(c.u8()?).ok_or_else(|| Error::data(c.ctx, "unknown metric code"))?;
    let filter = TimeFilter::from_code(c.u8()?).ok_or_else(|| Error::data(c.ctx, "unknown filter code"))?;
    Ok((metric, filter, c.u32()?, c.u32()?))
}

fn write_header<W: Write>(
    w: &mut W,
    magic: &[u8; 4],
    metric: MetricKind,
    filter: TimeFilter,
    cols: u32,
    rows: u32,
) -> std::io::Result<()> {
    w.write_all(magic)?;
    w.write_all(&[metric.code(), filter.code()])?;
    w.write_all(&cols.to_le_bytes())?;
    w.write_all(&rows.to_le_bytes())
}

impl<T: Scalar> GridMetricField<T> {
    pub fn to_cache_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(HEADER_LEN + 16 * self.cells.len());
        write_header(&mut buf, FIELD_MAGIC, self.metric, self.filter, self.cols, self.rows).expect("vec write");
        for (cell, stat) in &self.cells {
            buf.extend_from_slice(&cell.col.to_le_bytes());
            buf.extend_from_slice(&cell.row.to_le_bytes());
            buf.extend_from_slice(&(stat.mean.as_f64() as f32).to_le_bytes());
            buf.extend_from_slice(&stat.count.to_le_bytes());
        }
        buf
    }

    pub fn write_cache<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&self.to_cache_bytes())
    }

    pub fn read_cache<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes).map_err(|e| Error::io("field cache", e))?;
        Self::from_cache_bytes(&bytes)
    }

    pub fn from_cache_bytes(bytes: &[u8]) -> Result<Self> {
        let mut c = Cursor { bytes, pos: 0, ctx: "field cache" };
        let (metric, filter, cols, rows) = header(&mut c, FIELD_MAGIC)?;
        if !(bytes.len() - HEADER_LEN).is_multiple_of(16) {
            return Err(Error::data(c.ctx, "payload is not a whole number of tuples"));
        }
        let mut cells = BTreeMap::new();
        while !c.at_end() {
            let cell = Cell::new(c.u32()?, c.u32()?);
            let mean = T::of(f64::from(c.f32()?));
            let count = c.u32()?;
            if cell.col >= cols || cell.row >= rows || count == 0 {
                return Err(Error::data(c.ctx, format!("invalid tuple at cell {cell:?}")));
            }
            cells.insert(cell, CellStat { mean, count });
        }
        Ok(Self { metric, filter, cols, rows, cells })
    }
}

impl<T: Scalar> ClassBreakdown<T> {
    pub fn to_cache_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        write_header(&mut buf, BREAKDOWN_MAGIC, self.metric, self.filter, self.cols, self.rows).expect("vec write");
        buf.extend_from_slice(&(self.classes as u32).to_le_bytes());
        for (cell, v) in &self.cells {
            buf.extend_from_slice(&cell.col.to_le_bytes());
            buf.extend_from_slice(&cell.row.to_le_bytes());
            for x in v {
                buf.extend_from_slice(&(x.as_f64() as f32).to_le_bytes());
            }
        }
        buf
    }

    pub fn from_cache_bytes(bytes: &[u8]) -> Result<Self> {
        let mut c = Cursor { bytes, pos: 0, ctx: "breakdown cache" };
        let (metric, filter, cols, rows) = header(&mut c, BREAKDOWN_MAGIC)?;
        let basis = metric.basis().ok_or_else(|| Error::data(c.ctx, "metric has no class basis"))?;
        let classes = c.u32()? as usize;
        let mut cells = BTreeMap::new();
        while !c.at_end() {
            let cell = Cell::new(c.u32()?, c.u32()?);
            let v = (0..classes).map(|_| c.f32().map(|x| T::of(f64::from(x)))).collect::<Result<Vec<T>>>()?;
            cells.insert(cell, v);
        }
        Ok(Self { metric, filter, basis, classes, cols, rows, cells })
    }
}
