//! Check-in record rows: raw input lines and the cleansed shard format.

use std::fmt;
use std::str::FromStr;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime, Timelike};
use serde::{Deserialize, Serialize};

/// Minutes per discretized time slot.
pub const SLOT_MINUTES: i64 = 10;
/// Time slots per day.
pub const SLOTS_PER_DAY: u32 = 144;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Source {
    Gps,
    Wifi,
    BaseStation,
    Ip,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Gps => "GPS",
            Source::Wifi => "WIFI",
            Source::BaseStation => "BASE_STATION",
            Source::Ip => "IP",
        }
    }

    /// Only satellite and Wi-Fi fixes are precise enough to keep.
    pub fn is_precise(self) -> bool {
        matches!(self, Source::Gps | Source::Wifi)
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s.to_ascii_uppercase().as_str() {
            "GPS" => Ok(Source::Gps),
            "WIFI" | "WI-FI" => Ok(Source::Wifi),
            "BASE_STATION" | "BASESTATION" => Ok(Source::BaseStation),
            "IP" => Ok(Source::Ip),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub time: NaiveDateTime,
    pub lon: f64,
    pub lat: f64,
    pub mid: String,
    pub src: Source,
}

/// Why an input line was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectKind {
    FieldCount,
    Timestamp,
    Number,
    LonRange,
    LatRange,
    DeviceId,
    Source,
    BeforeEpoch,
}

impl RejectKind {
    pub const ALL: [RejectKind; 8] = [
        RejectKind::FieldCount,
        RejectKind::Timestamp,
        RejectKind::Number,
        RejectKind::LonRange,
        RejectKind::LatRange,
        RejectKind::DeviceId,
        RejectKind::Source,
        RejectKind::BeforeEpoch,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {kind:?}")]
pub struct RejectedLine {
    pub line: u64,
    pub kind: RejectKind,
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    // HH:MM/MM/DD/YYYY
    let mut parts = s.split('/');
    let hm = parts.next()?;
    let month: u32 = parts.next()?.parse().ok()?;
    let day: u32 = parts.next()?.parse().ok()?;
    let year: i32 = parts.next()?.parse().ok()?;
    if parts.next().is_some() {
        return None;
    }
    let (h, m) = hm.split_once(':')?;
    let time = NaiveTime::from_hms_opt(h.parse().ok()?, m.parse().ok()?, 0)?;
    Some(NaiveDate::from_ymd_opt(year, month, day)?.and_time(time))
}

/// Decodes one `HH:MM/MM/DD/YYYY,lon,lat,mid,src` input row.
pub fn parse_record(line: &str, line_no: u64) -> Result<RawRecord, RejectedLine> {
    let reject = |kind| RejectedLine { line: line_no, kind };
    let fields: Vec<&str> = line.trim_end_matches(['\r', '\n']).split(',').map(str::trim).collect();
    if fields.len() != 5 {
        return Err(reject(RejectKind::FieldCount));
    }
    let time = parse_timestamp(fields[0]).ok_or(reject(RejectKind::Timestamp))?;
    let lon: f64 = fields[1].parse().map_err(|_| reject(RejectKind::Number))?;
    let lat: f64 = fields[2].parse().map_err(|_| reject(RejectKind::Number))?;
    if !lon.is_finite() || !lat.is_finite() {
        return Err(reject(RejectKind::Number));
    }
    if !(-180.0..=180.0).contains(&lon) {
        return Err(reject(RejectKind::LonRange));
    }
    if !(-90.0..=90.0).contains(&lat) {
        return Err(reject(RejectKind::LatRange));
    }
    let mid = fields[3];
    if mid.is_empty() || !mid.bytes().all(|b| b.is_ascii_digit()) {
        return Err(reject(RejectKind::DeviceId));
    }
    let src = fields[4].parse().map_err(|_| reject(RejectKind::Source))?;
    Ok(RawRecord { time, lon, lat, mid: mid.to_owned(), src })
}

/// Formats a timestamp in the input row layout.
pub fn format_timestamp(t: &NaiveDateTime) -> String {
    t.format("%H:%M/%m/%d/%Y").to_string()
}

/// One cleansed check-in as stored in shard files.
#[derive(Debug, Clone, PartialEq)]
pub struct CleanRecord {
    pub timeslot: u32,
    pub lon: f64,
    pub lat: f64,
    pub mid: String,
    pub src: Source,
}

impl CleanRecord {
    /// Shard row: the input layout with the timestamp replaced by the slot index.
    pub fn to_line(&self) -> String {
        format!("{},{},{},{},{}", self.timeslot, self.lon, self.lat, self.mid, self.src)
    }

    pub fn parse_line(line: &str) -> Option<CleanRecord> {
        let mut it = line.trim_end().split(',');
        let rec = CleanRecord {
            timeslot: it.next()?.parse().ok()?,
            lon: it.next()?.parse().ok()?,
            lat: it.next()?.parse().ok()?,
            mid: it.next()?.to_owned(),
            src: it.next()?.parse().ok()?,
        };
        it.next().is_none().then_some(rec)
    }

    /// Index of the day relative to the dataset's first day.
    pub fn day(&self) -> u32 {
        self.timeslot / SLOTS_PER_DAY
    }

    /// Slot index within its day, 0..144.
    pub fn slot_of_day(&self) -> u32 {
        self.timeslot % SLOTS_PER_DAY
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Discretized {
    Kept(CleanRecord),
    DroppedSource,
    BeforeEpoch,
}

/// Keeps GPS/Wi-Fi records and replaces their time by the 10-minute slot
/// counted from midnight of `epoch`.
pub fn filter_and_discretize(r: RawRecord, epoch: NaiveDate) -> Discretized {
    if !r.src.is_precise() {
        return Discretized::DroppedSource;
    }
    let minutes = (r.time - epoch.and_time(NaiveTime::MIN)).num_minutes();
    if minutes < 0 {
        return Discretized::BeforeEpoch;
    }
    debug_assert_eq!(r.time.second(), 0);
    Discretized::Kept(CleanRecord {
        timeslot: (minutes / SLOT_MINUTES) as u32,
        lon: r.lon,
        lat: r.lat,
        mid: r.mid,
        src: r.src,
    })
}
