use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::ingest::SLOTS_PER_DAY;

/// Feature space a user vector is built over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Basis {
    /// POI classes, via the cell profile of each record.
    Poi,
    /// Administrative divisions, one-hot on the containing division.
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Vibrancy,
    Commutation,
    Diversity,
    Fluidity,
    Density,
}

impl MetricKind {
    pub const ALL: [MetricKind; 5] = [
        MetricKind::Vibrancy,
        MetricKind::Commutation,
        MetricKind::Diversity,
        MetricKind::Fluidity,
        MetricKind::Density,
    ];

    /// Star-plot axis order.
    pub const FACET_AXES: [MetricKind; 4] =
        [MetricKind::Fluidity, MetricKind::Vibrancy, MetricKind::Commutation, MetricKind::Diversity];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Vibrancy => "vibrancy",
            MetricKind::Commutation => "commutation",
            MetricKind::Diversity => "diversity",
            MetricKind::Fluidity => "fluidity",
            MetricKind::Density => "density",
        }
    }

    pub fn basis(self) -> Option<Basis> {
        match self {
            MetricKind::Vibrancy | MetricKind::Diversity => Some(Basis::Poi),
            MetricKind::Commutation | MetricKind::Fluidity => Some(Basis::Div),
            MetricKind::Density => None,
        }
    }

    /// Record entropy metrics stamp a per-record value; user entropy metrics
    /// stamp the user's value on every record.
    pub fn is_record_entropy(self) -> bool {
        matches!(self, MetricKind::Diversity | MetricKind::Fluidity)
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Self::ALL.get(usize::from(c)).copied()
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown metric {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TimeBand {
    Morning,
    Forenoon,
    Noon,
    Afternoon,
    Evening,
    Night,
    Midnight,
}

impl TimeBand {
    pub const ALL: [TimeBand; 7] = [
        TimeBand::Morning,
        TimeBand::Forenoon,
        TimeBand::Noon,
        TimeBand::Afternoon,
        TimeBand::Evening,
        TimeBand::Night,
        TimeBand::Midnight,
    ];

    /// The six daytime bands compared side by side; Midnight is left out.
    pub const DAYTIME: [TimeBand; 6] = [
        TimeBand::Morning,
        TimeBand::Forenoon,
        TimeBand::Noon,
        TimeBand::Afternoon,
        TimeBand::Evening,
        TimeBand::Night,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.get(usize::from(id)).copied()
    }

    /// Half-open `[start, end)` hours.
    pub fn hours(self) -> (u32, u32) {
        match self {
            TimeBand::Morning => (6, 9),
            TimeBand::Forenoon => (9, 12),
            TimeBand::Noon => (12, 14),
            TimeBand::Afternoon => (14, 17),
            TimeBand::Evening => (17, 21),
            TimeBand::Night => (21, 24),
            TimeBand::Midnight => (0, 6),
        }
    }

    pub fn of_hour(hour: u32) -> Self {
        Self::ALL.into_iter().find(|b| (b.hours().0..b.hours().1).contains(&hour)).expect("bands cover the day")
    }

    pub fn name(self) -> &'static str {
        match self {
            TimeBand::Morning => "morning",
            TimeBand::Forenoon => "forenoon",
            TimeBand::Noon => "noon",
            TimeBand::Afternoon => "afternoon",
            TimeBand::Evening => "evening",
            TimeBand::Night => "night",
            TimeBand::Midnight => "midnight",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DayType {
    Weekday,
    Weekend,
}

impl DayType {
    pub fn of(day: Weekday) -> Self {
        match day {
            Weekday::Sat | Weekday::Sun => DayType::Weekend,
            _ => DayType::Weekday,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum TimeFilter {
    All,
    TimeOfDay(TimeBand),
    DayOfWeek(DayType),
}

impl TimeFilter {
    /// Every supported filter, in cache-code order.
    pub fn every() -> Vec<TimeFilter> {
        let mut v = vec![TimeFilter::All];
        v.extend(TimeBand::ALL.map(TimeFilter::TimeOfDay));
        v.push(TimeFilter::DayOfWeek(DayType::Weekday));
        v.push(TimeFilter::DayOfWeek(DayType::Weekend));
        v
    }

    pub fn matches(self, timeslot: u32, epoch: NaiveDate) -> bool {
        match self {
            TimeFilter::All => true,
            TimeFilter::TimeOfDay(band) => {
                let hour = (timeslot % SLOTS_PER_DAY) / 6;
                let (start, end) = band.hours();
                (start..end).contains(&hour)
            }
            TimeFilter::DayOfWeek(kind) => {
                let day = epoch.weekday().num_days_from_monday() + timeslot / SLOTS_PER_DAY;
                let weekday = Weekday::try_from((day % 7) as u8).expect("0..7 is a weekday");
                DayType::of(weekday) == kind
            }
        }
    }

    /// Compact code stored in field caches: band ids 0..=6, 7 weekday,
    /// 8 weekend, 255 all.
    pub fn code(self) -> u8 {
        match self {
            TimeFilter::All => 255,
            TimeFilter::TimeOfDay(b) => b.id(),
            TimeFilter::DayOfWeek(DayType::Weekday) => 7,
            TimeFilter::DayOfWeek(DayType::Weekend) => 8,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            255 => Some(TimeFilter::All),
            7 => Some(TimeFilter::DayOfWeek(DayType::Weekday)),
            8 => Some(TimeFilter::DayOfWeek(DayType::Weekend)),
            _ => TimeBand::from_id(c).map(TimeFilter::TimeOfDay),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TimeFilter::All => "all",
            TimeFilter::TimeOfDay(b) => b.name(),
            TimeFilter::DayOfWeek(DayType::Weekday) => "weekday",
            TimeFilter::DayOfWeek(DayType::Weekend) => "weekend",
        }
    }
}

impl fmt::Display for TimeFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TimeFilter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let lower = s.to_ascii_lowercase();
        if let Some(id) = lower.strip_prefix("tod").map(|r| r.trim_start_matches([':', '-'])) {
            if let Some(b) = id.parse().ok().and_then(TimeBand::from_id) {
                return Ok(TimeFilter::TimeOfDay(b));
            }
        }
        Self::every().into_iter().find(|f| f.name() == lower).ok_or_else(|| format!("unknown time filter {s:?}"))
    }
}

impl From<TimeFilter> for String {
    fn from(f: TimeFilter) -> String {
        f.name().to_owned()
    }
}

impl TryFrom<String> for TimeFilter {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}
