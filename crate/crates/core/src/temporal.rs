//! Time windows, duration limits, overlap and sequencing.
//!
//! All intervals are start-inclusive and end-exclusive. Instants are
//! timezone-naive local civil time.

use std::collections::BTreeSet;
use std::fmt;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Timelike, Weekday};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemporalError {
    #[error("negative interval: end {end} precedes start {start}")]
    NegativeInterval { start: NaiveDateTime, end: NaiveDateTime },
    #[error("invalid time window: {0}")]
    InvalidWindow(String),
    #[error("invalid duration: {0}")]
    InvalidDuration(String),
}

/// Minutes since midnight, `0..=1440`. 1440 is accepted as an end bound
/// so that windows may run "until midnight".
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TimeOfDay(u16);

impl TimeOfDay {
    pub const MIDNIGHT: TimeOfDay = TimeOfDay(0);
    pub const END_OF_DAY: TimeOfDay = TimeOfDay(24 * 60);

    pub fn new(hour: u32, minute: u32) -> Result<Self, TemporalError> {
        if minute >= 60 || hour > 24 || (hour == 24 && minute != 0) {
            return Err(TemporalError::InvalidWindow(format!(
                "{hour:02}:{minute:02} is not a time of day"
            )));
        }
        Ok(TimeOfDay((hour * 60 + minute) as u16))
    }

    pub fn of(t: &NaiveDateTime) -> Self {
        TimeOfDay((t.hour() * 60 + t.minute()) as u16)
    }

    pub fn minutes(self) -> u32 {
        self.0 as u32
    }

    /// Parses `HH:MM`.
    pub fn parse(s: &str) -> Result<Self, TemporalError> {
        let bad = || TemporalError::InvalidWindow(format!("expected HH:MM, got `{s}`"));
        let (h, m) = s.trim().split_once(':').ok_or_else(bad)?;
        let h: u32 = h.parse().map_err(|_| bad())?;
        let m: u32 = m.parse().map_err(|_| bad())?;
        Self::new(h, m)
    }
}

impl fmt::Display for TimeOfDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}", self.0 / 60, self.0 % 60)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TimeWindow {
    Absolute {
        start: NaiveDateTime,
        end: NaiveDateTime,
    },
    DailyRecurring {
        start: TimeOfDay,
        end: TimeOfDay,
        /// `None` means every day of the week.
        days: Option<BTreeSet<WeekdaySet>>,
    },
}

/// Weekday wrapper with a total order (Monday first) so it can live in a
/// `BTreeSet`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WeekdaySet(u8);

impl WeekdaySet {
    pub fn from_weekday(d: Weekday) -> Self {
        WeekdaySet(d.num_days_from_monday() as u8)
    }

    pub fn weekday(self) -> Weekday {
        match self.0 {
            0 => Weekday::Mon,
            1 => Weekday::Tue,
            2 => Weekday::Wed,
            3 => Weekday::Thu,
            4 => Weekday::Fri,
            5 => Weekday::Sat,
            _ => Weekday::Sun,
        }
    }

    fn short(self) -> &'static str {
        ["mon", "tue", "wed", "thu", "fri", "sat", "sun"][self.0 as usize]
    }

    pub fn parse(s: &str) -> Option<Self> {
        let idx = ["mon", "tue", "wed", "thu", "fri", "sat", "sun"]
            .iter()
            .position(|d| s.eq_ignore_ascii_case(d))?;
        Some(WeekdaySet(idx as u8))
    }
}

impl TimeWindow {
    pub fn absolute(start: NaiveDateTime, end: NaiveDateTime) -> Result<Self, TemporalError> {
        if start >= end {
            return Err(TemporalError::InvalidWindow(format!(
                "absolute window start {start} must precede end {end}"
            )));
        }
        Ok(TimeWindow::Absolute { start, end })
    }

    pub fn daily(start: TimeOfDay, end: TimeOfDay) -> Result<Self, TemporalError> {
        Self::daily_on(start, end, None)
    }

    pub fn daily_on(
        start: TimeOfDay,
        end: TimeOfDay,
        days: Option<BTreeSet<WeekdaySet>>,
    ) -> Result<Self, TemporalError> {
        if start >= end {
            return Err(TemporalError::InvalidWindow(format!(
                "daily window start {start} must precede end {end}"
            )));
        }
        if matches!(&days, Some(d) if d.is_empty()) {
            return Err(TemporalError::InvalidWindow("empty day set".into()));
        }
        Ok(TimeWindow::DailyRecurring { start, end, days })
    }

    /// Half-open window `[start, +inf)`.
    pub fn from_instant(start: NaiveDateTime) -> Self {
        TimeWindow::Absolute {
            start,
            end: NaiveDateTime::MAX,
        }
    }

    /// Half-open window `(-inf, end)`.
    pub fn until(end: NaiveDateTime) -> Self {
        TimeWindow::Absolute {
            start: NaiveDateTime::MIN,
            end,
        }
    }

    fn day_allowed(days: &Option<BTreeSet<WeekdaySet>>, d: Weekday) -> bool {
        days.as_ref()
            .is_none_or(|set| set.contains(&WeekdaySet::from_weekday(d)))
    }
}

impl fmt::Display for TimeWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeWindow::Absolute { start, end } => {
                write!(f, "between({},{})", fmt_instant(start), fmt_instant(end))
            }
            TimeWindow::DailyRecurring { start, end, days } => {
                write!(f, "daily({start},{end}")?;
                if let Some(days) = days {
                    let names: Vec<_> = days.iter().map(|d| d.short()).collect();
                    write!(f, ",{}", names.join("+"))?;
                }
                write!(f, ")")
            }
        }
    }
}

pub fn fmt_instant(t: &NaiveDateTime) -> String {
    if t.second() == 0 {
        t.format("%Y-%m-%dT%H:%M").to_string()
    } else {
        t.format("%Y-%m-%dT%H:%M:%S").to_string()
    }
}

/// Parses an ISO-8601 local date-time (`2024-06-01T12:30[:00]`) or a bare
/// date, which is taken as midnight.
pub fn parse_instant(s: &str) -> Result<NaiveDateTime, TemporalError> {
    let s = s.trim();
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(t);
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight is valid"))
        .map_err(|_| TemporalError::InvalidWindow(format!("`{s}` is not an ISO-8601 instant")))
}

/// Parses `60min`, `60 minutes`, `2h`, `1 hour`, or a bare number of minutes.
pub fn parse_minutes(s: &str) -> Result<i64, TemporalError> {
    let t = s.trim();
    let split = t
        .find(|c: char| !(c.is_ascii_digit() || c == '.'))
        .unwrap_or(t.len());
    let (num, unit) = t.split_at(split);
    let n: f64 = num
        .parse()
        .map_err(|_| TemporalError::InvalidDuration(s.to_string()))?;
    let scale = match unit.trim().to_ascii_lowercase().as_str() {
        "" | "m" | "min" | "mins" | "minute" | "minutes" => 1.0,
        "h" | "hr" | "hrs" | "hour" | "hours" => 60.0,
        "d" | "day" | "days" => 1440.0,
        _ => return Err(TemporalError::InvalidDuration(s.to_string())),
    };
    let minutes = n * scale;
    if minutes.fract() != 0.0 {
        return Err(TemporalError::InvalidDuration(format!(
            "{s} is not a whole number of minutes"
        )));
    }
    Ok(minutes as i64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DurationLimit {
    limit: Duration,
}

impl DurationLimit {
    pub fn minutes(m: i64) -> Result<Self, TemporalError> {
        if m <= 0 {
            return Err(TemporalError::InvalidDuration(format!(
                "limit must be positive, got {m} min"
            )));
        }
        Ok(DurationLimit {
            limit: Duration::minutes(m),
        })
    }

    pub fn limit(&self) -> Duration {
        self.limit
    }
}

pub fn in_window(t: &NaiveDateTime, w: &TimeWindow) -> bool {
    match w {
        TimeWindow::Absolute { start, end } => start <= t && t < end,
        TimeWindow::DailyRecurring { start, end, days } => {
            let tod = TimeOfDay::of(t);
            TimeWindow::day_allowed(days, t.weekday()) && *start <= tod && tod < *end
        }
    }
}

/// True iff the interval from `start` to `end` is strictly longer than the limit.
pub fn duration_exceeds(
    start: &NaiveDateTime,
    end: &NaiveDateTime,
    lim: &DurationLimit,
) -> Result<bool, TemporalError> {
    if end < start {
        return Err(TemporalError::NegativeInterval {
            start: *start,
            end: *end,
        });
    }
    Ok(*end - *start > lim.limit)
}

pub fn sequence_ok(t1: &NaiveDateTime, t2: &NaiveDateTime, max_gap: Duration) -> bool {
    t2 >= t1 && *t2 - *t1 <= max_gap
}

pub fn overlaps(w1: &TimeWindow, w2: &TimeWindow) -> bool {
    use TimeWindow::*;
    match (w1, w2) {
        (Absolute { start: s1, end: e1 }, Absolute { start: s2, end: e2 }) => {
            s1.max(s2) < e1.min(e2)
        }
        (
            DailyRecurring {
                start: s1,
                end: e1,
                days: d1,
            },
            DailyRecurring {
                start: s2,
                end: e2,
                days: d2,
            },
        ) => {
            let shared_day = match (d1, d2) {
                (Some(a), Some(b)) => a.intersection(b).next().is_some(),
                _ => true,
            };
            shared_day && s1.max(s2) < e1.min(e2)
        }
        (Absolute { start, end }, daily @ DailyRecurring { .. })
        | (daily @ DailyRecurring { .. }, Absolute { start, end }) => {
            absolute_meets_daily(start, end, daily)
        }
    }
}

fn absolute_meets_daily(start: &NaiveDateTime, end: &NaiveDateTime, daily: &TimeWindow) -> bool {
    let TimeWindow::DailyRecurring {
        start: ds,
        end: de,
        days,
    } = daily
    else {
        unreachable!("caller passes a daily window")
    };
    // Eight consecutive calendar days cover every weekday with at least one
    // full day, so longer spans only need the first eight.
    let mut date = start.date();
    for _ in 0..9 {
        if date > end.date() {
            break;
        }
        if TimeWindow::day_allowed(days, date.weekday()) {
            let midnight = date.and_hms_opt(0, 0, 0).expect("midnight is valid");
            let occ_start = midnight + Duration::minutes(ds.minutes() as i64);
            let occ_end = midnight + Duration::minutes(de.minutes() as i64);
            if *start.max(&occ_start) < *end.min(&occ_end) {
                return true;
            }
        }
        match date.succ_opt() {
            Some(d) => date = d,
            None => break,
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(s: &str) -> NaiveDateTime {
        parse_instant(s).unwrap()
    }

    fn daily(a: &str, b: &str) -> TimeWindow {
        TimeWindow::daily(TimeOfDay::parse(a).unwrap(), TimeOfDay::parse(b).unwrap()).unwrap()
    }

    #[test]
    fn daylight_window_is_start_inclusive() {
        let w = daily("06:00", "18:00");
        assert!(in_window(&at("2024-06-03T12:30"), &w));
        assert!(in_window(&at("2024-06-03T06:00"), &w));
        assert!(!in_window(&at("2024-06-03T05:59"), &w));
        assert!(!in_window(&at("2024-06-03T18:00"), &w));
    }

    #[test]
    fn absolute_window_around_instant() {
        let t = at("2024-06-03T09:15");
        let w = TimeWindow::absolute(t - Duration::hours(1), t + Duration::hours(1)).unwrap();
        assert!(in_window(&t, &w));
    }

    #[test]
    fn weekday_restriction() {
        let mut days = BTreeSet::new();
        days.insert(WeekdaySet::from_weekday(Weekday::Mon));
        let w = TimeWindow::daily_on(
            TimeOfDay::parse("11:00").unwrap(),
            TimeOfDay::parse("14:00").unwrap(),
            Some(days),
        )
        .unwrap();
        // 2024-06-03 is a Monday.
        assert!(in_window(&at("2024-06-03T12:00"), &w));
        assert!(!in_window(&at("2024-06-04T12:00"), &w));
    }

    #[test]
    fn duration_limit_is_strict() {
        let lim = DurationLimit::minutes(60).unwrap();
        let s = at("2024-06-03T10:00");
        assert!(duration_exceeds(&s, &(s + Duration::minutes(75)), &lim).unwrap());
        assert!(!duration_exceeds(&s, &(s + Duration::minutes(60)), &lim).unwrap());
        assert!(!duration_exceeds(&s, &s, &lim).unwrap());
        assert!(matches!(
            duration_exceeds(&s, &(s - Duration::minutes(1)), &lim),
            Err(TemporalError::NegativeInterval { .. })
        ));
        assert!(DurationLimit::minutes(0).is_err());
    }

    #[test]
    fn interval_overlap_is_closed_open() {
        assert!(overlaps(&daily("10:00", "12:00"), &daily("11:00", "13:00")));
        assert!(!overlaps(&daily("10:00", "12:00"), &daily("12:00", "13:00")));
        let a = TimeWindow::absolute(at("2024-06-03T10:00"), at("2024-06-03T12:00")).unwrap();
        let b = TimeWindow::absolute(at("2024-06-03T12:00"), at("2024-06-03T13:00")).unwrap();
        assert!(!overlaps(&a, &b));
        assert!(overlaps(&a, &daily("11:30", "11:45")));
        assert!(!overlaps(&a, &daily("13:00", "14:00")));
    }

    #[test]
    fn sequence_gap() {
        let t1 = at("2024-06-03T10:00");
        let max = Duration::minutes(30);
        assert!(sequence_ok(&t1, &(t1 + Duration::minutes(20)), max));
        assert!(!sequence_ok(&t1, &(t1 + Duration::minutes(31)), max));
        assert!(!sequence_ok(&t1, &(t1 - Duration::minutes(5)), max));
    }

    #[test]
    fn window_invariants() {
        assert!(TimeWindow::daily(TimeOfDay::parse("18:00").unwrap(), TimeOfDay::parse("06:00").unwrap()).is_err());
        assert!(TimeOfDay::parse("24:00").is_ok());
        assert!(TimeOfDay::parse("24:01").is_err());
        assert_eq!(parse_minutes("60min").unwrap(), 60);
        assert_eq!(parse_minutes("2 hours").unwrap(), 120);
        assert!(parse_minutes("soon").is_err());
    }
}
