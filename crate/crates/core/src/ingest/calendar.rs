//! Simulation calendar.
//!
//! Hours are indexed in UTC from 1 January 00:00 of the simulation year. Local
//! civil time (clock hour, weekday, holidays) is derived on demand from a fixed
//! standard offset plus daylight-saving periods, so a DST switch never creates a
//! gap or a duplicate in the hour sequence.

use std::collections::BTreeSet;
use std::path::Path;

use chrono::{
    DateTime, Datelike, Duration, NaiveDate, NaiveDateTime, TimeZone, Timelike, Utc, Weekday,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DayKind {
    Weekday,
    Weekend,
}

impl DayKind {
    pub const ALL: [DayKind; 2] = [DayKind::Weekday, DayKind::Weekend];

    pub fn as_str(self) -> &'static str {
        match self {
            DayKind::Weekday => "weekday",
            DayKind::Weekend => "weekend",
        }
    }
}

/// A half-open UTC interval during which clocks are advanced by one hour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DstPeriod {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DstRules {
    None,
    /// EU rule: last Sunday of March to last Sunday of October, 01:00 UTC.
    Eu,
    Explicit(Vec<DstPeriod>),
}

#[derive(Debug, Clone)]
pub struct Calendar {
    year: i32,
    holidays: BTreeSet<NaiveDate>,
    utc_offset: Duration,
    dst: Vec<DstPeriod>,
    holidays_as_weekend: bool,
    start: DateTime<Utc>,
    hours: usize,
}

fn last_sunday(year: i32, month: u32) -> NaiveDate {
    let first_next = if month == 12 {
        NaiveDate::from_ymd_opt(year + 1, 1, 1)
    } else {
        NaiveDate::from_ymd_opt(year, month + 1, 1)
    }
    .expect("valid month start");
    let mut d = first_next - Duration::days(1);
    while d.weekday() != Weekday::Sun {
        d -= Duration::days(1);
    }
    d
}

fn eu_period(year: i32) -> DstPeriod {
    let at_one = |d: NaiveDate| Utc.from_utc_datetime(&d.and_hms_opt(1, 0, 0).unwrap());
    DstPeriod {
        start: at_one(last_sunday(year, 3)),
        end: at_one(last_sunday(year, 10)),
    }
}

pub fn is_leap_year(year: i32) -> bool {
    (year % 4 == 0 && year % 100 != 0) || year % 400 == 0
}

pub fn hours_in_year(year: i32) -> usize {
    if is_leap_year(year) {
        8784
    } else {
        8760
    }
}

/// Build a calendar for `year` with the given holidays and DST rules.
///
/// The standard offset defaults to UTC+1 (Central European Time); use
/// [`Calendar::with_utc_offset`] to change it.
pub fn build_calendar(year: i32, holidays: &[NaiveDate], dst: &DstRules) -> Result<Calendar> {
    if year < 1970 {
        return Err(Error::invalid(format!(
            "calendar year {year} is before 1970"
        )));
    }
    if let Some(d) = holidays.iter().find(|d| d.year() != year) {
        return Err(Error::invalid(format!(
            "holiday {d} is outside year {year}"
        )));
    }
    let dst = match dst {
        DstRules::None => Vec::new(),
        DstRules::Eu => vec![eu_period(year)],
        DstRules::Explicit(periods) => {
            for p in periods {
                if p.end <= p.start {
                    return Err(Error::invalid(format!(
                        "DST period ends ({}) before it starts ({})",
                        p.end, p.start
                    )));
                }
            }
            periods.clone()
        }
    };
    let start = Utc.with_ymd_and_hms(year, 1, 1, 0, 0, 0).unwrap();
    Ok(Calendar {
        year,
        holidays: holidays.iter().copied().collect(),
        utc_offset: Duration::hours(1),
        dst,
        holidays_as_weekend: true,
        start,
        hours: hours_in_year(year),
    })
}

impl Calendar {
    pub fn with_utc_offset(mut self, hours: i64) -> Self {
        self.utc_offset = Duration::hours(hours);
        self
    }

    pub fn with_holidays_as_weekend(mut self, yes: bool) -> Self {
        self.holidays_as_weekend = yes;
        self
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn hours(&self) -> usize {
        self.hours
    }

    pub fn holidays(&self) -> &BTreeSet<NaiveDate> {
        &self.holidays
    }

    pub fn utc(&self, hour: usize) -> DateTime<Utc> {
        self.start + Duration::hours(hour as i64)
    }

    /// UTC hour index of an instant, if it falls within the year.
    pub fn hour_index(&self, instant: DateTime<Utc>) -> Option<usize> {
        let delta = instant - self.start;
        if delta.num_seconds() % 3600 != 0 || delta < Duration::zero() {
            return None;
        }
        let h = delta.num_hours() as usize;
        (h < self.hours).then_some(h)
    }

    fn in_dst(&self, t: DateTime<Utc>) -> bool {
        self.dst.iter().any(|p| t >= p.start && t < p.end)
    }

    pub fn local(&self, hour: usize) -> NaiveDateTime {
        let t = self.utc(hour);
        let mut offset = self.utc_offset;
        if self.in_dst(t) {
            offset += Duration::hours(1);
        }
        t.naive_utc() + offset
    }

    pub fn local_hour_of_day(&self, hour: usize) -> u32 {
        self.local(hour).hour()
    }

    pub fn is_holiday(&self, hour: usize) -> bool {
        self.holidays.contains(&self.local(hour).date())
    }

    pub fn day_kind(&self, hour: usize) -> DayKind {
        let local = self.local(hour);
        let weekend = matches!(local.weekday(), Weekday::Sat | Weekday::Sun);
        if weekend || (self.holidays_as_weekend && self.holidays.contains(&local.date())) {
            DayKind::Weekend
        } else {
            DayKind::Weekday
        }
    }
}

/// Gregorian Easter Sunday (anonymous algorithm).
fn easter_sunday(year: i32) -> NaiveDate {
    let a = year % 19;
    let b = year / 100;
    let c = year % 100;
    let d = b / 4;
    let e = b % 4;
    let f = (b + 8) / 25;
    let g = (b - f + 1) / 3;
    let h = (19 * a + b - d - g + 15) % 30;
    let i = c / 4;
    let k = c % 4;
    let l = (32 + 2 * e + 2 * i - h - k) % 7;
    let m = (a + 11 * h + 22 * l) / 451;
    let month = (h + l - 7 * m + 114) / 31;
    let day = (h + l - 7 * m + 114) % 31 + 1;
    NaiveDate::from_ymd_opt(year, month as u32, day as u32).unwrap()
}

/// Official public holidays in the Netherlands.
///
/// Good Friday is excluded (not a general day off). Liberation Day is
/// included only in lustrum years, when it is a national day off.
pub fn netherlands_holidays(year: i32) -> Vec<NaiveDate> {
    let ymd = |m, d| NaiveDate::from_ymd_opt(year, m, d).unwrap();
    let easter = easter_sunday(year);
    let royal = if year >= 2014 {
        let d = ymd(4, 27);
        if d.weekday() == Weekday::Sun {
            ymd(4, 26)
        } else {
            d
        }
    } else {
        let d = ymd(4, 30);
        if d.weekday() == Weekday::Sun {
            ymd(4, 29)
        } else {
            d
        }
    };
    let mut days = vec![
        ymd(1, 1),
        easter,
        easter + Duration::days(1),
        royal,
        easter + Duration::days(39),
        easter + Duration::days(49),
        easter + Duration::days(50),
        ymd(12, 25),
        ymd(12, 26),
    ];
    if year % 5 == 0 {
        days.push(ymd(5, 5));
    }
    days.sort();
    days
}

/// On-disk calendar description.
///
/// ```toml
/// year = 2014
/// utc_offset_hours = 1
/// holidays = ["2014-01-01", "2014-04-21"]
/// dst = "eu"            # or "none", or use [[dst_transitions]]
///
/// [[dst_transitions]]
/// start = "2014-03-30T01:00:00Z"
/// end = "2014-10-26T01:00:00Z"
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalendarConfig {
    pub year: i32,
    #[serde(default = "default_offset")]
    pub utc_offset_hours: i64,
    #[serde(default)]
    pub holidays: Vec<String>,
    /// Use the built-in Dutch public holiday list instead of `holidays`.
    #[serde(default)]
    pub dutch_holidays: bool,
    #[serde(default)]
    pub dst: Option<String>,
    #[serde(default)]
    pub dst_transitions: Vec<DstTransitionConfig>,
    #[serde(default = "default_true")]
    pub holidays_as_weekend: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DstTransitionConfig {
    pub start: String,
    pub end: String,
}

fn default_offset() -> i64 {
    1
}

fn default_true() -> bool {
    true
}

fn parse_instant(s: &str) -> Result<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s)
        .map(|d| d.with_timezone(&Utc))
        .map_err(|e| Error::Config(format!("malformed instant `{s}`: {e}")))
}

impl CalendarConfig {
    pub fn dutch(year: i32) -> Self {
        CalendarConfig {
            year,
            utc_offset_hours: 1,
            holidays: Vec::new(),
            dutch_holidays: true,
            dst: Some("eu".into()),
            dst_transitions: Vec::new(),
            holidays_as_weekend: true,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("calendar: {e}")))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn build(&self) -> Result<Calendar> {
        let mut holidays = Vec::with_capacity(self.holidays.len());
        for s in &self.holidays {
            let d = NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .map_err(|e| Error::Config(format!("malformed holiday date `{s}`: {e}")))?;
            holidays.push(d);
        }
        if self.dutch_holidays {
            holidays.extend(netherlands_holidays(self.year));
        }
        let rules = if !self.dst_transitions.is_empty() {
            let periods = self
                .dst_transitions
                .iter()
                .map(|t| {
                    Ok(DstPeriod {
                        start: parse_instant(&t.start)?,
                        end: parse_instant(&t.end)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            DstRules::Explicit(periods)
        } else {
            match self.dst.as_deref() {
                None | Some("none") => DstRules::None,
                Some("eu") => DstRules::Eu,
                Some(other) => return Err(Error::Config(format!("unknown DST rule `{other}`"))),
            }
        };
        Ok(build_calendar(self.year, &holidays, &rules)?
            .with_utc_offset(self.utc_offset_hours)
            .with_holidays_as_weekend(self.holidays_as_weekend))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nl2014() -> Calendar {
        CalendarConfig::dutch(2014).build().unwrap()
    }

    #[test]
    fn year_2014_has_8760_hours() {
        assert_eq!(nl2014().hours(), 8760);
        let leap = build_calendar(2016, &[], &DstRules::None).unwrap();
        assert_eq!(leap.hours(), 8784);
    }

    #[test]
    fn easter_monday_is_weekend_kind() {
        let cal = nl2014();
        let d = NaiveDate::from_ymd_opt(2014, 4, 21).unwrap();
        assert!(cal.holidays().contains(&d));
        // 2014-04-21 12:00 local (CEST) = 10:00 UTC
        let t = Utc.with_ymd_and_hms(2014, 4, 21, 10, 0, 0).unwrap();
        let h = cal.hour_index(t).unwrap();
        assert_eq!(cal.local(h).date(), d);
        assert_eq!(cal.day_kind(h), DayKind::Weekend);

        let plain = cal.clone().with_holidays_as_weekend(false);
        assert_eq!(plain.day_kind(h), DayKind::Weekday);
    }

    #[test]
    fn spring_forward_skips_local_0230_without_gap() {
        let cal = nl2014();
        let t = Utc.with_ymd_and_hms(2014, 3, 30, 0, 0, 0).unwrap();
        let h = cal.hour_index(t).unwrap();
        assert_eq!(cal.local_hour_of_day(h), 1);
        assert_eq!(cal.local_hour_of_day(h + 1), 3);
        for i in 0..cal.hours() - 1 {
            assert_eq!(cal.utc(i + 1) - cal.utc(i), Duration::hours(1));
        }
    }

    #[test]
    fn fall_back_repeats_local_hour() {
        let cal = nl2014();
        let t = Utc.with_ymd_and_hms(2014, 10, 26, 0, 0, 0).unwrap();
        let h = cal.hour_index(t).unwrap();
        assert_eq!(cal.local_hour_of_day(h), 2);
        assert_eq!(cal.local_hour_of_day(h + 1), 2);
    }

    #[test]
    fn eu_transitions_2014() {
        let p = eu_period(2014);
        assert_eq!(p.start, Utc.with_ymd_and_hms(2014, 3, 30, 1, 0, 0).unwrap());
        assert_eq!(p.end, Utc.with_ymd_and_hms(2014, 10, 26, 1, 0, 0).unwrap());
    }

    #[test]
    fn weekday_plus_weekend_hours_cover_year() {
        let cal = nl2014();
        let weekday = (0..cal.hours())
            .filter(|&h| cal.day_kind(h) == DayKind::Weekday)
            .count();
        let weekend = (0..cal.hours())
            .filter(|&h| cal.day_kind(h) == DayKind::Weekend)
            .count();
        assert_eq!(weekday + weekend, 8760);
        // 261 weekdays in 2014, 6 of them holidays; the final UTC hour is
        // local midnight of Thursday 2015-01-01.
        assert_eq!(weekday, (261 - 6) * 24 + 1);
    }

    #[test]
    fn dutch_holidays_2014() {
        let days: Vec<String> = netherlands_holidays(2014)
            .iter()
            .map(|d| d.to_string())
            .collect();
        assert_eq!(
            days,
            [
                "2014-01-01",
                "2014-04-20",
                "2014-04-21",
                "2014-04-26",
                "2014-05-29",
                "2014-06-08",
                "2014-06-09",
                "2014-12-25",
                "2014-12-26"
            ]
        );
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(build_calendar(1969, &[], &DstRules::None).is_err());
        let wrong_year = NaiveDate::from_ymd_opt(2015, 1, 1).unwrap();
        assert!(build_calendar(2014, &[wrong_year], &DstRules::None).is_err());
        let cfg = CalendarConfig::from_toml("year = 2014\nholidays = [\"2014-13-01\"]").unwrap();
        assert!(matches!(cfg.build(), Err(Error::Config(_))));
    }

    #[test]
    fn explicit_transitions_from_toml() {
        let cfg = CalendarConfig::from_toml(
            r#"
            year = 2014
            holidays = ["2014-01-01"]
            [[dst_transitions]]
            start = "2014-03-30T01:00:00Z"
            end = "2014-10-26T01:00:00Z"
            "#,
        )
        .unwrap();
        let explicit = cfg.build().unwrap();
        let eu = build_calendar(2014, &[], &DstRules::Eu).unwrap();
        for h in 0..8760 {
            assert_eq!(explicit.local(h), eu.local(h));
        }
    }
}
