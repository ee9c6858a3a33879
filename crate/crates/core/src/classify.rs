//! Time-and-weather categories.
//!
//! Every hour is labelled by day kind (weekday/weekend), time band
//! (night 0–8, day 8–16, evening 16–24 local time) and the quintile bins of
//! solar and wind output expressed as percent of installed capacity,
//! giving 2 × 3 × 5 × 5 = 150 categories. Wind quintiles use all hours;
//! solar quintiles use daylight hours only.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_same_len, Error, Result};
use crate::ingest::{Calendar, DayKind};

pub const BINS: u8 = 5;
pub const QUANTILE_LEVELS: [f64; 4] = [0.2, 0.4, 0.6, 0.8];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeBand {
    Night,
    Day,
    Evening,
}

impl TimeBand {
    pub const ALL: [TimeBand; 3] = [TimeBand::Night, TimeBand::Day, TimeBand::Evening];

    pub fn from_local_hour(hour: u32) -> TimeBand {
        match hour {
            0..=7 => TimeBand::Night,
            8..=15 => TimeBand::Day,
            _ => TimeBand::Evening,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TimeBand::Night => "night",
            TimeBand::Day => "day",
            TimeBand::Evening => "evening",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CategoryKey {
    pub day_kind: DayKind,
    pub time_band: TimeBand,
    /// 1..=5
    pub solar_bin: u8,
    /// 1..=5
    pub wind_bin: u8,
}

impl CategoryKey {
    /// All 150 keys in a fixed order.
    pub fn all() -> Vec<CategoryKey> {
        let mut keys = Vec::with_capacity(150);
        for day_kind in DayKind::ALL {
            for time_band in TimeBand::ALL {
                for solar_bin in 1..=BINS {
                    for wind_bin in 1..=BINS {
                        keys.push(CategoryKey {
                            day_kind,
                            time_band,
                            solar_bin,
                            wind_bin,
                        });
                    }
                }
            }
        }
        keys
    }
}

/// Quintile thresholds in percent of installed capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinEdges {
    pub solar: [f64; 4],
    pub wind: [f64; 4],
}

impl BinEdges {
    pub fn validate(&self) -> Result<()> {
        for (name, e) in [("solar", &self.solar), ("wind", &self.wind)] {
            if e.iter().any(|&v| !(0.0..=100.0).contains(&v)) {
                return Err(Error::invalid(format!(
                    "{name} edges {e:?} outside [0, 100]"
                )));
            }
            if e.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::invalid(format!("{name} edges {e:?} decrease")));
            }
        }
        Ok(())
    }
}

/// Linear interpolation between order statistics (`(n − 1)·p` position).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = (sorted.len() - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn quintile_edges(mut values: Vec<f64>) -> [f64; 4] {
    values.sort_by(f64::total_cmp);
    QUANTILE_LEVELS.map(|p| quantile_sorted(&values, p))
}

fn check_percent(name: &str, values: &[f64]) -> Result<()> {
    if let Some(i) = values
        .iter()
        .position(|v| !(0.0..=100.0 + 1e-9).contains(v))
    {
        return Err(Error::invalid(format!(
            "{name} value {} at hour {i} outside [0, 100]%",
            values[i]
        )));
    }
    Ok(())
}

/// Hours with strictly positive solar output.
pub fn daylight_mask(solar_pct: &[f64]) -> Vec<bool> {
    solar_pct.iter().map(|&v| v > 0.0).collect()
}

pub fn compute_bins(solar_pct: &[f64], wind_pct: &[f64], daylight: &[bool]) -> Result<BinEdges> {
    ensure_same_len(solar_pct.len(), wind_pct.len())?;
    ensure_same_len(solar_pct.len(), daylight.len())?;
    check_percent("solar", solar_pct)?;
    check_percent("wind", wind_pct)?;
    if wind_pct.is_empty() {
        return Err(Error::invalid("no hours to classify"));
    }
    let day_values: Vec<f64> = solar_pct
        .iter()
        .zip(daylight)
        .filter_map(|(&v, &d)| d.then_some(v))
        .collect();
    if day_values.is_empty() {
        return Err(Error::invalid(
            "no daylight hours; solar quantiles undefined",
        ));
    }
    let edges = BinEdges {
        solar: quintile_edges(day_values),
        wind: quintile_edges(wind_pct.to_vec()),
    };
    for (name, e) in [("solar", edges.solar), ("wind", edges.wind)] {
        if e[0] == e[3] {
            log::warn!("{name} series is constant over the quantile range; binning is degenerate");
        }
    }
    Ok(edges)
}

/// Bin 1..=5; a value equal to an edge goes to the upper bin.
pub fn bin_of(value: f64, edges: &[f64; 4]) -> u8 {
    1 + edges.iter().filter(|&&e| value >= e).count() as u8
}

pub fn classify_hour(
    calendar: &Calendar,
    hour: usize,
    solar_pct: f64,
    wind_pct: f64,
    edges: &BinEdges,
) -> CategoryKey {
    CategoryKey {
        day_kind: calendar.day_kind(hour),
        time_band: TimeBand::from_local_hour(calendar.local_hour_of_day(hour)),
        solar_bin: bin_of(solar_pct, &edges.solar),
        wind_bin: bin_of(wind_pct, &edges.wind),
    }
}

pub fn classify_year(
    calendar: &Calendar,
    solar_pct: &[f64],
    wind_pct: &[f64],
    edges: &BinEdges,
) -> Result<Vec<CategoryKey>> {
    edges.validate()?;
    ensure_same_len(calendar.hours(), solar_pct.len())?;
    ensure_same_len(calendar.hours(), wind_pct.len())?;
    Ok((0..calendar.hours())
        .into_par_iter()
        .map(|h| classify_hour(calendar, h, solar_pct[h], wind_pct[h], edges))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    /// Member hours.
    pub hours: usize,
    /// Member hours with a defined metric value.
    pub samples: usize,
    pub mean: Option<f64>,
    pub sum: f64,
}

/// Per-category count, mean and sum of a per-hour metric. All 150 keys are
/// present; undefined hourly values are counted in `hours` but not averaged.
pub fn aggregate_by_category(
    keys: &[CategoryKey],
    metric: &[Option<f64>],
) -> Result<BTreeMap<CategoryKey, CategoryStats>> {
    ensure_same_len(keys.len(), metric.len())?;
    let mut out: BTreeMap<CategoryKey, CategoryStats> = CategoryKey::all()
        .into_iter()
        .map(|k| {
            (
                k,
                CategoryStats {
                    hours: 0,
                    samples: 0,
                    mean: None,
                    sum: 0.0,
                },
            )
        })
        .collect();
    for (k, v) in keys.iter().zip(metric) {
        let s = out.get_mut(k).expect("all keys present");
        s.hours += 1;
        if let Some(v) = v {
            s.samples += 1;
            s.sum += v;
        }
    }
    for s in out.values_mut() {
        if s.samples > 0 {
            s.mean = Some(s.sum / s.samples as f64);
        }
    }
    Ok(out)
}

/// Member-hour indices per category.
pub fn members(keys: &[CategoryKey]) -> BTreeMap<CategoryKey, Vec<usize>> {
    let mut out: BTreeMap<CategoryKey, Vec<usize>> = CategoryKey::all()
        .into_iter()
        .map(|k| (k, Vec::new()))
        .collect();
    for (h, k) in keys.iter().enumerate() {
        out.get_mut(k).expect("all keys present").push(h);
    }
    out
}

/// Hours per (time band, solar bin, wind bin), merging day kinds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMatrix {
    pub counts: [[[usize; 5]; 5]; 3],
}

impl CountMatrix {
    pub fn from_keys(keys: &[CategoryKey]) -> Self {
        let mut counts = [[[0usize; 5]; 5]; 3];
        for k in keys {
            counts[k.time_band.index()][(k.solar_bin - 1) as usize][(k.wind_bin - 1) as usize] += 1;
        }
        CountMatrix { counts }
    }

    pub fn wind_totals(&self) -> [usize; 5] {
        let mut t = [0; 5];
        for band in &self.counts {
            for row in band {
                for (w, c) in row.iter().enumerate() {
                    t[w] += c;
                }
            }
        }
        t
    }

    pub fn total(&self) -> usize {
        self.wind_totals().iter().sum()
    }

    pub fn row_total(&self, band: TimeBand, solar_bin: u8) -> usize {
        self.counts[band.index()][(solar_bin - 1) as usize]
            .iter()
            .sum()
    }
}
