//! Loading and validation of weather data, demand profiles and the calendar.

mod calendar;
mod series;

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::DateTime;
use serde::{Deserialize, Serialize};

pub use calendar::{
    build_calendar, hours_in_year, is_leap_year, netherlands_holidays, Calendar, CalendarConfig,
    DayKind, DstPeriod, DstRules, DstTransitionConfig,
};
pub use series::{HourlySeries, Unit};

use crate::error::{Error, Result};

pub const WEATHER_HEADER: [&str; 5] = ["hour_utc", "ghi_wm2", "temp_c", "pressure_pa", "wind_ms"];

/// Meteorological conditions for one UTC hour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherRecord {
    pub hour_index: usize,
    /// Global horizontal irradiance, W/m².
    pub ghi: f64,
    /// Ambient temperature, °C.
    pub temp: f64,
    /// Station pressure, Pa.
    pub pressure: f64,
    /// Wind speed at 10 m, m/s.
    pub wind_speed_10m: f64,
}

impl WeatherRecord {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| {
            Err(Error::invalid(format!(
                "hour {}: {what} = {v} out of range",
                self.hour_index
            )))
        };
        if !(self.ghi.is_finite() && self.ghi >= 0.0) {
            return bad("ghi", self.ghi);
        }
        if !(self.pressure.is_finite() && self.pressure > 0.0) {
            return bad("pressure", self.pressure);
        }
        if !(self.wind_speed_10m.is_finite() && self.wind_speed_10m >= 0.0) {
            return bad("wind speed", self.wind_speed_10m);
        }
        if !(self.temp.is_finite() && self.temp > -90.0) {
            return bad("temperature", self.temp);
        }
        Ok(())
    }
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let ok =
        found.len() == expected.len() && found.iter().zip(expected).all(|(f, e)| f.trim() == *e);
    if !ok {
        return Err(Error::Header {
            expected: expected.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        });
    }
    Ok(())
}

fn parse_number(field: &str, row: usize, column: &str) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
        row,
        message: format!("non-numeric {column} `{field}`"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            row,
            message: format!("non-finite {column} `{field}`"),
        });
    }
    Ok(v)
}

/// Place `(hour, row, value)` triples into a dense vector of `hours` slots,
/// rejecting duplicates, out-of-range hours and gaps.
fn assemble<T: Copy>(items: Vec<(usize, usize, T)>, hours: usize) -> Result<Vec<T>> {
    let mut slots: Vec<Option<T>> = vec![None; hours];
    for (hour, row, value) in items {
        if hour >= hours {
            return Err(Error::Parse {
                row,
                message: format!("hour {hour} outside 0..{hours}"),
            });
        }
        if slots[hour].is_some() {
            return Err(Error::Duplicate { hour, row });
        }
        slots[hour] = Some(value);
    }
    let gaps: Vec<usize> = slots
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.is_none().then_some(i))
        .collect();
    if !gaps.is_empty() {
        return Err(Error::Gaps(gaps));
    }
    Ok(slots.into_iter().map(Option::unwrap).collect())
}

fn parse_hour(field: &str, row: usize, calendar: &Calendar) -> Result<usize> {
    let field = field.trim();
    if let Ok(h) = field.parse::<usize>() {
        return Ok(h);
    }
    let instant = DateTime::parse_from_rfc3339(field).map_err(|_| Error::Parse {
        row,
        message: format!("unparseable hour `{field}`"),
    })?;
    calendar
        .hour_index(instant.to_utc())
        .ok_or_else(|| Error::Parse {
            row,
            message: format!("timestamp `{field}` is not an hour of {}", calendar.year()),
        })
}

/// Read weather records from CSV text. `hour_utc` is either a 0-based hour
/// index or an RFC 3339 timestamp on the hour.
pub fn read_weather<R: Read>(reader: R, calendar: &Calendar) -> Result<Vec<WeatherRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    check_header(rdr.headers()?, &WEATHER_HEADER)?;
    let mut items = Vec::with_capacity(calendar.hours());
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        if rec.len() != WEATHER_HEADER.len() {
            return Err(Error::Parse {
                row,
                message: format!(
                    "expected {} fields, found {}",
                    WEATHER_HEADER.len(),
                    rec.len()
                ),
            });
        }
        let hour = parse_hour(&rec[0], row, calendar)?;
        let record = WeatherRecord {
            hour_index: hour,
            ghi: parse_number(&rec[1], row, WEATHER_HEADER[1])?,
            temp: parse_number(&rec[2], row, WEATHER_HEADER[2])?,
            pressure: parse_number(&rec[3], row, WEATHER_HEADER[3])?,
            wind_speed_10m: parse_number(&rec[4], row, WEATHER_HEADER[4])?,
        };
        record.validate().map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        items.push((hour, row, record));
    }
    assemble(items, calendar.hours())
}

pub fn load_weather(path: &Path, calendar: &Calendar) -> Result<Vec<WeatherRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_weather(file, calendar).map_err(|e| e.context(path.display().to_string()))
}

pub fn write_weather<W: Write>(writer: W, records: &[WeatherRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(WEATHER_HEADER)?;
    for r in records {
        w.write_record([
            r.hour_index.to_string(),
            r.ghi.to_string(),
            r.temp.to_string(),
            r.pressure.to_string(),
            r.wind_speed_10m.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<weather writer>", e))?;
    Ok(())
}

/// Read a two-column `hour,<value_column>` file into a dense vector.
pub fn read_hourly_column<R: Read>(
    reader: R,
    value_column: &str,
    hours: usize,
) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    check_header(rdr.headers()?, &["hour", value_column])?;
    let mut items = Vec::with_capacity(hours);
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Error::Parse {
                row,
                message: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        let hour: usize = rec[0].trim().parse().map_err(|_| Error::Parse {
            row,
            message: format!("non-integer hour `{}`", &rec[0]),
        })?;
        items.push((hour, row, parse_number(&rec[1], row, value_column)?));
    }
    assemble(items, hours)
}

/// Scale non-negative weights so that they sum to `annual_energy`.
///
/// Works for both fractional weights and absolute kW profiles; only the
/// shape is kept.
pub fn normalize_profile(weights: &[f64], annual_energy: f64, year: i32) -> Result<HourlySeries> {
    if let Some(i) = weights.iter().position(|&w| w < 0.0) {
        return Err(Error::invalid(format!(
            "negative profile weight {} at hour {i}",
            weights[i]
        )));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::invalid(
            "profile weights are all zero; cannot normalize",
        ));
    }
    if !(annual_energy.is_finite() && annual_energy >= 0.0) {
        return Err(Error::invalid(format!(
            "annual energy {annual_energy} must be >= 0"
        )));
    }
    let k = annual_energy / total;
    HourlySeries::new(weights.iter().map(|w| w * k).collect(), Unit::Kw, year)
}

/// Load a `hour,weight` profile and scale it to `annual_energy` kWh.
pub fn load_profile(path: &Path, annual_energy: f64, calendar: &Calendar) -> Result<HourlySeries> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let weights = read_hourly_column(file, "weight", calendar.hours())
        .map_err(|e| e.context(path.display().to_string()))?;
    normalize_profile(&weights, annual_energy, calendar.year())
}

/// Load an absolute `hour,kw` reference-building profile without rescaling.
pub fn load_reference_profile(path: &Path, calendar: &Calendar) -> Result<HourlySeries> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let values = read_hourly_column(file, "kw", calendar.hours())
        .map_err(|e| e.context(path.display().to_string()))?;
    if let Some(i) = values.iter().position(|&v| v < 0.0) {
        return Err(Error::invalid(format!(
            "{}: negative load at hour {i}",
            path.display()
        )));
    }
    HourlySeries::new(values, Unit::Kw, calendar.year())
}

pub fn write_hourly_column<W: Write>(writer: W, value_column: &str, values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["hour", value_column])?;
    for (h, v) in values.iter().enumerate() {
        w.write_record([h.to_string(), v.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<series writer>", e))?;
    Ok(())
}

pub fn write_series(path: &Path, value_column: &str, series: &HourlySeries) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_hourly_column(file, value_column, series.values())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cal() -> Calendar {
        CalendarConfig::dutch(2014).build().unwrap()
    }

    fn weather_csv(skip: Option<usize>, patch: impl Fn(usize) -> Option<String>) -> String {
        let mut s = String::from("hour_utc,ghi_wm2,temp_c,pressure_pa,wind_ms\n");
        for h in 0..8760 {
            if Some(h) == skip {
                continue;
            }
            match patch(h) {
                Some(line) => s.push_str(&line),
                None => s.push_str(&format!(
                    "{h},{},10.5,101325,{}",
                    h % 700,
                    (h % 13) as f64 * 0.5
                )),
            }
            s.push('\n');
        }
        s
    }

    #[test]
    fn well_formed_weather_loads_in_order() {
        let recs = read_weather(weather_csv(None, |_| None).as_bytes(), &cal()).unwrap();
        assert_eq!(recs.len(), 8760);
        assert!(recs.iter().enumerate().all(|(i, r)| r.hour_index == i));
        assert_eq!(recs[5].ghi, 5.0);
    }

    #[test]
    fn shuffled_rows_are_sorted() {
        let mut lines: Vec<String> = weather_csv(None, |_| None)
            .lines()
            .map(str::to_owned)
            .collect();
        let header = lines.remove(0);
        lines.reverse();
        let text = format!("{header}\n{}\n", lines.join("\n"));
        let recs = read_weather(text.as_bytes(), &cal()).unwrap();
        assert_eq!(recs[0].hour_index, 0);
        assert_eq!(recs[8759].hour_index, 8759);
    }

    #[test]
    fn missing_hour_is_reported_as_gap() {
        let err = read_weather(weather_csv(Some(100), |_| None).as_bytes(), &cal()).unwrap_err();
        assert!(matches!(&err, Error::Gaps(g) if g == &vec![100]));
        assert!(err.to_string().contains("gap at hour 100"));
    }

    #[test]
    fn negative_wind_is_rejected() {
        let text = weather_csv(None, |h| (h == 7).then(|| "7,0,5,101325,-1".to_string()));
        let err = read_weather(text.as_bytes(), &cal()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 8, .. }), "{err}");
    }

    #[test]
    fn non_numeric_cell_names_row() {
        let text = weather_csv(None, |h| (h == 2).then(|| "2,abc,5,101325,1".to_string()));
        let err = read_weather(text.as_bytes(), &cal()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 3, .. }), "{err}");
    }

    #[test]
    fn duplicate_timestamp_is_rejected() {
        let text = weather_csv(Some(11), |h| {
            (h == 10).then(|| "10,0,5,101325,1\n10,0,5,101325,1".to_string())
        });
        let err = read_weather(text.as_bytes(), &cal()).unwrap_err();
        assert!(matches!(err, Error::Duplicate { hour: 10, .. }), "{err}");
    }

    #[test]
    fn rfc3339_timestamps_are_accepted() {
        let c = cal();
        let mut s = String::from("hour_utc,ghi_wm2,temp_c,pressure_pa,wind_ms\n");
        for h in 0..8760 {
            let t = c.utc(h).to_rfc3339();
            s.push_str(&format!("{t},0,5,101325,3\n"));
        }
        assert_eq!(read_weather(s.as_bytes(), &c).unwrap().len(), 8760);
    }

    #[test]
    fn wrong_header_is_rejected() {
        let err = read_weather("hour,ghi\n0,1\n".as_bytes(), &cal()).unwrap_err();
        assert!(matches!(err, Error::Header { .. }));
    }

    #[test]
    fn uniform_weights_give_constant_kw() {
        let s = normalize_profile(&vec![0.3; 8760], 8760.0, 2014).unwrap();
        assert!(s.values().iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn proportional_weights() {
        let mut w = vec![1.0; 8760];
        w[0] = 2.0;
        let s = normalize_profile(&w, 3500.0, 2014).unwrap();
        assert_eq!(s[0], 2.0 * s[1]);
        assert!((s.total() - 3500.0).abs() / 3500.0 < 1e-6);
    }

    #[test]
    fn fraction_profile_sums_to_3500_kwh() {
        let w: Vec<f64> = (0..8760)
            .map(|h| 1.0 + ((h % 24) as f64 / 3.0).sin().abs())
            .collect();
        let total: f64 = w.iter().sum();
        let fractions: Vec<f64> = w.iter().map(|x| x / total).collect();
        let s = normalize_profile(&fractions, 3500.0, 2014).unwrap();
        assert!((s.total() - 3500.0).abs() / 3500.0 < 1e-6);
    }

    #[test]
    fn bad_weights_are_rejected() {
        let mut w = vec![1.0; 8760];
        w[3] = -0.1;
        assert!(normalize_profile(&w, 1.0, 2014).is_err());
        assert!(normalize_profile(&vec![0.0; 8760], 1.0, 2014).is_err());
    }

    #[test]
    fn series_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let values: Vec<f64> = (0..8760).map(|h| (h as f64).sqrt() / 7.0).collect();
        let s = HourlySeries::new(values, Unit::Kw, 2014).unwrap();
        write_series(&path, "kw", &s).unwrap();
        let back = load_reference_profile(&path, &cal()).unwrap();
        assert_eq!(back.values(), s.values());
    }
}
