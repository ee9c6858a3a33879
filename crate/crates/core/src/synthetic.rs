//! Deterministic synthetic inputs.
//!
//! Stand-ins for measured weather, the average household profile and the
//! simulated reference-building profiles. Shapes follow the usual patterns:
//! household demand peaks in the evening, service demand is high through
//! weekday opening hours and low at weekends.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use chrono::{Datelike, Timelike, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::ingest::{Calendar, DayKind, HourlySeries, Unit, WeatherRecord};

const LATITUDE_DEG: f64 = 52.1;
const LONGITUDE_DEG: f64 = 5.2;

/// Sine of the solar elevation at the middle of UTC hour `hour`.
pub fn solar_elevation_sin(calendar: &Calendar, hour: usize) -> f64 {
    let t = calendar.utc(hour);
    let day = t.ordinal() as f64;
    let decl = (23.44f64).to_radians() * (2.0 * PI * (284.0 + day) / 365.0).sin();
    let solar_time = t.hour() as f64 + 0.5 + LONGITUDE_DEG / 15.0;
    let hour_angle = (15.0 * (solar_time - 12.0)).to_radians();
    let lat = LATITUDE_DEG.to_radians();
    lat.sin() * decl.sin() + lat.cos() * decl.cos() * hour_angle.cos()
}

/// One year of hourly weather for a temperate coastal site.
pub fn weather(calendar: &Calendar, seed: u64) -> Vec<WeatherRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let n = calendar.hours();
    let mut cloud = 0.5;
    let mut wind_state: f64 = 0.0;
    let mut pressure_state: f64 = 0.0;
    let mut out = Vec::with_capacity(n);
    for h in 0..n {
        if h % 24 == 0 {
            // daily cloudiness, persistent from day to day
            cloud = (0.6 * cloud + 0.4 * rng.random::<f64>()).clamp(0.0, 1.0);
        }
        let sin_el = solar_elevation_sin(calendar, h);
        let clear = if sin_el > 0.0 {
            1050.0 * sin_el.powf(1.15)
        } else {
            0.0
        };
        let flicker = 1.0 + 0.1 * normal.sample(&mut rng);
        let ghi = (clear * (1.0 - 0.75 * cloud) * flicker).max(0.0);

        let day = calendar.utc(h).ordinal() as f64;
        let seasonal = -7.0 * (2.0 * PI * (day + 10.0) / 365.0).cos();
        let diurnal = 4.0 * sin_el.max(-0.2);
        let temp = 10.5 + seasonal + diurnal + 1.5 * normal.sample(&mut rng);

        pressure_state = 0.98 * pressure_state + 0.2 * normal.sample(&mut rng);
        let pressure = 101_325.0 + 900.0 * pressure_state;

        wind_state = 0.92 * wind_state + (1.0f64 - 0.92 * 0.92).sqrt() * normal.sample(&mut rng);
        let winter = 1.0 + 0.2 * (2.0 * PI * (day + 10.0) / 365.0).cos();
        let u = 0.5 * (1.0 + erf(wind_state / std::f64::consts::SQRT_2));
        // Weibull, k = 2, scale 5.5 m/s
        let wind = 5.5 * winter * (-(1.0 - u).max(1e-12).ln()).sqrt();

        out.push(WeatherRecord {
            hour_index: h,
            ghi,
            temp,
            pressure,
            wind_speed_10m: wind.max(0.0),
        });
    }
    out
}

// Abramowitz & Stegun 7.1.26, adequate for shaping synthetic data.
fn erf(x: f64) -> f64 {
    let s = x.signum();
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.327_591_1 * x);
    let y = 1.0
        - (((((1.061_405_429 * t - 1.453_152_027) * t) + 1.421_413_741) * t - 0.284_496_736) * t
            + 0.254_829_592)
            * t
            * (-x * x).exp();
    s * y
}

fn bump(x: f64, centre: f64, width: f64) -> f64 {
    (-0.5 * ((x - centre) / width).powi(2)).exp()
}

/// Smooth step from 0 to 1 around `from` and back to 0 around `to`.
fn window(x: f64, from: f64, to: f64) -> f64 {
    let s = |v: f64| 1.0 / (1.0 + (-2.5 * v).exp());
    s(x - from) * s(to - x)
}

/// Average household demand weights, peaking in the early evening.
pub fn household_weights(calendar: &Calendar) -> Vec<f64> {
    (0..calendar.hours())
        .map(|h| {
            let x = calendar.local_hour_of_day(h) as f64 + 0.5;
            let day = calendar.local(h).ordinal() as f64;
            let winter = 1.0 + 0.15 * (2.0 * PI * (day + 10.0) / 365.0).cos();
            let weekend = calendar.day_kind(h) == DayKind::Weekend;
            let daytime = if weekend { 0.25 } else { 0.12 };
            let base = 0.45
                + 0.2 * bump(x, 7.5, 1.2)
                + daytime * window(x, 8.0, 17.0)
                + 0.5 * bump(x, 19.0, 2.0);
            base * winter
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
enum Pattern {
    Continuous,
    Lodging,
    Office,
    School,
    Retail,
    Restaurant,
    Warehouse,
}

/// `(name, annual MWh, pattern)` for the thirteen reference types.
const BUILDINGS: [(&str, f64, Pattern); 13] = [
    ("Hospital", 8_500.0, Pattern::Continuous),
    ("Large Hotel", 2_900.0, Pattern::Lodging),
    ("Small Hotel", 650.0, Pattern::Lodging),
    ("Large Office", 6_500.0, Pattern::Office),
    ("Medium Office", 700.0, Pattern::Office),
    ("Small Office", 70.0, Pattern::Office),
    ("Primary School", 650.0, Pattern::School),
    ("Secondary School", 2_100.0, Pattern::School),
    ("Stand Alone Retail", 320.0, Pattern::Retail),
    ("Supermarket", 850.0, Pattern::Retail),
    ("Restaurant", 220.0, Pattern::Restaurant),
    ("Quick Service Restaurant", 170.0, Pattern::Restaurant),
    ("Warehouse", 239.0, Pattern::Warehouse),
];

pub fn building_names() -> Vec<&'static str> {
    BUILDINGS.iter().map(|b| b.0).collect()
}

fn shape(pattern: Pattern, x: f64, weekend: bool, sunday: bool, day: f64) -> f64 {
    let summer_cooling = 1.0 + 0.12 * (2.0 * PI * (day - 200.0) / 365.0).cos();
    let v = match pattern {
        Pattern::Continuous => 0.85 + 0.3 * window(x, 7.0, 21.0),
        Pattern::Lodging => 0.6 + 0.25 * bump(x, 8.0, 1.5) + 0.5 * window(x, 17.0, 23.5),
        Pattern::Office if weekend => 0.3,
        Pattern::Office => 0.3 + 1.0 * window(x, 7.0, 21.0),
        Pattern::School if weekend => 0.15,
        Pattern::School => {
            let summer_break = (196.0..238.0).contains(&day);
            let level = if summer_break { 0.2 } else { 1.0 };
            0.15 + level * window(x, 7.5, 17.0) + 0.35 * level * window(x, 18.0, 22.5)
        }
        Pattern::Retail => {
            let open = if sunday {
                0.5
            } else if weekend {
                0.8
            } else {
                1.0
            };
            0.25 + open * window(x, 8.0, 22.5)
        }
        Pattern::Restaurant => {
            let scale = if weekend { 0.7 } else { 1.0 };
            0.2 + scale
                * (0.6 * window(x, 10.5, 23.5)
                    + 0.6 * bump(x, 12.5, 1.2)
                    + 0.8 * bump(x, 19.0, 1.8))
        }
        Pattern::Warehouse if weekend => 0.3,
        Pattern::Warehouse => 0.3 + 0.8 * window(x, 6.5, 20.0),
    };
    v * summer_cooling
}

/// Hourly kW profiles for one building of each reference type.
pub fn reference_profiles(
    calendar: &Calendar,
    seed: u64,
) -> Result<BTreeMap<String, HourlySeries>> {
    let n = calendar.hours();
    let mut out = BTreeMap::new();
    for (k, &(name, annual_mwh, pattern)) in BUILDINGS.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1000 + k as u64));
        let raw: Vec<f64> = (0..n)
            .map(|h| {
                let local = calendar.local(h);
                let x = calendar.local_hour_of_day(h) as f64 + 0.5;
                let weekend = calendar.day_kind(h) == DayKind::Weekend;
                let sunday = local.weekday() == Weekday::Sun;
                let noise = 1.0 + 0.04 * (rng.random::<f64>() - 0.5);
                shape(pattern, x, weekend, sunday, local.ordinal() as f64) * noise
            })
            .collect();
        let sum: f64 = raw.iter().sum();
        let scale = annual_mwh * 1000.0 / sum;
        let kw = raw.into_iter().map(|v| v * scale).collect();
        out.insert(
            name.to_string(),
            HourlySeries::new(kw, Unit::Kw, calendar.year())?,
        );
    }
    Ok(out)
}
