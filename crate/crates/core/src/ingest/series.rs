use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_same_len, Error, Result};

/// Physical unit attached to an hourly series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Kw,
    Mw,
    WPerM2,
    KwPerTurbine,
    MPerS,
    Percent,
    Weight,
    Dimensionless,
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Unit::Kw => "kW",
            Unit::Mw => "MW",
            Unit::WPerM2 => "W/m2",
            Unit::KwPerTurbine => "kW/turbine",
            Unit::MPerS => "m/s",
            Unit::Percent => "%",
            Unit::Weight => "weight",
            Unit::Dimensionless => "-",
        };
        f.write_str(s)
    }
}

/// One value per hour of a simulation year, indexed by UTC hour.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlySeries {
    values: Vec<f64>,
    unit: Unit,
    year: i32,
}

impl HourlySeries {
    pub fn new(values: Vec<f64>, unit: Unit, year: i32) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value at hour {i}")));
        }
        Ok(HourlySeries { values, unit, year })
    }

    pub fn zeros(len: usize, unit: Unit, year: i32) -> Self {
        HourlySeries {
            values: vec![0.0; len],
            unit,
            year,
        }
    }

    pub fn constant(len: usize, value: f64, unit: Unit, year: i32) -> Self {
        HourlySeries {
            values: vec![value; len],
            unit,
            year,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sum over all hours; with 1-hour steps this is energy in unit·h.
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn peak(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> HourlySeries {
        HourlySeries {
            values: self.values.iter().map(|v| v * factor).collect(),
            unit: self.unit,
            year: self.year,
        }
    }

    /// Same values, relabelled (e.g. after a kW -> MW conversion done by `scaled`).
    pub fn with_unit(mut self, unit: Unit) -> HourlySeries {
        self.unit = unit;
        self
    }

    pub fn kw_to_mw(&self) -> HourlySeries {
        self.scaled(1e-3).with_unit(Unit::Mw)
    }

    pub fn zip_with(
        &self,
        other: &HourlySeries,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<HourlySeries> {
        ensure_same_len(self.len(), other.len())?;
        Ok(HourlySeries {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            unit: self.unit,
            year: self.year,
        })
    }

    pub fn add(&self, other: &HourlySeries) -> Result<HourlySeries> {
        self.zip_with(other, |a, b| a + b)
    }
}

impl Index<usize> for HourlySeries {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.values[index]
    }
}
