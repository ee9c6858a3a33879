//! Mixed urban electricity demand, renewable generation and integration
//! metrics.
//!
//! The pipeline synthesizes a service-sector load profile from scaled
//! reference-building profiles, combines it with household demand into two
//! load cases of equal annual energy (residential-only and mixed), models
//! solar and wind generation from hourly weather, and compares the two load
//! cases with mismatch, utilisation and self-consumption metrics across
//! capacity scenarios and time/weather categories.

pub mod classify;
pub mod config;
pub mod demand;
pub mod error;
pub mod experiments;
pub mod generation;
pub mod ingest;
pub mod metrics;
pub mod optimize;
pub mod output;
pub mod sector_scaling;
pub mod stats;
pub mod synthetic;
pub mod validation;

pub use error::{Error, Result};
pub use ingest::{Calendar, HourlySeries, Unit, WeatherRecord};
