//! Run configuration.
//!
//! ```toml
//! seed = 42
//! households = 100000
//!
//! [calendar]
//! year = 2014
//! dutch_holidays = true
//! dst = "eu"
//!
//! [inputs]
//! mode = "files"
//! weather = "data/weather_2014.csv"
//! household_profile = "data/household.csv"
//! reference_profiles_dir = "data/reference"
//!
//! [optimize.ga]
//! population = 50
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::demand::LoadKind;
use crate::error::{Error, Result};
use crate::generation::{AreaBudget, GenerationParams};
use crate::ingest::CalendarConfig;
use crate::optimize::{GaConfig, SignConvention, Weights};
use crate::sector_scaling::IntermediateSource;
use crate::stats::TTestVariant;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_households")]
    pub households: f64,
    /// Annual household consumption, kWh per household.
    #[serde(default = "default_household_kwh")]
    pub household_kwh: f64,
    #[serde(default = "default_calendar")]
    pub calendar: CalendarConfig,
    #[serde(default)]
    pub inputs: Inputs,
    #[serde(default)]
    pub generation: GenerationParams,
    #[serde(default)]
    pub area: AreaBudget,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub stats: StatsConfig,
    #[serde(default)]
    pub optimize: OptimizeConfig,
    #[serde(default)]
    pub experiment2: Experiment2Config,
    #[serde(default)]
    pub validation: ValidationConfig,
}

fn default_seed() -> u64 {
    42
}

fn default_households() -> f64 {
    100_000.0
}

fn default_household_kwh() -> f64 {
    3500.0
}

fn default_calendar() -> CalendarConfig {
    CalendarConfig::dutch(2014)
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: default_seed(),
            households: default_households(),
            household_kwh: default_household_kwh(),
            calendar: default_calendar(),
            inputs: Inputs::default(),
            generation: GenerationParams::default(),
            area: AreaBudget::default(),
            sweep: SweepConfig::default(),
            stats: StatsConfig::default(),
            optimize: OptimizeConfig::default(),
            experiment2: Experiment2Config::default(),
            validation: ValidationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputMode {
    #[default]
    Synthetic,
    Files,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    pub mode: InputMode,
    pub weather: Option<PathBuf>,
    /// `hour,weight` household profile.
    pub household_profile: Option<PathBuf>,
    /// Directory of `<building-slug>.csv` files with `hour,kw` columns.
    pub reference_profiles_dir: Option<PathBuf>,
    /// Scaling spec; the bundled Dutch 2014 spec when absent.
    pub scaling_spec: Option<PathBuf>,
    pub intermediates: IntermediateSource,
}

impl Default for Inputs {
    fn default() -> Self {
        Inputs {
            mode: InputMode::Synthetic,
            weather: None,
            household_profile: None,
            reference_profiles_dir: None,
            scaling_spec: None,
            intermediates: IntermediateSource::Printed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub max_mw: f64,
    pub step_mw: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            max_mw: 525.0,
            step_mw: 52.5,
        }
    }
}

impl SweepConfig {
    /// Capacity axis `0, step, …, max`.
    pub fn axis(&self) -> Result<Vec<f64>> {
        if !(self.step_mw > 0.0 && self.max_mw >= 0.0) {
            return Err(Error::Config(format!("invalid sweep {self:?}")));
        }
        let steps = (self.max_mw / self.step_mw).round() as usize;
        if ((steps as f64) * self.step_mw - self.max_mw).abs() > 1e-9 * self.max_mw.max(1.0) {
            return Err(Error::Config(format!(
                "sweep max {} is not a multiple of step {}",
                self.max_mw, self.step_mw
            )));
        }
        Ok((0..=steps).map(|i| i as f64 * self.step_mw).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    pub alpha: f64,
    pub variant: TTestVariant,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            alpha: 0.05,
            variant: TTestVariant::Welch,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeConfig {
    pub weights: Weights,
    pub sign: SignConvention,
    pub ga: GaConfig,
    /// Load case the mix is optimised for.
    pub load: LoadKind,
    /// Points per axis for the grid cross-check; 0 disables it.
    pub grid_resolution: usize,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            weights: Weights::default(),
            sign: SignConvention::default(),
            ga: GaConfig::default(),
            load: LoadKind::Mixed,
            grid_resolution: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MixSource {
    #[default]
    Preset,
    Optimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Experiment2Config {
    pub mix: MixSource,
    pub preset_pv_mw: f64,
    pub preset_wind_mw: f64,
}

impl Default for Experiment2Config {
    /// The published optimum for 100 000 households.
    fn default() -> Self {
        Experiment2Config {
            mix: MixSource::Preset,
            preset_pv_mw: 399.0,
            preset_wind_mw: 30.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationConfig {
    /// National service-sector electricity use, PBL estimate, TWh.
    pub pbl_twh: f64,
    /// National service-sector electricity use, CBS statistics, TWh.
    pub cbs_twh: f64,
    pub national_households: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            pbl_twh: 33.6,
            cbs_twh: 30.6,
            national_households: 7.59e6,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load and resolve relative input paths against the file's directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| e.context(path.display().to_string()))?;
        if let Some(dir) = path.parent() {
            cfg.inputs.resolve_relative(dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.households.is_finite() && self.households > 0.0) {
            return Err(Error::Config(format!(
                "households must be > 0, got {}",
                self.households
            )));
        }
        if !(self.household_kwh.is_finite() && self.household_kwh > 0.0) {
            return Err(Error::Config("household_kwh must be > 0".into()));
        }
        if !(self.stats.alpha > 0.0 && self.stats.alpha < 1.0) {
            return Err(Error::Config(format!(
                "alpha must be in (0, 1), got {}",
                self.stats.alpha
            )));
        }
        self.sweep.axis()?;
        self.generation.pv.validate()?;
        self.generation.turbine.validate()?;
        if self.inputs.mode == InputMode::Files {
            for (name, p) in [
                ("weather", &self.inputs.weather),
                ("household_profile", &self.inputs.household_profile),
                (
                    "reference_profiles_dir",
                    &self.inputs.reference_profiles_dir,
                ),
            ] {
                if p.is_none() {
                    return Err(Error::Config(format!(
                        "inputs.{name} is required in files mode"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// GA settings seeded from the run seed.
    pub fn ga(&self) -> GaConfig {
        GaConfig {
            seed: self.seed,
            ..self.optimize.ga
        }
    }
}

impl Inputs {
    fn resolve_relative(&mut self, base: &Path) {
        for p in [
            &mut self.weather,
            &mut self.household_profile,
            &mut self.reference_profiles_dir,
            &mut self.scaling_spec,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let c = Config::from_toml("").unwrap();
        assert_eq!(c.households, 100_000.0);
        assert_eq!(c.sweep.axis().unwrap().len(), 11);
        assert_eq!(c.experiment2.preset_pv_mw, 399.0);
        assert_eq!(c.validation.pbl_twh, 33.6);
        assert_eq!(c.optimize.ga.population, 50);
    }

    #[test]
    fn sweep_axis_values() {
        let axis = SweepConfig::default().axis().unwrap();
        assert_eq!(axis[0], 0.0);
        assert_eq!(axis[10], 525.0);
        assert!(axis.windows(2).all(|w| (w[1] - w[0] - 52.5).abs() < 1e-12));
        let bad = SweepConfig {
            max_mw: 100.0,
            step_mw: 30.0,
        };
        assert!(bad.axis().is_err());
    }

    #[test]
    fn files_mode_needs_paths() {
        let err = Config::from_toml("[inputs]\nmode = \"files\"\n").unwrap_err();
        assert!(err.to_string().contains("weather"));
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(Config::from_toml("bogus = 1").is_err());
        assert!(Config::from_toml("[optimize.ga]\npopulaton = 3").is_err());
    }

    #[test]
    fn nested_sections_parse() {
        let c = Config::from_toml(
            r#"
            seed = 7
            households = 1000
            [calendar]
            year = 2015
            dutch_holidays = true
            dst = "eu"
            [optimize]
            sign = "signed-neg"
            [optimize.weights]
            pos = 2.0
            neg = 1.0
            ren = -3.0
            [experiment2]
            mix = "optimize"
            [stats]
            variant = "pooled"
            "#,
        )
        .unwrap();
        assert_eq!(c.calendar.year, 2015);
        assert_eq!(c.optimize.sign, SignConvention::SignedNeg);
        assert_eq!(c.optimize.weights.pos, 2.0);
        assert_eq!(c.experiment2.mix, MixSource::Optimize);
        assert_eq!(c.stats.variant, TTestVariant::Pooled);
        assert_eq!(c.with_seed(9).ga().seed, 9);
    }

    #[test]
    fn relative_paths_resolve() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "[inputs]\nmode = \"files\"\nweather = \"w.csv\"\nhousehold_profile = \"/abs/h.csv\"\nreference_profiles_dir = \"ref\"\n",
        )
        .unwrap();
        let c = Config::from_path(&path).unwrap();
        assert_eq!(c.inputs.weather.unwrap(), dir.path().join("w.csv"));
        assert_eq!(
            c.inputs.household_profile.unwrap(),
            PathBuf::from("/abs/h.csv")
        );
    }
}
