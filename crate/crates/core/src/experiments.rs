//! End-to-end runs: input preparation, the capacity sweep, the
//! time/weather category comparison and the area-constrained mix.

use std::collections::BTreeMap;
use std::path::Path;

use log::info;
use rayon::prelude::*;

use crate::classify::{
    aggregate_by_category, classify_year, compute_bins, daylight_mask, members, BinEdges,
    CategoryKey, CategoryStats, CountMatrix,
};
use crate::config::{Config, InputMode, MixSource};
use crate::demand::{equal_energy_cases, synthesize_scaled_service_profile, LoadCase, LoadKind};
use crate::error::{Error, Result};
use crate::generation::{area_budget_totals, AreaTotals, ScenarioGeneration, UnitGeneration};
use crate::ingest::{
    load_profile, load_reference_profile, load_weather, normalize_profile, Calendar, HourlySeries,
    WeatherRecord,
};
use crate::metrics::{annual_metrics, AggregateMetrics, Metric};
use crate::optimize::{ga_optimize, grid_oracle, MixProblem, MixSolution};
use crate::sector_scaling::{build_service_mix, building_slug, ScalingFile, ServiceMix};
use crate::stats::{apply_holm, t_test, TestOutcome};
use crate::synthetic;

/// Everything derived from the inputs before any scenario is run.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: Config,
    pub calendar: Calendar,
    pub weather: Vec<WeatherRecord>,
    pub scaling: ScalingFile,
    pub mix: ServiceMix,
    /// Households modelled per `area_households` of the scaling spec.
    pub mix_scale: f64,
    /// kW.
    pub household: HourlySeries,
    /// kW.
    pub service: HourlySeries,
    pub residential: LoadCase,
    pub mixed: LoadCase,
    pub unit: UnitGeneration,
    pub area: AreaTotals,
}

impl Prepared {
    pub fn load_case(&self, kind: LoadKind) -> &LoadCase {
        match kind {
            LoadKind::ResidentialOnly => &self.residential,
            LoadKind::Mixed => &self.mixed,
        }
    }

    /// Load in MW.
    pub fn load_mw(&self, kind: LoadKind) -> HourlySeries {
        self.load_case(kind).series.kw_to_mw()
    }

    pub fn phi(&self) -> f64 {
        self.residential.phi
    }
}

fn reference_profiles_from_dir(
    dir: &Path,
    mix: &ServiceMix,
    calendar: &Calendar,
) -> Result<BTreeMap<String, HourlySeries>> {
    let mut out = BTreeMap::new();
    for e in &mix.entries {
        let path = dir.join(format!("{}.csv", building_slug(&e.building)));
        if !path.exists() {
            return Err(Error::MissingProfile(format!(
                "{} ({})",
                e.building,
                path.display()
            )));
        }
        out.insert(e.building.clone(), load_reference_profile(&path, calendar)?);
    }
    Ok(out)
}

pub fn prepare(config: &Config) -> Result<Prepared> {
    config.validate()?;
    let calendar = config.calendar.build()?;
    let scaling = match &config.inputs.scaling_spec {
        Some(p) => ScalingFile::from_path(p)?,
        None => ScalingFile::dutch_2014(),
    };
    let mix = build_service_mix(&scaling, config.inputs.intermediates)?;
    let mix_scale = config.households / scaling.area_households;
    let household_kwh = config.households * config.household_kwh;

    let (weather, household, profiles) = match config.inputs.mode {
        InputMode::Synthetic => {
            let weather = synthetic::weather(&calendar, config.seed);
            let household = normalize_profile(
                &synthetic::household_weights(&calendar),
                household_kwh,
                calendar.year(),
            )?;
            let profiles = synthetic::reference_profiles(&calendar, config.seed)?;
            (weather, household, profiles)
        }
        InputMode::Files => {
            let inputs = &config.inputs;
            let req = |p: &Option<std::path::PathBuf>, name: &str| {
                p.clone().ok_or_else(|| {
                    Error::Config(format!("inputs.{name} is required in files mode"))
                })
            };
            let weather = load_weather(&req(&inputs.weather, "weather")?, &calendar)?;
            let household = load_profile(
                &req(&inputs.household_profile, "household_profile")?,
                household_kwh,
                &calendar,
            )?;
            let dir = req(&inputs.reference_profiles_dir, "reference_profiles_dir")?;
            let profiles = reference_profiles_from_dir(&dir, &mix, &calendar)?;
            (weather, household, profiles)
        }
    };
    let service = synthesize_scaled_service_profile(
        &mix,
        mix_scale,
        &profiles,
        calendar.hours(),
        calendar.year(),
    )?;
    let (residential, mixed) = equal_energy_cases(&household, &service)?;
    let unit = UnitGeneration::from_weather(&weather, &config.generation, calendar.year())?;
    let area = area_budget_totals(&mix, mix_scale, config.households, &config.area)?;
    info!(
        "prepared {} hours, phi = {:.5}, annual load {:.1} MWh",
        calendar.hours(),
        residential.phi,
        mixed.annual_energy / 1000.0
    );
    Ok(Prepared {
        config: config.clone(),
        calendar,
        weather,
        scaling,
        mix,
        mix_scale,
        household,
        service,
        residential,
        mixed,
        unit,
        area,
    })
}

/// Per-hour samples of `metric` for one load case; undefined hours dropped.
fn samples(
    metric: Metric,
    g: &HourlySeries,
    l: &HourlySeries,
    hours: Option<&[usize]>,
) -> Result<Vec<f64>> {
    let all = metric.series(g, l)?;
    Ok(match hours {
        Some(idx) => idx.iter().filter_map(|&h| all[h]).collect(),
        None => all.into_iter().flatten().collect(),
    })
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub pv_mw: f64,
    pub wind_mw: f64,
    pub turbines: u64,
    pub residential: AggregateMetrics,
    pub mixed: AggregateMetrics,
    /// One outcome per [`Metric::ANNUAL`] entry, residential vs mixed.
    pub tests: Vec<(Metric, TestOutcome)>,
}

#[derive(Debug, Clone)]
pub struct ScenarioGrid {
    pub pv_caps: Vec<f64>,
    pub wind_caps: Vec<f64>,
    /// Row-major: PV capacity outer, wind inner.
    pub cells: Vec<CellResult>,
}

impl ScenarioGrid {
    pub fn cell(&self, i: usize, j: usize) -> &CellResult {
        &self.cells[i * self.wind_caps.len() + j]
    }
}

/// Metrics and tests for one installed-capacity scenario.
pub fn run_cell(
    prep: &Prepared,
    gen: &ScenarioGeneration,
    l_r: &HourlySeries,
    l_m: &HourlySeries,
) -> Result<CellResult> {
    let g = &gen.total;
    let variant = prep.config.stats.variant;
    let tests = Metric::ANNUAL
        .iter()
        .map(|&m| {
            let a = samples(m, g, l_r, None)?;
            let b = samples(m, g, l_m, None)?;
            Ok((m, t_test(&a, &b, variant)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CellResult {
        pv_mw: gen.cap_pv_mw,
        wind_mw: gen.cap_wind_mw,
        turbines: gen.turbines,
        residential: annual_metrics(g, l_r)?,
        mixed: annual_metrics(g, l_m)?,
        tests,
    })
}

/// The 11 × 11 capacity sweep with Holm correction per metric.
pub fn run_experiment1(prep: &Prepared) -> Result<ScenarioGrid> {
    let axis = prep.config.sweep.axis()?;
    let l_r = prep.load_mw(LoadKind::ResidentialOnly);
    let l_m = prep.load_mw(LoadKind::Mixed);
    let pairs: Vec<(f64, f64)> = axis
        .iter()
        .flat_map(|&p| axis.iter().map(move |&w| (p, w)))
        .collect();
    let mut cells = pairs
        .par_iter()
        .map(|&(p, w)| {
            prep.unit
                .scenario(p, w)
                .and_then(|gen| run_cell(prep, &gen, &l_r, &l_m))
                .map_err(|e| e.context(format!("scenario {p} MW PV / {w} MW wind")))
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.context("capacity sweep"))?;
    for (k, &m) in Metric::ANNUAL.iter().enumerate() {
        let mut outcomes: Vec<TestOutcome> = cells.iter().map(|c| c.tests[k].1.clone()).collect();
        apply_holm(&mut outcomes, prep.config.stats.alpha)
            .map_err(|e| e.context(format!("Holm correction for {}", m.as_str())))?;
        for (c, o) in cells.iter_mut().zip(outcomes) {
            c.tests[k].1 = o;
        }
    }
    info!("capacity sweep: {} cells", cells.len());
    Ok(ScenarioGrid {
        pv_caps: axis.clone(),
        wind_caps: axis,
        cells,
    })
}

#[derive(Debug, Clone)]
pub struct CategoryRow {
    pub key: CategoryKey,
    pub residential: CategoryStats,
    pub mixed: CategoryStats,
    pub test: TestOutcome,
}

#[derive(Debug, Clone)]
pub struct CategoryTables {
    pub pv_mw: f64,
    pub wind_mw: f64,
    pub turbines: u64,
    pub edges: BinEdges,
    pub keys: Vec<CategoryKey>,
    pub counts: CountMatrix,
    /// 150 rows per metric in key order.
    pub tables: BTreeMap<Metric, Vec<CategoryRow>>,
}

impl CategoryTables {
    /// Sum and hour count of a metric over categories matching `pred`.
    pub fn pooled(
        &self,
        metric: Metric,
        kind: LoadKind,
        pred: impl Fn(&CategoryKey) -> bool,
    ) -> (f64, usize) {
        self.tables[&metric]
            .iter()
            .filter(|r| pred(&r.key))
            .map(|r| match kind {
                LoadKind::ResidentialOnly => r.residential,
                LoadKind::Mixed => r.mixed,
            })
            .fold((0.0, 0), |(s, n), c| (s + c.sum, n + c.samples))
    }
}

/// Installed capacities for the category analysis, scaled to the modelled
/// population when the preset is used.
pub fn experiment2_capacities(
    prep: &Prepared,
    optimized: Option<&MixSolution>,
) -> Result<(f64, f64)> {
    let cfg = &prep.config.experiment2;
    match (cfg.mix, optimized) {
        (MixSource::Optimize, Some(s)) => Ok((s.pv_mw, s.wind_mw)),
        (MixSource::Optimize, None) => {
            let s = run_optimizer(prep)?.ga;
            Ok((s.pv_mw, s.wind_mw))
        }
        (MixSource::Preset, _) => {
            let k = prep.mix_scale;
            Ok((cfg.preset_pv_mw * k, cfg.preset_wind_mw * k))
        }
    }
}

/// Category tables for every [`Metric::CATEGORY`] metric.
pub fn run_experiment2(prep: &Prepared, pv_mw: f64, wind_mw: f64) -> Result<CategoryTables> {
    let gen = prep.unit.scenario(pv_mw, wind_mw)?;
    let solar_pct = prep.unit.pv_percent();
    let wind_pct = prep.unit.wind_percent();
    let edges = compute_bins(
        solar_pct.values(),
        wind_pct.values(),
        &daylight_mask(solar_pct.values()),
    )?;
    let keys = classify_year(
        &prep.calendar,
        solar_pct.values(),
        wind_pct.values(),
        &edges,
    )?;
    let counts = CountMatrix::from_keys(&keys);
    let member_hours = members(&keys);
    let l_r = prep.load_mw(LoadKind::ResidentialOnly);
    let l_m = prep.load_mw(LoadKind::Mixed);
    let g = &gen.total;
    let alpha = prep.config.stats.alpha;
    let variant = prep.config.stats.variant;

    let tables = Metric::CATEGORY
        .par_iter()
        .map(|&metric| {
            let agg_r = aggregate_by_category(&keys, &metric.series(g, &l_r)?)?;
            let agg_m = aggregate_by_category(&keys, &metric.series(g, &l_m)?)?;
            let mut rows = member_hours
                .iter()
                .map(|(key, hours)| {
                    let a = samples(metric, g, &l_r, Some(hours))?;
                    let b = samples(metric, g, &l_m, Some(hours))?;
                    Ok(CategoryRow {
                        key: *key,
                        residential: agg_r[key],
                        mixed: agg_m[key],
                        test: t_test(&a, &b, variant),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let mut outcomes: Vec<TestOutcome> = rows.iter().map(|r| r.test.clone()).collect();
            apply_holm(&mut outcomes, alpha)?;
            for (r, o) in rows.iter_mut().zip(outcomes) {
                r.test = o;
            }
            Ok((metric, rows))
        })
        .collect::<Result<BTreeMap<_, _>>>()
        .map_err(|e| {
            e.context(format!(
                "category analysis at {pv_mw} MW PV / {wind_mw} MW wind"
            ))
        })?;
    Ok(CategoryTables {
        pv_mw,
        wind_mw,
        turbines: gen.turbines,
        edges,
        keys,
        counts,
        tables,
    })
}

pub fn mix_problem(prep: &Prepared) -> Result<MixProblem> {
    let cfg = &prep.config;
    let load = prep.load_mw(cfg.optimize.load);
    let mut p = MixProblem::new(
        &prep.unit.pv_mw_per_m2(),
        &prep.unit.wind_mw_per_turbine(),
        &load,
        prep.area.roof_area_m2,
        cfg.area.phi_area,
        cfg.area.turbine_footprint_m2(&cfg.generation.turbine),
    )?;
    p.weights = cfg.optimize.weights;
    p.sign = cfg.optimize.sign;
    p.roof_only_pv = cfg.area.roof_only_pv;
    p.pv_rated_w_per_m2 = cfg.generation.pv.rated_power_density;
    p.turbine_nominal_mw = cfg.generation.turbine.nominal_mw();
    p.validate()?;
    Ok(p)
}

#[derive(Debug, Clone)]
pub struct OptimizerRun {
    pub problem: MixProblem,
    pub ga: MixSolution,
    pub grid: Option<MixSolution>,
}

pub fn run_optimizer(prep: &Prepared) -> Result<OptimizerRun> {
    let problem = mix_problem(prep)?;
    let ga = ga_optimize(&problem, &prep.config.ga()).map_err(|e| e.context("mix optimisation"))?;
    let grid = match prep.config.optimize.grid_resolution {
        0 => None,
        r => Some(grid_oracle(&problem, r)?),
    };
    info!(
        "optimal mix: {:.1} MW PV, {} turbines ({} generations)",
        ga.pv_mw, ga.turbines, ga.generations
    );
    Ok(OptimizerRun { problem, ga, grid })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Prepared {
        let cfg = Config {
            households: 1000.0,
            ..Config::default()
        };
        prepare(&cfg).unwrap()
    }

    #[test]
    fn prepared_cases_have_equal_energy() {
        let p = small();
        let (r, m) = (p.residential.annual_energy, p.mixed.annual_energy);
        assert!((r - m).abs() <= 1e-9 * m);
        assert!(p.phi() > 1.5 && p.phi() < 2.5, "phi = {}", p.phi());
        assert_eq!(p.household.len(), 8760);
    }

    #[test]
    fn cell_matches_manual_pipeline() {
        let p = small();
        let grid = run_experiment1(&p).unwrap();
        assert_eq!(grid.cells.len(), 121);
        let c = grid.cell(3, 7);
        let g = p.unit.scenario(3.0 * 52.5, 7.0 * 52.5).unwrap().total;
        let manual = annual_metrics(&g, &p.load_mw(LoadKind::Mixed)).unwrap();
        assert_eq!(c.mixed, manual);
        let origin = grid.cell(0, 0);
        assert_eq!(origin.mixed.pos_mismatch, 0.0);
        assert_eq!(origin.mixed.self_consumption, None);
    }

    #[test]
    fn category_tables_complete() {
        let p = small();
        let t = run_experiment2(&p, 3.99, 0.3).unwrap();
        assert_eq!(t.counts.total(), 8760);
        for rows in t.tables.values() {
            assert_eq!(rows.len(), 150);
            assert_eq!(
                rows.iter().map(|r| r.residential.hours).sum::<usize>(),
                8760
            );
        }
    }

    #[test]
    fn missing_reference_file_names_type() {
        let dir = tempfile::tempdir().unwrap();
        let cal = crate::ingest::CalendarConfig::dutch(2014).build().unwrap();
        let mix = build_service_mix(
            &ScalingFile::dutch_2014(),
            crate::sector_scaling::IntermediateSource::Printed,
        )
        .unwrap();
        let err = reference_profiles_from_dir(dir.path(), &mix, &cal).unwrap_err();
        assert!(err.to_string().contains("Hospital"));
    }
}
