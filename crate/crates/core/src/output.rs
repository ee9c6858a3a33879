//! Deterministic CSV and text writers for run results.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::classify::{TimeBand, BINS};
use crate::config::Config;
use crate::demand::LoadKind;
use crate::error::{Error, Result};
use crate::experiments::{CategoryTables, OptimizerRun, Prepared, ScenarioGrid};
use crate::ingest::{write_hourly_column, write_weather};
use crate::metrics::AggregateMetrics;
use crate::optimize::{MixSolution, Objective};
use crate::sector_scaling::building_slug;
use crate::stats::TestOutcome;
use crate::synthetic;

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(BufWriter::new(
        File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

fn finish(mut w: csv::Writer<BufWriter<File>>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

fn test_fields(t: &TestOutcome) -> [String; 4] {
    match t {
        TestOutcome::Tested(r) => [
            r.t_stat.to_string(),
            r.dof.to_string(),
            r.p_value.to_string(),
            r.reject.to_string(),
        ],
        TestOutcome::Untestable(_) => [
            String::new(),
            String::new(),
            String::new(),
            "untestable".into(),
        ],
    }
}

fn metric_fields(m: &AggregateMetrics) -> [String; 4] {
    [
        m.pos_mismatch.to_string(),
        m.neg_mismatch.to_string(),
        m.utilisation.to_string(),
        opt(m.self_consumption),
    ]
}

/// `sweep_metrics.csv` and `sweep_significance.csv`.
pub fn write_sweep(dir: &Path, grid: &ScenarioGrid) -> Result<Vec<PathBuf>> {
    let metrics_path = dir.join("sweep_metrics.csv");
    let mut w = csv_writer(&metrics_path)?;
    w.write_record([
        "scenario_pv_mw",
        "scenario_wind_mw",
        "turbines",
        "load_case",
        "pos_mwh",
        "neg_mwh",
        "util_mwh",
        "self_consumption",
    ])?;
    for c in &grid.cells {
        for (kind, m) in [
            (LoadKind::ResidentialOnly, &c.residential),
            (LoadKind::Mixed, &c.mixed),
        ] {
            let mut row = vec![
                c.pv_mw.to_string(),
                c.wind_mw.to_string(),
                c.turbines.to_string(),
                kind.as_str().to_string(),
            ];
            row.extend(metric_fields(m));
            w.write_record(&row)?;
        }
    }
    finish(w, &metrics_path)?;

    let sig_path = dir.join("sweep_significance.csv");
    let mut w = csv_writer(&sig_path)?;
    w.write_record([
        "scenario_pv_mw",
        "scenario_wind_mw",
        "metric",
        "t",
        "dof",
        "p",
        "reject_holm",
    ])?;
    for c in &grid.cells {
        for (metric, t) in &c.tests {
            let mut row = vec![
                c.pv_mw.to_string(),
                c.wind_mw.to_string(),
                metric.as_str().to_string(),
            ];
            row.extend(test_fields(t));
            w.write_record(&row)?;
        }
    }
    finish(w, &sig_path)?;
    Ok(vec![metrics_path, sig_path])
}

/// One `categories_<metric>.csv` per metric, the count matrix and bin edges.
pub fn write_categories(dir: &Path, t: &CategoryTables) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (metric, rows) in &t.tables {
        let path = dir.join(format!("categories_{}.csv", metric.as_str()));
        let mut w = csv_writer(&path)?;
        w.write_record([
            "day_kind",
            "time_band",
            "solar_bin",
            "wind_bin",
            "hours",
            "samples",
            "residential_mean",
            "mixed_mean",
            "residential_sum",
            "mixed_sum",
            "t",
            "dof",
            "p",
            "reject_holm",
        ])?;
        for r in rows {
            let mut row = vec![
                r.key.day_kind.as_str().to_string(),
                r.key.time_band.as_str().to_string(),
                r.key.solar_bin.to_string(),
                r.key.wind_bin.to_string(),
                r.residential.hours.to_string(),
                r.residential.samples.to_string(),
                opt(r.residential.mean),
                opt(r.mixed.mean),
                r.residential.sum.to_string(),
                r.mixed.sum.to_string(),
            ];
            row.extend(test_fields(&r.test));
            w.write_record(&row)?;
        }
        finish(w, &path)?;
        written.push(path);
    }

    let path = dir.join("category_counts.csv");
    let mut w = csv_writer(&path)?;
    let mut header = vec!["time_band".to_string(), "solar_bin".to_string()];
    header.extend((1..=BINS).map(|b| format!("wind_{b}")));
    header.push("total".into());
    w.write_record(&header)?;
    for band in TimeBand::ALL {
        for s in 1..=BINS {
            let mut row = vec![band.as_str().to_string(), s.to_string()];
            row.extend(
                t.counts.counts[band.index()][(s - 1) as usize]
                    .iter()
                    .map(|c| c.to_string()),
            );
            row.push(t.counts.row_total(band, s).to_string());
            w.write_record(&row)?;
        }
    }
    let mut row = vec!["total".to_string(), String::new()];
    row.extend(t.counts.wind_totals().iter().map(|c| c.to_string()));
    row.push(t.counts.total().to_string());
    w.write_record(&row)?;
    finish(w, &path)?;
    written.push(path);

    let path = dir.join("bin_edges.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["series", "q20", "q40", "q60", "q80"])?;
    for (name, e) in [("solar_pct", t.edges.solar), ("wind_pct", t.edges.wind)] {
        let mut row = vec![name.to_string()];
        row.extend(e.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    finish(w, &path)?;
    written.push(path);
    Ok(written)
}

#[derive(Serialize)]
struct ReportSolution<'a> {
    x_pv_m2: f64,
    x_turbine_m2: f64,
    x_turbine_rounded_m2: f64,
    pv_mw: f64,
    turbines: u64,
    wind_mw: f64,
    slack_pv_m2: f64,
    slack_turbine_m2: f64,
    slack_total_m2: f64,
    generations: usize,
    evaluations: usize,
    objective: &'a Objective,
    objective_rounded: &'a Objective,
}

impl<'a> From<&'a MixSolution> for ReportSolution<'a> {
    fn from(s: &'a MixSolution) -> Self {
        ReportSolution {
            x_pv_m2: s.x_pv,
            x_turbine_m2: s.x_turbine,
            x_turbine_rounded_m2: s.x_turbine_rounded,
            pv_mw: s.pv_mw,
            turbines: s.turbines,
            wind_mw: s.wind_mw,
            slack_pv_m2: s.slack_pv,
            slack_turbine_m2: s.slack_turbine,
            slack_total_m2: s.slack_total,
            generations: s.generations,
            evaluations: s.evaluations,
            objective: &s.objective,
            objective_rounded: &s.objective_rounded,
        }
    }
}

#[derive(Serialize)]
struct Report<'a> {
    seed: u64,
    roof_area_m2: f64,
    pv_max_m2: f64,
    turbine_max_m2: f64,
    total_max_m2: f64,
    turbine_footprint_m2: f64,
    load_case: &'a str,
    ga: ReportSolution<'a>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<ReportSolution<'a>>,
    config: &'a crate::config::OptimizeConfig,
}

/// `optimize_report.toml` and a one-row `optimize.csv`.
pub fn write_optimizer(dir: &Path, run: &OptimizerRun, config: &Config) -> Result<Vec<PathBuf>> {
    let b = run.problem.bounds();
    let report = Report {
        seed: config.seed,
        roof_area_m2: run.problem.roof_area,
        pv_max_m2: b.pv_max,
        turbine_max_m2: b.turbine_max,
        total_max_m2: b.total_max,
        turbine_footprint_m2: run.problem.turbine_footprint_m2,
        load_case: config.optimize.load.as_str(),
        ga: (&run.ga).into(),
        grid: run.grid.as_ref().map(Into::into),
        config: &config.optimize,
    };
    let text = toml::to_string(&report)
        .map_err(|e| Error::Config(format!("report serialisation: {e}")))?;
    let report_path = dir.join("optimize_report.toml");
    let mut f = create(&report_path)?;
    f.write_all(text.as_bytes())
        .map_err(|e| Error::io(&report_path, e))?;
    f.flush().map_err(|e| Error::io(&report_path, e))?;

    let csv_path = dir.join("optimize.csv");
    let mut w = csv_writer(&csv_path)?;
    w.write_record([
        "method",
        "x_pv_m2",
        "x_turbine_m2",
        "pv_mw",
        "turbines",
        "objective",
        "objective_rounded",
        "pos_mwh",
        "neg_mwh",
        "util_mwh",
    ])?;
    for (name, s) in std::iter::once(("ga", &run.ga)).chain(run.grid.as_ref().map(|g| ("grid", g)))
    {
        w.write_record([
            name.to_string(),
            s.x_pv.to_string(),
            s.x_turbine_rounded.to_string(),
            s.pv_mw.to_string(),
            s.turbines.to_string(),
            s.objective.value.to_string(),
            s.objective_rounded.value.to_string(),
            s.objective_rounded.pos_mismatch.to_string(),
            s.objective_rounded.neg_mismatch.to_string(),
            s.objective_rounded.utilisation.to_string(),
        ])?;
    }
    finish(w, &csv_path)?;
    Ok(vec![report_path, csv_path])
}

/// Household, service and both load-case series in kW.
pub fn write_profiles(dir: &Path, prep: &Prepared) -> Result<Vec<PathBuf>> {
    let path = dir.join("demand.csv");
    let mut w = csv_writer(&path)?;
    w.write_record([
        "hour",
        "household_kw",
        "service_kw",
        "residential_kw",
        "mixed_kw",
    ])?;
    let series = [
        prep.household.values(),
        prep.service.values(),
        prep.residential.series.values(),
        prep.mixed.series.values(),
    ];
    for h in 0..prep.calendar.hours() {
        let mut row = vec![h.to_string()];
        row.extend(series.iter().map(|s| s[h].to_string()));
        w.write_record(&row)?;
    }
    finish(w, &path)?;

    let summary = dir.join("demand_summary.csv");
    let mut w = csv_writer(&summary)?;
    w.write_record(["quantity", "value"])?;
    for (k, v) in [
        ("phi", prep.phi()),
        ("household_kwh", prep.household.total()),
        ("service_kwh", prep.service.total()),
        ("annual_kwh", prep.mixed.annual_energy),
        ("peak_residential_kw", prep.residential.series.peak()),
        ("peak_mixed_kw", prep.mixed.series.peak()),
        ("roof_area_m2", prep.area.roof_area_m2),
    ] {
        w.write_record([k.to_string(), v.to_string()])?;
    }
    for e in &prep.mix.entries {
        w.write_record([
            format!("count_{}", building_slug(&e.building)),
            e.count.to_string(),
        ])?;
    }
    finish(w, &summary)?;
    Ok(vec![path, summary])
}

/// Per-unit generation and percent-of-capacity series.
pub fn write_generation(dir: &Path, prep: &Prepared) -> Result<Vec<PathBuf>> {
    let path = dir.join("generation.csv");
    let mut w = csv_writer(&path)?;
    w.write_record([
        "hour",
        "pv_w_per_m2",
        "wind_kw_per_turbine",
        "pv_pct",
        "wind_pct",
    ])?;
    let (pv_pct, wind_pct) = (prep.unit.pv_percent(), prep.unit.wind_percent());
    for h in 0..prep.calendar.hours() {
        w.write_record([
            h.to_string(),
            prep.unit.pv[h].to_string(),
            prep.unit.wind[h].to_string(),
            pv_pct[h].to_string(),
            wind_pct[h].to_string(),
        ])?;
    }
    finish(w, &path)?;
    Ok(vec![path])
}

/// Write synthetic inputs in the on-disk formats accepted by `files` mode.
pub fn export_inputs(dir: &Path, prep: &Prepared) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let path = dir.join("weather.csv");
    write_weather(create(&path)?, &prep.weather)?;
    written.push(path);

    let path = dir.join("household.csv");
    write_hourly_column(
        create(&path)?,
        "weight",
        &synthetic::household_weights(&prep.calendar),
    )?;
    written.push(path);

    let profiles = synthetic::reference_profiles(&prep.calendar, prep.config.seed)?;
    for (name, series) in &profiles {
        let path = dir
            .join("reference")
            .join(format!("{}.csv", building_slug(name)));
        write_hourly_column(create(&path)?, "kw", series.values())?;
        written.push(path);
    }
    Ok(written)
}
