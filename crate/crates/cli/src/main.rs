use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use urbanmix::config::{Config, InputMode};
use urbanmix::experiments::{self, Prepared};
use urbanmix::output;
use urbanmix::sector_scaling::{build_service_mix, IntermediateSource, ScalingFile};
use urbanmix::validation::{reconcile_appendix, NationalCheck};

/// Mixed urban demand, renewable generation and integration metrics.
#[derive(Parser, Debug)]
#[command(name = "urbanmix", version, about)]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    parallel: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Source {
    Printed,
    Recomputed,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Reference-building counts per 100 000 households and reconciliation report.
    Scale {
        /// Scaling spec; the configured or bundled spec when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Source::Printed)]
        source: Source,
    },
    /// Household, service and load-case demand series.
    Profiles {
        /// Also write the synthetic inputs in files-mode format.
        #[arg(long)]
        export_inputs: bool,
    },
    /// Per-unit PV and wind generation series.
    Generation,
    /// Capacity sweep over PV and wind scenarios.
    Sweep,
    /// Time and weather category comparison.
    Classify {
        /// Installed PV in MW; overrides the configured mix.
        #[arg(long, requires = "wind_mw")]
        pv_mw: Option<f64>,
        #[arg(long, requires = "pv_mw")]
        wind_mw: Option<f64>,
    },
    /// Area-constrained renewable mix.
    Optimize {
        /// Points per axis for a grid cross-check.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Fixture battery; exits with status 2 when a check fails.
    Validate,
}

enum Status {
    Ok,
    ValidationFailed,
}

fn load_config(cli: &Cli) -> Result<Config> {
    let cfg = match &cli.config {
        Some(p) => {
            Config::from_path(p).with_context(|| format!("loading config {}", p.display()))?
        }
        None => Config::default(),
    };
    Ok(match cli.seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    })
}

fn report_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn scale(cfg: &Config, out: &Path, spec: Option<&Path>, source: Source) -> Result<Status> {
    let file = match spec.or(cfg.inputs.scaling_spec.as_deref()) {
        Some(p) => ScalingFile::from_path(p)?,
        None => ScalingFile::dutch_2014(),
    };
    let source = match source {
        Source::Printed => IntermediateSource::Printed,
        Source::Recomputed => IntermediateSource::Recomputed,
    };
    let mix = build_service_mix(&file, source)?;
    let report = reconcile_appendix(&file)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let table = out.join("building_counts.csv");
    let mut w =
        csv::Writer::from_path(&table).with_context(|| format!("writing {}", table.display()))?;
    w.write_record(["building", "per_100k", "roof_area_m2"])?;
    for e in &mix.entries {
        w.write_record([
            e.building.clone(),
            e.count.to_string(),
            e.roof_area_m2.to_string(),
        ])?;
    }
    w.flush()?;

    let csv_path = out.join("reconciliation.csv");
    report.write_csv(
        std::fs::File::create(&csv_path).with_context(|| csv_path.display().to_string())?,
    )?;
    let text = report.to_text();
    let txt_path = out.join("reconciliation.txt");
    std::fs::write(&txt_path, &text).with_context(|| txt_path.display().to_string())?;

    for e in &mix.entries {
        println!("{:<28} {:>5}", e.building, e.count);
    }
    println!();
    print!("{text}");
    report_written(&[table, csv_path, txt_path]);
    Ok(Status::Ok)
}

fn prepare(cfg: &Config) -> Result<Prepared> {
    Ok(experiments::prepare(cfg).context("preparing inputs")?)
}

fn profiles(cfg: &Config, out: &Path, export: bool) -> Result<Status> {
    let prep = prepare(cfg)?;
    let mut written = output::write_profiles(out, &prep)?;
    if export {
        if cfg.inputs.mode != InputMode::Synthetic {
            anyhow::bail!("--export-inputs needs synthetic input mode");
        }
        written.extend(output::export_inputs(&out.join("inputs"), &prep)?);
    }
    println!("phi = {:.5}", prep.phi());
    report_written(&written);
    Ok(Status::Ok)
}

fn classify(cfg: &Config, out: &Path, caps: Option<(f64, f64)>) -> Result<Status> {
    let prep = prepare(cfg)?;
    let (pv, wind) = match caps {
        Some(c) => c,
        None => experiments::experiment2_capacities(&prep, None)?,
    };
    info!("categories for {pv} MW PV and {wind} MW wind");
    let tables = experiments::run_experiment2(&prep, pv, wind)?;
    let written = output::write_categories(out, &tables)?;
    println!(
        "{} hours in {} categories, wind columns {:?}",
        tables.counts.total(),
        tables.tables.values().next().map_or(0, Vec::len),
        tables.counts.wind_totals()
    );
    report_written(&written);
    Ok(Status::Ok)
}

fn optimize(cfg: &Config, out: &Path, grid: Option<usize>) -> Result<Status> {
    let mut cfg = cfg.clone();
    if let Some(g) = grid {
        cfg.optimize.grid_resolution = g;
    }
    let prep = prepare(&cfg)?;
    let run = experiments::run_optimizer(&prep)?;
    let written = output::write_optimizer(out, &run, &cfg)?;
    println!(
        "GA: {:.2} MW PV ({:.0} m2), {} turbines, objective {:.3} ({:.3} rounded)",
        run.ga.pv_mw,
        run.ga.x_pv,
        run.ga.turbines,
        run.ga.objective.value,
        run.ga.objective_rounded.value
    );
    if let Some(g) = &run.grid {
        println!(
            "grid: {:.2} MW PV, {} turbines, objective {:.3}",
            g.pv_mw, g.turbines, g.objective.value
        );
    }
    report_written(&written);
    Ok(Status::Ok)
}

fn validate(cfg: &Config, out: &Path) -> Result<Status> {
    let prep = prepare(cfg)?;
    let (checks, report, national) = urbanmix::validation::run_battery(&prep)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join("validation.csv");
    let mut w = csv::Writer::from_path(&path).with_context(|| path.display().to_string())?;
    w.write_record(["check", "passed", "detail"])?;
    for c in &checks {
        w.write_record([
            c.name.as_str(),
            if c.passed { "true" } else { "false" },
            c.detail.as_str(),
        ])?;
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    match &national {
        NationalCheck::Checked {
            national_twh,
            ratio_pbl,
            ratio_cbs,
        } => {
            let detail =
                format!("{national_twh:.2} TWh, {ratio_pbl:.2} of PBL, {ratio_cbs:.2} of CBS");
            w.write_record(["national service demand", "info", detail.as_str()])?;
            println!("INFO national service demand: {detail}");
        }
        NationalCheck::Skipped { reason } => {
            w.write_record(["national service demand", "skipped", reason.as_str()])?;
            println!("SKIP national service demand: {reason}");
        }
    }
    w.flush()?;
    let recon = out.join("reconciliation.csv");
    report
        .write_csv(std::fs::File::create(&recon).with_context(|| recon.display().to_string())?)?;
    report_written(&[path, recon]);
    Ok(if checks.iter().all(|c| c.passed) {
        Status::Ok
    } else {
        Status::ValidationFailed
    })
}

fn run(cli: &Cli) -> Result<Status> {
    if cli.parallel > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.parallel)
            .build_global()
            .context("configuring worker threads")?;
    }
    let cfg = load_config(cli)?;
    let out = cli.out.as_path();
    match &cli.command {
        Command::Scale { spec, source } => scale(&cfg, out, spec.as_deref(), *source),
        Command::Profiles { export_inputs } => profiles(&cfg, out, *export_inputs),
        Command::Generation => {
            let prep = prepare(&cfg)?;
            report_written(&output::write_generation(out, &prep)?);
            Ok(Status::Ok)
        }
        Command::Sweep => {
            let prep = prepare(&cfg)?;
            let grid = experiments::run_experiment1(&prep)?;
            println!("{} scenarios", grid.cells.len());
            report_written(&output::write_sweep(out, &grid)?);
            Ok(Status::Ok)
        }
        Command::Classify { pv_mw, wind_mw } => classify(&cfg, out, pv_mw.zip(*wind_mw)),
        Command::Optimize { grid } => optimize(&cfg, out, *grid),
        Command::Validate => validate(&cfg, out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::ValidationFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            let data_error = e
                .chain()
                .filter_map(|c| c.downcast_ref::<urbanmix::Error>())
                .any(urbanmix::Error::is_data_error);
            ExitCode::from(if data_error { 2 } else { 1 })
        }
    }
}
