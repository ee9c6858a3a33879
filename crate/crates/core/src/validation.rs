//! Reconciliation of published scaling figures, the national consumption
//! sanity check and a battery of model identities.

use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use crate::classify::{classify_year, compute_bins, daylight_mask, CategoryKey, CountMatrix};
use crate::config::{InputMode, ValidationConfig};
use crate::demand::LoadKind;
use crate::error::{Error, Result};
use crate::experiments::Prepared;
use crate::ingest::HourlySeries;
use crate::metrics::{annual_metrics, delta_mismatch, mismatch_series};
use crate::sector_scaling::{round_half_away, ScalingFile};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Match,
    /// The published figures disagree with each other or with their inputs.
    Inconsistency,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Match => "match",
            Verdict::Inconsistency => "paper-internal inconsistency",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconciliationRow {
    /// Building type, or `office band <min>+ m2` for band rows.
    pub item: String,
    pub printed: f64,
    pub recomputed: f64,
    pub delta: f64,
    /// Per-100k count as published in the summary table.
    pub published_per_100k: Option<u32>,
    /// Per-100k count from the printed national intermediate.
    pub printed_path_per_100k: Option<u32>,
    /// Per-100k count from the recomputed national intermediate.
    pub recomputed_per_100k: Option<u32>,
    pub appendix_per_100k: Option<u32>,
    pub verdict: Verdict,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconciliationReport {
    pub region: String,
    pub rows: Vec<ReconciliationRow>,
}

impl ReconciliationReport {
    pub fn flagged(&self) -> impl Iterator<Item = &ReconciliationRow> {
        self.rows.iter().filter(|r| r.verdict != Verdict::Match)
    }

    /// Per-100k counts along the printed path, one per building type.
    pub fn table(&self) -> Vec<(String, u32)> {
        self.rows
            .iter()
            .filter_map(|r| r.printed_path_per_100k.map(|c| (r.item.clone(), c)))
            .collect()
    }

    /// True when every building reproduces its published per-100k count.
    pub fn reproduces_published(&self) -> bool {
        self.rows
            .iter()
            .filter(|r| r.published_per_100k.is_some())
            .all(|r| r.published_per_100k == r.printed_path_per_100k)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Reconciliation report: {}", self.region);
        let _ = writeln!(
            s,
            "{:<28} {:>12} {:>12} {:>8} {:>6} {:>6} {:>6} {:>6}  verdict",
            "item", "printed", "recomputed", "delta", "pub", "print", "recomp", "appx"
        );
        let opt = |v: Option<u32>| v.map_or("-".to_string(), |v| v.to_string());
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<28} {:>12.0} {:>12.1} {:>8.1} {:>6} {:>6} {:>6} {:>6}  {}",
                r.item,
                r.printed,
                r.recomputed,
                r.delta,
                opt(r.published_per_100k),
                opt(r.printed_path_per_100k),
                opt(r.recomputed_per_100k),
                opt(r.appendix_per_100k),
                r.verdict.as_str()
            );
            if !r.note.is_empty() {
                let _ = writeln!(s, "    {}", r.note);
            }
        }
        let _ = writeln!(
            s,
            "{} of {} items flagged",
            self.flagged().count(),
            self.rows.len()
        );
        s
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "item",
            "printed",
            "recomputed",
            "delta",
            "published_per_100k",
            "printed_path_per_100k",
            "recomputed_per_100k",
            "appendix_per_100k",
            "verdict",
            "note",
        ])?;
        let opt = |v: Option<u32>| v.map_or(String::new(), |v| v.to_string());
        for r in &self.rows {
            w.write_record([
                r.item.clone(),
                r.printed.to_string(),
                format!("{:.3}", r.recomputed),
                format!("{:.3}", r.delta),
                opt(r.published_per_100k),
                opt(r.printed_path_per_100k),
                opt(r.recomputed_per_100k),
                opt(r.appendix_per_100k),
                r.verdict.as_str().to_string(),
                r.note.clone(),
            ])?;
        }
        w.flush()
            .map_err(|e| Error::io("<reconciliation csv>", e))?;
        Ok(())
    }
}

/// Compare every published figure in `spec` with its recomputation.
///
/// National intermediates match when they differ by at most one building
/// after rounding; per-100k counts must agree exactly.
pub fn reconcile_appendix(spec: &ScalingFile) -> Result<ReconciliationReport> {
    let mut rows = Vec::new();
    for (b, o) in spec.building.iter().zip(spec.outcomes()?) {
        let recomputed_int = round_half_away(o.recomputed);
        let printed = o.printed.unwrap_or(recomputed_int);
        let delta = recomputed_int - printed;
        let mut notes = Vec::new();
        if delta.abs() > 1.0 {
            notes.push(format!(
                "national count printed {printed} but inputs give {recomputed_int}"
            ));
        }
        if o.per_area_recomputed != o.per_area_printed_path {
            notes.push(format!(
                "per-100k {} from the printed intermediate, {} from the recomputed one",
                o.per_area_printed_path, o.per_area_recomputed
            ));
        }
        if let Some(p) = b.published_per_100k {
            if p != o.per_area_printed_path {
                notes.push(format!(
                    "published per-100k {p} not reproduced ({})",
                    o.per_area_printed_path
                ));
            }
        }
        if let (Some(a), Some(p)) = (b.appendix_per_100k, b.published_per_100k) {
            if a != p {
                notes.push(format!("derivation prints {a} per 100k, summary table {p}"));
            }
        }
        rows.push(ReconciliationRow {
            item: b.name.clone(),
            printed,
            recomputed: o.recomputed,
            delta,
            published_per_100k: b.published_per_100k,
            printed_path_per_100k: Some(o.per_area_printed_path),
            recomputed_per_100k: Some(o.per_area_recomputed),
            appendix_per_100k: b.appendix_per_100k,
            verdict: if notes.is_empty() {
                Verdict::Match
            } else {
                Verdict::Inconsistency
            },
            note: notes.join("; "),
        });
    }
    if let Some(table) = &spec.office_bands {
        for band in &table.bands {
            let (Some(count), Some(area)) = (band.printed_count, band.printed_area) else {
                continue;
            };
            let implied = round_half_away(area / band.average_area()?);
            let delta = implied - count;
            let ok = delta.abs() <= 1.0;
            rows.push(ReconciliationRow {
                item: match band.max_area {
                    Some(max) => format!("office band {}-{} m2", band.min_area, max),
                    None => format!("office band {}+ m2", band.min_area),
                },
                printed: count,
                recomputed: area / band.average_area()?,
                delta,
                published_per_100k: None,
                printed_path_per_100k: None,
                recomputed_per_100k: None,
                appendix_per_100k: None,
                verdict: if ok {
                    Verdict::Match
                } else {
                    Verdict::Inconsistency
                },
                note: if ok {
                    String::new()
                } else {
                    format!("printed count {count} but printed area / average area gives {implied}")
                },
            });
        }
    }
    Ok(ReconciliationReport {
        region: spec.region.clone(),
        rows,
    })
}

/// National service-sector consumption in TWh from a per-area annual kWh.
pub fn national_service_twh(per_area_kwh: f64, divisor: f64) -> f64 {
    per_area_kwh * divisor * 1e-9
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum NationalCheck {
    Checked {
        national_twh: f64,
        ratio_pbl: f64,
        ratio_cbs: f64,
    },
    Skipped {
        reason: String,
    },
}

/// Scale the modelled service demand to the whole country and compare with
/// the configured reference totals.
///
/// `service` is the service profile for `mix_scale × area_households`
/// households (kW, hourly).
pub fn national_total_check(
    service: &HourlySeries,
    mix_scale: f64,
    spec: &ScalingFile,
    cfg: &ValidationConfig,
    real_inputs: bool,
) -> NationalCheck {
    if !real_inputs {
        return NationalCheck::Skipped {
            reason: "fixture-only, check skipped".into(),
        };
    }
    let per_area = service.total() / mix_scale;
    let twh = national_service_twh(per_area, cfg.national_households / spec.area_households);
    NationalCheck::Checked {
        national_twh: twh,
        ratio_pbl: twh / cfg.pbl_twh,
        ratio_cbs: twh / cfg.cbs_twh,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        passed,
        detail,
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Run the fixture battery against prepared inputs.
pub fn run_battery(
    prep: &Prepared,
) -> Result<(Vec<CheckResult>, ReconciliationReport, NationalCheck)> {
    let mut out = Vec::new();
    let report = reconcile_appendix(&prep.scaling)?;
    out.push(check(
        "published per-100k counts reproduced",
        report.reproduces_published(),
        format!(
            "{:?}",
            report.table().iter().map(|t| t.1).collect::<Vec<_>>()
        ),
    ));
    let n_buildings = report
        .rows
        .iter()
        .filter(|r| r.published_per_100k.is_some())
        .count();
    out.push(check(
        "reconciliation covers every building type",
        n_buildings == prep.scaling.building.len(),
        format!("{n_buildings} of {}", prep.scaling.building.len()),
    ));

    let (er, em) = (prep.residential.annual_energy, prep.mixed.annual_energy);
    out.push(check(
        "equal annual energy of load cases",
        rel(er, em) < 1e-9,
        format!("{er:.3} vs {em:.3} kWh, phi = {:.5}", prep.phi()),
    ));

    let l_r = prep.load_mw(LoadKind::ResidentialOnly);
    let l_m = prep.load_mw(LoadKind::Mixed);
    let axis = prep.config.sweep.axis()?;
    let top = *axis.last().expect("non-empty axis") * prep.mix_scale;
    let g1 = prep.unit.scenario(top * 0.6, top * 0.2)?.total;
    let g2 = prep.unit.scenario(top * 0.1, top * 0.9)?.total;
    for (label, g) in [("scenario A", &g1), ("scenario B", &g2)] {
        let a = annual_metrics(g, &l_m)?;
        let lhs = a.pos_mismatch + a.neg_mismatch;
        let rhs = g.total() - l_m.total();
        let sc_ok = a
            .self_consumption
            .is_none_or(|sc| (0.0..=1.0).contains(&sc));
        let util_ok = a.utilisation <= g.total().min(l_m.total()) * (1.0 + 1e-12);
        out.push(check(
            &format!("metric identities, {label}"),
            rel(lhs, rhs) < 1e-9 && sc_ok && util_ok,
            format!("pos+neg {lhs:.6} vs G-L {rhs:.6}"),
        ));
    }

    let dm = delta_mismatch(
        &prep.service.kw_to_mw(),
        &prep.household.kw_to_mw(),
        prep.phi(),
    )?;
    let scale = l_m.peak().max(g1.peak()).max(g2.peak());
    let mut worst: f64 = 0.0;
    for g in [&g1, &g2] {
        let mr = mismatch_series(g, &l_r)?;
        let mm = mismatch_series(g, &l_m)?;
        for h in 0..mr.len() {
            worst = worst.max(((mr[h] - mm[h]) - dm[h]).abs());
        }
    }
    out.push(check(
        "mismatch difference independent of generation",
        worst <= 1e-9 * scale,
        format!("max deviation {worst:.3e} MW"),
    ));

    let solar = prep.unit.pv_percent();
    let wind = prep.unit.wind_percent();
    let edges = compute_bins(
        solar.values(),
        wind.values(),
        &daylight_mask(solar.values()),
    )?;
    let keys = classify_year(&prep.calendar, solar.values(), wind.values(), &edges)?;
    let counts = CountMatrix::from_keys(&keys);
    out.push(check(
        "category counts cover the year",
        counts.total() == prep.calendar.hours() && CategoryKey::all().len() == 150,
        format!(
            "{} hours, wind columns {:?}",
            counts.total(),
            counts.wind_totals()
        ),
    ));

    let national = national_total_check(
        &prep.service,
        prep.mix_scale,
        &prep.scaling,
        &prep.config.validation,
        prep.config.inputs.mode == InputMode::Files,
    );
    Ok((out, report, national))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dutch_fixture_reconciliation() {
        let r = reconcile_appendix(&ScalingFile::dutch_2014()).unwrap();
        assert_eq!(r.rows.len(), 13 + 5);
        assert!(r.reproduces_published());
        let counts: Vec<u32> = r.table().iter().map(|t| t.1).collect();
        assert_eq!(counts, [3, 1, 16, 9, 47, 6, 32, 9, 177, 12, 170, 189, 163]);
        let mut flagged: Vec<&str> = r.flagged().map(|f| f.item.as_str()).collect();
        flagged.sort();
        assert_eq!(
            flagged,
            [
                "Medium Office",
                "Quick Service Restaurant",
                "Warehouse",
                "office band 10000+ m2"
            ]
        );
        let hospital = &r.rows[0];
        assert_eq!(hospital.verdict, Verdict::Match);
        assert_eq!(hospital.printed_path_per_100k, Some(3));
        let medium = r.rows.iter().find(|x| x.item == "Medium Office").unwrap();
        assert_eq!(
            (medium.printed_path_per_100k, medium.recomputed_per_100k),
            (Some(47), Some(48))
        );
        let wh = r.rows.iter().find(|x| x.item == "Warehouse").unwrap();
        assert_eq!(wh.published_per_100k, Some(163));
        assert_eq!(wh.appendix_per_100k, Some(164));
    }

    #[test]
    fn report_renders() {
        let r = reconcile_appendix(&ScalingFile::dutch_2014()).unwrap();
        let text = r.to_text();
        assert!(text.contains("4 of 18 items flagged"));
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let csv = String::from_utf8(buf).unwrap();
        assert_eq!(csv.lines().count(), 19);
    }

    #[test]
    fn national_total_scaling() {
        assert!((national_service_twh(354.4e6, 75.9) - 26.899).abs() < 1e-3);
        let a = national_service_twh(1.0e6, 75.9);
        assert!((national_service_twh(3.0e6, 75.9) - 3.0 * a).abs() < 1e-15);
    }

    #[test]
    fn national_check_skips_without_real_inputs() {
        let s = HourlySeries::constant(8760, 1.0, crate::ingest::Unit::Kw, 2014);
        let c = national_total_check(
            &s,
            1.0,
            &ScalingFile::dutch_2014(),
            &ValidationConfig::default(),
            false,
        );
        assert!(matches!(c, NationalCheck::Skipped { .. }));
        let c = national_total_check(
            &s,
            1.0,
            &ScalingFile::dutch_2014(),
            &ValidationConfig::default(),
            true,
        );
        let NationalCheck::Checked {
            national_twh,
            ratio_pbl,
            ..
        } = c
        else {
            panic!()
        };
        assert!((ratio_pbl - national_twh / 33.6).abs() < 1e-15);
    }
}
