//! Residential-only and mixed load cases.
//!
//! The mixed case is household plus service-sector demand, `L_m = h + s`.
//! The residential-only case scales household demand by `φ` so both cases
//! carry the same annual energy, `L_r = φ·h`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_same_len, Error, Result};
use crate::ingest::{HourlySeries, Unit};
use crate::sector_scaling::ServiceMix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoadKind {
    ResidentialOnly,
    Mixed,
}

impl LoadKind {
    pub const ALL: [LoadKind; 2] = [LoadKind::ResidentialOnly, LoadKind::Mixed];

    pub fn as_str(self) -> &'static str {
        match self {
            LoadKind::ResidentialOnly => "residential",
            LoadKind::Mixed => "mixed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadCase {
    pub kind: LoadKind,
    pub series: HourlySeries,
    /// Household scale factor; 1 for the mixed case.
    pub phi: f64,
    pub annual_energy: f64,
}

/// `s(t) = Σ_k weight_k · profile_k(t)` with weights given per building type.
pub fn weighted_service_profile(
    weights: &[(String, f64)],
    reference_profiles: &BTreeMap<String, HourlySeries>,
    len: usize,
    year: i32,
) -> Result<HourlySeries> {
    let mut acc = vec![0.0; len];
    let mut unit = Unit::Kw;
    for (building, w) in weights {
        let profile = reference_profiles
            .get(building)
            .ok_or_else(|| Error::MissingProfile(building.clone()))?;
        ensure_same_len(len, profile.len())
            .map_err(|e| e.context(format!("profile `{building}`")))?;
        if profile.year() != year {
            return Err(Error::invalid(format!(
                "profile `{building}` is for year {}, expected {year}",
                profile.year()
            )));
        }
        unit = profile.unit();
        if *w == 0.0 {
            continue;
        }
        for (a, p) in acc.iter_mut().zip(profile.values()) {
            *a += w * p;
        }
    }
    HourlySeries::new(acc, unit, year)
}

/// Service-sector demand for the reference population described by `mix`.
pub fn synthesize_service_profile(
    mix: &ServiceMix,
    reference_profiles: &BTreeMap<String, HourlySeries>,
    len: usize,
    year: i32,
) -> Result<HourlySeries> {
    synthesize_scaled_service_profile(mix, 1.0, reference_profiles, len, year)
}

/// As [`synthesize_service_profile`], with every count multiplied by
/// `population_scale` (e.g. 0.01 for 1 000 households from a per-100k mix).
pub fn synthesize_scaled_service_profile(
    mix: &ServiceMix,
    population_scale: f64,
    reference_profiles: &BTreeMap<String, HourlySeries>,
    len: usize,
    year: i32,
) -> Result<HourlySeries> {
    let weights: Vec<(String, f64)> = mix
        .entries
        .iter()
        .map(|e| (e.building.clone(), e.count as f64 * population_scale))
        .collect();
    weighted_service_profile(&weights, reference_profiles, len, year)
}

pub fn compute_phi(mixed_annual: f64, household_annual: f64) -> Result<f64> {
    if !(household_annual.is_finite() && household_annual > 0.0) {
        return Err(Error::invalid(format!(
            "household annual energy must be > 0, got {household_annual}"
        )));
    }
    if !(mixed_annual.is_finite() && mixed_annual >= 0.0) {
        return Err(Error::invalid(format!(
            "mixed annual energy must be >= 0, got {mixed_annual}"
        )));
    }
    Ok(mixed_annual / household_annual)
}

pub fn residential_case(h: &HourlySeries, phi: f64) -> Result<LoadCase> {
    if !(phi.is_finite() && phi >= 0.0) {
        return Err(Error::invalid(format!("phi must be >= 0, got {phi}")));
    }
    if phi < 1.0 {
        log::warn!("phi = {phi} < 1: residential case carries less than household demand");
    }
    let series = h.scaled(phi);
    Ok(LoadCase {
        kind: LoadKind::ResidentialOnly,
        annual_energy: series.total(),
        series,
        phi,
    })
}

pub fn mixed_case(h: &HourlySeries, s: &HourlySeries) -> Result<LoadCase> {
    if h.year() != s.year() {
        return Err(Error::invalid(format!(
            "household year {} differs from service year {}",
            h.year(),
            s.year()
        )));
    }
    let series = h.add(s)?;
    Ok(LoadCase {
        kind: LoadKind::Mixed,
        annual_energy: series.total(),
        series,
        phi: 1.0,
    })
}

/// Both load cases with `φ = Σ(h + s) / Σh`.
pub fn equal_energy_cases(h: &HourlySeries, s: &HourlySeries) -> Result<(LoadCase, LoadCase)> {
    let mixed = mixed_case(h, s)?;
    let phi = compute_phi(mixed.annual_energy, h.total())?;
    Ok((residential_case(h, phi)?, mixed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sector_scaling::MixEntry;

    fn series(v: Vec<f64>) -> HourlySeries {
        HourlySeries::new(v, Unit::Kw, 2014).unwrap()
    }

    fn mix(entries: &[(&str, u32)]) -> ServiceMix {
        ServiceMix {
            entries: entries
                .iter()
                .map(|(b, c)| MixEntry {
                    building: b.to_string(),
                    count: *c,
                    roof_area_m2: 100.0,
                })
                .collect(),
        }
    }

    #[test]
    fn single_type_linear() {
        let profiles = BTreeMap::from([(
            "A".to_string(),
            HourlySeries::constant(24, 1.0, Unit::Kw, 2014),
        )]);
        let s = synthesize_service_profile(&mix(&[("A", 2)]), &profiles, 24, 2014).unwrap();
        assert!(s.values().iter().all(|&v| v == 2.0));
        let z = synthesize_service_profile(&mix(&[("A", 0)]), &profiles, 24, 2014).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_types_pointwise() {
        let p: Vec<f64> = (0..48).map(|i| (i as f64 * 0.7).sin().abs()).collect();
        let q: Vec<f64> = (0..48).map(|i| 1.0 + (i % 5) as f64).collect();
        let profiles = BTreeMap::from([
            ("P".to_string(), series(p.clone())),
            ("Q".to_string(), series(q.clone())),
        ]);
        let s =
            synthesize_service_profile(&mix(&[("P", 3), ("Q", 1)]), &profiles, 48, 2014).unwrap();
        for i in 0..48 {
            assert_eq!(s[i], 3.0 * p[i] + q[i]);
        }
    }

    #[test]
    fn missing_profile_names_type() {
        let err = synthesize_service_profile(&mix(&[("Hospital", 1)]), &BTreeMap::new(), 24, 2014)
            .unwrap_err();
        assert!(err.to_string().contains("Hospital"));
    }

    #[test]
    fn phi_values() {
        let phi = compute_phi(7.10481, 3.49982).unwrap();
        assert_eq!((phi * 1e5).round() / 1e5, 2.03005);
        assert_eq!(compute_phi(4.2, 4.2).unwrap(), 1.0);
        assert_eq!(compute_phi(8.4, 4.2).unwrap(), 2.0);
        assert!(compute_phi(1.0, 0.0).is_err());
    }

    #[test]
    fn residential_scaling() {
        let h = HourlySeries::constant(8760, 100_000.0 * 3500.0 / 8760.0, Unit::Kw, 2014);
        let r = residential_case(&h, 1.0).unwrap();
        assert_eq!(r.series, h);
        let r = residential_case(&h, 2.03005).unwrap();
        let expected = 2.03005 * 100_000.0 * 3500.0 / 8760.0;
        assert!(r.series.values().iter().all(|&v| v == expected));
        assert!((r.annual_energy - 2.03005 * h.total()).abs() / r.annual_energy < 1e-12);
        assert!(residential_case(&h, -1.0).is_err());
    }

    #[test]
    fn mixed_sum() {
        let h = series((0..24).map(|i| i as f64).collect());
        let zero = HourlySeries::zeros(24, Unit::Kw, 2014);
        assert_eq!(mixed_case(&h, &zero).unwrap().series, h);
        let doubled = mixed_case(&h, &h).unwrap();
        assert_eq!(doubled.series, h.scaled(2.0));
        let short = HourlySeries::zeros(23, Unit::Kw, 2014);
        assert!(matches!(
            mixed_case(&h, &short),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn equal_energy() {
        let h = series(
            (0..8760)
                .map(|i| 1.0 + ((i % 24) as f64 - 18.0).abs().recip().min(2.0))
                .collect(),
        );
        let s = series(
            (0..8760)
                .map(|i| {
                    if (8..18).contains(&(i % 24)) {
                        3.0
                    } else {
                        0.5
                    }
                })
                .collect(),
        );
        let (r, m) = equal_energy_cases(&h, &s).unwrap();
        assert!((r.annual_energy - m.annual_energy).abs() / m.annual_energy < 1e-9);
    }
}
