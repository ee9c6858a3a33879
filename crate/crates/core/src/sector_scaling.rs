//! Reference-building equivalents for service-sector consumer types.
//!
//! A local building stock is expressed as a number of reference buildings by
//! scaling with the ratio of a building-use quantity (beds, rooms, floor
//! area, students, ...) between the local and reference contexts. The
//! national result is then brought to a fixed number of households.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dutch households (7.59 million) per 100 000.
pub const NL_HOUSEHOLD_DIVISOR: f64 = 75.9;

/// Round half away from zero.
pub fn round_half_away(x: f64) -> f64 {
    x.round()
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::invalid(format!("{name} must be > 0, got {v}")));
    }
    Ok(())
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::invalid(format!("{name} must be >= 0, got {v}")));
    }
    Ok(())
}

/// `local_count` buildings, each scaled by `x_local / x_ref`.
pub fn count_ratio_equivalents(local_count: f64, x_local: f64, x_ref: f64) -> Result<f64> {
    positive("reference quantity", x_ref)?;
    non_negative("local count", local_count)?;
    non_negative("local quantity", x_local)?;
    Ok(local_count * (x_local / x_ref))
}

pub fn area_equivalents(total_local_area: f64, reference_area: f64) -> Result<f64> {
    positive("reference area", reference_area)?;
    non_negative("local area", total_local_area)?;
    Ok(total_local_area / reference_area)
}

pub fn warehouse_equivalents(
    sector_consumption: f64,
    per_building: f64,
    employees_local: f64,
    employees_ref: f64,
) -> Result<f64> {
    positive("sector consumption", sector_consumption)?;
    positive("per-building consumption", per_building)?;
    positive("local employees", employees_local)?;
    positive("reference employees", employees_ref)?;
    Ok((sector_consumption / per_building) * (employees_local / employees_ref))
}

/// National equivalents per 100 000 Dutch households, rounded to the nearest
/// integer.
pub fn per_100k(national_equivalents: f64) -> Result<u32> {
    per_area(national_equivalents, NL_HOUSEHOLD_DIVISOR)
}

pub fn per_area(national_equivalents: f64, divisor: f64) -> Result<u32> {
    non_negative("national equivalents", national_equivalents)?;
    positive("household divisor", divisor)?;
    Ok(round_half_away(national_equivalents / divisor) as u32)
}

/// One floor-area band of the national office stock.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OfficeBand {
    pub min_area: f64,
    /// `None` for an open-ended top band.
    #[serde(default)]
    pub max_area: Option<f64>,
    pub share_pct: f64,
    /// Required when `max_area` is absent.
    #[serde(default)]
    pub assumed_average: Option<f64>,
    #[serde(default)]
    pub printed_count: Option<f64>,
    #[serde(default)]
    pub printed_area: Option<f64>,
}

impl OfficeBand {
    pub fn new(min_area: f64, max_area: Option<f64>, share_pct: f64) -> Self {
        OfficeBand {
            min_area,
            max_area,
            share_pct,
            assumed_average: None,
            printed_count: None,
            printed_area: None,
        }
    }

    pub fn average_area(&self) -> Result<f64> {
        match (self.max_area, self.assumed_average) {
            (_, Some(avg)) => Ok(avg),
            (Some(max), None) => Ok(0.5 * (self.min_area + max)),
            (None, None) => Err(Error::invalid(format!(
                "open-ended office band from {} m2 needs an assumed average area",
                self.min_area
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandAllocation {
    pub average_area: f64,
    pub count: f64,
    pub area: f64,
}

/// Split a total office floor area into per-band office counts.
///
/// Band `j` holds `share_j` percent of all offices; with the band average
/// areas this fixes the total office count `N = total / Σ share_j·avg_j`.
pub fn office_band_counts(
    bands: &[OfficeBand],
    total_used_area: f64,
) -> Result<Vec<BandAllocation>> {
    if bands.is_empty() {
        return Err(Error::invalid("no office bands"));
    }
    non_negative("total office area", total_used_area)?;
    let share_sum: f64 = bands.iter().map(|b| b.share_pct).sum();
    if (share_sum - 100.0).abs() > 0.1 {
        return Err(Error::invalid(format!(
            "office band shares sum to {share_sum}%, expected 100%"
        )));
    }
    let averages = bands
        .iter()
        .map(OfficeBand::average_area)
        .collect::<Result<Vec<_>>>()?;
    let weighted: f64 = bands
        .iter()
        .zip(&averages)
        .map(|(b, avg)| b.share_pct / 100.0 * avg)
        .sum();
    positive("weighted band area", weighted)?;
    let n_total = total_used_area / weighted;
    Ok(bands
        .iter()
        .zip(averages)
        .map(|(b, average_area)| {
            let count = b.share_pct / 100.0 * n_total;
            BandAllocation {
                average_area,
                count,
                area: count * average_area,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OfficeBandTable {
    pub total_used_area: f64,
    pub bands: Vec<OfficeBand>,
}

/// How a building type's national equivalents are derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", content = "inputs", rename_all = "kebab-case")]
pub enum ScalingMethod {
    CountRatio {
        local_count: f64,
        local_quantity: f64,
        reference_quantity: f64,
    },
    /// Total local quantity divided by the per-reference-building quantity
    /// (floor area, or rooms when counting hotel capacity).
    TotalArea {
        total_local_area: f64,
        reference_area: f64,
    },
    /// Floor area of the selected office bands over the reference area.
    OfficeBands {
        bands: Vec<usize>,
        reference_area: f64,
    },
    WarehouseEnergyEmployees {
        sector_consumption_mwh: f64,
        per_building_mwh: f64,
        employees_local: f64,
        employees_ref: f64,
    },
    /// Local buildings map one-to-one onto reference buildings.
    DirectCount { components: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildingScalingSpec {
    pub name: String,
    #[serde(flatten)]
    pub method: ScalingMethod,
    pub roof_area_m2: f64,
    #[serde(default)]
    pub printed_equivalents: Option<f64>,
    #[serde(default)]
    pub published_per_100k: Option<u32>,
    #[serde(default)]
    pub appendix_per_100k: Option<u32>,
}

impl BuildingScalingSpec {
    pub fn validate(&self) -> Result<()> {
        positive(&format!("{}: roof area", self.name), self.roof_area_m2)?;
        let all_positive = |vals: &[(&str, f64)]| -> Result<()> {
            for (n, v) in vals {
                positive(&format!("{}: {n}", self.name), *v)?;
            }
            Ok(())
        };
        match &self.method {
            ScalingMethod::CountRatio {
                local_count,
                local_quantity,
                reference_quantity,
            } => all_positive(&[
                ("local_count", *local_count),
                ("local_quantity", *local_quantity),
                ("reference_quantity", *reference_quantity),
            ]),
            ScalingMethod::TotalArea {
                total_local_area,
                reference_area,
            } => all_positive(&[
                ("total_local_area", *total_local_area),
                ("reference_area", *reference_area),
            ]),
            ScalingMethod::OfficeBands {
                bands,
                reference_area,
            } => {
                if bands.is_empty() {
                    return Err(Error::invalid(format!(
                        "{}: no office bands selected",
                        self.name
                    )));
                }
                all_positive(&[("reference_area", *reference_area)])
            }
            ScalingMethod::WarehouseEnergyEmployees {
                sector_consumption_mwh,
                per_building_mwh,
                employees_local,
                employees_ref,
            } => all_positive(&[
                ("sector_consumption_mwh", *sector_consumption_mwh),
                ("per_building_mwh", *per_building_mwh),
                ("employees_local", *employees_local),
                ("employees_ref", *employees_ref),
            ]),
            ScalingMethod::DirectCount { components } => {
                if components.is_empty() {
                    return Err(Error::invalid(format!("{}: no components", self.name)));
                }
                for c in components {
                    non_negative(&format!("{}: component", self.name), *c)?;
                }
                Ok(())
            }
        }
    }

    /// Unrounded national equivalents computed from the raw inputs.
    pub fn equivalents(&self, offices: Option<&[BandAllocation]>) -> Result<f64> {
        match &self.method {
            ScalingMethod::CountRatio {
                local_count,
                local_quantity,
                reference_quantity,
            } => count_ratio_equivalents(*local_count, *local_quantity, *reference_quantity),
            ScalingMethod::TotalArea {
                total_local_area,
                reference_area,
            } => area_equivalents(*total_local_area, *reference_area),
            ScalingMethod::OfficeBands {
                bands,
                reference_area,
            } => {
                let alloc = offices.ok_or_else(|| {
                    Error::invalid(format!("{}: office band table required", self.name))
                })?;
                let mut area = 0.0;
                for &i in bands {
                    area += alloc
                        .get(i)
                        .ok_or_else(|| {
                            Error::invalid(format!("{}: office band {i} does not exist", self.name))
                        })?
                        .area;
                }
                area_equivalents(area, *reference_area)
            }
            ScalingMethod::WarehouseEnergyEmployees {
                sector_consumption_mwh,
                per_building_mwh,
                employees_local,
                employees_ref,
            } => warehouse_equivalents(
                *sector_consumption_mwh,
                *per_building_mwh,
                *employees_local,
                *employees_ref,
            ),
            ScalingMethod::DirectCount { components } => Ok(components.iter().sum()),
        }
    }
}

/// Which national intermediate feeds the per-100k rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntermediateSource {
    /// Published intermediates where available, recomputed otherwise.
    Printed,
    Recomputed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixEntry {
    pub building: String,
    pub count: u32,
    pub roof_area_m2: f64,
}

/// Reference-building counts for the modelled household population.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ServiceMix {
    pub entries: Vec<MixEntry>,
}

impl ServiceMix {
    pub fn counts(&self) -> Vec<u32> {
        self.entries.iter().map(|e| e.count).collect()
    }

    pub fn get(&self, building: &str) -> Option<&MixEntry> {
        self.entries.iter().find(|e| e.building == building)
    }

    /// Σ count × roof area.
    pub fn roof_area(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.count as f64 * e.roof_area_m2)
            .sum()
    }
}

/// A complete scaling recipe: regional constants, office bands and buildings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingFile {
    #[serde(default)]
    pub region: String,
    pub national_households: f64,
    pub area_households: f64,
    #[serde(default)]
    pub office_bands: Option<OfficeBandTable>,
    pub building: Vec<BuildingScalingSpec>,
}

/// Per-building scaling results along both arithmetic paths.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingOutcome {
    pub building: String,
    pub recomputed: f64,
    pub printed: Option<f64>,
    pub per_area_printed_path: u32,
    pub per_area_recomputed: u32,
}

impl ScalingFile {
    pub const DUTCH_2014: &'static str = include_str!("../fixtures/nl2014_scaling.toml");

    pub fn dutch_2014() -> Self {
        Self::from_toml(Self::DUTCH_2014).expect("bundled scaling fixture parses")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ScalingFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("scaling spec: {e}")))?;
        file.validate()?;
        Ok(file)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        positive("national households", self.national_households)?;
        positive("area households", self.area_households)?;
        for b in &self.building {
            b.validate()?;
        }
        Ok(())
    }

    pub fn divisor(&self) -> f64 {
        self.national_households / self.area_households
    }

    pub fn office_allocation(&self) -> Result<Option<Vec<BandAllocation>>> {
        self.office_bands
            .as_ref()
            .map(|t| office_band_counts(&t.bands, t.total_used_area))
            .transpose()
    }

    pub fn outcomes(&self) -> Result<Vec<ScalingOutcome>> {
        let offices = self.office_allocation()?;
        let divisor = self.divisor();
        self.building
            .iter()
            .map(|b| {
                let recomputed = b.equivalents(offices.as_deref())?;
                let printed_path = b.printed_equivalents.unwrap_or(round_half_away(recomputed));
                Ok(ScalingOutcome {
                    building: b.name.clone(),
                    recomputed,
                    printed: b.printed_equivalents,
                    per_area_printed_path: per_area(printed_path, divisor)?,
                    per_area_recomputed: per_area(round_half_away(recomputed), divisor)?,
                })
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.context(format!("scaling `{}`", self.region)))
    }
}

/// Reference-building counts per `area_households` for every spec.
pub fn build_service_mix(file: &ScalingFile, source: IntermediateSource) -> Result<ServiceMix> {
    let outcomes = file.outcomes()?;
    let entries = file
        .building
        .iter()
        .zip(outcomes)
        .map(|(b, o)| MixEntry {
            building: b.name.clone(),
            count: match source {
                IntermediateSource::Printed => o.per_area_printed_path,
                IntermediateSource::Recomputed => o.per_area_recomputed,
            },
            roof_area_m2: b.roof_area_m2,
        })
        .collect();
    Ok(ServiceMix { entries })
}

/// File-name stem for a building type, e.g. `quick-service-restaurant`.
pub fn building_slug(name: &str) -> String {
    name.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join("-")
}
