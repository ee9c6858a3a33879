//! Per-unit solar and wind generation from hourly weather.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{HourlySeries, Unit, WeatherRecord};
use crate::sector_scaling::ServiceMix;

/// Specific gas constant of dry air, J/(kg·K).
pub const R_DRY_AIR: f64 = 287.05;
const KELVIN: f64 = 273.15;

pub fn air_density(temp_c: f64, pressure_pa: f64) -> Result<f64> {
    if !(temp_c.is_finite() && temp_c > -90.0) {
        return Err(Error::invalid(format!(
            "temperature {temp_c} °C out of range"
        )));
    }
    if !(pressure_pa.is_finite() && pressure_pa > 0.0) {
        return Err(Error::invalid(format!(
            "pressure {pressure_pa} Pa must be > 0"
        )));
    }
    Ok(pressure_pa / (R_DRY_AIR * (temp_c + KELVIN)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TurbineParams {
    pub hub_height: f64,
    pub rotor_area: f64,
    pub cp: f64,
    pub cut_in: f64,
    pub cut_out: f64,
    pub nominal_power_kw: f64,
    pub shear_exponent: f64,
    /// Height of the measured wind speed.
    pub reference_height: f64,
}

impl Default for TurbineParams {
    /// 500 kW community turbine, 50 m hub, 54 m rotor.
    fn default() -> Self {
        TurbineParams {
            hub_height: 50.0,
            rotor_area: 2290.0,
            cp: 0.35,
            cut_in: 2.5,
            cut_out: 25.0,
            nominal_power_kw: 500.0,
            shear_exponent: 0.15,
            reference_height: 10.0,
        }
    }
}

impl TurbineParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.cp > 0.0 && self.cp < 16.0 / 27.0) {
            return Err(Error::invalid(format!(
                "power coefficient {} outside (0, Betz limit)",
                self.cp
            )));
        }
        if !(self.cut_in > 0.0 && self.cut_in < self.cut_out) {
            return Err(Error::invalid("cut-in must be positive and below cut-out"));
        }
        for (n, v) in [
            ("hub height", self.hub_height),
            ("rotor area", self.rotor_area),
            ("nominal power", self.nominal_power_kw),
            ("shear exponent", self.shear_exponent),
            ("reference height", self.reference_height),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("turbine {n} must be > 0")));
            }
        }
        Ok(())
    }

    pub fn hub_speed(&self, v10: f64) -> f64 {
        v10 * (self.hub_height / self.reference_height).powf(self.shear_exponent)
    }

    /// Unclipped aerodynamic power in kW at hub-height speed `v`.
    pub fn raw_power_kw(&self, rho: f64, v: f64) -> f64 {
        0.5 * rho * self.rotor_area * v.powi(3) * self.cp / 1000.0
    }

    /// Output in kW at hub-height speed `v` and air density `rho`.
    pub fn power_at(&self, rho: f64, v: f64) -> f64 {
        if v < self.cut_in || v > self.cut_out {
            return 0.0;
        }
        self.raw_power_kw(rho, v).min(self.nominal_power_kw)
    }

    pub fn nominal_mw(&self) -> f64 {
        self.nominal_power_kw / 1000.0
    }
}

/// kW output of a single turbine for one hour of weather.
pub fn wind_power(record: &WeatherRecord, params: &TurbineParams) -> Result<f64> {
    record.validate()?;
    let rho = air_density(record.temp, record.pressure)?;
    Ok(params.power_at(rho, params.hub_speed(record.wind_speed_10m)))
}

/// Single-diode cell model parameters (per module of `cells` series cells).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiodeParams {
    /// Short-circuit current at 25 °C and 1000 W/m², A.
    pub isc: f64,
    /// Open-circuit voltage at 25 °C, V (module).
    pub voc: f64,
    pub cells: u32,
    pub ideality: f64,
    /// dIsc/dT, A/K.
    pub isc_temp_coeff: f64,
    /// Band gap, eV.
    pub band_gap: f64,
    /// dV/dI at open circuit per module, Ω.
    pub dv_di_voc: f64,
}

impl Default for DiodeParams {
    /// Solarex MSX-60 datasheet values.
    fn default() -> Self {
        DiodeParams {
            isc: 3.8,
            voc: 21.06,
            cells: 36,
            ideality: 1.2,
            isc_temp_coeff: (3.92 - 3.8) / 50.0,
            band_gap: 1.12,
            dv_di_voc: -1.15 / 2.0,
        }
    }
}

const Q_E: f64 = 1.602_176_634e-19;
const K_B: f64 = 1.380_649e-23;

impl DiodeParams {
    /// Module maximum power in W at irradiance `ghi` and cell temperature `t_cell`.
    pub fn max_power(&self, ghi: f64, t_cell: f64) -> f64 {
        if ghi <= 0.0 {
            return 0.0;
        }
        let ns = self.cells as f64;
        let t1 = 25.0 + KELVIN;
        let tk = t_cell + KELVIN;
        let n = self.ideality;
        let voc_cell = self.voc / ns;
        let vt1 = n * K_B * t1 / Q_E;
        let vt = n * K_B * tk / Q_E;
        let il = (self.isc * ghi / 1000.0 + self.isc_temp_coeff * (tk - t1)).max(0.0);
        let i0_t1 = self.isc / ((voc_cell / vt1).exp() - 1.0);
        let i0 = i0_t1
            * (tk / t1).powf(3.0 / n)
            * (-Q_E * self.band_gap / (n * K_B) * (1.0 / tk - 1.0 / t1)).exp();
        let xv = i0_t1 / vt1 * (voc_cell / vt1).exp();
        let rs = (-self.dv_di_voc / ns - 1.0 / xv).max(0.0);

        let current = |vc: f64| -> f64 {
            let mut i = il;
            for _ in 0..50 {
                let e = ((vc + i * rs) / vt).exp();
                let f = il - i - i0 * (e - 1.0);
                let df = -1.0 - i0 * rs / vt * e;
                let step = f / df;
                i -= step;
                if step.abs() < 1e-12 {
                    break;
                }
            }
            i.max(0.0)
        };
        let power = |vc: f64| vc * current(vc) * ns;

        let voc_here = vt * (il / i0 + 1.0).ln();
        // golden-section search on the per-cell voltage
        let (mut a, mut b) = (0.0, voc_here);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut pc, mut pd) = (power(c), power(d));
        for _ in 0..80 {
            if pc > pd {
                b = d;
                d = c;
                pd = pc;
                c = b - g * (b - a);
                pc = power(c);
            } else {
                a = c;
                c = d;
                pc = pd;
                d = a + g * (b - a);
                pd = power(d);
            }
        }
        power(0.5 * (a + b)).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PvModel {
    LinearDerate,
    SingleDiode(DiodeParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PvParams {
    /// Rated output at standard test conditions, W per m² of panel.
    pub rated_power_density: f64,
    /// Relative power change per °C (negative).
    pub temp_coefficient: f64,
    /// Cell temperature rise above ambient at 800 W/m², °C.
    pub noct_offset: f64,
    pub panel_area: f64,
    pub model: PvModel,
}

impl Default for PvParams {
    /// MSX-60: 60 W on a 1.108 m × 0.502 m module, −0.5 %/°C, NOCT 47 °C.
    fn default() -> Self {
        let panel_area = 1.108 * 0.502;
        PvParams {
            rated_power_density: 60.0 / panel_area,
            temp_coefficient: -0.005,
            noct_offset: 47.0 - 20.0,
            panel_area,
            model: PvModel::LinearDerate,
        }
    }
}

impl PvParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rated_power_density.is_finite() && self.rated_power_density > 0.0) {
            return Err(Error::invalid("PV rated power density must be > 0"));
        }
        if !(self.panel_area.is_finite() && self.panel_area > 0.0) {
            return Err(Error::invalid("PV panel area must be > 0"));
        }
        if self.temp_coefficient > 0.0 {
            return Err(Error::invalid("PV temperature coefficient must be <= 0"));
        }
        Ok(())
    }

    pub fn cell_temperature(&self, ghi: f64, temp: f64) -> f64 {
        temp + self.noct_offset * (ghi / 800.0)
    }

    /// W/m² of panel at plane irradiance `ghi` and cell temperature `t_cell`.
    pub fn output_at(&self, ghi: f64, t_cell: f64) -> f64 {
        if ghi <= 0.0 {
            return 0.0;
        }
        let p = match self.model {
            PvModel::LinearDerate => {
                self.rated_power_density
                    * (ghi / 1000.0)
                    * (1.0 + self.temp_coefficient * (t_cell - 25.0))
            }
            PvModel::SingleDiode(d) => d.max_power(ghi, t_cell) / self.panel_area,
        };
        p.clamp(0.0, self.rated_power_density)
    }
}

/// W per m² of panel for one hour of weather.
pub fn pv_power(record: &WeatherRecord, params: &PvParams) -> Result<f64> {
    record.validate()?;
    let t_cell = params.cell_temperature(record.ghi, record.temp);
    Ok(params.output_at(record.ghi, t_cell))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationParams {
    pub pv: PvParams,
    pub turbine: TurbineParams,
}

/// Per-unit generation: W/m² of PV and kW per turbine.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitGeneration {
    pub pv: HourlySeries,
    pub wind: HourlySeries,
    pub params: GenerationParams,
}

impl UnitGeneration {
    pub fn from_weather(
        weather: &[WeatherRecord],
        params: &GenerationParams,
        year: i32,
    ) -> Result<Self> {
        params.pv.validate()?;
        params.turbine.validate()?;
        let pv = weather
            .iter()
            .map(|r| pv_power(r, &params.pv))
            .collect::<Result<Vec<_>>>()?;
        let wind = weather
            .iter()
            .map(|r| wind_power(r, &params.turbine))
            .collect::<Result<Vec<_>>>()?;
        Ok(UnitGeneration {
            pv: HourlySeries::new(pv, Unit::WPerM2, year)?,
            wind: HourlySeries::new(wind, Unit::KwPerTurbine, year)?,
            params: *params,
        })
    }

    /// Solar output as percent of installed capacity.
    pub fn pv_percent(&self) -> HourlySeries {
        self.pv
            .scaled(100.0 / self.params.pv.rated_power_density)
            .with_unit(Unit::Percent)
    }

    pub fn wind_percent(&self) -> HourlySeries {
        self.wind
            .scaled(100.0 / self.params.turbine.nominal_power_kw)
            .with_unit(Unit::Percent)
    }

    /// PV output in MW per m² of panel.
    pub fn pv_mw_per_m2(&self) -> HourlySeries {
        self.pv.scaled(1e-6).with_unit(Unit::Mw)
    }

    pub fn wind_mw_per_turbine(&self) -> HourlySeries {
        self.wind.scaled(1e-3).with_unit(Unit::Mw)
    }

    pub fn scenario(&self, cap_pv_mw: f64, cap_wind_mw: f64) -> Result<ScenarioGeneration> {
        scenario_generation(cap_pv_mw, cap_wind_mw, &self.pv, &self.wind, &self.params)
    }
}

pub fn turbine_count(cap_wind_mw: f64, turbine: &TurbineParams) -> u64 {
    (cap_wind_mw / turbine.nominal_mw()).round() as u64
}

/// Generation for one installed-capacity scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioGeneration {
    pub cap_pv_mw: f64,
    pub cap_wind_mw: f64,
    pub pv_area_m2: f64,
    pub turbines: u64,
    pub pv: HourlySeries,
    pub wind: HourlySeries,
    pub total: HourlySeries,
}

/// `G(t) = A_pv·pv_unit(t) + n_turbines·wind_unit(t)`, in MW.
pub fn scenario_generation(
    cap_pv_mw: f64,
    cap_wind_mw: f64,
    pv_unit: &HourlySeries,
    wind_unit: &HourlySeries,
    params: &GenerationParams,
) -> Result<ScenarioGeneration> {
    if !(cap_pv_mw.is_finite() && cap_pv_mw >= 0.0 && cap_wind_mw.is_finite() && cap_wind_mw >= 0.0)
    {
        return Err(Error::invalid(format!(
            "capacities must be >= 0 (pv {cap_pv_mw} MW, wind {cap_wind_mw} MW)"
        )));
    }
    let pv_area_m2 = cap_pv_mw * 1e6 / params.pv.rated_power_density;
    let turbines = turbine_count(cap_wind_mw, &params.turbine);
    let pv = pv_unit.scaled(pv_area_m2 * 1e-6).with_unit(Unit::Mw);
    let wind = wind_unit.scaled(turbines as f64 * 1e-3).with_unit(Unit::Mw);
    let total = pv.add(&wind)?;
    Ok(ScenarioGeneration {
        cap_pv_mw,
        cap_wind_mw,
        pv_area_m2,
        turbines,
        pv,
        wind,
        total,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AreaBudget {
    pub household_roof_m2_each: f64,
    /// Total area available relative to the cumulative roof area.
    pub phi_area: f64,
    pub turbine_footprint_km2_per_mw: f64,
    /// Restrict PV to the roof area itself.
    pub roof_only_pv: bool,
}

impl Default for AreaBudget {
    fn default() -> Self {
        AreaBudget {
            household_roof_m2_each: 33.0,
            phi_area: 3.0,
            turbine_footprint_km2_per_mw: 0.345,
            roof_only_pv: false,
        }
    }
}

impl AreaBudget {
    pub fn turbine_footprint_m2(&self, turbine: &TurbineParams) -> f64 {
        self.turbine_footprint_km2_per_mw * 1e6 * turbine.nominal_mw()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaTotals {
    pub roof_area_m2: f64,
    pub pv_limit_m2: f64,
    pub wind_limit_m2: f64,
}

/// Cumulative roof area of `n_households` and `mix_scale` times the service mix.
pub fn area_budget_totals(
    mix: &ServiceMix,
    mix_scale: f64,
    n_households: f64,
    budget: &AreaBudget,
) -> Result<AreaTotals> {
    if budget.phi_area < 1.0 {
        return Err(Error::invalid(format!(
            "area factor {} must be >= 1",
            budget.phi_area
        )));
    }
    let roof = n_households * budget.household_roof_m2_each + mix_scale * mix.roof_area();
    let pv_limit = if budget.roof_only_pv {
        roof
    } else {
        budget.phi_area * roof
    };
    Ok(AreaTotals {
        roof_area_m2: roof,
        pv_limit_m2: pv_limit,
        wind_limit_m2: (budget.phi_area - 1.0) * roof,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sector_scaling::{build_service_mix, IntermediateSource, ScalingFile};
    use approx::assert_abs_diff_eq;

    fn rec(ghi: f64, temp: f64, pressure: f64, wind: f64) -> WeatherRecord {
        WeatherRecord {
            hour_index: 0,
            ghi,
            temp,
            pressure,
            wind_speed_10m: wind,
        }
    }

    /// Temperature at which the ideal-gas density equals `rho` at 101 325 Pa.
    fn temp_for_density(rho: f64) -> f64 {
        101_325.0 / (R_DRY_AIR * rho) - KELVIN
    }

    #[test]
    fn density_at_standard_conditions() {
        assert_abs_diff_eq!(
            air_density(15.0, 101_325.0).unwrap(),
            1.2250,
            epsilon = 5e-4
        );
        let a = air_density(7.0, 90_000.0).unwrap();
        assert_abs_diff_eq!(
            air_density(7.0, 180_000.0).unwrap(),
            2.0 * a,
            epsilon = 1e-15
        );
        assert_eq!(a, air_density(7.0, 90_000.0).unwrap());
        assert!(air_density(-100.0, 1e5).is_err());
        assert!(air_density(10.0, 0.0).is_err());
    }

    #[test]
    fn wind_examples() {
        let p = TurbineParams::default();
        let t = temp_for_density(1.225);
        assert_eq!(wind_power(&rec(0.0, t, 101_325.0, 1.0), &p).unwrap(), 0.0);
        assert!(p.hub_speed(24.0) > 25.0);
        assert_eq!(wind_power(&rec(0.0, t, 101_325.0, 24.0), &p).unwrap(), 0.0);
        assert_abs_diff_eq!(p.hub_speed(6.0), 7.638, epsilon = 1e-3);
        // ½ρAV³Cp with V = 6·5^0.15
        let hand = 0.5 * 1.225 * 2290.0 * (6.0 * 5f64.powf(0.15)).powi(3) * 0.35 / 1000.0;
        let got = wind_power(&rec(0.0, t, 101_325.0, 6.0), &p).unwrap();
        assert_abs_diff_eq!(got, hand, epsilon = 1e-9);
        assert_abs_diff_eq!(got, 218.8, epsilon = 0.5);
        assert_abs_diff_eq!(
            p.raw_power_kw(1.225, p.hub_speed(10.0)),
            1013.0,
            epsilon = 1.0
        );
        assert_eq!(
            wind_power(&rec(0.0, t, 101_325.0, 10.0), &p).unwrap(),
            500.0
        );
    }

    #[test]
    fn pv_linear_model() {
        let p = PvParams::default();
        assert_eq!(pv_power(&rec(0.0, 20.0, 1e5, 3.0), &p).unwrap(), 0.0);
        // ambient chosen so the cell sits at 25 °C
        let ambient = 25.0 - p.noct_offset * 1000.0 / 800.0;
        assert_abs_diff_eq!(
            pv_power(&rec(1000.0, ambient, 1e5, 0.0), &p).unwrap(),
            p.rated_power_density,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            p.output_at(500.0, 40.0),
            0.5 * p.output_at(1000.0, 40.0),
            epsilon = 1e-12
        );
        assert!(p.output_at(1400.0, -30.0) <= p.rated_power_density);
    }

    #[test]
    fn pv_single_diode_model() {
        let p = PvParams {
            model: PvModel::SingleDiode(DiodeParams::default()),
            ..PvParams::default()
        };
        let stc = DiodeParams::default().max_power(1000.0, 25.0);
        assert!((55.0..=62.0).contains(&stc), "MSX-60 peak {stc} W");
        assert_eq!(p.output_at(0.0, 25.0), 0.0);
        let mut last = 0.0;
        for g in (100..=1000).step_by(100) {
            let out = p.output_at(g as f64, 25.0);
            assert!(out > last && out <= p.rated_power_density);
            last = out;
        }
        assert!(p.output_at(800.0, 60.0) < p.output_at(800.0, 20.0));
    }

    #[test]
    fn scenario_scaling() {
        let params = GenerationParams::default();
        let pv = HourlySeries::new(
            (0..48).map(|i| (i % 24) as f64 * 10.0).collect(),
            Unit::WPerM2,
            2014,
        )
        .unwrap();
        let wind = HourlySeries::new(
            (0..48).map(|i| (i % 7) as f64 * 50.0).collect(),
            Unit::KwPerTurbine,
            2014,
        )
        .unwrap();
        let zero = scenario_generation(0.0, 0.0, &pv, &wind, &params).unwrap();
        assert!(zero.total.values().iter().all(|&v| v == 0.0));
        let one = scenario_generation(0.0, 0.5, &pv, &wind, &params).unwrap();
        assert_eq!(one.turbines, 1);
        for i in 0..48 {
            assert_abs_diff_eq!(one.total[i], wind[i] / 1000.0, epsilon = 1e-15);
        }
        let a = scenario_generation(52.5, 0.0, &pv, &wind, &params).unwrap();
        let b = scenario_generation(105.0, 0.0, &pv, &wind, &params).unwrap();
        let ab = scenario_generation(157.5, 0.0, &pv, &wind, &params).unwrap();
        for i in 0..48 {
            assert_abs_diff_eq!(ab.total[i], a.total[i] + b.total[i], epsilon = 1e-9);
        }
        assert!(scenario_generation(-1.0, 0.0, &pv, &wind, &params).is_err());
    }

    #[test]
    fn area_budget() {
        let mix =
            build_service_mix(&ScalingFile::dutch_2014(), IntermediateSource::Printed).unwrap();
        let roofs = [
            4484., 1891., 1003., 3860., 1661., 511., 6871., 9796., 2294., 4181., 511., 232., 4835.,
        ];
        let counts = [
            3., 1., 16., 9., 47., 6., 32., 9., 177., 12., 170., 189., 163.,
        ];
        let service: f64 = roofs.iter().zip(counts).map(|(r, c)| r * c).sum();
        let t = area_budget_totals(&mix, 1.0, 100_000.0, &AreaBudget::default()).unwrap();
        assert_eq!(t.roof_area_m2, 3_300_000.0 + service);
        assert_eq!(t.pv_limit_m2, 3.0 * t.roof_area_m2);
        assert_eq!(t.wind_limit_m2, 2.0 * t.roof_area_m2);

        let none =
            area_budget_totals(&ServiceMix::default(), 1.0, 0.0, &AreaBudget::default()).unwrap();
        assert_eq!(
            (none.roof_area_m2, none.pv_limit_m2, none.wind_limit_m2),
            (0.0, 0.0, 0.0)
        );
        let flat = AreaBudget {
            phi_area: 1.0,
            ..AreaBudget::default()
        };
        assert_eq!(
            area_budget_totals(&mix, 1.0, 10.0, &flat)
                .unwrap()
                .wind_limit_m2,
            0.0
        );
    }

    #[test]
    fn turbine_footprint() {
        let f = AreaBudget::default().turbine_footprint_m2(&TurbineParams::default());
        assert_abs_diff_eq!(f, 172_500.0, epsilon = 1e-6);
    }
}
