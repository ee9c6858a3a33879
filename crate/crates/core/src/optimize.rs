//! Area-constrained renewable mix.
//!
//! Chooses PV panel area `x_pv` and wind-turbine footprint area `x_turbine`
//! to minimise
//!
//! ```text
//! f(x) = p_pos·M⁺(x) + p_neg·M⁻(x) + p_ren·R(x)
//! s.t.  0 ≤ x_pv ≤ φ·A_roof
//!       0 ≤ x_turbine ≤ (φ − 1)·A_roof
//!       x_pv + x_turbine ≤ φ·A_roof
//! ```
//!
//! where `G = x_pv·g_pv + (x_turbine / footprint)·g_turbine`. A real-coded
//! genetic algorithm does the search; an exhaustive grid serves as a check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_same_len, Error, Result};
use crate::ingest::HourlySeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weights {
    pub pos: f64,
    pub neg: f64,
    pub ren: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            pos: 1.0,
            neg: 1.0,
            ren: -5.0,
        }
    }
}

/// How the (signed, ≤ 0) shortage enters the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignConvention {
    /// `|M⁻|`: shortages are penalised.
    #[default]
    MagnitudeNeg,
    /// `M⁻` as stored (≤ 0), which rewards larger shortages.
    SignedNeg,
}

#[derive(Debug, Clone)]
pub struct MixProblem {
    /// MW per m² of PV.
    pub g_pv: Vec<f64>,
    /// MW per turbine.
    pub g_turbine: Vec<f64>,
    /// MW.
    pub load: Vec<f64>,
    pub roof_area: f64,
    pub phi_area: f64,
    pub weights: Weights,
    pub turbine_footprint_m2: f64,
    pub sign: SignConvention,
    pub roof_only_pv: bool,
    /// For reporting installed PV capacity.
    pub pv_rated_w_per_m2: f64,
    pub turbine_nominal_mw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub pv_max: f64,
    pub turbine_max: f64,
    pub total_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub pos_mismatch: f64,
    /// Signed, ≤ 0.
    pub neg_mismatch: f64,
    pub utilisation: f64,
    pub value: f64,
}

impl MixProblem {
    pub fn new(
        g_pv: &HourlySeries,
        g_turbine: &HourlySeries,
        load: &HourlySeries,
        roof_area: f64,
        phi_area: f64,
        turbine_footprint_m2: f64,
    ) -> Result<Self> {
        ensure_same_len(g_pv.len(), load.len())?;
        ensure_same_len(g_turbine.len(), load.len())?;
        let p = MixProblem {
            g_pv: g_pv.values().to_vec(),
            g_turbine: g_turbine.values().to_vec(),
            load: load.values().to_vec(),
            roof_area,
            phi_area,
            weights: Weights::default(),
            turbine_footprint_m2,
            sign: SignConvention::default(),
            roof_only_pv: false,
            pv_rated_w_per_m2: 1.0,
            turbine_nominal_mw: 0.5,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.weights;
        if !(w.pos > 0.0 && w.neg > 0.0 && w.ren < 0.0) {
            return Err(Error::invalid(format!(
                "weights need p_pos > 0, p_neg > 0, p_ren < 0; got {w:?}"
            )));
        }
        if !(self.roof_area.is_finite() && self.roof_area > 0.0) {
            return Err(Error::Infeasible(format!(
                "roof area {} must be > 0",
                self.roof_area
            )));
        }
        if !(self.phi_area >= 1.0) {
            return Err(Error::Infeasible(format!(
                "area factor {} must be >= 1",
                self.phi_area
            )));
        }
        if !(self.turbine_footprint_m2 > 0.0) {
            return Err(Error::invalid("turbine footprint must be > 0"));
        }
        ensure_same_len(self.g_pv.len(), self.load.len())?;
        ensure_same_len(self.g_turbine.len(), self.load.len())?;
        Ok(())
    }

    pub fn bounds(&self) -> Bounds {
        let total = self.phi_area * self.roof_area;
        Bounds {
            pv_max: if self.roof_only_pv {
                self.roof_area
            } else {
                total
            },
            turbine_max: (self.phi_area - 1.0) * self.roof_area,
            total_max: total,
        }
    }

    pub fn is_feasible(&self, x_pv: f64, x_turbine: f64) -> bool {
        let b = self.bounds();
        (0.0..=b.pv_max).contains(&x_pv)
            && (0.0..=b.turbine_max).contains(&x_turbine)
            && x_pv + x_turbine <= b.total_max
    }

    pub fn combine(&self, pos: f64, neg: f64, util: f64) -> f64 {
        let neg_term = match self.sign {
            SignConvention::MagnitudeNeg => neg.abs(),
            SignConvention::SignedNeg => neg,
        };
        self.weights.pos * pos + self.weights.neg * neg_term + self.weights.ren * util
    }

    /// Objective with a continuous number of turbines; no bounds check.
    pub fn evaluate(&self, x_pv: f64, x_turbine: f64) -> Objective {
        let turbines = x_turbine / self.turbine_footprint_m2;
        let mut pos = 0.0;
        let mut neg = 0.0;
        let mut util = 0.0;
        for ((&gp, &gt), &l) in self.g_pv.iter().zip(&self.g_turbine).zip(&self.load) {
            let g = x_pv * gp + turbines * gt;
            let m = g - l;
            if m > 0.0 {
                pos += m;
            } else {
                neg += m;
            }
            util += g.min(l);
        }
        Objective {
            pos_mismatch: pos,
            neg_mismatch: neg,
            utilisation: util,
            value: self.combine(pos, neg, util),
        }
    }

    pub fn objective(&self, x_pv: f64, x_turbine: f64) -> Result<Objective> {
        if !self.is_feasible(x_pv, x_turbine) {
            return Err(Error::invalid(format!(
                "x = ({x_pv}, {x_turbine}) violates the area constraints {:?}",
                self.bounds()
            )));
        }
        Ok(self.evaluate(x_pv, x_turbine))
    }

    /// Euclidean projection onto the feasible polygon.
    pub fn project(&self, x_pv: f64, x_turbine: f64) -> (f64, f64) {
        let b = self.bounds();
        let clamp = |lam: f64| {
            (
                (x_pv - lam).clamp(0.0, b.pv_max),
                (x_turbine - lam).clamp(0.0, b.turbine_max),
            )
        };
        let (x, y) = clamp(0.0);
        if x + y <= b.total_max {
            return (x, y);
        }
        // shift along (1, 1) until the sum constraint binds
        let (mut lo, mut hi) = (0.0, x_pv.max(x_turbine).max(0.0));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let (a, c) = clamp(mid);
            if a + c > b.total_max {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (x, y) = clamp(hi);
        (x, y.min(b.total_max - x).max(0.0))
    }

    pub fn pv_mw(&self, x_pv: f64) -> f64 {
        x_pv * self.pv_rated_w_per_m2 * 1e-6
    }

    /// Round turbines to the nearest count that keeps every constraint.
    pub fn round_turbines(&self, x_pv: f64, x_turbine: f64) -> u64 {
        let b = self.bounds();
        let mut n = (x_turbine / self.turbine_footprint_m2).round().max(0.0) as u64;
        while n > 0 {
            let area = n as f64 * self.turbine_footprint_m2;
            if area <= b.turbine_max && x_pv + area <= b.total_max {
                break;
            }
            n -= 1;
        }
        n
    }

    pub fn solution(
        &self,
        x_pv: f64,
        x_turbine: f64,
        generations: usize,
        evaluations: usize,
    ) -> MixSolution {
        let b = self.bounds();
        let objective = self.evaluate(x_pv, x_turbine);
        let turbines = self.round_turbines(x_pv, x_turbine);
        let x_turbine_rounded = turbines as f64 * self.turbine_footprint_m2;
        let rounded = self.evaluate(x_pv, x_turbine_rounded);
        MixSolution {
            x_pv,
            x_turbine,
            x_turbine_rounded,
            pv_mw: self.pv_mw(x_pv),
            turbines,
            wind_mw: turbines as f64 * self.turbine_nominal_mw,
            objective,
            objective_rounded: rounded,
            slack_pv: b.pv_max - x_pv,
            slack_turbine: b.turbine_max - x_turbine_rounded,
            slack_total: b.total_max - x_pv - x_turbine_rounded,
            generations,
            evaluations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixSolution {
    pub x_pv: f64,
    /// Continuous turbine footprint area from the search, m².
    pub x_turbine: f64,
    /// Footprint of the rounded turbine count, m².
    pub x_turbine_rounded: f64,
    pub pv_mw: f64,
    pub turbines: u64,
    pub wind_mw: f64,
    pub objective: Objective,
    pub objective_rounded: Objective,
    pub slack_pv: f64,
    pub slack_turbine: f64,
    pub slack_total: f64,
    pub generations: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population: usize,
    pub tournament: usize,
    pub crossover_rate: f64,
    /// BLX-α extension.
    pub blend_alpha: f64,
    pub mutation_rate: f64,
    /// Gaussian σ as a fraction of each variable's range.
    pub mutation_sigma: f64,
    pub elite: usize,
    pub stall_generations: usize,
    pub tolerance: f64,
    pub max_generations: usize,
    /// Set from the run seed rather than from config files.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 50,
            tournament: 3,
            crossover_rate: 0.8,
            blend_alpha: 0.5,
            mutation_rate: 0.2,
            mutation_sigma: 0.02,
            elite: 2,
            stall_generations: 20,
            tolerance: 1e-6,
            max_generations: 500,
            seed: 42,
        }
    }
}

#[derive(Clone, Copy)]
struct Individual {
    x: [f64; 2],
    f: f64,
}

fn tournament(pop: &[Individual], k: usize, rng: &mut ChaCha8Rng) -> usize {
    let mut best = rng.random_range(0..pop.len());
    for _ in 1..k {
        let c = rng.random_range(0..pop.len());
        if pop[c].f < pop[best].f {
            best = c;
        }
    }
    best
}

/// Minimise the mix objective with a real-coded genetic algorithm.
///
/// Results are deterministic for a given `config` (including the seed).
pub fn ga_optimize(problem: &MixProblem, config: &GaConfig) -> Result<MixSolution> {
    problem.validate()?;
    if config.population < 2 || config.tournament == 0 || config.elite >= config.population {
        return Err(Error::invalid(format!(
            "invalid GA configuration {config:?}"
        )));
    }
    let b = problem.bounds();
    let range = [b.pv_max, b.turbine_max];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");

    let eval = |xs: Vec<[f64; 2]>| -> Vec<Individual> {
        xs.into_par_iter()
            .map(|x| Individual {
                x,
                f: problem.evaluate(x[0], x[1]).value,
            })
            .collect()
    };

    let init: Vec<[f64; 2]> = (0..config.population)
        .map(|_| {
            let x = rng.random_range(0.0..=range[0]);
            let y = rng.random_range(0.0..=range[1]);
            let (x, y) = problem.project(x, y);
            [x, y]
        })
        .collect();
    let mut pop = eval(init);
    let mut evaluations = pop.len();
    let by_fitness = |a: &Individual, b: &Individual| a.f.total_cmp(&b.f);
    pop.sort_by(by_fitness);
    let mut history = vec![pop[0].f];
    let mut generation = 0;

    while generation < config.max_generations {
        generation += 1;
        let mut children: Vec<[f64; 2]> = pop[..config.elite].iter().map(|i| i.x).collect();
        while children.len() < config.population {
            let p1 = pop[tournament(&pop, config.tournament, &mut rng)].x;
            let p2 = pop[tournament(&pop, config.tournament, &mut rng)].x;
            let mut child = p1;
            if rng.random::<f64>() < config.crossover_rate {
                for d in 0..2 {
                    let (lo, hi) = (p1[d].min(p2[d]), p1[d].max(p2[d]));
                    let ext = config.blend_alpha * (hi - lo);
                    let (a, c) = (lo - ext, hi + ext);
                    child[d] = if c > a { rng.random_range(a..=c) } else { lo };
                }
            }
            for d in 0..2 {
                if rng.random::<f64>() < config.mutation_rate {
                    let z: f64 = std_normal.sample(&mut rng);
                    child[d] += z * config.mutation_sigma * range[d];
                }
            }
            let (x, y) = problem.project(child[0], child[1]);
            children.push([x, y]);
        }
        // elites keep their cached fitness
        let elites: Vec<Individual> = pop[..config.elite].to_vec();
        let mut next = elites;
        next.extend(eval(children[config.elite..].to_vec()));
        evaluations += config.population - config.elite;
        next.sort_by(by_fitness);
        pop = next;
        history.push(pop[0].f);

        if history.len() > config.stall_generations {
            let old = history[history.len() - 1 - config.stall_generations];
            let now = pop[0].f;
            let scale = now.abs().max(f64::MIN_POSITIVE);
            if (old - now) / scale < config.tolerance {
                break;
            }
        }
    }
    let best = pop[0].x;
    Ok(problem.solution(best[0], best[1], generation, evaluations))
}

/// Best feasible point on a `resolution × resolution` grid spanning the
/// variable bounds.
pub fn grid_oracle(problem: &MixProblem, resolution: usize) -> Result<MixSolution> {
    problem.validate()?;
    if resolution < 2 {
        return Err(Error::invalid("grid resolution must be >= 2"));
    }
    let b = problem.bounds();
    let axis = |max: f64, i: usize| {
        if i == resolution - 1 {
            max
        } else {
            max * i as f64 / (resolution - 1) as f64
        }
    };
    let rows: Vec<(Option<(f64, f64, f64)>, usize)> = (0..resolution)
        .into_par_iter()
        .map(|i| {
            let x = axis(b.pv_max, i);
            let mut best: Option<(f64, f64, f64)> = None;
            let mut count = 0;
            for j in 0..resolution {
                let y = axis(b.turbine_max, j);
                if x + y > b.total_max {
                    continue;
                }
                count += 1;
                let f = problem.evaluate(x, y).value;
                if best.is_none_or(|(bf, _, _)| f < bf) {
                    best = Some((f, x, y));
                }
            }
            (best, count)
        })
        .collect();
    let evaluations = rows.iter().map(|r| r.1).sum();
    let best = rows
        .into_iter()
        .filter_map(|r| r.0)
        .fold(None, |acc: Option<(f64, f64, f64)>, c| match acc {
            Some(a) if a.0 <= c.0 => Some(a),
            _ => Some(c),
        })
        .ok_or_else(|| Error::Infeasible("no feasible grid point".into()))?;
    Ok(problem.solution(best.1, best.2, 0, evaluations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Unit;

    fn toy(n: usize) -> MixProblem {
        let s = |f: &dyn Fn(usize) -> f64| {
            HourlySeries::new((0..n).map(f).collect(), Unit::Mw, 2014).unwrap()
        };
        let g_pv = s(&|h| {
            let x = (h % 24) as f64;
            if (6.0..18.0).contains(&x) {
                1e-4 * (std::f64::consts::PI * (x - 6.0) / 12.0).sin()
            } else {
                0.0
            }
        });
        let g_t = s(&|h| 0.25 + 0.2 * ((h as f64) * 0.37).sin());
        let load = s(&|h| 30.0 + 10.0 * (((h % 24) as f64 - 18.0) / 4.0).cos());
        MixProblem::new(&g_pv, &g_t, &load, 200_000.0, 3.0, 172_500.0).unwrap()
    }

    #[test]
    fn zero_generation_objective() {
        let p = toy(240);
        let total_load: f64 = p.load.iter().sum();
        let o = p.objective(0.0, 0.0).unwrap();
        assert_eq!(o.pos_mismatch, 0.0);
        assert_eq!(o.utilisation, 0.0);
        assert!((o.neg_mismatch + total_load).abs() < 1e-9);
        assert!((o.value - total_load).abs() < 1e-9);
        let signed = MixProblem {
            sign: SignConvention::SignedNeg,
            ..p
        };
        assert!((signed.objective(0.0, 0.0).unwrap().value + total_load).abs() < 1e-9);
    }

    #[test]
    fn homogeneity() {
        let p = toy(240);
        let c = 3.5;
        let scaled = MixProblem {
            g_pv: p.g_pv.iter().map(|v| v * c).collect(),
            g_turbine: p.g_turbine.iter().map(|v| v * c).collect(),
            load: p.load.iter().map(|v| v * c).collect(),
            ..p.clone()
        };
        let a = p.evaluate(150_000.0, 100_000.0).value;
        let b = scaled.evaluate(150_000.0, 100_000.0).value;
        assert!((b - c * a).abs() <= 1e-9 * (c * a).abs());
    }

    #[test]
    fn spot_value_matches_hourly_oracle() {
        let p = toy(500);
        let (x, y) = (123_456.0, 98_765.0);
        let n_t = y / p.turbine_footprint_m2;
        let mut f = 0.0;
        for h in 0..500 {
            let g = x * p.g_pv[h] + n_t * p.g_turbine[h];
            let l = p.load[h];
            let r = if g <= l { g } else { l };
            f += if g > l { g - l } else { 0.0 };
            f += if g < l { l - g } else { 0.0 };
            f += -5.0 * r;
        }
        let got = p.objective(x, y).unwrap().value;
        assert!((got - f).abs() <= 1e-9 * f.abs());
    }

    #[test]
    fn out_of_bounds_is_error() {
        let p = toy(24);
        assert!(p.objective(-1.0, 0.0).is_err());
        assert!(p.objective(400_000.0, 300_000.0).is_err());
    }

    #[test]
    fn renewables_weight_direction() {
        let p = toy(24);
        assert!(p.combine(10.0, -5.0, 8.0) <= p.combine(10.0, -5.0, 7.0));
    }

    #[test]
    fn projection_is_feasible_and_idempotent() {
        let p = toy(24);
        for &(x, y) in &[
            (-5.0, -5.0),
            (1e9, 1e9),
            (590_000.0, 390_000.0),
            (100.0, 1e9),
            (1e9, 10.0),
        ] {
            let (a, b) = p.project(x, y);
            assert!(p.is_feasible(a, b), "({x},{y}) -> ({a},{b})");
            assert_eq!(p.project(a, b), (a, b));
        }
    }

    #[test]
    fn grid_resolution_two() {
        let roof_only = MixProblem {
            roof_only_pv: true,
            ..toy(48)
        };
        assert_eq!(grid_oracle(&roof_only, 2).unwrap().evaluations, 4);
        assert_eq!(grid_oracle(&toy(48), 2).unwrap().evaluations, 3);
        assert!(grid_oracle(&toy(48), 1).is_err());
    }

    #[test]
    fn grid_refinement_never_worse() {
        let p = toy(240);
        let coarse = grid_oracle(&p, 11).unwrap().objective.value;
        let fine = grid_oracle(&p, 21).unwrap().objective.value;
        assert!(fine <= coarse);
    }

    #[test]
    fn ga_deterministic_and_feasible() {
        let p = toy(24 * 30);
        let cfg = GaConfig::default();
        let a = ga_optimize(&p, &cfg).unwrap();
        let b = ga_optimize(&p, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(p.is_feasible(a.x_pv, a.x_turbine));
        assert!(p.is_feasible(a.x_pv, a.x_turbine_rounded));
        assert!(a.slack_pv >= 0.0 && a.slack_turbine >= 0.0 && a.slack_total >= 0.0);
        let oracle = grid_oracle(&p, 101).unwrap();
        assert!(a.objective.value <= oracle.objective.value + 0.02 * oracle.objective.value.abs());
    }

    #[test]
    fn ga_with_idle_turbines_matches_line_scan() {
        let mut p = toy(24 * 30);
        p.g_turbine = vec![0.0; p.load.len()];
        p.weights.ren = -1e-3;
        let sol = ga_optimize(&p, &GaConfig::default()).unwrap();
        let b = p.bounds();
        let best_line = (0..=4000)
            .map(|i| p.evaluate(b.pv_max * i as f64 / 4000.0, 0.0).value)
            .fold(f64::INFINITY, f64::min);
        assert!(sol.objective.value <= best_line + 1e-4 * best_line.abs());
    }

    #[test]
    fn infeasible_problem() {
        let mut p = toy(24);
        p.roof_area = 0.0;
        assert!(matches!(
            ga_optimize(&p, &GaConfig::default()),
            Err(Error::Infeasible(_))
        ));
        let mut p = toy(24);
        p.weights.ren = 1.0;
        assert!(ga_optimize(&p, &GaConfig::default()).is_err());
    }
}
