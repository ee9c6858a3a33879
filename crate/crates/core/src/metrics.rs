//! Renewable-integration metrics.
//!
//! With generation `G` and load `L` (MW, hourly):
//!
//! * mismatch `M = G − L`, split into positive (excess) and negative
//!   (shortage, stored signed ≤ 0) parts;
//! * utilisation `R = min(G, L)`, the renewable energy absorbed by the
//!   coinciding load with no storage or flexibility;
//! * self-consumption `ΣR / ΣG`, undefined without generation.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_same_len, Result};
use crate::ingest::{HourlySeries, Unit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourMetrics {
    pub mismatch: f64,
    pub utilisation: f64,
}

impl HourMetrics {
    pub fn new(g: f64, l: f64) -> Self {
        HourMetrics {
            mismatch: g - l,
            utilisation: g.min(l),
        }
    }

    pub fn positive(&self) -> f64 {
        self.mismatch.max(0.0)
    }

    pub fn negative(&self) -> f64 {
        self.mismatch.min(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    /// MWh, ≥ 0.
    pub pos_mismatch: f64,
    /// MWh, ≤ 0.
    pub neg_mismatch: f64,
    pub utilisation: f64,
    pub generation: f64,
    /// `None` when there is no generation.
    pub self_consumption: Option<f64>,
}

pub fn hourly_metrics(g: &HourlySeries, l: &HourlySeries) -> Result<Vec<HourMetrics>> {
    ensure_same_len(g.len(), l.len())?;
    Ok(g.values()
        .iter()
        .zip(l.values())
        .map(|(&g, &l)| HourMetrics::new(g, l))
        .collect())
}

pub fn aggregate(hours: &[HourMetrics], g: &HourlySeries) -> Result<AggregateMetrics> {
    ensure_same_len(hours.len(), g.len())?;
    let mut pos = 0.0;
    let mut neg = 0.0;
    let mut util = 0.0;
    for h in hours {
        pos += h.positive();
        neg += h.negative();
        util += h.utilisation;
    }
    let generation = g.total();
    Ok(AggregateMetrics {
        pos_mismatch: pos,
        neg_mismatch: neg,
        utilisation: util,
        generation,
        self_consumption: (generation > 0.0).then(|| util / generation),
    })
}

pub fn annual_metrics(g: &HourlySeries, l: &HourlySeries) -> Result<AggregateMetrics> {
    aggregate(&hourly_metrics(g, l)?, g)
}

/// `ΔM(t) = s(t) − (φ − 1)·h(t)`, the residential-minus-mixed mismatch.
pub fn delta_mismatch(s: &HourlySeries, h: &HourlySeries, phi: f64) -> Result<HourlySeries> {
    s.zip_with(h, |s, h| s - (phi - 1.0) * h)
}

/// `ΔR = R_r − R_m` in MWh.
pub fn delta_utilisation(g: &HourlySeries, l_r: &HourlySeries, l_m: &HourlySeries) -> Result<f64> {
    ensure_same_len(g.len(), l_r.len())?;
    ensure_same_len(g.len(), l_m.len())?;
    Ok(g.values()
        .iter()
        .zip(l_r.values().iter().zip(l_m.values()))
        .map(|(&g, (&r, &m))| g.min(r) - g.min(m))
        .sum())
}

/// Per-hour metric values used as statistical samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    PosMismatch,
    NegMismatch,
    Mismatch,
    Utilisation,
    SelfConsumption,
}

impl Metric {
    /// Metrics reported for capacity scenarios.
    pub const ANNUAL: [Metric; 4] = [
        Metric::PosMismatch,
        Metric::NegMismatch,
        Metric::Utilisation,
        Metric::SelfConsumption,
    ];

    pub const CATEGORY: [Metric; 5] = [
        Metric::Mismatch,
        Metric::PosMismatch,
        Metric::NegMismatch,
        Metric::Utilisation,
        Metric::SelfConsumption,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::PosMismatch => "pos_mismatch",
            Metric::NegMismatch => "neg_mismatch",
            Metric::Mismatch => "mismatch",
            Metric::Utilisation => "utilisation",
            Metric::SelfConsumption => "self_consumption",
        }
    }

    /// Hourly value; self-consumption is `None` in hours without generation.
    pub fn hourly(self, g: f64, l: f64) -> Option<f64> {
        let h = HourMetrics::new(g, l);
        match self {
            Metric::PosMismatch => Some(h.positive()),
            Metric::NegMismatch => Some(h.negative()),
            Metric::Mismatch => Some(h.mismatch),
            Metric::Utilisation => Some(h.utilisation),
            Metric::SelfConsumption => (g > 0.0).then(|| h.utilisation / g),
        }
    }

    pub fn series(self, g: &HourlySeries, l: &HourlySeries) -> Result<Vec<Option<f64>>> {
        ensure_same_len(g.len(), l.len())?;
        Ok(g.values()
            .iter()
            .zip(l.values())
            .map(|(&g, &l)| self.hourly(g, l))
            .collect())
    }
}

/// Mismatch series `G − L` as an [`HourlySeries`].
pub fn mismatch_series(g: &HourlySeries, l: &HourlySeries) -> Result<HourlySeries> {
    Ok(g.zip_with(l, |g, l| g - l)?.with_unit(Unit::Mw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mw(v: Vec<f64>) -> HourlySeries {
        HourlySeries::new(v, Unit::Mw, 2014).unwrap()
    }

    #[test]
    fn balanced_hours() {
        let l = mw(vec![3.0, 4.0, 0.0]);
        let h = hourly_metrics(&l, &l).unwrap();
        assert!(h
            .iter()
            .zip(l.values())
            .all(|(m, &l)| m.mismatch == 0.0 && m.utilisation == l));
    }

    #[test]
    fn two_hour_example() {
        let g = mw(vec![10.0, 5.0]);
        let l = mw(vec![4.0, 8.0]);
        let h = hourly_metrics(&g, &l).unwrap();
        assert_eq!(
            h[0],
            HourMetrics {
                mismatch: 6.0,
                utilisation: 4.0
            }
        );
        assert_eq!(
            h[1],
            HourMetrics {
                mismatch: -3.0,
                utilisation: 5.0
            }
        );
        let a = aggregate(&h, &g).unwrap();
        assert_eq!(a.pos_mismatch, 6.0);
        assert_eq!(a.neg_mismatch, -3.0);
        assert_eq!(a.utilisation, 9.0);
        assert_eq!(a.self_consumption, Some(9.0 / 15.0));
    }

    #[test]
    fn no_generation() {
        let g = mw(vec![0.0; 3]);
        let l = mw(vec![1.0, 2.0, 3.0]);
        let h = hourly_metrics(&g, &l).unwrap();
        assert!(h
            .iter()
            .zip(l.values())
            .all(|(m, &l)| m.utilisation == 0.0 && m.mismatch == -l));
        assert_eq!(aggregate(&h, &g).unwrap().self_consumption, None);
    }

    #[test]
    fn full_absorption() {
        let a = annual_metrics(&mw(vec![1.0, 2.0]), &mw(vec![1.5, 2.0])).unwrap();
        assert_eq!(a.self_consumption, Some(1.0));
    }

    #[test]
    fn length_mismatch() {
        assert!(hourly_metrics(&mw(vec![1.0]), &mw(vec![1.0, 2.0])).is_err());
        assert!(delta_mismatch(&mw(vec![1.0]), &mw(vec![1.0, 2.0]), 2.0).is_err());
    }

    #[test]
    fn delta_mismatch_cases() {
        let s = mw(vec![1.0, 2.0, 3.0]);
        let h = mw(vec![4.0, 5.0, 6.0]);
        assert_eq!(delta_mismatch(&s, &h, 1.0).unwrap(), s);
        let phi = 1.5;
        let s2 = h.scaled(phi - 1.0);
        assert!(delta_mismatch(&s2, &h, phi)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn delta_utilisation_cases() {
        let g = mw(vec![1.0, 9.0, 4.0]);
        let l = mw(vec![2.0, 3.0, 5.0]);
        assert_eq!(delta_utilisation(&g, &l, &l).unwrap(), 0.0);
        let small = mw(vec![0.5, 0.5, 0.5]);
        let r = mw(vec![10.0, 10.0, 10.0]);
        assert_eq!(delta_utilisation(&small, &l, &r).unwrap(), 0.0);
        // brute force
        let m = mw(vec![3.0, 1.0, 2.0]);
        let mut expected = 0.0;
        for i in 0..3 {
            let rr = if g[i] <= l[i] { g[i] } else { l[i] };
            let rm = if g[i] <= m[i] { g[i] } else { m[i] };
            expected += rr - rm;
        }
        assert_eq!(delta_utilisation(&g, &l, &m).unwrap(), expected);
    }

    proptest! {
        #[test]
        fn scale_covariance(
            pairs in prop::collection::vec((0.0f64..100.0, 0.0f64..100.0), 1..64),
            c in 0.1f64..10.0,
        ) {
            let g = mw(pairs.iter().map(|p| p.0).collect());
            let l = mw(pairs.iter().map(|p| p.1).collect());
            let a = annual_metrics(&g, &l).unwrap();
            let b = annual_metrics(&g.scaled(c), &l.scaled(c)).unwrap();
            let tol = 1e-9 * (1.0 + a.utilisation.abs() * c);
            prop_assert!((b.utilisation - c * a.utilisation).abs() <= tol);
            prop_assert!((b.pos_mismatch - c * a.pos_mismatch).abs() <= 1e-9 * (1.0 + c * a.pos_mismatch));
            match (a.self_consumption, b.self_consumption) {
                (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-9),
                (None, None) => {}
                _ => prop_assert!(false),
            }
        }

        #[test]
        fn utilisation_bounds(pairs in prop::collection::vec((0.0f64..50.0, 0.0f64..50.0), 1..64)) {
            let g = mw(pairs.iter().map(|p| p.0).collect());
            let l = mw(pairs.iter().map(|p| p.1).collect());
            let a = annual_metrics(&g, &l).unwrap();
            prop_assert!(a.utilisation >= 0.0);
            prop_assert!(a.utilisation <= g.total().min(l.total()) + 1e-9);
            if let Some(sc) = a.self_consumption {
                prop_assert!((0.0..=1.0 + 1e-12).contains(&sc));
            }
        }
    }
}
