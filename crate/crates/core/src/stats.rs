//! Two-sample t-tests and Holm–Bonferroni familywise error control.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Γ(x) for x > 0 (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function I_x(a, b).
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Two-sided tail probability P(|T| ≥ |t|) for Student's t with `dof`
/// degrees of freedom.
pub fn student_t_two_sided(t: f64, dof: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    if !t.is_finite() {
        return 0.0;
    }
    reg_inc_beta(0.5 * dof, 0.5, dof / (dof + t * t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TTestVariant {
    /// Unequal variances, Welch–Satterthwaite degrees of freedom.
    #[default]
    Welch,
    Pooled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub t_stat: f64,
    pub dof: f64,
    pub p_value: f64,
    /// Set after multiple-comparison correction.
    pub reject: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TestOutcome {
    Tested(TestResult),
    Untestable(String),
}

impl TestOutcome {
    pub fn result(&self) -> Option<&TestResult> {
        match self {
            TestOutcome::Tested(r) => Some(r),
            TestOutcome::Untestable(_) => None,
        }
    }

    pub fn rejected(&self) -> bool {
        self.result().is_some_and(|r| r.reject)
    }
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let ss: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, ss / (n - 1.0))
}

pub fn t_test(a: &[f64], b: &[f64], variant: TTestVariant) -> TestOutcome {
    if a.len() < 2 || b.len() < 2 {
        return TestOutcome::Untestable(format!(
            "sample sizes {} and {} (need >= 2)",
            a.len(),
            b.len()
        ));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (se2, dof) = match variant {
        TTestVariant::Welch => {
            let (qa, qb) = (va / na, vb / nb);
            let se2 = qa + qb;
            let denom = qa * qa / (na - 1.0) + qb * qb / (nb - 1.0);
            (
                se2,
                if denom > 0.0 {
                    se2 * se2 / denom
                } else {
                    na + nb - 2.0
                },
            )
        }
        TTestVariant::Pooled => {
            let sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
            (sp2 * (1.0 / na + 1.0 / nb), na + nb - 2.0)
        }
    };
    let diff = ma - mb;
    if se2 <= 0.0 {
        if diff == 0.0 {
            return TestOutcome::Tested(TestResult {
                t_stat: 0.0,
                dof,
                p_value: 1.0,
                reject: false,
            });
        }
        return TestOutcome::Untestable("both samples have zero variance".into());
    }
    let t = diff / se2.sqrt();
    TestOutcome::Tested(TestResult {
        t_stat: t,
        dof,
        p_value: student_t_two_sided(t, dof).clamp(0.0, 1.0),
        reject: false,
    })
}

pub fn welch_t_test(a: &[f64], b: &[f64]) -> TestOutcome {
    t_test(a, b, TTestVariant::Welch)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha {alpha} outside (0, 1)")));
    }
    Ok(())
}

fn check_p(p_values: &[f64]) -> Result<()> {
    if let Some(p) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::invalid(format!("p-value {p} outside [0, 1]")));
    }
    Ok(())
}

/// Holm step-down: reject the k-th smallest p while `p ≤ α/(m − k + 1)`.
/// Flags are returned in input order.
pub fn holm_bonferroni(p_values: &[f64], alpha: f64) -> Result<Vec<bool>> {
    check_alpha(alpha)?;
    check_p(p_values)?;
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| p_values[i].total_cmp(&p_values[j]).then(i.cmp(&j)));
    let mut reject = vec![false; m];
    for (k, &i) in order.iter().enumerate() {
        if p_values[i] <= alpha / (m - k) as f64 {
            reject[i] = true;
        } else {
            break;
        }
    }
    Ok(reject)
}

pub fn bonferroni(p_values: &[f64], alpha: f64) -> Result<Vec<bool>> {
    check_alpha(alpha)?;
    check_p(p_values)?;
    let m = p_values.len() as f64;
    Ok(p_values.iter().map(|&p| p <= alpha / m).collect())
}

/// Apply Holm correction across the testable outcomes; untestable outcomes
/// are not part of the family and are never rejected.
pub fn apply_holm(outcomes: &mut [TestOutcome], alpha: f64) -> Result<()> {
    let idx: Vec<usize> = outcomes
        .iter()
        .enumerate()
        .filter_map(|(i, o)| o.result().map(|_| i))
        .collect();
    let p: Vec<f64> = idx
        .iter()
        .map(|&i| outcomes[i].result().unwrap().p_value)
        .collect();
    let flags = holm_bonferroni(&p, alpha)?;
    for (&i, flag) in idx.iter().zip(flags) {
        if let TestOutcome::Tested(r) = &mut outcomes[i] {
            r.reject = flag;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-14);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
    }

    #[test]
    fn incomplete_beta_closed_forms() {
        // I_x(1, 1) = x; I_x(a, 1) = x^a
        assert!((reg_inc_beta(1.0, 1.0, 0.3) - 0.3).abs() < 1e-15);
        assert!((reg_inc_beta(2.5, 1.0, 0.4) - 0.4f64.powf(2.5)).abs() < 1e-14);
        // t with 1 dof is Cauchy: P(|T| >= 1) = 0.5
        assert!((student_t_two_sided(1.0, 1.0) - 0.5).abs() < 1e-14);
        // t with 2 dof: P(|T| >= t) = 1 - t / sqrt(2 + t²)
        let t: f64 = 1.7;
        assert!((student_t_two_sided(t, 2.0) - (1.0 - t / (2.0 + t * t).sqrt())).abs() < 1e-14);
    }

    #[test]
    fn identical_samples() {
        let a = [1.0, 2.0, 4.0, 7.0];
        let r = *welch_t_test(&a, &a).result().unwrap();
        assert_eq!(r.t_stat, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn separated_samples() {
        let a = [0.0, 1e-3, -1e-3, 2e-3];
        let b = [1.0, 1.001, 0.999, 1.002];
        let r = *welch_t_test(&a, &b).result().unwrap();
        assert!(r.p_value < 1e-6, "{}", r.p_value);
    }

    #[test]
    fn too_small_is_untestable() {
        assert!(matches!(
            welch_t_test(&[1.0], &[1.0, 2.0]),
            TestOutcome::Untestable(_)
        ));
        assert!(matches!(
            welch_t_test(&[1.0, 1.0], &[2.0, 2.0]),
            TestOutcome::Untestable(_)
        ));
        let zero = welch_t_test(&[0.0; 5], &[0.0; 5]);
        assert_eq!(zero.result().unwrap().p_value, 1.0);
    }

    #[test]
    fn pooled_matches_welch_for_equal_designs() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.5];
        let b = [2.0, 3.0, 4.5, 5.0, 6.0];
        let w = *welch_t_test(&a, &b).result().unwrap();
        let p = *t_test(&a, &b, TTestVariant::Pooled).result().unwrap();
        assert!((w.t_stat - p.t_stat).abs() < 1e-12);
        assert_eq!(p.dof, 8.0);
    }

    #[test]
    fn holm_examples() {
        assert_eq!(
            holm_bonferroni(&[0.01, 0.02, 0.04], 0.05).unwrap(),
            [true, true, true]
        );
        assert_eq!(holm_bonferroni(&[1.0; 4], 0.05).unwrap(), [false; 4]);
        let mut p = vec![0.9; 121];
        p[60] = 1e-9;
        let flags = holm_bonferroni(&p, 0.05).unwrap();
        assert_eq!(flags.iter().filter(|&&f| f).count(), 1);
        assert!(flags[60]);
        assert!(holm_bonferroni(&[0.5, 1.2], 0.05).is_err());
        assert!(holm_bonferroni(&[-0.1], 0.05).is_err());
    }

    #[test]
    fn untestable_outcomes_leave_family() {
        let mut outcomes = vec![
            TestOutcome::Tested(TestResult {
                t_stat: 5.0,
                dof: 10.0,
                p_value: 0.03,
                reject: false,
            }),
            TestOutcome::Untestable("n=1".into()),
        ];
        apply_holm(&mut outcomes, 0.05).unwrap();
        assert!(outcomes[0].rejected());
        assert!(!outcomes[1].rejected());
    }

    proptest! {
        #[test]
        fn holm_between_bonferroni_and_uncorrected(p in prop::collection::vec(0.0f64..=1.0, 1..40)) {
            let holm = holm_bonferroni(&p, 0.05).unwrap();
            let bonf = bonferroni(&p, 0.05).unwrap();
            for i in 0..p.len() {
                if bonf[i] { prop_assert!(holm[i]); }
                if holm[i] { prop_assert!(p[i] <= 0.05); }
            }
        }

        #[test]
        fn holm_permutation_invariant(p in prop::collection::vec(0.0f64..0.2, 1..30), rot in 0usize..30) {
            let flags = holm_bonferroni(&p, 0.05).unwrap();
            let r = rot % p.len();
            let mut q = p.clone();
            q.rotate_left(r);
            let mut flags_q = holm_bonferroni(&q, 0.05).unwrap();
            flags_q.rotate_right(r);
            prop_assert_eq!(flags, flags_q);
        }

        #[test]
        fn welch_symmetric(
            a in prop::collection::vec(-10.0f64..10.0, 2..20),
            b in prop::collection::vec(-10.0f64..10.0, 2..20),
        ) {
            if let (TestOutcome::Tested(x), TestOutcome::Tested(y)) = (welch_t_test(&a, &b), welch_t_test(&b, &a)) {
                prop_assert!((x.t_stat + y.t_stat).abs() <= 1e-12 * (1.0 + x.t_stat.abs()));
                prop_assert!((x.p_value - y.p_value).abs() < 1e-12);
            }
        }

        #[test]
        fn p_monotone_in_abs_t(t1 in 0.0f64..20.0, t2 in 0.0f64..20.0, dof in 1.0f64..200.0) {
            let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            prop_assert!(student_t_two_sided(hi, dof) <= student_t_two_sided(lo, dof) + 1e-15);
        }
    }
}
