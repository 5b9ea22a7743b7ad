//! Empirical CDFs, summary statistics and the paired Student t-test.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::parse_field;

/// Right-continuous empirical CDF stored as its jump points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ecdf {
    values: Vec<f64>,
    fractions: Vec<f64>,
}

impl Ecdf {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    /// Fraction of the sample `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        let idx = self.values.partition_point(|v| *v <= x);
        if idx == 0 {
            0.0
        } else {
            self.fractions[idx - 1]
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["value", "fraction"])?;
        for (v, f) in self.values.iter().zip(&self.fractions) {
            wtr.write_record([v.to_string(), f.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let (mut values, mut fractions) = (Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec?;
            values.push(parse_field(&rec, 0)?);
            fractions.push(parse_field(&rec, 1)?);
        }
        if values.is_empty() {
            return Err(Error::InsufficientData("empty ECDF file".into()));
        }
        Ok(Ecdf { values, fractions })
    }
}

/// Empirical CDF of a non-empty finite sample.
pub fn ecdf(values: &[f64]) -> Result<Ecdf> {
    if values.is_empty() {
        return Err(Error::InsufficientData("ECDF of an empty sample".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::config("ECDF input must be finite"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out = Ecdf { values: Vec::new(), fractions: Vec::new() };
    for (i, v) in sorted.iter().enumerate() {
        let is_last_of_run = i + 1 == sorted.len() || sorted[i + 1] != *v;
        if is_last_of_run {
            out.values.push(*v);
            out.fractions.push((i + 1) as f64 / n);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub p5: f64,
    pub p95: f64,
}

/// Percentile of sorted data by linear interpolation between closest ranks.
pub fn percentile_sorted(sorted: &[f64], pct: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * pct / 100.0;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn percentile(values: &[f64], pct: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InsufficientData("percentile of an empty sample".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(percentile_sorted(&sorted, pct))
}

pub fn summary(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::InsufficientData("summary of an empty sample".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Summary {
        mean: mean(values),
        median: percentile_sorted(&sorted, 50.0),
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        p5: percentile_sorted(&sorted, 5.0),
        p95: percentile_sorted(&sorted, 95.0),
    })
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Outcome of a paired t-test. `p_value` is `None` when the differences have
/// zero variance but non-zero mean (the statistic is infinite).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t_stat: f64,
    pub p_value: Option<f64>,
    pub dof: usize,
    pub mean_diff: f64,
}

impl TTestResult {
    pub fn is_degenerate(&self) -> bool {
        self.p_value.is_none()
    }
}

/// Two-tailed paired t-test on `a - b`.
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() != b.len() {
        return Err(Error::config(format!(
            "paired t-test needs equal lengths ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InsufficientData("paired t-test needs at least two pairs".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let m = mean(&d);
    let var = d.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
    let dof = n - 1;
    if var == 0.0 {
        return Ok(if m == 0.0 {
            TTestResult { t_stat: 0.0, p_value: Some(1.0), dof, mean_diff: 0.0 }
        } else {
            TTestResult { t_stat: m.signum() * f64::INFINITY, p_value: None, dof, mean_diff: m }
        });
    }
    let t = m / (var.sqrt() / (n as f64).sqrt());
    Ok(TTestResult { t_stat: t, p_value: Some(student_t_two_tailed(t, dof as f64)), dof, mean_diff: m })
}

/// `P(|T| >= |t|)` for Student-t with `dof` degrees of freedom.
pub fn student_t_two_tailed(t: f64, dof: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let x = dof / (dof + t * t);
    regularized_incomplete_beta(x, dof / 2.0, 0.5).clamp(0.0, 1.0)
}

/// Natural log of the gamma function (Lanczos, g = 7, 9 terms).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
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
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized incomplete beta `I_x(a, b)` via the Lentz continued fraction.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    const MAX_ITER: usize = 200_000;
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
    for m in 1..=MAX_ITER {
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

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ecdf_steps() {
        let e = ecdf(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(e.values(), &[1.0, 2.0, 3.0]);
        assert_eq!(e.fractions(), &[1.0 / 3.0, 2.0 / 3.0, 1.0]);
        let flat = ecdf(&[4.0; 5]).unwrap();
        assert_eq!(flat.values(), &[4.0]);
        assert_eq!(flat.fractions(), &[1.0]);
        assert_eq!(e.eval(0.5), 0.0);
        assert_eq!(e.eval(2.5), 2.0 / 3.0);
        assert_eq!(e.eval(3.0), 1.0);
        assert_eq!(e.eval(10.0), 1.0);
        assert!(ecdf(&[]).is_err());
    }

    #[test]
    fn ecdf_csv_round_trip() {
        let e = ecdf(&[0.1, 0.7, 0.7, 2.5]).unwrap();
        let mut buf = Vec::new();
        e.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"value,fraction\n"));
        assert_eq!(Ecdf::read_csv(&buf[..]).unwrap(), e);
    }

    #[test]
    fn summary_basics() {
        let s = summary(&[5.0]).unwrap();
        assert!([s.mean, s.median, s.min, s.max, s.p5, s.p95].iter().all(|v| *v == 5.0));
        let s = summary(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((s.mean, s.median), (2.0, 2.0));
        assert!((s.p5 - 1.1).abs() < 1e-12 && (s.p95 - 2.9).abs() < 1e-12);
        assert!(summary(&[]).is_err());
    }

    #[test]
    fn summary_of_uniform_sample() {
        use rand::Rng;
        let mut rng = crate::geometry::stream(3, "test/uniform");
        let v: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
        assert!((summary(&v).unwrap().mean - 0.5).abs() < 0.05);
    }

    #[test]
    fn ttest_identical_and_degenerate() {
        let a = [1.0, 2.0, 3.0];
        let r = paired_ttest(&a, &a).unwrap();
        assert_eq!((r.t_stat, r.p_value), (0.0, Some(1.0)));
        let b: Vec<f64> = a.iter().map(|v| v - 0.5).collect();
        let r = paired_ttest(&a, &b).unwrap();
        assert!(r.is_degenerate());
        assert!(paired_ttest(&a, &a[..2]).is_err());
        assert!(paired_ttest(&a[..1], &a[..1]).is_err());
    }

    #[test]
    fn ttest_textbook_instance() {
        // d = (-1, 0, -1, 0, -2); mean -0.8, sd sqrt(0.7)
        let r = paired_ttest(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 2.0, 4.0, 4.0, 7.0]).unwrap();
        let t = -0.8 / (0.7f64.sqrt() / 5f64.sqrt());
        assert!((r.t_stat - t).abs() < 1e-14);
        assert_eq!(r.dof, 4);
        // mpmath, 50 digits
        assert!((r.p_value.unwrap() - 0.099_300_683_213_726_84).abs() < 1e-12, "{:?}", r.p_value);
    }

    #[test]
    fn incomplete_beta_special_cases() {
        // I_x(1, 1) = x; I_x(a, 1) = x^a
        for x in [0.1, 0.5, 0.93] {
            assert!((regularized_incomplete_beta(x, 1.0, 1.0) - x).abs() < 1e-14);
            assert!((regularized_incomplete_beta(x, 3.0, 1.0) - x.powi(3)).abs() < 1e-14);
        }
        // Cauchy tail: P(|T| > 1) with one degree of freedom is 1/2
        assert!((student_t_two_tailed(1.0, 1.0) - 0.5).abs() < 1e-14);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
    }

    #[test]
    fn large_dof_approaches_normal() {
        // two-tailed normal tail at 1.96 is 0.04999579...
        let p = student_t_two_tailed(1.959_963_984_540_054, 1e6);
        assert!((p - 0.05).abs() < 1e-5, "{p}");
    }

    proptest! {
        #[test]
        fn ttest_antisymmetric(seed in 0u64..300, n in 2usize..30) {
            use rand::Rng;
            let mut rng = crate::geometry::stream(seed, "test/ttest");
            let a: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let ab = paired_ttest(&a, &b).unwrap();
            let ba = paired_ttest(&b, &a).unwrap();
            prop_assert_eq!(ab.t_stat, -ba.t_stat);
            prop_assert_eq!(ab.p_value, ba.p_value);
        }

        #[test]
        fn p_monotone_in_t(dof in 1.0f64..200.0, t in 0.0f64..8.0, dt in 0.01f64..2.0) {
            prop_assert!(student_t_two_tailed(t + dt, dof) <= student_t_two_tailed(t, dof));
        }

        #[test]
        fn ecdf_permutation_invariant(mut v in proptest::collection::vec(-100.0f64..100.0, 1..40), seed in 0u64..100) {
            use rand::seq::SliceRandom;
            let e1 = ecdf(&v).unwrap();
            let mut rng = crate::geometry::stream(seed, "test/shuffle");
            v.shuffle(&mut rng);
            prop_assert_eq!(e1, ecdf(&v).unwrap());
        }
    }
}
