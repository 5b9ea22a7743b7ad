use serde::Deserialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use wkhm_core::stats::paired_ttest;

#[derive(Deserialize)]
struct Case {
    a: Vec<String>,
    b: Vec<String>,
    t: String,
    p: String,
    dof: usize,
}

fn cases() -> Vec<(Vec<f64>, Vec<f64>, f64, f64, usize)> {
    let raw: Vec<Case> = serde_json::from_str(include_str!("data/ttest_reference.json")).unwrap();
    let parse = |v: &[String]| v.iter().map(|s| s.parse::<f64>().unwrap()).collect::<Vec<_>>();
    raw.iter().map(|c| (parse(&c.a), parse(&c.b), c.t.parse().unwrap(), c.p.parse().unwrap(), c.dof)).collect()
}

// references evaluated at 60 significant digits
#[test]
fn matches_high_precision_reference() {
    let cases = cases();
    assert_eq!(cases.len(), 20);
    for (a, b, t, p, dof) in cases {
        let r = paired_ttest(&a, &b).unwrap();
        assert_eq!(r.dof, dof);
        assert!((r.t_stat - t).abs() < 1e-9 * t.abs().max(1.0), "t {} vs {t}", r.t_stat);
        assert!((r.p_value.unwrap() - p).abs() < 1e-8, "p {:?} vs {p}", r.p_value);
    }
}

#[test]
fn agrees_with_statrs_student_t() {
    for (a, b, _, _, dof) in cases() {
        let r = paired_ttest(&a, &b).unwrap();
        let dist = StudentsT::new(0.0, 1.0, dof as f64).unwrap();
        let p = 2.0 * dist.cdf(-r.t_stat.abs());
        assert!((r.p_value.unwrap() - p).abs() < 1e-8);
    }
}
