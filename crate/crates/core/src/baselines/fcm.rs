//! Fuzzy C-means.

use super::{check_centers, rel_change, Controls};
use crate::error::{Error, Result};
use crate::geometry::{pairwise_sq_dist, Matrix, PointSet};
use crate::wkhm::{ClusteringResult, Method, SoftAssignment, Trajectory};

const SQ_DIST_FLOOR: f64 = 1e-24;

fn floored(x: &PointSet, m: &PointSet) -> Result<Matrix> {
    let d2 = pairwise_sq_dist(x, m)?;
    let data = d2.as_slice().iter().map(|v| v.max(SQ_DIST_FLOOR)).collect();
    Ok(Matrix::from_vec(d2.rows(), d2.cols(), data))
}

fn memberships_from(d2: &Matrix, fuzzifier: f64) -> Matrix {
    // u_il proportional to d_il^(-2/(m-1)) = (d_il^2)^(-1/(m-1))
    let expo = -1.0 / (fuzzifier - 1.0);
    let mut u = Matrix::zeros(d2.rows(), d2.cols());
    for i in 0..d2.rows() {
        let row = d2.row(i);
        let dmin = row.iter().cloned().fold(f64::INFINITY, f64::min);
        let out = u.row_mut(i);
        for (o, v) in out.iter_mut().zip(row) {
            *o = (v / dmin).powf(expo);
        }
        let s: f64 = out.iter().sum();
        out.iter_mut().for_each(|o| *o /= s);
    }
    u
}

/// Memberships for fixed centers.
pub fn fcm_memberships(x: &PointSet, m: &PointSet, fuzzifier: f64) -> Result<SoftAssignment> {
    Ok(SoftAssignment(memberships_from(&floored(x, m)?, fuzzifier)))
}

fn objective_from(u: &Matrix, d2: &Matrix, fuzzifier: f64) -> f64 {
    u.as_slice().iter().zip(d2.as_slice()).map(|(a, d)| a.powf(fuzzifier) * d).sum()
}

/// `sum_i sum_l u_il^m |x_i - m_l|^2` at the optimal memberships for `m`.
pub fn fcm_objective(x: &PointSet, m: &PointSet, fuzzifier: f64) -> Result<f64> {
    let d2 = floored(x, m)?;
    Ok(objective_from(&memberships_from(&d2, fuzzifier), &d2, fuzzifier))
}

fn weighted_means(x: &PointSet, u: &Matrix, fuzzifier: f64, prev: &PointSet) -> PointSet {
    let dim = x.dim();
    let k = u.cols();
    let mut num = vec![0.0; k * dim];
    let mut den = vec![0.0; k];
    for (i, xi) in x.iter().enumerate() {
        for l in 0..k {
            let w = u.get(i, l).powf(fuzzifier);
            den[l] += w;
            for (s, v) in num[l * dim..(l + 1) * dim].iter_mut().zip(xi) {
                *s += w * v;
            }
        }
    }
    let mut out = prev.clone();
    for l in 0..k {
        if den[l] > 0.0 {
            for (o, s) in out.point_mut(l).iter_mut().zip(&num[l * dim..(l + 1) * dim]) {
                *o = s / den[l];
            }
        }
    }
    out
}

/// Standard FCM alternation. `losses[t]` is the objective at the t-th
/// centers with their optimal memberships.
pub fn fcm_fit(x: &PointSet, m0: &PointSet, fuzzifier: f64, controls: &Controls) -> Result<ClusteringResult> {
    if !(fuzzifier > 1.0 && fuzzifier.is_finite()) {
        return Err(Error::config(format!("fuzzifier must exceed 1, got {fuzzifier}")));
    }
    check_centers(x, m0)?;
    let mut centers = m0.clone();
    let d2 = floored(x, &centers)?;
    let mut u = memberships_from(&d2, fuzzifier);
    let mut loss = objective_from(&u, &d2, fuzzifier);
    let mut losses = vec![loss];
    let mut converged = false;
    for _ in 0..controls.max_iter {
        let next = weighted_means(x, &u, fuzzifier, &centers);
        let next_d2 = floored(x, &next)?;
        let next_u = memberships_from(&next_d2, fuzzifier);
        let next_loss = objective_from(&next_u, &next_d2, fuzzifier);
        if next_loss > loss {
            converged = true;
            break;
        }
        let change = rel_change(loss, next_loss);
        centers = next;
        u = next_u;
        loss = next_loss;
        losses.push(loss);
        if change < controls.tol {
            converged = true;
            break;
        }
    }
    let assignment = SoftAssignment(u);
    Ok(ClusteringResult {
        method: Method::Fcm,
        hard_labels: assignment.hard_labels(),
        assignment,
        trajectory: Trajectory::new(losses, centers.clone(), converged, 0),
        centers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sample_bpp, Region};

    #[test]
    fn equidistant_point_splits_evenly() {
        let x = PointSet::from_rows(&[[0.0, 0.0]]).unwrap();
        let m = PointSet::from_rows(&[[-2.0, 0.0], [0.0, 2.0]]).unwrap();
        let u = fcm_memberships(&x, &m, 2.0).unwrap();
        assert_eq!(u.0.row(0), &[0.5, 0.5]);
    }

    #[test]
    fn large_fuzzifier_tends_to_uniform() {
        let x = sample_bpp(&Region::rectangle(10.0, 10.0).unwrap(), 10, 1).unwrap();
        let m = sample_bpp(&Region::rectangle(10.0, 10.0).unwrap(), 4, 2).unwrap();
        let u = fcm_memberships(&x, &m, 1e6).unwrap();
        assert!(u.0.as_slice().iter().all(|v| (v - 0.25).abs() < 1e-4));
    }

    #[test]
    fn objective_matches_naive_per_iterate() {
        let r = Region::rectangle(10.0, 10.0).unwrap();
        let x = sample_bpp(&r, 30, 7).unwrap();
        let m0 = sample_bpp(&r, 3, 8).unwrap();
        let f = 2.0;
        let full = fcm_fit(&x, &m0, f, &Controls { max_iter: 15, tol: 1e-14 }).unwrap();
        assert!(full.trajectory.is_non_increasing());
        for t in 0..full.trajectory.losses.len() {
            let part = fcm_fit(&x, &m0, f, &Controls { max_iter: t, tol: 1e-14 }).unwrap();
            let mut naive = 0.0;
            for xi in x.iter() {
                let d: Vec<f64> = part.centers.iter().map(|c| (xi[0] - c[0]).powi(2) + (xi[1] - c[1]).powi(2)).collect();
                for &dl in &d {
                    let u: f64 = 1.0 / d.iter().map(|dj| (dl / dj).powf(1.0 / (f - 1.0))).sum::<f64>();
                    naive += u.powf(f) * dl;
                }
            }
            let got = full.trajectory.losses[t];
            assert!((got - naive).abs() <= 1e-12 * naive, "{got} vs {naive}");
        }
    }

    #[test]
    fn rejects_fuzzifier_at_one() {
        let x = PointSet::from_rows(&[[0.0]]).unwrap();
        assert!(fcm_fit(&x, &x, 1.0, &Controls::default()).is_err());
    }
}
