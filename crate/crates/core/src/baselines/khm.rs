//! K-harmonic means with the harmonic-mean membership/weight update.

use super::{check_centers, rel_change, Controls};
use crate::error::{Error, Result};
use crate::geometry::{pairwise_sq_dist, Matrix, PointSet};
use crate::wkhm::{ClusteringResult, Method, SoftAssignment, Trajectory};

const DIST_FLOOR: f64 = 1e-12;

fn distances(x: &PointSet, m: &PointSet) -> Result<Matrix> {
    let d2 = pairwise_sq_dist(x, m)?;
    let data = d2.as_slice().iter().map(|v| v.sqrt().max(DIST_FLOOR)).collect();
    Ok(Matrix::from_vec(d2.rows(), d2.cols(), data))
}

fn loss_from(d: &Matrix, p: f64) -> f64 {
    let k = d.cols() as f64;
    (0..d.rows())
        .map(|i| k / d.row(i).iter().map(|v| v.powf(-p)).sum::<f64>())
        .sum()
}

/// `sum_i K / sum_l |x_i - m_l|^(-p)` with distances floored at 1e-12.
pub fn khm_loss(x: &PointSet, m: &PointSet, p: f64) -> Result<f64> {
    Ok(loss_from(&distances(x, m)?, p))
}

/// Center update `m_l = sum_i a_il x_i / sum_i a_il` with
/// `a_il = d_il^(-p-2) / (sum_j d_ij^(-p))^2`.
fn update(x: &PointSet, m: &PointSet, d: &Matrix, p: f64) -> PointSet {
    let dim = x.dim();
    let k = m.len();
    let mut num = vec![0.0; k * dim];
    let mut den = vec![0.0; k];
    for (i, xi) in x.iter().enumerate() {
        let row = d.row(i);
        // scale by the row minimum to keep the powers in range
        let dmin = row.iter().cloned().fold(f64::INFINITY, f64::min);
        let harmonic: f64 = row.iter().map(|v| (v / dmin).powf(-p)).sum();
        let rescale = dmin.powf(p - 2.0);
        for l in 0..k {
            let a = rescale * (row[l] / dmin).powf(-p - 2.0) / (harmonic * harmonic);
            den[l] += a;
            for (s, v) in num[l * dim..(l + 1) * dim].iter_mut().zip(xi) {
                *s += a * v;
            }
        }
    }
    let mut out = m.clone();
    for l in 0..k {
        if den[l] > 0.0 && den[l].is_finite() {
            for (o, s) in out.point_mut(l).iter_mut().zip(&num[l * dim..(l + 1) * dim]) {
                *o = s / den[l];
            }
        }
    }
    out
}

fn memberships(d: &Matrix, p: f64) -> SoftAssignment {
    let mut w = Matrix::zeros(d.rows(), d.cols());
    for i in 0..d.rows() {
        let row = d.row(i);
        let dmin = row.iter().cloned().fold(f64::INFINITY, f64::min);
        let total: f64 = row.iter().map(|v| (v / dmin).powf(-p - 2.0)).sum();
        for (o, v) in w.row_mut(i).iter_mut().zip(row) {
            *o = (v / dmin).powf(-p - 2.0) / total;
        }
    }
    SoftAssignment(w)
}

/// KHM iterations with the same damping safeguard as the WKHM solver.
pub fn khm_fit(x: &PointSet, m0: &PointSet, p: f64, controls: &Controls) -> Result<ClusteringResult> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::config(format!("KHM exponent must be positive, got {p}")));
    }
    check_centers(x, m0)?;
    const MIN_STEP: f64 = 1e-3;
    let mut centers = m0.clone();
    let mut d = distances(x, &centers)?;
    let mut loss = loss_from(&d, p);
    let mut losses = vec![loss];
    let mut converged = false;
    let mut stalls = 0;
    for _ in 0..controls.max_iter {
        let raw = update(x, &centers, &d, p);
        let mut eta = 1.0;
        let mut accepted = None;
        while eta >= MIN_STEP {
            let cand = if eta == 1.0 {
                raw.clone()
            } else {
                let c = centers.as_flat().iter().zip(raw.as_flat()).map(|(a, b)| (1.0 - eta) * a + eta * b);
                PointSet::from_flat(x.dim(), c.collect())?
            };
            let cd = distances(x, &cand)?;
            let cl = loss_from(&cd, p);
            if cl <= loss {
                accepted = Some((cand, cd, cl));
                break;
            }
            eta *= 0.5;
        }
        let Some((next, next_d, next_loss)) = accepted else {
            stalls += 1;
            converged = true;
            break;
        };
        let change = rel_change(loss, next_loss);
        centers = next;
        d = next_d;
        loss = next_loss;
        losses.push(loss);
        if change < controls.tol {
            converged = true;
            break;
        }
    }
    let assignment = memberships(&d, p);
    Ok(ClusteringResult {
        method: Method::Khm,
        hard_labels: assignment.hard_labels(),
        assignment,
        trajectory: Trajectory::new(losses, centers.clone(), converged, stalls),
        centers,
    })
}
