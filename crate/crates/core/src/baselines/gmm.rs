//! Gaussian mixture with spherical per-component covariance, fitted by EM.

use std::f64::consts::PI;

use super::{check_centers, rel_change, Controls};
use crate::error::{Error, Result};
use crate::geometry::{pairwise_sq_dist, Matrix, PointSet};
use crate::wkhm::{argmin, ClusteringResult, Method, SoftAssignment, Trajectory};

/// Fitted mixture parameters alongside the shared result shape.
#[derive(Debug, Clone)]
pub struct GmmModel {
    pub result: ClusteringResult,
    pub weights: Vec<f64>,
    pub variances: Vec<f64>,
    pub log_likelihood: f64,
}

struct Params {
    means: PointSet,
    variances: Vec<f64>,
    weights: Vec<f64>,
}

/// Responsibilities and total log-likelihood.
fn e_step(x: &PointSet, p: &Params) -> Result<(Matrix, f64)> {
    let d2 = pairwise_sq_dist(x, &p.means)?;
    let dim = x.dim() as f64;
    let k = p.weights.len();
    let mut r = Matrix::zeros(x.len(), k);
    let mut ll = 0.0;
    for i in 0..x.len() {
        let row = r.row_mut(i);
        for l in 0..k {
            row[l] = if p.weights[l] > 0.0 {
                p.weights[l].ln() - 0.5 * dim * (2.0 * PI * p.variances[l]).ln() - d2.get(i, l) / (2.0 * p.variances[l])
            } else {
                f64::NEG_INFINITY
            };
        }
        let top = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = row.iter().map(|v| (v - top).exp()).sum();
        let lse = top + total.ln();
        ll += lse;
        row.iter_mut().for_each(|v| *v = (*v - lse).exp());
    }
    Ok((r, ll))
}

fn m_step(x: &PointSet, r: &Matrix, prev: &Params, var_floor: f64) -> Params {
    let n = x.len();
    let dim = x.dim();
    let k = r.cols();
    let mut means = prev.means.clone();
    let mut variances = prev.variances.clone();
    let mut weights = vec![0.0; k];
    for l in 0..k {
        let nk: f64 = (0..n).map(|i| r.get(i, l)).sum();
        weights[l] = nk / n as f64;
        if nk <= 1e-300 {
            continue;
        }
        let mut mu = vec![0.0; dim];
        for (i, xi) in x.iter().enumerate() {
            let w = r.get(i, l);
            for (m, v) in mu.iter_mut().zip(xi) {
                *m += w * v;
            }
        }
        mu.iter_mut().for_each(|m| *m /= nk);
        let ss: f64 = x
            .iter()
            .enumerate()
            .map(|(i, xi)| r.get(i, l) * xi.iter().zip(&mu).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .sum();
        variances[l] = (ss / (dim as f64 * nk)).max(var_floor);
        means.point_mut(l).copy_from_slice(&mu);
    }
    Params { means, variances, weights }
}

fn scale_sq(x: &PointSet) -> f64 {
    let dim = x.dim();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for p in x.iter() {
        for k in 0..dim {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let s: f64 = lo.iter().zip(&hi).map(|(a, b)| (b - a).powi(2)).sum();
    if s > 0.0 && s.is_finite() {
        s
    } else {
        1.0
    }
}

/// EM from means `m0`, equal weights and a common initial variance equal to
/// the mean squared distance to the nearest initial mean per dimension.
/// Variances are floored at `1e-8` times the squared data diameter.
pub fn gmm_fit_full(x: &PointSet, m0: &PointSet, controls: &Controls) -> Result<GmmModel> {
    check_centers(x, m0)?;
    let k = m0.len();
    if k > x.len() {
        return Err(Error::config(format!("K = {k} exceeds N = {}", x.len())));
    }
    let var_floor = 1e-8 * scale_sq(x);
    let d2 = pairwise_sq_dist(x, m0)?;
    let spread: f64 = (0..x.len()).map(|i| d2.get(i, argmin(d2.row(i)))).sum::<f64>()
        / (x.len() * x.dim()) as f64;
    let mut params = Params {
        means: m0.clone(),
        variances: vec![spread.max(var_floor); k],
        weights: vec![1.0 / k as f64; k],
    };
    let (mut resp, mut ll) = e_step(x, &params)?;
    let mut losses = vec![-ll];
    let mut converged = false;
    for _ in 0..controls.max_iter {
        let next = m_step(x, &resp, &params, var_floor);
        let (next_resp, next_ll) = e_step(x, &next)?;
        if next_ll < ll || !next_ll.is_finite() {
            converged = true;
            break;
        }
        let change = rel_change(ll, next_ll);
        params = next;
        resp = next_resp;
        ll = next_ll;
        losses.push(-ll);
        if change < controls.tol {
            converged = true;
            break;
        }
    }
    let assignment = SoftAssignment(resp);
    let result = ClusteringResult {
        method: Method::Gmm,
        hard_labels: assignment.hard_labels(),
        assignment,
        trajectory: Trajectory::new(losses, params.means.clone(), converged, 0),
        centers: params.means,
    };
    Ok(GmmModel { result, weights: params.weights, variances: params.variances, log_likelihood: ll })
}

pub fn gmm_fit(x: &PointSet, m0: &PointSet, controls: &Controls) -> Result<ClusteringResult> {
    gmm_fit_full(x, m0, controls).map(|m| m.result)
}
