//! Lloyd K-means and its capacity-constrained variant.

use super::flow::assign_with_capacities;
use super::{check_centers, rel_change, CapacityBounds, Controls};
use crate::error::{Error, Result};
use crate::geometry::{pairwise_sq_dist, sq_dist, Matrix, PointSet};
use crate::wkhm::{argmin, ClusteringResult, Method, SoftAssignment, Trajectory};

/// Nearest-center labels, ties to the lowest index.
pub fn nearest_labels(x: &PointSet, m: &PointSet) -> Result<Vec<usize>> {
    let d = pairwise_sq_dist(x, m)?;
    Ok((0..x.len()).map(|i| argmin(d.row(i))).collect())
}

/// `sum_i min_l |x_i - m_l|^2`.
pub fn kmeans_objective(x: &PointSet, m: &PointSet) -> Result<f64> {
    let d = pairwise_sq_dist(x, m)?;
    Ok((0..x.len()).map(|i| d.row(i).iter().cloned().fold(f64::INFINITY, f64::min)).sum())
}

fn labeled_cost(d: &Matrix, labels: &[usize]) -> f64 {
    labels.iter().enumerate().map(|(i, &l)| d.get(i, l)).sum()
}

/// Cluster means; empty clusters are re-seeded at the point farthest from
/// its own center (each point used at most once).
fn update_centers(x: &PointSet, m: &PointSet, labels: &[usize]) -> PointSet {
    let dim = x.dim();
    let k = m.len();
    let mut sums = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];
    for (p, &l) in x.iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l * dim..(l + 1) * dim].iter_mut().zip(p) {
            *s += v;
        }
    }
    let mut out = m.clone();
    for l in 0..k {
        if counts[l] > 0 {
            let c = counts[l] as f64;
            for (o, s) in out.point_mut(l).iter_mut().zip(&sums[l * dim..(l + 1) * dim]) {
                *o = s / c;
            }
        }
    }
    if counts.contains(&0) {
        let mut dist: Vec<(f64, usize)> = x
            .iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (p, &l))| (sq_dist(p, out.point(l)), i))
            .collect();
        // farthest first, lower index on ties
        dist.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut donors = dist.into_iter().map(|(_, i)| i);
        for l in (0..k).filter(|&l| counts[l] == 0) {
            if let Some(i) = donors.next() {
                out.point_mut(l).copy_from_slice(x.point(i));
            }
        }
    }
    out
}

/// Alternating assign / mean iteration shared by KM and CKM.
fn lloyd<A>(x: &PointSet, m0: &PointSet, controls: &Controls, method: Method, assign: A) -> Result<ClusteringResult>
where
    A: Fn(&Matrix) -> Result<Vec<usize>>,
{
    let mut centers = m0.clone();
    let d = pairwise_sq_dist(x, &centers)?;
    let mut labels = assign(&d)?;
    let mut loss = labeled_cost(&d, &labels);
    let mut losses = vec![loss];
    let mut converged = false;
    for _ in 0..controls.max_iter {
        let next = update_centers(x, &centers, &labels);
        let next_d = pairwise_sq_dist(x, &next)?;
        let next_labels = assign(&next_d)?;
        let next_loss = labeled_cost(&next_d, &next_labels);
        if next_loss > loss {
            // only reachable through rounding at a plateau
            converged = true;
            break;
        }
        let unchanged = next_labels == labels;
        let change = rel_change(loss, next_loss);
        centers = next;
        labels = next_labels;
        loss = next_loss;
        losses.push(loss);
        if unchanged || change < controls.tol {
            converged = true;
            break;
        }
    }
    Ok(ClusteringResult {
        method,
        assignment: SoftAssignment::one_hot(&labels, centers.len()),
        hard_labels: labels,
        trajectory: Trajectory::new(losses, centers.clone(), converged, 0),
        centers,
    })
}

fn check_k(x: &PointSet, m0: &PointSet) -> Result<()> {
    check_centers(x, m0)?;
    if m0.len() > x.len() {
        return Err(Error::config(format!(
            "K = {} exceeds the number of points N = {}",
            m0.len(),
            x.len()
        )));
    }
    Ok(())
}

/// Lloyd iterations from `m0`.
pub fn kmeans_fit(x: &PointSet, m0: &PointSet, controls: &Controls) -> Result<ClusteringResult> {
    check_k(x, m0)?;
    lloyd(x, m0, controls, Method::Km, |d| {
        Ok((0..d.rows()).map(|i| argmin(d.row(i))).collect())
    })
}

/// K-means with every cluster size in `[n_min, n_max]`; the assignment step
/// is solved exactly as a min-cost flow.
pub fn ckm_fit(x: &PointSet, m0: &PointSet, bounds: CapacityBounds, controls: &Controls) -> Result<ClusteringResult> {
    check_k(x, m0)?;
    bounds.validate(x.len(), m0.len())?;
    let k = m0.len();
    lloyd(x, m0, controls, Method::Ckm, |d| {
        let nearest: Vec<usize> = (0..d.rows()).map(|i| argmin(d.row(i))).collect();
        let mut counts = vec![0usize; k];
        nearest.iter().for_each(|&l| counts[l] += 1);
        // the unconstrained optimum is a lower bound; keep it when feasible
        if counts.iter().all(|&c| c >= bounds.n_min && c <= bounds.n_max) {
            return Ok(nearest);
        }
        assign_with_capacities(d, bounds.n_min, bounds.n_max).map(|(labels, _)| labels)
    })
}
