//! Greedy farthest-first traversal for K-center.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{sq_dist, stream, PointSet};
use crate::wkhm::{ClusteringResult, Method, SoftAssignment, Trajectory};

use super::kmeans::nearest_labels;

/// `max_i min_l |x_i - m_l|^2`.
pub fn kcenter_objective(x: &PointSet, m: &PointSet) -> Result<f64> {
    let labels = nearest_labels(x, m)?;
    Ok(x.iter()
        .zip(&labels)
        .map(|(p, &l)| sq_dist(p, m.point(l)))
        .fold(0.0, f64::max))
}

/// Farthest-first traversal; the first center is a uniformly drawn data
/// point. Within a factor 2 of the optimal radius. The trajectory records
/// the objective after each center is added.
pub fn kcenter_fit(x: &PointSet, k: usize, seed: u64) -> Result<ClusteringResult> {
    let n = x.len();
    if k == 0 || k > n {
        return Err(Error::config(format!("K-center needs 1 <= K <= N (K = {k}, N = {n})")));
    }
    let mut rng = stream(seed, "baselines/kcenter");
    let first = rng.random_range(0..n);
    let mut chosen = vec![first];
    let mut nearest: Vec<f64> = x.iter().map(|p| sq_dist(p, x.point(first))).collect();
    let mut losses = vec![nearest.iter().cloned().fold(0.0, f64::max)];
    while chosen.len() < k {
        let mut far = 0;
        for i in 1..n {
            if nearest[i] > nearest[far] {
                far = i;
            }
        }
        chosen.push(far);
        for (d, p) in nearest.iter_mut().zip(x.iter()) {
            *d = d.min(sq_dist(p, x.point(far)));
        }
        losses.push(nearest.iter().cloned().fold(0.0, f64::max));
    }
    let mut centers = PointSet::empty(x.dim());
    for &i in &chosen {
        centers.push(x.point(i))?;
    }
    let labels = nearest_labels(x, &centers)?;
    Ok(ClusteringResult {
        method: Method::Kc,
        assignment: SoftAssignment::one_hot(&labels, k),
        hard_labels: labels,
        trajectory: Trajectory::new(losses, centers.clone(), true, 0),
        centers,
    })
}
