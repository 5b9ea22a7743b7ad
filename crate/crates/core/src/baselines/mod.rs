//! Comparison clusterers. Every fitter returns a [`ClusteringResult`] whose
//! trajectory records the objective it minimizes (negated log-likelihood for
//! the mixture model), so monotonicity reads the same way for all of them.

mod fcm;
mod flow;
mod gmm;
mod kcenter;
mod khm;
mod kmeans;

use serde::{Deserialize, Serialize};

pub use fcm::{fcm_fit, fcm_memberships, fcm_objective};
pub use flow::{assign_with_capacities, MinCostFlow};
pub use gmm::{gmm_fit, gmm_fit_full, GmmModel};
pub use kcenter::{kcenter_fit, kcenter_objective};
pub use khm::{khm_fit, khm_loss};
pub use kmeans::{ckm_fit, kmeans_fit, kmeans_objective, nearest_labels};

use crate::error::{Error, Result};
use crate::geometry::PointSet;
use crate::wkhm::{ClusteringResult, Method};

/// Iteration controls shared by the iterative baselines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Controls {
    pub max_iter: usize,
    /// Relative objective-change stopping threshold.
    pub tol: f64,
}

impl Default for Controls {
    fn default() -> Self {
        Controls { max_iter: 300, tol: 1e-10 }
    }
}

/// Cluster-size bounds for constrained K-means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacityBounds {
    pub n_min: usize,
    pub n_max: usize,
}

impl CapacityBounds {
    /// `floor(0.9 N/K) ..= ceil(1.1 N/K)`.
    pub fn default_for(n: usize, k: usize) -> Self {
        // integer arithmetic keeps exact multiples exact
        let k = k.max(1);
        CapacityBounds {
            n_min: (9 * n) / (10 * k),
            n_max: (11 * n).div_ceil(10 * k).min(n),
        }
    }

    pub fn validate(&self, n: usize, k: usize) -> Result<()> {
        if self.n_min > self.n_max || self.n_max > n {
            return Err(Error::config(format!(
                "capacity bounds need 0 <= n_min <= n_max <= N (got {}..{} with N = {n})",
                self.n_min, self.n_max
            )));
        }
        if k * self.n_min > n || k * self.n_max < n {
            return Err(Error::config(format!(
                "capacity bounds {}..{} infeasible for N = {n}, K = {k}",
                self.n_min, self.n_max
            )));
        }
        Ok(())
    }
}

/// A baseline algorithm with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "UPPERCASE")]
pub enum BaselineKind {
    Km,
    /// `None` selects [`CapacityBounds::default_for`].
    Ckm { bounds: Option<CapacityBounds> },
    Khm { p: f64 },
    Kc,
    Fcm { fuzzifier: f64 },
    Gmm,
}

impl BaselineKind {
    pub fn method(&self) -> Method {
        match self {
            BaselineKind::Km => Method::Km,
            BaselineKind::Ckm { .. } => Method::Ckm,
            BaselineKind::Khm { .. } => Method::Khm,
            BaselineKind::Kc => Method::Kc,
            BaselineKind::Fcm { .. } => Method::Fcm,
            BaselineKind::Gmm => Method::Gmm,
        }
    }

    /// Default parameters for a method tag; `None` for WKHM.
    pub fn default_for(method: Method) -> Option<Self> {
        Some(match method {
            Method::Wkhm => return None,
            Method::Km => BaselineKind::Km,
            Method::Ckm => BaselineKind::Ckm { bounds: None },
            Method::Khm => BaselineKind::Khm { p: 2.0 },
            Method::Kc => BaselineKind::Kc,
            Method::Fcm => BaselineKind::Fcm { fuzzifier: 2.0 },
            Method::Gmm => BaselineKind::Gmm,
        })
    }

    /// Fit on `x`. `m0` seeds the iterative methods; K-center draws its first
    /// center from `seed` and uses only `m0.len()`.
    pub fn fit(&self, x: &PointSet, m0: &PointSet, seed: u64, controls: &Controls) -> Result<ClusteringResult> {
        match *self {
            BaselineKind::Km => kmeans_fit(x, m0, controls),
            BaselineKind::Ckm { bounds } => {
                let b = bounds.unwrap_or_else(|| CapacityBounds::default_for(x.len(), m0.len()));
                ckm_fit(x, m0, b, controls)
            }
            BaselineKind::Khm { p } => khm_fit(x, m0, p, controls),
            BaselineKind::Kc => kcenter_fit(x, m0.len(), seed),
            BaselineKind::Fcm { fuzzifier } => fcm_fit(x, m0, fuzzifier, controls),
            BaselineKind::Gmm => gmm_fit(x, m0, controls),
        }
    }
}

pub(crate) fn check_centers(x: &PointSet, m0: &PointSet) -> Result<()> {
    if m0.is_empty() {
        return Err(Error::config("at least one center is required"));
    }
    if x.dim() != m0.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: m0.dim() });
    }
    if !m0.all_distinct() {
        return Err(Error::config("initial centers must be distinct"));
    }
    Ok(())
}

/// Relative change used by every stopping rule.
pub(crate) fn rel_change(prev: f64, next: f64) -> f64 {
    (next - prev).abs() / prev.abs().max(1e-300)
}
