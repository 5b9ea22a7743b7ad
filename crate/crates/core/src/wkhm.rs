//! Regularized weighted K-harmonic means.
//!
//! With `u_il = |x_i - m_l|^2 + eps`, the soft weights are
//! `w_il = u_il^(-q/2) / sum_j u_ij^(-q/2)` and the distortion is
//! `L = sum_i sum_l w_il * u_il^(-p/2)`.
//!
//! Stationary points of `L` satisfy the weighted-centroid condition
//! `m_l = sum_i B_il x_i / sum_i B_il` with
//! `B_il = w_il * [(p + q) C_il - q S_i] / u_il`, `C_il = u_il^(-p/2)` and
//! `S_i = sum_j w_ij C_ij`. The gradient is `sum_i B_il (x_i - m_l)`, so the
//! fixed-point step is `m_l + grad_l / sum_i B_il`.
//!
//! `L` is an inverse-power (received-signal-like) quantity: it grows as a
//! center approaches the data. When `sum_i B_il > 0` the fixed-point step
//! therefore moves uphill. [`fit`] supports both senses of monotonicity, see
//! [`Direction`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{pairwise_sq_dist, Matrix, PointSet};

/// Which way the step-halving safeguard enforces monotonicity of `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `L` non-decreasing. The fixed-point step is accepted whenever it does
    /// not lower `L`; the solver tracks `-L` as its loss.
    #[default]
    Ascend,
    /// `L` non-increasing. Because the fixed-point step usually raises `L`,
    /// this mode typically stalls at the initial centers.
    Descend,
}

/// Parameters of the WKHM fixed-point solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WkhmParams {
    /// Distortion exponent.
    pub p: f64,
    /// Weight sharpness.
    pub q: f64,
    /// Regularizer added to every squared distance.
    pub eps: f64,
    pub max_iter: usize,
    /// Relative loss-change stopping threshold.
    pub tol: f64,
    /// Smallest damping factor tried before declaring a stall.
    pub min_step: f64,
    pub direction: Direction,
}

impl Default for WkhmParams {
    fn default() -> Self {
        WkhmParams {
            p: 2.0,
            q: 2.0,
            eps: 1e-6,
            max_iter: 500,
            tol: 1e-10,
            min_step: 1e-3,
            direction: Direction::Ascend,
        }
    }
}

impl WkhmParams {
    pub fn with_pq(p: f64, q: f64) -> Self {
        WkhmParams { p, q, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.p) {
            return Err(Error::config(format!("p must be positive, got {}", self.p)));
        }
        if !pos(self.q) {
            return Err(Error::config(format!("q must be positive, got {}", self.q)));
        }
        if !pos(self.eps) {
            return Err(Error::config(format!("eps must be positive, got {}", self.eps)));
        }
        if !pos(self.tol) {
            return Err(Error::config(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.min_step > 0.0 && self.min_step <= 1.0) {
            return Err(Error::config(format!(
                "min_step must lie in (0, 1], got {}",
                self.min_step
            )));
        }
        Ok(())
    }
}

/// Row-stochastic N x K weight matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftAssignment(pub Matrix);

impl SoftAssignment {
    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn get(&self, i: usize, l: usize) -> f64 {
        self.0.get(i, l)
    }

    pub fn n(&self) -> usize {
        self.0.rows()
    }

    pub fn k(&self) -> usize {
        self.0.cols()
    }

    /// Row argmax, ties to the lowest index.
    pub fn hard_labels(&self) -> Vec<usize> {
        (0..self.n()).map(|i| argmax(self.0.row(i))).collect()
    }

    /// One-hot rows for hard clusterers.
    pub fn one_hot(labels: &[usize], k: usize) -> Self {
        let mut m = Matrix::zeros(labels.len(), k);
        for (i, &l) in labels.iter().enumerate() {
            m.set(i, l, 1.0);
        }
        SoftAssignment(m)
    }
}

/// First index of the maximum.
pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, v) in row.iter().enumerate().skip(1) {
        if *v > row[best] {
            best = j;
        }
    }
    best
}

/// First index of the minimum.
pub(crate) fn argmin(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, v) in row.iter().enumerate().skip(1) {
        if *v < row[best] {
            best = j;
        }
    }
    best
}

/// Per-iteration record of a fit.
///
/// `losses` always holds the objective the fitter drives down, so it is
/// non-increasing for every method: `-L` for ascending WKHM, `L` for
/// descending WKHM, `-log-likelihood` for GMM, the method's own cost
/// otherwise. `diffs[t] = |losses[t + 1] - losses[t]|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub losses: Vec<f64>,
    pub diffs: Vec<f64>,
    pub centers_final: PointSet,
    pub iterations: usize,
    pub converged: bool,
    pub stall_count: usize,
}

impl Trajectory {
    pub fn new(losses: Vec<f64>, centers_final: PointSet, converged: bool, stall_count: usize) -> Self {
        let diffs = losses.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let iterations = losses.len().saturating_sub(1);
        Trajectory { losses, diffs, centers_final, iterations, converged, stall_count }
    }

    pub fn is_non_increasing(&self) -> bool {
        self.losses.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn initial_loss(&self) -> f64 {
        self.losses[0]
    }

    pub fn final_loss(&self) -> f64 {
        *self.losses.last().expect("trajectory has at least one entry")
    }
}

/// Clustering algorithm tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Wkhm,
    Km,
    Ckm,
    Khm,
    Kc,
    Fcm,
    Gmm,
}

impl Method {
    pub const ALL: [Method; 7] =
        [Method::Wkhm, Method::Km, Method::Ckm, Method::Khm, Method::Kc, Method::Fcm, Method::Gmm];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Wkhm => "WKHM",
            Method::Km => "KM",
            Method::Ckm => "CKM",
            Method::Khm => "KHM",
            Method::Kc => "KC",
            Method::Fcm => "FCM",
            Method::Gmm => "GMM",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::config(format!("unknown method tag '{s}'")))
    }
}

/// Output shared by WKHM and every baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub method: Method,
    pub centers: PointSet,
    pub assignment: SoftAssignment,
    pub hard_labels: Vec<usize>,
    pub trajectory: Trajectory,
}

impl ClusteringResult {
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct View<'a> {
            method: Method,
            centers: Vec<&'a [f64]>,
            hard_labels: &'a [usize],
            losses: &'a [f64],
            iterations: usize,
            converged: bool,
            stall_count: usize,
        }
        let v = View {
            method: self.method,
            centers: self.centers.iter().collect(),
            hard_labels: &self.hard_labels,
            losses: &self.trajectory.losses,
            iterations: self.trajectory.iterations,
            converged: self.trajectory.converged,
            stall_count: self.trajectory.stall_count,
        };
        Ok(serde_json::to_string_pretty(&v)?)
    }
}

/// `1 / sum` normalization of positive row terms, with a log-domain fallback
/// when the plain sum leaves the representable range.
fn normalize_inverse_powers(u: &[f64], half_exp: f64, out: &mut [f64]) {
    let mut sum = 0.0;
    for (o, &v) in out.iter_mut().zip(u) {
        *o = 1.0 / v.powf(half_exp);
        sum += *o;
    }
    if sum.is_finite() && sum > 0.0 && out.iter().all(|v| *v > 0.0) {
        out.iter_mut().for_each(|v| *v /= sum);
        return;
    }
    let logs: Vec<f64> = u.iter().map(|v| -half_exp * v.ln()).collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = logs.iter().map(|l| (l - top).exp()).sum();
    for (o, l) in out.iter_mut().zip(&logs) {
        *o = (l - top).exp() / total;
    }
}

fn check_inputs(x: &PointSet, m: &PointSet) -> Result<()> {
    if m.is_empty() {
        return Err(Error::config("at least one center is required"));
    }
    if x.dim() != m.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: m.dim() });
    }
    Ok(())
}

/// Weights `w_il` from precomputed regularized squared distances `u`.
pub(crate) fn weights_from_regularized(u: &Matrix, q: f64) -> SoftAssignment {
    let mut w = Matrix::zeros(u.rows(), u.cols());
    for i in 0..u.rows() {
        normalize_inverse_powers(u.row(i), q / 2.0, w.row_mut(i));
    }
    SoftAssignment(w)
}

fn regularized(x: &PointSet, m: &PointSet, eps: f64) -> Result<Matrix> {
    let d2 = pairwise_sq_dist(x, m)?;
    let data = d2.as_slice().iter().map(|v| v + eps).collect();
    Ok(Matrix::from_vec(d2.rows(), d2.cols(), data))
}

/// Soft assignment weights.
pub fn compute_weights(x: &PointSet, m: &PointSet, q: f64, eps: f64) -> Result<SoftAssignment> {
    check_inputs(x, m)?;
    if !(eps > 0.0) {
        return Err(Error::config("eps must be positive"));
    }
    if !(q > 0.0) {
        return Err(Error::config("q must be positive"));
    }
    Ok(weights_from_regularized(&regularized(x, m, eps)?, q))
}

/// Everything derived from one evaluation of the distances.
struct Terms {
    u: Matrix,
    w: SoftAssignment,
    c: Matrix,
    /// `S_i = sum_j w_ij C_ij`, the per-point contribution to the loss.
    s: Vec<f64>,
}

impl Terms {
    fn new(x: &PointSet, m: &PointSet, params: &WkhmParams) -> Result<Self> {
        let u = regularized(x, m, params.eps)?;
        let w = weights_from_regularized(&u, params.q);
        let half_p = params.p / 2.0;
        let cdata = u.as_slice().iter().map(|v| 1.0 / v.powf(half_p)).collect();
        let c = Matrix::from_vec(u.rows(), u.cols(), cdata);
        let s = (0..u.rows())
            .map(|i| w.0.row(i).iter().zip(c.row(i)).map(|(a, b)| a * b).sum())
            .collect();
        Ok(Terms { u, w, c, s })
    }

    fn loss(&self) -> f64 {
        self.s.iter().sum()
    }

    /// `B_il` in the gradient / update.
    fn b(&self, i: usize, l: usize, p: f64, q: f64) -> f64 {
        self.w.get(i, l) * ((p + q) * self.c.get(i, l) - q * self.s[i]) / self.u.get(i, l)
    }
}

/// The regularized WKHM distortion `L`.
pub fn wkhm_loss(x: &PointSet, m: &PointSet, params: &WkhmParams) -> Result<f64> {
    check_inputs(x, m)?;
    params.validate()?;
    Ok(Terms::new(x, m, params)?.loss())
}

/// Analytic gradient of `L` with respect to every center (K x d).
pub fn wkhm_gradient(x: &PointSet, m: &PointSet, params: &WkhmParams) -> Result<Matrix> {
    check_inputs(x, m)?;
    params.validate()?;
    let t = Terms::new(x, m, params)?;
    let d = m.dim();
    let mut g = Matrix::zeros(m.len(), d);
    for l in 0..m.len() {
        let ml = m.point(l);
        let row = g.row_mut(l);
        for (i, xi) in x.iter().enumerate() {
            let b = t.b(i, l, params.p, params.q);
            for k in 0..d {
                row[k] += b * (xi[k] - ml[k]);
            }
        }
    }
    Ok(g)
}

/// One fixed-point step `m_l <- sum_i B_il x_i / sum_i B_il`.
///
/// A center is held in place when `|sum_i B_il| < 1e-12 * sum_i |B_il|`.
pub fn wkhm_update(x: &PointSet, m: &PointSet, params: &WkhmParams) -> Result<PointSet> {
    check_inputs(x, m)?;
    params.validate()?;
    let t = Terms::new(x, m, params)?;
    Ok(update_from_terms(x, m, &t, params))
}

fn update_from_terms(x: &PointSet, m: &PointSet, t: &Terms, params: &WkhmParams) -> PointSet {
    let d = m.dim();
    let mut out = m.clone();
    let mut num = vec![0.0; d];
    for l in 0..m.len() {
        num.iter_mut().for_each(|v| *v = 0.0);
        let (mut den, mut mag) = (0.0, 0.0);
        for (i, xi) in x.iter().enumerate() {
            let b = t.b(i, l, params.p, params.q);
            den += b;
            mag += b.abs();
            for k in 0..d {
                num[k] += b * xi[k];
            }
        }
        if den.abs() < 1e-12 * mag || !den.is_finite() || mag == 0.0 {
            continue;
        }
        for (o, n) in out.point_mut(l).iter_mut().zip(&num) {
            *o = n / den;
        }
    }
    out
}

fn blend(from: &PointSet, to: &PointSet, eta: f64) -> PointSet {
    let coords = from
        .as_flat()
        .iter()
        .zip(to.as_flat())
        .map(|(a, b)| (1.0 - eta) * a + eta * b)
        .collect();
    PointSet::from_flat(from.dim(), coords).expect("blend of valid point sets")
}

/// Iterate [`wkhm_update`] under a step-halving safeguard.
///
/// If the raw step worsens the tracked loss, the step is damped by `eta`,
/// halved from 1, until the loss does not worsen. When `eta` drops below
/// `min_step` the run stops (converged, one stall recorded). The run also
/// stops when the relative loss change falls below `tol`.
pub fn wkhm_fit(x: &PointSet, m0: &PointSet, params: &WkhmParams) -> Result<ClusteringResult> {
    params.validate()?;
    check_inputs(x, m0)?;
    if !m0.all_distinct() {
        return Err(Error::config("initial centers must be distinct"));
    }
    let sign = match params.direction {
        Direction::Ascend => -1.0,
        Direction::Descend => 1.0,
    };
    let tracked = |t: &Terms| sign * t.loss();

    let mut centers = m0.clone();
    let mut terms = Terms::new(x, &centers, params)?;
    let mut current = tracked(&terms);
    let mut losses = vec![current];
    let mut converged = false;
    let mut stalls = 0;

    for _ in 0..params.max_iter {
        let raw = update_from_terms(x, &centers, &terms, params);
        let mut eta = 1.0;
        let mut accepted = None;
        while eta >= params.min_step {
            let cand = if eta == 1.0 { raw.clone() } else { blend(&centers, &raw, eta) };
            let cand_terms = Terms::new(x, &cand, params)?;
            let value = tracked(&cand_terms);
            if value <= current {
                accepted = Some((cand, cand_terms, value));
                break;
            }
            eta *= 0.5;
        }
        let Some((next, next_terms, value)) = accepted else {
            stalls += 1;
            converged = true;
            break;
        };
        let change = (value - current).abs() / current.abs().max(1e-300);
        centers = next;
        terms = next_terms;
        current = value;
        losses.push(current);
        if change < params.tol {
            converged = true;
            break;
        }
    }

    let hard_labels = terms.w.hard_labels();
    Ok(ClusteringResult {
        method: Method::Wkhm,
        trajectory: Trajectory::new(losses, centers.clone(), converged, stalls),
        centers,
        assignment: terms.w,
        hard_labels,
    })
}

/// Rule for choosing the regularizer from the sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpsilonRule {
    /// `1/n`, for denominators bounded away from zero.
    Bounded,
    /// `n^(-1/4)`, when small denominators can occur.
    Fluctuating,
    Fixed(f64),
}

impl Default for EpsilonRule {
    fn default() -> Self {
        EpsilonRule::Fixed(1e-6)
    }
}

pub fn epsilon_schedule(n: usize, rule: EpsilonRule) -> Result<f64> {
    if n == 0 {
        return Err(Error::config("epsilon schedule needs n >= 1"));
    }
    let n = n as f64;
    Ok(match rule {
        EpsilonRule::Bounded => 1.0 / n,
        EpsilonRule::Fluctuating => n.powf(-0.25),
        EpsilonRule::Fixed(v) => {
            if !(v > 0.0) {
                return Err(Error::config("fixed epsilon must be positive"));
            }
            v
        }
    })
}
