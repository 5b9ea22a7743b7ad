//! Empirical convergence diagnostics over ensembles of WKHM runs started
//! from binomial-point-process center draws: exceedance curves of the
//! successive loss differences, exponential decay fits and tail sums.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{derive_seed, parse_field, sample_bpp, PointSet, Region};
use crate::wkhm::{wkhm_fit, Trajectory, WkhmParams};

/// Probe thresholds as multiples of the ensemble's mean `|L(0)|`.
pub const DEFAULT_PROBES: [f64; 3] = [1e-2, 1e-4, 1e-6];
pub const DEFAULT_T0: usize = 1;

/// `ln f_t ~ ln C - alpha t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub c: f64,
    pub alpha: f64,
    pub r2: f64,
    /// Number of positive `f_t` entries used.
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceedanceCurve {
    pub delta: f64,
    /// `(t, fraction of runs with f_t > delta)`.
    pub fractions: Vec<(usize, f64)>,
}

impl ExceedanceCurve {
    /// First `t` from which the fraction stays at zero, if any.
    pub fn crossing_index(&self) -> Option<usize> {
        let last_positive = self.fractions.iter().rposition(|&(_, f)| f > 0.0);
        match last_positive {
            None => self.fractions.first().map(|&(t, _)| t),
            Some(i) => self.fractions.get(i + 1).map(|&(t, _)| t),
        }
    }

    /// Whether the fractions never increase with `t`.
    pub fn is_monotone(&self) -> bool {
        self.fractions.windows(2).all(|w| w[1].1 <= w[0].1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleDiagnostics {
    pub r: usize,
    pub t0: usize,
    pub trajectories: Vec<Trajectory>,
    pub exceedance: Vec<ExceedanceCurve>,
    /// `None` where fewer than three positive differences were available.
    pub decay_fits: Vec<Option<DecayFit>>,
    pub tail_sums: Vec<f64>,
}

impl EnsembleDiagnostics {
    /// Assemble diagnostics for already-computed trajectories.
    pub fn from_trajectories(trajectories: Vec<Trajectory>, probes: &[f64], t0: usize) -> Result<Self> {
        if trajectories.is_empty() {
            return Err(Error::config("an ensemble needs at least one run"));
        }
        let mut diag = EnsembleDiagnostics {
            r: trajectories.len(),
            t0,
            decay_fits: trajectories.iter().map(|t| estimate_decay_rate(t, t0).ok()).collect(),
            tail_sums: trajectories.iter().map(|t| tail_sum_check(t, t0.min(t.losses.len() - 1))).collect(),
            trajectories,
            exceedance: Vec::new(),
        };
        let scale = diag.loss_scale();
        for &c in probes {
            let delta = c * scale;
            let fractions = empirical_exceedance(&diag, delta)?;
            diag.exceedance.push(ExceedanceCurve { delta, fractions });
        }
        Ok(diag)
    }

    /// Mean `|L(0)|` across runs; the probe grid is expressed relative to it.
    pub fn loss_scale(&self) -> f64 {
        self.trajectories.iter().map(|t| t.initial_loss().abs()).sum::<f64>() / self.r as f64
    }

    pub fn longest(&self) -> usize {
        self.trajectories.iter().map(|t| t.diffs.len()).max().unwrap_or(0)
    }

    pub fn write_convergence_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["run", "t", "loss", "f_t"])?;
        for (run, traj) in self.trajectories.iter().enumerate() {
            for (t, loss) in traj.losses.iter().enumerate() {
                let f = traj.diffs.get(t).map(|v| v.to_string()).unwrap_or_default();
                wtr.write_record([run.to_string(), t.to_string(), loss.to_string(), f])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_exceedance_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["delta", "t", "fraction"])?;
        for curve in &self.exceedance {
            for &(t, f) in &curve.fractions {
                wtr.write_record([curve.delta.to_string(), t.to_string(), f.to_string()])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    /// Flagged fits are written as `NaN`.
    pub fn write_decay_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["run", "C", "alpha", "r2", "tail_sum"])?;
        for (run, (fit, tail)) in self.decay_fits.iter().zip(&self.tail_sums).enumerate() {
            let (c, a, r2) = fit.map_or((f64::NAN, f64::NAN, f64::NAN), |f| (f.c, f.alpha, f.r2));
            wtr.write_record([run.to_string(), c.to_string(), a.to_string(), r2.to_string(), tail.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// One row of `convergence.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub run: usize,
    pub t: usize,
    pub loss: f64,
    pub f_t: Option<f64>,
}

pub fn read_convergence_csv<R: Read>(r: R) -> Result<Vec<ConvergenceRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let f_t = match rec.get(3) {
            Some("") | None => None,
            Some(_) => Some(parse_field(&rec, 3)?),
        };
        out.push(ConvergenceRow { run: parse_field(&rec, 0)?, t: parse_field(&rec, 1)?, loss: parse_field(&rec, 2)?, f_t });
    }
    Ok(out)
}

/// Rows of `exceedance.csv` as `(delta, t, fraction)`.
pub fn read_exceedance_csv<R: Read>(r: R) -> Result<Vec<(f64, usize, f64)>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        out.push((parse_field(&rec, 0)?, parse_field(&rec, 1)?, parse_field(&rec, 2)?));
    }
    Ok(out)
}

/// Rows of `decay.csv` as `(run, fit, tail_sum)`; `NaN` fits read back as `None`.
pub fn read_decay_csv<R: Read>(r: R) -> Result<Vec<(usize, Option<DecayFit>, f64)>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let c: f64 = parse_field(&rec, 1)?;
        let alpha: f64 = parse_field(&rec, 2)?;
        let r2: f64 = parse_field(&rec, 3)?;
        // the point count is not persisted
        let fit = (!c.is_nan()).then_some(DecayFit { c, alpha, r2, points: 0 });
        out.push((parse_field(&rec, 0)?, fit, parse_field(&rec, 4)?));
    }
    Ok(out)
}

/// `r` WKHM fits of the same data, each from its own BPP draw of `k`
/// centers. Runs execute in parallel; results are in run order.
pub fn run_bpp_ensemble(
    x: &PointSet,
    k: usize,
    region: &Region,
    r: usize,
    params: &WkhmParams,
    seed: u64,
) -> Result<EnsembleDiagnostics> {
    let trajectories = ensemble_trajectories(x, k, region, r, params, seed)?;
    EnsembleDiagnostics::from_trajectories(trajectories, &DEFAULT_PROBES, DEFAULT_T0)
}

/// The initial centers used by run `run` of an ensemble seeded with `seed`.
pub fn ensemble_initial_centers(region: &Region, k: usize, seed: u64, run: usize) -> Result<PointSet> {
    sample_bpp(region, k, derive_seed(seed, &format!("convergence/run/{run}")))
}

pub fn ensemble_trajectories(
    x: &PointSet,
    k: usize,
    region: &Region,
    r: usize,
    params: &WkhmParams,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    if r == 0 {
        return Err(Error::config("R must be at least 1"));
    }
    params.validate()?;
    (0..r)
        .into_par_iter()
        .map(|run| {
            let m0 = ensemble_initial_centers(region, k, seed, run)?;
            wkhm_fit(x, &m0, params).map(|res| res.trajectory)
        })
        .collect()
}

/// Fraction of runs with `f_t > delta` at each iteration.
///
/// A run that has terminated is stationary, so it contributes `f_t = 0` at
/// every later `t`; the curve extends to the longest trajectory.
pub fn empirical_exceedance(diag: &EnsembleDiagnostics, delta: f64) -> Result<Vec<(usize, f64)>> {
    if !(delta > 0.0) {
        return Err(Error::config("delta must be positive"));
    }
    let r = diag.trajectories.len() as f64;
    Ok((0..diag.longest())
        .map(|t| {
            let hits = diag.trajectories.iter().filter(|tr| tr.diffs.get(t).is_some_and(|&f| f > delta)).count();
            (t, hits as f64 / r)
        })
        .collect())
}

/// Least-squares fit of `ln f_t = ln C - alpha t` over the positive `f_t`
/// with `t >= t0`.
pub fn estimate_decay_rate(traj: &Trajectory, t0: usize) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = traj
        .diffs
        .iter()
        .enumerate()
        .skip(t0)
        .filter(|(_, &f)| f > 0.0 && f.is_finite())
        .map(|(t, &f)| (t as f64, f.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "decay fit needs at least 3 positive differences from t = {t0}, found {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sty: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let slope = sty / stt;
    let intercept = my - slope * mt;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(DecayFit { c: intercept.exp(), alpha: -slope, r2, points: pts.len() })
}

/// `sum_{t >= t0} f_t`.
pub fn tail_sum_check(traj: &Trajectory, t0: usize) -> f64 {
    traj.diffs.iter().skip(t0).sum()
}
