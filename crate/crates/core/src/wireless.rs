//! Downlink scenario layer: power-law received power, soft and hard
//! association, per-UE SNR/SINR/load/round-robin throughput, and the
//! placement-plus-association pipeline.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::baselines::{BaselineKind, Controls};
use crate::error::{Error, Result};
use crate::geometry::{sample_bpp, sq_dist, Matrix, PointSet, Region};
use crate::wkhm::{argmax, wkhm_fit, ClusteringResult, Method, SoftAssignment, WkhmParams};

/// Noise power that puts the pooled median SNR of KM placement at 20 dB on
/// the default campaign. Computed once with
/// `experiments::noise_calibration(&ExperimentConfig::default(), 20.0)` and
/// frozen here; a test recomputes it.
pub const DEFAULT_NOISE_W: f64 = 6.628_262_776_785_954_5e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    /// Transmit power per radio node (W).
    pub p0: f64,
    /// Path-loss exponent.
    pub gamma: f64,
    /// Distance regularizer (m^2).
    pub eps: f64,
    /// Noise power (W).
    pub noise: f64,
    /// Hz.
    pub bandwidth: f64,
    pub region: Region,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            p0: 1.0,
            gamma: 4.0,
            eps: 1e-6,
            noise: DEFAULT_NOISE_W,
            bandwidth: 20e6,
            region: Region::rectangle(100.0, 100.0).expect("valid default region"),
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.p0) {
            return Err(Error::config("p0 must be positive"));
        }
        if !(self.gamma > 2.0 && self.gamma.is_finite()) {
            return Err(Error::config(format!("gamma must exceed 2, got {}", self.gamma)));
        }
        if !pos(self.eps) {
            return Err(Error::config("eps must be positive"));
        }
        if !pos(self.noise) {
            return Err(Error::config("noise power must be positive"));
        }
        if !pos(self.bandwidth) {
            return Err(Error::config("bandwidth must be positive"));
        }
        Ok(())
    }
}

/// `P0 / (|x - m|^2 + eps)^(gamma/2)`.
pub fn rx_power(x: &[f64], m: &[f64], cfg: &NetworkConfig) -> f64 {
    cfg.p0 / (sq_dist(x, m) + cfg.eps).powf(cfg.gamma / 2.0)
}

/// N x K received powers.
pub fn rx_power_matrix(x: &PointSet, m: &PointSet, cfg: &NetworkConfig) -> Result<Matrix> {
    if x.dim() != m.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: m.dim() });
    }
    let mut p = Matrix::zeros(x.len(), m.len());
    for (i, xi) in x.iter().enumerate() {
        for (l, ml) in m.iter().enumerate() {
            p.set(i, l, rx_power(xi, ml, cfg));
        }
    }
    Ok(p)
}

/// Sum-RSRP gain of placing a single RN on one of two UEs at `-d/2, +d/2`
/// instead of at their midpoint, under `RSRP = P / (|x - r|^alpha + delta)`.
pub fn rsrp_lemma_gap(d: f64, alpha: f64, delta: f64, power: f64) -> Result<f64> {
    if !(d > 0.0) || !(alpha > 0.0) || !(power > 0.0) {
        return Err(Error::config("d, alpha and P must be positive"));
    }
    if !(delta > 0.0) {
        return Err(Error::config("delta must be strictly positive (RSRP diverges at zero distance)"));
    }
    Ok(power / delta + power / (d.powf(alpha) + delta) - 2.0 * power / ((d / 2.0).powf(alpha) + delta))
}

/// `S(r)`: sum-RSRP of the two-UE configuration with the RN at `r`.
pub fn two_ue_sum_rsrp(r: f64, d: f64, alpha: f64, delta: f64, power: f64) -> f64 {
    power / ((r + d / 2.0).abs().powf(alpha) + delta) + power / ((r - d / 2.0).abs().powf(alpha) + delta)
}

/// Fraction of each UE's total received power coming from each RN.
///
/// Identical to the WKHM weights with `q = gamma` and the same `eps`; the
/// match is bit-exact whenever `p0` is a power of two.
pub fn soft_association(x: &PointSet, m: &PointSet, cfg: &NetworkConfig) -> Result<SoftAssignment> {
    if m.is_empty() {
        return Err(Error::config("at least one radio node is required"));
    }
    let mut p = rx_power_matrix(x, m, cfg)?;
    for i in 0..p.rows() {
        let row = p.row_mut(i);
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= total);
    }
    Ok(SoftAssignment(p))
}

/// Strongest-RN association (ties to the lowest index) and per-RN loads.
pub fn hard_association(x: &PointSet, m: &PointSet, cfg: &NetworkConfig) -> Result<(Vec<usize>, Vec<usize>)> {
    if m.is_empty() {
        return Err(Error::config("at least one radio node is required"));
    }
    let p = rx_power_matrix(x, m, cfg)?;
    let serving: Vec<usize> = (0..x.len()).map(|i| argmax(p.row(i))).collect();
    let mut loads = vec![0; m.len()];
    serving.iter().for_each(|&s| loads[s] += 1);
    Ok((serving, loads))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeMetrics {
    pub serving: usize,
    pub snr_db: f64,
    pub sinr_db: f64,
    pub load: usize,
    /// bit/s
    pub throughput: f64,
}

pub fn to_db(v: f64) -> f64 {
    10.0 * v.log10()
}

/// Per-UE link metrics under strongest-RN association and equal round-robin
/// time sharing within each cell.
pub fn compute_metrics(x: &PointSet, m: &PointSet, cfg: &NetworkConfig) -> Result<Vec<UeMetrics>> {
    cfg.validate()?;
    let p = rx_power_matrix(x, m, cfg)?;
    let (serving, loads) = hard_association(x, m, cfg)?;
    Ok(serving
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let row = p.row(i);
            let signal = row[s];
            // summed explicitly: total - signal cancels catastrophically
            let interference: f64 = row.iter().enumerate().filter(|(l, _)| *l != s).map(|(_, v)| v).sum();
            let snr = signal / cfg.noise;
            let sinr = signal / (cfg.noise + interference);
            let load = loads[s];
            UeMetrics {
                serving: s,
                snr_db: to_db(snr),
                sinr_db: to_db(sinr),
                load,
                throughput: cfg.bandwidth / load as f64 * (1.0 + sinr).log2(),
            }
        })
        .collect())
}

/// How radio-node positions are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "UPPERCASE")]
pub enum Placement {
    Wkhm { params: WkhmParams },
    Baseline { kind: BaselineKind, controls: Controls },
}

impl Placement {
    pub fn method(&self) -> Method {
        match self {
            Placement::Wkhm { .. } => Method::Wkhm,
            Placement::Baseline { kind, .. } => kind.method(),
        }
    }

    pub fn fit(&self, x: &PointSet, m0: &PointSet, seed: u64) -> Result<ClusteringResult> {
        match self {
            Placement::Wkhm { params } => wkhm_fit(x, m0, params),
            Placement::Baseline { kind, controls } => kind.fit(x, m0, seed, controls),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub ue_metrics: Vec<UeMetrics>,
    pub rn_positions: PointSet,
    pub loads: Vec<usize>,
    pub method: Method,
    pub seed: u64,
    /// Received-power fractions at the final RN positions.
    pub soft_association: SoftAssignment,
    pub fit: ClusteringResult,
}

impl ScenarioResult {
    pub fn mean_throughput(&self) -> f64 {
        self.ue_metrics.iter().map(|u| u.throughput).sum::<f64>() / self.ue_metrics.len() as f64
    }

    /// Write `ue,serving,snr_db,sinr_db,load,throughput_bps`.
    pub fn write_metrics_csv<W: Write>(&self, w: W) -> Result<()> {
        write_metrics_csv(&self.ue_metrics, w)
    }

    /// Config, RN positions and loads as JSON.
    pub fn sidecar_json(&self, cfg: &NetworkConfig) -> Result<String> {
        #[derive(Serialize)]
        struct Sidecar<'a> {
            method: Method,
            seed: u64,
            config: &'a NetworkConfig,
            rn_positions: Vec<&'a [f64]>,
            loads: &'a [usize],
        }
        Ok(serde_json::to_string_pretty(&Sidecar {
            method: self.method,
            seed: self.seed,
            config: cfg,
            rn_positions: self.rn_positions.iter().collect(),
            loads: &self.loads,
        })?)
    }
}

pub fn write_metrics_csv<W: Write>(metrics: &[UeMetrics], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["ue", "serving", "snr_db", "sinr_db", "load", "throughput_bps"])?;
    for (i, u) in metrics.iter().enumerate() {
        wtr.write_record([
            i.to_string(),
            u.serving.to_string(),
            u.snr_db.to_string(),
            u.sinr_db.to_string(),
            u.load.to_string(),
            u.throughput.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_metrics_csv<R: std::io::Read>(r: R) -> Result<Vec<UeMetrics>> {
    use crate::geometry::parse_field;
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        out.push(UeMetrics {
            serving: parse_field(&rec, 1)?,
            snr_db: parse_field(&rec, 2)?,
            sinr_db: parse_field(&rec, 3)?,
            load: parse_field(&rec, 4)?,
            throughput: parse_field(&rec, 5)?,
        });
    }
    Ok(out)
}

/// Draw `k` initial RN positions from a BPP over the config region, fit
/// them with `placement`, then associate and evaluate every UE.
pub fn place_and_associate(
    x: &PointSet,
    k: usize,
    placement: &Placement,
    cfg: &NetworkConfig,
    seed: u64,
) -> Result<ScenarioResult> {
    cfg.validate()?;
    if k == 0 {
        return Err(Error::config("at least one radio node is required"));
    }
    let m0 = sample_bpp(&cfg.region, k, seed)?;
    let fit = placement.fit(x, &m0, seed)?;
    let rn = fit.centers.clone();
    let ue_metrics = compute_metrics(x, &rn, cfg)?;
    let (_, loads) = hard_association(x, &rn, cfg)?;
    Ok(ScenarioResult {
        soft_association: soft_association(x, &rn, cfg)?,
        ue_metrics,
        rn_positions: rn,
        loads,
        method: placement.method(),
        seed,
        fit,
    })
}

/// Received power from the serving RN, per UE.
pub fn serving_powers(x: &PointSet, m: &PointSet, cfg: &NetworkConfig) -> Result<Vec<f64>> {
    let p = rx_power_matrix(x, m, cfg)?;
    let (serving, _) = hard_association(x, m, cfg)?;
    Ok(serving.iter().enumerate().map(|(i, &s)| p.get(i, s)).collect())
}

/// Noise power that puts the median of `signal / noise` at `target_db`.
pub fn calibrate_noise(signal: &[f64], target_db: f64) -> Result<f64> {
    let median = crate::stats::percentile(signal, 50.0)?;
    Ok(median / 10f64.powf(target_db / 10.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sample_clustered;
    use crate::wkhm::compute_weights;

    fn cfg() -> NetworkConfig {
        NetworkConfig::default()
    }

    fn pts(rows: &[&[f64]]) -> PointSet {
        PointSet::from_rows(rows).unwrap()
    }

    #[test]
    fn rx_power_values() {
        let c = cfg();
        assert_eq!(rx_power(&[3.0, 4.0], &[3.0, 4.0], &c), 1.0 / (1e-6f64).powf(2.0));
        let inv_sq = NetworkConfig { gamma: 2.000_000_001, eps: 1e-12, ..cfg() };
        assert!((rx_power(&[0.0, 0.0], &[10.0, 0.0], &inv_sq) - 0.01).abs() < 1e-9);
        let c4 = NetworkConfig { gamma: 4.0, eps: 1.0, ..cfg() };
        assert!((rx_power(&[0.0, 0.0], &[3.0, 0.0], &c4) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn lemma_gap_values() {
        let g = rsrp_lemma_gap(2.0, 2.0, 0.1, 1.0).unwrap();
        assert!((g - (10.0 + 1.0 / 4.1 - 2.0 / 1.1)).abs() < 1e-13);
        assert!((g - 8.42572).abs() < 1e-5);
        let scaled = rsrp_lemma_gap(2.0, 2.0, 0.1, 3.5).unwrap();
        assert!((scaled - 3.5 * g).abs() < 1e-12);
        assert!(rsrp_lemma_gap(2.0, 2.0, 0.0, 1.0).is_err());
        assert!((two_ue_sum_rsrp(1.0, 2.0, 2.0, 0.1, 1.0) - two_ue_sum_rsrp(0.0, 2.0, 2.0, 0.1, 1.0) - g).abs() < 1e-12);
    }

    #[test]
    fn soft_association_basics() {
        let c = cfg();
        let x = pts(&[&[1.0, 2.0], &[50.0, 50.0]]);
        let one = soft_association(&x, &pts(&[&[10.0, 10.0]]), &c).unwrap();
        assert!(one.0.as_slice().iter().all(|v| *v == 1.0));
        let eq = soft_association(&pts(&[&[0.0, 0.0]]), &pts(&[&[-3.0, 0.0], &[0.0, 3.0]]), &c).unwrap();
        assert_eq!(eq.0.row(0), &[0.5, 0.5]);
    }

    #[test]
    fn soft_association_is_wkhm_weights_bitwise() {
        let c = cfg();
        let x = sample_clustered(&c.region, 80, 3, 10.0, 4).unwrap();
        let m = sample_bpp(&c.region, 9, 5).unwrap();
        let a = soft_association(&x, &m, &c).unwrap();
        let b = compute_weights(&x, &m, c.gamma, c.eps).unwrap();
        assert_eq!(a, b);
        let c2 = NetworkConfig { p0: 0.25, ..cfg() };
        assert_eq!(soft_association(&x, &m, &c2).unwrap(), b);
    }

    #[test]
    fn hard_association_rules() {
        let c = cfg();
        let x = sample_bpp(&c.region, 30, 1).unwrap();
        let (s, loads) = hard_association(&x, &pts(&[&[5.0, 5.0]]), &c).unwrap();
        assert!(s.iter().all(|&v| v == 0));
        assert_eq!(loads, vec![30]);
        let (s, _) = hard_association(&pts(&[&[0.0, 0.0]]), &pts(&[&[1.0, 0.0], &[-1.0, 0.0]]), &c).unwrap();
        assert_eq!(s, vec![0]);
        let m = sample_bpp(&c.region, 6, 2).unwrap();
        let (s, _) = hard_association(&x, &m, &c).unwrap();
        assert_eq!(s, crate::baselines::nearest_labels(&x, &m).unwrap());
    }

    #[test]
    fn metrics_single_rn_and_equidistant() {
        let c = cfg();
        let x = sample_bpp(&c.region, 20, 3).unwrap();
        for u in compute_metrics(&x, &pts(&[&[50.0, 50.0]]), &c).unwrap() {
            assert_eq!(u.sinr_db, u.snr_db);
            assert_eq!(u.load, 20);
        }
        let quiet = NetworkConfig { noise: 1e-30, ..cfg() };
        let u = compute_metrics(&pts(&[&[0.0, 0.0]]), &pts(&[&[5.0, 0.0], &[-5.0, 0.0]]), &quiet).unwrap();
        assert!(u[0].sinr_db.abs() < 1e-9);
    }

    #[test]
    fn metrics_hand_evaluation() {
        // two UEs, two RNs on a line, gamma = 4, eps = 1
        let c = NetworkConfig { gamma: 4.0, eps: 1.0, noise: 1e-3, bandwidth: 1e6, ..cfg() };
        let x = pts(&[&[0.0, 0.0], &[3.0, 0.0]]);
        let m = pts(&[&[1.0, 0.0], &[10.0, 0.0]]);
        let got = compute_metrics(&x, &m, &c).unwrap();
        // UE0: d = 1 and 10 -> P = 1/4 and 1/10201; UE1: d = 2 and 7 -> 1/25 and 1/2500
        let cases = [(1.0 / 4.0, 1.0 / 10201.0), (1.0 / 25.0, 1.0 / 2500.0)];
        for (u, (s, i)) in got.iter().zip(cases) {
            assert_eq!(u.serving, 0);
            assert_eq!(u.load, 2);
            assert!((u.snr_db - 10.0 * (s / 1e-3f64).log10()).abs() < 1e-12);
            let sinr = s / (1e-3 + i);
            assert!((u.sinr_db - 10.0 * sinr.log10()).abs() < 1e-12);
            assert!((u.throughput - 1e6 / 2.0 * (1.0 + sinr).log2()).abs() < 1e-6);
        }
    }

    #[test]
    fn extra_ue_lowers_throughput() {
        let c = cfg();
        let m = pts(&[&[20.0, 20.0], &[80.0, 80.0]]);
        let x = pts(&[&[22.0, 21.0], &[75.0, 70.0]]);
        let before = compute_metrics(&x, &m, &c).unwrap();
        let x2 = pts(&[&[22.0, 21.0], &[75.0, 70.0], &[18.0, 25.0]]);
        let after = compute_metrics(&x2, &m, &c).unwrap();
        assert!(after[0].throughput < before[0].throughput);
        assert_eq!(after[1].throughput, before[1].throughput);
    }

    #[test]
    fn km_placement_on_two_blobs() {
        let c = cfg();
        let mut rows: Vec<[f64; 2]> = Vec::new();
        for i in 0..10 {
            rows.push([10.0 + 0.1 * i as f64, 10.0]);
            rows.push([90.0, 90.0 - 0.1 * i as f64]);
        }
        let x = PointSet::from_rows(&rows).unwrap();
        let placement = Placement::Baseline { kind: BaselineKind::Km, controls: Controls::default() };
        let res = place_and_associate(&x, 2, &placement, &c, 3).unwrap();
        let mut loads = res.loads.clone();
        loads.sort();
        assert_eq!(loads, vec![10, 10]);
        let mut cs: Vec<Vec<f64>> = res.rn_positions.iter().map(|p| p.to_vec()).collect();
        cs.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert!((cs[0][0] - 10.45).abs() < 1e-9 && (cs[1][1] - 89.55).abs() < 1e-9);
        assert_eq!(res, place_and_associate(&x, 2, &placement, &c, 3).unwrap());
    }

    #[test]
    fn wkhm_placement_soft_association_matches_fit_weights() {
        let c = cfg();
        let x = sample_clustered(&c.region, 60, 3, 10.0, 8).unwrap();
        let params = WkhmParams { q: c.gamma, eps: c.eps, ..WkhmParams::default() };
        let res = place_and_associate(&x, 4, &Placement::Wkhm { params }, &c, 9).unwrap();
        assert_eq!(res.soft_association, res.fit.assignment);
        assert_eq!(res.loads.iter().sum::<usize>(), 60);
        assert!(res.ue_metrics.iter().all(|u| u.sinr_db <= u.snr_db && u.throughput >= 0.0));
    }

    #[test]
    fn metrics_csv_round_trip() {
        let c = cfg();
        let x = sample_bpp(&c.region, 10, 3).unwrap();
        let m = sample_bpp(&c.region, 3, 4).unwrap();
        let metrics = compute_metrics(&x, &m, &c).unwrap();
        let mut buf = Vec::new();
        write_metrics_csv(&metrics, &mut buf).unwrap();
        assert!(buf.starts_with(b"ue,serving,snr_db,sinr_db,load,throughput_bps\n"));
        assert_eq!(read_metrics_csv(&buf[..]).unwrap(), metrics);
    }

    #[test]
    fn config_validation() {
        assert!(NetworkConfig { gamma: 2.0, ..cfg() }.validate().is_err());
        assert!(NetworkConfig { noise: 0.0, ..cfg() }.validate().is_err());
        assert!(cfg().validate().is_ok());
    }
}
