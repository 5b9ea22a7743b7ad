//! Campaign drivers behind the `wkhm` CLI. Each command writes plain CSV
//! (plus a little JSON) under its own subdirectory of the output root.
//!
//! Realization `r` of a campaign seeded with `s` always uses the same UE set
//! and the same initial RN draw for every method, so method comparisons are
//! paired. Realizations run in parallel and are reduced in index order.

mod config;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

pub use config::{
    AblateConfig, BaselineConfig, ClusterConfig, ConvergeConfig, ExperimentConfig, ScenarioConfig, UeDistribution,
    SCHEMA_VERSION,
};

use crate::convergence::{ensemble_trajectories, EnsembleDiagnostics};
use crate::error::{Error, Result};
use crate::geometry::{derive_seed, sample_bpp, PointSet};
use crate::stats::{ecdf, mean, paired_ttest, percentile, TTestResult};
use crate::wireless::{calibrate_noise, place_and_associate, serving_powers, write_metrics_csv, ScenarioResult};
use crate::wkhm::{Method, WkhmParams};

/// One Monte Carlo draw of the default scenario.
#[derive(Debug, Clone)]
pub struct Realization {
    pub index: usize,
    pub ue_seed: u64,
    /// Seed for the initial RN draw (and K-center's first pick).
    pub init_seed: u64,
    pub ues: PointSet,
}

pub fn realization(cfg: &ExperimentConfig, index: usize) -> Result<Realization> {
    let ue_seed = derive_seed(cfg.seed, &format!("experiments/ue/{index}"));
    let init_seed = derive_seed(cfg.seed, &format!("experiments/init/{index}"));
    let ues = cfg.scenario.ue.sample(&cfg.network.region, cfg.scenario.n, ue_seed)?;
    Ok(Realization { index, ue_seed, init_seed, ues })
}

/// `f` over every realization, in parallel, results in index order.
pub fn for_each_realization<T, F>(cfg: &ExperimentConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&Realization) -> Result<T> + Sync,
{
    (0..cfg.realizations).into_par_iter().map(|r| f(&realization(cfg, r)?)).collect()
}

/// Place and evaluate `method` on every realization.
pub fn simulate_method(cfg: &ExperimentConfig, method: Method) -> Result<Vec<ScenarioResult>> {
    simulate_with(cfg, method, cfg.wkhm)
}

fn simulate_with(cfg: &ExperimentConfig, method: Method, wkhm: WkhmParams) -> Result<Vec<ScenarioResult>> {
    let placement = cfg.placement_with(method, wkhm);
    for_each_realization(cfg, |r| place_and_associate(&r.ues, cfg.scenario.k, &placement, &cfg.network, r.init_seed))
}

/// Noise power putting the pooled median KM-placement SNR at `target_db`.
pub fn noise_calibration(cfg: &ExperimentConfig, target_db: f64) -> Result<f64> {
    let runs = simulate_method(cfg, Method::Km)?;
    let mut signal = Vec::new();
    for (r, run) in runs.iter().enumerate() {
        let ues = realization(cfg, r)?.ues;
        signal.extend(serving_powers(&ues, &run.rn_positions, &cfg.network)?);
    }
    calibrate_noise(&signal, target_db)
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn check_methods(requested: &[Method], allowed: &[Method], command: &str) -> Result<()> {
    if requested.is_empty() {
        return Err(Error::config(format!("{command}: no methods requested")));
    }
    if let Some(m) = requested.iter().find(|m| !allowed.contains(m)) {
        let names: Vec<&str> = allowed.iter().map(|m| m.as_str()).collect();
        return Err(Error::config(format!("{command}: method {m} not supported (choose from {})", names.join(", "))));
    }
    Ok(())
}

pub const CLUSTER_METHODS: [Method; 4] = [Method::Wkhm, Method::Km, Method::Fcm, Method::Gmm];
pub const SIMULATE_METHODS: [Method; 5] = [Method::Km, Method::Ckm, Method::Khm, Method::Kc, Method::Wkhm];

/// Cluster formations: for each configured N, one dataset and one initial
/// draw shared by every method. Writes `points.csv` and per method
/// `<METHOD>_labels.csv` (idx,x,y,label), `<METHOD>_centers.csv` and
/// `<METHOD>.json`.
pub fn cmd_cluster(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let cc = &cfg.cluster;
    check_methods(&cc.methods, &CLUSTER_METHODS, "cluster")?;
    if cc.n_values.is_empty() {
        return Err(Error::config("cluster: n_values is empty"));
    }
    if cfg.network.region.dim() != 2 {
        return Err(Error::config("cluster output is defined for 2-D regions"));
    }
    let mut written = Vec::new();
    for &n in &cc.n_values {
        if cc.k == 0 || cc.k > n {
            return Err(Error::config(format!("cluster: need 1 <= K <= N, got K = {}, N = {n}", cc.k)));
        }
        let dir = out.join("cluster").join(format!("n{n}"));
        create_dir(&dir)?;
        let region = &cfg.network.region;
        let x = cc.ue.sample(region, n, derive_seed(cfg.seed, &format!("experiments/cluster/ue/{n}")))?;
        let init_seed = derive_seed(cfg.seed, &format!("experiments/cluster/init/{n}"));
        let m0 = sample_bpp(region, cc.k, init_seed)?;
        let points = dir.join("points.csv");
        x.write_csv(create(&points)?)?;
        written.push(points);
        let fits: Vec<_> =
            cc.methods.par_iter().map(|&m| cfg.placement(m).fit(&x, &m0, init_seed)).collect::<Result<_>>()?;
        for (method, fit) in cc.methods.iter().zip(fits) {
            let labels = dir.join(format!("{method}_labels.csv"));
            let mut wtr = csv::Writer::from_writer(create(&labels)?);
            wtr.write_record(["idx", "x", "y", "label"])?;
            for (i, (p, l)) in x.iter().zip(&fit.hard_labels).enumerate() {
                wtr.write_record([i.to_string(), p[0].to_string(), p[1].to_string(), l.to_string()])?;
            }
            wtr.flush()?;
            let centers = dir.join(format!("{method}_centers.csv"));
            fit.centers.write_csv(create(&centers)?)?;
            let json = dir.join(format!("{method}.json"));
            fs::write(&json, fit.to_json()? + "\n")?;
            written.extend([labels, centers, json]);
        }
    }
    Ok(written)
}

/// Campaign averages for one method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub mean_throughput_mbps: f64,
    /// Pooled over all UEs of all realizations.
    pub p5_sinr_db: f64,
    pub median_sinr_db: f64,
    pub median_snr_db: f64,
    /// Per-realization max/min RN load, averaged over realizations.
    pub mean_max_load: f64,
    pub mean_min_load: f64,
    pub mean_load_spread: f64,
}

pub fn summarize(method: Method, runs: &[ScenarioResult]) -> Result<MethodSummary> {
    let sinr: Vec<f64> = runs.iter().flat_map(|r| r.ue_metrics.iter().map(|u| u.sinr_db)).collect();
    let snr: Vec<f64> = runs.iter().flat_map(|r| r.ue_metrics.iter().map(|u| u.snr_db)).collect();
    let max_load: Vec<f64> = runs.iter().map(|r| *r.loads.iter().max().unwrap_or(&0) as f64).collect();
    let min_load: Vec<f64> = runs.iter().map(|r| *r.loads.iter().min().unwrap_or(&0) as f64).collect();
    Ok(MethodSummary {
        method,
        mean_throughput_mbps: mean(&runs.iter().map(|r| r.mean_throughput() / 1e6).collect::<Vec<_>>()),
        p5_sinr_db: percentile(&sinr, 5.0)?,
        median_sinr_db: percentile(&sinr, 50.0)?,
        median_snr_db: percentile(&snr, 50.0)?,
        mean_max_load: mean(&max_load),
        mean_min_load: mean(&min_load),
        mean_load_spread: mean(&max_load) - mean(&min_load),
    })
}

/// Per method under `simulate/<METHOD>/`: pooled `metrics.csv` (the `ue`
/// column counts across realizations), `snr_ecdf.csv`, `sinr_ecdf.csv`,
/// `load_ecdf.csv` (per-RN loads) and `scenario.json` with RN positions.
/// `simulate/summary.csv` holds one row of campaign averages per method.
pub fn cmd_simulate(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<MethodSummary>> {
    check_methods(&cfg.methods, &SIMULATE_METHODS, "simulate")?;
    let root = out.join("simulate");
    create_dir(&root)?;
    let mut summaries = Vec::new();
    for &method in &cfg.methods {
        let runs = simulate_method(cfg, method)?;
        let dir = root.join(method.as_str());
        create_dir(&dir)?;
        let pooled: Vec<_> = runs.iter().flat_map(|r| r.ue_metrics.iter().copied()).collect();
        write_metrics_csv(&pooled, create(&dir.join("metrics.csv"))?)?;
        let snr: Vec<f64> = pooled.iter().map(|u| u.snr_db).collect();
        let sinr: Vec<f64> = pooled.iter().map(|u| u.sinr_db).collect();
        let loads: Vec<f64> = runs.iter().flat_map(|r| r.loads.iter().map(|&l| l as f64)).collect();
        ecdf(&snr)?.write_csv(create(&dir.join("snr_ecdf.csv"))?)?;
        ecdf(&sinr)?.write_csv(create(&dir.join("sinr_ecdf.csv"))?)?;
        ecdf(&loads)?.write_csv(create(&dir.join("load_ecdf.csv"))?)?;
        #[derive(Serialize)]
        struct Run<'a> {
            realization: usize,
            seed: u64,
            rn_positions: Vec<&'a [f64]>,
            loads: &'a [usize],
            iterations: usize,
            converged: bool,
        }
        #[derive(Serialize)]
        struct Sidecar<'a> {
            method: Method,
            network: &'a crate::wireless::NetworkConfig,
            runs: Vec<Run<'a>>,
        }
        let sidecar = Sidecar {
            method,
            network: &cfg.network,
            runs: runs
                .iter()
                .enumerate()
                .map(|(i, r)| Run {
                    realization: i,
                    seed: r.seed,
                    rn_positions: r.rn_positions.iter().collect(),
                    loads: &r.loads,
                    iterations: r.fit.trajectory.iterations,
                    converged: r.fit.trajectory.converged,
                })
                .collect(),
        };
        write_json(&dir.join("scenario.json"), &sidecar)?;
        summaries.push(summarize(method, &runs)?);
    }
    let mut wtr = csv::Writer::from_writer(create(&root.join("summary.csv"))?);
    wtr.write_record([
        "method",
        "mean_throughput_mbps",
        "p5_sinr_db",
        "median_sinr_db",
        "median_snr_db",
        "mean_max_load",
        "mean_min_load",
        "mean_load_spread",
    ])?;
    for s in &summaries {
        wtr.write_record([
            s.method.to_string(),
            s.mean_throughput_mbps.to_string(),
            s.p5_sinr_db.to_string(),
            s.median_sinr_db.to_string(),
            s.median_snr_db.to_string(),
            s.mean_max_load.to_string(),
            s.mean_min_load.to_string(),
            s.mean_load_spread.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(summaries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    P,
    Q,
    Eps,
}

impl Sweep {
    pub const ALL: [Sweep; 3] = [Sweep::P, Sweep::Q, Sweep::Eps];

    pub fn name(&self) -> &'static str {
        match self {
            Sweep::P => "p",
            Sweep::Q => "q",
            Sweep::Eps => "eps",
        }
    }
}

impl std::str::FromStr for Sweep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p" => Ok(Sweep::P),
            "q" => Ok(Sweep::Q),
            "eps" | "epsilon" => Ok(Sweep::Eps),
            _ => Err(Error::config(format!("unknown sweep {s:?} (choose p, q or eps)"))),
        }
    }
}

/// `(param, mean SINR in dB)` for WKHM placement along one sweep. Every
/// grid point is evaluated on the same realizations.
pub fn ablation(cfg: &ExperimentConfig, sweep: Sweep) -> Result<Vec<(f64, f64)>> {
    let a = &cfg.ablate;
    let (grid, make): (&[f64], Box<dyn Fn(f64) -> WkhmParams>) = match sweep {
        Sweep::P => (&a.p_grid, Box::new(|v| WkhmParams { p: v, ..cfg.wkhm })),
        Sweep::Q => (&a.q_grid, Box::new(|v| WkhmParams { p: a.q_sweep_p, q: v, ..cfg.wkhm })),
        Sweep::Eps => (&a.eps_grid, Box::new(|v| WkhmParams { p: a.eps_sweep_p, q: a.eps_sweep_q, eps: v, ..cfg.wkhm })),
    };
    if grid.is_empty() {
        return Err(Error::config(format!("ablate: {} grid is empty", sweep.name())));
    }
    grid.iter()
        .map(|&v| {
            let params = make(v);
            params.validate()?;
            let runs = simulate_with(cfg, Method::Wkhm, params)?;
            let sinr: Vec<f64> = runs.iter().flat_map(|r| r.ue_metrics.iter().map(|u| u.sinr_db)).collect();
            Ok((v, mean(&sinr)))
        })
        .collect()
}

/// Writes `ablate/<sweep>.csv` with `param,mean_sinr_db` for each sweep.
pub fn cmd_ablate(cfg: &ExperimentConfig, sweeps: &[Sweep], out: &Path) -> Result<Vec<(Sweep, Vec<(f64, f64)>)>> {
    let dir = out.join("ablate");
    create_dir(&dir)?;
    let mut all = Vec::new();
    for &sweep in sweeps {
        let rows = ablation(cfg, sweep)?;
        let mut wtr = csv::Writer::from_writer(create(&dir.join(format!("{}.csv", sweep.name())))?);
        wtr.write_record(["param", "mean_sinr_db"])?;
        for (p, s) in &rows {
            wtr.write_record([p.to_string(), s.to_string()])?;
        }
        wtr.flush()?;
        all.push((sweep, rows));
    }
    Ok(all)
}

/// Paired comparison of one method against WKHM on per-realization mean
/// per-user throughput (Mbps). Differences are `method - WKHM`, so a
/// negative statistic favours WKHM.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub method: Method,
    pub test: TTestResult,
}

pub fn compare_against(reference: &[f64], other: &[f64], method: Method) -> Result<Comparison> {
    Ok(Comparison { method, test: paired_ttest(other, reference)? })
}

/// Writes `ttest/throughput.csv` (one row per realization, one column per
/// method) and `ttest/ttest.csv` with `pair,t,p,dof,mean_diff_mbps`.
/// A degenerate test has an empty `p` field.
pub fn cmd_ttest(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<Comparison>> {
    if cfg.realizations < 10 {
        return Err(Error::config(format!("ttest needs at least 10 realizations, got {}", cfg.realizations)));
    }
    if !cfg.methods.contains(&Method::Wkhm) {
        return Err(Error::config("ttest: WKHM must be among the methods"));
    }
    check_methods(&cfg.methods, &SIMULATE_METHODS, "ttest")?;
    let dir = out.join("ttest");
    create_dir(&dir)?;
    let mut columns = Vec::new();
    for &m in &cfg.methods {
        let runs = simulate_method(cfg, m)?;
        columns.push(runs.iter().map(|r| r.mean_throughput() / 1e6).collect::<Vec<f64>>());
    }
    let mut wtr = csv::Writer::from_writer(create(&dir.join("throughput.csv"))?);
    let mut header = vec!["realization".to_string()];
    header.extend(cfg.methods.iter().map(|m| m.to_string()));
    wtr.write_record(&header)?;
    for r in 0..cfg.realizations {
        let mut row = vec![r.to_string()];
        row.extend(columns.iter().map(|c| c[r].to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    let w = cfg.methods.iter().position(|&m| m == Method::Wkhm).expect("checked above");
    let mut comparisons = Vec::new();
    for (i, &m) in cfg.methods.iter().enumerate() {
        if i != w {
            comparisons.push(compare_against(&columns[w], &columns[i], m)?);
        }
    }
    let mut wtr = csv::Writer::from_writer(create(&dir.join("ttest.csv"))?);
    wtr.write_record(["pair", "t", "p", "dof", "mean_diff_mbps"])?;
    for c in &comparisons {
        wtr.write_record([
            format!("{}-WKHM", c.method),
            c.test.t_stat.to_string(),
            c.test.p_value.map(|p| p.to_string()).unwrap_or_default(),
            c.test.dof.to_string(),
            c.test.mean_diff.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(comparisons)
}

/// Exceedance / decay / tail-sum campaign on realization 0's UE set with
/// `converge.runs` BPP initializations. Writes `converge/convergence.csv`,
/// `exceedance.csv`, `decay.csv` and `summary.json`.
pub fn cmd_converge(cfg: &ExperimentConfig, out: &Path) -> Result<EnsembleDiagnostics> {
    let cc = &cfg.converge;
    let x = realization(cfg, 0)?.ues;
    let seed = derive_seed(cfg.seed, "experiments/converge");
    let trajectories = ensemble_trajectories(&x, cfg.scenario.k, &cfg.network.region, cc.runs, &cfg.wkhm, seed)?;
    let diag = EnsembleDiagnostics::from_trajectories(trajectories, &cc.probes, cc.t0)?;
    let dir = out.join("converge");
    create_dir(&dir)?;
    diag.write_convergence_csv(create(&dir.join("convergence.csv"))?)?;
    diag.write_exceedance_csv(create(&dir.join("exceedance.csv"))?)?;
    diag.write_decay_csv(create(&dir.join("decay.csv"))?)?;
    #[derive(Serialize)]
    struct Probe {
        relative: f64,
        delta: f64,
        crossing_index: Option<usize>,
        monotone: bool,
    }
    #[derive(Serialize)]
    struct Summary {
        runs: usize,
        t0: usize,
        max_iter: usize,
        loss_scale: f64,
        longest_trajectory: usize,
        converged_runs: usize,
        total_stalls: usize,
        flagged_decay_fits: usize,
        probes: Vec<Probe>,
    }
    let summary = Summary {
        runs: diag.r,
        t0: diag.t0,
        max_iter: cfg.wkhm.max_iter,
        loss_scale: diag.loss_scale(),
        longest_trajectory: diag.longest(),
        converged_runs: diag.trajectories.iter().filter(|t| t.converged).count(),
        total_stalls: diag.trajectories.iter().map(|t| t.stall_count).sum(),
        flagged_decay_fits: diag.decay_fits.iter().filter(|f| f.is_none()).count(),
        probes: cc
            .probes
            .iter()
            .zip(&diag.exceedance)
            .map(|(&relative, c)| Probe {
                relative,
                delta: c.delta,
                crossing_index: c.crossing_index(),
                monotone: c.is_monotone(),
            })
            .collect(),
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(diag)
}

/// Every command with its configured defaults, plus the resolved config.
pub fn run_all(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    create_dir(out)?;
    fs::write(out.join("config.toml"), cfg.to_toml_string()?)?;
    cmd_cluster(cfg, out)?;
    cmd_simulate(cfg, out)?;
    cmd_ablate(cfg, &Sweep::ALL, out)?;
    cmd_ttest(cfg, out)?;
    cmd_converge(cfg, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wireless::{read_metrics_csv, DEFAULT_NOISE_W};

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig { realizations: 2, ..ExperimentConfig::default() };
        cfg.scenario.n = 40;
        cfg.scenario.k = 4;
        cfg.cluster.n_values = vec![60];
        cfg.converge.runs = 3;
        cfg
    }

    #[test]
    fn frozen_noise_matches_calibration() {
        let noise = noise_calibration(&ExperimentConfig::default(), 20.0).unwrap();
        assert!(((noise - DEFAULT_NOISE_W) / DEFAULT_NOISE_W).abs() < 1e-12, "{noise:e}");
    }

    #[test]
    fn realizations_are_paired_and_reproducible() {
        let cfg = small();
        let a = realization(&cfg, 1).unwrap();
        let b = realization(&cfg, 1).unwrap();
        assert_eq!(a.ues, b.ues);
        assert_ne!(realization(&cfg, 0).unwrap().ues, a.ues);
        let km = simulate_method(&cfg, Method::Km).unwrap();
        let kc = simulate_method(&cfg, Method::Kc).unwrap();
        assert_eq!(km[1].seed, kc[1].seed);
        assert_eq!(km, simulate_method(&cfg, Method::Km).unwrap());
    }

    #[test]
    fn cluster_writes_one_label_file_per_method() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small();
        cfg.cluster.methods = vec![Method::Km];
        cmd_cluster(&cfg, dir.path()).unwrap();
        let n60 = dir.path().join("cluster/n60");
        let labels = fs::read_to_string(n60.join("KM_labels.csv")).unwrap();
        assert_eq!(labels.lines().count(), 61);
        assert!(!n60.join("WKHM_labels.csv").exists());
        cfg.cluster.methods = vec![Method::Kc];
        assert!(cmd_cluster(&cfg, dir.path()).unwrap_err().is_config());
    }

    #[test]
    fn simulate_single_method_rows() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small();
        cfg.realizations = 1;
        cfg.methods = vec![Method::Km];
        cmd_simulate(&cfg, dir.path()).unwrap();
        let f = File::open(dir.path().join("simulate/KM/metrics.csv")).unwrap();
        assert_eq!(read_metrics_csv(f).unwrap().len(), 40);
        let loads = crate::stats::Ecdf::read_csv(File::open(dir.path().join("simulate/KM/load_ecdf.csv")).unwrap());
        let loads = loads.unwrap();
        // four RNs: every jump is a multiple of 1/4
        assert!(loads.fractions().iter().all(|f| (f * 4.0 - (f * 4.0).round()).abs() < 1e-12));
    }

    #[test]
    fn ablation_single_point_grid() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small();
        cfg.ablate.q_grid = vec![2.0];
        let res = cmd_ablate(&cfg, &[Sweep::Q], dir.path()).unwrap();
        assert_eq!(res[0].1.len(), 1);
        let text = fs::read_to_string(dir.path().join("ablate/q.csv")).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("param,mean_sinr_db\n"));
    }

    #[test]
    fn ttest_requirements_and_self_pair() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small();
        assert!(cmd_ttest(&cfg, dir.path()).unwrap_err().is_config());
        cfg.realizations = 10;
        cfg.methods = vec![Method::Wkhm];
        assert!(cmd_ttest(&cfg, dir.path()).unwrap().is_empty());
        let text = fs::read_to_string(dir.path().join("ttest/ttest.csv")).unwrap();
        assert_eq!(text, "pair,t,p,dof,mean_diff_mbps\n");
        let v = [3.0, 4.5, 2.0, 8.0];
        assert_eq!(compare_against(&v, &v, Method::Wkhm).unwrap().test.t_stat, 0.0);
    }

    #[test]
    fn converge_single_run() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small();
        cfg.converge.runs = 1;
        let diag = cmd_converge(&cfg, dir.path()).unwrap();
        assert_eq!(diag.r, 1);
        let rows = crate::convergence::read_convergence_csv(File::open(dir.path().join("converge/convergence.csv")).unwrap())
            .unwrap();
        assert!(rows.windows(2).all(|w| w[1].loss <= w[0].loss));
        let dec = crate::convergence::read_decay_csv(File::open(dir.path().join("converge/decay.csv")).unwrap()).unwrap();
        assert_eq!(dec.len(), 1);
    }

    #[test]
    fn run_all_is_byte_deterministic() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let mut cfg = small();
        cfg.realizations = 10;
        run_all(&cfg, a.path()).unwrap();
        run_all(&cfg, b.path()).unwrap();
        let files = |p: &Path| {
            let mut v = Vec::new();
            let mut stack = vec![p.to_path_buf()];
            while let Some(d) = stack.pop() {
                for e in fs::read_dir(&d).unwrap() {
                    let e = e.unwrap().path();
                    if e.is_dir() {
                        stack.push(e);
                    } else {
                        v.push((e.strip_prefix(p).unwrap().to_path_buf(), fs::read(&e).unwrap()));
                    }
                }
            }
            v.sort();
            v
        };
        let fa = files(a.path());
        assert!(fa.len() > 20);
        assert_eq!(fa, files(b.path()));
    }
}
