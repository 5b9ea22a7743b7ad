use std::fs::File;

use wkhm_core::convergence::{read_convergence_csv, read_decay_csv, read_exceedance_csv};
use wkhm_core::experiments::{cmd_converge, cmd_simulate, simulate_method, ExperimentConfig};
use wkhm_core::geometry::PointSet;
use wkhm_core::stats::Ecdf;
use wkhm_core::wireless::read_metrics_csv;
use wkhm_core::wkhm::Method;

fn small() -> ExperimentConfig {
    let mut cfg = ExperimentConfig { realizations: 3, ..ExperimentConfig::default() };
    cfg.converge.runs = 5;
    cfg
}

#[test]
fn simulate_outputs_parse_back() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small();
    cmd_simulate(&cfg, dir.path()).unwrap();
    for m in &cfg.methods {
        let runs = simulate_method(&cfg, *m).unwrap();
        let d = dir.path().join("simulate").join(m.as_str());
        let metrics = read_metrics_csv(File::open(d.join("metrics.csv")).unwrap()).unwrap();
        let pooled: Vec<_> = runs.iter().flat_map(|r| r.ue_metrics.iter().copied()).collect();
        assert_eq!(metrics, pooled);
        assert!(metrics.iter().all(|u| u.sinr_db <= u.snr_db && u.load >= 1 && u.throughput >= 0.0));
        let loads = Ecdf::read_csv(File::open(d.join("load_ecdf.csv")).unwrap()).unwrap();
        let rn_loads: Vec<f64> = runs.iter().flat_map(|r| r.loads.iter().map(|&l| l as f64)).collect();
        assert_eq!(loads, wkhm_core::stats::ecdf(&rn_loads).unwrap());
        for r in &runs {
            assert_eq!(r.loads.iter().sum::<usize>(), cfg.scenario.n);
        }
        let snr = Ecdf::read_csv(File::open(d.join("snr_ecdf.csv")).unwrap()).unwrap();
        assert_eq!(*snr.fractions().last().unwrap(), 1.0);
    }
}

#[test]
fn converge_outputs_parse_back() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small();
    let diag = cmd_converge(&cfg, dir.path()).unwrap();
    let d = dir.path().join("converge");
    let rows = read_convergence_csv(File::open(d.join("convergence.csv")).unwrap()).unwrap();
    let mut i = 0;
    for (run, t) in diag.trajectories.iter().enumerate() {
        for (step, loss) in t.losses.iter().enumerate() {
            assert_eq!((rows[i].run, rows[i].t, rows[i].loss), (run, step, *loss));
            assert_eq!(rows[i].f_t, t.diffs.get(step).copied());
            i += 1;
        }
    }
    let ex = read_exceedance_csv(File::open(d.join("exceedance.csv")).unwrap()).unwrap();
    let expected: Vec<_> =
        diag.exceedance.iter().flat_map(|c| c.fractions.iter().map(move |&(t, f)| (c.delta, t, f))).collect();
    assert_eq!(ex, expected);
    let dec = read_decay_csv(File::open(d.join("decay.csv")).unwrap()).unwrap();
    assert_eq!(dec.len(), 5);
}

#[test]
fn cluster_points_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small();
    cfg.cluster.n_values = vec![240];
    wkhm_core::experiments::cmd_cluster(&cfg, dir.path()).unwrap();
    let pts = PointSet::read_csv(File::open(dir.path().join("cluster/n240/points.csv")).unwrap()).unwrap();
    assert_eq!(pts.len(), 240);
    for m in [Method::Wkhm, Method::Km, Method::Fcm, Method::Gmm] {
        let c = PointSet::read_csv(File::open(dir.path().join(format!("cluster/n240/{m}_centers.csv"))).unwrap());
        assert_eq!(c.unwrap().len(), 3);
    }
}
