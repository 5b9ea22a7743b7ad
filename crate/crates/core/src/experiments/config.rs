//! TOML campaign configuration.
//!
//! Every section and key is optional; omitted values take the defaults
//! below. Unknown keys are rejected. A minimal file:
//!
//! ```toml
//! schema_version = 1
//! seed = 7
//! realizations = 10
//!
//! [scenario]
//! n = 100
//! k = 9
//! ue = { kind = "clustered", hotspots = 3, spread = 10.0 }
//!
//! [wkhm]
//! p = 2.0
//! q = 4.0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{BaselineKind, CapacityBounds, Controls};
use crate::error::{Error, Result};
use crate::geometry::{sample_bpp, sample_clustered, PointSet, Region};
use crate::wireless::{NetworkConfig, Placement};
use crate::wkhm::{Method, WkhmParams};

pub const SCHEMA_VERSION: u32 = 1;

/// How UE positions are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum UeDistribution {
    /// Binomial point process over the region.
    Uniform,
    /// Uniform hotspot centers with isotropic Gaussian scatter (m).
    Clustered { hotspots: usize, spread: f64 },
}

impl UeDistribution {
    pub fn sample(&self, region: &Region, n: usize, seed: u64) -> Result<PointSet> {
        match *self {
            UeDistribution::Uniform => sample_bpp(region, n, seed),
            UeDistribution::Clustered { hotspots, spread } => sample_clustered(region, n, hotspots, spread, seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// UEs per realization.
    pub n: usize,
    /// Radio nodes.
    pub k: usize,
    pub ue: UeDistribution,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig { n: 100, k: 9, ue: UeDistribution::Clustered { hotspots: 3, spread: 10.0 } }
    }
}

/// Parameters of the non-WKHM methods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub controls: Controls,
    /// Harmonic-means exponent.
    pub khm_p: f64,
    pub fcm_fuzzifier: f64,
    /// `None` selects `floor(0.9 N/K) ..= ceil(1.1 N/K)`.
    pub ckm_bounds: Option<CapacityBounds>,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig { controls: Controls::default(), khm_p: 2.0, fcm_fuzzifier: 2.0, ckm_bounds: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub n_values: Vec<usize>,
    pub k: usize,
    pub ue: UeDistribution,
    pub methods: Vec<Method>,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            n_values: vec![240, 330],
            k: 3,
            ue: UeDistribution::Clustered { hotspots: 3, spread: 10.0 },
            methods: vec![Method::Wkhm, Method::Km, Method::Fcm, Method::Gmm],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblateConfig {
    /// Swept with `q` taken from `[wkhm]`.
    pub p_grid: Vec<f64>,
    pub q_grid: Vec<f64>,
    pub q_sweep_p: f64,
    pub eps_grid: Vec<f64>,
    pub eps_sweep_p: f64,
    pub eps_sweep_q: f64,
}

impl Default for AblateConfig {
    fn default() -> Self {
        AblateConfig {
            p_grid: vec![1.0, 1.5, 2.0, 2.5, 3.0, 4.0],
            q_grid: vec![1.0, 2.0, 4.0],
            q_sweep_p: 2.0,
            eps_grid: vec![1e-7, 1e-6, 1e-5],
            eps_sweep_p: 2.0,
            eps_sweep_q: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergeConfig {
    /// BPP initializations.
    pub runs: usize,
    /// Probe thresholds relative to the mean initial loss magnitude.
    pub probes: Vec<f64>,
    pub t0: usize,
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        ConvergeConfig { runs: 100, probes: crate::convergence::DEFAULT_PROBES.to_vec(), t0: crate::convergence::DEFAULT_T0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub realizations: usize,
    pub out: PathBuf,
    pub scenario: ScenarioConfig,
    pub network: NetworkConfig,
    pub wkhm: WkhmParams,
    pub baselines: BaselineConfig,
    /// Methods for `simulate` and `ttest`.
    pub methods: Vec<Method>,
    pub cluster: ClusterConfig,
    pub ablate: AblateConfig,
    pub converge: ConvergeConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let network = NetworkConfig::default();
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            seed: 20_240_601,
            realizations: 30,
            out: PathBuf::from("out"),
            scenario: ScenarioConfig::default(),
            wkhm: WkhmParams { p: 2.0, q: network.gamma, eps: network.eps, ..WkhmParams::default() },
            network,
            baselines: BaselineConfig::default(),
            methods: vec![Method::Wkhm, Method::Km, Method::Ckm, Method::Khm, Method::Kc],
            cluster: ClusterConfig::default(),
            ablate: AblateConfig::default(),
            converge: ConvergeConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(format!("cannot serialize config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.realizations == 0 {
            return Err(Error::config("realizations must be at least 1"));
        }
        Region::new(self.network.region.lower().to_vec(), self.network.region.upper().to_vec())?;
        self.network.validate()?;
        self.wkhm.validate()?;
        let s = &self.scenario;
        if s.k == 0 || s.k > s.n {
            return Err(Error::config(format!("scenario needs 1 <= K <= N, got K = {}, N = {}", s.k, s.n)));
        }
        check_ue(&s.ue)?;
        check_ue(&self.cluster.ue)?;
        if let Some(b) = self.baselines.ckm_bounds {
            b.validate(s.n, s.k)?;
        }
        if !(self.baselines.khm_p > 0.0) {
            return Err(Error::config("khm_p must be positive"));
        }
        if !(self.baselines.fcm_fuzzifier > 1.0) {
            return Err(Error::config("fcm_fuzzifier must exceed 1"));
        }
        let grids = [&self.ablate.p_grid, &self.ablate.q_grid, &self.ablate.eps_grid];
        if grids.iter().any(|g| g.iter().any(|v| !(*v > 0.0 && v.is_finite()))) {
            return Err(Error::config("ablation grid values must be positive"));
        }
        if self.converge.runs == 0 {
            return Err(Error::config("converge.runs must be at least 1"));
        }
        if self.converge.probes.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::config("convergence probes must be positive"));
        }
        Ok(())
    }

    /// Placement algorithm for a method tag under this config.
    pub fn placement(&self, method: Method) -> Placement {
        self.placement_with(method, self.wkhm)
    }

    pub fn placement_with(&self, method: Method, wkhm: WkhmParams) -> Placement {
        let b = &self.baselines;
        let kind = match method {
            Method::Wkhm => return Placement::Wkhm { params: wkhm },
            Method::Km => BaselineKind::Km,
            Method::Ckm => BaselineKind::Ckm { bounds: b.ckm_bounds },
            Method::Khm => BaselineKind::Khm { p: b.khm_p },
            Method::Kc => BaselineKind::Kc,
            Method::Fcm => BaselineKind::Fcm { fuzzifier: b.fcm_fuzzifier },
            Method::Gmm => BaselineKind::Gmm,
        };
        Placement::Baseline { kind, controls: b.controls }
    }
}

fn check_ue(ue: &UeDistribution) -> Result<()> {
    if let UeDistribution::Clustered { hotspots, spread } = *ue {
        if hotspots == 0 || !(spread > 0.0) {
            return Err(Error::config("clustered UEs need hotspots >= 1 and spread > 0"));
        }
    }
    Ok(())
}
