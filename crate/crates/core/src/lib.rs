//! Weighted K-harmonic means (WKHM) clustering with convergence diagnostics,
//! baseline clusterers, and a downlink radio-node placement simulator.
//!
//! Module map:
//!
//! - [`geometry`]: points, regions, seeded point processes, distance kernels.
//! - [`wkhm`]: the regularized WKHM objective, weights, gradient and solver.
//! - [`baselines`]: K-means, constrained K-means, KHM, K-center, FCM, GMM.
//! - [`convergence`]: ensemble exceedance curves, decay fits, tail sums.
//! - [`wireless`]: received power, association, SNR/SINR/load/throughput.
//! - [`stats`]: empirical CDFs, summaries, paired t-test.
//! - [`experiments`]: configuration and the CLI campaign drivers.

pub mod baselines;
pub mod convergence;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod stats;
pub mod wireless;
pub mod wkhm;

pub use error::{Error, Result};
pub use geometry::{Matrix, Point, PointSet, Region};
pub use wkhm::{ClusteringResult, SoftAssignment, Trajectory, WkhmParams};
