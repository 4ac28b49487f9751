//! Statistical certificates against local realism for Bell-test data.
//!
//! Per-trial Bell functions and the local-realist polytope feed three
//! p-value engines: the Hoeffding-type martingale bound and the simplified
//! and full prediction-based-ratio (PBR) protocols. Gain-rate analytics,
//! quantum trial distributions and a seeded simulator sit on top.

pub mod bellfn;
pub mod cli;
pub mod error;
pub mod gainrates;
pub mod lrpolytope;
pub mod optim;
pub mod protocols;
pub mod quantum;
pub mod scenario;
pub mod sim;

pub use bellfn::{standardize, standardized_set, Functional, StandardizedFunctional};
pub use error::{Error, Result};
pub use gainrates::{gain_curve, gain_martingale, gain_spbr, optimal_gain, GainReport, Sweep};
pub use lrpolytope::{LRMixture, LrPolytope};
pub use optim::{kl_divergence, kl_project_lr, maximize_log_gain, OptimizerControls, RTable, Weights};
pub use protocols::{
    azuma_pvalue, martingale_pvalue, pbr_pvalue, run_full_pbr, run_martingale, run_simplified_pbr,
    AnalysisState, FullPbr, MartingaleState, ReportRow, SimplifiedPbr,
};
pub use quantum::{born_distribution, cglmp_config, chsh_config, MeasurementBank, PureState};
pub use scenario::{Distribution, Scenario, TrialResult};
pub use sim::{run_experiment, sample_trials, Protocol, SimulationPlan};
