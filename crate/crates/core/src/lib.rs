//! Multipartite quantum discord from conditional projective measurement
//! trees, with the entropy-flux bookkeeping that splits it into
//! conditional, post-measurement and monogamy terms.
//!
//! ```
//! use mdiscord::{discord, states, OptimizerConfig};
//!
//! let ghz = states::ghz(3).unwrap();
//! let r = discord(&ghz, &[0, 1, 2], 3, &OptimizerConfig::default()).unwrap();
//! assert!((r.value - 1.0).abs() < 1e-6);
//! ```

pub mod discord;
pub mod entropy_flux;
pub mod error;
pub mod measure;
pub mod optimizer;
pub mod oracle;
pub mod qstate;
pub mod states;

pub use discord::{
    arrange, discord, discord_two_measurement, objective_bipartite, objective_bipartite_two_meas, objective_npartite,
    objective_tripartite, DiscordResult, Objective,
};
pub use entropy_flux::{flux_report, Decomposition, FluxReport, Stage};
pub use error::{Error, Result};
pub use measure::{
    apply_tree, fold_angles, optimal_tree_for_measured_state, projector_pair_from_angles, tree_from_params,
    BranchOutcome, MeasParams, Measured, MeasurementTree, NodeAngles, ProjectorBasis,
};
pub use optimizer::{optimize, OptimizerConfig, OptimizerOutcome};
pub use oracle::VerifyReport;
pub use qstate::{validate, CMatrix, CVector, QState, SubsetSpec, ValidityReport, C64};
pub use states::{Family, StateSpec};
