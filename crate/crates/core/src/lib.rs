//! Exact information-theoretic analysis of goal representations on the
//! Discrete Cube gridworld.
//!
//! The crate enumerates the environment, solves every goal exactly, encodes
//! `(state, goal)` pairs through a library of representations, and measures
//! how much action- and value-relevant information each one discards.

pub mod actor_lab;
pub mod cube_env;
pub mod error;
pub mod features;
pub mod info_metrics;
pub mod line1d;
pub mod mixed_policy;
pub mod oracle;
pub mod reference;
pub mod rep_library;
pub mod rng;
pub mod stats;
pub mod verify;

pub use actor_lab::{train_actor, ActorConfig, TrainReport};
pub use cube_env::{
    Action, CubeEnv, CubeId, CubeSlot, CubeState, Goal, GoalIndex, Gripper, GridPos, PairSet,
    StateIndex, DEFAULT_GRID, NUM_ACTIONS,
};
pub use error::{Error, Result};
pub use features::{FeatureTable, FeatureVector};
pub use info_metrics::{Analyzer, InfoAnalysis, InfoReport, JointTable};
pub use line1d::{LineConfig, LinePhi};
pub use mixed_policy::{MixedPolicyTable, PolicySupport, RolloutConfig, RolloutOutcome};
pub use oracle::{compute_oracle, OracleTables};
pub use rep_library::{
    baseline, baselines, sample_library, BaselineKind, RepKind, RepValue, RepresentationSpec,
};
pub use verify::{run_verification, VerifyOptions, VerifyReport};
