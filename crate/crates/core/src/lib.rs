//! Sequential causal Stackelberg games.
//!
//! A leader and a follower each own an action node inside a discrete
//! structural causal model. Each picks a causal layer: play the natural
//! mechanism (L1), intervene (L2), or map its own instinct to an action
//! (L3). The crate solves such games exactly by backward induction, by
//! sampling, and against satisficing followers, and reproduces the
//! experiments comparing the result with classical Stackelberg play.

pub mod cli;
mod eval;
pub mod experiments;
pub mod format;
pub mod game;
pub mod generators;
pub mod qbf;
pub mod scm;
pub mod solvers;

pub use game::{
    expected_payoffs, FollowerPolicy, GameError, GameMeta, InformationStructure, Layer, LayeredStrategy, Observation,
    Response, RewardTable, ScmasGame,
};
pub use scm::{Scm, ScmBuilder, ScmError};
pub use solvers::{
    approx_scne, classical_stackelberg, exact_scne, satisficing_scne, EquilibriumProfile, Method, SolverConfig,
    SolverError,
};
