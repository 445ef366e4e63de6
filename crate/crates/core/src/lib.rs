//! Adversarial single-class classification.
//!
//! Discrete games between a learner choosing a rejection function under a
//! type I budget and an adversary constrained to distributions at least
//! `lambda` away from the target, together with a grid-background learner
//! for continuous data and the experiment harness.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversary;
pub mod checks;
pub mod continuous;
pub mod divergence;
pub mod error;
pub mod experiments;
pub mod game;
pub mod io;
pub mod lp;
pub mod model;

pub use adversary::{
    best_response, brute_force_best_response, property_abc_transfer_check, BestResponse,
    ResponseMode,
};
pub use divergence::{evaluate, point_mass_divergence, DivergenceKind, Generator, TransferSpec};
pub use error::{Error, Result};
pub use game::{
    solve_dual, solve_hard_ldrs, solve_soft, DualOutcome, GameStatus, HardOutcome, SolveOutcome,
};
pub use model::{AdversaryConstraint, DualSpec, GameSpec, Pmf, RejectionFunction};
