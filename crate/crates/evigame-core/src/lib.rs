//! Solver library for finite evidence games.
//!
//! A sender holds hard evidence about a binary state and discloses a
//! feasible message; a receiver picks one of finitely many actions after
//! updating beliefs. This crate computes and verifies the refinement
//! hierarchy on such games:
//!
//! - exact perfect-Bayesian / truth-leaning predicates ([`check`]),
//! - the universal belief system μ* and sender-strategy set Σ* shared by
//!   every disturbed game's truth-leaning equilibria ([`star`]),
//! - disturbed games with receiver payoff shocks and purification traces
//!   ([`disturbed`], [`response`]),
//! - perturbed games with truth rewards, homotopy paths to weakly
//!   truth-leaning limits, and the lift construction ([`perturbed`]),
//! - brute-force grid oracles for differential testing ([`oracle`]).
//!
//! Equilibrium arithmetic is exact (`BigRational`); floats appear only in
//! shock distributions and Monte Carlo estimates, and numeric limits are
//! snapped back to rationals before any predicate runs.

pub mod check;
pub mod disturbed;
mod eq_solve;
pub mod family;
pub mod fixtures;
pub mod game;
pub mod io;
pub mod linear;
pub mod num;
pub mod oracle;
pub mod perturbed;
pub mod random;
pub mod report;
pub mod response;
pub mod star;

pub use check::{
    message_value, verify_pbe, verify_perturbed_pbe, verify_purifiable, verify_truth_leaning,
    Assessment, CheckResult, CheckViolation, ReceiverStrategy,
};
pub use disturbed::{
    construct_purifiable, genericity_check, purification_trace, solve_disturbed,
    uniform_tie_weights, DisturbedError, DisturbedOutcome, GenericityReport, PurificationTrace,
};
pub use family::{CoordKeys, EquilibriumFamily};
pub use game::{
    face_value_belief, feasible_set, posterior_from_strategy, validate_game, BeliefSystem,
    EvidenceGame, EvidenceSpace, GameError, Posterior, SenderStrategy, ValidationReport,
};
pub use num::{format_rational, format_real, parse_rational, rationalize, Q};
pub use oracle::{
    family_from_point, oracle_compare, oracle_pbe_grid, DiscrepancyReport, OracleGrid, OracleMode,
};
pub use perturbed::{
    homotopy_weakly_tl, lift_witness, relations_report, solve_perturbed, HomotopyPath,
    HomotopyResult, HomotopyVerdict, Perturbation, RelationsReport,
};
pub use random::{random_game, resample_payoffs, RandomGameParams};
pub use response::{
    best_response_set, expected_action_curve, indifference_thresholds, normal_cdf,
    shocked_best_response, smoothed_response, smoothed_response_monte_carlo, Disturbance,
    ResponseError, ShockFamily, SmoothedResponse, Threshold,
};
pub use star::{
    check_a2_diagnostics, find_truth_leaning, sigma_star_membership, solve_star,
    solve_star_by_enumeration, verify_star_conditions, SolverError, StarSolution,
    TruthLeaningFindings,
};
