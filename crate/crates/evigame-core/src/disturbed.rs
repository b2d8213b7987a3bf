//! Disturbed games: truth-leaning equilibrium outcomes under receiver
//! payoff shocks, purification traces as the shocks vanish, the
//! purifiable-equilibrium constructor, and the genericity predicate.
//!
//! The sender side of every disturbed-game truth-leaning equilibrium is
//! the universal star solution; the receiver side is the smoothed best
//! response evaluated at the universal beliefs. The disturbed receiver
//! strategy itself (a function of the shock) is never materialized — all
//! equilibrium content flows through the smoothed response.

use std::collections::BTreeMap;

use num::{One, Signed, Zero};

use crate::check::{
    verify_pbe, verify_purifiable, Assessment, CheckResult, ReceiverStrategy,
};
use crate::game::{EvidenceGame, GameError};
use crate::num::{rationalize, Q};
use crate::response::{
    best_response_set, smoothed_response, Disturbance, ResponseError, ShockFamily,
    SmoothedResponse,
};
use crate::star::{SolverError, StarSolution};

/// Truth-leaning equilibrium outcome of one disturbed game.
#[derive(Debug, Clone)]
pub struct DisturbedOutcome {
    pub sigma: crate::game::SenderStrategy,
    pub mu: crate::game::BeliefSystem,
    /// Smoothed receiver response per message (identical across messages
    /// that share a belief).
    pub rho: Vec<SmoothedResponse>,
}

#[derive(Debug, thiserror::Error)]
pub enum DisturbedError {
    #[error(transparent)]
    Response(#[from] ResponseError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("schedule too short: need at least 3 strictly decreasing positive scales")]
    ScheduleTooShort,
    #[error("sender optimality failed in the disturbed game at {0}")]
    VerificationFailure(String),
    #[error("{0}")]
    InvalidWeights(String),
}

/// Solve the disturbed game: the sender plays the universal strategy, the
/// receiver smooths over shocks at the universal beliefs. Sender
/// optimality is re-verified numerically (exactly for closed forms,
/// within 3 standard errors for Monte Carlo).
pub fn solve_disturbed(
    game: &EvidenceGame,
    eta: &Disturbance,
    star: &StarSolution,
) -> Result<DisturbedOutcome, DisturbedError> {
    eta.validate(game)?;
    let n = game.n_evidence();
    // One evaluation per distinct belief level keeps equal-belief messages
    // bit-identical.
    let mut by_level: BTreeMap<Q, SmoothedResponse> = BTreeMap::new();
    for m in 0..n {
        let mu = &star.mu_star.beliefs[m];
        if !by_level.contains_key(mu) {
            by_level.insert(mu.clone(), smoothed_response(game, eta, mu)?);
        }
    }
    let rho: Vec<SmoothedResponse> = (0..n)
        .map(|m| by_level[&star.mu_star.beliefs[m]].clone())
        .collect();
    // Sender optimality: every supported message attains the best value in
    // the type's feasible set.
    for e in 0..n {
        let lc = game.space.lower_contour(e);
        let best = lc
            .iter()
            .map(|&m| rho[m].value)
            .fold(f64::NEG_INFINITY, f64::max);
        let slack = |m: usize| -> f64 {
            if rho[m].closed_form {
                1e-12
            } else {
                3.0 * rho[m].stderr.iter().cloned().fold(0.0f64, f64::max)
            }
        };
        for m in star.sigma_star.support(e) {
            if rho[m].value < best - slack(m) {
                return Err(DisturbedError::VerificationFailure(format!(
                    "σ({}|{}): value {} below best {}",
                    game.space.items[m], game.space.items[e], rho[m].value, best
                )));
            }
        }
    }
    Ok(DisturbedOutcome {
        sigma: star.sigma_star.clone(),
        mu: star.mu_star.clone(),
        rho,
    })
}

/// Genericity of the star solution: the best response at every universal
/// belief is a singleton.
#[derive(Debug, Clone)]
pub struct GenericityReport {
    pub generic: bool,
    /// `(message, tied actions)` for every message with a tie at μ*.
    pub ties: Vec<(usize, Vec<usize>)>,
}

pub fn genericity_check(game: &EvidenceGame, star: &StarSolution) -> GenericityReport {
    let mut ties = Vec::new();
    for m in 0..game.n_evidence() {
        let br = best_response_set(game, &star.mu_star.beliefs[m]);
        if br.len() > 1 {
            ties.push((m, br));
        }
    }
    GenericityReport {
        generic: ties.is_empty(),
        ties,
    }
}

/// Uniform weights over every tied action set, keyed by belief level —
/// the canonical input to [`construct_purifiable`] on nongeneric games.
pub fn uniform_tie_weights(
    game: &EvidenceGame,
    star: &StarSolution,
) -> BTreeMap<Q, BTreeMap<usize, Q>> {
    let mut weights = BTreeMap::new();
    for m in 0..game.n_evidence() {
        let mu = star.mu_star.beliefs[m].clone();
        let br = best_response_set(game, &mu);
        if br.len() > 1 {
            let share = Q::one() / Q::from_integer((br.len() as i64).into());
            weights.insert(mu, br.into_iter().map(|a| (a, share.clone())).collect());
        }
    }
    weights
}

/// Build a purifiable equilibrium: the universal sender strategy and
/// beliefs, with the receiver playing the unique best response at each
/// belief level, or the supplied tie weights where the response set is
/// not a singleton. Weights are keyed by belief level so equal-belief
/// messages automatically receive identical behavior.
pub fn construct_purifiable(
    game: &EvidenceGame,
    star: &StarSolution,
    weights: &BTreeMap<Q, BTreeMap<usize, Q>>,
) -> Result<Assessment, SolverError> {
    let n = game.n_evidence();
    let k = game.n_actions();
    let mut levels: BTreeMap<Q, Vec<Q>> = BTreeMap::new();
    for m in 0..n {
        let mu = &star.mu_star.beliefs[m];
        if levels.contains_key(mu) {
            continue;
        }
        let br = best_response_set(game, mu);
        let mut row = vec![Q::zero(); k];
        if br.len() == 1 {
            row[br[0]] = Q::one();
        } else {
            let Some(w) = weights.get(mu) else {
                return Err(SolverError::InvalidGame(format!(
                    "missing tie weights for belief level {}",
                    crate::num::format_rational(mu)
                )));
            };
            let mut total = Q::zero();
            for (&a, p) in w {
                if !br.contains(&a) {
                    return Err(SolverError::InvalidGame(format!(
                        "weight on action {} outside the tied set at level {}",
                        game.actions[a],
                        crate::num::format_rational(mu)
                    )));
                }
                if p.is_negative() {
                    return Err(SolverError::InvalidGame(
                        "tie weights must be nonnegative".to_string(),
                    ));
                }
                row[a] = p.clone();
                total += p;
            }
            if !total.is_one() {
                return Err(SolverError::InvalidGame(format!(
                    "tie weights at level {} sum to {}",
                    crate::num::format_rational(mu),
                    crate::num::format_rational(&total)
                )));
            }
        }
        levels.insert(mu.clone(), row);
    }
    // Reject weights supplied at levels that do not need them or do not
    // exist.
    for mu in weights.keys() {
        let exists = (0..n).any(|m| &star.mu_star.beliefs[m] == mu);
        if !exists {
            return Err(SolverError::InvalidGame(format!(
                "weights supplied at level {} which is not a belief of any message",
                crate::num::format_rational(mu)
            )));
        }
        if best_response_set(game, mu).len() == 1 {
            return Err(SolverError::InvalidGame(format!(
                "weights supplied at level {} where the best response is unique",
                crate::num::format_rational(mu)
            )));
        }
    }
    let rho = ReceiverStrategy {
        rows: (0..n)
            .map(|m| levels[&star.mu_star.beliefs[m]].clone())
            .collect(),
    };
    let assessment = Assessment {
        sigma: star.sigma_star.clone(),
        rho,
        mu: star.mu_star.clone(),
    };
    debug_assert!(verify_pbe(game, &assessment).unwrap().pass());
    debug_assert!(verify_purifiable(game, &assessment, star).unwrap().pass());
    Ok(assessment)
}

/// One step of a purification trace.
#[derive(Debug, Clone)]
pub struct TracePoint {
    pub scale: f64,
    pub outcome: DisturbedOutcome,
}

#[derive(Debug, Clone)]
pub struct PurificationTrace {
    pub points: Vec<TracePoint>,
    /// Sup-norm movement of the response probabilities over the last two
    /// schedule points fell below 1e-6.
    pub cauchy: bool,
    /// The rationalized limit assessment.
    pub limit: Assessment,
    /// Whether the limit passes the exact PBE predicate ("converged"
    /// requires both flags).
    pub limit_pbe: CheckResult,
    pub limit_purifiable: CheckResult,
    pub converged: bool,
    /// Nongeneric games converge to family-dependent limits; the flag
    /// marks the limit as tied to this disturbance family.
    pub family_dependent: bool,
}

/// Follow a schedule of vanishing shock scales: solve each disturbed
/// game, then snap the final responses to exact rationals and verify the
/// limit assessment. `pattern` gives per-action scale multipliers; the
/// disturbance at step k has scales `pattern·schedule[k]`.
pub fn purification_trace(
    game: &EvidenceGame,
    family: ShockFamily,
    pattern: &[f64],
    schedule: &[f64],
    star: &StarSolution,
    seed: u64,
    samples: u64,
) -> Result<PurificationTrace, DisturbedError> {
    if schedule.len() < 3
        || schedule.windows(2).any(|w| w[0] <= w[1])
        || schedule.iter().any(|&s| s <= 0.0)
    {
        return Err(DisturbedError::ScheduleTooShort);
    }
    // Schedule points are independent; evaluate in parallel with one
    // stream per (seed, scale index) and assemble in order.
    use rayon::prelude::*;
    let points: Vec<TracePoint> = schedule
        .par_iter()
        .enumerate()
        .map(|(k, &scale)| {
            let eta = Disturbance {
                family,
                scales: pattern.iter().map(|&p| p * scale).collect(),
                seed: seed.wrapping_add(k as u64),
                samples,
            };
            solve_disturbed(game, &eta, star).map(|outcome| TracePoint { scale, outcome })
        })
        .collect::<Result<_, _>>()?;
    let last = &points[points.len() - 1].outcome;
    let prev = &points[points.len() - 2].outcome;
    let cauchy = last
        .rho
        .iter()
        .zip(&prev.rho)
        .all(|(a, b)| {
            a.probs
                .iter()
                .zip(&b.probs)
                .all(|(x, y)| (x - y).abs() < 1e-6)
        });
    // Rationalize the limit responses.
    let k = game.n_actions();
    let rho_rows: Vec<Vec<Q>> = last
        .rho
        .iter()
        .map(|r| {
            let mut row: Vec<Q> = r
                .probs
                .iter()
                .map(|&p| rationalize(p, 1_000_000).unwrap_or_else(Q::zero))
                .collect();
            // Repair rounding drift so each row is an exact distribution.
            let total: Q = row.iter().sum();
            if !total.is_one() && !total.is_zero() {
                let deficit = Q::one() - &total;
                let argmax = (0..k)
                    .max_by(|&a, &b| row[a].cmp(&row[b]))
                    .unwrap();
                row[argmax] += deficit;
            }
            row
        })
        .collect();
    let limit = Assessment {
        sigma: star.sigma_star.clone(),
        rho: ReceiverStrategy { rows: rho_rows },
        mu: star.mu_star.clone(),
    };
    let limit_pbe = verify_pbe(game, &limit)?;
    let limit_purifiable = verify_purifiable(game, &limit, star)?;
    let gen = genericity_check(game, star);
    Ok(PurificationTrace {
        cauchy,
        converged: cauchy && limit_pbe.pass(),
        family_dependent: !gen.generic,
        points,
        limit,
        limit_pbe,
        limit_purifiable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::num::{q, qi};
    use crate::star::solve_star;

    const PHI_M2: f64 = 0.02275013194817921;
    const PHI_M1: f64 = 0.15865525393145705;
    const PHI_M5: f64 = 2.866515718791939e-7;
    const PHI_M8: f64 = 6.220960574271784e-16;

    fn gaussian(game: &EvidenceGame, scale: f64) -> Disturbance {
        let mut scales = vec![0.0; game.n_actions()];
        *scales.last_mut().unwrap() = scale;
        Disturbance {
            family: ShockFamily::GaussianIid,
            scales,
            seed: 11,
            samples: 1,
        }
    }

    #[test]
    fn faa_disturbed() {
        let faa = fixtures::faa();
        let star = solve_star(&faa).unwrap();
        let out = solve_disturbed(&faa, &gaussian(&faa, 0.25), &star).unwrap();
        assert!(out.sigma.rows[1][0].is_one());
        assert!((out.rho[0].probs[1] - PHI_M2).abs() < 1e-12);
        assert!((out.rho[1].probs[1] - PHI_M8).abs() < 1e-27);
        let out = solve_disturbed(&faa, &gaussian(&faa, 0.5), &star).unwrap();
        assert!((out.rho[0].probs[1] - PHI_M1).abs() < 1e-12);
    }

    #[test]
    fn v1_disturbed() {
        let v1 = fixtures::v1_good_bad();
        let star = solve_star(&v1).unwrap();
        let out = solve_disturbed(&v1, &gaussian(&v1, 0.1), &star).unwrap();
        assert!((out.rho[0].probs[1] - PHI_M5).abs() < 1e-18);
    }

    #[test]
    fn genericity() {
        let faa = fixtures::faa();
        let star = solve_star(&faa).unwrap();
        assert!(genericity_check(&faa, &star).generic);

        let v2 = fixtures::v2_lenient();
        let star = solve_star(&v2).unwrap();
        let rep = genericity_check(&v2, &star);
        assert!(!rep.generic);
        assert_eq!(rep.ties, vec![(0, vec![0, 1])]);

        let v1 = fixtures::v1_good_bad();
        let star = solve_star(&v1).unwrap();
        assert!(genericity_check(&v1, &star).generic);
    }

    #[test]
    fn construct_purifiable_faa() {
        let faa = fixtures::faa();
        let star = solve_star(&faa).unwrap();
        let a = construct_purifiable(&faa, &star, &BTreeMap::new()).unwrap();
        assert_eq!(a, fixtures::faa_assessment(qi(1), qi(0), q(1, 2), qi(0)));
    }

    #[test]
    fn construct_purifiable_v2_weights() {
        let v2 = fixtures::v2_lenient();
        let star = solve_star(&v2).unwrap();
        for q_approve in [qi(0), q(3, 10), q(1, 2), qi(1)] {
            let mut weights = BTreeMap::new();
            weights.insert(
                q(1, 2),
                BTreeMap::from([(0usize, Q::one() - &q_approve), (1usize, q_approve.clone())]),
            );
            let a = construct_purifiable(&v2, &star, &weights).unwrap();
            assert_eq!(a.rho.rows[0][1], q_approve);
            assert!(verify_pbe(&v2, &a).unwrap().pass());
            assert!(verify_purifiable(&v2, &a, &star).unwrap().pass());
        }
        // Weight off the tied set.
        let mut bad = BTreeMap::new();
        bad.insert(qi(0), BTreeMap::from([(1usize, Q::one())]));
        assert!(construct_purifiable(&v2, &star, &bad).is_err());
        // Missing required level.
        assert!(construct_purifiable(&v2, &star, &BTreeMap::new()).is_err());
    }

    #[test]
    fn purification_trace_faa() {
        let faa = fixtures::faa();
        let star = solve_star(&faa).unwrap();
        let trace = purification_trace(
            &faa,
            ShockFamily::GaussianIid,
            &[0.0, 1.0],
            &[0.5, 0.25, 0.1, 0.01],
            &star,
            42,
            1,
        )
        .unwrap();
        assert!(trace.cauchy);
        assert!(trace.converged);
        assert!(!trace.family_dependent);
        let expected = fixtures::faa_assessment(qi(1), qi(0), q(1, 2), qi(0));
        assert_eq!(trace.limit, expected);
        assert!(trace.limit_purifiable.pass());
    }

    #[test]
    fn purification_trace_v2_threshold() {
        let v2 = fixtures::v2_lenient();
        let star = solve_star(&v2).unwrap();
        let trace = purification_trace(
            &v2,
            ShockFamily::GaussianIid,
            &[0.0, 1.0],
            &[0.5, 0.25, 0.1, 0.01],
            &star,
            42,
            1,
        )
        .unwrap();
        // The pooled belief sits exactly at the threshold: every scale
        // approves with probability 1/2 and the limit keeps q = 1/2.
        for p in &trace.points {
            assert_eq!(p.outcome.rho[0].probs[1], 0.5);
        }
        assert!(trace.converged);
        assert!(trace.family_dependent);
        assert_eq!(trace.limit.rho.rows[0][1], q(1, 2));
        assert!(trace.limit_purifiable.pass());
    }

    #[test]
    fn schedule_too_short() {
        let faa = fixtures::faa();
        let star = solve_star(&faa).unwrap();
        let r = purification_trace(
            &faa,
            ShockFamily::GaussianIid,
            &[0.0, 1.0],
            &[0.5, 0.25],
            &star,
            1,
            1,
        );
        assert!(matches!(r, Err(DisturbedError::ScheduleTooShort)));
    }
}
