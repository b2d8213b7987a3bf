//! Equilibrium predicates: the ground truth every solver is tested
//! against. All comparisons are exact rational comparisons — a predicate
//! never uses tolerances, because the interesting cases sit exactly at
//! indifference points. Solvers that work in floats rationalize before
//! calling these.

use num::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::game::{
    face_value_belief_idx, posterior_from_strategy_idx, BeliefSystem, EvIdx, EvidenceGame,
    GameError, Posterior, SenderStrategy,
};
use crate::num::{format_rational, Q};
use crate::perturbed::Perturbation;
use crate::response::best_response_set;
use crate::star::{membership_violations, StarSolution};

/// A behavioral receiver strategy: `rows[m][a] = ρ(a|m)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceiverStrategy {
    pub rows: Vec<Vec<Q>>,
}

impl ReceiverStrategy {
    pub fn validate(&self, game: &EvidenceGame) -> Result<(), GameError> {
        if self.rows.len() != game.n_evidence()
            || self.rows.iter().any(|r| r.len() != game.n_actions())
        {
            return Err(GameError::DimensionMismatch(format!(
                "receiver strategy must be {}x{}",
                game.n_evidence(),
                game.n_actions()
            )));
        }
        for (m, row) in self.rows.iter().enumerate() {
            let total: Q = row.iter().sum();
            if !total.is_one() {
                return Err(GameError::InvalidGame(format!(
                    "ρ(·|{}) sums to {}",
                    game.space.items[m], total
                )));
            }
            if row.iter().any(|p| p.is_negative()) {
                return Err(GameError::InvalidGame(format!(
                    "ρ(·|{}) has a negative entry",
                    game.space.items[m]
                )));
            }
        }
        Ok(())
    }

    pub fn support(&self, m: EvIdx) -> Vec<usize> {
        self.rows[m]
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_positive())
            .map(|(a, _)| a)
            .collect()
    }
}

/// Expected action value `Σ_a a·ρ(a|m)` — the sender's payoff from
/// disclosing `m`.
pub fn message_value(game: &EvidenceGame, rho: &ReceiverStrategy, m: EvIdx) -> Q {
    (0..game.n_actions())
        .map(|a| &game.actions[a] * &rho.rows[m][a])
        .sum()
}

/// A full assessment: sender strategy, receiver strategy, belief system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assessment {
    pub sigma: SenderStrategy,
    pub rho: ReceiverStrategy,
    pub mu: BeliefSystem,
}

impl Assessment {
    pub fn validate(&self, game: &EvidenceGame) -> Result<(), GameError> {
        self.sigma.validate(&game.space)?;
        self.rho.validate(game)?;
        self.mu.validate(&game.space)?;
        Ok(())
    }
}

/// One failed equilibrium condition with its witness values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckViolation {
    pub condition: String,
    pub location: String,
    pub witness: String,
}

/// Result of a predicate: passes iff no condition failed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub violations: Vec<CheckViolation>,
}

impl CheckResult {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, condition: &str, location: String, witness: String) {
        self.violations.push(CheckViolation {
            condition: condition.to_string(),
            location,
            witness,
        });
    }

    pub fn merge(&mut self, other: CheckResult) {
        self.violations.extend(other.violations);
    }

    pub fn has(&self, condition: &str) -> bool {
        self.violations.iter().any(|v| v.condition == condition)
    }
}

impl std::fmt::Display for CheckResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.pass() {
            write!(f, "pass")
        } else {
            for v in &self.violations {
                writeln!(f, "fail {} at {}: {}", v.condition, v.location, v.witness)?;
            }
            Ok(())
        }
    }
}

/// Perfect Bayesian equilibrium: sender optimality, receiver optimality,
/// and Bayesian consistency on every reached message. Off-path beliefs are
/// unconstrained.
pub fn verify_pbe(game: &EvidenceGame, a: &Assessment) -> Result<CheckResult, GameError> {
    a.validate(game)?;
    let mut res = CheckResult::default();
    check_sender_optimality(game, a, &mut res);
    check_receiver_optimality(game, a, &mut res);
    check_bayes(game, a, false, &mut res);
    Ok(res)
}

fn check_sender_optimality(game: &EvidenceGame, a: &Assessment, res: &mut CheckResult) {
    let values: Vec<Q> = (0..game.n_evidence())
        .map(|m| message_value(game, &a.rho, m))
        .collect();
    for e in 0..game.n_evidence() {
        let lc = game.space.lower_contour(e);
        let best = lc.iter().map(|&m| &values[m]).max().unwrap().clone();
        for m in a.sigma.support(e) {
            if values[m] != best {
                res.push(
                    "sender optimality",
                    format!("σ({}|{})", game.space.items[m], game.space.items[e]),
                    format!(
                        "message value {} but the best feasible value is {}",
                        format_rational(&values[m]),
                        format_rational(&best)
                    ),
                );
            }
        }
    }
}

fn check_receiver_optimality(game: &EvidenceGame, a: &Assessment, res: &mut CheckResult) {
    for m in 0..game.n_evidence() {
        let br = best_response_set(game, &a.mu.beliefs[m]);
        for act in a.rho.support(m) {
            if !br.contains(&act) {
                res.push(
                    "receiver optimality",
                    format!("ρ({}|{})", game.actions[act], game.space.items[m]),
                    format!(
                        "belief {} requires support within {{{}}}",
                        format_rational(&a.mu.beliefs[m]),
                        br.iter()
                            .map(|&b| game.actions[b].to_string())
                            .collect::<Vec<_>>()
                            .join(", ")
                    ),
                );
            }
        }
    }
}

fn check_bayes(game: &EvidenceGame, a: &Assessment, require_all: bool, res: &mut CheckResult) {
    for m in 0..game.n_evidence() {
        match posterior_from_strategy_idx(game, &a.sigma, m) {
            Posterior::Reached(p) => {
                if p != a.mu.beliefs[m] {
                    res.push(
                        "Bayesian consistency",
                        format!("μ({})", game.space.items[m]),
                        format!(
                            "Bayes gives {} but the assessment has {}",
                            format_rational(&p),
                            format_rational(&a.mu.beliefs[m])
                        ),
                    );
                }
            }
            Posterior::Unreached if require_all => {
                res.push(
                    "Bayesian consistency",
                    format!("μ({})", game.space.items[m]),
                    "message unreached despite the truthful-disclosure floor".to_string(),
                );
            }
            Posterior::Unreached => {}
        }
    }
}

/// Truth-leaning equilibrium: a PBE where indifferent types disclose
/// truthfully and off-path messages are taken at face value.
pub fn verify_truth_leaning(game: &EvidenceGame, a: &Assessment) -> Result<CheckResult, GameError> {
    let mut res = verify_pbe(game, a)?;
    let values: Vec<Q> = (0..game.n_evidence())
        .map(|m| message_value(game, &a.rho, m))
        .collect();
    for e in 0..game.n_evidence() {
        let lc = game.space.lower_contour(e);
        let best = lc.iter().map(|&m| &values[m]).max().unwrap().clone();
        if values[e] == best && !a.sigma.rows[e][e].is_one() {
            res.push(
                "truth-leaning",
                format!("σ({0}|{0})", game.space.items[e]),
                format!(
                    "truthful disclosure is optimal (value {}) yet σ = {}",
                    format_rational(&best),
                    format_rational(&a.sigma.rows[e][e])
                ),
            );
        }
    }
    for m in 0..game.n_evidence() {
        if let Posterior::Unreached = posterior_from_strategy_idx(game, &a.sigma, m) {
            let nu = face_value_belief_idx(game, m);
            if a.mu.beliefs[m] != nu {
                res.push(
                    "off-path face value",
                    format!("μ({})", game.space.items[m]),
                    format!(
                        "face value is {} but the assessment has {}",
                        format_rational(&nu),
                        format_rational(&a.mu.beliefs[m])
                    ),
                );
            }
        }
    }
    Ok(res)
}

/// Purifiable equilibrium, by its characterization: σ in the universal
/// strategy set, beliefs equal to the universal belief system, receiver
/// support inside the best response at each belief, and identical receiver
/// behavior across messages that share a belief.
pub fn verify_purifiable(
    game: &EvidenceGame,
    a: &Assessment,
    star: &StarSolution,
) -> Result<CheckResult, GameError> {
    a.validate(game)?;
    if star.mu_star.beliefs.len() != game.n_evidence() {
        return Err(GameError::DimensionMismatch(
            "star solution does not match the game".to_string(),
        ));
    }
    let mut res = CheckResult::default();
    for v in membership_violations(game, star, &a.sigma) {
        res.violations.push(v);
    }
    for m in 0..game.n_evidence() {
        if a.mu.beliefs[m] != star.mu_star.beliefs[m] {
            res.push(
                "universal beliefs",
                format!("μ({})", game.space.items[m]),
                format!(
                    "μ* is {} but the assessment has {}",
                    format_rational(&star.mu_star.beliefs[m]),
                    format_rational(&a.mu.beliefs[m])
                ),
            );
        }
        let br = best_response_set(game, &star.mu_star.beliefs[m]);
        for act in a.rho.support(m) {
            if !br.contains(&act) {
                res.push(
                    "receiver optimality",
                    format!("ρ({}|{})", game.actions[act], game.space.items[m]),
                    format!(
                        "support must lie in the best response at μ* = {}",
                        format_rational(&star.mu_star.beliefs[m])
                    ),
                );
            }
        }
    }
    for m in 0..game.n_evidence() {
        for m2 in (m + 1)..game.n_evidence() {
            if star.mu_star.beliefs[m] == star.mu_star.beliefs[m2]
                && a.rho.rows[m] != a.rho.rows[m2]
            {
                res.push(
                    "equal-belief behavior",
                    format!("ρ(·|{}) vs ρ(·|{})", game.space.items[m], game.space.items[m2]),
                    "messages with equal μ* must get identical receiver behavior".to_string(),
                );
            }
        }
    }
    Ok(res)
}

/// Perfect Bayesian equilibrium of the perturbed game: the sender earns a
/// truth reward and must disclose truthfully with at least the floor
/// probability. Non-truth messages in the support must be optimal under
/// the rewarded payoff; truthful disclosure must be optimal whenever its
/// probability exceeds the floor (mass exactly at the floor may be
/// suboptimal truth).
pub fn verify_perturbed_pbe(
    game: &EvidenceGame,
    eps: &Perturbation,
    a: &Assessment,
) -> Result<CheckResult, GameError> {
    eps.validate(game)
        .map_err(|e| GameError::InvalidGame(e.to_string()))?;
    a.validate(game)?;
    let mut res = CheckResult::default();
    let values: Vec<Q> = (0..game.n_evidence())
        .map(|m| message_value(game, &a.rho, m))
        .collect();
    for e in 0..game.n_evidence() {
        let floor = &eps.floor[e];
        if &a.sigma.rows[e][e] < floor {
            res.push(
                "truth floor",
                format!("σ({0}|{0})", game.space.items[e]),
                format!(
                    "σ = {} below the floor {}",
                    format_rational(&a.sigma.rows[e][e]),
                    format_rational(floor)
                ),
            );
        }
        // Rewarded value of each feasible message for type e.
        let lc = game.space.lower_contour(e);
        let rewarded = |m: EvIdx| -> Q {
            if m == e {
                &values[m] + &eps.reward[e]
            } else {
                values[m].clone()
            }
        };
        let best = lc.iter().map(|&m| rewarded(m)).max().unwrap();
        for m in a.sigma.support(e) {
            if m == e {
                continue;
            }
            if rewarded(m) != best {
                res.push(
                    "sender optimality",
                    format!("σ({}|{})", game.space.items[m], game.space.items[e]),
                    format!(
                        "rewarded value {} but the best feasible value is {}",
                        format_rational(&rewarded(m)),
                        format_rational(&best)
                    ),
                );
            }
        }
        if &a.sigma.rows[e][e] > floor && rewarded(e) != best {
            res.push(
                "sender optimality",
                format!("σ({0}|{0})", game.space.items[e]),
                format!(
                    "truth mass {} exceeds the floor {} but rewarded truth value {} < best {}",
                    format_rational(&a.sigma.rows[e][e]),
                    format_rational(floor),
                    format_rational(&rewarded(e)),
                    format_rational(&best)
                ),
            );
        }
    }
    check_receiver_optimality(game, a, &mut res);
    check_bayes(game, a, true, &mut res);
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::num::{q, qi};
    use crate::perturbed::Perturbation;

    #[test]
    fn faa_pbe_examples() {
        let faa = fixtures::faa();
        let good = fixtures::faa_assessment(q(1, 2), qi(0), q(3, 5), qi(0));
        assert!(verify_pbe(&faa, &good).unwrap().pass());

        // p below 1/4 pushes the belief above the threshold.
        let bad = fixtures::faa_assessment(q(1, 8), qi(0), q(12, 17), qi(0));
        let res = verify_pbe(&faa, &bad).unwrap();
        assert!(!res.pass());
        assert!(res.has("receiver optimality"));

        // Bayes gives 1/2 at p = 1, not 3/5.
        let bad = fixtures::faa_assessment(qi(1), qi(0), q(3, 5), qi(0));
        let res = verify_pbe(&faa, &bad).unwrap();
        assert!(!res.pass());
        assert!(res.has("Bayesian consistency"));
    }

    #[test]
    fn truth_leaning_examples() {
        let v1 = fixtures::v1_good_bad();
        let a = fixtures::faa_assessment(qi(0), qi(0), q(3, 5), q(3, 7));
        assert!(verify_truth_leaning(&v1, &a).unwrap().pass());

        let faa = fixtures::faa();
        let a = fixtures::faa_assessment(q(1, 2), qi(0), q(3, 5), qi(0));
        let res = verify_truth_leaning(&faa, &a).unwrap();
        assert!(!res.pass());
        assert!(res.has("truth-leaning"));

        let a = fixtures::faa_assessment(qi(1), qi(0), q(1, 2), qi(0));
        let res = verify_truth_leaning(&faa, &a).unwrap();
        assert!(!res.pass());
        assert!(res.has("truth-leaning"));
    }

    #[test]
    fn perturbed_examples() {
        let faa = fixtures::faa();
        let eps = Perturbation::uniform_for(&faa, q(1, 10), q(1, 20));
        let good = fixtures::faa_assessment(q(1, 4), q(1, 10), q(2, 3), qi(0));
        assert!(verify_perturbed_pbe(&faa, &eps, &good).unwrap().pass());

        // Truth pays the reward while concealing pays 0, yet p > 0 beyond
        // the floor: sender optimality fails.
        let bad = fixtures::faa_assessment(q(1, 4), qi(0), q(2, 3), qi(0));
        let res = verify_perturbed_pbe(&faa, &eps, &bad).unwrap();
        assert!(!res.pass());
        assert!(res.has("sender optimality"));

        // Truth mass below the floor.
        let bad = fixtures::faa_assessment(q(99, 100), q(1, 10), q(2, 3), qi(0));
        let res = verify_perturbed_pbe(&faa, &eps, &bad).unwrap();
        assert!(!res.pass());
        assert!(res.has("truth floor"));
    }

    #[test]
    fn truth_leaning_implies_pbe_structure() {
        // A passing truth-leaning check never hides a PBE failure: the
        // violation list of verify_pbe is a subset by construction.
        let v1 = fixtures::v1_good_bad();
        let a = fixtures::faa_assessment(qi(0), qi(0), q(3, 5), q(3, 7));
        let tl = verify_truth_leaning(&v1, &a).unwrap();
        let pbe = verify_pbe(&v1, &a).unwrap();
        assert!(tl.pass());
        assert!(pbe.pass());
    }
}
