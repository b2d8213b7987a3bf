//! Evidence games: the disclosure preorder, evidence distributions,
//! receiver payoffs, and exact belief arithmetic.
//!
//! An evidence game has two states (good/bad), a finite evidence set with a
//! reflexive-transitive feasibility relation (disclosing `m` is feasible
//! with evidence `e` iff `m ≼ e`), per-state evidence distributions, a
//! strictly increasing finite action set, and receiver payoffs with strictly
//! increasing differences. The sender's payoff is the receiver's action.

use std::collections::BTreeSet;
use std::fmt;

use num::{One, Signed, Zero};
use thiserror::Error;

use crate::num::Q;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GameError {
    #[error("unknown evidence identifier `{0}`")]
    UnknownEvidence(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid game: {0}")]
    InvalidGame(String),
}

/// Index of an evidence item in [`EvidenceSpace::items`].
pub type EvIdx = usize;
/// Index of an action in [`EvidenceGame::actions`].
pub type ActIdx = usize;

/// Finite evidence set with its disclosure-feasibility relation.
///
/// `feasible[m][e]` is true iff disclosing `m` is feasible when the sender
/// holds evidence `e` (`m ≼ e`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvidenceSpace {
    pub items: Vec<String>,
    pub feasible: Vec<Vec<bool>>,
}

impl EvidenceSpace {
    pub fn new(items: Vec<String>, feasible: Vec<Vec<bool>>) -> Self {
        Self { items, feasible }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Result<EvIdx, GameError> {
        self.items
            .iter()
            .position(|x| x == id)
            .ok_or_else(|| GameError::UnknownEvidence(id.to_string()))
    }

    /// `m ≼ e`: disclosing `m` is feasible with evidence `e`.
    pub fn leq(&self, m: EvIdx, e: EvIdx) -> bool {
        self.feasible[m][e]
    }

    /// Lower contour set `LC(e)`: everything the type `e` sender can disclose.
    pub fn lower_contour(&self, e: EvIdx) -> Vec<EvIdx> {
        (0..self.len()).filter(|&m| self.leq(m, e)).collect()
    }

    /// Upper contour set `UC(m)`: every type that can disclose `m`.
    pub fn upper_contour(&self, m: EvIdx) -> Vec<EvIdx> {
        (0..self.len()).filter(|&e| self.leq(m, e)).collect()
    }
}

/// The feasible disclosure set for `e`, by identifier (`LC(e)`).
///
/// Always contains `e` itself on a valid space.
pub fn feasible_set(space: &EvidenceSpace, e: &str) -> Result<BTreeSet<String>, GameError> {
    let ei = space.index_of(e)?;
    Ok(space
        .lower_contour(ei)
        .into_iter()
        .map(|m| space.items[m].clone())
        .collect())
}

/// A finite evidence game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvidenceGame {
    /// Prior probability of the good state, in (0,1).
    pub prior: Q,
    pub space: EvidenceSpace,
    /// Evidence distribution in the good state.
    pub f_good: Vec<Q>,
    /// Evidence distribution in the bad state.
    pub f_bad: Vec<Q>,
    /// Strictly increasing action values; the sender's payoff from an action
    /// is the action value itself.
    pub actions: Vec<Q>,
    /// Receiver payoff from each action in the good state.
    pub payoff_good: Vec<Q>,
    /// Receiver payoff from each action in the bad state.
    pub payoff_bad: Vec<Q>,
}

impl EvidenceGame {
    pub fn n_evidence(&self) -> usize {
        self.space.len()
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    /// Good-state mass weight `F_G(e)·π₀`.
    pub fn w_good(&self, e: EvIdx) -> Q {
        &self.f_good[e] * &self.prior
    }

    /// Bad-state mass weight `F_B(e)·(1−π₀)`.
    pub fn w_bad(&self, e: EvIdx) -> Q {
        &self.f_bad[e] * (Q::one() - &self.prior)
    }

    /// Receiver's expected payoff from action `a` at belief `mu`.
    pub fn receiver_payoff(&self, a: ActIdx, mu: &Q) -> Q {
        mu * &self.payoff_good[a] + (Q::one() - mu) * &self.payoff_bad[a]
    }

    pub fn action_index(&self, value: &Q) -> Result<ActIdx, GameError> {
        self.actions
            .iter()
            .position(|a| a == value)
            .ok_or_else(|| GameError::DimensionMismatch(format!("unknown action value {}", value)))
    }
}

/// One failed structural assumption, with the offending items.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub invariant: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.invariant, self.detail)
    }
}

/// Outcome of [`validate_game`]. Violations are data, not faults.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, invariant: &str, detail: String) {
        self.violations.push(Violation {
            invariant: invariant.to_string(),
            detail,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            write!(f, "ok")
        } else {
            for v in &self.violations {
                writeln!(f, "violation {}", v)?;
            }
            Ok(())
        }
    }
}

/// Check every maintained assumption of the model; each violation names the
/// failed invariant and the offending items.
pub fn validate_game(game: &EvidenceGame) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = game.n_evidence();
    let space = &game.space;

    if n == 0 {
        report.push("empty evidence set", "at least one evidence item is required".to_string());
        return report;
    }
    let mut seen = BTreeSet::new();
    for (i, id) in space.items.iter().enumerate() {
        if id.is_empty() {
            report.push("empty identifier", format!("item #{}", i));
        }
        if !seen.insert(id.clone()) {
            report.push("duplicate identifier", format!("`{}`", id));
        }
    }
    if space.feasible.len() != n || space.feasible.iter().any(|row| row.len() != n) {
        report.push(
            "relation shape",
            format!("feasibility matrix must be {n}x{n}"),
        );
        return report;
    }
    for e in 0..n {
        if !space.leq(e, e) {
            report.push("reflexivity", format!("`{}`", space.items[e]));
        }
    }
    for m in 0..n {
        for k in 0..n {
            for e in 0..n {
                if space.leq(m, k) && space.leq(k, e) && !space.leq(m, e) {
                    report.push(
                        "transitivity",
                        format!(
                            "`{}` ≼ `{}` ≼ `{}` but not `{}` ≼ `{}`",
                            space.items[m],
                            space.items[k],
                            space.items[e],
                            space.items[m],
                            space.items[e]
                        ),
                    );
                }
            }
        }
    }

    if game.prior <= Q::zero() || game.prior >= Q::one() {
        report.push("prior range", format!("π₀ = {} not in (0,1)", game.prior));
    }
    if game.f_good.len() != n || game.f_bad.len() != n {
        report.push("mass shape", "distribution length mismatch".to_string());
        return report;
    }
    for (name, f) in [("fG", &game.f_good), ("fB", &game.f_bad)] {
        for (e, mass) in f.iter().enumerate() {
            if mass.is_negative() {
                report.push(
                    "negative mass",
                    format!("{}({}) = {}", name, space.items[e], mass),
                );
            }
        }
        let total: Q = f.iter().sum();
        if !total.is_one() {
            report.push("mass normalization", format!("{} sums to {}", name, total));
        }
    }
    for e in 0..n {
        if (&game.f_good[e] + &game.f_bad[e]).is_zero() {
            report.push("zero-mass evidence", format!("`{}`", space.items[e]));
        }
    }

    let k = game.n_actions();
    if k == 0 {
        report.push("actions strictly increasing", "empty action set".to_string());
        return report;
    }
    if game.payoff_good.len() != k || game.payoff_bad.len() != k {
        report.push("payoff shape", "payoff length mismatch".to_string());
        return report;
    }
    for w in game.actions.windows(2) {
        if w[0] >= w[1] {
            report.push(
                "actions strictly increasing",
                format!("{} then {}", w[0], w[1]),
            );
        }
    }
    for i in 0..k.saturating_sub(1) {
        let d0 = &game.payoff_good[i] - &game.payoff_bad[i];
        let d1 = &game.payoff_good[i + 1] - &game.payoff_bad[i + 1];
        if d0 >= d1 {
            report.push(
                "increasing differences",
                format!(
                    "u_R(a,G)−u_R(a,B) is {} at a={} and {} at a={}",
                    d0,
                    game.actions[i],
                    d1,
                    game.actions[i + 1]
                ),
            );
        }
    }
    report
}

/// Face-value posterior `ν(m)`: the belief the receiver holds if he takes
/// the disclosed evidence as the sender's true evidence.
pub fn face_value_belief(game: &EvidenceGame, m: &str) -> Result<Q, GameError> {
    let mi = game.space.index_of(m)?;
    Ok(face_value_belief_idx(game, mi))
}

pub fn face_value_belief_idx(game: &EvidenceGame, m: EvIdx) -> Q {
    let wg = game.w_good(m);
    let wb = game.w_bad(m);
    let den = &wg + &wb;
    assert!(
        !den.is_zero(),
        "face value of zero-mass evidence (validation rejects this)"
    );
    wg / den
}

/// A behavioral sender strategy: `rows[e][m] = σ(m|e)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SenderStrategy {
    pub rows: Vec<Vec<Q>>,
}

impl SenderStrategy {
    /// The fully truthful strategy σ(e|e) = 1.
    pub fn truthful(n: usize) -> Self {
        let rows = (0..n)
            .map(|e| (0..n).map(|m| if m == e { Q::one() } else { Q::zero() }).collect())
            .collect();
        Self { rows }
    }

    pub fn validate(&self, space: &EvidenceSpace) -> Result<(), GameError> {
        let n = space.len();
        if self.rows.len() != n || self.rows.iter().any(|r| r.len() != n) {
            return Err(GameError::DimensionMismatch(format!(
                "sender strategy must be {n}x{n}"
            )));
        }
        for e in 0..n {
            let total: Q = self.rows[e].iter().sum();
            if !total.is_one() {
                return Err(GameError::InvalidGame(format!(
                    "σ(·|{}) sums to {}",
                    space.items[e], total
                )));
            }
            for m in 0..n {
                if self.rows[e][m].is_negative() {
                    return Err(GameError::InvalidGame(format!(
                        "σ({}|{}) negative",
                        space.items[m], space.items[e]
                    )));
                }
                if self.rows[e][m].is_positive() && !space.leq(m, e) {
                    return Err(GameError::InvalidGame(format!(
                        "σ({}|{}) > 0 but `{}` is not disclosable with `{}`",
                        space.items[m], space.items[e], space.items[m], space.items[e]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Support of σ(·|e).
    pub fn support(&self, e: EvIdx) -> Vec<EvIdx> {
        self.rows[e]
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_positive())
            .map(|(m, _)| m)
            .collect()
    }

    /// Total prior probability that message `m` is disclosed.
    pub fn reach_probability(&self, game: &EvidenceGame, m: EvIdx) -> Q {
        (0..game.n_evidence())
            .map(|e| &self.rows[e][m] * (game.w_good(e) + game.w_bad(e)))
            .sum()
    }
}

/// A receiver belief system `μ: E → [0,1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeliefSystem {
    pub beliefs: Vec<Q>,
}

impl BeliefSystem {
    pub fn validate(&self, space: &EvidenceSpace) -> Result<(), GameError> {
        if self.beliefs.len() != space.len() {
            return Err(GameError::DimensionMismatch(
                "belief system length mismatch".to_string(),
            ));
        }
        for (m, b) in self.beliefs.iter().enumerate() {
            if b < &Q::zero() || b > &Q::one() {
                return Err(GameError::InvalidGame(format!(
                    "μ({}) = {} outside [0,1]",
                    space.items[m], b
                )));
            }
        }
        Ok(())
    }
}

/// Bayes posterior of message `m` under strategy `sigma`, or `Unreached`
/// when the message has zero probability (the caller decides the off-path
/// belief).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Posterior {
    Reached(Q),
    Unreached,
}

impl Posterior {
    pub fn reached(&self) -> Option<&Q> {
        match self {
            Posterior::Reached(q) => Some(q),
            Posterior::Unreached => None,
        }
    }
}

pub fn posterior_from_strategy(
    game: &EvidenceGame,
    sigma: &SenderStrategy,
    m: &str,
) -> Result<Posterior, GameError> {
    let mi = game.space.index_of(m)?;
    Ok(posterior_from_strategy_idx(game, sigma, mi))
}

pub fn posterior_from_strategy_idx(
    game: &EvidenceGame,
    sigma: &SenderStrategy,
    m: EvIdx,
) -> Posterior {
    let mut num = Q::zero();
    let mut den = Q::zero();
    for e in game.space.upper_contour(m) {
        let s = &sigma.rows[e][m];
        if s.is_zero() {
            continue;
        }
        num += s * game.w_good(e);
        den += s * (game.w_good(e) + game.w_bad(e));
    }
    if den.is_zero() {
        Posterior::Unreached
    } else {
        Posterior::Reached(num / den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::num::{q, qi};

    #[test]
    fn faa_validates() {
        let game = fixtures::faa();
        assert!(validate_game(&game).ok());
    }

    #[test]
    fn decreasing_differences_flagged() {
        let mut game = fixtures::faa();
        // Differences become 0 then −1.
        game.payoff_good[1] = qi(-3);
        let report = validate_game(&game);
        assert!(!report.ok());
        assert!(report
            .violations
            .iter()
            .any(|v| v.invariant == "increasing differences"));
    }

    #[test]
    fn intransitive_relation_flagged() {
        let items = vec!["n".to_string(), "b".to_string(), "c".to_string()];
        // n ≼ b, b ≼ c, but not n ≼ c.
        let feasible = vec![
            vec![true, true, false],
            vec![false, true, true],
            vec![false, false, true],
        ];
        let space = EvidenceSpace::new(items, feasible);
        let game = EvidenceGame {
            prior: q(1, 2),
            space,
            f_good: vec![q(1, 3), q(1, 3), q(1, 3)],
            f_bad: vec![q(1, 3), q(1, 3), q(1, 3)],
            actions: vec![qi(0), qi(1)],
            payoff_good: vec![qi(0), qi(1)],
            payoff_bad: vec![qi(0), qi(-2)],
        };
        let report = validate_game(&game);
        assert!(report
            .violations
            .iter()
            .any(|v| v.invariant == "transitivity"));
    }

    #[test]
    fn feasible_sets_faa_and_v3() {
        let faa = fixtures::faa();
        let lc_b: Vec<_> = feasible_set(&faa.space, "b").unwrap().into_iter().collect();
        assert_eq!(lc_b, vec!["b".to_string(), "n".to_string()]);
        let lc_n: Vec<_> = feasible_set(&faa.space, "n").unwrap().into_iter().collect();
        assert_eq!(lc_n, vec!["n".to_string()]);
        let v3 = fixtures::v3_two_types();
        let lc_b1: Vec<_> = feasible_set(&v3.space, "b1").unwrap().into_iter().collect();
        assert_eq!(lc_b1, vec!["b1".to_string(), "n".to_string()]);
        assert!(feasible_set(&faa.space, "zzz").is_err());
    }

    #[test]
    fn face_values() {
        let faa = fixtures::faa();
        assert_eq!(face_value_belief(&faa, "n").unwrap(), q(3, 4));
        assert_eq!(face_value_belief(&faa, "b").unwrap(), qi(0));
        let v1 = fixtures::v1_good_bad();
        assert_eq!(face_value_belief(&v1, "b").unwrap(), q(3, 7));
    }

    #[test]
    fn posteriors_from_strategy() {
        let faa = fixtures::faa();
        let sigma_half = fixtures::faa_sender(q(1, 2));
        assert_eq!(
            posterior_from_strategy(&faa, &sigma_half, "n").unwrap(),
            Posterior::Reached(q(3, 5))
        );
        let sigma_all = fixtures::faa_sender(qi(1));
        assert_eq!(
            posterior_from_strategy(&faa, &sigma_all, "n").unwrap(),
            Posterior::Reached(q(1, 2))
        );
        assert_eq!(
            posterior_from_strategy(&faa, &sigma_all, "b").unwrap(),
            Posterior::Unreached
        );
        let truthful = fixtures::faa_sender(qi(0));
        assert_eq!(
            posterior_from_strategy(&faa, &truthful, "b").unwrap(),
            Posterior::Reached(qi(0))
        );
        assert_eq!(
            posterior_from_strategy(&faa, &truthful, "n").unwrap(),
            Posterior::Reached(q(3, 4))
        );
    }

    #[test]
    fn truthful_posterior_equals_face_value() {
        for game in fixtures::all() {
            let truthful = SenderStrategy::truthful(game.n_evidence());
            for m in 0..game.n_evidence() {
                match posterior_from_strategy_idx(&game, &truthful, m) {
                    Posterior::Reached(p) => assert_eq!(p, face_value_belief_idx(&game, m)),
                    Posterior::Unreached => panic!("truthful strategy reaches everything"),
                }
            }
        }
    }
}
