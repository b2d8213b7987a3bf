//! Perturbed games: the sender earns a reward for truthful disclosure and
//! must disclose truthfully with at least a floor probability. Weakly
//! truth-leaning equilibria are limits of perturbed-game equilibria along
//! vanishing perturbation paths; which limit is selected depends on the
//! ordering of the rewards along the path, so paths scale the base
//! perturbation componentwise and the path specification is part of every
//! reported result.

use num::{One, Signed, Zero};

use crate::check::{
    verify_pbe, verify_perturbed_pbe, verify_purifiable, verify_truth_leaning, Assessment,
    CheckResult,
};
use crate::disturbed::{construct_purifiable, genericity_check, uniform_tie_weights};
use crate::family::{CoordKeys, EquilibriumFamily};
use crate::game::{
    posterior_from_strategy_idx, validate_game, BeliefSystem, EvidenceGame, Posterior,
    SenderStrategy,
};
use crate::num::{q, rationalize, to_f64, Q};
use crate::response::best_response_set;
use crate::star::{find_truth_leaning, solve_star, SolverError, StarSolution, TruthLeaningFindings};
use crate::eq_solve;

/// Truth reward and minimum-truth floor per evidence item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Perturbation {
    pub reward: Vec<Q>,
    pub floor: Vec<Q>,
}

impl Perturbation {
    pub fn uniform_for(game: &EvidenceGame, reward: Q, floor: Q) -> Self {
        let n = game.n_evidence();
        Self {
            reward: vec![reward; n],
            floor: vec![floor; n],
        }
    }

    pub fn validate(&self, game: &EvidenceGame) -> Result<(), SolverError> {
        let n = game.n_evidence();
        if self.reward.len() != n || self.floor.len() != n {
            return Err(SolverError::InvalidGame(
                "perturbation length mismatch".to_string(),
            ));
        }
        if self.reward.iter().any(|r| !r.is_positive()) {
            return Err(SolverError::InvalidGame(
                "rewards must be strictly positive".to_string(),
            ));
        }
        if self
            .floor
            .iter()
            .any(|f| !f.is_positive() || f >= &Q::one())
        {
            return Err(SolverError::InvalidGame(
                "floors must lie in (0,1)".to_string(),
            ));
        }
        Ok(())
    }

    /// Componentwise scaling (preserves the reward ordering).
    pub fn scaled(&self, factor: &Q) -> Self {
        Self {
            reward: self.reward.iter().map(|r| r * factor).collect(),
            floor: self.floor.iter().map(|f| f * factor).collect(),
        }
    }
}

/// A vanishing perturbation path: `ε·γ^k` for k = 0..steps.
#[derive(Debug, Clone)]
pub struct HomotopyPath {
    pub base: Perturbation,
    pub factor: Q,
    pub steps: usize,
}

impl HomotopyPath {
    pub fn validate(&self, game: &EvidenceGame) -> Result<(), SolverError> {
        self.base.validate(game)?;
        if self.factor <= Q::zero() || self.factor >= Q::one() {
            return Err(SolverError::InvalidGame(
                "homotopy factor must lie in (0,1)".to_string(),
            ));
        }
        if self.steps < 3 {
            return Err(SolverError::InvalidGame(
                "homotopy path needs at least 3 steps".to_string(),
            ));
        }
        Ok(())
    }
}

/// All perfect Bayesian equilibria of the perturbed game, as families with
/// exact parameter ranges. Exhaustive for |E| ≤ 6, K ≤ 4.
pub fn solve_perturbed(
    game: &EvidenceGame,
    eps: &Perturbation,
) -> Result<Vec<EquilibriumFamily>, SolverError> {
    let report = validate_game(game);
    if !report.ok() {
        return Err(SolverError::InvalidGame(report.to_string()));
    }
    eps.validate(game)?;
    if game.n_evidence() > 6 || game.n_actions() > 4 {
        return Err(SolverError::RegimeExceeded(format!(
            "perturbed solve supports |E| ≤ 6 and K ≤ 4, got |E| = {}, K = {}",
            game.n_evidence(),
            game.n_actions()
        )));
    }
    let outcome = eq_solve::enumerate_equilibria(game, &eq_solve::SolveMode::Perturbed(eps.clone()));
    if outcome.families.is_empty() {
        return Err(SolverError::Defect(format!(
            "no perturbed equilibrium found ({} patterns refuted); \
             existence is guaranteed, so this is a solver defect",
            outcome.refuted.len()
        )));
    }
    debug_assert!(outcome.families.iter().all(|f| {
        verify_perturbed_pbe(game, eps, &f.witness(game))
            .map(|r| r.pass())
            .unwrap_or(false)
    }));
    Ok(outcome.families)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HomotopyVerdict {
    /// Successive selections became Cauchy and the rationalized limit is
    /// an exact PBE of the unperturbed game.
    Converged,
    /// Cauchy, but the snapped limit failed exact verification.
    LimitRejected,
    /// The selection kept moving through every step.
    Divergent,
}

#[derive(Debug, Clone)]
pub struct HomotopyStep {
    pub step: usize,
    pub scale: Q,
    pub selection: Assessment,
}

#[derive(Debug, Clone)]
pub struct HomotopyResult {
    pub trace: Vec<HomotopyStep>,
    pub verdict: HomotopyVerdict,
    pub limit: Option<Assessment>,
    pub limit_check: Option<CheckResult>,
}

/// Follow a vanishing perturbation path: solve each step, continue the
/// selection by nearest sup-norm match (lexicographic minimum at the
/// first step), and snap the limit to exact rationals once successive
/// selections differ by less than 1e-8.
pub fn homotopy_weakly_tl(
    game: &EvidenceGame,
    path: &HomotopyPath,
) -> Result<HomotopyResult, SolverError> {
    path.validate(game)?;
    let keys = CoordKeys::for_game(game);
    let tol = q(1, 100_000_000);
    let mut trace: Vec<HomotopyStep> = Vec::new();
    let mut prev_vec: Option<Vec<Q>> = None;
    let mut converged_at: Option<usize> = None;
    let mut scale = Q::one();
    for k in 0..path.steps {
        let eps_k = path.base.scaled(&scale);
        let fams = solve_perturbed(game, &eps_k)?;
        let selection = match &prev_vec {
            None => fams
                .iter()
                .map(|f| f.lex_min(game))
                .min_by(|a, b| keys.vector(a).cmp(&keys.vector(b)))
                .unwrap(),
            Some(pv) => {
                let best = fams
                    .iter()
                    .min_by(|a, b| a.distance_to(pv).cmp(&b.distance_to(pv)))
                    .unwrap();
                best.nearest(game, pv)
            }
        };
        let sel_vec = keys.vector(&selection);
        let dist = prev_vec.as_ref().map(|pv| {
            sel_vec
                .iter()
                .zip(pv)
                .map(|(a, b)| (a - b).abs())
                .max()
                .unwrap_or_else(Q::zero)
        });
        trace.push(HomotopyStep {
            step: k,
            scale: scale.clone(),
            selection,
        });
        if let Some(d) = dist {
            if d < tol {
                converged_at = Some(k);
                break;
            }
        }
        prev_vec = Some(sel_vec);
        scale *= &path.factor;
    }
    if converged_at.is_none() {
        return Ok(HomotopyResult {
            trace,
            verdict: HomotopyVerdict::Divergent,
            limit: None,
            limit_check: None,
        });
    }
    let last = trace.last().unwrap().selection.clone();
    let limit = snap_assessment(game, &last);
    match limit {
        Some(limit) => {
            let check = verify_pbe(game, &limit)
                .map_err(|e| SolverError::Defect(format!("limit malformed: {e}")))?;
            let verdict = if check.pass() {
                HomotopyVerdict::Converged
            } else {
                HomotopyVerdict::LimitRejected
            };
            Ok(HomotopyResult {
                trace,
                verdict,
                limit: Some(limit),
                limit_check: Some(check),
            })
        }
        None => Ok(HomotopyResult {
            trace,
            verdict: HomotopyVerdict::LimitRejected,
            limit: None,
            limit_check: None,
        }),
    }
}

/// Snap every strategy coordinate to denominator ≤ 10^6 and rebuild the
/// beliefs (Bayes on reached messages, the numeric limit elsewhere).
fn snap_assessment(game: &EvidenceGame, a: &Assessment) -> Option<Assessment> {
    let snap = |x: &Q| -> Option<Q> {
        if x.denom() <= &num::BigInt::from(1_000_000u64) {
            Some(x.clone())
        } else {
            rationalize(to_f64(x), 1_000_000)
        }
    };
    let mut sigma = a.sigma.clone();
    for row in sigma.rows.iter_mut() {
        for x in row.iter_mut() {
            *x = snap(x)?;
        }
    }
    let mut rho = a.rho.clone();
    for row in rho.rows.iter_mut() {
        for x in row.iter_mut() {
            *x = snap(x)?;
        }
    }
    let beliefs = (0..game.n_evidence())
        .map(|m| match posterior_from_strategy_idx(game, &sigma, m) {
            Posterior::Reached(p) => Some(p),
            Posterior::Unreached => snap(&a.mu.beliefs[m]),
        })
        .collect::<Option<Vec<Q>>>()?;
    Some(Assessment {
        sigma,
        rho,
        mu: BeliefSystem { beliefs },
    })
}

impl EquilibriumFamily {
    /// Nearest member (by sup norm over strategy coordinates) to a target
    /// vector; exact for dim ≤ 1, best-sample otherwise.
    pub fn nearest(&self, game: &EvidenceGame, target: &[Q]) -> Assessment {
        match self.dim() {
            0 => self.assessment(game, &[]),
            1 => {
                let mut best: Option<(Q, Q)> = None;
                let eval = |t: &Q| -> Q {
                    self.point_vector(std::slice::from_ref(t))
                        .iter()
                        .zip(target)
                        .map(|(a, b)| (a - b).abs())
                        .max()
                        .unwrap_or_else(Q::zero)
                };
                let (lo, hi) = &self.param_ranges[0];
                let clamp = |t: Q| -> Q {
                    let t = match lo {
                        Some((l, _)) if &t < l => l.clone(),
                        _ => t,
                    };
                    match hi {
                        Some((h, _)) if &t > h => h.clone(),
                        _ => t,
                    }
                };
                let mut candidates: Vec<Q> = vec![self.witness_params[0].clone()];
                if let Some((l, _)) = lo {
                    candidates.push(l.clone());
                }
                if let Some((h, _)) = hi {
                    candidates.push(h.clone());
                }
                let diffs: Vec<(Q, Q)> = self
                    .base
                    .iter()
                    .zip(&self.dirs[0])
                    .zip(target)
                    .map(|((b, d), g)| (b - g, d.clone()))
                    .collect();
                for i in 0..diffs.len() {
                    for j in (i + 1)..diffs.len() {
                        for (sa, sb) in [(1i64, 1i64), (1, -1)] {
                            let s = Q::from_integer((sa * sb).into());
                            let den = &diffs[i].1 - &s * &diffs[j].1;
                            if den.is_zero() {
                                continue;
                            }
                            candidates.push((&s * &diffs[j].0 - &diffs[i].0) / den);
                        }
                    }
                }
                for t in candidates {
                    let t = clamp(t);
                    let d = eval(&t);
                    match &best {
                        Some((bd, _)) if bd <= &d => {}
                        _ => best = Some((d, t)),
                    }
                }
                let (_, t) = best.unwrap();
                self.assessment(game, &[t])
            }
            _ => {
                let mut best: Option<(Q, Vec<Q>)> = None;
                for pt in self.sample_param_grid(&q(1, 16), 512) {
                    let d = self
                        .point_vector(&pt)
                        .iter()
                        .zip(target)
                        .map(|(a, b)| (a - b).abs())
                        .max()
                        .unwrap_or_else(Q::zero);
                    match &best {
                        Some((bd, _)) if bd <= &d => {}
                        _ => best = Some((d, pt)),
                    }
                }
                let (_, pt) = best.unwrap();
                self.assessment(game, &pt)
            }
        }
    }
}

/// Lift a purifiable truth-leaning equilibrium to a perturbed-game
/// equilibrium: truthful rows stay, non-truthful rows put the floor on
/// truth and scale the rest, the receiver strategy is unchanged, beliefs
/// follow Bayes. Errors report the binding smallness constraint and a
/// sufficient scaling of ε.
pub fn lift_witness(
    game: &EvidenceGame,
    star_sol: &StarSolution,
    a: &Assessment,
    eps: &Perturbation,
) -> Result<Assessment, SolverError> {
    let gen = genericity_check(game, star_sol);
    if !gen.generic {
        return Err(SolverError::InvalidGame(
            "genericity precondition fails".to_string(),
        ));
    }
    let tl = verify_truth_leaning(game, a).map_err(SolverError::Game)?;
    if !tl.pass() {
        return Err(SolverError::InvalidGame(
            "assessment is not a truth-leaning equilibrium".to_string(),
        ));
    }
    let purif = verify_purifiable(game, a, star_sol).map_err(SolverError::Game)?;
    if !purif.pass() {
        return Err(SolverError::InvalidGame(
            "assessment is not purifiable".to_string(),
        ));
    }
    eps.validate(game)?;
    match try_lift(game, a, eps) {
        Ok(lifted) => {
            let check = verify_perturbed_pbe(game, eps, &lifted).map_err(SolverError::Game)?;
            if !check.pass() {
                return Err(SolverError::Defect(format!(
                    "lifted assessment failed verification: {check}"
                )));
            }
            Ok(lifted)
        }
        Err(binding) => {
            // Find a sufficient componentwise scaling of ε by halving.
            let mut t = q(1, 2);
            for _ in 0..60 {
                if try_lift(game, a, &eps.scaled(&t)).is_ok() {
                    return Err(SolverError::InvalidGame(format!(
                        "epsilon too large: {binding}; scaling every component by {} suffices",
                        t
                    )));
                }
                t /= Q::from_integer(2.into());
            }
            Err(SolverError::InvalidGame(format!(
                "epsilon too large: {binding}"
            )))
        }
    }
}

/// The bare lift construction plus its smallness conditions; the error is
/// the binding constraint description.
fn try_lift(game: &EvidenceGame, a: &Assessment, eps: &Perturbation) -> Result<Assessment, String> {
    let n = game.n_evidence();
    let values: Vec<Q> = (0..n)
        .map(|m| crate::check::message_value(game, &a.rho, m))
        .collect();
    let mut sigma = SenderStrategy {
        rows: vec![vec![Q::zero(); n]; n],
    };
    for e in 0..n {
        if a.sigma.rows[e][e].is_one() {
            sigma.rows[e] = a.sigma.rows[e].clone();
        } else if a.sigma.rows[e][e].is_zero() {
            // Reward must stay below the strict disclosure gap.
            let best = game
                .space
                .lower_contour(e)
                .into_iter()
                .map(|m| values[m].clone())
                .max()
                .unwrap();
            let gap = &best - &values[e];
            if eps.reward[e] >= gap {
                return Err(format!(
                    "reward for `{}` is {} but the disclosure gap is {}",
                    game.space.items[e],
                    crate::num::format_rational(&eps.reward[e]),
                    crate::num::format_rational(&gap)
                ));
            }
            sigma.rows[e][e] = eps.floor[e].clone();
            let keep = Q::one() - &eps.floor[e];
            for m in 0..n {
                if m != e {
                    sigma.rows[e][m] = &a.sigma.rows[e][m] * &keep;
                }
            }
        } else {
            return Err(format!(
                "σ({0}|{0}) is interior, which purifiability rules out",
                game.space.items[e]
            ));
        }
    }
    // Beliefs by Bayes; every message is reached through its own floor.
    let beliefs: Vec<Q> = (0..n)
        .map(|m| match posterior_from_strategy_idx(game, &sigma, m) {
            Posterior::Reached(p) => p,
            Posterior::Unreached => crate::game::face_value_belief_idx(game, m),
        })
        .collect();
    // Beliefs must stay inside the constant-best-response neighborhood.
    for m in 0..n {
        let br_new = best_response_set(game, &beliefs[m]);
        let br_old = best_response_set(game, &a.mu.beliefs[m]);
        if br_new != br_old {
            return Err(format!(
                "belief at `{}` moved from {} to {} across a response boundary",
                game.space.items[m],
                crate::num::format_rational(&a.mu.beliefs[m]),
                crate::num::format_rational(&beliefs[m])
            ));
        }
    }
    Ok(Assessment {
        sigma,
        rho: a.rho.clone(),
        mu: BeliefSystem { beliefs },
    })
}

// ---------------------------------------------------------------------------
// Relations report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct PathOutcome {
    pub name: String,
    pub base: Perturbation,
    pub result: HomotopyResult,
}

#[derive(Debug, Clone)]
pub struct ImplicationWitness {
    pub description: String,
    pub purifiable: bool,
    pub conclusion_holds: bool,
}

#[derive(Debug, Clone)]
pub struct ImplicationReport {
    /// Vacuous when no computed equilibrium satisfies the hypothesis.
    pub witnesses: Vec<ImplicationWitness>,
    pub holds: bool,
}

/// Cross-check of the refinement relations on one game: the truth-leaning
/// set, the purifiable characterization, and the weakly truth-leaning
/// limits along three canonical reward paths, with both implication
/// directions evaluated on every computed equilibrium:
/// (i) weakly truth-leaning ∧ purifiable ⇒ truth-leaning;
/// (ii) (generic games) truth-leaning ∧ purifiable ⇒ weakly truth-leaning.
#[derive(Debug, Clone)]
pub struct RelationsReport {
    pub star: StarSolution,
    pub generic: bool,
    pub truth_leaning: TruthLeaningFindings,
    pub purifiable_representative: Assessment,
    pub paths: Vec<PathOutcome>,
    pub implication_weakly_purifiable_tl: ImplicationReport,
    pub implication_tl_purifiable_weakly: ImplicationReport,
}

/// The three canonical reward paths: equal, increasing, and decreasing in
/// the evidence-item order. Floors are half the smallest reward.
pub fn canonical_paths(game: &EvidenceGame) -> Vec<(String, Perturbation)> {
    let n = game.n_evidence() as i64;
    let c = q(1, 10);
    let mk = |weights: Vec<Q>| -> Perturbation {
        let reward: Vec<Q> = weights.iter().map(|w| w * &c).collect();
        let min_reward = reward.iter().min().unwrap().clone();
        Perturbation {
            floor: vec![min_reward / Q::from_integer(2.into()); reward.len()],
            reward,
        }
    };
    vec![
        (
            "equal-rewards".to_string(),
            mk((0..n).map(|_| Q::one()).collect()),
        ),
        (
            "increasing-rewards".to_string(),
            mk((0..n).map(|i| q(i + 1, n)).collect()),
        ),
        (
            "decreasing-rewards".to_string(),
            mk((0..n).map(|i| q(n - i, n)).collect()),
        ),
    ]
}

pub fn relations_report(game: &EvidenceGame) -> Result<RelationsReport, SolverError> {
    let star_sol = solve_star(game)?;
    let gen = genericity_check(game, &star_sol);
    let tl = find_truth_leaning(game)?;
    let weights = uniform_tie_weights(game, &star_sol);
    let purifiable_representative = construct_purifiable(game, &star_sol, &weights)?;

    // Independent canonical paths run in parallel; each homotopy itself
    // is sequential continuation.
    use rayon::prelude::*;
    let paths: Vec<PathOutcome> = canonical_paths(game)
        .into_par_iter()
        .map(|(name, base)| {
            let path = HomotopyPath {
                base: base.clone(),
                factor: q(1, 2),
                steps: 40,
            };
            homotopy_weakly_tl(game, &path).map(|result| PathOutcome { name, base, result })
        })
        .collect::<Result<_, _>>()?;

    // (i) every weakly truth-leaning limit that is purifiable must be
    // truth-leaning.
    let mut w1 = Vec::new();
    for p in &paths {
        let Some(limit) = &p.result.limit else { continue };
        if p.result.verdict != HomotopyVerdict::Converged {
            continue;
        }
        let purifiable = verify_purifiable(game, limit, &star_sol)
            .map_err(SolverError::Game)?
            .pass();
        let conclusion = if purifiable {
            verify_truth_leaning(game, limit)
                .map_err(SolverError::Game)?
                .pass()
        } else {
            true
        };
        w1.push(ImplicationWitness {
            description: format!("limit of path `{}`", p.name),
            purifiable,
            conclusion_holds: conclusion,
        });
    }
    let implication_1 = ImplicationReport {
        holds: w1.iter().all(|w| w.conclusion_holds),
        witnesses: w1,
    };

    // (ii) on generic games, every purifiable truth-leaning equilibrium
    // must be weakly truth-leaning: exhibit a converging path (one of the
    // canonical limits) or a lift witness.
    let mut w2 = Vec::new();
    if gen.generic {
        if let TruthLeaningFindings::Found(fams) = &tl {
            for (i, fam) in fams.iter().enumerate() {
                let witness = fam.witness(game);
                let purifiable = verify_purifiable(game, &witness, &star_sol)
                    .map_err(SolverError::Game)?
                    .pass();
                if !purifiable {
                    w2.push(ImplicationWitness {
                        description: format!("truth-leaning family #{i}"),
                        purifiable: false,
                        conclusion_holds: true,
                    });
                    continue;
                }
                let matches_path = paths.iter().any(|p| {
                    p.result
                        .limit
                        .as_ref()
                        .map(|l| l == &witness)
                        .unwrap_or(false)
                });
                let lifted = if matches_path {
                    true
                } else {
                    lift_with_shrinking(game, &star_sol, &witness).is_some()
                };
                w2.push(ImplicationWitness {
                    description: format!(
                        "truth-leaning family #{i} ({})",
                        if matches_path {
                            "equals a canonical path limit"
                        } else if lifted {
                            "lift construction succeeds"
                        } else {
                            "no converging path exhibited"
                        }
                    ),
                    purifiable: true,
                    conclusion_holds: lifted,
                });
            }
        }
    }
    let implication_2 = ImplicationReport {
        holds: w2.iter().all(|w| w.conclusion_holds),
        witnesses: w2,
    };

    Ok(RelationsReport {
        star: star_sol,
        generic: gen.generic,
        truth_leaning: tl,
        purifiable_representative,
        paths,
        implication_weakly_purifiable_tl: implication_1,
        implication_tl_purifiable_weakly: implication_2,
    })
}

/// Try the lift with geometrically shrinking ε until it succeeds.
pub fn lift_with_shrinking(
    game: &EvidenceGame,
    star_sol: &StarSolution,
    a: &Assessment,
) -> Option<Assessment> {
    let mut eps = Perturbation::uniform_for(game, q(1, 10), q(1, 20));
    for _ in 0..40 {
        if let Ok(lifted) = lift_witness(game, star_sol, a, &eps) {
            return Some(lifted);
        }
        eps = eps.scaled(&q(1, 2));
    }
    None
}
