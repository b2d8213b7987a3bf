//! Brute-force grid oracles for differential testing.
//!
//! The oracle scans sender mixing on a rational grid, receiver mixing on
//! the grid at tied beliefs only, and (for plain equilibrium checks)
//! off-path beliefs over grid witnesses, accepting every point where the
//! optimality conditions hold within the tolerance. It shares no code
//! with the solvers' pattern enumeration: beliefs come straight from
//! Bayes and optimality from direct payoff comparisons, so agreement is
//! evidence, not tautology.

use num::{One, Signed, Zero};
use rayon::prelude::*;

use crate::check::{
    verify_pbe, verify_perturbed_pbe, verify_truth_leaning, Assessment,
    ReceiverStrategy,
};
use crate::family::{BeliefCoord, CoordKeys, EquilibriumFamily};
use crate::game::{
    face_value_belief_idx, validate_game, BeliefSystem, EvIdx, EvidenceGame, SenderStrategy,
};
use crate::num::{format_rational, Q};
use crate::perturbed::Perturbation;
use crate::response::{best_response_set, indifference_thresholds};
use crate::star::SolverError;

/// Grid resolution and optimality slack for the oracle scan.
#[derive(Debug, Clone)]
pub struct OracleGrid {
    pub step: Q,
    pub tolerance: Q,
}

impl OracleGrid {
    pub fn exact(step: Q) -> Self {
        Self {
            step,
            tolerance: Q::zero(),
        }
    }

    fn validate(&self) -> Result<u64, SolverError> {
        if self.step <= Q::zero() || self.step > crate::num::q(1, 4) {
            return Err(SolverError::InvalidGame(
                "grid step must lie in (0, 1/4]".to_string(),
            ));
        }
        if self.tolerance.is_negative() {
            return Err(SolverError::InvalidGame(
                "tolerance must be nonnegative".to_string(),
            ));
        }
        let inv = Q::one() / &self.step;
        if !inv.denom().is_one() {
            return Err(SolverError::InvalidGame(
                "grid step must divide 1".to_string(),
            ));
        }
        inv.numer()
            .try_into()
            .map_err(|_| SolverError::InvalidGame("grid step too fine".to_string()))
    }
}

/// Which solution concept the oracle certifies.
#[derive(Debug, Clone)]
pub enum OracleMode {
    Pbe,
    TruthLeaning,
    Perturbed(Perturbation),
}

/// All grid assessments passing the ε-relaxed equilibrium conditions.
/// Exhaustive scan; restricted to |E| ≤ 3 and K ≤ 3.
pub fn oracle_pbe_grid(
    game: &EvidenceGame,
    grid: &OracleGrid,
    mode: &OracleMode,
) -> Result<Vec<Assessment>, SolverError> {
    let report = validate_game(game);
    if !report.ok() {
        return Err(SolverError::InvalidGame(report.to_string()));
    }
    if game.n_evidence() > 3 || game.n_actions() > 3 {
        return Err(SolverError::RegimeExceeded(format!(
            "oracle supports |E| ≤ 3 and K ≤ 3, got |E| = {}, K = {}",
            game.n_evidence(),
            game.n_actions()
        )));
    }
    if let OracleMode::Perturbed(eps) = mode {
        eps.validate(game)?;
    }
    let g = grid.validate()?;

    // Integer fast path when every quantity fits a small common
    // denominator (always the case for the fixture corpus and the random
    // differential games); otherwise the rational scan below.
    if grid.tolerance.is_zero() {
        if let Some(fast) = int_scan::try_scan(game, g, mode) {
            return Ok(fast);
        }
    }
    Ok(rational_scan(game, grid, mode, g))
}

/// The allocation-heavy but fully general scan; also the cross-check for
/// the integer fast path.
fn rational_scan(
    game: &EvidenceGame,
    grid: &OracleGrid,
    mode: &OracleMode,
    g: u64,
) -> Vec<Assessment> {
    let n = game.n_evidence();
    // Candidate rows per sender type.
    let rows_per_type: Vec<Vec<Vec<Q>>> = (0..n)
        .map(|e| {
            let lc = game.space.lower_contour(e);
            let mut rows = Vec::new();
            let mut counts = vec![0u64; lc.len()];
            compositions(g, lc.len(), &mut counts, &mut |c| {
                let mut row = vec![Q::zero(); n];
                for (i, &m) in lc.iter().enumerate() {
                    row[m] = Q::from_integer((c[i] as i64).into()) * &grid.step;
                }
                if let OracleMode::Perturbed(eps) = mode {
                    if row[e] < eps.floor[e] {
                        return;
                    }
                }
                rows.push(row);
            });
            rows
        })
        .collect();

    // Receiver candidates at a tied belief: grid mixes over the tied set.
    let tie_mixes = |tied: &[usize]| -> Vec<Vec<Q>> {
        let k = game.n_actions();
        let mut out = Vec::new();
        let mut counts = vec![0u64; tied.len()];
        compositions(g, tied.len(), &mut counts, &mut |c| {
            let mut row = vec![Q::zero(); k];
            for (i, &a) in tied.iter().enumerate() {
                row[a] = Q::from_integer((c[i] as i64).into()) * &grid.step;
            }
            out.push(row);
        });
        out
    };
    // Off-path candidates (plain equilibrium mode): receiver behaviors
    // supported by some grid belief witness, with the lexicographically
    // smallest witness recorded.
    let thresholds = indifference_thresholds(game);
    let offpath_candidates: Vec<(Vec<Q>, Q)> = {
        let mut witnesses: Vec<Q> = (0..=g)
            .map(|i| Q::from_integer((i as i64).into()) * &grid.step)
            .collect();
        witnesses.extend(thresholds.iter().map(|t| t.belief.clone()));
        witnesses.sort();
        witnesses.dedup();
        let mut out: Vec<(Vec<Q>, Q)> = Vec::new();
        for w in witnesses {
            let br = best_response_set(game, &w);
            let rows = if br.len() == 1 {
                let mut row = vec![Q::zero(); game.n_actions()];
                row[br[0]] = Q::one();
                vec![row]
            } else {
                tie_mixes(&br)
            };
            for row in rows {
                if !out.iter().any(|(r, _)| r == &row) {
                    out.push((row, w.clone()));
                }
            }
        }
        out
    };

    // Precompute per-row Bayes contributions and the belief classifier,
    // then scan sender combinations with incremental accumulation,
    // parallel over the type with the most rows.
    let contribs: Vec<Vec<RowContrib>> = (0..n)
        .map(|e| {
            rows_per_type[e]
                .iter()
                .map(|row| RowContrib {
                    terms: (0..n)
                        .filter(|&m| !row[m].is_zero())
                        .map(|m| {
                            (
                                m,
                                &row[m] * game.w_good(e),
                                &row[m] * (game.w_good(e) + game.w_bad(e)),
                            )
                        })
                        .collect(),
                })
                .collect()
        })
        .collect();
    let classifier = Classifier::for_game(game);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&e| std::cmp::Reverse(rows_per_type[e].len()));
    let outer = order[0];

    let results: Vec<Vec<Assessment>> = (0..rows_per_type[outer].len())
        .into_par_iter()
        .map(|first_idx| {
            let mut found = Vec::new();
            let mut good = vec![Q::zero(); n];
            let mut tot = vec![Q::zero(); n];
            let mut chosen: Vec<usize> = vec![0; n];
            contribs[outer][first_idx].apply(&mut good, &mut tot);
            chosen[outer] = first_idx;
            scan_rest(
                game,
                grid,
                mode,
                &rows_per_type,
                &contribs,
                &classifier,
                &tie_mixes,
                &offpath_candidates,
                &order,
                1,
                &mut chosen,
                &mut good,
                &mut tot,
                &mut found,
            );
            found
        })
        .collect();
    let mut all: Vec<Assessment> = results.into_iter().flatten().collect();
    all.sort_by(|a, b| {
        let keys = CoordKeys::for_game(game);
        keys.vector(a)
            .cmp(&keys.vector(b))
            .then(a.mu.beliefs.cmp(&b.mu.beliefs))
    });
    all
}

/// Sparse Bayes contribution of one sender row: (message, Δgood, Δtotal).
struct RowContrib {
    terms: Vec<(usize, Q, Q)>,
}

impl RowContrib {
    fn apply(&self, good: &mut [Q], tot: &mut [Q]) {
        for (m, dg, dt) in &self.terms {
            good[*m] += dg;
            tot[*m] += dt;
        }
    }

    fn unapply(&self, good: &mut [Q], tot: &mut [Q]) {
        for (m, dg, dt) in &self.terms {
            good[*m] -= dg;
            tot[*m] -= dt;
        }
    }
}

/// Precomputed best-response geometry: sorted tie thresholds and the
/// unique best response on each open region between them.
struct Classifier {
    thresholds: Vec<(Q, Vec<usize>)>,
    region_br: Vec<usize>,
}

enum BeliefClass {
    At(usize),
    Region(usize),
}

impl Classifier {
    fn for_game(game: &EvidenceGame) -> Self {
        let ts = indifference_thresholds(game);
        let thresholds: Vec<(Q, Vec<usize>)> =
            ts.iter().map(|t| (t.belief.clone(), t.tied.clone())).collect();
        let mut probes: Vec<Q> = Vec::new();
        if thresholds.is_empty() {
            probes.push(crate::num::q(1, 2));
        } else {
            probes.push(&thresholds[0].0 / Q::from_integer(2.into()));
            for w in thresholds.windows(2) {
                probes.push((&w[0].0 + &w[1].0) / Q::from_integer(2.into()));
            }
            probes.push((thresholds.last().unwrap().0.clone() + Q::one()) / Q::from_integer(2.into()));
        }
        let region_br = probes
            .iter()
            .map(|p| {
                let set = best_response_set(game, p);
                set[0]
            })
            .collect();
        Self {
            thresholds,
            region_br,
        }
    }

    /// Classify the belief good/tot (tot > 0) without dividing.
    fn classify(&self, good: &Q, tot: &Q) -> BeliefClass {
        for (i, (t, _)) in self.thresholds.iter().enumerate() {
            // good/tot vs t, cross-multiplied (tot > 0).
            let lhs = good.clone();
            let rhs = t * tot;
            match lhs.cmp(&rhs) {
                std::cmp::Ordering::Less => return BeliefClass::Region(i),
                std::cmp::Ordering::Equal => return BeliefClass::At(i),
                std::cmp::Ordering::Greater => {}
            }
        }
        BeliefClass::Region(self.thresholds.len())
    }
}

fn compositions(total: u64, parts: usize, counts: &mut Vec<u64>, f: &mut impl FnMut(&[u64])) {
    fn rec(total: u64, i: usize, counts: &mut Vec<u64>, f: &mut impl FnMut(&[u64])) {
        if i + 1 == counts.len() {
            counts[i] = total;
            f(counts);
            return;
        }
        for v in 0..=total {
            counts[i] = v;
            rec(total - v, i + 1, counts, f);
        }
    }
    if parts == 0 {
        return;
    }
    rec(total, 0, counts, f);
}

#[allow(clippy::too_many_arguments)]
fn scan_rest(
    game: &EvidenceGame,
    grid: &OracleGrid,
    mode: &OracleMode,
    rows_per_type: &[Vec<Vec<Q>>],
    contribs: &[Vec<RowContrib>],
    classifier: &Classifier,
    tie_mixes: &dyn Fn(&[usize]) -> Vec<Vec<Q>>,
    offpath: &[(Vec<Q>, Q)],
    order: &[usize],
    depth: usize,
    chosen: &mut Vec<usize>,
    good: &mut Vec<Q>,
    tot: &mut Vec<Q>,
    found: &mut Vec<Assessment>,
) {
    if depth == order.len() {
        classify(
            game, grid, mode, rows_per_type, classifier, tie_mixes, offpath, chosen, good, tot,
            found,
        );
        return;
    }
    let e = order[depth];
    for idx in 0..rows_per_type[e].len() {
        contribs[e][idx].apply(good, tot);
        chosen[e] = idx;
        scan_rest(
            game, grid, mode, rows_per_type, contribs, classifier, tie_mixes, offpath, order,
            depth + 1, chosen, good, tot, found,
        );
        contribs[e][idx].unapply(good, tot);
    }
}

/// Given a full sender-grid strategy (accumulated Bayes numerators), pick
/// receiver candidates per message and keep every combination passing the
/// mode's conditions.
#[allow(clippy::too_many_arguments)]
fn classify(
    game: &EvidenceGame,
    grid: &OracleGrid,
    mode: &OracleMode,
    rows_per_type: &[Vec<Vec<Q>>],
    classifier: &Classifier,
    tie_mixes: &dyn Fn(&[usize]) -> Vec<Vec<Q>>,
    offpath: &[(Vec<Q>, Q)],
    chosen: &[usize],
    good: &[Q],
    tot: &[Q],
    found: &mut Vec<Assessment>,
) {
    let n = game.n_evidence();
    let k = game.n_actions();
    let tol = &grid.tolerance;
    let exact = tol.is_zero();
    // Candidate receiver behaviors per message: (row, belief, value).
    struct Cand {
        row: Vec<Q>,
        belief: Q,
        value: Q,
    }
    let point_mass = |a: usize| -> Vec<Q> {
        let mut row = vec![Q::zero(); k];
        row[a] = Q::one();
        row
    };
    let with_values = |rows: Vec<Vec<Q>>, belief: &Q| -> Vec<Cand> {
        rows.into_iter()
            .map(|row| {
                let value = (0..k).map(|a| &game.actions[a] * &row[a]).sum();
                Cand {
                    row,
                    belief: belief.clone(),
                    value,
                }
            })
            .collect()
    };
    let mut candidates: Vec<Vec<Cand>> = Vec::with_capacity(n);
    for m in 0..n {
        if tot[m].is_positive() {
            let br = if exact {
                match classifier.classify(&good[m], &tot[m]) {
                    BeliefClass::Region(i) => vec![classifier.region_br[i]],
                    BeliefClass::At(i) => classifier.thresholds[i].1.clone(),
                }
            } else {
                best_relaxed(game, &(&good[m] / &tot[m]), tol)
            };
            let belief = &good[m] / &tot[m];
            if br.len() == 1 {
                candidates.push(vec![Cand {
                    row: point_mass(br[0]),
                    value: game.actions[br[0]].clone(),
                    belief,
                }]);
            } else {
                candidates.push(with_values(tie_mixes(&br), &belief));
            }
        } else {
            match mode {
                OracleMode::Perturbed(_) => {
                    // Floors keep everything reached; an unreached message
                    // means the combination is invalid.
                    return;
                }
                OracleMode::TruthLeaning => {
                    let nu = face_value_belief_idx(game, m);
                    let br = best_relaxed(game, &nu, tol);
                    if br.len() == 1 {
                        candidates.push(vec![Cand {
                            row: point_mass(br[0]),
                            value: game.actions[br[0]].clone(),
                            belief: nu,
                        }]);
                    } else {
                        candidates.push(with_values(tie_mixes(&br), &nu));
                    }
                }
                OracleMode::Pbe => {
                    candidates.push(
                        offpath
                            .iter()
                            .map(|(row, w)| {
                                let value = (0..k).map(|a| &game.actions[a] * &row[a]).sum();
                                Cand {
                                    row: row.clone(),
                                    belief: w.clone(),
                                    value,
                                }
                            })
                            .collect(),
                    );
                }
            }
        }
    }
    let sigma_rows: Vec<&Vec<Q>> = (0..n).map(|e| &rows_per_type[e][chosen[e]]).collect();
    // Cartesian over messages.
    let mut choice = vec![0usize; n];
    loop {
        let values: Vec<&Q> = (0..n).map(|m| &candidates[m][choice[m]].value).collect();
        if passes(game, mode, &sigma_rows, &values, tol) {
            found.push(Assessment {
                sigma: SenderStrategy {
                    rows: sigma_rows.iter().map(|r| (*r).clone()).collect(),
                },
                rho: ReceiverStrategy {
                    rows: (0..n).map(|m| candidates[m][choice[m]].row.clone()).collect(),
                },
                mu: BeliefSystem {
                    beliefs: (0..n)
                        .map(|m| candidates[m][choice[m]].belief.clone())
                        .collect(),
                },
            });
        }
        // Odometer.
        let mut slot = 0;
        loop {
            if slot == n {
                return;
            }
            choice[slot] += 1;
            if choice[slot] < candidates[slot].len() {
                break;
            }
            choice[slot] = 0;
            slot += 1;
        }
    }
}

fn best_relaxed(game: &EvidenceGame, mu: &Q, tol: &Q) -> Vec<usize> {
    if tol.is_zero() {
        return best_response_set(game, mu);
    }
    let vals: Vec<Q> = (0..game.n_actions())
        .map(|a| game.receiver_payoff(a, mu))
        .collect();
    let best = vals.iter().max().unwrap().clone();
    (0..game.n_actions())
        .filter(|&a| &best - &vals[a] <= *tol)
        .collect()
}

fn passes(
    game: &EvidenceGame,
    mode: &OracleMode,
    sigma_rows: &[&Vec<Q>],
    values: &[&Q],
    tol: &Q,
) -> bool {
    let n = game.n_evidence();
    let exact = tol.is_zero();
    match mode {
        OracleMode::Pbe | OracleMode::TruthLeaning => {
            for e in 0..n {
                let lc = game.space.lower_contour(e);
                let best = lc.iter().map(|&m| values[m]).max().unwrap();
                for (m, p) in sigma_rows[e].iter().enumerate() {
                    if p.is_positive() && values[m] != best && (exact || best - values[m] > *tol) {
                        return false;
                    }
                }
                if matches!(mode, OracleMode::TruthLeaning)
                    && best - values[e] <= *tol
                    && !sigma_rows[e][e].is_one()
                {
                    return false;
                }
            }
            true
        }
        OracleMode::Perturbed(eps) => {
            for e in 0..n {
                if sigma_rows[e][e] < eps.floor[e] {
                    return false;
                }
                let lc = game.space.lower_contour(e);
                let rewarded = |m: EvIdx| -> Q {
                    if m == e {
                        values[m] + &eps.reward[e]
                    } else {
                        values[m].clone()
                    }
                };
                let best = lc.iter().map(|&m| rewarded(m)).max().unwrap();
                for (m, p) in sigma_rows[e].iter().enumerate() {
                    if p.is_positive() && m != e && &best - rewarded(m) > *tol {
                        return false;
                    }
                }
                if sigma_rows[e][e] > eps.floor[e] && &best - rewarded(e) > *tol {
                    return false;
                }
            }
            // Receiver optimality is enforced by construction of the
            // candidates; beliefs by Bayes likewise.
            true
        }
    }
}

// ---------------------------------------------------------------------------
// Comparison of solver output against the oracle
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiscrepancyKind {
    /// An oracle-certified grid equilibrium lies farther than one grid
    /// step (sup norm over strategy coordinates) from every solver family.
    OracleNotCovered,
    /// A grid-rounded member of a solver family passes the exact predicate
    /// but is missing from the oracle's list.
    SolverNotCertified,
    /// A solver family's own representative fails the exact predicate.
    SolverStray,
}

#[derive(Debug, Clone)]
pub struct Discrepancy {
    pub kind: DiscrepancyKind,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct DiscrepancyReport {
    pub discrepancies: Vec<Discrepancy>,
}

impl DiscrepancyReport {
    pub fn pass(&self) -> bool {
        self.discrepancies.is_empty()
    }
}

/// Wrap a single assessment as a zero-dimensional family so point outputs
/// can run through [`oracle_compare`].
pub fn family_from_point(game: &EvidenceGame, a: &Assessment) -> EquilibriumFamily {
    let keys = CoordKeys::for_game(game);
    EquilibriumFamily {
        base: keys.vector(a),
        dirs: Vec::new(),
        cons: Vec::new(),
        witness_params: Vec::new(),
        param_ranges: Vec::new(),
        beliefs: a
            .mu
            .beliefs
            .iter()
            .map(|b| BeliefCoord::Const(b.clone()))
            .collect(),
        keys,
    }
}

/// Differential check: every oracle point within one grid step of a
/// solver family, every grid-rounded solver member certified by the
/// oracle, and every family self-verified. Empty discrepancy list on
/// pass.
pub fn oracle_compare(
    game: &EvidenceGame,
    families: &[EquilibriumFamily],
    mode: &OracleMode,
    grid: &OracleGrid,
) -> Result<DiscrepancyReport, SolverError> {
    let oracle = oracle_pbe_grid(game, grid, mode)?;
    let keys = CoordKeys::for_game(game);
    let mut report = DiscrepancyReport::default();
    let predicate = |a: &Assessment| -> bool {
        match mode {
            OracleMode::Pbe => verify_pbe(game, a).map(|r| r.pass()).unwrap_or(false),
            OracleMode::TruthLeaning => verify_truth_leaning(game, a)
                .map(|r| r.pass())
                .unwrap_or(false),
            OracleMode::Perturbed(eps) => verify_perturbed_pbe(game, eps, a)
                .map(|r| r.pass())
                .unwrap_or(false),
        }
    };

    for point in &oracle {
        let v = keys.vector(point);
        let covered = families.iter().any(|f| f.within_box(&v, &grid.step));
        if !covered {
            report.discrepancies.push(Discrepancy {
                kind: DiscrepancyKind::OracleNotCovered,
                detail: format!(
                    "oracle point with σ = {:?} not within one step of any solver family",
                    point
                        .sigma
                        .rows
                        .iter()
                        .map(|r| r.iter().map(format_rational).collect::<Vec<_>>())
                        .collect::<Vec<_>>()
                ),
            });
        }
    }

    for (i, fam) in families.iter().enumerate() {
        let witness = fam.witness(game);
        if !predicate(&witness) {
            report.discrepancies.push(Discrepancy {
                kind: DiscrepancyKind::SolverStray,
                detail: format!("family #{i} witness fails the exact predicate"),
            });
            continue;
        }
        for params in fam.sample_param_grid(&grid.step, 256) {
            let member = fam.assessment(game, &params);
            let Some(rounded) = grid_round(game, &member, &grid.step) else {
                continue;
            };
            if !predicate(&rounded) {
                continue;
            }
            let in_oracle = oracle.iter().any(|p| {
                p.sigma == rounded.sigma
                    && p.rho == rounded.rho
                    && reached_beliefs_match(game, p, &rounded)
            });
            if !in_oracle {
                report.discrepancies.push(Discrepancy {
                    kind: DiscrepancyKind::SolverNotCertified,
                    detail: format!(
                        "family #{i}: grid member passing the predicate is absent from the oracle"
                    ),
                });
            }
        }
    }
    Ok(report)
}

fn reached_beliefs_match(game: &EvidenceGame, a: &Assessment, b: &Assessment) -> bool {
    (0..game.n_evidence()).all(|m| {
        match crate::game::posterior_from_strategy_idx(game, &a.sigma, m) {
            crate::game::Posterior::Reached(_) => a.mu.beliefs[m] == b.mu.beliefs[m],
            crate::game::Posterior::Unreached => true,
        }
    })
}

/// Round every strategy coordinate to the nearest grid multiple, repairing
/// each row's sum through its largest entry; beliefs are rebuilt by Bayes
/// (off-path values kept). Returns `None` when the rounding leaves a
/// malformed strategy.
fn grid_round(game: &EvidenceGame, a: &Assessment, step: &Q) -> Option<Assessment> {
    let round_row = |row: &[Q]| -> Option<Vec<Q>> {
        let mut out: Vec<Q> = row
            .iter()
            .map(|x| (x / step).round() * step)
            .collect();
        let total: Q = out.iter().sum();
        if !total.is_one() {
            let deficit = Q::one() - &total;
            let imax = (0..out.len()).max_by(|&i, &j| out[i].cmp(&out[j]))?;
            out[imax] += deficit;
        }
        if out.iter().any(|x| x.is_negative()) {
            return None;
        }
        Some(out)
    };
    let sigma = SenderStrategy {
        rows: a
            .sigma
            .rows
            .iter()
            .map(|r| round_row(r))
            .collect::<Option<Vec<_>>>()?,
    };
    let rho = ReceiverStrategy {
        rows: a
            .rho
            .rows
            .iter()
            .map(|r| round_row(r))
            .collect::<Option<Vec<_>>>()?,
    };
    let beliefs = (0..game.n_evidence())
        .map(|m| match crate::game::posterior_from_strategy_idx(game, &sigma, m) {
            crate::game::Posterior::Reached(p) => p,
            crate::game::Posterior::Unreached => a.mu.beliefs[m].clone(),
        })
        .collect();
    Some(Assessment {
        sigma,
        rho,
        mu: BeliefSystem { beliefs },
    })
}

/// Exact integer scan: every quantity is scaled onto a common integer
/// denominator, so the per-combination work is i128 arithmetic with no
/// allocation. Returns `None` when the game's rationals do not fit safe
/// bounds, in which case the caller runs the rational scan instead. Both
/// paths implement the same direct definition; a test cross-checks them.
mod int_scan {
    use super::*;
    use num::integer::lcm;
    use num::{BigInt, ToPrimitive};

    const BOUND: i128 = 1 << 44;

    struct MixCand {
        /// Grid counts per tied action.
        counts: Vec<u64>,
        /// Value × AV × g.
        val: i128,
    }

    #[derive(Clone, Copy)]
    enum Cand {
        /// Point mass on an action.
        Point(usize),
        /// Mix over `tied_sets[set].0` with weights `mixes[set][mix]`.
        Mix(usize, usize),
        /// Plain-equilibrium off-path candidate index.
        OffPath(usize),
    }

    struct OffPathCand {
        row: Vec<Q>,
        witness: Q,
        val: i128,
    }

    struct Ctx<'g> {
        game: &'g EvidenceGame,
        n: usize,
        g: i128,
        grid_step: Q,
        /// Weights × L.
        wg: Vec<i128>,
        wt: Vec<i128>,
        /// Thresholds as integer fractions with their tie-set index.
        thresholds: Vec<(i128, i128, usize)>,
        region_br: Vec<usize>,
        tied_sets: Vec<Vec<usize>>,
        mixes: Vec<Vec<MixCand>>,
        /// Action values × AV.
        av: Vec<i128>,
        /// Rewards × AV × g (perturbed mode).
        reward: Vec<i128>,
        /// Floors as fractions for `count·fd ≥ fn·g`.
        floor: Vec<(i128, i128)>,
        /// Off-path candidates (plain mode) / face-value candidates (TL).
        offpath: Vec<OffPathCand>,
        unreached_cands: Vec<Vec<Cand>>,
        unreached_beliefs: Vec<Q>,
        lc: Vec<Vec<usize>>,
        mode_tl: bool,
        mode_perturbed: bool,
    }

    fn to_i128(x: &BigInt) -> Option<i128> {
        let v = x.to_i128()?;
        (v.abs() < BOUND).then_some(v)
    }

    fn frac_i128(x: &Q) -> Option<(i128, i128)> {
        Some((to_i128(x.numer())?, to_i128(x.denom())?))
    }

    pub fn try_scan(game: &EvidenceGame, g: u64, mode: &OracleMode) -> Option<Vec<Assessment>> {
        let n = game.n_evidence();
        let k = game.n_actions();
        if g > 1 << 20 {
            return None;
        }
        // Common denominator for the prior-weighted masses.
        let mut l = BigInt::from(1);
        for e in 0..n {
            l = lcm(l.clone(), game.w_good(e).denom().clone());
            l = lcm(l.clone(), game.w_bad(e).denom().clone());
        }
        let lq = Q::from_integer(l.clone());
        let wg: Vec<i128> = (0..n)
            .map(|e| to_i128((game.w_good(e) * &lq).numer()))
            .collect::<Option<_>>()?;
        let wt: Vec<i128> = (0..n)
            .map(|e| to_i128(((game.w_good(e) + game.w_bad(e)) * &lq).numer()))
            .collect::<Option<_>>()?;
        // Action/reward common denominator.
        let mut avd = BigInt::from(1);
        for a in &game.actions {
            avd = lcm(avd.clone(), a.denom().clone());
        }
        if let OracleMode::Perturbed(eps) = mode {
            for r in &eps.reward {
                avd = lcm(avd.clone(), r.denom().clone());
            }
        }
        let avq = Q::from_integer(avd.clone());
        let av: Vec<i128> = game
            .actions
            .iter()
            .map(|a| to_i128((a * &avq).numer()))
            .collect::<Option<_>>()?;
        let (reward, floor) = match mode {
            OracleMode::Perturbed(eps) => {
                let reward: Vec<i128> = eps
                    .reward
                    .iter()
                    .map(|r| {
                        let scaled = r * &avq * Q::from_integer(g.into());
                        to_i128(scaled.numer()).filter(|_| scaled.denom().to_i128() == Some(1))
                    })
                    .collect::<Option<_>>()?;
                let floor: Vec<(i128, i128)> = eps
                    .floor
                    .iter()
                    .map(frac_i128)
                    .collect::<Option<_>>()?;
                (reward, floor)
            }
            _ => (vec![0; n], vec![(0, 1); n]),
        };
        // Threshold geometry.
        let base = Classifier::for_game(game);
        let mut tied_sets: Vec<Vec<usize>> = Vec::new();
        let mut thresholds = Vec::new();
        for (t, tied) in &base.thresholds {
            let (tn, td) = frac_i128(t)?;
            let set = match tied_sets.iter().position(|s| s == tied) {
                Some(i) => i,
                None => {
                    tied_sets.push(tied.clone());
                    tied_sets.len() - 1
                }
            };
            thresholds.push((tn, td, set));
        }
        // Grid mixes per tied set, with integer values.
        let gi = g as i128;
        let mixes: Vec<Vec<MixCand>> = tied_sets
            .iter()
            .map(|tied| {
                let mut out = Vec::new();
                let mut counts = vec![0u64; tied.len()];
                compositions(g, tied.len(), &mut counts, &mut |c| {
                    let val = tied
                        .iter()
                        .zip(c)
                        .map(|(&a, &j)| av[a] * j as i128)
                        .sum();
                    out.push(MixCand {
                        counts: c.to_vec(),
                        val,
                    });
                });
                out
            })
            .collect();
        let grid_step = Q::one() / Q::from_integer(g.into());
        // Off-path candidates for the plain mode; face-value candidates
        // for truth-leaning.
        let mut offpath = Vec::new();
        if matches!(mode, OracleMode::Pbe) {
            let mut witnesses: Vec<Q> = (0..=g)
                .map(|i| Q::from_integer(i.into()) * &grid_step)
                .collect();
            witnesses.extend(base.thresholds.iter().map(|(t, _)| t.clone()));
            witnesses.sort();
            witnesses.dedup();
            for w in witnesses {
                let br = best_response_set(game, &w);
                let rows: Vec<Vec<Q>> = if br.len() == 1 {
                    let mut row = vec![Q::zero(); k];
                    row[br[0]] = Q::one();
                    vec![row]
                } else {
                    let mut out = Vec::new();
                    let mut counts = vec![0u64; br.len()];
                    compositions(g, br.len(), &mut counts, &mut |c| {
                        let mut row = vec![Q::zero(); k];
                        for (i, &a) in br.iter().enumerate() {
                            row[a] = Q::from_integer((c[i] as i64).into()) * &grid_step;
                        }
                        out.push(row);
                    });
                    out
                };
                for row in rows {
                    if offpath.iter().any(|o: &OffPathCand| o.row == row) {
                        continue;
                    }
                    let val = (0..k)
                        .map(|a| to_i128((&row[a] * &game.actions[a] * &avq * Q::from_integer(g.into())).numer()))
                        .sum::<Option<i128>>()?;
                    offpath.push(OffPathCand {
                        row,
                        witness: w.clone(),
                        val,
                    });
                }
            }
        }
        // Per-message candidates when the message is unreached (TL mode).
        let mut unreached_cands: Vec<Vec<Cand>> = (0..n).map(|_| Vec::new()).collect();
        let mut unreached_beliefs: Vec<Q> = vec![Q::zero(); n];
        if matches!(mode, OracleMode::TruthLeaning) {
            for m in 0..n {
                let nu_num = wg[m];
                let nu_den = wt[m];
                unreached_beliefs[m] = Q::new(BigInt::from(nu_num), BigInt::from(nu_den));
                let class = classify_int(&thresholds, nu_num, nu_den);
                unreached_cands[m] = expand_class(&base, &mixes, class);
            }
        }
        let ctx = Ctx {
            game,
            n,
            g: gi,
            grid_step,
            wg,
            wt,
            thresholds,
            region_br: base.region_br.clone(),
            tied_sets,
            mixes,
            av,
            reward,
            floor,
            offpath,
            unreached_cands,
            unreached_beliefs,
            lc: (0..n).map(|e| game.space.lower_contour(e)).collect(),
            mode_tl: matches!(mode, OracleMode::TruthLeaning),
            mode_perturbed: matches!(mode, OracleMode::Perturbed(_)),
        };

        // Candidate count rows per type.
        let rows_per_type: Vec<Vec<Vec<u64>>> = (0..n)
            .map(|e| {
                let lce = &ctx.lc[e];
                let mut rows = Vec::new();
                let mut counts = vec![0u64; lce.len()];
                compositions(g, lce.len(), &mut counts, &mut |c| {
                    let mut full = vec![0u64; n];
                    for (i, &m) in lce.iter().enumerate() {
                        full[m] = c[i];
                    }
                    if ctx.mode_perturbed {
                        let (fnum, fden) = ctx.floor[e];
                        if (full[e] as i128) * fden < fnum * ctx.g {
                            return;
                        }
                    }
                    rows.push(full);
                });
                rows
            })
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&e| std::cmp::Reverse(rows_per_type[e].len()));
        let outer = order[0];

        let results: Vec<Vec<Assessment>> = (0..rows_per_type[outer].len())
            .into_par_iter()
            .map(|first_idx| {
                let mut found = Vec::new();
                let mut good = vec![0i128; n];
                let mut tot = vec![0i128; n];
                let mut chosen = vec![0usize; n];
                apply(&ctx, outer, &rows_per_type[outer][first_idx], 1, &mut good, &mut tot);
                chosen[outer] = first_idx;
                rec(&ctx, &rows_per_type, &order, 1, &mut chosen, &mut good, &mut tot, &mut found);
                found
            })
            .collect();
        let mut all: Vec<Assessment> = results.into_iter().flatten().collect();
        let keys = CoordKeys::for_game(game);
        all.sort_by(|a, b| {
            keys.vector(a)
                .cmp(&keys.vector(b))
                .then(a.mu.beliefs.cmp(&b.mu.beliefs))
        });
        Some(all)
    }

    fn apply(ctx: &Ctx, e: usize, row: &[u64], sign: i128, good: &mut [i128], tot: &mut [i128]) {
        for m in 0..ctx.n {
            if row[m] > 0 {
                good[m] += sign * row[m] as i128 * ctx.wg[e];
                tot[m] += sign * row[m] as i128 * ctx.wt[e];
            }
        }
    }

    enum Class {
        Region(usize),
        At(usize),
    }

    fn classify_int(thresholds: &[(i128, i128, usize)], num: i128, den: i128) -> Class {
        for (i, (tn, td, _)) in thresholds.iter().enumerate() {
            match (num * td).cmp(&(tn * den)) {
                std::cmp::Ordering::Less => return Class::Region(i),
                std::cmp::Ordering::Equal => return Class::At(i),
                std::cmp::Ordering::Greater => {}
            }
        }
        Class::Region(thresholds.len())
    }

    fn expand_class(base: &Classifier, _mixes: &[Vec<MixCand>], class: Class) -> Vec<Cand> {
        match class {
            Class::Region(i) => vec![Cand::Point(base.region_br[i])],
            Class::At(_) => Vec::new(), // filled by the caller with the set index
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn rec(
        ctx: &Ctx,
        rows_per_type: &[Vec<Vec<u64>>],
        order: &[usize],
        depth: usize,
        chosen: &mut Vec<usize>,
        good: &mut Vec<i128>,
        tot: &mut Vec<i128>,
        found: &mut Vec<Assessment>,
    ) {
        if depth == order.len() {
            leaf(ctx, rows_per_type, chosen, good, tot, found);
            return;
        }
        let e = order[depth];
        for idx in 0..rows_per_type[e].len() {
            apply(ctx, e, &rows_per_type[e][idx], 1, good, tot);
            chosen[e] = idx;
            rec(ctx, rows_per_type, order, depth + 1, chosen, good, tot, found);
            apply(ctx, e, &rows_per_type[e][idx], -1, good, tot);
        }
    }

    fn cand_val(ctx: &Ctx, c: &Cand) -> i128 {
        match c {
            Cand::Point(a) => ctx.av[*a] * ctx.g,
            Cand::Mix(set, i) => ctx.mixes[*set][*i].val,
            Cand::OffPath(i) => ctx.offpath[*i].val,
        }
    }

    fn leaf(
        ctx: &Ctx,
        rows_per_type: &[Vec<Vec<u64>>],
        chosen: &[usize],
        good: &[i128],
        tot: &[i128],
        found: &mut Vec<Assessment>,
    ) {
        let n = ctx.n;
        // Candidate lists per message (usually singletons).
        let mut cands: Vec<Vec<Cand>> = Vec::with_capacity(n);
        for m in 0..n {
            if tot[m] > 0 {
                match classify_int(&ctx.thresholds, good[m], tot[m]) {
                    Class::Region(i) => cands.push(vec![Cand::Point(ctx.region_br[i])]),
                    Class::At(i) => {
                        let set = ctx.thresholds[i].2;
                        cands.push((0..ctx.mixes[set].len()).map(|j| Cand::Mix(set, j)).collect())
                    }
                }
            } else if ctx.mode_perturbed {
                return;
            } else if ctx.mode_tl {
                let c = &ctx.unreached_cands[m];
                if c.is_empty() {
                    // Face value at a threshold: rebuild the tie options.
                    let class = classify_int(&ctx.thresholds, ctx.wg[m], ctx.wt[m]);
                    match class {
                        Class::At(i) => {
                            let set = ctx.thresholds[i].2;
                            cands.push(
                                (0..ctx.mixes[set].len()).map(|j| Cand::Mix(set, j)).collect(),
                            )
                        }
                        Class::Region(i) => cands.push(vec![Cand::Point(ctx.region_br[i])]),
                    }
                } else {
                    cands.push(c.clone());
                }
            } else {
                cands.push((0..ctx.offpath.len()).map(Cand::OffPath).collect());
            }
        }
        let rows: Vec<&Vec<u64>> = (0..n).map(|e| &rows_per_type[e][chosen[e]]).collect();
        let mut choice = vec![0usize; n];
        loop {
            let values: Vec<i128> = (0..n)
                .map(|m| cand_val(ctx, &cands[m][choice[m]]))
                .collect();
            if passes_int(ctx, &rows, &values) {
                found.push(build_assessment(ctx, &rows, &cands, &choice, good, tot));
            }
            let mut slot = 0;
            loop {
                if slot == n {
                    return;
                }
                choice[slot] += 1;
                if choice[slot] < cands[slot].len() {
                    break;
                }
                choice[slot] = 0;
                slot += 1;
            }
        }
    }

    fn passes_int(ctx: &Ctx, rows: &[&Vec<u64>], values: &[i128]) -> bool {
        for e in 0..ctx.n {
            let lc = &ctx.lc[e];
            if ctx.mode_perturbed {
                let rewarded = |m: usize| values[m] + if m == e { ctx.reward[e] } else { 0 };
                let best = lc.iter().map(|&m| rewarded(m)).max().unwrap();
                for &m in lc {
                    if m != e && rows[e][m] > 0 && rewarded(m) != best {
                        return false;
                    }
                }
                let (fnum, fden) = ctx.floor[e];
                let above_floor = (rows[e][e] as i128) * fden > fnum * ctx.g;
                if above_floor && rewarded(e) != best {
                    return false;
                }
            } else {
                let best = lc.iter().map(|&m| values[m]).max().unwrap();
                for &m in lc {
                    if rows[e][m] > 0 && values[m] != best {
                        return false;
                    }
                }
                if ctx.mode_tl && values[e] == best && rows[e][e] != ctx.g as u64 {
                    return false;
                }
            }
        }
        true
    }

    fn build_assessment(
        ctx: &Ctx,
        rows: &[&Vec<u64>],
        cands: &[Vec<Cand>],
        choice: &[usize],
        good: &[i128],
        tot: &[i128],
    ) -> Assessment {
        let n = ctx.n;
        let k = ctx.game.n_actions();
        let sigma = SenderStrategy {
            rows: rows
                .iter()
                .map(|r| {
                    r.iter()
                        .map(|&c| Q::from_integer((c as i64).into()) * &ctx.grid_step)
                        .collect()
                })
                .collect(),
        };
        let mut rho_rows = Vec::with_capacity(n);
        let mut beliefs = Vec::with_capacity(n);
        for m in 0..n {
            let (row, belief) = match &cands[m][choice[m]] {
                Cand::Point(a) => {
                    let mut row = vec![Q::zero(); k];
                    row[*a] = Q::one();
                    (row, belief_of(ctx, m, good, tot))
                }
                Cand::Mix(set, i) => {
                    let mut row = vec![Q::zero(); k];
                    for (pos, &a) in ctx.tied_sets[*set].iter().enumerate() {
                        row[a] = Q::from_integer((ctx.mixes[*set][*i].counts[pos] as i64).into())
                            * &ctx.grid_step;
                    }
                    (row, belief_of(ctx, m, good, tot))
                }
                Cand::OffPath(i) => (ctx.offpath[*i].row.clone(), ctx.offpath[*i].witness.clone()),
            };
            rho_rows.push(row);
            beliefs.push(belief);
        }
        Assessment {
            sigma,
            rho: ReceiverStrategy { rows: rho_rows },
            mu: BeliefSystem { beliefs },
        }
    }

    fn belief_of(ctx: &Ctx, m: usize, good: &[i128], tot: &[i128]) -> Q {
        if tot[m] > 0 {
            Q::new(BigInt::from(good[m]), BigInt::from(tot[m]))
        } else {
            ctx.unreached_beliefs[m].clone()
        }
    }
}


#[cfg(test)]
mod scan_agreement {
    use super::*;
    use crate::num::q;
    use crate::random::{random_game, RandomGameParams};

    /// The integer fast path and the rational scan implement the same
    /// definition; they must produce identical point lists.
    #[test]
    fn int_and_rational_scans_agree() {
        let grid = OracleGrid::exact(q(1, 10));
        let mut games: Vec<EvidenceGame> = crate::fixtures::all();
        for seed in 0..12u64 {
            games.push(random_game(&RandomGameParams {
                n_evidence: 1 + (seed as usize % 3),
                density: 0.6,
                n_actions: 2 + (seed as usize % 2),
                seed,
            }));
        }
        for game in &games {
            if game.n_evidence() > 3 || game.n_actions() > 3 {
                continue;
            }
            let eps = Perturbation::uniform_for(game, q(1, 10), q(1, 10));
            for mode in [
                OracleMode::Pbe,
                OracleMode::TruthLeaning,
                OracleMode::Perturbed(eps),
            ] {
                let fast = int_scan::try_scan(game, 10, &mode).expect("bounds fit");
                let slow = rational_scan(game, &grid, &mode, 10);
                assert_eq!(fast.len(), slow.len(), "count mismatch in {:?}", mode);
                for (a, b) in fast.iter().zip(&slow) {
                    assert_eq!(a.sigma, b.sigma);
                    assert_eq!(a.rho, b.rho);
                    assert_eq!(a.mu, b.mu);
                }
            }
        }
    }
}
