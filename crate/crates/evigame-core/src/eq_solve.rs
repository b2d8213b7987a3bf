//! Exhaustive equilibrium enumeration for the original game (truth-leaning
//! refinement) and for perturbed games.
//!
//! Candidate structures are combinatorial patterns: a support set per
//! sender type (plus a truth-binding choice in perturbed games) and a
//! belief position per reached message (an open region between adjacent
//! indifference thresholds, or exactly at a threshold, where receiver
//! mixing variables live). Each pattern induces an exact linear system;
//! the sender-side Bayes/position constraints are linear in σ, the
//! receiver-side optimality constraints are linear in the mixing weights,
//! and the two sides couple only through the combinatorial choices. Every
//! refuted pattern is recorded, so a nonexistence report enumerates its
//! certificate.

use num::{One, Zero};
use rayon::prelude::*;

use crate::family::{merge_families, BeliefCoord, CoordKeys, EquilibriumFamily};
use crate::game::{face_value_belief_idx, EvIdx, EvidenceGame};
use crate::linear::{LinExpr, Rel, SolutionSet, System};
use crate::num::{format_rational, Q};
use crate::perturbed::Perturbation;
use crate::response::{best_response_set, indifference_thresholds};

#[derive(Debug, Clone)]
pub enum SolveMode {
    TruthLeaning,
    Perturbed(Perturbation),
}

pub struct EnumerationOutcome {
    pub families: Vec<EquilibriumFamily>,
    pub refuted: Vec<String>,
}

/// A belief position: an open region between thresholds or a pinned
/// threshold with its tied action set.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Position {
    Region {
        lo: Option<Q>,
        hi: Option<Q>,
        br: usize,
    },
    At {
        belief: Q,
        tied: Vec<usize>,
    },
}

impl Position {
    fn label(&self) -> String {
        match self {
            Position::Region { lo, hi, .. } => format!(
                "({},{})",
                lo.as_ref().map(format_rational).unwrap_or_else(|| "0".into()),
                hi.as_ref().map(format_rational).unwrap_or_else(|| "1".into())
            ),
            Position::At { belief, .. } => format!("@{}", format_rational(belief)),
        }
    }
}

/// All positions for a game, in ascending belief order.
fn positions(game: &EvidenceGame) -> Vec<Position> {
    let thresholds = indifference_thresholds(game);
    let mut out = Vec::new();
    let probe_br = |mu: &Q| -> usize {
        let set = best_response_set(game, mu);
        debug_assert_eq!(set.len(), 1);
        set[0]
    };
    if thresholds.is_empty() {
        out.push(Position::Region {
            lo: None,
            hi: None,
            br: probe_br(&crate::num::q(1, 2)),
        });
        return out;
    }
    let first = &thresholds[0].belief;
    if first > &Q::zero() {
        out.push(Position::Region {
            lo: None,
            hi: Some(first.clone()),
            br: probe_br(&(first / Q::from_integer(2.into()))),
        });
    }
    for (i, t) in thresholds.iter().enumerate() {
        out.push(Position::At {
            belief: t.belief.clone(),
            tied: t.tied.clone(),
        });
        let next = thresholds.get(i + 1).map(|t2| t2.belief.clone());
        let hi = next.clone().unwrap_or_else(Q::one);
        if t.belief < hi {
            let mid = (&t.belief + &hi) / Q::from_integer(2.into());
            out.push(Position::Region {
                lo: Some(t.belief.clone()),
                hi: next,
                br: probe_br(&mid),
            });
        }
    }
    out
}

fn position_of_belief(positions: &[Position], mu: &Q) -> usize {
    for (i, p) in positions.iter().enumerate() {
        match p {
            Position::At { belief, .. } if belief == mu => return i,
            Position::Region { lo, hi, .. } => {
                let above = lo.as_ref().map(|l| mu > l).unwrap_or(mu >= &Q::zero());
                let below = hi.as_ref().map(|h| mu < h).unwrap_or(mu <= &Q::one());
                if above && below {
                    return i;
                }
            }
            _ => {}
        }
    }
    unreachable!("belief {} outside every position", mu)
}

/// Per-type truth handling in a pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TruthBinding {
    /// Truth-leaning/none (original game) or optimal truth (perturbed:
    /// the truthful message attains the rewarded maximum, mass ≥ floor).
    Optimal,
    /// Perturbed only: truth mass pinned at the floor, truth strictly
    /// suboptimal.
    AtFloor,
}

struct Pattern {
    supports: Vec<Vec<EvIdx>>,
    bindings: Vec<TruthBinding>,
    /// Position index per message (only reached messages are enumerated;
    /// unreached ones are fixed by the face value).
    position: Vec<usize>,
    reached: Vec<bool>,
}

impl Pattern {
    fn label(&self, game: &EvidenceGame, pos: &[Position]) -> String {
        let sup: Vec<String> = self
            .supports
            .iter()
            .enumerate()
            .map(|(e, s)| {
                let names: Vec<&str> = s.iter().map(|&m| game.space.items[m].as_str()).collect();
                let tag = match self.bindings[e] {
                    TruthBinding::Optimal => "",
                    TruthBinding::AtFloor => "!",
                };
                format!("{}{}:{{{}}}", game.space.items[e], tag, names.join(","))
            })
            .collect();
        let ps: Vec<String> = self
            .position
            .iter()
            .enumerate()
            .map(|(m, &i)| format!("{}:{}", game.space.items[m], pos[i].label()))
            .collect();
        format!("supports[{}] positions[{}]", sup.join(" "), ps.join(" "))
    }
}

/// Enumerate every support/position pattern, solve the induced exact
/// systems, and return the verified equilibrium families (merged across
/// adjoining patterns) plus a descriptor of every refuted pattern.
pub fn enumerate_equilibria(game: &EvidenceGame, mode: &SolveMode) -> EnumerationOutcome {
    let n = game.n_evidence();
    let pos = positions(game);
    let nu: Vec<Q> = (0..n).map(|m| face_value_belief_idx(game, m)).collect();
    let keys = CoordKeys::for_game(game);

    // Support choices per type.
    let per_type: Vec<Vec<(Vec<EvIdx>, TruthBinding)>> = (0..n)
        .map(|e| {
            let lc = game.space.lower_contour(e);
            let mut out = Vec::new();
            let subsets = 1u32 << lc.len();
            for mask in 1..subsets {
                let s: Vec<EvIdx> = lc
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, &m)| m)
                    .collect();
                match mode {
                    SolveMode::TruthLeaning => {
                        // Truth priority: a type disclosing truthfully with
                        // positive probability must do so with probability 1.
                        if s.contains(&e) && s.len() > 1 {
                            continue;
                        }
                        out.push((s, TruthBinding::Optimal));
                    }
                    SolveMode::Perturbed(_) => {
                        // The floor keeps truth in every support.
                        if !s.contains(&e) {
                            continue;
                        }
                        out.push((s.clone(), TruthBinding::Optimal));
                        if s.len() > 1 {
                            out.push((s, TruthBinding::AtFloor));
                        }
                    }
                }
            }
            out
        })
        .collect();

    // Cartesian product of support choices.
    let mut support_combos: Vec<Vec<usize>> = vec![Vec::new()];
    for choices in &per_type {
        let mut next = Vec::new();
        for prefix in &support_combos {
            for i in 0..choices.len() {
                let mut p = prefix.clone();
                p.push(i);
                next.push(p);
            }
        }
        support_combos = next;
    }

    let results: Vec<(Vec<EquilibriumFamily>, Vec<String>)> = support_combos
        .par_iter()
        .map(|combo| {
            let supports: Vec<Vec<EvIdx>> = combo
                .iter()
                .enumerate()
                .map(|(e, &i)| per_type[e][i].0.clone())
                .collect();
            let bindings: Vec<TruthBinding> = combo
                .iter()
                .enumerate()
                .map(|(e, &i)| per_type[e][i].1)
                .collect();
            let mut reached = vec![false; n];
            for s in &supports {
                for &m in s {
                    reached[m] = true;
                }
            }
            solve_support_combo(
                game, mode, &pos, &nu, &keys, supports, bindings, reached,
            )
        })
        .collect();

    let mut families = Vec::new();
    let mut refuted = Vec::new();
    for (f, r) in results {
        families.extend(f);
        refuted.extend(r);
    }
    let families = merge_families(families);
    EnumerationOutcome { families, refuted }
}

#[allow(clippy::too_many_arguments)]
fn solve_support_combo(
    game: &EvidenceGame,
    mode: &SolveMode,
    pos: &[Position],
    nu: &[Q],
    keys: &CoordKeys,
    supports: Vec<Vec<EvIdx>>,
    bindings: Vec<TruthBinding>,
    reached: Vec<bool>,
) -> (Vec<EquilibriumFamily>, Vec<String>) {
    let n = game.n_evidence();
    let reached_list: Vec<EvIdx> = (0..n).filter(|&m| reached[m]).collect();
    // Achievable posterior interval per reached message: the mix of its
    // senders' face values.
    let sender_nu_range: Vec<Option<(Q, Q)>> = (0..n)
        .map(|m| {
            if !reached[m] {
                return None;
            }
            let senders: Vec<EvIdx> = game
                .space
                .upper_contour(m)
                .into_iter()
                .filter(|&e| supports[e].contains(&m))
                .collect();
            let lo = senders.iter().map(|&e| nu[e].clone()).min().unwrap();
            let hi = senders.iter().map(|&e| nu[e].clone()).max().unwrap();
            Some((lo, hi))
        })
        .collect();

    let mut fams = Vec::new();
    let mut refuted = Vec::new();
    // Position assignment per reached message via odometer.
    let mut idx = vec![0usize; reached_list.len()];
    loop {
        let mut position = vec![usize::MAX; n];
        for (slot, &m) in reached_list.iter().enumerate() {
            position[m] = idx[slot];
        }
        for m in 0..n {
            if !reached[m] {
                position[m] = position_of_belief(pos, &nu[m]);
            }
        }
        let pattern = Pattern {
            supports: supports.clone(),
            bindings: bindings.clone(),
            position,
            reached: reached.clone(),
        };
        // Prune: the pinned/region belief must be achievable as a mix of
        // the senders' face values.
        let feasible_position = reached_list.iter().all(|&m| {
            let (lo, hi) = sender_nu_range[m].as_ref().unwrap();
            match &pos[pattern.position[m]] {
                Position::At { belief, .. } => belief >= lo && belief <= hi,
                Position::Region { lo: rlo, hi: rhi, .. } => {
                    rlo.as_ref().map(|r| r < hi).unwrap_or(true)
                        && rhi.as_ref().map(|r| r > lo).unwrap_or(true)
                }
            }
        });
        if feasible_position {
            match solve_pattern(game, mode, pos, nu, keys, &pattern) {
                Some(f) => fams.push(f),
                None => refuted.push(pattern.label(game, pos)),
            }
        } else {
            refuted.push(pattern.label(game, pos));
        }
        // Advance the odometer.
        let mut slot = 0;
        loop {
            if slot == idx.len() {
                return (fams, refuted);
            }
            idx[slot] += 1;
            if idx[slot] < pos.len() {
                break;
            }
            idx[slot] = 0;
            slot += 1;
        }
        if reached_list.is_empty() {
            return (fams, refuted);
        }
    }
}

/// Build and solve the exact system induced by one pattern.
fn solve_pattern(
    game: &EvidenceGame,
    mode: &SolveMode,
    pos: &[Position],
    nu: &[Q],
    keys: &CoordKeys,
    pattern: &Pattern,
) -> Option<EquilibriumFamily> {
    let n = game.n_evidence();
    // --- Variable layout ------------------------------------------------
    // σ variables for types with more than one free entry; ρ variables for
    // every message pinned at a threshold.
    let mut nvars = 0usize;
    let mut sigma_coord: Vec<Vec<Coord>> = vec![vec![Coord::Const; n]; n];
    let mut sigma_const: Vec<Vec<Q>> = vec![vec![Q::zero(); n]; n];
    let floor = |e: EvIdx| -> Q {
        match mode {
            SolveMode::TruthLeaning => Q::zero(),
            SolveMode::Perturbed(p) => p.floor[e].clone(),
        }
    };
    let reward = |e: EvIdx| -> Q {
        match mode {
            SolveMode::TruthLeaning => Q::zero(),
            SolveMode::Perturbed(p) => p.reward[e].clone(),
        }
    };
    for e in 0..n {
        let s = &pattern.supports[e];
        match pattern.bindings[e] {
            TruthBinding::AtFloor => {
                sigma_const[e][e] = floor(e);
                let others: Vec<EvIdx> = s.iter().copied().filter(|&m| m != e).collect();
                if others.len() == 1 {
                    sigma_const[e][others[0]] = Q::one() - floor(e);
                } else {
                    for &m in &others {
                        sigma_coord[e][m] = Coord::Var(nvars);
                        nvars += 1;
                    }
                }
            }
            TruthBinding::Optimal => {
                if s.len() == 1 {
                    sigma_const[e][s[0]] = Q::one();
                } else {
                    for &m in s {
                        sigma_coord[e][m] = Coord::Var(nvars);
                        nvars += 1;
                    }
                }
            }
        }
    }
    let mut rho_coord: Vec<Vec<Coord>> = vec![vec![Coord::Const; game.n_actions()]; n];
    let mut rho_const: Vec<Vec<Q>> = vec![vec![Q::zero(); game.n_actions()]; n];
    for m in 0..n {
        match &pos[pattern.position[m]] {
            Position::Region { br, .. } => {
                rho_const[m][*br] = Q::one();
            }
            Position::At { tied, .. } => {
                for &a in tied {
                    rho_coord[m][a] = Coord::Var(nvars);
                    nvars += 1;
                }
            }
        }
    }

    // --- Constraints -----------------------------------------------------
    let mut sys = System::new(nvars);
    let sigma_expr = |e: EvIdx, m: EvIdx| -> LinExpr {
        match sigma_coord[e][m] {
            Coord::Var(v) => LinExpr::var(nvars, v),
            Coord::Const => LinExpr::constant(nvars, sigma_const[e][m].clone()),
        }
    };
    let rho_expr = |m: EvIdx, a: usize| -> LinExpr {
        match rho_coord[m][a] {
            Coord::Var(v) => LinExpr::var(nvars, v),
            Coord::Const => LinExpr::constant(nvars, rho_const[m][a].clone()),
        }
    };
    // Row sums and positivity for σ variables.
    for e in 0..n {
        let s = &pattern.supports[e];
        let has_vars = s.iter().any(|&m| matches!(sigma_coord[e][m], Coord::Var(_)));
        if !has_vars {
            continue;
        }
        let mut sum = LinExpr::zero(nvars);
        for &m in s {
            sum = sum.add(&sigma_expr(e, m));
        }
        sum.constant -= Q::one();
        sys.push(sum, Rel::Eq);
        for &m in s {
            if let Coord::Var(v) = sigma_coord[e][m] {
                let mut pos_c = LinExpr::zero(nvars);
                pos_c.coeffs[v] = Q::from_integer((-1).into());
                if m == e {
                    // Truth mass: ≥ floor (weak) under Optimal binding.
                    pos_c.constant = floor(e);
                    sys.push(pos_c, Rel::Le);
                } else {
                    sys.push(pos_c, Rel::Lt);
                }
            }
        }
    }
    // Simplex constraints for ρ variables.
    for m in 0..n {
        if let Position::At { tied, .. } = &pos[pattern.position[m]] {
            let mut sum = LinExpr::zero(nvars);
            for &a in tied {
                sum = sum.add(&rho_expr(m, a));
            }
            sum.constant -= Q::one();
            sys.push(sum, Rel::Eq);
            for &a in tied {
                if let Coord::Var(v) = rho_coord[m][a] {
                    let mut nonneg = LinExpr::zero(nvars);
                    nonneg.coeffs[v] = Q::from_integer((-1).into());
                    sys.push(nonneg, Rel::Le);
                }
            }
        }
    }
    // Bayes/position constraints for reached messages.
    for m in 0..n {
        if !pattern.reached[m] {
            continue;
        }
        let mut num = LinExpr::zero(nvars);
        let mut den = LinExpr::zero(nvars);
        for e in game.space.upper_contour(m) {
            if !pattern.supports[e].contains(&m) {
                continue;
            }
            let s = sigma_expr(e, m);
            num = num.add(&s.scale(&game.w_good(e)));
            den = den.add(&s.scale(&(game.w_good(e) + game.w_bad(e))));
        }
        match &pos[pattern.position[m]] {
            Position::At { belief, .. } => {
                sys.push(num.sub(&den.scale(belief)), Rel::Eq);
            }
            Position::Region { lo, hi, .. } => {
                if let Some(l) = lo {
                    sys.push(den.scale(l).sub(&num), Rel::Lt);
                }
                if let Some(h) = hi {
                    sys.push(num.sub(&den.scale(h)), Rel::Lt);
                }
            }
        }
    }
    // Sender optimality.
    let value_expr = |m: EvIdx| -> LinExpr {
        let mut v = LinExpr::zero(nvars);
        match &pos[pattern.position[m]] {
            Position::Region { br, .. } => {
                v.constant = game.actions[*br].clone();
            }
            Position::At { tied, .. } => {
                for &a in tied {
                    v = v.add(&rho_expr(m, a).scale(&game.actions[a]));
                }
            }
        }
        v
    };
    for e in 0..n {
        let lc = game.space.lower_contour(e);
        let s = &pattern.supports[e];
        let rewarded = |m: EvIdx| -> LinExpr {
            let mut v = value_expr(m);
            if m == e {
                v.constant += reward(e);
            }
            v
        };
        match mode {
            SolveMode::TruthLeaning => {
                if s == &vec![e] {
                    let ve = rewarded(e);
                    for m in lc {
                        if m == e {
                            continue;
                        }
                        sys.push(rewarded(m).sub(&ve), Rel::Le);
                    }
                } else {
                    let base = rewarded(s[0]);
                    for &m in &s[1..] {
                        sys.push(rewarded(m).sub(&base), Rel::Eq);
                    }
                    for m in lc {
                        if s.contains(&m) {
                            continue;
                        }
                        let rel = if m == e { Rel::Lt } else { Rel::Le };
                        sys.push(rewarded(m).sub(&base), rel);
                    }
                }
            }
            SolveMode::Perturbed(_) => match pattern.bindings[e] {
                TruthBinding::Optimal => {
                    let base = rewarded(e);
                    for &m in s {
                        if m == e {
                            continue;
                        }
                        sys.push(rewarded(m).sub(&base), Rel::Eq);
                    }
                    for m in lc {
                        if s.contains(&m) {
                            continue;
                        }
                        sys.push(rewarded(m).sub(&base), Rel::Le);
                    }
                }
                TruthBinding::AtFloor => {
                    let m0 = *s.iter().find(|&&m| m != e).unwrap();
                    let base = rewarded(m0);
                    for &m in s {
                        if m == e || m == m0 {
                            continue;
                        }
                        sys.push(rewarded(m).sub(&base), Rel::Eq);
                    }
                    for m in lc {
                        if s.contains(&m) {
                            continue;
                        }
                        sys.push(rewarded(m).sub(&base), Rel::Le);
                    }
                    // Truth strictly suboptimal: otherwise the Optimal
                    // binding covers the pattern.
                    sys.push(rewarded(e).sub(&base), Rel::Lt);
                }
            },
        }
    }

    let sol = crate::linear::solve(&sys)?;
    Some(family_from_solution(
        game, pos, nu, keys, pattern, &sigma_coord, &sigma_const, &rho_coord, &rho_const, &sol,
    ))
}

#[allow(clippy::too_many_arguments)]
fn family_from_solution(
    game: &EvidenceGame,
    pos: &[Position],
    nu: &[Q],
    keys: &CoordKeys,
    pattern: &Pattern,
    sigma_coord: &[Vec<Coord>],
    sigma_const: &[Vec<Q>],
    rho_coord: &[Vec<Coord>],
    rho_const: &[Vec<Q>],
    sol: &SolutionSet,
) -> EquilibriumFamily {
    let p = sol.dim();
    let coord_affine = |var: Option<usize>, konst: &Q| -> (Q, Vec<Q>) {
        match var {
            Some(v) => {
                let base = sol.base[v].clone();
                let dirs: Vec<Q> = sol.dirs.iter().map(|d| d[v].clone()).collect();
                (base, dirs)
            }
            None => (konst.clone(), vec![Q::zero(); p]),
        }
    };
    let mut base = Vec::with_capacity(keys.len());
    let mut dirs: Vec<Vec<Q>> = vec![Vec::with_capacity(keys.len()); p];
    let mut push = |b: Q, ds: Vec<Q>| {
        base.push(b);
        for (j, d) in ds.into_iter().enumerate() {
            dirs[j].push(d);
        }
    };
    for &(e, m) in &keys.sigma {
        let (b, d) = coord_affine(sigma_coord[e][m].var_index(), &sigma_const[e][m]);
        push(b, d);
    }
    for &(m, a) in &keys.rho {
        let (b, d) = coord_affine(rho_coord[m][a].var_index(), &rho_const[m][a]);
        push(b, d);
    }
    let beliefs = (0..game.n_evidence())
        .map(|m| {
            if !pattern.reached[m] {
                BeliefCoord::Const(nu[m].clone())
            } else {
                match &pos[pattern.position[m]] {
                    Position::At { belief, .. } => BeliefCoord::Const(belief.clone()),
                    Position::Region { .. } => BeliefCoord::Bayes,
                }
            }
        })
        .collect();
    EquilibriumFamily {
        keys: keys.clone(),
        base,
        dirs,
        cons: sol.param_cons.clone(),
        witness_params: sol.witness_params.clone(),
        param_ranges: sol.param_ranges.clone(),
        beliefs,
    }
}

/// Whether a strategy entry is pattern-constant or a system variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Coord {
    Const,
    Var(usize),
}

impl Coord {
    fn var_index(&self) -> Option<usize> {
        match self {
            Coord::Var(v) => Some(*v),
            Coord::Const => None,
        }
    }
}
