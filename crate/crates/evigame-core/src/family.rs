//! Families of equilibria with exact parameter ranges.
//!
//! A family is an affine set of assessments (strategy coordinates affine
//! in a few free parameters, restricted by strict/weak inequalities) plus
//! per-message belief coordinates that are either pinned constants or
//! derived from the sender strategy by Bayes. Solvers return solution
//! *sets*, not selections; families of dimension one are segments whose
//! endpoints carry exact open/closed information.

use num::{Signed, Zero};

use crate::check::{Assessment, ReceiverStrategy};
use crate::game::{
    face_value_belief_idx, posterior_from_strategy_idx, ActIdx, BeliefSystem, EvIdx, EvidenceGame,
    Posterior, SenderStrategy,
};
use crate::linear::{Bound, LinExpr, Rel};
use crate::num::{format_rational, Q};

/// Canonical assessment coordinates: every feasible sender pair
/// `(type, message)` in type-major order, then every receiver pair
/// `(message, action)` in message-major order. Beliefs are handled
/// separately (they are rational functions of the strategy coordinates).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordKeys {
    pub sigma: Vec<(EvIdx, EvIdx)>,
    pub rho: Vec<(EvIdx, ActIdx)>,
}

impl CoordKeys {
    pub fn for_game(game: &EvidenceGame) -> Self {
        let mut sigma = Vec::new();
        for e in 0..game.n_evidence() {
            for m in game.space.lower_contour(e) {
                sigma.push((e, m));
            }
        }
        let mut rho = Vec::new();
        for m in 0..game.n_evidence() {
            for a in 0..game.n_actions() {
                rho.push((m, a));
            }
        }
        Self { sigma, rho }
    }

    pub fn len(&self) -> usize {
        self.sigma.len() + self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn names(&self, game: &EvidenceGame) -> Vec<String> {
        let mut out = Vec::with_capacity(self.len());
        for &(e, m) in &self.sigma {
            out.push(format!(
                "sigma[{}->{}]",
                game.space.items[e], game.space.items[m]
            ));
        }
        for &(m, a) in &self.rho {
            out.push(format!("rho[{}:{}]", game.space.items[m], game.actions[a]));
        }
        out
    }

    /// Flatten an assessment's strategy part into the canonical vector.
    pub fn vector(&self, a: &Assessment) -> Vec<Q> {
        let mut v = Vec::with_capacity(self.len());
        for &(e, m) in &self.sigma {
            v.push(a.sigma.rows[e][m].clone());
        }
        for &(m, act) in &self.rho {
            v.push(a.rho.rows[m][act].clone());
        }
        v
    }
}

/// How a message's belief is determined across a family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BeliefCoord {
    /// The belief is this exact constant everywhere in the family.
    Const(Q),
    /// On-path belief, derived from the sender coordinates by Bayes
    /// (face value if a boundary member leaves the message unreached).
    Bayes,
}

/// An affine family of equilibria with exact parameter ranges.
#[derive(Debug, Clone)]
pub struct EquilibriumFamily {
    pub keys: CoordKeys,
    /// Coordinate vector at parameter zero.
    pub base: Vec<Q>,
    /// One direction per free parameter.
    pub dirs: Vec<Vec<Q>>,
    /// Constraints over the parameters (Le/Lt).
    pub cons: Vec<(LinExpr, Rel)>,
    pub witness_params: Vec<Q>,
    /// Exact attainable interval of each parameter.
    pub param_ranges: Vec<(Bound, Bound)>,
    pub beliefs: Vec<BeliefCoord>,
}

impl EquilibriumFamily {
    pub fn dim(&self) -> usize {
        self.dirs.len()
    }

    pub fn point_vector(&self, params: &[Q]) -> Vec<Q> {
        let mut v = self.base.clone();
        for (t, dir) in params.iter().zip(&self.dirs) {
            if t.is_zero() {
                continue;
            }
            for (x, d) in v.iter_mut().zip(dir) {
                if !d.is_zero() {
                    *x += t * d;
                }
            }
        }
        v
    }

    /// Assemble a full assessment (beliefs included) at a parameter point.
    pub fn assessment(&self, game: &EvidenceGame, params: &[Q]) -> Assessment {
        let v = self.point_vector(params);
        self.assessment_from_vector(game, &v)
    }

    pub fn assessment_from_vector(&self, game: &EvidenceGame, v: &[Q]) -> Assessment {
        let n = game.n_evidence();
        let k = game.n_actions();
        let mut sigma = SenderStrategy {
            rows: vec![vec![Q::zero(); n]; n],
        };
        for (i, &(e, m)) in self.keys.sigma.iter().enumerate() {
            sigma.rows[e][m] = v[i].clone();
        }
        let mut rho = ReceiverStrategy {
            rows: vec![vec![Q::zero(); k]; n],
        };
        for (i, &(m, a)) in self.keys.rho.iter().enumerate() {
            rho.rows[m][a] = v[self.keys.sigma.len() + i].clone();
        }
        let beliefs = (0..n)
            .map(|m| match &self.beliefs[m] {
                BeliefCoord::Const(q) => q.clone(),
                BeliefCoord::Bayes => match posterior_from_strategy_idx(game, &sigma, m) {
                    Posterior::Reached(p) => p,
                    Posterior::Unreached => face_value_belief_idx(game, m),
                },
            })
            .collect();
        Assessment {
            sigma,
            rho,
            mu: BeliefSystem { beliefs },
        }
    }

    pub fn witness(&self, game: &EvidenceGame) -> Assessment {
        self.assessment(game, &self.witness_params)
    }

    /// Exact membership of an assessment's strategy coordinates; beliefs
    /// are checked against the family's belief rule.
    pub fn contains(&self, game: &EvidenceGame, a: &Assessment) -> bool {
        let target = self.keys.vector(a);
        let Some(params) = self.solve_params(&target) else {
            return false;
        };
        if !self.params_feasible(&params) {
            return false;
        }
        let rebuilt = self.assessment(game, &params);
        rebuilt.sigma == a.sigma && rebuilt.rho == a.rho && rebuilt.mu == a.mu
    }

    pub fn params_feasible(&self, params: &[Q]) -> bool {
        self.cons.iter().all(|(e, rel)| {
            let v = e.eval(params);
            match rel {
                Rel::Eq => v.is_zero(),
                Rel::Le => !v.is_positive(),
                Rel::Lt => v.is_negative(),
            }
        })
    }

    /// Solve `base + dirs·t = target` exactly (dirs are independent).
    fn solve_params(&self, target: &[Q]) -> Option<Vec<Q>> {
        let p = self.dim();
        if p == 0 {
            return if target == &self.base[..] {
                Some(Vec::new())
            } else {
                None
            };
        }
        // Gaussian solve on the (len × p) system.
        let mut rows: Vec<(Vec<Q>, Q)> = (0..self.base.len())
            .map(|i| {
                (
                    self.dirs.iter().map(|d| d[i].clone()).collect(),
                    &target[i] - &self.base[i],
                )
            })
            .collect();
        let mut params = vec![Q::zero(); p];
        let mut used = vec![false; rows.len()];
        let mut pivots: Vec<(usize, usize)> = Vec::new();
        for col in 0..p {
            let Some(r) = (0..rows.len()).find(|&r| !used[r] && !rows[r].0[col].is_zero()) else {
                continue;
            };
            used[r] = true;
            pivots.push((r, col));
            let inv = rows[r].0[col].clone();
            for c in 0..p {
                rows[r].0[c] = &rows[r].0[c] / &inv;
            }
            rows[r].1 = &rows[r].1 / &inv;
            let pivot_row = rows[r].clone();
            for (r2, row) in rows.iter_mut().enumerate() {
                if r2 != r && !row.0[col].is_zero() {
                    let f = row.0[col].clone();
                    for c in 0..p {
                        row.0[c] = &row.0[c] - &f * &pivot_row.0[c];
                    }
                    row.1 = &row.1 - &f * &pivot_row.1;
                }
            }
        }
        if pivots.len() < p {
            return None;
        }
        for &(r, col) in &pivots {
            params[col] = rows[r].1.clone();
        }
        // Consistency of the remaining rows.
        for (r, row) in rows.iter().enumerate() {
            if used[r] {
                continue;
            }
            let v: Q = row
                .0
                .iter()
                .zip(&params)
                .map(|(c, t)| c * t)
                .sum::<Q>();
            if v != row.1 {
                return None;
            }
        }
        Some(params)
    }

    /// Infimum of the sup-norm distance from a strategy-coordinate vector
    /// to this family (exact for dimension ≤ 1; an upper bound via
    /// witness/endpoint candidates for higher dimensions).
    pub fn distance_to(&self, target: &[Q]) -> Q {
        let eval_at = |params: &[Q]| -> Q {
            self.point_vector(params)
                .iter()
                .zip(target)
                .map(|(a, b)| (a - b).abs())
                .max()
                .unwrap_or_else(Q::zero)
        };
        match self.dim() {
            0 => eval_at(&[]),
            1 => {
                let (lo, hi) = &self.param_ranges[0];
                let mut candidates: Vec<Q> = Vec::new();
                if let Some((l, _)) = lo {
                    candidates.push(l.clone());
                }
                if let Some((h, _)) = hi {
                    candidates.push(h.clone());
                }
                candidates.push(self.witness_params[0].clone());
                // Breakpoints of max_i |a_i + d_i t − g_i|: intersections of
                // the ± linear pieces.
                let diffs: Vec<(Q, Q)> = self
                    .base
                    .iter()
                    .zip(&self.dirs[0])
                    .zip(target)
                    .map(|((b, d), g)| (b - g, d.clone()))
                    .collect();
                for i in 0..diffs.len() {
                    for j in (i + 1)..diffs.len() {
                        let (ref ai, ref di) = diffs[i];
                        let (ref aj, ref dj) = diffs[j];
                        for (sa, sb) in [(1, 1), (1, -1)] {
                            // ai + di t = sa·sb (aj + dj t)
                            let s = Q::from_integer((sa * sb).into());
                            let den = di - &s * dj;
                            if den.is_zero() {
                                continue;
                            }
                            let t = (&s * aj - ai) / den;
                            candidates.push(t);
                        }
                    }
                }
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
                candidates
                    .into_iter()
                    .map(|t| eval_at(&[clamp(t)]))
                    .min()
                    .unwrap()
            }
            _ => {
                let mut best = eval_at(&self.witness_params);
                for pt in self.sample_param_grid(&crate::num::q(1, 8), 512) {
                    let d = eval_at(&pt);
                    if d < best {
                        best = d;
                    }
                }
                best
            }
        }
    }

    /// Exact test: does the family intersect the sup-norm box of the
    /// given radius around a strategy-coordinate vector? (Linear
    /// feasibility over the parameters, so exact in any dimension.)
    pub fn within_box(&self, target: &[Q], radius: &Q) -> bool {
        let p = self.dim();
        let mut sys = crate::linear::System::new(p);
        for (e, rel) in &self.cons {
            sys.push(e.clone(), *rel);
        }
        for (i, t) in target.iter().enumerate() {
            let mut expr = LinExpr::zero(p);
            expr.constant = &self.base[i] - t;
            for (j, d) in self.dirs.iter().enumerate() {
                expr.coeffs[j] = d[i].clone();
            }
            let mut upper = expr.clone();
            upper.constant -= radius;
            sys.push(upper, Rel::Le);
            let mut lower = expr.scale(&Q::from_integer((-1).into()));
            lower.constant -= radius;
            sys.push(lower, Rel::Le);
        }
        crate::linear::solve(&sys).is_some()
    }

    /// Deterministic sample of parameter points: multiples of `step`
    /// within each range (plus closed endpoints and the witness), filtered
    /// by the constraints, capped in count.
    pub fn sample_param_grid(&self, step: &Q, cap: usize) -> Vec<Vec<Q>> {
        let p = self.dim();
        if p == 0 {
            return vec![Vec::new()];
        }
        let mut axes: Vec<Vec<Q>> = Vec::with_capacity(p);
        for j in 0..p {
            let (lo, hi) = &self.param_ranges[j];
            let mut vals: Vec<Q> = Vec::new();
            if let (Some((l, _)), Some((h, _))) = (lo, hi) {
                // Grid multiples of step inside [l, h].
                let start = (l / step).ceil();
                let end = (h / step).floor();
                let mut k = start;
                while k <= end {
                    vals.push(&k * step);
                    k += Q::from_integer(1.into());
                }
                vals.push(l.clone());
                vals.push(h.clone());
            }
            vals.push(self.witness_params[j].clone());
            vals.sort();
            vals.dedup();
            axes.push(vals);
        }
        let mut out: Vec<Vec<Q>> = vec![Vec::new()];
        for axis in &axes {
            let mut next = Vec::new();
            for prefix in &out {
                for v in axis {
                    let mut pt = prefix.clone();
                    pt.push(v.clone());
                    next.push(pt);
                    if next.len() > cap * 4 {
                        break;
                    }
                }
            }
            out = next;
        }
        let mut filtered: Vec<Vec<Q>> = out
            .into_iter()
            .filter(|pt| self.params_feasible(pt))
            .collect();
        filtered.truncate(cap);
        if filtered.is_empty() {
            filtered.push(self.witness_params.clone());
        }
        filtered
    }

    /// Lexicographically minimal member over the canonical coordinates
    /// (falls back to the witness when the minimum is not attained or the
    /// dimension exceeds one).
    pub fn lex_min(&self, game: &EvidenceGame) -> Assessment {
        match self.dim() {
            0 => self.assessment(game, &[]),
            1 => {
                let dir_sign = self.dirs[0].iter().find(|d| !d.is_zero());
                let (lo, hi) = &self.param_ranges[0];
                let pick = match dir_sign {
                    Some(d) if d.is_positive() => lo,
                    Some(_) => hi,
                    None => lo,
                };
                match pick {
                    Some((t, false)) => self.assessment(game, std::slice::from_ref(t)),
                    _ => self.witness(game),
                }
            }
            _ => self.witness(game),
        }
    }

    /// Human-readable description of the free coordinates.
    pub fn describe(&self, game: &EvidenceGame) -> Vec<String> {
        let names = self.keys.names(game);
        let mut out = Vec::new();
        for (i, name) in names.iter().enumerate() {
            let expr = {
                let mut e = LinExpr::zero(self.dim());
                e.constant = self.base[i].clone();
                for (j, d) in self.dirs.iter().enumerate() {
                    e.coeffs[j] = d[i].clone();
                }
                e
            };
            if expr.is_constant() {
                continue;
            }
            let (lo, hi) = self.coord_range(i);
            let lo_s = match &lo {
                Some((v, true)) => format!("({}", format_rational(v)),
                Some((v, false)) => format!("[{}", format_rational(v)),
                None => "(-inf".to_string(),
            };
            let hi_s = match &hi {
                Some((v, true)) => format!("{})", format_rational(v)),
                Some((v, false)) => format!("{}]", format_rational(v)),
                None => "+inf)".to_string(),
            };
            out.push(format!("{} in {}, {}", name, lo_s, hi_s));
        }
        if out.is_empty() {
            out.push("point".to_string());
        }
        out
    }

    /// Exact attainable interval of one canonical coordinate.
    pub fn coord_range(&self, i: usize) -> (Bound, Bound) {
        let mut e = LinExpr::zero(self.dim());
        e.constant = self.base[i].clone();
        for (j, d) in self.dirs.iter().enumerate() {
            e.coeffs[j] = d[i].clone();
        }
        crate::linear::bound_expr_public(&self.cons, self.dim(), &e)
    }
}

/// Merge families that lie on the same line with adjoining ranges. Only
/// dimensions ≤ 1 merge; this closes the artificial open endpoints that
/// support-pattern enumeration introduces where supports change.
pub fn merge_families(fams: Vec<EquilibriumFamily>) -> Vec<EquilibriumFamily> {
    let mut out: Vec<EquilibriumFamily> = fams;
    // Fixpoint: pieces may only become mergeable after earlier merges
    // close an endpoint (point + open segment + point).
    loop {
        let mut merged_any = false;
        'scan: for i in 0..out.len() {
            for j in (i + 1)..out.len() {
                if let Some(merged) = try_merge(&out[i], &out[j]) {
                    out[i] = merged;
                    out.remove(j);
                    merged_any = true;
                    break 'scan;
                }
            }
        }
        if !merged_any {
            return out;
        }
    }
}

fn try_merge(a: &EquilibriumFamily, b: &EquilibriumFamily) -> Option<EquilibriumFamily> {
    if a.beliefs != b.beliefs || a.dim() > 1 || b.dim() > 1 {
        // Beliefs must agree as *rules*; Bayes-kind coordinates agree
        // automatically on overlapping strategies.
        return None;
    }
    match (a.dim(), b.dim()) {
        (0, 0) => {
            if a.base == b.base {
                Some(a.clone())
            } else {
                None
            }
        }
        (1, 0) => absorb_point(a, &b.base),
        (0, 1) => absorb_point(b, &a.base),
        (1, 1) => merge_segments(a, b),
        _ => None,
    }
}

/// Parameter value of `point` on family `f`'s line, if the point lies on
/// the line.
fn param_on_line(f: &EquilibriumFamily, point: &[Q]) -> Option<Q> {
    let d = &f.dirs[0];
    let j = d.iter().position(|x| !x.is_zero())?;
    let t = (&point[j] - &f.base[j]) / &d[j];
    for i in 0..point.len() {
        if &f.base[i] + &t * &d[i] != point[i] {
            return None;
        }
    }
    Some(t)
}

fn absorb_point(seg: &EquilibriumFamily, point: &[Q]) -> Option<EquilibriumFamily> {
    let t = param_on_line(seg, point)?;
    let (lo, hi) = seg.param_ranges[0].clone();
    let new_range = match (&lo, &hi) {
        (Some((l, true)), _) if &t == l => (Some((t.clone(), false)), hi.clone()),
        (_, Some((h, true))) if &t == h => (lo.clone(), Some((t.clone(), false))),
        _ => {
            // Inside (already covered) or disjoint: only absorb interior.
            let inside = match (&lo, &hi) {
                (Some((l, ls)), Some((h, hs))) => {
                    (l < &t || (l == &t && !ls)) && (&t < h || (&t == h && !hs))
                }
                _ => false,
            };
            if inside {
                (lo.clone(), hi.clone())
            } else {
                return None;
            }
        }
    };
    Some(rebuild_segment(seg, new_range))
}

fn merge_segments(a: &EquilibriumFamily, b: &EquilibriumFamily) -> Option<EquilibriumFamily> {
    // Map b's endpoints onto a's line.
    let tb0 = param_on_line(a, &b.point_vector(&[b_end_value(b, 0)?]))?;
    let tb1 = param_on_line(a, &b.point_vector(&[b_end_value(b, 1)?]))?;
    let (blo, bhi) = if tb0 <= tb1 { (tb0, tb1) } else { (tb1, tb0) };
    let (b0s, b1s) = {
        let (l, h) = &b.param_ranges[0];
        (l.as_ref()?.1, h.as_ref()?.1)
    };
    let (alo, ahi) = a.param_ranges[0].clone();
    let (alo_v, alo_s) = alo?;
    let (ahi_v, ahi_s) = ahi?;
    // Intervals [alo, ahi] and [blo, bhi] on the same line: merge when
    // their closures intersect.
    if bhi < alo_v || blo > ahi_v {
        if bhi == alo_v || blo == ahi_v {
            // touching: fall through to union
        } else {
            return None;
        }
    }
    let (new_lo, new_lo_s) = if blo < alo_v {
        (blo, b0s && b1s && false)
    } else if blo == alo_v {
        (alo_v.clone(), alo_s && b0s)
    } else {
        (alo_v.clone(), alo_s)
    };
    let (new_hi, new_hi_s) = if bhi > ahi_v {
        (bhi, false)
    } else if bhi == ahi_v {
        (ahi_v.clone(), ahi_s && b1s)
    } else {
        (ahi_v.clone(), ahi_s)
    };
    Some(rebuild_segment(
        a,
        (Some((new_lo, new_lo_s)), Some((new_hi, new_hi_s))),
    ))
}

fn b_end_value(b: &EquilibriumFamily, which: usize) -> Option<Q> {
    let (lo, hi) = &b.param_ranges[0];
    if which == 0 {
        lo.as_ref().map(|(v, _)| v.clone())
    } else {
        hi.as_ref().map(|(v, _)| v.clone())
    }
}

fn rebuild_segment(seg: &EquilibriumFamily, range: (Bound, Bound)) -> EquilibriumFamily {
    let mut cons = Vec::new();
    if let Some((l, strict)) = &range.0 {
        // l ≤/< t  →  l − t ≤/< 0
        let mut e = LinExpr::zero(1);
        e.coeffs[0] = Q::from_integer((-1).into());
        e.constant = l.clone();
        cons.push((e, if *strict { Rel::Lt } else { Rel::Le }));
    }
    if let Some((h, strict)) = &range.1 {
        let mut e = LinExpr::zero(1);
        e.coeffs[0] = Q::from_integer(1.into());
        e.constant = -h.clone();
        cons.push((e, if *strict { Rel::Lt } else { Rel::Le }));
    }
    let witness = match (&range.0, &range.1) {
        (Some((l, _)), Some((h, _))) => (l + h) / Q::from_integer(2.into()),
        (Some((l, _)), None) => l.clone(),
        (None, Some((h, _))) => h.clone(),
        (None, None) => Q::zero(),
    };
    EquilibriumFamily {
        keys: seg.keys.clone(),
        base: seg.base.clone(),
        dirs: seg.dirs.clone(),
        cons,
        witness_params: vec![witness],
        param_ranges: vec![range],
        beliefs: seg.beliefs.clone(),
    }
}
