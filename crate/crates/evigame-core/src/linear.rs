//! Exact linear feasibility over the rationals: Gaussian elimination for
//! the equality part, Fourier–Motzkin elimination for the inequalities
//! (with strict/weak tracking), a deterministic interior witness, and
//! exact per-parameter ranges.
//!
//! Everything here is desk-scale: systems come from support patterns of
//! games with at most a handful of evidence items, so the FM blowup is a
//! non-issue after normalization and deduplication.

use num::{Signed, Zero};

use crate::num::Q;

/// Affine expression `Σ coeffs[i]·x_i + constant`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinExpr {
    pub coeffs: Vec<Q>,
    pub constant: Q,
}

impl LinExpr {
    pub fn zero(n: usize) -> Self {
        Self {
            coeffs: vec![Q::zero(); n],
            constant: Q::zero(),
        }
    }

    pub fn constant(n: usize, k: Q) -> Self {
        Self {
            coeffs: vec![Q::zero(); n],
            constant: k,
        }
    }

    pub fn var(n: usize, i: usize) -> Self {
        let mut e = Self::zero(n);
        e.coeffs[i] = Q::from_integer(1.into());
        e
    }

    pub fn add(&self, other: &LinExpr) -> LinExpr {
        LinExpr {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
            constant: &self.constant + &other.constant,
        }
    }

    pub fn sub(&self, other: &LinExpr) -> LinExpr {
        LinExpr {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
            constant: &self.constant - &other.constant,
        }
    }

    pub fn scale(&self, k: &Q) -> LinExpr {
        LinExpr {
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
            constant: &self.constant * k,
        }
    }

    pub fn add_term(&mut self, i: usize, k: &Q) {
        self.coeffs[i] = &self.coeffs[i] + k;
    }

    pub fn eval(&self, x: &[Q]) -> Q {
        let mut v = self.constant.clone();
        for (c, xi) in self.coeffs.iter().zip(x) {
            if !c.is_zero() {
                v += c * xi;
            }
        }
        v
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }
}

/// Relation of an expression to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    /// expr = 0
    Eq,
    /// expr ≤ 0
    Le,
    /// expr < 0
    Lt,
}

#[derive(Debug, Clone)]
pub struct System {
    pub nvars: usize,
    pub constraints: Vec<(LinExpr, Rel)>,
}

impl System {
    pub fn new(nvars: usize) -> Self {
        Self {
            nvars,
            constraints: Vec::new(),
        }
    }

    pub fn push(&mut self, expr: LinExpr, rel: Rel) {
        self.constraints.push((expr, rel));
    }

    /// Does a point satisfy every constraint (exactly, respecting
    /// strictness)?
    pub fn satisfied_by(&self, x: &[Q]) -> bool {
        self.constraints.iter().all(|(e, rel)| {
            let v = e.eval(x);
            match rel {
                Rel::Eq => v.is_zero(),
                Rel::Le => !v.is_positive(),
                Rel::Lt => v.is_negative(),
            }
        })
    }
}

/// One-sided bound on a parameter: value plus strictness.
pub type Bound = Option<(Q, bool)>;

/// The solution set of a [`System`]: an affine parametrization of the
/// equality part restricted by the projected inequalities.
#[derive(Debug, Clone)]
pub struct SolutionSet {
    pub nvars: usize,
    /// Particular solution of the equality system (free params at 0).
    pub base: Vec<Q>,
    /// One direction per free parameter.
    pub dirs: Vec<Vec<Q>>,
    /// Inequalities over the parameters (Le/Lt only).
    pub param_cons: Vec<(LinExpr, Rel)>,
    /// A feasible parameter point (interior w.r.t. strict constraints).
    pub witness_params: Vec<Q>,
    /// Exact attainable range of each parameter over the feasible set:
    /// (lower bound, upper bound), bound = (value, strict).
    pub param_ranges: Vec<(Bound, Bound)>,
    /// The original system, kept for exact membership tests.
    pub original: System,
}

impl SolutionSet {
    pub fn dim(&self) -> usize {
        self.dirs.len()
    }

    /// Point in original-variable space for a parameter choice.
    pub fn point(&self, params: &[Q]) -> Vec<Q> {
        let mut x = self.base.clone();
        for (t, dir) in params.iter().zip(&self.dirs) {
            if t.is_zero() {
                continue;
            }
            for (xi, di) in x.iter_mut().zip(dir) {
                if !di.is_zero() {
                    *xi += t * di;
                }
            }
        }
        x
    }

    pub fn witness_point(&self) -> Vec<Q> {
        self.point(&self.witness_params)
    }

    /// Exact membership of a full-variable point.
    pub fn contains(&self, x: &[Q]) -> bool {
        self.original.satisfied_by(x)
    }

    /// Exact range (lo, hi) of an affine expression over the feasible set.
    pub fn expr_range(&self, expr: &LinExpr) -> (Bound, Bound) {
        // Substitute x = base + dirs·t to get an expression in params.
        let p = self.dim();
        let mut pe = LinExpr::zero(p);
        pe.constant = expr.eval(&self.base);
        for (j, dir) in self.dirs.iter().enumerate() {
            let mut c = Q::zero();
            for (ci, di) in expr.coeffs.iter().zip(dir) {
                if !ci.is_zero() && !di.is_zero() {
                    c += ci * di;
                }
            }
            pe.coeffs[j] = c;
        }
        bound_expression(&self.param_cons, p, &pe)
    }
}

/// Solve a system: `None` means infeasible.
pub fn solve(system: &System) -> Option<SolutionSet> {
    let n = system.nvars;
    // --- Gaussian elimination on the equalities -------------------------
    let mut rows: Vec<LinExpr> = system
        .constraints
        .iter()
        .filter(|(_, r)| *r == Rel::Eq)
        .map(|(e, _)| e.clone())
        .collect();
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; n];
    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row, col)
    let mut r = 0;
    for col in 0..n {
        let Some(sel) = (r..rows.len()).find(|&i| !rows[i].coeffs[col].is_zero()) else {
            continue;
        };
        rows.swap(r, sel);
        let inv = rows[r].coeffs[col].clone();
        rows[r] = rows[r].scale(&(Q::from_integer(1.into()) / inv));
        for i in 0..rows.len() {
            if i != r && !rows[i].coeffs[col].is_zero() {
                let f = rows[i].coeffs[col].clone();
                rows[i] = rows[i].sub(&rows[r].scale(&f));
            }
        }
        pivot_of_col[col] = Some(r);
        pivots.push((r, col));
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    // Inconsistent row: 0 = nonzero constant.
    for row in &rows {
        if row.is_constant() && !row.constant.is_zero() {
            return None;
        }
    }
    let free_cols: Vec<usize> = (0..n).filter(|c| pivot_of_col[*c].is_none()).collect();
    let p = free_cols.len();
    // Particular solution: free vars at 0, pivot vars from constants.
    let mut base = vec![Q::zero(); n];
    for &(row, col) in &pivots {
        base[col] = -rows[row].constant.clone();
    }
    // Directions: one per free var.
    let mut dirs: Vec<Vec<Q>> = Vec::with_capacity(p);
    for &fc in &free_cols {
        let mut d = vec![Q::zero(); n];
        d[fc] = Q::from_integer(1.into());
        for &(row, col) in &pivots {
            d[col] = -rows[row].coeffs[fc].clone();
        }
        dirs.push(d);
    }

    // --- Substitute into the inequalities -------------------------------
    let mut param_cons: Vec<(LinExpr, Rel)> = Vec::new();
    for (e, rel) in system.constraints.iter().filter(|(_, r)| *r != Rel::Eq) {
        let mut pe = LinExpr::zero(p);
        pe.constant = e.eval(&base);
        for (j, dir) in dirs.iter().enumerate() {
            let mut c = Q::zero();
            for (ci, di) in e.coeffs.iter().zip(dir) {
                if !ci.is_zero() && !di.is_zero() {
                    c += ci * di;
                }
            }
            pe.coeffs[j] = c;
        }
        if pe.is_constant() {
            let ok = match rel {
                Rel::Le => !pe.constant.is_positive(),
                Rel::Lt => pe.constant.is_negative(),
                Rel::Eq => unreachable!(),
            };
            if !ok {
                return None;
            }
            continue;
        }
        param_cons.push(normalize(pe, *rel));
    }
    dedupe(&mut param_cons);

    // --- Fourier–Motzkin feasibility + witness --------------------------
    let witness_params = fm_witness(&param_cons, p)?;
    let mut param_ranges = Vec::with_capacity(p);
    for j in 0..p {
        let e = LinExpr::var(p, j);
        param_ranges.push(bound_expression(&param_cons, p, &e));
    }
    Some(SolutionSet {
        nvars: n,
        base,
        dirs,
        param_cons,
        witness_params,
        param_ranges,
        original: system.clone(),
    })
}

fn normalize(e: LinExpr, rel: Rel) -> (LinExpr, Rel) {
    // Scale so the first nonzero coefficient is ±1 (keeps FM numbers small
    // and makes duplicates detectable).
    if let Some(c) = e.coeffs.iter().find(|c| !c.is_zero()) {
        let s = Q::from_integer(1.into()) / c.abs();
        (e.scale(&s), rel)
    } else {
        (e, rel)
    }
}

fn dedupe(cons: &mut Vec<(LinExpr, Rel)>) {
    let mut seen = std::collections::BTreeSet::new();
    cons.retain(|(e, rel)| {
        let key = format!(
            "{:?}|{}|{}",
            rel,
            e.coeffs
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(","),
            e.constant
        );
        seen.insert(key)
    });
}

/// Eliminate parameters back-to-front; return a feasible witness, interior
/// with respect to every strict constraint, or `None` if infeasible.
fn fm_witness(cons: &[(LinExpr, Rel)], p: usize) -> Option<Vec<Q>> {
    if p == 0 {
        for (e, rel) in cons {
            let ok = match rel {
                Rel::Le => !e.constant.is_positive(),
                Rel::Lt => e.constant.is_negative(),
                Rel::Eq => e.constant.is_zero(),
            };
            if !ok {
                return None;
            }
        }
        return Some(Vec::new());
    }
    // levels[j] = constraints whose highest-index variable is j.
    let mut working: Vec<(LinExpr, Rel)> = cons.to_vec();
    let mut levels: Vec<Vec<(LinExpr, Rel)>> = vec![Vec::new(); p];
    for j in (0..p).rev() {
        let (with_j, without): (Vec<_>, Vec<_>) = working
            .into_iter()
            .partition(|(e, _)| !e.coeffs[j].is_zero());
        levels[j] = with_j.clone();
        let mut next = without;
        // Combine each (upper, lower) pair on variable j.
        let uppers: Vec<_> = with_j
            .iter()
            .filter(|(e, _)| e.coeffs[j].is_positive())
            .collect();
        let lowers: Vec<_> = with_j
            .iter()
            .filter(|(e, _)| e.coeffs[j].is_negative())
            .collect();
        for (ue, ur) in &uppers {
            for (le, lr) in &lowers {
                // ue: c_u t_j + ru ≤ 0 → t_j ≤ −ru/c_u ; le: −c_l t_j + rl ≤ 0 → t_j ≥ rl/c_l
                let cu = ue.coeffs[j].clone();
                let cl = -le.coeffs[j].clone();
                // Combined: rl/c_l ≤ −ru/c_u  →  c_u·rl + c_l·ru ≤ 0 (after clearing positives)
                let mut comb = le.scale(&cu).add(&ue.scale(&cl));
                comb.coeffs[j] = Q::zero();
                let rel = if matches!(ur, Rel::Lt) || matches!(lr, Rel::Lt) {
                    Rel::Lt
                } else {
                    Rel::Le
                };
                if comb.is_constant() {
                    let ok = match rel {
                        Rel::Le => !comb.constant.is_positive(),
                        Rel::Lt => comb.constant.is_negative(),
                        Rel::Eq => unreachable!(),
                    };
                    if !ok {
                        return None;
                    }
                } else {
                    next.push(normalize(comb, rel));
                }
            }
        }
        dedupe(&mut next);
        working = next;
    }
    // Back-substitute, picking interior points.
    let mut witness = vec![Q::zero(); p];
    for j in 0..p {
        let mut lo: Bound = None;
        let mut hi: Bound = None;
        for (e, rel) in &levels[j] {
            // e = c·t_j + rest REL 0 with rest depending on t_0..t_{j-1}.
            let c = e.coeffs[j].clone();
            let mut rest = e.clone();
            rest.coeffs[j] = Q::zero();
            let rest_v = rest.eval(&witness);
            let bound_v = -rest_v / &c;
            let strict = matches!(rel, Rel::Lt);
            if c.is_positive() {
                tighten_hi(&mut hi, bound_v, strict);
            } else {
                tighten_lo(&mut lo, bound_v, strict);
            }
        }
        witness[j] = pick_interior(&lo, &hi)?;
    }
    Some(witness)
}

fn tighten_lo(lo: &mut Bound, v: Q, strict: bool) {
    match lo {
        None => *lo = Some((v, strict)),
        Some((cur, cs)) => {
            if v > *cur || (v == *cur && strict && !*cs) {
                *lo = Some((v, strict));
            }
        }
    }
}

fn tighten_hi(hi: &mut Bound, v: Q, strict: bool) {
    match hi {
        None => *hi = Some((v, strict)),
        Some((cur, cs)) => {
            if v < *cur || (v == *cur && strict && !*cs) {
                *hi = Some((v, strict));
            }
        }
    }
}

fn pick_interior(lo: &Bound, hi: &Bound) -> Option<Q> {
    match (lo, hi) {
        (None, None) => Some(Q::zero()),
        (Some((l, ls)), None) => Some(if *ls {
            l + Q::from_integer(1.into())
        } else {
            l.clone()
        }),
        (None, Some((h, hs))) => Some(if *hs {
            h - Q::from_integer(1.into())
        } else {
            h.clone()
        }),
        (Some((l, ls)), Some((h, hs))) => {
            if l > h || (l == h && (*ls || *hs)) {
                return None;
            }
            if l == h {
                return Some(l.clone());
            }
            Some((l + h) / Q::from_integer(2.into()))
        }
    }
}

/// Exact (lo, hi) bounds of an affine expression over the feasible set of
/// inequality constraints on `p` parameters.
pub fn bound_expr_public(cons: &[(LinExpr, Rel)], p: usize, expr: &LinExpr) -> (Bound, Bound) {
    bound_expression(cons, p, expr)
}

/// Exact (lo, hi) bounds of an affine expression subject to constraints,
/// via FM with a slack variable for the expression.
fn bound_expression(cons: &[(LinExpr, Rel)], p: usize, expr: &LinExpr) -> (Bound, Bound) {
    // Variables: t_0..t_{p-1}, s (index p). Enforce s = expr, eliminate
    // the t's, and read the bounds on s from the final level.
    let ext = |e: &LinExpr| -> LinExpr {
        let mut x = LinExpr::zero(p + 1);
        x.coeffs[..p].clone_from_slice(&e.coeffs);
        x.constant = e.constant.clone();
        x
    };
    let mut working: Vec<(LinExpr, Rel)> = cons.iter().map(|(e, r)| (ext(e), *r)).collect();
    let mut eq1 = ext(expr);
    eq1.coeffs[p] = Q::from_integer((-1).into());
    working.push((eq1.clone(), Rel::Le));
    working.push((eq1.scale(&Q::from_integer((-1).into())), Rel::Le));
    // Eliminate t_{p-1}..t_0, keep s.
    for j in (0..p).rev() {
        let (with_j, without): (Vec<_>, Vec<_>) = working
            .into_iter()
            .partition(|(e, _)| !e.coeffs[j].is_zero());
        let mut next = without;
        let uppers: Vec<_> = with_j
            .iter()
            .filter(|(e, _)| e.coeffs[j].is_positive())
            .collect();
        let lowers: Vec<_> = with_j
            .iter()
            .filter(|(e, _)| e.coeffs[j].is_negative())
            .collect();
        for (ue, ur) in &uppers {
            for (le, lr) in &lowers {
                let cu = ue.coeffs[j].clone();
                let cl = -le.coeffs[j].clone();
                let mut comb = le.scale(&cu).add(&ue.scale(&cl));
                comb.coeffs[j] = Q::zero();
                let rel = if matches!(ur, Rel::Lt) || matches!(lr, Rel::Lt) {
                    Rel::Lt
                } else {
                    Rel::Le
                };
                if !comb.is_constant() || comb.constant.is_positive() {
                    next.push(normalize(comb, rel));
                }
            }
        }
        dedupe(&mut next);
        working = next;
    }
    let mut lo: Bound = None;
    let mut hi: Bound = None;
    for (e, rel) in &working {
        let c = e.coeffs[p].clone();
        if c.is_zero() {
            continue;
        }
        let v = -e.constant.clone() / &c;
        let strict = matches!(rel, Rel::Lt);
        if c.is_positive() {
            tighten_hi(&mut hi, v, strict);
        } else {
            tighten_lo(&mut lo, v, strict);
        }
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{q, qi};

    fn le(e: LinExpr) -> (LinExpr, Rel) {
        (e, Rel::Le)
    }

    #[test]
    fn point_system() {
        // x + y = 1, x − y = 0 → (1/2, 1/2)
        let mut s = System::new(2);
        let mut e = LinExpr::zero(2);
        e.coeffs = vec![qi(1), qi(1)];
        e.constant = qi(-1);
        s.push(e, Rel::Eq);
        let mut e = LinExpr::zero(2);
        e.coeffs = vec![qi(1), qi(-1)];
        s.push(e, Rel::Eq);
        let sol = solve(&s).unwrap();
        assert_eq!(sol.dim(), 0);
        assert_eq!(sol.witness_point(), vec![q(1, 2), q(1, 2)]);
    }

    #[test]
    fn segment_with_strict_end() {
        // x + y = 1, x > 0, y ≥ 0  →  x ∈ (0, 1]
        let mut s = System::new(2);
        let mut e = LinExpr::zero(2);
        e.coeffs = vec![qi(1), qi(1)];
        e.constant = qi(-1);
        s.push(e, Rel::Eq);
        let mut e = LinExpr::zero(2);
        e.coeffs = vec![qi(-1), qi(0)];
        s.push(e, Rel::Lt);
        let mut e = LinExpr::zero(2);
        e.coeffs = vec![qi(0), qi(-1)];
        s.push(le(e).0, Rel::Le);
        let sol = solve(&s).unwrap();
        assert_eq!(sol.dim(), 1);
        let x_expr = LinExpr::var(2, 0);
        let (lo, hi) = sol.expr_range(&x_expr);
        assert_eq!(lo, Some((qi(0), true)));
        assert_eq!(hi, Some((qi(1), false)));
        assert!(sol.contains(&[q(1, 3), q(2, 3)]));
        assert!(!sol.contains(&[qi(0), qi(1)]));
        assert!(sol.contains(&sol.witness_point()));
    }

    #[test]
    fn infeasible_cases() {
        // x ≥ 1 and x < 1 with x free.
        let mut s = System::new(1);
        let mut e = LinExpr::zero(1);
        e.coeffs = vec![qi(-1)];
        e.constant = qi(1);
        s.push(e, Rel::Le); // 1 − x ≤ 0 → x ≥ 1
        let mut e = LinExpr::zero(1);
        e.coeffs = vec![qi(1)];
        e.constant = qi(-1);
        s.push(e, Rel::Lt); // x − 1 < 0 → x < 1
        assert!(solve(&s).is_none());

        // Contradictory equalities.
        let mut s = System::new(1);
        let mut e = LinExpr::zero(1);
        e.coeffs = vec![qi(1)];
        s.push(e.clone(), Rel::Eq);
        e.constant = qi(-1);
        s.push(e, Rel::Eq);
        assert!(solve(&s).is_none());
    }

    #[test]
    fn two_free_params() {
        // Simplex in 3 vars: x+y+z = 1, all ≥ 0: dim 2, ranges [0,1].
        let mut s = System::new(3);
        let mut e = LinExpr::zero(3);
        e.coeffs = vec![qi(1), qi(1), qi(1)];
        e.constant = qi(-1);
        s.push(e, Rel::Eq);
        for i in 0..3 {
            let mut e = LinExpr::zero(3);
            e.coeffs[i] = qi(-1);
            s.push(e, Rel::Le);
        }
        let sol = solve(&s).unwrap();
        assert_eq!(sol.dim(), 2);
        for i in 0..3 {
            let (lo, hi) = sol.expr_range(&LinExpr::var(3, i));
            assert_eq!(lo, Some((qi(0), false)));
            assert_eq!(hi, Some((qi(1), false)));
        }
        assert!(sol.contains(&sol.witness_point()));
    }
}
