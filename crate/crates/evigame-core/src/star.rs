//! The universal objects of the disturbed-game analysis: the belief system
//! μ* and the sender-strategy set Σ* that are common to the truth-leaning
//! equilibria of every disturbed game.
//!
//! Because the sender's expected payoff in a disturbed game is a strictly
//! increasing transform of the receiver's posterior, the computation runs
//! in an auxiliary game whose sender utility *is* the belief. A solution is
//! an ordered pooling structure: types partition into pools by the belief
//! level they attain, every pool's belief is the pooled posterior of its
//! members, and message-level Bayes consistency is a balanced-flow problem
//! inside each pool.
//!
//! The solver is two-phase: a damped best-response iteration in floats
//! proposes the pooling structure, then an exact phase verifies it and
//! constructs a representative strategy; on any failure it falls back to
//! full enumeration of set partitions (feasible for |E| ≤ 8). The
//! enumeration doubles as an independent oracle in tests.

use num::{One, Signed, Zero};
use thiserror::Error;

use crate::check::{CheckResult, CheckViolation};
use crate::eq_solve;
use crate::game::{
    face_value_belief_idx, posterior_from_strategy_idx, validate_game, BeliefSystem, EvIdx,
    EvidenceGame, GameError, Posterior, SenderStrategy,
};
use crate::num::{format_rational, to_f64, Q};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolverError {
    #[error("invalid game: {0}")]
    InvalidGame(String),
    #[error("game exceeds the exhaustive regime: {0}")]
    RegimeExceeded(String),
    #[error("solver defect: {0}")]
    Defect(String),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Linear Bayes equality for one message: `Σ_e coeffs[e]·σ(m|e) = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BayesEquality {
    pub message: EvIdx,
    /// `(type, F_G(e)π₀(1−μ*(m)) − F_B(e)(1−π₀)μ*(m))` for every type
    /// permitted to send the message.
    pub coeffs: Vec<(EvIdx, Q)>,
}

/// Description of the closed strategy set Σ*: per-type permitted supports,
/// forced-truth indicators, the linear Bayes equalities, and which
/// messages every member must reach.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigmaStarPolytope {
    /// `M(e)`: the messages attaining the type's equilibrium belief level.
    pub supports: Vec<Vec<EvIdx>>,
    /// σ(e|e) = 1 is forced iff the type's own message attains its level.
    pub forced_truth: Vec<bool>,
    pub equalities: Vec<BayesEquality>,
    /// Messages whose belief differs from face value must be reached by
    /// every member of Σ*.
    pub reach_required: Vec<bool>,
}

/// Per-message diagnostic for the fixed-point belief formula and the
/// truth indicator of the auxiliary-game characterization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct A2Diagnostic {
    pub message: EvIdx,
    pub face_value: Q,
    pub mu_star: Q,
    /// Bayes fraction under the representative strategy; `None` when the
    /// message is unreached (0/0-undefined).
    pub bayes_term: Option<Q>,
    /// Whether μ* equals min{ν, Bayes} where the Bayes term is defined.
    pub min_matches: Option<bool>,
    /// The indicator 1{μ*(m) ≤ ν(m)}.
    pub indicator: bool,
    /// Representative σ*(m|m).
    pub sigma_truth: Q,
    /// Whether the indicator agrees with the representative truth mass.
    /// Mismatches are reported, not errors.
    pub indicator_matches: bool,
}

/// One pool of the equilibrium structure, for reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolSummary {
    pub types: Vec<EvIdx>,
    pub messages: Vec<EvIdx>,
    pub value: Q,
}

/// The universal belief system and sender-strategy set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarSolution {
    pub mu_star: BeliefSystem,
    /// A representative element of Σ*.
    pub sigma_star: SenderStrategy,
    pub polytope: SigmaStarPolytope,
    pub diagnostics: Vec<A2Diagnostic>,
    pub pools: Vec<PoolSummary>,
}

// ---------------------------------------------------------------------------
// Independent re-verification of the defining conditions
// ---------------------------------------------------------------------------

/// Check the auxiliary-game truth-leaning conditions directly:
/// (a) supports maximize the belief over the feasible set,
/// (b) truth priority: a type whose own message attains the maximum
///     discloses truthfully with probability one,
/// (c) Bayes consistency on reached messages,
/// (d) face value off path.
pub fn verify_star_conditions(
    game: &EvidenceGame,
    sigma: &SenderStrategy,
    mu: &BeliefSystem,
) -> CheckResult {
    let mut res = CheckResult::default();
    let n = game.n_evidence();
    for e in 0..n {
        let lc = game.space.lower_contour(e);
        let best = lc.iter().map(|&m| &mu.beliefs[m]).max().unwrap().clone();
        for m in sigma.support(e) {
            if mu.beliefs[m] != best {
                res.push(
                    "belief optimality",
                    format!("σ({}|{})", game.space.items[m], game.space.items[e]),
                    format!(
                        "belief {} below the attainable {}",
                        format_rational(&mu.beliefs[m]),
                        format_rational(&best)
                    ),
                );
            }
        }
        if mu.beliefs[e] == best && !sigma.rows[e][e].is_one() {
            res.push(
                "truth priority",
                format!("σ({0}|{0})", game.space.items[e]),
                format!("σ = {}", format_rational(&sigma.rows[e][e])),
            );
        }
    }
    for m in 0..n {
        match posterior_from_strategy_idx(game, sigma, m) {
            Posterior::Reached(p) => {
                if p != mu.beliefs[m] {
                    res.push(
                        "Bayes consistency",
                        format!("μ({})", game.space.items[m]),
                        format!(
                            "Bayes {} vs μ* {}",
                            format_rational(&p),
                            format_rational(&mu.beliefs[m])
                        ),
                    );
                }
            }
            Posterior::Unreached => {
                let nu = face_value_belief_idx(game, m);
                if nu != mu.beliefs[m] {
                    res.push(
                        "off-path face value",
                        format!("μ({})", game.space.items[m]),
                        format!(
                            "ν {} vs μ* {}",
                            format_rational(&nu),
                            format_rational(&mu.beliefs[m])
                        ),
                    );
                }
            }
        }
    }
    res
}

// ---------------------------------------------------------------------------
// Structure checking (phase 2)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Used(usize),
    Unreached,
}

struct Candidate {
    mu: Vec<Q>,
    sigma: SenderStrategy,
    pools: Vec<PoolSummary>,
}

/// Pooled posterior of a set of types.
fn pool_value(game: &EvidenceGame, pool: &[EvIdx]) -> Q {
    let num: Q = pool.iter().map(|&e| game.w_good(e)).sum();
    let den: Q = pool
        .iter()
        .map(|&e| game.w_good(e) + game.w_bad(e))
        .sum();
    num / den
}

/// Exact check of one pooling structure (a set partition of the types).
/// Returns every verified candidate under the partition (statuses of
/// ambiguous messages are enumerated in canonical order).
fn check_partition(game: &EvidenceGame, partition: &[Vec<EvIdx>]) -> Vec<Candidate> {
    let n = game.n_evidence();
    // Order pools by value, descending; values must be strictly decreasing
    // (pools are payoff levels, so equal values mean a mis-split).
    let mut pools: Vec<(Vec<EvIdx>, Q)> = partition
        .iter()
        .map(|p| (p.clone(), pool_value(game, p)))
        .collect();
    pools.sort_by(|a, b| b.1.cmp(&a.1));
    for w in pools.windows(2) {
        if w[0].1 == w[1].1 {
            return Vec::new();
        }
    }
    let pool_of: Vec<usize> = {
        let mut v = vec![0; n];
        for (k, (p, _)) in pools.iter().enumerate() {
            for &e in p {
                v[e] = k;
            }
        }
        v
    };
    let values: Vec<Q> = pools.iter().map(|(_, v)| v.clone()).collect();
    let nu: Vec<Q> = (0..n).map(|m| face_value_belief_idx(game, m)).collect();

    // Lowest-value pool that can reach each message; only that pool may use
    // it (any higher pool using it would tempt the lower pool's types).
    let mut lowest_pool = vec![usize::MAX; n];
    for m in 0..n {
        for e in game.space.upper_contour(m) {
            let k = pool_of[e];
            if lowest_pool[m] == usize::MAX || values[k] < values[lowest_pool[m]] {
                lowest_pool[m] = k;
            }
        }
    }

    // Message statuses: forced Used unless leaving it unreached is
    // consistent (face value no better than anyone reaching it could get,
    // and strictly below the owner's level so truth priority stays quiet).
    let mut ambiguous: Vec<EvIdx> = Vec::new();
    let mut forced: Vec<Option<Status>> = vec![None; n];
    for m in 0..n {
        let j = lowest_pool[m];
        let eligible = nu[m] <= values[j] && nu[m] < values[pool_of[m]];
        if eligible {
            ambiguous.push(m);
        } else {
            forced[m] = Some(Status::Used(j));
        }
    }

    let mut found = Vec::new();
    for mask in 0u64..(1u64 << ambiguous.len()) {
        let mut status: Vec<Status> = (0..n)
            .map(|m| forced[m].unwrap_or(Status::Unreached))
            .collect();
        for (bit, &m) in ambiguous.iter().enumerate() {
            status[m] = if mask & (1 << bit) == 0 {
                Status::Used(lowest_pool[m])
            } else {
                Status::Unreached
            };
        }
        if let Some(c) = check_statuses(game, &pools, &pool_of, &values, &nu, &status) {
            found.push(c);
        }
    }
    found
}

fn check_statuses(
    game: &EvidenceGame,
    pools: &[(Vec<EvIdx>, Q)],
    pool_of: &[usize],
    values: &[Q],
    nu: &[Q],
    status: &[Status],
) -> Option<Candidate> {
    let n = game.n_evidence();
    let mu: Vec<Q> = (0..n)
        .map(|m| match status[m] {
            Status::Used(j) => values[j].clone(),
            Status::Unreached => nu[m].clone(),
        })
        .collect();
    // Every type's attainable maximum must equal its pool value.
    for e in 0..n {
        let best = game
            .space
            .lower_contour(e)
            .into_iter()
            .map(|m| mu[m].clone())
            .max()
            .unwrap();
        if best != values[pool_of[e]] {
            return None;
        }
    }
    // Per-pool balanced flows.
    let mut sigma = SenderStrategy {
        rows: vec![vec![Q::zero(); n]; n],
    };
    let mut summaries = Vec::new();
    for (k, (types, value)) in pools.iter().enumerate() {
        let messages: Vec<EvIdx> = (0..n)
            .filter(|&m| status[m] == Status::Used(k))
            .collect();
        if !solve_pool(game, k, types, &messages, value, pool_of, status, &mut sigma) {
            return None;
        }
        summaries.push(PoolSummary {
            types: types.clone(),
            messages,
            value: value.clone(),
        });
    }
    let mu_sys = BeliefSystem {
        beliefs: mu.clone(),
    };
    if !verify_star_conditions(game, &sigma, &mu_sys).pass() {
        return None;
    }
    Some(Candidate {
        mu,
        sigma,
        pools: summaries,
    })
}

/// Find a balanced flow for one pool and write the rows into `sigma`.
///
/// Excess `x(e) = F_G(e)π₀(1−v) − F_B(e)(1−π₀)v` must cancel at every
/// used message; truthful (pinned) types dump their excess on their own
/// message; the rest route through a max-flow; zero-excess types and
/// residual-cycle augmentation secure strictly positive reach.
#[allow(clippy::too_many_arguments)]
fn solve_pool(
    game: &EvidenceGame,
    k: usize,
    types: &[EvIdx],
    messages: &[EvIdx],
    value: &Q,
    pool_of: &[usize],
    status: &[Status],
    sigma: &mut SenderStrategy,
) -> bool {
    let excess = |e: EvIdx| -> Q { game.w_good(e) * (Q::one() - value) - game.w_bad(e) * value };
    let pinned = |e: EvIdx| -> bool { pool_of[e] == k && status[e] == Status::Used(k) };

    let mut free: Vec<EvIdx> = Vec::new();
    for &e in types {
        if pinned(e) {
            sigma.rows[e][e] = Q::one();
        } else {
            free.push(e);
        }
    }
    let allowed = |e: EvIdx| -> Vec<EvIdx> {
        messages
            .iter()
            .copied()
            .filter(|&m| game.space.leq(m, e))
            .collect()
    };
    for &e in &free {
        if allowed(e).is_empty() {
            return false;
        }
    }

    // Max-flow network over suppliers (positive excess) and sinks
    // (negative excess); pinned excess enters at the message directly.
    let suppliers: Vec<EvIdx> = free.iter().copied().filter(|&e| excess(e).is_positive()).collect();
    let sinks: Vec<EvIdx> = free.iter().copied().filter(|&e| excess(e).is_negative()).collect();
    let zeros: Vec<EvIdx> = free.iter().copied().filter(|&e| excess(e).is_zero()).collect();

    let msg_pos: std::collections::BTreeMap<EvIdx, usize> = messages
        .iter()
        .enumerate()
        .map(|(i, &m)| (m, i))
        .collect();
    // flow[s][m]: supplier s → message m; flow_out[m][t]: message → sink t.
    let mut fin = vec![vec![Q::zero(); messages.len()]; suppliers.len()];
    let mut fout = vec![vec![Q::zero(); sinks.len()]; messages.len()];
    // Pin loads.
    let pin_load: Vec<Q> = messages
        .iter()
        .map(|&m| {
            if pinned(m) && types.contains(&m) {
                excess(m)
            } else {
                Q::zero()
            }
        })
        .collect();
    // Demand each message must absorb from the network: positive pin load
    // must flow out to sinks, negative must be fed by suppliers.
    // Total supply-side quantity to route:
    let supply_total: Q = suppliers.iter().map(|&e| excess(e)).sum::<Q>()
        + pin_load.iter().filter(|x| x.is_positive()).cloned().sum::<Q>();
    // Ford–Fulkerson on a small layered network.
    // Node ids: 0 = source, 1 = sink, suppliers, messages, sinks.
    let ns = suppliers.len();
    let nm = messages.len();
    let nt = sinks.len();
    let id_src = 0usize;
    let id_dst = 1usize;
    let id_sup = |i: usize| 2 + i;
    let id_msg = |i: usize| 2 + ns + i;
    let id_snk = |i: usize| 2 + ns + nm + i;
    let n_nodes = 2 + ns + nm + nt;
    // cap[u][v]: None = no edge, Some(q) = remaining capacity. Infinite
    // middle edges get a capacity larger than anything routable.
    let inf: Q = &supply_total + Q::one();
    let mut cap: Vec<Vec<Option<Q>>> = vec![vec![None; n_nodes]; n_nodes];
    for (i, &e) in suppliers.iter().enumerate() {
        cap[id_src][id_sup(i)] = Some(excess(e));
        for &m in &allowed(e) {
            cap[id_sup(i)][id_msg(msg_pos[&m])] = Some(inf.clone());
        }
    }
    for (j, load) in pin_load.iter().enumerate() {
        if load.is_positive() {
            cap[id_src][id_msg(j)] = Some(load.clone());
        } else if load.is_negative() {
            cap[id_msg(j)][id_dst] = Some(-load.clone());
        }
    }
    for (i, &e) in sinks.iter().enumerate() {
        cap[id_snk(i)][id_dst] = Some(-excess(e));
        for &m in &allowed(e) {
            cap[id_msg(msg_pos[&m])][id_snk(i)] = Some(inf.clone());
        }
    }
    let mut flow: Vec<Vec<Q>> = vec![vec![Q::zero(); n_nodes]; n_nodes];
    let mut pushed = Q::zero();
    loop {
        // BFS for an augmenting path (deterministic node order).
        let mut prev = vec![usize::MAX; n_nodes];
        prev[id_src] = id_src;
        let mut queue = std::collections::VecDeque::from([id_src]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n_nodes {
                if prev[v] != usize::MAX {
                    continue;
                }
                let forward = cap[u][v]
                    .as_ref()
                    .map(|c| (c - &flow[u][v]).is_positive())
                    .unwrap_or(false);
                let backward = flow[v][u].is_positive();
                if forward || backward {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if prev[id_dst] == usize::MAX {
            break;
        }
        // Bottleneck.
        let mut bottleneck: Option<Q> = None;
        let mut v = id_dst;
        while v != id_src {
            let u = prev[v];
            let avail = if cap[u][v]
                .as_ref()
                .map(|c| (c - &flow[u][v]).is_positive())
                .unwrap_or(false)
            {
                cap[u][v].as_ref().unwrap() - &flow[u][v]
            } else {
                flow[v][u].clone()
            };
            bottleneck = Some(match bottleneck {
                None => avail,
                Some(b) => b.min(avail),
            });
            v = u;
        }
        let b = bottleneck.unwrap();
        let mut v = id_dst;
        while v != id_src {
            let u = prev[v];
            if cap[u][v]
                .as_ref()
                .map(|c| (c - &flow[u][v]).is_positive())
                .unwrap_or(false)
            {
                flow[u][v] += &b;
            } else {
                flow[v][u] -= &b;
            }
            v = u;
        }
        pushed += &b;
    }
    if pushed != supply_total {
        return false;
    }
    for (i, _) in suppliers.iter().enumerate() {
        for j in 0..nm {
            fin[i][j] = flow[id_sup(i)][id_msg(j)].clone();
        }
    }
    for j in 0..nm {
        for (i, _) in sinks.iter().enumerate() {
            fout[j][i] = flow[id_msg(j)][id_snk(i)].clone();
        }
    }

    // Reach bookkeeping.
    let mut reached: Vec<bool> = (0..nm)
        .map(|j| {
            pinned(messages[j])
                || fin.iter().any(|row| row[j].is_positive())
                || fout[j].iter().any(|x| x.is_positive())
        })
        .collect();
    // Zero-excess rows: cover unreached messages first, lexicographically
    // smallest message otherwise.
    for &e in &zeros {
        let al = allowed(e);
        let uncovered: Vec<EvIdx> = al
            .iter()
            .copied()
            .filter(|m| !reached[msg_pos[m]])
            .collect();
        if uncovered.is_empty() {
            sigma.rows[e][al[0]] = Q::one();
        } else {
            let share = Q::one() / Q::from_integer((uncovered.len() as i64).into());
            for m in uncovered {
                sigma.rows[e][m] = share.clone();
                reached[msg_pos[&m]] = true;
            }
        }
    }
    // Residual-cycle augmentation for messages still unreached: push half
    // of the smallest flow on a compensating cycle through the message, so
    // existing positive flows stay positive.
    for j in 0..nm {
        if reached[j] {
            continue;
        }
        if !augment_through(
            &suppliers, &sinks, &mut fin, &mut fout, j, &|e: EvIdx| {
                allowed(e).contains(&messages[j])
            },
        ) {
            return false;
        }
        reached[j] = true;
    }

    // Emit rows for suppliers and sinks.
    for (i, &e) in suppliers.iter().enumerate() {
        let x = excess(e);
        for j in 0..nm {
            if fin[i][j].is_positive() {
                sigma.rows[e][messages[j]] = &fin[i][j] / &x;
            }
        }
    }
    for (i, &e) in sinks.iter().enumerate() {
        let x = -excess(e);
        for j in 0..nm {
            if fout[j][i].is_positive() {
                sigma.rows[e][messages[j]] = &fout[j][i] / &x;
            }
        }
    }
    true
}

/// Try to reroute flow so message `j` carries strictly positive flow.
/// A supplier→j→sink detour needs a compensating path from the sink side
/// back to the supplier side in the residual graph of the current flows.
fn augment_through(
    suppliers: &[EvIdx],
    sinks: &[EvIdx],
    fin: &mut [Vec<Q>],
    fout: &mut [Vec<Q>],
    j: usize,
    allowed_at_j: &dyn Fn(EvIdx) -> bool,
) -> bool {
    let ns = suppliers.len();
    let nt = sinks.len();
    let nm = fout.len();
    let cand_sup: Vec<usize> = (0..ns).filter(|&i| allowed_at_j(suppliers[i])).collect();
    let cand_snk: Vec<usize> = (0..nt).filter(|&i| allowed_at_j(sinks[i])).collect();
    if cand_sup.is_empty() || cand_snk.is_empty() {
        return false;
    }
    // Residual graph: suppliers ↔ messages via fin, messages ↔ sinks via
    // fout. Forward edges (supplier→message, message→sink) are
    // uncapacitated; backward edges need positive flow.
    // Nodes: suppliers 0..ns, messages ns..ns+nm, sinks ns+nm.. .
    let node_sup = |i: usize| i;
    let node_msg = |m: usize| ns + m;
    let node_snk = |i: usize| ns + nm + i;
    let n_nodes = ns + nm + nt;
    for &t0 in &cand_snk {
        // BFS from sink t0 back to any candidate supplier.
        let mut prev = vec![usize::MAX; n_nodes];
        prev[node_snk(t0)] = node_snk(t0);
        let mut queue = std::collections::VecDeque::from([node_snk(t0)]);
        let mut hit: Option<usize> = None;
        'bfs: while let Some(u) = queue.pop_front() {
            // sink → message: backward edge needs fout[m][t] > 0.
            if u >= ns + nm {
                let t = u - ns - nm;
                for m in 0..nm {
                    if fout[m][t].is_positive() && prev[node_msg(m)] == usize::MAX {
                        prev[node_msg(m)] = u;
                        queue.push_back(node_msg(m));
                    }
                }
            } else if u >= ns {
                let m = u - ns;
                // message → supplier: backward edge needs fin[s][m] > 0.
                for s in 0..ns {
                    if fin[s][m].is_positive() && prev[node_sup(s)] == usize::MAX {
                        prev[node_sup(s)] = u;
                        if cand_sup.contains(&s) {
                            hit = Some(s);
                            break 'bfs;
                        }
                        queue.push_back(node_sup(s));
                    }
                }
                // message → sink: forward, always available.
                for t in 0..nt {
                    if prev[node_snk(t)] == usize::MAX {
                        prev[node_snk(t)] = u;
                        queue.push_back(node_snk(t));
                    }
                }
            } else {
                // supplier → message: forward, always available.
                for m in 0..nm {
                    if prev[node_msg(m)] == usize::MAX {
                        prev[node_msg(m)] = node_sup(u);
                        queue.push_back(node_msg(m));
                    }
                }
            }
        }
        let Some(s_hit) = hit else { continue };
        // Reconstruct path s_hit → … → t0 (we walked backwards).
        let mut path = vec![node_sup(s_hit)];
        let mut cur = node_sup(s_hit);
        while cur != node_snk(t0) {
            cur = prev[cur];
            path.push(cur);
        }
        // Half the minimum flow on the backward edges of the cycle.
        let mut delta: Option<Q> = None;
        for w in path.windows(2) {
            let (u, v) = (w[0], w[1]);
            // Edge u→v in the walk corresponds to either a forward edge
            // (no constraint) or a backward edge with positive flow.
            let f = residual_flow(u, v, ns, nm, fin, fout);
            if let Some(f) = f {
                delta = Some(match delta {
                    None => f,
                    Some(d) => d.min(f),
                });
            }
        }
        let delta = match delta {
            Some(d) => d / Q::from_integer(2.into()),
            // Pure forward cycle: any positive amount works.
            None => Q::one(),
        };
        // Apply: add delta along supplier→j→sink, subtract along the
        // backward edges of the compensating path, add along its forward
        // edges.
        fin[s_hit][j] += &delta;
        fout[j][t0] += &delta;
        for w in path.windows(2) {
            apply_edge(w[0], w[1], ns, nm, fin, fout, &delta);
        }
        return true;
    }
    false
}

/// Flow available on the backward interpretation of walk edge u→v, if it
/// is a backward edge.
fn residual_flow(
    u: usize,
    v: usize,
    ns: usize,
    nm: usize,
    fin: &[Vec<Q>],
    fout: &[Vec<Q>],
) -> Option<Q> {
    if u < ns && v >= ns && v < ns + nm {
        // supplier → message: in the compensating path this walks the BFS
        // tree edge recorded as prev[message] = supplier? The BFS stored
        // prev pointers from sink side; reconstructed path edges u→v mean
        // v = prev of u in BFS … interpret below in apply_edge.
        None
    } else {
        walk_edge_kind(u, v, ns, nm).map(|(kind, s, m, t)| match kind {
            WalkEdge::MsgToSup => fin[s][m].clone(),
            WalkEdge::SnkToMsg => fout[m][t].clone(),
            _ => unreachable!(),
        })
    }
}

#[derive(Clone, Copy)]
enum WalkEdge {
    SupToMsg,
    MsgToSup,
    MsgToSnk,
    SnkToMsg,
}

fn walk_edge_kind(
    u: usize,
    v: usize,
    ns: usize,
    nm: usize,
) -> Option<(WalkEdge, usize, usize, usize)> {
    let loc = |x: usize| {
        if x < ns {
            (0, x)
        } else if x < ns + nm {
            (1, x - ns)
        } else {
            (2, x - ns - nm)
        }
    };
    let (ku, iu) = loc(u);
    let (kv, iv) = loc(v);
    match (ku, kv) {
        (0, 1) => Some((WalkEdge::SupToMsg, iu, iv, 0)),
        (1, 0) => Some((WalkEdge::MsgToSup, iv, iu, 0)),
        (1, 2) => Some((WalkEdge::MsgToSnk, 0, iu, iv)),
        (2, 1) => Some((WalkEdge::SnkToMsg, 0, iv, iu)),
        _ => None,
    }
}

/// Apply delta along walk edge u→v. The walk runs supplier → … → sink t0;
/// an edge supplier→message on the walk means the supplier RE-ROUTES delta
/// into that message (forward, add); message→supplier means the supplier
/// withdraws delta from the message (backward, subtract); message→sink
/// adds, sink→message subtracts.
fn apply_edge(u: usize, v: usize, ns: usize, nm: usize, fin: &mut [Vec<Q>], fout: &mut [Vec<Q>], delta: &Q) {
    if let Some((kind, s, m, t)) = walk_edge_kind(u, v, ns, nm) {
        match kind {
            WalkEdge::SupToMsg => fin[s][m] += delta,
            WalkEdge::MsgToSup => fin[s][m] -= delta,
            WalkEdge::MsgToSnk => fout[m][t] += delta,
            WalkEdge::SnkToMsg => fout[m][t] -= delta,
        }
    }
}

// ---------------------------------------------------------------------------
// Phase 1: damped belief iteration (structure discovery only)
// ---------------------------------------------------------------------------

/// Propose a pooling partition by damped best-response iteration in
/// floats. The output is only a hypothesis; phase 2 verifies it exactly.
fn phase1_partition(game: &EvidenceGame) -> Vec<Vec<EvIdx>> {
    let n = game.n_evidence();
    let wg: Vec<f64> = (0..n).map(|e| to_f64(&game.w_good(e))).collect();
    let wb: Vec<f64> = (0..n).map(|e| to_f64(&game.w_bad(e))).collect();
    let nu: Vec<f64> = (0..n)
        .map(|m| face_value_belief_idx(game, m))
        .map(|q| to_f64(&q))
        .collect();
    let lc: Vec<Vec<EvIdx>> = (0..n).map(|e| game.space.lower_contour(e)).collect();

    let mut sigma = vec![vec![0.0f64; n]; n];
    for (e, row) in sigma.iter_mut().enumerate() {
        row[e] = 1.0;
    }
    let mut mu = vec![0.0f64; n];
    let mut last_sig: Option<Vec<Vec<EvIdx>>> = None;
    let mut stable = 0;
    for _ in 0..10_000 {
        for (m, mu_m) in mu.iter_mut().enumerate() {
            let mut num = 0.0;
            let mut den = 0.0;
            for e in 0..n {
                if game.space.leq(m, e) {
                    num += sigma[e][m] * wg[e];
                    den += sigma[e][m] * (wg[e] + wb[e]);
                }
            }
            *mu_m = if den > 1e-14 { num / den } else { nu[m] };
        }
        let mut best_sets: Vec<Vec<EvIdx>> = Vec::with_capacity(n);
        for e in 0..n {
            let best = lc[e].iter().map(|&m| mu[m]).fold(f64::MIN, f64::max);
            best_sets.push(lc[e].iter().copied().filter(|&m| mu[m] >= best - 1e-9).collect());
        }
        for e in 0..n {
            let b = &best_sets[e];
            let mut target = vec![0.0f64; n];
            if b.contains(&e) {
                target[e] = 1.0;
            } else {
                for &m in b {
                    target[m] = 1.0 / b.len() as f64;
                }
            }
            let mut total = 0.0;
            for m in 0..n {
                sigma[e][m] = 0.5 * sigma[e][m] + 0.5 * target[m];
                if sigma[e][m] < 1e-12 {
                    sigma[e][m] = 0.0;
                }
                total += sigma[e][m];
            }
            for x in sigma[e].iter_mut() {
                *x /= total;
            }
        }
        if last_sig.as_ref() == Some(&best_sets) {
            stable += 1;
            if stable >= 10 {
                break;
            }
        } else {
            stable = 0;
            last_sig = Some(best_sets);
        }
    }
    // Cluster types by attained payoff level.
    let mut payoff: Vec<(EvIdx, f64)> = (0..n)
        .map(|e| {
            let v = lc[e].iter().map(|&m| mu[m]).fold(f64::MIN, f64::max);
            (e, v)
        })
        .collect();
    payoff.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut partition: Vec<Vec<EvIdx>> = Vec::new();
    let mut cur_level = f64::NAN;
    for (e, v) in payoff {
        if partition.is_empty() || (cur_level - v).abs() > 1e-7 {
            partition.push(vec![e]);
            cur_level = v;
        } else {
            partition.last_mut().unwrap().push(e);
        }
    }
    for p in partition.iter_mut() {
        p.sort();
    }
    partition
}

// ---------------------------------------------------------------------------
// Enumeration of set partitions (fallback + oracle)
// ---------------------------------------------------------------------------

fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut current: Vec<Vec<usize>> = Vec::new();
    fn rec(i: usize, n: usize, current: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == n {
            out.push(current.clone());
            return;
        }
        for b in 0..current.len() {
            current[b].push(i);
            rec(i + 1, n, current, out);
            current[b].pop();
        }
        current.push(vec![i]);
        rec(i + 1, n, current, out);
        current.pop();
    }
    rec(0, n, &mut current, &mut out);
    out
}

// ---------------------------------------------------------------------------
// Public entry points
// ---------------------------------------------------------------------------

fn assemble(game: &EvidenceGame, cand: Candidate) -> StarSolution {
    let n = game.n_evidence();
    let mu_star = BeliefSystem {
        beliefs: cand.mu.clone(),
    };
    let nu: Vec<Q> = (0..n).map(|m| face_value_belief_idx(game, m)).collect();
    let mut supports = Vec::with_capacity(n);
    let mut forced_truth = Vec::with_capacity(n);
    for e in 0..n {
        let lc = game.space.lower_contour(e);
        let best = lc.iter().map(|&m| &cand.mu[m]).max().unwrap().clone();
        let level: Vec<EvIdx> = lc.into_iter().filter(|&m| cand.mu[m] == best).collect();
        forced_truth.push(level.contains(&e));
        supports.push(if level.contains(&e) { vec![e] } else { level });
    }
    let equalities = (0..n)
        .map(|m| BayesEquality {
            message: m,
            coeffs: game
                .space
                .upper_contour(m)
                .into_iter()
                .filter(|&e| supports[e].contains(&m))
                .map(|e| {
                    let c = game.w_good(e) * (Q::one() - &cand.mu[m]) - game.w_bad(e) * &cand.mu[m];
                    (e, c)
                })
                .collect(),
        })
        .collect();
    let reach_required = (0..n).map(|m| cand.mu[m] != nu[m]).collect();
    let polytope = SigmaStarPolytope {
        supports,
        forced_truth,
        equalities,
        reach_required,
    };
    let diagnostics = a2_diagnostics_inner(game, &cand.sigma, &mu_star);
    StarSolution {
        mu_star,
        sigma_star: cand.sigma,
        polytope,
        diagnostics,
        pools: cand.pools,
    }
}

/// Compute μ* and Σ* for a valid game. The result depends only on the
/// prior, the evidence space, and the evidence distributions — never on
/// actions or receiver payoffs.
pub fn solve_star(game: &EvidenceGame) -> Result<StarSolution, SolverError> {
    let report = validate_game(game);
    if !report.ok() {
        return Err(SolverError::InvalidGame(report.to_string()));
    }
    let n = game.n_evidence();
    if n > 12 {
        return Err(SolverError::RegimeExceeded(format!(
            "|E| = {n} above the supported 12"
        )));
    }
    // Phase 1 proposes a partition; phase 2 verifies it exactly.
    let hypothesis = phase1_partition(game);
    let mut cands = check_partition(game, &hypothesis);
    if cands.is_empty() {
        // Fallback: full enumeration.
        let mut tried = 0usize;
        for partition in set_partitions(n) {
            tried += 1;
            cands = check_partition(game, &partition);
            if !cands.is_empty() {
                break;
            }
        }
        if cands.is_empty() {
            return Err(SolverError::Defect(format!(
                "no pooling structure satisfies the equilibrium conditions \
                 ({} partitions refuted); this contradicts existence",
                tried
            )));
        }
    }
    Ok(assemble(game, cands.into_iter().next().unwrap()))
}

/// Independent oracle: enumerate every set partition and status choice,
/// verify each candidate exactly, and require that all surviving
/// candidates share one belief system.
pub fn solve_star_by_enumeration(game: &EvidenceGame) -> Result<StarSolution, SolverError> {
    let report = validate_game(game);
    if !report.ok() {
        return Err(SolverError::InvalidGame(report.to_string()));
    }
    let n = game.n_evidence();
    if n > 8 {
        return Err(SolverError::RegimeExceeded(format!(
            "enumeration supports |E| ≤ 8, got {n}"
        )));
    }
    let mut all: Vec<Candidate> = Vec::new();
    for partition in set_partitions(n) {
        all.extend(check_partition(game, &partition));
    }
    let Some(first) = all.first() else {
        return Err(SolverError::Defect(
            "enumeration found no equilibrium structure".to_string(),
        ));
    };
    if all.iter().any(|c| c.mu != first.mu) {
        return Err(SolverError::Defect(
            "enumeration found structurally distinct belief systems; \
             uniqueness is violated"
                .to_string(),
        ));
    }
    let cand = all.into_iter().next().unwrap();
    Ok(assemble(game, cand))
}

/// Violations of the Σ* membership conditions for a strategy.
pub fn membership_violations(
    game: &EvidenceGame,
    star: &StarSolution,
    sigma: &SenderStrategy,
) -> Vec<CheckViolation> {
    let mut out = Vec::new();
    let n = game.n_evidence();
    let make = |condition: &str, location: String, witness: String| CheckViolation {
        condition: condition.to_string(),
        location,
        witness,
    };
    for e in 0..n {
        for m in sigma.support(e) {
            if !star.polytope.supports[e].contains(&m) {
                out.push(make(
                    "sigma-star support",
                    format!("σ({}|{})", game.space.items[m], game.space.items[e]),
                    "positive mass on a message outside the permitted support".to_string(),
                ));
            }
        }
        if star.polytope.forced_truth[e] && !sigma.rows[e][e].is_one() {
            out.push(make(
                "sigma-star forced truth",
                format!("σ({0}|{0})", game.space.items[e]),
                format!("σ = {}", format_rational(&sigma.rows[e][e])),
            ));
        }
    }
    for m in 0..n {
        // Bayes equality over every feasible sender of m.
        let total: Q = game
            .space
            .upper_contour(m)
            .into_iter()
            .map(|e| {
                let c = game.w_good(e) * (Q::one() - &star.mu_star.beliefs[m])
                    - game.w_bad(e) * &star.mu_star.beliefs[m];
                &sigma.rows[e][m] * c
            })
            .sum();
        if !total.is_zero() {
            out.push(make(
                "sigma-star Bayes equality",
                format!("μ*({})", game.space.items[m]),
                format!("residual {}", format_rational(&total)),
            ));
        }
        if star.polytope.reach_required[m] && !sigma.reach_probability(game, m).is_positive() {
            out.push(make(
                "sigma-star reach",
                format!("message {}", game.space.items[m]),
                "must be disclosed with positive probability".to_string(),
            ));
        }
    }
    out
}

/// Exact membership test of a sender strategy in Σ*.
pub fn sigma_star_membership(
    game: &EvidenceGame,
    star: &StarSolution,
    sigma: &SenderStrategy,
) -> Result<bool, GameError> {
    sigma.validate(&game.space)?;
    if star.mu_star.beliefs.len() != game.n_evidence() {
        return Err(GameError::DimensionMismatch(
            "star solution does not match the game".to_string(),
        ));
    }
    Ok(membership_violations(game, star, sigma).is_empty())
}

fn a2_diagnostics_inner(
    game: &EvidenceGame,
    sigma: &SenderStrategy,
    mu: &BeliefSystem,
) -> Vec<A2Diagnostic> {
    (0..game.n_evidence())
        .map(|m| {
            let nu = face_value_belief_idx(game, m);
            let bayes = match posterior_from_strategy_idx(game, sigma, m) {
                Posterior::Reached(p) => Some(p),
                Posterior::Unreached => None,
            };
            let min_matches = bayes
                .as_ref()
                .map(|b| mu.beliefs[m] == std::cmp::min(nu.clone(), b.clone()));
            let indicator = mu.beliefs[m] <= nu;
            let sigma_truth = sigma.rows[m][m].clone();
            let indicator_matches = indicator == sigma_truth.is_one();
            A2Diagnostic {
                message: m,
                face_value: nu,
                mu_star: mu.beliefs[m].clone(),
                bayes_term: bayes,
                min_matches,
                indicator,
                sigma_truth,
                indicator_matches,
            }
        })
        .collect()
}

/// Per-message report for the fixed-point belief formula: the face value,
/// μ*, the Bayes fraction under the representative strategy (undefined on
/// unreached messages), whether μ* is the min where defined, and whether
/// the truth indicator matches the representative. Mismatches are
/// surfaced, not treated as errors.
pub fn check_a2_diagnostics(game: &EvidenceGame, star: &StarSolution) -> Vec<A2Diagnostic> {
    a2_diagnostics_inner(game, &star.sigma_star, &star.mu_star)
}

/// Findings of the exhaustive truth-leaning search on the original game.
#[derive(Debug, Clone)]
pub enum TruthLeaningFindings {
    Found(Vec<crate::family::EquilibriumFamily>),
    NotFound {
        refuted: usize,
        certificate: Vec<String>,
    },
}

/// Enumerate every candidate structure (truthful sets, supports, receiver
/// patterns at indifference thresholds) and solve each induced exact
/// system; returns the complete list of truth-leaning equilibria as
/// families with exact parameter ranges, or a nonexistence certificate
/// counting every refuted structure.
pub fn find_truth_leaning(game: &EvidenceGame) -> Result<TruthLeaningFindings, SolverError> {
    let report = validate_game(game);
    if !report.ok() {
        return Err(SolverError::InvalidGame(report.to_string()));
    }
    if game.n_evidence() > 8 || game.n_actions() > 5 {
        return Err(SolverError::RegimeExceeded(format!(
            "truth-leaning search supports |E| ≤ 8 and K ≤ 5, got |E| = {}, K = {}",
            game.n_evidence(),
            game.n_actions()
        )));
    }
    let outcome = eq_solve::enumerate_equilibria(game, &eq_solve::SolveMode::TruthLeaning);
    if outcome.families.is_empty() {
        Ok(TruthLeaningFindings::NotFound {
            refuted: outcome.refuted.len(),
            certificate: outcome.refuted,
        })
    } else {
        Ok(TruthLeaningFindings::Found(outcome.families))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::num::{q, qi};

    #[test]
    fn faa_star() {
        let faa = fixtures::faa();
        let star = solve_star(&faa).unwrap();
        assert_eq!(star.mu_star.beliefs, vec![q(1, 2), qi(0)]);
        assert_eq!(star.sigma_star, fixtures::faa_sender(qi(1)));
        // Σ* is the singleton {p = 1}.
        assert!(sigma_star_membership(&faa, &star, &fixtures::faa_sender(qi(1))).unwrap());
        assert!(!sigma_star_membership(&faa, &star, &fixtures::faa_sender(q(1, 4))).unwrap());
    }

    #[test]
    fn v1_star() {
        let v1 = fixtures::v1_good_bad();
        let star = solve_star(&v1).unwrap();
        assert_eq!(star.mu_star.beliefs, vec![q(1, 2), q(3, 7)]);
        assert_eq!(star.sigma_star, fixtures::faa_sender(qi(1)));
    }

    #[test]
    fn v3_star() {
        let v3 = fixtures::v3_two_types();
        let star = solve_star(&v3).unwrap();
        assert_eq!(star.mu_star.beliefs, vec![q(1, 2), qi(0), qi(0)]);
        // Both bad types pool entirely on n.
        assert!(star.sigma_star.rows[1][0].is_one());
        assert!(star.sigma_star.rows[2][0].is_one());
        // A strategy with p2 = 999/1000 breaks the Bayes equality at n.
        let mut sigma = star.sigma_star.clone();
        sigma.rows[2][0] = q(999, 1000);
        sigma.rows[2][2] = q(1, 1000);
        assert!(!sigma_star_membership(&v3, &star, &sigma).unwrap());
    }

    #[test]
    fn v4_star_truthful() {
        let v4 = fixtures::v4_truthful();
        let star = solve_star(&v4).unwrap();
        assert_eq!(star.mu_star.beliefs, vec![q(1, 3), qi(1)]);
        assert_eq!(star.sigma_star, SenderStrategy::truthful(2));
        assert!(star.polytope.forced_truth.iter().all(|&b| b));
    }

    #[test]
    fn star_is_payoff_invariant() {
        let faa = fixtures::faa();
        let v2 = fixtures::v2_lenient();
        // Same evidence structure, different payoffs: identical star.
        let a = solve_star(&faa).unwrap();
        let b = solve_star(&v2).unwrap();
        assert_eq!(a.mu_star, b.mu_star);
        assert_eq!(a.sigma_star, b.sigma_star);
        assert_eq!(a.polytope, b.polytope);
    }

    #[test]
    fn enumeration_agrees_on_fixtures() {
        for game in fixtures::all() {
            let fast = solve_star(&game).unwrap();
            let oracle = solve_star_by_enumeration(&game).unwrap();
            assert_eq!(fast.mu_star, oracle.mu_star);
            assert_eq!(fast.sigma_star, oracle.sigma_star);
        }
    }

    #[test]
    fn mu_star_below_face_value() {
        for game in fixtures::all() {
            let star = solve_star(&game).unwrap();
            for m in 0..game.n_evidence() {
                assert!(star.mu_star.beliefs[m] <= face_value_belief_idx(&game, m));
            }
        }
    }

    #[test]
    fn a2_diagnostics_faa() {
        let faa = fixtures::faa();
        let star = solve_star(&faa).unwrap();
        let diags = check_a2_diagnostics(&faa, &star);
        // At n: min{3/4, 1/2} = 1/2 = μ*.
        assert_eq!(diags[0].face_value, q(3, 4));
        assert_eq!(diags[0].bayes_term, Some(q(1, 2)));
        assert_eq!(diags[0].min_matches, Some(true));
        assert!(diags[0].indicator_matches);
        // At b: Bayes 0/0-undefined; indicator 1 but σ*(b|b) = 0.
        assert_eq!(diags[1].bayes_term, None);
        assert!(diags[1].indicator);
        assert!(diags[1].sigma_truth.is_zero());
        assert!(!diags[1].indicator_matches);
    }

    #[test]
    fn a2_diagnostics_truthful_game() {
        let v4 = fixtures::v4_truthful();
        let star = solve_star(&v4).unwrap();
        for d in check_a2_diagnostics(&v4, &star) {
            assert_eq!(d.min_matches, Some(true));
            assert!(d.indicator_matches);
        }
    }
}
