//! Seeded random game generation for property and differential suites.

use num::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::game::{validate_game, EvidenceGame, EvidenceSpace};
use crate::num::{q, qi, Q};

#[derive(Debug, Clone, Copy)]
pub struct RandomGameParams {
    pub n_evidence: usize,
    /// Probability of each downward feasibility edge before closure.
    pub density: f64,
    pub n_actions: usize,
    pub seed: u64,
}

/// Deterministic per seed: a random DAG closed into a preorder, rational
/// masses with denominator ≤ 100 and positive total mass per item, and
/// payoffs repaired to satisfy strictly increasing differences.
pub fn random_game(params: &RandomGameParams) -> EvidenceGame {
    assert!(params.n_evidence >= 1, "need |E| ≥ 1");
    assert!(params.n_actions >= 2, "need K ≥ 2");
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = params.n_evidence;
    let items: Vec<String> = (1..=n).map(|i| format!("e{i}")).collect();
    // Downward random edges (lower index disclosable from higher), then
    // reflexive-transitive closure.
    let mut feasible = vec![vec![false; n]; n];
    for (m, row) in feasible.iter_mut().enumerate() {
        row[m] = true;
    }
    for e in 0..n {
        for m in 0..e {
            if rng.gen_bool(params.density.clamp(0.0, 1.0)) {
                feasible[m][e] = true;
            }
        }
    }
    for k in 0..n {
        for m in 0..n {
            for e in 0..n {
                if feasible[m][k] && feasible[k][e] {
                    feasible[m][e] = true;
                }
            }
        }
    }
    let space = EvidenceSpace::new(items, feasible);

    let masses = |rng: &mut ChaCha8Rng| -> Vec<u64> {
        loop {
            let v: Vec<u64> = (0..n).map(|_| rng.gen_range(0..10)).collect();
            if v.iter().sum::<u64>() > 0 {
                return v;
            }
        }
    };
    let mut ug = masses(&mut rng);
    let ub = masses(&mut rng);
    for i in 0..n {
        if ug[i] + ub[i] == 0 {
            ug[i] = 1;
        }
    }
    let tg: u64 = ug.iter().sum();
    let tb: u64 = ub.iter().sum();
    let f_good: Vec<Q> = ug.iter().map(|&u| q(u as i64, tg as i64)).collect();
    let f_bad: Vec<Q> = ub.iter().map(|&u| q(u as i64, tb as i64)).collect();

    let prior = q(rng.gen_range(1..100), 100);

    let mut action_vals: Vec<i64> = Vec::new();
    while action_vals.len() < params.n_actions {
        let v = rng.gen_range(-3..=6);
        if !action_vals.contains(&v) {
            action_vals.push(v);
        }
    }
    action_vals.sort_unstable();
    let actions: Vec<Q> = action_vals.into_iter().map(qi).collect();

    let (payoff_good, payoff_bad) = sample_payoffs(&mut rng, params.n_actions);

    let game = EvidenceGame {
        prior,
        space,
        f_good,
        f_bad,
        actions,
        payoff_good,
        payoff_bad,
    };
    debug_assert!(validate_game(&game).ok(), "{}", validate_game(&game));
    game
}

fn sample_payoffs(rng: &mut ChaCha8Rng, k: usize) -> (Vec<Q>, Vec<Q>) {
    let payoff_bad: Vec<Q> = (0..k).map(|_| qi(rng.gen_range(-5..=5))).collect();
    // Differences strictly increasing by construction.
    let mut diff = rng.gen_range(-3..=3);
    let mut payoff_good = Vec::with_capacity(k);
    for b in &payoff_bad {
        payoff_good.push(b + qi(diff));
        diff += 1 + rng.gen_range(0..=2);
    }
    (payoff_good, payoff_bad)
}

/// Same game, freshly sampled receiver payoffs (actions unchanged). The
/// star solution must be identical across the two games.
pub fn resample_payoffs(game: &EvidenceGame, seed: u64) -> EvidenceGame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (payoff_good, payoff_bad) = sample_payoffs(&mut rng, game.n_actions());
    let mut out = game.clone();
    out.payoff_good = payoff_good;
    out.payoff_bad = payoff_bad;
    debug_assert!(validate_game(&out).ok());
    out
}

/// A random full sender strategy (grid masses over each feasible set) —
/// used by the martingale property test.
pub fn random_sender(game: &EvidenceGame, seed: u64) -> crate::game::SenderStrategy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = game.n_evidence();
    let mut rows = vec![vec![Q::from_integer(0.into()); n]; n];
    for e in 0..n {
        let lc = game.space.lower_contour(e);
        let weights: Vec<u64> = (0..lc.len()).map(|_| rng.gen_range(0..8)).collect();
        let total: u64 = weights.iter().sum();
        if total == 0 {
            rows[e][e] = Q::one();
        } else {
            for (i, &m) in lc.iter().enumerate() {
                rows[e][m] = q(weights[i] as i64, total as i64);
            }
        }
    }
    crate::game::SenderStrategy { rows }
}
