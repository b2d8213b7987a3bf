//! Adversarial structures: knife-edge face values, forced-mixing star
//! strategies, path-dependent selections, and a wider differential sweep.
use evigame_core::num::{q, qi};
use evigame_core::*;

/// Game where every face value sits exactly at the response threshold.
fn knife_edge() -> EvidenceGame {
    let mut g = fixtures::v2_lenient(); // threshold 1/2
    g.f_good = vec![q(1, 2), q(1, 2)];
    g.f_bad = vec![q(1, 2), q(1, 2)];
    g
}

#[test]
fn knife_edge_game_against_oracle() {
    let game = knife_edge();
    assert!(validate_game(&game).ok());
    let grid = OracleGrid::exact(q(1, 20));
    let tl = match find_truth_leaning(&game).unwrap() {
        TruthLeaningFindings::Found(f) => f,
        TruthLeaningFindings::NotFound { .. } => Vec::new(),
    };
    for f in &tl {
        assert!(verify_truth_leaning(&game, &f.witness(&game)).unwrap().pass());
    }
    let rep = oracle_compare(&game, &tl, &OracleMode::TruthLeaning, &grid).unwrap();
    assert!(rep.pass(), "{:?}", rep.discrepancies);

    let eps = Perturbation::uniform_for(&game, q(1, 10), q(1, 20));
    let fams = solve_perturbed(&game, &eps).unwrap();
    let rep = oracle_compare(&game, &fams, &OracleMode::Perturbed(eps), &grid).unwrap();
    assert!(rep.pass(), "{:?}", rep.discrepancies);
}

#[test]
fn v3_relations_reproduces_both_selections() {
    let v3 = fixtures::v3_two_types();
    let rel = relations_report(&v3).unwrap();
    // Equal-reward path: limit on the p1 + p2 = 1/2 line with q = 0.
    // Ordered-reward paths: the smaller-reward type conceals half, the
    // other discloses fully; increasing vs decreasing flips which.
    let mut corner_limits = Vec::new();
    for p in &rel.paths {
        let limit = p.result.limit.as_ref().expect("converged");
        let p1 = limit.sigma.rows[1][0].clone();
        let p2 = limit.sigma.rows[2][0].clone();
        assert_eq!(&p1 + &p2, q(1, 2), "path {}", p.name);
        assert_eq!(limit.rho.rows[0][1], qi(0), "path {}", p.name);
        if p.name != "equal-rewards" {
            corner_limits.push((p.name.clone(), p1, p2));
        }
    }
    assert_eq!(corner_limits.len(), 2);
    // increasing rewards: type b1 (smaller reward, earlier in order after n)…
    // the two ordered paths must select different corners.
    assert_ne!(corner_limits[0].1, corner_limits[1].1);
    for (_, p1, p2) in &corner_limits {
        assert!(
            (*p1 == q(1, 2) && *p2 == qi(0)) || (*p1 == qi(0) && *p2 == q(1, 2)),
            "ordered-reward paths select a corner"
        );
    }
}

#[test]
fn larger_differential_sweep() {
    // 60 extra seeds at a coarser grid, both modes, plus unequal rewards.
    for seed in 5000..5060u64 {
        let game = random_game(&RandomGameParams {
            n_evidence: 1 + (seed as usize % 3),
            density: 0.7,
            n_actions: 2 + (seed as usize % 2),
            seed,
        });
        let grid = OracleGrid::exact(q(1, 20));
        let mut rewards: Vec<_> = (0..game.n_evidence() as i64)
            .map(|i| q(1 + i, 20))
            .collect();
        rewards.reverse();
        let eps = Perturbation {
            reward: rewards,
            floor: vec![q(1, 20); game.n_evidence()],
        };
        let fams = solve_perturbed(&game, &eps).unwrap();
        let rep = oracle_compare(&game, &fams, &OracleMode::Perturbed(eps), &grid).unwrap();
        assert!(rep.pass(), "seed {seed}: {:?}", rep.discrepancies);

        let tl = match find_truth_leaning(&game).unwrap() {
            TruthLeaningFindings::Found(f) => f,
            TruthLeaningFindings::NotFound { .. } => Vec::new(),
        };
        let rep = oracle_compare(&game, &tl, &OracleMode::TruthLeaning, &grid).unwrap();
        assert!(rep.pass(), "seed {seed}: {:?}", rep.discrepancies);
    }
}

/// Two high-value evidence types drain a pooled low type: the star
/// strategy must split the concealing type's mass exactly in half across
/// the two disclosures, so the representative row is strictly mixed.
#[test]
fn mixed_sigma_star_row() {
    let space = EvidenceSpace::new(
        vec!["x".to_string(), "y".to_string(), "z".to_string()],
        vec![
            vec![true, false, true],
            vec![false, true, true],
            vec![false, false, true],
        ],
    );
    let game = EvidenceGame {
        prior: q(1, 2),
        space,
        f_good: vec![q(2, 5), q(2, 5), q(1, 5)],
        f_bad: vec![q(1, 5), q(1, 5), q(3, 5)],
        actions: vec![qi(0), qi(1)],
        payoff_good: vec![qi(0), qi(1)],
        payoff_bad: vec![qi(0), qi(-2)],
    };
    assert!(validate_game(&game).ok());
    let star = solve_star(&game).unwrap();
    assert_eq!(star.mu_star.beliefs, vec![q(1, 2), q(1, 2), q(1, 4)]);
    assert_eq!(star.sigma_star.rows[2], vec![q(1, 2), q(1, 2), qi(0)]);
    assert!(star.polytope.forced_truth[0] && star.polytope.forced_truth[1]);
    // The enumeration oracle agrees, and the split is forced: moving mass
    // off the exact half breaks the Bayes equalities.
    let oracle = solve_star_by_enumeration(&game).unwrap();
    assert_eq!(oracle.mu_star, star.mu_star);
    assert_eq!(oracle.sigma_star, star.sigma_star);
    let mut skewed = star.sigma_star.clone();
    skewed.rows[2][0] = q(2, 5);
    skewed.rows[2][1] = q(3, 5);
    assert!(!sigma_star_membership(&game, &star, &skewed).unwrap());

    // Downstream: the whole refinement pipeline handles the game.
    let grid = OracleGrid::exact(q(1, 20));
    let tl = match find_truth_leaning(&game).unwrap() {
        TruthLeaningFindings::Found(f) => f,
        TruthLeaningFindings::NotFound { .. } => Vec::new(),
    };
    let rep = oracle_compare(&game, &tl, &OracleMode::TruthLeaning, &grid).unwrap();
    assert!(rep.pass(), "{:?}", rep.discrepancies);
    let eps = Perturbation::uniform_for(&game, q(1, 20), q(1, 20));
    let fams = solve_perturbed(&game, &eps).unwrap();
    let rep = oracle_compare(&game, &fams, &OracleMode::Perturbed(eps), &grid).unwrap();
    assert!(rep.pass(), "{:?}", rep.discrepancies);
}
