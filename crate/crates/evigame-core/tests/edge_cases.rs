use evigame_core::*;
use evigame_core::num::{q, qi};

#[test]
fn single_action_game() {
    let mut game = fixtures::faa();
    game.actions = vec![qi(0)];
    game.payoff_good = vec![qi(0)];
    game.payoff_bad = vec![qi(0)];
    assert!(validate_game(&game).ok());
    assert!(indifference_thresholds(&game).is_empty());
    let star = solve_star(&game).unwrap();
    assert_eq!(star.mu_star.beliefs, vec![q(1, 2), qi(0)]);
    // Everything is indifferent, so truth-leaning forces full truth.
    match find_truth_leaning(&game).unwrap() {
        TruthLeaningFindings::Found(fams) => {
            assert_eq!(fams.len(), 1);
            let w = fams[0].witness(&game);
            assert_eq!(w.sigma.rows[1][1], qi(1));
            assert!(verify_truth_leaning(&game, &w).unwrap().pass());
        }
        TruthLeaningFindings::NotFound { .. } => panic!("truthful TL equilibrium must exist"),
    }
    let eps = Perturbation::uniform_for(&game, q(1, 10), q(1, 20));
    let fams = solve_perturbed(&game, &eps).unwrap();
    assert!(!fams.is_empty());
}

#[test]
fn single_evidence_game() {
    let game = random_game(&RandomGameParams {
        n_evidence: 1,
        density: 0.5,
        n_actions: 3,
        seed: 3,
    });
    let star = solve_star(&game).unwrap();
    assert_eq!(
        star.mu_star.beliefs[0],
        face_value_belief(&game, &game.space.items[0]).unwrap()
    );
    match find_truth_leaning(&game).unwrap() {
        TruthLeaningFindings::Found(fams) => {
            // The only strategy is truthful; every equilibrium keeps it.
            for f in &fams {
                assert_eq!(f.witness(&game).sigma.rows[0][0], qi(1));
            }
        }
        TruthLeaningFindings::NotFound { .. } => {
            panic!("a one-item game always has a truthful equilibrium")
        }
    }
}

#[test]
fn regime_errors() {
    let big = random_game(&RandomGameParams {
        n_evidence: 4,
        density: 0.5,
        n_actions: 2,
        seed: 1,
    });
    // The oracle regime is |E| ≤ 3.
    let err = oracle_pbe_grid(&big, &OracleGrid::exact(q(1, 10)), &OracleMode::Pbe).unwrap_err();
    assert!(err.to_string().contains("regime"));
    let huge = random_game(&RandomGameParams {
        n_evidence: 7,
        density: 0.3,
        n_actions: 2,
        seed: 2,
    });
    let eps = Perturbation::uniform_for(&huge, q(1, 10), q(1, 20));
    assert!(solve_perturbed(&huge, &eps).is_err());
}

#[test]
fn empty_evidence_rejected() {
    let game = EvidenceGame {
        prior: q(1, 2),
        space: EvidenceSpace::new(vec![], vec![]),
        f_good: vec![],
        f_bad: vec![],
        actions: vec![qi(0), qi(1)],
        payoff_good: vec![qi(0), qi(1)],
        payoff_bad: vec![qi(0), qi(-2)],
    };
    let report = validate_game(&game);
    assert!(!report.ok());
    assert!(solve_star(&game).is_err());
}
