//! Cross-module invariants: belief arithmetic identities, predicate
//! nesting, solver/oracle agreement, disturbance-family independence, and
//! the perturbed-game belief regression.

use std::collections::BTreeMap;

use evigame_core::num::{q, qi, Q};
use evigame_core::*;
use proptest::prelude::*;

fn tiny_game(seed: u64, n: usize, k: usize) -> EvidenceGame {
    random_game(&RandomGameParams {
        n_evidence: n,
        density: 0.5,
        n_actions: k,
        seed,
    })
}

#[test]
fn face_value_edge_cases() {
    // ν(m) = 1 iff the bad state never produces m; 0 iff the good state
    // never does.
    for seed in 0..40u64 {
        let game = tiny_game(seed, 1 + (seed as usize % 4), 2);
        for m in 0..game.n_evidence() {
            let nu = face_value_belief(&game, &game.space.items[m]).unwrap();
            assert_eq!(nu == qi(1), game.f_bad[m] == qi(0), "seed {seed}");
            assert_eq!(nu == qi(0), game.f_good[m] == qi(0), "seed {seed}");
        }
    }
}

#[test]
fn feasible_sets_closed_under_relation() {
    for seed in 0..40u64 {
        let game = tiny_game(seed, 2 + (seed as usize % 4), 2);
        let space = &game.space;
        for e in 0..space.len() {
            let lc_e = feasible_set(space, &space.items[e]).unwrap();
            for m in &lc_e {
                let lc_m = feasible_set(space, m).unwrap();
                for m2 in &lc_m {
                    assert!(
                        lc_e.contains(m2),
                        "seed {seed}: {} in LC({}) in LC({}) but not in LC({})",
                        m2,
                        m,
                        space.items[e],
                        space.items[e]
                    );
                }
            }
        }
    }
}

#[test]
fn predicate_nesting() {
    // A passing truth-leaning check implies a passing equilibrium check;
    // same for the purifiable characterization.
    for seed in 0..60u64 {
        let game = tiny_game(seed, 1 + (seed as usize % 3), 2 + (seed as usize % 2));
        let star = solve_star(&game).unwrap();
        let weights = uniform_tie_weights(&game, &star);
        let purifiable = construct_purifiable(&game, &star, &weights).unwrap();
        assert!(verify_purifiable(&game, &purifiable, &star).unwrap().pass());
        assert!(verify_pbe(&game, &purifiable).unwrap().pass(), "seed {seed}");

        if let TruthLeaningFindings::Found(fams) = find_truth_leaning(&game).unwrap() {
            for f in fams {
                let w = f.witness(&game);
                assert!(verify_truth_leaning(&game, &w).unwrap().pass());
                assert!(verify_pbe(&game, &w).unwrap().pass(), "seed {seed}");
            }
        }
    }
}

#[test]
fn star_agrees_with_enumeration_oracle() {
    for seed in 200..260u64 {
        let game = tiny_game(seed, 1 + (seed as usize % 5), 2 + (seed as usize % 3));
        let fast = solve_star(&game).unwrap();
        let oracle = solve_star_by_enumeration(&game).unwrap();
        assert_eq!(fast.mu_star, oracle.mu_star, "seed {seed}");
        assert_eq!(fast.sigma_star, oracle.sigma_star, "seed {seed}");
        assert_eq!(fast.polytope, oracle.polytope, "seed {seed}");
    }
}

#[test]
fn disturbed_outcomes_share_star_and_order_values() {
    // The disturbed outcome's sender side is exactly the star solution;
    // messages with equal beliefs get identical responses; expected
    // values strictly order with the beliefs.
    for game in fixtures::all() {
        let star = solve_star(&game).unwrap();
        let eta = Disturbance {
            family: ShockFamily::GaussianIid,
            scales: {
                let mut s = vec![0.4; game.n_actions()];
                s[0] = 0.0;
                s
            },
            seed: 5,
            samples: 1,
        };
        let out = solve_disturbed(&game, &eta, &star).unwrap();
        assert_eq!(out.sigma, star.sigma_star);
        assert_eq!(out.mu, star.mu_star);
        for m in 0..game.n_evidence() {
            for m2 in 0..game.n_evidence() {
                if star.mu_star.beliefs[m] == star.mu_star.beliefs[m2] {
                    assert_eq!(out.rho[m].probs, out.rho[m2].probs);
                } else if star.mu_star.beliefs[m] < star.mu_star.beliefs[m2] {
                    assert!(
                        out.rho[m].value < out.rho[m2].value,
                        "persuasion value must increase with the belief"
                    );
                }
            }
        }
    }
}

#[test]
fn purification_family_independent_on_generic_games() {
    // Under genericity the gaussian and uniform traces converge to the
    // same limit (checked on the two generic fixtures).
    for game in [fixtures::faa(), fixtures::v1_good_bad()] {
        let star = solve_star(&game).unwrap();
        assert!(genericity_check(&game, &star).generic);
        let schedule = [0.5, 0.25, 0.1, 0.01];
        let pattern = [0.0, 1.0];
        let gauss = purification_trace(
            &game,
            ShockFamily::GaussianIid,
            &pattern,
            &schedule,
            &star,
            9,
            1,
        )
        .unwrap();
        let unif = purification_trace(
            &game,
            ShockFamily::UniformIid,
            &pattern,
            &schedule,
            &star,
            9,
            1,
        )
        .unwrap();
        assert!(gauss.converged && unif.converged);
        assert_eq!(gauss.limit, unif.limit);
        assert!(!gauss.family_dependent);
    }
}

#[test]
fn perturbed_faa_belief_pinned_at_threshold() {
    // In every equilibrium of the perturbed certification game the
    // belief after no evidence equals the response threshold, across a
    // grid of perturbation sizes.
    let faa = fixtures::faa();
    for (num, den) in [(1i64, 10i64), (1, 20), (3, 100), (1, 100), (1, 3)] {
        let eps = Perturbation::uniform_for(&faa, q(num, den), q(1, 50));
        let fams = solve_perturbed(&faa, &eps).unwrap();
        assert!(!fams.is_empty());
        for f in &fams {
            let w = f.witness(&faa);
            assert_eq!(w.mu.beliefs[0], q(2, 3), "ε = {num}/{den}");
        }
    }
}

#[test]
fn lift_valid_across_epsilon_box() {
    // The lift passes the perturbed predicate for every ε in a verified
    // box on the truthful fixture.
    let v4 = fixtures::v4_truthful();
    let star = solve_star(&v4).unwrap();
    let a = construct_purifiable(&v4, &star, &BTreeMap::new()).unwrap();
    assert!(verify_truth_leaning(&v4, &a).unwrap().pass());
    for (rn, rd, fnum, fden) in [
        (1i64, 10i64, 1i64, 10i64),
        (1, 4, 1, 20),
        (1, 100, 1, 2),
        (9, 10, 1, 3),
    ] {
        let eps = Perturbation::uniform_for(&v4, q(rn, rd), q(fnum, fden));
        let lifted = lift_witness(&v4, &star, &a, &eps).unwrap();
        assert!(
            verify_perturbed_pbe(&v4, &eps, &lifted).unwrap().pass(),
            "ε = {rn}/{rd}, floor {fnum}/{fden}"
        );
    }
}

#[test]
fn lift_reports_binding_constraint() {
    // On V1 the truth-leaning equilibrium is truthful-at-b only because
    // concealing pays the same; it is not purifiable, so the lift refuses.
    let v1 = fixtures::v1_good_bad();
    let star = solve_star(&v1).unwrap();
    let a = fixtures::faa_assessment(qi(0), qi(0), q(3, 5), q(3, 7));
    let eps = Perturbation::uniform_for(&v1, q(1, 10), q(1, 20));
    let err = lift_witness(&v1, &star, &a, &eps).unwrap_err();
    assert!(err.to_string().contains("not purifiable"));
}

#[test]
fn relations_on_fixtures() {
    // FAA: no truth-leaning equilibrium, purifiable is (conceal, reject),
    // weakly truth-leaning is (p = 1/4); both implications vacuous.
    let rel = relations_report(&fixtures::faa()).unwrap();
    assert!(matches!(
        rel.truth_leaning,
        TruthLeaningFindings::NotFound { .. }
    ));
    assert!(rel.generic);
    assert!(rel.implication_weakly_purifiable_tl.holds);
    assert!(rel.implication_tl_purifiable_weakly.holds);
    assert!(rel
        .implication_weakly_purifiable_tl
        .witnesses
        .iter()
        .all(|w| !w.purifiable));

    // V1: the truth-leaning equilibrium equals every path limit but is
    // not purifiable; implications vacuous.
    let rel = relations_report(&fixtures::v1_good_bad()).unwrap();
    let TruthLeaningFindings::Found(fams) = &rel.truth_leaning else {
        panic!()
    };
    assert_eq!(fams.len(), 1);
    assert!(rel.implication_weakly_purifiable_tl.holds);
    assert!(rel.implication_tl_purifiable_weakly.holds);

    // V4: everything coincides on the truthful equilibrium and both
    // implications hold with purifiable witnesses.
    let rel = relations_report(&fixtures::v4_truthful()).unwrap();
    assert!(rel.generic);
    assert!(rel.implication_weakly_purifiable_tl.holds);
    assert!(rel
        .implication_weakly_purifiable_tl
        .witnesses
        .iter()
        .all(|w| w.purifiable && w.conclusion_holds));
    assert!(rel.implication_tl_purifiable_weakly.holds);
    assert!(rel
        .implication_tl_purifiable_weakly
        .witnesses
        .iter()
        .all(|w| w.purifiable && w.conclusion_holds));

    // V2 is nongeneric: implication (ii) is skipped, (i) evaluated on the
    // oracle-pinned limit, which is purifiable and truth-leaning.
    let rel = relations_report(&fixtures::v2_lenient()).unwrap();
    assert!(!rel.generic);
    assert!(rel.implication_weakly_purifiable_tl.holds);
    assert!(rel
        .implication_weakly_purifiable_tl
        .witnesses
        .iter()
        .any(|w| w.purifiable && w.conclusion_holds));
}

#[test]
fn fixture_files_round_trip_byte_identically() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures");
    for name in fixtures::file_names() {
        let path = format!("{dir}/{name}");
        let bytes = std::fs::read_to_string(&path).unwrap();
        let game = io::game_from_str(&bytes).unwrap();
        assert_eq!(io::game_to_string(&game), bytes, "{name}");
    }
    // And the files agree with the in-crate constructors.
    for (game, name) in fixtures::all().iter().zip(fixtures::file_names()) {
        let path = format!("{dir}/{name}");
        let bytes = std::fs::read_to_string(&path).unwrap();
        assert_eq!(&io::game_from_str(&bytes).unwrap(), game, "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Martingale identity: the reach-weighted average of posteriors is
    /// the prior, for arbitrary seeded games and sender strategies.
    #[test]
    fn martingale_identity(seed in 0u64..10_000, n in 1usize..5, k in 2usize..4) {
        let game = tiny_game(seed, n, k);
        let sigma = evigame_core::random::random_sender(&game, seed ^ 0xabcd);
        let mut total = Q::from_integer(0.into());
        for m in 0..game.n_evidence() {
            if let Posterior::Reached(mu) =
                posterior_from_strategy(&game, &sigma, &game.space.items[m]).unwrap()
            {
                total += sigma.reach_probability(&game, m) * mu;
            }
        }
        prop_assert_eq!(total, game.prior.clone());
    }

    /// The best-response correspondence is monotone: below vs above, the
    /// extreme selections are ordered.
    #[test]
    fn monotone_best_response(seed in 0u64..10_000, num in 0i64..100, num2 in 0i64..100) {
        let game = tiny_game(seed, 2, 3);
        let (lo, hi) = if num <= num2 { (num, num2) } else { (num2, num) };
        let (lo, hi) = (q(lo, 100), q(hi, 100));
        let a = best_response_set(&game, &lo);
        let b = best_response_set(&game, &hi);
        if lo != hi {
            prop_assert!(a.last().unwrap() <= b.first().unwrap());
        } else {
            prop_assert_eq!(a, b);
        }
    }

    /// Game files survive serialization exactly.
    #[test]
    fn game_serialization_round_trip(seed in 0u64..10_000, n in 1usize..6, k in 2usize..5) {
        let game = tiny_game(seed, n, k);
        let text = io::game_to_string(&game);
        let parsed = io::game_from_str(&text).unwrap();
        prop_assert_eq!(parsed, game);
    }
}

#[test]
fn equal_belief_messages_need_identical_behavior() {
    // Both bad-evidence types pool at belief zero; giving them different
    // receiver behavior breaks the purifiable characterization even
    // before receiver optimality is considered.
    let v3 = fixtures::v3_two_types();
    let star = solve_star(&v3).unwrap();
    let mut a = construct_purifiable(&v3, &star, &BTreeMap::new()).unwrap();
    a.rho.rows[1] = vec![qi(0), qi(1)]; // approve after b1, reject after b2
    let res = verify_purifiable(&v3, &a, &star).unwrap();
    assert!(!res.pass());
    assert!(res.has("equal-belief behavior"));
}
