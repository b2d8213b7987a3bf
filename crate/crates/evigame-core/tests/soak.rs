//! Extended soak runs (ignored by default): the fast star solver vs
//! full enumeration on larger evidence spaces.
//! Run with `cargo test --test soak -- --ignored --nocapture`.
use evigame_core::*;

#[test]
#[ignore]
fn star_soak_e6() {
    let t0 = std::time::Instant::now();
    for seed in 9000..9100u64 {
        let game = random_game(&RandomGameParams {
            n_evidence: 6,
            density: 0.2 + 0.12 * ((seed % 6) as f64),
            n_actions: 2 + (seed as usize % 3),
            seed,
        });
        let fast = solve_star(&game).unwrap();
        let oracle = solve_star_by_enumeration(&game).unwrap();
        assert_eq!(fast.mu_star, oracle.mu_star, "seed {seed}");
        assert_eq!(fast.sigma_star, oracle.sigma_star, "seed {seed}");
        assert!(verify_star_conditions(&game, &fast.sigma_star, &fast.mu_star).pass());
    }
    println!("100 games |E|=6 agree in {:?}", t0.elapsed());
}

#[test]
#[ignore]
fn star_soak_e7() {
    for seed in 9500..9530u64 {
        let game = random_game(&RandomGameParams {
            n_evidence: 7,
            density: 0.35,
            n_actions: 2,
            seed,
        });
        let fast = solve_star(&game).unwrap();
        let oracle = solve_star_by_enumeration(&game).unwrap();
        assert_eq!(fast.mu_star, oracle.mu_star, "seed {seed}");
        assert_eq!(fast.sigma_star, oracle.sigma_star, "seed {seed}");
    }
    println!("30 games |E|=7 agree");
}
