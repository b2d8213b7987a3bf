//! Shared benchmark inputs; see `benches/solvers.rs`.

use evigame_core::{random_game, EvidenceGame, RandomGameParams};

/// Deterministic benchmark corpus: the fixture games plus seeded random
/// games of increasing size.
pub fn corpus() -> Vec<(String, EvidenceGame)> {
    let mut out: Vec<(String, EvidenceGame)> = evigame_core::fixtures::all()
        .into_iter()
        .zip(evigame_core::fixtures::file_names())
        .map(|(g, name)| (name.trim_end_matches(".json").to_string(), g))
        .collect();
    for (n, k, seed) in [(4usize, 3usize, 11u64), (5, 4, 12), (6, 4, 13)] {
        out.push((
            format!("random-e{n}-k{k}"),
            random_game(&RandomGameParams {
                n_evidence: n,
                density: 0.5,
                n_actions: k,
                seed,
            }),
        ));
    }
    out
}
