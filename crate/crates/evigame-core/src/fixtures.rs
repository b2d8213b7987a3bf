//! The in-repo fixture corpus: the certification game and its variants.
//!
//! These constructors mirror the JSON files under `fixtures/` at the
//! repository root (the files are the canonical serialized form; a test
//! checks they agree with these constructors byte-for-byte after a round
//! trip).

use crate::check::{Assessment, ReceiverStrategy};
use crate::game::{BeliefSystem, EvidenceGame, EvidenceSpace, SenderStrategy};
use crate::num::{q, qi, Q};
use num::One;

fn two_item_space() -> EvidenceSpace {
    EvidenceSpace::new(
        vec!["n".to_string(), "b".to_string()],
        vec![vec![true, true], vec![false, true]],
    )
}

/// Certification game: the sender may hold bad evidence (prob 2/3 in the
/// bad state) or nothing; the receiver approves or rejects with belief
/// threshold 2/3.
pub fn faa() -> EvidenceGame {
    EvidenceGame {
        prior: q(1, 2),
        space: two_item_space(),
        f_good: vec![qi(1), qi(0)],
        f_bad: vec![q(1, 3), q(2, 3)],
        actions: vec![qi(0), qi(1)],
        payoff_good: vec![qi(0), qi(1)],
        payoff_bad: vec![qi(0), qi(-2)],
    }
}

/// Variant: bad evidence also arises in the good state (F_G = (1/2, 1/2)).
pub fn v1_good_bad() -> EvidenceGame {
    let mut g = faa();
    g.f_good = vec![q(1, 2), q(1, 2)];
    g
}

/// Variant: lenient receiver (loss from a bad approval is −1), belief
/// threshold 1/2. Not generic: the pooled belief sits exactly at the
/// threshold.
pub fn v2_lenient() -> EvidenceGame {
    let mut g = faa();
    g.payoff_bad = vec![qi(0), qi(-1)];
    g
}

/// Variant: two incomparable types of bad evidence.
pub fn v3_two_types() -> EvidenceGame {
    let space = EvidenceSpace::new(
        vec!["n".to_string(), "b1".to_string(), "b2".to_string()],
        vec![
            vec![true, true, true],
            vec![false, true, false],
            vec![false, false, true],
        ],
    );
    EvidenceGame {
        prior: q(1, 2),
        space,
        f_good: vec![qi(1), qi(0), qi(0)],
        f_bad: vec![q(1, 3), q(1, 3), q(1, 3)],
        actions: vec![qi(0), qi(1)],
        payoff_good: vec![qi(0), qi(1)],
        payoff_bad: vec![qi(0), qi(-2)],
    }
}

/// Variant with good evidence: truth-telling is strictly optimal, so every
/// refinement picks the same truthful equilibrium.
pub fn v4_truthful() -> EvidenceGame {
    let space = EvidenceSpace::new(
        vec!["n".to_string(), "g".to_string()],
        vec![vec![true, true], vec![false, true]],
    );
    EvidenceGame {
        prior: q(1, 2),
        space,
        f_good: vec![q(1, 2), q(1, 2)],
        f_bad: vec![qi(1), qi(0)],
        actions: vec![qi(0), qi(1)],
        payoff_good: vec![qi(0), qi(1)],
        payoff_bad: vec![qi(0), qi(-2)],
    }
}

/// All five fixture games, in canonical order.
pub fn all() -> Vec<EvidenceGame> {
    vec![faa(), v1_good_bad(), v2_lenient(), v3_two_types(), v4_truthful()]
}

/// Fixture file names matching [`all`] (relative to the repo-root
/// `fixtures/` directory).
pub fn file_names() -> Vec<&'static str> {
    vec![
        "faa.json",
        "v1-good-bad.json",
        "v2-lenient.json",
        "v3-two-types.json",
        "v4-truthful.json",
    ]
}

/// Sender strategy for the two-item games, parametrized by
/// `p = σ(n|b)`, the probability that the bad-evidence type conceals.
pub fn faa_sender(p: Q) -> SenderStrategy {
    SenderStrategy {
        rows: vec![vec![qi(1), qi(0)], vec![p.clone(), Q::one() - p]],
    }
}

/// Receiver strategy for the two-action games: `q_n` and `q_b` are the
/// approval probabilities after `n` and `b`.
pub fn two_action_receiver(q_n: Q, q_b: Q) -> ReceiverStrategy {
    ReceiverStrategy {
        rows: vec![
            vec![Q::one() - &q_n, q_n],
            vec![Q::one() - &q_b, q_b],
        ],
    }
}

/// Assessment for the two-item, two-action games in the `(p, q, μ)`
/// shorthand: `p = σ(n|b)`, `q = ρ(Approve|n)` (the receiver always
/// rejects after `b`), beliefs `(μ(n), μ(b))`.
pub fn faa_assessment(p: Q, q_approve: Q, mu_n: Q, mu_b: Q) -> Assessment {
    Assessment {
        sigma: faa_sender(p),
        rho: two_action_receiver(q_approve, qi(0)),
        mu: BeliefSystem {
            beliefs: vec![mu_n, mu_b],
        },
    }
}
