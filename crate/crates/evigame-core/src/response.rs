//! Receiver best-response machinery: the exact argmax correspondence, its
//! indifference thresholds, the shocked best response of a disturbed-game
//! receiver type, and the smoothed response under a shock distribution.
//!
//! Shock families are gaussian-iid and uniform-iid with per-action scales.
//! A zero scale on some actions is allowed even though only full-support
//! disturbances appear in the underlying theory: only shock *differences*
//! matter for the argmax, so zero scales reproduce the single-shock game
//! exactly. This deviation is deliberate and behaviorally equivalent for
//! K = 2; ties under Monte Carlo break toward the lower action and occur
//! with probability zero whenever some relevant scale is positive.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use rayon::prelude::*;
use libm::erfc;
use thiserror::Error;

use crate::game::{ActIdx, EvidenceGame};
use crate::num::{to_f64, Q};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ResponseError {
    #[error("degenerate disturbance: {0}")]
    Degenerate(String),
    #[error("invalid disturbance: {0}")]
    Invalid(String),
    #[error("invalid belief grid: {0}")]
    InvalidGrid(String),
}

/// Standard normal cdf via the complementary error function (keeps full
/// relative precision deep in the tails).
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Exact best-response set `φ(μ)`: argmax of the receiver's expected
/// payoff, computed in rationals. Returns sorted action indices; nonempty.
pub fn best_response_set(game: &EvidenceGame, mu: &Q) -> Vec<ActIdx> {
    let mut best: Vec<ActIdx> = vec![0];
    let mut best_val = game.receiver_payoff(0, mu);
    for a in 1..game.n_actions() {
        let v = game.receiver_payoff(a, mu);
        if v > best_val {
            best_val = v;
            best = vec![a];
        } else if v == best_val {
            best.push(a);
        }
    }
    best
}

/// A belief at which the receiver is indifferent across more than one
/// action, with the tied extreme actions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Threshold {
    pub belief: Q,
    pub lower: ActIdx,
    pub upper: ActIdx,
    /// Full tied argmax set at this belief.
    pub tied: Vec<ActIdx>,
}

/// All beliefs in the unit interval where the best response is not a
/// singleton, sorted
/// ascending. By increasing differences each action pair ties at most once.
pub fn indifference_thresholds(game: &EvidenceGame) -> Vec<Threshold> {
    let k = game.n_actions();
    let mut candidates: Vec<Q> = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            // μ(G_j − G_i) + (1−μ)(B_j − B_i) = 0
            let dg = &game.payoff_good[j] - &game.payoff_good[i];
            let db = &game.payoff_bad[j] - &game.payoff_bad[i];
            let den = &dg - &db;
            if den == Q::from_integer(0.into()) {
                continue;
            }
            let t = -db / den;
            if t >= Q::from_integer(0.into()) && t <= Q::from_integer(1.into()) {
                candidates.push(t);
            }
        }
    }
    candidates.sort();
    candidates.dedup();
    let mut out = Vec::new();
    for t in candidates {
        let set = best_response_set(game, &t);
        if set.len() > 1 {
            out.push(Threshold {
                belief: t,
                lower: set[0],
                upper: *set.last().unwrap(),
                tied: set,
            });
        }
    }
    out
}

/// Argmax set of the type-`ζ` receiver: payoff plus the per-action shock.
/// Shocks are floats, so the comparison runs in f64.
pub fn shocked_best_response(game: &EvidenceGame, mu: &Q, zeta: &[f64]) -> Vec<ActIdx> {
    let mu_f = to_f64(mu);
    let mut best: Vec<ActIdx> = vec![0];
    let mut best_val = shocked_payoff(game, 0, mu_f, zeta[0]);
    for a in 1..game.n_actions() {
        let v = shocked_payoff(game, a, mu_f, zeta[a]);
        if v > best_val {
            best_val = v;
            best = vec![a];
        } else if v == best_val {
            best.push(a);
        }
    }
    best
}

fn shocked_payoff(game: &EvidenceGame, a: ActIdx, mu: f64, zeta: f64) -> f64 {
    mu * to_f64(&game.payoff_good[a]) + (1.0 - mu) * to_f64(&game.payoff_bad[a]) + zeta
}

/// Shock distribution family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShockFamily {
    GaussianIid,
    UniformIid,
}

impl std::fmt::Display for ShockFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ShockFamily::GaussianIid => write!(f, "gaussian"),
            ShockFamily::UniformIid => write!(f, "uniform"),
        }
    }
}

/// A parametric receiver payoff-shock family: independent per-action
/// shocks with the given standard deviation (gaussian) or half-width
/// (uniform); scale 0 means no shock on that action.
#[derive(Debug, Clone, PartialEq)]
pub struct Disturbance {
    pub family: ShockFamily,
    /// Per-action scale, aligned with the game's action list.
    pub scales: Vec<f64>,
    pub seed: u64,
    /// Monte Carlo budget when no closed form applies.
    pub samples: u64,
}

impl Disturbance {
    pub fn validate(&self, game: &EvidenceGame) -> Result<(), ResponseError> {
        if self.scales.len() != game.n_actions() {
            return Err(ResponseError::Invalid(format!(
                "expected {} scales, got {}",
                game.n_actions(),
                self.scales.len()
            )));
        }
        if self.scales.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(ResponseError::Invalid(
                "scales must be finite and nonnegative".to_string(),
            ));
        }
        if self.samples == 0 {
            return Err(ResponseError::Invalid("samples must be ≥ 1".to_string()));
        }
        let mut has_positive_pair = false;
        for i in 0..self.scales.len() {
            for j in (i + 1)..self.scales.len() {
                if self.scales[i] + self.scales[j] > 0.0 {
                    has_positive_pair = true;
                }
            }
        }
        if game.n_actions() >= 2 && !has_positive_pair {
            return Err(ResponseError::Degenerate(
                "every action pair has zero combined scale".to_string(),
            ));
        }
        Ok(())
    }

    /// One shock draw per action; sample `i` is a pure function of
    /// `(seed, i)`, so results are reproducible and chunk-parallelizable.
    fn draw(&self, i: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(i.wrapping_add(1));
        self.scales
            .iter()
            .map(|&s| {
                if s == 0.0 {
                    // Still consume one variate so zero scales do not shift
                    // the stream of the remaining actions.
                    let _: f64 = StandardNormal.sample(&mut rng);
                    0.0
                } else {
                    match self.family {
                        ShockFamily::GaussianIid => {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            z * s
                        }
                        ShockFamily::UniformIid => {
                            let u: f64 = rand::distributions::Distribution::sample(
                                &rand::distributions::Open01,
                                &mut rng,
                            );
                            (2.0 * u - 1.0) * s
                        }
                    }
                }
            })
            .collect()
    }
}

/// Action distribution of the disturbed receiver at a fixed belief, with
/// its expected action value.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedResponse {
    pub probs: Vec<f64>,
    /// Expected action value Σ a·probs(a).
    pub value: f64,
    /// Per-action Monte Carlo standard error; 0 when closed-form.
    pub stderr: Vec<f64>,
    pub closed_form: bool,
}

/// Distribution over actions of the shocked best response at belief `mu`.
///
/// For two actions the answer is closed-form: the upper action wins iff
/// its payoff advantage beats the shock difference, whose cdf is known for
/// both families. Otherwise a seeded Monte Carlo over `samples` draws is
/// used, breaking (measure-zero) ties toward the lower action.
pub fn smoothed_response(
    game: &EvidenceGame,
    eta: &Disturbance,
    mu: &Q,
) -> Result<SmoothedResponse, ResponseError> {
    eta.validate(game)?;
    let k = game.n_actions();
    if k == 1 {
        return Ok(SmoothedResponse {
            probs: vec![1.0],
            value: to_f64(&game.actions[0]),
            stderr: vec![0.0],
            closed_form: true,
        });
    }
    if k == 2 {
        let du = delta_payoff(game, mu, 1, 0);
        let (s0, s1) = (eta.scales[0], eta.scales[1]);
        let p_hi = match eta.family {
            ShockFamily::GaussianIid => {
                let s = (s0 * s0 + s1 * s1).sqrt();
                if s == 0.0 {
                    return Err(ResponseError::Degenerate(
                        "all relevant scales are 0".to_string(),
                    ));
                }
                normal_cdf(du / s)
            }
            ShockFamily::UniformIid => {
                if s0 + s1 == 0.0 {
                    return Err(ResponseError::Degenerate(
                        "all relevant scales are 0".to_string(),
                    ));
                }
                // P(du + ζ₁ − ζ₀ > 0) with independent centered uniforms.
                1.0 - uniform_diff_cdf(-du, s1, s0)
            }
        };
        let probs = vec![1.0 - p_hi, p_hi];
        let value = expected_value(game, &probs);
        return Ok(SmoothedResponse {
            probs,
            value,
            stderr: vec![0.0, 0.0],
            closed_form: true,
        });
    }

    Ok(smoothed_response_monte_carlo(game, eta, mu))
}

/// Seeded Monte Carlo estimate of the smoothed response (the fallback for
/// K ≥ 3, exposed directly so closed forms can be cross-checked against
/// it). Counts are exact integers, so chunk-parallel evaluation is
/// bit-identical to sequential.
pub fn smoothed_response_monte_carlo(
    game: &EvidenceGame,
    eta: &Disturbance,
    mu: &Q,
) -> SmoothedResponse {
    let k = game.n_actions();
    let n = eta.samples;
    let chunk = 16_384u64;
    let n_chunks = n.div_ceil(chunk);
    let counts: Vec<u64> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            let hi = (lo + chunk).min(n);
            let mut local = vec![0u64; k];
            for i in lo..hi {
                let zeta = eta.draw(i);
                let set = shocked_best_response(game, mu, &zeta);
                local[set[0]] += 1;
            }
            local
        })
        .reduce(
            || vec![0u64; k],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    let stderr: Vec<f64> = probs
        .iter()
        .map(|&p| (p * (1.0 - p) / n as f64).sqrt())
        .collect();
    let value = expected_value(game, &probs);
    SmoothedResponse {
        probs,
        value,
        stderr,
        closed_form: false,
    }
}

/// Payoff advantage of action `hi` over `lo` at belief `mu`, in f64.
fn delta_payoff(game: &EvidenceGame, mu: &Q, hi: ActIdx, lo: ActIdx) -> f64 {
    let d = game.receiver_payoff(hi, mu) - game.receiver_payoff(lo, mu);
    to_f64(&d)
}

fn expected_value(game: &EvidenceGame, probs: &[f64]) -> f64 {
    probs
        .iter()
        .enumerate()
        .map(|(a, p)| p * to_f64(&game.actions[a]))
        .sum()
}

/// Exact cdf of `D = X − Y` with `X ~ U(−hx, hx)`, `Y ~ U(−hy, hy)`
/// independent (degenerate at 0 when a half-width is 0). Piecewise linear
/// when one side is degenerate, trapezoidal otherwise.
pub fn uniform_diff_cdf(t: f64, hx: f64, hy: f64) -> f64 {
    let (a, b) = (hx.min(hy), hx.max(hy));
    if b == 0.0 {
        return if t < 0.0 { 0.0 } else { 1.0 };
    }
    if a == 0.0 {
        return ((t + b) / (2.0 * b)).clamp(0.0, 1.0);
    }
    let lo = -(a + b);
    let mid = b - a;
    if t <= lo {
        0.0
    } else if t < -mid {
        let u = t + a + b;
        u * u / (8.0 * a * b)
    } else if t <= mid {
        0.5 + t / (2.0 * b)
    } else if t < a + b {
        let u = a + b - t;
        1.0 - u * u / (8.0 * a * b)
    } else {
        1.0
    }
}

/// The expected-action curve φ_η on a belief grid, with a strict
/// monotonicity flag.
#[derive(Debug, Clone)]
pub struct ActionCurve {
    pub points: Vec<(Q, SmoothedResponse)>,
    pub strictly_increasing: bool,
}

pub fn expected_action_curve(
    game: &EvidenceGame,
    eta: &Disturbance,
    grid: &[Q],
) -> Result<ActionCurve, ResponseError> {
    for w in grid.windows(2) {
        if w[0] > w[1] {
            return Err(ResponseError::InvalidGrid(
                "grid must be sorted ascending".to_string(),
            ));
        }
    }
    if grid
        .iter()
        .any(|m| m < &Q::from_integer(0.into()) || m > &Q::from_integer(1.into()))
    {
        return Err(ResponseError::InvalidGrid(
            "beliefs must lie in [0,1]".to_string(),
        ));
    }
    let points: Vec<(Q, SmoothedResponse)> = grid
        .iter()
        .map(|m| smoothed_response(game, eta, m).map(|r| (m.clone(), r)))
        .collect::<Result<_, _>>()?;
    let strictly_increasing = points
        .windows(2)
        .all(|w| w[0].0 == w[1].0 || w[0].1.value < w[1].1.value);
    Ok(ActionCurve {
        points,
        strictly_increasing,
    })
}
