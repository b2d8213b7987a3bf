//! Canonical JSON serialization: game files, assessment files, star
//! solutions. Rationals travel as `"num/den"` strings (decimals accepted
//! on input); emission is canonical — sorted keys, two-space indentation,
//! trailing newline — so fixture files round-trip byte-identically.

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::check::{Assessment, ReceiverStrategy};
use crate::game::{BeliefSystem, EvidenceGame, EvidenceSpace, SenderStrategy};
use crate::num::{format_rational, parse_rational, Q};
use crate::star::StarSolution;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema: {0}")]
    Schema(String),
    #[error("rational: {0}")]
    Rational(#[from] crate::num::ParseRationalError),
    #[error(transparent)]
    Game(#[from] crate::game::GameError),
}

fn schema<T>(msg: impl Into<String>) -> Result<T, IoError> {
    Err(IoError::Schema(msg.into()))
}

fn as_str<'a>(v: &'a Value, what: &str) -> Result<&'a str, IoError> {
    v.as_str()
        .ok_or_else(|| IoError::Schema(format!("{what} must be a string")))
}

fn rational_field(v: &Value, what: &str) -> Result<Q, IoError> {
    Ok(parse_rational(as_str(v, what)?)?)
}

// ---------------------------------------------------------------------------
// Game files
// ---------------------------------------------------------------------------

pub fn game_to_json(game: &EvidenceGame) -> Value {
    let items = &game.space.items;
    let feasible: Vec<Value> = (0..items.len())
        .map(|e| {
            Value::Array(
                game.space
                    .lower_contour(e)
                    .into_iter()
                    .map(|m| Value::String(items[m].clone()))
                    .collect(),
            )
        })
        .collect();
    let mass_map = |f: &Vec<Q>| -> Value {
        let mut m = Map::new();
        for (i, id) in items.iter().enumerate() {
            m.insert(id.clone(), Value::String(format_rational(&f[i])));
        }
        Value::Object(m)
    };
    let payoff_map = |p: &Vec<Q>| -> Value {
        let mut m = Map::new();
        for (a, val) in game.actions.iter().enumerate() {
            m.insert(
                format_rational(val),
                Value::String(format_rational(&p[a])),
            );
        }
        Value::Object(m)
    };
    json!({
        "prior": format_rational(&game.prior),
        "evidence": items,
        "feasible": feasible,
        "fG": mass_map(&game.f_good),
        "fB": mass_map(&game.f_bad),
        "actions": game.actions.iter().map(|a| Value::String(format_rational(a))).collect::<Vec<_>>(),
        "payoffG": payoff_map(&game.payoff_good),
        "payoffB": payoff_map(&game.payoff_bad),
    })
}

pub fn game_from_json(v: &Value) -> Result<EvidenceGame, IoError> {
    let obj = v
        .as_object()
        .ok_or_else(|| IoError::Schema("game must be an object".into()))?;
    let get = |key: &str| -> Result<&Value, IoError> {
        obj.get(key)
            .ok_or_else(|| IoError::Schema(format!("missing field `{key}`")))
    };
    let items: Vec<String> = get("evidence")?
        .as_array()
        .ok_or_else(|| IoError::Schema("evidence must be a list".into()))?
        .iter()
        .map(|x| as_str(x, "evidence item").map(str::to_string))
        .collect::<Result<_, _>>()?;
    let n = items.len();
    let index = |id: &str| -> Result<usize, IoError> {
        items
            .iter()
            .position(|x| x == id)
            .ok_or_else(|| IoError::Schema(format!("unknown evidence `{id}` in feasible")))
    };
    let rows = get("feasible")?
        .as_array()
        .ok_or_else(|| IoError::Schema("feasible must be a list of lists".into()))?;
    if rows.len() != n {
        return schema("feasible must have one row per evidence item");
    }
    let mut feasible = vec![vec![false; n]; n];
    for (e, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| IoError::Schema("feasible row must be a list".into()))?;
        for entry in row {
            let m = index(as_str(entry, "feasible entry")?)?;
            feasible[m][e] = true;
        }
    }
    let mass_vec = |key: &str| -> Result<Vec<Q>, IoError> {
        let map = get(key)?
            .as_object()
            .ok_or_else(|| IoError::Schema(format!("{key} must be an object")))?;
        let mut out = vec![Q::from_integer(0.into()); n];
        for (id, val) in map {
            out[index(id)?] = rational_field(val, key)?;
        }
        Ok(out)
    };
    let actions: Vec<Q> = get("actions")?
        .as_array()
        .ok_or_else(|| IoError::Schema("actions must be a list".into()))?
        .iter()
        .map(|x| rational_field(x, "action"))
        .collect::<Result<_, _>>()?;
    let payoff_vec = |key: &str| -> Result<Vec<Q>, IoError> {
        let map = get(key)?
            .as_object()
            .ok_or_else(|| IoError::Schema(format!("{key} must be an object")))?;
        let mut out = vec![Q::from_integer(0.into()); actions.len()];
        for (id, val) in map {
            let a = parse_rational(id)?;
            let idx = actions
                .iter()
                .position(|x| x == &a)
                .ok_or_else(|| IoError::Schema(format!("unknown action `{id}` in {key}")))?;
            out[idx] = rational_field(val, key)?;
        }
        Ok(out)
    };
    Ok(EvidenceGame {
        prior: rational_field(get("prior")?, "prior")?,
        space: EvidenceSpace::new(items.clone(), feasible),
        f_good: mass_vec("fG")?,
        f_bad: mass_vec("fB")?,
        payoff_good: payoff_vec("payoffG")?,
        payoff_bad: payoff_vec("payoffB")?,
        actions,
    })
}

/// Canonical text form (sorted keys, two-space indent, trailing newline).
pub fn to_canonical_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialization cannot fail");
    s.push('\n');
    s
}

pub fn game_to_string(game: &EvidenceGame) -> String {
    to_canonical_string(&game_to_json(game))
}

pub fn game_from_str(s: &str) -> Result<EvidenceGame, IoError> {
    game_from_json(&serde_json::from_str(s)?)
}

// ---------------------------------------------------------------------------
// Assessment files
// ---------------------------------------------------------------------------

pub fn assessment_to_json(game: &EvidenceGame, a: &Assessment) -> Value {
    let items = &game.space.items;
    let mut sigma = Map::new();
    for (e, id) in items.iter().enumerate() {
        let mut row = Map::new();
        for m in game.space.lower_contour(e) {
            row.insert(
                items[m].clone(),
                Value::String(format_rational(&a.sigma.rows[e][m])),
            );
        }
        sigma.insert(id.clone(), Value::Object(row));
    }
    let mut rho = Map::new();
    for (m, id) in items.iter().enumerate() {
        let mut row = Map::new();
        for (ai, act) in game.actions.iter().enumerate() {
            row.insert(
                format_rational(act),
                Value::String(format_rational(&a.rho.rows[m][ai])),
            );
        }
        rho.insert(id.clone(), Value::Object(row));
    }
    let mut mu = Map::new();
    for (m, id) in items.iter().enumerate() {
        mu.insert(
            id.clone(),
            Value::String(format_rational(&a.mu.beliefs[m])),
        );
    }
    json!({ "sigma": sigma, "rho": rho, "mu": mu })
}

pub fn assessment_from_json(game: &EvidenceGame, v: &Value) -> Result<Assessment, IoError> {
    let obj = v
        .as_object()
        .ok_or_else(|| IoError::Schema("assessment must be an object".into()))?;
    let n = game.n_evidence();
    let k = game.n_actions();
    let idx = |id: &str| game.space.index_of(id).map_err(IoError::Game);
    let mut sigma = SenderStrategy {
        rows: vec![vec![Q::from_integer(0.into()); n]; n],
    };
    let sig = obj
        .get("sigma")
        .and_then(|x| x.as_object())
        .ok_or_else(|| IoError::Schema("missing sigma".into()))?;
    for (e_id, row) in sig {
        let e = idx(e_id)?;
        let row = row
            .as_object()
            .ok_or_else(|| IoError::Schema("sigma row must be an object".into()))?;
        for (m_id, val) in row {
            sigma.rows[e][idx(m_id)?] = rational_field(val, "sigma")?;
        }
    }
    let mut rho = ReceiverStrategy {
        rows: vec![vec![Q::from_integer(0.into()); k]; n],
    };
    let rh = obj
        .get("rho")
        .and_then(|x| x.as_object())
        .ok_or_else(|| IoError::Schema("missing rho".into()))?;
    for (m_id, row) in rh {
        let m = idx(m_id)?;
        let row = row
            .as_object()
            .ok_or_else(|| IoError::Schema("rho row must be an object".into()))?;
        for (a_id, val) in row {
            let a = parse_rational(a_id)?;
            let ai = game
                .action_index(&a)
                .map_err(|_| IoError::Schema(format!("unknown action `{a_id}`")))?;
            rho.rows[m][ai] = rational_field(val, "rho")?;
        }
    }
    let mut mu = BeliefSystem {
        beliefs: vec![Q::from_integer(0.into()); n],
    };
    let mm = obj
        .get("mu")
        .and_then(|x| x.as_object())
        .ok_or_else(|| IoError::Schema("missing mu".into()))?;
    for (m_id, val) in mm {
        mu.beliefs[idx(m_id)?] = rational_field(val, "mu")?;
    }
    Ok(Assessment { sigma, rho, mu })
}

pub fn assessment_to_string(game: &EvidenceGame, a: &Assessment) -> String {
    to_canonical_string(&assessment_to_json(game, a))
}

pub fn assessment_from_str(game: &EvidenceGame, s: &str) -> Result<Assessment, IoError> {
    assessment_from_json(game, &serde_json::from_str(s)?)
}

// ---------------------------------------------------------------------------
// Star solutions
// ---------------------------------------------------------------------------

pub fn star_to_json(game: &EvidenceGame, star: &StarSolution) -> Value {
    let items = &game.space.items;
    let mut mu = Map::new();
    for (m, id) in items.iter().enumerate() {
        mu.insert(
            id.clone(),
            Value::String(format_rational(&star.mu_star.beliefs[m])),
        );
    }
    let mut sigma = Map::new();
    for (e, id) in items.iter().enumerate() {
        let mut row = Map::new();
        for m in game.space.lower_contour(e) {
            row.insert(
                items[m].clone(),
                Value::String(format_rational(&star.sigma_star.rows[e][m])),
            );
        }
        sigma.insert(id.clone(), Value::Object(row));
    }
    let mut supports = Map::new();
    for (e, id) in items.iter().enumerate() {
        supports.insert(
            id.clone(),
            Value::Array(
                star.polytope.supports[e]
                    .iter()
                    .map(|&m| Value::String(items[m].clone()))
                    .collect(),
            ),
        );
    }
    let forced: Vec<Value> = items
        .iter()
        .enumerate()
        .filter(|(e, _)| star.polytope.forced_truth[*e])
        .map(|(_, id)| Value::String(id.clone()))
        .collect();
    let equalities: Vec<Value> = star
        .polytope
        .equalities
        .iter()
        .map(|eq| {
            let mut coeffs = Map::new();
            for (e, c) in &eq.coeffs {
                coeffs.insert(items[*e].clone(), Value::String(format_rational(c)));
            }
            json!({
                "message": items[eq.message],
                "coefficients": coeffs,
                "rhs": "0",
            })
        })
        .collect();
    let reach: Vec<Value> = items
        .iter()
        .enumerate()
        .filter(|(m, _)| star.polytope.reach_required[*m])
        .map(|(_, id)| Value::String(id.clone()))
        .collect();
    let diagnostics: Vec<Value> = star
        .diagnostics
        .iter()
        .map(|d| {
            json!({
                "message": items[d.message],
                "faceValue": format_rational(&d.face_value),
                "muStar": format_rational(&d.mu_star),
                "bayesTerm": d.bayes_term.as_ref().map(format_rational)
                    .map(Value::String).unwrap_or(Value::String("0/0-undefined".into())),
                "minMatches": d.min_matches.map(Value::Bool).unwrap_or(Value::Null),
                "indicator": d.indicator,
                "sigmaTruth": format_rational(&d.sigma_truth),
                "indicatorMatches": d.indicator_matches,
            })
        })
        .collect();
    let pools: Vec<Value> = star
        .pools
        .iter()
        .map(|p| {
            json!({
                "types": p.types.iter().map(|&e| items[e].clone()).collect::<Vec<_>>(),
                "messages": p.messages.iter().map(|&m| items[m].clone()).collect::<Vec<_>>(),
                "value": format_rational(&p.value),
            })
        })
        .collect();
    json!({
        "muStar": mu,
        "sigmaStar": sigma,
        "polytope": {
            "supports": supports,
            "forcedTruth": forced,
            "equalities": equalities,
            "reachRequired": reach,
        },
        "diagnostics": diagnostics,
        "pools": pools,
    })
}
