//! Report assembly: the full analysis report (JSON) and the CSV formats
//! for disturbance sweeps and homotopy traces. Every embedded assessment
//! is verified against its predicate before emission; floats print with
//! 12 significant digits, rationals as `num/den`.

use serde_json::{json, Map, Value};

use crate::check::{verify_pbe, Assessment};
use crate::disturbed::{genericity_check, PurificationTrace};
use crate::family::{CoordKeys, EquilibriumFamily};
use crate::game::{face_value_belief_idx, EvidenceGame};
use crate::io::{assessment_to_json, star_to_json, to_canonical_string};
use crate::num::{format_rational, format_real, Q};
use crate::perturbed::{relations_report, HomotopyResult, HomotopyVerdict, RelationsReport};
use crate::response::indifference_thresholds;
use crate::star::{SolverError, TruthLeaningFindings};

fn family_json(game: &EvidenceGame, f: &EquilibriumFamily) -> Value {
    json!({
        "dim": f.dim(),
        "witness": assessment_to_json(game, &f.witness(game)),
        "freeCoordinates": f.describe(game),
    })
}

fn findings_json(game: &EvidenceGame, t: &TruthLeaningFindings) -> Value {
    match t {
        TruthLeaningFindings::Found(fams) => json!({
            "found": true,
            "count": fams.len(),
            "families": fams.iter().map(|f| family_json(game, f)).collect::<Vec<_>>(),
        }),
        TruthLeaningFindings::NotFound { refuted, .. } => json!({
            "found": false,
            "refutedStructures": refuted,
        }),
    }
}

fn homotopy_json(game: &EvidenceGame, r: &HomotopyResult) -> Value {
    json!({
        "verdict": match r.verdict {
            HomotopyVerdict::Converged => "converged",
            HomotopyVerdict::LimitRejected => "limit-rejected",
            HomotopyVerdict::Divergent => "divergent",
        },
        "steps": r.trace.len(),
        "limit": r.limit.as_ref().map(|l| assessment_to_json(game, l)).unwrap_or(Value::Null),
    })
}

pub fn relations_to_json(game: &EvidenceGame, rel: &RelationsReport) -> Value {
    let impl_json = |rep: &crate::perturbed::ImplicationReport| {
        json!({
            "holds": rep.holds,
            "vacuous": rep.witnesses.iter().all(|w| !w.purifiable),
            "witnesses": rep.witnesses.iter().map(|w| json!({
                "equilibrium": w.description,
                "purifiable": w.purifiable,
                "conclusionHolds": w.conclusion_holds,
            })).collect::<Vec<_>>(),
        })
    };
    let mut implications = Map::new();
    implications.insert(
        "weaklyTlAndPurifiableImpliesTruthLeaning".to_string(),
        impl_json(&rel.implication_weakly_purifiable_tl),
    );
    implications.insert(
        "truthLeaningAndPurifiableImpliesWeaklyTl".to_string(),
        impl_json(&rel.implication_tl_purifiable_weakly),
    );
    json!({
        "generic": rel.generic,
        "truthLeaning": findings_json(game, &rel.truth_leaning),
        "purifiableRepresentative": assessment_to_json(game, &rel.purifiable_representative),
        "weaklyTruthLeaningPaths": rel.paths.iter().map(|p| json!({
            "path": p.name,
            "baseRewards": p.base.reward.iter().map(format_rational).collect::<Vec<_>>(),
            "baseFloors": p.base.floor.iter().map(format_rational).collect::<Vec<_>>(),
            "outcome": homotopy_json(game, &p.result),
        })).collect::<Vec<_>>(),
        "implications": implications,
    })
}

/// The full analysis of one game: validation summary, face values,
/// thresholds, star solution, genericity, truth-leaning findings, the
/// purifiable family, weakly truth-leaning limits per canonical path, and
/// the implication cross-checks. Timing is reported separately (stderr)
/// so the file output stays byte-stable.
pub fn analysis_report(game: &EvidenceGame) -> Result<Value, SolverError> {
    let rel = relations_report(game)?;
    // Predicate gate: every embedded assessment must pass its concept
    // before emission.
    if !verify_pbe(game, &rel.purifiable_representative)
        .map_err(SolverError::Game)?
        .pass()
    {
        return Err(SolverError::Defect(
            "purifiable representative failed verification before emission".to_string(),
        ));
    }
    if let TruthLeaningFindings::Found(fams) = &rel.truth_leaning {
        for f in fams {
            let ok = crate::check::verify_truth_leaning(game, &f.witness(game))
                .map_err(SolverError::Game)?
                .pass();
            if !ok {
                return Err(SolverError::Defect(
                    "truth-leaning family witness failed verification before emission"
                        .to_string(),
                ));
            }
        }
    }
    let items = &game.space.items;
    let mut face = Map::new();
    for (m, id) in items.iter().enumerate() {
        face.insert(
            id.clone(),
            Value::String(format_rational(&face_value_belief_idx(game, m))),
        );
    }
    let thresholds: Vec<Value> = indifference_thresholds(game)
        .into_iter()
        .map(|t| {
            json!({
                "belief": format_rational(&t.belief),
                "lower": format_rational(&game.actions[t.lower]),
                "upper": format_rational(&game.actions[t.upper]),
            })
        })
        .collect();
    let gen = genericity_check(game, &rel.star);
    Ok(json!({
        "game": {
            "evidence": items,
            "prior": format_rational(&game.prior),
            "actions": game.actions.iter().map(format_rational).collect::<Vec<_>>(),
            "faceValues": face,
            "thresholds": thresholds,
        },
        "star": star_to_json(game, &rel.star),
        "genericity": {
            "generic": gen.generic,
            "ties": gen.ties.iter().map(|(m, acts)| json!({
                "message": items[*m],
                "tiedActions": acts.iter().map(|&a| format_rational(&game.actions[a])).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        },
        "relations": relations_to_json(game, &rel),
    }))
}

pub fn analysis_report_string(game: &EvidenceGame) -> Result<String, SolverError> {
    Ok(to_canonical_string(&analysis_report(game)?))
}

// ---------------------------------------------------------------------------
// CSV formats
// ---------------------------------------------------------------------------

/// Disturbance sweep: one row per (scale, message, action) in schedule,
/// message, action order.
pub fn sweep_csv(game: &EvidenceGame, trace: &PurificationTrace, mu: &[Q]) -> String {
    let mut out = String::from("scale,message,belief,action,probability,stderr\n");
    for point in &trace.points {
        for (m, resp) in point.outcome.rho.iter().enumerate() {
            for (a, p) in resp.probs.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    format_real(point.scale),
                    game.space.items[m],
                    format_rational(&mu[m]),
                    format_rational(&game.actions[a]),
                    format_real(*p),
                    format_real(resp.stderr[a]),
                ));
            }
        }
    }
    out
}

/// Homotopy trace: step, epsilon scale, then every canonical strategy
/// coordinate and belief as exact rationals.
pub fn trace_csv(game: &EvidenceGame, result: &HomotopyResult) -> String {
    let keys = CoordKeys::for_game(game);
    let mut header: Vec<String> = vec!["step".into(), "scale".into()];
    header.extend(keys.names(game));
    for id in &game.space.items {
        header.push(format!("mu[{}]", id));
    }
    let mut out = header.join(",");
    out.push('\n');
    for step in &result.trace {
        let mut row: Vec<String> = vec![step.step.to_string(), format_rational(&step.scale)];
        row.extend(keys.vector(&step.selection).iter().map(format_rational));
        row.extend(step.selection.mu.beliefs.iter().map(format_rational));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// One-line-per-assessment listing used by the CLI `check` output.
pub fn assessment_summary(game: &EvidenceGame, a: &Assessment) -> String {
    let keys = CoordKeys::for_game(game);
    let names = keys.names(game);
    let vals = keys.vector(a);
    let mut parts: Vec<String> = names
        .iter()
        .zip(&vals)
        .map(|(n, v)| format!("{}={}", n, format_rational(v)))
        .collect();
    for (m, id) in game.space.items.iter().enumerate() {
        parts.push(format!("mu[{}]={}", id, format_rational(&a.mu.beliefs[m])));
    }
    parts.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn analysis_is_deterministic_and_contains_mu_star() {
        let faa = fixtures::faa();
        let a = analysis_report_string(&faa).unwrap();
        let b = analysis_report_string(&faa).unwrap();
        assert_eq!(a, b);
        let v: Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["star"]["muStar"]["n"], "1/2");
        assert_eq!(v["star"]["muStar"]["b"], "0");
    }
}
