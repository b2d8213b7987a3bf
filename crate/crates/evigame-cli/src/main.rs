//! `evigame` — solver CLI for finite evidence games.
//!
//! Subcommands cover the full refinement hierarchy: validation, the star
//! solution, truth-leaning search, purifiable construction, disturbance
//! sweeps, perturbed-game solves, weakly truth-leaning homotopy, the lift
//! construction, assessment checking, random game generation, and the
//! grid-oracle differential comparison. All output is deterministic given
//! flags and seed; set `EVIGAME_THREADS` to cap parallelism.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use evigame_core::disturbed::uniform_tie_weights;
use evigame_core::num::{parse_rational, Q};
use evigame_core::{
    check_a2_diagnostics, construct_purifiable, find_truth_leaning, homotopy_weakly_tl, io,
    lift_witness, oracle_compare, purification_trace, random_game, report, solve_perturbed,
    solve_star, validate_game, verify_pbe, verify_perturbed_pbe, verify_purifiable,
    verify_truth_leaning, Assessment, EvidenceGame, HomotopyPath, HomotopyVerdict, OracleGrid,
    OracleMode, Perturbation, RandomGameParams, ShockFamily, TruthLeaningFindings,
};

#[derive(Parser)]
#[command(
    name = "evigame",
    about = "Equilibrium refinements for finite evidence games",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GameArg {
    /// Path to a game file (JSON).
    game: PathBuf,
}

#[derive(Args)]
struct OutArg {
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EpsArgs {
    /// Truth rewards: a single rational for every type, or `e:1/10,...`.
    #[arg(long)]
    rewards: String,
    /// Minimum-truth floors, same syntax.
    #[arg(long)]
    floors: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Gaussian,
    Uniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConceptArg {
    Pbe,
    TruthLeaning,
    Purifiable,
    Perturbed,
}

#[derive(Subcommand)]
enum Command {
    /// Check the structural assumptions; exit 1 with the violations when
    /// the game is invalid.
    Validate(GameArg),
    /// Full analysis report: star solution, genericity, truth-leaning
    /// findings, purifiable family, weakly truth-leaning limits, and the
    /// implication cross-checks.
    Analyze {
        #[command(flatten)]
        game: GameArg,
        #[command(flatten)]
        out: OutArg,
    },
    /// The universal belief system and sender-strategy polytope.
    SolveStar {
        #[command(flatten)]
        game: GameArg,
        #[command(flatten)]
        out: OutArg,
    },
    /// Exhaustive truth-leaning search: all equilibria or a nonexistence
    /// certificate.
    TruthLeaning {
        #[command(flatten)]
        game: GameArg,
        #[command(flatten)]
        out: OutArg,
    },
    /// Construct a purifiable equilibrium (tie weights required on
    /// nongeneric games unless --uniform-ties).
    Purifiable {
        #[command(flatten)]
        game: GameArg,
        /// Tie weights per belief level: `1/2:0=7/10,1=3/10;...`.
        #[arg(long)]
        weights: Option<String>,
        /// Use uniform weights over every tied action set.
        #[arg(long)]
        uniform_ties: bool,
        #[command(flatten)]
        out: OutArg,
    },
    /// Disturbance sweep: solve the disturbed game along a scale schedule
    /// and emit CSV (columns scale, message, belief, action, probability,
    /// stderr).
    DisturbedSweep {
        #[command(flatten)]
        game: GameArg,
        /// Decreasing scale schedule, e.g. `0.5,0.25,0.1`.
        #[arg(long)]
        scales: String,
        /// Per-action scale multipliers `action:mult,...`; default shocks
        /// every action except the lowest.
        #[arg(long)]
        pattern: Option<String>,
        #[arg(long, value_enum, default_value = "gaussian")]
        family: FamilyArg,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// All equilibria of the perturbed game, as families with exact
    /// ranges.
    Perturbed {
        #[command(flatten)]
        game: GameArg,
        #[command(flatten)]
        eps: EpsArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Homotopy continuation to a weakly truth-leaning limit.
    WeaklyTl {
        #[command(flatten)]
        game: GameArg,
        #[command(flatten)]
        eps: EpsArgs,
        /// Per-step shrink factor in (0,1).
        #[arg(long, default_value = "1/2")]
        factor: String,
        #[arg(long, default_value_t = 30)]
        steps: usize,
        /// Write the step-by-step trace CSV here.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Lift a purifiable truth-leaning equilibrium into the perturbed
    /// game (searches for one when --assessment is omitted).
    Lift {
        #[command(flatten)]
        game: GameArg,
        #[command(flatten)]
        eps: EpsArgs,
        #[arg(long)]
        assessment: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Verify an assessment against a solution concept; exit 1 with the
    /// violations on failure.
    Check {
        #[command(flatten)]
        game: GameArg,
        #[arg(long)]
        assessment: PathBuf,
        #[arg(long, value_enum)]
        concept: ConceptArg,
        #[arg(long)]
        rewards: Option<String>,
        #[arg(long)]
        floors: Option<String>,
    },
    /// Generate a random valid game (deterministic per seed).
    Random {
        #[arg(long)]
        evidence: usize,
        #[arg(long)]
        actions: usize,
        #[arg(long, default_value_t = 0.5)]
        density: f64,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Differential check of the solver against the brute-force grid
    /// oracle; exit 1 when discrepancies are found.
    OracleCompare {
        #[command(flatten)]
        game: GameArg,
        #[arg(long, value_enum)]
        mode: ConceptArg,
        #[arg(long)]
        rewards: Option<String>,
        #[arg(long)]
        floors: Option<String>,
        #[arg(long, default_value = "1/100")]
        step: String,
        #[arg(long, default_value = "0")]
        tolerance: String,
    },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("EVIGAME_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load_game(path: &PathBuf) -> Result<EvidenceGame> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let game = io::game_from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let report = validate_game(&game);
    if !report.ok() {
        bail!("invalid game:\n{report}");
    }
    Ok(game)
}

fn emit(out: &OutArg, content: &str) -> Result<()> {
    match &out.out {
        Some(path) => std::fs::write(path, content)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{content}"),
    }
    Ok(())
}

fn parse_eps_map(game: &EvidenceGame, spec: &str) -> Result<Vec<Q>> {
    if !spec.contains(':') {
        let v = parse_rational(spec)?;
        return Ok(vec![v; game.n_evidence()]);
    }
    let mut out: Vec<Option<Q>> = vec![None; game.n_evidence()];
    for part in spec.split(',') {
        let (id, val) = part
            .split_once(':')
            .ok_or_else(|| anyhow!("expected `evidence:value` in `{part}`"))?;
        let idx = game.space.index_of(id.trim())?;
        out[idx] = Some(parse_rational(val.trim())?);
    }
    out.into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| anyhow!("missing value for `{}`", game.space.items[i])))
        .collect()
}

fn parse_perturbation(game: &EvidenceGame, rewards: &str, floors: &str) -> Result<Perturbation> {
    Ok(Perturbation {
        reward: parse_eps_map(game, rewards)?,
        floor: parse_eps_map(game, floors)?,
    })
}

fn parse_pattern(game: &EvidenceGame, spec: Option<&str>) -> Result<Vec<f64>> {
    match spec {
        None => {
            // Default: unit shock on every action except the lowest.
            let mut p = vec![1.0; game.n_actions()];
            p[0] = 0.0;
            Ok(p)
        }
        Some(s) => {
            let mut p = vec![0.0; game.n_actions()];
            for part in s.split(',') {
                let (a, v) = part
                    .split_once(':')
                    .ok_or_else(|| anyhow!("expected `action:scale` in `{part}`"))?;
                let av = parse_rational(a.trim())?;
                let idx = game
                    .action_index(&av)
                    .map_err(|_| anyhow!("unknown action `{a}`"))?;
                p[idx] = v.trim().parse::<f64>().context("scale must be a float")?;
            }
            Ok(p)
        }
    }
}

/// `level:action=weight,action=weight;level:...`
fn parse_weights(game: &EvidenceGame, spec: &str) -> Result<BTreeMap<Q, BTreeMap<usize, Q>>> {
    let mut out = BTreeMap::new();
    for level_part in spec.split(';') {
        let (level, rest) = level_part
            .split_once(':')
            .ok_or_else(|| anyhow!("expected `level:action=weight,...` in `{level_part}`"))?;
        let level = parse_rational(level.trim())?;
        let mut weights = BTreeMap::new();
        for wpart in rest.split(',') {
            let (a, w) = wpart
                .split_once('=')
                .ok_or_else(|| anyhow!("expected `action=weight` in `{wpart}`"))?;
            let av = parse_rational(a.trim())?;
            let idx = game
                .action_index(&av)
                .map_err(|_| anyhow!("unknown action `{a}`"))?;
            weights.insert(idx, parse_rational(w.trim())?);
        }
        out.insert(level, weights);
    }
    Ok(out)
}

fn families_json(game: &EvidenceGame, fams: &[evigame_core::EquilibriumFamily]) -> serde_json::Value {
    serde_json::json!({
        "families": fams.iter().map(|f| serde_json::json!({
            "dim": f.dim(),
            "witness": io::assessment_to_json(game, &f.witness(game)),
            "freeCoordinates": f.describe(game),
        })).collect::<Vec<_>>(),
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Validate(g) => {
            let text = std::fs::read_to_string(&g.game)
                .with_context(|| format!("reading {}", g.game.display()))?;
            let game = io::game_from_str(&text)?;
            let report = validate_game(&game);
            if report.ok() {
                println!("ok");
                Ok(ExitCode::SUCCESS)
            } else {
                print!("{report}");
                Ok(ExitCode::from(1))
            }
        }
        Command::Analyze { game, out } => {
            let g = load_game(&game.game)?;
            let started = std::time::Instant::now();
            let text = report::analysis_report_string(&g)?;
            eprintln!("analyze: {} ms", started.elapsed().as_millis());
            emit(&out, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::SolveStar { game, out } => {
            let g = load_game(&game.game)?;
            let star = solve_star(&g)?;
            let _ = check_a2_diagnostics(&g, &star);
            emit(&out, &io::to_canonical_string(&io::star_to_json(&g, &star)))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::TruthLeaning { game, out } => {
            let g = load_game(&game.game)?;
            let findings = find_truth_leaning(&g)?;
            let v = match &findings {
                TruthLeaningFindings::Found(fams) => {
                    let mut v = families_json(&g, fams);
                    v["found"] = serde_json::Value::Bool(true);
                    v
                }
                TruthLeaningFindings::NotFound {
                    refuted,
                    certificate,
                } => serde_json::json!({
                    "found": false,
                    "refutedStructures": refuted,
                    "certificate": certificate,
                }),
            };
            emit(&out, &io::to_canonical_string(&v))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Purifiable {
            game,
            weights,
            uniform_ties,
            out,
        } => {
            let g = load_game(&game.game)?;
            let star = solve_star(&g)?;
            let w = match (&weights, uniform_ties) {
                (Some(spec), false) => parse_weights(&g, spec)?,
                (None, true) => uniform_tie_weights(&g, &star),
                (None, false) => BTreeMap::new(),
                (Some(_), true) => bail!("--weights and --uniform-ties are mutually exclusive"),
            };
            let a = construct_purifiable(&g, &star, &w)?;
            emit(&out, &io::assessment_to_string(&g, &a))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::DisturbedSweep {
            game,
            scales,
            pattern,
            family,
            seed,
            samples,
            out,
        } => {
            let g = load_game(&game.game)?;
            let star = solve_star(&g)?;
            let schedule: Vec<f64> = scales
                .split(',')
                .map(|s| s.trim().parse::<f64>().context("scale must be a float"))
                .collect::<Result<_>>()?;
            let pattern = parse_pattern(&g, pattern.as_deref())?;
            let fam = match family {
                FamilyArg::Gaussian => ShockFamily::GaussianIid,
                FamilyArg::Uniform => ShockFamily::UniformIid,
            };
            let trace = purification_trace(&g, fam, &pattern, &schedule, &star, seed, samples)?;
            emit(&out, &report::sweep_csv(&g, &trace, &star.mu_star.beliefs))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Perturbed { game, eps, out } => {
            let g = load_game(&game.game)?;
            let p = parse_perturbation(&g, &eps.rewards, &eps.floors)?;
            let fams = solve_perturbed(&g, &p)?;
            emit(&out, &io::to_canonical_string(&families_json(&g, &fams)))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::WeaklyTl {
            game,
            eps,
            factor,
            steps,
            trace,
            out,
        } => {
            let g = load_game(&game.game)?;
            let path = HomotopyPath {
                base: parse_perturbation(&g, &eps.rewards, &eps.floors)?,
                factor: parse_rational(&factor)?,
                steps,
            };
            let res = homotopy_weakly_tl(&g, &path)?;
            if let Some(trace_path) = trace {
                std::fs::write(&trace_path, report::trace_csv(&g, &res))
                    .with_context(|| format!("writing {}", trace_path.display()))?;
            }
            let v = serde_json::json!({
                "verdict": match res.verdict {
                    HomotopyVerdict::Converged => "converged",
                    HomotopyVerdict::LimitRejected => "limit-rejected",
                    HomotopyVerdict::Divergent => "divergent",
                },
                "steps": res.trace.len(),
                "limit": res.limit.as_ref().map(|l| io::assessment_to_json(&g, l)),
            });
            emit(&out, &io::to_canonical_string(&v))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Lift {
            game,
            eps,
            assessment,
            out,
        } => {
            let g = load_game(&game.game)?;
            let p = parse_perturbation(&g, &eps.rewards, &eps.floors)?;
            let star = solve_star(&g)?;
            let a = match assessment {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)?;
                    io::assessment_from_str(&g, &text)?
                }
                None => {
                    let findings = find_truth_leaning(&g)?;
                    let TruthLeaningFindings::Found(fams) = findings else {
                        bail!("no purifiable truth-leaning equilibrium exists");
                    };
                    fams.iter()
                        .map(|f| f.witness(&g))
                        .find(|w| {
                            verify_purifiable(&g, w, &star)
                                .map(|r| r.pass())
                                .unwrap_or(false)
                        })
                        .ok_or_else(|| anyhow!("no purifiable truth-leaning equilibrium exists"))?
                }
            };
            let lifted = lift_witness(&g, &star, &a, &p)?;
            emit(&out, &io::assessment_to_string(&g, &lifted))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Check {
            game,
            assessment,
            concept,
            rewards,
            floors,
        } => {
            let g = load_game(&game.game)?;
            let text = std::fs::read_to_string(&assessment)?;
            let a: Assessment = io::assessment_from_str(&g, &text)?;
            let result = match concept {
                ConceptArg::Pbe => verify_pbe(&g, &a)?,
                ConceptArg::TruthLeaning => verify_truth_leaning(&g, &a)?,
                ConceptArg::Purifiable => {
                    let star = solve_star(&g)?;
                    verify_purifiable(&g, &a, &star)?
                }
                ConceptArg::Perturbed => {
                    let (Some(r), Some(f)) = (rewards, floors) else {
                        bail!("--concept perturbed requires --rewards and --floors");
                    };
                    let p = parse_perturbation(&g, &r, &f)?;
                    verify_perturbed_pbe(&g, &p, &a)?
                }
            };
            if result.pass() {
                println!("pass");
                Ok(ExitCode::SUCCESS)
            } else {
                print!("{result}");
                Ok(ExitCode::from(1))
            }
        }
        Command::Random {
            evidence,
            actions,
            density,
            seed,
            out,
        } => {
            let game = random_game(&RandomGameParams {
                n_evidence: evidence,
                density,
                n_actions: actions,
                seed,
            });
            emit(&out, &io::game_to_string(&game))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::OracleCompare {
            game,
            mode,
            rewards,
            floors,
            step,
            tolerance,
        } => {
            let g = load_game(&game.game)?;
            let grid = OracleGrid {
                step: parse_rational(&step)?,
                tolerance: parse_rational(&tolerance)?,
            };
            let (oracle_mode, families) = match mode {
                ConceptArg::Pbe | ConceptArg::Purifiable => {
                    bail!("oracle-compare needs a solver side; use truth-leaning or perturbed")
                }
                ConceptArg::TruthLeaning => {
                    let fams = match find_truth_leaning(&g)? {
                        TruthLeaningFindings::Found(f) => f,
                        TruthLeaningFindings::NotFound { .. } => Vec::new(),
                    };
                    (OracleMode::TruthLeaning, fams)
                }
                ConceptArg::Perturbed => {
                    let (Some(r), Some(f)) = (rewards, floors) else {
                        bail!("--mode perturbed requires --rewards and --floors");
                    };
                    let p = parse_perturbation(&g, &r, &f)?;
                    let fams = solve_perturbed(&g, &p)?;
                    (OracleMode::Perturbed(p), fams)
                }
            };
            let report = oracle_compare(&g, &families, &oracle_mode, &grid)?;
            if report.pass() {
                println!("no discrepancies");
                Ok(ExitCode::SUCCESS)
            } else {
                for d in &report.discrepancies {
                    println!("discrepancy [{:?}]: {}", d.kind, d.detail);
                }
                Ok(ExitCode::from(1))
            }
        }
    }
}
