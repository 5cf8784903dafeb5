//! Command-line front end: argument parsing, report envelopes, `verify`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::catalog::{catalog_entry, reference_strategy, CATALOG};
use crate::equilibrium::{
    deviation_grids, epsilon_nash_check, find_equilibrium_discretized, theorem2_purify, theorem3_purify_equilibrium,
    EquilibriumConfig, FindEqConfig,
};
use crate::error::{Error, Result};
use crate::game::{parse_game_spec, GameSpec, ParseOptions, Quadrature};
use crate::purify::{
    theorem1_purify, verify_gaps, AdversarialSuite, BinaryGame, GapReport, PurifyConfig, RoundingScheme, Status,
};
use crate::strategy::{pure_to_mixed, MixedStrategy, PureStrategy};

#[derive(Debug, Parser)]
#[command(
    name = "purekit",
    version,
    about = "Purification of mixed strategies in Bayesian games"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Purify one player's mixed strategy.
    Purify(PurifyArgs),
    /// Purify every strategy of an approximate equilibrium.
    PurifyEq(PurifyEqArgs),
    /// Search for an approximate equilibrium on an action grid.
    FindEq(FindEqArgs),
    /// Recompute a stored report and re-check it on a fresh opponent suite.
    Verify(VerifyArgs),
    /// Regret of a profile against grid deviations.
    NashCheck(NashCheckArgs),
    /// List the built-in games.
    Catalog(CatalogArgs),
}

#[derive(Debug, Args)]
pub struct GameArgs {
    /// Game file, or the name of a built-in game.
    #[arg(long)]
    pub game: String,
    /// Rescale unnormalized priors instead of rejecting them.
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Debug, Args)]
pub struct TuningArgs {
    /// Grid step of the purified player's measure net.
    #[arg(long, default_value_t = 0.05)]
    pub net_step: f64,
    /// Weight resolution of the measure net.
    #[arg(long, default_value_t = 20)]
    pub net_resolution: usize,
    /// Opponent action points for suprema.
    #[arg(long, default_value_t = 21)]
    pub ell_points: usize,
    /// Quadrature sub-cells per cell and axis.
    #[arg(long, default_value_t = 2)]
    pub subdivision: usize,
    /// Auxiliary-measure atoms per purification cell.
    #[arg(long)]
    pub aux_subdivision: Option<usize>,
    /// Opponent strategies in the adversarial suite.
    #[arg(long)]
    pub suite_size: Option<usize>,
    /// Monte Carlo samples per re-estimated gap (0 disables).
    #[arg(long)]
    pub mc_samples: Option<usize>,
    #[arg(long, value_parser = ["stratified", "independent"], default_value = "stratified")]
    pub scheme: String,
}

impl TuningArgs {
    fn apply(&self, mut cfg: PurifyConfig) -> Result<PurifyConfig> {
        cfg.net_step = positive("net-step", self.net_step)?;
        cfg.net_resolution = at_least_one("net-resolution", self.net_resolution)?;
        cfg.ell_points = at_least_one("ell-points", self.ell_points)?;
        cfg.quadrature = Quadrature::with_subdivision(at_least_one("subdivision", self.subdivision)?);
        cfg.verify.quadrature = cfg.quadrature;
        if let Some(a) = self.aux_subdivision {
            cfg.aux_subdivision = at_least_one("aux-subdivision", a)?;
        }
        if let Some(s) = self.suite_size {
            cfg.suite_size = at_least_one("suite-size", s)?;
        }
        if let Some(m) = self.mc_samples {
            cfg.verify.mc_samples = m;
        }
        cfg.rounding.scheme = match self.scheme.as_str() {
            "independent" => RoundingScheme::Independent,
            _ => RoundingScheme::Stratified,
        };
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct PurifyArgs {
    #[command(flatten)]
    pub game: GameArgs,
    /// One-based player index.
    #[arg(long)]
    pub player: usize,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON mixed strategy of the player, or a JSON profile (one strategy
    /// per player). Defaults to the reference strategies of built-in games.
    #[arg(long)]
    pub strategy: Option<PathBuf>,
    #[command(flatten)]
    pub tuning: TuningArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FindEqTuning {
    /// Strategy cells per player.
    #[arg(long, default_value_t = 8)]
    pub cells: usize,
    /// Step of the action grid.
    #[arg(long, default_value_t = 0.05)]
    pub grid_step: f64,
    #[arg(long, default_value_t = 400)]
    pub iterations: usize,
    #[arg(long, default_value_t = 1.0)]
    pub damping: f64,
    /// Weights are rounded to multiples of 1/quantize.
    #[arg(long, default_value_t = 4)]
    pub quantize: usize,
}

impl FindEqTuning {
    fn config(&self) -> Result<FindEqConfig> {
        Ok(FindEqConfig {
            grid_step: positive("grid-step", self.grid_step)?,
            cells: at_least_one("cells", self.cells)?,
            iterations: at_least_one("iterations", self.iterations)?,
            damping: positive("damping", self.damping)?,
            quantize: at_least_one("quantize", self.quantize)?,
            ..FindEqConfig::default()
        })
    }
}

#[derive(Debug, Args)]
pub struct PurifyEqArgs {
    #[command(flatten)]
    pub game: GameArgs,
    #[arg(long, default_value_t = 0.3)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON profile or `find-eq` report; searched with `find-eq` settings
    /// when absent.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Step of the deviation grid of the regret checks.
    #[arg(long, default_value_t = 0.05)]
    pub deviation_step: f64,
    #[command(flatten)]
    pub search: FindEqTuning,
    #[command(flatten)]
    pub tuning: TuningArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FindEqArgs {
    #[command(flatten)]
    pub game: GameArgs,
    #[command(flatten)]
    pub search: FindEqTuning,
    /// PASS when every player's regret is below this.
    #[arg(long, default_value_t = 0.05)]
    pub target_regret: f64,
    #[arg(long, default_value_t = 2)]
    pub subdivision: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Report written by `purify`, `purify-eq`, `find-eq` or `nash-check`.
    #[arg(long)]
    pub report: PathBuf,
    /// Seed of the fresh opponent suite (default: derived from the stored seed).
    #[arg(long)]
    pub fresh_seed: Option<u64>,
    /// Relative tolerance of the recomputation.
    #[arg(long, default_value_t = 1e-9)]
    pub tolerance: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NashCheckArgs {
    #[command(flatten)]
    pub game: GameArgs,
    /// JSON profile or `find-eq` report.
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub grid_step: f64,
    #[arg(long, default_value_t = 2)]
    pub subdivision: usize,
    /// PASS when every player's regret is below this.
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CatalogArgs {
    /// Print the game file of one built-in game.
    #[arg(long)]
    pub show: Option<String>,
}

/// Resolved inputs of a run; embedded in every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    /// Game as given on the command line.
    pub game: String,
    pub game_text: String,
    /// Directory of the game file, for table payoffs.
    pub game_dir: Option<PathBuf>,
    pub strict: bool,
    /// One-based player index.
    pub player: Option<usize>,
    pub epsilon: Option<f64>,
    pub seed: u64,
    pub profile: Option<Vec<MixedStrategy>>,
    pub purify: Option<PurifyConfig>,
    pub equilibrium: Option<EquilibriumConfig>,
    pub find_eq: Option<FindEqConfig>,
    pub deviation_step: Option<f64>,
    pub quadrature: Option<Quadrature>,
    pub target_regret: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Envelope {
    pub config: RunConfig,
    pub parse_warnings: Vec<String>,
    pub status: Status,
    pub report: Value,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Parameter(format!("--{name} must be positive, got {v}")))
    }
}

fn at_least_one(name: &str, v: usize) -> Result<usize> {
    if v >= 1 {
        Ok(v)
    } else {
        Err(Error::Parameter(format!("--{name} must be at least 1")))
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Writes through a temporary file in the target directory and renames it.
pub fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    fs::write(&tmp, text).map_err(|e| Error::io(tmp.display().to_string(), e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path.display().to_string(), e)
    })
}

fn resolve_game(args: &GameArgs) -> Result<(String, Option<PathBuf>)> {
    let path = Path::new(&args.game);
    if path.is_file() {
        let dir = path.canonicalize().ok().and_then(|p| p.parent().map(Path::to_path_buf));
        return Ok((read(path)?, dir));
    }
    if let Ok(entry) = catalog_entry(&args.game) {
        return Ok((entry.text.to_string(), None));
    }
    Err(Error::io(
        args.game.clone(),
        std::io::Error::new(std::io::ErrorKind::NotFound, "no such game file or built-in game"),
    ))
}

fn load_game(cfg: &RunConfig) -> Result<(GameSpec, Vec<String>)> {
    parse_game_spec(
        &cfg.game_text,
        &ParseOptions {
            strict: cfg.strict,
            base_dir: cfg.game_dir.clone(),
        },
    )
}

fn base_config(command: &str, game: &GameArgs, seed: u64) -> Result<RunConfig> {
    let (game_text, game_dir) = resolve_game(game)?;
    Ok(RunConfig {
        command: command.to_string(),
        game: game.game.clone(),
        game_text,
        game_dir,
        strict: !game.lenient,
        player: None,
        epsilon: None,
        seed,
        profile: None,
        purify: None,
        equilibrium: None,
        find_eq: None,
        deviation_step: None,
        quadrature: None,
        target_regret: None,
    })
}

/// A profile from JSON: a list of strategies, a single strategy, or a
/// `find-eq` report.
fn read_profile(path: &Path) -> Result<Vec<MixedStrategy>> {
    let v: Value = serde_json::from_str(&read(path)?)?;
    if let Some(p) = v.get("report").and_then(|r| r.get("profile")) {
        return Ok(serde_json::from_value(p.clone())?);
    }
    if v.is_array() {
        return Ok(serde_json::from_value(v)?);
    }
    Ok(vec![serde_json::from_value(v)?])
}

fn default_profile(g: &GameSpec, game: &str) -> Result<Vec<MixedStrategy>> {
    if catalog_entry(game).is_err() {
        return Err(Error::Parameter(
            "--strategy is required for games outside the catalog".into(),
        ));
    }
    (0..g.players()).map(|i| reference_strategy(&g.name, i)).collect()
}

/// Runs the computation described by `cfg`; shared by the commands and
/// `verify`.
pub fn execute(cfg: &RunConfig) -> Result<(Value, Status)> {
    let (g, _) = load_game(cfg)?;
    let missing = |what: &str| Error::Parameter(format!("report config lacks {what}"));
    match cfg.command.as_str() {
        "purify" => {
            let player = cfg.player.ok_or_else(|| missing("player"))?;
            let i = player
                .checked_sub(1)
                .filter(|&i| i < g.players())
                .ok_or_else(|| Error::Parameter(format!("player {player} out of range 1..={}", g.players())))?;
            let eps = cfg.epsilon.ok_or_else(|| missing("epsilon"))?;
            let profile = cfg.profile.as_ref().ok_or_else(|| missing("profile"))?;
            let pc = cfg.purify.as_ref().ok_or_else(|| missing("purify settings"))?;
            let (_, cert) = if g.players() == 2 {
                theorem1_purify(&g, i, &profile[i], eps, cfg.seed, pc)?
            } else {
                theorem2_purify(&g, i, profile, eps, cfg.seed, pc)?
            };
            Ok((serde_json::to_value(&cert)?, cert.status))
        }
        "purify-eq" => {
            let eps = cfg.epsilon.ok_or_else(|| missing("epsilon"))?;
            let profile = cfg.profile.as_ref().ok_or_else(|| missing("profile"))?;
            let ec = cfg
                .equilibrium
                .as_ref()
                .ok_or_else(|| missing("equilibrium settings"))?;
            let (_, cert) = theorem3_purify_equilibrium(&g, profile, eps, cfg.seed, ec)?;
            Ok((serde_json::to_value(&cert)?, cert.status))
        }
        "find-eq" => {
            let fc = cfg.find_eq.as_ref().ok_or_else(|| missing("search settings"))?;
            let q = cfg.quadrature.unwrap_or_default();
            let target = cfg.target_regret.ok_or_else(|| missing("target regret"))?;
            let out = find_equilibrium_discretized(&g, fc, &q)?;
            let status = Status::from_bool(out.check.max_regret() < target);
            Ok((serde_json::to_value(&out)?, status))
        }
        "nash-check" => {
            let profile = cfg.profile.as_ref().ok_or_else(|| missing("profile"))?;
            let step = cfg.deviation_step.ok_or_else(|| missing("deviation step"))?;
            let q = cfg.quadrature.unwrap_or_default();
            let eps = cfg.epsilon.ok_or_else(|| missing("epsilon"))?;
            let check = epsilon_nash_check(&g, profile, &deviation_grids(&g, step), &q)?;
            let status = Status::from_bool(check.max_regret() < eps);
            Ok((serde_json::to_value(&check)?, status))
        }
        other => Err(Error::Parameter(format!("unknown command `{other}`"))),
    }
}

fn emit(cfg: RunConfig, out: Option<&Path>) -> Result<Status> {
    let (_, parse_warnings) = load_game(&cfg)?;
    let (report, status) = execute(&cfg)?;
    let env = Envelope {
        config: cfg,
        parse_warnings,
        status,
        report,
    };
    let text = serde_json::to_string_pretty(&env)? + "\n";
    match out {
        Some(p) => write_atomic(p, &text)?,
        None => print!("{text}"),
    }
    eprintln!("status: {}", if status.passed() { "PASS" } else { "FAILED" });
    Ok(status)
}

/// Differences between two JSON trees beyond a relative tolerance.
pub fn json_mismatches(stored: &Value, fresh: &Value, tol: f64, path: &str, out: &mut Vec<String>) {
    match (stored, fresh) {
        (Value::Number(a), Value::Number(b)) => {
            let (a, b) = (a.as_f64().unwrap_or(f64::NAN), b.as_f64().unwrap_or(f64::NAN));
            if !((a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300) || a == b) {
                out.push(format!("{path}: stored {a}, recomputed {b}"));
            }
        }
        (Value::Array(a), Value::Array(b)) if a.len() == b.len() => {
            for (i, (x, y)) in a.iter().zip(b).enumerate() {
                json_mismatches(x, y, tol, &format!("{path}[{i}]"), out);
            }
        }
        (Value::Object(a), Value::Object(b)) if a.len() == b.len() => {
            for (k, x) in a {
                match b.get(k) {
                    Some(y) => json_mismatches(x, y, tol, &format!("{path}.{k}"), out),
                    None => out.push(format!("{path}.{k}: missing on recomputation")),
                }
            }
        }
        (a, b) if a == b => {}
        _ => out.push(format!("{path}: stored and recomputed values differ")),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub report: PathBuf,
    pub stored_status: Status,
    pub recomputed_status: Status,
    pub mismatches: Vec<String>,
    pub fresh_seed: Option<u64>,
    pub fresh_suite: Option<GapReport>,
    pub fresh_suite_passed: Option<bool>,
    pub status: Status,
}

fn fresh_suite_check(env: &Envelope, seed: u64) -> Result<(GapReport, bool)> {
    let cfg = &env.config;
    let (g, _) = load_game(cfg)?;
    let i = cfg.player.unwrap_or(1) - 1;
    let profile = cfg
        .profile
        .as_ref()
        .ok_or_else(|| Error::Parameter("report config lacks profile".into()))?;
    let pc = cfg.purify.clone().unwrap_or_default();
    let eps = cfg.epsilon.unwrap_or(0.0);
    let pure: PureStrategy = serde_json::from_value(
        env.report
            .get("pure_strategy")
            .cloned()
            .ok_or_else(|| Error::Parameter("report lacks pure_strategy".into()))?,
    )?;
    let game = if g.players() == 2 {
        BinaryGame::from_two_player(&g, i)?
    } else {
        let parts: Vec<Vec<f64>> = (0..g.players())
            .filter(|&j| j != i)
            .map(|j| profile[j].partition().to_vec())
            .collect();
        crate::equilibrium::aggregate_opponents(&g, i, &parts, pc.quadrature.subdivision)?.game
    };
    let suite = AdversarialSuite::generate(&game.components, game.y_res(), pc.suite_size, seed)?;
    let report = verify_gaps(&game, &profile[i], &pure_to_mixed(&pure), &suite, seed, &pc.verify)?;
    let ok = report.max_gap < eps + report.quadrature_budget && report.monte_carlo.iter().all(|m| m.agrees);
    Ok((report, ok))
}

fn verify(args: &VerifyArgs) -> Result<Status> {
    let env: Envelope = serde_json::from_str(&read(&args.report)?)?;
    let (fresh, recomputed_status) = execute(&env.config)?;
    let mut mismatches = Vec::new();
    json_mismatches(&env.report, &fresh, args.tolerance, "report", &mut mismatches);
    if env.status != recomputed_status {
        mismatches.push("status: stored and recomputed differ".into());
    }
    let (fresh_seed, fresh_suite, fresh_ok) = if env.config.command == "purify" {
        let seed = args.fresh_seed.unwrap_or(env.config.seed ^ 0x9e37_79b9_7f4a_7c15);
        let (r, ok) = fresh_suite_check(&env, seed)?;
        (Some(seed), Some(r), Some(ok))
    } else {
        (None, None, None)
    };
    let status = Status::from_bool(mismatches.is_empty() && env.status.passed() && fresh_ok.unwrap_or(true));
    let report = VerifyReport {
        report: args.report.clone(),
        stored_status: env.status,
        recomputed_status,
        mismatches,
        fresh_seed,
        fresh_suite,
        fresh_suite_passed: fresh_ok,
        status,
    };
    for m in &report.mismatches {
        eprintln!("mismatch: {m}");
    }
    let text = serde_json::to_string_pretty(&report)? + "\n";
    match &args.out {
        Some(p) => write_atomic(p, &text)?,
        None => print!("{text}"),
    }
    eprintln!("status: {}", if status.passed() { "PASS" } else { "FAILED" });
    Ok(status)
}

fn catalog(args: &CatalogArgs) -> Result<Status> {
    match &args.show {
        Some(name) => print!("{}", catalog_entry(name)?.text),
        None => {
            for e in CATALOG {
                println!("{:<24} {}", e.name, e.description);
            }
        }
    }
    Ok(Status::Pass)
}

fn run_command(cli: &Cli) -> Result<Status> {
    match &cli.command {
        Command::Purify(a) => {
            let mut cfg = base_config("purify", &a.game, a.seed)?;
            let (g, _) = load_game(&cfg)?;
            if a.player == 0 || a.player > g.players() {
                return Err(Error::Parameter(format!("--player must be in 1..={}", g.players())));
            }
            cfg.player = Some(a.player);
            cfg.epsilon = Some(positive("epsilon", a.epsilon)?);
            let mut profile = match &a.strategy {
                Some(p) => read_profile(p)?,
                None => default_profile(&g, &a.game.game)?,
            };
            if profile.len() == 1 {
                if g.players() > 2 {
                    return Err(Error::Parameter(
                        "games with more than two players need a full profile".into(),
                    ));
                }
                // Only the purified player's strategy matters with two players.
                let own = profile.remove(0);
                profile = (0..g.players()).map(|_| own.clone()).collect();
            }
            if profile.len() != g.players() {
                return Err(Error::Parameter(format!(
                    "profile has {} strategies, game has {} players",
                    profile.len(),
                    g.players()
                )));
            }
            cfg.profile = Some(profile);
            cfg.purify = Some(a.tuning.apply(PurifyConfig::default())?);
            emit(cfg, a.out.as_deref())
        }
        Command::PurifyEq(a) => {
            let mut cfg = base_config("purify-eq", &a.game, a.seed)?;
            let (g, _) = load_game(&cfg)?;
            cfg.epsilon = Some(positive("epsilon", a.epsilon)?);
            let mut eq = EquilibriumConfig::default();
            eq.purify = a.tuning.apply(eq.purify)?;
            if a.tuning.aux_subdivision.is_none() {
                eq.purify.aux_subdivision = 1;
            }
            eq.deviation_step = positive("deviation-step", a.deviation_step)?;
            eq.quadrature = eq.purify.quadrature;
            let profile = match &a.profile {
                Some(p) => read_profile(p)?,
                None => {
                    let fc = a.search.config()?;
                    let found = find_equilibrium_discretized(&g, &fc, &eq.quadrature)?;
                    eprintln!("input equilibrium regret: {:?}", found.check.regrets);
                    cfg.find_eq = Some(fc);
                    found.profile
                }
            };
            cfg.profile = Some(profile);
            cfg.equilibrium = Some(eq);
            emit(cfg, a.out.as_deref())
        }
        Command::FindEq(a) => {
            let mut cfg = base_config("find-eq", &a.game, 0)?;
            cfg.find_eq = Some(a.search.config()?);
            cfg.quadrature = Some(Quadrature::with_subdivision(at_least_one(
                "subdivision",
                a.subdivision,
            )?));
            cfg.target_regret = Some(positive("target-regret", a.target_regret)?);
            emit(cfg, a.out.as_deref())
        }
        Command::NashCheck(a) => {
            let mut cfg = base_config("nash-check", &a.game, 0)?;
            cfg.profile = Some(read_profile(&a.profile)?);
            cfg.deviation_step = Some(positive("grid-step", a.grid_step)?);
            cfg.quadrature = Some(Quadrature::with_subdivision(at_least_one(
                "subdivision",
                a.subdivision,
            )?));
            cfg.epsilon = Some(positive("epsilon", a.epsilon)?);
            emit(cfg, a.out.as_deref())
        }
        Command::Verify(a) => verify(a),
        Command::Catalog(a) => catalog(a),
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("PUREKIT_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Runs the command line and returns the process exit code: 0 on PASS, 1
/// on a failed certificate or infeasible budget, 2 on usage, parse or IO
/// errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    match run_command(&cli) {
        Ok(s) if s.passed() => 0,
        Ok(_) => 1,
        Err(e @ Error::BudgetInfeasible { .. }) => {
            eprintln!("error: {e}");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
