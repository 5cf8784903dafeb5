//! Purification of mixed strategies.
//!
//! The pipeline works on a [`BinaryGame`]: the payoffs are split into
//! nonnegative parts, the strategy is replaced by a simple net-valued one,
//! the opponent is discretized, and the simple strategy is rounded to a pure
//! one under the auxiliary-measure seminorm. The result is verified against
//! an adversarial opponent suite in the original payoff coordinates.

pub mod auxiliary;
pub mod binary;
pub mod steps;
pub mod suite;

pub use auxiliary::{
    build_auxiliary, make_partition, purify_simple, round_once, round_simplex, AuxiliaryMeasure, RoundingConfig,
    RoundingOutcome, RoundingScheme, SimplePurification, SimplexPoint, VertexPoint,
};
pub use binary::{nonneg_decompose, BinaryGame, ConstantPayoff, Coordinate, CoordinatePayoff, OpponentStrategy};
pub use steps::{
    analytic_delta, ell_grids, simple_gap, step1_select_simple, step2_delta, step3_opponent_net, DeltaResult,
    OpponentNet, Step1Result,
};
pub use suite::{verify_gaps, AdversarialSuite, GapReport, MonteCarloCheck, SuiteComposition, VerifyConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{AtomlessReport, GameSpec, Quadrature};
use crate::measures::{DenseNet, Point};
use crate::strategy::{pure_to_mixed, MixedStrategy, PureStrategy};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PurifyConfig {
    /// Grid step of the net of the purified player's measures.
    pub net_step: f64,
    /// Weight resolution of that net.
    pub net_resolution: usize,
    /// Points per opponent component for `sup` over opponent actions.
    pub ell_points: usize,
    /// Fraction of the Step 1 target held back for the grid `sup`.
    pub step1_margin: f64,
    pub delta_levels: usize,
    /// Lipschitz constant of the payoffs in the opponent action, if known.
    pub lipschitz: Option<f64>,
    /// Atoms per purification cell, and `y` nodes per prior cell, of the
    /// auxiliary measure.
    pub aux_subdivision: usize,
    pub rounding: RoundingConfig,
    pub quadrature: Quadrature,
    pub suite_size: usize,
    pub verify: VerifyConfig,
}

impl Default for PurifyConfig {
    fn default() -> Self {
        Self {
            net_step: 0.05,
            net_resolution: 20,
            ell_points: 21,
            step1_margin: 0.1,
            delta_levels: 24,
            lipschitz: None,
            aux_subdivision: 2,
            rounding: RoundingConfig::default(),
            quadrature: Quadrature::default(),
            suite_size: 120,
            verify: VerifyConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAILED")]
    Failed,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Failed
        }
    }

    pub fn passed(self) -> bool {
        self == Status::Pass
    }
}

/// Allocation of `ε` over the stages. Each nonnegative part gets
/// `ε_v = ε/2`, split as `ε_v/2` (simple approximation) plus `2·ε_v/6`
/// (opponent perturbation, once per side) plus `ε_v/6` (rounding).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageBudget {
    pub epsilon_total: f64,
    pub epsilon_part: f64,
    pub simple_target: f64,
    pub simple_certified_target: f64,
    pub perturbation_target: f64,
    pub rounding_target: f64,
    /// `simple + 2 perturbation + rounding`, equal to `epsilon_part`.
    pub part_total: f64,
    /// `2 part_total`, equal to `epsilon_total`.
    pub total: f64,
}

impl StageBudget {
    pub fn new(epsilon: f64, margin: f64) -> Self {
        let part = epsilon / 2.0;
        let simple = part / 2.0;
        let pert = part / 6.0;
        let round = part / 6.0;
        let part_total = simple + 2.0 * pert + round;
        Self {
            epsilon_total: epsilon,
            epsilon_part: part,
            simple_target: simple,
            simple_certified_target: simple * (1.0 - margin),
            perturbation_target: pert,
            rounding_target: round,
            part_total,
            total: 2.0 * part_total,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetSummary {
    pub log10_points: f64,
    pub resolution: usize,
    pub log10_size: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PurificationCertificate {
    pub game: String,
    /// One-based player index.
    pub player: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub stage_bounds: StageBudget,
    /// Number of leading net members used in Step 1.
    pub nu_index: u128,
    pub step1_gap: f64,
    pub step1_schedule: Vec<(u128, f64)>,
    pub simple_strategy: MixedStrategy,
    #[serde(rename = "K_prime")]
    pub k_prime: Vec<Point>,
    #[serde(rename = "L_prime")]
    pub l_prime: Vec<Vec<Point>>,
    pub delta: f64,
    pub delta_tested: Vec<(f64, f64)>,
    pub delta_analytic: Option<f64>,
    pub opponent_net: NetSummary,
    pub log10_c: f64,
    pub log10_kappa: f64,
    pub constant_coordinate_added: bool,
    pub atoms: usize,
    /// Stride of the `L'` sub-grid the auxiliary measure averages over.
    pub aux_l_stride: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub retries: usize,
    pub seminorm: f64,
    pub pure_strategy: PureStrategy,
    pub range_size: usize,
    pub adversarial_gaps: Vec<f64>,
    pub max_gap: f64,
    pub worst_member: usize,
    pub quadrature_budget: f64,
    pub quadrature_members: usize,
    pub suite: SuiteComposition,
    pub monte_carlo: Vec<MonteCarloCheck>,
    pub atomless: Option<AtomlessReport>,
    pub config: PurifyConfig,
    pub checks: Vec<(String, bool)>,
    pub status: Status,
}

/// Smallest multiple of `base` on whose uniform grid every breakpoint lies.
pub fn aligned_resolution(base: usize, breakpoints: &[f64]) -> Result<usize> {
    for t in 1..=4096 {
        let a = base * t;
        if breakpoints
            .iter()
            .all(|&b| ((b * a as f64).round() - b * a as f64).abs() < 1e-9)
        {
            return Ok(a);
        }
    }
    Err(Error::Resolution(
        "strategy breakpoints are not on any uniform grid refining the prior".into(),
    ))
}

/// Intermediate results of a purification run.
#[derive(Clone, Debug)]
pub struct PurificationRun {
    pub pure: PureStrategy,
    pub step1: Step1Result,
    pub delta: DeltaResult,
    pub net: OpponentNet,
    pub aux: AuxiliaryMeasure,
    pub rounding: SimplePurification,
    pub log10_kappa: f64,
    pub budget: StageBudget,
}

/// Steps 1 to 8 on a binary game with budget `epsilon` per original
/// coordinate. No verification.
pub fn purify_steps(
    game: &BinaryGame,
    f: &MixedStrategy,
    epsilon: f64,
    seed: u64,
    cfg: &PurifyConfig,
) -> Result<PurificationRun> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Parameter(format!("epsilon must be positive, got {epsilon}")));
    }
    game.check_own(f)?;
    let budget = StageBudget::new(epsilon, cfg.step1_margin);
    let v = game.nonneg_decompose();
    let own_diam = game.own.diameter();
    let net = DenseNet::new(
        &game.own,
        cfg.net_step.min(own_diam.max(f64::MIN_POSITIVE)),
        cfg.net_resolution,
    )?;
    let ell = ell_grids(&game.components, cfg.ell_points);
    let step1 = step1_select_simple(&v, f, &net, budget.simple_certified_target, &ell, &cfg.quadrature)?;
    let mut delta = step2_delta(
        &v,
        &step1.k_prime,
        budget.perturbation_target,
        &ell,
        cfg.delta_levels,
        &cfg.quadrature,
    )?;
    if let Some(lip) = cfg.lipschitz {
        let d = analytic_delta(budget.perturbation_target, lip, game.bound);
        delta.analytic = Some(d);
        delta.delta = d;
    }
    let opp = step3_opponent_net(&game.components, delta.delta)?;
    let atoms = aligned_resolution(game.x_res(), step1.strategy.partition())? * cfg.aux_subdivision;
    let aux = build_auxiliary(&v, &step1.k_prime, &opp.component_grids, atoms, cfg.aux_subdivision)?;
    let log10_kappa = aux.log10_kappa(budget.epsilon_part);
    let rounding = purify_simple(
        &aux,
        &step1.strategy,
        cfg.net_resolution,
        log10_kappa,
        seed,
        &cfg.rounding,
    )?;
    Ok(PurificationRun {
        pure: rounding.pure.clone(),
        step1,
        delta,
        net: opp,
        aux,
        rounding,
        log10_kappa,
        budget,
    })
}

/// Full purification with verification against an adversarial suite.
pub fn purify_binary(
    game: &BinaryGame,
    name: &str,
    player: usize,
    f: &MixedStrategy,
    epsilon: f64,
    seed: u64,
    cfg: &PurifyConfig,
) -> Result<(PureStrategy, PurificationCertificate)> {
    let run = purify_steps(game, f, epsilon, seed, cfg)?;
    let suite = AdversarialSuite::generate(&game.components, game.y_res(), cfg.suite_size, seed)?;
    let f_pure = pure_to_mixed(&run.pure);
    let report = verify_gaps(game, f, &f_pure, &suite, seed, &cfg.verify)?;
    let cert = certificate(name, player, epsilon, seed, cfg, &run, report, suite.composition, None);
    Ok((run.pure, cert))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn certificate(
    name: &str,
    player: usize,
    epsilon: f64,
    seed: u64,
    cfg: &PurifyConfig,
    run: &PurificationRun,
    report: GapReport,
    suite: SuiteComposition,
    atomless: Option<AtomlessReport>,
) -> PurificationCertificate {
    let range = run.pure.range();
    let range_ok = range.len() <= run.step1.k_prime.len() && range.iter().all(|p| run.step1.k_prime.contains(p));
    let seminorm_ok = run.rounding.seminorm == 0.0 || run.rounding.seminorm.log10() < run.log10_kappa;
    let gap_ok = report.max_gap < epsilon + report.quadrature_budget;
    let mc_ok = report.monte_carlo.iter().all(|m| m.agrees);
    let suite_ok = suite.size >= 100;
    let b = &run.budget;
    let budget_ok = b.part_total == b.epsilon_part && b.total == b.epsilon_total;
    let checks = vec![
        ("finite range within K'".to_string(), range_ok),
        ("seminorm below kappa".to_string(), seminorm_ok),
        (
            "simple approximation below target".to_string(),
            run.step1.gap < b.simple_certified_target,
        ),
        ("adversarial gaps below epsilon plus quadrature".to_string(), gap_ok),
        ("monte carlo agreement".to_string(), mc_ok),
        ("suite of at least 100 opponents".to_string(), suite_ok),
        ("budget accounting".to_string(), budget_ok),
    ];
    let status = Status::from_bool(checks.iter().all(|c| c.1));
    PurificationCertificate {
        game: name.to_string(),
        player: player + 1,
        epsilon,
        seed,
        stage_bounds: run.budget.clone(),
        nu_index: run.step1.count,
        step1_gap: run.step1.gap,
        step1_schedule: run.step1.schedule.clone(),
        simple_strategy: run.step1.strategy.clone(),
        k_prime: run.step1.k_prime.clone(),
        l_prime: run.net.component_grids.clone(),
        delta: run.delta.delta,
        delta_tested: run.delta.tested.clone(),
        delta_analytic: run.delta.analytic,
        opponent_net: NetSummary {
            log10_points: run.net.log10_points,
            resolution: run.net.resolution,
            log10_size: run.net.log10_len,
        },
        log10_c: run.aux.log10_c(),
        log10_kappa: run.log10_kappa,
        constant_coordinate_added: run.aux.constant_added(),
        atoms: run.aux.atoms(),
        aux_l_stride: run.aux.l_prime_stride(),
        m: run.rounding.pieces,
        retries: run.rounding.attempts,
        seminorm: run.rounding.seminorm,
        pure_strategy: run.pure.clone(),
        range_size: range.len(),
        adversarial_gaps: report.gaps,
        max_gap: report.max_gap,
        worst_member: report.worst_member,
        quadrature_budget: report.quadrature_budget,
        quadrature_members: report.quadrature_members,
        suite,
        monte_carlo: report.monte_carlo,
        atomless,
        config: cfg.clone(),
        checks,
        status,
    }
}

/// Purifies `f` for `player` (zero-based) of a two-player game.
pub fn theorem1_purify(
    g: &GameSpec,
    player: usize,
    f: &MixedStrategy,
    epsilon: f64,
    seed: u64,
    cfg: &PurifyConfig,
) -> Result<(PureStrategy, PurificationCertificate)> {
    let game = BinaryGame::from_two_player(g, player)?;
    let atomless = g.prior().check_conditionally_atomless(player);
    if !atomless.pass {
        return Err(Error::Validation(format!(
            "prior is not conditionally atomless for player {}",
            player + 1
        )));
    }
    let (pure, mut cert) = purify_binary(&game, &g.name, player, f, epsilon, seed, cfg)?;
    cert.atomless = Some(atomless);
    Ok((pure, cert))
}
