//! Purification of one player's strategy in an n-player game, and of a
//! whole approximate equilibrium.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::combine::{lemma2_purify, CombinedPurification};
use super::nash::{deviation_grids, epsilon_nash_check};
use super::reduce::{aggregate_opponents, integrate_out_players};
use crate::error::{Error, Result};
use crate::game::{expected_payoffs, AtomlessReport, GameSpec, Quadrature};
use crate::purify::{purify_binary, PurificationCertificate, PurifyConfig, Status, VerifyConfig};
use crate::rng::stream;
use crate::strategy::{pure_to_mixed, MixedStrategy, PureStrategy};

fn require_atomless(g: &GameSpec, i: usize) -> Result<AtomlessReport> {
    let report = g.prior().check_conditionally_atomless(i);
    if !report.pass {
        return Err(Error::Validation(format!(
            "prior is not conditionally atomless for player {}",
            i + 1
        )));
    }
    Ok(report)
}

/// Purifies `profile[i]` against the aggregated other players, whose
/// signal grid follows the partitions of their strategies in `profile`.
pub fn theorem2_purify(
    g: &GameSpec,
    i: usize,
    profile: &[MixedStrategy],
    epsilon: f64,
    seed: u64,
    cfg: &PurifyConfig,
) -> Result<(PureStrategy, PurificationCertificate)> {
    if profile.len() != g.players() {
        return Err(Error::Parameter("need one strategy per player".into()));
    }
    let atomless = require_atomless(g, i)?;
    let partitions: Vec<Vec<f64>> = (0..g.players())
        .filter(|&j| j != i)
        .map(|j| profile[j].partition().to_vec())
        .collect();
    let agg = aggregate_opponents(g, i, &partitions, cfg.quadrature.subdivision)?;
    let (pure, mut cert) = purify_binary(&agg.game, &g.name, i, &profile[i], epsilon, seed, cfg)?;
    cert.atomless = Some(atomless);
    Ok((pure, cert))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EquilibriumConfig {
    pub purify: PurifyConfig,
    /// Step of the action grid used for deviations.
    pub deviation_step: f64,
    /// Quadrature of the regret and payoff checks.
    pub quadrature: Quadrature,
}

impl Default for EquilibriumConfig {
    fn default() -> Self {
        Self {
            purify: PurifyConfig {
                aux_subdivision: 1,
                suite_size: 16,
                verify: VerifyConfig {
                    quadrature_members: Some(2),
                    mc_samples: 0,
                    ..VerifyConfig::default()
                },
                ..PurifyConfig::default()
            },
            deviation_step: 0.05,
            quadrature: Quadrature::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    /// One-based player purified in this stage.
    pub player: usize,
    pub epsilon: f64,
    pub seed: u64,
    /// Distinct two-player games the stage purifies against.
    pub games: Vec<String>,
    pub combined: CombinedPurification,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileCheck {
    /// `true` where the player uses the purified strategy.
    pub mask: Vec<bool>,
    pub regrets: Vec<f64>,
    pub payoffs: Vec<f64>,
    /// Largest `|U_i(h) - U_i(f)|`.
    pub payoff_deviation: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NashCertificate {
    pub game: String,
    pub epsilon: f64,
    pub seed: u64,
    /// Seed of each stage.
    pub seeds: Vec<u64>,
    pub atomless: Vec<AtomlessReport>,
    pub warnings: Vec<String>,
    /// Budget of each stage, first player first.
    pub budget_schedule: Vec<f64>,
    /// Budget denominators `3^k`; consecutive ones differ by a factor 3.
    pub budget_denominators: Vec<u64>,
    pub telescoping: bool,
    pub equilibrium_input_regret: f64,
    pub input_regrets: Vec<f64>,
    pub input_payoffs: Vec<f64>,
    pub deviation_step: f64,
    /// Change of the input and fully purified payoffs under doubled
    /// subdivision.
    pub quadrature_budget: f64,
    pub stages: Vec<StageReport>,
    pub profiles: Vec<ProfileCheck>,
    pub pure_profile: Vec<PureStrategy>,
    pub config: EquilibriumConfig,
    pub checks: Vec<(String, bool)>,
    pub status: Status,
}

fn label(m: usize, j: usize, mask: &[Option<bool>]) -> String {
    let h: Vec<String> = mask
        .iter()
        .map(|v| match v {
            None => "-".into(),
            Some(false) => "f".into(),
            Some(true) => "f'".into(),
        })
        .collect();
    format!("player {} vs {} | {}", m + 1, j + 1, h.join(","))
}

/// Purifies every strategy of the approximate equilibrium `f` in turn.
/// Stage `m` purifies player `m` against all two-player games obtained by
/// integrating out the other players, who play `f` or the already purified
/// strategies in every combination.
pub fn theorem3_purify_equilibrium(
    g: &GameSpec,
    f: &[MixedStrategy],
    epsilon: f64,
    seed: u64,
    cfg: &EquilibriumConfig,
) -> Result<(Vec<PureStrategy>, NashCertificate)> {
    let n = g.players();
    if f.len() != n {
        return Err(Error::Parameter("need one strategy per player".into()));
    }
    if n < 2 {
        return Err(Error::Parameter("need at least two players".into()));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Parameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let atomless: Vec<AtomlessReport> = (0..n).map(|i| g.prior().check_conditionally_atomless(i)).collect();
    let warnings: Vec<String> = atomless
        .iter()
        .filter(|a| !a.pass)
        .map(|a| format!("prior is not conditionally atomless for player {}", a.player + 1))
        .collect();
    let grids = deviation_grids(g, cfg.deviation_step);
    let input = epsilon_nash_check(g, f, &grids, &cfg.quadrature)?;
    let denominators: Vec<u64> = (0..n).map(|m| 3u64.pow((n - m) as u32)).collect();
    let telescoping = denominators.windows(2).all(|w| w[0] == 3 * w[1]) && denominators[n - 1] == 3;
    assert!(telescoping, "stage budgets must telescope");
    let schedule: Vec<f64> = denominators.iter().map(|&d| epsilon / d as f64).collect();
    let mut pure: Vec<PureStrategy> = Vec::with_capacity(n);
    let mut purified_mixed: Vec<MixedStrategy> = Vec::with_capacity(n);
    let mut stages: Vec<StageReport> = Vec::with_capacity(n);
    for m in 0..n {
        let stage_seed: u64 = stream(seed, "stage", m as u64, 0).gen();
        let mut keys: Vec<(usize, Vec<Option<bool>>)> = Vec::new();
        for bits in 0..(1usize << m) {
            for j in (0..n).filter(|&j| j != m) {
                let mask: Vec<Option<bool>> = (0..n)
                    .map(|l| (l != m && l != j).then_some(l < m && bits >> l & 1 == 1))
                    .collect();
                if !keys.contains(&(j, mask.clone())) {
                    keys.push((j, mask));
                }
            }
        }
        let games = keys
            .iter()
            .map(|(j, mask)| {
                let h: Vec<MixedStrategy> = (0..n)
                    .map(|l| {
                        if mask[l] == Some(true) {
                            purified_mixed[l].clone()
                        } else {
                            f[l].clone()
                        }
                    })
                    .collect();
                integrate_out_players(g, m, *j, &h, cfg.purify.quadrature.subdivision)
                    .map(|bg| (label(m, *j, mask), bg))
            })
            .collect::<Result<Vec<_>>>()?;
        let (p, combined) =
            lemma2_purify(&games, &f[m], schedule[m], stage_seed, &cfg.purify).map_err(|e| match e {
                Error::BudgetInfeasible { stage, best, target } => Error::BudgetInfeasible {
                    stage: format!(
                        "purifying player {} against [{}]: {stage}",
                        m + 1,
                        games.iter().map(|g| g.0.as_str()).collect::<Vec<_>>().join("; ")
                    ),
                    best,
                    target,
                },
                other => other,
            })?;
        purified_mixed.push(pure_to_mixed(&p));
        pure.push(p);
        stages.push(StageReport {
            player: m + 1,
            epsilon: schedule[m],
            seed: stage_seed,
            games: games.into_iter().map(|(l, _)| l).collect(),
            combined,
        });
    }
    let r0 = input.max_regret();
    let mut profiles = Vec::with_capacity(1 << n);
    for bits in 0..(1usize << n) {
        let mask: Vec<bool> = (0..n).map(|l| bits >> l & 1 == 1).collect();
        let h: Vec<MixedStrategy> = (0..n)
            .map(|l| {
                if mask[l] {
                    purified_mixed[l].clone()
                } else {
                    f[l].clone()
                }
            })
            .collect();
        let check = epsilon_nash_check(g, &h, &grids, &cfg.quadrature)?;
        let payoff_deviation = (0..n)
            .map(|i| (check.payoffs[i] - input.payoffs[i]).abs())
            .fold(0.0, f64::max);
        profiles.push(ProfileCheck {
            mask,
            regrets: check.regrets.clone(),
            payoffs: check.payoffs.clone(),
            payoff_deviation,
            passed: false,
        });
    }
    let coarse = expected_payoffs(g, f, &cfg.quadrature)?;
    let fine = expected_payoffs(g, f, &cfg.quadrature.doubled())?;
    let coarse_p = expected_payoffs(g, &purified_mixed, &cfg.quadrature)?;
    let fine_p = expected_payoffs(g, &purified_mixed, &cfg.quadrature.doubled())?;
    let quadrature_budget = (0..n)
        .map(|i| (fine[i] - coarse[i]).abs() + (fine_p[i] - coarse_p[i]).abs())
        .fold(0.0, f64::max);
    for p in &mut profiles {
        let max_regret = p.regrets.iter().copied().fold(0.0, f64::max);
        p.passed = max_regret < epsilon + r0 && p.payoff_deviation < epsilon + quadrature_budget;
    }
    let checks = vec![
        ("budget telescoping".to_string(), telescoping),
        (
            "stage purifications".to_string(),
            stages.iter().all(|s| s.combined.status.passed()),
        ),
        (
            "regret and payoff bounds on every profile".to_string(),
            profiles.iter().all(|p| p.passed),
        ),
    ];
    let status = Status::from_bool(checks.iter().all(|c| c.1));
    let cert = NashCertificate {
        game: g.name.clone(),
        epsilon,
        seed,
        seeds: stages.iter().map(|s| s.seed).collect(),
        atomless,
        warnings,
        budget_schedule: schedule,
        budget_denominators: denominators,
        telescoping,
        equilibrium_input_regret: r0,
        input_regrets: input.regrets,
        input_payoffs: input.payoffs,
        deviation_step: cfg.deviation_step,
        quadrature_budget,
        stages,
        profiles,
        pure_profile: pure.clone(),
        config: cfg.clone(),
        checks,
        status,
    };
    Ok((pure, cert))
}
