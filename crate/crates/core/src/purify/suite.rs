//! Adversarial opponent suites and payoff-gap verification.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::binary::{BinaryGame, OpponentStrategy};
use crate::error::Result;
use crate::game::Quadrature;
use crate::measures::{ActionSpace, DenseNet, FiniteSupportMeasure};
use crate::rng::stream;
use crate::strategy::{uniform_partition, MixedStrategy};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteComposition {
    pub size: usize,
    /// Constant strategies valued in a coarse opponent net.
    pub constants: usize,
    /// Two-cell strategies switching between extreme Dirac measures.
    pub thresholds: usize,
    /// Seeded random piecewise-constant strategies.
    pub random: usize,
    pub net_step_fraction: f64,
    pub net_resolution: usize,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct AdversarialSuite {
    pub members: Vec<OpponentStrategy>,
    pub composition: SuiteComposition,
}

const NET_FRACTION: f64 = 0.25;
const NET_RESOLUTION: usize = 2;
const MAX_THRESHOLDS: usize = 8;

fn random_measure<R: Rng>(space: &ActionSpace, rng: &mut R) -> FiniteSupportMeasure {
    let atoms = rng.gen_range(1..=3);
    let pts: Vec<Vec<f64>> = (0..atoms).map(|_| random_point(space, rng)).collect();
    let mut w: Vec<f64> = (0..atoms).map(|_| 0.05 + rng.gen::<f64>()).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    FiniteSupportMeasure::from_atoms(pts.into_iter().zip(w)).expect("weights are normalized")
}

fn random_point<R: Rng>(space: &ActionSpace, rng: &mut R) -> Vec<f64> {
    match space {
        ActionSpace::Interval { a, b } => vec![a + (b - a) * rng.gen::<f64>()],
        ActionSpace::Finite { points, .. } => vec![points[rng.gen_range(0..points.len())]],
        ActionSpace::Product { factors } => factors.iter().flat_map(|f| random_point(f, rng)).collect(),
    }
}

impl AdversarialSuite {
    /// Deterministic suite of `size` opponent strategies.
    pub fn generate(components: &[ActionSpace], y_res: usize, size: usize, seed: u64) -> Result<Self> {
        let nets = components
            .iter()
            .map(|s| DenseNet::new(s, (s.diameter() * NET_FRACTION).max(1e-12), NET_RESOLUTION))
            .collect::<Result<Vec<_>>>()?;
        let mut members = Vec::with_capacity(size);
        let longest = nets.iter().map(|n| n.len()).max().unwrap_or(1) as usize;
        let constants = longest.min(size / 4);
        for i in 0..constants {
            let values = nets
                .iter()
                .enumerate()
                .map(|(j, n)| {
                    let idx = (i * (2 * j + 1)) as u128 % n.len();
                    n.member(idx).map(|m| m.measure)
                })
                .collect::<Result<Vec<_>>>()?;
            members.push(OpponentStrategy::constant(values));
        }
        let extremes: Vec<(FiniteSupportMeasure, FiniteSupportMeasure)> = components
            .iter()
            .map(|s| {
                let g = s.grid(s.diameter().max(1e-12));
                (
                    FiniteSupportMeasure::dirac(g[0].clone()),
                    FiniteSupportMeasure::dirac(g[g.len() - 1].clone()),
                )
            })
            .collect();
        let cuts: Vec<f64> = if y_res > 1 {
            (1..y_res).map(|j| j as f64 / y_res as f64).collect()
        } else {
            vec![0.5]
        };
        let step = (cuts.len() as f64 / MAX_THRESHOLDS as f64).ceil().max(1.0) as usize;
        let mut thresholds = 0;
        for &t in cuts.iter().step_by(step) {
            for flip in [false, true] {
                if members.len() + 1 > size / 2 {
                    break;
                }
                let (lo, hi): (Vec<_>, Vec<_>) = extremes
                    .iter()
                    .map(|(a, b)| {
                        if flip {
                            (b.clone(), a.clone())
                        } else {
                            (a.clone(), b.clone())
                        }
                    })
                    .unzip();
                members.push(OpponentStrategy::new(vec![0.0, t, 1.0], vec![lo, hi])?);
                thresholds += 1;
            }
        }
        let mut random = 0;
        while members.len() < size {
            let mut rng = stream(seed, "suite", members.len() as u64, 0);
            let cells = rng.gen_range(1..=2 * y_res);
            let values = (0..cells)
                .map(|_| components.iter().map(|s| random_measure(s, &mut rng)).collect())
                .collect();
            members.push(OpponentStrategy::new(uniform_partition(cells), values)?);
            random += 1;
        }
        Ok(Self {
            members,
            composition: SuiteComposition {
                size,
                constants,
                thresholds,
                random,
                net_step_fraction: NET_FRACTION,
                net_resolution: NET_RESOLUTION,
                seed,
            },
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloCheck {
    pub member: usize,
    pub coordinate: usize,
    pub quadrature_gap: f64,
    pub monte_carlo_gap: f64,
    pub std_error: f64,
    pub samples: usize,
    pub agrees: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    /// Largest `|U_i(f, g) - U_i(f', g)|` over the suite, per coordinate.
    pub gaps: Vec<f64>,
    pub max_gap: f64,
    pub worst_member: usize,
    /// Largest change of the two payoffs under doubled subdivision.
    pub quadrature_budget: f64,
    pub quadrature_members: usize,
    pub monte_carlo: Vec<MonteCarloCheck>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub quadrature: Quadrature,
    /// Members used for the doubled-subdivision comparison (`None`: all).
    pub quadrature_members: Option<usize>,
    pub mc_samples: usize,
    pub mc_checks: usize,
    pub mc_tolerance: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            quadrature: Quadrature::default(),
            quadrature_members: None,
            mc_samples: 1_000_000,
            mc_checks: 3,
            mc_tolerance: 0.005,
        }
    }
}

/// Payoff gaps between `f` and `f2` over the suite in every coordinate of
/// `game`.
pub fn verify_gaps(
    game: &BinaryGame,
    f: &MixedStrategy,
    f2: &MixedStrategy,
    suite: &AdversarialSuite,
    seed: u64,
    cfg: &VerifyConfig,
) -> Result<GapReport> {
    let nc = game.coords.len();
    let mut gaps = vec![0.0f64; nc];
    let mut per_member = Vec::with_capacity(suite.members.len());
    let mut qb = 0.0f64;
    let qb_members = cfg
        .quadrature_members
        .unwrap_or(suite.members.len())
        .min(suite.members.len());
    for (i, g) in suite.members.iter().enumerate() {
        let u = game.expected_many(&[f, f2], g, &cfg.quadrature)?;
        let diff: Vec<f64> = (0..nc).map(|c| u[0][c] - u[1][c]).collect();
        for c in 0..nc {
            gaps[c] = gaps[c].max(diff[c].abs());
        }
        if i < qb_members {
            let fine = game.expected_many(&[f, f2], g, &cfg.quadrature.doubled())?;
            for c in 0..nc {
                qb = qb.max((fine[0][c] - u[0][c]).abs() + (fine[1][c] - u[1][c]).abs());
            }
        }
        per_member.push(diff);
    }
    let member_max = |d: &Vec<f64>| d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut order: Vec<usize> = (0..per_member.len()).collect();
    order.sort_by(|&a, &b| {
        member_max(&per_member[b])
            .total_cmp(&member_max(&per_member[a]))
            .then(a.cmp(&b))
    });
    let worst_member = order.first().copied().unwrap_or(0);
    let mut monte_carlo = Vec::new();
    if cfg.mc_samples > 0 {
        for (j, &i) in order.iter().take(cfg.mc_checks).enumerate() {
            let d = &per_member[i];
            let c = (0..nc).fold(0, |b, c| if d[c].abs() > d[b].abs() { c } else { b });
            let mc_seed: u64 = stream(seed, "monte-carlo", j as u64, 0).gen();
            let (mean, se) = game.monte_carlo_gap(f, f2, &suite.members[i], cfg.mc_samples, mc_seed);
            monte_carlo.push(MonteCarloCheck {
                member: i,
                coordinate: c + 1,
                quadrature_gap: d[c],
                monte_carlo_gap: mean[c],
                std_error: se[c],
                samples: cfg.mc_samples,
                agrees: (mean[c] - d[c]).abs() <= cfg.mc_tolerance,
            });
        }
    }
    Ok(GapReport {
        max_gap: gaps.iter().copied().fold(0.0, f64::max),
        gaps,
        worst_member,
        quadrature_budget: qb,
        quadrature_members: qb_members,
        monte_carlo,
    })
}
