//! Purifying one strategy against several binary games at once.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::Point;
use crate::purify::{
    purify_steps, verify_gaps, AdversarialSuite, BinaryGame, Coordinate, CoordinatePayoff, GapReport, OpponentStrategy,
    PurifyConfig, Status,
};
use crate::rng::stream;
use crate::strategy::{pure_to_mixed, MixedStrategy, PureStrategy};
use rand::Rng;

/// One game per payoff coordinate, sharing prior and action spaces.
pub fn flatten(game: &BinaryGame) -> Result<Vec<BinaryGame>> {
    game.coords
        .iter()
        .map(|c| {
            BinaryGame::new(
                game.own.clone(),
                game.components.clone(),
                game.x_res(),
                game.y_res(),
                game.density_values().to_vec(),
                vec![c.clone()],
                game.bound,
            )
        })
        .collect()
}

struct BlockPayoff {
    inner: Arc<dyn CoordinatePayoff>,
    block: usize,
    blocks: usize,
}

impl CoordinatePayoff for BlockPayoff {
    fn eval(&self, k: &[f64], l: &[&[f64]], x: f64, y: f64) -> f64 {
        let local = (y * self.blocks as f64 - self.block as f64).clamp(0.0, 1.0);
        self.inner.eval(k, l, x, local)
    }
}

/// Games stacked along `y`: block `b` occupies `[b/m, (b+1)/m]` with the
/// prior of game `b` refined to a common resolution, and owns a disjoint
/// set of opponent components.
#[derive(Clone, Debug)]
pub struct CombinedGame {
    pub game: BinaryGame,
    pub blocks: usize,
    /// Common per-block `y` resolution.
    pub block_res: usize,
    /// First component of each block.
    pub offsets: Vec<usize>,
    sub_res: Vec<usize>,
}

fn lcm(a: usize, b: usize) -> usize {
    let mut x = a;
    let mut y = b;
    while y != 0 {
        (x, y) = (y, x % y);
    }
    a / x * b
}

pub fn combine_games(games: &[BinaryGame]) -> Result<CombinedGame> {
    let first = games
        .first()
        .ok_or_else(|| Error::Parameter("nothing to combine".into()))?;
    for g in games {
        if g.own != first.own || g.x_res() != first.x_res() {
            return Err(Error::Type(
                "combined games must share the purified player's actions and grid".into(),
            ));
        }
    }
    let m = games.len();
    let x_res = first.x_res();
    let block_res = games.iter().map(|g| g.y_res()).fold(1, lcm);
    let y_res = m * block_res;
    let mut density = vec![0.0; x_res * y_res];
    let mut components = Vec::new();
    let mut offsets = Vec::with_capacity(m);
    let mut coords = Vec::new();
    for (b, g) in games.iter().enumerate() {
        let off = components.len();
        offsets.push(off);
        components.extend(g.components.iter().cloned());
        let factor = block_res / g.y_res();
        for yc in 0..block_res {
            for xc in 0..x_res {
                density[xc + x_res * (b * block_res + yc)] = g.density(xc, yc / factor);
            }
        }
        for c in &g.coords {
            coords.push(Coordinate {
                label: format!("G{}.{}", b + 1, c.label),
                components: c.components.iter().map(|j| j + off).collect(),
                payoff: Arc::new(BlockPayoff {
                    inner: c.payoff.clone(),
                    block: b,
                    blocks: m,
                }),
                y_cells: b * block_res + c.y_cells.start * factor..b * block_res + c.y_cells.end * factor,
            });
        }
    }
    let bound = games.iter().map(|g| g.bound).fold(0.0, f64::max);
    let game = BinaryGame::new(first.own.clone(), components, x_res, y_res, density, coords, bound)?;
    Ok(CombinedGame {
        game,
        blocks: m,
        block_res,
        offsets,
        sub_res: games.iter().map(|g| g.y_res()).collect(),
    })
}

impl CombinedGame {
    /// The opponent that plays `gs[b]` on block `b` and, in the components
    /// of every other block, that block's strategy at the midpoint of its
    /// first cell.
    pub fn opponent(&self, gs: &[OpponentStrategy]) -> Result<OpponentStrategy> {
        if gs.len() != self.blocks {
            return Err(Error::Parameter(format!("need {} opponent strategies", self.blocks)));
        }
        let anchors: Vec<_> = gs
            .iter()
            .zip(&self.sub_res)
            .map(|(g, &r)| g.value_at(0.5 / r as f64).to_vec())
            .collect();
        let m = self.blocks as f64;
        let mut partition = vec![0.0];
        let mut values = Vec::new();
        for (b, g) in gs.iter().enumerate() {
            for (c, cell) in g.values().iter().enumerate() {
                let mut v = Vec::new();
                for (b2, anchor) in anchors.iter().enumerate() {
                    v.extend_from_slice(if b2 == b { cell } else { anchor });
                }
                values.push(v);
                partition.push((b as f64 + g.partition()[c + 1]) / m);
            }
        }
        *partition.last_mut().expect("nonempty") = 1.0;
        OpponentStrategy::new(partition, values)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubGameCheck {
    pub label: String,
    pub gaps: GapReport,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombinedPurification {
    pub epsilon: f64,
    pub blocks: usize,
    pub block_epsilon: f64,
    pub step1_gap: f64,
    pub k_prime: Vec<Point>,
    pub delta: f64,
    pub log10_kappa: f64,
    pub seminorm: f64,
    pub pieces: usize,
    pub range_size: usize,
    pub sub_games: Vec<SubGameCheck>,
    pub status: Status,
}

/// Purifies `f` against every game of `games` simultaneously with budget
/// `epsilon` per game coordinate, then checks each game on its own suite.
pub fn lemma2_purify(
    games: &[(String, BinaryGame)],
    f: &MixedStrategy,
    epsilon: f64,
    seed: u64,
    cfg: &PurifyConfig,
) -> Result<(PureStrategy, CombinedPurification)> {
    let mut blocks = Vec::new();
    for (_, g) in games {
        blocks.extend(flatten(g)?);
    }
    let combined = combine_games(&blocks)?;
    let block_epsilon = epsilon / combined.blocks as f64;
    let run = purify_steps(&combined.game, f, block_epsilon, seed, cfg)?;
    let f_pure = pure_to_mixed(&run.pure);
    let mut sub_games = Vec::with_capacity(games.len());
    for (i, (label, g)) in games.iter().enumerate() {
        let sub_seed: u64 = stream(seed, "sub-game", i as u64, 0).gen();
        let suite = AdversarialSuite::generate(&g.components, g.y_res(), cfg.suite_size, sub_seed)?;
        let gaps = verify_gaps(g, f, &f_pure, &suite, sub_seed, &cfg.verify)?;
        let passed = gaps.max_gap < epsilon + gaps.quadrature_budget && gaps.monte_carlo.iter().all(|m| m.agrees);
        sub_games.push(SubGameCheck {
            label: label.clone(),
            gaps,
            passed,
        });
    }
    let range = run.pure.range();
    let range_ok = range.iter().all(|p| run.step1.k_prime.contains(p));
    let status = Status::from_bool(range_ok && sub_games.iter().all(|s| s.passed));
    let report = CombinedPurification {
        epsilon,
        blocks: combined.blocks,
        block_epsilon,
        step1_gap: run.step1.gap,
        k_prime: run.step1.k_prime.clone(),
        delta: run.delta.delta,
        log10_kappa: run.log10_kappa,
        seminorm: run.rounding.seminorm,
        pieces: run.rounding.pieces,
        range_size: range.len(),
        sub_games,
        status,
    };
    Ok((run.pure, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{catalog_game, reference_strategy};
    use crate::game::Quadrature;

    #[test]
    fn blocks_scale_payoffs() {
        let a = BinaryGame::from_two_player(&catalog_game("cournot").unwrap(), 0).unwrap();
        let b = BinaryGame::from_two_player(&catalog_game("zero-sum-signal").unwrap(), 0).unwrap();
        let mut blocks = flatten(&a).unwrap();
        blocks.extend(flatten(&b).unwrap());
        let comb = combine_games(&blocks).unwrap();
        assert_eq!(comb.blocks, 4);
        let f = reference_strategy("cournot", 0).unwrap();
        let gs: Vec<OpponentStrategy> = [
            ("cournot", 1),
            ("cournot", 1),
            ("zero-sum-signal", 1),
            ("zero-sum-signal", 1),
        ]
        .iter()
        .map(|(n, p)| OpponentStrategy::from_mixed(&reference_strategy(n, *p).unwrap()))
        .collect();
        let opp = comb.opponent(&gs).unwrap();
        let q = Quadrature::default();
        let u = comb.game.expected(&f, &opp, &q).unwrap();
        let ua = a.expected(&f, &gs[0], &q).unwrap();
        let ub = b.expected(&f, &gs[2], &q).unwrap();
        let want = [ua[0], ua[1], ub[0], ub[1]];
        for c in 0..4 {
            assert!(
                (u[c] * 4.0 - want[c]).abs() < 1e-12,
                "{c}: {} vs {}",
                u[c] * 4.0,
                want[c]
            );
        }
    }
}
