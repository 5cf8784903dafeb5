//! Two-sided views of n-player games: opponents aggregated into one player,
//! or all but two players integrated out against fixed strategies.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::game::prior::uniform_cell;
use crate::game::quadrature::{axis_nodes, AxisNode};
use crate::game::GameSpec;
use crate::measures::FiniteSupportMeasure;
use crate::purify::binary::support_combos;
use crate::purify::{BinaryGame, Coordinate, CoordinatePayoff, OpponentStrategy};
use crate::strategy::{uniform_partition, MixedStrategy};

const MAX_PLAYERS: usize = 16;

fn check_players(g: &GameSpec) -> Result<()> {
    if g.players() > MAX_PLAYERS {
        return Err(Error::Size(format!("at most {MAX_PLAYERS} players are supported")));
    }
    Ok(())
}

/// Player `me` against the product of all other players. The others' joint
/// signal is represented by the tensor grid of their quadrature nodes: one
/// `y` cell per node combination (first other player fastest), carrying the
/// node's prior mass.
#[derive(Clone, Debug)]
pub struct Aggregation {
    pub game: BinaryGame,
    pub me: usize,
    pub others: Vec<usize>,
    /// Quadrature nodes of each other player.
    pub nodes: Vec<Vec<AxisNode>>,
}

struct AggregatePayoff {
    game: Arc<GameSpec>,
    coord: usize,
    me: usize,
    others: Vec<usize>,
    /// Node signal values per other player.
    points: Vec<Vec<f64>>,
    y_res: usize,
}

impl CoordinatePayoff for AggregatePayoff {
    fn eval(&self, k: &[f64], l: &[&[f64]], x: f64, y: f64) -> f64 {
        let mut kk = [0.0; MAX_PLAYERS];
        let mut xx = [0.0; MAX_PLAYERS];
        kk[self.me] = k[0];
        xx[self.me] = x;
        let mut cell = uniform_cell(y, self.y_res);
        for (a, &j) in self.others.iter().enumerate() {
            let n = self.points[a].len();
            xx[j] = self.points[a][cell % n];
            cell /= n;
            kk[j] = l[a][0];
        }
        let n = self.game.players();
        self.game.payoff(self.coord, &kk[..n], &xx[..n])
    }
}

/// Aggregates the opponents of `me`. `partitions[a]` is the strategy
/// partition assumed for the `a`-th other player; profile payoffs are
/// reproduced exactly (up to rounding) for opponents using those
/// partitions and quadrature subdivision `s`.
pub fn aggregate_opponents(g: &GameSpec, me: usize, partitions: &[Vec<f64>], s: usize) -> Result<Aggregation> {
    check_players(g)?;
    let n = g.players();
    if n < 2 {
        return Err(Error::Parameter(
            "a one-player game has no opponents to aggregate".into(),
        ));
    }
    if me >= n {
        return Err(Error::Parameter(format!("player index {me} out of range")));
    }
    let others: Vec<usize> = (0..n).filter(|&j| j != me).collect();
    if partitions.len() != others.len() {
        return Err(Error::Parameter("one partition per other player is required".into()));
    }
    let prior = g.prior();
    let nodes: Vec<Vec<AxisNode>> = others
        .iter()
        .zip(partitions)
        .map(|(&j, p)| axis_nodes(prior.resolution()[j], p, s))
        .collect();
    let y_res: usize = nodes.iter().map(|v| v.len()).product();
    let x_res = prior.resolution()[me];
    let mut density = vec![0.0; x_res * y_res];
    let mut cell = vec![0usize; n];
    for yc in 0..y_res {
        let mut rest = yc;
        let mut width = 1.0;
        for (a, &j) in others.iter().enumerate() {
            let node = &nodes[a][rest % nodes[a].len()];
            rest /= nodes[a].len();
            cell[j] = node.prior_cell;
            width *= node.width;
        }
        for xc in 0..x_res {
            cell[me] = xc;
            density[xc + x_res * yc] = prior.density_cell(&cell) * width * y_res as f64;
        }
    }
    // Renormalize away the rounding of the node widths.
    let mass: f64 = density.iter().sum::<f64>() / (x_res * y_res) as f64;
    density.iter_mut().for_each(|d| *d /= mass);
    let shared = Arc::new(g.clone());
    let points: Vec<Vec<f64>> = nodes.iter().map(|v| v.iter().map(|nd| nd.x).collect()).collect();
    let coords = (0..g.payoff_dim())
        .map(|c| Coordinate {
            label: format!("u{}", c + 1),
            components: (0..others.len()).collect(),
            payoff: Arc::new(AggregatePayoff {
                game: shared.clone(),
                coord: c,
                me,
                others: others.clone(),
                points: points.clone(),
                y_res,
            }),
            y_cells: 0..y_res,
        })
        .collect();
    let game = BinaryGame::new(
        g.action_space(me).clone(),
        others.iter().map(|&j| g.action_space(j).clone()).collect(),
        x_res,
        y_res,
        density,
        coords,
        g.bound(),
    )?
    .with_cellwise_y();
    Ok(Aggregation {
        game,
        me,
        others,
        nodes,
    })
}

impl Aggregation {
    /// The opponents' strategies as one strategy of the aggregated player:
    /// on each node cell the product of their values at the node.
    pub fn opponent_from_profile(&self, profile: &[MixedStrategy]) -> Result<OpponentStrategy> {
        let y_res = self.game.y_res();
        let mut values = Vec::with_capacity(y_res);
        for yc in 0..y_res {
            let mut rest = yc;
            let mut cell = Vec::with_capacity(self.others.len());
            for (a, &j) in self.others.iter().enumerate() {
                let node = &self.nodes[a][rest % self.nodes[a].len()];
                rest /= self.nodes[a].len();
                cell.push(profile[j].value_at(node.x).clone());
            }
            values.push(cell);
        }
        OpponentStrategy::new(uniform_partition(y_res), values)
    }
}

/// Flattened quadrature data of the integrated players for one cell pair.
#[derive(Clone, Debug, Default)]
struct CellTable {
    weights: Vec<f64>,
    /// Actions of the integrated players per entry.
    k: Vec<f64>,
    x: Vec<f64>,
}

struct IntegratedPayoff {
    game: Arc<GameSpec>,
    coord: usize,
    m: usize,
    j: usize,
    rest: Vec<usize>,
    res: (usize, usize),
    tables: Arc<Vec<CellTable>>,
}

impl CoordinatePayoff for IntegratedPayoff {
    fn eval(&self, k: &[f64], l: &[&[f64]], x: f64, y: f64) -> f64 {
        let n = self.game.players();
        let (a, b) = (uniform_cell(x, self.res.0), uniform_cell(y, self.res.1));
        let t = &self.tables[a + self.res.0 * b];
        let mut kk = [0.0; MAX_PLAYERS];
        let mut xx = [0.0; MAX_PLAYERS];
        kk[self.m] = k[0];
        kk[self.j] = l[0][0];
        xx[self.m] = x;
        xx[self.j] = y;
        let r = self.rest.len();
        let mut total = 0.0;
        for (e, w) in t.weights.iter().enumerate() {
            for (q, &p) in self.rest.iter().enumerate() {
                kk[p] = t.k[e * r + q];
                xx[p] = t.x[e * r + q];
            }
            total += w * self.game.payoff(self.coord, &kk[..n], &xx[..n]);
        }
        total
    }
}

/// The two-player game between `m` (first) and `j` whose payoff vector is
/// the full payoff integrated over the other players, who play `h` and whose
/// signals follow the prior conditional on the cells of `(x_m, x_j)`. The
/// prior is the pairwise marginal; cell pairs without mass get no table.
pub fn integrate_out_players(g: &GameSpec, m: usize, j: usize, h: &[MixedStrategy], s: usize) -> Result<BinaryGame> {
    check_players(g)?;
    let n = g.players();
    if m >= n || j >= n || m == j {
        return Err(Error::Parameter("need two distinct players".into()));
    }
    if h.len() != n {
        return Err(Error::Parameter("profile needs one strategy per player".into()));
    }
    let rest: Vec<usize> = (0..n).filter(|&p| p != m && p != j).collect();
    for &p in &rest {
        h[p].validate_on(g.action_space(p))?;
    }
    let prior = g.prior();
    let pair = prior.marginal(&[m, j]);
    let (gm, gj) = (prior.resolution()[m], prior.resolution()[j]);
    let nodes: Vec<Vec<AxisNode>> = rest
        .iter()
        .map(|&p| axis_nodes(prior.resolution()[p], h[p].partition(), s))
        .collect();
    let combos_total: usize = nodes.iter().map(|v| v.len()).product();
    let mut tables = vec![CellTable::default(); gm * gj];
    let mut cell = vec![0usize; n];
    for b in 0..gj {
        for a in 0..gm {
            let pm = pair.density_cell(&[a, b]);
            if pm == 0.0 {
                continue;
            }
            cell[m] = a;
            cell[j] = b;
            let t = &mut tables[a + gm * b];
            let mut idx = vec![0usize; rest.len()];
            for _ in 0..combos_total {
                let mut w = 1.0;
                let mut xs = Vec::with_capacity(rest.len());
                let mut ms: Vec<&FiniteSupportMeasure> = Vec::with_capacity(rest.len());
                for (q, &p) in rest.iter().enumerate() {
                    let node = &nodes[q][idx[q]];
                    cell[p] = node.prior_cell;
                    w *= node.width;
                    xs.push(node.x);
                    ms.push(&h[p].values()[node.strategy_cell]);
                }
                let d = prior.density_cell(&cell) / pm;
                if d != 0.0 {
                    for (ks, wk) in support_combos(&ms) {
                        t.weights.push(w * d * wk);
                        t.k.extend(ks.iter().map(|p| p[0]));
                        t.x.extend_from_slice(&xs);
                    }
                }
                for q in 0..rest.len() {
                    idx[q] += 1;
                    if idx[q] < nodes[q].len() {
                        break;
                    }
                    idx[q] = 0;
                }
            }
            if rest.is_empty() {
                t.weights = vec![1.0];
            }
        }
    }
    let mut density = vec![0.0; gm * gj];
    for b in 0..gj {
        for a in 0..gm {
            density[a + gm * b] = pair.density_cell(&[a, b]);
        }
    }
    let tables = Arc::new(tables);
    let shared = Arc::new(g.clone());
    let coords = (0..g.payoff_dim())
        .map(|c| Coordinate {
            label: format!("u{}", c + 1),
            components: vec![0],
            payoff: Arc::new(IntegratedPayoff {
                game: shared.clone(),
                coord: c,
                m,
                j,
                rest: rest.clone(),
                res: (gm, gj),
                tables: tables.clone(),
            }),
            y_cells: 0..gj,
        })
        .collect();
    BinaryGame::new(
        g.action_space(m).clone(),
        vec![g.action_space(j).clone()],
        gm,
        gj,
        density,
        coords,
        g.bound(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{catalog_game, reference_strategy, rule};
    use crate::game::{expected_payoffs, Quadrature};
    use crate::strategy::to_piecewise;

    #[test]
    fn integrated_identity_three_players() {
        let g = catalog_game("quadratic-coordination").unwrap();
        let h: Vec<MixedStrategy> = (0..3).map(|i| reference_strategy(&g.name, i).unwrap()).collect();
        let q = Quadrature::default();
        for (m, j) in [(0, 1), (2, 0), (1, 2)] {
            let bg = integrate_out_players(&g, m, j, &h, q.subdivision).unwrap();
            let gj = to_piecewise(&rule(4), 6).unwrap();
            let u2 = bg.expected(&h[m], &OpponentStrategy::from_mixed(&gj), &q).unwrap();
            let mut prof = h.clone();
            prof[j] = gj;
            let u = expected_payoffs(&g, &prof, &q).unwrap();
            for c in 0..3 {
                assert!((u[c] - u2[c]).abs() < 1e-10, "{m}{j}{c}: {} vs {}", u[c], u2[c]);
            }
        }
    }

    #[test]
    fn aggregated_identity() {
        let g = catalog_game("quadratic-coordination").unwrap();
        let h: Vec<MixedStrategy> = (0..3).map(|i| to_piecewise(&rule(i), 4 + 2 * i).unwrap()).collect();
        let q = Quadrature::default();
        let parts: Vec<Vec<f64>> = vec![h[1].partition().to_vec(), h[2].partition().to_vec()];
        let agg = aggregate_opponents(&g, 0, &parts, q.subdivision).unwrap();
        let opp = agg.opponent_from_profile(&h).unwrap();
        let u2 = agg.game.expected(&h[0], &opp, &q).unwrap();
        let u = expected_payoffs(&g, &h, &q).unwrap();
        for c in 0..3 {
            assert!((u[c] - u2[c]).abs() < 1e-12, "{} vs {}", u[c], u2[c]);
        }
    }

    #[test]
    fn two_players_reduce_to_the_game() {
        let g = catalog_game("cournot").unwrap();
        let h: Vec<MixedStrategy> = (0..2).map(|i| reference_strategy(&g.name, i).unwrap()).collect();
        let bg = integrate_out_players(&g, 0, 1, &h, 2).unwrap();
        let direct = BinaryGame::from_two_player(&g, 0).unwrap();
        let opp = OpponentStrategy::from_mixed(&h[1]);
        let q = Quadrature::default();
        let a = bg.expected(&h[0], &opp, &q).unwrap();
        let b = direct.expected(&h[0], &opp, &q).unwrap();
        for c in 0..2 {
            assert!((a[c] - b[c]).abs() < 1e-13);
        }
    }
}
