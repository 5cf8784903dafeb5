//! Approximate equilibrium checks and a discretized equilibrium search.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::prior::uniform_cell;
use crate::game::quadrature::{axis_nodes, AxisNode};
use crate::game::{GameSpec, Quadrature};
use crate::measures::FiniteSupportMeasure;
use crate::purify::binary::support_combos;
use crate::strategy::{uniform_partition, MixedStrategy};

/// Regret of every player against node-wise deviations to a finite grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NashCheck {
    pub regrets: Vec<f64>,
    pub payoffs: Vec<f64>,
    pub best_values: Vec<f64>,
}

impl NashCheck {
    pub fn max_regret(&self) -> f64 {
        self.regrets.iter().copied().fold(0.0, f64::max)
    }
}

fn scalar_game(g: &GameSpec) -> Result<()> {
    if !g.is_usual() {
        return Err(Error::Type("equilibrium tools need a usual game".into()));
    }
    if g.payoff_dim() != g.players() {
        return Err(Error::Type("need one payoff per player".into()));
    }
    Ok(())
}

/// Deviation grid of every player with the given step.
pub fn deviation_grids(g: &GameSpec, step: f64) -> Vec<Vec<f64>> {
    (0..g.players())
        .map(|i| g.action_space(i).grid(step).into_iter().map(|p| p[0]).collect())
        .collect()
}

/// For each player `i`, the gain from switching, at every quadrature node
/// of `x_i`, to the best action of `grids[i]` (or of the current support).
pub fn epsilon_nash_check(
    g: &GameSpec,
    profile: &[MixedStrategy],
    grids: &[Vec<f64>],
    q: &Quadrature,
) -> Result<NashCheck> {
    scalar_game(g)?;
    let n = g.players();
    if profile.len() != n || grids.len() != n {
        return Err(Error::Parameter("need one strategy and one grid per player".into()));
    }
    for (i, f) in profile.iter().enumerate() {
        f.validate_on(g.action_space(i))?;
    }
    let prior = g.prior();
    let nodes: Vec<Vec<AxisNode>> = (0..n)
        .map(|l| axis_nodes(prior.resolution()[l], profile[l].partition(), q.subdivision))
        .collect();
    let mut regrets = Vec::with_capacity(n);
    let mut payoffs = Vec::with_capacity(n);
    let mut best_values = Vec::with_capacity(n);
    for i in 0..n {
        let others: Vec<usize> = (0..n).filter(|&l| l != i).collect();
        let total: usize = others.iter().map(|&l| nodes[l].len()).product();
        let per_node: Vec<(f64, f64)> = nodes[i]
            .par_iter()
            .map(|ni| {
                let own = &profile[i].values()[ni.strategy_cell];
                let mut actions = grids[i].clone();
                actions.extend(own.support().iter().map(|p| p[0]));
                let mut phi = vec![0.0; actions.len()];
                let mut idx = vec![0usize; others.len()];
                let mut cell = vec![0usize; n];
                let mut k = vec![0.0; n];
                let mut x = vec![0.0; n];
                cell[i] = ni.prior_cell;
                x[i] = ni.x;
                for _ in 0..total {
                    let mut w = ni.width;
                    let mut ms: Vec<&FiniteSupportMeasure> = Vec::with_capacity(others.len());
                    for (q, &l) in others.iter().enumerate() {
                        let nd = &nodes[l][idx[q]];
                        cell[l] = nd.prior_cell;
                        x[l] = nd.x;
                        w *= nd.width;
                        ms.push(&profile[l].values()[nd.strategy_cell]);
                    }
                    w *= prior.density_cell(&cell);
                    if w != 0.0 {
                        for (ks, wk) in support_combos(&ms) {
                            for (q, &l) in others.iter().enumerate() {
                                k[l] = ks[q][0];
                            }
                            for (a, &act) in actions.iter().enumerate() {
                                k[i] = act;
                                phi[a] += w * wk * g.payoff(i, &k, &x);
                            }
                        }
                    }
                    for (q, &l) in others.iter().enumerate() {
                        idx[q] += 1;
                        if idx[q] < nodes[l].len() {
                            break;
                        }
                        idx[q] = 0;
                    }
                }
                let best = phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let g0 = grids[i].len();
                let value: f64 = own.weights().iter().enumerate().map(|(j, w)| w * phi[g0 + j]).sum();
                (best, value)
            })
            .collect();
        let best: f64 = per_node.iter().map(|p| p.0).sum();
        let value: f64 = per_node.iter().map(|p| p.1).sum();
        regrets.push(best - value);
        payoffs.push(value);
        best_values.push(best);
    }
    Ok(NashCheck {
        regrets,
        payoffs,
        best_values,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FindEqConfig {
    pub grid_step: f64,
    /// Strategy cells per player; a multiple of the player's prior resolution.
    pub cells: usize,
    pub iterations: usize,
    pub damping: f64,
    /// Weights are rounded to multiples of `1/quantize`.
    pub quantize: usize,
    pub check_every: usize,
    /// Stop once a quantized iterate has table regret at most this.
    pub tolerance: f64,
}

impl Default for FindEqConfig {
    fn default() -> Self {
        Self {
            grid_step: 0.05,
            cells: 8,
            iterations: 400,
            damping: 1.0,
            quantize: 4,
            check_every: 10,
            tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FindEqResult {
    pub profile: Vec<MixedStrategy>,
    /// Regret of the returned profile on the cell-midpoint payoff tables.
    pub table_regret: f64,
    /// Iteration at which the returned profile was taken.
    pub iteration: usize,
    pub history: Vec<(usize, f64)>,
    pub check: NashCheck,
}

/// Cell-midpoint payoff tables: for player `i`, rows are `(a_i, c_i)` and
/// columns the other players' `(a, c)` pairs, first other player fastest.
struct Tables {
    actions: Vec<Vec<f64>>,
    cells: usize,
    data: Vec<Vec<f64>>,
}

impl Tables {
    fn build(g: &GameSpec, actions: Vec<Vec<f64>>, cells: usize) -> Self {
        let n = g.players();
        let prior = g.prior();
        let width = 1.0 / cells as f64;
        let vol = width.powi(n as i32);
        let data = (0..n)
            .map(|i| {
                let others: Vec<usize> = (0..n).filter(|&l| l != i).collect();
                let cols: usize = others.iter().map(|&l| actions[l].len() * cells).product();
                let rows = actions[i].len() * cells;
                (0..rows)
                    .into_par_iter()
                    .flat_map_iter(|row| {
                        let (a, c) = (row / cells, row % cells);
                        let mut k = vec![0.0; n];
                        let mut x = vec![0.0; n];
                        let mut cell = vec![0usize; n];
                        k[i] = actions[i][a];
                        x[i] = (c as f64 + 0.5) * width;
                        cell[i] = uniform_cell(x[i], prior.resolution()[i]);
                        let others = others.clone();
                        let actions = &actions;
                        (0..cols).map(move |col| {
                            let mut rest = col;
                            for &l in &others {
                                let m = actions[l].len() * cells;
                                let (al, cl) = ((rest % m) / cells, rest % cells);
                                rest /= m;
                                k[l] = actions[l][al];
                                x[l] = (cl as f64 + 0.5) * width;
                                cell[l] = uniform_cell(x[l], prior.resolution()[l]);
                            }
                            let d = prior.density_cell(&cell);
                            if d == 0.0 {
                                0.0
                            } else {
                                vol * d * g.payoff(i, &k, &x)
                            }
                        })
                    })
                    .collect()
            })
            .collect();
        Self { actions, cells, data }
    }

    /// Interim values `R[a][c]` of player `i` against weights `w[l][c][a]`.
    fn interim(&self, i: usize, w: &[Vec<Vec<f64>>]) -> Vec<Vec<f64>> {
        let n = w.len();
        let cells = self.cells;
        let mut col_w = vec![1.0];
        for l in (0..n).filter(|&l| l != i) {
            let mut next = Vec::with_capacity(col_w.len() * self.actions[l].len() * cells);
            for &base in &col_w {
                for a in 0..self.actions[l].len() {
                    for c in 0..cells {
                        next.push(base * w[l][c][a]);
                    }
                }
            }
            // `next` lists the new player slowest; reorder so earlier players stay fastest.
            let m = self.actions[l].len() * cells;
            let prev = col_w.len();
            let mut ordered = vec![0.0; next.len()];
            for p in 0..prev {
                for j in 0..m {
                    ordered[p + prev * j] = next[p * m + j];
                }
            }
            col_w = ordered;
        }
        let cols = col_w.len();
        let t = &self.data[i];
        let mut out = vec![vec![0.0; cells]; self.actions[i].len()];
        out.par_iter_mut().enumerate().for_each(|(a, row_out)| {
            for (c, v) in row_out.iter_mut().enumerate() {
                let row = &t[(a * cells + c) * cols..(a * cells + c + 1) * cols];
                *v = row.iter().zip(&col_w).map(|(x, y)| x * y).sum();
            }
        });
        out
    }

    fn regret(&self, w: &[Vec<Vec<f64>>]) -> f64 {
        (0..w.len())
            .map(|i| {
                let r = self.interim(i, w);
                (0..self.cells)
                    .map(|c| {
                        let best = r.iter().map(|row| row[c]).fold(f64::NEG_INFINITY, f64::max);
                        let cur: f64 = r.iter().enumerate().map(|(a, row)| w[i][c][a] * row[c]).sum();
                        best - cur
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// Rounds a probability vector to multiples of `1/r` (largest remainder).
pub fn quantize_weights(w: &[f64], r: usize) -> Vec<usize> {
    let scaled: Vec<f64> = w.iter().map(|v| v * r as f64).collect();
    let mut q: Vec<usize> = scaled.iter().map(|v| v.floor() as usize).collect();
    let mut left = r - q.iter().sum::<usize>().min(r);
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| {
        (scaled[b] - q[b] as f64)
            .total_cmp(&(scaled[a] - q[a] as f64))
            .then(a.cmp(&b))
    });
    for &j in order.iter().cycle().take(left.min(w.len() * r)) {
        if left == 0 {
            break;
        }
        q[j] += 1;
        left -= 1;
    }
    q
}

fn to_strategies(actions: &[Vec<f64>], w: &[Vec<Vec<f64>>]) -> Result<Vec<MixedStrategy>> {
    w.iter()
        .zip(actions)
        .map(|(wl, acts)| {
            let values = wl
                .iter()
                .map(|wc| {
                    let (pts, ws): (Vec<f64>, Vec<f64>) = acts
                        .iter()
                        .zip(wc)
                        .filter(|(_, &v)| v > 0.0)
                        .map(|(a, &v)| (*a, v))
                        .unzip();
                    FiniteSupportMeasure::from_scalars(&pts, &ws)
                })
                .collect::<Result<Vec<_>>>()?;
            MixedStrategy::new(uniform_partition(wl.len()), values)
        })
        .collect()
}

/// Damped fictitious play on cell-midpoint payoff tables over a finite
/// action grid; returns the best quantized iterate.
pub fn find_equilibrium_discretized(g: &GameSpec, cfg: &FindEqConfig, q: &Quadrature) -> Result<FindEqResult> {
    scalar_game(g)?;
    let n = g.players();
    for (i, &res) in g.prior().resolution().iter().enumerate() {
        if cfg.cells == 0 || !cfg.cells.is_multiple_of(res) {
            return Err(Error::Parameter(format!(
                "cells {} is not a multiple of player {}'s prior resolution {res}",
                cfg.cells,
                i + 1
            )));
        }
    }
    if cfg.quantize == 0 || cfg.iterations == 0 {
        return Err(Error::Parameter("quantize and iterations must be positive".into()));
    }
    let actions = deviation_grids(g, cfg.grid_step);
    let tables = Tables::build(g, actions.clone(), cfg.cells);
    let mut w: Vec<Vec<Vec<f64>>> = actions
        .iter()
        .map(|a| vec![vec![1.0 / a.len() as f64; a.len()]; cfg.cells])
        .collect();
    let quantized = |w: &[Vec<Vec<f64>>]| -> Vec<Vec<Vec<f64>>> {
        w.iter()
            .map(|wl| {
                wl.iter()
                    .map(|wc| {
                        quantize_weights(wc, cfg.quantize)
                            .into_iter()
                            .map(|v| v as f64 / cfg.quantize as f64)
                            .collect()
                    })
                    .collect()
            })
            .collect()
    };
    let mut best: Option<(f64, usize, Vec<Vec<Vec<f64>>>)> = None;
    let mut history = Vec::new();
    for t in 0..=cfg.iterations {
        if t % cfg.check_every == 0 || t == cfg.iterations {
            let wq = quantized(&w);
            let r = tables.regret(&wq);
            history.push((t, r));
            if best.as_ref().is_none_or(|b| r < b.0) {
                best = Some((r, t, wq));
            }
        }
        if t == cfg.iterations || best.as_ref().is_some_and(|b| b.0 <= cfg.tolerance) {
            break;
        }
        let alpha = cfg.damping / (1.0 + cfg.damping * (t + 1) as f64);
        let brs: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let r = tables.interim(i, &w);
                (0..cfg.cells)
                    .map(|c| (0..r.len()).fold(0, |b, a| if r[a][c] > r[b][c] + 1e-15 { a } else { b }))
                    .collect()
            })
            .collect();
        for i in 0..n {
            for c in 0..cfg.cells {
                for (a, v) in w[i][c].iter_mut().enumerate() {
                    *v = (1.0 - alpha) * *v + if a == brs[i][c] { alpha } else { 0.0 };
                }
            }
        }
    }
    let (table_regret, iteration, wq) = best.expect("at least one check");
    let profile = to_strategies(&actions, &wq)?;
    let check = epsilon_nash_check(g, &profile, &actions, q)?;
    Ok(FindEqResult {
        profile,
        table_regret,
        iteration,
        history,
        check,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::catalog_game;
    use crate::game::expected_payoffs;
    use crate::strategy::merge_partitions;

    #[test]
    fn regret_matches_brute_force() {
        let g = catalog_game("cournot").unwrap();
        let f0 = MixedStrategy::uniform(vec![
            FiniteSupportMeasure::from_scalars(&[0.1, 0.4], &[0.5, 0.5]).unwrap(),
            FiniteSupportMeasure::dirac_scalar(0.3),
        ])
        .unwrap();
        let f1 = MixedStrategy::constant(FiniteSupportMeasure::dirac_scalar(0.25));
        let prof = vec![f0.clone(), f1.clone()];
        let grid = vec![0.0, 0.2, 0.35];
        let q = Quadrature::with_subdivision(1);
        let check = epsilon_nash_check(&g, &prof, &[grid.clone(), grid.clone()], &q).unwrap();
        let base = expected_payoffs(&g, &prof, &q).unwrap();
        // Player 1 deviates on each of its four merged cells.
        let cells = merge_partitions(f0.partition(), &uniform_partition(4));
        let nc = cells.len() - 1;
        let acts: Vec<Vec<f64>> = (0..nc)
            .map(|c| {
                let mut a = grid.clone();
                a.extend(
                    f0.value_at((cells[c] + cells[c + 1]) / 2.0)
                        .support()
                        .iter()
                        .map(|p| p[0]),
                );
                a
            })
            .collect();
        let mut best = f64::NEG_INFINITY;
        let combos: usize = acts.iter().map(|a| a.len()).product();
        for code in 0..combos {
            let mut rest = code;
            let vals: Vec<FiniteSupportMeasure> = acts
                .iter()
                .map(|a| {
                    let v = a[rest % a.len()];
                    rest /= a.len();
                    FiniteSupportMeasure::dirac_scalar(v)
                })
                .collect();
            let dev = MixedStrategy::new(cells.clone(), vals).unwrap();
            best = best.max(expected_payoffs(&g, &[dev, f1.clone()], &q).unwrap()[0]);
        }
        assert!((check.payoffs[0] - base[0]).abs() < 1e-12);
        assert!(
            (check.regrets[0] - (best - base[0])).abs() < 1e-12,
            "{} vs {}",
            check.regrets[0],
            best - base[0]
        );
    }

    #[test]
    fn quantization_sums_to_resolution() {
        let q = quantize_weights(&[0.3, 0.3, 0.4], 4);
        assert_eq!(q.iter().sum::<usize>(), 4);
        assert_eq!(quantize_weights(&[0.5, 0.5], 4), vec![2, 2]);
    }

    #[test]
    fn finds_mixed_equilibrium_of_zero_sum_game() {
        let g = catalog_game("zero-sum-signal").unwrap();
        let cfg = FindEqConfig {
            cells: 4,
            iterations: 300,
            ..Default::default()
        };
        let out = find_equilibrium_discretized(&g, &cfg, &Quadrature::default()).unwrap();
        assert!(out.check.max_regret() < 0.05, "{:?}", out.check);
    }
}
