//! Expected payoffs of strategy profiles.
//!
//! On every cell of the common refinement of the prior grid and the players'
//! partitions the density and all strategies are constant, so the inner
//! integral over actions is a finite sum over support combinations. Each
//! cell is split into `s` equal sub-cells per axis and integrated by the
//! midpoint rule.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::GameSpec;
use crate::error::{Error, Result};
use crate::measures::FiniteSupportMeasure;
use crate::strategy::{merge_partitions, MixedStrategy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quadrature {
    /// Midpoint sub-cells per cell and axis.
    pub subdivision: usize,
    /// Upper bound on the number of integration nodes.
    pub max_nodes: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            subdivision: 2,
            max_nodes: 50_000_000,
        }
    }
}

impl Quadrature {
    pub fn with_subdivision(subdivision: usize) -> Self {
        Self {
            subdivision,
            ..Self::default()
        }
    }

    /// Same rule with doubled subdivision.
    pub fn doubled(&self) -> Self {
        Self {
            subdivision: 2 * self.subdivision,
            ..*self
        }
    }
}

/// An integration node on one axis.
#[derive(Clone, Debug)]
pub struct AxisNode {
    pub x: f64,
    pub width: f64,
    pub prior_cell: usize,
    /// Cell of the owning player's strategy.
    pub strategy_cell: usize,
}

/// Midpoint nodes of the common refinement of `prior_res` uniform cells and
/// `partition`, each cell split into `s` sub-cells.
pub fn axis_nodes(prior_res: usize, partition: &[f64], s: usize) -> Vec<AxisNode> {
    let prior_breaks: Vec<f64> = (0..=prior_res).map(|j| j as f64 / prior_res as f64).collect();
    let common = merge_partitions(&prior_breaks, partition);
    let mut nodes = Vec::with_capacity((common.len() - 1) * s);
    for w in common.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let prior_cell = super::prior::uniform_cell(mid, prior_res);
        let strategy_cell = crate::strategy::cell_index(partition, mid);
        let h = (w[1] - w[0]) / s as f64;
        for j in 0..s {
            nodes.push(AxisNode {
                x: w[0] + (j as f64 + 0.5) * h,
                width: h,
                prior_cell,
                strategy_cell,
            });
        }
    }
    nodes
}

fn check_profile(g: &GameSpec, profile: &[MixedStrategy]) -> Result<()> {
    if profile.len() != g.players() {
        return Err(Error::Parameter(format!(
            "profile has {} strategies for {} players",
            profile.len(),
            g.players()
        )));
    }
    for (j, f) in profile.iter().enumerate() {
        f.validate_on(g.action_space(j))?;
    }
    Ok(())
}

/// Accumulates `sum_{support combos} prod(weights) * u(k, x)` into `acc`
/// for every payoff coordinate.
pub(crate) fn inner_sum(g: &GameSpec, measures: &[&FiniteSupportMeasure], x: &[f64], acc: &mut [f64]) {
    let n = measures.len();
    let mut k = vec![0.0; n];
    let mut idx = vec![0usize; n];
    loop {
        let mut w = 1.0;
        for j in 0..n {
            let (p, wj) = (&measures[j].support()[idx[j]], measures[j].weights()[idx[j]]);
            k[j] = p[0];
            w *= wj;
        }
        if w != 0.0 {
            for (i, a) in acc.iter_mut().enumerate() {
                *a += w * g.payoff(i, &k, x);
            }
        }
        let mut j = 0;
        loop {
            if j == n {
                return;
            }
            idx[j] += 1;
            if idx[j] < measures[j].len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// Expected payoff vector `(U_1, ..., U_m)` of `profile`.
pub fn expected_payoffs(g: &GameSpec, profile: &[MixedStrategy], q: &Quadrature) -> Result<Vec<f64>> {
    check_profile(g, profile)?;
    if q.subdivision == 0 {
        return Err(Error::Parameter("quadrature subdivision must be at least 1".into()));
    }
    let n = g.players();
    let prior = g.prior();
    let nodes: Vec<Vec<AxisNode>> = (0..n)
        .map(|a| axis_nodes(prior.resolution()[a], profile[a].partition(), q.subdivision))
        .collect();
    let total: usize = nodes
        .iter()
        .try_fold(1usize, |acc, v| acc.checked_mul(v.len()))
        .unwrap_or(usize::MAX);
    if total > q.max_nodes {
        return Err(Error::Resolution(format!(
            "{total} integration nodes exceed the cap {}",
            q.max_nodes
        )));
    }
    let m = g.payoff_dim();
    // Parallel over the last axis; partial sums are added in index order.
    let last = n - 1;
    let partials: Vec<Vec<f64>> = nodes[last]
        .par_iter()
        .map(|outer| {
            let mut acc = vec![0.0; m];
            let mut idx = vec![0usize; last];
            let mut x = vec![0.0; n];
            let mut cell = vec![0usize; n];
            let mut measures: Vec<&FiniteSupportMeasure> = vec![&profile[0].values()[0]; n];
            x[last] = outer.x;
            cell[last] = outer.prior_cell;
            measures[last] = &profile[last].values()[outer.strategy_cell];
            let mut inner = vec![0.0; m];
            loop {
                let mut vol = outer.width;
                for a in 0..last {
                    let node = &nodes[a][idx[a]];
                    x[a] = node.x;
                    cell[a] = node.prior_cell;
                    measures[a] = &profile[a].values()[node.strategy_cell];
                    vol *= node.width;
                }
                let d = prior.density_cell(&cell);
                if d != 0.0 {
                    inner.iter_mut().for_each(|v| *v = 0.0);
                    inner_sum(g, &measures, &x, &mut inner);
                    for (a, v) in acc.iter_mut().zip(&inner) {
                        *a += vol * d * v;
                    }
                }
                let mut a = 0;
                loop {
                    if a == last {
                        return acc;
                    }
                    idx[a] += 1;
                    if idx[a] < nodes[a].len() {
                        break;
                    }
                    idx[a] = 0;
                    a += 1;
                }
            }
        })
        .collect();
    let mut out = vec![0.0; m];
    for p in partials {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    Ok(out)
}

/// `U_i` of `profile` (zero-based coordinate `i`).
pub fn expected_payoff(g: &GameSpec, profile: &[MixedStrategy], i: usize, q: &Quadrature) -> Result<f64> {
    if i >= g.payoff_dim() {
        return Err(Error::Parameter(format!("payoff index {i} out of range")));
    }
    Ok(expected_payoffs(g, profile, q)?[i])
}

/// Payoff vector integrated over actions at a fixed signal profile.
pub fn payoff_at(g: &GameSpec, profile: &[MixedStrategy], x: &[f64]) -> Vec<f64> {
    let measures: Vec<&FiniteSupportMeasure> = profile.iter().zip(x).map(|(f, &xi)| f.value_at(xi)).collect();
    let mut acc = vec![0.0; g.payoff_dim()];
    inner_sum(g, &measures, x, &mut acc);
    acc
}

/// Monte Carlo estimate of the payoff vector: signals drawn from the prior,
/// action integrals computed exactly. Returns means and standard errors.
pub fn monte_carlo_payoffs(
    g: &GameSpec,
    profile: &[MixedStrategy],
    samples: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_profile(g, profile)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = g.payoff_dim();
    let mut sum = vec![0.0; m];
    let mut sq = vec![0.0; m];
    for _ in 0..samples {
        let x = g.prior().sample(&mut rng);
        let v = payoff_at(g, profile, &x);
        for i in 0..m {
            sum[i] += v[i];
            sq[i] += v[i] * v[i];
        }
    }
    let n = samples as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let se = sq
        .iter()
        .zip(&mean)
        .map(|(s, mu)| ((s / n - mu * mu).max(0.0) / n).sqrt())
        .collect();
    Ok((mean, se))
}
