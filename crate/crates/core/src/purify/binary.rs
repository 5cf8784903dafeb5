//! Two-sided games seen from the player being purified.
//!
//! The purified player observes `x` and acts in `own`; everyone else is
//! folded into a single opponent who observes `y` and plays a product of
//! `components` (one factor per real opponent, per combined sub-game, ...).
//! The prior is a piecewise-constant density on an `x_res` by `y_res` grid.
//! Each payoff coordinate reads only some components and may be known to
//! vanish outside a range of `y` cells.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::prior::uniform_cell;
use crate::game::quadrature::{axis_nodes, AxisNode};
use crate::game::{GameSpec, PayoffModel, Quadrature};
use crate::measures::{ActionSpace, FiniteSupportMeasure, Point};
use crate::strategy::{cell_index, merge_partitions, MixedStrategy};

/// One payoff coordinate `v(k, l, x, y)`; `l` lists the actions of the
/// coordinate's components in order.
pub trait CoordinatePayoff: Send + Sync {
    fn eval(&self, k: &[f64], l: &[&[f64]], x: f64, y: f64) -> f64;
}

#[derive(Clone)]
pub struct Coordinate {
    pub label: String,
    pub components: Vec<usize>,
    pub payoff: Arc<dyn CoordinatePayoff>,
    /// Prior `y` cells outside which the coordinate is zero.
    pub y_cells: Range<usize>,
}

impl fmt::Debug for Coordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Coordinate")
            .field("label", &self.label)
            .field("components", &self.components)
            .field("y_cells", &self.y_cells)
            .finish()
    }
}

#[derive(Clone, Debug)]
pub struct BinaryGame {
    pub own: ActionSpace,
    pub components: Vec<ActionSpace>,
    x_res: usize,
    y_res: usize,
    /// Density with `x` fastest.
    density: Vec<f64>,
    pub coords: Vec<Coordinate>,
    pub bound: f64,
    /// Payoffs are constant in `y` on each prior cell, so one `y` node per
    /// cell is exact.
    y_cellwise: bool,
}

/// `max(v, 0)` or `max(-v, 0)` of another coordinate.
struct PartPayoff {
    inner: Arc<dyn CoordinatePayoff>,
    negate: bool,
}

impl CoordinatePayoff for PartPayoff {
    fn eval(&self, k: &[f64], l: &[&[f64]], x: f64, y: f64) -> f64 {
        let v = self.inner.eval(k, l, x, y);
        if self.negate {
            (-v).max(0.0)
        } else {
            v.max(0.0)
        }
    }
}

/// The constant coordinate `1`.
pub struct ConstantPayoff(pub f64);

impl CoordinatePayoff for ConstantPayoff {
    fn eval(&self, _: &[f64], _: &[&[f64]], _: f64, _: f64) -> f64 {
        self.0
    }
}

/// Coordinate of a two-player game file, seen by player `me`.
struct SpecPayoff {
    game: Arc<GameSpec>,
    coord: usize,
    me: usize,
}

impl CoordinatePayoff for SpecPayoff {
    fn eval(&self, k: &[f64], l: &[&[f64]], x: f64, y: f64) -> f64 {
        if self.me == 0 {
            self.game.payoff(self.coord, &[k[0], l[0][0]], &[x, y])
        } else {
            self.game.payoff(self.coord, &[l[0][0], k[0]], &[y, x])
        }
    }
}

impl BinaryGame {
    pub fn new(
        own: ActionSpace,
        components: Vec<ActionSpace>,
        x_res: usize,
        y_res: usize,
        density: Vec<f64>,
        coords: Vec<Coordinate>,
        bound: f64,
    ) -> Result<Self> {
        if x_res == 0 || y_res == 0 || density.len() != x_res * y_res {
            return Err(Error::Validation("density does not match its grid".into()));
        }
        if density.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::Validation("density must be finite and nonnegative".into()));
        }
        let mass: f64 = density.iter().sum::<f64>() / (x_res * y_res) as f64;
        if (mass - 1.0).abs() > 1e-10 {
            return Err(Error::Normalization(format!("prior mass is {mass}")));
        }
        for c in &coords {
            if c.components.iter().any(|&j| j >= components.len()) || c.y_cells.end > y_res {
                return Err(Error::Validation(format!(
                    "coordinate {} references missing data",
                    c.label
                )));
            }
        }
        Ok(Self {
            own,
            components,
            x_res,
            y_res,
            density,
            coords,
            bound,
            y_cellwise: false,
        })
    }

    /// Marks the payoffs as constant in `y` on prior cells.
    pub fn with_cellwise_y(mut self) -> Self {
        self.y_cellwise = true;
        self
    }

    /// Player `me` of a two-player game file against the other player.
    pub fn from_two_player(game: &GameSpec, me: usize) -> Result<Self> {
        if game.players() != 2 || me > 1 {
            return Err(Error::Parameter("expected a two-player game and player 0 or 1".into()));
        }
        let other = 1 - me;
        let prior = game.prior();
        let (xr, yr) = (prior.resolution()[me], prior.resolution()[other]);
        let mut density = vec![0.0; xr * yr];
        for yc in 0..yr {
            for xc in 0..xr {
                let mut cell = [0usize; 2];
                cell[me] = xc;
                cell[other] = yc;
                density[xc + xr * yc] = prior.density_cell(&cell);
            }
        }
        let shared = Arc::new(game.clone());
        let coords = (0..game.payoff_dim())
            .map(|c| Coordinate {
                label: format!("u{}", c + 1),
                components: vec![0],
                payoff: Arc::new(SpecPayoff {
                    game: shared.clone(),
                    coord: c,
                    me,
                }),
                y_cells: 0..yr,
            })
            .collect();
        Self::new(
            game.action_space(me).clone(),
            vec![game.action_space(other).clone()],
            xr,
            yr,
            density,
            coords,
            game.bound(),
        )
    }

    pub fn x_res(&self) -> usize {
        self.x_res
    }

    pub fn y_res(&self) -> usize {
        self.y_res
    }

    pub fn density_values(&self) -> &[f64] {
        &self.density
    }

    #[inline]
    pub fn density(&self, xc: usize, yc: usize) -> f64 {
        self.density[xc + self.x_res * yc]
    }

    /// Marginal density of `y` on its cells.
    pub fn y_marginal(&self) -> Vec<f64> {
        (0..self.y_res)
            .map(|yc| (0..self.x_res).map(|xc| self.density(xc, yc)).sum::<f64>() / self.x_res as f64)
            .collect()
    }

    pub(crate) fn x_nodes(&self, partition: &[f64], s: usize) -> Vec<AxisNode> {
        axis_nodes(self.x_res, partition, s)
    }

    pub(crate) fn y_nodes(&self, partition: &[f64], s: usize) -> Vec<AxisNode> {
        axis_nodes(self.y_res, partition, if self.y_cellwise { 1 } else { s })
    }

    /// Step 8 split: `max(v, 0)` and `max(-v, 0)` for every coordinate, in
    /// the order `v1+, ..., vm+, v1-, ..., vm-`.
    pub fn nonneg_decompose(&self) -> BinaryGame {
        let mut coords = Vec::with_capacity(2 * self.coords.len());
        for negate in [false, true] {
            for c in &self.coords {
                coords.push(Coordinate {
                    label: format!("{}{}", c.label, if negate { "-" } else { "+" }),
                    components: c.components.clone(),
                    payoff: Arc::new(PartPayoff {
                        inner: c.payoff.clone(),
                        negate,
                    }),
                    y_cells: c.y_cells.clone(),
                });
            }
        }
        BinaryGame { coords, ..self.clone() }
    }

    /// Validates a strategy of the purified player.
    pub fn check_own(&self, f: &MixedStrategy) -> Result<()> {
        f.validate_on(&self.own)
    }

    /// Expected payoff vectors of several own strategies against `g`,
    /// integrated on the common refinement of their partitions. Entry
    /// `[s][c]` is coordinate `c` for strategy `s`.
    pub fn expected_many(&self, fs: &[&MixedStrategy], g: &OpponentStrategy, q: &Quadrature) -> Result<Vec<Vec<f64>>> {
        g.validate_on(&self.components)?;
        for f in fs {
            self.check_own(f)?;
        }
        let mut common = vec![0.0, 1.0];
        for f in fs {
            common = merge_partitions(&common, f.partition());
        }
        let xs = self.x_nodes(&common, q.subdivision);
        let ys = self.y_nodes(g.partition(), q.subdivision);
        if xs.len().saturating_mul(ys.len()) > q.max_nodes {
            return Err(Error::Resolution(format!(
                "{} integration nodes exceed the cap {}",
                xs.len() * ys.len(),
                q.max_nodes
            )));
        }
        // Opponent action combinations per coordinate and y node.
        let combos: Vec<Vec<Vec<(Vec<&[f64]>, f64)>>> = self
            .coords
            .iter()
            .map(|c| {
                ys.iter()
                    .map(|yn| {
                        if !c.y_cells.contains(&yn.prior_cell) {
                            return Vec::new();
                        }
                        let cell = &g.values[yn.strategy_cell];
                        let ms: Vec<&FiniteSupportMeasure> = c.components.iter().map(|&j| &cell[j]).collect();
                        support_combos(&ms)
                    })
                    .collect()
            })
            .collect();
        let nf = fs.len();
        let nc = self.coords.len();
        let partials: Vec<Vec<f64>> = xs
            .par_iter()
            .map(|xn| {
                let vals: Vec<&FiniteSupportMeasure> = fs.iter().map(|f| f.value_at(xn.x)).collect();
                let mut actions: Vec<&Point> = Vec::new();
                for v in &vals {
                    for p in v.support() {
                        if !actions.contains(&p) {
                            actions.push(p);
                        }
                    }
                }
                // weights[s][a]
                let weights: Vec<Vec<f64>> = vals
                    .iter()
                    .map(|v| actions.iter().map(|a| v.weight_of(a)).collect())
                    .collect();
                let mut acc = vec![0.0; nf * nc];
                let mut phi = vec![0.0; actions.len()];
                for (c, coord) in self.coords.iter().enumerate() {
                    for (yi, yn) in ys.iter().enumerate() {
                        let list = &combos[c][yi];
                        if list.is_empty() {
                            continue;
                        }
                        let d = self.density(xn.prior_cell, yn.prior_cell);
                        if d == 0.0 {
                            continue;
                        }
                        for (a, k) in actions.iter().enumerate() {
                            phi[a] = list.iter().map(|(l, w)| w * coord.payoff.eval(k, l, xn.x, yn.x)).sum();
                        }
                        let vol = d * xn.width * yn.width;
                        for s in 0..nf {
                            let inner: f64 = weights[s].iter().zip(&phi).map(|(w, p)| w * p).sum();
                            acc[s * nc + c] += vol * inner;
                        }
                    }
                }
                acc
            })
            .collect();
        let mut out = vec![vec![0.0; nc]; nf];
        for p in partials {
            for s in 0..nf {
                for c in 0..nc {
                    out[s][c] += p[s * nc + c];
                }
            }
        }
        Ok(out)
    }

    pub fn expected(&self, f: &MixedStrategy, g: &OpponentStrategy, q: &Quadrature) -> Result<Vec<f64>> {
        Ok(self.expected_many(&[f], g, q)?.remove(0))
    }

    /// Draws `(x, y)` from the prior.
    pub fn sample_signals<R: Rng>(&self, rng: &mut R) -> (f64, f64) {
        let vol = 1.0 / (self.x_res * self.y_res) as f64;
        let mut u: f64 = rng.gen();
        let mut flat = self.density.len() - 1;
        for (i, d) in self.density.iter().enumerate() {
            if u < d * vol {
                flat = i;
                break;
            }
            u -= d * vol;
        }
        let (xc, yc) = (flat % self.x_res, flat / self.x_res);
        (
            (xc as f64 + rng.gen::<f64>()) / self.x_res as f64,
            (yc as f64 + rng.gen::<f64>()) / self.y_res as f64,
        )
    }

    /// Payoff vector at a signal pair with actions integrated exactly.
    pub fn payoff_at(&self, f: &FiniteSupportMeasure, g: &[FiniteSupportMeasure], x: f64, y: f64) -> Vec<f64> {
        let yc = uniform_cell(y, self.y_res);
        self.coords
            .iter()
            .map(|c| {
                if !c.y_cells.contains(&yc) {
                    return 0.0;
                }
                let ms: Vec<&FiniteSupportMeasure> = c.components.iter().map(|&j| &g[j]).collect();
                let combos = support_combos(&ms);
                f.iter()
                    .map(|(k, wk)| wk * combos.iter().map(|(l, w)| w * c.payoff.eval(k, l, x, y)).sum::<f64>())
                    .sum()
            })
            .collect()
    }

    /// Monte Carlo estimate of `U(f) - U(f2)` against `g` per coordinate:
    /// signals sampled from the prior, action integrals exact. Returns
    /// means and standard errors.
    pub fn monte_carlo_gap(
        &self,
        f: &MixedStrategy,
        f2: &MixedStrategy,
        g: &OpponentStrategy,
        samples: usize,
        seed: u64,
    ) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nc = self.coords.len();
        let mut sum = vec![0.0; nc];
        let mut sq = vec![0.0; nc];
        for _ in 0..samples {
            let (x, y) = self.sample_signals(&mut rng);
            let gv = g.value_at(y);
            let a = self.payoff_at(f.value_at(x), gv, x, y);
            let b = self.payoff_at(f2.value_at(x), gv, x, y);
            for c in 0..nc {
                let d = a[c] - b[c];
                sum[c] += d;
                sq[c] += d * d;
            }
        }
        let n = samples as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let se = sq
            .iter()
            .zip(&mean)
            .map(|(s, m)| ((s / n - m * m).max(0.0) / n).sqrt())
            .collect();
        (mean, se)
    }
}

/// All support combinations of a product measure with their weights.
pub(crate) fn support_combos<'a>(ms: &[&'a FiniteSupportMeasure]) -> Vec<(Vec<&'a [f64]>, f64)> {
    let mut out: Vec<(Vec<&[f64]>, f64)> = vec![(Vec::with_capacity(ms.len()), 1.0)];
    for m in ms {
        let mut next = Vec::with_capacity(out.len() * m.len());
        for (prefix, w) in &out {
            for (p, v) in m.iter() {
                if v == 0.0 {
                    continue;
                }
                let mut l = prefix.clone();
                l.push(p.as_slice());
                next.push((l, w * v));
            }
        }
        out = next;
    }
    out
}

/// Strategy of the folded opponent: one measure per component on each cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpponentStrategy {
    partition: Vec<f64>,
    values: Vec<Vec<FiniteSupportMeasure>>,
}

impl OpponentStrategy {
    pub fn new(partition: Vec<f64>, values: Vec<Vec<FiniteSupportMeasure>>) -> Result<Self> {
        // Reuse the partition checks of mixed strategies.
        let probe = values
            .iter()
            .map(|v| {
                v.first()
                    .cloned()
                    .ok_or_else(|| Error::Validation("cell without components".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        MixedStrategy::new(partition.clone(), probe)?;
        if values.iter().any(|v| v.len() != values[0].len()) {
            return Err(Error::Validation("cells disagree on the number of components".into()));
        }
        Ok(Self { partition, values })
    }

    pub fn constant(values: Vec<FiniteSupportMeasure>) -> Self {
        Self {
            partition: vec![0.0, 1.0],
            values: vec![values],
        }
    }

    /// Single-component opponent from an ordinary mixed strategy.
    pub fn from_mixed(g: &MixedStrategy) -> Self {
        Self {
            partition: g.partition().to_vec(),
            values: g.values().iter().map(|v| vec![v.clone()]).collect(),
        }
    }

    pub fn partition(&self) -> &[f64] {
        &self.partition
    }

    pub fn values(&self) -> &[Vec<FiniteSupportMeasure>] {
        &self.values
    }

    pub fn components(&self) -> usize {
        self.values[0].len()
    }

    pub fn value_at(&self, y: f64) -> &[FiniteSupportMeasure] {
        &self.values[cell_index(&self.partition, y)]
    }

    pub fn validate_on(&self, spaces: &[ActionSpace]) -> Result<()> {
        if self.components() != spaces.len() {
            return Err(Error::Type(format!(
                "opponent strategy has {} components, game expects {}",
                self.components(),
                spaces.len()
            )));
        }
        for cell in &self.values {
            for (m, s) in cell.iter().zip(spaces) {
                m.validate_on(s)?;
            }
        }
        Ok(())
    }
}

/// Positive and negative parts of a game-file payoff, used when the
/// decomposition is wanted on the game itself.
pub fn nonneg_decompose(g: &GameSpec) -> Result<GameSpec> {
    let mut parts = Vec::with_capacity(2 * g.payoff_dim());
    for negate in [false, true] {
        for p in g.payoffs() {
            parts.push(PayoffModel::Part {
                inner: Box::new(p.clone()),
                negate,
            });
        }
    }
    g.with_payoffs(parts, g.bound(), " (nonnegative parts)")
}
