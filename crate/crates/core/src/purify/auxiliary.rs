//! Steps 4 to 7: the auxiliary measure, its seminorm and the rounding of
//! simple strategies to pure ones.
//!
//! Signals of the purified player are discretized into `atoms` equal cells
//! and `y` into midpoint nodes. On an atom the auxiliary measure is taken
//! uniform in `x` with the mass of the payoff-weighted prior at the atom
//! midpoint, so every conditional `ν(·|y')` is a finite vector of atom
//! weights and all seminorms below are finite sums.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::binary::{BinaryGame, ConstantPayoff, Coordinate};
use crate::error::{Error, Result};
use crate::game::prior::uniform_cell;
use crate::game::quadrature::AxisNode;
use crate::measures::{FiniteSupportMeasure, Point};
use crate::rng::stream;
use crate::strategy::{uniform_partition, MixedStrategy, PureStrategy};

/// A point of the simplex over `K'` with weights `quanta / resolution`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimplexPoint {
    pub quanta: Vec<usize>,
    pub resolution: usize,
}

impl SimplexPoint {
    pub fn new(quanta: Vec<usize>, resolution: usize) -> Result<Self> {
        if resolution == 0 || quanta.iter().sum::<usize>() != resolution {
            return Err(Error::Validation("simplex quanta must sum to the resolution".into()));
        }
        Ok(Self { quanta, resolution })
    }

    /// Weights of `m` on `k_prime`, which must be multiples of `1/resolution`.
    pub fn from_measure(m: &FiniteSupportMeasure, k_prime: &[Point], resolution: usize) -> Result<Self> {
        let mut quanta = vec![0usize; k_prime.len()];
        for (p, w) in m.iter() {
            let k = k_prime
                .iter()
                .position(|q| q == p)
                .ok_or_else(|| Error::Validation(format!("atom {p:?} is not in K'")))?;
            let n = (w * resolution as f64).round();
            if (n - w * resolution as f64).abs() > 1e-9 {
                return Err(Error::Validation(format!(
                    "weight {w} is not a multiple of 1/{resolution}"
                )));
            }
            quanta[k] += n as usize;
        }
        Self::new(quanta, resolution)
    }

    pub fn weights(&self) -> Vec<f64> {
        self.quanta.iter().map(|&n| n as f64 / self.resolution as f64).collect()
    }

    pub fn vertex(&self) -> Option<VertexPoint> {
        self.quanta
            .iter()
            .position(|&n| n == self.resolution)
            .map(|index| VertexPoint { index })
    }
}

/// A vertex of the simplex over `K'`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexPoint {
    pub index: usize,
}

impl VertexPoint {
    pub fn weights(&self, n: usize) -> Vec<f64> {
        (0..n).map(|k| if k == self.index { 1.0 } else { 0.0 }).collect()
    }
}

/// One index `y' = (y node, coordinate, k, l)` of the auxiliary measure.
#[derive(Clone, Copy, Debug)]
struct AuxClass {
    coord: u32,
    k: u32,
    /// Index into the coordinate's `L'` combinations.
    l: u32,
    y: u32,
}

#[derive(Clone, Debug)]
pub struct AuxiliaryMeasure {
    game: BinaryGame,
    k_prime: Vec<Point>,
    /// `L'` per opponent component.
    l_prime: Vec<Vec<Point>>,
    atoms: usize,
    y_nodes: Vec<AxisNode>,
    /// `L'` combinations of each coordinate's components (index tuples).
    combos: Vec<Vec<Vec<usize>>>,
    classes: Vec<AuxClass>,
    /// `∫ v dμ` over each class.
    mass: Vec<f64>,
    /// `c / |L'|`.
    scaled_c: f64,
    log10_l: f64,
    /// Stride of the sub-grid of each `L'` component actually tabulated.
    l_stride: usize,
    constant_added: bool,
}

/// Largest number of tabulated classes; beyond it `L'` averages are taken
/// over a strided sub-grid of each component.
pub const MAX_CLASSES: usize = 1 << 19;

/// Every `stride`-th point of `g`, always keeping the last one.
fn strided(g: &[Point], stride: usize) -> Vec<Point> {
    let mut out: Vec<Point> = g.iter().step_by(stride).cloned().collect();
    if !(g.len() - 1).is_multiple_of(stride) {
        out.push(g[g.len() - 1].clone());
    }
    out
}

fn index_combos(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &n in sizes {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..n).map(move |i| {
                    let mut v = p.clone();
                    v.push(i);
                    v
                })
            })
            .collect();
    }
    out
}

/// Builds the auxiliary measure of a game with nonnegative payoffs.
///
/// `atoms` must be a multiple of the game's `x` resolution; `y` is sampled
/// at `y_subdivision` midpoints per prior cell.
pub fn build_auxiliary(
    game: &BinaryGame,
    k_prime: &[Point],
    l_prime: &[Vec<Point>],
    atoms: usize,
    y_subdivision: usize,
) -> Result<AuxiliaryMeasure> {
    if k_prime.is_empty() {
        return Err(Error::Parameter("K' must be nonempty".into()));
    }
    if l_prime.len() != game.components.len() || l_prime.iter().any(|g| g.is_empty()) {
        return Err(Error::Parameter(
            "L' needs a nonempty grid per opponent component".into(),
        ));
    }
    if atoms == 0 || !atoms.is_multiple_of(game.x_res()) || y_subdivision == 0 {
        return Err(Error::Resolution(format!(
            "{atoms} atoms do not refine {} prior cells",
            game.x_res()
        )));
    }
    let log10_l = l_prime.iter().map(|g| (g.len() as f64).log10()).sum();
    let y_count = game.y_nodes(&[0.0, 1.0], y_subdivision).len();
    let class_count = |stride: usize| -> f64 {
        let per_y: f64 = game
            .coords
            .iter()
            .map(|c| {
                c.components
                    .iter()
                    .map(|&j| strided(&l_prime[j], stride).len() as f64)
                    .product::<f64>()
            })
            .sum::<f64>()
            + 1.0;
        per_y * (y_count * k_prime.len()) as f64
    };
    let longest = l_prime.iter().map(|g| g.len()).max().unwrap_or(1);
    let mut l_stride = 1;
    while l_stride < longest && class_count(l_stride) > MAX_CLASSES as f64 {
        l_stride += 1;
    }
    let mut aux = AuxiliaryMeasure {
        game: game.clone(),
        k_prime: k_prime.to_vec(),
        l_prime: l_prime.iter().map(|g| strided(g, l_stride)).collect(),
        atoms,
        y_nodes: game.y_nodes(&[0.0, 1.0], y_subdivision),
        combos: Vec::new(),
        classes: Vec::new(),
        mass: Vec::new(),
        scaled_c: 0.0,
        log10_l,
        l_stride,
        constant_added: false,
    };
    aux.tabulate();
    if aux.scaled_c == 0.0 {
        let all = 0..game.y_res();
        aux.game.coords.push(Coordinate {
            label: "constant".into(),
            components: Vec::new(),
            payoff: Arc::new(ConstantPayoff(1.0)),
            y_cells: all,
        });
        aux.constant_added = true;
        aux.tabulate();
    }
    Ok(aux)
}

impl AuxiliaryMeasure {
    fn tabulate(&mut self) {
        self.combos = self
            .game
            .coords
            .iter()
            .map(|c| index_combos(&c.components.iter().map(|&j| self.l_prime[j].len()).collect::<Vec<_>>()))
            .collect();
        let mut classes = Vec::new();
        for (yi, yn) in self.y_nodes.iter().enumerate() {
            for (c, coord) in self.game.coords.iter().enumerate() {
                if !coord.y_cells.contains(&yn.prior_cell) {
                    continue;
                }
                for k in 0..self.k_prime.len() {
                    for l in 0..self.combos[c].len() {
                        classes.push(AuxClass {
                            coord: c as u32,
                            k: k as u32,
                            l: l as u32,
                            y: yi as u32,
                        });
                    }
                }
            }
        }
        self.classes = classes;
        let mass: Vec<f64> = self
            .classes
            .par_iter()
            .map(|cl| (0..self.atoms).map(|a| self.weight(cl, a)).sum())
            .collect();
        self.mass = mass;
        self.scaled_c = self
            .classes
            .iter()
            .zip(&self.mass)
            .map(|(cl, m)| m / self.combos[cl.coord as usize].len() as f64)
            .sum();
    }

    /// `v(k, l, x_a, y) μ(atom a × y node)` before normalization.
    fn weight(&self, cl: &AuxClass, a: usize) -> f64 {
        let coord = &self.game.coords[cl.coord as usize];
        let yn = &self.y_nodes[cl.y as usize];
        let x = (a as f64 + 0.5) / self.atoms as f64;
        let d = self.game.density(uniform_cell(x, self.game.x_res()), yn.prior_cell);
        if d == 0.0 {
            return 0.0;
        }
        let idx = &self.combos[cl.coord as usize][cl.l as usize];
        let l: Vec<&[f64]> = coord
            .components
            .iter()
            .zip(idx)
            .map(|(&j, &i)| self.l_prime[j][i].as_slice())
            .collect();
        coord.payoff.eval(&self.k_prime[cl.k as usize], &l, x, yn.x) * d * yn.width / self.atoms as f64
    }

    /// Multiplicity over `L'` of a class divided by `c`.
    fn class_scale(&self, cl: &AuxClass) -> f64 {
        1.0 / (self.combos[cl.coord as usize].len() as f64 * self.scaled_c)
    }

    pub fn atoms(&self) -> usize {
        self.atoms
    }

    pub fn k_prime(&self) -> &[Point] {
        &self.k_prime
    }

    pub fn game(&self) -> &BinaryGame {
        &self.game
    }

    pub fn constant_added(&self) -> bool {
        self.constant_added
    }

    /// Number of distinct classes (multiplicity over unused components not
    /// expanded).
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    /// `log10 |Y'|` with `Y' = y nodes × coordinates × K' × L'`.
    pub fn log10_index_set(&self) -> f64 {
        ((self.y_nodes.len() * self.game.coords.len() * self.k_prime.len()) as f64).log10() + self.log10_l
    }

    pub fn log10_c(&self) -> f64 {
        self.scaled_c.log10() + self.log10_l
    }

    /// 1 when every `L'` point is tabulated.
    pub fn l_prime_stride(&self) -> usize {
        self.l_stride
    }

    pub fn log10_l_prime(&self) -> f64 {
        self.log10_l
    }

    /// Normalizer `c`; overflows to infinity for very large `L'`.
    pub fn c(&self) -> f64 {
        10f64.powf(self.log10_c())
    }

    /// `log10` of `ε / (6 c |K'| |L'|)`.
    pub fn log10_kappa(&self, epsilon: f64) -> f64 {
        epsilon.log10() - 6f64.log10() - self.log10_c() - (self.k_prime.len() as f64).log10() - self.log10_l
    }

    /// Total mass of `ν`, summed in reverse class order.
    pub fn total_mass(&self) -> f64 {
        self.classes
            .iter()
            .zip(&self.mass)
            .rev()
            .map(|(cl, m)| m * self.class_scale(cl))
            .sum()
    }

    /// `(c_{i,k,l}(y), d_{i,k,l}(y))` per class: the conditional integral
    /// `∫ v μ(dx|y)` and its guarded reciprocal.
    pub fn coefficients(&self) -> Vec<(f64, f64)> {
        let marg = self.game.y_marginal();
        self.classes
            .iter()
            .zip(&self.mass)
            .map(|(cl, m)| {
                let yn = &self.y_nodes[cl.y as usize];
                let my = marg[yn.prior_cell] * yn.width;
                let c = if my > 0.0 { m / my } else { 0.0 };
                (c, if c > 0.0 { 1.0 / c } else { 0.0 })
            })
            .collect()
    }

    /// Conditional `ν(·|y')` over atoms for class `i`.
    pub fn conditional(&self, i: usize) -> Vec<f64> {
        let cl = &self.classes[i];
        if self.mass[i] == 0.0 {
            return vec![0.0; self.atoms];
        }
        (0..self.atoms).map(|a| self.weight(cl, a) / self.mass[i]).collect()
    }

    /// `∫_{Y'} ‖∫_X h dν(·|y')‖ dν_{Y'}` for `h` given by its average over
    /// each atom (a vector over `K'`).
    pub fn seminorm(&self, h: &[Vec<f64>]) -> f64 {
        assert_eq!(h.len(), self.atoms, "one vector per atom");
        let active: Vec<usize> = (0..self.atoms).filter(|&a| h[a].iter().any(|v| *v != 0.0)).collect();
        if active.is_empty() {
            return 0.0;
        }
        let nk = self.k_prime.len();
        let terms: Vec<f64> = self
            .classes
            .par_iter()
            .map(|cl| {
                let mut s = vec![0.0; nk];
                for &a in &active {
                    let w = self.weight(cl, a);
                    if w != 0.0 {
                        for (sk, hk) in s.iter_mut().zip(&h[a]) {
                            *sk += w * hk;
                        }
                    }
                }
                s.iter().map(|v| v * v).sum::<f64>().sqrt() * self.class_scale(cl)
            })
            .collect();
        terms.iter().sum()
    }

    /// `∫ max_j ν(H_j ∩ T | y') dν_{Y'}` for the uniform partition into `m`
    /// pieces, `T` given as a set of atoms.
    pub fn max_piece_integral(&self, t: &[bool], m: usize) -> f64 {
        let terms: Vec<f64> = self
            .classes
            .par_iter()
            .zip(&self.mass)
            .map(|(cl, &mass)| {
                if mass == 0.0 {
                    return 0.0;
                }
                let mut piece = vec![0.0; m];
                for a in (0..self.atoms).filter(|&a| t[a]) {
                    let w = self.weight(cl, a) / mass;
                    let (lo, hi) = (a as f64 / self.atoms as f64, (a + 1) as f64 / self.atoms as f64);
                    let first = ((lo * m as f64).floor() as usize).min(m - 1);
                    for (j, p) in piece.iter_mut().enumerate().skip(first) {
                        let (plo, phi) = (j as f64 / m as f64, (j + 1) as f64 / m as f64);
                        if plo >= hi {
                            break;
                        }
                        let overlap = (hi.min(phi) - lo.max(plo)).max(0.0);
                        *p += w * overlap * self.atoms as f64;
                    }
                }
                piece.into_iter().fold(0.0, f64::max) * mass * self.class_scale(cl)
            })
            .collect();
        terms.iter().sum()
    }
}

/// `H_j = T ∩ ((j-1)/M, j/M]` (the first piece closed at 0) for `T` given as
/// sorted disjoint intervals `(lo, hi]`. Pieces may be empty.
pub fn make_partition(t: &[(f64, f64)], m: usize) -> Result<Vec<Vec<(f64, f64)>>> {
    if m == 0 {
        return Err(Error::Parameter("M must be at least 1".into()));
    }
    Ok((0..m)
        .map(|j| {
            let (plo, phi) = (j as f64 / m as f64, (j + 1) as f64 / m as f64);
            t.iter()
                .filter_map(|&(lo, hi)| {
                    let (a, b) = (lo.max(plo), hi.min(phi));
                    (a < b).then_some((a, b))
                })
                .collect()
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundingScheme {
    /// One independent draw per piece.
    Independent,
    /// Each atom's pieces carry the exact multiset of actions prescribed by
    /// `s`, in random order.
    Stratified,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundingConfig {
    pub scheme: RoundingScheme,
    pub max_retries: usize,
    pub max_pieces: usize,
}

impl Default for RoundingConfig {
    fn default() -> Self {
        Self {
            scheme: RoundingScheme::Stratified,
            max_retries: 64,
            max_pieces: 1 << 20,
        }
    }
}

/// One draw of the vertex map on `T`: the action index per piece
/// (`u32::MAX` outside `T`) and the atom averages of `s - b` on `T`.
pub fn round_once(
    atoms: usize,
    t: &[bool],
    s: &SimplexPoint,
    m: usize,
    scheme: RoundingScheme,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<u32>, Vec<Vec<f64>>)> {
    let nk = s.quanta.len();
    let r = s.resolution;
    let mut assign = vec![u32::MAX; m];
    let mut h = vec![vec![0.0; nk]; atoms];
    let inverse_cdf = |u: f64| {
        let target = u * r as f64;
        let mut cum = 0usize;
        for (k, &n) in s.quanta.iter().enumerate() {
            cum += n;
            if target < cum as f64 {
                return k;
            }
        }
        s.quanta.iter().rposition(|&n| n > 0).unwrap_or(0)
    };
    if m.is_multiple_of(atoms) {
        let per = m / atoms;
        for a in (0..atoms).filter(|&a| t[a]) {
            let slots = &mut assign[a * per..(a + 1) * per];
            match scheme {
                RoundingScheme::Independent => {
                    for v in slots.iter_mut() {
                        *v = inverse_cdf(rng.gen::<f64>()) as u32;
                    }
                }
                RoundingScheme::Stratified => {
                    let mut pos = 0;
                    for (k, &n) in s.quanta.iter().enumerate() {
                        if !(n * per).is_multiple_of(r) {
                            return Err(Error::Parameter(format!(
                                "stratified rounding needs {per} pieces per atom to be compatible with resolution {r}"
                            )));
                        }
                        for _ in 0..n * per / r {
                            slots[pos] = k as u32;
                            pos += 1;
                        }
                    }
                    slots.shuffle(rng);
                }
            }
            let mut counts = vec![0usize; nk];
            for &v in slots.iter() {
                counts[v as usize] += 1;
            }
            // Integer numerators keep exact zeros exact.
            for k in 0..nk {
                let num = (s.quanta[k] * per) as i64 - (counts[k] * r) as i64;
                h[a][k] = num as f64 / (r * per) as f64;
            }
        }
    } else if atoms.is_multiple_of(m) {
        if scheme == RoundingScheme::Stratified {
            return Err(Error::Parameter(
                "stratified rounding needs at least one piece per atom".into(),
            ));
        }
        let per = atoms / m;
        let w = s.weights();
        for j in 0..m {
            if !(j * per..(j + 1) * per).any(|a| t[a]) {
                continue;
            }
            let k = inverse_cdf(rng.gen::<f64>());
            assign[j] = k as u32;
            for a in (j * per..(j + 1) * per).filter(|&a| t[a]) {
                for (q, hq) in h[a].iter_mut().enumerate() {
                    *hq = w[q] - if q == k { 1.0 } else { 0.0 };
                }
            }
        }
    } else {
        return Err(Error::Parameter(format!("{m} pieces do not nest with {atoms} atoms")));
    }
    Ok((assign, h))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundingOutcome {
    pub pieces: usize,
    #[serde(skip)]
    pub assignment: Vec<u32>,
    #[serde(skip)]
    pub averages: Vec<Vec<f64>>,
    pub seminorm: f64,
    pub attempts: usize,
    pub doublings: usize,
}

fn below(value: f64, log10_budget: f64) -> bool {
    value == 0.0 || value.log10() < log10_budget
}

/// Step 5: draws vertex maps on `T` until the seminorm of `ν(T|y')s -
/// ∫_T b dν(·|y')` drops below `10^log10_budget`, doubling `M` after
/// `max_retries` failures.
#[allow(clippy::too_many_arguments)]
pub fn round_simplex(
    aux: &AuxiliaryMeasure,
    t: &[bool],
    s: &SimplexPoint,
    log10_budget: f64,
    m0: usize,
    seed: u64,
    level: u64,
    cfg: &RoundingConfig,
) -> Result<RoundingOutcome> {
    let mut m = m0.max(1);
    let mut best = f64::INFINITY;
    let mut attempts = 0;
    for doubling in 0.. {
        if m > cfg.max_pieces {
            return Err(Error::BudgetInfeasible {
                stage: "step 5 (rounding)".into(),
                best,
                target: 10f64.powf(log10_budget),
            });
        }
        for retry in 0..cfg.max_retries.max(1) {
            let mut rng = stream(seed, "round", level, ((doubling as u64) << 32) | retry as u64);
            let (assignment, averages) = round_once(aux.atoms, t, s, m, cfg.scheme, &mut rng)?;
            let sn = aux.seminorm(&averages);
            attempts += 1;
            best = best.min(sn);
            if below(sn, log10_budget) {
                return Ok(RoundingOutcome {
                    pieces: m,
                    assignment,
                    averages,
                    seminorm: sn,
                    attempts,
                    doublings: doubling,
                });
            }
        }
        m *= 2;
    }
    unreachable!()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplePurification {
    pub pure: PureStrategy,
    pub pieces: usize,
    pub attempts: usize,
    /// `‖f'' - h'‖_ν` over all level sets.
    pub seminorm: f64,
    pub levels: Vec<RoundingOutcome>,
}

/// Step 6: rounds every level set of the simple strategy `f2` with budget
/// `κ/(2q)` and assembles the pure strategy.
fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn purify_simple(
    aux: &AuxiliaryMeasure,
    f2: &MixedStrategy,
    resolution: usize,
    log10_kappa: f64,
    seed: u64,
    cfg: &RoundingConfig,
) -> Result<SimplePurification> {
    let atoms = aux.atoms;
    for &b in f2.partition() {
        if ((b * atoms as f64).round() - b * atoms as f64).abs() > 1e-9 {
            return Err(Error::Resolution(format!(
                "breakpoint {b} is not on the {atoms}-atom grid"
            )));
        }
    }
    let values = f2.distinct_values();
    let q = values.len();
    let simplex = values
        .iter()
        .map(|v| SimplexPoint::from_measure(v, &aux.k_prime, resolution))
        .collect::<Result<Vec<_>>>()?;
    let level_of: Vec<usize> = (0..atoms)
        .map(|a| {
            let v = f2.value_at((a as f64 + 0.5) / atoms as f64);
            values.iter().position(|w| *w == v).expect("value is listed")
        })
        .collect();
    let m0 = match cfg.scheme {
        RoundingScheme::Stratified => {
            let g = simplex
                .iter()
                .flat_map(|p| p.quanta.iter().copied())
                .fold(resolution, gcd);
            atoms * (resolution / g.max(1))
        }
        RoundingScheme::Independent => atoms,
    };
    let budget = log10_kappa - (2.0 * q as f64).log10();
    let levels = (0..q)
        .into_par_iter()
        .map(|j| {
            let t: Vec<bool> = level_of.iter().map(|&l| l == j).collect();
            round_simplex(aux, &t, &simplex[j], budget, m0, seed, j as u64, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let pieces = levels.iter().map(|l| l.pieces).max().unwrap_or(m0);
    let mut actions = Vec::with_capacity(pieces);
    for p in 0..pieces {
        let a = p * atoms / pieces;
        let lv = &levels[level_of[a]];
        let k = lv.assignment[p / (pieces / lv.pieces)];
        actions.push(aux.k_prime[k as usize].clone());
    }
    let mut h = vec![vec![0.0; aux.k_prime.len()]; atoms];
    for a in 0..atoms {
        h[a].clone_from(&levels[level_of[a]].averages[a]);
    }
    let seminorm = aux.seminorm(&h);
    if !below(seminorm, log10_kappa) {
        return Err(Error::BudgetInfeasible {
            stage: "step 6 (assembly)".into(),
            best: seminorm,
            target: 10f64.powf(log10_kappa),
        });
    }
    let pure = PureStrategy::new(uniform_partition(pieces), actions)?.compact();
    Ok(SimplePurification {
        pure,
        pieces,
        attempts: levels.iter().map(|l| l.attempts).sum(),
        seminorm,
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::ActionSpace;
    use crate::rng::stream;

    /// `v ≡ 1` on a uniform prior with one opponent component.
    pub(crate) fn uniform_game(res: usize) -> BinaryGame {
        BinaryGame::new(
            ActionSpace::interval(0.0, 1.0).unwrap(),
            vec![ActionSpace::interval(0.0, 1.0).unwrap()],
            res,
            res,
            vec![1.0; res * res],
            vec![Coordinate {
                label: "one".into(),
                components: vec![0],
                payoff: Arc::new(ConstantPayoff(1.0)),
                y_cells: 0..res,
            }],
            1.0,
        )
        .unwrap()
    }

    fn kp() -> Vec<Point> {
        vec![vec![0.0], vec![1.0]]
    }

    #[test]
    fn uniform_aux_normalizer() {
        let g = uniform_game(2);
        let l = vec![vec![vec![0.0], vec![0.5], vec![1.0]]];
        let aux = build_auxiliary(&g, &kp(), &l, 8, 1).unwrap();
        assert!((aux.c() - 1.0 * 2.0 * 3.0).abs() < 1e-12);
        assert!((aux.total_mass() - 1.0).abs() < 1e-12);
        for w in aux.conditional(0) {
            assert!((w - 1.0 / 8.0).abs() < 1e-15);
        }
        for (c, d) in aux.coefficients() {
            assert!((c * d - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_payoff_adds_constant() {
        let mut g = uniform_game(2);
        g.coords[0].payoff = Arc::new(ConstantPayoff(0.0));
        let aux = build_auxiliary(&g, &kp(), &[vec![vec![0.0]]], 4, 1).unwrap();
        assert!(aux.constant_added());
        assert!((aux.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partition_example() {
        let h = make_partition(&[(0.0, 1.0)], 4).unwrap();
        assert_eq!(
            h,
            vec![
                vec![(0.0, 0.25)],
                vec![(0.25, 0.5)],
                vec![(0.5, 0.75)],
                vec![(0.75, 1.0)]
            ]
        );
        assert_eq!(make_partition(&[(0.2, 0.4)], 1).unwrap(), vec![vec![(0.2, 0.4)]]);
    }

    #[test]
    fn vertex_rounds_to_itself() {
        let g = uniform_game(2);
        let aux = build_auxiliary(&g, &kp(), &[vec![vec![0.0]]], 4, 1).unwrap();
        let s = SimplexPoint::new(vec![0, 2], 2).unwrap();
        let cfg = RoundingConfig {
            scheme: RoundingScheme::Independent,
            ..Default::default()
        };
        let out = round_simplex(&aux, &[true; 4], &s, -30.0, 4, 1, 0, &cfg).unwrap();
        assert_eq!(out.seminorm, 0.0);
        assert_eq!(out.attempts, 1);
        assert!(out.assignment.iter().all(|&k| k == 1));
    }

    #[test]
    fn stratified_is_exact() {
        let g = uniform_game(2);
        let aux = build_auxiliary(&g, &kp(), &[vec![vec![0.0]]], 4, 1).unwrap();
        let s = SimplexPoint::new(vec![1, 3], 4).unwrap();
        let mut rng = stream(5, "t", 0, 0);
        let (assign, h) = round_once(4, &[true; 4], &s, 16, RoundingScheme::Stratified, &mut rng).unwrap();
        assert_eq!(aux.seminorm(&h), 0.0);
        assert_eq!(assign.iter().filter(|&&k| k == 0).count(), 4);
    }

    #[test]
    fn independent_mean_square_is_small() {
        let g = uniform_game(1);
        let aux = build_auxiliary(&g, &kp(), &[vec![vec![0.0]]], 16, 1).unwrap();
        let s = SimplexPoint::new(vec![1, 1], 2).unwrap();
        let m = 16;
        let mut acc = 0.0;
        for seed in 0..400 {
            let mut rng = stream(seed, "t", 0, 0);
            let (_, h) = round_once(16, &[true; 16], &s, m, RoundingScheme::Independent, &mut rng).unwrap();
            acc += aux.seminorm(&h).powi(2);
        }
        let mean = acc / 400.0;
        assert!((mean - 1.0 / (2.0 * m as f64)).abs() < 0.01, "{mean}");
        assert!((aux.max_piece_integral(&[true; 16], m) - 1.0 / m as f64).abs() < 1e-12);
    }

    #[test]
    fn purify_simple_keeps_pure_values() {
        let g = uniform_game(2);
        let aux = build_auxiliary(&g, &kp(), &[vec![vec![0.0]]], 4, 1).unwrap();
        let f2 = MixedStrategy::uniform(vec![
            FiniteSupportMeasure::dirac_scalar(0.0),
            FiniteSupportMeasure::dirac_scalar(1.0),
        ])
        .unwrap();
        let out = purify_simple(&aux, &f2, 2, -40.0, 3, &RoundingConfig::default()).unwrap();
        assert_eq!(out.seminorm, 0.0);
        assert_eq!(out.pure.partition(), &[0.0, 0.5, 1.0]);
    }
}
