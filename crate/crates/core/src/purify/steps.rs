//! Steps 1 to 3: simple approximation, opponent perturbation radius and the
//! opponent net.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::binary::BinaryGame;
use crate::error::{Error, Result};
use crate::game::quadrature::AxisNode;
use crate::game::Quadrature;
use crate::measures::{ActionSpace, DenseNet, FiniteSupportMeasure, Point};
use crate::strategy::{merge_partitions, simple_approximate, MixedStrategy};

/// Per-component grids used for `sup` over opponent actions.
pub fn ell_grids(components: &[ActionSpace], points: usize) -> Vec<Vec<Point>> {
    components
        .iter()
        .map(|s| {
            let step = s.diameter().max(f64::MIN_POSITIVE) / (points.max(2) - 1) as f64;
            s.grid(step)
        })
        .collect()
}

/// All combinations of one point per listed component.
pub(crate) fn grid_combos<'a>(grids: &'a [Vec<Point>], comps: &[usize]) -> Vec<Vec<&'a [f64]>> {
    let mut out: Vec<Vec<&[f64]>> = vec![Vec::new()];
    for &c in comps {
        let mut next = Vec::with_capacity(out.len() * grids[c].len());
        for prefix in &out {
            for p in &grids[c] {
                let mut l = prefix.clone();
                l.push(p.as_slice());
                next.push(l);
            }
        }
        out = next;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step1Result {
    pub strategy: MixedStrategy,
    /// Number of leading net members used.
    pub count: u128,
    pub gap: f64,
    pub k_prime: Vec<Point>,
    /// `(count, gap)` for every schedule entry tried.
    pub schedule: Vec<(u128, f64)>,
}

/// Grid estimate of `max_i ∫ sup_l |∫ v_i(k, l, x, y) d(f_x - h_x)(k)| dμ`.
pub fn simple_gap(
    game: &BinaryGame,
    f: &MixedStrategy,
    h: &MixedStrategy,
    ell: &[Vec<Point>],
    q: &Quadrature,
) -> Result<f64> {
    let common = merge_partitions(f.partition(), h.partition());
    let xs = game.x_nodes(&common, q.subdivision);
    let ys = game.y_nodes(&[0.0, 1.0], q.subdivision);
    let combos: Vec<Vec<Vec<&[f64]>>> = game.coords.iter().map(|c| grid_combos(ell, &c.components)).collect();
    let per_x: Vec<Vec<f64>> = xs
        .par_iter()
        .map(|xn| {
            let diff = signed_difference(f.value_at(xn.x), h.value_at(xn.x));
            let mut acc = vec![0.0; game.coords.len()];
            if diff.is_empty() {
                return acc;
            }
            for (c, coord) in game.coords.iter().enumerate() {
                for yn in ys.iter().filter(|yn| coord.y_cells.contains(&yn.prior_cell)) {
                    let d = game.density(xn.prior_cell, yn.prior_cell);
                    if d == 0.0 {
                        continue;
                    }
                    let sup = combos[c]
                        .iter()
                        .map(|l| {
                            diff.iter()
                                .map(|(k, w)| w * coord.payoff.eval(k, l, xn.x, yn.x))
                                .sum::<f64>()
                                .abs()
                        })
                        .fold(0.0, f64::max);
                    acc[c] += d * xn.width * yn.width * sup;
                }
            }
            acc
        })
        .collect();
    let mut tot = vec![0.0; game.coords.len()];
    for p in per_x {
        for (t, v) in tot.iter_mut().zip(p) {
            *t += v;
        }
    }
    Ok(tot.into_iter().fold(0.0, f64::max))
}

/// Atoms of `p - q` with nonzero weight.
fn signed_difference(p: &FiniteSupportMeasure, q: &FiniteSupportMeasure) -> Vec<(Point, f64)> {
    let mut out: Vec<(Point, f64)> = p.iter().map(|(k, w)| (k.clone(), w)).collect();
    for (k, w) in q.iter() {
        match out.iter_mut().find(|(a, _)| a == k) {
            Some(e) => e.1 -= w,
            None => out.push((k.clone(), -w)),
        }
    }
    out.retain(|(_, w)| *w != 0.0);
    out
}

/// Step 1: walks the prefix counts `1, 2, 4, ..., |net|` until the simple
/// approximation gap drops below `target`. A strategy already valued in the
/// net is kept as is, with the smallest prefix holding all its values.
pub fn step1_select_simple(
    game: &BinaryGame,
    f: &MixedStrategy,
    net: &DenseNet,
    target: f64,
    ell: &[Vec<Point>],
    q: &Quadrature,
) -> Result<Step1Result> {
    // Counts 1, 2, 4, ..., |net|; the full net is tried first, then the
    // smallest passing count is located by bisection over the exponents.
    let own: Option<Vec<u128>> = f.values().iter().map(|v| net.index_of(v)).collect();
    if let Some(idx) = own {
        let count = idx.iter().max().map_or(1, |m| m + 1);
        return Ok(Step1Result {
            strategy: f.clone(),
            count,
            gap: 0.0,
            k_prime: f.support_union(),
            schedule: vec![(count, 0.0)],
        });
    }
    let mut counts: Vec<u128> = Vec::new();
    let mut c: u128 = 1;
    while c < net.len() {
        counts.push(c);
        c = c.saturating_mul(2);
    }
    counts.push(net.len());
    let mut evaluated: Vec<(u128, f64, MixedStrategy)> = Vec::new();
    let mut eval = |count: u128| -> Result<(f64, MixedStrategy)> {
        let approx = simple_approximate(f, net, count)?;
        if let Some(e) = evaluated.iter().find(|e| e.2 == approx.strategy) {
            let gap = e.1;
            evaluated.push((count, gap, approx.strategy.clone()));
            return Ok((gap, approx.strategy));
        }
        let gap = simple_gap(game, f, &approx.strategy, ell, q)?;
        evaluated.push((count, gap, approx.strategy.clone()));
        Ok((gap, approx.strategy))
    };
    let last = counts.len() - 1;
    let (gap, strategy) = eval(counts[last])?;
    if gap >= target {
        return Err(Error::BudgetInfeasible {
            stage: "step 1 (simple approximation)".into(),
            best: gap,
            target,
        });
    }
    let mut best = (last, gap, strategy);
    let (mut lo, mut hi) = (0usize, last);
    while lo < hi {
        let mid = (lo + hi) / 2;
        let (gap, strategy) = eval(counts[mid])?;
        if gap < target {
            best = (mid, gap, strategy);
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let mut schedule: Vec<(u128, f64)> = evaluated.iter().map(|e| (e.0, e.1)).collect();
    schedule.sort_by_key(|e| e.0);
    let (idx, gap, strategy) = best;
    let k_prime = strategy.support_union();
    Ok(Step1Result {
        strategy,
        count: counts[idx],
        gap,
        k_prime,
        schedule,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaResult {
    pub delta: f64,
    /// `(delta, integrated perturbation bound)` per tested radius.
    pub tested: Vec<(f64, f64)>,
    /// Radius from a user-supplied Lipschitz constant, when given.
    pub analytic: Option<f64>,
}

/// Tested radii `D, D/2, ..., D/2^(levels-1)` with `D` the opponent diameter.
pub fn delta_candidates(components: &[ActionSpace], levels: usize) -> Vec<f64> {
    let mut d = components.iter().map(|s| s.diameter()).fold(0.0, f64::max);
    if d <= 0.0 {
        d = 1.0;
    }
    (0..levels).map(|j| d / 2f64.powi(j as i32)).collect()
}

/// Minimum and maximum of `v` over each point's neighborhood box; `v` is
/// laid out with the last axis fastest.
fn box_extrema(v: &[f64], dims: &[usize], nbrs: &[Vec<Vec<usize>>]) -> (Vec<f64>, Vec<f64>) {
    let mut lo = v.to_vec();
    let mut hi = v.to_vec();
    let mut stride = 1;
    for ax in (0..dims.len()).rev() {
        let n = dims[ax];
        let (plo, phi) = (lo.clone(), hi.clone());
        for a in 0..v.len() {
            let i = (a / stride) % n;
            let base = a - i * stride;
            let (mut mn, mut mx) = (f64::INFINITY, f64::NEG_INFINITY);
            for &b in &nbrs[ax][i] {
                mn = mn.min(plo[base + b * stride]);
                mx = mx.max(phi[base + b * stride]);
            }
            lo[a] = mn;
            hi[a] = mx;
        }
        stride *= n;
    }
    (lo, hi)
}

/// Step 2: sampled modulus of continuity of `P -> (∫ v_i(k, ., x, y) dP)_k`.
///
/// For each node and grid point `a` the pairs `(δ_a, (1-t)δ_a' + tδ_b)` with
/// `d(a, a') < δ`, `t < δ` and `b` anywhere on the grid lie within Prohorov
/// distance `δ`; the worst payoff change over `k ∈ K'` is integrated
/// against the prior. The largest radius whose bound stays below `target`
/// for every coordinate is halved and returned.
pub fn step2_delta(
    game: &BinaryGame,
    k_prime: &[Point],
    target: f64,
    ell: &[Vec<Point>],
    levels: usize,
    q: &Quadrature,
) -> Result<DeltaResult> {
    if k_prime.is_empty() {
        return Err(Error::Parameter("K' must be nonempty".into()));
    }
    let cands = delta_candidates(&game.components, levels);
    let xs = game.x_nodes(&[0.0, 1.0], q.subdivision);
    let ys = game.y_nodes(&[0.0, 1.0], q.subdivision);
    // Per coordinate, candidate and component axis: grid neighbors within
    // 0.99 δ. The product metric makes each neighborhood a box of the grid.
    let combos: Vec<Vec<Vec<&[f64]>>> = game.coords.iter().map(|c| grid_combos(ell, &c.components)).collect();
    let neighbors: Vec<Vec<Vec<Vec<Vec<usize>>>>> = game
        .coords
        .iter()
        .map(|coord| {
            cands
                .iter()
                .map(|&delta| {
                    coord
                        .components
                        .iter()
                        .map(|&j| {
                            let g = &ell[j];
                            (0..g.len())
                                .map(|a| {
                                    (0..g.len())
                                        .filter(|&b| game.components[j].dist(&g[a], &g[b]) < 0.99 * delta)
                                        .collect()
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let dims: Vec<Vec<usize>> = game
        .coords
        .iter()
        .map(|c| c.components.iter().map(|&j| ell[j].len()).collect())
        .collect();
    let nc = game.coords.len();
    let nl = cands.len();
    let nodes: Vec<(&AxisNode, &AxisNode)> = xs.iter().flat_map(|x| ys.iter().map(move |y| (x, y))).collect();
    let partial: Vec<Vec<f64>> = nodes
        .par_iter()
        .map(|(xn, yn)| {
            let mut acc = vec![0.0; nc * nl];
            let dens = game.density(xn.prior_cell, yn.prior_cell);
            if dens == 0.0 {
                return acc;
            }
            let vol = dens * xn.width * yn.width;
            for (c, coord) in game.coords.iter().enumerate() {
                if !coord.y_cells.contains(&yn.prior_cell) {
                    continue;
                }
                let mut worst = vec![0.0f64; nl];
                let mut v = vec![0.0; combos[c].len()];
                for k in k_prime {
                    for (a, l) in combos[c].iter().enumerate() {
                        v[a] = coord.payoff.eval(k, l, xn.x, yn.x);
                    }
                    let vmax = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let vmin = v.iter().copied().fold(f64::INFINITY, f64::min);
                    if vmax == vmin {
                        continue;
                    }
                    for (j, &delta) in cands.iter().enumerate() {
                        let t = (0.99 * delta).min(1.0);
                        let (lo, hi) = box_extrema(&v, &dims[c], &neighbors[c][j]);
                        let mut w = worst[j];
                        for (a, &va) in v.iter().enumerate() {
                            // Mass t moved anywhere, rest kept in place.
                            w = w.max(t * (va - vmin).abs()).max(t * (va - vmax).abs());
                            // Rest shifted to a neighbor: convex in the neighbor's
                            // value, so the box extremes are the worst cases.
                            for vb in [lo[a], hi[a]] {
                                let shift = va - vb;
                                w = w
                                    .max(shift.abs())
                                    .max(((1.0 - t) * shift + t * (va - vmin)).abs())
                                    .max(((1.0 - t) * shift + t * (va - vmax)).abs());
                            }
                        }
                        worst[j] = w;
                    }
                }
                for j in 0..nl {
                    acc[c * nl + j] += vol * worst[j];
                }
            }
            acc
        })
        .collect();
    let mut bound = vec![0.0; nc * nl];
    for p in partial {
        for (b, v) in bound.iter_mut().zip(p) {
            *b += v;
        }
    }
    let tested: Vec<(f64, f64)> = (0..nl)
        .map(|j| (cands[j], (0..nc).map(|c| bound[c * nl + j]).fold(0.0, f64::max)))
        .collect();
    match tested.iter().find(|(_, b)| *b < target) {
        Some(&(d, _)) => Ok(DeltaResult {
            delta: 0.5 * d,
            tested,
            analytic: None,
        }),
        None => Err(Error::BudgetInfeasible {
            stage: "step 2 (perturbation radius)".into(),
            best: tested.last().map(|t| t.1).unwrap_or(f64::INFINITY),
            target,
        }),
    }
}

/// Sufficient radius for payoffs `Λ`-Lipschitz in the opponent action and
/// bounded by `B`: moving mass `t < δ` by less than `δ` changes the payoff
/// by less than `(Λ + 2B) δ`.
pub fn analytic_delta(target: f64, lipschitz: f64, bound: f64) -> f64 {
    target / (lipschitz + 2.0 * bound)
}

#[derive(Clone, Debug)]
pub struct OpponentNet {
    /// `L'`: grid of mesh `δ/2` (product of per-component grids); empty
    /// when larger than `MAX_NET_POINTS`.
    pub points: Vec<Point>,
    pub log10_points: f64,
    pub component_grids: Vec<Vec<Point>>,
    /// Weight resolution `ceil(2/δ)`.
    pub resolution: usize,
    /// The net over `L'`; absent when its size overflows the index type.
    pub net: Option<DenseNet>,
    pub log10_len: f64,
}

fn log10_binomial(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (0..k)
        .map(|i| ((n - i) as f64).log10() - ((i + 1) as f64).log10())
        .sum()
}

const MAX_NET_POINTS: usize = 1 << 20;

/// Step 3: the finite set `L'` and the net `{Q_j}` over it.
pub fn step3_opponent_net(components: &[ActionSpace], delta: f64) -> Result<OpponentNet> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Parameter(format!("delta must be positive, got {delta}")));
    }
    let component_grids: Vec<Vec<Point>> = components
        .iter()
        .map(|s| {
            if delta / 2.0 >= s.diameter() {
                vec![s.grid(s.diameter().max(1.0))[0].clone()]
            } else {
                s.grid(delta / 2.0)
            }
        })
        .collect();
    let log10_points: f64 = component_grids.iter().map(|g| (g.len() as f64).log10()).sum();
    let mut points: Vec<Point> = vec![Vec::new()];
    let materialize = log10_points <= (MAX_NET_POINTS as f64).log10();
    for g in component_grids.iter().filter(|_| materialize) {
        points = points
            .iter()
            .flat_map(|p| {
                g.iter().map(move |q| {
                    let mut v = p.clone();
                    v.extend_from_slice(q);
                    v
                })
            })
            .collect();
    }
    let resolution = (2.0 / delta - 1e-9).ceil().max(1.0) as usize;
    let space = if components.len() == 1 {
        components[0].clone()
    } else {
        ActionSpace::product(components.to_vec())?
    };
    let log10_len = if materialize {
        let n = points.len() as u64;
        log10_binomial(n + resolution as u64 - 1, resolution as u64)
    } else {
        // log10 C(n + r - 1, r) with n = 10^log10_points.
        points.clear();
        let n = 10f64.powf(log10_points);
        (1..=resolution)
            .map(|i| ((n - 1.0 + i as f64) / i as f64).log10())
            .sum()
    };
    let net = if log10_len < 38.0 {
        Some(DenseNet::from_grid(&space, points.clone(), resolution)?)
    } else {
        None
    };
    Ok(OpponentNet {
        points,
        log10_points,
        component_grids,
        resolution,
        net,
        log10_len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::prohorov_distance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn box_extrema_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dims = [4usize, 5, 3];
        let n: usize = dims.iter().product();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let radius = [1usize, 2, 0];
        let nbrs: Vec<Vec<Vec<usize>>> = dims
            .iter()
            .zip(radius)
            .map(|(&d, r)| {
                (0..d)
                    .map(|i| (0..d).filter(|&b| b.abs_diff(i) <= r).collect())
                    .collect()
            })
            .collect();
        let (lo, hi) = box_extrema(&v, &dims, &nbrs);
        let idx = |a: usize| [a / 15, (a / 3) % 5, a % 3];
        for a in 0..n {
            let ia = idx(a);
            let inside: Vec<f64> = (0..n)
                .filter(|&b| (0..3).all(|ax| idx(b)[ax].abs_diff(ia[ax]) <= radius[ax]))
                .map(|b| v[b])
                .collect();
            assert_eq!(lo[a], inside.iter().copied().fold(f64::INFINITY, f64::min));
            assert_eq!(hi[a], inside.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        }
    }

    #[test]
    fn two_point_space_keeps_all_points() {
        let l = ActionSpace::finite_on_line(vec![0.0, 1.0]).unwrap();
        let n = step3_opponent_net(&[l], 0.6).unwrap();
        assert_eq!(n.points, vec![vec![0.0], vec![1.0]]);
        assert_eq!(n.resolution, 4);
        assert_eq!(n.net.unwrap().len(), 5);
    }

    #[test]
    fn large_delta_degenerates() {
        let l = ActionSpace::interval(0.0, 1.0).unwrap();
        let n = step3_opponent_net(&[l], 2.5).unwrap();
        assert_eq!(n.points.len(), 1);
        assert_eq!(n.net.unwrap().len(), 1);
    }

    #[test]
    fn net_covers_random_measures() {
        let l = ActionSpace::interval(0.0, 1.0).unwrap();
        let delta = 0.3;
        let n = step3_opponent_net(std::slice::from_ref(&l), delta).unwrap();
        let net = n.net.unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let k = rng.gen_range(1..=4);
            let pts: Vec<f64> = (0..k).map(|_| rng.gen()).collect();
            let mut w: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() + 0.01).collect();
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= s);
            let p = FiniteSupportMeasure::from_scalars(&pts, &w).unwrap();
            let (idx, d) = net.first_within(&p, delta).unwrap().expect("covered");
            let q = net.member(idx).unwrap().measure;
            assert!(d < delta);
            assert!((prohorov_distance(&p, &q, &l, 1e-9).unwrap() - d).abs() < 1e-9);
        }
    }

    #[test]
    fn signed_difference_cancels() {
        let p = FiniteSupportMeasure::from_scalars(&[0.0, 1.0], &[0.5, 0.5]).unwrap();
        let d = signed_difference(&p, &p);
        assert!(d.is_empty());
    }
}
