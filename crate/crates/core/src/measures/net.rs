//! Dense finite nets of probability measures.
//!
//! A member of `DenseNet` with weight resolution `r` on a grid of `G` points
//! is a multiset of `r` grid indices (each carrying mass `1/r`), stored as a
//! nondecreasing index vector. Members are ordered lexicographically by that
//! vector, which is the order used for every min-index rule. The net is never
//! materialized: members are ranked and unranked combinatorially.

use std::cmp::Ordering;

use super::prohorov::{breakpoint_infimum, FlowGraph};
use super::{ActionSpace, FiniteSupportMeasure, Point};
use crate::error::{Error, Result};

/// Zero-based position of a member in the enumeration order.
pub type NetIndex = u128;

/// Distances closer than this are treated as ties (lower index wins).
const TIE_TOL: f64 = 1e-12;

/// Below this prefix length the nearest-member search scans linearly.
const SCAN_LIMIT: u128 = 512;

#[derive(Clone, Debug, PartialEq)]
pub struct NetMember {
    pub index: NetIndex,
    /// Nondecreasing grid indices, one per quantum of mass `1/r`.
    pub quanta: Vec<usize>,
    pub measure: FiniteSupportMeasure,
}

#[derive(Clone, Debug)]
pub struct DenseNet {
    space: ActionSpace,
    grid_step: f64,
    resolution: usize,
    grid: Vec<Point>,
    len: u128,
}

/// `C(n, k)` or `None` on overflow.
fn binomial(n: u128, k: u128) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 1..=k {
        // c * (n - k + i) is divisible by i after the multiplication.
        c = c.checked_mul(n - k + i)? / i;
    }
    Some(c)
}

impl DenseNet {
    /// Net on the grid of mesh `grid_step` with weights in multiples of
    /// `1 / resolution`.
    pub fn new(space: &ActionSpace, grid_step: f64, resolution: usize) -> Result<Self> {
        if !(grid_step > 0.0 && grid_step.is_finite()) {
            return Err(Error::Parameter(format!("grid step must be positive, got {grid_step}")));
        }
        let diameter = space.diameter();
        if grid_step > diameter && diameter > 0.0 {
            return Err(Error::Parameter(format!(
                "grid step {grid_step} exceeds the action space diameter {diameter}"
            )));
        }
        let grid = space.grid(grid_step);
        let mut net = Self::from_grid(space, grid, resolution)?;
        net.grid_step = grid_step;
        Ok(net)
    }

    /// Net on an explicit support grid.
    pub fn from_grid(space: &ActionSpace, grid: Vec<Point>, resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::Parameter("weight resolution must be at least 1".into()));
        }
        if grid.is_empty() {
            return Err(Error::Parameter("net grid is empty".into()));
        }
        if let Some(p) = grid.iter().find(|p| !space.contains(p)) {
            return Err(Error::Parameter(format!(
                "grid point {p:?} is outside the action space"
            )));
        }
        let g = grid.len() as u128;
        let r = resolution as u128;
        let len = binomial(g + r - 1, r).ok_or_else(|| {
            Error::Size(format!(
                "net with {g} grid points and resolution {r} is too large to index"
            ))
        })?;
        let grid_step = grid_mesh(space, &grid);
        Ok(Self {
            space: space.clone(),
            grid_step,
            resolution,
            grid,
            len,
        })
    }

    pub fn len(&self) -> u128 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn grid(&self) -> &[Point] {
        &self.grid
    }

    pub fn grid_step(&self) -> f64 {
        self.grid_step
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn space(&self) -> &ActionSpace {
        &self.space
    }

    /// Documented covering radius `grid_step + 1/resolution`.
    pub fn covering_radius(&self) -> f64 {
        self.grid_step + 1.0 / self.resolution as f64
    }

    /// Number of nondecreasing index sequences of length `len` with entries
    /// in `[from, G)`.
    fn count(&self, len: usize, from: usize) -> u128 {
        let g = self.grid.len();
        if from >= g {
            return u128::from(len == 0);
        }
        // Bounded by the full net size, which fit at construction.
        binomial((g - from + len - 1) as u128, len as u128).expect("count bounded by net size")
    }

    pub fn rank(&self, quanta: &[usize]) -> Result<NetIndex> {
        self.check_quanta(quanta)?;
        let r = self.resolution;
        let mut rank = 0u128;
        let mut prev = 0usize;
        for (t, &q) in quanta.iter().enumerate() {
            for v in prev..q {
                rank += self.count(r - t - 1, v);
            }
            prev = q;
        }
        Ok(rank)
    }

    pub fn unrank(&self, mut index: NetIndex) -> Result<Vec<usize>> {
        if index >= self.len {
            return Err(Error::Parameter(format!(
                "net index {index} out of range (net has {} members)",
                self.len
            )));
        }
        let r = self.resolution;
        let mut quanta = Vec::with_capacity(r);
        let mut v = 0usize;
        for t in 0..r {
            loop {
                let c = self.count(r - t - 1, v);
                if index < c {
                    break;
                }
                index -= c;
                v += 1;
            }
            quanta.push(v);
        }
        Ok(quanta)
    }

    fn check_quanta(&self, quanta: &[usize]) -> Result<()> {
        if quanta.len() != self.resolution
            || quanta.windows(2).any(|w| w[0] > w[1])
            || quanta.iter().any(|&q| q >= self.grid.len())
        {
            return Err(Error::Parameter(format!("{quanta:?} is not a member of this net")));
        }
        Ok(())
    }

    pub fn measure_of(&self, quanta: &[usize]) -> FiniteSupportMeasure {
        let r = self.resolution as f64;
        let mut support = Vec::new();
        let mut weights = Vec::new();
        let mut i = 0;
        while i < quanta.len() {
            let mut j = i;
            while j < quanta.len() && quanta[j] == quanta[i] {
                j += 1;
            }
            support.push(self.grid[quanta[i]].clone());
            weights.push((j - i) as f64 / r);
            i = j;
        }
        FiniteSupportMeasure::new(support, weights).expect("net members are valid measures")
    }

    pub fn member(&self, index: NetIndex) -> Result<NetMember> {
        let quanta = self.unrank(index)?;
        Ok(NetMember {
            index,
            measure: self.measure_of(&quanta),
            quanta,
        })
    }

    /// Members in enumeration order. Only sensible for small nets.
    pub fn members(&self) -> impl Iterator<Item = NetMember> + '_ {
        let mut next = Some(vec![0usize; self.resolution]);
        let mut index = 0u128;
        std::iter::from_fn(move || {
            let quanta = next.take()?;
            next = successor(&quanta, self.grid.len());
            let m = NetMember {
                index,
                measure: self.measure_of(&quanta),
                quanta,
            };
            index += 1;
            Some(m)
        })
    }

    /// Index of `m` if it is exactly a member of the net.
    pub fn index_of(&self, m: &FiniteSupportMeasure) -> Option<NetIndex> {
        let r = self.resolution as f64;
        let mut quanta = Vec::with_capacity(self.resolution);
        for (p, w) in m.iter() {
            let g = self.grid.iter().position(|q| self.space.dist(p, q) <= 1e-12)?;
            let c = (w * r).round();
            if (w * r - c).abs() > 1e-9 {
                return None;
            }
            quanta.extend(std::iter::repeat_n(g, c as usize));
        }
        quanta.sort_unstable();
        self.rank(&quanta).ok()
    }

    /// A nearby member: atoms move to their nearest grid point, then the
    /// cumulative mass in grid order is rounded to multiples of `1/r`.
    pub fn project(&self, p: &FiniteSupportMeasure) -> NetMember {
        let mut mass = vec![0.0; self.grid.len()];
        for (x, w) in p.iter() {
            mass[self.space.nearest_grid_index(&self.grid, x)] += w;
        }
        let r = self.resolution;
        let mut quanta = Vec::with_capacity(r);
        let mut cum = 0.0;
        let mut placed = 0usize;
        for (g, &w) in mass.iter().enumerate() {
            cum += w;
            let target = ((cum * r as f64).round() as usize).min(r);
            while placed < target {
                quanta.push(g);
                placed += 1;
            }
        }
        while placed < r {
            quanta.push(self.grid.len() - 1);
            placed += 1;
        }
        let index = self.rank(&quanta).expect("projection is a member");
        NetMember {
            index,
            measure: self.measure_of(&quanta),
            quanta,
        }
    }

    /// Among the first `count` members, the lowest-index member closest to
    /// `p` in the Prohorov metric, with its distance.
    pub fn nearest(&self, p: &FiniteSupportMeasure, count: u128) -> Result<(NetIndex, f64)> {
        self.check_count(count)?;
        p.validate_on(&self.space)?;
        if count <= SCAN_LIMIT {
            return self.nearest_by_scan(p, count);
        }
        let bounder = Bounder::new(self, p);
        let proj = self.project(p);
        let mut best = if proj.index < count {
            (bounder.bound(&proj.quanta), proj.index)
        } else {
            (f64::INFINITY, u128::MAX)
        };
        let mut prefix = Vec::with_capacity(self.resolution);
        self.search_nearest(&bounder, &mut prefix, 0, count, &mut best);
        Ok((best.1, best.0))
    }

    /// Reference implementation of [`DenseNet::nearest`] by linear scan.
    pub fn nearest_by_scan(&self, p: &FiniteSupportMeasure, count: u128) -> Result<(NetIndex, f64)> {
        self.check_count(count)?;
        let bounder = Bounder::new(self, p);
        let mut best = (f64::INFINITY, 0u128);
        let mut quanta = Some(vec![0usize; self.resolution]);
        let mut index = 0u128;
        while let Some(q) = quanta {
            if index >= count {
                break;
            }
            let d = bounder.bound(&q);
            if d < best.0 - TIE_TOL {
                best = (d, index);
            }
            quanta = successor(&q, self.grid.len());
            index += 1;
        }
        Ok((best.1, best.0))
    }

    /// Lowest index `j` with `rho(p, Q_j) < delta`, if any.
    pub fn first_within(&self, p: &FiniteSupportMeasure, delta: f64) -> Result<Option<(NetIndex, f64)>> {
        p.validate_on(&self.space)?;
        let bounder = Bounder::new(self, p);
        let mut prefix = Vec::with_capacity(self.resolution);
        Ok(self.search_first(&bounder, &mut prefix, 0, delta))
    }

    fn check_count(&self, count: u128) -> Result<()> {
        if count == 0 || count > self.len {
            return Err(Error::Parameter(format!(
                "member count {count} outside 1..={}",
                self.len
            )));
        }
        Ok(())
    }

    fn search_nearest(&self, b: &Bounder, prefix: &mut Vec<usize>, start: u128, limit: u128, best: &mut (f64, u128)) {
        let t = prefix.len();
        if t == self.resolution {
            let d = b.bound(prefix);
            if d < best.0 - TIE_TOL || (d <= best.0 + TIE_TOL && start < best.1) {
                *best = (d, start);
            }
            return;
        }
        let first = prefix.last().copied().unwrap_or(0);
        let mut children = Vec::new();
        let mut child_start = start;
        for v in first..self.grid.len() {
            if child_start >= limit {
                break;
            }
            prefix.push(v);
            children.push((b.bound(prefix), v, child_start));
            prefix.pop();
            child_start += self.count(self.resolution - t - 1, v);
        }
        children.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(Ordering::Equal).then(x.1.cmp(&y.1)));
        for (lb, v, cs) in children {
            if lb > best.0 + TIE_TOL {
                break;
            }
            if lb >= best.0 - TIE_TOL && cs >= best.1 {
                continue;
            }
            prefix.push(v);
            self.search_nearest(b, prefix, cs, limit, best);
            prefix.pop();
        }
    }

    fn search_first(&self, b: &Bounder, prefix: &mut Vec<usize>, start: u128, delta: f64) -> Option<(NetIndex, f64)> {
        let t = prefix.len();
        if t == self.resolution {
            let d = b.bound(prefix);
            return (d < delta).then_some((start, d));
        }
        let first = prefix.last().copied().unwrap_or(0);
        let mut child_start = start;
        for v in first..self.grid.len() {
            prefix.push(v);
            if b.bound(prefix) < delta {
                if let Some(hit) = self.search_first(b, prefix, child_start, delta) {
                    prefix.pop();
                    return Some(hit);
                }
            }
            prefix.pop();
            child_start += self.count(self.resolution - t - 1, v);
        }
        None
    }
}

/// Next nondecreasing sequence in lexicographic order.
fn successor(q: &[usize], g: usize) -> Option<Vec<usize>> {
    let t = q.iter().rposition(|&v| v + 1 < g)?;
    let mut next = q.to_vec();
    let v = q[t] + 1;
    next[t..].iter_mut().for_each(|x| *x = v);
    Some(next)
}

/// Largest nearest-neighbour gap of a grid, used as its mesh.
fn grid_mesh(space: &ActionSpace, grid: &[Point]) -> f64 {
    if grid.len() < 2 {
        return space.diameter();
    }
    grid.iter()
        .enumerate()
        .map(|(i, p)| {
            grid.iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| space.dist(p, q))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Lower bounds on the Prohorov distance from a fixed measure `P` to all
/// members extending a quanta prefix. Unplaced mass is a fractional pool
/// that may sit on any grid index at or after the last placed one; on a
/// complete member the bound is the exact distance.
struct Bounder {
    weights: Vec<f64>,
    /// `dist[a][g]`: distance from atom `a` of `P` to grid point `g`.
    dist: Vec<Vec<f64>>,
    /// `tail[a][g] = min_{h >= g} dist[a][h]`.
    tail: Vec<Vec<f64>>,
    resolution: usize,
}

impl Bounder {
    fn new(net: &DenseNet, p: &FiniteSupportMeasure) -> Self {
        let dist: Vec<Vec<f64>> = p
            .support()
            .iter()
            .map(|x| net.grid.iter().map(|g| net.space.dist(x, g)).collect())
            .collect();
        let tail = dist
            .iter()
            .map(|row| {
                let mut t = row.clone();
                for g in (0..t.len().saturating_sub(1)).rev() {
                    t[g] = t[g].min(t[g + 1]);
                }
                t
            })
            .collect();
        Self {
            weights: p.weights().to_vec(),
            dist,
            tail,
            resolution: net.resolution,
        }
    }

    fn bound(&self, prefix: &[usize]) -> f64 {
        let r = self.resolution as f64;
        let mut nodes: Vec<(usize, f64)> = Vec::new();
        for &q in prefix {
            match nodes.last_mut() {
                Some((g, w)) if *g == q => *w += 1.0 / r,
                _ => nodes.push((q, 1.0 / r)),
            }
        }
        let pool = (self.resolution - prefix.len()) as f64 / r;
        let pool_from = prefix.last().copied().unwrap_or(0);
        let na = self.weights.len();
        let mut thresholds = vec![0.0];
        for a in 0..na {
            thresholds.extend(nodes.iter().map(|(g, _)| self.dist[a][*g]));
            if pool > 0.0 {
                thresholds.push(self.tail[a][pool_from]);
            }
        }
        thresholds.sort_by(|x, y| x.partial_cmp(y).unwrap());
        thresholds.dedup();
        let nq = nodes.len() + usize::from(pool > 0.0);
        breakpoint_infimum(&thresholds, |j| {
            let thr = thresholds[j];
            let s = na + nq;
            let t = s + 1;
            let mut graph = FlowGraph::new(na + nq + 2);
            for (a, &w) in self.weights.iter().enumerate() {
                graph.add_edge(s, a, w);
            }
            for (k, (g, w)) in nodes.iter().enumerate() {
                graph.add_edge(na + k, t, *w);
                for a in 0..na {
                    if self.dist[a][*g] <= thr {
                        graph.add_edge(a, na + k, f64::INFINITY);
                    }
                }
            }
            if pool > 0.0 {
                let k = na + nodes.len();
                graph.add_edge(k, t, pool);
                for a in 0..na {
                    if self.tail[a][pool_from] <= thr {
                        graph.add_edge(a, k, f64::INFINITY);
                    }
                }
            }
            1.0 - graph.max_flow(s, t)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::prohorov_distance;
    use super::*;

    fn unit() -> ActionSpace {
        ActionSpace::interval(0.0, 1.0).unwrap()
    }

    #[test]
    fn two_point_space_resolution_two() {
        let s = ActionSpace::finite_on_line(vec![0.0, 1.0]).unwrap();
        let net = DenseNet::new(&s, 1.0, 2).unwrap();
        let w: Vec<Vec<f64>> = net
            .members()
            .map(|m| vec![m.measure.weight_of(&[0.0]), m.measure.weight_of(&[1.0])])
            .collect();
        assert_eq!(w, vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, 1.0]]);
        assert_eq!(net.len(), 3);
    }

    #[test]
    fn interval_step_half_resolution_one() {
        let net = DenseNet::new(&unit(), 0.5, 1).unwrap();
        let supports: Vec<f64> = net.members().map(|m| m.measure.support()[0][0]).collect();
        assert_eq!(supports, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn rank_and_unrank_are_inverse() {
        let net = DenseNet::new(&unit(), 0.25, 4).unwrap();
        for (i, m) in net.members().enumerate() {
            assert_eq!(net.rank(&m.quanta).unwrap(), i as u128);
            assert_eq!(net.unrank(i as u128).unwrap(), m.quanta);
        }
        assert_eq!(net.members().count() as u128, net.len());
    }

    #[test]
    fn large_net_is_indexed_lazily() {
        let net = DenseNet::new(&unit(), 0.05, 20).unwrap();
        assert_eq!(net.len(), binomial(40, 20).unwrap());
        let last = net.member(net.len() - 1).unwrap();
        assert_eq!(last.measure.support(), &[vec![1.0]]);
    }

    #[test]
    fn rejects_step_beyond_diameter() {
        assert!(DenseNet::new(&unit(), 1.5, 2).is_err());
        assert!(DenseNet::new(&unit(), 0.5, 0).is_err());
    }

    #[test]
    fn member_found_at_its_own_index() {
        let net = DenseNet::new(&unit(), 0.25, 3).unwrap();
        let m = net.member(7).unwrap();
        assert_eq!(net.nearest(&m.measure, net.len()).unwrap(), (7, 0.0));
        assert_eq!(net.index_of(&m.measure), Some(7));
        assert_eq!(net.project(&m.measure).index, 7);
    }

    #[test]
    fn branch_and_bound_matches_scan() {
        let net = DenseNet::new(&unit(), 0.25, 6).unwrap();
        let p = FiniteSupportMeasure::from_scalars(&[0.1, 0.62, 0.9], &[0.3, 0.5, 0.2]).unwrap();
        for count in [1, 5, 40, 200, net.len()] {
            let scan = net.nearest_by_scan(&p, count).unwrap();
            let mut best = (f64::INFINITY, u128::MAX);
            let b = Bounder::new(&net, &p);
            net.search_nearest(&b, &mut Vec::new(), 0, count, &mut best);
            assert_eq!((best.1, best.0), scan, "count {count}");
        }
    }

    #[test]
    fn first_within_matches_scan() {
        let net = DenseNet::new(&unit(), 0.25, 4).unwrap();
        let p = FiniteSupportMeasure::from_scalars(&[0.3, 0.8], &[0.5, 0.5]).unwrap();
        let expect = net
            .members()
            .map(|m| (m.index, prohorov_distance(&p, &m.measure, &unit(), 1e-9).unwrap()))
            .find(|(_, d)| *d < 0.2);
        let got = net.first_within(&p, 0.2).unwrap();
        assert_eq!(got.map(|x| x.0), expect.map(|x| x.0));
    }
}
