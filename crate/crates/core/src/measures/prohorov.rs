//! The Prohorov metric between finite-support measures.
//!
//! `rho(P, Q) = inf { e > 0 : P(A) <= Q(A^e) + e for all A }` with the open
//! fattening `A^e = { y : d(x, y) < e for some x in A }`. For finite supports
//! the condition at a fixed `e` is a transport feasibility question: by the
//! defect form of Hall's theorem, the largest mass that can be moved from `P`
//! to `Q` along pairs with `d < e` equals `1 - max_A (P(A) - Q(A^e))`. The
//! solver answers it with a max-flow on the bipartite support graph; the
//! oracle enumerates subsets directly.

use super::{ActionSpace, FiniteSupportMeasure};
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-9;

/// Largest combined support size accepted by [`prohorov_oracle`].
pub const ORACLE_MAX_SUPPORT: usize = 16;

/// Combined support size up to which the exact breakpoint search is used.
const EXACT_MAX_SUPPORT: usize = 32;

/// Mass defects below this are rounding noise (weights sum to one within 1e-12).
const DEFECT_SNAP: f64 = 1e-12;

const FLOW_EPS: f64 = 1e-15;

/// Small max-flow solver (Edmonds-Karp) over `f64` capacities.
#[derive(Clone, Debug)]
pub(crate) struct FlowGraph {
    head: Vec<usize>,
    to: Vec<usize>,
    cap: Vec<f64>,
    next: Vec<usize>,
}

const NIL: usize = usize::MAX;

impl FlowGraph {
    pub(crate) fn new(nodes: usize) -> Self {
        Self {
            head: vec![NIL; nodes],
            to: Vec::new(),
            cap: Vec::new(),
            next: Vec::new(),
        }
    }

    pub(crate) fn add_edge(&mut self, u: usize, v: usize, cap: f64) {
        for (a, b, c) in [(u, v, cap), (v, u, 0.0)] {
            self.to.push(b);
            self.cap.push(c);
            self.next.push(self.head[a]);
            self.head[a] = self.to.len() - 1;
        }
    }

    pub(crate) fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let n = self.head.len();
        let mut total = 0.0;
        let mut parent_edge = vec![NIL; n];
        let mut queue = Vec::with_capacity(n);
        loop {
            parent_edge.iter_mut().for_each(|e| *e = NIL);
            queue.clear();
            queue.push(s);
            let mut qi = 0;
            let mut reached = false;
            while qi < queue.len() && !reached {
                let u = queue[qi];
                qi += 1;
                let mut e = self.head[u];
                while e != NIL {
                    let v = self.to[e];
                    if v != s && parent_edge[v] == NIL && self.cap[e] > FLOW_EPS {
                        parent_edge[v] = e;
                        if v == t {
                            reached = true;
                            break;
                        }
                        queue.push(v);
                    }
                    e = self.next[e];
                }
            }
            if !reached {
                return total;
            }
            let mut push = f64::INFINITY;
            let mut v = t;
            while v != s {
                let e = parent_edge[v];
                push = push.min(self.cap[e]);
                v = self.to[e ^ 1];
            }
            let mut v = t;
            while v != s {
                let e = parent_edge[v];
                self.cap[e] -= push;
                self.cap[e ^ 1] += push;
                v = self.to[e ^ 1];
            }
            total += push;
        }
    }
}

/// Pairwise distance matrix between the supports of `p` and `q`.
fn distance_matrix(p: &FiniteSupportMeasure, q: &FiniteSupportMeasure, space: &ActionSpace) -> Vec<Vec<f64>> {
    p.support()
        .iter()
        .map(|a| q.support().iter().map(|b| space.dist(a, b)).collect())
        .collect()
}

/// Sorted distinct thresholds `0 = D_0 < D_1 < ...` taken from the matrix.
fn thresholds(dist: &[Vec<f64>]) -> Vec<f64> {
    let mut t: Vec<f64> = dist.iter().flat_map(|r| r.iter().copied()).collect();
    t.push(0.0);
    t.sort_by(|a, b| a.partial_cmp(b).unwrap());
    t.dedup();
    t
}

/// Largest mass movable from `p` to `q` along pairs allowed by `edge`.
fn matched_mass(pw: &[f64], qw: &[f64], edge: impl Fn(usize, usize) -> bool) -> f64 {
    let (np, nq) = (pw.len(), qw.len());
    let s = np + nq;
    let t = s + 1;
    let mut g = FlowGraph::new(np + nq + 2);
    for (i, &w) in pw.iter().enumerate() {
        g.add_edge(s, i, w);
    }
    for (j, &w) in qw.iter().enumerate() {
        g.add_edge(np + j, t, w);
    }
    for i in 0..np {
        for j in 0..nq {
            if edge(i, j) {
                g.add_edge(i, np + j, f64::INFINITY);
            }
        }
    }
    g.max_flow(s, t)
}

/// Given thresholds `D_j` and the mass defect `defect(j)` of the edge set
/// `{d <= D_j}` (valid on the whole interval `(D_j, D_{j+1}]`), returns the
/// exact infimum. `defect` is nonincreasing in `j`, so the first feasible
/// interval is found by binary search.
pub(crate) fn breakpoint_infimum(d: &[f64], mut defect: impl FnMut(usize) -> f64) -> f64 {
    let mut value = |j: usize| {
        let x = defect(j);
        if x <= DEFECT_SNAP {
            0.0
        } else {
            x
        }
    };
    let upper = |j: usize| if j + 1 < d.len() { d[j + 1] } else { f64::INFINITY };
    // The last interval is always feasible; `at_hi` tracks `value(hi)`.
    let (mut lo, mut hi) = (0usize, d.len() - 1);
    let mut at_hi = value(hi);
    while lo < hi {
        let mid = (lo + hi) / 2;
        let v = value(mid);
        if v <= upper(mid) {
            hi = mid;
            at_hi = v;
        } else {
            lo = mid + 1;
        }
    }
    at_hi.max(d[hi])
}

/// Exact Prohorov distance by breakpoint search over pairwise distances.
pub fn prohorov_exact(p: &FiniteSupportMeasure, q: &FiniteSupportMeasure, space: &ActionSpace) -> f64 {
    let dist = distance_matrix(p, q, space);
    let d = thresholds(&dist);
    breakpoint_infimum(&d, |j| {
        let thr = d[j];
        1.0 - matched_mass(p.weights(), q.weights(), |a, b| dist[a][b] <= thr)
    })
}

/// Prohorov distance by bisection over `e`, each step a Strassen-coupling
/// feasibility test with edges `d < e`. Returns the bracket midpoint.
pub fn prohorov_bisection(
    p: &FiniteSupportMeasure,
    q: &FiniteSupportMeasure,
    space: &ActionSpace,
    tol: f64,
) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    let dist = distance_matrix(p, q, space);
    let feasible = |e: f64| matched_mass(p.weights(), q.weights(), |a, b| dist[a][b] < e) >= 1.0 - e - DEFECT_SNAP;
    let (mut lo, mut hi) = (0.0, space.diameter().max(1.0));
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Prohorov distance within `tol`. Supports of combined size at most 32 are
/// refined to the exact breakpoint value.
pub fn prohorov_distance(
    p: &FiniteSupportMeasure,
    q: &FiniteSupportMeasure,
    space: &ActionSpace,
    tol: f64,
) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    check_measure(p, space)?;
    check_measure(q, space)?;
    if p.len() + q.len() <= EXACT_MAX_SUPPORT {
        Ok(prohorov_exact(p, q, space))
    } else {
        prohorov_bisection(p, q, space, tol)
    }
}

fn check_measure(m: &FiniteSupportMeasure, space: &ActionSpace) -> Result<()> {
    let total: f64 = m.weights().iter().sum();
    if (total - 1.0).abs() > super::MASS_TOL {
        return Err(Error::Validation(format!("weights sum to {total}, not 1")));
    }
    m.validate_on(space)
}

/// Reference value by subset enumeration: for every subset `A` of either
/// support the defect `P(A) - Q(A^e)` (and the reverse) is computed
/// directly, with no flow machinery.
pub fn prohorov_oracle(p: &FiniteSupportMeasure, q: &FiniteSupportMeasure, space: &ActionSpace) -> Result<f64> {
    if p.len() + q.len() > ORACLE_MAX_SUPPORT {
        return Err(Error::Size(format!(
            "oracle handles combined support up to {ORACLE_MAX_SUPPORT}, got {}",
            p.len() + q.len()
        )));
    }
    check_measure(p, space)?;
    check_measure(q, space)?;
    let dist = distance_matrix(p, q, space);
    let d = thresholds(&dist);
    let one_way = |from: &[f64], to: &[f64], close: &dyn Fn(usize, usize) -> bool| -> f64 {
        let mut worst = 0.0f64;
        for mask in 1u32..(1u32 << from.len()) {
            let mut mass = 0.0;
            let mut covered = vec![false; to.len()];
            for (a, &w) in from.iter().enumerate() {
                if mask & (1 << a) != 0 {
                    mass += w;
                    for (b, c) in covered.iter_mut().enumerate() {
                        *c |= close(a, b);
                    }
                }
            }
            let reach: f64 = to.iter().zip(&covered).filter(|(_, c)| **c).map(|(w, _)| w).sum();
            worst = worst.max(mass - reach);
        }
        worst
    };
    let mut answer = f64::INFINITY;
    for j in 0..d.len() {
        let thr = d[j];
        let fwd = one_way(p.weights(), q.weights(), &|a, b| dist[a][b] <= thr);
        let bwd = one_way(q.weights(), p.weights(), &|b, a| dist[a][b] <= thr);
        let mut defect = fwd.max(bwd);
        if defect <= DEFECT_SNAP {
            defect = 0.0;
        }
        let candidate = d[j].max(defect);
        let upper = if j + 1 < d.len() { d[j + 1] } else { f64::INFINITY };
        if candidate <= upper {
            answer = answer.min(candidate);
        }
    }
    Ok(answer)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> ActionSpace {
        ActionSpace::interval(0.0, 1.0).unwrap()
    }

    fn m(points: &[f64], weights: &[f64]) -> FiniteSupportMeasure {
        FiniteSupportMeasure::from_scalars(points, weights).unwrap()
    }

    #[test]
    fn identical_measures_are_at_distance_zero() {
        let p = m(&[0.0, 0.5, 1.0], &[0.2, 0.3, 0.5]);
        assert_eq!(prohorov_distance(&p, &p, &unit(), DEFAULT_TOL).unwrap(), 0.0);
        assert_eq!(prohorov_oracle(&p, &p, &unit()).unwrap(), 0.0);
    }

    #[test]
    fn diracs_at_distance_point_three() {
        // Oracle by hand: A = {0} needs Q(A^e) = 1 (e > 0.3) or e >= 1.
        let p = m(&[0.0], &[1.0]);
        let q = m(&[0.3], &[1.0]);
        assert!((prohorov_distance(&p, &q, &unit(), DEFAULT_TOL).unwrap() - 0.3).abs() < 1e-12);
        assert!((prohorov_oracle(&p, &q, &unit()).unwrap() - 0.3).abs() < 1e-12);
        let b = prohorov_bisection(&p, &q, &unit(), 1e-9).unwrap();
        assert!((b - 0.3).abs() < 1e-9);
    }

    #[test]
    fn half_mass_split_is_at_distance_half() {
        let p = m(&[0.0, 1.0], &[0.5, 0.5]);
        let q = m(&[0.0], &[1.0]);
        assert!((prohorov_distance(&p, &q, &unit(), DEFAULT_TOL).unwrap() - 0.5).abs() < 1e-12);
        assert!((prohorov_oracle(&p, &q, &unit()).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn quarter_mass_far_away() {
        let p = m(&[0.0, 1.0], &[0.25, 0.75]);
        let q = m(&[1.0], &[1.0]);
        assert!((prohorov_oracle(&p, &q, &unit()).unwrap() - 0.25).abs() < 1e-12);
        assert!((prohorov_distance(&p, &q, &unit(), DEFAULT_TOL).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn diracs_far_apart_cap_at_one() {
        let s = ActionSpace::interval(0.0, 3.0).unwrap();
        let p = m(&[0.0], &[1.0]);
        let q = m(&[2.5], &[1.0]);
        assert_eq!(prohorov_distance(&p, &q, &s, DEFAULT_TOL).unwrap(), 1.0);
        assert_eq!(prohorov_oracle(&p, &q, &s).unwrap(), 1.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = m(&[0.0], &[1.0]);
        assert!(prohorov_distance(&p, &p, &unit(), 0.0).is_err());
        let big: Vec<f64> = (0..9).map(|i| i as f64 / 9.0).collect();
        let w = vec![1.0 / 9.0; 9];
        let q = m(&big, &w);
        assert!(matches!(prohorov_oracle(&q, &q, &unit()), Err(Error::Size(_))));
    }

    #[test]
    fn finite_space_uses_matrix_distances() {
        let s = ActionSpace::finite(vec![0.0, 1.0], vec![vec![0.0, 0.4], vec![0.4, 0.0]]).unwrap();
        let p = m(&[0.0], &[1.0]);
        let q = m(&[1.0], &[1.0]);
        assert!((prohorov_distance(&p, &q, &s, DEFAULT_TOL).unwrap() - 0.4).abs() < 1e-12);
    }
}
