//! Piecewise-constant mixed and pure strategies on a signal axis `[0,1]`.
//!
//! A partition `0 = t_0 < t_1 < ... < t_C = 1` has cells `[0, t_1]` and
//! `(t_{c-1}, t_c]` afterwards.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{prohorov_distance, ActionSpace, DenseNet, FiniteSupportMeasure, NetIndex, Point, SupportRepr};

/// Breakpoints closer than this are identified when partitions are merged.
pub const BREAKPOINT_TOL: f64 = 1e-12;

fn check_partition(partition: &[f64], cells: usize) -> Result<()> {
    if partition.len() != cells + 1 || cells == 0 {
        return Err(Error::Validation(format!(
            "partition has {} breakpoints for {cells} cells",
            partition.len()
        )));
    }
    if partition[0] != 0.0 || partition[cells] != 1.0 {
        return Err(Error::Validation("partition must start at 0 and end at 1".into()));
    }
    if partition.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Validation("partition breakpoints must increase strictly".into()));
    }
    Ok(())
}

/// Uniform partition into `cells` cells.
pub fn uniform_partition(cells: usize) -> Vec<f64> {
    (0..=cells).map(|j| j as f64 / cells as f64).collect()
}

/// Union of two partitions, identifying breakpoints within [`BREAKPOINT_TOL`].
pub fn merge_partitions(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = a.iter().chain(b).copied().collect();
    all.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut out: Vec<f64> = Vec::with_capacity(all.len());
    for t in all {
        match out.last() {
            Some(&last) if t - last <= BREAKPOINT_TOL => {}
            _ => out.push(t),
        }
    }
    // Keep the exact endpoints.
    out[0] = 0.0;
    *out.last_mut().unwrap() = 1.0;
    out
}

/// Cell of `partition` containing `x`.
pub fn cell_index(partition: &[f64], x: f64) -> usize {
    let cells = partition.len() - 1;
    // First breakpoint t_c (c >= 1) with x <= t_c.
    let c = partition[1..].partition_point(|&t| t < x - BREAKPOINT_TOL);
    c.min(cells - 1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixedRepr")]
pub struct MixedStrategy {
    partition: Vec<f64>,
    values: Vec<FiniteSupportMeasure>,
}

#[derive(Deserialize)]
struct MixedRepr {
    partition: Vec<f64>,
    values: Vec<FiniteSupportMeasure>,
}

impl TryFrom<MixedRepr> for MixedStrategy {
    type Error = Error;
    fn try_from(r: MixedRepr) -> Result<Self> {
        MixedStrategy::new(r.partition, r.values)
    }
}

impl MixedStrategy {
    pub fn new(partition: Vec<f64>, values: Vec<FiniteSupportMeasure>) -> Result<Self> {
        check_partition(&partition, values.len())?;
        if values.iter().any(|v| v.dim() != values[0].dim()) {
            return Err(Error::Validation("strategy values differ in dimension".into()));
        }
        Ok(Self { partition, values })
    }

    pub fn constant(m: FiniteSupportMeasure) -> Self {
        Self {
            partition: vec![0.0, 1.0],
            values: vec![m],
        }
    }

    /// Uniform partition with one value per cell.
    pub fn uniform(values: Vec<FiniteSupportMeasure>) -> Result<Self> {
        Self::new(uniform_partition(values.len()), values)
    }

    pub fn partition(&self) -> &[f64] {
        &self.partition
    }

    pub fn values(&self) -> &[FiniteSupportMeasure] {
        &self.values
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    pub fn cell_of(&self, x: f64) -> usize {
        cell_index(&self.partition, x)
    }

    pub fn value_at(&self, x: f64) -> &FiniteSupportMeasure {
        &self.values[self.cell_of(x)]
    }

    pub fn validate_on(&self, space: &ActionSpace) -> Result<()> {
        self.values.iter().try_for_each(|v| v.validate_on(space))
    }

    /// Same strategy on the union of its partition and `breakpoints`.
    pub fn refine(&self, breakpoints: &[f64]) -> MixedStrategy {
        let partition = merge_partitions(&self.partition, breakpoints);
        let values = partition
            .windows(2)
            .map(|w| self.value_at(0.5 * (w[0] + w[1])).clone())
            .collect();
        MixedStrategy { partition, values }
    }

    /// Distinct values in order of first appearance.
    pub fn distinct_values(&self) -> Vec<&FiniteSupportMeasure> {
        let mut out: Vec<&FiniteSupportMeasure> = Vec::new();
        for v in &self.values {
            if !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }

    /// Union of the supports of all values, in order of first appearance.
    pub fn support_union(&self) -> Vec<Point> {
        let mut out: Vec<Point> = Vec::new();
        for v in &self.values {
            for p in v.support() {
                if !out.contains(p) {
                    out.push(p.clone());
                }
            }
        }
        out
    }

    /// Replaces the value of one cell.
    pub fn with_cell(&self, cell: usize, value: FiniteSupportMeasure) -> Result<Self> {
        if cell >= self.cells() {
            return Err(Error::Parameter(format!("cell {cell} out of range")));
        }
        let mut s = self.clone();
        s.values[cell] = value;
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PureStrategy {
    partition: Vec<f64>,
    actions: Vec<Point>,
}

#[derive(Serialize, Deserialize)]
struct PureRepr {
    partition: Vec<f64>,
    actions: SupportRepr,
}

impl Serialize for PureStrategy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PureRepr {
            partition: self.partition.clone(),
            actions: SupportRepr::from_points(&self.actions),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PureStrategy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = PureRepr::deserialize(d)?;
        PureStrategy::new(r.partition, r.actions.into_points()).map_err(serde::de::Error::custom)
    }
}

impl PureStrategy {
    pub fn new(partition: Vec<f64>, actions: Vec<Point>) -> Result<Self> {
        check_partition(&partition, actions.len())?;
        Ok(Self { partition, actions })
    }

    pub fn constant(action: Point) -> Self {
        Self {
            partition: vec![0.0, 1.0],
            actions: vec![action],
        }
    }

    pub fn partition(&self) -> &[f64] {
        &self.partition
    }

    pub fn actions(&self) -> &[Point] {
        &self.actions
    }

    pub fn action_at(&self, x: f64) -> &Point {
        &self.actions[cell_index(&self.partition, x)]
    }

    /// Distinct actions, in order of first appearance.
    pub fn range(&self) -> Vec<Point> {
        let mut out: Vec<Point> = Vec::new();
        for a in &self.actions {
            if !out.contains(a) {
                out.push(a.clone());
            }
        }
        out
    }

    pub fn validate_on(&self, space: &ActionSpace) -> Result<()> {
        match self.actions.iter().find(|a| !space.contains(a)) {
            Some(a) => Err(Error::Validation(format!("action {a:?} lies outside the action space"))),
            None => Ok(()),
        }
    }

    /// Merges adjacent cells carrying the same action.
    pub fn compact(&self) -> PureStrategy {
        let mut partition = vec![0.0];
        let mut actions: Vec<Point> = Vec::new();
        for (c, a) in self.actions.iter().enumerate() {
            if actions.last() == Some(a) {
                *partition.last_mut().unwrap() = self.partition[c + 1];
            } else {
                actions.push(a.clone());
                partition.push(self.partition[c + 1]);
            }
        }
        PureStrategy { partition, actions }
    }
}

/// Cell-wise Dirac embedding.
pub fn pure_to_mixed(p: &PureStrategy) -> MixedStrategy {
    MixedStrategy {
        partition: p.partition.clone(),
        values: p
            .actions
            .iter()
            .map(|a| FiniteSupportMeasure::dirac(a.clone()))
            .collect(),
    }
}

/// An analytic strategy: a rule from signals to measures.
#[derive(Clone)]
pub struct EvaluableStrategy {
    rule: Arc<dyn Fn(f64) -> Result<FiniteSupportMeasure> + Send + Sync>,
    /// Default number of cells used when converting.
    pub cells: usize,
}

impl fmt::Debug for EvaluableStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EvaluableStrategy").field("cells", &self.cells).finish()
    }
}

impl EvaluableStrategy {
    pub fn new(cells: usize, rule: impl Fn(f64) -> Result<FiniteSupportMeasure> + Send + Sync + 'static) -> Self {
        Self {
            rule: Arc::new(rule),
            cells,
        }
    }

    pub fn eval(&self, x: f64) -> Result<FiniteSupportMeasure> {
        (self.rule)(x)
    }

    pub fn to_default_piecewise(&self) -> Result<MixedStrategy> {
        to_piecewise(self, self.cells)
    }
}

/// Uniform partition into `cells` cells; each cell carries the rule's value
/// at its midpoint.
pub fn to_piecewise(s: &EvaluableStrategy, cells: usize) -> Result<MixedStrategy> {
    if cells == 0 {
        return Err(Error::Parameter("need at least one cell".into()));
    }
    let partition = uniform_partition(cells);
    let values = partition
        .windows(2)
        .map(|w| s.eval(0.5 * (w[0] + w[1])))
        .collect::<Result<Vec<_>>>()?;
    MixedStrategy::new(partition, values)
}

/// Result of [`simple_approximate`].
#[derive(Clone, Debug)]
pub struct SimpleApproximation {
    pub strategy: MixedStrategy,
    /// Net index chosen for each cell.
    pub indices: Vec<NetIndex>,
    /// Largest Prohorov distance over cells.
    pub sup_distance: f64,
}

/// Replaces each cell value by its nearest member among the first `count`
/// members of `net` (lowest index on ties).
pub fn simple_approximate(f: &MixedStrategy, net: &DenseNet, count: u128) -> Result<SimpleApproximation> {
    let mut values = Vec::with_capacity(f.cells());
    let mut indices = Vec::with_capacity(f.cells());
    let mut sup = 0.0f64;
    // Cells sharing a value share the search.
    let mut memo: Vec<(&FiniteSupportMeasure, NetIndex, f64)> = Vec::new();
    for v in &f.values {
        let (idx, d) = match memo.iter().find(|(m, _, _)| *m == v) {
            Some(&(_, i, d)) => (i, d),
            None => {
                let (i, d) = net.nearest(v, count)?;
                memo.push((v, i, d));
                (i, d)
            }
        };
        values.push(net.member(idx)?.measure);
        indices.push(idx);
        sup = sup.max(d);
    }
    Ok(SimpleApproximation {
        strategy: MixedStrategy::new(f.partition.clone(), values)?,
        indices,
        sup_distance: sup,
    })
}

/// `max` over the cells of the common refinement of `rho(f_x, g_x)`.
pub fn strategy_sup_distance(f: &MixedStrategy, g: &MixedStrategy, space: &ActionSpace) -> Result<f64> {
    if f.values[0].dim() != g.values[0].dim() {
        return Err(Error::Type("strategies act on different action spaces".into()));
    }
    f.validate_on(space)?;
    g.validate_on(space)?;
    let common = merge_partitions(&f.partition, &g.partition);
    let mut sup = 0.0f64;
    for w in common.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let (a, b) = (f.value_at(mid), g.value_at(mid));
        if a != b {
            sup = sup.max(prohorov_distance(a, b, space, crate::measures::DEFAULT_TOL)?);
        }
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> ActionSpace {
        ActionSpace::interval(0.0, 1.0).unwrap()
    }

    #[test]
    fn diagonal_rule_uses_midpoints() {
        let s = EvaluableStrategy::new(2, |x| Ok(FiniteSupportMeasure::dirac_scalar(x)));
        let f = to_piecewise(&s, 2).unwrap();
        assert_eq!(f.values()[0].support(), &[vec![0.25]]);
        assert_eq!(f.values()[1].support(), &[vec![0.75]]);
    }

    #[test]
    fn cells_are_right_closed() {
        let p = uniform_partition(4);
        assert_eq!(cell_index(&p, 0.0), 0);
        assert_eq!(cell_index(&p, 0.25), 0);
        assert_eq!(cell_index(&p, 0.26), 1);
        assert_eq!(cell_index(&p, 1.0), 3);
    }

    #[test]
    fn sup_distance_on_one_cell() {
        let d0 = FiniteSupportMeasure::dirac_scalar(0.0);
        let f = MixedStrategy::uniform(vec![d0.clone(), d0.clone()]).unwrap();
        let g = MixedStrategy::uniform(vec![d0.clone(), FiniteSupportMeasure::dirac_scalar(0.3)]).unwrap();
        assert!((strategy_sup_distance(&f, &g, &unit()).unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(strategy_sup_distance(&f, &f, &unit()).unwrap(), 0.0);
    }

    #[test]
    fn json_round_trip() {
        let f = MixedStrategy::uniform(vec![
            FiniteSupportMeasure::from_scalars(&[0.0, 1.0], &[0.5, 0.5]).unwrap(),
            FiniteSupportMeasure::dirac_scalar(0.25),
        ])
        .unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(
            s,
            r#"{"partition":[0.0,0.5,1.0],"values":[{"support":[0.0,1.0],"weights":[0.5,0.5]},{"support":[0.25],"weights":[1.0]}]}"#
        );
        assert_eq!(serde_json::from_str::<MixedStrategy>(&s).unwrap(), f);
        let p = PureStrategy::new(vec![0.0, 0.5, 1.0], vec![vec![0.0], vec![1.0]]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"partition":[0.0,0.5,1.0],"actions":[0.0,1.0]}"#);
        assert_eq!(serde_json::from_str::<PureStrategy>(&s).unwrap(), p);
        assert!(serde_json::from_str::<MixedStrategy>(
            r#"{"partition":[0.0,0.4],"values":[{"support":[0.0],"weights":[1.0]}]}"#
        )
        .is_err());
    }

    #[test]
    fn net_valued_strategy_is_a_fixed_point() {
        let net = DenseNet::new(&unit(), 0.25, 4).unwrap();
        let f = MixedStrategy::uniform(vec![net.member(3).unwrap().measure, net.member(20).unwrap().measure]).unwrap();
        let s = simple_approximate(&f, &net, net.len()).unwrap();
        assert_eq!(s.strategy, f);
        assert_eq!(s.sup_distance, 0.0);
        assert_eq!(s.indices, vec![3, 20]);
    }

    #[test]
    fn compact_merges_equal_neighbours() {
        let p = PureStrategy::new(uniform_partition(4), vec![vec![0.0], vec![0.0], vec![1.0], vec![1.0]]).unwrap();
        let c = p.compact();
        assert_eq!(c.partition(), &[0.0, 0.5, 1.0]);
        assert_eq!(c.range().len(), 2);
    }
}
