//! Finite-support probability measures on compact metric action spaces.
//!
//! Every strategy in the crate is, after discretization, a map into
//! [`FiniteSupportMeasure`]. Points of an action space are coordinate
//! vectors: intervals and finite spaces are one-dimensional, product spaces
//! concatenate the coordinates of their factors and use the max metric.

mod net;
mod prohorov;

pub use net::{DenseNet, NetIndex, NetMember};
pub use prohorov::{
    prohorov_bisection, prohorov_distance, prohorov_exact, prohorov_oracle, DEFAULT_TOL, ORACLE_MAX_SUPPORT,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of an action space.
pub type Point = Vec<f64>;

/// Weights must sum to one within this tolerance.
pub const MASS_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ActionSpace {
    /// `[a, b]` with the metric `|k - k'|`.
    Interval { a: f64, b: f64 },
    /// Labelled points with an explicit distance matrix.
    Finite { points: Vec<f64>, distances: Vec<Vec<f64>> },
    /// Cartesian product with the max metric.
    Product { factors: Vec<ActionSpace> },
}

impl ActionSpace {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        let space = ActionSpace::Interval { a, b };
        space.validate()?;
        Ok(space)
    }

    pub fn finite(points: Vec<f64>, distances: Vec<Vec<f64>>) -> Result<Self> {
        let space = ActionSpace::Finite { points, distances };
        space.validate()?;
        Ok(space)
    }

    /// Finite space whose distance is `|p - q|` between labels.
    pub fn finite_on_line(points: Vec<f64>) -> Result<Self> {
        let distances = points
            .iter()
            .map(|p| points.iter().map(|q| (p - q).abs()).collect())
            .collect();
        Self::finite(points, distances)
    }

    pub fn product(factors: Vec<ActionSpace>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Parameter("product of zero action spaces".into()));
        }
        let space = ActionSpace::Product { factors };
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ActionSpace::Interval { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(Error::Validation(format!(
                        "interval action space needs finite a < b, got [{a}, {b}]"
                    )));
                }
            }
            ActionSpace::Finite { points, distances } => {
                let n = points.len();
                if n == 0 {
                    return Err(Error::Validation("finite action space is empty".into()));
                }
                if distances.len() != n || distances.iter().any(|row| row.len() != n) {
                    return Err(Error::Validation(format!("distance matrix must be {n}x{n}")));
                }
                for i in 0..n {
                    for j in 0..i {
                        if points[i] == points[j] {
                            return Err(Error::Validation(format!("duplicate point label {}", points[i])));
                        }
                    }
                }
                for i in 0..n {
                    if distances[i][i] != 0.0 {
                        return Err(Error::Validation("distance matrix diagonal must be zero".into()));
                    }
                    for j in 0..n {
                        let d = distances[i][j];
                        if !d.is_finite() || d < 0.0 {
                            return Err(Error::Validation("distances must be finite and nonnegative".into()));
                        }
                        if (d - distances[j][i]).abs() > 1e-12 {
                            return Err(Error::Validation("distance matrix is not symmetric".into()));
                        }
                        if i != j && d == 0.0 {
                            return Err(Error::Validation("distinct points must have positive distance".into()));
                        }
                        for k in 0..n {
                            if d > distances[i][k] + distances[k][j] + 1e-12 {
                                return Err(Error::Validation(format!(
                                    "triangle inequality fails for points {i}, {k}, {j}"
                                )));
                            }
                        }
                    }
                }
            }
            ActionSpace::Product { factors } => {
                for f in factors {
                    f.validate()?;
                }
            }
        }
        Ok(())
    }

    /// Number of coordinates of a point.
    pub fn dim(&self) -> usize {
        match self {
            ActionSpace::Interval { .. } | ActionSpace::Finite { .. } => 1,
            ActionSpace::Product { factors } => factors.iter().map(|f| f.dim()).sum(),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            ActionSpace::Interval { a, b } => b - a,
            ActionSpace::Finite { distances, .. } => {
                distances.iter().flat_map(|row| row.iter().copied()).fold(0.0, f64::max)
            }
            ActionSpace::Product { factors } => factors.iter().map(|f| f.diameter()).fold(0.0, f64::max),
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        if p.len() != self.dim() {
            return false;
        }
        match self {
            ActionSpace::Interval { a, b } => p[0] >= *a - 1e-12 && p[0] <= *b + 1e-12,
            ActionSpace::Finite { points, .. } => points.contains(&p[0]),
            ActionSpace::Product { factors } => {
                let mut off = 0;
                factors.iter().all(|f| {
                    let d = f.dim();
                    let ok = f.contains(&p[off..off + d]);
                    off += d;
                    ok
                })
            }
        }
    }

    /// Distance between two points. Points are assumed to lie in the space.
    pub fn dist(&self, p: &[f64], q: &[f64]) -> f64 {
        match self {
            ActionSpace::Interval { .. } => (p[0] - q[0]).abs(),
            ActionSpace::Finite { points, distances } => {
                let i = label_index(points, p[0]);
                let j = label_index(points, q[0]);
                distances[i][j]
            }
            ActionSpace::Product { factors } => {
                let mut off = 0;
                let mut d = 0.0f64;
                for f in factors {
                    let k = f.dim();
                    d = d.max(f.dist(&p[off..off + k], &q[off..off + k]));
                    off += k;
                }
                d
            }
        }
    }

    /// Finite grid of mesh at most `step`: `{a, a + h, ..., b}` for an
    /// interval (with `h <= step` evenly dividing `b - a`), every point for a
    /// finite space, and the lexicographic product (last factor fastest) for
    /// products.
    pub fn grid(&self, step: f64) -> Vec<Point> {
        match self {
            ActionSpace::Interval { a, b } => {
                let intervals = (((b - a) / step) - 1e-9).ceil().max(1.0) as usize;
                (0..=intervals)
                    .map(|j| {
                        if j == intervals {
                            vec![*b]
                        } else {
                            vec![a + (b - a) * j as f64 / intervals as f64]
                        }
                    })
                    .collect()
            }
            ActionSpace::Finite { points, .. } => points.iter().map(|&p| vec![p]).collect(),
            ActionSpace::Product { factors } => {
                let mut acc: Vec<Point> = vec![Vec::new()];
                for f in factors {
                    let g = f.grid(step);
                    let mut next = Vec::with_capacity(acc.len() * g.len());
                    for prefix in &acc {
                        for q in &g {
                            let mut p = prefix.clone();
                            p.extend_from_slice(q);
                            next.push(p);
                        }
                    }
                    acc = next;
                }
                acc
            }
        }
    }

    /// Nearest point of `grid` to `p`, lowest index on ties.
    pub fn nearest_grid_index(&self, grid: &[Point], p: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, g) in grid.iter().enumerate() {
            let d = self.dist(g, p);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}

fn label_index(points: &[f64], label: f64) -> usize {
    points
        .iter()
        .position(|&p| p == label)
        .unwrap_or_else(|| panic!("point {label} is not in the finite action space"))
}

/// A probability measure with finitely many atoms.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteSupportMeasure {
    support: Vec<Point>,
    weights: Vec<f64>,
}

impl FiniteSupportMeasure {
    /// Validated constructor: nonnegative weights summing to one, distinct
    /// support points of a common dimension.
    pub fn new(support: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if support.len() != weights.len() {
            return Err(Error::Validation(format!(
                "support has {} points but {} weights",
                support.len(),
                weights.len()
            )));
        }
        if support.is_empty() {
            return Err(Error::Validation("measure has empty support".into()));
        }
        let dim = support[0].len();
        if support
            .iter()
            .any(|p| p.len() != dim || p.iter().any(|c| !c.is_finite()))
        {
            return Err(Error::Validation(
                "support points must share a dimension and be finite".into(),
            ));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Validation("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::Validation(format!("weights sum to {total}, not 1")));
        }
        for i in 0..support.len() {
            for j in 0..i {
                if support[i] == support[j] {
                    return Err(Error::Validation(format!("duplicate support point {:?}", support[i])));
                }
            }
        }
        Ok(Self { support, weights })
    }

    pub fn dirac(point: Point) -> Self {
        Self {
            support: vec![point],
            weights: vec![1.0],
        }
    }

    pub fn dirac_scalar(x: f64) -> Self {
        Self::dirac(vec![x])
    }

    /// Builds a measure from possibly repeated, possibly zero-weight atoms:
    /// duplicates are merged (first occurrence order) and zero weights dropped.
    pub fn from_atoms(atoms: impl IntoIterator<Item = (Point, f64)>) -> Result<Self> {
        let mut support: Vec<Point> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for (p, w) in atoms {
            if w == 0.0 {
                continue;
            }
            match support.iter().position(|q| *q == p) {
                Some(i) => weights[i] += w,
                None => {
                    support.push(p);
                    weights.push(w);
                }
            }
        }
        Self::new(support, weights)
    }

    pub fn from_scalars(points: &[f64], weights: &[f64]) -> Result<Self> {
        Self::new(points.iter().map(|&p| vec![p]).collect(), weights.to_vec())
    }

    pub fn support(&self) -> &[Point] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> + '_ {
        self.support.iter().zip(self.weights.iter().copied())
    }

    pub fn dim(&self) -> usize {
        self.support[0].len()
    }

    /// Checks that every atom lies in `space`.
    pub fn validate_on(&self, space: &ActionSpace) -> Result<()> {
        for p in &self.support {
            if !space.contains(p) {
                return Err(Error::Validation(format!(
                    "support point {p:?} lies outside the action space"
                )));
            }
        }
        Ok(())
    }

    /// Weight of `point` (zero when it is not an atom).
    pub fn weight_of(&self, point: &[f64]) -> f64 {
        self.iter()
            .find(|(p, _)| p.as_slice() == point)
            .map(|(_, w)| w)
            .unwrap_or(0.0)
    }

    /// `alpha * self + (1 - alpha) * other`.
    pub fn mix(&self, alpha: f64, other: &Self) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Parameter(format!("mixing weight {alpha} outside [0, 1]")));
        }
        Self::from_atoms(
            self.iter()
                .map(|(p, w)| (p.clone(), alpha * w))
                .chain(other.iter().map(|(p, w)| (p.clone(), (1.0 - alpha) * w))),
        )
    }

    /// Length-weighted average of several measures (weights must sum to one).
    pub fn average(parts: &[(f64, &Self)]) -> Result<Self> {
        Self::from_atoms(
            parts
                .iter()
                .flat_map(|(a, m)| m.iter().map(move |(p, w)| (p.clone(), a * w))),
        )
    }

    /// Product measure; coordinates of the factors are concatenated.
    pub fn product(factors: &[&Self]) -> Self {
        let mut support: Vec<Point> = vec![Vec::new()];
        let mut weights = vec![1.0];
        for f in factors {
            let mut s2 = Vec::with_capacity(support.len() * f.len());
            let mut w2 = Vec::with_capacity(support.len() * f.len());
            for (p, w) in support.iter().zip(&weights) {
                for (q, v) in f.iter() {
                    let mut r = p.clone();
                    r.extend_from_slice(q);
                    s2.push(r);
                    w2.push(w * v);
                }
            }
            support = s2;
            weights = w2;
        }
        Self { support, weights }
    }

    /// Mean of the first coordinate.
    pub fn mean(&self) -> f64 {
        self.iter().map(|(p, w)| p[0] * w).sum()
    }
}

/// Point lists serialize as plain numbers when every point is scalar.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
pub(crate) enum SupportRepr {
    Scalars(Vec<f64>),
    Vectors(Vec<Vec<f64>>),
}

impl SupportRepr {
    pub(crate) fn from_points(points: &[Point]) -> Self {
        if points.iter().all(|p| p.len() == 1) {
            SupportRepr::Scalars(points.iter().map(|p| p[0]).collect())
        } else {
            SupportRepr::Vectors(points.to_vec())
        }
    }

    pub(crate) fn into_points(self) -> Vec<Point> {
        match self {
            SupportRepr::Scalars(v) => v.into_iter().map(|x| vec![x]).collect(),
            SupportRepr::Vectors(v) => v,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct MeasureRepr {
    support: SupportRepr,
    weights: Vec<f64>,
}

impl Serialize for FiniteSupportMeasure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MeasureRepr {
            support: SupportRepr::from_points(&self.support),
            weights: self.weights.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteSupportMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = MeasureRepr::deserialize(d)?;
        FiniteSupportMeasure::new(repr.support.into_points(), repr.weights).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unnormalized_weights() {
        assert!(FiniteSupportMeasure::from_scalars(&[0.0, 1.0], &[0.5, 0.6]).is_err());
        assert!(FiniteSupportMeasure::from_scalars(&[0.0, 0.0], &[0.5, 0.5]).is_err());
        assert!(FiniteSupportMeasure::from_scalars(&[0.0], &[-1.0]).is_err());
    }

    #[test]
    fn finite_space_checks_triangle_inequality() {
        let bad = ActionSpace::finite(
            vec![0.0, 1.0, 2.0],
            vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]],
        );
        assert!(bad.is_err());
        let asym = ActionSpace::finite(vec![0.0, 1.0], vec![vec![0.0, 1.0], vec![2.0, 0.0]]);
        assert!(asym.is_err());
        assert!(ActionSpace::finite_on_line(vec![0.0, 0.5, 1.0]).is_ok());
    }

    #[test]
    fn interval_grid_hits_both_endpoints() {
        let s = ActionSpace::interval(0.0, 1.0).unwrap();
        let g = s.grid(0.5);
        assert_eq!(g, vec![vec![0.0], vec![0.5], vec![1.0]]);
        let g = s.grid(0.3);
        assert_eq!(g.len(), 5);
        assert_eq!(g.last().unwrap()[0], 1.0);
    }

    #[test]
    fn product_uses_max_metric() {
        let i = ActionSpace::interval(0.0, 1.0).unwrap();
        let p = ActionSpace::product(vec![i.clone(), i]).unwrap();
        assert_eq!(p.dim(), 2);
        assert!((p.dist(&[0.1, 0.5], &[0.4, 0.6]) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn product_measure_of_diracs_is_dirac() {
        let a = FiniteSupportMeasure::dirac_scalar(0.2);
        let b = FiniteSupportMeasure::dirac_scalar(0.7);
        let p = FiniteSupportMeasure::product(&[&a, &b]);
        assert_eq!(p.support(), &[vec![0.2, 0.7]]);
        assert_eq!(p.weights(), &[1.0]);
    }

    #[test]
    fn json_round_trip_uses_scalar_support() {
        let m = FiniteSupportMeasure::from_scalars(&[0.0, 0.25], &[0.75, 0.25]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"support":[0.0,0.25],"weights":[0.75,0.25]}"#);
        let back: FiniteSupportMeasure = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}
