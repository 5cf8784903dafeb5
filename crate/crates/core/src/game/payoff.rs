//! Payoff models: parsed expressions and multilinear tables.

use serde::{Deserialize, Serialize};

use super::expr::{Expr, Interval};
use crate::error::{Error, Result};

/// Payoff values tabulated on a rectilinear grid over `(k1..kn, x1..xn)`
/// and interpolated multilinearly. Values are stored with axis 0 fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayoffTable {
    pub axes: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl PayoffTable {
    pub fn new(axes: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        if axes
            .iter()
            .any(|a| a.is_empty() || a.windows(2).any(|w| !(w[0] < w[1])))
        {
            return Err(Error::Validation(
                "table axes must be nonempty and strictly increasing".into(),
            ));
        }
        let n: usize = axes.iter().map(|a| a.len()).product();
        if values.len() != n {
            return Err(Error::Validation(format!(
                "table needs {n} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("table values must be finite".into()));
        }
        Ok(Self { axes, values })
    }

    /// Multilinear interpolation at `point` (one coordinate per axis).
    pub fn eval(&self, point: &[f64]) -> f64 {
        let mut lo = Vec::with_capacity(self.axes.len());
        let mut frac = Vec::with_capacity(self.axes.len());
        for (axis, &v) in self.axes.iter().zip(point) {
            if axis.len() == 1 {
                lo.push(0);
                frac.push(0.0);
                continue;
            }
            let j = axis.partition_point(|&t| t <= v).clamp(1, axis.len() - 1) - 1;
            let t = ((v - axis[j]) / (axis[j + 1] - axis[j])).clamp(0.0, 1.0);
            lo.push(j);
            frac.push(t);
        }
        let d = self.axes.len();
        let mut total = 0.0;
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut flat = 0;
            let mut stride = 1;
            for a in 0..d {
                let up = corner >> a & 1 == 1;
                if self.axes[a].len() > 1 {
                    w *= if up { frac[a] } else { 1.0 - frac[a] };
                } else if up {
                    w = 0.0;
                }
                flat += (lo[a] + usize::from(up && self.axes[a].len() > 1)) * stride;
                stride *= self.axes[a].len();
            }
            if w != 0.0 {
                total += w * self.values[flat];
            }
        }
        total
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PayoffModel {
    Expression {
        source: String,
        expr: Expr,
    },
    Table {
        path: String,
        table: PayoffTable,
    },
    /// `max(inner, 0)` or, with `negate`, `max(-inner, 0)`.
    Part {
        inner: Box<PayoffModel>,
        negate: bool,
    },
}

impl PayoffModel {
    pub fn eval(&self, k: &[f64], x: &[f64]) -> f64 {
        match self {
            PayoffModel::Expression { expr, .. } => expr.eval(k, x),
            PayoffModel::Table { table, .. } => {
                let mut p = Vec::with_capacity(k.len() + x.len());
                p.extend_from_slice(k);
                p.extend_from_slice(x);
                table.eval(&p)
            }
            PayoffModel::Part { inner, negate } => {
                let v = inner.eval(k, x);
                if *negate {
                    (-v).max(0.0)
                } else {
                    v.max(0.0)
                }
            }
        }
    }

    /// Conservative range over the box (tables: exact range of node values).
    pub fn range(&self, k: &[Interval], x: &[Interval]) -> Result<Interval> {
        match self {
            PayoffModel::Expression { expr, .. } => expr.range(k, x),
            PayoffModel::Table { table, .. } => Ok(Interval::new(
                table.values.iter().copied().fold(f64::INFINITY, f64::min),
                table.values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            )),
            PayoffModel::Part { inner, negate } => {
                let r = inner.range(k, x)?;
                let (lo, hi) = if *negate { (-r.hi, -r.lo) } else { (r.lo, r.hi) };
                Ok(Interval::new(lo.max(0.0), hi.max(0.0)))
            }
        }
    }

    /// Text form as written in a game file.
    pub fn describe(&self) -> String {
        match self {
            PayoffModel::Expression { source, .. } => format!("expr={source}"),
            PayoffModel::Table { path, .. } => format!("table={path}"),
            PayoffModel::Part { inner, negate } => {
                let body = inner.describe();
                if *negate {
                    format!("negative part of {body}")
                } else {
                    format!("positive part of {body}")
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_hits_nodes_and_interpolates() {
        let t = PayoffTable::new(
            vec![vec![0.0, 1.0], vec![0.0, 0.5, 1.0]],
            vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0],
        )
        .unwrap();
        assert_eq!(t.eval(&[1.0, 0.5]), 3.0);
        assert_eq!(t.eval(&[0.0, 1.0]), 4.0);
        assert!((t.eval(&[0.5, 0.25]) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn parts_recombine() {
        let inner = PayoffModel::Table {
            path: "t".into(),
            table: PayoffTable::new(vec![vec![0.0, 1.0]], vec![-0.5, 0.5]).unwrap(),
        };
        let pos = PayoffModel::Part {
            inner: Box::new(inner.clone()),
            negate: false,
        };
        let neg = PayoffModel::Part {
            inner: Box::new(inner.clone()),
            negate: true,
        };
        for k in [0.0, 0.2, 0.5, 0.9] {
            assert_eq!(pos.eval(&[k], &[]) - neg.eval(&[k], &[]), inner.eval(&[k], &[]));
        }
    }
}
