//! Piecewise-constant signal priors on `[0,1]^n`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Total mass must be one within this tolerance.
pub const PRIOR_MASS_TOL: f64 = 1e-10;

/// Cell of a uniform grid of `g` cells containing `x`. Cells are `[0, 1/g]`
/// and `((j-1)/g, j/g]` afterwards.
pub fn uniform_cell(x: f64, g: usize) -> usize {
    let j = (x * g as f64 - 1e-9).ceil();
    (j.max(1.0) as usize - 1).min(g - 1)
}

/// Density constant on the cells of a product grid with `resolution[a]`
/// cells along axis `a`. Values are stored row-major with axis 0 fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalPrior {
    resolution: Vec<usize>,
    density: Vec<f64>,
}

/// Result of the conditional-atomlessness diagnostic for one player.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomlessReport {
    pub player: usize,
    pub pass: bool,
    /// Mass of opponent-signal slices on which the conditional is undefined.
    pub undefined_mass: f64,
    /// Same check on each pairwise marginal `(player, j)`.
    pub pairwise: Vec<PairwiseAtomless>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseAtomless {
    pub other: usize,
    pub pass: bool,
    pub undefined_mass: f64,
}

impl SignalPrior {
    pub fn uniform(n: usize) -> Self {
        Self {
            resolution: vec![1; n],
            density: vec![1.0],
        }
    }

    /// Validated prior. A density whose mass is not one is rescaled unless
    /// `strict`; the returned flag reports whether rescaling happened.
    pub fn new(resolution: Vec<usize>, density: Vec<f64>, strict: bool) -> Result<(Self, bool)> {
        if resolution.is_empty() || resolution.contains(&0) {
            return Err(Error::Validation(format!("bad prior resolution {resolution:?}")));
        }
        let cells: usize = resolution.iter().product();
        if density.len() != cells {
            return Err(Error::Validation(format!(
                "prior needs {cells} density values, got {}",
                density.len()
            )));
        }
        if density.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::Validation("prior density must be finite and nonnegative".into()));
        }
        let vol = 1.0 / cells as f64;
        let mass: f64 = density.iter().sum::<f64>() * vol;
        if mass <= 0.0 {
            return Err(Error::Normalization("prior density has zero mass".into()));
        }
        let mut prior = Self { resolution, density };
        if (mass - 1.0).abs() > PRIOR_MASS_TOL {
            if strict {
                return Err(Error::Normalization(format!("prior mass is {mass}, not 1")));
            }
            prior.density.iter_mut().for_each(|d| *d /= mass);
            return Ok((prior, true));
        }
        Ok((prior, false))
    }

    /// Same resolution `g` on every axis.
    pub fn grid(n: usize, g: usize, density: Vec<f64>, strict: bool) -> Result<(Self, bool)> {
        Self::new(vec![g; n], density, strict)
    }

    pub fn dim(&self) -> usize {
        self.resolution.len()
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn density_values(&self) -> &[f64] {
        &self.density
    }

    pub fn cell_count(&self) -> usize {
        self.density.len()
    }

    pub fn cell_volume(&self) -> f64 {
        1.0 / self.density.len() as f64
    }

    pub fn flat_index(&self, cell: &[usize]) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for (a, &c) in cell.iter().enumerate() {
            idx += c * stride;
            stride *= self.resolution[a];
        }
        idx
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        self.resolution
            .iter()
            .map(|&g| {
                let c = flat % g;
                flat /= g;
                c
            })
            .collect()
    }

    pub fn cell_of(&self, x: &[f64]) -> Vec<usize> {
        x.iter()
            .zip(&self.resolution)
            .map(|(&v, &g)| uniform_cell(v, g))
            .collect()
    }

    pub fn density_cell(&self, cell: &[usize]) -> f64 {
        self.density[self.flat_index(cell)]
    }

    pub fn density_at(&self, x: &[f64]) -> f64 {
        self.density_cell(&self.cell_of(x))
    }

    /// Cell breakpoints `0, 1/g, ..., 1` of axis `a`.
    pub fn breakpoints(&self, a: usize) -> Vec<f64> {
        let g = self.resolution[a];
        (0..=g).map(|j| j as f64 / g as f64).collect()
    }

    /// Marginal on `axes` (in the given order).
    pub fn marginal(&self, axes: &[usize]) -> SignalPrior {
        let resolution: Vec<usize> = axes.iter().map(|&a| self.resolution[a]).collect();
        let cells: usize = resolution.iter().product();
        let mut density = vec![0.0; cells];
        let keep_vol: f64 = resolution.iter().map(|&g| 1.0 / g as f64).product();
        let vol = self.cell_volume();
        let out = SignalPrior {
            resolution,
            density: Vec::new(),
        };
        for flat in 0..self.density.len() {
            let m = self.multi_index(flat);
            let sub: Vec<usize> = axes.iter().map(|&a| m[a]).collect();
            density[out.flat_index(&sub)] += self.density[flat] * vol / keep_vol;
        }
        SignalPrior { density, ..out }
    }

    /// Conditional on the listed axes taking the listed values; the result
    /// lives on the remaining axes in their original order.
    pub fn conditional(&self, fixed: &[(usize, f64)]) -> Result<SignalPrior> {
        for &(a, v) in fixed {
            if a >= self.dim() || !(0.0..=1.0).contains(&v) {
                return Err(Error::Parameter(format!("cannot condition axis {a} on value {v}")));
            }
        }
        let rest: Vec<usize> = (0..self.dim()).filter(|a| !fixed.iter().any(|f| f.0 == *a)).collect();
        let resolution: Vec<usize> = rest.iter().map(|&a| self.resolution[a]).collect();
        let cells: usize = resolution.iter().product();
        let mut cell = vec![0usize; self.dim()];
        for &(a, v) in fixed {
            cell[a] = uniform_cell(v, self.resolution[a]);
        }
        let out = SignalPrior {
            resolution,
            density: Vec::new(),
        };
        let mut density = vec![0.0; cells];
        for (flat, d) in density.iter_mut().enumerate() {
            let sub = out.multi_index(flat);
            for (i, &a) in rest.iter().enumerate() {
                cell[a] = sub[i];
            }
            *d = self.density_cell(&cell);
        }
        let mass: f64 = density.iter().sum::<f64>() / cells as f64;
        if mass <= 0.0 {
            return Err(Error::ConditionalUndefined(format!(
                "slice at {fixed:?} has zero density"
            )));
        }
        density.iter_mut().for_each(|d| *d /= mass);
        Ok(SignalPrior { density, ..out })
    }

    /// Piecewise-constant densities have no atoms, so the conditional of
    /// player `i`'s signal is atomless wherever it exists. The report gives
    /// the opponent-signal mass on which it does not exist, for the full
    /// prior and for every pairwise marginal.
    pub fn check_conditionally_atomless(&self, i: usize) -> AtomlessReport {
        let n = self.dim();
        let others: Vec<usize> = (0..n).filter(|&a| a != i).collect();
        let undefined_mass = self.undefined_mass(i, &others);
        let pairwise = others
            .iter()
            .map(|&j| {
                let pair = self.marginal(&[i, j]);
                let m = pair.undefined_mass(0, &[1]);
                PairwiseAtomless {
                    other: j,
                    pass: m == 0.0,
                    undefined_mass: m,
                }
            })
            .collect::<Vec<_>>();
        AtomlessReport {
            player: i,
            pass: undefined_mass == 0.0 && pairwise.iter().all(|p| p.pass),
            undefined_mass,
            pairwise,
        }
    }

    /// Mass under the marginal on `others` of cells whose slice along axis
    /// `i` has zero density. The conditional is undefined exactly there.
    fn undefined_mass(&self, _i: usize, others: &[usize]) -> f64 {
        if others.is_empty() {
            return 0.0;
        }
        let marg = self.marginal(others);
        marg.density
            .iter()
            .filter(|&&d| d == 0.0)
            .map(|d| d * marg.cell_volume())
            .sum::<f64>()
            + 0.0
    }

    /// Draws a signal profile.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let vol = self.cell_volume();
        let mut u: f64 = rng.gen();
        let mut flat = self.density.len() - 1;
        for (c, d) in self.density.iter().enumerate() {
            let m = d * vol;
            if u < m {
                flat = c;
                break;
            }
            u -= m;
        }
        let cell = self.multi_index(flat);
        cell.iter()
            .zip(&self.resolution)
            .map(|(&c, &g)| (c as f64 + rng.gen::<f64>()) / g as f64)
            .collect()
    }

    /// Same prior with axes reordered: new axis `b` is old axis `order[b]`.
    pub fn permute(&self, order: &[usize]) -> SignalPrior {
        self.marginal(order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_unless_strict() {
        let (p, rescaled) = SignalPrior::grid(1, 2, vec![2.0, 2.0], false).unwrap();
        assert!(rescaled);
        assert_eq!(p.density_values(), &[1.0, 1.0]);
        assert!(matches!(
            SignalPrior::grid(1, 2, vec![2.0, 2.0], true),
            Err(Error::Normalization(_))
        ));
    }

    #[test]
    fn diagonal_conditional_concentrates() {
        // [[2,0],[0,2]] with axis 0 fastest: cells (0,0) and (1,1) carry mass.
        let (p, _) = SignalPrior::grid(2, 2, vec![2.0, 0.0, 0.0, 2.0], true).unwrap();
        let c = p.conditional(&[(1, 0.25)]).unwrap();
        assert_eq!(c.density_values(), &[2.0, 0.0]);
    }

    #[test]
    fn product_density_conditional_is_marginal() {
        let a = [0.5, 1.5];
        let b = [1.2, 0.8];
        let d: Vec<f64> = (0..4).map(|f| a[f % 2] * b[f / 2]).collect();
        let (p, _) = SignalPrior::grid(2, 2, d, true).unwrap();
        let c = p.conditional(&[(1, 0.9)]).unwrap();
        let m = p.marginal(&[0]);
        for (u, v) in c.density_values().iter().zip(m.density_values()) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_slice_is_undefined() {
        let (p, _) = SignalPrior::grid(2, 2, vec![4.0, 0.0, 0.0, 0.0], true).unwrap();
        assert!(matches!(
            p.conditional(&[(1, 0.75)]),
            Err(Error::ConditionalUndefined(_))
        ));
        let report = p.check_conditionally_atomless(0);
        assert!(report.pass);
        assert_eq!(report.undefined_mass, 0.0);
    }

    #[test]
    fn cells_are_right_closed() {
        assert_eq!(uniform_cell(0.0, 4), 0);
        assert_eq!(uniform_cell(0.25, 4), 0);
        assert_eq!(uniform_cell(0.2500001, 4), 1);
        assert_eq!(uniform_cell(0.3, 10), 2);
        assert_eq!(uniform_cell(1.0, 4), 3);
    }
}
