//! Rectangular parameter grids, sampled fields and fourth-order stencils.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Offsets of the five-point stencils, in grid steps.
pub const STENCIL_OFFSETS: [isize; 5] = [-2, -1, 0, 1, 2];
/// Fourth-order central first derivative weights (divide by `h`).
pub const FIRST_DERIVATIVE: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
/// Fourth-order central second derivative weights (divide by `h²`).
pub const SECOND_DERIVATIVE: [f64; 5] = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];
/// Number of nodes a five-point stencil reaches on each side.
pub const STENCIL_RADIUS: usize = 2;

/// Values that can be combined linearly by a difference stencil.
pub trait Linear: Clone {
    fn zeroed(&self) -> Self;
    fn add_scaled(&mut self, a: f64, other: &Self);
}

impl Linear for f64 {
    fn zeroed(&self) -> Self {
        0.0
    }
    fn add_scaled(&mut self, a: f64, other: &Self) {
        *self += a * other;
    }
}

impl Linear for DVector<f64> {
    fn zeroed(&self) -> Self {
        DVector::zeros(self.len())
    }
    fn add_scaled(&mut self, a: f64, other: &Self) {
        self.axpy(a, other, 1.0);
    }
}

impl Linear for DMatrix<f64> {
    fn zeroed(&self) -> Self {
        DMatrix::zeros(self.nrows(), self.ncols())
    }
    fn add_scaled(&mut self, a: f64, other: &Self) {
        *self += other * a;
    }
}

impl Linear for Vec<f64> {
    fn zeroed(&self) -> Self {
        vec![0.0; self.len()]
    }
    fn add_scaled(&mut self, a: f64, other: &Self) {
        for (s, o) in self.iter_mut().zip(other) {
            *s += a * o;
        }
    }
}

fn combine<T: Linear>(weights: &[f64; 5], scale: f64, sample: impl Fn(isize) -> T) -> T {
    let centre = sample(0);
    let mut acc = centre.zeroed();
    for (w, &o) in weights.iter().zip(STENCIL_OFFSETS.iter()) {
        if *w != 0.0 {
            if o == 0 {
                acc.add_scaled(w * scale, &centre);
            } else {
                acc.add_scaled(w * scale, &sample(o));
            }
        }
    }
    acc
}

/// Fourth-order first derivative from samples at offsets `-2..=2` with spacing `h`.
pub fn first_derivative<T: Linear>(h: f64, sample: impl Fn(isize) -> T) -> T {
    combine(&FIRST_DERIVATIVE, 1.0 / h, sample)
}

/// Fourth-order second derivative from samples at offsets `-2..=2`.
pub fn second_derivative<T: Linear>(h: f64, sample: impl Fn(isize) -> T) -> T {
    combine(&SECOND_DERIVATIVE, 1.0 / (h * h), sample)
}

/// Fourth-order mixed derivative `∂²/∂a∂b` from a 4×4 product stencil.
pub fn mixed_derivative<T: Linear>(ha: f64, hb: f64, sample: impl Fn(isize, isize) -> T) -> T {
    let mut acc: Option<T> = None;
    for (wa, &oa) in FIRST_DERIVATIVE.iter().zip(STENCIL_OFFSETS.iter()) {
        if *wa == 0.0 {
            continue;
        }
        for (wb, &ob) in FIRST_DERIVATIVE.iter().zip(STENCIL_OFFSETS.iter()) {
            if *wb == 0.0 {
                continue;
            }
            let s = sample(oa, ob);
            let acc = acc.get_or_insert_with(|| s.zeroed());
            acc.add_scaled(wa * wb / (ha * hb), &s);
        }
    }
    acc.expect("stencil is non-empty")
}

/// Uniform tensor-product grid over a parameter box; the last axis varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    lo: Vec<f64>,
    hi: Vec<f64>,
    counts: Vec<usize>,
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != counts.len() || lo.is_empty() {
            return Err(Error::Argument("grid axes disagree in dimension".into()));
        }
        for k in 0..lo.len() {
            if counts[k] == 0 {
                return Err(Error::Argument(format!("axis {k} has no nodes")));
            }
            if counts[k] > 1 && !(hi[k] > lo[k]) {
                return Err(Error::Argument(format!("axis {k} has empty extent")));
            }
        }
        Ok(GridSpec { lo, hi, counts })
    }

    /// Grid with `counts[k]` nodes spanning `domain[k]`.
    pub fn over(domain: &[(f64, f64)], counts: &[usize]) -> Result<Self> {
        GridSpec::new(domain.iter().map(|d| d.0).collect(), domain.iter().map(|d| d.1).collect(), counts.to_vec())
    }

    pub fn uniform(domain: &[(f64, f64)], per_axis: usize) -> Result<Self> {
        GridSpec::over(domain, &vec![per_axis; domain.len()])
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn lower(&self) -> &[f64] {
        &self.lo
    }

    pub fn upper(&self) -> &[f64] {
        &self.hi
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        if self.counts[axis] < 2 {
            0.0
        } else {
            (self.hi[axis] - self.lo[axis]) / (self.counts[axis] - 1) as f64
        }
    }

    pub fn spacings(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.spacing(k)).collect()
    }

    pub fn multi_index(&self, mut index: usize) -> Vec<usize> {
        let mut m = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            m[k] = index % self.counts[k];
            index /= self.counts[k];
        }
        m
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.counts).fold(0, |acc, (&i, &c)| acc * c + i)
    }

    pub fn coordinate(&self, axis: usize, i: f64) -> f64 {
        self.lo[axis] + i * self.spacing(axis)
    }

    pub fn node(&self, index: usize) -> Vec<f64> {
        self.multi_index(index).iter().enumerate().map(|(k, &i)| self.coordinate(k, i as f64)).collect()
    }

    /// Neighbor index after moving `delta` nodes along `axis`.
    pub fn offset(&self, index: usize, axis: usize, delta: isize) -> Option<usize> {
        let mut m = self.multi_index(index);
        let target = m[axis] as isize + delta;
        if target < 0 || target >= self.counts[axis] as isize {
            return None;
        }
        m[axis] = target as usize;
        Some(self.flat_index(&m))
    }

    /// Neighbor index after an arbitrary integer displacement.
    pub fn displaced(&self, index: usize, delta: &[isize]) -> Option<usize> {
        let mut m = self.multi_index(index);
        for k in 0..self.dim() {
            let t = m[k] as isize + delta[k];
            if t < 0 || t >= self.counts[k] as isize {
                return None;
            }
            m[k] = t as usize;
        }
        Some(self.flat_index(&m))
    }

    /// True when every axis has at least `margin` nodes on both sides.
    pub fn is_interior(&self, index: usize, margin: usize) -> bool {
        self.multi_index(index).iter().zip(&self.counts).all(|(&i, &c)| i >= margin && i + margin < c)
    }

    pub fn interior_indices(&self, margin: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_interior(i, margin)).collect()
    }

    pub fn on_boundary(&self, index: usize) -> bool {
        !self.is_interior(index, 1)
    }

    /// Node index whose coordinates agree with `u` to within `1e-9` of a cell.
    pub fn locate(&self, u: &[f64]) -> Option<usize> {
        if u.len() != self.dim() {
            return None;
        }
        let mut m = vec![0; self.dim()];
        for k in 0..self.dim() {
            let h = self.spacing(k);
            let f = if h == 0.0 { 0.0 } else { (u[k] - self.lo[k]) / h };
            let r = f.round();
            if (f - r).abs() > 1e-9 || r < 0.0 || r as usize >= self.counts[k] {
                return None;
            }
            m[k] = r as usize;
        }
        Some(self.flat_index(&m))
    }

    /// Nearest node to `u`, clamped to the grid.
    pub fn nearest(&self, u: &[f64]) -> usize {
        let m: Vec<usize> = (0..self.dim())
            .map(|k| {
                let h = self.spacing(k);
                if h == 0.0 {
                    0
                } else {
                    let f = ((u[k] - self.lo[k]) / h).round();
                    f.clamp(0.0, (self.counts[k] - 1) as f64) as usize
                }
            })
            .collect();
        self.flat_index(&m)
    }

    /// Volume of one grid cell in parameter space.
    pub fn cell_volume(&self) -> f64 {
        self.spacings().iter().product()
    }
}

/// Values sampled at the nodes of a [`GridSpec`].
#[derive(Debug, Clone)]
pub struct GridField<T> {
    pub grid: GridSpec,
    pub values: Vec<T>,
}

pub type ScalarField = GridField<f64>;
pub type MetricField = GridField<DMatrix<f64>>;

impl<T> GridField<T> {
    pub fn new(grid: GridSpec, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Argument(format!("field has {} values for {} nodes", values.len(), grid.len())));
        }
        Ok(GridField { grid, values })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> T) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.node(i))).collect();
        GridField { grid, values }
    }

    pub fn get(&self, index: usize) -> &T {
        &self.values[index]
    }
}

impl<T: Linear> GridField<T> {
    fn require_interior(&self, index: usize, margin: usize) -> Result<()> {
        if self.grid.is_interior(index, margin) {
            Ok(())
        } else {
            Err(Error::Domain { point: self.grid.node(index) })
        }
    }

    /// Fourth-order `∂/∂u_axis` at an interior node.
    pub fn d1(&self, index: usize, axis: usize) -> Result<T> {
        self.require_interior(index, STENCIL_RADIUS)?;
        let h = self.grid.spacing(axis);
        Ok(first_derivative(h, |o| self.values[self.grid.offset(index, axis, o).expect("interior")].clone()))
    }

    /// Fourth-order `∂²/∂u_a∂u_b` at an interior node.
    pub fn d2(&self, index: usize, a: usize, b: usize) -> Result<T> {
        self.require_interior(index, STENCIL_RADIUS)?;
        if a == b {
            let h = self.grid.spacing(a);
            Ok(second_derivative(h, |o| self.values[self.grid.offset(index, a, o).expect("interior")].clone()))
        } else {
            let (ha, hb) = (self.grid.spacing(a), self.grid.spacing(b));
            Ok(mixed_derivative(ha, hb, |oa, ob| {
                let mut d = vec![0isize; self.grid.dim()];
                d[a] = oa;
                d[b] = ob;
                self.values[self.grid.displaced(index, &d).expect("interior")].clone()
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        let g = GridSpec::over(&[(0.0, 1.0), (-1.0, 1.0), (2.0, 3.0)], &[4, 5, 3]).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(i)), i);
        }
        assert_eq!(g.locate(&g.node(17)), Some(17));
        assert_eq!(g.locate(&[0.1, 0.0, 2.0]), None);
    }

    #[test]
    fn stencils_are_exact_on_quartics() {
        let g = GridSpec::uniform(&[(0.0, 1.0), (0.0, 2.0)], 11).unwrap();
        let f = ScalarField::from_fn(g.clone(), |u| u[0].powi(4) + u[0] * u[1].powi(3) - 2.0 * u[1]);
        let idx = g.flat_index(&[5, 6]);
        let u = g.node(idx);
        assert!((f.d1(idx, 0).unwrap() - (4.0 * u[0].powi(3) + u[1].powi(3))).abs() < 1e-10);
        assert!((f.d2(idx, 0, 0).unwrap() - 12.0 * u[0].powi(2)).abs() < 1e-9);
        assert!((f.d2(idx, 0, 1).unwrap() - 3.0 * u[1].powi(2)).abs() < 1e-9);
        assert!((f.d2(idx, 1, 1).unwrap() - 6.0 * u[0] * u[1]).abs() < 1e-9);
        assert!(f.d1(g.flat_index(&[1, 5]), 0).is_err());
    }

    #[test]
    fn first_derivative_converges_at_fourth_order() {
        let err = |h: f64| (first_derivative(h, |o| (0.3 + o as f64 * h).sin()) - 0.3f64.cos()).abs();
        let slope = (err(0.1) / err(0.05)).log2();
        assert!(slope > 3.8, "slope {slope}");
    }
}
