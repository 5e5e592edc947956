//! Surfaces of curvature −1 integrated from solutions of `φ_uv = sin φ`.
//!
//! In asymptotic Chebyshev coordinates the surface has
//! `I = du² + 2 cos φ du dv + dv²` and `II = 2 sin φ du dv`. With the frame
//! `e1 = F_u`, `e3 = N`, `e2 = e3 × e1` the Gauss–Weingarten system reads
//!
//! ```text
//! e1_u = −φ_u e2        e1_v = sin φ e3
//! e2_u = φ_u e1 + e3    e2_v = −cos φ e3
//! e3_u = −e2            e3_v = −sin φ e1 + cos φ e2
//! F_u = e1              F_v = cos φ e1 + sin φ e2
//! ```
//!
//! and is integrable exactly when `φ` solves sine-Gordon.

use std::sync::Arc;

use nalgebra::{DVector, Vector3};

use crate::catalog::{CatalogEntry, Expectations};
use crate::curvature::riemann_curvature;
use crate::error::{Error, Result};
use crate::geometry::{first_fundamental_form, AmbientModel, ImmersionChart, SampledMap};
use crate::grid::{GridField, GridSpec, ScalarField, STENCIL_RADIUS};

#[derive(Debug, Clone, Copy)]
struct Frame {
    e1: Vector3<f64>,
    e2: Vector3<f64>,
    e3: Vector3<f64>,
    f: Vector3<f64>,
}

impl Frame {
    fn identity() -> Self {
        Frame { e1: Vector3::x(), e2: Vector3::y(), e3: Vector3::z(), f: Vector3::zeros() }
    }

    fn axpy(&self, h: f64, d: &Frame) -> Frame {
        Frame { e1: self.e1 + d.e1 * h, e2: self.e2 + d.e2 * h, e3: self.e3 + d.e3 * h, f: self.f + d.f * h }
    }

    fn distance(&self, o: &Frame) -> f64 {
        [(self.e1 - o.e1).norm(), (self.e2 - o.e2).norm(), (self.e3 - o.e3).norm(), (self.f - o.f).norm()]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Coefficients along `u` need `(φ_u)`; along `v` they need `φ`.
fn rhs_u(fr: &Frame, phi_u: f64) -> Frame {
    Frame { e1: -fr.e2 * phi_u, e2: fr.e1 * phi_u + fr.e3, e3: -fr.e2, f: fr.e1 }
}

fn rhs_v(fr: &Frame, phi: f64) -> Frame {
    let (s, c) = phi.sin_cos();
    Frame { e1: fr.e3 * s, e2: -fr.e3 * c, e3: -fr.e1 * s + fr.e2 * c, f: fr.e1 * c + fr.e2 * s }
}

/// One RK4 step given the coefficient at the start, midpoint and end.
fn rk4(fr: &Frame, h: f64, coef: [f64; 3], rhs: fn(&Frame, f64) -> Frame) -> Frame {
    let k1 = rhs(fr, coef[0]);
    let k2 = rhs(&fr.axpy(0.5 * h, &k1), coef[1]);
    let k3 = rhs(&fr.axpy(0.5 * h, &k2), coef[1]);
    let k4 = rhs(&fr.axpy(h, &k3), coef[2]);
    Frame {
        e1: fr.e1 + (k1.e1 + (k2.e1 + k3.e1) * 2.0 + k4.e1) * (h / 6.0),
        e2: fr.e2 + (k1.e2 + (k2.e2 + k3.e2) * 2.0 + k4.e2) * (h / 6.0),
        e3: fr.e3 + (k1.e3 + (k2.e3 + k3.e3) * 2.0 + k4.e3) * (h / 6.0),
        f: fr.f + (k1.f + (k2.f + k3.f) * 2.0 + k4.f) * (h / 6.0),
    }
}

/// Cubic interpolation at the midpoint between samples `k` and `k + 1`.
fn midpoint(line: &[f64], k: usize) -> f64 {
    let m = line.len();
    if m < 4 {
        return 0.5 * (line[k] + line[k + 1]);
    }
    if k == 0 {
        (5.0 * line[0] + 15.0 * line[1] - 5.0 * line[2] + line[3]) / 16.0
    } else if k + 2 >= m {
        (5.0 * line[m - 1] + 15.0 * line[m - 2] - 5.0 * line[m - 3] + line[m - 4]) / 16.0
    } else {
        (-line[k - 1] + 9.0 * line[k] + 9.0 * line[k + 1] - line[k + 2]) / 16.0
    }
}

/// Fourth-order derivative of equally spaced samples, one-sided near the ends.
fn derivative(line: &[f64], h: f64) -> Vec<f64> {
    let m = line.len();
    (0..m)
        .map(|k| {
            let at = |o: isize| line[(k as isize + o) as usize];
            if m < 5 {
                let (a, b) = (k.saturating_sub(1), (k + 1).min(m - 1));
                (line[b] - line[a]) / ((b - a) as f64 * h)
            } else if k == 0 {
                (-25.0 * at(0) + 48.0 * at(1) - 36.0 * at(2) + 16.0 * at(3) - 3.0 * at(4)) / (12.0 * h)
            } else if k == 1 {
                (-3.0 * at(-1) - 10.0 * at(0) + 18.0 * at(1) - 6.0 * at(2) + at(3)) / (12.0 * h)
            } else if k + 1 == m {
                (25.0 * at(0) - 48.0 * at(-1) + 36.0 * at(-2) - 16.0 * at(-3) + 3.0 * at(-4)) / (12.0 * h)
            } else if k + 2 == m {
                (3.0 * at(1) + 10.0 * at(0) - 18.0 * at(-1) + 6.0 * at(-2) - at(-3)) / (12.0 * h)
            } else {
                (at(-2) - 8.0 * at(-1) + 8.0 * at(1) - at(2)) / (12.0 * h)
            }
        })
        .collect()
}

fn integrate_line(start: Frame, coef: &[f64], h: f64, rhs: fn(&Frame, f64) -> Frame) -> Vec<Frame> {
    let mut out = Vec::with_capacity(coef.len());
    out.push(start);
    for k in 0..coef.len() - 1 {
        let next = rk4(&out[k], h, [coef[k], midpoint(coef, k), coef[k + 1]], rhs);
        out.push(next);
    }
    out
}

/// A sine-Gordon solution sampled on a `(u, v)` grid.
#[derive(Debug, Clone)]
pub struct SineGordonField {
    pub phi: ScalarField,
}

impl SineGordonField {
    pub fn new(phi: ScalarField) -> Result<Self> {
        if phi.grid.dim() != 2 {
            return Err(Error::Argument("sine-Gordon field must be two-dimensional".into()));
        }
        if phi.grid.counts().iter().any(|&c| c < 2 * STENCIL_RADIUS + 1) {
            return Err(Error::Argument("sine-Gordon grid needs at least 5 nodes per axis".into()));
        }
        Ok(SineGordonField { phi })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        SineGordonField::new(ScalarField::from_fn(grid, |u| f(u[0], u[1])))
    }

    /// `φ = 4 arctan(exp(u + v))`.
    pub fn one_soliton(grid: GridSpec) -> Result<Self> {
        SineGordonField::from_fn(grid, |u, v| 4.0 * (u + v).exp().atan())
    }

    /// `max |φ_uv − sin φ|` over interior nodes.
    pub fn residual(&self) -> f64 {
        self.phi
            .grid
            .interior_indices(STENCIL_RADIUS)
            .into_iter()
            .map(|i| {
                let mixed = self.phi.d2(i, 0, 1).expect("interior");
                (mixed - self.phi.values[i].sin()).abs()
            })
            .fold(0.0, f64::max)
    }

    fn row(&self, j: usize) -> Vec<f64> {
        let nu = self.phi.grid.counts()[0];
        (0..nu).map(|i| self.phi.values[self.phi.grid.flat_index(&[i, j])]).collect()
    }

    fn column(&self, i: usize) -> Vec<f64> {
        let nv = self.phi.grid.counts()[1];
        (0..nv).map(|j| self.phi.values[self.phi.grid.flat_index(&[i, j])]).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SineGordonOptions {
    pub phi_tolerance: f64,
    pub monodromy_tolerance: f64,
}

impl Default for SineGordonOptions {
    fn default() -> Self {
        SineGordonOptions { phi_tolerance: 1e-4, monodromy_tolerance: 1e-5 }
    }
}

/// Output of the frame integration.
#[derive(Debug, Clone)]
pub struct SineGordonSurface {
    pub chart: ImmersionChart,
    pub field: SineGordonField,
    pub phi_residual: f64,
    /// Largest disagreement between the `u`-then-`v` and `v`-then-`u` integrations.
    pub monodromy: f64,
}

impl SineGordonSurface {
    /// Metric `I = du² + 2 cos φ du dv + dv²` at a node.
    pub fn expected_metric(&self, index: usize) -> nalgebra::DMatrix<f64> {
        let c = self.field.phi.values[index].cos();
        nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, c, c, 1.0])
    }

    /// Nodes where the grid engine has a full stencil.
    pub fn inner_grid(&self) -> Result<GridSpec> {
        crate::verify::sweep_grid(&self.chart, &[])
    }

    /// `max |g − I|` over [`inner_grid`](Self::inner_grid), entrywise.
    pub fn metric_error(&self) -> Result<f64> {
        let inner = self.inner_grid()?;
        let outer = &self.field.phi.grid;
        let mut worst: f64 = 0.0;
        for i in 0..inner.len() {
            let m: Vec<usize> = inner.multi_index(i).iter().map(|k| k + STENCIL_RADIUS).collect();
            let g = first_fundamental_form(&self.chart, &inner.node(i))?;
            worst = worst.max((g - self.expected_metric(outer.flat_index(&m))).amax());
        }
        Ok(worst)
    }

    /// `max |K + 1|` from the induced metric, differentiated once more on the inner grid.
    pub fn curvature_error(&self) -> Result<f64> {
        let inner = self.inner_grid()?;
        let values = (0..inner.len())
            .map(|i| first_fundamental_form(&self.chart, &inner.node(i)))
            .collect::<Result<Vec<_>>>()?;
        let metric = GridField::new(inner.clone(), values)?;
        let mut worst: f64 = 0.0;
        for i in inner.interior_indices(STENCIL_RADIUS) {
            worst = worst.max((riemann_curvature(&metric, i)?.sectional(0, 1) + 1.0).abs());
        }
        Ok(worst)
    }

    pub fn entry(self, name: &str) -> CatalogEntry {
        CatalogEntry {
            name: name.into(),
            chart: self.chart,
            params: vec![],
            expected: Expectations {
                flat_normal_bundle: true,
                big_c_positive: true,
                distinct_principal_normals: true,
                constant_curvature: true,
            },
            notes: "asymptotic-coordinate K = -1 patch integrated from a sine-Gordon solution",
        }
    }
}

/// Integrate the frame system for `field`, starting from the standard frame at the first node.
pub fn sine_gordon_surface(field: SineGordonField, options: SineGordonOptions) -> Result<SineGordonSurface> {
    let grid = field.phi.grid.clone();
    let (nu, nv) = (grid.counts()[0], grid.counts()[1]);
    let (hu, hv) = (grid.spacing(0), grid.spacing(1));
    if let Some(bad) = field.phi.values.iter().find(|p| !(**p > 0.0 && **p < std::f64::consts::PI)) {
        return Err(Error::Hypothesis(format!("phi = {bad} leaves (0, pi); not an immersion")));
    }
    let phi_residual = field.residual();
    if !(phi_residual <= options.phi_tolerance) {
        return Err(Error::Hypothesis(format!(
            "sine-Gordon residual {phi_residual:.3e} exceeds {:.1e}",
            options.phi_tolerance
        )));
    }
    let phi_u: Vec<Vec<f64>> = (0..nv).map(|j| derivative(&field.row(j), hu)).collect();
    let columns: Vec<Vec<f64>> = (0..nu).map(|i| field.column(i)).collect();

    // u along the first row, then v up every column
    let base_row = integrate_line(Frame::identity(), &phi_u[0], hu, rhs_u);
    let mut primary = vec![Frame::identity(); grid.len()];
    for i in 0..nu {
        for (j, fr) in integrate_line(base_row[i], &columns[i], hv, rhs_v).into_iter().enumerate() {
            primary[grid.flat_index(&[i, j])] = fr;
        }
    }
    // v along the first column, then u along every row
    let base_col = integrate_line(Frame::identity(), &columns[0], hv, rhs_v);
    let mut monodromy: f64 = 0.0;
    for j in 0..nv {
        for (i, fr) in integrate_line(base_col[j], &phi_u[j], hu, rhs_u).into_iter().enumerate() {
            monodromy = monodromy.max(fr.distance(&primary[grid.flat_index(&[i, j])]));
        }
    }
    if !(monodromy <= options.monodromy_tolerance) {
        return Err(Error::Numerical(format!(
            "frame monodromy {monodromy:.3e} exceeds {:.1e}",
            options.monodromy_tolerance
        )));
    }

    let points = primary.iter().map(|fr| DVector::from_column_slice(fr.f.as_slice())).collect();
    let sampled = SampledMap::new(grid.clone(), points)?;
    let domain = (0..2).map(|k| (grid.lower()[k], grid.upper()[k])).collect();
    let chart = ImmersionChart::new("sine_gordon", Arc::new(sampled), AmbientModel::euclidean(3), -1.0, domain)?;
    Ok(SineGordonSurface { chart, field, phi_residual, monodromy })
}

/// Box of the 1-soliton patch; `u + v < 0` keeps `0 < φ < π`.
pub const SOLITON_DOMAIN: [(f64, f64); 2] = [(-1.5, -0.3), (-1.5, -0.3)];

pub fn soliton_surface(resolution: usize) -> Result<SineGordonSurface> {
    let grid = GridSpec::uniform(&SOLITON_DOMAIN, resolution)?;
    sine_gordon_surface(SineGordonField::one_soliton(grid)?, SineGordonOptions::default())
}

pub fn soliton_entry(resolution: usize) -> Result<CatalogEntry> {
    Ok(soliton_surface(resolution)?.entry("sine_gordon_soliton"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soliton_solves_sine_gordon() {
        let grid = GridSpec::uniform(&SOLITON_DOMAIN, 61).unwrap();
        let f = SineGordonField::one_soliton(grid).unwrap();
        assert!(f.residual() < 1e-6, "{}", f.residual());
    }

    #[test]
    fn non_solution_is_rejected() {
        let grid = GridSpec::uniform(&SOLITON_DOMAIN, 41).unwrap();
        let f = SineGordonField::from_fn(grid, |u, v| 1.0 + 0.2 * u * v).unwrap();
        assert!(matches!(sine_gordon_surface(f, SineGordonOptions::default()), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn constant_right_angle_gives_unit_chebyshev_net() {
        // φ = π/2 is not a solution (sin φ = 1), so relax the gates and check
        // only that the integrated coordinate curves have unit speed.
        let grid = GridSpec::uniform(&[(0.0, 1.0), (0.0, 1.0)], 21).unwrap();
        let f = SineGordonField::from_fn(grid.clone(), |_, _| std::f64::consts::FRAC_PI_2).unwrap();
        let opts = SineGordonOptions { phi_tolerance: 2.0, monodromy_tolerance: f64::INFINITY };
        let s = sine_gordon_surface(f, opts).unwrap();
        let pts = &s.chart.map().samples().unwrap().points;
        let h = grid.spacing(0);
        let speed = |line: Vec<usize>| {
            let d: Vec<Vec<f64>> =
                (0..3).map(|a| derivative(&line.iter().map(|&i| pts[i][a]).collect::<Vec<_>>(), h)).collect();
            (0..line.len()).map(|k| (d[0][k].powi(2) + d[1][k].powi(2) + d[2][k].powi(2)).sqrt()).collect::<Vec<_>>()
        };
        for v in speed((0..21).map(|i| grid.flat_index(&[i, 0])).collect()) {
            assert!((v - 1.0).abs() < 1e-6, "{v}");
        }
        for v in speed((0..21).map(|j| grid.flat_index(&[7, j])).collect()) {
            assert!((v - 1.0).abs() < 1e-6, "{v}");
        }
    }

    #[test]
    fn soliton_frames_commute() {
        let s = soliton_surface(41).unwrap();
        assert!(s.monodromy < 1e-7, "{}", s.monodromy);
        assert!(s.phi_residual < 1e-4);
    }

    #[test]
    fn soliton_metric_and_curvature() {
        let s = soliton_surface(61).unwrap();
        assert!(s.metric_error().unwrap() < 1e-3);
        assert!(s.curvature_error().unwrap() < 1e-2);
    }

    #[test]
    fn midpoint_interpolation_is_cubic_exact() {
        let line: Vec<f64> = (0..6).map(|k| (k as f64).powi(3) - 2.0 * k as f64).collect();
        let exact = |x: f64| x.powi(3) - 2.0 * x;
        for k in 0..5 {
            assert!((midpoint(&line, k) - exact(k as f64 + 0.5)).abs() < 1e-12);
        }
        let d = derivative(&line, 1.0);
        for (k, dk) in d.iter().enumerate() {
            assert!((dk - (3.0 * (k as f64).powi(2) - 2.0)).abs() < 1e-10);
        }
    }
}
