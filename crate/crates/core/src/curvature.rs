//! Riemann curvature of a sampled metric field by fourth-order differences.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{GridField, GridSpec, MetricField, STENCIL_RADIUS};

/// All components `R_ijkl` at one node, with the convention
/// `R_1212 = K det g` on a surface.
#[derive(Debug, Clone)]
pub struct RiemannTensor {
    pub n: usize,
    pub g: DMatrix<f64>,
    components: Vec<f64>,
}

impl RiemannTensor {
    fn slot(n: usize, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * n + j) * n + k) * n + l
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.components[Self::slot(self.n, i, j, k, l)]
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Sectional curvature of the coordinate plane `(i, j)`.
    pub fn sectional(&self, i: usize, j: usize) -> f64 {
        let area = self.g[(i, i)] * self.g[(j, j)] - self.g[(i, j)] * self.g[(i, j)];
        self.get(i, j, i, j) / area
    }

    /// `max |R_ijkl − c (g_ik g_jl − g_il g_jk)|`.
    pub fn constant_curvature_residual(&self, c: f64) -> f64 {
        let n = self.n;
        let g = &self.g;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let model = c * (g[(i, k)] * g[(j, l)] - g[(i, l)] * g[(j, k)]);
                        worst = worst.max((self.get(i, j, k, l) - model).abs());
                    }
                }
            }
        }
        worst
    }

    /// Flatness measure `max |R_ijkl| / (1 + ‖g‖²)`.
    pub fn normalized_max(&self) -> f64 {
        self.max_abs() / (1.0 + self.g.norm_squared())
    }
}

/// Curvature tensor of `metric` at an interior node.
pub fn riemann_curvature(metric: &MetricField, index: usize) -> Result<RiemannTensor> {
    let n = metric.grid.dim();
    let g = metric.get(index).clone();
    let g_inv = g.clone().try_inverse().ok_or_else(|| Error::Degenerate { point: metric.grid.node(index) })?;
    let dg: Vec<DMatrix<f64>> = (0..n).map(|k| metric.d1(index, k)).collect::<Result<_>>()?;
    let mut ddg = vec![vec![DMatrix::zeros(n, n); n]; n];
    for a in 0..n {
        for b in a..n {
            let m = metric.d2(index, a, b)?;
            ddg[b][a] = m.clone();
            ddg[a][b] = m;
        }
    }
    // Γ^m_jk
    let mut gamma = vec![DMatrix::zeros(n, n); n];
    for (m, gm) in gamma.iter_mut().enumerate() {
        for j in 0..n {
            for k in 0..n {
                let mut s = 0.0;
                for p in 0..n {
                    s += g_inv[(m, p)] * 0.5 * (dg[j][(p, k)] + dg[k][(p, j)] - dg[p][(j, k)]);
                }
                gm[(j, k)] = s;
            }
        }
    }
    let mut components = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut r = 0.5 * (ddg[j][k][(i, l)] + ddg[i][l][(j, k)] - ddg[i][k][(j, l)] - ddg[j][l][(i, k)]);
                    for m in 0..n {
                        for p in 0..n {
                            r +=
                                g[(m, p)] * (gamma[m][(j, k)] * gamma[p][(i, l)] - gamma[m][(i, k)] * gamma[p][(j, l)]);
                        }
                    }
                    components[RiemannTensor::slot(n, i, j, k, l)] = r;
                }
            }
        }
    }
    Ok(RiemannTensor { n, g, components })
}

/// Sample a field at every node, in parallel; any node error aborts.
pub fn sample_field<T: Send>(grid: &GridSpec, f: impl Fn(&[f64]) -> Result<T> + Sync) -> Result<GridField<T>> {
    let values = (0..grid.len()).into_par_iter().map(|i| f(&grid.node(i))).collect::<Result<Vec<T>>>()?;
    GridField::new(grid.clone(), values)
}

/// Curvature tensors at every node with a full stencil, in node order.
pub fn curvature_sweep(metric: &MetricField) -> Result<Vec<(usize, RiemannTensor)>> {
    metric
        .grid
        .interior_indices(STENCIL_RADIUS)
        .into_par_iter()
        .map(|i| riemann_curvature(metric, i).map(|r| (i, r)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(domain: &[(f64, f64)], n: usize, g: impl Fn(&[f64]) -> DMatrix<f64>) -> MetricField {
        GridField::from_fn(GridSpec::uniform(domain, n).unwrap(), g)
    }

    #[test]
    fn constant_metric_is_flat() {
        let m = field(&[(0.0, 1.0), (0.0, 1.0)], 9, |_| DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]));
        let r = riemann_curvature(&m, m.grid.flat_index(&[4, 4])).unwrap();
        assert!(r.max_abs() < 1e-12);
    }

    #[test]
    fn round_sphere_and_poincare_disk() {
        let s = field(&[(0.5, 1.5), (0.0, 1.0)], 41, |u| {
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, u[0].sin().powi(2)]))
        });
        let r = riemann_curvature(&s, s.grid.flat_index(&[20, 20])).unwrap();
        assert!((r.sectional(0, 1) - 1.0).abs() < 1e-6);
        assert!(r.constant_curvature_residual(1.0) < 1e-6);
        // the induced metric of the hyperbolic oracle chart
        let h = field(&[(-0.5, 0.5), (-0.4, 0.6)], 41, |u| {
            let f = 4.0 / (1.0 - u[0] * u[0] - u[1] * u[1]).powi(2);
            DMatrix::identity(2, 2) * f
        });
        let r = riemann_curvature(&h, h.grid.flat_index(&[13, 27])).unwrap();
        assert!((r.sectional(0, 1) + 1.0).abs() < 2e-5, "{}", r.sectional(0, 1));
    }

    #[test]
    fn product_metric_in_three_dimensions() {
        // H² × R: planes containing the line are flat, the H² plane has K = −1
        let m = field(&[(-0.3, 0.3), (-0.3, 0.3), (0.0, 1.0)], 25, |u| {
            let f = 4.0 / (1.0 - u[0] * u[0] - u[1] * u[1]).powi(2);
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![f, f, 1.0]))
        });
        let r = riemann_curvature(&m, m.grid.flat_index(&[12, 10, 12])).unwrap();
        assert!((r.sectional(0, 1) + 1.0).abs() < 1e-5);
        assert!(r.sectional(0, 2).abs() < 1e-8);
        assert!(r.constant_curvature_residual(-1.0) > 0.1);
    }

    #[test]
    fn boundary_node_is_a_domain_error() {
        let m = field(&[(0.0, 1.0), (0.0, 1.0)], 9, |_| DMatrix::identity(2, 2));
        assert!(matches!(riemann_curvature(&m, 1), Err(Error::Domain { .. })));
    }
}
