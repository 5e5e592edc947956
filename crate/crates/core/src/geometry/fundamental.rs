//! First and second fundamental forms of a chart at a point.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::ambient::AmbientModel;
use crate::geometry::chart::{ImmersionChart, Jet};

/// Normal projections shorter than this (relative to a unit basis vector) are
/// skipped when building the normal frame.
const FRAME_ACCEPT: f64 = 1e-3;

/// Per-point record of the induced metric and the second fundamental form.
#[derive(Debug, Clone)]
pub struct FundamentalData {
    pub point: Vec<f64>,
    pub position: DVector<f64>,
    /// Coordinate tangent vectors `∂F/∂u_i` in the container.
    pub tangents: Vec<DVector<f64>>,
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    /// Lower Cholesky factor of `g`.
    pub g_chol: DMatrix<f64>,
    /// Orthonormal normal frame `ξ_1..ξ_p` in the container.
    pub normal_frame: Vec<DVector<f64>>,
    /// `alpha[i][j]` = components of `α(∂_i, ∂_j)` in the normal frame.
    pub alpha: Vec<Vec<DVector<f64>>>,
    /// `christoffel[k][(i, j)] = Γ^k_ij` of the induced metric.
    pub christoffel: Vec<DMatrix<f64>>,
    pub sff_norm_sq: f64,
    ambient: AmbientModel,
}

impl FundamentalData {
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn codim(&self) -> usize {
        self.normal_frame.len()
    }

    pub fn ambient(&self) -> &AmbientModel {
        &self.ambient
    }

    /// Container vector of a normal given by frame components.
    pub fn normal_to_container(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        let mut v = DVector::zeros(self.position.len());
        for (c, xi) in coeffs.iter().zip(&self.normal_frame) {
            v.axpy(*c, xi, 1.0);
        }
        v
    }

    /// Frame components of a container vector's normal part.
    pub fn normal_components(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.codim(), self.normal_frame.iter().map(|xi| self.ambient.inner(v, xi)))
    }

    /// Container vector of a tangent vector given in coordinate components.
    pub fn tangent_to_container(&self, comps: &DVector<f64>) -> DVector<f64> {
        let mut v = DVector::zeros(self.position.len());
        for (c, t) in comps.iter().zip(&self.tangents) {
            v.axpy(*c, t, 1.0);
        }
        v
    }

    /// Orthogonal projection of a container vector onto `N_fM`.
    pub fn project_normal(&self, v: &DVector<f64>) -> DVector<f64> {
        self.normal_to_container(&self.normal_components(v))
    }

    /// `α(X, Y)` in frame components for coordinate vectors `X`, `Y`.
    pub fn alpha_of(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.codim());
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                let w = x[i] * y[j];
                if w != 0.0 {
                    out.axpy(w, &self.alpha[i][j], 1.0);
                }
            }
        }
        out
    }

    /// Matrices `B_a = ⟨α(∂_i, ∂_j), ξ_a⟩`.
    pub fn shape_forms(&self) -> Vec<DMatrix<f64>> {
        let n = self.dim();
        (0..self.codim()).map(|a| DMatrix::from_fn(n, n, |i, j| self.alpha[i][j][a])).collect()
    }

    /// Shape operators in a `g`-orthonormal basis: `S_a = L⁻¹ B_a L⁻ᵀ` with `g = L Lᵀ`.
    pub fn orthonormal_shape_operators(&self) -> Vec<DMatrix<f64>> {
        let l_inv = self.g_chol.clone().try_inverse().expect("Cholesky factor is invertible");
        self.shape_forms()
            .into_iter()
            .map(|b| {
                let s = &l_inv * b * l_inv.transpose();
                (&s + s.transpose()) * 0.5
            })
            .collect()
    }

    /// `g`-inner product of coordinate vectors.
    pub fn g_inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (x.transpose() * &self.g * y)[(0, 0)]
    }

    /// Levi-Civita `Γ^k_ij X^i Y^j` (the connection part of `∇_X Y`).
    pub fn connection_term(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.christoffel.iter().map(|gk| (x.transpose() * gk * y)[(0, 0)]))
    }
}

fn symmetric(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn gram(ambient: &AmbientModel, v: &[DVector<f64>]) -> DMatrix<f64> {
    let n = v.len();
    symmetric(DMatrix::from_fn(n, n, |i, j| ambient.inner(&v[i], &v[j])))
}

/// Induced metric `g_ij = ⟨∂_i F, ∂_j F⟩`, symmetric by construction.
pub fn first_fundamental_form(chart: &ImmersionChart, u: &[f64]) -> Result<DMatrix<f64>> {
    let jet = chart.jet(u, 1)?;
    let g = gram(chart.ambient(), &jet.d1);
    if Cholesky::new(g.clone()).is_none() {
        return Err(Error::Degenerate { point: u.to_vec() });
    }
    Ok(g)
}

/// Orthonormal basis of the normal space by Gram–Schmidt on the projected standard basis.
fn normal_frame(
    ambient: &AmbientModel,
    x: &DVector<f64>,
    tangents: &[DVector<f64>],
    g_inv: &DMatrix<f64>,
    expected: usize,
) -> Result<Vec<DVector<f64>>> {
    let dim = x.len();
    let n = tangents.len();
    let radial_norm = ambient.inner(x, x);
    let mut frame: Vec<DVector<f64>> = Vec::with_capacity(expected);
    for e in 0..dim {
        if frame.len() == expected {
            break;
        }
        let mut w = DVector::zeros(dim);
        w[e] = 1.0;
        // remove the tangential part using the dual basis g^{ij} ∂_j F
        let c: Vec<f64> = tangents.iter().map(|t| ambient.inner(&w, t)).collect();
        for i in 0..n {
            let coef: f64 = (0..n).map(|j| g_inv[(i, j)] * c[j]).sum();
            w.axpy(-coef, &tangents[i], 1.0);
        }
        if !ambient.is_flat() {
            let r = ambient.inner(&w, x) / radial_norm;
            w.axpy(-r, x, 1.0);
        }
        for _ in 0..2 {
            for f in &frame {
                let r = ambient.inner(&w, f);
                w.axpy(-r, f, 1.0);
            }
        }
        let norm_sq = ambient.inner(&w, &w);
        if norm_sq > FRAME_ACCEPT * FRAME_ACCEPT {
            frame.push(w / norm_sq.sqrt());
        }
    }
    if frame.len() < expected {
        return Err(Error::Frame { found: frame.len(), expected });
    }
    Ok(frame)
}

/// Assemble [`FundamentalData`] from a second-order jet.
pub fn fundamental_from_jet(ambient: &AmbientModel, jet: &Jet) -> Result<FundamentalData> {
    let n = jet.d1.len();
    let d2 = jet.d2.as_ref().ok_or_else(|| Error::Argument("second-order jet required".into()))?;
    let g = gram(ambient, &jet.d1);
    let chol = Cholesky::new(g.clone()).ok_or_else(|| Error::Degenerate { point: jet.point.clone() })?;
    let g_inv = symmetric(chol.inverse());
    let l = chol.l();
    let p = ambient.dimension() - n;
    let frame = normal_frame(ambient, &jet.x, &jet.d1, &g_inv, p)?;
    let alpha: Vec<Vec<DVector<f64>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let (a, b) = if i <= j { (i, j) } else { (j, i) };
                    DVector::from_iterator(p, frame.iter().map(|xi| ambient.inner(&d2[a][b], xi)))
                })
                .collect()
        })
        .collect();
    // first-kind symbols Γ_{l,ij} = ⟨∂_ij F, ∂_l F⟩, raised with g^{-1}
    let first_kind: Vec<DMatrix<f64>> =
        (0..n).map(|l| symmetric(DMatrix::from_fn(n, n, |i, j| ambient.inner(&d2[i][j], &jet.d1[l])))).collect();
    let christoffel: Vec<DMatrix<f64>> = (0..n)
        .map(|k| {
            let mut m = DMatrix::zeros(n, n);
            for (l, fk) in first_kind.iter().enumerate() {
                m += fk * g_inv[(k, l)];
            }
            m
        })
        .collect();
    let mut fd = FundamentalData {
        point: jet.point.clone(),
        position: jet.x.clone(),
        tangents: jet.d1.clone(),
        g,
        g_inv,
        g_chol: l,
        normal_frame: frame,
        alpha,
        christoffel,
        sff_norm_sq: 0.0,
        ambient: ambient.clone(),
    };
    fd.sff_norm_sq = fd.orthonormal_shape_operators().iter().map(|s| s.norm_squared()).sum();
    Ok(fd)
}

/// Second fundamental form of `chart` at `u`, in the deterministic normal frame.
pub fn second_fundamental_form(chart: &ImmersionChart, u: &[f64]) -> Result<FundamentalData> {
    let jet = chart.jet(u, 2)?;
    fundamental_from_jet(chart.ambient(), &jet)
}

/// `max_{a<b} ‖S_a S_b − S_b S_a‖_F` over the orthonormal shape operators.
///
/// In a space-form ambient the Ricci equation makes this vanish exactly when
/// the normal curvature tensor does.
pub fn normal_curvature_residual(fd: &FundamentalData) -> f64 {
    let s = fd.orthonormal_shape_operators();
    let mut worst: f64 = 0.0;
    for a in 0..s.len() {
        for b in (a + 1)..s.len() {
            let c = &s[a] * &s[b] - &s[b] * &s[a];
            worst = worst.max(c.norm());
        }
    }
    worst
}

/// Commuting-shape-operator test at `u`: `(flat, residual)`.
pub fn normal_bundle_is_flat(chart: &ImmersionChart, u: &[f64], tolerance: f64) -> Result<(bool, f64)> {
    let fd = second_fundamental_form(chart, u)?;
    let r = normal_curvature_residual(&fd);
    Ok((r <= tolerance, r))
}
