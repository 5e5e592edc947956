use nalgebra::DVector;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AmbientKind {
    Euclidean,
    Sphere,
    Hyperbolic,
}

impl AmbientKind {
    pub fn name(self) -> &'static str {
        match self {
            AmbientKind::Euclidean => "euclidean",
            AmbientKind::Sphere => "sphere",
            AmbientKind::Hyperbolic => "hyperbolic",
        }
    }
}

/// Model of the ambient space form `Q^m_c̃` inside a flat container.
///
/// Euclidean space is its own container. The sphere sits in `R^{m+1}` as
/// `⟨x,x⟩ = 1/c̃`; hyperbolic space is the upper sheet of `⟨x,x⟩ = 1/c̃` in
/// Lorentzian `R^{m,1}` with the minus sign on the last coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientModel {
    kind: AmbientKind,
    curvature: f64,
    dim: usize,
}

impl AmbientModel {
    pub fn new(kind: AmbientKind, dim: usize, curvature: f64) -> Result<Self> {
        let ok = match kind {
            AmbientKind::Euclidean => curvature == 0.0,
            AmbientKind::Sphere => curvature > 0.0,
            AmbientKind::Hyperbolic => curvature < 0.0,
        };
        if !ok {
            return Err(Error::Argument(format!("{} model cannot have curvature {curvature}", kind.name())));
        }
        if dim == 0 {
            return Err(Error::Argument("ambient dimension must be positive".into()));
        }
        Ok(AmbientModel { kind, curvature, dim })
    }

    pub fn euclidean(dim: usize) -> Self {
        AmbientModel { kind: AmbientKind::Euclidean, curvature: 0.0, dim }
    }

    pub fn sphere(dim: usize, curvature: f64) -> Result<Self> {
        AmbientModel::new(AmbientKind::Sphere, dim, curvature)
    }

    pub fn hyperbolic(dim: usize, curvature: f64) -> Result<Self> {
        AmbientModel::new(AmbientKind::Hyperbolic, dim, curvature)
    }

    pub fn kind(&self) -> AmbientKind {
        self.kind
    }

    pub fn curvature(&self) -> f64 {
        self.curvature
    }

    /// Dimension `m` of the space form itself.
    pub fn dimension(&self) -> usize {
        self.dim
    }

    /// Dimension of the flat container: `m` for Euclidean, `m + 1` otherwise.
    pub fn embedding_dimension(&self) -> usize {
        match self.kind {
            AmbientKind::Euclidean => self.dim,
            _ => self.dim + 1,
        }
    }

    pub fn is_flat(&self) -> bool {
        self.kind == AmbientKind::Euclidean
    }

    /// Diagonal of the container metric.
    pub fn signature(&self) -> Vec<f64> {
        let mut s = vec![1.0; self.embedding_dimension()];
        if self.kind == AmbientKind::Hyperbolic {
            *s.last_mut().unwrap() = -1.0;
        }
        s
    }

    /// Container inner product.
    pub fn inner(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        let d = a.dot(b);
        if self.kind == AmbientKind::Hyperbolic {
            let l = a.len() - 1;
            d - 2.0 * a[l] * b[l]
        } else {
            d
        }
    }

    /// `|⟨x,x⟩ − 1/c̃|` for curved models (plus sheet check for hyperbolic), 0 for flat.
    pub fn constraint_residual(&self, x: &DVector<f64>) -> f64 {
        match self.kind {
            AmbientKind::Euclidean => 0.0,
            AmbientKind::Sphere => (self.inner(x, x) - 1.0 / self.curvature).abs(),
            AmbientKind::Hyperbolic => {
                let r = (self.inner(x, x) - 1.0 / self.curvature).abs();
                if x[x.len() - 1] > 0.0 {
                    r
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Codimension inside the container contributed by the model constraint.
    pub fn radial_dimensions(&self) -> usize {
        usize::from(!self.is_flat())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curvature_sign_is_enforced() {
        assert!(AmbientModel::sphere(3, -1.0).is_err());
        assert!(AmbientModel::hyperbolic(3, 1.0).is_err());
        assert!(AmbientModel::new(AmbientKind::Euclidean, 3, 0.5).is_err());
        assert_eq!(AmbientModel::hyperbolic(3, -1.0).unwrap().embedding_dimension(), 4);
    }

    #[test]
    fn hyperboloid_points_satisfy_constraint() {
        let h = AmbientModel::hyperbolic(2, -0.25).unwrap();
        let r: f64 = 0.7;
        // radius 1/sqrt(-c) = 2
        let x = DVector::from_vec(vec![2.0 * r.sinh(), 0.0, 2.0 * r.cosh()]);
        assert!(h.constraint_residual(&x) < 1e-12);
        assert_eq!(h.constraint_residual(&(-x)), f64::INFINITY);
    }
}
