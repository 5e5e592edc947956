//! Immersion charts and the engines that differentiate them.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::autodiff::{HyperDual, Real};
use crate::error::{Error, Result};
use crate::geometry::ambient::AmbientModel;
use crate::grid::{first_derivative, mixed_derivative, second_derivative, GridSpec, STENCIL_RADIUS};

/// A chart given as a composable closed form; differentiable by the AD engine.
pub trait ClosedForm: Send + Sync {
    fn map<S: Real>(&self, u: &[S]) -> Vec<S>;
}

/// Object-safe view of a chart map.
pub trait ChartMap: Send + Sync {
    fn eval(&self, u: &[f64]) -> Vec<f64>;

    /// Hyper-dual evaluation, available for closed-form maps only.
    fn eval_hyper(&self, _u: &[HyperDual]) -> Option<Vec<HyperDual>> {
        None
    }

    /// Node samples for maps that only exist on a grid.
    fn samples(&self) -> Option<&SampledMap> {
        None
    }
}

impl<T: ClosedForm> ChartMap for T {
    fn eval(&self, u: &[f64]) -> Vec<f64> {
        self.map(u)
    }
    fn eval_hyper(&self, u: &[HyperDual]) -> Option<Vec<HyperDual>> {
        Some(self.map(u))
    }
}

/// Opaque map, differentiable by finite differences only.
pub struct BlackBox<F>(pub F);

impl<F> ChartMap for BlackBox<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    fn eval(&self, u: &[f64]) -> Vec<f64> {
        (self.0)(u)
    }
}

/// Container points given only at the nodes of a grid.
#[derive(Debug, Clone)]
pub struct SampledMap {
    pub grid: GridSpec,
    pub points: Vec<DVector<f64>>,
}

impl SampledMap {
    pub fn new(grid: GridSpec, points: Vec<DVector<f64>>) -> Result<Self> {
        if grid.len() != points.len() {
            return Err(Error::Argument("sample count does not match grid".into()));
        }
        Ok(SampledMap { grid, points })
    }

    fn node(&self, u: &[f64]) -> Result<usize> {
        self.grid.locate(u).ok_or_else(|| Error::Domain { point: u.to_vec() })
    }
}

impl ChartMap for SampledMap {
    fn eval(&self, u: &[f64]) -> Vec<f64> {
        match self.node(u) {
            Ok(i) => self.points[i].iter().copied().collect(),
            Err(_) => vec![f64::NAN; self.points.first().map_or(0, |p| p.len())],
        }
    }
    fn samples(&self) -> Option<&SampledMap> {
        Some(self)
    }
}

/// How derivatives of the chart map are obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Engine {
    /// Hyper-dual forward-mode differentiation of a closed form.
    Ad,
    /// Fourth-order central differences with step `span · step_fraction` per axis.
    FiniteDifference { step_fraction: f64 },
    /// Fourth-order differences on the sample grid of a [`SampledMap`].
    Grid,
}

impl Engine {
    pub const DEFAULT_FD_FRACTION: f64 = 1e-3;

    pub fn fd() -> Self {
        Engine::FiniteDifference { step_fraction: Self::DEFAULT_FD_FRACTION }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Engine::Ad => "ad",
            Engine::FiniteDifference { .. } => "fd",
            Engine::Grid => "grid",
        }
    }

    /// Default residual tolerance matched to the engine's truncation error.
    pub fn default_tolerance(&self) -> f64 {
        match self {
            Engine::Ad => 1e-8,
            _ => 1e-4,
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Engine::FiniteDifference { step_fraction } => write!(f, "fd(h=span*{step_fraction:e})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Position and coordinate derivatives of the chart at one parameter point.
#[derive(Debug, Clone)]
pub struct Jet {
    pub point: Vec<f64>,
    pub x: DVector<f64>,
    /// `d1[i] = ∂F/∂u_i`.
    pub d1: Vec<DVector<f64>>,
    /// `d2[i][j] = ∂²F/∂u_i∂u_j`, present when second order was requested.
    pub d2: Option<Vec<Vec<DVector<f64>>>>,
}

/// A smooth map from a parameter box into the container of an ambient model.
#[derive(Clone)]
pub struct ImmersionChart {
    name: String,
    map: Arc<dyn ChartMap>,
    n: usize,
    ambient: AmbientModel,
    c: f64,
    domain: Vec<(f64, f64)>,
    engine: Engine,
    constraint_tolerance: f64,
}

impl fmt::Debug for ImmersionChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImmersionChart")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("ambient", &self.ambient)
            .field("c", &self.c)
            .field("domain", &self.domain)
            .field("engine", &self.engine)
            .finish()
    }
}

impl ImmersionChart {
    /// Chart over `domain`; the engine defaults to AD when the map supports it.
    pub fn new(
        name: impl Into<String>,
        map: Arc<dyn ChartMap>,
        ambient: AmbientModel,
        c: f64,
        domain: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let n = domain.len();
        if n == 0 || n >= ambient.dimension() {
            return Err(Error::Argument(format!("intrinsic dimension {n} must be in 1..{}", ambient.dimension())));
        }
        if domain.iter().any(|d| !(d.1 >= d.0)) {
            return Err(Error::Argument("empty domain interval".into()));
        }
        let probe: Vec<HyperDual> = domain.iter().map(|d| HyperDual::constant(0.5 * (d.0 + d.1))).collect();
        let engine = if map.samples().is_some() {
            Engine::Grid
        } else if map.eval_hyper(&probe).is_some() {
            Engine::Ad
        } else {
            Engine::fd()
        };
        Ok(ImmersionChart { name: name.into(), map, n, ambient, c, domain, engine, constraint_tolerance: 1e-8 })
    }

    pub fn closed_form<T: ClosedForm + 'static>(
        name: impl Into<String>,
        map: T,
        ambient: AmbientModel,
        c: f64,
        domain: Vec<(f64, f64)>,
    ) -> Result<Self> {
        ImmersionChart::new(name, Arc::new(map), ambient, c, domain)
    }

    /// Switch engines; AD requires a closed form and the grid engine a sampled map.
    pub fn with_engine(mut self, engine: Engine) -> Result<Self> {
        match engine {
            Engine::Ad => {
                let probe = vec![HyperDual::constant(self.domain[0].0); self.n];
                if self.map.eval_hyper(&probe).is_none() {
                    return Err(Error::Unsupported(format!("chart {} has no closed form for AD", self.name)));
                }
            }
            Engine::Grid => {
                if self.map.samples().is_none() {
                    return Err(Error::Unsupported(format!("chart {} is not sampled", self.name)));
                }
            }
            Engine::FiniteDifference { step_fraction } => {
                if !(step_fraction > 0.0 && step_fraction < 0.25) {
                    return Err(Error::Argument(format!("bad finite-difference fraction {step_fraction}")));
                }
                if self.map.samples().is_some() {
                    return Err(Error::Unsupported("sampled charts are differentiated on their grid".into()));
                }
            }
        }
        self.engine = engine;
        Ok(self)
    }

    pub fn with_constraint_tolerance(mut self, tol: f64) -> Self {
        self.constraint_tolerance = tol;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn codim(&self) -> usize {
        self.ambient.dimension() - self.n
    }

    pub fn ambient(&self) -> &AmbientModel {
        &self.ambient
    }

    /// Asserted intrinsic sectional curvature `c`.
    pub fn intrinsic_curvature(&self) -> f64 {
        self.c
    }

    /// `C = c̃ − c`.
    pub fn big_c(&self) -> f64 {
        self.ambient.curvature() - self.c
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn engine(&self) -> Engine {
        self.engine
    }

    pub fn map(&self) -> &Arc<dyn ChartMap> {
        &self.map
    }

    /// Finite-difference step per axis (zero for AD, grid spacing for sampled charts).
    pub fn fd_steps(&self) -> Vec<f64> {
        match self.engine {
            Engine::Ad => vec![0.0; self.n],
            Engine::FiniteDifference { step_fraction } => {
                self.domain.iter().map(|d| (d.1 - d.0) * step_fraction).collect()
            }
            Engine::Grid => self.map.samples().expect("sampled").grid.spacings(),
        }
    }

    /// Declared domain shrunk by the stencil radius so every derivative stencil fits.
    pub fn usable_domain(&self) -> Vec<(f64, f64)> {
        self.domain
            .iter()
            .zip(self.fd_steps())
            .map(|(d, h)| {
                let r = STENCIL_RADIUS as f64 * h;
                (d.0 + r, d.1 - r)
            })
            .collect()
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.n && u.iter().zip(&self.domain).all(|(x, d)| *x >= d.0 - 1e-12 && *x <= d.1 + 1e-12)
    }

    pub fn in_usable_domain(&self, u: &[f64]) -> bool {
        u.len() == self.n && u.iter().zip(self.usable_domain()).all(|(x, d)| *x >= d.0 - 1e-12 && *x <= d.1 + 1e-12)
    }

    fn raw(&self, u: &[f64]) -> DVector<f64> {
        DVector::from_vec(self.map.eval(u))
    }

    /// Container coordinates of the chart at `u`.
    pub fn evaluate(&self, u: &[f64]) -> Result<DVector<f64>> {
        if !self.contains(u) {
            return Err(Error::Domain { point: u.to_vec() });
        }
        let x = self.raw(u);
        if x.len() != self.ambient.embedding_dimension() {
            return Err(Error::Argument(format!(
                "chart {} returned {} coordinates, container has {}",
                self.name,
                x.len(),
                self.ambient.embedding_dimension()
            )));
        }
        let r = self.ambient.constraint_residual(&x);
        if r > self.constraint_tolerance {
            return Err(Error::ModelConsistency { residual: r, tolerance: self.constraint_tolerance });
        }
        Ok(x)
    }

    /// Position and derivatives up to `order` (1 or 2) at `u`.
    pub fn jet(&self, u: &[f64], order: usize) -> Result<Jet> {
        if !self.in_usable_domain(u) {
            return Err(Error::Domain { point: u.to_vec() });
        }
        let x = self.evaluate(u)?;
        match self.engine {
            Engine::Ad => self.ad_jet(u, x, order),
            Engine::FiniteDifference { .. } => Ok(self.fd_jet(u, x, order)),
            Engine::Grid => self.grid_jet(u, x, order),
        }
    }

    fn ad_jet(&self, u: &[f64], x: DVector<f64>, order: usize) -> Result<Jet> {
        let n = self.n;
        let dim = x.len();
        let mut d1 = vec![DVector::zeros(dim); n];
        let mut d2 = vec![vec![DVector::zeros(dim); n]; n];
        for i in 0..n {
            let upper = if order >= 2 { n } else { i + 1 };
            for j in i..upper {
                let args: Vec<HyperDual> =
                    u.iter().enumerate().map(|(k, &v)| HyperDual::variable(v, k == i, k == j)).collect();
                let out = self
                    .map
                    .eval_hyper(&args)
                    .ok_or_else(|| Error::Unsupported("AD on a map without closed form".into()))?;
                if i == j {
                    d1[i] = DVector::from_iterator(dim, out.iter().map(|h| h.e1));
                }
                let h = DVector::from_iterator(dim, out.iter().map(|h| h.e12));
                d2[j][i] = h.clone();
                d2[i][j] = h;
            }
        }
        Ok(Jet { point: u.to_vec(), x, d1, d2: (order >= 2).then_some(d2) })
    }

    fn fd_jet(&self, u: &[f64], x: DVector<f64>, order: usize) -> Jet {
        let n = self.n;
        let h = self.fd_steps();
        let shifted = |axis: usize, o: isize| {
            let mut p = u.to_vec();
            p[axis] += o as f64 * h[axis];
            p
        };
        let d1: Vec<DVector<f64>> = (0..n)
            .map(|i| first_derivative(h[i], |o| if o == 0 { x.clone() } else { self.raw(&shifted(i, o)) }))
            .collect();
        let d2 = (order >= 2).then(|| {
            let mut d2 = vec![vec![DVector::zeros(x.len()); n]; n];
            for i in 0..n {
                d2[i][i] = second_derivative(h[i], |o| if o == 0 { x.clone() } else { self.raw(&shifted(i, o)) });
                for j in (i + 1)..n {
                    let m = mixed_derivative(h[i], h[j], |a, b| {
                        let mut p = u.to_vec();
                        p[i] += a as f64 * h[i];
                        p[j] += b as f64 * h[j];
                        self.raw(&p)
                    });
                    d2[i][j] = m.clone();
                    d2[j][i] = m;
                }
            }
            d2
        });
        Jet { point: u.to_vec(), x, d1, d2 }
    }

    fn grid_jet(&self, u: &[f64], x: DVector<f64>, order: usize) -> Result<Jet> {
        let s = self.map.samples().expect("grid engine requires samples");
        let idx = s.node(u)?;
        if !s.grid.is_interior(idx, STENCIL_RADIUS) {
            return Err(Error::Domain { point: u.to_vec() });
        }
        let n = self.n;
        let h = s.grid.spacings();
        let at = |axis: usize, o: isize| s.points[s.grid.offset(idx, axis, o).expect("interior")].clone();
        let d1: Vec<DVector<f64>> = (0..n).map(|i| first_derivative(h[i], |o| at(i, o))).collect();
        let d2 = (order >= 2).then(|| {
            let mut d2 = vec![vec![DVector::zeros(x.len()); n]; n];
            for i in 0..n {
                d2[i][i] = second_derivative(h[i], |o| at(i, o));
                for j in (i + 1)..n {
                    let m = mixed_derivative(h[i], h[j], |a, b| {
                        let mut d = vec![0isize; n];
                        d[i] = a;
                        d[j] = b;
                        s.points[s.grid.displaced(idx, &d).expect("interior")].clone()
                    });
                    d2[i][j] = m.clone();
                    d2[j][i] = m;
                }
            }
            d2
        });
        Ok(Jet { point: u.to_vec(), x, d1, d2 })
    }
}
