//! Residuals of the structure equations on a parameter grid.
//!
//! A [`Sweep`] evaluates the fundamental data and the principal decomposition
//! at every node, applies the hypothesis guards (flat normal bundle, simple
//! principal normals, `C > 0`), and then the `check_*` functions turn it into
//! [`ResidualReport`]s. Derivatives of derived fields (`η_i`, `X_i`, `1/λ_i`)
//! are fourth-order differences on the sweep grid after the neighbouring
//! principal frames have been matched to the centre frame.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::curvature::riemann_curvature;
use crate::error::{Error, Result};
use crate::geometry::{
    first_fundamental_form, normal_curvature_residual, second_fundamental_form, Engine, FundamentalData, ImmersionChart,
};
use crate::grid::{first_derivative, GridField, GridSpec, MetricField, STENCIL_RADIUS};
use crate::principal::{comparison_metric, principal_decomposition, third_fundamental_form, PrincipalDecomposition};

/// Frames whose best and second-best matchings score within this are ambiguous.
pub const AMBIGUITY_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Indeterminate,
    Skipped,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Indeterminate => "INDETERMINATE",
            Status::Skipped => "SKIPPED",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Summary of one identity over a grid.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub name: String,
    pub status: Status,
    pub max: f64,
    pub mean: f64,
    /// 50th, 90th and 99th percentiles.
    pub quantiles: [f64; 3],
    pub tolerance: f64,
    pub points: usize,
    /// Nodes left out: boundary of the stencil, failed evaluation, incoherent frames.
    pub excluded: usize,
    /// Nodes where a hypothesis guard fired.
    pub skipped: usize,
    pub notice: Option<String>,
    /// `(u, residual)` per evaluated node, in grid order.
    pub rows: Vec<(Vec<f64>, f64)>,
}

impl ResidualReport {
    pub fn from_rows(name: &str, rows: Vec<(Vec<f64>, f64)>, tolerance: f64) -> Self {
        let points = rows.len();
        let mut sorted: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let nan = sorted.iter().any(|v| !v.is_finite());
        sorted.retain(|v| v.is_finite());
        sorted.sort_by(f64::total_cmp);
        let q = |p: f64| {
            if sorted.is_empty() {
                0.0
            } else {
                sorted[((sorted.len() - 1) as f64 * p).round() as usize]
            }
        };
        let max = if nan { f64::NAN } else { sorted.last().copied().unwrap_or(0.0) };
        let mean = if sorted.is_empty() { 0.0 } else { sorted.iter().sum::<f64>() / sorted.len() as f64 };
        let status = if nan {
            Status::Fail
        } else if points == 0 {
            Status::Indeterminate
        } else if max <= tolerance {
            Status::Pass
        } else {
            Status::Fail
        };
        ResidualReport {
            name: name.into(),
            status,
            max,
            mean,
            quantiles: [q(0.5), q(0.9), q(0.99)],
            tolerance,
            points,
            excluded: 0,
            skipped: 0,
            notice: None,
            rows,
        }
    }

    /// A report with no evaluation, carrying the guard notice.
    pub fn skipped(name: &str, tolerance: f64, notice: impl Into<String>) -> Self {
        ResidualReport {
            status: Status::Skipped,
            notice: Some(notice.into()),
            ..ResidualReport::from_rows(name, vec![], tolerance)
        }
    }

    /// Identity with nothing to check (e.g. no index triple exists).
    pub fn vacuous(name: &str, tolerance: f64, notice: impl Into<String>) -> Self {
        ResidualReport {
            status: Status::Pass,
            notice: Some(notice.into()),
            ..ResidualReport::from_rows(name, vec![], tolerance)
        }
    }

    pub fn failed(name: &str, tolerance: f64, err: &Error) -> Self {
        ResidualReport {
            status: Status::Fail,
            max: f64::NAN,
            notice: Some(err.to_string()),
            ..ResidualReport::from_rows(name, vec![], tolerance)
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// `STATUS name max tolerance points`.
    pub fn summary_line(&self) -> String {
        let mut line = format!("{} {} {:.6e} {:.1e} {}", self.status, self.name, self.max, self.tolerance, self.points);
        if let Some(n) = &self.notice {
            line.push_str(&format!(" ({n})"));
        }
        line
    }
}

/// Residual tolerances per identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub gauss: f64,
    pub codazzi: f64,
    pub connection: f64,
    pub g0_flat: f64,
    /// Commutator norm of the shape operators, relative to `1 + ‖α‖²`.
    pub flat_normal: f64,
}

impl Tolerances {
    /// Defaults matched to the differentiation engine; sampled charts get 10×.
    pub fn for_engine(engine: Engine) -> Self {
        let base = Tolerances {
            gauss: engine.default_tolerance(),
            codazzi: 1e-4,
            connection: 1e-4,
            g0_flat: 1e-3,
            flat_normal: 1e-6,
        };
        match engine {
            Engine::Grid => {
                Tolerances { gauss: 1e-3, codazzi: 1e-3, connection: 1e-3, g0_flat: 1e-2, flat_normal: 1e-4 }
            }
            _ => base,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub seed: u64,
    /// Allow `C ≤ 0` (λ_i and g⁰ are then formed where possible).
    pub exploratory: bool,
    pub flat_tolerance: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { seed: crate::principal::DEFAULT_SEED, exploratory: false, flat_tolerance: 1e-6 }
    }
}

/// Hypothesis guard that suppresses the identity checks.
#[derive(Debug, Clone, PartialEq)]
pub enum Guard {
    NormalBundleNotFlat { residual: f64, point: Vec<f64> },
    Multiplicity { point: Vec<f64>, multiplicities: Vec<usize> },
    NonPositiveC { big_c: f64 },
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Guard::NormalBundleNotFlat { residual, point } => {
                write!(f, "hypothesis: normal bundle not flat, commutator {residual:.3e} at {point:?}")
            }
            Guard::Multiplicity { point, multiplicities } => {
                write!(f, "hypothesis: principal normal multiplicities {multiplicities:?} at {point:?}")
            }
            Guard::NonPositiveC { big_c } => write!(f, "hypothesis: C = {big_c} <= 0, exploratory mode required"),
        }
    }
}

/// Pointwise data at one node.
#[derive(Debug, Clone)]
pub struct NodeData {
    pub fd: FundamentalData,
    pub decomp: PrincipalDecomposition,
}

/// Grid for a sweep: the usable domain, or the interior sample nodes of a sampled chart.
pub fn sweep_grid(chart: &ImmersionChart, counts: &[usize]) -> Result<GridSpec> {
    if let Some(s) = chart.map().samples() {
        let g = &s.grid;
        let lo: Vec<f64> = (0..g.dim()).map(|k| g.coordinate(k, STENCIL_RADIUS as f64)).collect();
        let hi: Vec<f64> = (0..g.dim()).map(|k| g.coordinate(k, (g.counts()[k] - 1 - STENCIL_RADIUS) as f64)).collect();
        let c: Vec<usize> = g.counts().iter().map(|c| c - 2 * STENCIL_RADIUS).collect();
        return GridSpec::new(lo, hi, c);
    }
    if counts.len() != chart.dim() {
        return Err(Error::Argument(format!("{} grid counts for a {}-dimensional chart", counts.len(), chart.dim())));
    }
    GridSpec::over(&chart.usable_domain(), counts)
}

/// Pointwise evaluation of a chart over a grid, with guards applied.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub chart: ImmersionChart,
    pub grid: GridSpec,
    pub nodes: Vec<Result<NodeData>>,
    pub big_c: f64,
    pub options: SweepOptions,
    /// First hypothesis guard that suppresses every identity check.
    pub guard: Option<Guard>,
    /// Nodes where `s < n`.
    pub non_simple: usize,
}

impl Sweep {
    pub fn new(chart: &ImmersionChart, counts: &[usize], options: SweepOptions) -> Result<Self> {
        let grid = sweep_grid(chart, counts)?;
        Sweep::on_grid(chart, grid, options)
    }

    pub fn on_grid(chart: &ImmersionChart, grid: GridSpec, options: SweepOptions) -> Result<Self> {
        let big_c = chart.big_c();
        let nodes: Vec<Result<NodeData>> = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let fd = second_fundamental_form(chart, &grid.node(i))?;
                let decomp = principal_decomposition(&fd, big_c, options.seed)?;
                Ok(NodeData { fd, decomp })
            })
            .collect();
        if nodes.iter().all(|n| n.is_err()) {
            if let Some(Err(e)) = nodes.into_iter().next() {
                return Err(e);
            }
            return Err(Error::Argument("empty sweep grid".into()));
        }
        let mut guard = None;
        for n in nodes.iter().flatten() {
            let r = normal_curvature_residual(&n.fd);
            if r > options.flat_tolerance * (1.0 + n.fd.sff_norm_sq) {
                guard = Some(Guard::NormalBundleNotFlat { residual: r, point: n.fd.point.clone() });
                break;
            }
        }
        let non_simple = nodes.iter().flatten().filter(|n| !n.decomp.is_simple()).count();
        // isolated non-simple nodes are skipped one by one; a sweep without any
        // simple node is suppressed as a whole
        if guard.is_none() && nodes.iter().flatten().all(|n| !n.decomp.is_simple()) {
            if let Some(n) = nodes.iter().flatten().next() {
                guard =
                    Some(Guard::Multiplicity { point: n.fd.point.clone(), multiplicities: n.decomp.multiplicities() });
            }
        }
        if guard.is_none() && !(big_c > 0.0) && !options.exploratory {
            guard = Some(Guard::NonPositiveC { big_c });
        }
        Ok(Sweep { chart: chart.clone(), grid, nodes, big_c, options, guard, non_simple })
    }

    pub fn node(&self, index: usize) -> Option<&NodeData> {
        self.nodes[index].as_ref().ok()
    }

    fn usable(&self, index: usize) -> Option<&NodeData> {
        self.node(index).filter(|n| n.decomp.is_simple())
    }

    /// Guard notice if the whole sweep is suppressed.
    pub fn blocking_guard(&self) -> Option<&Guard> {
        self.guard.as_ref()
    }

    /// Frames and derived-field derivatives at an interior node.
    pub fn local_frame(&self, index: usize) -> std::result::Result<LocalFrame, Exclusion> {
        if !self.grid.is_interior(index, STENCIL_RADIUS) {
            return Err(Exclusion::Boundary);
        }
        let centre = self.usable(index).ok_or(Exclusion::Invalid)?;
        let n = self.grid.dim();
        let g = &centre.fd.g;
        let x = centre.decomp.frame();
        let eta: Vec<DVector<f64>> = centre.decomp.normals.iter().map(|p| p.eta_container.clone()).collect();
        let inv_lambda: Vec<f64> = centre.decomp.normals.iter().map(|p| (p.norm_sq() + self.big_c).sqrt()).collect();

        let mut dx = Vec::with_capacity(n);
        let mut deta = Vec::with_capacity(n);
        let mut dinv = Vec::with_capacity(n);
        for axis in 0..n {
            let h = self.grid.spacing(axis);
            let mut samples: Vec<(Vec<DVector<f64>>, Vec<DVector<f64>>, Vec<f64>)> = Vec::with_capacity(5);
            for o in [-2isize, -1, 1, 2] {
                let j = self.grid.offset(index, axis, o).ok_or(Exclusion::Boundary)?;
                let nb = self.usable(j).ok_or(Exclusion::Invalid)?;
                let (perm, signs, ambiguous) = align_frame(g, &x, &nb.decomp.frame());
                if ambiguous {
                    return Err(Exclusion::Incoherent);
                }
                let xs = perm.iter().zip(&signs).map(|(&p, &s)| &nb.decomp.normals[p].directions[0] * s).collect();
                let es = perm.iter().map(|&p| nb.decomp.normals[p].eta_container.clone()).collect();
                let ls = perm.iter().map(|&p| (nb.decomp.normals[p].norm_sq() + self.big_c).sqrt()).collect();
                samples.push((xs, es, ls));
            }
            let pick = |o: isize| -> usize {
                match o {
                    -2 => 0,
                    -1 => 1,
                    1 => 2,
                    _ => 3,
                }
            };
            let d_x: Vec<DVector<f64>> = (0..n)
                .map(|i| first_derivative(h, |o| if o == 0 { x[i].clone() } else { samples[pick(o)].0[i].clone() }))
                .collect();
            let d_e: Vec<DVector<f64>> = (0..n)
                .map(|i| first_derivative(h, |o| if o == 0 { eta[i].clone() } else { samples[pick(o)].1[i].clone() }))
                .collect();
            let d_l: Vec<f64> = (0..n)
                .map(|i| first_derivative(h, |o| if o == 0 { inv_lambda[i] } else { samples[pick(o)].2[i] }))
                .collect();
            dx.push(d_x);
            deta.push(d_e);
            dinv.push(d_l);
        }
        Ok(LocalFrame { index, x, dx, eta, deta, inv_lambda, dinv_lambda: dinv })
    }
}

/// Why an interior evaluation was left out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exclusion {
    Boundary,
    Invalid,
    Incoherent,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..n {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// Match `other` to `centre` by maximal `|g(X_i, Y_π(i))|`; returns `(π, signs, ambiguous)`.
pub fn align_frame(g: &DMatrix<f64>, centre: &[DVector<f64>], other: &[DVector<f64>]) -> (Vec<usize>, Vec<f64>, bool) {
    let n = centre.len();
    let ip = DMatrix::from_fn(n, n, |i, j| (centre[i].transpose() * g * &other[j])[(0, 0)]);
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut second = f64::NEG_INFINITY;
    for p in permutations(n) {
        let score: f64 = (0..n).map(|i| ip[(i, p[i])].abs()).sum();
        if score > best.0 {
            second = best.0;
            best = (score, p);
        } else if score > second {
            second = score;
        }
    }
    let perm = best.1;
    let signs = (0..n).map(|i| if ip[(i, perm[i])] < 0.0 { -1.0 } else { 1.0 }).collect();
    let ambiguous = n > 1 && best.0 - second < AMBIGUITY_MARGIN;
    (perm, signs, ambiguous)
}

/// Principal frame and first derivatives of the derived fields at a node.
#[derive(Debug, Clone)]
pub struct LocalFrame {
    pub index: usize,
    /// `X_i` in coordinate components.
    pub x: Vec<DVector<f64>>,
    /// `dx[k][i] = ∂_k X_i`.
    pub dx: Vec<Vec<DVector<f64>>>,
    /// `η_i` as container vectors.
    pub eta: Vec<DVector<f64>>,
    pub deta: Vec<Vec<DVector<f64>>>,
    /// `1/λ_i = √(‖η_i‖² + C)` (NaN where undefined).
    pub inv_lambda: Vec<f64>,
    pub dinv_lambda: Vec<Vec<f64>>,
}

impl LocalFrame {
    /// `∇_{X_a} X_b` in coordinate components.
    pub fn covariant(&self, fd: &FundamentalData, a: usize, b: usize) -> DVector<f64> {
        let mut v = fd.connection_term(&self.x[a], &self.x[b]);
        for (k, xk) in self.x[a].iter().enumerate() {
            v.axpy(*xk, &self.dx[k][b], 1.0);
        }
        v
    }

    /// `Γ_ab^c = ⟨∇_{X_a} X_b, X_c⟩`.
    pub fn christoffel(&self, fd: &FundamentalData) -> ChristoffelSample {
        let n = self.x.len();
        let mut gamma = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                let v = self.covariant(fd, a, b);
                for c in 0..n {
                    gamma[(a * n + b) * n + c] = fd.g_inner(&v, &self.x[c]);
                }
            }
        }
        ChristoffelSample { n, gamma }
    }

    /// Derivative of a container-valued field along `X_j`.
    fn along(&self, j: usize, d: &[Vec<DVector<f64>>], i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(d[0][i].len());
        for (k, xk) in self.x[j].iter().enumerate() {
            v.axpy(*xk, &d[k][i], 1.0);
        }
        v
    }

    /// `X_j(1/λ_i)`.
    pub fn inv_lambda_along(&self, j: usize, i: usize) -> f64 {
        self.x[j].iter().enumerate().map(|(k, xk)| xk * self.dinv_lambda[k][i]).sum()
    }
}

/// `Γ_ij^k = ⟨∇_{X_i} X_j, X_k⟩` in a principal frame.
#[derive(Debug, Clone)]
pub struct ChristoffelSample {
    pub n: usize,
    gamma: Vec<f64>,
}

impl ChristoffelSample {
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.gamma[(i * self.n + j) * self.n + k]
    }

    /// `max |Γ_ij^j|` and `max |Γ_ij^k + Γ_ik^j|`.
    pub fn invariant_residuals(&self) -> (f64, f64) {
        let n = self.n;
        let mut diag: f64 = 0.0;
        let mut anti: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                diag = diag.max(self.get(i, j, j).abs());
                for k in 0..n {
                    anti = anti.max((self.get(i, j, k) + self.get(i, k, j)).abs());
                }
            }
        }
        (diag, anti)
    }
}

/// `max_{i≠j} |⟨η_i, η_j⟩ − (c − c̃)|` at one point.
pub fn gauss_residual(decomp: &PrincipalDecomposition, c: f64, c_tilde: f64) -> f64 {
    let target = c - c_tilde;
    let mut worst: f64 = 0.0;
    for (i, a) in decomp.normals.iter().enumerate() {
        for b in decomp.normals.iter().skip(i + 1) {
            worst = worst.max((a.eta.dot(&b.eta) - target).abs());
        }
    }
    worst
}

fn guarded(sweep: &Sweep, name: &str, tol: f64) -> Option<ResidualReport> {
    sweep.blocking_guard().map(|g| ResidualReport::skipped(name, tol, g.to_string()))
}

fn finish(mut report: ResidualReport, excluded: usize, skipped: usize) -> ResidualReport {
    report.excluded = excluded;
    report.skipped = skipped;
    if skipped > 0 && report.notice.is_none() {
        report.notice = Some(format!("{skipped} nodes skipped with s < n"));
    }
    report
}

pub fn check_gauss(sweep: &Sweep, tol: f64) -> ResidualReport {
    const NAME: &str = "gauss";
    if let Some(r) = guarded(sweep, NAME, tol) {
        return r;
    }
    let (c, ct) = (sweep.chart.intrinsic_curvature(), sweep.chart.ambient().curvature());
    let mut rows = Vec::new();
    let mut excluded = 0;
    for (i, node) in sweep.nodes.iter().enumerate() {
        match node {
            Ok(n) if n.decomp.is_simple() => rows.push((sweep.grid.node(i), gauss_residual(&n.decomp, c, ct))),
            Ok(_) => {}
            Err(_) => excluded += 1,
        }
    }
    finish(ResidualReport::from_rows(NAME, rows, tol), excluded, sweep.non_simple)
}

/// Evaluate a per-frame residual at every interior node.
fn frame_sweep(
    sweep: &Sweep,
    name: &str,
    tol: f64,
    f: impl Fn(&NodeData, &LocalFrame) -> f64 + Sync,
) -> ResidualReport {
    let out: Vec<std::result::Result<(Vec<f64>, f64), Exclusion>> = (0..sweep.grid.len())
        .into_par_iter()
        .map(|i| {
            let lf = sweep.local_frame(i)?;
            let node = sweep.node(i).expect("usable centre");
            Ok((sweep.grid.node(i), f(node, &lf)))
        })
        .collect();
    let mut rows = Vec::new();
    let mut excluded = 0;
    let mut incoherent = 0;
    for r in out {
        match r {
            Ok(row) if row.1.is_finite() => rows.push(row),
            // λ undefined at the node (exploratory mode only)
            Ok(_) => excluded += 1,
            Err(Exclusion::Boundary) => {}
            Err(Exclusion::Incoherent) => {
                incoherent += 1;
                excluded += 1;
            }
            Err(Exclusion::Invalid) => excluded += 1,
        }
    }
    let mut report = finish(ResidualReport::from_rows(name, rows, tol), excluded, sweep.non_simple);
    if incoherent > 0 {
        report.notice = Some(format!("{incoherent} nodes with ambiguous frame matching excluded"));
    }
    report
}

/// Normalisation for curvature-scale residuals.
fn curvature_scale(lf: &LocalFrame, i: usize, j: usize) -> f64 {
    1.0f64.max(lf.eta[i].norm_squared()).max(lf.eta[j].norm_squared())
}

/// `∇⊥_{X_j} η_i − Γ_ii^j (η_i − η_j)`, relative to `max(1, ‖η‖²)`.
pub fn codazzi_c1_residual(node: &NodeData, lf: &LocalFrame) -> f64 {
    let fd = &node.fd;
    let n = lf.x.len();
    if lf.inv_lambda.iter().any(|v| !(*v > 0.0)) {
        return f64::NAN;
    }
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let nabla_ii = lf.covariant(fd, i, i);
        for j in 0..n {
            if i == j {
                continue;
            }
            let lhs = fd.normal_components(&lf.along(j, &lf.deta, i));
            let gamma = fd.g_inner(&nabla_ii, &lf.x[j]);
            let rhs = fd.normal_components(&(&lf.eta[i] - &lf.eta[j])) * gamma;
            worst = worst.max((lhs - rhs).norm() / curvature_scale(lf, i, j));
        }
    }
    worst
}

/// Second Codazzi form over distinct triples `(i, j, ℓ)`.
pub fn codazzi_c2_residual(node: &NodeData, lf: &LocalFrame) -> f64 {
    let fd = &node.fd;
    let n = lf.x.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                if i == j || j == l || i == l {
                    continue;
                }
                let a = fd.g_inner(&lf.covariant(fd, l, j), &lf.x[i]);
                let b = fd.g_inner(&lf.covariant(fd, j, l), &lf.x[i]);
                let lhs = (&lf.eta[i] - &lf.eta[j]) * a;
                let rhs = (&lf.eta[i] - &lf.eta[l]) * b;
                let scale = curvature_scale(lf, i, j).max(lf.eta[l].norm_squared());
                worst = worst.max(fd.normal_components(&(lhs - rhs)).norm() / scale);
            }
        }
    }
    worst
}

/// `|Γ_ii^j − λ_i X_j(1/λ_i)|` over `i ≠ j`.
pub fn connection_residual(node: &NodeData, lf: &LocalFrame) -> f64 {
    let fd = &node.fd;
    let n = lf.x.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let nabla_ii = lf.covariant(fd, i, i);
        for j in 0..n {
            if i == j {
                continue;
            }
            let gamma = fd.g_inner(&nabla_ii, &lf.x[j]);
            let predicted = lf.inv_lambda_along(j, i) / lf.inv_lambda[i];
            worst = worst.max((gamma - predicted).abs());
        }
    }
    worst
}

pub fn check_codazzi_c1(sweep: &Sweep, tol: f64) -> ResidualReport {
    const NAME: &str = "codazzi_c1";
    guarded(sweep, NAME, tol).unwrap_or_else(|| frame_sweep(sweep, NAME, tol, codazzi_c1_residual))
}

pub fn check_codazzi_c2(sweep: &Sweep, tol: f64) -> ResidualReport {
    const NAME: &str = "codazzi_c2";
    if let Some(r) = guarded(sweep, NAME, tol) {
        return r;
    }
    if sweep.grid.dim() < 3 {
        return ResidualReport::vacuous(NAME, tol, "n < 3, no index triple");
    }
    frame_sweep(sweep, NAME, tol, codazzi_c2_residual)
}

pub fn check_connection_formula(sweep: &Sweep, tol: f64) -> ResidualReport {
    const NAME: &str = "connection";
    if let Some(r) = guarded(sweep, NAME, tol) {
        return r;
    }
    if !(sweep.big_c > 0.0) && !sweep.options.exploratory {
        return ResidualReport::skipped(NAME, tol, format!("hypothesis: C = {} <= 0, lambda undefined", sweep.big_c));
    }
    frame_sweep(sweep, NAME, tol, connection_residual)
}

/// Normalised curvature of a sampled metric over its interior nodes.
pub fn flatness_report(name: &str, metric: &MetricField, tol: f64) -> ResidualReport {
    let out: Vec<Option<(Vec<f64>, f64)>> = metric
        .grid
        .interior_indices(STENCIL_RADIUS)
        .into_par_iter()
        .map(|i| {
            let r = riemann_curvature(metric, i).ok()?;
            let v = r.normalized_max();
            v.is_finite().then(|| (metric.grid.node(i), v))
        })
        .collect();
    let total = out.len();
    let rows: Vec<_> = out.into_iter().flatten().collect();
    let excluded = total - rows.len();
    finish(ResidualReport::from_rows(name, rows, tol), excluded, 0)
}

fn nan_matrix(n: usize) -> DMatrix<f64> {
    DMatrix::from_element(n, n, f64::NAN)
}

/// `g⁰ = C g + III` sampled at every node (NaN where the node failed).
pub fn g0_field(grid: &GridSpec, fds: &[Option<&FundamentalData>], big_c: f64) -> MetricField {
    let n = grid.dim();
    let values = fds
        .iter()
        .map(|fd| match fd {
            Some(fd) => {
                let iii = third_fundamental_form(fd);
                comparison_metric(fd, &iii, big_c, true).map_or_else(|_| nan_matrix(n), |m| m.g0)
            }
            None => nan_matrix(n),
        })
        .collect();
    GridField { grid: grid.clone(), values }
}

/// Flatness of `g⁰` from a sweep.
pub fn check_g0_flat(sweep: &Sweep, tol: f64) -> ResidualReport {
    const NAME: &str = "g0_flat";
    if let Some(r) = guarded(sweep, NAME, tol) {
        return r;
    }
    let fds: Vec<Option<&FundamentalData>> = sweep.nodes.iter().map(|n| n.as_ref().ok().map(|n| &n.fd)).collect();
    flatness_report(NAME, &g0_field(&sweep.grid, &fds, sweep.big_c), tol)
}

/// Flatness of `g⁰ = C g + III` for an explicit `C`, bypassing every guard.
///
/// Used to show that the flatness of `g⁰` genuinely depends on the hypotheses.
pub fn check_g0_flat_with(chart: &ImmersionChart, grid: &GridSpec, big_c: f64, tol: f64) -> ResidualReport {
    let fds: Vec<Option<FundamentalData>> =
        (0..grid.len()).into_par_iter().map(|i| second_fundamental_form(chart, &grid.node(i)).ok()).collect();
    let refs: Vec<Option<&FundamentalData>> = fds.iter().map(Option::as_ref).collect();
    flatness_report("g0_flat", &g0_field(grid, &refs, big_c), tol)
}

/// `max |R_ijkl − c(g_ik g_jl − g_il g_jk)| / (1 + ‖g‖²)` for the induced metric.
pub fn check_intrinsic_curvature(chart: &ImmersionChart, grid: &GridSpec, tol: f64) -> ResidualReport {
    let n = grid.dim();
    let values: Vec<DMatrix<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|i| first_fundamental_form(chart, &grid.node(i)).unwrap_or_else(|_| nan_matrix(n)))
        .collect();
    let metric = GridField { grid: grid.clone(), values };
    let c = chart.intrinsic_curvature();
    let out: Vec<Option<(Vec<f64>, f64)>> = grid
        .interior_indices(STENCIL_RADIUS)
        .into_par_iter()
        .map(|i| {
            let r = riemann_curvature(&metric, i).ok()?;
            let v = r.constant_curvature_residual(c) / (1.0 + r.g.norm_squared());
            v.is_finite().then(|| (grid.node(i), v))
        })
        .collect();
    let total = out.len();
    let rows: Vec<_> = out.into_iter().flatten().collect();
    let excluded = total - rows.len();
    finish(ResidualReport::from_rows("intrinsic_curvature", rows, tol), excluded, 0)
}

/// The five identity reports in summary order.
pub fn verify_all(sweep: &Sweep, tol: &Tolerances) -> Vec<ResidualReport> {
    vec![
        check_gauss(sweep, tol.gauss),
        check_codazzi_c1(sweep, tol.codazzi),
        check_codazzi_c2(sweep, tol.codazzi),
        check_connection_formula(sweep, tol.connection),
        check_g0_flat(sweep, tol.g0_flat),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_statistics() {
        let rows = (0..101).map(|k| (vec![k as f64], k as f64 * 1e-6)).collect();
        let r = ResidualReport::from_rows("x", rows, 1e-4);
        assert!(r.passed());
        assert_eq!(r.points, 101);
        assert!((r.max - 1e-4).abs() < 1e-18);
        assert!((r.mean - 5e-5).abs() < 1e-15);
        assert!((r.quantiles[0] - 5e-5).abs() < 1e-18);
        let r = ResidualReport::from_rows("x", vec![(vec![0.0], 2e-4)], 1e-4);
        assert_eq!(r.status, Status::Fail);
        let r = ResidualReport::from_rows("x", vec![(vec![0.0], f64::NAN)], 1e-4);
        assert_eq!(r.status, Status::Fail);
        assert_eq!(ResidualReport::from_rows("x", vec![], 1.0).status, Status::Indeterminate);
        assert!(r.summary_line().starts_with("FAIL x NaN"));
    }

    #[test]
    fn frame_alignment_finds_permutation_and_signs() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let s = 1.0 / 2f64.sqrt();
        let centre = vec![DVector::from_vec(vec![s, 0.0]), DVector::from_vec(vec![0.0, 1.0])];
        let other = vec![DVector::from_vec(vec![0.0, -1.0]), DVector::from_vec(vec![-s, 0.01])];
        let (perm, signs, amb) = align_frame(&g, &centre, &other);
        assert_eq!(perm, vec![1, 0]);
        assert_eq!(signs, vec![-1.0, -1.0]);
        assert!(!amb);
        let d = DVector::from_vec(vec![0.5, s]);
        let e = DVector::from_vec(vec![0.5, -s]);
        let (_, _, amb) = align_frame(&g, &centre, &[d, e]);
        assert!(amb);
    }

    #[test]
    fn permutations_are_complete() {
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(1), vec![vec![0]]);
    }

    #[test]
    fn zero_c_needs_exploratory_mode() {
        let torus = crate::catalog::product_torus_r4(1.0, 2.0).unwrap().chart;
        let plain = Sweep::new(&torus, &[17, 17], SweepOptions::default()).unwrap();
        assert!(matches!(plain.guard, Some(Guard::NonPositiveC { .. })));
        assert_eq!(check_connection_formula(&plain, 1e-4).status, Status::Skipped);
        let opts = SweepOptions { exploratory: true, ..SweepOptions::default() };
        let explore = Sweep::new(&torus, &[17, 17], opts).unwrap();
        let r = check_connection_formula(&explore, 1e-4);
        assert!(r.passed() && r.points > 0, "{}", r.summary_line());
    }
}
