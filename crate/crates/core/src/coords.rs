//! Flows of the commuting fields `Y_i = λ_i X_i` and the principal-coordinate
//! map `F(t) = φ_n(⋯φ_1(x₀, t_1)⋯, t_n)`.
//!
//! Every trajectory carries the principal frame it was last matched against
//! (its gauge), so that the index and sign of each `X_i` stay continuous along
//! the flow.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{second_fundamental_form, ImmersionChart};
use crate::grid::{first_derivative, GridSpec};
use crate::principal::{principal_decomposition, third_fundamental_form};
use crate::verify::{align_frame, ResidualReport};

/// Reference principal frame used to fix order and signs.
pub type Gauge = Vec<DVector<f64>>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    /// Largest RK4 step in flow time.
    pub step: f64,
    pub seed: u64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { step: 1e-2, seed: crate::principal::DEFAULT_SEED }
    }
}

/// The fields `Y_i` at one point.
#[derive(Debug, Clone)]
pub struct PrincipalFields {
    /// `X_i` in coordinate components, matched to the gauge.
    pub x: Vec<DVector<f64>>,
    pub lambda: Vec<f64>,
    pub g: DMatrix<f64>,
}

impl PrincipalFields {
    pub fn y(&self, i: usize) -> DVector<f64> {
        &self.x[i] * self.lambda[i]
    }
}

/// Principal frame at `u`, re-ordered and re-signed against `gauge` if given.
pub fn principal_fields(
    chart: &ImmersionChart,
    u: &[f64],
    gauge: Option<&[DVector<f64>]>,
    seed: u64,
) -> Result<PrincipalFields> {
    if !chart.in_usable_domain(u) {
        return Err(Error::Domain { point: u.to_vec() });
    }
    let fd = second_fundamental_form(chart, u)?;
    let d = principal_decomposition(&fd, chart.big_c(), seed)?;
    if !d.is_simple() {
        return Err(Error::Hypothesis(format!("multiplicities {:?} at {u:?}", d.multiplicities())));
    }
    let lambda = d.lambdas()?;
    let x = d.frame();
    match gauge {
        None => Ok(PrincipalFields { x, lambda, g: fd.g }),
        Some(reference) => {
            let (perm, signs, ambiguous) = align_frame(&fd.g, reference, &x);
            if ambiguous {
                return Err(Error::Numerical(format!("principal frame matching ambiguous at {u:?}")));
            }
            Ok(PrincipalFields {
                x: perm.iter().zip(&signs).map(|(&p, &s)| &x[p] * s).collect(),
                lambda: perm.iter().map(|&p| lambda[p]).collect(),
                g: fd.g,
            })
        }
    }
}

/// Canonical gauge at `x0`.
pub fn initial_gauge(chart: &ImmersionChart, x0: &[f64], seed: u64) -> Result<Gauge> {
    Ok(principal_fields(chart, x0, None, seed)?.x)
}

/// Integrate `Y_i` for time `t` from `x0`, returning the end point and its gauge.
pub fn flow_with_gauge(
    chart: &ImmersionChart,
    x0: &[f64],
    gauge: &[DVector<f64>],
    i: usize,
    t: f64,
    options: &FlowOptions,
) -> Result<(Vec<f64>, Gauge)> {
    if i >= chart.dim() {
        return Err(Error::Argument(format!("direction {i} out of range")));
    }
    if t == 0.0 {
        return Ok((x0.to_vec(), gauge.to_vec()));
    }
    let steps = (t.abs() / options.step).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let mut u = DVector::from_column_slice(x0);
    let mut gauge = gauge.to_vec();
    for k in 0..steps {
        let elapsed = k as f64 * h;
        let exit = |e: Error, u: &DVector<f64>| match e {
            Error::Domain { .. } => Error::DomainExit { exit_time: elapsed, last: u.iter().copied().collect() },
            other => other,
        };
        let field = |p: &DVector<f64>| -> Result<PrincipalFields> {
            principal_fields(chart, p.as_slice(), Some(&gauge), options.seed)
        };
        let f1 = field(&u).map_err(|e| exit(e, &u))?;
        let k1 = f1.y(i);
        let k2 = field(&(&u + &k1 * (0.5 * h))).map_err(|e| exit(e, &u))?.y(i);
        let k3 = field(&(&u + &k2 * (0.5 * h))).map_err(|e| exit(e, &u))?.y(i);
        let k4 = field(&(&u + &k3 * h)).map_err(|e| exit(e, &u))?.y(i);
        let next = &u + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
        let at_next = field(&next).map_err(|e| exit(e, &u))?;
        gauge = at_next.x;
        u = next;
    }
    Ok((u.iter().copied().collect(), gauge))
}

/// `φ_i(x0, t)` with the canonical gauge at `x0`.
pub fn integrate_flow(chart: &ImmersionChart, x0: &[f64], i: usize, t: f64, options: &FlowOptions) -> Result<Vec<f64>> {
    let gauge = initial_gauge(chart, x0, options.seed)?;
    Ok(flow_with_gauge(chart, x0, &gauge, i, t, options)?.0)
}

/// Largest coordinate error after flowing for `t` and back.
pub fn round_trip_error(chart: &ImmersionChart, x0: &[f64], i: usize, t: f64, options: &FlowOptions) -> Result<f64> {
    let gauge = initial_gauge(chart, x0, options.seed)?;
    let (x1, g1) = flow_with_gauge(chart, x0, &gauge, i, t, options)?;
    let (x2, _) = flow_with_gauge(chart, &x1, &g1, i, -t, options)?;
    Ok(x2.iter().zip(x0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// `F_{x}(t)` for a start point with known gauge.
pub fn compose_flows(
    chart: &ImmersionChart,
    x: &[f64],
    gauge: &[DVector<f64>],
    t: &[f64],
    options: &FlowOptions,
) -> Result<(Vec<f64>, Gauge)> {
    let mut p = x.to_vec();
    let mut g = gauge.to_vec();
    for (i, ti) in t.iter().enumerate() {
        let (q, h) = flow_with_gauge(chart, &p, &g, i, *ti, options)?;
        p = q;
        g = h;
    }
    Ok((p, g))
}

/// `max_{i<j} ‖[Y_i, Y_j]‖_g` by fourth-order differences with step `h` per axis.
pub fn commutator_residual(chart: &ImmersionChart, u: &[f64], h: &[f64], seed: u64) -> Result<f64> {
    let n = chart.dim();
    let centre = principal_fields(chart, u, None, seed)?;
    // dy[l][i] = ∂_l Y_i
    let mut dy: Vec<Vec<DVector<f64>>> = Vec::with_capacity(n);
    for l in 0..n {
        let mut shifted: Vec<Option<PrincipalFields>> = Vec::with_capacity(5);
        for o in -2isize..=2 {
            if o == 0 {
                shifted.push(None);
                continue;
            }
            let mut p = u.to_vec();
            p[l] += o as f64 * h[l];
            shifted.push(Some(principal_fields(chart, &p, Some(&centre.x), seed)?));
        }
        let at = |o: isize, i: usize| match &shifted[(o + 2) as usize] {
            Some(f) => f.y(i),
            None => centre.y(i),
        };
        dy.push((0..n).map(|i| first_derivative(h[l], |o| at(o, i))).collect());
    }
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let (yi, yj) = (centre.y(i), centre.y(j));
            let mut b = DVector::zeros(n);
            for l in 0..n {
                b.axpy(yi[l], &dy[l][j], 1.0);
                b.axpy(-yj[l], &dy[l][i], 1.0);
            }
            worst = worst.max((b.transpose() * &centre.g * &b)[(0, 0)].max(0.0).sqrt());
        }
    }
    Ok(worst)
}

/// `F` sampled on a box of flow times.
#[derive(Debug, Clone)]
pub struct FlowMap {
    pub x0: Vec<f64>,
    pub gauge: Gauge,
    /// Grid in `t`; `F(0) = x0` requires `0` inside every interval.
    pub grid: GridSpec,
    /// Chart parameters of `F(t)` per t-node, with the gauge reached there.
    pub samples: Vec<(Vec<f64>, Gauge)>,
    pub requested_box: Vec<(f64, f64)>,
    pub options: FlowOptions,
    pub warnings: Vec<String>,
}

impl FlowMap {
    pub fn t_box(&self) -> Vec<(f64, f64)> {
        (0..self.grid.dim()).map(|k| (self.grid.lower()[k], self.grid.upper()[k])).collect()
    }

    pub fn is_shrunk(&self) -> bool {
        self.t_box() != self.requested_box
    }

    pub fn point(&self, index: usize) -> &[f64] {
        &self.samples[index].0
    }

    /// `(t, u)` rows in grid order.
    pub fn rows(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        (0..self.grid.len()).map(|i| (self.grid.node(i), self.samples[i].0.clone())).collect()
    }
}

fn axis_nodes(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect()
}

/// Flow outward from `t = 0` to every node of one axis; `None` past a domain exit.
fn sweep_axis(
    chart: &ImmersionChart,
    start: &[f64],
    gauge: &[DVector<f64>],
    axis: usize,
    nodes: &[f64],
    options: &FlowOptions,
) -> Result<Vec<Option<(Vec<f64>, Gauge)>>> {
    let mut out: Vec<Option<(Vec<f64>, Gauge)>> = vec![None; nodes.len()];
    let split = nodes.partition_point(|t| *t < 0.0);
    for (order, forward) in [((split..nodes.len()).collect::<Vec<_>>(), true), ((0..split).rev().collect(), false)] {
        let _ = forward;
        let mut p = start.to_vec();
        let mut g = gauge.to_vec();
        let mut t_now = 0.0;
        for k in order {
            match flow_with_gauge(chart, &p, &g, axis, nodes[k] - t_now, options) {
                Ok((q, h)) => {
                    p = q;
                    g = h;
                    t_now = nodes[k];
                    out[k] = Some((p.clone(), g.clone()));
                }
                Err(Error::DomainExit { .. }) | Err(Error::Domain { .. }) => break,
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

/// Largest index box around `zero` whose nodes are all defined.
fn shrink_box(grid: &GridSpec, defined: &[bool], zero: &[usize]) -> Option<(Vec<usize>, Vec<usize>)> {
    let n = grid.dim();
    let mut lo = vec![0usize; n];
    let mut hi: Vec<usize> = grid.counts().iter().map(|c| c - 1).collect();
    loop {
        // count undefined nodes per face of the current box
        let mut bad_faces = vec![[0usize; 2]; n];
        let mut any = false;
        for i in 0..grid.len() {
            let m = grid.multi_index(i);
            if (0..n).any(|k| m[k] < lo[k] || m[k] > hi[k]) || defined[i] {
                continue;
            }
            any = true;
            for k in 0..n {
                if m[k] == lo[k] {
                    bad_faces[k][0] += 1;
                }
                if m[k] == hi[k] {
                    bad_faces[k][1] += 1;
                }
            }
        }
        if !any {
            return Some((lo, hi));
        }
        let mut best: Option<(usize, usize, usize)> = None;
        for k in 0..n {
            for side in 0..2 {
                let movable = if side == 0 { lo[k] < zero[k] } else { hi[k] > zero[k] };
                if movable && best.is_none_or(|b| bad_faces[k][side] > b.2) {
                    best = Some((k, side, bad_faces[k][side]));
                }
            }
        }
        match best {
            Some((k, 0, _)) => lo[k] += 1,
            Some((k, _, _)) => hi[k] -= 1,
            None => return None,
        }
    }
}

/// Sample `F` on the box with `counts` nodes per axis, shrinking on domain exit.
pub fn build_flow_map(
    chart: &ImmersionChart,
    x0: &[f64],
    t_box: &[(f64, f64)],
    counts: &[usize],
    options: &FlowOptions,
) -> Result<FlowMap> {
    let n = chart.dim();
    if t_box.len() != n || counts.len() != n {
        return Err(Error::Argument("flow box and counts must match the chart dimension".into()));
    }
    if t_box.iter().any(|b| !(b.0 <= 0.0 && 0.0 <= b.1)) {
        return Err(Error::Argument("flow box must contain t = 0".into()));
    }
    let counts: Vec<usize> = counts.iter().zip(t_box).map(|(c, b)| if b.0 == b.1 { 1 } else { *c }).collect();
    if counts.contains(&0) {
        return Err(Error::Argument("flow box needs at least one node per axis".into()));
    }
    let gauge = initial_gauge(chart, x0, options.seed)?;
    let axes: Vec<Vec<f64>> = (0..n).map(|k| axis_nodes(t_box[k].0, t_box[k].1, counts[k])).collect();

    // prefix entries: (multi-index over the first k axes, point, gauge)
    let mut level: Vec<(Vec<usize>, Option<(Vec<f64>, Gauge)>)> = vec![(vec![], Some((x0.to_vec(), gauge.clone())))];
    for (axis, nodes) in axes.iter().enumerate() {
        let next: Vec<Vec<(Vec<usize>, Option<(Vec<f64>, Gauge)>)>> = level
            .into_par_iter()
            .map(|(prefix, state)| -> Result<Vec<_>> {
                let column = match &state {
                    Some((p, g)) => sweep_axis(chart, p, g, axis, nodes, options)?,
                    None => vec![None; nodes.len()],
                };
                Ok(column
                    .into_iter()
                    .enumerate()
                    .map(|(k, s)| {
                        let mut idx = prefix.clone();
                        idx.push(k);
                        (idx, s)
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        level = next.into_iter().flatten().collect();
    }
    // `level` is in lexicographic order of the multi-index, which is grid order
    let full = GridSpec::over(t_box, &counts)?;
    let defined: Vec<bool> = level.iter().map(|(_, s)| s.is_some()).collect();
    let mut warnings = Vec::new();
    let zero: Vec<usize> = (0..n)
        .map(|k| axes[k].iter().enumerate().min_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).map_or(0, |e| e.0))
        .collect();
    let (lo, hi) = shrink_box(&full, &defined, &zero)
        .ok_or_else(|| Error::Numerical("no flow box around t = 0 stays in the domain".into()))?;
    let shrunk: Vec<(f64, f64)> = (0..n).map(|k| (axes[k][lo[k]], axes[k][hi[k]])).collect();
    let sub_counts: Vec<usize> = (0..n).map(|k| hi[k] - lo[k] + 1).collect();
    if shrunk != t_box {
        warnings.push(format!("trajectories leave the chart domain; flow box shrunk to {shrunk:?}"));
    }
    let grid = GridSpec::over(&shrunk, &sub_counts)?;
    let samples = (0..grid.len())
        .map(|i| {
            let m = grid.multi_index(i);
            let full_m: Vec<usize> = (0..n).map(|k| m[k] + lo[k]).collect();
            level[full.flat_index(&full_m)].1.clone().expect("inside shrunken box")
        })
        .collect();
    Ok(FlowMap { x0: x0.to_vec(), gauge, grid, samples, requested_box: t_box.to_vec(), options: *options, warnings })
}

/// `‖F_{x0}(t+s) − F_{F_{x0}(s)}(t)‖_∞` over `pairs` random pairs in the box.
pub fn check_homomorphism(chart: &ImmersionChart, map: &FlowMap, pairs: usize, tol: f64) -> ResidualReport {
    let n = chart.dim();
    let b = map.t_box();
    let mut rng = ChaCha8Rng::seed_from_u64(map.options.seed);
    let draws: Vec<(Vec<f64>, Vec<f64>)> = (0..pairs)
        .map(|_| {
            let mut draw = || -> Vec<f64> {
                (0..n)
                    .map(|k| if b[k].0 < b[k].1 { rng.random_range(0.5 * b[k].0..=0.5 * b[k].1) } else { 0.0 })
                    .collect()
            };
            (draw(), draw())
        })
        .collect();
    let rows: Vec<Result<(Vec<f64>, f64)>> = draws
        .into_par_iter()
        .map(|(t, s)| {
            let sum: Vec<f64> = t.iter().zip(&s).map(|(a, b)| a + b).collect();
            let (direct, _) = compose_flows(chart, &map.x0, &map.gauge, &sum, &map.options)?;
            let (y, gy) = compose_flows(chart, &map.x0, &map.gauge, &s, &map.options)?;
            let (shifted, _) = compose_flows(chart, &y, &gy, &t, &map.options)?;
            let err = direct.iter().zip(&shifted).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            Ok((sum, err))
        })
        .collect();
    match rows.into_iter().collect::<Result<Vec<_>>>() {
        Ok(rows) => ResidualReport::from_rows("homomorphism", rows, tol),
        Err(e) => ResidualReport::failed("homomorphism", tol, &e),
    }
}

/// Checks of the frame `√(‖η_i‖² + C) F_*(∂/∂t_i)` at interior t-nodes.
#[derive(Debug, Clone)]
pub struct FrameProperty {
    pub orthonormal: ResidualReport,
    pub principal: ResidualReport,
    pub pullback: ResidualReport,
}

pub fn verify_principal_frame_property(chart: &ImmersionChart, map: &FlowMap, tol: f64) -> FrameProperty {
    let names = ["frame_orthonormal", "frame_principal", "pullback_g0"];
    let n = chart.dim();
    let interior = map.grid.interior_indices(crate::grid::STENCIL_RADIUS);
    let evaluated: Vec<Result<(Vec<f64>, [f64; 3])>> = interior
        .into_par_iter()
        .map(|i| {
            let (u, gauge) = &map.samples[i];
            // J[:, k] = ∂F/∂t_k
            let mut jac = DMatrix::zeros(n, n);
            for k in 0..n {
                let h = map.grid.spacing(k);
                let col = first_derivative(h, |o| {
                    let j = map.grid.offset(i, k, o).expect("interior");
                    DVector::from_column_slice(&map.samples[j].0)
                });
                jac.set_column(k, &col);
            }
            let fd = second_fundamental_form(chart, u)?;
            let fields = principal_fields(chart, u, Some(gauge), map.options.seed)?;
            let w: Vec<DVector<f64>> = (0..n).map(|k| jac.column(k) / fields.lambda[k]).collect();
            let mut ortho: f64 = 0.0;
            let mut principal: f64 = 0.0;
            for a in 0..n {
                for b in 0..n {
                    let target = if a == b { 1.0 } else { 0.0 };
                    ortho = ortho.max((fd.g_inner(&w[a], &w[b]) - target).abs());
                }
                principal = principal.max(1.0 - fd.g_inner(&w[a], &fields.x[a]).abs());
            }
            let g0 = &fd.g * chart.big_c() + third_fundamental_form(&fd);
            let pull = jac.transpose() * g0 * &jac - DMatrix::identity(n, n);
            Ok((map.grid.node(i), [ortho, principal.abs(), pull.amax()]))
        })
        .collect();
    match evaluated.into_iter().collect::<Result<Vec<_>>>() {
        Ok(rows) => {
            let report = |k: usize| {
                ResidualReport::from_rows(names[k], rows.iter().map(|(t, r)| (t.clone(), r[k])).collect(), tol)
            };
            FrameProperty { orthonormal: report(0), principal: report(1), pullback: report(2) }
        }
        Err(e) => FrameProperty {
            orthonormal: ResidualReport::failed(names[0], tol, &e),
            principal: ResidualReport::failed(names[1], tol, &e),
            pullback: ResidualReport::failed(names[2], tol, &e),
        },
    }
}

/// Smallest `g⁰`-distance between images of distinct t-nodes, against half a t-cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Injectivity {
    pub min_distance: f64,
    pub threshold: f64,
}

impl Injectivity {
    /// A single-node map has no pair to separate and passes.
    pub fn passed(&self) -> bool {
        self.threshold.is_infinite() || self.min_distance > self.threshold
    }
}

pub fn check_injectivity(chart: &ImmersionChart, map: &FlowMap) -> Result<Injectivity> {
    let n = chart.dim();
    let pts: Vec<DVector<f64>> = map.samples.iter().map(|s| DVector::from_column_slice(&s.0)).collect();
    let metrics: Vec<DMatrix<f64>> = map
        .samples
        .par_iter()
        .map(|s| {
            let fd = second_fundamental_form(chart, &s.0)?;
            Ok(&fd.g * chart.big_c() + third_fundamental_form(&fd))
        })
        .collect::<Result<_>>()?;
    let min_distance = (0..pts.len())
        .into_par_iter()
        .map(|a| {
            let mut m = f64::INFINITY;
            for b in (a + 1)..pts.len() {
                let d = &pts[b] - &pts[a];
                m = m.min((d.transpose() * &metrics[a] * &d)[(0, 0)].max(0.0).sqrt());
            }
            m
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let cell = (0..n).filter(|&k| map.grid.counts()[k] > 1).map(|k| map.grid.spacing(k)).fold(f64::INFINITY, f64::min);
    Ok(Injectivity { min_distance, threshold: 0.5 * cell })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shrink_keeps_zero_and_drops_bad_faces() {
        let g = GridSpec::over(&[(-1.0, 1.0), (-1.0, 1.0)], &[5, 5]).unwrap();
        let mut defined = vec![true; 25];
        defined[g.flat_index(&[4, 1])] = false;
        defined[g.flat_index(&[4, 3])] = false;
        let (lo, hi) = shrink_box(&g, &defined, &[2, 2]).unwrap();
        assert_eq!((lo, hi), (vec![0, 0], vec![3, 4]));
    }

    #[test]
    fn axis_nodes_hit_the_ends() {
        assert_eq!(axis_nodes(-1.0, 1.0, 3), vec![-1.0, 0.0, 1.0]);
        assert_eq!(axis_nodes(0.0, 0.0, 1), vec![0.0]);
    }
}
