//! Lengths, grid distances, geodesic balls and volumes for comparing `g` with
//! the flat metric `g⁰ = C g + III`, and the exponential-growth fit.
//!
//! Distances are shortest paths on the grid graph with the 16-neighbour
//! stencil (all primitive offsets with entries in `[-2, 2]`). On surfaces the
//! graph distances are then relaxed by a semi-Lagrangian update over the
//! stencil's angular sectors, which removes most of the metrication error.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{normal_curvature_residual, second_fundamental_form, ImmersionChart};
use crate::grid::GridSpec;
use crate::principal::{principal_decomposition, third_fundamental_form, DEFAULT_SEED};
use crate::verify::Status;

/// Largest relative error of refined grid distances against the closed-form
/// hyperbolic distance, measured on the 257² oracle chart (7.5e-3) and rounded up.
pub const DISTANCE_STENCIL_ERROR: f64 = 1e-2;

/// Largest relative error of ball volumes against `2π(cosh r − 1)` on the
/// same chart for `r ≤ 3` (2.8e-3), rounded up.
pub const VOLUME_CELL_ERROR: f64 = 5e-3;

const MAX_SWEEPS: usize = 400;
const SUBCELLS: usize = 8;
/// Seeded neighbourhood of the anchor cell, in cells, for refined distances.
const SEED_CELLS: usize = 4;

/// Metric tensor sampled on a grid refined `refine` times per axis, so that
/// midpoints of stencil edges are sample nodes when `refine = 2`.
///
/// Samples where the chart cannot be evaluated are masked; edges and cells
/// touching them are dropped, so a disconnected usable region yields one
/// distance field per component of the anchor (other nodes stay at infinity).
#[derive(Debug, Clone)]
pub struct SampledMetric {
    pub grid: GridSpec,
    pub refine: usize,
    fine: GridSpec,
    values: Vec<DMatrix<f64>>,
    usable: Vec<bool>,
}

fn fine_grid(grid: &GridSpec, refine: usize) -> Result<GridSpec> {
    let counts: Vec<usize> = grid.counts().iter().map(|c| refine * (c - 1) + 1).collect();
    GridSpec::new(grid.lower().to_vec(), grid.upper().to_vec(), counts)
}

/// Failures that mark a sample as outside the usable region rather than abort.
fn is_mask_error(e: &Error) -> bool {
    matches!(e, Error::Domain { .. } | Error::ModelConsistency { .. } | Error::Degenerate { .. })
}

impl SampledMetric {
    pub fn new(grid: GridSpec, refine: usize, f: impl Fn(&[f64]) -> Result<DMatrix<f64>> + Sync) -> Result<Self> {
        if !(refine == 1 || refine == 2) {
            return Err(Error::Argument("metric refinement must be 1 or 2".into()));
        }
        let fine = fine_grid(&grid, refine)?;
        let n = grid.dim();
        let samples = (0..fine.len())
            .into_par_iter()
            .map(|i| match f(&fine.node(i)) {
                Ok(g) => Ok(Some(g)),
                Err(e) if is_mask_error(&e) => Ok(None),
                Err(e) => Err(e),
            })
            .collect::<Result<Vec<_>>>()?;
        let usable = samples.iter().map(Option::is_some).collect();
        let values = samples.into_iter().map(|g| g.unwrap_or_else(|| DMatrix::zeros(n, n))).collect();
        Ok(SampledMetric { grid, refine, fine, values, usable })
    }

    fn from_values(grid: GridSpec, refine: usize, values: Vec<DMatrix<f64>>, usable: Vec<bool>) -> Result<Self> {
        let fine = fine_grid(&grid, refine)?;
        if values.len() != fine.len() || usable.len() != fine.len() {
            return Err(Error::Argument("metric samples do not match the refined grid".into()));
        }
        Ok(SampledMetric { grid, refine, fine, values, usable })
    }

    fn fine_index(&self, m: &[usize], twice: &[isize]) -> usize {
        // refine = 2: fine position 2m + twice
        let f: Vec<usize> = m.iter().zip(twice).map(|(a, b)| (2 * *a as isize + b) as usize).collect();
        self.fine.flat_index(&f)
    }

    fn coarse_fine(&self, index: usize) -> usize {
        let f: Vec<usize> = self.grid.multi_index(index).iter().map(|a| a * self.refine).collect();
        self.fine.flat_index(&f)
    }

    /// Metric at a coarse node (zero where masked).
    pub fn at(&self, index: usize) -> &DMatrix<f64> {
        &self.values[self.coarse_fine(index)]
    }

    pub fn is_usable(&self, index: usize) -> bool {
        self.usable[self.coarse_fine(index)]
    }

    /// Metric at the midpoint of the edge from `index` along `delta`.
    pub fn midpoint(&self, index: usize, delta: &[isize]) -> Option<DMatrix<f64>> {
        let other = self.grid.displaced(index, delta)?;
        if !self.is_usable(index) || !self.is_usable(other) {
            return None;
        }
        if self.refine == 2 {
            let f = self.fine_index(&self.grid.multi_index(index), delta);
            self.usable[f].then(|| self.values[f].clone())
        } else {
            Some((self.at(index) + self.at(other)) * 0.5)
        }
    }

    /// Midpoint-metric length of the straight edge from `index` along `delta`.
    pub fn edge_length(&self, index: usize, delta: &[isize]) -> Option<f64> {
        let g = self.midpoint(index, delta)?;
        Some(quadratic_length(&g, &self.step(delta)))
    }

    /// Metric at the refined sample nearest to `u`.
    pub fn nearest(&self, u: &[f64]) -> Option<&DMatrix<f64>> {
        let i = self.fine.nearest(u);
        self.usable[i].then(|| &self.values[i])
    }

    /// Simpson length of the straight segment from `a` to `b`.
    pub fn segment_length(&self, a: &[f64], b: &[f64]) -> Option<f64> {
        let (va, vb) = (DVector::from_column_slice(a), DVector::from_column_slice(b));
        let mid = (&va + &vb) * 0.5;
        let d = &vb - &va;
        Some(
            (quadratic_length(self.nearest(a)?, &d)
                + 4.0 * quadratic_length(self.nearest(mid.as_slice())?, &d)
                + quadratic_length(self.nearest(b)?, &d))
                / 6.0,
        )
    }

    fn step(&self, delta: &[isize]) -> DVector<f64> {
        DVector::from_iterator(delta.len(), delta.iter().enumerate().map(|(k, d)| *d as f64 * self.grid.spacing(k)))
    }

    /// Metric at the centre of the cell whose lowest corner is `m`.
    fn cell_centre(&self, m: &[usize]) -> Option<DMatrix<f64>> {
        let n = m.len();
        let mut acc = DMatrix::zeros(n, n);
        for corner in 0..(1usize << n) {
            let c: Vec<usize> = (0..n).map(|k| m[k] + ((corner >> k) & 1)).collect();
            let i = self.grid.flat_index(&c);
            if !self.is_usable(i) {
                return None;
            }
            acc += self.at(i);
        }
        if self.refine == 2 {
            let f = self.fine_index(m, &vec![1; n]);
            return self.usable[f].then(|| self.values[f].clone());
        }
        Some(acc / (1usize << n) as f64)
    }

    /// Averaged metric for the sector spanned by the edges `a` and `b` at `index`.
    fn sector(&self, index: usize, a: &[isize], b: &[isize]) -> Option<DMatrix<f64>> {
        let m = self.grid.multi_index(index);
        let n = m.len();
        if self.refine == 2 {
            // average the fine nodes around x + (a + b)/4
            let lo: Vec<isize> = (0..n).map(|k| (a[k] + b[k]).div_euclid(2)).collect();
            let odd: Vec<bool> = (0..n).map(|k| (a[k] + b[k]).rem_euclid(2) == 1).collect();
            let mut acc = DMatrix::zeros(n, n);
            let mut count = 0.0;
            for corner in 0..(1usize << n) {
                if (0..n).any(|k| (corner >> k) & 1 == 1 && !odd[k]) {
                    continue;
                }
                let t: Vec<isize> = (0..n).map(|k| lo[k] + ((corner >> k) & 1) as isize).collect();
                let f = self.fine_index(&m, &t);
                if !self.usable[f] {
                    return None;
                }
                acc += &self.values[f];
                count += 1.0;
            }
            Some(acc / count)
        } else {
            let na = self.grid.displaced(index, a)?;
            let nb = self.grid.displaced(index, b)?;
            Some((self.at(index) * 2.0 + self.at(na) + self.at(nb)) * 0.25)
        }
    }
}

fn quadratic_length(g: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    (v.transpose() * g * v)[(0, 0)].max(0.0).sqrt()
}

/// `g`, `g⁰` and `‖α‖²` sampled for the growth analysis.
#[derive(Debug, Clone)]
pub struct GrowthGeometry {
    pub big_c: f64,
    pub g: SampledMetric,
    pub g0: SampledMetric,
    /// `‖α‖²` on the refined grid.
    sff_fine: Vec<f64>,
}

impl GrowthGeometry {
    pub fn grid(&self) -> &GridSpec {
        &self.g.grid
    }

    /// `‖α‖²` at a coarse node.
    pub fn sff(&self, index: usize) -> f64 {
        let m = self.g.grid.multi_index(index);
        let f: Vec<usize> = m.iter().map(|a| a * self.g.refine).collect();
        self.sff_fine[self.g.fine.flat_index(&f)]
    }

    pub fn sff_values(&self) -> Vec<f64> {
        (0..self.grid().len()).map(|i| self.sff(i)).collect()
    }

    fn sff_midpoint(&self, index: usize, delta: &[isize]) -> f64 {
        if self.g.refine == 2 {
            let m = self.g.grid.multi_index(index);
            let f: Vec<usize> = m.iter().zip(delta).map(|(a, b)| (2 * *a as isize + b) as usize).collect();
            self.sff_fine[self.g.fine.flat_index(&f)]
        } else {
            let other = self.g.grid.displaced(index, delta).expect("edge inside grid");
            self.sff(index).max(self.sff(other))
        }
    }
}

/// Sample the chart on `counts` nodes over its usable domain; surfaces get a
/// refined metric grid so every stencil edge has a sampled midpoint.
pub fn sample_geometry(chart: &ImmersionChart, counts: &[usize]) -> Result<GrowthGeometry> {
    if counts.len() != chart.dim() {
        return Err(Error::Argument("grid counts must match the chart dimension".into()));
    }
    let grid = GridSpec::over(&chart.usable_domain(), counts)?;
    let refine = if chart.dim() == 2 { 2 } else { 1 };
    let fine = fine_grid(&grid, refine)?;
    let big_c = chart.big_c();
    let n = chart.dim();
    let samples: Vec<Option<(DMatrix<f64>, DMatrix<f64>, f64)>> = (0..fine.len())
        .into_par_iter()
        .map(|i| match second_fundamental_form(chart, &fine.node(i)) {
            Ok(fd) => {
                let g0 = &fd.g * big_c + third_fundamental_form(&fd);
                Ok(Some((fd.g, g0, fd.sff_norm_sq)))
            }
            Err(e) if is_mask_error(&e) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let usable: Vec<bool> = samples.iter().map(Option::is_some).collect();
    let mut g = Vec::with_capacity(samples.len());
    let mut g0 = Vec::with_capacity(samples.len());
    let mut sff = Vec::with_capacity(samples.len());
    for sample in samples {
        let (a, b, s) = sample.unwrap_or_else(|| (DMatrix::zeros(n, n), DMatrix::zeros(n, n), f64::NAN));
        g.push(a);
        g0.push(b);
        sff.push(s);
    }
    Ok(GrowthGeometry {
        big_c,
        g: SampledMetric::from_values(grid.clone(), refine, g, usable.clone())?,
        g0: SampledMetric::from_values(grid, refine, g0, usable)?,
        sff_fine: sff,
    })
}

/// `L_g`, `L_{g⁰}` and `Ŝ = max ‖α‖²` of one curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveLengths {
    pub l_g: f64,
    pub l_g0: f64,
    pub s_hat: f64,
}

impl CurveLengths {
    /// `1 − L_{g⁰} / ((Ŝ + C)^{1/2} L_g)`; positive when the length inequality holds.
    pub fn margin(&self, big_c: f64) -> f64 {
        1.0 - self.l_g0 / ((self.s_hat + big_c).sqrt() * self.l_g)
    }
}

/// Composite midpoint rule on a polyline with `sub` samples per segment.
pub fn curve_length(chart: &ImmersionChart, polyline: &[Vec<f64>], sub: usize) -> Result<CurveLengths> {
    if polyline.len() < 2 || sub == 0 {
        return Err(Error::Argument("a curve needs two vertices and at least one sample per segment".into()));
    }
    let big_c = chart.big_c();
    let mut out = CurveLengths { l_g: 0.0, l_g0: 0.0, s_hat: 0.0 };
    for (k, seg) in polyline.windows(2).enumerate() {
        let (a, b) = (DVector::from_column_slice(&seg[0]), DVector::from_column_slice(&seg[1]));
        let step = (&b - &a) / sub as f64;
        for j in 0..sub {
            let p = &a + &step * (j as f64 + 0.5);
            let fd = second_fundamental_form(chart, p.as_slice()).map_err(|e| match e {
                Error::Domain { point } => Error::Argument(format!("segment {k} leaves the chart at {point:?}")),
                other => other,
            })?;
            let g0 = &fd.g * big_c + third_fundamental_form(&fd);
            out.l_g += quadratic_length(&fd.g, &step);
            out.l_g0 += quadratic_length(&g0, &step);
            out.s_hat = out.s_hat.max(fd.sff_norm_sq);
        }
    }
    Ok(out)
}

/// Length of a polyline in a user-supplied metric.
pub fn length_in(metric: impl Fn(&[f64]) -> Result<DMatrix<f64>>, polyline: &[Vec<f64>], sub: usize) -> Result<f64> {
    let mut total = 0.0;
    for seg in polyline.windows(2) {
        let (a, b) = (DVector::from_column_slice(&seg[0]), DVector::from_column_slice(&seg[1]));
        let step = (&b - &a) / sub.max(1) as f64;
        for j in 0..sub.max(1) {
            let p = &a + &step * (j as f64 + 0.5);
            total += quadratic_length(&metric(p.as_slice())?, &step);
        }
    }
    Ok(total)
}

/// Primitive integer offsets with entries in `[-2, 2]`.
pub fn stencil(n: usize) -> Vec<Vec<isize>> {
    fn gcd(a: isize, b: isize) -> isize {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }
    let total = 5usize.pow(n as u32);
    (0..total)
        .map(|mut code| {
            (0..n)
                .map(|_| {
                    let d = (code % 5) as isize - 2;
                    code /= 5;
                    d
                })
                .collect::<Vec<isize>>()
        })
        .filter(|d| d.iter().fold(0, |g, &x| gcd(g, x)) == 1)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMethod {
    /// Shortest paths on the stencil graph.
    Graph,
    /// Graph distances relaxed by sector updates (surfaces only).
    Refined,
}

/// `d(x₀, ·)` on the grid nodes.
#[derive(Debug, Clone)]
pub struct DistanceField {
    pub anchor: Vec<f64>,
    pub grid: GridSpec,
    pub values: Vec<f64>,
    /// Previous node on the shortest graph path; `None` at the seeds.
    pub predecessor: Vec<Option<usize>>,
    pub seeds: Vec<usize>,
    pub method: DistanceMethod,
    pub sweeps: usize,
}

impl DistanceField {
    /// Multilinear interpolation at `u`.
    pub fn interpolate(&self, u: &[f64]) -> Option<f64> {
        let n = self.grid.dim();
        let (lower, frac) = cell_of(&self.grid, u)?;
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut m = lower.clone();
            for k in 0..n {
                if (corner >> k) & 1 == 1 {
                    w *= frac[k];
                    m[k] += 1;
                } else {
                    w *= 1.0 - frac[k];
                }
            }
            if w != 0.0 {
                acc += w * self.values[self.grid.flat_index(&m)];
            }
        }
        Some(acc)
    }

    /// Node path from a seed to `index`.
    pub fn path_to(&self, index: usize) -> Vec<usize> {
        let mut path = vec![index];
        let mut at = index;
        while let Some(p) = self.predecessor[at] {
            path.push(p);
            at = p;
        }
        path.reverse();
        path
    }

    pub fn max_reached(&self) -> f64 {
        self.values.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max)
    }
}

/// Lowest corner of the cell containing `u` and the fractional position inside it.
fn cell_of(grid: &GridSpec, u: &[f64]) -> Option<(Vec<usize>, Vec<f64>)> {
    let n = grid.dim();
    if u.len() != n {
        return None;
    }
    let mut lower = vec![0; n];
    let mut frac = vec![0.0; n];
    for k in 0..n {
        let c = grid.counts()[k];
        if c == 1 {
            continue;
        }
        let f = (u[k] - grid.lower()[k]) / grid.spacing(k);
        if !(-1e-9..=(c - 1) as f64 + 1e-9).contains(&f) {
            return None;
        }
        let i = (f.floor().max(0.0) as usize).min(c - 2);
        lower[k] = i;
        frac[k] = (f - i as f64).clamp(0.0, 1.0);
    }
    Some((lower, frac))
}

#[derive(PartialEq)]
struct Queued(f64, usize);

impl Eq for Queued {}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Distances from `anchor` in the sampled metric.
pub fn distance_field(metric: &SampledMetric, anchor: &[f64], method: DistanceMethod) -> Result<DistanceField> {
    let grid = &metric.grid;
    let n = grid.dim();
    if method == DistanceMethod::Refined && n != 2 {
        return Err(Error::Unsupported("sector refinement is implemented for surfaces only".into()));
    }
    let (lower, _) = cell_of(grid, anchor).ok_or_else(|| Error::Domain { point: anchor.to_vec() })?;
    let mut values = vec![f64::INFINITY; grid.len()];
    let mut predecessor = vec![None; grid.len()];
    let mut heap = BinaryHeap::new();
    // a node anchor seeds itself for graph distances; otherwise the nodes of the
    // surrounding cell, widened for the sector updates so the initial front is round
    let seeds: Vec<usize> = match (grid.locate(anchor), method) {
        (Some(i), DistanceMethod::Graph) => vec![i],
        _ => {
            let reach = if method == DistanceMethod::Refined { SEED_CELLS } else { 0 };
            (0..grid.len())
                .filter(|&i| {
                    grid.multi_index(i).iter().zip(&lower).all(|(&m, &l)| m + reach >= l && m <= l + 1 + reach)
                })
                .collect()
        }
    };
    let seeds: Vec<usize> = seeds
        .into_iter()
        .filter(|&i| {
            let Some(d) = metric.segment_length(anchor, &grid.node(i)) else { return false };
            values[i] = d;
            heap.push(Queued(d, i));
            true
        })
        .collect();
    if seeds.is_empty() {
        return Err(Error::Domain { point: anchor.to_vec() });
    }
    let offsets = stencil(n);
    let mut done = vec![false; grid.len()];
    while let Some(Queued(d, i)) = heap.pop() {
        if done[i] {
            continue;
        }
        done[i] = true;
        for off in &offsets {
            let Some(j) = grid.displaced(i, off) else { continue };
            if done[j] {
                continue;
            }
            let Some(w) = metric.edge_length(i, off) else { continue };
            if d + w < values[j] {
                values[j] = d + w;
                predecessor[j] = Some(i);
                heap.push(Queued(d + w, j));
            }
        }
    }
    let mut field =
        DistanceField { anchor: anchor.to_vec(), grid: grid.clone(), values, predecessor, seeds, method, sweeps: 0 };
    if method == DistanceMethod::Refined {
        field.sweeps = refine_sectors(metric, &mut field.values, &field.seeds);
    }
    Ok(field)
}

/// Minimum over `s ∈ [0, 1]` of `d_a + s (d_b − d_a) + ‖a + s (b − a)‖_G`.
fn sector_update(g: &DMatrix<f64>, a: &DVector<f64>, b: &DVector<f64>, da: f64, db: f64) -> f64 {
    let w = b - a;
    let ga = g * a;
    let q = a.dot(&ga);
    let bb = w.dot(&ga);
    let aa = w.dot(&(g * &w));
    let delta = db - da;
    let cost = |s: f64| da + s * delta + (q + 2.0 * s * bb + s * s * aa).max(0.0).sqrt();
    let mut best = cost(0.0).min(cost(1.0));
    if aa > 0.0 && delta * delta < aa {
        let disc = (aa * q - bb * bb).max(0.0);
        let s = (-bb - delta * (disc / (aa - delta * delta)).sqrt()) / aa;
        if (0.0..=1.0).contains(&s) {
            best = best.min(cost(s));
        }
    }
    best
}

/// Gauss–Seidel sweeps of sector updates in alternating orders; returns the sweep count.
fn refine_sectors(metric: &SampledMetric, values: &mut [f64], seeds: &[usize]) -> usize {
    let grid = &metric.grid;
    let mut offsets = stencil(2);
    offsets.sort_by(|p, q| (p[1] as f64).atan2(p[0] as f64).total_cmp(&(q[1] as f64).atan2(q[0] as f64)));
    let vecs: Vec<DVector<f64>> = offsets.iter().map(|o| metric.step(o)).collect();
    let (nx, ny) = (grid.counts()[0], grid.counts()[1]);
    let fixed: Vec<bool> = (0..grid.len()).map(|i| seeds.contains(&i)).collect();
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        let (rev_x, rev_y) = (sweeps % 2 == 1, (sweeps / 2) % 2 == 1);
        let mut change: f64 = 0.0;
        for ix in 0..nx {
            let ix = if rev_x { nx - 1 - ix } else { ix };
            for iy in 0..ny {
                let iy = if rev_y { ny - 1 - iy } else { iy };
                let i = ix * ny + iy;
                if fixed[i] {
                    continue;
                }
                let mut best = values[i];
                for k in 0..offsets.len() {
                    let l = (k + 1) % offsets.len();
                    let (Some(ja), Some(jb)) = (grid.displaced(i, &offsets[k]), grid.displaced(i, &offsets[l])) else {
                        continue;
                    };
                    let (da, db) = (values[ja], values[jb]);
                    if !da.is_finite() || !db.is_finite() || da.min(db) >= best {
                        continue;
                    }
                    let Some(g) = metric.sector(i, &offsets[k], &offsets[l]) else { continue };
                    best = best.min(sector_update(&g, &vecs[k], &vecs[l], da, db));
                }
                if best < values[i] {
                    change = change.max((values[i] - best) / best.max(1e-300));
                    values[i] = best;
                }
            }
        }
        sweeps += 1;
        if change < 1e-13 && sweeps >= 4 {
            break;
        }
    }
    sweeps
}

/// `S(r)`: largest `‖α‖²` over nodes with `d ≤ r`.
pub fn ball_max_sff(df: &DistanceField, sff: &[f64], r: f64) -> Result<f64> {
    if r < 0.0 || r.is_nan() {
        return Err(Error::Argument(format!("ball radius must be non-negative, got {r}")));
    }
    let inside = df.values.iter().zip(sff).filter(|(d, _)| **d <= r).map(|(_, s)| *s);
    let at_anchor = df.seeds.iter().map(|&i| (df.values[i], sff[i]));
    // an empty node set still contains the anchor
    let nearest_seed = at_anchor.min_by(|a, b| a.0.total_cmp(&b.0)).map_or(0.0, |s| s.1);
    Ok(inside.fold(nearest_seed, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallVolume {
    pub volume: f64,
    /// The ball reaches the grid boundary, so the volume is only a lower bound.
    pub truncated: bool,
}

/// `Vol_g(D_r)` from cells; cells cut by the sphere are subdivided with the
/// interpolated distance.
pub fn ball_volume(metric: &SampledMetric, df: &DistanceField, r: f64) -> Result<BallVolume> {
    if r < 0.0 || r.is_nan() {
        return Err(Error::Argument(format!("ball radius must be non-negative, got {r}")));
    }
    let grid = &metric.grid;
    let n = grid.dim();
    let cell_counts: Vec<usize> = grid.counts().iter().map(|c| c.saturating_sub(1)).collect();
    if cell_counts.contains(&0) {
        return Err(Error::Argument("ball volume needs at least two nodes per axis".into()));
    }
    let cells = GridSpec::new(vec![0.0; n], vec![1.0; n], cell_counts)?;
    let cell_vol = grid.cell_volume();
    let per_cell: Vec<f64> = (0..cells.len())
        .into_par_iter()
        .map(|c| {
            let m = cells.multi_index(c);
            let corners: Vec<f64> = (0..(1usize << n))
                .map(|corner| {
                    let q: Vec<usize> = (0..n).map(|k| m[k] + ((corner >> k) & 1)).collect();
                    df.values[grid.flat_index(&q)]
                })
                .collect();
            let lo = corners.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if lo > r {
                return 0.0;
            }
            let frac = if hi <= r { 1.0 } else { covered_fraction(&corners, n, r) };
            if frac == 0.0 {
                return 0.0;
            }
            metric.cell_centre(&m).map_or(0.0, |g| frac * cell_vol * g.determinant().max(0.0).sqrt())
        })
        .collect();
    let volume = per_cell.iter().sum();
    let edge = |i: usize| {
        grid.on_boundary(i)
            || (0..n).any(|k| [-1, 1].iter().any(|&o| grid.offset(i, k, o).is_some_and(|j| !metric.is_usable(j))))
    };
    let truncated = (0..grid.len()).any(|i| df.values[i] <= r && edge(i));
    Ok(BallVolume { volume, truncated })
}

fn covered_fraction(corners: &[f64], n: usize, r: f64) -> f64 {
    let total = SUBCELLS.pow(n as u32);
    let mut hit = 0usize;
    for s in 0..total {
        let mut code = s;
        let t: Vec<f64> = (0..n)
            .map(|_| {
                let j = code % SUBCELLS;
                code /= SUBCELLS;
                (j as f64 + 0.5) / SUBCELLS as f64
            })
            .collect();
        let mut d = 0.0;
        for (corner, value) in corners.iter().enumerate() {
            let w: f64 = (0..n).map(|k| if (corner >> k) & 1 == 1 { t[k] } else { 1.0 - t[k] }).product();
            if w != 0.0 {
                d += w * value;
            }
        }
        if d <= r {
            hit += 1;
        }
    }
    hit as f64 / total as f64
}

/// `Γ(k/2)` by the recurrence from `Γ(1/2) = √π` and `Γ(1) = 1`.
pub fn gamma_half(k: usize) -> f64 {
    assert!(k > 0, "Γ(0) is undefined");
    let mut x = if k.is_multiple_of(2) { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut arg = if k.is_multiple_of(2) { 1.0 } else { 0.5 };
    while arg < k as f64 / 2.0 {
        x *= arg;
        arg += 1.0;
    }
    x
}

/// Volume of the unit ball in `Rⁿ`.
pub fn omega(n: usize) -> f64 {
    std::f64::consts::PI.powf(n as f64 / 2.0) / gamma_half(n + 2)
}

/// Volume of a geodesic ball of radius `r` in the space form of curvature `c`.
pub fn reference_volume(n: usize, c: f64, r: f64) -> f64 {
    let sn = |t: f64| {
        if c < 0.0 {
            (t * (-c).sqrt()).sinh() / (-c).sqrt()
        } else if c > 0.0 {
            (t * c.sqrt()).sin() / c.sqrt()
        } else {
            t
        }
    };
    if n == 1 {
        return 2.0 * r;
    }
    // composite Simpson
    let m = 2000;
    let h = r / m as f64;
    let f = |t: f64| sn(t).powi(n as i32 - 1);
    let mut s = f(0.0) + f(r);
    for k in 1..m {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
    }
    n as f64 * omega(n) * s * h / 3.0
}

/// `rⁿ (1 + S/C)^{n/2} ωₙ`.
pub fn volume_bound(n: usize, r: f64, s: f64, big_c: f64) -> f64 {
    r.powi(n as i32) * (1.0 + s / big_c).powf(n as f64 / 2.0) * omega(n)
}

/// `value ≈ k e^{ℓ r}` by least squares of `ln value` on `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialFit {
    pub k: f64,
    pub ell: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub rows: usize,
}

/// Fit over `window`, or by default over all radii but the smallest 20%.
pub fn fit_exponential(rows: &[(f64, f64)], window: Option<(f64, f64)>) -> Result<ExponentialFit> {
    if rows.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Argument("fit radii must be strictly increasing".into()));
    }
    let window = match window {
        Some(w) => w,
        None => {
            let skip = rows.len() / 5;
            match (rows.get(skip), rows.last()) {
                (Some(a), Some(b)) => (a.0, b.0),
                _ => return Err(Error::Argument("fit needs at least 4 rows".into())),
            }
        }
    };
    let used: Vec<(f64, f64)> = rows.iter().copied().filter(|(r, _)| *r >= window.0 && *r <= window.1).collect();
    if used.len() < 4 {
        return Err(Error::Argument(format!(
            "fit needs at least 4 rows in [{}, {}], got {}",
            window.0,
            window.1,
            used.len()
        )));
    }
    if let Some((r, v)) = used.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::Argument(format!("fit value at r = {r} is not positive ({v})")));
    }
    let m = used.len() as f64;
    let xs: Vec<f64> = used.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = used.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let ell = sxy / sxx;
    let intercept = my - ell * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - ell * x).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r_squared = if ss_tot <= f64::EPSILON * f64::EPSILON * m { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(ExponentialFit { k: intercept.exp(), ell, r_squared, window, rows: used.len() })
}

/// One link of the comparison chain at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainLink {
    pub status: Status,
    /// Relative margin; positive when the inequality holds.
    pub margin: f64,
    /// Margin needed to certify the inequality against discretization error.
    pub required: f64,
    pub samples: usize,
}

impl ChainLink {
    fn judge(margin: f64, required: f64, samples: usize) -> Self {
        let status = if samples == 0 {
            Status::Indeterminate
        } else if margin > required {
            Status::Pass
        } else if margin < -required {
            Status::Fail
        } else {
            Status::Indeterminate
        };
        ChainLink { status, margin, required, samples }
    }
}

pub const LINK_NAMES: [&str; 4] = ["le", "di", "balls", "volume"];

#[derive(Debug, Clone)]
pub struct GrowthRow {
    pub r: f64,
    pub s: f64,
    pub psi: f64,
    pub vol: f64,
    pub bound: f64,
    pub ref_vol: f64,
    pub truncated: bool,
    /// Length, distance, ball-containment and volume inequalities, in that order.
    pub links: [ChainLink; 4],
}

#[derive(Debug, Clone)]
pub struct GrowthOptions {
    pub counts: Vec<usize>,
    pub window: Option<(f64, f64)>,
    pub exploratory: bool,
    pub seed: u64,
    pub flat_tolerance: f64,
    pub distance_error: f64,
    pub volume_error: f64,
    /// Number of anchor-to-node geodesics sampled for the length inequalities.
    pub pairs: usize,
}

impl GrowthOptions {
    pub fn for_dim(n: usize) -> Self {
        GrowthOptions {
            counts: vec![if n == 2 { 257 } else { 65 }; n],
            window: None,
            exploratory: false,
            seed: DEFAULT_SEED,
            flat_tolerance: 1e-6,
            distance_error: DISTANCE_STENCIL_ERROR,
            volume_error: VOLUME_CELL_ERROR,
            pairs: 400,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GrowthReport {
    pub chart: String,
    pub anchor: Vec<f64>,
    pub n: usize,
    pub c: f64,
    pub big_c: f64,
    pub counts: Vec<usize>,
    pub rows: Vec<GrowthRow>,
    /// Fit of `max ‖α‖ = √S(r)`.
    pub fit: Option<ExponentialFit>,
    pub fit_error: Option<String>,
    /// Hypothesis guard that refused the chain.
    pub notice: Option<String>,
    pub warnings: Vec<String>,
}

impl GrowthReport {
    /// Worst status of each chain link over all rows.
    pub fn link_status(&self, link: usize) -> Status {
        let mut worst = if self.rows.is_empty() { Status::Skipped } else { Status::Pass };
        for row in &self.rows {
            match (worst, row.links[link].status) {
                (_, Status::Fail) => worst = Status::Fail,
                (Status::Pass, Status::Indeterminate) => worst = Status::Indeterminate,
                _ => {}
            }
        }
        worst
    }

    pub fn chain_passed(&self) -> bool {
        !self.rows.is_empty() && (0..4).all(|k| self.link_status(k) == Status::Pass)
    }
}

fn hypothesis_notice(chart: &ImmersionChart, anchor: &[f64], options: &GrowthOptions) -> Result<Option<String>> {
    let fd = second_fundamental_form(chart, anchor)?;
    let comm = normal_curvature_residual(&fd);
    if comm > options.flat_tolerance * (1.0 + fd.sff_norm_sq) {
        return Ok(Some(format!("hypothesis: normal bundle not flat, commutator {comm:.3e} at {anchor:?}")));
    }
    let d = principal_decomposition(&fd, chart.big_c(), options.seed)?;
    if !d.is_simple() {
        return Ok(Some(format!("hypothesis: principal normal multiplicities {:?} at {anchor:?}", d.multiplicities())));
    }
    if chart.big_c() <= 0.0 && !options.exploratory {
        return Ok(Some(format!("hypothesis: C = {} <= 0, exploratory mode required", chart.big_c())));
    }
    Ok(None)
}

/// Per-target data for the length and distance inequalities.
struct PairSample {
    d_g: f64,
    le: f64,
    di: f64,
}

/// Lengths of a graph path from the anchor, with `Ŝ` over nodes and edge midpoints.
pub fn path_lengths(geom: &GrowthGeometry, df: &DistanceField, index: usize) -> CurveLengths {
    let path = df.path_to(index);
    let grid = geom.grid();
    let first = path[0];
    let node = grid.node(first);
    let mut out = CurveLengths {
        l_g: geom.g.segment_length(&df.anchor, &node).unwrap_or(f64::NAN),
        l_g0: geom.g0.segment_length(&df.anchor, &node).unwrap_or(f64::NAN),
        s_hat: geom.sff(first),
    };
    let n = grid.dim();
    for w in path.windows(2) {
        let (a, b) = (grid.multi_index(w[0]), grid.multi_index(w[1]));
        let delta: Vec<isize> = (0..n).map(|k| b[k] as isize - a[k] as isize).collect();
        out.l_g += geom.g.edge_length(w[0], &delta).expect("path edge");
        out.l_g0 += geom.g0.edge_length(w[0], &delta).expect("path edge");
        out.s_hat = out.s_hat.max(geom.sff_midpoint(w[0], &delta)).max(geom.sff(w[1]));
    }
    out
}

/// Growth table, comparison chain and fit around `anchor`.
pub fn growth_report(
    chart: &ImmersionChart,
    anchor: &[f64],
    radii: &[f64],
    options: &GrowthOptions,
) -> Result<GrowthReport> {
    if radii.is_empty() || radii[0] <= 0.0 || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Argument("radii must be positive and strictly increasing".into()));
    }
    let n = chart.dim();
    let mut report = GrowthReport {
        chart: chart.name().to_string(),
        anchor: anchor.to_vec(),
        n,
        c: chart.intrinsic_curvature(),
        big_c: chart.big_c(),
        counts: options.counts.clone(),
        rows: vec![],
        fit: None,
        fit_error: None,
        notice: None,
        warnings: vec![],
    };
    if let Some(notice) = hypothesis_notice(chart, anchor, options)? {
        report.notice = Some(notice);
        return Ok(report);
    }
    let big_c = chart.big_c();
    let geom = sample_geometry(chart, &options.counts)?;
    let method = if n == 2 { DistanceMethod::Refined } else { DistanceMethod::Graph };
    let dg = distance_field(&geom.g, anchor, method)?;
    let dg0 = distance_field(&geom.g0, anchor, method)?;
    let sff = geom.sff_values();
    let eps = options.distance_error;

    // geodesics from the anchor to an evenly strided subsample of each radius band
    let near = 2.0 * dg.seeds.iter().map(|&i| dg.values[i]).fold(0.0, f64::max);
    let per_band = (options.pairs / radii.len()).max(1);
    let mut targets = Vec::new();
    let mut inner: f64 = 0.0;
    for &r in radii {
        let band: Vec<usize> =
            (0..dg.values.len()).filter(|&i| dg.values[i] > inner.max(near) && dg.values[i] <= r).collect();
        let stride = (band.len() / per_band).max(1);
        targets.extend(band.into_iter().step_by(stride));
        inner = r;
    }
    let pairs: Vec<PairSample> = targets
        .par_iter()
        .map(|&i| {
            let lengths = path_lengths(&geom, &dg, i);
            let scale = (lengths.s_hat + big_c).sqrt();
            PairSample {
                d_g: dg.values[i],
                le: lengths.margin(big_c),
                di: 1.0 - dg0.values[i] / (scale * dg.values[i]),
            }
        })
        .collect();

    let rows: Vec<Result<GrowthRow>> = radii
        .par_iter()
        .map(|&r| {
            let s = ball_max_sff(&dg, &sff, r)?;
            let psi = r * (s + big_c).sqrt();
            let ball = ball_volume(&geom.g, &dg, r)?;
            let bound = volume_bound(n, r, s, big_c);
            let inside: Vec<&PairSample> = pairs.iter().filter(|p| p.d_g <= r).collect();
            let worst = |f: fn(&PairSample) -> f64| inside.iter().map(|p| f(p)).fold(f64::INFINITY, f64::min);
            let le = ChainLink::judge(worst(|p| p.le), eps, inside.len());
            let di = ChainLink::judge(worst(|p| p.di), 2.0 * eps, inside.len());
            let far =
                dg.values.iter().zip(&dg0.values).filter(|(d, _)| **d <= r).map(|(_, d0)| *d0).fold(0.0, f64::max);
            let balls = ChainLink::judge((psi - far) / psi, 2.0 * eps, 1);
            let volume = ChainLink::judge((bound - ball.volume) / bound, options.volume_error, 1);
            Ok(GrowthRow {
                r,
                s,
                psi,
                vol: ball.volume,
                bound,
                ref_vol: reference_volume(n, chart.intrinsic_curvature(), r),
                truncated: ball.truncated,
                links: [le, di, balls, volume],
            })
        })
        .collect();
    report.rows = rows.into_iter().collect::<Result<_>>()?;
    for row in &report.rows {
        if row.truncated {
            report
                .warnings
                .push(format!("ball of radius {} reaches the chart boundary; volume is a lower bound", row.r));
        }
        if row.r > dg.max_reached() {
            report.warnings.push(format!("radius {} exceeds the largest grid distance {:.4}", row.r, dg.max_reached()));
        }
    }
    let fit_rows: Vec<(f64, f64)> = report.rows.iter().map(|row| (row.r, row.s.sqrt())).collect();
    match fit_exponential(&fit_rows, options.window) {
        Ok(f) => report.fit = Some(f),
        Err(e) => report.fit_error = Some(e.to_string()),
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn euclidean(counts: usize, lo: f64, hi: f64) -> SampledMetric {
        let grid = GridSpec::uniform(&[(lo, hi), (lo, hi)], counts).unwrap();
        SampledMetric::new(grid, 2, |_| Ok(DMatrix::identity(2, 2))).unwrap()
    }

    #[test]
    fn stencil_has_sixteen_planar_offsets() {
        let s = stencil(2);
        assert_eq!(s.len(), 16);
        assert!(s.contains(&vec![2, 1]) && s.contains(&vec![-1, -1]) && !s.contains(&vec![2, 2]));
        assert_eq!(stencil(1).len(), 2);
    }

    #[test]
    fn gamma_and_unit_ball_volumes() {
        assert!((gamma_half(1) - std::f64::consts::PI.sqrt()).abs() < 1e-15);
        assert!((gamma_half(5) - 0.75 * std::f64::consts::PI.sqrt()).abs() < 1e-15);
        assert!((omega(2) - std::f64::consts::PI).abs() < 1e-14);
        assert!((omega(3) - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-14);
        assert!((omega(4) - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn reference_volumes_match_closed_forms() {
        let r = 1.7;
        assert!((reference_volume(2, -1.0, r) - 2.0 * std::f64::consts::PI * (r.cosh() - 1.0)).abs() < 1e-10);
        assert!((reference_volume(2, 0.0, r) - std::f64::consts::PI * r * r).abs() < 1e-10);
        assert!((reference_volume(2, 1.0, r) - 2.0 * std::f64::consts::PI * (1.0 - r.cos())).abs() < 1e-10);
    }

    #[test]
    fn flat_distances_are_exact_along_stencil_rays() {
        let m = euclidean(41, -1.0, 1.0);
        let df = distance_field(&m, &[0.0, 0.0], DistanceMethod::Graph).unwrap();
        let i = m.grid.flat_index(&[40, 30]);
        assert!((df.values[i] - (1.0f64 + 0.25).sqrt()).abs() < 1e-12);
        let refined = distance_field(&m, &[0.0, 0.0], DistanceMethod::Refined).unwrap();
        for i in 0..m.grid.len() {
            let u = m.grid.node(i);
            let exact = (u[0] * u[0] + u[1] * u[1]).sqrt();
            // overestimates only, by the chord interpolation error
            assert!(refined.values[i] >= exact - 1e-12 && refined.values[i] <= df.values[i] + 1e-12);
            assert!(refined.values[i] - exact <= 1e-2 * exact, "{u:?}");
        }
    }

    #[test]
    fn off_grid_anchor_is_seeded_by_its_cell() {
        let m = euclidean(21, 0.0, 1.0);
        let df = distance_field(&m, &[0.52, 0.31], DistanceMethod::Refined).unwrap();
        assert_eq!(df.seeds.len(), 100);
        let d = df.interpolate(&[0.9, 0.8]).unwrap();
        assert!((d - (0.38f64.powi(2) + 0.49f64.powi(2)).sqrt()).abs() < 3e-3, "{d}");
    }

    #[test]
    fn flat_disk_area() {
        let m = euclidean(161, -1.0, 1.0);
        let df = distance_field(&m, &[0.0, 0.0], DistanceMethod::Refined).unwrap();
        let v = ball_volume(&m, &df, 0.7).unwrap();
        assert!(!v.truncated);
        assert!((v.volume / (std::f64::consts::PI * 0.49) - 1.0).abs() < 1e-2, "{}", v.volume);
        assert!(ball_volume(&m, &df, 1.2).unwrap().truncated);
    }

    #[test]
    fn exact_exponential_and_constant_fit() {
        let rows: Vec<(f64, f64)> = (0..10).map(|k| (k as f64 * 0.3, 3.0 * (2.0 * k as f64 * 0.3).exp())).collect();
        let f = fit_exponential(&rows, Some((0.0, 3.0))).unwrap();
        assert!((f.k - 3.0).abs() < 1e-12 && (f.ell - 2.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let flat: Vec<(f64, f64)> = (0..6).map(|k| (k as f64, 5.0)).collect();
        let f = fit_exponential(&flat, None).unwrap();
        assert!(f.ell.abs() < 1e-14 && f.r_squared == 1.0);
    }

    #[test]
    fn fit_rejects_bad_rows() {
        let rows = vec![(0.0, 1.0), (1.0, 0.0), (2.0, 1.0), (3.0, 2.0)];
        assert!(matches!(fit_exponential(&rows, Some((0.0, 3.0))), Err(Error::Argument(_))));
        let rows = vec![(0.0, 1.0), (2.0, 1.0), (1.0, 1.0), (3.0, 2.0)];
        assert!(fit_exponential(&rows, None).is_err());
        assert!(fit_exponential(&rows[..3], None).is_err());
    }

    #[test]
    fn negative_radius_is_rejected() {
        let m = euclidean(9, 0.0, 1.0);
        let df = distance_field(&m, &[0.5, 0.5], DistanceMethod::Graph).unwrap();
        assert!(ball_max_sff(&df, &vec![0.0; 81], -0.1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn graph_distances_satisfy_the_triangle_inequality(
            a in 0usize..33, b in 0usize..33, c in 0usize..33, d in 0usize..33, amp in 0.0f64..0.8,
        ) {
            let grid = GridSpec::uniform(&[(0.0, 1.0), (0.0, 1.0)], 33).unwrap();
            let metric = SampledMetric::new(grid.clone(), 2, |u| {
                let f = 1.0 + amp * (3.0 * u[0]).sin() * (2.0 * u[1]).cos();
                Ok(DMatrix::from_row_slice(2, 2, &[f, 0.1, 0.1, 1.0 / f]))
            }).unwrap();
            let x = grid.node(grid.flat_index(&[a, b]));
            let y = grid.flat_index(&[c, d]);
            let from_x = distance_field(&metric, &x, DistanceMethod::Graph).unwrap();
            let from_y = distance_field(&metric, &grid.node(y), DistanceMethod::Graph).unwrap();
            for z in (0..grid.len()).step_by(37) {
                prop_assert!(from_x.values[z] <= from_x.values[y] + from_y.values[z] + 1e-12);
            }
            prop_assert!(from_x.values[grid.flat_index(&[a, b])] == 0.0);
        }

        #[test]
        fn balls_are_nested(r1 in 0.0f64..1.0, r2 in 0.0f64..1.0) {
            let m = euclidean(33, -1.0, 1.0);
            let df = distance_field(&m, &[0.1, -0.2], DistanceMethod::Refined).unwrap();
            let sff: Vec<f64> = (0..m.grid.len()).map(|i| m.grid.node(i)[0].exp()).collect();
            let (lo, hi) = (r1.min(r2), r1.max(r2));
            prop_assert!(ball_max_sff(&df, &sff, lo).unwrap() <= ball_max_sff(&df, &sff, hi).unwrap());
            prop_assert!(ball_volume(&m, &df, lo).unwrap().volume <= ball_volume(&m, &df, hi).unwrap().volume);
        }
    }
}
