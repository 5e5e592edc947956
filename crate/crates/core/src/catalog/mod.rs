//! Closed-form example immersions with known ground truth, and negative controls.
//!
//! | entry | map | ambient | `c` | `C = c̃ − c` |
//! |---|---|---|---|---|
//! | `pseudosphere` | `(sech u cos v, sech u sin v, u − tanh u)`, `u∈[0.3,3]`, `v∈[0,2π]` | `R³` | −1 | 1 |
//! | `dini(a,b)` | `(a cos u sin v, a sin u sin v, a(cos v + ln tan(v/2)) + b u)`, `u∈[0,2π]`, `v∈[0.4,1.2]` | `R³` | `−1/(a²+b²)` | `1/(a²+b²)` |
//! | `product_torus_r4(r1,r2)` | `(r1 cos u, r1 sin u, r2 cos v, r2 sin v)` | `R⁴` | 0 | 0 |
//! | `clifford_torus_s3(t)` | `(cos t cos u, cos t sin u, sin t cos v, sin t sin v)` | `S³` | 0 | 1 |
//! | `sphere(c)` | round sphere of radius `1/√c` | `R³` | `c` | `−c` |
//! | `flat_plane` | `(u1, u2, 0)` | `R³` | 0 | 0 |
//! | `equatorial_s2` | `(sin θ cos φ, sin θ sin φ, cos θ, 0)` | `S³` | 1 | 0 |
//! | `hyperbolic_plane` | Poincaré-disk coordinates on `{x₃ = 0}` of the hyperboloid | `H³` | −1 | 0 |
//! | `veronese` | Veronese surface of the unit sphere | `R⁵` | 1 | −1 |
//! | `ps3` | pseudosphere × line | `R⁴` | not constant | n/a |
//!
//! Ground-truth values used by the tests come from `oracles/ground_truth.py`.

pub mod expr;
pub mod sine_gordon;

use std::f64::consts::PI;

use crate::autodiff::Real;
use crate::error::{Error, Result};
use crate::geometry::{AmbientModel, ClosedForm, ImmersionChart};

pub use sine_gordon::{sine_gordon_surface, SineGordonField, SineGordonSurface};

/// Properties an entry claims; each is re-derived by the test-suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expectations {
    pub flat_normal_bundle: bool,
    pub big_c_positive: bool,
    /// `s(x) = n` with every multiplicity one.
    pub distinct_principal_normals: bool,
    pub constant_curvature: bool,
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub chart: ImmersionChart,
    pub params: Vec<(String, f64)>,
    pub expected: Expectations,
    pub notes: &'static str,
}

impl CatalogEntry {
    pub fn n(&self) -> usize {
        self.chart.dim()
    }

    pub fn p(&self) -> usize {
        self.chart.codim()
    }

    pub fn c(&self) -> f64 {
        self.chart.intrinsic_curvature()
    }

    pub fn c_tilde(&self) -> f64 {
        self.chart.ambient().curvature()
    }

    /// Parameter point in the middle of the chart domain.
    pub fn centre(&self) -> Vec<f64> {
        self.chart.domain().iter().map(|d| 0.5 * (d.0 + d.1)).collect()
    }
}

const HYPOTHESIS: Expectations = Expectations {
    flat_normal_bundle: true,
    big_c_positive: true,
    distinct_principal_normals: true,
    constant_curvature: true,
};

struct Pseudosphere;

impl ClosedForm for Pseudosphere {
    fn map<S: Real>(&self, u: &[S]) -> Vec<S> {
        let s = u[0].sech();
        vec![s * u[1].cos(), s * u[1].sin(), u[0] - u[0].tanh()]
    }
}

pub fn pseudosphere() -> CatalogEntry {
    let chart = ImmersionChart::closed_form(
        "pseudosphere",
        Pseudosphere,
        AmbientModel::euclidean(3),
        -1.0,
        vec![(0.3, 3.0), (0.0, 2.0 * PI)],
    )
    .expect("valid chart");
    CatalogEntry {
        name: "pseudosphere".into(),
        chart,
        params: vec![],
        expected: HYPOTHESIS,
        notes: "tractroid; principal curvatures -1/sinh u (meridian) and sinh u (parallel)",
    }
}

struct Dini {
    a: f64,
    b: f64,
}

impl ClosedForm for Dini {
    fn map<S: Real>(&self, u: &[S]) -> Vec<S> {
        let (t, s) = (u[0], u[1]);
        let r = s.sin() * self.a;
        vec![t.cos() * r, t.sin() * r, (s.cos() + (s * 0.5).tan().ln()) * self.a + t * self.b]
    }
}

/// Dini's helicoid with curvature `−1/(a² + b²)`.
pub fn dini(a: f64, b: f64) -> Result<CatalogEntry> {
    if !(a > 0.0) || b < 0.0 {
        return Err(Error::Argument(format!("dini requires a > 0 and b >= 0, got ({a}, {b})")));
    }
    let c = -1.0 / (a * a + b * b);
    let chart = ImmersionChart::closed_form(
        format!("dini({a},{b})"),
        Dini { a, b },
        AmbientModel::euclidean(3),
        c,
        vec![(0.0, 2.0 * PI), (0.4, 1.2)],
    )?;
    Ok(CatalogEntry {
        name: "dini".into(),
        chart,
        params: vec![("a".into(), a), ("b".into(), b)],
        expected: HYPOTHESIS,
        notes: "helicoidal pseudospherical surface; b = 0 is the tractroid scaled by a",
    })
}

struct ProductTorus {
    r1: f64,
    r2: f64,
}

impl ClosedForm for ProductTorus {
    fn map<S: Real>(&self, u: &[S]) -> Vec<S> {
        vec![u[0].cos() * self.r1, u[0].sin() * self.r1, u[1].cos() * self.r2, u[1].sin() * self.r2]
    }
}

/// Flat torus `S¹(r1) × S¹(r2) ⊂ R⁴`; `C = 0`, usable only in exploratory mode.
pub fn product_torus_r4(r1: f64, r2: f64) -> Result<CatalogEntry> {
    if !(r1 > 0.0 && r2 > 0.0) {
        return Err(Error::Argument("product torus radii must be positive".into()));
    }
    let chart = ImmersionChart::closed_form(
        format!("product_torus_r4({r1},{r2})"),
        ProductTorus { r1, r2 },
        AmbientModel::euclidean(4),
        0.0,
        vec![(0.0, 2.0 * PI), (0.0, 2.0 * PI)],
    )?;
    Ok(CatalogEntry {
        name: "product_torus_r4".into(),
        chart,
        params: vec![("r1".into(), r1), ("r2".into(), r2)],
        expected: Expectations { big_c_positive: false, ..HYPOTHESIS },
        notes: "C = 0 edge case; eta_i are the factor curvature vectors of length 1/r_i",
    })
}

struct CliffordTorus {
    t: f64,
}

impl ClosedForm for CliffordTorus {
    fn map<S: Real>(&self, u: &[S]) -> Vec<S> {
        let (ct, st) = (self.t.cos(), self.t.sin());
        vec![u[0].cos() * ct, u[0].sin() * ct, u[1].cos() * st, u[1].sin() * st]
    }
}

/// Flat torus in the unit 3-sphere; principal curvatures `tan t` and `−cot t`.
pub fn clifford_torus_s3(t: f64) -> Result<CatalogEntry> {
    if !(t > 1e-3 && t < PI / 2.0 - 1e-3) {
        return Err(Error::Argument(format!("clifford torus needs t in (0, pi/2), got {t}")));
    }
    let chart = ImmersionChart::closed_form(
        format!("clifford_torus_s3({t})"),
        CliffordTorus { t },
        AmbientModel::sphere(3, 1.0)?,
        0.0,
        vec![(0.0, 2.0 * PI), (0.0, 2.0 * PI)],
    )?;
    Ok(CatalogEntry {
        name: "clifford_torus_s3".into(),
        chart,
        params: vec![("t".into(), t)],
        expected: HYPOTHESIS,
        notes: "c = 0 < c~ = 1; principal coordinates are (u, v) themselves",
    })
}

struct RoundSphere {
    radius: f64,
}

impl ClosedForm for RoundSphere {
    fn map<S: Real>(&self, u: &[S]) -> Vec<S> {
        let st = u[0].sin() * self.radius;
        vec![st * u[1].cos(), st * u[1].sin(), u[0].cos() * self.radius]
    }
}

/// Round sphere of curvature `c > 0` in `R³`: umbilical, violates `c < c̃`.
pub fn sphere_negative_control(c: f64) -> Result<CatalogEntry> {
    if !(c > 0.0) {
        return Err(Error::Argument("sphere control needs c > 0".into()));
    }
    let chart = ImmersionChart::closed_form(
        format!("sphere({c})"),
        RoundSphere { radius: 1.0 / c.sqrt() },
        AmbientModel::euclidean(3),
        c,
        vec![(0.3, PI - 0.3), (0.0, 2.0 * PI)],
    )?;
    Ok(CatalogEntry {
        name: "sphere".into(),
        chart,
        params: vec![("c".into(), c)],
        expected: Expectations {
            flat_normal_bundle: true,
            big_c_positive: false,
            distinct_principal_normals: false,
            constant_curvature: true,
        },
        notes: "negative control: one principal normal of multiplicity 2",
    })
}

struct Plane;

impl ClosedForm for Plane {
    fn map<S: Real>(&self, u: &[S]) -> Vec<S> {
        vec![u[0], u[1], S::cst(0.0)]
    }
}

pub fn flat_plane() -> CatalogEntry {
    let chart = ImmersionChart::closed_form(
        "flat_plane",
        Plane,
        AmbientModel::euclidean(3),
        0.0,
        vec![(-1.0, 1.0), (-1.0, 1.0)],
    )
    .expect("valid chart");
    CatalogEntry {
        name: "flat_plane".into(),
        chart,
        params: vec![],
        expected: Expectations {
            flat_normal_bundle: true,
            big_c_positive: false,
            distinct_principal_normals: false,
            constant_curvature: true,
        },
        notes: "totally geodesic",
    }
}

struct Equator;

impl ClosedForm for Equator {
    fn map<S: Real>(&self, u: &[S]) -> Vec<S> {
        let st = u[0].sin();
        vec![st * u[1].cos(), st * u[1].sin(), u[0].cos(), S::cst(0.0)]
    }
}

pub fn equatorial_s2() -> CatalogEntry {
    let chart = ImmersionChart::closed_form(
        "equatorial_s2",
        Equator,
        AmbientModel::sphere(3, 1.0).expect("valid"),
        1.0,
        vec![(0.3, PI - 0.3), (0.0, 2.0 * PI)],
    )
    .expect("valid chart");
    CatalogEntry {
        name: "equatorial_s2".into(),
        chart,
        params: vec![],
        expected: Expectations {
            flat_normal_bundle: true,
            big_c_positive: false,
            distinct_principal_normals: false,
            constant_curvature: true,
        },
        notes: "totally geodesic great sphere",
    }
}

struct PoincareDisk;

impl ClosedForm for PoincareDisk {
    fn map<S: Real>(&self, u: &[S]) -> Vec<S> {
        let r2 = u[0] * u[0] + u[1] * u[1];
        let d = (-r2 + 1.0).recip();
        vec![u[0] * 2.0 * d, u[1] * 2.0 * d, S::cst(0.0), (r2 + 1.0) * d]
    }
}

/// Totally geodesic `H²` in `H³`, parametrised by Poincaré-disk coordinates.
///
/// The induced metric is `4|du|²/(1 − |u|²)²`, so distances from the origin
/// are `2 artanh |u|` and balls of radius `r` are disks of radius `tanh(r/2)`.
pub fn hyperbolic_plane() -> CatalogEntry {
    let chart = ImmersionChart::closed_form(
        "hyperbolic_plane",
        PoincareDisk,
        AmbientModel::hyperbolic(3, -1.0).expect("valid"),
        -1.0,
        vec![(-0.95, 0.95), (-0.95, 0.95)],
    )
    .expect("valid chart")
    .with_constraint_tolerance(1e-7);
    CatalogEntry {
        name: "hyperbolic_plane".into(),
        chart,
        params: vec![],
        expected: Expectations {
            flat_normal_bundle: true,
            big_c_positive: false,
            distinct_principal_normals: false,
            constant_curvature: true,
        },
        notes: "distance and volume oracle chart",
    }
}

struct Veronese;

impl ClosedForm for Veronese {
    fn map<S: Real>(&self, u: &[S]) -> Vec<S> {
        let x = u[0].sin() * u[1].cos();
        let y = u[0].sin() * u[1].sin();
        let z = u[0].cos();
        vec![y * z, x * z, x * y, (x * x - y * y) * 0.5, (x * x + y * y - z * z * 2.0) / (2.0 * 3f64.sqrt())]
    }
}

/// Veronese surface in `R⁵`: non-flat normal bundle control.
pub fn veronese() -> CatalogEntry {
    let chart = ImmersionChart::closed_form(
        "veronese",
        Veronese,
        AmbientModel::euclidean(5),
        1.0,
        vec![(0.5, 1.3), (0.2, 1.5)],
    )
    .expect("valid chart");
    CatalogEntry {
        name: "veronese".into(),
        chart,
        params: vec![],
        expected: Expectations {
            flat_normal_bundle: false,
            big_c_positive: false,
            distinct_principal_normals: false,
            constant_curvature: true,
        },
        notes: "induced metric is the round unit sphere; shape operators do not commute",
    }
}

struct PseudosphereTimesLine;

impl ClosedForm for PseudosphereTimesLine {
    fn map<S: Real>(&self, u: &[S]) -> Vec<S> {
        let s = u[0].sech();
        vec![s * u[1].cos(), s * u[1].sin(), u[0] - u[0].tanh(), u[2]]
    }
}

/// Pseudosphere × line in `R⁴` (n = 3): not of constant curvature.
pub fn ps3() -> CatalogEntry {
    let chart = ImmersionChart::closed_form(
        "ps3",
        PseudosphereTimesLine,
        AmbientModel::euclidean(4),
        -1.0,
        vec![(0.3, 3.0), (0.0, 2.0 * PI), (-1.0, 1.0)],
    )
    .expect("valid chart");
    CatalogEntry {
        name: "ps3".into(),
        chart,
        params: vec![],
        expected: Expectations {
            flat_normal_bundle: true,
            big_c_positive: true,
            distinct_principal_normals: true,
            constant_curvature: false,
        },
        notes: "hypothesis-violating n = 3 control: sectional curvatures -1 and 0",
    }
}

/// One line of `catalog list`.
#[derive(Debug, Clone, PartialEq)]
pub struct Listing {
    pub name: &'static str,
    pub params: &'static str,
    pub summary: &'static str,
}

pub fn list() -> Vec<Listing> {
    vec![
        Listing { name: "pseudosphere", params: "", summary: "K=-1 tractroid in R3 (C=1)" },
        Listing { name: "dini", params: "a=1 b=0.5", summary: "Dini helicoid in R3, K=-1/(a^2+b^2)" },
        Listing { name: "product_torus_r4", params: "r1=1 r2=2", summary: "flat torus in R4 (C=0, exploratory)" },
        Listing { name: "clifford_torus_s3", params: "t=0.785398", summary: "flat torus in S3 (C=1)" },
        Listing { name: "sphere", params: "c=1", summary: "negative control, umbilical" },
        Listing { name: "flat_plane", params: "", summary: "totally geodesic plane in R3" },
        Listing { name: "equatorial_s2", params: "", summary: "totally geodesic S2 in S3" },
        Listing { name: "hyperbolic_plane", params: "", summary: "totally geodesic H2 in H3 (oracle chart)" },
        Listing { name: "veronese", params: "", summary: "non-flat normal bundle control in R5" },
        Listing { name: "ps3", params: "", summary: "pseudosphere x line in R4 (n=3 control)" },
        Listing { name: "sine_gordon_soliton", params: "", summary: "K=-1 patch integrated from the 1-soliton" },
    ]
}

fn param(params: &[(String, f64)], key: &str, default: f64) -> f64 {
    params.iter().find(|(k, _)| k == key).map_or(default, |(_, v)| *v)
}

/// Build a catalog entry by name with `key = value` parameters.
pub fn lookup(name: &str, params: &[(String, f64)]) -> Result<CatalogEntry> {
    let allowed: &[&str] = match name {
        "dini" => &["a", "b"],
        "product_torus_r4" => &["r1", "r2"],
        "clifford_torus_s3" => &["t"],
        "sphere" => &["c"],
        "sine_gordon_soliton" => &["resolution"],
        _ => &[],
    };
    if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
        return Err(Error::Argument(format!("chart {name} has no parameter {k}")));
    }
    match name {
        "pseudosphere" => Ok(pseudosphere()),
        "dini" => dini(param(params, "a", 1.0), param(params, "b", 0.5)),
        "product_torus_r4" => product_torus_r4(param(params, "r1", 1.0), param(params, "r2", 2.0)),
        "clifford_torus_s3" => clifford_torus_s3(param(params, "t", PI / 4.0)),
        "sphere" => sphere_negative_control(param(params, "c", 1.0)),
        "flat_plane" => Ok(flat_plane()),
        "equatorial_s2" => Ok(equatorial_s2()),
        "hyperbolic_plane" => Ok(hyperbolic_plane()),
        "veronese" => Ok(veronese()),
        "ps3" => Ok(ps3()),
        "sine_gordon_soliton" => {
            let res = param(params, "resolution", 121.0);
            if res < 17.0 || res.fract() != 0.0 {
                return Err(Error::Argument("sine_gordon_soliton resolution must be an integer >= 17".into()));
            }
            sine_gordon::soliton_entry(res as usize)
        }
        other => Err(Error::Argument(format!("unknown catalog chart {other}"))),
    }
}
