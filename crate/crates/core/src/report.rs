//! Drivers behind the command line: resolve a [`RunConfig`], run one
//! analysis, write CSV tables and a plain-text summary.
//!
//! Exit codes: 0 success or guarded skip, 1 identity failure, 2 usage or
//! parse error, 3 numerical failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::catalog;
use crate::config::{ChartSelector, RunConfig};
use crate::coords::{
    build_flow_map, check_homomorphism, check_injectivity, commutator_residual, round_trip_error,
    verify_principal_frame_property, FlowOptions,
};
use crate::error::{Error, Result};
use crate::geometry::{Engine, ImmersionChart};
use crate::growth::{growth_report, GrowthOptions, GrowthReport, LINK_NAMES};
use crate::verify::{verify_all, ResidualReport, Status, Sweep, SweepOptions, Tolerances};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Exit code for an error that stopped a run.
pub fn error_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } | Error::Argument(_) | Error::Unsupported(_) | Error::Io(_) => EXIT_USAGE,
        _ => EXIT_NUMERICAL,
    }
}

/// Result of one run: exit code, summary text and the files written.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub summary: String,
    pub files: Vec<PathBuf>,
}

/// Chart named by the config, switched to the requested engine.
///
/// Sampled charts keep their grid engine whatever the request.
pub fn resolve_chart(cfg: &RunConfig) -> Result<ImmersionChart> {
    let chart = match &cfg.chart {
        ChartSelector::Catalog { name, params } => catalog::lookup(name, params)?.chart,
        ChartSelector::File(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            catalog::expr::parse_chart(&text)?.into_chart()?
        }
    };
    if chart.engine() == Engine::Grid {
        return Ok(chart);
    }
    chart.with_engine(cfg.engine)
}

/// Default anchor: `(asinh 1, π)` on the pseudosphere, else the domain centre.
pub fn default_anchor(chart: &ImmersionChart) -> Vec<f64> {
    if chart.name() == "pseudosphere" {
        return vec![1f64.asinh(), std::f64::consts::PI];
    }
    chart.domain().iter().map(|d| 0.5 * (d.0 + d.1)).collect()
}

fn anchor(cfg: &RunConfig, chart: &ImmersionChart) -> Result<Vec<f64>> {
    let x0 = cfg.anchor.clone().unwrap_or_else(|| default_anchor(chart));
    if x0.len() != chart.dim() {
        return Err(Error::Argument(format!(
            "anchor has {} coordinates for a {}-dimensional chart",
            x0.len(),
            chart.dim()
        )));
    }
    Ok(x0)
}

fn tolerances(cfg: &RunConfig, engine: Engine) -> Tolerances {
    let mut t = Tolerances::for_engine(engine);
    let o = &cfg.tolerances;
    t.gauss = o.gauss.unwrap_or(t.gauss);
    t.codazzi = o.codazzi.unwrap_or(t.codazzi);
    t.connection = o.connection.unwrap_or(t.connection);
    t.g0_flat = o.g0_flat.unwrap_or(t.g0_flat);
    t.flat_normal = o.flat_normal.unwrap_or(t.flat_normal);
    t
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write a CSV with LF line endings and 17 significant digits.
pub fn write_csv(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|x| num(*x)))?;
    }
    w.flush()?;
    Ok(())
}

fn prepare(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

fn write_summary(dir: &Path, name: &str, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    files.push(path);
    Ok(())
}

fn header(kind: &str, chart: &ImmersionChart, cfg: &RunConfig, counts: &[usize]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {kind} {}", chart.name());
    let _ = writeln!(s, "# engine {}", chart.engine());
    let _ = writeln!(s, "# seed {}", cfg.seed);
    let _ = writeln!(s, "# grid {}", counts.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("x"));
    s
}

/// Exit code from line verdicts; `strict` also fails INDETERMINATE lines and warnings.
fn verdict_code(statuses: &[Status], warnings: usize, strict: bool) -> i32 {
    if statuses.contains(&Status::Fail) {
        return EXIT_FAILURE;
    }
    if strict && (statuses.contains(&Status::Indeterminate) || warnings > 0) {
        return EXIT_FAILURE;
    }
    EXIT_OK
}

fn usage_outcome(e: &Error) -> Outcome {
    Outcome { code: error_code(e), summary: format!("ERROR {e}\n"), files: vec![] }
}

const IDENTITY_NAMES: [&str; 5] = ["gauss", "codazzi_c1", "codazzi_c2", "connection", "g0_flat"];

/// Identity sweep: one CSV per identity plus `verify_summary.txt`.
pub fn run_verify(cfg: &RunConfig, strict: bool) -> Outcome {
    let chart = match resolve_chart(cfg) {
        Ok(c) => c,
        Err(e) => return usage_outcome(&e),
    };
    let default = if chart.dim() == 2 { 257 } else { 33 };
    let counts = match cfg.counts(chart.dim(), default) {
        Ok(c) => c,
        Err(e) => return usage_outcome(&e),
    };
    let tol = tolerances(cfg, chart.engine());
    let options = SweepOptions { seed: cfg.seed, exploratory: cfg.exploratory, flat_tolerance: tol.flat_normal };
    let limits = [tol.gauss, tol.codazzi, tol.codazzi, tol.connection, tol.g0_flat];
    let (reports, numerical_error) = match Sweep::new(&chart, &counts, options) {
        Ok(sweep) => match sweep.blocking_guard() {
            Some(g) => (
                IDENTITY_NAMES.iter().zip(limits).map(|(n, t)| ResidualReport::skipped(n, t, g.to_string())).collect(),
                None,
            ),
            None => (verify_all(&sweep, &tol), None),
        },
        Err(e) if error_code(&e) == EXIT_USAGE => return usage_outcome(&e),
        Err(e) => (IDENTITY_NAMES.iter().zip(limits).map(|(n, t)| ResidualReport::failed(n, t, &e)).collect(), Some(e)),
    };

    let mut summary = header("verify", &chart, cfg, &counts);
    let _ = writeln!(
        summary,
        "# tolerances gauss={:e} codazzi={:e} connection={:e} g0_flat={:e} flat_normal={:e}",
        tol.gauss, tol.codazzi, tol.connection, tol.g0_flat, tol.flat_normal
    );
    for r in &reports {
        let _ = writeln!(summary, "{}", r.summary_line());
    }
    let mut files = vec![];
    let written = (|| -> Result<()> {
        prepare(&cfg.output)?;
        let n = chart.dim();
        let mut head: Vec<String> = (1..=n).map(|k| format!("u{k}")).collect();
        head.push("residual".into());
        for r in &reports {
            let path = cfg.output.join(format!("{}.csv", r.name));
            write_csv(&path, &head, r.rows.iter().map(|(u, v)| u.iter().copied().chain([*v]).collect()))?;
            files.push(path);
        }
        write_summary(&cfg.output, "verify_summary.txt", &summary, &mut files)
    })();
    let code = match (written, numerical_error) {
        (Err(e), _) => return usage_outcome(&e),
        (Ok(()), Some(_)) => EXIT_NUMERICAL,
        (Ok(()), None) => verdict_code(&reports.iter().map(|r| r.status).collect::<Vec<_>>(), 0, strict),
    };
    Outcome { code, summary, files }
}

/// Summary block of a growth report: fit, link verdicts and warnings.
pub fn growth_summary(report: &GrowthReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# anchor {:?}", report.anchor);
    let _ = writeln!(s, "# c {} C {}", report.c, report.big_c);
    if let Some(n) = &report.notice {
        for name in LINK_NAMES {
            let _ = writeln!(s, "SKIPPED {name} ({n})");
        }
        return s;
    }
    for (k, name) in LINK_NAMES.iter().enumerate() {
        let worst =
            report.rows.iter().map(|r| &r.links[k]).min_by(|a, b| a.margin.total_cmp(&b.margin)).expect("rows present");
        let samples: usize = report.rows.iter().map(|r| r.links[k].samples).sum();
        let _ = writeln!(
            s,
            "{} {name} min_margin={:.6e} required={:.1e} samples={samples}",
            report.link_status(k),
            worst.margin,
            worst.required
        );
    }
    match (&report.fit, &report.fit_error) {
        (Some(f), _) => {
            let _ = writeln!(
                s,
                "fit k={:.6e} ell={:.6e} r_squared={:.6} window={:.3},{:.3} rows={}",
                f.k, f.ell, f.r_squared, f.window.0, f.window.1, f.rows
            );
        }
        (None, Some(e)) => {
            let _ = writeln!(s, "fit unavailable ({e})");
        }
        (None, None) => {}
    }
    for w in &report.warnings {
        let _ = writeln!(s, "WARN {w}");
    }
    s
}

/// Growth table `growth.csv` plus `growth_summary.txt`.
pub fn run_growth(cfg: &RunConfig, strict: bool) -> Outcome {
    let prepared = (|| -> Result<(ImmersionChart, Vec<f64>, GrowthOptions)> {
        let chart = resolve_chart(cfg)?;
        let x0 = anchor(cfg, &chart)?;
        let mut opts = GrowthOptions::for_dim(chart.dim());
        opts.counts = cfg.counts(chart.dim(), opts.counts[0])?;
        opts.window = cfg.window;
        opts.exploratory = cfg.exploratory;
        opts.seed = cfg.seed;
        if let Some(t) = cfg.tolerances.flat_normal {
            opts.flat_tolerance = t;
        }
        Ok((chart, x0, opts))
    })();
    let (chart, x0, opts) = match prepared {
        Ok(p) => p,
        Err(e) => return usage_outcome(&e),
    };
    let mut summary = header("growth", &chart, cfg, &opts.counts);
    let _ = writeln!(
        summary,
        "# tolerances distance_error={:e} volume_error={:e} flat_normal={:e}",
        opts.distance_error, opts.volume_error, opts.flat_tolerance
    );
    let report = match growth_report(&chart, &x0, &cfg.radii, &opts) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(summary, "FAIL growth ({e})");
            let mut files = vec![];
            let code = match prepare(&cfg.output)
                .and_then(|_| write_summary(&cfg.output, "growth_summary.txt", &summary, &mut files))
            {
                Ok(()) => error_code(&e).max(EXIT_FAILURE),
                Err(io) => error_code(&io),
            };
            return Outcome { code, summary, files };
        }
    };
    summary.push_str(&growth_summary(&report));
    let mut files = vec![];
    let written = (|| -> Result<()> {
        prepare(&cfg.output)?;
        let path = cfg.output.join("growth.csv");
        let head: Vec<String> = ["r", "S", "psi", "vol", "bound", "ref_vol"].iter().map(|s| s.to_string()).collect();
        write_csv(&path, &head, report.rows.iter().map(|r| vec![r.r, r.s, r.psi, r.vol, r.bound, r.ref_vol]))?;
        files.push(path);
        write_summary(&cfg.output, "growth_summary.txt", &summary, &mut files)
    })();
    if let Err(e) = written {
        return usage_outcome(&e);
    }
    let statuses: Vec<Status> =
        if report.notice.is_some() { vec![] } else { (0..LINK_NAMES.len()).map(|k| report.link_status(k)).collect() };
    Outcome { code: verdict_code(&statuses, report.warnings.len(), strict), summary, files }
}

/// One-value report at `x0`.
fn point_report(name: &str, x0: &[f64], value: f64, tol: f64) -> ResidualReport {
    ResidualReport::from_rows(name, vec![(x0.to_vec(), value)], tol)
}

/// Flow map `coords.csv` plus `coords_summary.txt`.
pub fn run_coords(cfg: &RunConfig, strict: bool) -> Outcome {
    let prepared = (|| -> Result<(ImmersionChart, Vec<f64>, Vec<(f64, f64)>)> {
        let chart = resolve_chart(cfg)?;
        let x0 = anchor(cfg, &chart)?;
        let t_box = cfg.coords.t_box.clone().unwrap_or_else(|| vec![(-0.4, 0.4); chart.dim()]);
        if t_box.len() != chart.dim() {
            return Err(Error::Argument(format!(
                "flow box has {} axes for a {}-dimensional chart",
                t_box.len(),
                chart.dim()
            )));
        }
        Ok((chart, x0, t_box))
    })();
    let (chart, x0, t_box) = match prepared {
        Ok(p) => p,
        Err(e) => return usage_outcome(&e),
    };
    let o = &cfg.tolerances;
    let (tc, th, tp, tr) = (
        o.commutator.unwrap_or(1e-4),
        o.homomorphism.unwrap_or(1e-6),
        o.pullback.unwrap_or(1e-3),
        o.round_trip.unwrap_or(1e-8),
    );
    let counts = vec![cfg.coords.nodes; chart.dim()];
    let opts = FlowOptions { step: cfg.coords.step, seed: cfg.seed };
    let mut summary = header("coords", &chart, cfg, &counts);
    let _ = writeln!(summary, "# x0 {x0:?}");
    let _ = writeln!(summary, "# box {t_box:?} step {:e}", opts.step);
    let _ = writeln!(summary, "# tolerances commutator={tc:e} homomorphism={th:e} pullback={tp:e} round_trip={tr:e}");

    let names = ["commutator", "round_trip", "homomorphism", "frame_orthonormal", "frame_principal", "pullback_g0"];
    let limits = [tc, tr, th, tp, tp, tp];
    let run = || -> Result<(Vec<ResidualReport>, crate::coords::FlowMap, String)> {
        let h = vec![1e-3; chart.dim()];
        let mut reports = vec![point_report("commutator", &x0, commutator_residual(&chart, &x0, &h, opts.seed)?, tc)];
        let reach = t_box.iter().map(|b| b.0.abs().max(b.1.abs())).fold(0.0, f64::max);
        let mut trips = vec![];
        for i in 0..chart.dim() {
            trips.push((vec![i as f64], round_trip_error(&chart, &x0, i, reach, &opts)?));
        }
        reports.push(ResidualReport::from_rows("round_trip", trips, tr));
        let map = build_flow_map(&chart, &x0, &t_box, &counts, &opts)?;
        reports.push(check_homomorphism(&chart, &map, cfg.coords.pairs, th));
        let fp = verify_principal_frame_property(&chart, &map, tp);
        reports.extend([fp.orthonormal, fp.principal, fp.pullback]);
        let inj = check_injectivity(&chart, &map)?;
        let line = format!(
            "{} injectivity {:.6e} {:.1e} {}",
            if inj.passed() { Status::Pass } else { Status::Fail },
            inj.min_distance,
            inj.threshold,
            map.grid.len()
        );
        Ok((reports, map, line))
    };
    let mut files = vec![];
    match run() {
        Ok((reports, map, inj_line)) => {
            for r in &reports {
                let _ = writeln!(summary, "{}", r.summary_line());
            }
            let _ = writeln!(summary, "{inj_line}");
            for w in &map.warnings {
                let _ = writeln!(summary, "WARN {w}");
            }
            let written = (|| -> Result<()> {
                prepare(&cfg.output)?;
                let n = chart.dim();
                let head: Vec<String> =
                    (1..=n).map(|k| format!("t{k}")).chain((1..=n).map(|k| format!("u{k}"))).collect();
                let path = cfg.output.join("coords.csv");
                write_csv(&path, &head, map.rows().into_iter().map(|(t, u)| t.into_iter().chain(u).collect()))?;
                files.push(path);
                write_summary(&cfg.output, "coords_summary.txt", &summary, &mut files)
            })();
            if let Err(e) = written {
                return usage_outcome(&e);
            }
            let mut statuses: Vec<Status> = reports.iter().map(|r| r.status).collect();
            statuses.push(if inj_line.starts_with("PASS") { Status::Pass } else { Status::Fail });
            Outcome { code: verdict_code(&statuses, map.warnings.len(), strict), summary, files }
        }
        Err(Error::Hypothesis(notice)) => {
            for (n, t) in names.iter().zip(limits) {
                let _ = writeln!(summary, "{}", ResidualReport::skipped(n, t, notice.clone()).summary_line());
            }
            let code = match prepare(&cfg.output)
                .and_then(|_| write_summary(&cfg.output, "coords_summary.txt", &summary, &mut files))
            {
                Ok(()) => EXIT_OK,
                Err(e) => error_code(&e),
            };
            Outcome { code, summary, files }
        }
        Err(e) if error_code(&e) == EXIT_USAGE => usage_outcome(&e),
        Err(e) => {
            for (n, t) in names.iter().zip(limits) {
                let _ = writeln!(summary, "{}", ResidualReport::failed(n, t, &e).summary_line());
            }
            let code = match prepare(&cfg.output)
                .and_then(|_| write_summary(&cfg.output, "coords_summary.txt", &summary, &mut files))
            {
                Ok(()) => EXIT_NUMERICAL,
                Err(e) => error_code(&e),
            };
            Outcome { code, summary, files }
        }
    }
}

/// Text of `catalog list`.
pub fn catalog_listing() -> String {
    let mut s = String::new();
    for l in catalog::list() {
        let _ = writeln!(s, "{:<22} {:<14} {}", l.name, l.params, l.summary);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        assert_eq!(error_code(&Error::Parse { line: 1, message: String::new() }), EXIT_USAGE);
        assert_eq!(error_code(&Error::Numerical("x".into())), EXIT_NUMERICAL);
        assert_eq!(verdict_code(&[Status::Pass, Status::Skipped], 0, true), EXIT_OK);
        assert_eq!(verdict_code(&[Status::Pass, Status::Indeterminate], 0, false), EXIT_OK);
        assert_eq!(verdict_code(&[Status::Pass, Status::Indeterminate], 0, true), EXIT_FAILURE);
        assert_eq!(verdict_code(&[Status::Pass], 1, true), EXIT_FAILURE);
        assert_eq!(verdict_code(&[Status::Fail], 0, false), EXIT_FAILURE);
    }

    #[test]
    fn csv_is_lf_terminated_with_17_digits() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_csv(&p, &["a".into(), "b".into()], vec![vec![0.1, -2.0]]).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "a,b\n1.0000000000000001e-1,-2.0000000000000000e0\n");
    }

    #[test]
    fn unknown_chart_is_a_usage_error() {
        let mut cfg = RunConfig::for_chart("no_such_chart");
        cfg.output = tempfile::tempdir().unwrap().path().to_path_buf();
        assert_eq!(run_verify(&cfg, false).code, EXIT_USAGE);
    }
}
