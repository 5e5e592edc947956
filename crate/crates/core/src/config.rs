//! Run configuration: an INI-style text with `[section]` headers,
//! `key = value` lines and `#` comments.
//!
//! ```text
//! [chart]
//! name = dini              # catalog entry, or: file = my_surface.chart
//! params = a = 1, b = 0.5
//! exploratory = false
//!
//! [grid]
//! resolution = 257         # one value for every axis, or one per axis
//! engine = ad              # ad | fd
//! seed = 20240917
//!
//! [tolerances]
//! gauss = 1e-8
//!
//! [growth]
//! anchor = 0.881373587019543, 3.141592653589793
//! radii = 0.25, 0.5, 0.75, 1.0
//! window = 0.5, 1.0
//!
//! [coords]
//! box = -0.4 0.4, -0.4 0.4
//! nodes = 21
//! step = 0.01
//! pairs = 100
//!
//! [output]
//! dir = out
//! ```
//!
//! Unknown sections and keys are errors.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::Engine;
use crate::principal::DEFAULT_SEED;

/// Smallest accepted grid resolution per axis.
pub const MIN_RESOLUTION: usize = 17;

#[derive(Debug, Clone, PartialEq)]
pub enum ChartSelector {
    Catalog {
        name: String,
        params: Vec<(String, f64)>,
    },
    /// Expression file, resolved against the config file's directory.
    File(PathBuf),
}

/// Overrides of the default tolerances; `None` keeps the engine default.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ToleranceOverrides {
    pub gauss: Option<f64>,
    pub codazzi: Option<f64>,
    pub connection: Option<f64>,
    pub g0_flat: Option<f64>,
    pub flat_normal: Option<f64>,
    pub commutator: Option<f64>,
    pub homomorphism: Option<f64>,
    pub pullback: Option<f64>,
    pub round_trip: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoordsConfig {
    /// Flow-time box; `None` uses `±0.4` on every axis.
    pub t_box: Option<Vec<(f64, f64)>>,
    pub nodes: usize,
    pub step: f64,
    pub pairs: usize,
}

impl Default for CoordsConfig {
    fn default() -> Self {
        CoordsConfig { t_box: None, nodes: 21, step: 1e-2, pairs: 100 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub chart: ChartSelector,
    pub exploratory: bool,
    /// One entry applies to every axis; `None` picks a default by dimension.
    pub resolution: Option<Vec<usize>>,
    pub engine: Engine,
    pub seed: u64,
    pub tolerances: ToleranceOverrides,
    /// Anchor `x₀`; `None` picks the entry's default point.
    pub anchor: Option<Vec<f64>>,
    pub radii: Vec<f64>,
    pub window: Option<(f64, f64)>,
    pub coords: CoordsConfig,
    pub output: PathBuf,
}

impl RunConfig {
    pub fn for_chart(name: &str) -> Self {
        RunConfig {
            chart: ChartSelector::Catalog { name: name.into(), params: vec![] },
            exploratory: false,
            resolution: None,
            engine: Engine::Ad,
            seed: DEFAULT_SEED,
            tolerances: ToleranceOverrides::default(),
            anchor: None,
            radii: default_radii(),
            window: None,
            coords: CoordsConfig::default(),
            output: PathBuf::from("out"),
        }
    }

    /// Resolution per axis for a chart of dimension `n`.
    pub fn counts(&self, n: usize, default: usize) -> Result<Vec<usize>> {
        match &self.resolution {
            None => Ok(vec![default; n]),
            Some(r) if r.len() == 1 => Ok(vec![r[0]; n]),
            Some(r) if r.len() == n => Ok(r.clone()),
            Some(r) => Err(Error::Argument(format!("{} resolutions given for a {n}-dimensional chart", r.len()))),
        }
    }
}

/// `0.25, 0.5, …, 2.0`.
pub fn default_radii() -> Vec<f64> {
    (1..=8).map(|k| 0.25 * k as f64).collect()
}

/// Read and parse a config file; a chart file path is made relative to it.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut cfg = parse_config(&text)?;
    if let ChartSelector::File(p) = &mut cfg.chart {
        if p.is_relative() {
            if let Some(dir) = path.parent() {
                *p = dir.join(&*p);
            }
        }
    }
    Ok(cfg)
}

fn floats(value: &str, line: usize) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>().map_err(|_| Error::Parse { line, message: format!("'{s}' is not a number") })
        })
        .collect()
}

fn positive(value: &str, key: &str, line: usize) -> Result<f64> {
    let v = floats(value, line)?;
    match v.as_slice() {
        [x] if *x > 0.0 && x.is_finite() => Ok(*x),
        _ => Err(Error::Parse { line, message: format!("{key} must be a single positive number") }),
    }
}

fn count(value: &str, key: &str, line: usize) -> Result<usize> {
    value
        .trim()
        .parse::<usize>()
        .map_err(|_| Error::Parse { line, message: format!("{key} must be a non-negative integer") })
}

fn boolean(value: &str, line: usize) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(Error::Parse { line, message: format!("'{other}' is not a boolean") }),
    }
}

/// Parse `a b, c d` into intervals.
fn intervals(value: &str, line: usize) -> Result<Vec<(f64, f64)>> {
    value
        .split(',')
        .map(|part| {
            let v: Vec<f64> = part
                .split_whitespace()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse { line, message: format!("bad interval '{}'", part.trim()) })?;
            match v.as_slice() {
                [a, b] if a <= b => Ok((*a, *b)),
                _ => Err(Error::Parse { line, message: format!("bad interval '{}'", part.trim()) }),
            }
        })
        .collect()
}

/// Parse a configuration; every value not given takes its default.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::for_chart("");
    let mut chart_name: Option<(String, usize)> = None;
    let mut chart_file: Option<(PathBuf, usize)> = None;
    let mut params: Option<Vec<(String, f64)>> = None;
    let mut radii_line = 0;
    let mut section: Option<String> = None;

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let perr = |m: String| Error::Parse { line, message: m };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| perr("unterminated section header".into()))?.trim();
            if !["chart", "grid", "tolerances", "growth", "coords", "output"].contains(&name) {
                return Err(perr(format!("unknown section [{name}]")));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .map(|(a, b)| (a.trim(), b.trim()))
            .ok_or_else(|| perr("expected 'key = value'".into()))?;
        if value.is_empty() {
            return Err(perr(format!("missing value for '{key}'")));
        }
        let sec = section.as_deref().ok_or_else(|| perr(format!("'{key}' appears before any section")))?;
        match (sec, key) {
            ("chart", "name") => chart_name = Some((value.to_string(), line)),
            ("chart", "file") => chart_file = Some((PathBuf::from(value), line)),
            ("chart", "params") => {
                let mut list = Vec::new();
                for item in value.split(',') {
                    let (p, v) =
                        item.split_once('=').ok_or_else(|| perr(format!("bad parameter '{}'", item.trim())))?;
                    let v = v.trim().parse::<f64>().map_err(|_| perr(format!("'{}' is not a number", v.trim())))?;
                    list.push((p.trim().to_string(), v));
                }
                params = Some(list);
            }
            ("chart", "exploratory") => cfg.exploratory = boolean(value, line)?,
            ("grid", "resolution") => {
                let r: Vec<usize> = value.split(',').map(|s| count(s, "resolution", line)).collect::<Result<_>>()?;
                if r.iter().any(|&x| x < MIN_RESOLUTION) {
                    return Err(perr(format!("resolution must be at least {MIN_RESOLUTION} per axis")));
                }
                cfg.resolution = Some(r);
            }
            ("grid", "engine") => {
                cfg.engine = match value {
                    "ad" => Engine::Ad,
                    "fd" => Engine::fd(),
                    other => return Err(perr(format!("unknown engine '{other}' (expected ad or fd)"))),
                }
            }
            ("grid", "seed") => cfg.seed = value.parse::<u64>().map_err(|_| perr(format!("bad seed '{value}'")))?,
            ("tolerances", name) => {
                let t = &mut cfg.tolerances;
                let slot = match name {
                    "gauss" => &mut t.gauss,
                    "codazzi" => &mut t.codazzi,
                    "connection" => &mut t.connection,
                    "g0_flat" => &mut t.g0_flat,
                    "flat_normal" => &mut t.flat_normal,
                    "commutator" => &mut t.commutator,
                    "homomorphism" => &mut t.homomorphism,
                    "pullback" => &mut t.pullback,
                    "round_trip" => &mut t.round_trip,
                    other => return Err(perr(format!("unknown key '{other}' in [tolerances]"))),
                };
                *slot = Some(positive(value, name, line)?);
            }
            ("growth", "anchor") => cfg.anchor = Some(floats(value, line)?),
            ("growth", "radii") => {
                cfg.radii = floats(value, line)?;
                radii_line = line;
            }
            ("growth", "window") => match floats(value, line)?.as_slice() {
                [a, b] if a < b => cfg.window = Some((*a, *b)),
                _ => return Err(perr("window must be two increasing radii".into())),
            },
            ("coords", "box") => cfg.coords.t_box = Some(intervals(value, line)?),
            ("coords", "nodes") => cfg.coords.nodes = count(value, "nodes", line)?,
            ("coords", "step") => cfg.coords.step = positive(value, "step", line)?,
            ("coords", "pairs") => cfg.coords.pairs = count(value, "pairs", line)?,
            ("output", "dir") => cfg.output = PathBuf::from(value),
            (s, other) => return Err(perr(format!("unknown key '{other}' in [{s}]"))),
        }
    }

    cfg.chart = match (chart_name, chart_file) {
        (Some(_), Some((_, line))) => {
            return Err(Error::Parse { line, message: "give either a chart name or a chart file, not both".into() })
        }
        (Some((name, _)), None) => ChartSelector::Catalog { name, params: params.unwrap_or_default() },
        (None, Some((path, line))) => {
            if params.is_some() {
                return Err(Error::Parse { line, message: "parameters apply to catalog charts only".into() });
            }
            ChartSelector::File(path)
        }
        (None, None) => return Err(Error::Parse { line: 0, message: "missing [chart] name or file".into() }),
    };
    if cfg.radii.is_empty() || cfg.radii[0] <= 0.0 || cfg.radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Parse {
            line: radii_line,
            message: "radii must be positive and strictly increasing".into(),
        });
    }
    if cfg.coords.nodes == 0 {
        return Err(Error::Parse { line: 0, message: "coords nodes must be positive".into() });
    }
    Ok(cfg)
}
