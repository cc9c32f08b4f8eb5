//! Experiment configuration and table output.
//!
//! A config file is a flat list of `key = value` lines; `#` starts a
//! comment, lists are comma separated and numbers may be written as
//! fractions such as `1/16`. Every key is optional and defaults to the
//! benchmark setup:
//!
//! ```text
//! k1 = 1/16          k2 = 1          k3 = 0.4        q = 3/4
//! x0 = 1/16          T = 1
//! schemes = SD, HAL, ALF, BIM, BMM
//! theta = 1          big_theta = 1/2
//! levels = 5, 7, 9, 11, 13           ref_level = 14
//! ref_scheme =       # empty: each scheme is its own reference
//! dt =               # explicit step sizes for `distance`
//! M = 100            L = 100         seed = 1
//! threads = 0        timing = true
//! mu = 0.05          rho = 0, -0.4, -0.8
//! s0 = 100           p = 1/2
//! asset_schemes = LOGEULER, IJK      var_schemes = SD, BMM
//! output = results.csv
//! ```
//!
//! CSV floats are written with 17 significant digits so that they parse
//! back to the same `f64`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::asset::SvParams;
use crate::error::Error;
use crate::harness::{self, ErrorEstimate, McPlan};
use crate::model::{validate, CevParams, GridSpec, SchemeConfig, SchemeId, ValidityReport};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("line {line}: `{key}`: {reason}")]
    Config {
        line: usize,
        key: String,
        reason: String,
    },

    #[error("{}: line {line}: {reason}", path.display())]
    Csv {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Run {
        context: String,
        #[source]
        source: Error,
    },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

const KEYS: &[&str] = &[
    "k1",
    "k2",
    "k3",
    "q",
    "x0",
    "T",
    "schemes",
    "theta",
    "big_theta",
    "newton_tol",
    "newton_max_iter",
    "levels",
    "ref_level",
    "ref_scheme",
    "dt",
    "M",
    "L",
    "seed",
    "threads",
    "timing",
    "mu",
    "rho",
    "s0",
    "p",
    "asset_schemes",
    "var_schemes",
    "output",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: CevParams,
    pub schemes: Vec<SchemeId>,
    pub theta: f64,
    pub big_theta: f64,
    pub newton_tol: f64,
    pub newton_max_iter: u32,
    pub levels: Vec<u32>,
    pub ref_level: u32,
    /// `None`: every scheme is compared with itself on the fine grid.
    pub ref_scheme: Option<SchemeId>,
    /// Step sizes for distance runs; empty means use `levels`.
    pub dts: Vec<f64>,
    pub m_batches: u32,
    pub l_paths: u32,
    pub seed: u64,
    /// Worker threads, 0 for one per core.
    pub threads: usize,
    pub timing: bool,
    pub mu: f64,
    pub rhos: Vec<f64>,
    pub s0: f64,
    pub p: f64,
    pub asset_schemes: Vec<SchemeId>,
    pub var_schemes: Vec<SchemeId>,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            params: CevParams::benchmark(),
            schemes: vec![SchemeId::Sd, SchemeId::Hal, SchemeId::Alf, SchemeId::Bim, SchemeId::Bmm],
            theta: SchemeConfig::DEFAULT_THETA,
            big_theta: SchemeConfig::DEFAULT_BIG_THETA,
            newton_tol: SchemeConfig::DEFAULT_NEWTON_TOL,
            newton_max_iter: SchemeConfig::DEFAULT_NEWTON_MAX_ITER,
            levels: vec![5, 7, 9, 11, 13],
            ref_level: 14,
            ref_scheme: None,
            dts: Vec::new(),
            m_batches: 100,
            l_paths: 100,
            seed: 1,
            threads: 0,
            timing: true,
            mu: 0.05,
            rhos: vec![0.0, -0.4, -0.8],
            s0: 100.0,
            p: 0.5,
            asset_schemes: vec![SchemeId::LogEuler, SchemeId::Ijk],
            var_schemes: vec![SchemeId::Sd, SchemeId::Bmm],
            output: None,
        }
    }
}

struct Entry<'a> {
    line: usize,
    value: &'a str,
}

fn config_error(line: usize, key: &str, reason: impl Into<String>) -> CliError {
    CliError::Config {
        line,
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn parse_number(text: &str) -> Option<f64> {
    let text = text.trim();
    let value = match text.split_once('/') {
        Some((num, den)) => num.trim().parse::<f64>().ok()? / den.trim().parse::<f64>().ok()?,
        None => text.parse::<f64>().ok()?,
    };
    value.is_finite().then_some(value)
}

fn list_items(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut entries: HashMap<&str, Entry> = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| config_error(line, content, "expected `key = value`"))?;
            let key = key.trim();
            let known = KEYS
                .iter()
                .find(|k| **k == key)
                .ok_or_else(|| config_error(line, key, "unknown key"))?;
            if let Some(prev) = entries.insert(known, Entry { line, value: value.trim() }) {
                return Err(config_error(line, key, format!("already set on line {}", prev.line)));
            }
        }

        let mut cfg = Self::default();
        let num = |key: &str| -> CliResult<Option<f64>> {
            entries
                .get(key)
                .map(|e| parse_number(e.value).ok_or_else(|| config_error(e.line, key, format!("`{}` is not a number", e.value))))
                .transpose()
        };
        let int = |key: &str| -> CliResult<Option<u64>> {
            entries
                .get(key)
                .map(|e| {
                    e.value
                        .parse::<u64>()
                        .map_err(|_| config_error(e.line, key, format!("`{}` is not a nonnegative integer", e.value)))
                })
                .transpose()
        };
        let narrow = |key: &str, v: u64| -> CliResult<u32> {
            u32::try_from(v).map_err(|_| config_error(entries[key].line, key, format!("{v} is too large")))
        };
        let schemes = |key: &str| -> CliResult<Option<Vec<SchemeId>>> {
            entries
                .get(key)
                .map(|e| {
                    list_items(e.value)
                        .map(|s| s.parse::<SchemeId>().map_err(|err| config_error(e.line, key, err.to_string())))
                        .collect()
                })
                .transpose()
        };
        let line_of = |key: &str| entries.get(key).map_or(0, |e| e.line);

        let mut cev = [
            cfg.params.k1,
            cfg.params.k2,
            cfg.params.k3,
            cfg.params.q,
            cfg.params.x0,
            cfg.params.horizon,
        ];
        for (slot, key) in cev.iter_mut().zip(["k1", "k2", "k3", "q", "x0", "T"]) {
            if let Some(v) = num(key)? {
                *slot = v;
            }
        }
        cfg.params = CevParams::new(cev[0], cev[1], cev[2], cev[3], cev[4], cev[5]).map_err(|err| {
            let key = match &err {
                Error::InvalidParameter { name, .. } if *name == "horizon" => "T",
                Error::InvalidParameter { name, .. } => name,
                _ => "k1",
            };
            config_error(line_of(key), key, err.to_string())
        })?;

        if let Some(v) = schemes("schemes")? {
            cfg.schemes = v;
        }
        if let Some(v) = schemes("asset_schemes")? {
            cfg.asset_schemes = v;
        }
        if let Some(v) = schemes("var_schemes")? {
            cfg.var_schemes = v;
        }
        if let Some(e) = entries.get("ref_scheme") {
            cfg.ref_scheme = match e.value {
                "" => None,
                s => Some(s.parse().map_err(|err: Error| config_error(e.line, "ref_scheme", err.to_string()))?),
            };
        }
        for (slot, key) in [
            (&mut cfg.theta, "theta"),
            (&mut cfg.big_theta, "big_theta"),
            (&mut cfg.newton_tol, "newton_tol"),
            (&mut cfg.mu, "mu"),
            (&mut cfg.s0, "s0"),
            (&mut cfg.p, "p"),
        ] {
            if let Some(v) = num(key)? {
                *slot = v;
            }
        }
        if let Some(v) = int("newton_max_iter")? {
            cfg.newton_max_iter = narrow("newton_max_iter", v)?;
        }
        if let Some(v) = int("ref_level")? {
            cfg.ref_level = narrow("ref_level", v)?;
        }
        if let Some(v) = int("M")? {
            cfg.m_batches = narrow("M", v)?;
        }
        if let Some(v) = int("L")? {
            cfg.l_paths = narrow("L", v)?;
        }
        if let Some(v) = int("seed")? {
            cfg.seed = v;
        }
        if let Some(v) = int("threads")? {
            cfg.threads = v as usize;
        }
        if let Some(e) = entries.get("levels") {
            cfg.levels = list_items(e.value)
                .map(|s| {
                    s.parse::<u32>()
                        .map_err(|_| config_error(e.line, "levels", format!("`{s}` is not a level")))
                })
                .collect::<CliResult<_>>()?;
        }
        for (slot, key) in [(&mut cfg.dts, "dt"), (&mut cfg.rhos, "rho")] {
            if let Some(e) = entries.get(key) {
                *slot = list_items(e.value)
                    .map(|s| parse_number(s).ok_or_else(|| config_error(e.line, key, format!("`{s}` is not a number"))))
                    .collect::<CliResult<_>>()?;
            }
        }
        if let Some(e) = entries.get("timing") {
            cfg.timing = e
                .value
                .parse()
                .map_err(|_| config_error(e.line, "timing", format!("`{}` is not true or false", e.value)))?;
        }
        if let Some(e) = entries.get("output") {
            cfg.output = (!e.value.is_empty()).then(|| PathBuf::from(e.value));
        }

        let scheme_line = |err: &Error| match err {
            Error::InvalidParameter { name, .. } => line_of(name),
            _ => 0,
        };
        SchemeConfig::new(SchemeId::Sd, cfg.theta, cfg.big_theta, cfg.newton_tol, cfg.newton_max_iter)
            .map_err(|err| {
                let key = match &err {
                    Error::InvalidParameter { name, .. } => *name,
                    _ => "theta",
                };
                config_error(scheme_line(&err), key, err.to_string())
            })?;
        if cfg.ref_level >= 40 {
            return Err(config_error(line_of("ref_level"), "ref_level", "must be below 40"));
        }
        if let Some(&l) = cfg.levels.iter().find(|&&l| l >= cfg.ref_level) {
            return Err(config_error(
                line_of("levels"),
                "levels",
                format!("level {l} is not coarser than ref_level {}", cfg.ref_level),
            ));
        }
        if let Some(&dt) = cfg.dts.iter().find(|&&dt| dt <= 0.0 || dt > cfg.params.horizon) {
            return Err(config_error(line_of("dt"), "dt", format!("{dt} is not in (0, T]")));
        }
        if cfg.m_batches < 2 {
            return Err(config_error(line_of("M"), "M", "at least two batches are needed"));
        }
        if cfg.l_paths < 1 {
            return Err(config_error(line_of("L"), "L", "at least one path per batch is needed"));
        }
        for (list, key, ok) in [
            (&cfg.schemes, "schemes", SchemeId::is_variance as fn(SchemeId) -> bool),
            (&cfg.var_schemes, "var_schemes", SchemeId::preserves_positivity),
            (&cfg.asset_schemes, "asset_schemes", SchemeId::is_asset),
        ] {
            if let Some(s) = list.iter().find(|s| !ok(**s)) {
                return Err(config_error(line_of(key), key, format!("{s} is not allowed here")));
            }
        }
        if let Some(r) = cfg.ref_scheme.filter(|r| !r.is_variance()) {
            return Err(config_error(line_of("ref_scheme"), "ref_scheme", format!("{r} is not a variance scheme")));
        }
        if let Some(e) = entries.get("rho") {
            if let Some(r) = cfg.rhos.iter().find(|r| !(-1.0..=1.0).contains(*r)) {
                return Err(config_error(e.line, "rho", format!("{r} is outside [-1, 1]")));
            }
        }
        SvParams::new(cfg.params, cfg.mu, 0.0, cfg.s0, cfg.p).map_err(|err| {
            let key = match &err {
                Error::InvalidParameter { name, .. } => *name,
                _ => "mu",
            };
            config_error(line_of(key), key, err.to_string())
        })?;
        Ok(cfg)
    }

    pub fn scheme_config(&self, scheme: SchemeId) -> SchemeConfig {
        SchemeConfig::new(scheme, self.theta, self.big_theta, self.newton_tol, self.newton_max_iter)
            .expect("checked when the config was parsed")
    }

    pub fn plan(&self) -> McPlan {
        let plan = McPlan::new(self.m_batches, self.l_paths, self.seed).expect("checked when the config was parsed");
        if self.timing {
            plan
        } else {
            plan.without_timing()
        }
    }

    fn grid(&self, level: u32) -> GridSpec {
        GridSpec::dyadic(self.params.horizon, level).expect("levels are below 40")
    }

    /// Grids of a distance run: the explicit step sizes if any, else the levels.
    pub fn distance_grids(&self) -> CliResult<Vec<GridSpec>> {
        if self.dts.is_empty() {
            return Ok(self.levels.iter().map(|&l| self.grid(l)).collect());
        }
        self.dts
            .iter()
            .map(|&dt| {
                GridSpec::nearest(self.params.horizon, dt).map_err(|source| CliError::Run {
                    context: format!("dt = {dt}"),
                    source,
                })
            })
            .collect()
    }
}

/// Seventeen significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn refuse(report: &ValidityReport, dt: f64) -> CliResult<()> {
    report.require(dt).map_err(|source| CliError::Run {
        context: "refusing to simulate".into(),
        source,
    })
}

fn run_error(context: String) -> impl FnOnce(Error) -> CliError {
    move |source| CliError::Run { context, source }
}

/// Applicability table for every configured scheme at every level and
/// every explicit step size.
/// The flag is true when every row passes.
pub fn run_validate(cfg: &ExperimentConfig) -> (String, bool) {
    let mut out = String::new();
    let mut all_ok = true;
    if cfg.schemes.is_empty() {
        return (out, true);
    }
    let _ = write!(out, "{:<8} {:>12}", "scheme", "dt");
    for c in ValidityReport::CONDITIONS {
        let _ = write!(out, " {c:>18}");
    }
    let _ = writeln!(out, " {:>8}", "verdict");
    let mut grids: Vec<GridSpec> = cfg.levels.iter().map(|&l| cfg.grid(l)).collect();
    grids.extend(
        cfg.dts
            .iter()
            .filter_map(|&dt| GridSpec::nearest(cfg.params.horizon, dt).ok()),
    );
    for &scheme in &cfg.schemes {
        let config = cfg.scheme_config(scheme);
        for grid in &grids {
            let report = validate(&cfg.params, &config, grid);
            let _ = write!(out, "{:<8} {:>12.6e}", scheme.name(), grid.dt);
            for (name, ok) in ValidityReport::CONDITIONS.iter().zip(report.flags()) {
                let mark = match (ValidityReport::relevant(scheme).contains(name), ok) {
                    (false, _) => "-",
                    (true, true) => "pass",
                    (true, false) => "FAIL",
                };
                let _ = write!(out, " {mark:>18}");
            }
            let verdict = report.verdict();
            all_ok &= verdict;
            let _ = writeln!(out, " {:>8}", if verdict { "valid" } else { "INVALID" });
        }
    }
    (out, all_ok)
}

pub const CONVERGE_HEADER: &str = "scheme,dt,error,ci_low,ci_high,seconds_per_path";
pub const ORDER_HEADER: &str = "scheme,fit,points,slope,intercept";
pub const DISTANCE_HEADER: &str = "scheme_a,scheme_b,dt,distance,ci_low,ci_high";
pub const SV_HEADER: &str = "rho,asset_scheme,var_scheme,dt,error,ci_low,ci_high,seconds_per_path";
pub const PLOT_HEADER: &str = "scheme,log2_dt,log2_error,log2_ci_low,log2_ci_high";

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergeOutput {
    pub estimates: Vec<ErrorEstimate>,
    pub csv: String,
    pub order_csv: String,
}

pub fn run_converge(cfg: &ExperimentConfig) -> CliResult<ConvergeOutput> {
    for &scheme in &cfg.schemes {
        let config = cfg.scheme_config(scheme);
        for &level in &cfg.levels {
            let grid = cfg.grid(level);
            refuse(&validate(&cfg.params, &config, &grid), grid.dt)?;
        }
        let reference = config.with_scheme(cfg.ref_scheme.unwrap_or(scheme));
        let grid = cfg.grid(cfg.ref_level);
        refuse(&validate(&cfg.params, &reference, &grid), grid.dt)?;
    }

    let plan = cfg.plan();
    let mut estimates = Vec::new();
    let mut csv = format!("{CONVERGE_HEADER}\n");
    let mut order_csv = format!("{ORDER_HEADER}\n");
    for &scheme in &cfg.schemes {
        if cfg.levels.is_empty() {
            continue;
        }
        let config = cfg.scheme_config(scheme);
        let reference = config.with_scheme(cfg.ref_scheme.unwrap_or(scheme));
        let rows = harness::with_threads(cfg.threads, || {
            harness::strong_errors(&cfg.params, &config, &reference, &cfg.levels, cfg.ref_level, &plan)
        })
        .map_err(run_error(format!("converge {scheme}")))?;
        for e in &rows {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{}",
                scheme.name(),
                format_float(e.dt),
                format_float(e.error),
                format_float(e.ci_low),
                format_float(e.ci_high),
                format_float(e.seconds_per_path)
            );
        }
        let mut points: Vec<(f64, f64)> = rows.iter().map(|e| (e.dt, e.error)).collect();
        points.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut fits = Vec::new();
        if points.len() >= 3 {
            fits.push(("finest3", &points[points.len() - 3..]));
        }
        if points.len() >= 2 {
            fits.push(("all", &points[..]));
        }
        for (name, pts) in fits {
            // a zero error (identical schemes) has no logarithm
            if let Ok(fit) = harness::fit_order(pts) {
                let _ = writeln!(
                    order_csv,
                    "{},{name},{},{},{}",
                    scheme.name(),
                    pts.len(),
                    format_float(fit.slope),
                    format_float(fit.intercept)
                );
            }
        }
        estimates.extend(rows);
    }
    Ok(ConvergeOutput {
        estimates,
        csv,
        order_csv,
    })
}

pub fn run_distance(cfg: &ExperimentConfig) -> CliResult<String> {
    let mut csv = format!("{DISTANCE_HEADER}\n");
    let Some((&first, others)) = cfg.schemes.split_first() else {
        return Ok(csv);
    };
    let grids = cfg.distance_grids()?;
    for &scheme in &cfg.schemes {
        let config = cfg.scheme_config(scheme);
        for grid in &grids {
            refuse(&validate(&cfg.params, &config, grid), grid.dt)?;
        }
    }
    let plan = cfg.plan();
    let a = cfg.scheme_config(first);
    for grid in &grids {
        for &other in others {
            let b = cfg.scheme_config(other);
            let e = harness::with_threads(cfg.threads, || {
                harness::scheme_distance(&cfg.params, &a, &b, grid.n_steps, &plan)
            })
            .map_err(run_error(format!("distance {first}-{other} at dt = {:e}", grid.dt)))?;
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{}",
                first.name(),
                other.name(),
                format_float(e.dt),
                format_float(e.error),
                format_float(e.ci_low),
                format_float(e.ci_high)
            );
        }
    }
    Ok(csv)
}

pub fn run_sv(cfg: &ExperimentConfig) -> CliResult<String> {
    for &scheme in &cfg.var_schemes {
        let config = cfg.scheme_config(scheme);
        for &level in cfg.levels.iter().chain([&cfg.ref_level]) {
            let grid = cfg.grid(level);
            refuse(&validate(&cfg.params, &config, &grid), grid.dt)?;
        }
    }
    let plan = cfg.plan();
    let mut csv = format!("{SV_HEADER}\n");
    if cfg.levels.is_empty() {
        return Ok(csv);
    }
    for &rho in &cfg.rhos {
        let sv = SvParams::new(cfg.params, cfg.mu, rho, cfg.s0, cfg.p).map_err(run_error(format!("rho = {rho}")))?;
        for &asset_scheme in &cfg.asset_schemes {
            for &var_scheme in &cfg.var_schemes {
                let var = cfg.scheme_config(var_scheme);
                let rows = harness::with_threads(cfg.threads, || {
                    harness::sv_errors(&sv, asset_scheme, &var, &cfg.levels, cfg.ref_level, &plan)
                })
                .map_err(run_error(format!("sv {asset_scheme}&{var_scheme} at rho = {rho}")))?;
                for e in rows {
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{},{},{},{}",
                        format_float(rho),
                        asset_scheme.name(),
                        var_scheme.name(),
                        format_float(e.dt),
                        format_float(e.error),
                        format_float(e.ci_low),
                        format_float(e.ci_high),
                        format_float(e.seconds_per_path)
                    );
                }
            }
        }
    }
    Ok(csv)
}

/// Turn the output of [`run_converge`] into base-2 logarithms.
/// `source` only labels diagnostics.
pub fn run_plotdata(converge_csv: &str, source: &Path) -> CliResult<String> {
    let bad = |line: usize, reason: String| CliError::Csv {
        path: source.to_path_buf(),
        line,
        reason,
    };
    let mut lines = converge_csv.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end_matches('\r') == CONVERGE_HEADER => {}
        Some((_, header)) => return Err(bad(1, format!("expected header `{CONVERGE_HEADER}`, found `{header}`"))),
        None => return Err(bad(1, "empty file".into())),
    }
    let mut out = format!("{PLOT_HEADER}\n");
    for (idx, raw) in lines {
        let line = idx + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 6 {
            return Err(bad(line, format!("expected 6 fields, found {}", fields.len())));
        }
        let scheme: SchemeId = fields[0].parse().map_err(|e: Error| bad(line, e.to_string()))?;
        let mut values = [0.0; 4];
        for (slot, (name, text)) in values
            .iter_mut()
            .zip(["dt", "error", "ci_low", "ci_high"].iter().zip(&fields[1..5]))
        {
            *slot = text
                .parse::<f64>()
                .map_err(|_| bad(line, format!("{name} `{text}` is not a number")))?;
            if *slot < 0.0 {
                return Err(bad(line, format!("{name} {text} is negative")));
            }
        }
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            scheme.name(),
            format_float(values[0].log2()),
            format_float(values[1].log2()),
            format_float(values[2].log2()),
            format_float(values[3].log2())
        );
    }
    Ok(out)
}

/// `results.csv` becomes `results.order.csv`.
pub fn order_path(out: &Path) -> PathBuf {
    out.with_extension("order.csv")
}

/// Write to a temporary file next to `path`, then rename it over `path`.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
