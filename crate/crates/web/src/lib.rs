//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every function takes the scheme name plus the parameters the page lets
//! the user change; the remaining model parameters are the benchmark ones.

use cevsim::harness::{self, McPlan};
use cevsim::paths::{self, PathKey};
use cevsim::{validate, CevParams, GridSpec, SchemeConfig, SchemeId, ValidityReport};
use wasm_bindgen::prelude::*;

fn js(err: cevsim::Error) -> JsError {
    JsError::new(&err.to_string())
}

fn model(k3: f64, q: f64) -> Result<CevParams, JsError> {
    CevParams::benchmark().with_k3(k3).and_then(|p| p.with_q(q)).map_err(js)
}

fn config(scheme: &str, theta: f64) -> Result<SchemeConfig, JsError> {
    let id: SchemeId = scheme.parse().map_err(js)?;
    if !id.is_variance() {
        return Err(JsError::new(&format!("{id} is not a variance scheme")));
    }
    let c = SchemeConfig::of(id);
    if id == SchemeId::Sd {
        c.with_theta(theta).map_err(js)
    } else {
        Ok(c)
    }
}

/// Sample paths on a `2^level` grid, concatenated: `n_paths` blocks of
/// `2^level + 1` node values. Path `i` is driven by the same Brownian
/// increments for every scheme, so switching schemes keeps the noise fixed.
#[wasm_bindgen]
pub fn simulate_paths(
    scheme: &str,
    k3: f64,
    q: f64,
    theta: f64,
    level: u32,
    n_paths: u32,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    let p = model(k3, q)?;
    let c = config(scheme, theta)?;
    let mut out = Vec::with_capacity(n_paths as usize * ((1usize << level) + 1));
    for path in 0..n_paths {
        let lattice = paths::generate_fine_increments(PathKey::new(seed, 0, path), level, p.horizon).map_err(js)?;
        let res = cevsim::schemes::simulate_path(&p, &c, &lattice, true).map_err(js)?;
        out.extend(res.nodes.unwrap_or_default());
    }
    Ok(out)
}

/// Strong errors at levels `coarse_min..=coarse_max` against the same
/// scheme at `ref_level`. Returns rows of `(dt, error, ci_low, ci_high)`
/// followed by the fitted order.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn convergence(
    scheme: &str,
    k3: f64,
    q: f64,
    theta: f64,
    coarse_min: u32,
    coarse_max: u32,
    ref_level: u32,
    m_batches: u32,
    l_paths: u32,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    let p = model(k3, q)?;
    let c = config(scheme, theta)?;
    let levels: Vec<u32> = (coarse_min..=coarse_max).collect();
    let plan = McPlan::new(m_batches, l_paths, seed).map_err(js)?.without_timing();
    let rows = harness::strong_errors(&p, &c, &c, &levels, ref_level, &plan).map_err(js)?;
    let mut out: Vec<f64> = rows.iter().flat_map(|e| [e.dt, e.error, e.ci_low, e.ci_high]).collect();
    let points: Vec<(f64, f64)> = rows.iter().map(|e| (e.dt, e.error)).collect();
    out.push(harness::fit_order(&points).map_or(f64::NAN, |f| f.slope));
    Ok(out)
}

/// One line per applicability condition, `name: pass|FAIL|n/a`, then the
/// verdict.
#[wasm_bindgen]
pub fn validity(scheme: &str, k3: f64, q: f64, theta: f64, level: u32) -> Result<String, JsError> {
    let p = model(k3, q)?;
    let c = config(scheme, theta)?;
    let grid = GridSpec::dyadic(p.horizon, level).map_err(js)?;
    let report = validate(&p, &c, &grid);
    let relevant = ValidityReport::relevant(c.scheme);
    let mut lines: Vec<String> = ValidityReport::CONDITIONS
        .iter()
        .zip(report.flags())
        .map(|(name, ok)| {
            let mark = match (relevant.contains(name), ok) {
                (false, _) => "n/a",
                (true, true) => "pass",
                (true, false) => "FAIL",
            };
            format!("{name}: {mark}")
        })
        .collect();
    lines.push(match report.require(grid.dt) {
        Ok(()) => format!("{} is applicable at dt = 2^-{level}", c.scheme),
        Err(e) => e.to_string(),
    });
    Ok(lines.join("\n"))
}
