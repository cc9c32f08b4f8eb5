//! Monte Carlo experiments.
//!
//! `M` batches of `L` paths. Every path owns its Brownian increments through
//! its [`PathKey`]; coarse schemes see the coarsened fine lattice, so coarse
//! and reference trajectories are driven by the same Brownian path. Batch
//! `j` yields
//!
//! ```text
//! e_j = (1/L) sum_i |y_ij(coarse) - y_ij(ref)|^2
//! ```
//!
//! and the reported error is `sqrt(mean_j e_j)`. The 98% interval is the
//! normal interval for the mean of the `e_j` pushed through the square root.
//!
//! Batches may run in parallel; per-batch results are combined in batch
//! order, so the numbers do not depend on the thread count.

use crate::asset::{self, SvParams};
use crate::error::{Error, Result};
use crate::model::{CevParams, SchemeConfig, SchemeId};
use crate::paths::{self, BrownianLattice, Driver, PathKey};
use crate::schemes::VarianceStepper;

/// Two-sided 98% standard normal quantile, `Phi^-1(0.99)`.
pub const Z_98: f64 = 2.326_347_874_040_841;

/// Where the Brownian increments come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Noise {
    Gaussian,
    /// All increments are zero.
    Silent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McPlan {
    pub m_batches: u32,
    pub l_paths: u32,
    pub seed: u64,
    pub noise: Noise,
    /// When false, `seconds_per_path` is reported as 0 and the output is
    /// fully reproducible.
    pub record_timing: bool,
}

impl McPlan {
    pub fn new(m_batches: u32, l_paths: u32, seed: u64) -> Result<Self> {
        if m_batches < 2 {
            return Err(Error::invalid("M", "at least two batches are needed"));
        }
        if l_paths < 1 {
            return Err(Error::invalid("L", "at least one path per batch is needed"));
        }
        Ok(Self {
            m_batches,
            l_paths,
            seed,
            noise: Noise::Gaussian,
            record_timing: true,
        })
    }

    pub fn silent(self) -> Self {
        Self {
            noise: Noise::Silent,
            ..self
        }
    }

    pub fn without_timing(self) -> Self {
        Self {
            record_timing: false,
            ..self
        }
    }

    pub fn total_paths(&self) -> u64 {
        self.m_batches as u64 * self.l_paths as u64
    }

    fn lattice(&self, key: PathKey, driver: Driver, n_steps: usize, horizon: f64) -> Result<BrownianLattice> {
        match self.noise {
            Noise::Silent => BrownianLattice::zeros(horizon, n_steps),
            Noise::Gaussian => {
                if n_steps.is_power_of_two() {
                    paths::generate_increments(key, driver, n_steps.trailing_zeros(), horizon)
                } else {
                    paths::generate_uniform_increments(key, driver, n_steps, horizon)
                }
            }
        }
    }
}

/// One strong-error (or distance) measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorEstimate {
    pub scheme: SchemeId,
    /// Reference scheme, the other scheme of a distance, or the variance
    /// scheme of an SV run.
    pub partner: SchemeId,
    pub dt: f64,
    pub error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub ci_half_width: f64,
    pub m_batches: u32,
    pub l_paths: u32,
    pub seconds_per_path: f64,
}

/// Error and 98% interval from the per-batch mean squared differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchSummary {
    pub error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl BatchSummary {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

pub fn summarize_batches(batch_mse: &[f64]) -> BatchSummary {
    let m = batch_mse.len() as f64;
    let mean = batch_mse.iter().sum::<f64>() / m;
    let var = if batch_mse.len() > 1 {
        batch_mse.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    let half = Z_98 * (var / m).sqrt();
    BatchSummary {
        error: mean.sqrt(),
        ci_low: (mean - half).max(0.0).sqrt(),
        ci_high: (mean + half).sqrt(),
    }
}

/// Least-squares line through `(log2 dt, log2 error)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: Vec<(f64, f64)>,
}

pub fn fit_order(points: &[(f64, f64)]) -> Result<OrderFit> {
    if points.len() < 2 {
        return Err(Error::Domain("an order fit needs at least two points".into()));
    }
    if let Some(&(dt, err)) = points.iter().find(|(dt, err)| !(*dt > 0.0 && *err > 0.0)) {
        return Err(Error::Domain(format!(
            "order fit needs positive step and error, got ({dt}, {err})"
        )));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(d, e)| (d.log2(), e.log2())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("order fit needs at least two distinct step sizes".into()));
    }
    let slope = sxy / sxx;
    Ok(OrderFit {
        slope,
        intercept: my - slope * mx,
        points: logs,
    })
}

#[cfg(not(target_arch = "wasm32"))]
struct Stopwatch(Option<std::time::Instant>);

#[cfg(not(target_arch = "wasm32"))]
impl Stopwatch {
    fn start(enabled: bool) -> Self {
        Self(enabled.then(std::time::Instant::now))
    }

    fn seconds(&self) -> f64 {
        self.0.map_or(0.0, |t| t.elapsed().as_secs_f64())
    }
}

// no monotonic clock on bare wasm
#[cfg(target_arch = "wasm32")]
struct Stopwatch;

#[cfg(target_arch = "wasm32")]
impl Stopwatch {
    fn start(_enabled: bool) -> Self {
        Stopwatch
    }

    fn seconds(&self) -> f64 {
        0.0
    }
}

/// Run `f` on a pool of `threads` workers (0 = library default).
#[cfg(feature = "parallel")]
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_threads<R: Send>(_threads: usize, f: impl FnOnce() -> R + Send) -> R {
    f()
}

fn map_batches<T, F>(m: u32, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u32) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..m).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..m).map(f).collect()
    }
}

fn tag(key: PathKey) -> impl FnOnce(Error) -> Error {
    move |e| Error::PathFailed {
        key,
        source: Box::new(e),
    }
}

/// Per-batch sums for one coarse level.
#[derive(Debug, Clone, Copy, Default)]
struct LevelTally {
    sum_sq: f64,
    seconds: f64,
}

fn collect_estimates(
    batches: Vec<Vec<LevelTally>>,
    plan: &McPlan,
    labels: impl Iterator<Item = (SchemeId, SchemeId, f64)>,
) -> Vec<ErrorEstimate> {
    let l = plan.l_paths as f64;
    labels
        .enumerate()
        .map(|(li, (scheme, partner, dt))| {
            let mse: Vec<f64> = batches.iter().map(|b| b[li].sum_sq / l).collect();
            let seconds: f64 = batches.iter().map(|b| b[li].seconds).sum();
            let s = summarize_batches(&mse);
            ErrorEstimate {
                scheme,
                partner,
                dt,
                error: s.error,
                ci_low: s.ci_low,
                ci_high: s.ci_high,
                ci_half_width: s.half_width(),
                m_batches: plan.m_batches,
                l_paths: plan.l_paths,
                seconds_per_path: seconds / plan.total_paths() as f64,
            }
        })
        .collect()
}

fn check_levels(coarse_levels: &[u32], ref_level: u32) -> Result<()> {
    if coarse_levels.is_empty() {
        return Err(Error::Domain("no coarse levels requested".into()));
    }
    if let Some(l) = coarse_levels.iter().find(|&&l| l > ref_level) {
        return Err(Error::Domain(format!(
            "coarse level {l} is finer than the reference level {ref_level}"
        )));
    }
    if ref_level >= 40 {
        return Err(Error::Capacity { level: ref_level });
    }
    Ok(())
}

/// Coarsen `fine` to every level in `levels` (any order), chaining from the
/// finest so each level is one more halving of the previous one.
fn coarsen_chain(fine: &BrownianLattice, ref_level: u32, levels: &[u32]) -> Result<Vec<BrownianLattice>> {
    let mut order: Vec<usize> = (0..levels.len()).collect();
    order.sort_by(|&a, &b| levels[b].cmp(&levels[a]));
    let mut out: Vec<Option<BrownianLattice>> = vec![None; levels.len()];
    let mut current = fine.clone();
    let mut current_level = ref_level;
    for idx in order {
        current = current.coarsen(current_level - levels[idx])?;
        current_level = levels[idx];
        debug_assert_eq!(current.terminal().to_bits(), fine.terminal().to_bits());
        out[idx] = Some(current.clone());
    }
    Ok(out.into_iter().map(|l| l.expect("every level visited")).collect())
}

/// Strong errors of `scheme` at every coarse level against `reference` at
/// `ref_level`. One fine path per Monte Carlo sample serves all levels.
pub fn strong_errors(
    params: &CevParams,
    scheme: &SchemeConfig,
    reference: &SchemeConfig,
    coarse_levels: &[u32],
    ref_level: u32,
    plan: &McPlan,
) -> Result<Vec<ErrorEstimate>> {
    check_levels(coarse_levels, ref_level)?;
    let horizon = params.horizon;
    let n_ref = 1usize << ref_level;
    let ref_stepper = VarianceStepper::new(params, reference, horizon / n_ref as f64)?;
    let steppers = coarse_levels
        .iter()
        .map(|&l| VarianceStepper::new(params, scheme, horizon / (1u64 << l) as f64))
        .collect::<Result<Vec<_>>>()?;
    let l_paths = plan.l_paths as usize;

    let batches = map_batches(plan.m_batches, |batch| {
        let mut refs = Vec::with_capacity(l_paths);
        let mut coarse: Vec<Vec<BrownianLattice>> = vec![Vec::with_capacity(l_paths); coarse_levels.len()];
        for path in 0..plan.l_paths {
            let key = PathKey::new(plan.seed, batch, path);
            let fine = plan.lattice(key, Driver::Variance, n_ref, horizon)?;
            refs.push(ref_stepper.terminal(params.x0, fine.increments()).map_err(tag(key))?);
            for (li, c) in coarsen_chain(&fine, ref_level, coarse_levels)?.into_iter().enumerate() {
                coarse[li].push(c);
            }
        }
        let mut tallies = Vec::with_capacity(coarse_levels.len());
        for (li, stepper) in steppers.iter().enumerate() {
            let clock = Stopwatch::start(plan.record_timing);
            let mut sum_sq = 0.0;
            for (path, lattice) in coarse[li].iter().enumerate() {
                let y = stepper
                    .terminal(params.x0, lattice.increments())
                    .map_err(tag(PathKey::new(plan.seed, batch, path as u32)))?;
                let d = y - refs[path];
                sum_sq += d * d;
            }
            tallies.push(LevelTally {
                sum_sq,
                seconds: clock.seconds(),
            });
        }
        Ok(tallies)
    })?;

    Ok(collect_estimates(
        batches,
        plan,
        coarse_levels
            .iter()
            .map(|&l| (scheme.scheme, reference.scheme, horizon / (1u64 << l) as f64)),
    ))
}

pub fn strong_error(
    params: &CevParams,
    scheme: &SchemeConfig,
    reference: &SchemeConfig,
    coarse_level: u32,
    ref_level: u32,
    plan: &McPlan,
) -> Result<ErrorEstimate> {
    strong_errors(params, scheme, reference, &[coarse_level], ref_level, plan)
        .map(|mut v| v.remove(0))
}

/// Root-mean-square terminal distance between two schemes on a grid of
/// `n_steps` uniform steps, both driven by the same increments.
/// `seconds_per_path` times scheme `b`.
pub fn scheme_distance(
    params: &CevParams,
    a: &SchemeConfig,
    b: &SchemeConfig,
    n_steps: usize,
    plan: &McPlan,
) -> Result<ErrorEstimate> {
    if n_steps == 0 {
        return Err(Error::invalid("n_steps", "must be at least 1"));
    }
    let horizon = params.horizon;
    let dt = horizon / n_steps as f64;
    let step_a = VarianceStepper::new(params, a, dt)?;
    let step_b = VarianceStepper::new(params, b, dt)?;

    let batches = map_batches(plan.m_batches, |batch| {
        let lattices = (0..plan.l_paths)
            .map(|path| plan.lattice(PathKey::new(plan.seed, batch, path), Driver::Variance, n_steps, horizon))
            .collect::<Result<Vec<_>>>()?;
        let mut ya = Vec::with_capacity(lattices.len());
        for (path, lat) in lattices.iter().enumerate() {
            let key = PathKey::new(plan.seed, batch, path as u32);
            ya.push(step_a.terminal(params.x0, lat.increments()).map_err(tag(key))?);
        }
        let clock = Stopwatch::start(plan.record_timing);
        let mut sum_sq = 0.0;
        for (path, lat) in lattices.iter().enumerate() {
            let key = PathKey::new(plan.seed, batch, path as u32);
            let yb = step_b.terminal(params.x0, lat.increments()).map_err(tag(key))?;
            let d = ya[path] - yb;
            sum_sq += d * d;
        }
        Ok(vec![LevelTally {
            sum_sq,
            seconds: clock.seconds(),
        }])
    })?;
    Ok(collect_estimates(batches, plan, std::iter::once((a.scheme, b.scheme, dt))).remove(0))
}

/// Distance on a `2^level` grid.
pub fn scheme_distance_at_level(
    params: &CevParams,
    a: &SchemeConfig,
    b: &SchemeConfig,
    level: u32,
    plan: &McPlan,
) -> Result<ErrorEstimate> {
    if level >= 40 {
        return Err(Error::Capacity { level });
    }
    scheme_distance(params, a, b, 1usize << level, plan)
}

/// Sign and clamp statistics over all paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegativityStats {
    pub paths: u64,
    pub negative_paths: u64,
    pub clamp_total: u64,
    /// Smallest node value seen on any path.
    pub min_state: f64,
}

impl NegativityStats {
    pub fn fraction(&self) -> f64 {
        self.negative_paths as f64 / self.paths as f64
    }
}

pub fn negativity_stats(
    params: &CevParams,
    config: &SchemeConfig,
    level: u32,
    plan: &McPlan,
) -> Result<NegativityStats> {
    if level >= 40 {
        return Err(Error::Capacity { level });
    }
    let n = 1usize << level;
    let stepper = VarianceStepper::new(params, config, params.horizon / n as f64)?;
    let batches = map_batches(plan.m_batches, |batch| {
        let mut stats = NegativityStats {
            paths: 0,
            negative_paths: 0,
            clamp_total: 0,
            min_state: f64::INFINITY,
        };
        for path in 0..plan.l_paths {
            let key = PathKey::new(plan.seed, batch, path);
            let lat = plan.lattice(key, Driver::Variance, n, params.horizon)?;
            let res = stepper.run(params.x0, lat.increments(), false).map_err(tag(key))?;
            stats.paths += 1;
            stats.negative_paths += res.negative_encountered as u64;
            stats.clamp_total += res.clamp_count;
            stats.min_state = stats.min_state.min(res.min_state);
        }
        Ok(stats)
    })?;
    Ok(batches.into_iter().fold(
        NegativityStats {
            paths: 0,
            negative_paths: 0,
            clamp_total: 0,
            min_state: f64::INFINITY,
        },
        |acc, b| NegativityStats {
            paths: acc.paths + b.paths,
            negative_paths: acc.negative_paths + b.negative_paths,
            clamp_total: acc.clamp_total + b.clamp_total,
            min_state: acc.min_state.min(b.min_state),
        },
    ))
}

/// Strong errors of the terminal price `S_T` for the pair
/// (`asset_scheme`, `var_scheme`) at every coarse level, against the same
/// pair at `ref_level` on the same correlated Brownian paths.
pub fn sv_errors(
    sv: &SvParams,
    asset_scheme: SchemeId,
    var_scheme: &SchemeConfig,
    coarse_levels: &[u32],
    ref_level: u32,
    plan: &McPlan,
) -> Result<Vec<ErrorEstimate>> {
    if !asset_scheme.is_asset() {
        return Err(Error::WrongScheme(asset_scheme));
    }
    if !var_scheme.scheme.preserves_positivity() {
        return Err(Error::WrongScheme(var_scheme.scheme));
    }
    check_levels(coarse_levels, ref_level)?;
    let cev = &sv.cev;
    let horizon = cev.horizon;
    let n_ref = 1usize << ref_level;
    let dt_of = |level: u32| horizon / (1u64 << level) as f64;
    let ref_stepper = VarianceStepper::new(cev, var_scheme, dt_of(ref_level))?;
    let steppers = coarse_levels
        .iter()
        .map(|&l| VarianceStepper::new(cev, var_scheme, dt_of(l)))
        .collect::<Result<Vec<_>>>()?;
    let l_paths = plan.l_paths as usize;

    let batches = map_batches(plan.m_batches, |batch| {
        let mut refs = Vec::with_capacity(l_paths);
        // (variance driver, asset driver) per level per path
        let mut coarse: Vec<Vec<(BrownianLattice, BrownianLattice)>> =
            vec![Vec::with_capacity(l_paths); coarse_levels.len()];
        for path in 0..plan.l_paths {
            let key = PathKey::new(plan.seed, batch, path);
            let w_var = plan.lattice(key, Driver::Variance, n_ref, horizon)?;
            let w_perp = plan.lattice(key, Driver::Orthogonal, n_ref, horizon)?;
            let w_asset = paths::correlate(&w_var, &w_perp, sv.rho)?;
            let nodes = ref_stepper
                .run(cev.x0, w_var.increments(), true)
                .map_err(tag(key))?
                .nodes
                .expect("nodes requested");
            let ln_s = asset::log_price(
                sv,
                &nodes,
                w_asset.increments(),
                w_var.increments(),
                dt_of(ref_level),
                asset_scheme,
            )?;
            refs.push(ln_s.exp());
            let var_chain = coarsen_chain(&w_var, ref_level, coarse_levels)?;
            let asset_chain = coarsen_chain(&w_asset, ref_level, coarse_levels)?;
            for (li, pair) in var_chain.into_iter().zip(asset_chain).enumerate() {
                coarse[li].push(pair);
            }
        }
        let mut tallies = Vec::with_capacity(coarse_levels.len());
        for (li, stepper) in steppers.iter().enumerate() {
            let dt = dt_of(coarse_levels[li]);
            let clock = Stopwatch::start(plan.record_timing);
            let mut sum_sq = 0.0;
            for (path, (w_var, w_asset)) in coarse[li].iter().enumerate() {
                let key = PathKey::new(plan.seed, batch, path as u32);
                let nodes = stepper
                    .run(cev.x0, w_var.increments(), true)
                    .map_err(tag(key))?
                    .nodes
                    .expect("nodes requested");
                let ln_s = asset::log_price(
                    sv,
                    &nodes,
                    w_asset.increments(),
                    w_var.increments(),
                    dt,
                    asset_scheme,
                )?;
                let d = ln_s.exp() - refs[path];
                sum_sq += d * d;
            }
            tallies.push(LevelTally {
                sum_sq,
                seconds: clock.seconds(),
            });
        }
        Ok(tallies)
    })?;

    Ok(collect_estimates(
        batches,
        plan,
        coarse_levels
            .iter()
            .map(|&l| (asset_scheme, var_scheme.scheme, dt_of(l))),
    ))
}

pub fn sv_error(
    sv: &SvParams,
    asset_scheme: SchemeId,
    var_scheme: &SchemeConfig,
    coarse_level: u32,
    ref_level: u32,
    plan: &McPlan,
) -> Result<ErrorEstimate> {
    sv_errors(sv, asset_scheme, var_scheme, &[coarse_level], ref_level, plan).map(|mut v| v.remove(0))
}
