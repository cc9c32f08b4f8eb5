//! One-step maps and path drivers for the variance process.
//!
//! Each scheme is a small kernel holding the coefficients that depend only
//! on `(params, config, dt)`. The free functions `sd_step`, `hal_step`, ...
//! build a kernel for a single evaluation; [`VarianceStepper`] builds one per
//! grid and reuses it across every step of every path. Both routes run the
//! same arithmetic, so they agree bit for bit.
//!
//! Conventions at the boundary:
//!
//! - SD and HAL clamp a negative inner expression to 0 and report the clamp.
//! - BIM and BMM define their weight terms `y^(q-1)` and `|y|^(2q-2)` as 0
//!   at exactly `y = 0`.
//! - EM and Milstein use the sign-preserving power `sign(y)|y|^a`, so paths
//!   that cross zero keep going and the crossing is counted, not repaired.

use crate::error::{Error, Result};
use crate::model::{CevParams, SchemeConfig, SchemeId};
use crate::paths::BrownianLattice;

/// Everything a single step needs.
#[derive(Debug, Clone, Copy)]
pub struct StepInput<'a> {
    pub y: f64,
    pub dt: f64,
    pub dw: f64,
    pub params: &'a CevParams,
    pub config: &'a SchemeConfig,
}

/// Result of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Advance {
    pub value: f64,
    /// The inner expression of SD or HAL went negative and was set to 0.
    pub clamped: bool,
}

impl Advance {
    #[inline]
    fn plain(value: f64) -> Self {
        Self {
            value,
            clamped: false,
        }
    }
}

trait Kernel {
    fn advance(&self, y: f64, dw: f64) -> Result<Advance>;
}

macro_rules! infallible_kernel {
    ($($t:ty),*) => {
        $(impl Kernel for $t {
            #[inline]
            fn advance(&self, y: f64, dw: f64) -> Result<Advance> {
                Ok(self.step(y, dw))
            }
        })*
    };
}

infallible_kernel!(Sd, Hal, Bim, Bmm, Em, Milstein);

#[inline]
fn signed_pow(y: f64, a: f64) -> f64 {
    if y < 0.0 {
        -(-y).powf(a)
    } else {
        y.powf(a)
    }
}

/// Semi-discrete scheme with implicitness `theta`.
#[derive(Debug, Clone, Copy)]
pub struct Sd {
    decay: f64,
    level: f64,
    correction: f64,
    noise: f64,
    half_exp: f64,
    corr_exp: f64,
}

impl Sd {
    pub fn new(p: &CevParams, theta: f64, dt: f64) -> Self {
        let a = 1.0 + p.k2 * theta * dt;
        Self {
            decay: 1.0 - p.k2 * dt / a,
            level: p.k1 * dt / a,
            correction: p.k3 * p.k3 * dt / (4.0 * a * a),
            noise: p.k3 / (2.0 * a),
            half_exp: p.q - 0.5,
            corr_exp: 2.0 * p.q - 1.0,
        }
    }

    /// The deterministic part `y_bar` before clamping.
    #[inline]
    pub fn inner(&self, y: f64) -> f64 {
        y * self.decay + self.level - self.correction * y.powf(self.corr_exp)
    }

    #[inline]
    pub fn step(&self, y: f64, dw: f64) -> Advance {
        let inner = self.inner(y);
        let clamped = inner < 0.0;
        let root = if clamped { 0.0 } else { inner.sqrt() };
        let z = root + self.noise * y.powf(self.half_exp) * dw;
        Advance {
            value: z * z,
            clamped,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Hal {
    decay: f64,
    level: f64,
    correction: f64,
    noise: f64,
    corr_exp: f64,
    one_minus_q: f64,
    outer_exp: f64,
}

impl Hal {
    pub fn new(p: &CevParams, dt: f64) -> Self {
        Self {
            decay: 1.0 - p.k2 * dt,
            level: p.k1 * dt,
            correction: p.q * p.k3 * p.k3 * dt / 2.0,
            noise: p.k3 * (1.0 - p.q),
            corr_exp: 2.0 * p.q - 1.0,
            one_minus_q: 1.0 - p.q,
            outer_exp: 1.0 / (1.0 - p.q),
        }
    }

    #[inline]
    pub fn inner(&self, y: f64) -> f64 {
        y * self.decay + self.level - self.correction * y.powf(self.corr_exp)
    }

    #[inline]
    pub fn step(&self, y: f64, dw: f64) -> Advance {
        let inner = self.inner(y);
        let clamped = inner < 0.0;
        let base = if clamped { 0.0 } else { inner };
        if dw == 0.0 {
            // |base^(1-q)|^(1/(1-q)) = base, skip the round trip through pow
            return Advance {
                value: base,
                clamped,
            };
        }
        let z = base.powf(self.one_minus_q) + self.noise * dw;
        Advance {
            value: z.abs().powf(self.outer_exp),
            clamped,
        }
    }
}

/// The implicit equation solved by one ALF step,
///
/// ```text
/// Y = y + (1-q) (k1 Y^(-q/(1-q)) - k2 Y - (q k3^2 / 2) Y^(-1)) dt + k3 (1-q) dW
/// ```
///
/// with `y` the current state. Kept separate from [`CevParams`] so that the
/// solver also accepts the square-root case `q = 1/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlfEquation {
    pub anchor: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub q: f64,
    pub dt: f64,
    pub dw: f64,
}

/// A root of [`AlfEquation`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlfRoot {
    pub root: f64,
    pub residual: f64,
    pub newton_iterations: u32,
    pub used_bisection: bool,
}

impl AlfEquation {
    pub fn new(p: &CevParams, y: f64, dt: f64, dw: f64) -> Self {
        Self {
            anchor: y,
            k1: p.k1,
            k2: p.k2,
            k3: p.k3,
            q: p.q,
            dt,
            dw,
        }
    }

    fn exponent(&self) -> f64 {
        self.q / (1.0 - self.q)
    }

    /// Right-hand side `F(Y)`.
    pub fn rhs(&self, big_y: f64) -> f64 {
        let w = 1.0 - self.q;
        self.anchor
            + w * (self.k1 * big_y.powf(-self.exponent())
                - self.k2 * big_y
                - self.q * self.k3 * self.k3 / 2.0 / big_y)
                * self.dt
            + self.k3 * w * self.dw
    }

    /// `Y - F(Y)`.
    pub fn residual(&self, big_y: f64) -> f64 {
        big_y - self.rhs(big_y)
    }

    fn slope(&self, big_y: f64) -> f64 {
        let w = 1.0 - self.q;
        let r = self.exponent();
        1.0 - w
            * (-r * self.k1 * big_y.powf(-r - 1.0) - self.k2
                + self.q * self.k3 * self.k3 / 2.0 / (big_y * big_y))
                * self.dt
    }

    pub fn initial_guess(&self) -> f64 {
        let w = 1.0 - self.q;
        if self.anchor > 0.0 {
            self.anchor.powf(w)
        } else {
            (self.k1 * self.dt).powf(w)
        }
    }

    /// Newton from [`Self::initial_guess`]; falls back to bisection on an
    /// expanding bracket when Newton does not reach `tol`.
    pub fn solve(&self, tol: f64, max_iter: u32) -> Result<AlfRoot> {
        let start = self.initial_guess();
        let mut y = start;
        let mut iterations = 0;
        while iterations < max_iter {
            let g = self.residual(y);
            if g.abs() <= tol {
                return Ok(AlfRoot {
                    root: y,
                    residual: g,
                    newton_iterations: iterations,
                    used_bisection: false,
                });
            }
            iterations += 1;
            let next = y - g / self.slope(y);
            if !next.is_finite() {
                break;
            }
            // stay on the positive half-line
            y = if next > 0.0 { next } else { 0.5 * y };
        }
        self.bisect(start, tol).map(|(root, residual)| AlfRoot {
            root,
            residual,
            newton_iterations: iterations,
            used_bisection: true,
        })
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn bisect(&self, start: f64, tol: f64) -> Result<(f64, f64)> {
        let mut lo = 1e-12;
        let g_lo = self.residual(lo);
        if !(g_lo < 0.0) {
            return Err(Error::Nonconvergence {
                last_iterate: lo,
                residual: g_lo,
            });
        }
        let base = (2.0 * start).max(1.0);
        let mut hi = base;
        let mut j = 0;
        while !(self.residual(hi) > 0.0) {
            j += 1;
            if j > 60 {
                return Err(Error::Nonconvergence {
                    last_iterate: hi,
                    residual: self.residual(hi),
                });
            }
            hi = base * 2f64.powi(j);
        }
        let mut mid = 0.5 * (lo + hi);
        let mut g = self.residual(mid);
        for _ in 0..2000 {
            if g.abs() <= tol {
                return Ok((mid, g));
            }
            if g < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            let next = 0.5 * (lo + hi);
            if next == lo || next == hi {
                break;
            }
            mid = next;
            g = self.residual(mid);
        }
        Err(Error::Nonconvergence {
            last_iterate: mid,
            residual: g,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Alf {
    params: CevParams,
    dt: f64,
    tol: f64,
    max_iter: u32,
    outer_exp: f64,
}

impl Alf {
    pub fn new(p: &CevParams, config: &SchemeConfig, dt: f64) -> Self {
        Self {
            params: *p,
            dt,
            tol: config.newton_tol,
            max_iter: config.newton_max_iter,
            outer_exp: 1.0 / (1.0 - p.q),
        }
    }
}

impl Kernel for Alf {
    #[inline]
    fn advance(&self, y: f64, dw: f64) -> Result<Advance> {
        let root = AlfEquation::new(&self.params, y, self.dt, dw).solve(self.tol, self.max_iter)?;
        Ok(Advance::plain(root.root.powf(self.outer_exp)))
    }
}

/// Balanced implicit method with weights `c0 = k2`, `c1 = k3 y^(q-1)`.
#[derive(Debug, Clone, Copy)]
pub struct Bim {
    k3: f64,
    level: f64,
    damping: f64,
    q_minus_one: f64,
}

impl Bim {
    pub fn new(p: &CevParams, dt: f64) -> Self {
        Self {
            k3: p.k3,
            level: p.k1 * dt,
            damping: 1.0 + p.k2 * dt,
            q_minus_one: p.q - 1.0,
        }
    }

    #[inline]
    pub fn step(&self, y: f64, dw: f64) -> Advance {
        let weight = if y > 0.0 { y.powf(self.q_minus_one) } else { 0.0 };
        let abs_dw = dw.abs();
        let num = y + self.level + self.k3 * (y * weight) * (dw + abs_dw);
        let den = self.damping + self.k3 * weight * abs_dw;
        Advance::plain(num / den)
    }
}

/// Balanced Milstein method with relaxation `Theta`.
#[derive(Debug, Clone, Copy)]
pub struct Bmm {
    k1: f64,
    k2_relaxed: f64,
    k3: f64,
    dt: f64,
    ito: f64,
    damping: f64,
    q_minus_one: f64,
}

impl Bmm {
    pub fn new(p: &CevParams, big_theta: f64, dt: f64) -> Self {
        Self {
            k1: p.k1,
            k2_relaxed: (big_theta - 1.0) * p.k2,
            k3: p.k3,
            dt,
            ito: p.q * p.k3 * p.k3 / 2.0,
            damping: 1.0 + big_theta * p.k2 * dt,
            q_minus_one: p.q - 1.0,
        }
    }

    #[inline]
    pub fn step(&self, y: f64, dw: f64) -> Advance {
        // |y|^(q-1), with the y = 0 weight defined as 0
        let w = if y != 0.0 { y.abs().powf(self.q_minus_one) } else { 0.0 };
        let num = y
            + (self.k1 + self.k2_relaxed * y) * self.dt
            + self.k3 * (y * w) * dw
            + self.ito * (y * w * w) * (dw * dw);
        let den = self.damping + self.ito * (w * w) * self.dt;
        Advance::plain(num / den)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Em {
    k1: f64,
    k2: f64,
    k3: f64,
    q: f64,
    dt: f64,
}

impl Em {
    pub fn new(p: &CevParams, dt: f64) -> Self {
        Self {
            k1: p.k1,
            k2: p.k2,
            k3: p.k3,
            q: p.q,
            dt,
        }
    }

    #[inline]
    fn value(&self, y: f64, dw: f64) -> f64 {
        y + (self.k1 - self.k2 * y) * self.dt + self.k3 * signed_pow(y, self.q) * dw
    }

    #[inline]
    pub fn step(&self, y: f64, dw: f64) -> Advance {
        Advance::plain(self.value(y, dw))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Milstein {
    em: Em,
    ito: f64,
    corr_exp: f64,
}

impl Milstein {
    pub fn new(p: &CevParams, dt: f64) -> Self {
        Self {
            em: Em::new(p, dt),
            ito: 0.5 * p.k3 * p.k3 * p.q,
            corr_exp: 2.0 * p.q - 1.0,
        }
    }

    #[inline]
    pub fn step(&self, y: f64, dw: f64) -> Advance {
        let em = self.em.value(y, dw);
        let corr = self.ito * signed_pow(y, self.corr_exp) * (dw * dw - self.em.dt);
        Advance::plain(em + corr)
    }
}

/// A variance scheme bound to one step size.
#[derive(Debug, Clone, Copy)]
pub enum VarianceStepper {
    Sd(Sd),
    Hal(Hal),
    Alf(Alf),
    Bim(Bim),
    Bmm(Bmm),
    Em(Em),
    Mil(Milstein),
}

/// Summary of one simulated path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub terminal: f64,
    /// Minimum over all nodes, the initial value included.
    pub min_state: f64,
    pub negative_encountered: bool,
    pub clamp_count: u64,
    /// `x0, x1, ..., xN` when requested.
    pub nodes: Option<Vec<f64>>,
}

impl VarianceStepper {
    pub fn new(params: &CevParams, config: &SchemeConfig, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", format!("{dt} is not positive")));
        }
        Ok(match config.scheme {
            SchemeId::Sd => Self::Sd(Sd::new(params, config.theta, dt)),
            SchemeId::Hal => Self::Hal(Hal::new(params, dt)),
            SchemeId::Alf => Self::Alf(Alf::new(params, config, dt)),
            SchemeId::Bim => Self::Bim(Bim::new(params, dt)),
            SchemeId::Bmm => Self::Bmm(Bmm::new(params, config.big_theta, dt)),
            SchemeId::Em => Self::Em(Em::new(params, dt)),
            SchemeId::Mil => Self::Mil(Milstein::new(params, dt)),
            other => return Err(Error::WrongScheme(other)),
        })
    }

    #[inline]
    pub fn advance(&self, y: f64, dw: f64) -> Result<Advance> {
        match self {
            Self::Sd(k) => k.advance(y, dw),
            Self::Hal(k) => k.advance(y, dw),
            Self::Alf(k) => k.advance(y, dw),
            Self::Bim(k) => k.advance(y, dw),
            Self::Bmm(k) => k.advance(y, dw),
            Self::Em(k) => k.advance(y, dw),
            Self::Mil(k) => k.advance(y, dw),
        }
    }

    /// Iterate from `x0` over `increments`.
    pub fn run(&self, x0: f64, increments: &[f64], record_nodes: bool) -> Result<PathResult> {
        match self {
            Self::Sd(k) => drive(k, x0, increments, record_nodes),
            Self::Hal(k) => drive(k, x0, increments, record_nodes),
            Self::Alf(k) => drive(k, x0, increments, record_nodes),
            Self::Bim(k) => drive(k, x0, increments, record_nodes),
            Self::Bmm(k) => drive(k, x0, increments, record_nodes),
            Self::Em(k) => drive(k, x0, increments, record_nodes),
            Self::Mil(k) => drive(k, x0, increments, record_nodes),
        }
    }

    /// Terminal value only; the hot loop of the Monte Carlo harness.
    pub fn terminal(&self, x0: f64, increments: &[f64]) -> Result<f64> {
        fn go<K: Kernel>(k: &K, mut y: f64, dws: &[f64]) -> Result<f64> {
            for &dw in dws {
                y = k.advance(y, dw)?.value;
            }
            Ok(y)
        }
        match self {
            Self::Sd(k) => go(k, x0, increments),
            Self::Hal(k) => go(k, x0, increments),
            Self::Alf(k) => go(k, x0, increments),
            Self::Bim(k) => go(k, x0, increments),
            Self::Bmm(k) => go(k, x0, increments),
            Self::Em(k) => go(k, x0, increments),
            Self::Mil(k) => go(k, x0, increments),
        }
    }
}

fn drive<K: Kernel>(k: &K, x0: f64, increments: &[f64], record_nodes: bool) -> Result<PathResult> {
    let mut nodes = record_nodes.then(|| {
        let mut v = Vec::with_capacity(increments.len() + 1);
        v.push(x0);
        v
    });
    let mut y = x0;
    let mut min_state = x0;
    let mut clamp_count = 0u64;
    for &dw in increments {
        let step = k.advance(y, dw)?;
        y = step.value;
        clamp_count += step.clamped as u64;
        min_state = min_state.min(y);
        if let Some(n) = nodes.as_mut() {
            n.push(y);
        }
    }
    Ok(PathResult {
        terminal: y,
        min_state,
        negative_encountered: min_state < 0.0,
        clamp_count,
        nodes,
    })
}

/// Run the configured scheme over a whole lattice, starting from `x0`.
pub fn simulate_path(
    params: &CevParams,
    config: &SchemeConfig,
    increments: &BrownianLattice,
    record_nodes: bool,
) -> Result<PathResult> {
    VarianceStepper::new(params, config, increments.dt())?.run(
        params.x0,
        increments.increments(),
        record_nodes,
    )
}

pub fn sd_step(input: &StepInput) -> f64 {
    Sd::new(input.params, input.config.theta, input.dt).step(input.y, input.dw).value
}

pub fn hal_step(input: &StepInput) -> f64 {
    Hal::new(input.params, input.dt).step(input.y, input.dw).value
}

pub fn alf_step(input: &StepInput) -> Result<f64> {
    Alf::new(input.params, input.config, input.dt)
        .advance(input.y, input.dw)
        .map(|a| a.value)
}

pub fn bim_step(input: &StepInput) -> f64 {
    Bim::new(input.params, input.dt).step(input.y, input.dw).value
}

pub fn bmm_step(input: &StepInput) -> f64 {
    Bmm::new(input.params, input.config.big_theta, input.dt).step(input.y, input.dw).value
}

pub fn em_step(input: &StepInput) -> f64 {
    Em::new(input.params, input.dt).step(input.y, input.dw).value
}

pub fn milstein_step(input: &StepInput) -> f64 {
    Milstein::new(input.params, input.dt).step(input.y, input.dw).value
}
