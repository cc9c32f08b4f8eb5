//! Model parameters, scheme selection, and the applicability conditions of
//! each scheme.
//!
//! Construction validates the type invariants; [`validate`] then evaluates
//! the step-size and coefficient conditions that each scheme needs for its
//! positivity and convergence guarantees. Validation itself never fails.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Coefficients and initial data of `dx = (k1 - k2 x) dt + k3 x^q dW`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CevParams {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub q: f64,
    pub x0: f64,
    pub horizon: f64,
}

impl CevParams {
    pub fn new(k1: f64, k2: f64, k3: f64, q: f64, x0: f64, horizon: f64) -> Result<Self> {
        positive("k1", k1)?;
        positive("k2", k2)?;
        positive("k3", k3)?;
        if !(q > 0.5 && q < 1.0) {
            return Err(Error::invalid("q", format!("{q} is outside (1/2, 1)")));
        }
        if !(x0 >= 0.0 && x0.is_finite()) {
            return Err(Error::invalid("x0", format!("{x0} is not a finite nonnegative value")));
        }
        positive("T", horizon)?;
        Ok(Self {
            k1,
            k2,
            k3,
            q,
            x0,
            horizon,
        })
    }

    /// The benchmark set `(x0, k1, k2, k3, q, T) = (1/16, 1/16, 1, 0.4, 3/4, 1)`.
    pub fn benchmark() -> Self {
        Self {
            k1: 1.0 / 16.0,
            k2: 1.0,
            k3: 0.4,
            q: 0.75,
            x0: 1.0 / 16.0,
            horizon: 1.0,
        }
    }

    /// Long-run level `k1 / k2`.
    pub fn steady_state(&self) -> f64 {
        self.k1 / self.k2
    }

    pub fn with_k3(self, k3: f64) -> Result<Self> {
        Self::new(self.k1, self.k2, k3, self.q, self.x0, self.horizon)
    }

    pub fn with_q(self, q: f64) -> Result<Self> {
        Self::new(self.k1, self.k2, self.k3, q, self.x0, self.horizon)
    }

    pub fn with_x0(self, x0: f64) -> Result<Self> {
        Self::new(self.k1, self.k2, self.k3, self.q, x0, self.horizon)
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{v} is not a finite positive value")))
    }
}

/// Every integrator known to the crate. The first seven advance the
/// variance process, the last two the log-price of the asset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeId {
    Sd,
    Hal,
    Alf,
    Bim,
    Bmm,
    Em,
    Mil,
    LogEuler,
    Ijk,
}

impl SchemeId {
    pub const VARIANCE: [SchemeId; 7] = [
        SchemeId::Sd,
        SchemeId::Hal,
        SchemeId::Alf,
        SchemeId::Bim,
        SchemeId::Bmm,
        SchemeId::Em,
        SchemeId::Mil,
    ];

    pub const ASSET: [SchemeId; 2] = [SchemeId::LogEuler, SchemeId::Ijk];

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::Sd => "SD",
            SchemeId::Hal => "HAL",
            SchemeId::Alf => "ALF",
            SchemeId::Bim => "BIM",
            SchemeId::Bmm => "BMM",
            SchemeId::Em => "EM",
            SchemeId::Mil => "MIL",
            SchemeId::LogEuler => "LOGEULER",
            SchemeId::Ijk => "IJK",
        }
    }

    pub fn is_variance(self) -> bool {
        !self.is_asset()
    }

    pub fn is_asset(self) -> bool {
        matches!(self, SchemeId::LogEuler | SchemeId::Ijk)
    }

    /// True for the variance schemes that map nonnegative states to
    /// nonnegative states with probability one.
    pub fn preserves_positivity(self) -> bool {
        matches!(
            self,
            SchemeId::Sd | SchemeId::Hal | SchemeId::Alf | SchemeId::Bim | SchemeId::Bmm
        )
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        let id = match upper.as_str() {
            "SD" => SchemeId::Sd,
            "HAL" => SchemeId::Hal,
            "ALF" => SchemeId::Alf,
            "BIM" => SchemeId::Bim,
            "BMM" => SchemeId::Bmm,
            "EM" => SchemeId::Em,
            "MIL" | "MILSTEIN" => SchemeId::Mil,
            "LOGEULER" | "LOG-EULER" | "LOG_EULER" => SchemeId::LogEuler,
            "IJK" => SchemeId::Ijk,
            _ => return Err(Error::invalid("scheme", format!("unknown scheme `{s}`"))),
        };
        Ok(id)
    }
}

/// Scheme selector plus the knobs of the schemes that have any.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub scheme: SchemeId,
    /// Implicitness of SD, 0 explicit .. 1 fully implicit.
    pub theta: f64,
    /// Relaxation of BMM.
    pub big_theta: f64,
    pub newton_tol: f64,
    pub newton_max_iter: u32,
}

impl SchemeConfig {
    pub const DEFAULT_THETA: f64 = 1.0;
    pub const DEFAULT_BIG_THETA: f64 = 0.5;
    pub const DEFAULT_NEWTON_TOL: f64 = 1e-12;
    pub const DEFAULT_NEWTON_MAX_ITER: u32 = 100;

    pub fn new(
        scheme: SchemeId,
        theta: f64,
        big_theta: f64,
        newton_tol: f64,
        newton_max_iter: u32,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::invalid("theta", format!("{theta} is outside [0, 1]")));
        }
        if !(0.0..=1.0).contains(&big_theta) {
            return Err(Error::invalid("big_theta", format!("{big_theta} is outside [0, 1]")));
        }
        positive("newton_tol", newton_tol)?;
        if newton_max_iter == 0 {
            return Err(Error::invalid("newton_max_iter", "must be at least 1"));
        }
        Ok(Self {
            scheme,
            theta,
            big_theta,
            newton_tol,
            newton_max_iter,
        })
    }

    pub fn of(scheme: SchemeId) -> Self {
        Self {
            scheme,
            theta: Self::DEFAULT_THETA,
            big_theta: Self::DEFAULT_BIG_THETA,
            newton_tol: Self::DEFAULT_NEWTON_TOL,
            newton_max_iter: Self::DEFAULT_NEWTON_MAX_ITER,
        }
    }

    pub fn with_theta(self, theta: f64) -> Result<Self> {
        Self::new(self.scheme, theta, self.big_theta, self.newton_tol, self.newton_max_iter)
    }

    pub fn with_big_theta(self, big_theta: f64) -> Result<Self> {
        Self::new(self.scheme, self.theta, big_theta, self.newton_tol, self.newton_max_iter)
    }

    pub fn with_scheme(self, scheme: SchemeId) -> Self {
        Self { scheme, ..self }
    }
}

/// Uniform partition of `[0, T]` into `n_steps` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n_steps: usize,
    pub dt: f64,
    pub horizon: f64,
}

impl GridSpec {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        positive("T", horizon)?;
        if n_steps == 0 {
            return Err(Error::invalid("n_steps", "must be at least 1"));
        }
        Ok(Self {
            n_steps,
            dt: horizon / n_steps as f64,
            horizon,
        })
    }

    /// `2^level` steps.
    pub fn dyadic(horizon: f64, level: u32) -> Result<Self> {
        let n = 1usize
            .checked_shl(level)
            .filter(|_| level < usize::BITS)
            .ok_or(Error::Capacity { level })?;
        Self::new(horizon, n)
    }

    /// Grid with `N = round(T / dt)` steps, for step sizes that do not divide
    /// the horizon evenly.
    pub fn nearest(horizon: f64, dt: f64) -> Result<Self> {
        positive("dt", dt)?;
        let n = (horizon / dt).round();
        if !(n >= 1.0 && n <= (1u64 << 40) as f64) {
            return Err(Error::invalid("dt", format!("{dt} gives an unusable step count")));
        }
        Self::new(horizon, n as usize)
    }

    pub fn node_time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }
}

/// Outcome of the applicability checks at one step size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidityReport {
    pub scheme: SchemeId,
    /// `k3^2 / (1 + k2 theta dt) <= 4 min(k1, k2)`
    pub assumption_a_coeff: bool,
    /// `dt (2 - theta) < 1 / k2`
    pub assumption_a_step: bool,
    /// `k3^2 <= (2 / q) k1`
    pub hal_coeff: bool,
    /// `dt <= 2 / (2 k2 + q k3^2)`
    pub hal_step: bool,
    /// `dt < (2q - 1) / (2 q k2 (1 - Theta))`, vacuous when `Theta = 1`
    pub bmm_step: bool,
}

impl ValidityReport {
    pub const CONDITIONS: [&'static str; 5] = [
        "assumption_a_coeff",
        "assumption_a_step",
        "hal_coeff",
        "hal_step",
        "bmm_step",
    ];

    pub fn flags(&self) -> [bool; 5] {
        [
            self.assumption_a_coeff,
            self.assumption_a_step,
            self.hal_coeff,
            self.hal_step,
            self.bmm_step,
        ]
    }

    /// Names of the conditions that matter for `scheme`.
    pub fn relevant(scheme: SchemeId) -> &'static [&'static str] {
        match scheme {
            SchemeId::Sd => &["assumption_a_coeff", "assumption_a_step"],
            SchemeId::Hal => &["hal_coeff", "hal_step"],
            SchemeId::Bmm => &["bmm_step"],
            _ => &[],
        }
    }

    pub fn verdict(&self) -> bool {
        self.failed().is_empty()
    }

    /// Relevant conditions that do not hold.
    pub fn failed(&self) -> Vec<&'static str> {
        let flags = self.flags();
        Self::relevant(self.scheme)
            .iter()
            .copied()
            .filter(|name| {
                let idx = Self::CONDITIONS.iter().position(|c| c == name).unwrap();
                !flags[idx]
            })
            .collect()
    }

    pub fn require(&self, dt: f64) -> Result<()> {
        let failed = self.failed();
        if failed.is_empty() {
            Ok(())
        } else {
            Err(Error::NotApplicable {
                scheme: self.scheme,
                dt,
                failed: failed.join(", "),
            })
        }
    }
}

pub fn validate(params: &CevParams, config: &SchemeConfig, grid: &GridSpec) -> ValidityReport {
    let CevParams { k1, k2, k3, q, .. } = *params;
    let dt = grid.dt;
    let theta = config.theta;
    let k3_sq = k3 * k3;

    let bmm_step = if config.big_theta >= 1.0 {
        true
    } else {
        dt < (2.0 * q - 1.0) / (2.0 * q * k2 * (1.0 - config.big_theta))
    };

    ValidityReport {
        scheme: config.scheme,
        assumption_a_coeff: k3_sq / (1.0 + k2 * theta * dt) <= 4.0 * k1.min(k2),
        assumption_a_step: dt * (2.0 - theta) < 1.0 / k2,
        hal_coeff: k3_sq <= (2.0 / q) * k1,
        hal_step: dt <= 2.0 / (2.0 * k2 + q * k3_sq),
        bmm_step,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(level: u32) -> GridSpec {
        GridSpec::dyadic(1.0, level).unwrap()
    }

    #[test]
    fn benchmark_params_pass_everything() {
        let p = CevParams::benchmark();
        let cfg = SchemeConfig::of(SchemeId::Sd);
        let r = validate(&p, &cfg, &grid(5));
        assert_eq!(r.flags(), [true; 5]);
        for s in SchemeId::VARIANCE {
            assert!(validate(&p, &cfg.with_scheme(s), &grid(5)).verdict(), "{s}");
        }
    }

    #[test]
    fn large_vol_of_vol_breaks_assumption_a() {
        let p = CevParams::benchmark().with_k3(1.1).unwrap();
        let r = validate(&p, &SchemeConfig::of(SchemeId::Sd), &grid(5));
        assert!(!r.assumption_a_coeff);
        assert!(!r.verdict());
        assert_eq!(r.failed(), vec!["assumption_a_coeff"]);
        // the BIM row does not care
        let r = validate(&p, &SchemeConfig::of(SchemeId::Bim), &grid(5));
        assert!(r.verdict());
    }

    #[test]
    fn bmm_has_no_restriction_at_full_relaxation() {
        let p = CevParams::benchmark();
        let cfg = SchemeConfig::of(SchemeId::Bmm).with_big_theta(1.0).unwrap();
        for n in [1usize, 2, 3, 1000] {
            let g = GridSpec::new(1000.0, n).unwrap();
            assert!(validate(&p, &cfg, &g).bmm_step);
        }
        let cfg = cfg.with_big_theta(0.5).unwrap();
        // bound is (2q-1)/(2q k2 (1-Theta)) = 2/3
        assert!(validate(&p, &cfg, &GridSpec::new(0.66, 1).unwrap()).bmm_step);
        assert!(!validate(&p, &cfg, &GridSpec::new(0.67, 1).unwrap()).bmm_step);
    }

    #[test]
    fn step_condition_is_strict() {
        let p = CevParams::new(1.0, 1.0, 0.1, 0.75, 1.0, 1.0).unwrap();
        let cfg = SchemeConfig::of(SchemeId::Sd).with_theta(0.0).unwrap();
        // dt (2 - 0) < 1 fails at dt = 1/2 exactly
        let r = validate(&p, &cfg, &GridSpec::new(1.0, 2).unwrap());
        assert!(!r.assumption_a_step);
        let r = validate(&p, &cfg, &GridSpec::new(1.0, 3).unwrap());
        assert!(r.assumption_a_step);
    }

    #[test]
    fn constructors_reject_bad_values() {
        assert!(CevParams::new(0.0, 1.0, 1.0, 0.75, 0.1, 1.0).is_err());
        assert!(CevParams::new(1.0, 1.0, 1.0, 0.5, 0.1, 1.0).is_err());
        assert!(CevParams::new(1.0, 1.0, 1.0, 1.0, 0.1, 1.0).is_err());
        assert!(CevParams::new(1.0, 1.0, 1.0, 0.75, -0.1, 1.0).is_err());
        assert!(CevParams::new(1.0, 1.0, 1.0, 0.75, 0.1, 0.0).is_err());
        assert!(SchemeConfig::of(SchemeId::Sd).with_theta(1.5).is_err());
        assert!(SchemeConfig::of(SchemeId::Sd).with_big_theta(-0.1).is_err());
        assert!(GridSpec::new(1.0, 0).is_err());
        assert!(matches!(
            GridSpec::dyadic(1.0, 200),
            Err(Error::Capacity { level: 200 })
        ));
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in SchemeId::VARIANCE.iter().chain(SchemeId::ASSET.iter()) {
            assert_eq!(s.name().parse::<SchemeId>().unwrap(), *s);
        }
        assert_eq!("log-euler".parse::<SchemeId>().unwrap(), SchemeId::LogEuler);
        assert!("RK4".parse::<SchemeId>().is_err());
    }

    #[test]
    fn dyadic_grid_is_exact() {
        for level in 0..20 {
            let g = grid(level);
            assert_eq!(g.dt * g.n_steps as f64, 1.0);
        }
        let g = GridSpec::nearest(1.0, 1e-3).unwrap();
        assert_eq!(g.n_steps, 1000);
    }

    proptest! {
        #[test]
        fn validate_is_pure(k3 in 0.01f64..2.0, theta in 0.0f64..=1.0, n in 1usize..5000) {
            let p = CevParams::benchmark().with_k3(k3).unwrap();
            let cfg = SchemeConfig::of(SchemeId::Sd).with_theta(theta).unwrap();
            let g = GridSpec::new(1.0, n).unwrap();
            prop_assert_eq!(validate(&p, &cfg, &g), validate(&p, &cfg, &g));
        }

        #[test]
        fn small_vol_of_vol_is_fine_for_every_step(
            k1 in 0.01f64..2.0, k2 in 0.01f64..2.0, frac in 0.0f64..=1.0,
            theta in 0.0f64..=1.0, dt in 1e-6f64..10.0,
        ) {
            let k3 = (4.0 * k1.min(k2) * frac).sqrt().max(1e-9);
            let p = CevParams::new(k1, k2, k3, 0.75, 0.1, 10.0).unwrap();
            let cfg = SchemeConfig::of(SchemeId::Sd).with_theta(theta).unwrap();
            let g = GridSpec { n_steps: 1, dt, horizon: dt };
            prop_assert!(validate(&p, &cfg, &g).assumption_a_coeff);
        }

        #[test]
        fn step_condition_is_monotone(theta in 0.0f64..=1.0, dt in 1e-6f64..2.0, shrink in 0.0f64..1.0) {
            let p = CevParams::benchmark();
            let cfg = SchemeConfig::of(SchemeId::Sd).with_theta(theta).unwrap();
            let g = GridSpec { n_steps: 1, dt, horizon: dt };
            let g2 = GridSpec { n_steps: 1, dt: dt * shrink, horizon: dt };
            if validate(&p, &cfg, &g).assumption_a_step {
                prop_assert!(validate(&p, &cfg, &g2).assumption_a_step);
            }
        }
    }
}
