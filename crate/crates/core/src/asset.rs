//! Log-price integrators for the stochastic volatility model
//!
//! ```text
//! dS = mu S dt + V^p S dW,   dV = (k1 - k2 V) dt + k3 V^q dW~,   <dW, dW~> = rho dt
//! ```
//!
//! The price is carried as `ln S` and exponentiated once at the end.

use crate::error::{Error, Result};
use crate::model::{CevParams, SchemeId};
use crate::paths::BrownianLattice;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvParams {
    pub cev: CevParams,
    pub mu: f64,
    pub rho: f64,
    pub s0: f64,
    /// 1/2 when `V` is a variance, 1 when it is a volatility.
    pub p: f64,
}

impl SvParams {
    pub fn new(cev: CevParams, mu: f64, rho: f64, s0: f64, p: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::invalid("mu", format!("{mu} is not finite")));
        }
        if !(-1.0..=1.0).contains(&rho) {
            return Err(Error::invalid("rho", format!("{rho} is outside [-1, 1]")));
        }
        if !(s0 > 0.0 && s0.is_finite()) {
            return Err(Error::invalid("s0", format!("{s0} is not positive")));
        }
        if p != 0.5 && p != 1.0 {
            return Err(Error::invalid("p", format!("{p} is neither 1/2 nor 1")));
        }
        Ok(Self {
            cev,
            mu,
            rho,
            s0,
            p,
        })
    }

    /// `S0 = 100`, `mu = 0.05`, `p = 1/2` on top of the benchmark variance.
    pub fn benchmark(rho: f64) -> Result<Self> {
        Self::new(CevParams::benchmark(), 0.05, rho, 100.0, 0.5)
    }

    pub fn with_rho(self, rho: f64) -> Result<Self> {
        Self::new(self.cev, self.mu, rho, self.s0, self.p)
    }

    #[inline]
    fn vol(&self, v: f64) -> f64 {
        if self.p == 0.5 {
            v.sqrt()
        } else {
            v.powf(self.p)
        }
    }

    #[inline]
    fn var(&self, v: f64) -> f64 {
        if self.p == 0.5 {
            v
        } else {
            v.powf(2.0 * self.p)
        }
    }
}

/// Euler step for `ln S`.
#[inline]
pub fn log_euler_step(ln_s: f64, v: f64, dt: f64, dw_asset: f64, sv: &SvParams) -> f64 {
    ln_s + sv.mu * dt - (0.5 * sv.var(v)) * dt + sv.vol(v) * dw_asset
}

/// IJK step: trapezoidal drift, decorrelated trapezoidal diffusion and a
/// Milstein correction on the part of the noise shared with the variance.
/// `v_next` is the variance already advanced to the end of the step.
#[inline]
pub fn ijk_step(
    ln_s: f64,
    v: f64,
    v_next: f64,
    dt: f64,
    dw_asset: f64,
    dw_var: f64,
    sv: &SvParams,
) -> f64 {
    let rho = sv.rho;
    let vol = sv.vol(v);
    let vol_next = sv.vol(v_next);
    let cev = &sv.cev;
    ln_s + sv.mu * dt - (0.25 * (sv.var(v) + sv.var(v_next))) * dt
        + rho * vol * dw_var
        + (0.5 * (vol + vol_next)) * (dw_asset - rho * dw_var)
        + 0.5 * rho * sv.p * cev.k3 * v.powf(cev.q + sv.p - 1.0) * (dw_var * dw_var - dt)
}

/// Terminal price along one variance path. `variance_nodes` holds `V` at
/// every node including `t = 0`; `w_asset` is the (already correlated) asset
/// driver and `w_var` the variance driver.
pub fn simulate_asset(
    sv: &SvParams,
    variance_nodes: &[f64],
    w_asset: &BrownianLattice,
    w_var: &BrownianLattice,
    scheme: SchemeId,
) -> Result<f64> {
    let steps = w_asset.n_steps();
    if w_var.n_steps() != steps || variance_nodes.len() != steps + 1 {
        return Err(Error::Domain(format!(
            "need {} variance nodes and two lattices of {} steps, got {}, {} and {}",
            steps + 1,
            steps,
            variance_nodes.len(),
            w_asset.n_steps(),
            w_var.n_steps()
        )));
    }
    log_price(
        sv,
        variance_nodes,
        w_asset.increments(),
        w_var.increments(),
        w_asset.dt(),
        scheme,
    )
    .map(f64::exp)
}

/// Unchecked inner loop of [`simulate_asset`], returning `ln S_T`.
pub(crate) fn log_price(
    sv: &SvParams,
    v: &[f64],
    dw_asset: &[f64],
    dw_var: &[f64],
    dt: f64,
    scheme: SchemeId,
) -> Result<f64> {
    let mut ln_s = sv.s0.ln();
    match scheme {
        SchemeId::LogEuler => {
            for (n, &dw) in dw_asset.iter().enumerate() {
                ln_s = log_euler_step(ln_s, v[n], dt, dw, sv);
            }
        }
        SchemeId::Ijk => {
            for (n, (&dw, &dwv)) in dw_asset.iter().zip(dw_var).enumerate() {
                ln_s = ijk_step(ln_s, v[n], v[n + 1], dt, dw, dwv, sv);
            }
        }
        other => return Err(Error::WrongScheme(other)),
    }
    Ok(ln_s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const DT5: f64 = 1.0 / 32.0;
    const LN100: f64 = 4.605_170_185_988_092;

    fn sv(rho: f64) -> SvParams {
        SvParams::benchmark(rho).unwrap()
    }

    #[test]
    fn log_euler_reference_values() {
        let s = sv(0.0);
        assert_eq!(log_euler_step(1.5, 0.0, DT5, 0.3, &s), 1.5 + 0.05 * DT5);
        let v = log_euler_step(LN100, 1.0 / 16.0, DT5, 0.0, &s);
        assert!((v - 4.605756123).abs() < 1e-9, "{v}");
        let v = log_euler_step(LN100, 1.0 / 16.0, DT5, 0.1, &s);
        assert!((v - 4.630756123).abs() < 1e-9, "{v}");
    }

    #[test]
    fn ijk_reference_values() {
        let s = sv(0.0);
        let v = ijk_step(LN100, 1.0 / 16.0, 1.0 / 16.0, DT5, 0.1, 0.7, &s);
        assert!((v - 4.630756124).abs() < 1e-9, "{v}");

        // no noise, frozen variance: drift and the Milstein compensator remain
        let s = sv(-0.4);
        let vv: f64 = 0.09;
        let v = ijk_step(LN100, vv, vv, DT5, 0.0, 0.0, &s);
        let expected = LN100 + 0.05 * DT5 - 0.5 * vv * DT5
            - 0.5 * (-0.4) * 0.5 * 0.4 * vv.powf(0.25) * DT5;
        assert!((v - expected).abs() < 1e-14, "{v} vs {expected}");
    }

    #[test]
    fn pure_drift_path() {
        let s = sv(-0.8);
        let w = BrownianLattice::zeros(1.0, 64).unwrap();
        let nodes = vec![0.0; 65];
        for scheme in SchemeId::ASSET {
            let st = simulate_asset(&s, &nodes, &w, &w, scheme).unwrap();
            assert!((st - 100.0 * 0.05f64.exp()).abs() < 1e-10, "{scheme}: {st}");
        }
    }

    #[test]
    fn one_step_matches_step_map() {
        let s = sv(-0.4);
        let wa = BrownianLattice::from_increments(DT5, vec![0.05]).unwrap();
        let wv = BrownianLattice::from_increments(DT5, vec![-0.02]).unwrap();
        let nodes = [0.0625, 0.07];
        let st = simulate_asset(&s, &nodes, &wa, &wv, SchemeId::Ijk).unwrap();
        let direct = ijk_step(100f64.ln(), 0.0625, 0.07, DT5, 0.05, -0.02, &s).exp();
        assert_eq!(st, direct);
        let st = simulate_asset(&s, &nodes, &wa, &wv, SchemeId::LogEuler).unwrap();
        assert_eq!(st, log_euler_step(100f64.ln(), 0.0625, DT5, 0.05, &s).exp());
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let s = sv(0.0);
        let w = BrownianLattice::zeros(1.0, 4).unwrap();
        assert!(matches!(
            simulate_asset(&s, &[0.0; 4], &w, &w, SchemeId::Ijk),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            simulate_asset(&s, &[0.0; 5], &w, &w, SchemeId::Sd),
            Err(Error::WrongScheme(SchemeId::Sd))
        ));
        assert!(SvParams::benchmark(1.2).is_err());
        assert!(SvParams::new(CevParams::benchmark(), 0.0, 0.0, 100.0, 0.7).is_err());
    }

    proptest! {
        #[test]
        fn ijk_without_correlation_is_log_euler(
            ln_s in -5.0f64..10.0, v in 0.0f64..2.0, level in 0u32..16, dw in -1.0f64..1.0, dwv in -1.0f64..1.0,
            p_is_half in any::<bool>(),
        ) {
            let mut s = sv(0.0);
            s.p = if p_is_half { 0.5 } else { 1.0 };
            let dt = 1.0 / (1u64 << level) as f64;
            prop_assert_eq!(
                ijk_step(ln_s, v, v, dt, dw, dwv, &s).to_bits(),
                log_euler_step(ln_s, v, dt, dw, &s).to_bits()
            );
        }

        #[test]
        fn steps_are_shift_equivariant(
            ln_s in -5.0f64..10.0, c in -5.0f64..5.0, v in 0.0f64..1.0, vn in 0.0f64..1.0,
            dw in -0.5f64..0.5, dwv in -0.5f64..0.5, rho in -1.0f64..=1.0,
        ) {
            let s = sv(rho);
            let a = ijk_step(ln_s + c, v, vn, DT5, dw, dwv, &s);
            let b = ijk_step(ln_s, v, vn, DT5, dw, dwv, &s) + c;
            prop_assert!((a - b).abs() <= 1e-13);
            let a = log_euler_step(ln_s + c, v, DT5, dw, &s);
            let b = log_euler_step(ln_s, v, DT5, dw, &s) + c;
            prop_assert!((a - b).abs() <= 1e-13);
        }
    }
}
