//! Reference tables and independent oracles for the acceptance run in
//! `tests/acceptance.rs`.
//!
//! The oracles deliberately avoid the library's own kernels: each one is
//! written straight from the defining formula.

/// Coarse levels of the benchmark tables, `dt = 2^-level`.
pub const LEVELS: [u32; 5] = [5, 7, 9, 11, 13];
pub const REF_LEVEL: u32 = 14;

/// Benchmark strong errors per level, columns SD (theta = 1), HAL, BIM and
/// BMM (Theta = 1/2).
pub const STRONG_ERRORS: [(&str, [f64; 5]); 4] = [
    (
        "SD",
        [0.0351607273610989, 0.0350820054172969, 0.0345654286067145, 0.0332045173200957, 0.0250782316352445],
    ),
    (
        "HAL",
        [0.0356800652730259, 0.035033855267215, 0.0351090011639902, 0.0337092293915926, 0.0249779540239864],
    ),
    (
        "BIM",
        [0.0332754182024868, 0.0335414964013289, 0.0329881367906935, 0.0317244587795127, 0.0249983526384181],
    ),
    (
        "BMM",
        [0.0358194304596254, 0.035736599920736, 0.0351924591356631, 0.0337311936077772, 0.025291682868944],
    ),
];

pub const STRONG_ERROR_TOLERANCE: f64 = 0.20;

pub const SD_ORDER_FINEST3: f64 = 0.116;
pub const SD_ORDER_FINEST3_BAND: (f64, f64) = (0.05, 0.20);
pub const SD_ORDER_ALL: f64 = 0.053;
pub const SD_ORDER_ALL_BAND: (f64, f64) = (0.02, 0.10);

/// Distances at `dt = 1e-3`.
pub const DISTANCE_DT: f64 = 1e-3;
pub const DISTANCE_SD_HAL: f64 = 0.000157661207152358;
pub const DISTANCE_SD_ALF: f64 = 0.0286630459661306;
pub const DISTANCE_FACTOR: f64 = 2.0;

/// Price errors of the stochastic volatility model: `(rho, log-Euler & SD
/// at 2^-5, IJK & SD per level)`.
pub const SV_ERRORS: [(f64, f64, [f64; 5]); 3] = [
    (0.0, 26.901, [26.901, 27.288, 27.297, 25.058, 19.441]),
    (-0.4, 26.382, [26.331, 26.396, 25.909, 24.494, 18.749]),
    (-0.8, 25.552, [25.455, 25.569, 25.137, 23.711, 18.316]),
];
pub const SV_TOLERANCE: f64 = 0.25;
pub const SV_THETA: f64 = 0.5;

pub const ALF_ORACLE_TOLERANCE: f64 = 1e-10;
pub const ALF_CLOSED_FORM_TOLERANCE: f64 = 1e-12;

pub const TIMING_LEVEL: u32 = 9;
pub const TIMING_RATIO: f64 = 50.0;

/// `|measured / expected - 1| <= tol`.
pub fn within_relative(measured: f64, expected: f64, tol: f64) -> bool {
    (measured / expected - 1.0).abs() <= tol
}

/// Distance in units in the last place between two finite doubles of the
/// same sign.
pub fn ulps(a: f64, b: f64) -> u64 {
    (a.to_bits() as i64 - b.to_bits() as i64).unsigned_abs()
}

/// Sum by recursive halving.
pub fn tree_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => tree_sum(&xs[..n / 2]) + tree_sum(&xs[n / 2..]),
    }
}

/// One SD step written out directly.
#[allow(clippy::too_many_arguments)]
pub fn sd_oracle(y: f64, dt: f64, dw: f64, k1: f64, k2: f64, k3: f64, q: f64, theta: f64) -> f64 {
    let a = 1.0 + k2 * theta * dt;
    let y_bar = y * (1.0 - k2 * dt / a) + k1 * dt / a - k3 * k3 * dt / (4.0 * a * a) * y.powf(2.0 * q - 1.0);
    let root = y_bar.max(0.0).sqrt() + k3 / (2.0 * a) * y.powf(q - 0.5) * dw;
    root * root
}

/// Next state of the implicit Lamperti step, found by plain bisection on
///
/// ```text
/// Y = y + (1-q) (k1 Y^(-q/(1-q)) - k2 Y - (q k3^2 / 2) / Y) dt + k3 (1-q) dW
/// ```
///
/// and mapped back through `x = Y^(1/(1-q))`.
#[allow(clippy::too_many_arguments)]
pub fn alf_oracle(y: f64, dt: f64, dw: f64, k1: f64, k2: f64, k3: f64, q: f64) -> f64 {
    let w = 1.0 - q;
    let g = |z: f64| z - (y + w * (k1 * z.powf(-q / w) - k2 * z - q * k3 * k3 / 2.0 / z) * dt + k3 * w * dw);
    let mut lo = f64::MIN_POSITIVE;
    let mut hi = 1.0;
    while g(hi) <= 0.0 {
        hi *= 2.0;
    }
    assert!(g(lo) < 0.0, "no sign change");
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).powf(1.0 / w)
}

/// Positive root of the implicit Lamperti equation when `q = 1/2`, where it
/// reduces to `a Y^2 - b Y - c = 0`.
pub fn alf_square_root_closed_form(y: f64, dt: f64, dw: f64, k1: f64, k2: f64, k3: f64) -> f64 {
    let a = 1.0 + 0.5 * k2 * dt;
    let b = y + 0.5 * k3 * dw;
    let c = 0.5 * (k1 - 0.25 * k3 * k3) * dt;
    let disc = (b * b + 4.0 * a * c).sqrt();
    if b >= 0.0 {
        (b + disc) / (2.0 * a)
    } else {
        2.0 * c / (disc - b)
    }
}

/// Pearson correlation.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Unbiased sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_sum_small() {
        assert_eq!(tree_sum(&[1.0, 2.0, 3.0, 4.0]), 10.0);
        assert_eq!(tree_sum(&[]), 0.0);
    }

    #[test]
    fn sd_oracle_matches_hand_value() {
        let v = sd_oracle(0.0625, 1.0 / 32.0, 0.0, 0.0625, 1.0, 0.4, 0.75, 1.0);
        assert!((v - 0.0622061524).abs() < 5e-11, "{v}");
    }

    #[test]
    fn square_root_closed_form_solves_quadratic() {
        let (y, dt, dw) = (0.05, 0.01, -0.2);
        let z = alf_square_root_closed_form(y, dt, dw, 0.0625, 1.0, 0.4);
        let lhs = z;
        let rhs = y + 0.5 * (0.0625 / z - z - 0.04 / z) * dt + 0.2 * dw;
        assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn bisection_oracle_solves_equation() {
        let x = alf_oracle(0.0625, 1.0 / 32.0, 0.1, 0.0625, 1.0, 0.4, 0.75);
        let z = x.powf(0.25);
        let rhs = 0.0625 + 0.25 * (0.0625 * z.powf(-3.0) - z - 0.06 / z) / 32.0 + 0.1 * 0.1;
        assert!((z - rhs).abs() < 1e-14);
    }
}
