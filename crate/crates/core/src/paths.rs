//! Brownian increments with common-random-number coarsening.
//!
//! Every normal draw is a pure function of `(seed, driver, batch, path,
//! counter)`: the seed and driver select a ChaCha8 key, `(batch, path)`
//! selects the ChaCha stream, and the draw index is the position in that
//! stream. Uniforms are mapped to normals through the inverse normal CDF, so
//! results do not depend on thread count or evaluation order.
//!
//! Coarsening sums adjacent pairs left to right, one level at a time. The
//! coarse increment over `2^k` fine steps is therefore always evaluated with
//! the same balanced summation tree, and any chain of coarsenings that ends
//! at the same level produces bit-identical values.

use std::fmt;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};

/// Identifies one Monte Carlo path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PathKey {
    pub seed: u64,
    pub batch_index: u32,
    pub path_index: u32,
}

impl PathKey {
    pub fn new(seed: u64, batch_index: u32, path_index: u32) -> Self {
        Self {
            seed,
            batch_index,
            path_index,
        }
    }
}

impl fmt::Display for PathKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(seed {}, batch {}, path {})",
            self.seed, self.batch_index, self.path_index
        )
    }
}

/// The two independent Brownian motions attached to every path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Driver {
    /// Drives the variance process.
    Variance,
    /// Orthogonal motion, mixed in to build the correlated asset driver.
    Orthogonal,
}

impl Driver {
    fn tag(self) -> u64 {
        match self {
            Driver::Variance => 0x5641_5249_414e_4345,
            Driver::Orthogonal => 0x4f52_5448_4f47_4f4e,
        }
    }
}

/// Standard normal draws for one `(key, driver)` pair.
pub struct NormalStream {
    rng: ChaCha8Rng,
}

impl NormalStream {
    pub fn new(key: PathKey, driver: Driver) -> Self {
        let mut seed = [0u8; 32];
        seed[..8].copy_from_slice(&key.seed.to_le_bytes());
        seed[8..16].copy_from_slice(&driver.tag().to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(((key.batch_index as u64) << 32) | key.path_index as u64);
        Self { rng }
    }

    /// Uniform on the open interval (0, 1): midpoints of a 2^-52 grid, all
    /// exactly representable, so neither endpoint is ever produced.
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
    }

    #[inline]
    pub fn next_normal(&mut self) -> f64 {
        inverse_normal_cdf(self.next_uniform())
    }
}

#[inline]
pub fn inverse_normal_cdf(u: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
}

/// Brownian increments over a uniform grid on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianLattice {
    horizon: f64,
    increments: Vec<f64>,
}

impl BrownianLattice {
    pub fn from_increments(horizon: f64, increments: Vec<f64>) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid("horizon", format!("{horizon} is not positive")));
        }
        if increments.is_empty() {
            return Err(Error::Domain("a lattice needs at least one increment".into()));
        }
        Ok(Self {
            horizon,
            increments,
        })
    }

    /// All-zero increments: the deterministic skeleton of every scheme.
    pub fn zeros(horizon: f64, n_steps: usize) -> Result<Self> {
        Self::from_increments(horizon, vec![0.0; n_steps])
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.increments.len()
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.increments.len() as f64
    }

    /// `log2(n_steps)` when the step count is a power of two.
    pub fn level(&self) -> Option<u32> {
        let n = self.increments.len();
        n.is_power_of_two().then(|| n.trailing_zeros())
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn into_increments(self) -> Vec<f64> {
        self.increments
    }

    /// `W_T`, summed with the same pairwise tree that coarsening uses.
    pub fn terminal(&self) -> f64 {
        let mut buf = self.increments.clone();
        while buf.len() > 1 {
            if buf.len() % 2 == 1 {
                // odd tail: fold left to right
                return buf.iter().sum();
            }
            let half = buf.len() / 2;
            for i in 0..half {
                buf[i] = buf[2 * i] + buf[2 * i + 1];
            }
            buf.truncate(half);
        }
        buf[0]
    }

    /// Halve the resolution `levels_down` times. Increment `i` of the result
    /// is the sum of fine increments `i 2^d .. (i+1) 2^d`, evaluated as a
    /// balanced tree of left-to-right pairwise sums.
    pub fn coarsen(&self, levels_down: u32) -> Result<Self> {
        let factor = 1usize
            .checked_shl(levels_down)
            .filter(|_| levels_down < usize::BITS)
            .ok_or_else(|| Error::Domain(format!("cannot coarsen by 2^{levels_down}")))?;
        if !self.increments.len().is_multiple_of(factor) {
            return Err(Error::Domain(format!(
                "cannot coarsen {} steps by {levels_down} levels",
                self.increments.len()
            )));
        }
        let mut buf = self.increments.clone();
        for _ in 0..levels_down {
            let half = buf.len() / 2;
            for i in 0..half {
                buf[i] = buf[2 * i] + buf[2 * i + 1];
            }
            buf.truncate(half);
        }
        Ok(Self {
            horizon: self.horizon,
            increments: buf,
        })
    }
}

/// `2^level` increments of the `driver` motion for path `key`.
pub fn generate_increments(
    key: PathKey,
    driver: Driver,
    level: u32,
    horizon: f64,
) -> Result<BrownianLattice> {
    let n = 1usize
        .checked_shl(level)
        .filter(|_| level < usize::BITS)
        .ok_or(Error::Capacity { level })?;
    let mut out = Vec::new();
    out.try_reserve_exact(n).map_err(|_| Error::Capacity { level })?;
    fill_increments(key, driver, n, horizon, &mut out)?;
    Ok(BrownianLattice {
        horizon,
        increments: out,
    })
}

/// Variance-driver increments at `2^level` steps.
pub fn generate_fine_increments(key: PathKey, level: u32, horizon: f64) -> Result<BrownianLattice> {
    generate_increments(key, Driver::Variance, level, horizon)
}

/// Increments on a grid with an arbitrary step count.
pub fn generate_uniform_increments(
    key: PathKey,
    driver: Driver,
    n_steps: usize,
    horizon: f64,
) -> Result<BrownianLattice> {
    let mut out = Vec::new();
    out.try_reserve_exact(n_steps)
        .map_err(|_| Error::Domain(format!("cannot allocate {n_steps} increments")))?;
    fill_increments(key, driver, n_steps, horizon, &mut out)?;
    BrownianLattice::from_increments(horizon, out)
}

fn fill_increments(
    key: PathKey,
    driver: Driver,
    n: usize,
    horizon: f64,
    out: &mut Vec<f64>,
) -> Result<()> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid("horizon", format!("{horizon} is not positive")));
    }
    let sd = (horizon / n as f64).sqrt();
    let mut stream = NormalStream::new(key, driver);
    out.extend((0..n).map(|_| sd * stream.next_normal()));
    Ok(())
}

/// `rho * w_tilde + sqrt(1 - rho^2) * w_perp`, elementwise.
pub fn correlate(
    w_tilde: &BrownianLattice,
    w_perp: &BrownianLattice,
    rho: f64,
) -> Result<BrownianLattice> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::invalid("rho", format!("{rho} is outside [-1, 1]")));
    }
    if w_tilde.n_steps() != w_perp.n_steps() || w_tilde.horizon != w_perp.horizon {
        return Err(Error::Domain(format!(
            "lattice mismatch: {} vs {} steps",
            w_tilde.n_steps(),
            w_perp.n_steps()
        )));
    }
    let perp = (1.0 - rho * rho).sqrt();
    let increments = w_tilde
        .increments
        .iter()
        .zip(&w_perp.increments)
        .map(|(a, b)| rho * a + perp * b)
        .collect();
    Ok(BrownianLattice {
        horizon: w_tilde.horizon,
        increments,
    })
}
