//! Finite-sample univariate measures.
//!
//! An [`EmpiricalDistribution`] places mass `1/n` on each stored value. Its
//! CDF is the right-continuous step function `F(u) = #{x_i <= u} / n` and its
//! quantile function is the left-continuous generalized inverse
//! `Q(v) = inf { u : F(u) >= v }`.
//!
//! The squared Wasserstein-2 distance between two such measures is the
//! integral of `(Q_a(v) - Q_b(v))^2` over `[0, 1]`. Both quantile functions are
//! piecewise constant, so the integral is evaluated exactly by walking the
//! merged set of breakpoints `i/n` and `j/m`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Jitter half-width suggested for predictions on a unit scale.
pub const DEFAULT_JITTER_HALF_WIDTH: f64 = 0.001;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistribError {
    #[error("empirical distribution needs at least one sample")]
    EmptySample,
    #[error("non-finite value {value} at index {index}")]
    InvalidValue { index: usize, value: f64 },
    #[error("probability level {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("invalid jitter configuration: {0}")]
    InvalidConfig(String),
}

/// Sorted sample with equal point masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EmpiricalDistribution {
    values: Vec<f64>,
}

impl EmpiricalDistribution {
    /// Builds the distribution from an arbitrary-order sample.
    pub fn new(values: &[f64]) -> Result<Self, DistribError> {
        Self::from_vec(values.to_vec())
    }

    pub fn from_vec(mut values: Vec<f64>) -> Result<Self, DistribError> {
        if values.is_empty() {
            return Err(DistribError::EmptySample);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(DistribError::InvalidValue { index, value });
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; kept for the `len`/`is_empty` pairing.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sorted support, duplicates included.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Number of stored values `<= u`.
    pub fn count_le(&self, u: f64) -> usize {
        self.values.partition_point(|&x| x <= u)
    }

    /// `F(u) = #{x_i <= u} / n`.
    pub fn cdf(&self, u: f64) -> f64 {
        self.count_le(u) as f64 / self.len() as f64
    }

    /// `Q(v) = inf { u : F(u) >= v }`, with `Q(0)` equal to the minimum.
    pub fn quantile(&self, v: f64) -> Result<f64, DistribError> {
        if !(0.0..=1.0).contains(&v) {
            return Err(DistribError::InvalidProbability(v));
        }
        Ok(self.values[self.quantile_index(v)])
    }

    /// Quantile for a level already known to lie in `[0, 1]`.
    pub(crate) fn quantile_at_level(&self, v: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&v));
        self.values[self.quantile_index(v)]
    }

    /// Index of the sorted value returned by [`quantile`](Self::quantile).
    ///
    /// The comparison `(k + 1) / n >= v` is done with the same float division
    /// that `cdf` uses, so `Q(F(x)) == x` holds bit-for-bit on the support.
    fn quantile_index(&self, v: f64) -> usize {
        let n = self.len();
        let nf = n as f64;
        // smallest k in [0, n) with (k + 1) / n >= v
        let mut lo = 0usize;
        let mut hi = n - 1;
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if ((mid + 1) as f64 / nf) >= v {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        lo
    }
}

impl TryFrom<Vec<f64>> for EmpiricalDistribution {
    type Error = DistribError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::from_vec(values)
    }
}

impl From<EmpiricalDistribution> for Vec<f64> {
    fn from(d: EmpiricalDistribution) -> Self {
        d.values
    }
}

/// Uniform tie-breaking noise on `(-half_width, half_width)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JitterConfig {
    pub half_width: f64,
    pub seed: u64,
}

impl Default for JitterConfig {
    fn default() -> Self {
        Self {
            half_width: DEFAULT_JITTER_HALF_WIDTH,
            seed: 0,
        }
    }
}

impl JitterConfig {
    pub fn new(half_width: f64, seed: u64) -> Result<Self, DistribError> {
        let cfg = Self { half_width, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    /// No perturbation at all.
    pub fn none() -> Self {
        Self {
            half_width: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), DistribError> {
        if !self.half_width.is_finite() || self.half_width < 0.0 {
            return Err(DistribError::InvalidConfig(format!(
                "half width must be finite and >= 0, got {}",
                self.half_width
            )));
        }
        Ok(())
    }

    /// Stream of draws for a given purpose. Distinct `stream` ids give
    /// independent sequences from the same seed.
    pub fn stream(&self, stream: u64) -> JitterStream {
        JitterStream::new(self.half_width, self.seed, stream)
    }
}

/// Deterministic source of i.i.d. `U(-u, u)` perturbations.
#[derive(Debug, Clone)]
pub struct JitterStream {
    half_width: f64,
    rng: ChaCha8Rng,
}

impl JitterStream {
    pub fn new(half_width: f64, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { half_width, rng }
    }

    /// Next draw; exactly `0.0` when the half width is zero.
    pub fn draw(&mut self) -> f64 {
        if self.half_width == 0.0 {
            return 0.0;
        }
        loop {
            let z = self.rng.random_range(-self.half_width..self.half_width);
            // open interval
            if z != -self.half_width {
                return z;
            }
        }
    }
}

/// Adds i.i.d. `U(-u, u)` noise to each value. Deterministic given the seed.
pub fn apply_jitter(values: &[f64], cfg: &JitterConfig) -> Result<Vec<f64>, DistribError> {
    cfg.validate()?;
    if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(DistribError::InvalidValue { index, value });
    }
    let mut stream = cfg.stream(0);
    Ok(values.iter().map(|&v| v + stream.draw()).collect())
}

/// Squared Wasserstein-2 distance between two empirical measures.
///
/// Integrates the squared difference of the two step quantile functions over
/// the merged breakpoint grid. Interval widths are tracked as integers in
/// units of `1 / (n * m)` so the grid itself carries no rounding.
pub fn wasserstein2_squared(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> f64 {
    let (xa, xb) = (a.values(), b.values());
    let (n, m) = (xa.len() as u128, xb.len() as u128);
    if n == m {
        let sum: f64 = xa.iter().zip(xb).map(|(x, y)| (x - y) * (x - y)).sum();
        return sum / n as f64;
    }
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev: u128 = 0;
    let mut acc = 0.0;
    while i < xa.len() && j < xb.len() {
        let next_a = (i as u128 + 1) * m;
        let next_b = (j as u128 + 1) * n;
        let next = next_a.min(next_b);
        let d = xa[i] - xb[j];
        acc += (next - prev) as f64 * d * d;
        prev = next;
        if next_a == next {
            i += 1;
        }
        if next_b == next {
            j += 1;
        }
    }
    acc / (n * m) as f64
}

/// Wasserstein-2 distance (square root of [`wasserstein2_squared`]).
pub fn wasserstein2(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> f64 {
    wasserstein2_squared(a, b).sqrt()
}
