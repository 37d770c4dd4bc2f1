//! Deterministic splittable random streams.
//!
//! Every random quantity in the crate is drawn from a [`RandomStream`], a
//! counter-based generator addressed by `(seed, derivation path, counter)`.
//! Output depends on nothing else, so any run can be replayed exactly on any
//! platform, and independent streams for parallel work are obtained by
//! deriving children rather than by sharing mutable state.
//!
//! The generator is a 64-bit mixing function applied to
//! `key + counter * GAMMA`, with the key folded from the seed and the
//! derivation path.  Uniform doubles keep 53 bits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX_A: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX_B: u64 = 0x94D0_49BB_1331_11EB;
const U53: f64 = 1.0 / 9007199254740992.0;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(MIX_A);
    z = (z ^ (z >> 27)).wrapping_mul(MIX_B);
    z ^ (z >> 31)
}

#[derive(Debug, Error, PartialEq)]
pub enum StreamError {
    #[error("rate must be positive, got {0}")]
    NonPositiveRate(f64),
    #[error("mean must be nonnegative and finite, got {0}")]
    BadMean(f64),
    #[error("mass must be nonnegative and finite, got {0}")]
    BadMass(f64),
}

/// A deterministic random stream at a fixed position in the derivation tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomStream {
    seed: u64,
    path: Vec<u32>,
    key: u64,
    counter: u64,
}

impl RandomStream {
    /// Root stream for a run.
    pub fn from_seed(seed: u64) -> Self {
        RandomStream {
            seed,
            path: Vec::new(),
            key: mix64(seed ^ GAMMA),
            counter: 0,
        }
    }

    /// Child stream for derivation index `index`.
    ///
    /// Children depend only on `(seed, path)`, never on how much the parent
    /// has been consumed, so `derive` may be called at any time.
    pub fn derive(&self, index: u32) -> Self {
        let mut path = self.path.clone();
        path.push(index);
        let key = mix64(
            self.key
                .wrapping_add(GAMMA)
                .wrapping_add(mix64(u64::from(index).wrapping_add(1))),
        );
        RandomStream {
            seed: self.seed,
            path,
            key,
            counter: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self) -> &[u32] {
        &self.path
    }

    /// Number of 64-bit words consumed so far on this stream.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GAMMA)))
    }

    /// Uniform draw in `[0, 1)` with 53 significant bits.  Consumes one word.
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * U53
    }

    /// Exponential variate with the given rate, by inversion.  Consumes one
    /// word.
    pub fn next_exponential(&mut self, rate: f64) -> Result<f64, StreamError> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(StreamError::NonPositiveRate(rate));
        }
        Ok(self.exp1() / rate)
    }

    /// Unit-rate exponential.  Consumes one word.
    #[inline]
    pub fn exp1(&mut self) -> f64 {
        let u = self.next_uniform();
        -(1.0 - u).ln()
    }

    /// First event time of the decaying point process with intensity
    /// `mass * exp(-t)` restricted to `t > lower`, or `f64::INFINITY` when
    /// the process has no event at all.
    ///
    /// The total remaining mass past `lower` is `mass * exp(-lower)`, so the
    /// no-event probability is `exp(-mass * exp(-lower))`; otherwise the
    /// event time solves `exp(-t) = exp(-lower) + ln(u) / mass`.  Consumes
    /// exactly one word in every branch.
    pub fn sample_first_event(&mut self, mass: f64, lower: f64) -> Result<f64, StreamError> {
        if !(mass >= 0.0) || !mass.is_finite() {
            return Err(StreamError::BadMass(mass));
        }
        let u = self.next_uniform();
        if mass == 0.0 {
            return Ok(f64::INFINITY);
        }
        let survive = (-mass * (-lower).exp()).exp();
        if u <= survive {
            return Ok(f64::INFINITY);
        }
        let t = -((-lower).exp() + u.ln() / mass).ln();
        debug_assert!(t > lower);
        Ok(t)
    }

    /// Poisson count by inversion (product of uniforms).  Consumes a
    /// variable number of words, `k + 1` for a draw of `k`.
    pub fn next_poisson(&mut self, mean: f64) -> Result<u64, StreamError> {
        if !(mean >= 0.0) || !mean.is_finite() {
            return Err(StreamError::BadMean(mean));
        }
        let floor = (-mean).exp();
        let mut k = 0u64;
        let mut acc = self.next_uniform();
        while acc > floor {
            acc *= self.next_uniform();
            k += 1;
        }
        Ok(k)
    }

    /// Index draw from cumulative weights (last entry is the total mass).
    /// Consumes one word.
    pub fn next_index(&mut self, cumulative: &[f64]) -> usize {
        debug_assert!(!cumulative.is_empty());
        let total = *cumulative.last().unwrap();
        let target = self.next_uniform() * total;
        match cumulative.binary_search_by(|c| c.partial_cmp(&target).unwrap()) {
            Ok(i) => (i + 1).min(cumulative.len() - 1),
            Err(i) => i.min(cumulative.len() - 1),
        }
    }
}
