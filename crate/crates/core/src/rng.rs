//! Seeded, platform-independent random number generation.
//!
//! Every stream is ChaCha20 keyed by a 256-bit key expanded from the 64-bit
//! seed with SplitMix64. Substreams share the key and differ in the ChaCha
//! stream id, so measurement `k` always sees the same draws no matter which
//! thread generates it or in which order.
//!
//! Normal deviates use the Box–Muller transform of two uniforms on 53-bit
//! grids; the second deviate of each pair is cached for the next call.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{invalid_param, Result};

pub const ALGORITHM: &str = "chacha20-splitmix64key-boxmuller";

/// Stream id reserved for [`make_rng`]; substreams use `k + 1`.
const ROOT_STREAM: u64 = 0;

#[derive(Debug, Clone)]
pub struct RngState {
    inner: ChaCha20Rng,
    seed: u64,
    stream: u64,
    spare: Option<f64>,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn key_from_seed(seed: u64) -> [u8; 32] {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

fn with_stream(seed: u64, stream: u64) -> RngState {
    let mut inner = ChaCha20Rng::from_seed(key_from_seed(seed));
    inner.set_stream(stream);
    RngState {
        inner,
        seed,
        stream,
        spare: None,
    }
}

/// Root generator for `seed`.
pub fn make_rng(seed: u64) -> RngState {
    with_stream(seed, ROOT_STREAM)
}

/// Independent generator number `k` under `seed`.
pub fn substream(seed: u64, k: u64) -> RngState {
    with_stream(seed, k.wrapping_add(1))
}

impl RngState {
    pub fn algorithm(&self) -> &'static str {
        ALGORITHM
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal deviate.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 - u lies in (0, 1], so the log is finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }

    pub fn fill_standard_normal(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.standard_normal();
        }
    }
}

/// `n` i.i.d. draws from Normal(mu, sigma²). `sigma == 0` yields `n` copies of `mu`.
pub fn sample_gaussian(rng: &mut RngState, mu: f64, sigma: f64, n: usize) -> Result<Vec<f64>> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(invalid_param!("sigma must be finite and >= 0, got {sigma}"));
    }
    if !mu.is_finite() {
        return Err(invalid_param!("mu must be finite, got {mu}"));
    }
    if n == 0 {
        return Err(invalid_param!("sample count must be >= 1"));
    }
    if sigma == 0.0 {
        return Ok(vec![mu; n]);
    }
    Ok((0..n).map(|_| mu + sigma * rng.standard_normal()).collect())
}
