//! Counter-based Gaussian draws for reproducible, order-independent path sampling.
//!
//! The key of a ChaCha8 stream is derived from `(seed, path)`, the stream id is
//! the time step, and the `k`-th draw of that stream drives mode `k`. Any path
//! and step can therefore be regenerated in isolation, and the draws for the
//! first `K` modes do not depend on how many modes are requested.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::scalar::{lit, Real};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Source of Wiener increments for one path.
pub trait DrawSource<T> {
    /// Fills `out` with `K = out.len()` independent `N(0, dt)` increments for `step`.
    fn increments(&mut self, step: usize, dt: T, out: &mut [T]);
}

/// Deterministic stream for path `path` under a global `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathStream {
    key: [u8; 32],
}

impl PathStream {
    pub fn new(seed: u64, path: u64) -> Self {
        let mut key = [0u8; 32];
        let words = [
            splitmix64(seed),
            splitmix64(seed ^ 0x5851_f42d_4c95_7f2d),
            splitmix64(path.wrapping_add(splitmix64(seed))),
            splitmix64(!path ^ seed.rotate_left(17)),
        ];
        for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        Self { key }
    }

    /// The generator positioned at the start of `step`'s substream.
    pub fn step_rng(&self, step: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(step as u64);
        rng
    }
}

impl<T: Real> DrawSource<T> for PathStream {
    fn increments(&mut self, step: usize, dt: T, out: &mut [T]) {
        let mut rng = self.step_rng(step);
        let s = dt.sqrt();
        for o in out.iter_mut() {
            *o = lit::<T>(rng.sample::<f64, _>(StandardNormal)) * s;
        }
    }
}

/// Injected increments, one row per step (used to pin draws in tests).
#[derive(Debug, Clone, PartialEq)]
pub struct FixedDraws<T> {
    pub rows: Vec<Vec<T>>,
}

impl<T: Real> DrawSource<T> for FixedDraws<T> {
    fn increments(&mut self, step: usize, _dt: T, out: &mut [T]) {
        let row = self.rows.get(step);
        for (k, o) in out.iter_mut().enumerate() {
            *o = row.and_then(|r| r.get(k).copied()).unwrap_or(T::zero());
        }
    }
}
