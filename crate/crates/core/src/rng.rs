//! PCG-XSH-RR 64/32 generator.
//!
//! All simulation randomness flows through this type so that a save file
//! (which stores the two state words) continues bit-identically on any
//! platform.

use serde::{Deserialize, Serialize};

const MULTIPLIER: u64 = 6364136223846793005;

/// Stream selector used when seeding from a bare `u64`; yields the canonical
/// PCG default increment `1442695040888963407`.
pub const DEFAULT_STREAM: u64 = 721347520444481703;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pcg32 {
    state: u64,
    increment: u64,
}

impl Pcg32 {
    /// Reference seeding procedure (`pcg32_srandom_r`).
    pub fn new(init_state: u64, init_seq: u64) -> Self {
        let mut rng = Pcg32 { state: 0, increment: (init_seq << 1) | 1 };
        rng.next_u32();
        rng.state = rng.state.wrapping_add(init_state);
        rng.next_u32();
        rng
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::new(seed, DEFAULT_STREAM)
    }

    /// Rebuilds a generator from raw state words. The increment is forced odd.
    pub fn from_parts(state: u64, increment: u64) -> Self {
        Pcg32 { state, increment: increment | 1 }
    }

    pub fn parts(&self) -> (u64, u64) {
        (self.state, self.increment)
    }

    pub fn next_u32(&mut self) -> u32 {
        let old = self.state;
        self.state = old.wrapping_mul(MULTIPLIER).wrapping_add(self.increment);
        let xorshifted = (((old >> 18) ^ old) >> 27) as u32;
        let rot = (old >> 59) as u32;
        xorshifted.rotate_right(rot)
    }

    /// Uniform integer in `[0, bound)` by rejection (`pcg32_boundedrand_r`).
    pub fn below(&mut self, bound: u32) -> u32 {
        assert!(bound > 0, "empty range");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let r = self.next_u32();
            if r >= threshold {
                return r % bound;
            }
        }
    }

    /// Uniform real in `[0, 1)` with 32-bit resolution.
    pub fn next_f64(&mut self) -> f64 {
        self.next_u32() as f64 / 4_294_967_296.0
    }

    /// Derives an independent generator for a sub-stream (e.g. a policy RNG).
    pub fn fork(&mut self, stream: u64) -> Pcg32 {
        let hi = self.next_u32() as u64;
        let lo = self.next_u32() as u64;
        Pcg32::new((hi << 32) | lo, stream)
    }
}
