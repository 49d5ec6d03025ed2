//! Small deterministic RNG used everywhere randomness is needed.
//!
//! Simulations must replay bit-identically across runs, platforms and
//! parallelism settings, so this avoids external generator crates entirely:
//! xoshiro256** seeded through splitmix64, both with published reference
//! implementations.

/// splitmix64 step. Used for seeding and for deriving independent stream
/// seeds from a global seed plus a tag.
#[must_use]
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a global seed with a stream tag so that per-node streams are
/// statistically independent of each other.
#[must_use]
pub fn stream_seed(global_seed: u64, tag: u64) -> u64 {
    splitmix64(global_seed ^ splitmix64(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// xoshiro256** generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetRng {
    s: [u64; 4],
}

impl DetRng {
    pub fn new(seed: u64) -> Self {
        // Expand the 64-bit seed into the full state with splitmix64, as the
        // xoshiro authors recommend.
        let mut x = seed;
        let mut s = [0u64; 4];
        for slot in &mut s {
            x = splitmix64(x);
            *slot = x;
        }
        DetRng { s }
    }

    /// Independent sub-stream derived from a global seed and a tag
    /// (for example a node id).
    pub fn for_stream(global_seed: u64, tag: u64) -> Self {
        DetRng::new(stream_seed(global_seed, tag))
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[1]
            .wrapping_mul(5)
            .rotate_left(7)
            .wrapping_mul(9);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform draw in `[0, bound)`. Rejection sampling keeps it unbiased.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "next_below: bound must be positive");
        if bound.is_power_of_two() {
            return self.next_u64() & (bound - 1);
        }
        let zone = u64::MAX - (u64::MAX % bound);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % bound;
            }
        }
    }

    /// Uniform draw in the inclusive range `[lo, hi]`.
    pub fn range_inclusive(&mut self, lo: u64, hi: u64) -> u64 {
        assert!(lo <= hi, "range_inclusive: lo must not exceed hi");
        if lo == hi {
            return lo;
        }
        let span = hi - lo;
        if span == u64::MAX {
            return self.next_u64();
        }
        lo + self.next_below(span + 1)
    }

    /// Uniform f64 in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Bernoulli draw. `p <= 0` never fires, `p >= 1` always fires.
    pub fn chance(&mut self, p: f64) -> bool {
        if p <= 0.0 {
            return false;
        }
        if p >= 1.0 {
            return true;
        }
        self.next_f64() < p
    }

    /// Samples an index with probability proportional to `weights[i]`.
    /// Panics on an empty slice or a non-positive total weight.
    pub fn pick_weighted(&mut self, weights: &[f64]) -> usize {
        assert!(!weights.is_empty(), "pick_weighted: empty weights");
        let total: f64 = weights.iter().sum();
        assert!(total > 0.0, "pick_weighted: total weight must be positive");
        let target = self.next_f64() * total;
        let mut acc = 0.0;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if target < acc {
                return i;
            }
        }
        weights.len() - 1
    }
}
