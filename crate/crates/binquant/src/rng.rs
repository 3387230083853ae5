//! Deterministic random source used by every randomized operation.
//!
//! The generator is fixed algorithmically — not "whatever the platform
//! provides" — so that identical seeds yield identical draw sequences on any
//! machine, and so that an implementation in another language can reproduce
//! the streams bit for bit. The construction is:
//!
//! * state seeding: SplitMix64 applied to the user seed, four outputs filling
//!   the 256-bit state (all-zero states are unreachable this way);
//! * `u64` stream: xoshiro256++ (Blackman–Vigna);
//! * uniforms: the top 53 bits of a `u64`, i.e. `(x >> 11) * 2^-53` in
//!   `[0, 1)`;
//! * normals: Box–Muller on two uniforms, the first shifted into `(0, 1]` so
//!   the logarithm is always finite; the second member of each pair is cached
//!   and returned by the following call.

const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer: the mixing function applied to an incremented state.
#[inline]
fn splitmix_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeded deterministic generator (xoshiro256++ seeded via SplitMix64).
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    state: [u64; 4],
    cached_normal: Option<f64>,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let mut state = [0u64; 4];
        for slot in &mut state {
            sm = sm.wrapping_add(SPLITMIX_GAMMA);
            *slot = splitmix_mix(sm);
        }
        RandomSource {
            seed,
            state,
            cached_normal: None,
        }
    }

    /// The seed this source was created from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Next raw 64-bit output (xoshiro256++).
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform draw in `[0, 1)` with 53-bit resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `[0, bound)` without modulo bias (rejection sampling).
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "below() requires a positive bound");
        let zone = u64::MAX - u64::MAX % bound;
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % bound;
            }
        }
    }

    /// Standard normal draw (Box–Muller, pair-cached).
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.cached_normal.take() {
            return z;
        }
        // u1 in (0, 1]: add one before scaling so ln(u1) never sees zero.
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / 9_007_199_254_740_992.0);
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.cached_normal = Some(radius * angle.sin());
        radius * angle.cos()
    }

    /// Fisher–Yates shuffled permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.below(i as u64 + 1) as usize;
            perm.swap(i, j);
        }
        perm
    }
}

/// Deterministic seed derivation for independent sub-streams.
///
/// Mixes the master seed with a stream label (e.g. method id, code length,
/// neighbor count) through the SplitMix64 finalizer so that cells of an
/// experiment sweep draw from unrelated parts of the generator family.
pub fn derive_seed(master: u64, labels: &[u64]) -> u64 {
    let mut h = splitmix_mix(master.wrapping_add(SPLITMIX_GAMMA));
    for &label in labels {
        h = splitmix_mix(h ^ label.wrapping_add(SPLITMIX_GAMMA));
    }
    h
}
