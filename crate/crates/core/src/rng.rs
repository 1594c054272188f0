//! Deterministic random numbers.
//!
//! One generator is fixed for the whole project: xoshiro256++ seeded
//! through SplitMix64. Identical seeds give identical streams on every
//! platform, and child streams split off for parallel work (one per task,
//! one per replicate) are pure functions of the parent seed and the stream
//! index, so results do not depend on worker count or scheduling.

use libm::{cos, log, sin, sqrt};

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// xoshiro256++ stream with a documented seeding and splitting scheme.
#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    state: [u64; 4],
    gauss_spare: Option<f64>,
}

impl SeededRng {
    /// Generator identifier recorded in run manifests.
    pub const ALGORITHM: &'static str = "xoshiro256++ / splitmix64";

    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let state = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        SeededRng { seed, state, gauss_spare: None }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Child stream `index` of this generator's seed. Splitting is keyed on
    /// the original seed, not the current state, so `split(k)` is the same
    /// stream no matter how much of the parent has been consumed.
    pub fn split(&self, index: u64) -> Self {
        let mut sm = self.seed ^ (index.wrapping_add(1)).wrapping_mul(GOLDEN);
        let child_seed = splitmix64(&mut sm);
        SeededRng::new(child_seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[0]
            .wrapping_add(s[3])
            .rotate_left(23)
            .wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform in [0, 1), 53-bit resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in (0, 1]; safe as a log argument.
    fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, n) by rejection; unbiased.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return (v % n) as usize;
            }
        }
    }

    /// Standard normal draw (Box-Muller; the second value of each pair is
    /// cached, so consumption order is part of the stream contract).
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(z) = self.gauss_spare.take() {
            return z;
        }
        let u1 = self.next_open01();
        let u2 = self.next_f64();
        let r = sqrt(-2.0 * log(u1));
        let a = 2.0 * core::f64::consts::PI * u2;
        self.gauss_spare = Some(r * sin(a));
        r * cos(a)
    }
}
