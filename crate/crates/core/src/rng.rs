//! Counter-based random numbers.
//!
//! Every draw is a pure function of a 64-bit key built from the seed and the
//! logical index of the quantity being sampled, so panels of different shape
//! agree wherever they overlap and disjoint blocks can be filled in parallel.

use rand::RngCore;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Key for a two-dimensional logical index under `seed`.
#[inline]
pub fn key2(seed: u64, i: i64, t: i64) -> u64 {
    let h = mix64(seed.wrapping_add(GOLDEN));
    let h = mix64(h ^ (i as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93));
    mix64(h ^ (t as u64).wrapping_mul(0xA076_1D64_78BD_642F))
}

/// Key for a one-dimensional logical index under `seed`.
#[inline]
pub fn key1(seed: u64, i: u64) -> u64 {
    key2(seed, i as i64, 0x5bd1_e995)
}

/// Uniform on (0, 1], built from the top 53 bits.
#[inline]
pub fn open_closed01(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// A SplitMix64 stream started at a counter key.
///
/// Used where a sampler needs a variable number of uniforms per entry
/// (rejection samplers); the stream stays a function of the key alone.
#[derive(Clone, Debug)]
pub struct KeyedRng {
    state: u64,
}

impl KeyedRng {
    pub fn new(key: u64) -> Self {
        Self { state: key }
    }

    #[inline]
    pub fn next_open_closed01(&mut self) -> f64 {
        open_closed01(self.next_u64())
    }
}

impl RngCore for KeyedRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}
