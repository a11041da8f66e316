//! Counter-based random numbers.
//!
//! Every draw is a pure function of `(seed, stream_id, counter)`, computed with
//! Philox4x32-10. Streams can therefore be replayed from any counter and handed
//! to worker threads in any order without changing results.

use crate::error::{Error, Result};
use rand::RngCore;
use serde::{Deserialize, Serialize};

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

#[inline(always)]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = u64::from(a) * u64::from(b);
    ((p >> 32) as u32, p as u32)
}

/// The Philox4x32 block function with 10 rounds.
pub fn philox4x32_10(ctr: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = ctr;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(PHILOX_W0);
            k[1] = k[1].wrapping_add(PHILOX_W1);
        }
        let (hi0, lo0) = mulhilo(PHILOX_M0, c[0]);
        let (hi1, lo1) = mulhilo(PHILOX_M1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

/// A position in a counter-based random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
    pub counter: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self {
            seed,
            stream_id,
            counter: 0,
        }
    }

    /// A fresh stream sharing this seed.
    pub fn substream(&self, stream_id: u64) -> Self {
        Self::new(self.seed, stream_id)
    }

    /// A fresh stream for child `index` of this stream, keyed so that distinct
    /// parents never share children.
    pub fn child(&self, index: u64) -> Self {
        let mixed = philox4x32_10(
            [
                self.stream_id as u32,
                (self.stream_id >> 32) as u32,
                index as u32,
                (index >> 32) as u32,
            ],
            [0x5EED_0001, 0x5EED_0002],
        );
        Self::new(self.seed, u64::from(mixed[0]) | (u64::from(mixed[1]) << 32))
    }

    pub fn at(self, counter: u64) -> Self {
        Self { counter, ..self }
    }

    /// The n-th 64-bit draw of this stream, independent of the current counter.
    #[inline]
    pub fn draw(&self, n: u64) -> u64 {
        let out = philox4x32_10(
            [
                n as u32,
                (n >> 32) as u32,
                self.stream_id as u32,
                (self.stream_id >> 32) as u32,
            ],
            [self.seed as u32, (self.seed >> 32) as u32],
        );
        u64::from(out[0]) | (u64::from(out[1]) << 32)
    }

    #[inline]
    pub fn next_raw(&mut self) -> u64 {
        let v = self.draw(self.counter);
        self.counter = self.counter.wrapping_add(1);
        v
    }

    /// Uniform on [0, 1) with 53 bits of resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_raw() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// A Bernoulli draw without range checks; `p` outside [0, 1] saturates.
    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// +1 with probability `p`, -1 otherwise.
    #[inline]
    pub fn sign(&mut self, p: f64) -> i64 {
        if self.bernoulli(p) {
            1
        } else {
            -1
        }
    }
}

/// One coin flip; heads with probability `probability_heads`.
///
/// Advances the stream counter by exactly one.
pub fn coin(stream: &mut RngStream, probability_heads: f64) -> Result<bool> {
    if !(0.0..=1.0).contains(&probability_heads) {
        return Err(Error::Domain(format!(
            "coin probability {probability_heads} not in [0, 1]"
        )));
    }
    Ok(stream.bernoulli(probability_heads))
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.next_raw() as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.next_raw()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let bytes = self.next_raw().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}
