//! Counter-based random streams.
//!
//! Each draw is `philox2x64_10(counter, stream_id; key = root_seed)`, so a
//! stream is fully described by three integers and splitting is O(1).

use serde::{Deserialize, Serialize};

const PHILOX_M: u64 = 0xD2B7_4407_B1CE_6E93;
const PHILOX_W: u64 = 0x9E37_79B9_7F4A_7C15;
const ROUNDS: usize = 10;

#[inline]
fn mulhilo(a: u64, b: u64) -> (u64, u64) {
    let p = (a as u128) * (b as u128);
    ((p >> 64) as u64, p as u64)
}

#[inline]
fn philox2x64(ctr: [u64; 2], key: u64) -> [u64; 2] {
    let mut c = ctr;
    let mut k = key;
    for _ in 0..ROUNDS {
        let (hi, lo) = mulhilo(PHILOX_M, c[0]);
        c = [hi ^ k ^ c[1], lo];
        k = k.wrapping_add(PHILOX_W);
    }
    c
}

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child stream id from a parent id and a child index.
#[inline]
fn mix64(parent: u64, id: u64) -> u64 {
    splitmix(splitmix(parent) ^ id.rotate_left(17) ^ 0x5851_F42D_4C95_7F2D)
}

/// Deterministic generator state addressed by `(root_seed, stream_id)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomStream {
    root_seed: u64,
    stream_id: u64,
    counter: u64,
    #[serde(skip)]
    buffered: Option<u64>,
    #[serde(skip)]
    spare_normal: Option<u64>,
}

impl RandomStream {
    pub fn new(root_seed: u64) -> Self {
        Self::with_id(root_seed, 0)
    }

    pub fn with_id(root_seed: u64, stream_id: u64) -> Self {
        RandomStream { root_seed, stream_id, counter: 0, buffered: None, spare_normal: None }
    }

    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Child stream for replicate or chunk `id`. Independent of how much of
    /// `self` has been consumed.
    pub fn split(&self, id: u64) -> RandomStream {
        RandomStream::with_id(self.root_seed, mix64(self.stream_id, id))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        if let Some(v) = self.buffered.take() {
            return v;
        }
        let out = philox2x64([self.counter, self.stream_id], self.root_seed);
        self.counter = self.counter.wrapping_add(1);
        self.buffered = Some(out[1]);
        out[0]
    }

    /// Uniform on [0, 1) with 53 bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on the open interval (0, 1).
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via the polar method; the second variate is cached.
    pub fn normal(&mut self) -> f64 {
        if let Some(bits) = self.spare_normal.take() {
            return f64::from_bits(bits);
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare_normal = Some((v * f).to_bits());
                return u * f;
            }
        }
    }

    /// Standard exponential.
    #[inline]
    pub fn exponential(&mut self) -> f64 {
        -self.uniform_open().ln()
    }

    /// Uniform integer in `0..n` (n > 0) by rejection.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.normal();
        }
    }
}
