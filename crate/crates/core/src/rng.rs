//! Counter-based random streams.
//!
//! Every random draw is a pure function of `(seed, replica, step, draw)`,
//! computed with the Philox4x32-10 block function. A replica can therefore be
//! simulated on any worker, in any order, and a single step can be replayed
//! without touching the others.

use rand::RngCore;

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
pub fn philox4x32_10(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = counter;
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

/// The stream owned by one replica of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplicaStream {
    seed: u64,
    replica: u32,
}

impl ReplicaStream {
    /// Replica indices are limited to 32 bits; larger values wrap into the
    /// same counter space and are rejected by the engine's plan validation.
    pub fn new(seed: u64, replica: u64) -> Self {
        ReplicaStream {
            seed,
            replica: replica as u32,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replica(&self) -> u64 {
        u64::from(self.replica)
    }

    /// Generator for the draws belonging to `step`.
    pub fn step(&self, step: u64) -> StepRng {
        StepRng {
            key: [self.seed as u32, (self.seed >> 32) as u32],
            step,
            replica: self.replica,
            block: 0,
            buf: [0; 4],
            used: 4,
        }
    }
}

/// Generator for a single `(seed, replica, step)` coordinate. Up to 2^32
/// blocks of four words are available per step.
#[derive(Debug, Clone)]
pub struct StepRng {
    key: [u32; 2],
    step: u64,
    replica: u32,
    block: u32,
    buf: [u32; 4],
    used: usize,
}

impl StepRng {
    #[inline]
    fn refill(&mut self) {
        let counter = [
            self.block,
            self.step as u32,
            (self.step >> 32) as u32,
            self.replica,
        ];
        self.buf = philox4x32_10(counter, self.key);
        self.block = self.block.wrapping_add(1);
        self.used = 0;
    }

    /// Uniform on the open interval (0, 1).
    #[inline]
    pub fn open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for StepRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        if self.used == 4 {
            self.refill();
        }
        let v = self.buf[self.used];
        self.used += 1;
        v
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        let lo = u64::from(self.next_u32());
        let hi = u64::from(self.next_u32());
        (hi << 32) | lo
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(4) {
            let word = self.next_u32().to_le_bytes();
            chunk.copy_from_slice(&word[..chunk.len()]);
        }
    }
}
