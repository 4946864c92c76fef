//! Counter-based random streams.
//!
//! Every draw is a pure function of `(master_seed, stream_path, counter)`, so
//! Monte Carlo output does not depend on how samples are scheduled across
//! worker threads. The block cipher is Philox4x32-10; stream paths are folded
//! into the 64-bit Philox key with a SplitMix64 finalizer.

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

#[inline(always)]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = (a as u64) * (b as u64);
    ((p >> 32) as u32, p as u32)
}

/// Philox4x32 with 10 rounds.
#[inline]
pub fn philox4x32(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
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

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Maps 64 random bits to the open interval (0, 1).
#[inline(always)]
pub fn open_unit(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Address of an independent substream: a master seed plus a path of indices
/// (sample, equation role, mode, ...).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SeededStream {
    master_seed: u64,
    path: Vec<u64>,
}

impl SeededStream {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            path: Vec::new(),
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    /// Substream one level below this one.
    pub fn child(&self, index: u64) -> Self {
        let mut path = self.path.clone();
        path.push(index);
        Self {
            master_seed: self.master_seed,
            path,
        }
    }

    /// Philox key for this address. Distinct paths give distinct keys with
    /// overwhelming probability; the path length is mixed in so that `[0]`
    /// and `[0, 0]` differ.
    pub fn key(&self) -> StreamKey {
        let mut h = splitmix64(self.master_seed ^ 0x5DEE_CE66_D1CE_4E5B);
        for &p in &self.path {
            h = splitmix64(h ^ splitmix64(p.wrapping_add(0xA076_1D64_78BD_642F)));
        }
        h = splitmix64(h ^ self.path.len() as u64);
        StreamKey(h)
    }

    /// Sequential generator over this substream starting at counter zero.
    pub fn rng(&self) -> StreamRng {
        StreamRng::new(self.key())
    }
}

/// A folded stream address, cheap to copy into hot loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey(pub u64);

impl StreamKey {
    /// 128 random bits at a 128-bit counter.
    #[inline]
    pub fn block(&self, counter: [u32; 4]) -> [u32; 4] {
        philox4x32(counter, [self.0 as u32, (self.0 >> 32) as u32])
    }

    /// Two independent open uniforms at the given counter.
    #[inline]
    pub fn uniform_pair(&self, counter: [u32; 4]) -> (f64, f64) {
        let b = self.block(counter);
        let u = ((b[0] as u64) << 32) | b[1] as u64;
        let v = ((b[2] as u64) << 32) | b[3] as u64;
        (open_unit(u), open_unit(v))
    }
}

/// Sequential reader over one substream. Buffers one Philox block.
#[derive(Debug, Clone)]
pub struct StreamRng {
    key: StreamKey,
    counter: u64,
    buf: [u32; 4],
    used: usize,
}

impl StreamRng {
    pub fn new(key: StreamKey) -> Self {
        Self {
            key,
            counter: 0,
            buf: [0; 4],
            used: 4,
        }
    }

    pub fn next_u32(&mut self) -> u32 {
        if self.used == 4 {
            let c = self.counter;
            self.buf = self.key.block([c as u32, (c >> 32) as u32, 0, 0]);
            self.counter += 1;
            self.used = 0;
        }
        let v = self.buf[self.used];
        self.used += 1;
        v
    }

    pub fn next_u64(&mut self) -> u64 {
        ((self.next_u32() as u64) << 32) | self.next_u32() as u64
    }

    /// Uniform on the open interval (0, 1).
    pub fn next_open01(&mut self) -> f64 {
        open_unit(self.next_u64())
    }

    /// Standard normal by Box-Muller; only used in tests and diagnostics.
    pub fn next_normal(&mut self) -> f64 {
        let u = self.next_open01();
        let v = self.next_open01();
        (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
    }
}
