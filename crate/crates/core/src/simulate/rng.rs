//! Counter-based standard normals keyed by `(seed, path, step)`.
//!
//! Each path owns ChaCha8 stream `path` under key `seed`. Step `k` uses the
//! Box–Muller pair built from 64-bit words `2 * (k / 2)` and `2 * (k / 2) + 1`,
//! so any step can be regenerated without replaying the path.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

// never inlined: a caller needing one output could otherwise get a
// differently rounded sin/cos and break bit-exact regeneration
#[inline(never)]
fn box_muller(w0: u64, w1: u64) -> (f64, f64) {
    // u1 in (0, 1], u2 in [0, 1)
    let u1 = ((w0 >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
    let u2 = (w1 >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (TWO_PI * u2).sin_cos();
    (r * c, r * s)
}

/// Sequential normals for one path.
pub struct NormalStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalStream {
    pub fn new(seed: u64, path: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(path);
        NormalStream { rng, spare: None }
    }

    #[inline]
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let w0 = self.rng.next_u64();
        let w1 = self.rng.next_u64();
        let (a, b) = box_muller(w0, w1);
        self.spare = Some(b);
        a
    }
}

/// The normal used at step `k` of `path`.
pub fn normal_at(seed: u64, path: u64, k: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    // 2 u64 = 4 u32 words per pair
    rng.set_word_pos(4 * (k / 2) as u128);
    let w0 = rng.next_u64();
    let w1 = rng.next_u64();
    let (a, b) = box_muller(w0, w1);
    if k % 2 == 0 {
        a
    } else {
        b
    }
}
