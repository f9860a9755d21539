use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const TWO_POW_NEG53: f64 = 1.0 / 9007199254740992.0;

/// splitmix64 finalizer; bijective on u64.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Reproducible random stream keyed by (seed, stream id).
///
/// Distinct stream ids on the same seed yield statistically independent
/// sequences, so parallel tasks can each derive their own stream from task
/// indices and produce results that do not depend on scheduling order.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha12Rng,
    spare_normal: Option<f64>,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        // Key schedule: splitmix64 chain over (seed, stream) fills the ChaCha key.
        let mut key = [0u8; 32];
        let mut z = mix(seed).wrapping_add(mix(stream ^ GOLDEN));
        for chunk in key.chunks_exact_mut(8) {
            z = z.wrapping_add(GOLDEN);
            chunk.copy_from_slice(&mix(z).to_le_bytes());
        }
        RngStream {
            seed,
            stream,
            rng: ChaCha12Rng::from_seed(key),
            spare_normal: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Derives an independent child stream; pure in (seed, stream, child).
    pub fn substream(&self, child: u64) -> RngStream {
        RngStream::new(self.seed, mix(self.stream ^ mix(child.wrapping_add(GOLDEN))))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * TWO_POW_NEG53
    }

    /// Uniform in [lo, hi).
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + self.uniform() * (hi - lo)
    }

    /// Standard normal via Box-Muller; caches the second draw of each pair.
    ///
    /// Transcendentals come from libm so sequences are identical across
    /// platforms and optimization levels.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform(); // (0, 1]: keeps ln finite
        let u2 = self.uniform();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * libm::sin(theta));
        r * libm::cos(theta)
    }

    /// Fisher-Yates shuffle. Modulo bias is below 2^-32 for slices shorter
    /// than 2^32 elements.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = (self.next_u64() % (i as u64 + 1)) as usize;
            xs.swap(i, j);
        }
    }
}
