//! Seeded pseudo-randomness for Haar sampling and Monte Carlo trials.
//!
//! Every sampling entry point in this crate takes an explicit 64-bit seed;
//! there is no global RNG state. The generator is splitmix64 (Steele,
//! Lea & Flood 2014), chosen because its output function is a published,
//! frozen mixing function: the same seed produces the same stream on every
//! platform and in every build of this crate.

/// splitmix64 output function (finalizer).
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// Derive the seed for trial `index` from an ensemble seed.
///
/// `child_seed(s, i) = mix(s + (i+1)·γ)` with γ the splitmix64 increment.
/// Trials can therefore be generated independently, in any order or on any
/// thread, and still reproduce bit-identically.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    mix(seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GAMMA)))
}

/// splitmix64 stream.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
    spare_gaussian: Option<f64>,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self {
            state: seed,
            spare_gaussian: None,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix(self.state)
    }

    /// Uniform double in the half-open interval (0, 1].
    ///
    /// The open lower end keeps ln(u) finite in the Box–Muller transform.
    #[inline]
    pub fn next_unit_open(&mut self) -> f64 {
        (((self.next_u64() >> 11) + 1) as f64) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal variate via Box–Muller (pairs cached).
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare_gaussian.take() {
            return z;
        }
        let u1 = self.next_unit_open();
        let u2 = self.next_unit_open();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_gaussian = Some(r * theta.sin());
        r * theta.cos()
    }
}
