//! Small numerical utilities shared across the crate: compensated summation,
//! seed mixing, and stable evaluation of `1 - x^n`.

/// Kahan–Babuška compensated accumulator.
///
/// All reductions in this crate that feed reported numbers go through either
/// this accumulator or a plain loop in a fixed (ascending-index) order, so
/// results are bit-identical regardless of thread count.
#[derive(Clone, Copy, Debug, Default)]
pub struct Kahan {
    sum: f64,
    compensation: f64,
}

impl Kahan {
    /// Fresh accumulator at zero.
    pub fn new() -> Self {
        Self::default()
    }

    /// Add one term.
    #[inline]
    pub fn add(&mut self, value: f64) {
        let y = value - self.compensation;
        let t = self.sum + y;
        self.compensation = (t - self.sum) - y;
        self.sum = t;
    }

    /// Current compensated total.
    #[inline]
    pub fn total(&self) -> f64 {
        self.sum
    }
}

/// Compensated sum of a slice in index order.
pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Kahan::new();
    for v in values {
        acc.add(v);
    }
    acc.total()
}

/// Compensated dot product `Σ a_i b_i` in index order.
pub fn kahan_dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Kahan::new();
    for (x, y) in a.iter().zip(b) {
        acc.add(x * y);
    }
    acc.total()
}

/// SplitMix64 finalizer: the documented 64-bit mixing function used to derive
/// per-trial (and per-chunk) RNG seeds from a master seed.
///
/// `stream_seed(master, index) = splitmix64(master + index * GOLDEN_GAMMA)`;
/// the derived value seeds a ChaCha8 stream via `SeedableRng::seed_from_u64`.
#[inline]
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Golden-ratio increment for indexed substreams.
pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seed for the `index`-th substream of `master_seed`.
#[inline]
pub fn stream_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(master_seed.wrapping_add(index.wrapping_mul(GOLDEN_GAMMA)))
}

/// Numerically stable `1 - (1-y)^n` for `y ∈ [0, 1]`, accurate even when
/// `y` is tiny (where the naive form cancels catastrophically).
pub fn one_minus_pow(one_minus_y: f64, n: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&one_minus_y));
    if one_minus_y == 0.0 {
        return 1.0;
    }
    if one_minus_y == 1.0 {
        return 0.0;
    }
    -f64::exp_m1(n * one_minus_y.ln())
}

/// Streaming mean/variance accumulator (Welford), mergeable with Chan's
/// formula so fixed chunkings reduce to the same result on any scheduler.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    /// Empty accumulator.
    pub fn new() -> Self {
        Self::default()
    }

    /// Add one observation.
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Merge another accumulator into this one (Chan's parallel update).
    pub fn merge(&mut self, other: &RunningStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let total = self.count + other.count;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / total as f64;
        self.m2 += other.m2
            + delta * delta * (self.count as f64 * other.count as f64) / total as f64;
        self.count = total;
    }

    /// Number of observations.
    pub fn count(&self) -> u64 {
        self.count
    }

    /// Sample mean (0 for an empty accumulator).
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Standard error of the mean, `sqrt(m2 / ((n-1) n))`; 0 when n < 2.
    pub fn standard_error(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        (self.m2.max(0.0) / ((n - 1.0) * n)).sqrt()
    }
}
