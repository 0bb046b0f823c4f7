//! Self-contained 64-bit generator used for instance construction.
//!
//! Instances must reproduce bit-exactly from a seed across platforms and
//! implementations, so the generator is pinned here instead of depending on
//! an external RNG crate. The update is the splitmix64 finalizer:
//!
//! ```text
//! state += 0x9E3779B97F4A7C15
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! output = z ^ (z >> 31)
//! ```
//!
//! Floats are derived as `(next_u64() >> 11) * 2^-53`, integer ranges by
//! modulo reduction. Both are part of the serialized-instance contract and
//! are documented in `FORMATS.md`.

/// Splitmix64 stream.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 bits of mantissa.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform in `0..n`. Modulo reduction; the bias is irrelevant for the
    /// small ranges used here and keeps the stream specification trivial.
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        self.next_u64() % n
    }

    /// Partial Fisher-Yates: the first `take` entries of a shuffle of `0..n`.
    pub fn sample_distinct(&mut self, n: usize, take: usize) -> Vec<usize> {
        assert!(take <= n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..take {
            let j = i + self.below((n - i) as u64) as usize;
            pool.swap(i, j);
        }
        pool.truncate(take);
        pool
    }

    /// Uniform direction on the unit sphere in `R^d` by rejection from the
    /// enclosing cube. Avoids trig so the stream is bit-stable everywhere.
    pub fn unit_vector(&mut self, d: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..d).map(|_| self.range_f64(-1.0, 1.0)).collect();
            let r2: f64 = v.iter().map(|x| x * x).sum();
            if r2 <= 1.0 && r2 >= 1e-4 {
                let r = r2.sqrt();
                return v.into_iter().map(|x| x / r).collect();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_stream() {
        // Reference values for the splitmix64 finalizer with seed 0.
        let mut rng = SplitMix64::new(0);
        assert_eq!(rng.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(rng.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(rng.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn floats_in_unit_interval() {
        let mut rng = SplitMix64::new(42);
        for _ in 0..1000 {
            let x = rng.next_f64();
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn distinct_sample_is_distinct() {
        let mut rng = SplitMix64::new(7);
        let s = rng.sample_distinct(25, 10);
        let mut sorted = s.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 10);
        assert!(s.iter().all(|&i| i < 25));
    }

    #[test]
    fn unit_vectors_are_unit() {
        let mut rng = SplitMix64::new(3);
        for d in [2usize, 3] {
            let v = rng.unit_vector(d);
            let n: f64 = v.iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }
}
