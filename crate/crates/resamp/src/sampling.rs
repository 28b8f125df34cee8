//! Deterministic, forkable random sampling.
//!
//! All randomness in the crate flows through [`RngState`], a value type
//! naming one (seed, stream) pair of the ChaCha8 generator. ChaCha was
//! chosen because its output is defined by the cipher specification
//! (counter mode over 64-byte blocks), so a given state yields the same
//! draw sequence on every platform and toolchain; a frozen reference
//! sequence in the tests pins this down. Independent sub-streams for
//! parallel work come from [`RngState::fork`], which derives child stream
//! ids by bit mixing rather than by splitting one sequence, so forking is
//! itself a pure function of the parent state: the same parent always
//! yields the same children, regardless of what has been drawn.
//!
//! Bounded integer draws go through 64-bit sampling even where a 32-bit
//! path would do, so index sequences do not depend on the platform word
//! size.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Immutable descriptor of a generator state: which pseudorandom sequence
/// to read, not a position within it. Materialize with [`RngState::rng`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngState {
    seed: u64,
    stream: u64,
}

impl RngState {
    /// State for a user-facing seed, on the root stream.
    pub fn new(seed: u64) -> Self {
        RngState { seed, stream: 0 }
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        RngState { seed, stream }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Derive `k` sub-states with distinct stream ids.
    ///
    /// Children depend only on (seed, stream, index): forking the same
    /// state twice gives identical lists, and a child forked again yields
    /// grandchildren unrelated to its siblings' (mixing makes id reuse
    /// across fork depths vanishingly unlikely in 64 bits).
    pub fn fork(&self, k: usize) -> Vec<RngState> {
        (0..k).map(|i| self.child(i as u64)).collect()
    }

    /// Single forked sub-state, equal to `fork(i+1)[i]`.
    pub fn child(&self, index: u64) -> RngState {
        RngState {
            seed: self.seed,
            stream: mix(self.stream, index),
        }
    }

    /// Materialize the generator positioned at the start of this stream.
    pub fn rng(&self) -> Rng {
        let mut chacha = ChaCha8Rng::seed_from_u64(self.seed);
        chacha.set_stream(self.stream);
        Rng { chacha }
    }
}

/// SplitMix64-style finalizer; bijective in `x`, so distinct child indices
/// never collide under one parent.
fn mix(stream: u64, index: u64) -> u64 {
    let mut x = stream
        .wrapping_mul(0x9e3779b97f4a7c15)
        .wrapping_add(index)
        .wrapping_add(0x2545f4914f6cdd1d);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Concrete generator for one stream. Draw helpers live here so every
/// caller shares identical sampling arithmetic.
#[derive(Debug, Clone)]
pub struct Rng {
    chacha: ChaCha8Rng,
}

impl Rng {
    pub fn next_u64(&mut self) -> u64 {
        self.chacha.next_u64()
    }

    /// Uniform draw from 0..n via 64-bit rejection sampling.
    pub fn uniform_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        let n = n as u64;
        // Widening-multiply method with rejection on the biased zone.
        let zone = n.wrapping_neg() % n; // lowest acceptable remainder count
        loop {
            let v = self.chacha.next_u64();
            let (hi, lo) = {
                let wide = (v as u128) * (n as u128);
                ((wide >> 64) as u64, wide as u64)
            };
            if lo >= zone {
                return hi as usize;
            }
        }
    }

    /// Standard normal draw (ziggurat).
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.chacha)
    }
}

impl RngCore for Rng {
    fn next_u32(&mut self) -> u32 {
        self.chacha.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.chacha.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.chacha.fill_bytes(dest)
    }
}

/// How many resamples a cross-combination run draws per side and yields in
/// total: `b_side = round(√b_requested)` and `b_effective = b_side²`.
/// Rounding (not truncation) keeps the realized budget closest to the
/// request; the exact effective count is always reported alongside
/// p-values rather than silently substituted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResamplePlan {
    b_requested: usize,
    b_side: usize,
    b_effective: usize,
}

impl ResamplePlan {
    pub fn new(b_requested: usize) -> Result<Self> {
        if b_requested < 1 {
            return Err(Error::EmptyResamplePlan);
        }
        let b_side = ((b_requested as f64).sqrt().round() as usize).max(1);
        Ok(ResamplePlan {
            b_requested,
            b_side,
            b_effective: b_side * b_side,
        })
    }

    pub fn b_requested(&self) -> usize {
        self.b_requested
    }

    pub fn b_side(&self) -> usize {
        self.b_side
    }

    pub fn b_effective(&self) -> usize {
        self.b_effective
    }
}

/// Uniform random permutation of `x` (Fisher–Yates, new allocation).
pub fn shuffle(x: &[f64], rng: &mut Rng) -> Vec<f64> {
    let mut out = x.to_vec();
    for i in (1..out.len()).rev() {
        let j = rng.uniform_index(i + 1);
        out.swap(i, j);
    }
    out
}

/// `n` indices drawn uniformly from 0..n with replacement.
pub fn bootstrap_indices(n: usize, rng: &mut Rng) -> Vec<usize> {
    (0..n).map(|_| rng.uniform_index(n)).collect()
}

/// Multinomial(n, uniform) counts over n cells, tallied from n uniform
/// index draws. Counts always sum to exactly n.
pub fn multinomial_counts(n: usize, rng: &mut Rng) -> Vec<u32> {
    let mut counts = vec![0u32; n];
    for _ in 0..n {
        counts[rng.uniform_index(n)] += 1;
    }
    counts
}

/// Bootstrap weight matrix: `b` independent multinomial count vectors,
/// one per column, stored as counts so each column provably sums to `n`.
/// Entry (i, j) as a weight is `counts(i, j) / n`. Columns are drawn from
/// forked sub-streams keyed by column index, so the matrix is identical
/// whether columns are drawn serially or in parallel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightMatrix {
    n: usize,
    b: usize,
    /// Column-major: column j occupies counts[j*n .. (j+1)*n].
    counts: Vec<u32>,
}

impl WeightMatrix {
    pub fn draw(n: usize, b: usize, state: RngState) -> Self {
        let mut counts = vec![0u32; n * b];
        for (j, sub) in state.fork(b).into_iter().enumerate() {
            let mut rng = sub.rng();
            let col = &mut counts[j * n..(j + 1) * n];
            for _ in 0..n {
                col[rng.uniform_index(n)] += 1;
            }
        }
        WeightMatrix { n, b, counts }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn b(&self) -> usize {
        self.b
    }

    /// Count column j (length n, sums to n).
    pub fn column(&self, j: usize) -> &[u32] {
        &self.counts[j * self.n..(j + 1) * self.n]
    }

    /// Weight at (i, j): counts(i, j)/n.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.counts[j * self.n + i] as f64 / self.n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// First u64 outputs for seed 42, stream 0 — frozen from an observed
    /// run to pin cross-platform, cross-version stability of the
    /// generator. A failure here means reproducibility is broken, not
    /// that the values are wrong.
    #[test]
    fn reference_sequence_is_stable() {
        let mut rng = RngState::new(42).rng();
        let got: Vec<u64> = (0..4).map(|_| rng.next_u64()).collect();
        let want = FROZEN_SEED_42_STREAM_0;
        assert_eq!(got, want);
    }

    const FROZEN_SEED_42_STREAM_0: [u64; 4] = [
        12578764544318200737,
        17529487244874322312,
        7886285670807131020,
        11572758976476374866,
    ];

    #[test]
    fn same_state_same_sequence() {
        let state = RngState::with_stream(7, 3);
        let a: Vec<u64> = {
            let mut r = state.rng();
            (0..32).map(|_| r.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut r = state.rng();
            (0..32).map(|_| r.next_u64()).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_streams_differ() {
        let mut a = RngState::with_stream(7, 0).rng();
        let mut b = RngState::with_stream(7, 1).rng();
        let xs: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        assert_ne!(xs, ys);
    }

    #[test]
    fn fork_is_deterministic_and_disjoint() {
        let state = RngState::new(42);
        let once = state.fork(16);
        let twice = state.fork(16);
        assert_eq!(once, twice);
        let mut streams: Vec<u64> = once.iter().map(|s| s.stream()).collect();
        streams.push(state.stream());
        streams.sort_unstable();
        streams.dedup();
        assert_eq!(streams.len(), 17, "forked streams must not collide");
    }

    #[test]
    fn nested_forks_do_not_collide() {
        let root = RngState::new(1);
        let mut seen = std::collections::HashSet::new();
        for child in root.fork(50) {
            for grand in child.fork(50) {
                assert!(seen.insert(grand.stream()), "stream id reused");
            }
        }
    }

    #[test]
    fn shuffle_preserves_multiset() {
        let x = [3.5, -1.0, 0.0, 7.25, 3.5, 2.0];
        let mut rng = RngState::new(9).rng();
        for _ in 0..100 {
            let mut s = shuffle(&x, &mut rng);
            s.sort_by(f64::total_cmp);
            let mut orig = x.to_vec();
            orig.sort_by(f64::total_cmp);
            assert_eq!(s, orig);
        }
    }

    #[test]
    fn shuffle_orders_are_uniform() {
        // All 6 orders of 3 distinct values should appear with frequency
        // near 1/6 over many draws; a fixed seed makes this deterministic.
        let x = [1.0, 2.0, 3.0];
        let mut rng = RngState::new(4).rng();
        let mut freq = std::collections::HashMap::new();
        let reps = 60_000;
        for _ in 0..reps {
            let s = shuffle(&x, &mut rng);
            *freq.entry(format!("{s:?}")).or_insert(0usize) += 1;
        }
        assert_eq!(freq.len(), 6);
        for (order, count) in freq {
            let f = count as f64 / reps as f64;
            assert!(
                (f - 1.0 / 6.0).abs() < 0.01,
                "order {order} frequency {f}"
            );
        }
    }

    #[test]
    fn bootstrap_indices_cover_uniformly() {
        let n = 10;
        let mut rng = RngState::new(12).rng();
        let mut counts = vec![0usize; n];
        let draws = 100_000;
        for _ in 0..draws / n {
            for i in bootstrap_indices(n, &mut rng) {
                counts[i] += 1;
            }
        }
        // Each index has expectation draws/n with sd ≈ sqrt(draws (1/n)(1−1/n)).
        let expect = draws as f64 / n as f64;
        let sd = (draws as f64 * (1.0 / n as f64) * (1.0 - 1.0 / n as f64)).sqrt();
        for (i, c) in counts.iter().enumerate() {
            assert!(
                (*c as f64 - expect).abs() < 3.0 * sd,
                "index {i} count {c} vs {expect}"
            );
        }
    }

    #[test]
    fn multinomial_counts_sum_to_n() {
        let mut rng = RngState::new(3).rng();
        for n in [1usize, 2, 7, 40] {
            for _ in 0..50 {
                let c = multinomial_counts(n, &mut rng);
                assert_eq!(c.len(), n);
                assert_eq!(c.iter().map(|&v| v as u64).sum::<u64>(), n as u64);
            }
        }
    }

    #[test]
    fn multinomial_moments_match_binomial() {
        // Marginal count is Binomial(N, 1/N): mean 1, variance 1 − 1/N.
        let n = 40;
        let reps = 100_000;
        let mut rng = RngState::new(21).rng();
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..reps {
            let c = multinomial_counts(n, &mut rng)[0] as f64;
            sum += c;
            sumsq += c * c;
        }
        let mean = sum / reps as f64;
        let var = sumsq / reps as f64 - mean * mean;
        let var_want = 1.0 - 1.0 / n as f64;
        // 3σ bands: sd(mean) = sd/√reps; sd(var) ≈ sqrt((μ4 − σ⁴)/reps)
        // with μ4 ≈ 4 for a near-Poisson(1) count.
        let mean_band = 3.0 * var_want.sqrt() / (reps as f64).sqrt();
        let var_band = 3.0 * ((4.0 - var_want * var_want) / reps as f64).sqrt();
        assert!((mean - 1.0).abs() < mean_band, "mean {mean}");
        assert!((var - var_want).abs() < var_band, "var {var}");
    }

    #[test]
    fn weight_matrix_columns_are_forked_by_index() {
        let state = RngState::new(8);
        let w = WeightMatrix::draw(12, 5, state);
        for j in 0..5 {
            let col = w.column(j);
            assert_eq!(col.iter().map(|&v| v as u64).sum::<u64>(), 12);
            // Column j must equal a fresh draw from the j-th sub-stream.
            let mut rng = state.fork(5)[j].rng();
            let direct = multinomial_counts(12, &mut rng);
            assert_eq!(col, &direct[..]);
        }
        // Weights are counts/n exactly.
        assert_eq!(w.weight(0, 0), w.column(0)[0] as f64 / 12.0);
    }

    #[test]
    fn resample_plan_rounds_the_side() {
        let plan = ResamplePlan::new(999).unwrap();
        assert_eq!(plan.b_side(), 32);
        assert_eq!(plan.b_effective(), 1024);
        let plan = ResamplePlan::new(19_999).unwrap();
        assert_eq!(plan.b_side(), 141);
        assert_eq!(plan.b_effective(), 19_881);
        let plan = ResamplePlan::new(1).unwrap();
        assert_eq!(plan.b_side(), 1);
        assert!(ResamplePlan::new(0).is_err());
    }

    #[test]
    fn uniform_index_is_unbiased_at_boundaries() {
        let mut rng = RngState::new(2).rng();
        for _ in 0..1000 {
            assert_eq!(rng.uniform_index(1), 0);
            assert!(rng.uniform_index(2) < 2);
            assert!(rng.uniform_index(usize::MAX / 2) < usize::MAX / 2);
        }
    }
}
