//! Seeded, stream-splittable randomness and the sampling/quantile
//! primitives used by the resampling engines.
//!
//! Every random quantity in this crate is a pure function of an
//! [`RngStream`] value, so results never depend on thread scheduling.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};

/// A named position in the keyed family of independent random streams
/// derived from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        RngStream {
            master_seed,
            stream_id,
        }
    }

    /// Materializes the generator for this stream. Identical
    /// `(master_seed, stream_id)` pairs yield bit-identical sequences.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Derives a sub-stream, e.g. for a retry of a failed replicate.
    pub fn child(&self, tag: u64) -> RngStream {
        RngStream::new(self.master_seed, mix64(self.stream_id ^ mix64(tag)))
    }
}

/// splitmix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `b` distinct row indices into a dataset of size `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetDraw {
    pub indices: Vec<usize>,
}

/// Multinomial repetition frequencies for a resample; the entries sum to
/// the full-data size `n` exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResampleWeights {
    pub weights: Vec<u64>,
}

impl ResampleWeights {
    pub fn total(&self) -> u64 {
        self.weights.iter().sum()
    }
}

/// Draws a uniformly distributed `b`-subset of `{0, .., n-1}` without
/// replacement.
pub fn sample_without_replacement(n: usize, b: usize, rng: &mut impl Rng) -> Result<SubsetDraw> {
    if b == 0 || b > n {
        return Err(Error::InvalidArgument(format!(
            "subset size b={b} must satisfy 1 <= b <= n={n}"
        )));
    }
    let indices = rand::seq::index::sample(rng, n, b).into_vec();
    Ok(SubsetDraw { indices })
}

/// Draws from the `n`-trial uniform multinomial over `b` categories using
/// the sequential conditional-binomial method, so the cost is O(b) rather
/// than O(n).
pub fn multinomial_uniform(n: u64, b: usize, rng: &mut impl Rng) -> Result<ResampleWeights> {
    if n == 0 || b == 0 {
        return Err(Error::InvalidArgument(
            "multinomial requires n >= 1 and b >= 1".into(),
        ));
    }
    let mut weights = Vec::with_capacity(b);
    let mut remaining = n;
    for i in 0..b - 1 {
        let p = 1.0 / (b - i) as f64;
        let w = if remaining == 0 {
            0
        } else {
            Binomial::new(remaining, p)
                .map_err(|e| Error::Numeric(format!("binomial: {e}")))?
                .sample(rng)
        };
        weights.push(w);
        remaining -= w;
    }
    weights.push(remaining);
    Ok(ResampleWeights { weights })
}

/// The `ceil(v * S)`-th order statistic of `values` (inverse ECDF).
pub fn empirical_quantile(values: &[f64], v: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument(
            "empirical_quantile: empty input".into(),
        ));
    }
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "empirical_quantile: v={v} must lie in (0, 1)"
        )));
    }
    if values.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidArgument(
            "empirical_quantile: NaN in input".into(),
        ));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let s = sorted.len();
    let k = (v * s as f64).ceil() as usize;
    let k = k.clamp(1, s);
    Ok(sorted[k - 1])
}

/// Draws `count` i.i.d. rows from the mean-zero multivariate normal with
/// the given covariance, via its Cholesky factor.
pub fn sample_mvn(count: usize, cov: &DMatrix<f64>, rng: &mut impl Rng) -> Result<DMatrix<f64>> {
    let dim = cov.nrows();
    if dim == 0 || cov.ncols() != dim {
        return Err(Error::InvalidArgument("sample_mvn: bad covariance".into()));
    }
    let chol = nalgebra::Cholesky::new(cov.clone())
        .ok_or_else(|| Error::Numeric("sample_mvn: covariance not positive definite".into()))?;
    let l = chol.l();
    let z = DMatrix::from_fn(count, dim, |_, _| {
        rng.sample::<f64, _>(rand_distr::StandardNormal)
    });
    // rows are z_i' L', so each row has covariance L L' = cov
    Ok(z * l.transpose())
}

/// Mean-zero normal draws with covariance `rho^|i-j|`.
pub fn sample_mvn_ar1(
    count: usize,
    dim: usize,
    rho: f64,
    rng: &mut impl Rng,
) -> Result<DMatrix<f64>> {
    if dim == 0 {
        return Err(Error::InvalidArgument("sample_mvn_ar1: dim >= 1".into()));
    }
    if !(rho.abs() < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "sample_mvn_ar1: |rho|={} must be < 1",
            rho.abs()
        )));
    }
    sample_mvn(count, &ar1_covariance(dim, rho), rng)
}

/// The matrix `(rho^|i-j|)_{ij}`.
pub fn ar1_covariance(dim: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |i, j| rho.powi((i as i32 - j as i32).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
        RngStream::new(seed, stream).rng()
    }

    #[test]
    fn full_subset_is_a_permutation() {
        let draw = sample_without_replacement(5, 5, &mut rng(1, 0)).unwrap();
        let set: HashSet<usize> = draw.indices.iter().copied().collect();
        assert_eq!(set, (0..5).collect());
    }

    #[test]
    fn subset_size_matches_paper_exponent() {
        let n = 100_000usize;
        let b = (n as f64).powf(0.7).floor() as usize;
        assert_eq!(b, 3162);
        let draw = sample_without_replacement(n, b, &mut rng(7, 3)).unwrap();
        let set: HashSet<usize> = draw.indices.iter().copied().collect();
        assert_eq!(set.len(), 3162);
        assert!(draw.indices.iter().all(|&i| i < n));
    }

    #[test]
    fn subset_pairs_are_uniform() {
        // Enumerate all C(4,2)=6 pairs; chi-square style check on frequencies.
        let mut counts = std::collections::HashMap::new();
        let mut r = rng(42, 0);
        let reps = 100_000;
        for _ in 0..reps {
            let mut idx = sample_without_replacement(4, 2, &mut r).unwrap().indices;
            idx.sort_unstable();
            *counts.entry((idx[0], idx[1])).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 6);
        for (&pair, &c) in &counts {
            let freq = c as f64 / reps as f64;
            assert!(
                (freq - 1.0 / 6.0).abs() < 0.01,
                "pair {pair:?} frequency {freq}"
            );
        }
    }

    #[test]
    fn errors_on_bad_subset_size() {
        assert!(sample_without_replacement(3, 4, &mut rng(0, 0)).is_err());
        assert!(sample_without_replacement(3, 0, &mut rng(0, 0)).is_err());
    }

    #[test]
    fn multinomial_single_category() {
        let w = multinomial_uniform(7, 1, &mut rng(0, 0)).unwrap();
        assert_eq!(w.weights, vec![7]);
    }

    #[test]
    fn multinomial_sums_exactly() {
        let w = multinomial_uniform(100_000, 3162, &mut rng(5, 9)).unwrap();
        assert_eq!(w.weights.len(), 3162);
        assert_eq!(w.total(), 100_000);
    }

    #[test]
    fn multinomial_marginal_matches_binomial_pmf() {
        // P(w_1 = 3) for n=6, b=2 is C(6,3)/2^6 = 0.3125 (exact pmf oracle).
        let mut r = rng(11, 2);
        let reps = 100_000;
        let mut hits = 0usize;
        for _ in 0..reps {
            let w = multinomial_uniform(6, 2, &mut r).unwrap();
            assert_eq!(w.total(), 6);
            if w.weights[0] == 3 {
                hits += 1;
            }
        }
        let freq = hits as f64 / reps as f64;
        assert!((freq - 0.3125).abs() < 0.01, "freq {freq}");
    }

    #[test]
    fn quantile_order_statistics() {
        assert_eq!(
            empirical_quantile(&[-2.0, -1.0, 0.0, 1.0, 2.0], 0.5).unwrap(),
            0.0
        );
        assert_eq!(empirical_quantile(&[5.0], 0.3).unwrap(), 5.0);
        let v: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(empirical_quantile(&v, 0.975).unwrap(), 98.0);
    }

    #[test]
    fn quantile_rejects_empty() {
        assert!(empirical_quantile(&[], 0.5).is_err());
    }

    #[test]
    fn streams_reproduce_bit_identically() {
        let a = sample_without_replacement(1000, 100, &mut rng(99, 7)).unwrap();
        let b = sample_without_replacement(1000, 100, &mut rng(99, 7)).unwrap();
        assert_eq!(a, b);
        let w1 = multinomial_uniform(5000, 100, &mut rng(99, 8)).unwrap();
        let w2 = multinomial_uniform(5000, 100, &mut rng(99, 8)).unwrap();
        assert_eq!(w1, w2);
    }

    #[test]
    fn distinct_streams_pass_uniformity() {
        // Basic chi-square uniformity of u64 % 16 per stream.
        for stream in 0..4u64 {
            let mut r = rng(123, stream);
            let mut counts = [0usize; 16];
            let draws = 16_000;
            for _ in 0..draws {
                counts[(r.random::<u64>() % 16) as usize] += 1;
            }
            let expected = draws as f64 / 16.0;
            let chi2: f64 = counts
                .iter()
                .map(|&c| (c as f64 - expected).powi(2) / expected)
                .sum();
            // df = 15; the 0.999 quantile is ~37.7
            assert!(chi2 < 37.7, "stream {stream} chi2 {chi2}");
        }
    }

    #[test]
    fn mvn_ar1_moments() {
        let mut r = rng(2024, 0);
        let x = sample_mvn_ar1(100_000, 5, 0.5, &mut r).unwrap();
        let col = |j: usize| x.column(j);
        let n = x.nrows() as f64;
        let var0 = col(0).iter().map(|v| v * v).sum::<f64>() / n;
        assert!((var0 - 1.0).abs() < 0.05, "var {var0}");
        let cov01 = col(0).iter().zip(col(1).iter()).map(|(a, b)| a * b).sum::<f64>() / n;
        assert!((cov01 - 0.5).abs() < 0.02, "cov {cov01}");

        let y = sample_mvn_ar1(100_000, 2, 0.0, &mut r).unwrap();
        let cov = y.column(0).iter().zip(y.column(1).iter()).map(|(a, b)| a * b).sum::<f64>()
            / y.nrows() as f64;
        assert!(cov.abs() < 0.02, "cov {cov}");
    }

    #[test]
    fn mvn_ar1_rejects_unit_rho() {
        assert!(sample_mvn_ar1(10, 3, 1.0, &mut rng(0, 0)).is_err());
    }
}
