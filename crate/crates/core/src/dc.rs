//! Divide-and-conquer Sobel testing: shuffle the rows into J equal-size
//! blocks, fit the mediation system in each block, average the products
//! and pool the Sobel variances, then apply Bonferroni-adjusted z-tests.

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{Dataset, OutcomeKind};
use crate::error::{Error, Result};
use crate::mediation::{fit_mediation, MediationFit, PathEstimate};
use crate::stochastics::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DcConfig {
    /// Number of blocks J.
    pub blocks: usize,
    pub shuffle_seed: u64,
    /// Rejection threshold for the adjusted p-values.
    pub significance: f64,
}

impl DcConfig {
    pub fn new(blocks: usize, shuffle_seed: u64) -> Self {
        DcConfig {
            blocks,
            shuffle_seed,
            significance: 0.05,
        }
    }
}

/// Per-block, per-mediator path estimates; the grid must be complete
/// before aggregation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockEstimates {
    /// `per_block[j][k]` is mediator k's estimate in block j.
    pub per_block: Vec<Vec<PathEstimate>>,
}

/// One mediator's aggregated test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MediatorTest {
    /// 1-based mediator index.
    pub mediator: usize,
    pub estimate: f64,
    pub se: f64,
    pub statistic: f64,
    /// Bonferroni-adjusted p-value 2d(1 - Phi(|T|)), which can exceed 1.
    pub p_adjusted_raw: f64,
    pub p_adjusted_capped: f64,
    pub rejected: bool,
    /// Set when both the estimate and the pooled SE are zero (0/0); the
    /// statistic is then reported as 0.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DcTestReport {
    pub blocks: usize,
    pub significance: f64,
    pub mediators: Vec<MediatorTest>,
    /// 1-based indices of the rejected (significant) mediators.
    pub significant_set: Vec<usize>,
}

/// Shuffles `0..n` by the config seed and splits contiguously; block sizes
/// differ by at most one, the first `n mod J` blocks taking the extra row.
/// With J = 1 the shuffle is skipped, so the single block preserves the
/// original row order.
pub fn partition(n: usize, cfg: &DcConfig) -> Result<Vec<Vec<usize>>> {
    let j = cfg.blocks;
    if j == 0 || j > n {
        return Err(Error::InvalidArgument(format!(
            "blocks J={j} must satisfy 1 <= J <= n={n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    if j > 1 {
        use rand::seq::SliceRandom;
        order.shuffle(&mut RngStream::new(cfg.shuffle_seed, 0).rng());
    }
    let base = n / j;
    let extra = n % j;
    let mut blocks = Vec::with_capacity(j);
    let mut start = 0;
    for idx in 0..j {
        let size = base + usize::from(idx < extra);
        blocks.push(order[start..start + size].to_vec());
        start += size;
    }
    Ok(blocks)
}

/// Pools a complete block grid into the final estimates, statistics and
/// adjusted p-values.
pub fn aggregate(blocks: &BlockEstimates, significance: f64) -> Result<DcTestReport> {
    let j = blocks.per_block.len();
    if j == 0 {
        return Err(Error::InvalidArgument("no blocks to aggregate".into()));
    }
    let d = blocks.per_block[0].len();
    if blocks.per_block.iter().any(|b| b.len() != d) {
        return Err(Error::InvalidArgument(
            "incomplete block grid: mediator counts differ across blocks".into(),
        ));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let jf = j as f64;
    let mut mediators = Vec::with_capacity(d);
    let mut significant_set = Vec::new();
    for k in 0..d {
        let estimate = blocks.per_block.iter().map(|b| b[k].product).sum::<f64>() / jf;
        let sum_var = blocks
            .per_block
            .iter()
            .map(|b| b[k].sobel_se * b[k].sobel_se)
            .sum::<f64>();
        let se = sum_var.sqrt() / jf;
        let (statistic, degenerate) = if se == 0.0 {
            if estimate != 0.0 {
                return Err(Error::DegenerateVariance { mediator: k + 1 });
            }
            (0.0, true)
        } else {
            (estimate / se, false)
        };
        let p_adjusted_raw = 2.0 * d as f64 * (1.0 - normal.cdf(statistic.abs()));
        let rejected = p_adjusted_raw < significance;
        if rejected {
            significant_set.push(k + 1);
        }
        mediators.push(MediatorTest {
            mediator: k + 1,
            estimate,
            se,
            statistic,
            p_adjusted_raw,
            p_adjusted_capped: p_adjusted_raw.min(1.0),
            rejected,
            degenerate,
        });
    }
    Ok(DcTestReport {
        blocks: j,
        significance,
        mediators,
        significant_set,
    })
}

/// Runs the divide-and-conquer Sobel test end to end. Deterministic given
/// the shuffle seed; with J = 1 it is identical to the full-data analysis.
pub fn run_dc_sobel(data: &Dataset, kind: OutcomeKind, cfg: &DcConfig) -> Result<DcTestReport> {
    let n = data.n();
    let p = 2 + data.n_mediators() + data.n_covariates();
    let max_j = n / (p + 2);
    if cfg.blocks == 0 || cfg.blocks > max_j.max(1).min(n) {
        return Err(Error::InvalidArgument(format!(
            "blocks J={} must satisfy 1 <= J <= n/(p+2) = {}",
            cfg.blocks,
            max_j.max(1).min(n)
        )));
    }
    if !(cfg.significance > 0.0 && cfg.significance < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "significance {} must lie in (0, 1)",
            cfg.significance
        )));
    }
    let blocks = partition(n, cfg)?;
    let fits: Vec<MediationFit> = blocks
        .par_iter()
        .enumerate()
        .map(|(jdx, rows)| {
            fit_mediation(&data.select_rows(rows), kind).map_err(|e| Error::BlockFit {
                block: jdx + 1,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let grid = BlockEstimates {
        per_block: fits.into_iter().map(|f| f.paths).collect(),
    };
    aggregate(&grid, cfg.significance)
}

/// The standard full-data Sobel analysis (no partitioning) — by
/// construction the same arithmetic as `run_dc_sobel` with J = 1.
pub fn full_data_sobel(
    data: &Dataset,
    kind: OutcomeKind,
    significance: f64,
) -> Result<DcTestReport> {
    let fit = fit_mediation(data, kind)?;
    let grid = BlockEstimates {
        per_block: vec![fit.paths],
    };
    aggregate(&grid, significance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;

    fn path(product: f64, sobel_se: f64) -> PathEstimate {
        PathEstimate {
            alpha_hat: product,
            beta_hat: 1.0,
            se_alpha: 0.0,
            se_beta: 0.0,
            product,
            sobel_se,
        }
    }

    #[test]
    fn partition_sizes_and_disjointness() {
        let one = partition(10, &DcConfig::new(1, 0)).unwrap();
        assert_eq!(one, vec![(0..10).collect::<Vec<_>>()]);

        let three = partition(10, &DcConfig::new(3, 5)).unwrap();
        let sizes: Vec<usize> = three.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![4, 3, 3]);
        let mut all: Vec<usize> = three.concat();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());

        let even = partition(1000, &DcConfig::new(10, 5)).unwrap();
        assert!(even.iter().all(|b| b.len() == 100));

        assert!(partition(5, &DcConfig::new(6, 0)).is_err());
        assert!(partition(5, &DcConfig::new(0, 0)).is_err());
    }

    #[test]
    fn partition_union_is_input_invariant() {
        // Whatever the input order, a fixed shuffle seed spreads the same
        // index multiset over the blocks.
        for j in [1, 3, 7] {
            let blocks = partition(50, &DcConfig::new(j, 99)).unwrap();
            let mut union: Vec<usize> = blocks.concat();
            union.sort_unstable();
            assert_eq!(union, (0..50).collect::<Vec<_>>());
        }
    }

    #[test]
    fn aggregate_two_identical_blocks() {
        let (a, s) = (0.3, 0.12);
        let grid = BlockEstimates {
            per_block: vec![vec![path(a, s)], vec![path(a, s)]],
        };
        let rep = aggregate(&grid, 0.05).unwrap();
        assert_abs_diff_eq!(rep.mediators[0].estimate, a, epsilon = 1e-15);
        assert_abs_diff_eq!(rep.mediators[0].se, s / 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn adjusted_p_value_at_1_96() {
        let grid = BlockEstimates {
            per_block: vec![vec![path(1.96, 1.0)]],
        };
        let rep = aggregate(&grid, 0.05).unwrap();
        assert_abs_diff_eq!(rep.mediators[0].statistic, 1.96, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.mediators[0].p_adjusted_raw, 0.0499958, epsilon = 1e-6);
        assert!(rep.mediators[0].rejected);
        assert_eq!(rep.significant_set, vec![1]);
    }

    #[test]
    fn raw_p_can_exceed_one_but_cap_does_not() {
        let grid = BlockEstimates {
            per_block: vec![vec![path(0.0, 1.0), path(0.1, 1.0), path(0.0, 1.0)]],
        };
        let rep = aggregate(&grid, 0.05).unwrap();
        assert!(rep.mediators[0].p_adjusted_raw > 1.0);
        assert_eq!(rep.mediators[0].p_adjusted_capped, 1.0);
        assert!(rep.significant_set.is_empty());
    }

    #[test]
    fn degenerate_variance_cases() {
        let bad = BlockEstimates {
            per_block: vec![vec![path(0.5, 0.0)]],
        };
        assert!(matches!(
            aggregate(&bad, 0.05),
            Err(Error::DegenerateVariance { mediator: 1 })
        ));

        let zero_zero = BlockEstimates {
            per_block: vec![vec![path(0.0, 0.0)]],
        };
        let rep = aggregate(&zero_zero, 0.05).unwrap();
        assert_eq!(rep.mediators[0].statistic, 0.0);
        assert!(rep.mediators[0].degenerate);
        assert!(!rep.mediators[0].rejected);
    }

    #[test]
    fn pooled_se_recovers_full_scale() {
        // Block SEs of sqrt(J) * sigma pool back to sigma exactly.
        let sigma = 0.37;
        for j in [2usize, 5, 50] {
            let grid = BlockEstimates {
                per_block: vec![vec![path(0.1, (j as f64).sqrt() * sigma)]; j],
            };
            let rep = aggregate(&grid, 0.05).unwrap();
            assert_abs_diff_eq!(rep.mediators[0].se, sigma, epsilon = 1e-12);
        }
    }

    fn random_dataset(n: usize, seed: u64) -> Dataset {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut norm = || -> f64 { rng.sample(rand_distr::StandardNormal) };
        let x: Vec<f64> = (0..n).map(|_| norm()).collect();
        let m1: Vec<f64> = x.iter().map(|v| 0.4 * v + norm()).collect();
        let m2: Vec<f64> = (0..n).map(|_| norm()).collect();
        let y: Vec<f64> = x
            .iter()
            .zip(m1.iter().zip(&m2))
            .map(|(xv, (a, b))| 0.3 * xv + 0.5 * a + 0.05 * b + norm())
            .collect();
        Dataset::new(x, vec![m1, m2], y, vec![]).unwrap()
    }

    #[test]
    fn j_equals_one_matches_full_data_analysis() {
        let data = random_dataset(300, 8);
        let dc = run_dc_sobel(&data, OutcomeKind::Continuous, &DcConfig::new(1, 123)).unwrap();
        let full = full_data_sobel(&data, OutcomeKind::Continuous, 0.05).unwrap();
        assert_eq!(dc, full);
    }

    #[test]
    fn deterministic_given_shuffle_seed() {
        let data = random_dataset(400, 15);
        let cfg = DcConfig::new(4, 77);
        let a = run_dc_sobel(&data, OutcomeKind::Continuous, &cfg).unwrap();
        let b = run_dc_sobel(&data, OutcomeKind::Continuous, &cfg).unwrap();
        assert_eq!(a, b);
        let c = run_dc_sobel(&data, OutcomeKind::Continuous, &DcConfig::new(4, 78)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn block_count_bound_enforced() {
        let data = random_dataset(60, 2);
        // p = 4, so J must not exceed 60 / 6 = 10.
        assert!(run_dc_sobel(&data, OutcomeKind::Continuous, &DcConfig::new(10, 1)).is_ok());
        let err = run_dc_sobel(&data, OutcomeKind::Continuous, &DcConfig::new(11, 1));
        assert!(matches!(err, Err(Error::InvalidArgument(_))), "{err:?}");
    }
}
