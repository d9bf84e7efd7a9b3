//! Subsampled double bootstrap: confidence intervals for all mediation
//! products from weighted fits on small random subsets. Each replicate's
//! root is sqrt(n) times the weighted-resample product minus the subset's
//! own product (the resample is drawn from the subset's empirical
//! distribution); the empirical root quantiles are pivoted around the
//! full-data estimate.

use rayon::prelude::*;
use serde::Serialize;
use std::time::{Duration, Instant};

use crate::data::{Dataset, OutcomeKind};
use crate::error::{Error, Result};
use crate::mediation::{fit_mediation, fit_mediation_weighted, MediationFit};
use crate::regression::WeightedSample;
use crate::stochastics::{
    empirical_quantile, multinomial_uniform, sample_without_replacement, RngStream,
};

/// How the subset size `b` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SubsetSize {
    /// b = floor(n^r) for r in (0, 1).
    Exponent(f64),
    /// Fixed b, for experiments that vary n at constant b.
    Explicit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SdbConfig {
    pub subset: SubsetSize,
    /// Number of bootstrap replicates S.
    pub replicates: usize,
    /// Overall miscoverage delta; intervals are (1 - delta) two-sided.
    pub level_delta: f64,
    pub master_seed: u64,
}

impl SdbConfig {
    pub fn validate(&self, n: usize) -> Result<usize> {
        if self.replicates < 2 {
            return Err(Error::InvalidArgument(format!(
                "replicates S={} must be at least 2",
                self.replicates
            )));
        }
        if !(self.level_delta > 0.0 && self.level_delta < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "level delta={} must lie in (0, 1)",
                self.level_delta
            )));
        }
        let b = match self.subset {
            SubsetSize::Exponent(r) => {
                if !(r > 0.0 && r < 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "subset exponent r={r} must lie in (0, 1)"
                    )));
                }
                (n as f64).powf(r).floor() as usize
            }
            SubsetSize::Explicit(b) => b,
        };
        if b < 2 || b > n {
            return Err(Error::InvalidArgument(format!(
                "resolved subset size b={b} must satisfy 2 <= b <= n={n}"
            )));
        }
        Ok(b)
    }
}

/// The S root-function values per mediator (failed replicates are counted
/// separately, never silently dropped).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootStatistics {
    /// `per_mediator[k]` holds the values for mediator k across the
    /// successful replicates.
    pub per_mediator: Vec<Vec<f64>>,
}

/// One mediator's interval pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalRow {
    /// Full-data product estimate.
    pub product: f64,
    pub ci_single: (f64, f64),
    /// Bonferroni-adjusted interval (tails delta / (2d)).
    pub ci_adjusted: (f64, f64),
    /// Empirical quantiles that produced `ci_single`.
    pub quantiles_single: (f64, f64),
    /// Empirical quantiles that produced `ci_adjusted`.
    pub quantiles_adjusted: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalReport {
    pub n: usize,
    /// Subset size; equals n for the full-bootstrap baseline.
    pub b: usize,
    pub replicates: usize,
    pub failures: usize,
    pub level_delta: f64,
    pub rows: Vec<IntervalRow>,
}

/// Wall-clock cost split: the single full-data fit vs the replicate loop.
#[derive(Debug, Clone, Copy)]
pub struct SdbTiming {
    pub full_fit: Duration,
    pub replicate_loop: Duration,
}

const RETRY_LIMIT: u64 = 3;
const FAILURE_FRACTION: f64 = 0.05;

/// Per-mediator product differences (weighted resample minus plain subset)
/// from one subset-resample replicate, retrying degenerate draws with fresh
/// sub-streams. The resample is drawn from the subset's empirical
/// distribution, so its root is centered at the subset's own estimate.
fn sdb_replicate(
    data: &Dataset,
    kind: OutcomeKind,
    b: usize,
    master_seed: u64,
    s: usize,
) -> Option<Vec<f64>> {
    let n = data.n();
    let unit_weights = vec![1u64; b];
    for attempt in 0..=RETRY_LIMIT {
        let stream = RngStream::new(master_seed, (s as u64) * (RETRY_LIMIT + 1) + attempt);
        let mut rng = stream.rng();
        let subset = sample_without_replacement(n, b, &mut rng).ok()?;
        let weights = multinomial_uniform(n as u64, b, &mut rng).ok()?;
        let plain = WeightedSample {
            data,
            rows: Some(&subset.indices),
            weights: &unit_weights,
        };
        let resample = WeightedSample {
            data,
            rows: Some(&subset.indices),
            weights: &weights.weights,
        };
        let subset_fit = match fit_mediation_weighted(&plain, kind) {
            Ok(f) => f,
            Err(_) => continue,
        };
        if let Ok(fit) = fit_mediation_weighted(&resample, kind) {
            return Some(
                fit.paths
                    .iter()
                    .zip(&subset_fit.paths)
                    .map(|(w, p)| w.product - p.product)
                    .collect(),
            );
        }
    }
    None
}

fn full_bootstrap_replicate(
    data: &Dataset,
    kind: OutcomeKind,
    master_seed: u64,
    s: usize,
) -> Option<Vec<f64>> {
    let n = data.n();
    for attempt in 0..=RETRY_LIMIT {
        let stream = RngStream::new(master_seed, (s as u64) * (RETRY_LIMIT + 1) + attempt);
        let mut rng = stream.rng();
        let weights = multinomial_uniform(n as u64, n, &mut rng).ok()?;
        let sample = WeightedSample {
            data,
            rows: None,
            weights: &weights.weights,
        };
        if let Ok(fit) = fit_mediation_weighted(&sample, kind) {
            return Some(fit.paths.iter().map(|p| p.product).collect());
        }
    }
    None
}

fn collect_replicates(
    results: Vec<Option<Vec<f64>>>,
    d: usize,
    total: usize,
) -> Result<(Vec<Vec<f64>>, usize)> {
    let failures = results.iter().filter(|r| r.is_none()).count();
    let limit = (total as f64 * FAILURE_FRACTION).floor() as usize;
    if failures > limit {
        return Err(Error::TooManyFailures {
            failed: failures,
            total,
            limit,
        });
    }
    let mut per_mediator = vec![Vec::with_capacity(total - failures); d];
    for rep in results.into_iter().flatten() {
        for (k, v) in rep.into_iter().enumerate() {
            per_mediator[k].push(v);
        }
    }
    Ok((per_mediator, failures))
}

/// Pivotal interval pair for one mediator from its root-function sample.
fn pivotal_row(product: f64, roots: &[f64], n: usize, delta: f64, d: usize) -> Result<IntervalRow> {
    let sqrt_n = (n as f64).sqrt();
    let (lo_s, hi_s) = (delta / 2.0, 1.0 - delta / 2.0);
    let (lo_a, hi_a) = (delta / (2.0 * d as f64), 1.0 - delta / (2.0 * d as f64));
    let q = |v: f64| empirical_quantile(roots, v);
    let (ql_s, qh_s) = (q(lo_s)?, q(hi_s)?);
    let (ql_a, qh_a) = (q(lo_a)?, q(hi_a)?);
    Ok(IntervalRow {
        product,
        ci_single: (product - qh_s / sqrt_n, product - ql_s / sqrt_n),
        ci_adjusted: (product - qh_a / sqrt_n, product - ql_a / sqrt_n),
        quantiles_single: (ql_s, qh_s),
        quantiles_adjusted: (ql_a, qh_a),
    })
}

/// Percentile interval pair for one mediator from its resampled products.
fn percentile_row(product: f64, draws: &[f64], delta: f64, d: usize) -> Result<IntervalRow> {
    let (lo_s, hi_s) = (delta / 2.0, 1.0 - delta / 2.0);
    let (lo_a, hi_a) = (delta / (2.0 * d as f64), 1.0 - delta / (2.0 * d as f64));
    let q = |v: f64| empirical_quantile(draws, v);
    let (ql_s, qh_s) = (q(lo_s)?, q(hi_s)?);
    let (ql_a, qh_a) = (q(lo_a)?, q(hi_a)?);
    Ok(IntervalRow {
        product,
        ci_single: (ql_s, qh_s),
        ci_adjusted: (ql_a, qh_a),
        quantiles_single: (ql_s, qh_s),
        quantiles_adjusted: (ql_a, qh_a),
    })
}

/// Interval report from precomputed root statistics; exposed so that the
/// interval arithmetic can be exercised on constructed root samples.
pub fn intervals_from_roots(
    full_fit: &MediationFit,
    roots: &RootStatistics,
    n: usize,
    b: usize,
    replicates: usize,
    failures: usize,
    delta: f64,
) -> Result<IntervalReport> {
    let d = full_fit.paths.len();
    let rows = full_fit
        .paths
        .iter()
        .zip(&roots.per_mediator)
        .map(|(p, r)| pivotal_row(p.product, r, n, delta, d))
        .collect::<Result<Vec<_>>>()?;
    Ok(IntervalReport {
        n,
        b,
        replicates,
        failures,
        level_delta: delta,
        rows,
    })
}

/// Runs the subsampled double bootstrap, also returning the wall-clock
/// split between the one full-data fit and the replicate loop.
pub fn run_sdb_timed(
    data: &Dataset,
    kind: OutcomeKind,
    cfg: &SdbConfig,
) -> Result<(IntervalReport, SdbTiming)> {
    let n = data.n();
    let b = cfg.validate(n)?;
    let t0 = Instant::now();
    let full = fit_mediation(data, kind)?;
    let full_fit_time = t0.elapsed();
    let d = full.paths.len();

    let t1 = Instant::now();
    // Replicates are independent; results are merged by index, so the
    // output is the same for any scheduling.
    let results: Vec<Option<Vec<f64>>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|s| sdb_replicate(data, kind, b, cfg.master_seed, s))
        .collect();
    let replicate_time = t1.elapsed();

    let (mut per_mediator, failures) = collect_replicates(results, d, cfg.replicates)?;
    let sqrt_n = (n as f64).sqrt();
    for list in per_mediator.iter_mut() {
        for v in list.iter_mut() {
            *v *= sqrt_n;
        }
    }
    let roots = RootStatistics { per_mediator };
    let report = intervals_from_roots(&full, &roots, n, b, cfg.replicates, failures, cfg.level_delta)?;
    Ok((
        report,
        SdbTiming {
            full_fit: full_fit_time,
            replicate_loop: replicate_time,
        },
    ))
}

pub fn run_sdb(data: &Dataset, kind: OutcomeKind, cfg: &SdbConfig) -> Result<IntervalReport> {
    run_sdb_timed(data, kind, cfg).map(|(r, _)| r)
}

/// Classical n-out-of-n bootstrap with percentile intervals — the
/// comparison baseline.
pub fn run_full_bootstrap(
    data: &Dataset,
    kind: OutcomeKind,
    replicates: usize,
    delta: f64,
    master_seed: u64,
) -> Result<IntervalReport> {
    let n = data.n();
    let cfg = SdbConfig {
        subset: SubsetSize::Explicit(n),
        replicates,
        level_delta: delta,
        master_seed,
    };
    cfg.validate(n)?;
    let full = fit_mediation(data, kind)?;
    let d = full.paths.len();

    let results: Vec<Option<Vec<f64>>> = (0..replicates)
        .into_par_iter()
        .map(|s| full_bootstrap_replicate(data, kind, master_seed, s))
        .collect();
    let (per_mediator, failures) = collect_replicates(results, d, replicates)?;

    let rows = full
        .paths
        .iter()
        .zip(&per_mediator)
        .map(|(p, draws)| percentile_row(p.product, draws, delta, d))
        .collect::<Result<Vec<_>>>()?;
    Ok(IntervalReport {
        n,
        b: n,
        replicates,
        failures,
        level_delta: delta,
        rows,
    })
}
