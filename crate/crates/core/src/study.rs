//! Monte-Carlo study drivers: coverage studies for the interval engines,
//! power/FWER studies for the divide-and-conquer test, wall-clock timing
//! comparisons, and single-dataset analysis reports.
//!
//! Every driver stores its per-repetition records next to the summary, and
//! each summary is a pure reduction of those records, so any table can be
//! recomputed from a persisted report.

use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;

use crate::data::{Dataset, OutcomeKind};
use crate::dc::{full_data_sobel, run_dc_sobel, DcConfig, DcTestReport};
use crate::error::{Error, Result};
use crate::mediation::{
    effects_logistic_or, fit_mediation, rare_outcome_check, EffectQuery, ModelParams, OrEffects,
    PathEstimate, RareOutcomeCheck,
};
use crate::sdb::{run_full_bootstrap, run_sdb_timed, IntervalReport, SdbConfig, SubsetSize};
use crate::simgen::{generate, lookup, NoiseInterpretation, SimScenario};
use crate::stochastics::RngStream;

/// Independent engine seed for (study seed, repetition, role).
fn sub_seed(seed: u64, rep: u64, role: u64) -> u64 {
    RngStream::new(seed, rep).child(role).stream_id
}

fn resolve_scenario(key: &str, n: usize, noise: NoiseInterpretation) -> Result<SimScenario> {
    let mut sc = lookup(key)?.with_n(n);
    sc.noise = noise;
    Ok(sc)
}

// ---------------------------------------------------------------------------
// Coverage study
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct CiStudyConfig {
    pub scenario_key: String,
    pub n: usize,
    /// Bootstrap replicates S per repetition.
    pub replicates: usize,
    /// Monte-Carlo repetitions.
    pub reps: usize,
    pub subset_exponent: f64,
    pub level_delta: f64,
    pub seed: u64,
    /// Also run the full percentile bootstrap per repetition.
    pub baseline: bool,
    pub noise: NoiseInterpretation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CiRepRecord {
    pub rep: usize,
    pub sdb: IntervalReport,
    pub baseline: Option<IntervalReport>,
}

/// Coverage and mean-length summaries for one mediator under one method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CiMediatorMetrics {
    /// 1-based mediator index.
    pub mediator: usize,
    pub true_product: f64,
    pub coverage_single: f64,
    pub coverage_adjusted: f64,
    pub mean_length_single: f64,
    pub mean_length_adjusted: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CiStudyReport {
    pub config: CiStudyConfig,
    pub true_products: Vec<f64>,
    pub sdb_metrics: Vec<CiMediatorMetrics>,
    pub baseline_metrics: Option<Vec<CiMediatorMetrics>>,
    pub records: Vec<CiRepRecord>,
}

fn interval_metrics(
    reports: &[&IntervalReport],
    truths: &[f64],
) -> Vec<CiMediatorMetrics> {
    let reps = reports.len() as f64;
    truths
        .iter()
        .enumerate()
        .map(|(k, &truth)| {
            let mut cov_s = 0.0;
            let mut cov_a = 0.0;
            let mut len_s = 0.0;
            let mut len_a = 0.0;
            for rep in reports {
                let row = &rep.rows[k];
                if row.ci_single.0 <= truth && truth <= row.ci_single.1 {
                    cov_s += 1.0;
                }
                if row.ci_adjusted.0 <= truth && truth <= row.ci_adjusted.1 {
                    cov_a += 1.0;
                }
                len_s += row.ci_single.1 - row.ci_single.0;
                len_a += row.ci_adjusted.1 - row.ci_adjusted.0;
            }
            CiMediatorMetrics {
                mediator: k + 1,
                true_product: truth,
                coverage_single: cov_s / reps,
                coverage_adjusted: cov_a / reps,
                mean_length_single: len_s / reps,
                mean_length_adjusted: len_a / reps,
            }
        })
        .collect()
}

/// Pure reduction of coverage-study records to per-mediator metrics.
pub fn summarize_ci(records: &[CiRepRecord], truths: &[f64]) -> (Vec<CiMediatorMetrics>, Option<Vec<CiMediatorMetrics>>) {
    let sdb: Vec<&IntervalReport> = records.iter().map(|r| &r.sdb).collect();
    let sdb_metrics = interval_metrics(&sdb, truths);
    let baseline: Vec<&IntervalReport> = records.iter().filter_map(|r| r.baseline.as_ref()).collect();
    let baseline_metrics = if baseline.len() == records.len() && !records.is_empty() {
        Some(interval_metrics(&baseline, truths))
    } else {
        None
    };
    (sdb_metrics, baseline_metrics)
}

pub fn true_products(params: &ModelParams) -> Vec<f64> {
    params
        .alpha
        .iter()
        .zip(&params.beta)
        .map(|(a, b)| a * b)
        .collect()
}

pub fn run_ci_study(config: &CiStudyConfig) -> Result<CiStudyReport> {
    if config.reps == 0 {
        return Err(Error::InvalidArgument("reps must be at least 1".into()));
    }
    let scenario = resolve_scenario(&config.scenario_key, config.n, config.noise)?;
    let kind = scenario.params.outcome_kind;
    let truths = true_products(&scenario.params);
    let records: Vec<CiRepRecord> = (0..config.reps)
        .into_par_iter()
        .map(|rep| -> Result<CiRepRecord> {
            let data = generate(&scenario, RngStream::new(config.seed, rep as u64))?;
            let sdb_cfg = SdbConfig {
                subset: SubsetSize::Exponent(config.subset_exponent),
                replicates: config.replicates,
                level_delta: config.level_delta,
                master_seed: sub_seed(config.seed, rep as u64, 1),
            };
            let (sdb, _) = run_sdb_timed(&data, kind, &sdb_cfg)
                .map_err(|e| Error::InvalidArgument(format!("repetition {rep}: {e}")))?;
            let baseline = if config.baseline {
                Some(
                    run_full_bootstrap(
                        &data,
                        kind,
                        config.replicates,
                        config.level_delta,
                        sub_seed(config.seed, rep as u64, 2),
                    )
                    .map_err(|e| Error::InvalidArgument(format!("repetition {rep}: {e}")))?,
                )
            } else {
                None
            };
            Ok(CiRepRecord { rep, sdb, baseline })
        })
        .collect::<Result<Vec<_>>>()?;
    let (sdb_metrics, baseline_metrics) = summarize_ci(&records, &truths);
    Ok(CiStudyReport {
        config: config.clone(),
        true_products: truths,
        sdb_metrics,
        baseline_metrics,
        records,
    })
}

// ---------------------------------------------------------------------------
// Power / FWER study
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct TestStudyConfig {
    pub scenario_key: String,
    pub n: usize,
    pub blocks_list: Vec<usize>,
    pub reps: usize,
    pub significance: f64,
    pub seed: u64,
    pub noise: NoiseInterpretation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestRepRecord {
    pub rep: usize,
    /// One report per entry of `blocks_list`, in order.
    pub per_blocks: Vec<DcTestReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductMetrics {
    pub mediator: usize,
    pub true_product: f64,
    pub mean_estimate: f64,
    pub bias: f64,
    pub mse: f64,
    /// Monte-Carlo standard error of the mean estimate.
    pub mc_se: f64,
    pub rejection_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestBlocksMetrics {
    pub blocks: usize,
    pub power: f64,
    pub fwer: f64,
    pub per_mediator: Vec<ProductMetrics>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TestStudyReport {
    pub config: TestStudyConfig,
    /// 1-based indices of the truly nonzero products.
    pub signal_set: Vec<usize>,
    pub metrics: Vec<TestBlocksMetrics>,
    pub records: Vec<TestRepRecord>,
}

/// Pure reduction of test-study records for the `idx`-th blocks setting.
pub fn summarize_test(
    records: &[TestRepRecord],
    idx: usize,
    blocks: usize,
    truths: &[f64],
    signal_set: &[usize],
) -> TestBlocksMetrics {
    let reps = records.len() as f64;
    let d = truths.len();
    let mut per_mediator = Vec::with_capacity(d);
    for (k, &truth) in truths.iter().enumerate() {
        let estimates: Vec<f64> = records
            .iter()
            .map(|r| r.per_blocks[idx].mediators[k].estimate)
            .collect();
        let mean_estimate = estimates.iter().sum::<f64>() / reps;
        let bias = mean_estimate - truth;
        let mse = estimates.iter().map(|e| (e - truth) * (e - truth)).sum::<f64>() / reps;
        let var = estimates
            .iter()
            .map(|e| (e - mean_estimate) * (e - mean_estimate))
            .sum::<f64>()
            / (reps - 1.0).max(1.0);
        let rejection_rate = records
            .iter()
            .filter(|r| r.per_blocks[idx].mediators[k].rejected)
            .count() as f64
            / reps;
        per_mediator.push(ProductMetrics {
            mediator: k + 1,
            true_product: truth,
            mean_estimate,
            bias,
            mse,
            mc_se: (var / reps).sqrt(),
            rejection_rate,
        });
    }
    let power = if signal_set.is_empty() {
        0.0
    } else {
        signal_set
            .iter()
            .map(|&k| per_mediator[k - 1].rejection_rate)
            .sum::<f64>()
            / signal_set.len() as f64
    };
    let fwer = records
        .iter()
        .filter(|r| {
            (1..=d).any(|k| !signal_set.contains(&k) && r.per_blocks[idx].mediators[k - 1].rejected)
        })
        .count() as f64
        / reps;
    TestBlocksMetrics {
        blocks,
        power,
        fwer,
        per_mediator,
    }
}

pub fn run_test_study(config: &TestStudyConfig) -> Result<TestStudyReport> {
    if config.reps == 0 || config.blocks_list.is_empty() {
        return Err(Error::InvalidArgument(
            "test study needs reps >= 1 and at least one blocks setting".into(),
        ));
    }
    let scenario = resolve_scenario(&config.scenario_key, config.n, config.noise)?;
    let kind = scenario.params.outcome_kind;
    let truths = true_products(&scenario.params);
    let signal_set: Vec<usize> = truths
        .iter()
        .enumerate()
        .filter(|(_, t)| **t != 0.0)
        .map(|(k, _)| k + 1)
        .collect();
    let records: Vec<TestRepRecord> = (0..config.reps)
        .into_par_iter()
        .map(|rep| -> Result<TestRepRecord> {
            let data = generate(&scenario, RngStream::new(config.seed, rep as u64))?;
            let per_blocks = config
                .blocks_list
                .iter()
                .map(|&j| {
                    run_dc_sobel(
                        &data,
                        kind,
                        &DcConfig {
                            blocks: j,
                            shuffle_seed: sub_seed(config.seed, rep as u64, 100 + j as u64),
                            significance: config.significance,
                        },
                    )
                    .map_err(|e| Error::InvalidArgument(format!("repetition {rep}, J={j}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(TestRepRecord { rep, per_blocks })
        })
        .collect::<Result<Vec<_>>>()?;
    let metrics = config
        .blocks_list
        .iter()
        .enumerate()
        .map(|(idx, &j)| summarize_test(&records, idx, j, &truths, &signal_set))
        .collect();
    Ok(TestStudyReport {
        config: config.clone(),
        signal_set,
        metrics,
        records,
    })
}

// ---------------------------------------------------------------------------
// Timing study
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct TimingConfig {
    pub scenario_key: String,
    pub n: usize,
    /// Bootstrap replicates per repetition (SDB and baseline).
    pub replicates: usize,
    pub subset_exponent: f64,
    /// Blocks settings for the divide-and-conquer rows; empty to skip.
    pub blocks_list: Vec<usize>,
    /// Compare against the full percentile bootstrap.
    pub baseline: bool,
    pub repetitions: usize,
    pub level_delta: f64,
    pub seed: u64,
    pub noise: NoiseInterpretation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub label: String,
    pub seconds: Vec<f64>,
    pub mean_seconds: f64,
    pub median_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimingReport {
    pub config: TimingConfig,
    pub rows: Vec<TimingRow>,
}

fn timing_row(label: &str, mut seconds: Vec<f64>) -> TimingRow {
    let mean = seconds.iter().sum::<f64>() / seconds.len() as f64;
    seconds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = seconds.len() / 2;
    let median = if seconds.len() % 2 == 1 {
        seconds[mid]
    } else {
        (seconds[mid - 1] + seconds[mid]) / 2.0
    };
    TimingRow {
        label: label.to_string(),
        seconds: seconds.clone(),
        mean_seconds: mean,
        median_seconds: median,
    }
}

/// Times the engines on freshly generated data; data generation is outside
/// every timer. The divide-and-conquer rows time the analysis of a single
/// block of size n/J — the per-machine cost when J machines run at once.
pub fn run_timing(config: &TimingConfig) -> Result<TimingReport> {
    if config.repetitions == 0 {
        return Err(Error::InvalidArgument("repetitions must be at least 1".into()));
    }
    let scenario = resolve_scenario(&config.scenario_key, config.n, config.noise)?;
    let kind = scenario.params.outcome_kind;
    let mut sdb_loop = Vec::new();
    let mut sdb_full_fit = Vec::new();
    let mut sdb_total = Vec::new();
    let mut baseline_total = Vec::new();
    let mut dc_rows: Vec<Vec<f64>> = vec![Vec::new(); config.blocks_list.len()];

    for rep in 0..config.repetitions {
        let data = generate(&scenario, RngStream::new(config.seed, rep as u64))?;
        let sdb_cfg = SdbConfig {
            subset: SubsetSize::Exponent(config.subset_exponent),
            replicates: config.replicates,
            level_delta: config.level_delta,
            master_seed: sub_seed(config.seed, rep as u64, 1),
        };
        let (_, timing) = run_sdb_timed(&data, kind, &sdb_cfg)?;
        sdb_loop.push(timing.replicate_loop.as_secs_f64());
        sdb_full_fit.push(timing.full_fit.as_secs_f64());
        sdb_total.push((timing.replicate_loop + timing.full_fit).as_secs_f64());

        if config.baseline {
            let t = Instant::now();
            run_full_bootstrap(
                &data,
                kind,
                config.replicates,
                config.level_delta,
                sub_seed(config.seed, rep as u64, 2),
            )?;
            baseline_total.push(t.elapsed().as_secs_f64());
        }

        for (idx, &j) in config.blocks_list.iter().enumerate() {
            let block_rows: Vec<usize> = (0..data.n() / j).collect();
            let block = data.select_rows(&block_rows);
            let t = Instant::now();
            full_data_sobel(&block, kind, 0.05)?;
            dc_rows[idx].push(t.elapsed().as_secs_f64());
        }
    }

    let mut rows = vec![
        timing_row("sdb-replicate-loop", sdb_loop),
        timing_row("sdb-full-fit", sdb_full_fit),
        timing_row("sdb-total", sdb_total),
    ];
    if config.baseline {
        rows.push(timing_row("bootstrap-total", baseline_total));
    }
    for (idx, &j) in config.blocks_list.iter().enumerate() {
        rows.push(timing_row(&format!("dc-block-J{j}"), dc_rows[idx].clone()));
    }
    Ok(TimingReport {
        config: config.clone(),
        rows,
    })
}

// ---------------------------------------------------------------------------
// Single-dataset analysis
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeConfig {
    /// Run the subsampled double bootstrap intervals.
    pub sdb: Option<SdbConfig>,
    /// Blocks settings for divide-and-conquer Sobel tests; one report each.
    pub dc_blocks: Vec<usize>,
    pub dc_seed: u64,
    pub significance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeReport {
    pub n: usize,
    pub n_mediators: usize,
    pub n_covariates: usize,
    pub outcome_kind: OutcomeKind,
    pub dropped_rows: usize,
    pub config: AnalyzeConfig,
    pub gamma_hat: f64,
    pub se_gamma: f64,
    pub paths: Vec<PathEstimate>,
    /// Odds-ratio effects at the unit exposure contrast; binary only.
    pub or_effects: Option<OrEffects>,
    pub rare_outcome: Option<RareOutcomeCheck>,
    pub sdb: Option<IntervalReport>,
    pub dc: Vec<DcTestReport>,
}

/// Params assembled from point estimates, for evaluating the closed-form
/// effect formulas at the fitted coefficients.
fn params_from_fit(
    gamma_hat: f64,
    paths: &[PathEstimate],
    kind: OutcomeKind,
) -> ModelParams {
    let d = paths.len();
    ModelParams {
        c: 0.0,
        gamma: gamma_hat,
        beta: paths.iter().map(|p| p.beta_hat).collect(),
        theta: vec![],
        c_k: vec![0.0; d],
        alpha: paths.iter().map(|p| p.alpha_hat).collect(),
        eta: vec![vec![]; d],
        sigma_e: nalgebra::DMatrix::identity(d, d),
        sigma_eps: match kind {
            OutcomeKind::Continuous => Some(1.0),
            OutcomeKind::Binary => None,
        },
        outcome_kind: kind,
    }
}

pub fn analyze(
    data: &Dataset,
    kind: OutcomeKind,
    dropped_rows: usize,
    config: &AnalyzeConfig,
) -> Result<AnalyzeReport> {
    let fit = fit_mediation(data, kind)?;
    let (or_effects, rare_outcome) = match kind {
        OutcomeKind::Binary => (
            Some(effects_logistic_or(
                &params_from_fit(fit.gamma_hat, &fit.paths, kind),
                EffectQuery::default(),
            )?),
            Some(rare_outcome_check(data)?),
        ),
        OutcomeKind::Continuous => (None, None),
    };
    let sdb = match &config.sdb {
        Some(cfg) => Some(crate::sdb::run_sdb(data, kind, cfg)?),
        None => None,
    };
    let dc = config
        .dc_blocks
        .iter()
        .map(|&j| {
            run_dc_sobel(
                data,
                kind,
                &DcConfig {
                    blocks: j,
                    shuffle_seed: config.dc_seed,
                    significance: config.significance,
                },
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AnalyzeReport {
        n: data.n(),
        n_mediators: data.n_mediators(),
        n_covariates: data.n_covariates(),
        outcome_kind: kind,
        dropped_rows,
        config: config.clone(),
        gamma_hat: fit.gamma_hat,
        se_gamma: fit.se_gamma,
        paths: fit.paths,
        or_effects,
        rare_outcome,
        sdb,
        dc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn small_ci_config() -> CiStudyConfig {
        CiStudyConfig {
            scenario_key: "ci-linear-case1".into(),
            n: 400,
            replicates: 50,
            reps: 8,
            subset_exponent: 0.7,
            level_delta: 0.05,
            seed: 77,
            baseline: true,
            noise: NoiseInterpretation::Variance,
        }
    }

    #[test]
    fn ci_study_metrics_are_pure_reductions() {
        let report = run_ci_study(&small_ci_config()).unwrap();
        assert_eq!(report.records.len(), 8);
        let (sdb, baseline) = summarize_ci(&report.records, &report.true_products);
        assert_eq!(sdb, report.sdb_metrics);
        assert_eq!(baseline, report.baseline_metrics);
        for m in &report.sdb_metrics {
            assert!((0.0..=1.0).contains(&m.coverage_single));
            assert!(m.mean_length_single >= 0.0);
            assert!(m.mean_length_adjusted >= m.mean_length_single);
        }
    }

    #[test]
    fn ci_study_single_rep_coverage_is_zero_or_one() {
        let mut cfg = small_ci_config();
        cfg.reps = 1;
        cfg.baseline = false;
        let report = run_ci_study(&cfg).unwrap();
        for m in &report.sdb_metrics {
            assert!(m.coverage_single == 0.0 || m.coverage_single == 1.0);
        }
    }

    #[test]
    fn ci_study_deterministic() {
        let cfg = small_ci_config();
        let a = run_ci_study(&cfg).unwrap();
        let b = run_ci_study(&cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&a.records).unwrap(),
            serde_json::to_string(&b.records).unwrap()
        );
    }

    #[test]
    fn test_study_signal_set_and_metrics() {
        let cfg = TestStudyConfig {
            scenario_key: "test-linear-case1".into(),
            n: 600,
            blocks_list: vec![1, 3],
            reps: 6,
            significance: 0.05,
            seed: 5,
            noise: NoiseInterpretation::Variance,
        };
        let report = run_test_study(&cfg).unwrap();
        assert_eq!(report.signal_set, vec![4, 5]);
        assert_eq!(report.metrics.len(), 2);
        for m in &report.metrics {
            assert!((0.0..=1.0).contains(&m.power));
            assert!((0.0..=1.0).contains(&m.fwer));
            for pm in &m.per_mediator {
                assert!(pm.mse >= 0.0);
            }
        }
        // Reduction purity.
        let again = summarize_test(
            &report.records,
            1,
            3,
            &true_products(&lookup("test-linear-case1").unwrap().params),
            &report.signal_set,
        );
        assert_eq!(again, report.metrics[1]);
    }

    #[test]
    fn timing_report_structure() {
        let cfg = TimingConfig {
            scenario_key: "timing-sdb-linear-d5".into(),
            n: 1500,
            replicates: 20,
            subset_exponent: 0.7,
            blocks_list: vec![1, 5],
            baseline: true,
            repetitions: 3,
            level_delta: 0.05,
            seed: 3,
            noise: NoiseInterpretation::Variance,
        };
        let report = run_timing(&cfg).unwrap();
        let labels: Vec<&str> = report.rows.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(
            labels,
            vec![
                "sdb-replicate-loop",
                "sdb-full-fit",
                "sdb-total",
                "bootstrap-total",
                "dc-block-J1",
                "dc-block-J5"
            ]
        );
        for row in &report.rows {
            assert_eq!(row.seconds.len(), 3);
            assert!(row.mean_seconds >= 0.0 && row.median_seconds >= 0.0);
        }
    }

    #[test]
    fn timing_row_median_arithmetic() {
        let row = timing_row("x", vec![3.0, 1.0, 2.0]);
        assert_abs_diff_eq!(row.median_seconds, 2.0);
        assert_abs_diff_eq!(row.mean_seconds, 2.0);
        let even = timing_row("y", vec![4.0, 1.0, 2.0, 3.0]);
        assert_abs_diff_eq!(even.median_seconds, 2.5);
    }

    #[test]
    fn analyze_continuous_and_binary() {
        let sc = lookup("ci-linear-case1").unwrap().with_n(800);
        let data = generate(&sc, RngStream::new(9, 0)).unwrap();
        let cfg = AnalyzeConfig {
            sdb: Some(SdbConfig {
                subset: SubsetSize::Exponent(0.7),
                replicates: 50,
                level_delta: 0.05,
                master_seed: 4,
            }),
            dc_blocks: vec![1, 2],
            dc_seed: 11,
            significance: 0.05,
        };
        let rep = analyze(&data, OutcomeKind::Continuous, 3, &cfg).unwrap();
        assert_eq!(rep.paths.len(), 5);
        assert_eq!(rep.dc.len(), 2);
        assert_eq!(rep.dropped_rows, 3);
        assert!(rep.sdb.is_some());
        assert!(rep.or_effects.is_none());

        let scb = lookup("ci-logistic-case1").unwrap().with_n(2000);
        let datab = generate(&scb, RngStream::new(10, 0)).unwrap();
        let repb = analyze(
            &datab,
            OutcomeKind::Binary,
            0,
            &AnalyzeConfig {
                sdb: None,
                dc_blocks: vec![1],
                dc_seed: 1,
                significance: 0.05,
            },
        )
        .unwrap();
        let or = repb.or_effects.unwrap();
        assert_abs_diff_eq!(or.te_or, or.nde_or * or.nie_or, epsilon = 1e-12);
        assert!(repb.rare_outcome.is_some());
    }
}
