//! Command-line frontend: simulation, study drivers and single-dataset
//! analysis, with JSON / table / CSV output.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use medscale::data::OutcomeKind;
use medscale::error::{Error, Result};
use medscale::io::{load_csv, ColumnMapping};
use medscale::sdb::{SdbConfig, SubsetSize};
use medscale::simgen::{catalog_keys, generate, lookup, NoiseInterpretation};
use medscale::stochastics::RngStream;
use medscale::study::{
    analyze, run_ci_study, run_test_study, run_timing, AnalyzeConfig, AnalyzeReport,
    CiStudyConfig, CiStudyReport, TestStudyConfig, TestStudyReport, TimingConfig, TimingReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutcomeKindArg {
    Continuous,
    Binary,
}

impl From<OutcomeKindArg> for OutcomeKind {
    fn from(v: OutcomeKindArg) -> Self {
        match v {
            OutcomeKindArg::Continuous => OutcomeKind::Continuous,
            OutcomeKindArg::Binary => OutcomeKind::Binary,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NoiseArg {
    Variance,
    Stddev,
}

impl From<NoiseArg> for NoiseInterpretation {
    fn from(v: NoiseArg) -> Self {
        match v {
            NoiseArg::Variance => NoiseInterpretation::Variance,
            NoiseArg::Stddev => NoiseInterpretation::StdDev,
        }
    }
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Master seed (env MEDSCALE_SEED, default 0).
    #[arg(long, env = "MEDSCALE_SEED", default_value_t = 0)]
    seed: u64,
    /// Worker thread budget (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Reading of the N(0, s) scale parameters in the simulation designs.
    #[arg(long, value_enum, default_value_t = NoiseArg::Variance)]
    noise: NoiseArg,
}

#[derive(Debug, Parser)]
#[command(name = "medscale", version, about = "Mediation analysis at scale: subsampled double bootstrap intervals and divide-and-conquer Sobel tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a simulated dataset as CSV.
    Simulate {
        /// Scenario key, e.g. ci-linear-case1 (see --list).
        #[arg(long, default_value = "ci-linear-case1")]
        scenario: String,
        /// List all scenario keys and exit.
        #[arg(long)]
        list: bool,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        /// Output CSV path (stdout if omitted).
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Monte-Carlo coverage study of the interval engines.
    CiStudy {
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        /// Bootstrap replicates S per repetition.
        #[arg(long, default_value_t = 500)]
        replicates: usize,
        /// Monte-Carlo repetitions.
        #[arg(long, default_value_t = 200)]
        reps: usize,
        #[arg(long, default_value_t = 0.7)]
        subset_exponent: f64,
        /// Miscoverage delta; intervals are (1 - delta) two-sided.
        #[arg(long, default_value_t = 0.05)]
        level: f64,
        /// Also run the full percentile bootstrap baseline.
        #[arg(long)]
        baseline_bootstrap: bool,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Monte-Carlo power/FWER study of the divide-and-conquer Sobel test.
    TestStudy {
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        /// Comma-separated blocks settings, e.g. 1,5,50.
        #[arg(long, default_value = "1,5,50", value_delimiter = ',')]
        blocks: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        reps: usize,
        /// Rejection threshold for adjusted p-values.
        #[arg(long, default_value_t = 0.05)]
        level: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Wall-clock comparison of the engines (data generation excluded).
    Timing {
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        replicates: usize,
        #[arg(long, default_value_t = 0.7)]
        subset_exponent: f64,
        /// Blocks settings for the divide-and-conquer rows.
        #[arg(long, value_delimiter = ',', default_value = "")]
        blocks: Vec<usize>,
        #[arg(long)]
        baseline_bootstrap: bool,
        #[arg(long, default_value_t = 10)]
        repetitions: usize,
        #[arg(long, default_value_t = 0.05)]
        level: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Analyze a CSV dataset with SDB intervals and/or DC Sobel tests.
    Analyze {
        #[arg(long)]
        input: PathBuf,
        /// Column mapping file (key = value lines).
        #[arg(long)]
        mapping: PathBuf,
        /// Override the mapping's outcome kind.
        #[arg(long, value_enum)]
        outcome_kind: Option<OutcomeKindArg>,
        /// Method selection: sdb, dc, or both.
        #[arg(long, default_value = "both")]
        method: String,
        #[arg(long, default_value_t = 0.7)]
        subset_exponent: f64,
        #[arg(long, default_value_t = 500)]
        replicates: usize,
        #[arg(long, default_value = "1", value_delimiter = ',')]
        blocks: Vec<usize>,
        #[arg(long, default_value_t = 0.05)]
        level: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn configure_threads(threads: usize) -> Result<()> {
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn emit_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let out = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Numeric(format!("serialization: {e}")))?;
    println!("{out}");
    Ok(())
}

fn print_ci_table(rep: &CiStudyReport) {
    println!(
        "coverage study: {} (n={}, S={}, reps={}, r={}, delta={}, seed={})",
        rep.config.scenario_key,
        rep.config.n,
        rep.config.replicates,
        rep.config.reps,
        rep.config.subset_exponent,
        rep.config.level_delta,
        rep.config.seed
    );
    println!(
        "{:<9} {:>10} {:>9} {:>9} {:>10} {:>10}",
        "mediator", "truth", "cov", "cov_adj", "len", "len_adj"
    );
    for m in &rep.sdb_metrics {
        println!(
            "sdb   m{:<3} {:>10.6} {:>9.3} {:>9.3} {:>10.5} {:>10.5}",
            m.mediator,
            m.true_product,
            m.coverage_single,
            m.coverage_adjusted,
            m.mean_length_single,
            m.mean_length_adjusted
        );
    }
    if let Some(base) = &rep.baseline_metrics {
        for m in base {
            println!(
                "boot  m{:<3} {:>10.6} {:>9.3} {:>9.3} {:>10.5} {:>10.5}",
                m.mediator,
                m.true_product,
                m.coverage_single,
                m.coverage_adjusted,
                m.mean_length_single,
                m.mean_length_adjusted
            );
        }
    }
}

fn print_ci_csv(rep: &CiStudyReport) {
    println!("method,mediator,true_product,coverage_single,coverage_adjusted,mean_length_single,mean_length_adjusted");
    for m in &rep.sdb_metrics {
        println!(
            "sdb,{},{},{},{},{},{}",
            m.mediator,
            m.true_product,
            m.coverage_single,
            m.coverage_adjusted,
            m.mean_length_single,
            m.mean_length_adjusted
        );
    }
    for m in rep.baseline_metrics.iter().flatten() {
        println!(
            "bootstrap,{},{},{},{},{},{}",
            m.mediator,
            m.true_product,
            m.coverage_single,
            m.coverage_adjusted,
            m.mean_length_single,
            m.mean_length_adjusted
        );
    }
}

fn print_test_table(rep: &TestStudyReport) {
    println!(
        "test study: {} (n={}, reps={}, level={}, seed={}, signal set {:?})",
        rep.config.scenario_key,
        rep.config.n,
        rep.config.reps,
        rep.config.significance,
        rep.config.seed,
        rep.signal_set
    );
    for m in &rep.metrics {
        println!("J={:<4} power={:.3} fwer={:.3}", m.blocks, m.power, m.fwer);
        println!(
            "  {:<9} {:>10} {:>12} {:>12} {:>12} {:>8}",
            "mediator", "truth", "bias", "mse", "mc_se", "reject"
        );
        for pm in &m.per_mediator {
            println!(
                "  m{:<8} {:>10.6} {:>12.3e} {:>12.3e} {:>12.3e} {:>8.3}",
                pm.mediator, pm.true_product, pm.bias, pm.mse, pm.mc_se, pm.rejection_rate
            );
        }
    }
}

fn print_test_csv(rep: &TestStudyReport) {
    println!("blocks,power,fwer,mediator,true_product,bias,mse,mc_se,rejection_rate");
    for m in &rep.metrics {
        for pm in &m.per_mediator {
            println!(
                "{},{},{},{},{},{},{},{},{}",
                m.blocks,
                m.power,
                m.fwer,
                pm.mediator,
                pm.true_product,
                pm.bias,
                pm.mse,
                pm.mc_se,
                pm.rejection_rate
            );
        }
    }
}

fn print_timing_table(rep: &TimingReport) {
    println!(
        "timing: {} (n={}, S={}, repetitions={}, seed={})",
        rep.config.scenario_key,
        rep.config.n,
        rep.config.replicates,
        rep.config.repetitions,
        rep.config.seed
    );
    println!("{:<22} {:>12} {:>12}", "method", "mean (s)", "median (s)");
    for row in &rep.rows {
        println!(
            "{:<22} {:>12.4} {:>12.4}",
            row.label, row.mean_seconds, row.median_seconds
        );
    }
}

fn print_timing_csv(rep: &TimingReport) {
    println!("method,mean_seconds,median_seconds");
    for row in &rep.rows {
        println!("{},{},{}", row.label, row.mean_seconds, row.median_seconds);
    }
}

fn print_analyze_table(rep: &AnalyzeReport) {
    println!(
        "analysis: n={} (dropped {}), d={}, q={}, outcome={:?}",
        rep.n, rep.dropped_rows, rep.n_mediators, rep.n_covariates, rep.outcome_kind
    );
    println!("direct effect gamma_hat = {:.6} (se {:.6})", rep.gamma_hat, rep.se_gamma);
    println!(
        "{:<9} {:>11} {:>11} {:>12} {:>12}",
        "mediator", "alpha_hat", "beta_hat", "product", "sobel_se"
    );
    for (k, p) in rep.paths.iter().enumerate() {
        println!(
            "m{:<8} {:>11.6} {:>11.6} {:>12.6} {:>12.6}",
            k + 1,
            p.alpha_hat,
            p.beta_hat,
            p.product,
            p.sobel_se
        );
    }
    if let Some(or) = &rep.or_effects {
        println!(
            "odds-ratio effects (unit contrast): nde={:.6} nie={:.6} te={:.6}",
            or.nde_or, or.nie_or, or.te_or
        );
    }
    if let Some(rc) = &rep.rare_outcome {
        println!(
            "outcome prevalence {:.4}{}",
            rc.prevalence,
            if rc.warning {
                " (warning: above 0.1; odds-ratio effects are approximations for rare outcomes)"
            } else {
                ""
            }
        );
    }
    if let Some(sdb) = &rep.sdb {
        println!(
            "sdb intervals (b={}, S={}, failures={}, delta={}):",
            sdb.b, sdb.replicates, sdb.failures, sdb.level_delta
        );
        for (k, row) in sdb.rows.iter().enumerate() {
            println!(
                "  m{:<3} ci=({:.6}, {:.6}) adjusted=({:.6}, {:.6})",
                k + 1,
                row.ci_single.0,
                row.ci_single.1,
                row.ci_adjusted.0,
                row.ci_adjusted.1
            );
        }
    }
    for dc in &rep.dc {
        println!("dc sobel (J={}): significant set {:?}", dc.blocks, dc.significant_set);
        for m in &dc.mediators {
            println!(
                "  m{:<3} estimate={:.6} se={:.6} T={:.4} p_adj={:.6e} (capped {:.6}){}",
                m.mediator,
                m.estimate,
                m.se,
                m.statistic,
                m.p_adjusted_raw,
                m.p_adjusted_capped,
                if m.rejected { " *" } else { "" }
            );
        }
    }
}

fn print_analyze_csv(rep: &AnalyzeReport) {
    println!("section,mediator,a,b,c,d");
    for (k, p) in rep.paths.iter().enumerate() {
        println!("path,{},{},{},{},{}", k + 1, p.alpha_hat, p.beta_hat, p.product, p.sobel_se);
    }
    if let Some(sdb) = &rep.sdb {
        for (k, row) in sdb.rows.iter().enumerate() {
            println!(
                "sdb_ci,{},{},{},{},{}",
                k + 1,
                row.ci_single.0,
                row.ci_single.1,
                row.ci_adjusted.0,
                row.ci_adjusted.1
            );
        }
    }
    for dc in &rep.dc {
        for m in &dc.mediators {
            println!(
                "dc_J{},{},{},{},{},{}",
                dc.blocks, m.mediator, m.estimate, m.se, m.statistic, m.p_adjusted_raw
            );
        }
    }
}

fn write_dataset_csv(data: &medscale::Dataset, out: &mut dyn Write) -> std::io::Result<()> {
    let d = data.n_mediators();
    let q = data.n_covariates();
    let mut header = vec!["x".to_string()];
    header.extend((1..=d).map(|k| format!("m{k}")));
    header.push("y".into());
    header.extend((1..=q).map(|j| format!("z{j}")));
    writeln!(out, "{}", header.join(","))?;
    for i in 0..data.n() {
        let mut row = vec![format!("{}", data.exposure[i])];
        row.extend((0..d).map(|k| format!("{}", data.mediators[k][i])));
        row.push(format!("{}", data.outcome[i]));
        row.extend((0..q).map(|j| format!("{}", data.covariates[j][i])));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            scenario,
            list,
            n,
            output,
            common,
        } => {
            if list {
                for key in catalog_keys() {
                    println!("{key}");
                }
                return Ok(());
            }
            configure_threads(common.threads)?;
            let mut sc = lookup(&scenario)?.with_n(n);
            sc.noise = common.noise.into();
            let data = generate(&sc, RngStream::new(common.seed, 0))?;
            match output {
                Some(path) => {
                    let mut f = std::fs::File::create(path)?;
                    write_dataset_csv(&data, &mut f)?;
                }
                None => {
                    let stdout = std::io::stdout();
                    write_dataset_csv(&data, &mut stdout.lock())?;
                }
            }
            Ok(())
        }
        Command::CiStudy {
            scenario,
            n,
            replicates,
            reps,
            subset_exponent,
            level,
            baseline_bootstrap,
            common,
        } => {
            configure_threads(common.threads)?;
            let report = run_ci_study(&CiStudyConfig {
                scenario_key: scenario,
                n,
                replicates,
                reps,
                subset_exponent,
                level_delta: level,
                seed: common.seed,
                baseline: baseline_bootstrap,
                noise: common.noise.into(),
            })?;
            match common.format {
                Format::Json => emit_json(&report)?,
                Format::Table => print_ci_table(&report),
                Format::Csv => print_ci_csv(&report),
            }
            Ok(())
        }
        Command::TestStudy {
            scenario,
            n,
            blocks,
            reps,
            level,
            common,
        } => {
            configure_threads(common.threads)?;
            let report = run_test_study(&TestStudyConfig {
                scenario_key: scenario,
                n,
                blocks_list: blocks,
                reps,
                significance: level,
                seed: common.seed,
                noise: common.noise.into(),
            })?;
            match common.format {
                Format::Json => emit_json(&report)?,
                Format::Table => print_test_table(&report),
                Format::Csv => print_test_csv(&report),
            }
            Ok(())
        }
        Command::Timing {
            scenario,
            n,
            replicates,
            subset_exponent,
            blocks,
            baseline_bootstrap,
            repetitions,
            level,
            common,
        } => {
            configure_threads(common.threads)?;
            let report = run_timing(&TimingConfig {
                scenario_key: scenario,
                n,
                replicates,
                subset_exponent,
                blocks_list: blocks.into_iter().filter(|&j| j > 0).collect(),
                baseline: baseline_bootstrap,
                repetitions,
                level_delta: level,
                seed: common.seed,
                noise: common.noise.into(),
            })?;
            match common.format {
                Format::Json => emit_json(&report)?,
                Format::Table => print_timing_table(&report),
                Format::Csv => print_timing_csv(&report),
            }
            Ok(())
        }
        Command::Analyze {
            input,
            mapping,
            outcome_kind,
            method,
            subset_exponent,
            replicates,
            blocks,
            level,
            common,
        } => {
            configure_threads(common.threads)?;
            let mut map = ColumnMapping::from_file(&mapping)?;
            if let Some(kind) = outcome_kind {
                map.outcome_kind = kind.into();
            }
            let (want_sdb, want_dc) = match method.as_str() {
                "sdb" => (true, false),
                "dc" => (false, true),
                "both" => (true, true),
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "method {other:?} must be sdb, dc or both"
                    )))
                }
            };
            let loaded = load_csv(&input, &map)?;
            let cfg = AnalyzeConfig {
                sdb: want_sdb.then_some(SdbConfig {
                    subset: SubsetSize::Exponent(subset_exponent),
                    replicates,
                    level_delta: level,
                    master_seed: common.seed,
                }),
                dc_blocks: if want_dc { blocks } else { vec![] },
                dc_seed: common.seed,
                significance: level,
            };
            let report = analyze(
                &loaded.dataset,
                map.outcome_kind,
                loaded.dropped_rows,
                &cfg,
            )?;
            match common.format {
                Format::Json => emit_json(&report)?,
                Format::Table => print_analyze_table(&report),
                Format::Csv => print_analyze_csv(&report),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.category_code() as u8)
        }
    }
}
