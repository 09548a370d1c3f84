//! Batch command-line front end for the learners and the study harness.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data or parse errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use multicause::bayesnet::{DiscreteBayesNet, SampleTable};
use multicause::citest::{DofPolicy, TestStatistic};
use multicause::experiment::{self, StudyReport};
use multicause::graph::PatternGraph;
use multicause::io;
use multicause::merge::merge_learn_from;
use multicause::pc::{pc_learn_configured, DEFAULT_MAX_COND};
use multicause::pool::{augment, child_rng, pool_datasets, resample_frequencies_against};

#[derive(Parser)]
#[command(
    name = "multicause",
    version,
    about = "Causal structure learning from multiple interventions with unknown targets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw records from a network, optionally after an intervention.
    Sample(SampleArgs),
    /// Run the PC algorithm on one data set.
    LearnPc(LearnPcArgs),
    /// Learn one pattern per data set and merge them.
    LearnMerge(LearnMergeArgs),
    /// Pool all data sets, learn once, and evaluate edges by re-sampling.
    LearnPool(LearnPoolArgs),
    /// Score a learned pattern against the true network.
    Score(ScoreArgs),
    /// Run a full simulation study from a config file.
    Study(StudyArgs),
}

#[derive(Args)]
struct TestOptions {
    /// Significance level of the conditional-independence tests.
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    /// Largest conditioning-set size searched by PC.
    #[arg(long, default_value_t = DEFAULT_MAX_COND)]
    max_cond: usize,
    /// Test statistic: `pearson` or `g2`.
    #[arg(long, default_value = "pearson", value_parser = parse_statistic)]
    statistic: TestStatistic,
    /// Degrees-of-freedom convention: `full` or `observed`.
    #[arg(long, default_value = "full", value_parser = parse_dof)]
    dof: DofPolicy,
}

fn parse_statistic(s: &str) -> Result<TestStatistic, String> {
    TestStatistic::parse(s).ok_or_else(|| format!("unknown statistic `{s}` (pearson, g2)"))
}

fn parse_dof(s: &str) -> Result<DofPolicy, String> {
    DofPolicy::parse(s).ok_or_else(|| format!("unknown dof policy `{s}` (full, observed)"))
}

#[derive(Args)]
struct SampleArgs {
    /// BIF file with the network to sample from.
    #[arg(long)]
    net: PathBuf,
    /// Number of records to draw.
    #[arg(long)]
    n: usize,
    /// Intervention spec (JSON) applied before sampling.
    #[arg(long)]
    intervene: Option<PathBuf>,
    /// Seed of the sampler.
    #[arg(long)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LearnPcArgs {
    /// Input CSV data set.
    #[arg(long)]
    data: PathBuf,
    /// BIF file defining variables and state names.
    #[arg(long)]
    net: PathBuf,
    #[command(flatten)]
    test: TestOptions,
    /// Output JSON report path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LearnMergeArgs {
    /// Input CSV data sets, one per intervention.
    #[arg(long, num_args = 1.., required = true)]
    data: Vec<PathBuf>,
    /// BIF file defining variables and state names.
    #[arg(long)]
    net: PathBuf,
    #[command(flatten)]
    test: TestOptions,
    /// Output JSON report path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LearnPoolArgs {
    /// Input CSV data sets, one per intervention.
    #[arg(long, num_args = 1.., required = true)]
    data: Vec<PathBuf>,
    /// BIF file defining variables and state names.
    #[arg(long)]
    net: PathBuf,
    #[command(flatten)]
    test: TestOptions,
    /// Number of re-sampling runs.
    #[arg(long, default_value_t = 100)]
    resample_k: usize,
    /// Interventions drawn per run; defaults to ceil(0.6 m).
    #[arg(long)]
    subset: Option<usize>,
    /// Frequency threshold for adding missed edges.
    #[arg(long, default_value_t = 20)]
    theta: u32,
    /// Seed of the re-sampling draws.
    #[arg(long)]
    seed: u64,
    /// Output JSON report path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    /// Learned pattern (JSON report).
    #[arg(long)]
    learned: PathBuf,
    /// BIF file with the ground-truth network.
    #[arg(long)]
    truth: PathBuf,
    /// Output JSON path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StudyArgs {
    /// TOML study configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for the report and CSV tables.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads for repetition-level parallelism (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

/// Data or parse failure: everything that is not a usage error.
struct DataError(String);

impl<E: std::fmt::Display> From<E> for DataError {
    fn from(e: E) -> Self {
        DataError(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Sample(args) => run_sample(args),
        Command::LearnPc(args) => run_learn_pc(args),
        Command::LearnMerge(args) => run_learn_merge(args),
        Command::LearnPool(args) => run_learn_pool(args),
        Command::Score(args) => run_score(args),
        Command::Study(args) => run_study(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(DataError(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn read_text(path: &Path) -> Result<String, DataError> {
    std::fs::read_to_string(path).map_err(|e| DataError(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), DataError> {
    std::fs::write(path, text).map_err(|e| DataError(format!("{}: {e}", path.display())))
}

fn load_net(path: &Path) -> Result<DiscreteBayesNet, DataError> {
    let text = read_text(path)?;
    io::parse_bif(&text).map_err(|e| DataError(format!("{}: {e}", path.display())))
}

fn load_datasets(paths: &[PathBuf], net: &DiscreteBayesNet) -> Result<Vec<SampleTable>, DataError> {
    paths
        .iter()
        .map(|path| {
            let text = read_text(path)?;
            io::read_samples(&text, net).map_err(|e| DataError(format!("{}: {e}", path.display())))
        })
        .collect()
}

fn run_sample(args: SampleArgs) -> Result<(), DataError> {
    let mut net = load_net(&args.net)?;
    if let Some(spec_path) = &args.intervene {
        let text = read_text(spec_path)?;
        let spec = io::read_intervention_spec(&text, &net)
            .map_err(|e| DataError(format!("{}: {e}", spec_path.display())))?;
        net = multicause::bayesnet::apply_intervention(&net, &spec)?;
    }
    let mut rng = child_rng(args.seed, 0);
    let table = net.sample(args.n, &mut rng);
    write_text(&args.out, &io::write_samples(&table))
}

fn pattern_report(pattern: &PatternGraph) -> io::Report {
    io::Report::from_pattern(pattern)
}

fn run_learn_pc(args: LearnPcArgs) -> Result<(), DataError> {
    let net = load_net(&args.net)?;
    let data = load_datasets(std::slice::from_ref(&args.data), &net)?;
    let out = pc_learn_configured(
        &data[0],
        args.test.alpha,
        args.test.max_cond,
        args.test.statistic,
        args.test.dof,
    )?;
    write_text(&args.out, &io::write_report(&pattern_report(&out.pattern)))
}

fn run_learn_merge(args: LearnMergeArgs) -> Result<(), DataError> {
    let net = load_net(&args.net)?;
    let datasets = load_datasets(&args.data, &net)?;
    let out = merge_learn_from(
        &datasets,
        args.test.alpha,
        args.test.max_cond,
        args.test.statistic,
        args.test.dof,
    )?;
    write_text(&args.out, &io::write_report(&pattern_report(&out.merged)))
}

fn run_learn_pool(args: LearnPoolArgs) -> Result<(), DataError> {
    let net = load_net(&args.net)?;
    let datasets = load_datasets(&args.data, &net)?;
    if args.resample_k > 0 && args.theta as usize > args.resample_k {
        return Err(DataError(format!(
            "theta {} exceeds resample-k {}",
            args.theta, args.resample_k
        )));
    }
    let pooled = pool_datasets(&datasets)?;
    let meta = pc_learn_configured(
        &pooled,
        args.test.alpha,
        args.test.max_cond,
        args.test.statistic,
        args.test.dof,
    )?;
    let subset = args.subset.unwrap_or_else(|| (3 * datasets.len()).div_ceil(5));
    let mut rng = child_rng(args.seed, 0);
    let freq = resample_frequencies_against(
        &datasets,
        meta.pattern.skeleton().clone(),
        args.resample_k,
        subset,
        args.test.alpha,
        args.test.max_cond,
        &mut rng,
    )?;
    let augmented = augment(&meta.pattern, &freq, args.theta)?;
    let report = io::Report::from_pattern(&augmented)
        .with_resampling(&freq, &augmented, args.theta)
        .with_seed(args.seed);
    write_text(&args.out, &io::write_report(&report))
}

fn run_score(args: ScoreArgs) -> Result<(), DataError> {
    let net = load_net(&args.truth)?;
    let text = read_text(&args.learned)?;
    let report = io::read_report(&text)
        .map_err(|e| DataError(format!("{}: {e}", args.learned.display())))?;
    let pattern = report.to_pattern()?;
    let metrics = multicause::metrics::score(&pattern, net.dag())?;
    let out = io::Report::from_pattern(&pattern).with_metrics(metrics);
    write_text(&args.out, &io::write_report(&out))
}

fn run_study(args: StudyArgs) -> Result<(), DataError> {
    if let Some(jobs) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| DataError(e.to_string()))?;
    }
    let config = experiment::load_config(&args.config)?;
    let report = experiment::run_study(&config)?;
    write_study_outputs(&args.out, &report)
}

fn write_study_outputs(dir: &Path, report: &StudyReport) -> Result<(), DataError> {
    std::fs::create_dir_all(dir).map_err(|e| DataError(format!("{}: {e}", dir.display())))?;
    let json = serde_json::to_string_pretty(report).map_err(|e| DataError(e.to_string()))?;
    write_text(&dir.join("report.json"), &format!("{json}\n"))?;
    write_text(&dir.join("metrics.csv"), &experiment::metrics_csv(report))?;
    let theta = experiment::theta_csv(report);
    if theta.lines().count() > 1 {
        write_text(&dir.join("theta.csv"), &theta)?;
    }
    let rank = experiment::rank_csv(report);
    if rank.lines().count() > 1 {
        write_text(&dir.join("rank.csv"), &rank)?;
    }
    Ok(())
}
