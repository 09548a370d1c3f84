//! Simulation harness: generates intervention families and data from a base
//! network, runs the learners, and aggregates metrics over repetitions.
//!
//! A study is driven by a [`StudyConfig`], normally read from a TOML file.
//! Four modes are supported: `experiment1` compares merging against pooling
//! over a grid of `(n, m)` cases at a fixed total sample budget;
//! `experiment2` varies the (constant) number of manipulated targets;
//! `experiment3` adds the re-sampling evaluation and a threshold sweep;
//! `observational` is the no-intervention PC baseline.
//!
//! Every repetition draws from a child generator keyed by
//! `(master seed, case index, repetition)`, so reports are byte-identical
//! across runs and across thread counts.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bayesnet::{
    apply_intervention, generate_intervention_spec, is_conservative, DiscreteBayesNet,
    InterventionSpec, NetError, SampleTable,
};
use crate::graph::{Dag, Edge};
use crate::io::bif::BifError;
use crate::merge::{merge_learn, MergeError};
use crate::metrics::{score, Metrics, MetricsError};
use crate::pc::{pc_learn, PcError};
use crate::pool::{
    augment, pool_datasets, resample_frequencies_against, EdgeFrequencyReport, PoolError,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse config `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("invalid study config: {0}")]
    Invalid(String),
    #[error("network `{path}`: {source}")]
    Network { path: String, source: BifError },
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Pc(#[from] PcError),
    #[error(transparent)]
    Merge(#[from] MergeError),
    #[error(transparent)]
    Pool(#[from] PoolError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyMode {
    Experiment1,
    Experiment2,
    Experiment3,
    Observational,
}

/// How many targets each intervention manipulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetRule {
    /// Uniformly drawn from 1..=5 per intervention.
    Uniform,
    /// Fixed count per intervention, per `target_constants`.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseSpec {
    pub n: usize,
    pub m: usize,
}

fn default_alpha() -> f64 {
    0.01
}
fn default_repetitions() -> usize {
    100
}
fn default_cut_prob() -> f64 {
    0.5
}
fn default_dirichlet() -> f64 {
    1.0
}
fn default_max_cond() -> usize {
    crate::pc::DEFAULT_MAX_COND
}
fn default_resample_k() -> usize {
    100
}
fn default_theta_grid() -> Vec<u32> {
    vec![0, 5, 10, 15, 20, 25, 30, 35, 50, 100]
}
fn default_target_rule() -> TargetRule {
    TargetRule::Uniform
}
fn default_rank_depth() -> usize {
    10
}

/// Study description; the TOML config file mirrors these fields one-to-one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    /// Path of the BIF file holding the base network.
    pub network: String,
    pub mode: StudyMode,
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_cut_prob")]
    pub cut_prob: f64,
    #[serde(default = "default_dirichlet")]
    pub dirichlet_alpha: f64,
    #[serde(default = "default_max_cond")]
    pub max_cond: usize,
    /// `(n, m)` sample-size/intervention-count cases.
    pub cases: Vec<CaseSpec>,
    #[serde(default = "default_target_rule")]
    pub target_rule: TargetRule,
    /// Target counts for `experiment2` (one case per constant).
    #[serde(default)]
    pub target_constants: Vec<usize>,
    #[serde(default = "default_resample_k")]
    pub resample_k: usize,
    /// Interventions drawn per re-sampling run; defaults to `ceil(0.6 m)`.
    #[serde(default)]
    pub subset_size: Option<usize>,
    #[serde(default = "default_theta_grid")]
    pub theta_grid: Vec<u32>,
    /// Draw per-intervention sample sizes from a uniform multinomial over
    /// the total budget instead of using fixed `n`.
    #[serde(default)]
    pub multinomial_sizes: bool,
    /// How many ranks of the frequency tables to track in `experiment3`.
    #[serde(default = "default_rank_depth")]
    pub rank_depth: usize,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.cases.is_empty() {
            return Err(ExperimentError::Invalid("`cases` must not be empty".into()));
        }
        if self.cases.iter().any(|c| c.n == 0 || c.m == 0) {
            return Err(ExperimentError::Invalid(
                "case sample sizes and intervention counts must be positive".into(),
            ));
        }
        if self.repetitions == 0 {
            return Err(ExperimentError::Invalid(
                "`repetitions` must be positive".into(),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ExperimentError::Invalid(
                "`alpha` must lie strictly between 0 and 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.cut_prob) {
            return Err(ExperimentError::Invalid(
                "`cut_prob` must lie in [0, 1]".into(),
            ));
        }
        if self.dirichlet_alpha <= 0.0 {
            return Err(ExperimentError::Invalid(
                "`dirichlet_alpha` must be positive".into(),
            ));
        }
        if self.mode == StudyMode::Experiment2 && self.target_constants.is_empty() {
            return Err(ExperimentError::Invalid(
                "experiment2 needs `target_constants`".into(),
            ));
        }
        if self.mode == StudyMode::Experiment3 {
            if self.resample_k == 0 {
                return Err(ExperimentError::Invalid(
                    "`resample_k` must be positive".into(),
                ));
            }
            if let Some(theta) = self
                .theta_grid
                .iter()
                .find(|&&t| t as usize > self.resample_k)
            {
                return Err(ExperimentError::Invalid(format!(
                    "theta {theta} exceeds resample_k {}",
                    self.resample_k
                )));
            }
        }
        Ok(())
    }
}

/// Reads and validates a TOML study config.
pub fn load_config(path: &Path) -> Result<StudyConfig, ExperimentError> {
    let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text, &path.display().to_string())
}

/// Parses and validates TOML config text.
pub fn parse_config(text: &str, origin: &str) -> Result<StudyConfig, ExperimentError> {
    let config: StudyConfig = toml::from_str(text).map_err(|e| ExperimentError::Config {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

/// One intervention family and its data sets, drawn by `generate_trial`.
pub struct Trial {
    pub specs: Vec<InterventionSpec>,
    pub datasets: Vec<SampleTable>,
    pub conservative: bool,
}

/// Draws `m` intervention specs (targets chosen uniformly without
/// replacement, counts per the closure) and a data set of `n` rows from
/// every post-intervention network.
pub fn generate_trial<R: Rng>(
    net: &DiscreteBayesNet,
    n: usize,
    m: usize,
    mut targets_per_intervention: impl FnMut(&mut R) -> usize,
    cut_prob: f64,
    dirichlet_alpha: f64,
    multinomial_sizes: bool,
    rng: &mut R,
) -> Result<Trial, ExperimentError> {
    let p = net.vertex_count();
    let sizes = if multinomial_sizes {
        multinomial_counts(n * m, m, rng)
    } else {
        vec![n; m]
    };
    let mut specs = Vec::with_capacity(m);
    let mut datasets = Vec::with_capacity(m);
    for (j, &rows) in sizes.iter().enumerate() {
        let count = targets_per_intervention(rng);
        if count > p {
            return Err(ExperimentError::Invalid(format!(
                "target count {count} exceeds vertex count {p}"
            )));
        }
        let targets = draw_distinct(p, count, rng);
        let spec = generate_intervention_spec(net, &targets, cut_prob, dirichlet_alpha, rng)?;
        let post = apply_intervention(net, &spec)?;
        datasets.push(post.sample(rows, rng).with_label(j as u32));
        specs.push(spec);
    }
    let conservative = is_conservative(&specs, p);
    Ok(Trial {
        specs,
        datasets,
        conservative,
    })
}

fn draw_distinct<R: Rng>(p: usize, count: usize, rng: &mut R) -> std::collections::BTreeSet<usize> {
    let mut pool: Vec<usize> = (0..p).collect();
    for i in 0..count {
        let j = rng.gen_range(i..p);
        pool.swap(i, j);
    }
    pool[..count].iter().copied().collect()
}

/// Sample sizes `(n_1, ..., n_m)` from a uniform multinomial over `total`.
fn multinomial_counts<R: Rng>(total: usize, m: usize, rng: &mut R) -> Vec<usize> {
    let mut counts = vec![0usize; m];
    for _ in 0..total {
        counts[rng.gen_range(0..m)] += 1;
    }
    counts
}

/// Deterministic generator for one repetition of one case.
pub fn repetition_rng(master_seed: u64, case_index: usize, repetition: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((case_index as u64) << 32) | repetition as u64);
    rng
}

// ---------------------------------------------------------------------------
// Frequency rank tables
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEdge {
    pub edge: [String; 2],
    pub freq: u32,
    pub is_true: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    /// Extra edges (`E* \ E'`) by descending frequency.
    pub descending: Vec<RankedEdge>,
    /// Meta edges (`E'`) by ascending frequency.
    pub ascending: Vec<RankedEdge>,
}

/// Top `top` extra edges by descending frequency and top `top` meta edges by
/// ascending frequency, each labelled against the true skeleton. Ties break
/// on the edge itself so the table is deterministic.
pub fn frequency_rank_table(report: &EdgeFrequencyReport, truth: &Dag, top: usize) -> RankTable {
    let truth_skeleton = truth.pattern().skeleton().clone();
    let label = |e: &Edge| truth_skeleton.contains(e);
    let name = |e: &Edge| {
        [
            truth.name_of(e.0).to_string(),
            truth.name_of(e.1).to_string(),
        ]
    };

    let mut extra: Vec<(Edge, u32)> = report
        .extra_edges
        .iter()
        .map(|e| (*e, report.freq[e]))
        .collect();
    extra.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut meta: Vec<(Edge, u32)> = report
        .meta_edges
        .iter()
        .map(|e| (*e, report.freq[e]))
        .collect();
    meta.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));

    RankTable {
        descending: extra
            .into_iter()
            .take(top)
            .map(|(e, freq)| RankedEdge {
                edge: name(&e),
                freq,
                is_true: label(&e),
            })
            .collect(),
        ascending: meta
            .into_iter()
            .take(top)
            .map(|(e, freq)| RankedEdge {
                edge: name(&e),
                freq,
                is_true: label(&e),
            })
            .collect(),
    }
}

// ---------------------------------------------------------------------------
// Study execution
// ---------------------------------------------------------------------------

/// Mean and standard error (sample SD over sqrt of count) of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

fn mean_se(values: &[f64]) -> MeanSe {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let se = if values.len() < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    };
    MeanSe { mean, se }
}

/// Aggregated metrics of one method within one case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub tpr: MeanSe,
    pub tdr: MeanSe,
    pub d_tpr: MeanSe,
    pub d_tdr: MeanSe,
    #[serde(rename = "fn")]
    pub fn_count: MeanSe,
    pub fp: MeanSe,
}

fn summarize(all: &[Metrics]) -> MethodSummary {
    let grab = |f: fn(&Metrics) -> f64| mean_se(&all.iter().map(f).collect::<Vec<_>>());
    MethodSummary {
        tpr: grab(|m| m.tpr),
        tdr: grab(|m| m.tdr),
        d_tpr: grab(|m| m.d_tpr),
        d_tdr: grab(|m| m.d_tdr),
        fn_count: grab(|m| m.fn_count as f64),
        fp: grab(|m| m.fp as f64),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaRow {
    pub theta: u32,
    #[serde(rename = "fn")]
    pub fn_mean: f64,
    pub fp_mean: f64,
    pub sum_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSummary {
    pub rank: usize,
    /// Fraction of repetitions whose edge at this rank is a true edge.
    pub true_fraction: f64,
    /// Repetitions that had an edge at this rank at all.
    pub occupied: usize,
}

/// Everything recorded for one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub repetition: usize,
    pub conservative: Option<bool>,
    pub metrics: BTreeMap<String, Metrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<BTreeMap<String, u32>>,
    /// `(theta, fn, fp)` per grid value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_counts: Option<Vec<(u32, usize, usize)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank_table: Option<RankTable>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub n: usize,
    pub m: usize,
    pub target_rule: String,
    pub methods: BTreeMap<String, MethodSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conservative_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_sweep: Option<Vec<ThetaRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank_descending: Option<Vec<RankSummary>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank_ascending: Option<Vec<RankSummary>>,
    pub repetitions: Vec<RepRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub vertex_count: usize,
    pub true_edge_count: usize,
    pub cases: Vec<CaseReport>,
}

struct ResolvedCase {
    n: usize,
    m: usize,
    rule_label: String,
    constant: Option<usize>,
}

fn resolve_cases(config: &StudyConfig) -> Vec<ResolvedCase> {
    match config.mode {
        StudyMode::Experiment2 => {
            let base = config.cases[0];
            config
                .target_constants
                .iter()
                .map(|&c| ResolvedCase {
                    n: base.n,
                    m: base.m,
                    rule_label: format!("constant-{c}"),
                    constant: Some(c),
                })
                .collect()
        }
        StudyMode::Observational => config
            .cases
            .iter()
            .map(|case| ResolvedCase {
                n: case.n,
                m: 1,
                rule_label: "observational".into(),
                constant: Some(0),
            })
            .collect(),
        _ => config
            .cases
            .iter()
            .map(|case| ResolvedCase {
                n: case.n,
                m: case.m,
                rule_label: match config.target_rule {
                    TargetRule::Uniform => "uniform".into(),
                    TargetRule::Constant => format!(
                        "constant-{}",
                        config.target_constants.first().copied().unwrap_or(1)
                    ),
                },
                constant: match config.target_rule {
                    TargetRule::Uniform => None,
                    TargetRule::Constant => {
                        Some(config.target_constants.first().copied().unwrap_or(1))
                    }
                },
            })
            .collect(),
    }
}

/// Loads the network named by the config and runs the study.
pub fn run_study(config: &StudyConfig) -> Result<StudyReport, ExperimentError> {
    config.validate()?;
    let text = std::fs::read_to_string(&config.network).map_err(|source| ExperimentError::Io {
        path: config.network.clone(),
        source,
    })?;
    let net = crate::io::parse_bif(&text).map_err(|source| ExperimentError::Network {
        path: config.network.clone(),
        source,
    })?;
    run_study_on(config, &net)
}

/// Runs the study against an already-loaded network.
pub fn run_study_on(
    config: &StudyConfig,
    net: &DiscreteBayesNet,
) -> Result<StudyReport, ExperimentError> {
    config.validate()?;
    let truth = net.dag();
    let mut cases = Vec::new();
    for (case_index, case) in resolve_cases(config).iter().enumerate() {
        let records: Vec<RepRecord> = (0..config.repetitions)
            .into_par_iter()
            .map(|rep| run_repetition(config, net, case, case_index, rep))
            .collect::<Result<_, _>>()?;

        let mut methods = BTreeMap::new();
        for key in records
            .first()
            .map(|r| r.metrics.keys())
            .into_iter()
            .flatten()
        {
            let all: Vec<Metrics> = records.iter().map(|r| r.metrics[key]).collect();
            methods.insert(key.clone(), summarize(&all));
        }
        let conservative_fraction = records
            .iter()
            .map(|r| r.conservative)
            .collect::<Option<Vec<bool>>>()
            .map(|flags| flags.iter().filter(|&&c| c).count() as f64 / flags.len() as f64);

        let theta_sweep = if config.mode == StudyMode::Experiment3 {
            Some(
                config
                    .theta_grid
                    .iter()
                    .map(|&theta| {
                        let (mut fns, mut fps) = (Vec::new(), Vec::new());
                        for r in &records {
                            let counts = r.theta_counts.as_ref().expect("experiment3 record");
                            let row = counts.iter().find(|(t, _, _)| *t == theta).unwrap();
                            fns.push(row.1 as f64);
                            fps.push(row.2 as f64);
                        }
                        let fn_mean = mean_se(&fns).mean;
                        let fp_mean = mean_se(&fps).mean;
                        ThetaRow {
                            theta,
                            fn_mean,
                            fp_mean,
                            sum_mean: fn_mean + fp_mean,
                        }
                    })
                    .collect(),
            )
        } else {
            None
        };

        let (rank_descending, rank_ascending) = if config.mode == StudyMode::Experiment3 {
            let summarize_ranks = |pick: fn(&RankTable) -> &Vec<RankedEdge>| {
                (0..config.rank_depth)
                    .map(|rank| {
                        let mut occupied = 0usize;
                        let mut true_hits = 0usize;
                        for r in &records {
                            let table = r.rank_table.as_ref().expect("experiment3 record");
                            if let Some(entry) = pick(table).get(rank) {
                                occupied += 1;
                                true_hits += usize::from(entry.is_true);
                            }
                        }
                        RankSummary {
                            rank: rank + 1,
                            true_fraction: if occupied == 0 {
                                0.0
                            } else {
                                true_hits as f64 / occupied as f64
                            },
                            occupied,
                        }
                    })
                    .collect::<Vec<_>>()
            };
            (
                Some(summarize_ranks(|t| &t.descending)),
                Some(summarize_ranks(|t| &t.ascending)),
            )
        } else {
            (None, None)
        };

        cases.push(CaseReport {
            n: case.n,
            m: case.m,
            target_rule: case.rule_label.clone(),
            methods,
            conservative_fraction,
            theta_sweep,
            rank_descending,
            rank_ascending,
            repetitions: records,
        });
    }
    Ok(StudyReport {
        config: config.clone(),
        vertex_count: net.vertex_count(),
        true_edge_count: truth.edge_count(),
        cases,
    })
}

fn run_repetition(
    config: &StudyConfig,
    net: &DiscreteBayesNet,
    case: &ResolvedCase,
    case_index: usize,
    rep: usize,
) -> Result<RepRecord, ExperimentError> {
    let truth = net.dag();
    let mut rng = repetition_rng(config.seed, case_index, rep);
    let constant = case.constant;
    let trial = generate_trial(
        net,
        case.n,
        case.m,
        |r: &mut ChaCha8Rng| match constant {
            Some(c) => c,
            None => r.gen_range(1..=5),
        },
        config.cut_prob,
        config.dirichlet_alpha,
        config.multinomial_sizes,
        &mut rng,
    )?;

    let mut metrics = BTreeMap::new();
    let mut frequencies = None;
    let mut theta_counts = None;
    let mut rank_table = None;

    match config.mode {
        StudyMode::Observational => {
            let out = pc_learn(&trial.datasets[0], config.alpha, config.max_cond)?;
            metrics.insert("pc".to_string(), score(&out.pattern, truth)?);
        }
        StudyMode::Experiment1 => {
            let merged = merge_learn(&trial.datasets, config.alpha, config.max_cond)?;
            metrics.insert("merge".to_string(), score(&merged.merged, truth)?);
            let pooled = pool_datasets(&trial.datasets)?;
            let meta = pc_learn(&pooled, config.alpha, config.max_cond)?;
            metrics.insert("pool".to_string(), score(&meta.pattern, truth)?);
        }
        StudyMode::Experiment2 => {
            let pooled = pool_datasets(&trial.datasets)?;
            let meta = pc_learn(&pooled, config.alpha, config.max_cond)?;
            metrics.insert("pool".to_string(), score(&meta.pattern, truth)?);
        }
        StudyMode::Experiment3 => {
            let pooled = pool_datasets(&trial.datasets)?;
            let meta = pc_learn(&pooled, config.alpha, config.max_cond)?;
            metrics.insert("pool".to_string(), score(&meta.pattern, truth)?);

            let subset_size = config
                .subset_size
                .unwrap_or_else(|| (3 * case.m).div_ceil(5));
            let report = resample_frequencies_against(
                &trial.datasets,
                meta.pattern.skeleton().clone(),
                config.resample_k,
                subset_size,
                config.alpha,
                config.max_cond,
                &mut rng,
            )?;

            let truth_skeleton = truth.pattern().skeleton().clone();
            let sweep = config
                .theta_grid
                .iter()
                .map(|&theta| {
                    let augmented = augment(&meta.pattern, &report, theta)?;
                    let fn_count = truth_skeleton.difference(augmented.skeleton()).count();
                    let fp_count = augmented.skeleton().difference(&truth_skeleton).count();
                    Ok::<_, ExperimentError>((theta, fn_count, fp_count))
                })
                .collect::<Result<Vec<_>, _>>()?;

            rank_table = Some(frequency_rank_table(&report, truth, config.rank_depth));
            frequencies = Some(
                report
                    .freq
                    .iter()
                    .map(|(&(a, b), &f)| {
                        (format!("{}--{}", truth.name_of(a), truth.name_of(b)), f)
                    })
                    .collect(),
            );
            theta_counts = Some(sweep);
        }
    }

    Ok(RepRecord {
        repetition: rep,
        conservative: match config.mode {
            StudyMode::Observational => None,
            _ => Some(trial.conservative),
        },
        metrics,
        frequencies,
        theta_counts,
        rank_table,
    })
}

// ---------------------------------------------------------------------------
// CSV emitters
// ---------------------------------------------------------------------------

/// Plot-ready long-format metric table: one row per case, method and metric.
pub fn metrics_csv(report: &StudyReport) -> String {
    let mut out = String::from("n,m,target_rule,method,metric,mean,se\n");
    for case in &report.cases {
        for (method, summary) in &case.methods {
            let rows: [(&str, &MeanSe); 6] = [
                ("tpr", &summary.tpr),
                ("tdr", &summary.tdr),
                ("d_tpr", &summary.d_tpr),
                ("d_tdr", &summary.d_tdr),
                ("fn", &summary.fn_count),
                ("fp", &summary.fp),
            ];
            for (metric, stat) in rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    case.n, case.m, case.target_rule, method, metric, stat.mean, stat.se
                ));
            }
        }
    }
    out
}

/// Threshold sweep table: mean FN and FP per theta.
pub fn theta_csv(report: &StudyReport) -> String {
    let mut out = String::from("n,m,theta,fn,fp,sum\n");
    for case in &report.cases {
        if let Some(sweep) = &case.theta_sweep {
            for row in sweep {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    case.n, case.m, row.theta, row.fn_mean, row.fp_mean, row.sum_mean
                ));
            }
        }
    }
    out
}

/// Rank-table summary: fraction of repetitions with a true edge per rank.
pub fn rank_csv(report: &StudyReport) -> String {
    let mut out = String::from("n,m,direction,rank,true_fraction,occupied\n");
    for case in &report.cases {
        for (direction, ranks) in [
            ("descending_extra", &case.rank_descending),
            ("ascending_meta", &case.rank_ascending),
        ] {
            if let Some(ranks) = ranks {
                for r in ranks {
                    out.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        case.n, case.m, direction, r.rank, r.true_fraction, r.occupied
                    ));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayesnet::Cpt;

    fn tiny_net() -> DiscreteBayesNet {
        let names: Vec<String> = ["a", "b", "c", "d", "e"].map(String::from).to_vec();
        let dag = Dag::new(names, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let chain = |v: usize| {
            Cpt::new(v, vec![v - 1], 2, vec![2], vec![0.9, 0.1, 0.2, 0.8], "x").unwrap()
        };
        let cpts = vec![
            Cpt::new(0, vec![], 2, vec![], vec![0.4, 0.6], "a").unwrap(),
            chain(1),
            chain(2),
            chain(3),
            chain(4),
        ];
        DiscreteBayesNet::new(dag, cpts).unwrap()
    }

    fn tiny_config(mode: StudyMode) -> StudyConfig {
        StudyConfig {
            network: "unused".into(),
            mode,
            seed: 7,
            alpha: 0.01,
            repetitions: 3,
            cut_prob: 0.5,
            dirichlet_alpha: 1.0,
            max_cond: 3,
            cases: vec![CaseSpec { n: 200, m: 3 }],
            target_rule: TargetRule::Uniform,
            target_constants: vec![1],
            resample_k: 5,
            subset_size: Some(2),
            theta_grid: vec![0, 2, 5],
            multinomial_sizes: false,
            rank_depth: 5,
        }
    }

    #[test]
    fn observational_study_runs_and_is_deterministic() {
        let net = tiny_net();
        let config = tiny_config(StudyMode::Observational);
        let a = run_study_on(&config, &net).unwrap();
        let b = run_study_on(&config, &net).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(a.cases.len(), 1);
        assert!(a.cases[0].methods.contains_key("pc"));
        assert!(a.cases[0].conservative_fraction.is_none());
    }

    #[test]
    fn experiment3_produces_sweep_and_ranks() {
        let net = tiny_net();
        let config = tiny_config(StudyMode::Experiment3);
        let report = run_study_on(&config, &net).unwrap();
        let case = &report.cases[0];
        let sweep = case.theta_sweep.as_ref().unwrap();
        assert_eq!(sweep.len(), 3);
        // FN never decreases and FP never increases in theta.
        for pair in sweep.windows(2) {
            assert!(pair[0].fn_mean <= pair[1].fn_mean + 1e-12);
            assert!(pair[0].fp_mean >= pair[1].fp_mean - 1e-12);
        }
        assert!(case.rank_descending.is_some());
        assert!(theta_csv(&report).lines().count() > 1);
        assert!(rank_csv(&report).lines().count() > 1);
        assert!(metrics_csv(&report).contains("pool"));
    }

    #[test]
    fn uniform_rule_mean_and_constant_rule_are_as_declared() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut total = 0usize;
        for _ in 0..10_000 {
            total += rng.gen_range(1..=5);
        }
        let mean = total as f64 / 10_000.0;
        assert!((mean - 3.0).abs() < 0.05, "mean = {mean}");

        let net = tiny_net();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let trial = generate_trial(&net, 10, 4, |_| 2, 0.5, 1.0, false, &mut rng).unwrap();
        assert!(trial.specs.iter().all(|s| s.targets().count() == 2));
        // Zero targets means an observational data set.
        let trial = generate_trial(&net, 10, 1, |_| 0, 0.5, 1.0, false, &mut rng).unwrap();
        assert!(trial.specs[0].is_empty());
        assert!(trial.conservative);
    }

    #[test]
    fn multinomial_sizes_preserve_the_total() {
        let net = tiny_net();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let trial = generate_trial(&net, 50, 4, |_| 1, 0.5, 1.0, true, &mut rng).unwrap();
        let total: usize = trial.datasets.iter().map(|d| d.row_count()).sum();
        assert_eq!(total, 200);
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let mut config = tiny_config(StudyMode::Experiment3);
        config.theta_grid = vec![0, 50];
        assert!(config.validate().is_err());
        let mut config = tiny_config(StudyMode::Experiment1);
        config.cases.clear();
        assert!(config.validate().is_err());
        let mut config = tiny_config(StudyMode::Experiment2);
        config.target_constants.clear();
        assert!(config.validate().is_err());
        assert!(parse_config("mode = \"experiment1\"", "inline").is_err());
    }
}
