//! Data pooling: meta learning on the concatenated sample, then re-sampling
//! of interventions to measure how stably each edge is recovered.
//!
//! The re-sampling draws subsets of the interventions (never of the
//! individual records), learns a skeleton from each pooled subset, and counts
//! for every edge how many of the `K` runs contain it. Edges that the meta
//! graph missed but that re-appear frequently are candidates for addition.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::bayesnet::{NetError, SampleTable};
use crate::graph::{Edge, GraphError, PatternGraph};
use crate::pc::{learn_skeleton, pc_learn, ChiSquareCiSource, PcError, PcOutput};

#[derive(Debug, Error)]
pub enum PoolError {
    #[error("no data sets given")]
    Empty,
    #[error("data sets do not share the same variables")]
    VariableMismatch,
    #[error("subset size {size} out of range 1..={m}")]
    BadSubsetSize { size: usize, m: usize },
    #[error("k_runs must be at least 1")]
    BadRunCount,
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Pc(#[from] PcError),
}

/// Row-wise concatenation of the intervention data sets, labels preserved.
pub fn pool_datasets(datasets: &[SampleTable]) -> Result<SampleTable, PoolError> {
    let first = datasets.first().ok_or(PoolError::Empty)?;
    if datasets
        .iter()
        .any(|d| d.variables() != first.variables())
    {
        return Err(PoolError::VariableMismatch);
    }
    Ok(SampleTable::concat(datasets)?)
}

/// Meta learning: PC on the pooled data set.
pub fn pool_learn_meta(
    datasets: &[SampleTable],
    alpha: f64,
    max_cond: usize,
) -> Result<PcOutput, PoolError> {
    let pooled = pool_datasets(datasets)?;
    Ok(pc_learn(&pooled, alpha, max_cond)?)
}

/// Re-sampling output: which edges each of the `K` skeleton runs found.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFrequencyReport {
    pub k_runs: usize,
    pub subset_size: usize,
    /// Intervention indices drawn for each run.
    pub drawn_subsets: Vec<Vec<usize>>,
    /// Skeleton of the meta graph, `E'`.
    pub meta_edges: BTreeSet<Edge>,
    /// Union of the re-sampled skeletons, `E*`.
    pub union_edges: BTreeSet<Edge>,
    /// `E* \ E'`: edges seen in re-sampling but missed by the meta graph.
    pub extra_edges: BTreeSet<Edge>,
    /// Appearance count over the `K` runs for every edge of `E' ∪ E*`.
    pub freq: BTreeMap<Edge, u32>,
}

/// Runs `k_runs` re-sampling rounds: each draws `subset_size` interventions
/// without replacement, pools their data, and learns a skeleton (no
/// orientation). The meta skeleton is learned from the full pool.
pub fn resample_frequencies<R: Rng>(
    datasets: &[SampleTable],
    k_runs: usize,
    subset_size: usize,
    alpha: f64,
    max_cond: usize,
    rng: &mut R,
) -> Result<EdgeFrequencyReport, PoolError> {
    let meta = pool_learn_meta(datasets, alpha, max_cond)?;
    resample_frequencies_against(
        datasets,
        meta.pattern.skeleton().clone(),
        k_runs,
        subset_size,
        alpha,
        max_cond,
        rng,
    )
}

/// Re-sampling against an already-learned meta skeleton, so callers that
/// need the full meta pattern do not pay for a second PC run.
pub fn resample_frequencies_against<R: Rng>(
    datasets: &[SampleTable],
    meta_edges: BTreeSet<Edge>,
    k_runs: usize,
    subset_size: usize,
    alpha: f64,
    max_cond: usize,
    rng: &mut R,
) -> Result<EdgeFrequencyReport, PoolError> {
    let m = datasets.len();
    if m == 0 {
        return Err(PoolError::Empty);
    }
    if k_runs == 0 {
        return Err(PoolError::BadRunCount);
    }
    if subset_size == 0 || subset_size > m {
        return Err(PoolError::BadSubsetSize {
            size: subset_size,
            m,
        });
    }

    // Draw all subsets up front from the caller's generator, then run the
    // K independent learners in parallel on child generators.
    let drawn_subsets: Vec<Vec<usize>> = (0..k_runs)
        .map(|_| draw_without_replacement(m, subset_size, rng))
        .collect();

    let run_edges: Vec<BTreeSet<Edge>> = drawn_subsets
        .par_iter()
        .map(|subset| {
            let chosen: Vec<SampleTable> =
                subset.iter().map(|&j| datasets[j].clone()).collect();
            let pooled = SampleTable::concat(&chosen)?;
            let mut ci = ChiSquareCiSource::new(&pooled, alpha);
            let (skeleton, _) = learn_skeleton(pooled.variable_count(), &mut ci, max_cond);
            Ok::<_, PoolError>(skeleton)
        })
        .collect::<Result<_, _>>()?;

    let mut union_edges = BTreeSet::new();
    for edges in &run_edges {
        union_edges.extend(edges.iter().copied());
    }
    let extra_edges: BTreeSet<Edge> = union_edges.difference(&meta_edges).copied().collect();

    let mut freq = BTreeMap::new();
    for e in meta_edges.iter().chain(&union_edges) {
        freq.entry(*e).or_insert(0u32);
    }
    for edges in &run_edges {
        for e in edges {
            *freq.get_mut(e).unwrap() += 1;
        }
    }

    Ok(EdgeFrequencyReport {
        k_runs,
        subset_size,
        drawn_subsets,
        meta_edges,
        union_edges,
        extra_edges,
        freq,
    })
}

/// Uniform draw of `k` distinct values from `0..m`, reported sorted.
fn draw_without_replacement<R: Rng>(m: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..m).collect();
    for i in 0..k {
        let j = rng.gen_range(i..m);
        pool.swap(i, j);
    }
    let mut drawn = pool[..k].to_vec();
    drawn.sort_unstable();
    drawn
}

/// Deterministic child generator for run `i` of a re-sampling sweep.
pub fn child_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Adds every extra edge with frequency strictly above `theta` to the meta
/// skeleton. V-structures are kept except where a newly added edge shields
/// one, which would break the pattern invariant.
pub fn augment(
    meta: &PatternGraph,
    report: &EdgeFrequencyReport,
    theta: u32,
) -> Result<PatternGraph, PoolError> {
    let mut skeleton = meta.skeleton().clone();
    for e in &report.extra_edges {
        if report.freq.get(e).copied().unwrap_or(0) > theta {
            skeleton.insert(*e);
        }
    }
    let v_structures = meta
        .v_structures()
        .iter()
        .copied()
        .filter(|&(a, _, b)| !skeleton.contains(&(a.min(b), a.max(b))))
        .collect();
    Ok(PatternGraph::new(
        meta.names().clone(),
        skeleton,
        v_structures,
    )?)
}
