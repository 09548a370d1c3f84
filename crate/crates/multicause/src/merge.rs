//! Graph merging: learn one pattern per intervention data set, then union
//! the skeletons and v-structures.

use rayon::prelude::*;
use thiserror::Error;

use crate::bayesnet::{DiscreteBayesNet, InterventionSpec, NetError, SampleTable};
use crate::graph::{merge_patterns_with_log, Dag, GraphError, MergeLog, PatternGraph};
use crate::citest::{DofPolicy, TestStatistic};
use crate::pc::{pc_learn_configured, pc_learn_oracle, PcError};

#[derive(Debug, Error)]
pub enum MergeError {
    #[error("no data sets given")]
    Empty,
    #[error("data sets do not share the same variables")]
    VariableMismatch,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Pc(#[from] PcError),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Merged pattern plus the per-data-set patterns it was built from.
#[derive(Debug, Clone)]
pub struct MergeOutput {
    pub merged: PatternGraph,
    pub per_dataset: Vec<PatternGraph>,
    pub log: MergeLog,
}

/// Learns one pattern per data set with PC at level `alpha`, then unions.
pub fn merge_learn(
    datasets: &[SampleTable],
    alpha: f64,
    max_cond: usize,
) -> Result<MergeOutput, MergeError> {
    merge_learn_from(
        datasets,
        alpha,
        max_cond,
        TestStatistic::Pearson,
        DofPolicy::FullTable,
    )
}

/// Merging with an explicitly configured test statistic and dof convention.
pub fn merge_learn_from(
    datasets: &[SampleTable],
    alpha: f64,
    max_cond: usize,
    statistic: TestStatistic,
    dof_policy: DofPolicy,
) -> Result<MergeOutput, MergeError> {
    let first = datasets.first().ok_or(MergeError::Empty)?;
    if datasets
        .iter()
        .any(|d| d.variables() != first.variables())
    {
        return Err(MergeError::VariableMismatch);
    }
    let per_dataset: Vec<PatternGraph> = datasets
        .par_iter()
        .map(|d| {
            pc_learn_configured(d, alpha, max_cond, statistic, dof_policy)
                .map(|out| out.pattern)
        })
        .collect::<Result<_, _>>()?;
    let (merged, log) = merge_patterns_with_log(&per_dataset)?;
    Ok(MergeOutput {
        merged,
        per_dataset,
        log,
    })
}

/// Oracle-mode merging: runs PC with the exact d-separation oracle of every
/// post-intervention DAG, then unions. Exists so the guarantees of the
/// merge method can be tested free of sampling noise.
pub fn merge_learn_oracle(
    base: &DiscreteBayesNet,
    specs: &[InterventionSpec],
    max_cond: usize,
) -> Result<MergeOutput, MergeError> {
    if specs.is_empty() {
        return Err(MergeError::Empty);
    }
    let dags: Vec<Dag> = specs
        .iter()
        .map(|spec| {
            spec.validate(base)?;
            Ok::<_, MergeError>(spec.intervened_dag(base.dag())?)
        })
        .collect::<Result<_, _>>()?;
    let per_dataset: Vec<PatternGraph> = dags
        .par_iter()
        .map(|dag| pc_learn_oracle(dag, max_cond).map(|out| out.pattern))
        .collect::<Result<_, _>>()?;
    let (merged, log) = merge_patterns_with_log(&per_dataset)?;
    Ok(MergeOutput {
        merged,
        per_dataset,
        log,
    })
}
