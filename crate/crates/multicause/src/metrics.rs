//! Scoring of learned patterns against a ground-truth DAG.
//!
//! Skeleton edges are compared regardless of direction. Directed edges are
//! compared only through v-structure arrows: the learned arrows against the
//! arrows of the true pattern's v-structures. TPR and TDR follow the exact
//! formulas used throughout the evaluation here — TPR = TP/(TP+FP) and
//! TDR = TP/(TP+FN) — which is transposed relative to some other texts;
//! keeping this naming makes the reported tables line up.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Dag, PatternGraph};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("learned pattern and truth have different vertex sets")]
    VertexMismatch,
}

/// Skeleton and v-structure-arrow counts plus the derived ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_count: usize,
    pub tp1: usize,
    pub fp1: usize,
    pub fn1: usize,
    /// TP/(TP+FP); 1.0 when both are zero.
    pub tpr: f64,
    /// TP/(TP+FN); 1.0 when both are zero.
    pub tdr: f64,
    pub d_tpr: f64,
    pub d_tdr: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// Scores `learned` against the pattern of the true DAG.
pub fn score(learned: &PatternGraph, truth: &Dag) -> Result<Metrics, MetricsError> {
    if learned.names() != truth.names() {
        return Err(MetricsError::VertexMismatch);
    }
    let truth_pattern = truth.pattern();
    let true_skeleton = truth_pattern.skeleton();

    let tp = learned
        .skeleton()
        .iter()
        .filter(|e| true_skeleton.contains(e))
        .count();
    let fp = learned.skeleton().len() - tp;
    let fn_count = true_skeleton.len() - tp;

    // Arrow-level counts: learned v-structure arrows against the directed
    // edges of the truth, and the reference arrow set is the truth
    // pattern's own v-structure arrows.
    let learned_arrows = learned.arrows();
    let true_arrows = truth_pattern.arrows();
    let tp1 = learned_arrows
        .iter()
        .filter(|&&(u, v)| truth.has_edge(u, v))
        .count();
    let fp1 = learned_arrows.len() - tp1;
    let fn1 = true_arrows
        .iter()
        .filter(|a| !learned_arrows.contains(a))
        .count();

    Ok(Metrics {
        tp,
        fp,
        fn_count,
        tp1,
        fp1,
        fn1,
        tpr: ratio(tp, tp + fp),
        tdr: ratio(tp, tp + fn_count),
        d_tpr: ratio(tp1, tp1 + fp1),
        d_tdr: ratio(tp1, tp1 + fn1),
    })
}
