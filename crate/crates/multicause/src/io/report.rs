//! The JSON report schema shared by the learners and the CLI.
//!
//! Keys serialize in struct declaration order and maps are B-tree backed,
//! so two runs with identical inputs produce byte-identical reports.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, PatternGraph};
use crate::metrics::Metrics;
use crate::pool::EdgeFrequencyReport;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("malformed report JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema version {0}")]
    SchemaVersion(u32),
    #[error("report references unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("malformed edge key `{0}`")]
    BadEdgeKey(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Re-sampling section of a pooled-learning report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResamplingSection {
    pub k_runs: usize,
    pub subset_size: usize,
    pub theta: u32,
    /// Edges in `E* \ E'`, by name.
    pub extra_edges: Vec<[String; 2]>,
    /// Extra edges whose frequency cleared the threshold.
    pub added_edges: Vec<[String; 2]>,
}

/// A learned pattern with optional evaluation attachments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub vertices: Vec<String>,
    /// Sorted skeleton edges as name pairs.
    pub skeleton: Vec<[String; 2]>,
    /// Sorted v-structures `(a, c, b)` meaning `a -> c <- b`.
    pub v_structures: Vec<[String; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<BTreeMap<String, u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resampling: Option<ResamplingSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Metrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_echo: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn edge_key(names: &[String], e: (usize, usize)) -> String {
    format!("{}--{}", names[e.0], names[e.1])
}

fn name_pair(names: &[String], e: (usize, usize)) -> [String; 2] {
    [names[e.0].clone(), names[e.1].clone()]
}

impl Report {
    /// Report carrying just a learned pattern.
    pub fn from_pattern(pattern: &PatternGraph) -> Self {
        let names = pattern.names().as_slice();
        Self {
            schema_version: SCHEMA_VERSION,
            vertices: names.to_vec(),
            skeleton: pattern
                .skeleton()
                .iter()
                .map(|&e| name_pair(names, e))
                .collect(),
            v_structures: pattern
                .v_structures()
                .iter()
                .map(|&(a, c, b)| [names[a].clone(), names[c].clone(), names[b].clone()])
                .collect(),
            frequencies: None,
            resampling: None,
            metrics: None,
            config_echo: None,
            seed: None,
        }
    }

    pub fn with_metrics(mut self, metrics: Metrics) -> Self {
        self.metrics = Some(metrics);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_config_echo(mut self, echo: serde_json::Value) -> Self {
        self.config_echo = Some(echo);
        self
    }

    /// Attaches re-sampling frequencies and the edges added at `theta`.
    pub fn with_resampling(
        mut self,
        report: &EdgeFrequencyReport,
        augmented: &PatternGraph,
        theta: u32,
    ) -> Self {
        let names = augmented.names().as_slice();
        self.frequencies = Some(
            report
                .freq
                .iter()
                .map(|(&e, &f)| (edge_key(names, e), f))
                .collect(),
        );
        let added: Vec<[String; 2]> = augmented
            .skeleton()
            .difference(&report.meta_edges)
            .map(|&e| name_pair(names, e))
            .collect();
        self.resampling = Some(ResamplingSection {
            k_runs: report.k_runs,
            subset_size: report.subset_size,
            theta,
            extra_edges: report
                .extra_edges
                .iter()
                .map(|&e| name_pair(names, e))
                .collect(),
            added_edges: added,
        });
        self
    }

    /// Rebuilds the pattern graph encoded in this report.
    pub fn to_pattern(&self) -> Result<PatternGraph, ReportError> {
        let names = Arc::new(self.vertices.clone());
        let index = |name: &String| {
            self.vertices
                .iter()
                .position(|v| v == name)
                .ok_or_else(|| ReportError::UnknownVertex(name.clone()))
        };
        let mut skeleton = BTreeSet::new();
        for [a, b] in &self.skeleton {
            let (a, b) = (index(a)?, index(b)?);
            skeleton.insert(crate::graph::edge(a, b));
        }
        let mut v_structures = BTreeSet::new();
        for [a, c, b] in &self.v_structures {
            let (a, c, b) = (index(a)?, index(c)?, index(b)?);
            v_structures.insert(crate::graph::v_structure(a, c, b));
        }
        Ok(PatternGraph::new(names, skeleton, v_structures)?)
    }
}

/// Serializes a report with stable key order and a trailing newline.
pub fn write_report(report: &Report) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    text
}

/// Parses report JSON, rejecting unknown schema versions.
pub fn read_report(text: &str) -> Result<Report, ReportError> {
    let report: Report = serde_json::from_str(text)?;
    if report.schema_version != SCHEMA_VERSION {
        return Err(ReportError::SchemaVersion(report.schema_version));
    }
    Ok(report)
}
