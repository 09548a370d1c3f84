//! JSON serialization of intervention specifications, resolved against a
//! concrete network.
//!
//! ```json
//! {
//!   "targets": [
//!     {
//!       "vertex": "NAME",
//!       "retained_parents": ["P1", "P2"],
//!       "table": [[0.2, 0.8], [0.5, 0.5]]
//!     }
//!   ]
//! }
//! ```
//!
//! `table` holds one row per configuration of the retained parents (last
//! parent varying fastest), each row a distribution over the target's states.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bayesnet::{Cpt, DiscreteBayesNet, InterventionSpec, NetError, TargetChange};

#[derive(Debug, Error)]
pub enum InterventionIoError {
    #[error("malformed intervention JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("unknown parent `{parent}` of target `{target}`")]
    UnknownParent { target: String, parent: String },
    #[error("duplicate target `{0}`")]
    DuplicateTarget(String),
    #[error(transparent)]
    Net(#[from] NetError),
}

#[derive(Debug, Serialize, Deserialize)]
struct TargetJson {
    vertex: String,
    retained_parents: Vec<String>,
    table: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SpecJson {
    targets: Vec<TargetJson>,
}

/// Parses an intervention spec and validates it against `net`.
pub fn read_intervention_spec(
    text: &str,
    net: &DiscreteBayesNet,
) -> Result<InterventionSpec, InterventionIoError> {
    let parsed: SpecJson = serde_json::from_str(text)?;
    let mut changes = BTreeMap::new();
    for target in parsed.targets {
        let v = net
            .dag()
            .index_of(&target.vertex)
            .ok_or_else(|| InterventionIoError::UnknownVertex(target.vertex.clone()))?;
        let mut retained = Vec::with_capacity(target.retained_parents.len());
        for p in &target.retained_parents {
            let pi = net
                .dag()
                .index_of(p)
                .ok_or_else(|| InterventionIoError::UnknownParent {
                    target: target.vertex.clone(),
                    parent: p.clone(),
                })?;
            retained.push(pi);
        }

        // Re-layout the rows from the listed parent order into ascending
        // index order, which is what the internal CPT expects.
        let mut order: Vec<usize> = (0..retained.len()).collect();
        order.sort_by_key(|&k| retained[k]);
        let sorted: Vec<usize> = order.iter().map(|&k| retained[k]).collect();
        let listed_cards: Vec<usize> = retained
            .iter()
            .map(|&p| net.cardinalities()[p])
            .collect();
        let sorted_cards: Vec<usize> = sorted.iter().map(|&p| net.cardinalities()[p]).collect();
        let rows: usize = sorted_cards.iter().product();
        let child_card = net.cardinalities()[v];
        let mut table = Vec::with_capacity(rows * child_card);
        for r in 0..rows {
            // Decode r over sorted parents, re-encode over listed parents.
            let mut config = vec![0usize; sorted.len()];
            let mut rest = r;
            for k in (0..sorted.len()).rev() {
                config[k] = rest % sorted_cards[k];
                rest /= sorted_cards[k];
            }
            let mut listed_idx = 0usize;
            for (k, &card) in listed_cards.iter().enumerate() {
                let sorted_slot = order.iter().position(|&o| o == k).expect("permutation");
                listed_idx = listed_idx * card + config[sorted_slot];
            }
            let row = target.table.get(listed_idx).ok_or_else(|| {
                InterventionIoError::Net(NetError::ReplacementShapeMismatch {
                    variable: target.vertex.clone(),
                })
            })?;
            table.extend_from_slice(row);
        }
        if target.table.len() != rows {
            return Err(InterventionIoError::Net(
                NetError::ReplacementShapeMismatch {
                    variable: target.vertex.clone(),
                },
            ));
        }
        let cpt = Cpt::new(v, sorted.clone(), child_card, sorted_cards, table, &target.vertex)?;
        if changes
            .insert(
                v,
                TargetChange {
                    retained_parents: sorted,
                    cpt: Arc::new(cpt),
                },
            )
            .is_some()
        {
            return Err(InterventionIoError::DuplicateTarget(target.vertex));
        }
    }
    let spec = InterventionSpec::new(changes);
    spec.validate(net)?;
    Ok(spec)
}

/// Serializes a spec using the network's vertex names.
pub fn write_intervention_spec(spec: &InterventionSpec, net: &DiscreteBayesNet) -> String {
    let targets = spec
        .changes()
        .iter()
        .map(|(&v, change)| {
            let rows = change.cpt.row_count();
            TargetJson {
                vertex: net.dag().name_of(v).to_string(),
                retained_parents: change
                    .retained_parents
                    .iter()
                    .map(|&p| net.dag().name_of(p).to_string())
                    .collect(),
                table: (0..rows).map(|r| change.cpt.row(r).to_vec()).collect(),
            }
        })
        .collect();
    let mut text =
        serde_json::to_string_pretty(&SpecJson { targets }).expect("spec serializes");
    text.push('\n');
    text
}
