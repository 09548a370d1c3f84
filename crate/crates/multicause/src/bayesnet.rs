//! Discrete Bayesian networks: exact joint tables, ancestral sampling,
//! interventions, and mixtures of post-intervention distributions.
//!
//! Everything here is immutable after construction. Intervened networks share
//! untouched CPTs with their base network through `Arc`, so applying an
//! intervention is cheap and the base network is never mutated.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Dirichlet, Distribution};
use thiserror::Error;

use crate::graph::{Dag, GraphError};

/// Hard cap on exact enumeration: joint tables above this many cells error out.
pub const DEFAULT_ENUM_CAP: usize = 1 << 20;

/// Tolerance for probability rows summing to one.
pub const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum NetError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("cpt for `{variable}`: row {row} sums to {sum}, expected 1")]
    RowNotNormalized {
        variable: String,
        row: usize,
        sum: f64,
    },
    #[error("cpt for `{variable}`: negative probability in row {row}")]
    NegativeProbability { variable: String, row: usize },
    #[error("cpt for `{variable}`: table has {got} cells, expected {expected}")]
    TableSizeMismatch {
        variable: String,
        expected: usize,
        got: usize,
    },
    #[error("cardinality of `{variable}` must be in 2..=255, got {card}")]
    BadCardinality { variable: String, card: usize },
    #[error("cpt parents of `{variable}` do not match its parents in the dag")]
    ParentMismatch { variable: String },
    #[error("expected one cpt per vertex ({expected}), got {got}")]
    CptCountMismatch { expected: usize, got: usize },
    #[error("assignment covers {got} variables, expected {expected}")]
    IncompleteAssignment { expected: usize, got: usize },
    #[error("state {state} out of range for `{variable}` (cardinality {card})")]
    StateOutOfRange {
        variable: String,
        state: usize,
        card: usize,
    },
    #[error("state space of {size} configurations exceeds the cap of {cap}")]
    StateSpaceTooLarge { size: usize, cap: usize },
    #[error("intervention references unknown target index {0}")]
    UnknownTarget(usize),
    #[error("intervention on `{variable}`: retained parents are not a subset of its parents")]
    RetainedParentsNotSubset { variable: String },
    #[error("intervention on `{variable}`: replacement cpt shape mismatch")]
    ReplacementShapeMismatch { variable: String },
    #[error("mixture weights must be positive and sum to 1 (sum = {0})")]
    BadWeights(f64),
    #[error("mixture has {nets} networks but {weights} weights")]
    WeightCountMismatch { nets: usize, weights: usize },
    #[error("networks in a mixture must share vertices and cardinalities")]
    MixtureMismatch,
    #[error("sample table cell out of range: row {row}, variable `{variable}`")]
    CellOutOfRange { row: usize, variable: String },
    #[error("cut probability must lie in [0, 1], got {0}")]
    BadCutProbability(f64),
    #[error("dirichlet concentration must be positive, got {0}")]
    BadDirichletAlpha(f64),
}

/// Conditional probability table of one variable given its parents.
///
/// The table is laid out row-major: one row per parent configuration (last
/// parent varying fastest), `child_card` cells per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    pub variable: usize,
    pub parents: Vec<usize>,
    pub child_card: usize,
    pub parent_cards: Vec<usize>,
    table: Vec<f64>,
}

impl Cpt {
    pub fn new(
        variable: usize,
        parents: Vec<usize>,
        child_card: usize,
        parent_cards: Vec<usize>,
        table: Vec<f64>,
        variable_name: &str,
    ) -> Result<Self, NetError> {
        if !(2..=255).contains(&child_card) {
            return Err(NetError::BadCardinality {
                variable: variable_name.to_string(),
                card: child_card,
            });
        }
        let rows: usize = parent_cards.iter().product();
        let expected = rows * child_card;
        if table.len() != expected {
            return Err(NetError::TableSizeMismatch {
                variable: variable_name.to_string(),
                expected,
                got: table.len(),
            });
        }
        for row in 0..rows {
            let cells = &table[row * child_card..(row + 1) * child_card];
            if cells.iter().any(|&p| p < 0.0) {
                return Err(NetError::NegativeProbability {
                    variable: variable_name.to_string(),
                    row,
                });
            }
            let sum: f64 = cells.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(NetError::RowNotNormalized {
                    variable: variable_name.to_string(),
                    row,
                    sum,
                });
            }
        }
        Ok(Self {
            variable,
            parents,
            child_card,
            parent_cards,
            table,
        })
    }

    pub fn row_count(&self) -> usize {
        self.parent_cards.iter().product()
    }

    pub fn row(&self, parent_config: usize) -> &[f64] {
        &self.table[parent_config * self.child_card..(parent_config + 1) * self.child_card]
    }

    /// Mixed-radix index of a parent configuration, last parent fastest.
    pub fn parent_config_index(&self, full_assignment: &[usize]) -> usize {
        let mut idx = 0;
        for (k, &p) in self.parents.iter().enumerate() {
            idx = idx * self.parent_cards[k] + full_assignment[p];
        }
        idx
    }

    pub fn prob(&self, full_assignment: &[usize]) -> f64 {
        self.row(self.parent_config_index(full_assignment))[full_assignment[self.variable]]
    }
}

/// A DAG with one CPT per vertex.
#[derive(Debug, Clone)]
pub struct DiscreteBayesNet {
    dag: Dag,
    cards: Vec<usize>,
    states: Vec<Vec<String>>,
    cpts: Vec<Arc<Cpt>>,
}

impl DiscreteBayesNet {
    /// Builds a network, checking that every CPT matches the DAG structure.
    /// State names default to `s0, s1, ...` per variable.
    pub fn new(dag: Dag, cpts: Vec<Cpt>) -> Result<Self, NetError> {
        let states = cpts
            .iter()
            .map(|c| (0..c.child_card).map(|s| format!("s{s}")).collect())
            .collect();
        Self::with_states(dag, cpts, states)
    }

    pub fn with_states(
        dag: Dag,
        cpts: Vec<Cpt>,
        states: Vec<Vec<String>>,
    ) -> Result<Self, NetError> {
        let n = dag.vertex_count();
        if cpts.len() != n {
            return Err(NetError::CptCountMismatch {
                expected: n,
                got: cpts.len(),
            });
        }
        let mut ordered: Vec<Option<Cpt>> = (0..n).map(|_| None).collect();
        for cpt in cpts {
            let v = cpt.variable;
            if v >= n || ordered[v].is_some() {
                return Err(NetError::CptCountMismatch {
                    expected: n,
                    got: n + 1,
                });
            }
            ordered[v] = Some(cpt);
        }
        let cpts: Vec<Cpt> = ordered.into_iter().map(Option::unwrap).collect();
        let cards: Vec<usize> = cpts.iter().map(|c| c.child_card).collect();
        for (v, cpt) in cpts.iter().enumerate() {
            if cpt.parents != dag.parents_of(v) {
                return Err(NetError::ParentMismatch {
                    variable: dag.name_of(v).to_string(),
                });
            }
            let expected_cards: Vec<usize> = cpt.parents.iter().map(|&p| cards[p]).collect();
            if cpt.parent_cards != expected_cards {
                return Err(NetError::ParentMismatch {
                    variable: dag.name_of(v).to_string(),
                });
            }
            if states[v].len() != cpt.child_card {
                return Err(NetError::BadCardinality {
                    variable: dag.name_of(v).to_string(),
                    card: states[v].len(),
                });
            }
        }
        Ok(Self {
            dag,
            cards,
            states,
            cpts: cpts.into_iter().map(Arc::new).collect(),
        })
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn vertex_count(&self) -> usize {
        self.dag.vertex_count()
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cards
    }

    pub fn states(&self) -> &[Vec<String>] {
        &self.states
    }

    pub fn cpt(&self, v: usize) -> &Cpt {
        &self.cpts[v]
    }

    fn check_assignment(&self, assignment: &[usize]) -> Result<(), NetError> {
        if assignment.len() != self.vertex_count() {
            return Err(NetError::IncompleteAssignment {
                expected: self.vertex_count(),
                got: assignment.len(),
            });
        }
        for (v, &a) in assignment.iter().enumerate() {
            if a >= self.cards[v] {
                return Err(NetError::StateOutOfRange {
                    variable: self.dag.name_of(v).to_string(),
                    state: a,
                    card: self.cards[v],
                });
            }
        }
        Ok(())
    }

    /// Probability of one full configuration: the product of CPT cells.
    pub fn joint_probability(&self, assignment: &[usize]) -> Result<f64, NetError> {
        self.check_assignment(assignment)?;
        Ok(self.cpts.iter().map(|c| c.prob(assignment)).product())
    }

    /// Exact joint distribution over all configurations.
    pub fn enumerate_distribution(&self) -> Result<JointTable, NetError> {
        self.enumerate_distribution_capped(DEFAULT_ENUM_CAP)
    }

    pub fn enumerate_distribution_capped(&self, cap: usize) -> Result<JointTable, NetError> {
        let size = checked_space(&self.cards, cap)?;
        let mut probs = vec![0.0; size];
        let mut assignment = vec![0usize; self.vertex_count()];
        for (idx, slot) in probs.iter_mut().enumerate() {
            decode_config(idx, &self.cards, &mut assignment);
            *slot = self.cpts.iter().map(|c| c.prob(&assignment)).product();
        }
        Ok(JointTable {
            variables: self.dag.names().clone(),
            cards: self.cards.clone(),
            probs,
        })
    }

    /// Draws `n` records by ancestral sampling in topological order.
    pub fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> SampleTable {
        let p = self.vertex_count();
        let mut columns = vec![vec![0u8; n]; p];
        let mut assignment = vec![0usize; p];
        for row in 0..n {
            for &v in self.dag.topological_order() {
                let cpt = &self.cpts[v];
                let probs = cpt.row(cpt.parent_config_index(&assignment));
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut drawn = cpt.child_card - 1;
                for (state, &pr) in probs.iter().enumerate() {
                    acc += pr;
                    if u < acc {
                        drawn = state;
                        break;
                    }
                }
                assignment[v] = drawn;
                columns[v][row] = drawn as u8;
            }
        }
        SampleTable {
            variables: self.dag.names().as_ref().clone(),
            states: self.states.clone(),
            columns,
            labels: None,
        }
    }
}

fn checked_space(cards: &[usize], cap: usize) -> Result<usize, NetError> {
    let mut size: usize = 1;
    for &c in cards {
        size = size.checked_mul(c).unwrap_or(usize::MAX);
        if size > cap {
            return Err(NetError::StateSpaceTooLarge { size, cap });
        }
    }
    Ok(size)
}

/// Decodes a flat configuration index (last variable fastest).
fn decode_config(mut idx: usize, cards: &[usize], out: &mut [usize]) {
    for v in (0..cards.len()).rev() {
        out[v] = idx % cards[v];
        idx /= cards[v];
    }
}

/// Exact joint distribution over a full configuration space.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    variables: Arc<Vec<String>>,
    cards: Vec<usize>,
    probs: Vec<f64>,
}

impl JointTable {
    pub fn variables(&self) -> &Arc<Vec<String>> {
        &self.variables
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cards
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Marginal distribution over a subset of variables, in the given order.
    pub fn marginal(&self, vars: &[usize]) -> Vec<f64> {
        let size: usize = vars.iter().map(|&v| self.cards[v]).product();
        let mut out = vec![0.0; size];
        let mut assignment = vec![0usize; self.cards.len()];
        for (idx, &p) in self.probs.iter().enumerate() {
            decode_config(idx, &self.cards, &mut assignment);
            let mut key = 0;
            for &v in vars {
                key = key * self.cards[v] + assignment[v];
            }
            out[key] += p;
        }
        out
    }

    /// Exact conditional-independence check of `x` and `y` given `s`:
    /// true iff `max |P(x,y|s) - P(x|s) P(y|s)| <= eps` over all
    /// configurations, skipping strata with `P(s) = 0`.
    pub fn ci_exact(&self, x: usize, y: usize, s: &[usize], eps: f64) -> Result<bool, NetError> {
        Ok(self.dependence_strength_set(x, &[y], s)? <= eps)
    }

    /// Set version used by the Markov-property checks: `x` jointly
    /// independent of all of `ys` given `s`.
    pub fn ci_exact_set(
        &self,
        x: usize,
        ys: &[usize],
        s: &[usize],
        eps: f64,
    ) -> Result<bool, NetError> {
        Ok(self.dependence_strength_set(x, ys, s)? <= eps)
    }

    /// Largest deviation `|P(x,ys|s) - P(x|s) P(ys|s)|` over realized strata.
    pub fn dependence_strength_set(
        &self,
        x: usize,
        ys: &[usize],
        s: &[usize],
    ) -> Result<f64, NetError> {
        let n = self.cards.len();
        for &v in std::iter::once(&x).chain(ys).chain(s) {
            if v >= n {
                return Err(NetError::StateOutOfRange {
                    variable: format!("#{v}"),
                    state: v,
                    card: n,
                });
            }
        }
        let mut overlap = BTreeSet::new();
        overlap.insert(x);
        for &v in ys.iter().chain(s) {
            if !overlap.insert(v) {
                return Err(NetError::IncompleteAssignment {
                    expected: 1 + ys.len() + s.len(),
                    got: overlap.len(),
                });
            }
        }

        let cx = self.cards[x];
        let cy: usize = ys.iter().map(|&v| self.cards[v]).product();
        let cs: usize = s.iter().map(|&v| self.cards[v]).product();

        // Accumulate P(s, x, ys) in one pass over the joint table.
        let mut joint = vec![0.0; cs * cx * cy];
        let mut assignment = vec![0usize; n];
        for (idx, &p) in self.probs.iter().enumerate() {
            decode_config(idx, &self.cards, &mut assignment);
            let mut ks = 0;
            for &v in s {
                ks = ks * self.cards[v] + assignment[v];
            }
            let mut ky = 0;
            for &v in ys {
                ky = ky * self.cards[v] + assignment[v];
            }
            joint[(ks * cx + assignment[x]) * cy + ky] += p;
        }

        let mut worst = 0.0f64;
        for stratum in 0..cs {
            let cells = &joint[stratum * cx * cy..(stratum + 1) * cx * cy];
            let ps: f64 = cells.iter().sum();
            if ps <= 0.0 {
                continue;
            }
            let mut px = vec![0.0; cx];
            let mut py = vec![0.0; cy];
            for xv in 0..cx {
                for yv in 0..cy {
                    let p = cells[xv * cy + yv];
                    px[xv] += p;
                    py[yv] += p;
                }
            }
            for xv in 0..cx {
                for yv in 0..cy {
                    let dev = (cells[xv * cy + yv] / ps - (px[xv] / ps) * (py[yv] / ps)).abs();
                    worst = worst.max(dev);
                }
            }
        }
        Ok(worst)
    }
}

/// Weighted mixture of post-intervention distributions.
pub fn mixture(nets: &[DiscreteBayesNet], weights: &[f64]) -> Result<JointTable, NetError> {
    mixture_capped(nets, weights, DEFAULT_ENUM_CAP)
}

pub fn mixture_capped(
    nets: &[DiscreteBayesNet],
    weights: &[f64],
    cap: usize,
) -> Result<JointTable, NetError> {
    if nets.len() != weights.len() {
        return Err(NetError::WeightCountMismatch {
            nets: nets.len(),
            weights: weights.len(),
        });
    }
    let first = nets.first().ok_or(NetError::MixtureMismatch)?;
    for net in nets {
        if net.dag().names() != first.dag().names() || net.cards != first.cards {
            return Err(NetError::MixtureMismatch);
        }
    }
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|&w| w <= 0.0) || (sum - 1.0).abs() > ROW_SUM_TOL {
        return Err(NetError::BadWeights(sum));
    }
    let size = checked_space(&first.cards, cap)?;
    let mut probs = vec![0.0; size];
    for (net, &w) in nets.iter().zip(weights) {
        let table = net.enumerate_distribution_capped(cap)?;
        for (slot, p) in probs.iter_mut().zip(table.probs) {
            *slot += w * p;
        }
    }
    Ok(JointTable {
        variables: first.dag.names().clone(),
        cards: first.cards.clone(),
        probs,
    })
}

/// Replacement for one manipulated target: the parents kept by the
/// intervention and the redrawn conditional table over them.
#[derive(Debug, Clone)]
pub struct TargetChange {
    pub retained_parents: Vec<usize>,
    pub cpt: Arc<Cpt>,
}

/// Per-intervention record of manipulated targets.
///
/// Non-targets carry no entries. For every target the retained parent set is
/// a subset of its parents in the base network.
#[derive(Debug, Clone, Default)]
pub struct InterventionSpec {
    changes: BTreeMap<usize, TargetChange>,
}

impl InterventionSpec {
    pub fn new(changes: BTreeMap<usize, TargetChange>) -> Self {
        Self { changes }
    }

    pub fn is_empty(&self) -> bool {
        self.changes.is_empty()
    }

    pub fn targets(&self) -> impl Iterator<Item = usize> + '_ {
        self.changes.keys().copied()
    }

    pub fn change(&self, v: usize) -> Option<&TargetChange> {
        self.changes.get(&v)
    }

    pub fn changes(&self) -> &BTreeMap<usize, TargetChange> {
        &self.changes
    }

    pub fn validate(&self, net: &DiscreteBayesNet) -> Result<(), NetError> {
        for (&v, change) in &self.changes {
            if v >= net.vertex_count() {
                return Err(NetError::UnknownTarget(v));
            }
            let pa = net.dag().parents_of(v);
            if !change.retained_parents.iter().all(|p| pa.contains(p)) {
                return Err(NetError::RetainedParentsNotSubset {
                    variable: net.dag().name_of(v).to_string(),
                });
            }
            let cpt = &change.cpt;
            let expected_cards: Vec<usize> = change
                .retained_parents
                .iter()
                .map(|&p| net.cards[p])
                .collect();
            if cpt.variable != v
                || cpt.parents != change.retained_parents
                || cpt.child_card != net.cards[v]
                || cpt.parent_cards != expected_cards
            {
                return Err(NetError::ReplacementShapeMismatch {
                    variable: net.dag().name_of(v).to_string(),
                });
            }
        }
        Ok(())
    }

    /// The post-intervention DAG: edges into targets reduced to the retained
    /// parents, everything else untouched.
    pub fn intervened_dag(&self, base: &Dag) -> Result<Dag, GraphError> {
        let edges: Vec<(usize, usize)> = base
            .edges()
            .into_iter()
            .filter(|&(u, v)| match self.changes.get(&v) {
                Some(change) => change.retained_parents.contains(&u),
                None => true,
            })
            .collect();
        Dag::new(base.names().as_ref().clone(), &edges)
    }
}

/// Draws an intervention on the given targets: every incoming edge of a
/// target is cut independently with probability `cut_prob`, and the target's
/// conditional table over the retained parents is redrawn row-wise from a
/// symmetric Dirichlet with concentration `dirichlet_alpha`.
pub fn generate_intervention_spec<R: Rng>(
    net: &DiscreteBayesNet,
    targets: &BTreeSet<usize>,
    cut_prob: f64,
    dirichlet_alpha: f64,
    rng: &mut R,
) -> Result<InterventionSpec, NetError> {
    if !(0.0..=1.0).contains(&cut_prob) {
        return Err(NetError::BadCutProbability(cut_prob));
    }
    if dirichlet_alpha <= 0.0 {
        return Err(NetError::BadDirichletAlpha(dirichlet_alpha));
    }
    let mut changes = BTreeMap::new();
    for &v in targets {
        if v >= net.vertex_count() {
            return Err(NetError::UnknownTarget(v));
        }
        let retained: Vec<usize> = net
            .dag()
            .parents_of(v)
            .iter()
            .copied()
            .filter(|_| rng.gen::<f64>() >= cut_prob)
            .collect();
        let cpt = random_cpt(net, v, retained.clone(), dirichlet_alpha, rng)?;
        changes.insert(
            v,
            TargetChange {
                retained_parents: retained,
                cpt: Arc::new(cpt),
            },
        );
    }
    Ok(InterventionSpec { changes })
}

fn random_cpt<R: Rng>(
    net: &DiscreteBayesNet,
    v: usize,
    parents: Vec<usize>,
    dirichlet_alpha: f64,
    rng: &mut R,
) -> Result<Cpt, NetError> {
    let child_card = net.cards[v];
    let parent_cards: Vec<usize> = parents.iter().map(|&p| net.cards[p]).collect();
    let rows: usize = parent_cards.iter().product();
    let dirichlet = Dirichlet::new_with_size(dirichlet_alpha, child_card)
        .map_err(|_| NetError::BadDirichletAlpha(dirichlet_alpha))?;
    let mut table = Vec::with_capacity(rows * child_card);
    for _ in 0..rows {
        let mut row = dirichlet.sample(rng);
        // Guard against accumulated rounding in the draw.
        let sum: f64 = row.iter().sum();
        for p in &mut row {
            *p /= sum;
        }
        table.extend(row);
    }
    Cpt::new(
        v,
        parents,
        child_card,
        parent_cards,
        table,
        net.dag().name_of(v),
    )
}

/// Applies an intervention, producing the post-intervention network.
/// CPTs of non-targets are shared with the base network.
pub fn apply_intervention(
    net: &DiscreteBayesNet,
    spec: &InterventionSpec,
) -> Result<DiscreteBayesNet, NetError> {
    spec.validate(net)?;
    let dag = spec.intervened_dag(net.dag())?;
    let cpts = (0..net.vertex_count())
        .map(|v| match spec.change(v) {
            Some(change) => change.cpt.clone(),
            None => net.cpts[v].clone(),
        })
        .collect();
    Ok(DiscreteBayesNet {
        dag,
        cards: net.cards.clone(),
        states: net.states.clone(),
        cpts,
    })
}

/// Records sampled from a network: one category index per variable per row,
/// with an optional intervention label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTable {
    variables: Vec<String>,
    states: Vec<Vec<String>>,
    columns: Vec<Vec<u8>>,
    labels: Option<Vec<u32>>,
}

impl SampleTable {
    pub fn new(
        variables: Vec<String>,
        states: Vec<Vec<String>>,
        columns: Vec<Vec<u8>>,
        labels: Option<Vec<u32>>,
    ) -> Result<Self, NetError> {
        let n_rows = columns.first().map_or(0, Vec::len);
        for (v, col) in columns.iter().enumerate() {
            debug_assert_eq!(col.len(), n_rows);
            let card = states[v].len();
            if let Some(row) = col.iter().position(|&c| usize::from(c) >= card) {
                return Err(NetError::CellOutOfRange {
                    row,
                    variable: variables[v].clone(),
                });
            }
        }
        if let Some(labels) = &labels {
            debug_assert_eq!(labels.len(), n_rows);
        }
        Ok(Self {
            variables,
            states,
            columns,
            labels,
        })
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn states(&self) -> &[Vec<String>] {
        &self.states
    }

    pub fn cardinality(&self, v: usize) -> usize {
        self.states[v].len()
    }

    pub fn variable_count(&self) -> usize {
        self.variables.len()
    }

    pub fn row_count(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, v: usize) -> &[u8] {
        &self.columns[v]
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.labels.as_deref()
    }

    pub fn with_label(mut self, label: u32) -> Self {
        self.labels = Some(vec![label; self.row_count()]);
        self
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    /// Row-wise concatenation; labels are preserved when every input has
    /// them, dropped otherwise.
    pub fn concat(tables: &[SampleTable]) -> Result<SampleTable, NetError> {
        let first = tables.first().ok_or(NetError::MixtureMismatch)?;
        for t in tables {
            if t.variables != first.variables || t.states != first.states {
                return Err(NetError::MixtureMismatch);
            }
        }
        let total: usize = tables.iter().map(SampleTable::row_count).sum();
        let mut columns = vec![Vec::with_capacity(total); first.variable_count()];
        for t in tables {
            for (v, col) in t.columns.iter().enumerate() {
                columns[v].extend_from_slice(col);
            }
        }
        let labels = if tables.iter().all(|t| t.labels.is_some()) {
            let mut all = Vec::with_capacity(total);
            for t in tables {
                all.extend_from_slice(t.labels.as_ref().unwrap());
            }
            Some(all)
        } else {
            None
        };
        Ok(SampleTable {
            variables: first.variables.clone(),
            states: first.states.clone(),
            columns,
            labels,
        })
    }

    /// Empirical relative frequency of every full configuration, in the same
    /// layout as [`JointTable`]. Only usable for small variable sets.
    pub fn empirical_distribution(&self, cap: usize) -> Result<Vec<f64>, NetError> {
        let cards: Vec<usize> = (0..self.variable_count())
            .map(|v| self.cardinality(v))
            .collect();
        let size = checked_space(&cards, cap)?;
        let mut freq = vec![0.0; size];
        let n = self.row_count();
        for row in 0..n {
            let mut idx = 0;
            for v in 0..self.variable_count() {
                idx = idx * cards[v] + usize::from(self.columns[v][row]);
            }
            freq[idx] += 1.0;
        }
        if n > 0 {
            for f in &mut freq {
                *f /= n as f64;
            }
        }
        Ok(freq)
    }
}

/// True when every vertex is left untouched by at least one intervention.
pub fn is_conservative(specs: &[InterventionSpec], vertex_count: usize) -> bool {
    (0..vertex_count).all(|v| specs.iter().any(|s| s.change(v).is_none()))
}

/// Memoized map from vertex to its non-descendants, used by the oracle tests.
pub fn non_descendant_map(dag: &Dag) -> HashMap<usize, BTreeSet<usize>> {
    (0..dag.vertex_count())
        .map(|v| (v, dag.non_descendants(v).expect("vertex in range")))
        .collect()
}
