//! The PC algorithm: adjacency search with growing conditioning sets,
//! followed by v-structure orientation from the recorded separating sets.
//!
//! The skeleton phase is the order-independent "stable" variant: adjacency
//! sets are frozen at the start of each level, so the learned skeleton does
//! not depend on the vertex declaration order. Subsets are enumerated in
//! lexicographic order over the frozen adjacency lists, which makes the
//! recorded separating sets deterministic as well.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use thiserror::Error;

use crate::bayesnet::{JointTable, SampleTable};
use crate::citest::{chi_square_ci_with, DofPolicy, TestStatistic};
use crate::graph::{edge, v_structure, Dag, Edge, GraphError, PatternGraph, VStructure};

/// Default cap on the size of conditioning sets.
pub const DEFAULT_MAX_COND: usize = 5;

#[derive(Debug, Error)]
pub enum PcError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("missing separating set for non-adjacent pair ({0}, {1})")]
    MissingSepset(usize, usize),
}

/// Separating sets recorded for every removed edge.
///
/// A pair has an entry exactly when it is absent from the learned skeleton.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SepSets(BTreeMap<Edge, Vec<usize>>);

impl SepSets {
    pub fn get(&self, a: usize, b: usize) -> Option<&[usize]> {
        self.0.get(&edge(a, b)).map(Vec::as_slice)
    }

    pub fn insert(&mut self, a: usize, b: usize, s: Vec<usize>) {
        self.0.insert(edge(a, b), s);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Edge, &Vec<usize>)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A conditional-independence decision source: either a statistical test
/// bound to data, or an exact oracle.
pub trait CiSource {
    /// True when `x` and `y` are judged independent given `s`.
    fn independent(&mut self, x: usize, y: usize, s: &[usize]) -> bool;
}

/// Exact d-separation oracle of a known DAG.
pub struct DsepOracle<'a> {
    dag: &'a Dag,
}

impl<'a> DsepOracle<'a> {
    pub fn new(dag: &'a Dag) -> Self {
        Self { dag }
    }
}

impl CiSource for DsepOracle<'_> {
    fn independent(&mut self, x: usize, y: usize, s: &[usize]) -> bool {
        self.dag.d_separated(x, y, s).expect("valid vertices")
    }
}

/// Exact conditional-independence oracle of an enumerated distribution.
pub struct ExactCiOracle<'a> {
    table: &'a JointTable,
    eps: f64,
}

impl<'a> ExactCiOracle<'a> {
    pub fn new(table: &'a JointTable, eps: f64) -> Self {
        Self { table, eps }
    }
}

impl CiSource for ExactCiOracle<'_> {
    fn independent(&mut self, x: usize, y: usize, s: &[usize]) -> bool {
        self.table
            .ci_exact(x, y, s, self.eps)
            .expect("valid vertices")
    }
}

/// χ² test bound to a sample table, memoized per learner invocation.
pub struct ChiSquareCiSource<'a> {
    data: &'a SampleTable,
    alpha: f64,
    statistic: TestStatistic,
    dof_policy: DofPolicy,
    cache: HashMap<(usize, usize, Vec<usize>), bool>,
}

impl<'a> ChiSquareCiSource<'a> {
    pub fn new(data: &'a SampleTable, alpha: f64) -> Self {
        Self::configured(data, alpha, TestStatistic::Pearson, DofPolicy::FullTable)
    }

    pub fn configured(
        data: &'a SampleTable,
        alpha: f64,
        statistic: TestStatistic,
        dof_policy: DofPolicy,
    ) -> Self {
        Self {
            data,
            alpha,
            statistic,
            dof_policy,
            cache: HashMap::new(),
        }
    }
}

impl CiSource for ChiSquareCiSource<'_> {
    fn independent(&mut self, x: usize, y: usize, s: &[usize]) -> bool {
        let (a, b) = (x.min(y), x.max(y));
        if let Some(&hit) = self.cache.get(&(a, b, s.to_vec())) {
            return hit;
        }
        let result = chi_square_ci_with(
            self.data,
            a,
            b,
            s,
            self.alpha,
            self.statistic,
            self.dof_policy,
        )
        .expect("valid variables")
        .independent;
        self.cache.insert((a, b, s.to_vec()), result);
        result
    }
}

/// Stable-PC adjacency search over `n` vertices.
///
/// Starts from the complete graph; at level `l` every ordered adjacent pair
/// `(x, y)` with `|adj(x) \ {y}| >= l` is tested against all `l`-subsets of
/// the adjacency frozen at the start of the level. The first separating set
/// found removes the edge and is recorded.
pub fn learn_skeleton(
    n: usize,
    ci: &mut dyn CiSource,
    max_cond: usize,
) -> (BTreeSet<Edge>, SepSets) {
    let mut adjacency: Vec<BTreeSet<usize>> = (0..n)
        .map(|v| (0..n).filter(|&u| u != v).collect())
        .collect();
    let mut sepsets = SepSets::default();

    for level in 0..=max_cond {
        let frozen: Vec<Vec<usize>> = adjacency
            .iter()
            .map(|set| set.iter().copied().collect())
            .collect();
        if frozen.iter().all(|a| a.len() <= level) {
            break;
        }
        for x in 0..n {
            for &y in &frozen[x] {
                if !adjacency[x].contains(&y) {
                    continue;
                }
                let candidates: Vec<usize> =
                    frozen[x].iter().copied().filter(|&u| u != y).collect();
                if candidates.len() < level {
                    continue;
                }
                if let Some(sep) = find_separator(ci, x, y, &candidates, level) {
                    adjacency[x].remove(&y);
                    adjacency[y].remove(&x);
                    sepsets.insert(x, y, sep);
                }
            }
        }
    }

    let mut skeleton = BTreeSet::new();
    for x in 0..n {
        for &y in &adjacency[x] {
            skeleton.insert(edge(x, y));
        }
    }
    (skeleton, sepsets)
}

/// First `level`-subset of `candidates` (lexicographic order) that separates
/// `x` from `y`, if any.
fn find_separator(
    ci: &mut dyn CiSource,
    x: usize,
    y: usize,
    candidates: &[usize],
    level: usize,
) -> Option<Vec<usize>> {
    let mut subset = vec![0usize; level];
    subsets_lex(candidates, level, &mut subset, 0, 0, &mut |s| {
        ci.independent(x, y, s)
    })
}

fn subsets_lex(
    candidates: &[usize],
    level: usize,
    subset: &mut Vec<usize>,
    depth: usize,
    start: usize,
    test: &mut dyn FnMut(&[usize]) -> bool,
) -> Option<Vec<usize>> {
    if depth == level {
        if test(&subset[..level]) {
            return Some(subset[..level].to_vec());
        }
        return None;
    }
    for i in start..candidates.len() {
        subset[depth] = candidates[i];
        if let Some(found) = subsets_lex(candidates, level, subset, depth + 1, i + 1, test) {
            return Some(found);
        }
    }
    None
}

/// Full output of one PC run.
#[derive(Debug, Clone)]
pub struct PcOutput {
    pub pattern: PatternGraph,
    pub sepsets: SepSets,
    /// V-structures dropped because they oriented some edge both ways.
    pub conflicts: Vec<VStructure>,
}

/// Orients v-structures: every unshielded triple `a - c - b` becomes
/// `a -> c <- b` exactly when `c` is not in the recorded separating set of
/// `(a, b)`. Conflicting orientations are removed together and reported.
pub fn orient_v_structures(
    names: Arc<Vec<String>>,
    skeleton: &BTreeSet<Edge>,
    sepsets: &SepSets,
) -> Result<PcOutput, PcError> {
    let n = names.len();
    let mut neighbors: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for &(u, v) in skeleton {
        neighbors[u].insert(v);
        neighbors[v].insert(u);
    }

    let mut candidates = BTreeSet::new();
    for c in 0..n {
        let adj: Vec<usize> = neighbors[c].iter().copied().collect();
        for (i, &a) in adj.iter().enumerate() {
            for &b in &adj[i + 1..] {
                if neighbors[a].contains(&b) {
                    continue;
                }
                let sep = sepsets
                    .get(a, b)
                    .ok_or(PcError::MissingSepset(a.min(b), a.max(b)))?;
                if !sep.contains(&c) {
                    candidates.insert(v_structure(a, c, b));
                }
            }
        }
    }

    // Arrow conflicts within one run can appear under statistical errors.
    let mut arrow_owners: HashMap<(usize, usize), Vec<VStructure>> = HashMap::new();
    for &(a, c, b) in &candidates {
        arrow_owners.entry((a, c)).or_default().push((a, c, b));
        arrow_owners.entry((b, c)).or_default().push((a, c, b));
    }
    let mut removed = BTreeSet::new();
    for (&(u, w), owners) in &arrow_owners {
        if u < w && arrow_owners.contains_key(&(w, u)) {
            removed.extend(owners.iter().copied());
            removed.extend(arrow_owners[&(w, u)].iter().copied());
        }
    }
    for vs in &removed {
        candidates.remove(vs);
    }

    let pattern = PatternGraph::new(names, skeleton.clone(), candidates)?;
    Ok(PcOutput {
        pattern,
        sepsets: sepsets.clone(),
        conflicts: removed.into_iter().collect(),
    })
}

/// Runs the full PC algorithm against an arbitrary CI source.
pub fn pc_learn_with(
    names: Arc<Vec<String>>,
    ci: &mut dyn CiSource,
    max_cond: usize,
) -> Result<PcOutput, PcError> {
    let (skeleton, sepsets) = learn_skeleton(names.len(), ci, max_cond);
    let mut out = orient_v_structures(names, &skeleton, &sepsets)?;
    out.sepsets = sepsets;
    Ok(out)
}

/// PC with the d-separation oracle of a known DAG.
pub fn pc_learn_oracle(dag: &Dag, max_cond: usize) -> Result<PcOutput, PcError> {
    let mut oracle = DsepOracle::new(dag);
    pc_learn_with(dag.names().clone(), &mut oracle, max_cond)
}

/// PC with the exact CI oracle of an enumerated distribution.
pub fn pc_learn_exact(table: &JointTable, eps: f64, max_cond: usize) -> Result<PcOutput, PcError> {
    let mut oracle = ExactCiOracle::new(table, eps);
    pc_learn_with(table.variables().clone(), &mut oracle, max_cond)
}

/// PC with the χ² test on a sample table at significance level `alpha`.
pub fn pc_learn(data: &SampleTable, alpha: f64, max_cond: usize) -> Result<PcOutput, PcError> {
    pc_learn_configured(
        data,
        alpha,
        max_cond,
        TestStatistic::Pearson,
        DofPolicy::FullTable,
    )
}

/// PC with an explicitly configured test statistic and dof convention.
pub fn pc_learn_configured(
    data: &SampleTable,
    alpha: f64,
    max_cond: usize,
    statistic: TestStatistic,
    dof_policy: DofPolicy,
) -> Result<PcOutput, PcError> {
    let mut source = ChiSquareCiSource::configured(data, alpha, statistic, dof_policy);
    let names = Arc::new(data.variables().to_vec());
    pc_learn_with(names, &mut source, max_cond)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(k: usize) -> Vec<String> {
        (1..=k).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn oracle_on_chain_removes_one_edge() {
        let dag = Dag::new(names(3), &[(0, 1), (1, 2)]).unwrap();
        let mut oracle = DsepOracle::new(&dag);
        let (skeleton, sepsets) = learn_skeleton(3, &mut oracle, DEFAULT_MAX_COND);
        assert_eq!(skeleton, BTreeSet::from([(0, 1), (1, 2)]));
        assert_eq!(sepsets.get(0, 2), Some(&[1][..]));
        assert_eq!(sepsets.len(), 1);
    }

    #[test]
    fn oracle_on_complete_dag_keeps_everything() {
        let dag = Dag::new(names(3), &[(0, 1), (0, 2), (1, 2)]).unwrap();
        let out = pc_learn_oracle(&dag, DEFAULT_MAX_COND).unwrap();
        assert_eq!(out.pattern.skeleton().len(), 3);
        assert!(out.sepsets.is_empty());
        assert!(out.pattern.v_structures().is_empty());
    }

    #[test]
    fn oracle_orients_collider_and_not_chain() {
        let collider = Dag::new(names(3), &[(0, 2), (1, 2)]).unwrap();
        let out = pc_learn_oracle(&collider, DEFAULT_MAX_COND).unwrap();
        assert_eq!(out.pattern.v_structures(), &BTreeSet::from([(0, 2, 1)]));
        assert!(out.conflicts.is_empty());

        let chain = Dag::new(names(3), &[(0, 1), (1, 2)]).unwrap();
        let out = pc_learn_oracle(&chain, DEFAULT_MAX_COND).unwrap();
        assert!(out.pattern.v_structures().is_empty());
    }

    #[test]
    fn oracle_reproduces_ring_with_chord_skeleton() {
        // x1 -> x2 -> x3 -> x4 -> x5, x1 -> x5.
        let dag = Dag::new(names(5), &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]).unwrap();
        let out = pc_learn_oracle(&dag, DEFAULT_MAX_COND).unwrap();
        assert_eq!(
            out.pattern.skeleton(),
            &BTreeSet::from([(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)])
        );
        assert_eq!(out.pattern, dag.pattern());
    }

    #[test]
    fn missing_sepset_is_a_hard_error() {
        let skeleton = BTreeSet::from([(0, 1), (1, 2)]);
        let sepsets = SepSets::default();
        let err = orient_v_structures(Arc::new(names(3)), &skeleton, &sepsets).unwrap_err();
        assert!(matches!(err, PcError::MissingSepset(0, 2)));
    }

    #[test]
    fn conflicting_v_structures_are_dropped_in_pairs() {
        // Path 0 - 1 - 2 - 3 with fabricated sepsets that orient edge (1, 2)
        // both ways: sepset(0, 2) = {} orients 0 -> 1 <- 2, and
        // sepset(1, 3) = {} orients 1 -> 2 <- 3.
        let skeleton = BTreeSet::from([(0, 1), (1, 2), (2, 3)]);
        let mut sepsets = SepSets::default();
        sepsets.insert(0, 2, vec![]);
        sepsets.insert(1, 3, vec![]);
        sepsets.insert(0, 3, vec![]);
        let out = orient_v_structures(Arc::new(names(4)), &skeleton, &sepsets).unwrap();
        assert!(out.pattern.v_structures().is_empty());
        assert_eq!(out.conflicts, vec![(0, 1, 2), (1, 2, 3)]);
    }

    #[test]
    fn statistical_mode_on_independent_coins() {
        use rand::SeedableRng;
        let dag = Dag::new(names(2), &[]).unwrap();
        let cpts = vec![
            crate::bayesnet::Cpt::new(0, vec![], 2, vec![], vec![0.5, 0.5], "x1").unwrap(),
            crate::bayesnet::Cpt::new(1, vec![], 2, vec![], vec![0.5, 0.5], "x2").unwrap(),
        ];
        let net = crate::bayesnet::DiscreteBayesNet::new(dag, cpts).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let data = net.sample(5000, &mut rng);
        let out = pc_learn(&data, 0.01, DEFAULT_MAX_COND).unwrap();
        assert!(out.pattern.skeleton().is_empty());
    }
}
