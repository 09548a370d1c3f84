//! Directed acyclic graphs, d-separation, skeletons and v-structures.
//!
//! A [`Dag`] is immutable after construction: vertex names are resolved to
//! dense indices once, edges are validated (no cycles, no self-loops, no
//! duplicates) and a deterministic topological order is precomputed.
//! A [`PatternGraph`] is the learned object: an undirected skeleton plus the
//! set of v-structures, which together identify a Markov equivalence class.

use std::collections::HashMap;
use std::collections::{BTreeSet, VecDeque};
use std::sync::Arc;

use thiserror::Error;

/// Unordered skeleton edge, stored canonically with the smaller index first.
pub type Edge = (usize, usize);
/// V-structure `a -> c <- b`, stored canonically with `a < b`.
pub type VStructure = (usize, usize, usize);

/// Canonical form of an unordered pair.
pub fn edge(a: usize, b: usize) -> Edge {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Canonical form of a v-structure triple `a -> c <- b`.
pub fn v_structure(a: usize, c: usize, b: usize) -> VStructure {
    if a < b {
        (a, c, b)
    } else {
        (b, c, a)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("vertex index {index} out of range for {n} vertices")]
    VertexOutOfRange { index: usize, n: usize },
    #[error("duplicate vertex name `{0}`")]
    DuplicateVertex(String),
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(usize, usize),
    #[error("edge set contains a directed cycle")]
    Cycle,
    #[error("vertex lists do not match")]
    VertexMismatch,
    #[error("arguments overlap: {0}")]
    OverlappingArguments(String),
    #[error("v-structure ({0}, {1}, {2}) has an arrow outside the skeleton")]
    ArrowOutsideSkeleton(usize, usize, usize),
    #[error("v-structure ({0}, {1}, {2}) is shielded by a skeleton edge")]
    ShieldedVStructure(usize, usize, usize),
}

/// A directed acyclic graph over named vertices.
#[derive(Debug, Clone)]
pub struct Dag {
    names: Arc<Vec<String>>,
    name_index: Arc<HashMap<String, usize>>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

impl PartialEq for Dag {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names && self.parents == other.parents
    }
}

impl Dag {
    /// Builds a DAG from vertex names and directed index pairs `(from, to)`.
    pub fn new(names: Vec<String>, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let n = names.len();
        let mut name_index = HashMap::with_capacity(n);
        for (i, name) in names.iter().enumerate() {
            if name_index.insert(name.clone(), i).is_some() {
                return Err(GraphError::DuplicateVertex(name.clone()));
            }
        }
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for &(u, v) in edges {
            for &w in &[u, v] {
                if w >= n {
                    return Err(GraphError::VertexOutOfRange { index: w, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if !seen.insert((u, v)) {
                return Err(GraphError::DuplicateEdge(u, v));
            }
            parents[v].push(u);
            children[u].push(v);
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }
        let topo = topological_order_of(&parents, &children)?;
        Ok(Self {
            names: Arc::new(names),
            name_index: Arc::new(name_index),
            parents,
            children,
            topo,
        })
    }

    /// Builds a DAG from vertex names and edges given as name pairs.
    pub fn from_named(names: Vec<String>, edges: &[(&str, &str)]) -> Result<Self, GraphError> {
        let name_index: HashMap<&str, usize> = names
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let mut index_edges = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            let ui = *name_index
                .get(u)
                .ok_or_else(|| GraphError::UnknownVertex(u.to_string()))?;
            let vi = *name_index
                .get(v)
                .ok_or_else(|| GraphError::UnknownVertex(v.to_string()))?;
            index_edges.push((ui, vi));
        }
        Self::new(names, &index_edges)
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &Arc<Vec<String>> {
        &self.names
    }

    pub fn name_of(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.name_index.get(name).copied()
    }

    /// Parents of `v`, sorted by index.
    pub fn parents_of(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    /// Children of `v`, sorted by index.
    pub fn children_of(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn edge_count(&self) -> usize {
        self.children.iter().map(Vec::len).sum()
    }

    /// Directed edges `(from, to)` in deterministic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for u in 0..self.vertex_count() {
            for &v in &self.children[u] {
                out.push((u, v));
            }
        }
        out
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.children[u].binary_search(&v).is_ok()
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.has_edge(u, v) || self.has_edge(v, u)
    }

    /// Topological order; ties broken by declared vertex order.
    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    fn check_vertex(&self, v: usize) -> Result<(), GraphError> {
        if v >= self.vertex_count() {
            return Err(GraphError::VertexOutOfRange {
                index: v,
                n: self.vertex_count(),
            });
        }
        Ok(())
    }

    /// Vertices reachable from `x` by a directed path, excluding `x`.
    pub fn descendants(&self, x: usize) -> Result<BTreeSet<usize>, GraphError> {
        self.check_vertex(x)?;
        let mut seen = vec![false; self.vertex_count()];
        let mut stack: Vec<usize> = self.children[x].clone();
        while let Some(u) = stack.pop() {
            if std::mem::replace(&mut seen[u], true) {
                continue;
            }
            stack.extend_from_slice(&self.children[u]);
        }
        Ok((0..self.vertex_count()).filter(|&v| seen[v]).collect())
    }

    /// All vertices that are neither `x` nor descendants of `x`.
    pub fn non_descendants(&self, x: usize) -> Result<BTreeSet<usize>, GraphError> {
        let de = self.descendants(x)?;
        Ok((0..self.vertex_count())
            .filter(|&v| v != x && !de.contains(&v))
            .collect())
    }

    /// Ancestor closure of a seed set (the seeds themselves included).
    fn ancestral_mask(&self, seeds: &[usize]) -> Vec<bool> {
        let mut mask = vec![false; self.vertex_count()];
        let mut stack: Vec<usize> = seeds.to_vec();
        while let Some(u) = stack.pop() {
            if std::mem::replace(&mut mask[u], true) {
                continue;
            }
            stack.extend_from_slice(&self.parents[u]);
        }
        mask
    }

    /// Tests whether `s` d-separates `x` from `y`.
    ///
    /// Implementation: restrict to the ancestral set of `{x, y} ∪ s`,
    /// moralize, delete `s`, and test undirected reachability.
    pub fn d_separated(&self, x: usize, y: usize, s: &[usize]) -> Result<bool, GraphError> {
        self.check_vertex(x)?;
        self.check_vertex(y)?;
        for &v in s {
            self.check_vertex(v)?;
        }
        if x == y {
            return Err(GraphError::OverlappingArguments(format!(
                "x and y are both {}",
                self.name_of(x)
            )));
        }
        if s.contains(&x) || s.contains(&y) {
            return Err(GraphError::OverlappingArguments(
                "conditioning set contains an endpoint".into(),
            ));
        }

        let mut seeds = vec![x, y];
        seeds.extend_from_slice(s);
        let mask = self.ancestral_mask(&seeds);

        // Moral graph over the ancestral set: undirect every edge and marry
        // co-parents of every vertex in the set.
        let n = self.vertex_count();
        let mut adj = vec![BTreeSet::new(); n];
        for v in 0..n {
            if !mask[v] {
                continue;
            }
            let pa = &self.parents[v];
            for (i, &p) in pa.iter().enumerate() {
                if !mask[p] {
                    continue;
                }
                adj[v].insert(p);
                adj[p].insert(v);
                for &q in &pa[i + 1..] {
                    if mask[q] {
                        adj[p].insert(q);
                        adj[q].insert(p);
                    }
                }
            }
        }

        let mut blocked = vec![false; n];
        for &v in s {
            blocked[v] = true;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::new();
        seen[x] = true;
        queue.push_back(x);
        while let Some(u) = queue.pop_front() {
            if u == y {
                return Ok(false);
            }
            for &w in &adj[u] {
                if !seen[w] && !blocked[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        Ok(true)
    }

    /// Skeleton and v-structures of this DAG.
    pub fn pattern(&self) -> PatternGraph {
        let mut skeleton = BTreeSet::new();
        for (u, v) in self.edges() {
            skeleton.insert(edge(u, v));
        }
        let mut v_structures = BTreeSet::new();
        for c in 0..self.vertex_count() {
            let pa = &self.parents[c];
            for (i, &a) in pa.iter().enumerate() {
                for &b in &pa[i + 1..] {
                    if !self.adjacent(a, b) {
                        v_structures.insert(v_structure(a, c, b));
                    }
                }
            }
        }
        PatternGraph {
            names: self.names.clone(),
            skeleton,
            v_structures,
        }
    }
}

/// Kahn's algorithm with deterministic tie-breaking by vertex index.
fn topological_order_of(
    parents: &[Vec<usize>],
    children: &[Vec<usize>],
) -> Result<Vec<usize>, GraphError> {
    let n = parents.len();
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(&v) = ready.iter().next() {
        ready.remove(&v);
        order.push(v);
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() != n {
        return Err(GraphError::Cycle);
    }
    Ok(order)
}

/// Skeleton plus v-structures: the output object of every learner here.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternGraph {
    names: Arc<Vec<String>>,
    skeleton: BTreeSet<Edge>,
    v_structures: BTreeSet<VStructure>,
}

impl PatternGraph {
    /// Builds a pattern and checks its invariants strictly: every v-structure
    /// arrow must be a skeleton edge, its endpoints must be non-adjacent, and
    /// triples must be canonical.
    pub fn new(
        names: Arc<Vec<String>>,
        skeleton: BTreeSet<Edge>,
        v_structures: BTreeSet<VStructure>,
    ) -> Result<Self, GraphError> {
        let n = names.len();
        for &(u, v) in &skeleton {
            if u >= v {
                return Err(GraphError::DuplicateEdge(u, v));
            }
            if v >= n {
                return Err(GraphError::VertexOutOfRange { index: v, n });
            }
        }
        for &(a, c, b) in &v_structures {
            if a >= b || c == a || c == b {
                return Err(GraphError::ArrowOutsideSkeleton(a, c, b));
            }
            if a.max(b).max(c) >= n {
                return Err(GraphError::VertexOutOfRange {
                    index: a.max(b).max(c),
                    n,
                });
            }
            if !skeleton.contains(&edge(a, c)) || !skeleton.contains(&edge(b, c)) {
                return Err(GraphError::ArrowOutsideSkeleton(a, c, b));
            }
            if skeleton.contains(&edge(a, b)) {
                return Err(GraphError::ShieldedVStructure(a, c, b));
            }
        }
        Ok(Self {
            names,
            skeleton,
            v_structures,
        })
    }

    pub fn empty(names: Arc<Vec<String>>) -> Self {
        Self {
            names,
            skeleton: BTreeSet::new(),
            v_structures: BTreeSet::new(),
        }
    }

    pub fn names(&self) -> &Arc<Vec<String>> {
        &self.names
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    pub fn skeleton(&self) -> &BTreeSet<Edge> {
        &self.skeleton
    }

    pub fn v_structures(&self) -> &BTreeSet<VStructure> {
        &self.v_structures
    }

    pub fn has_skeleton_edge(&self, u: usize, v: usize) -> bool {
        self.skeleton.contains(&edge(u, v))
    }

    /// Directed arrows contributed by the v-structures, deduplicated.
    pub fn arrows(&self) -> BTreeSet<(usize, usize)> {
        let mut out = BTreeSet::new();
        for &(a, c, b) in &self.v_structures {
            out.insert((a, c));
            out.insert((b, c));
        }
        out
    }
}

/// What `merge_patterns` removed and why.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MergeLog {
    /// V-structures removed because two of them orient a skeleton edge in
    /// opposite directions somewhere in the union.
    pub conflicting: Vec<VStructure>,
    /// V-structures removed because the union skeleton contains an edge
    /// between their endpoints, so the triple is no longer unshielded.
    pub shielded: Vec<VStructure>,
}

/// Union of patterns: skeleton and v-structure sets are unioned, then
/// v-structures that became shielded by the union skeleton are dropped, and
/// v-structures with conflicting arrow orientations are removed together.
pub fn merge_patterns_with_log(
    patterns: &[PatternGraph],
) -> Result<(PatternGraph, MergeLog), GraphError> {
    let first = patterns.first().ok_or(GraphError::VertexMismatch)?;
    for p in &patterns[1..] {
        if p.names != first.names {
            return Err(GraphError::VertexMismatch);
        }
    }

    let mut skeleton = BTreeSet::new();
    let mut candidates = BTreeSet::new();
    for p in patterns {
        skeleton.extend(p.skeleton.iter().copied());
        candidates.extend(p.v_structures.iter().copied());
    }

    let mut log = MergeLog::default();
    let mut kept = BTreeSet::new();
    for &(a, c, b) in &candidates {
        if skeleton.contains(&edge(a, b)) {
            log.shielded.push((a, c, b));
        } else {
            kept.insert((a, c, b));
        }
    }

    // Arrow conflicts: the same skeleton edge oriented both ways across the
    // union. Every v-structure contributing either direction is removed.
    let mut arrow_owners: HashMap<(usize, usize), Vec<VStructure>> = HashMap::new();
    for &(a, c, b) in &kept {
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
        kept.remove(vs);
    }
    log.conflicting = removed.into_iter().collect();

    let merged = PatternGraph::new(first.names.clone(), skeleton, kept)?;
    Ok((merged, log))
}

/// Union of patterns; see [`merge_patterns_with_log`] for the full outcome.
pub fn merge_patterns(patterns: &[PatternGraph]) -> Result<PatternGraph, GraphError> {
    merge_patterns_with_log(patterns).map(|(p, _)| p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(k: usize) -> Vec<String> {
        (1..=k).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn two_vertex_chain_is_valid() {
        let g = Dag::new(names(2), &[(0, 1)]).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert!(g.has_edge(0, 1));
        assert!(!g.has_edge(1, 0));
    }

    #[test]
    fn two_cycle_is_rejected() {
        let err = Dag::new(names(2), &[(0, 1), (1, 0)]).unwrap_err();
        assert_eq!(err, GraphError::Cycle);
    }

    #[test]
    fn bad_endpoint_and_duplicates_are_rejected() {
        assert!(matches!(
            Dag::new(names(2), &[(0, 5)]),
            Err(GraphError::VertexOutOfRange { index: 5, .. })
        ));
        assert!(matches!(
            Dag::new(names(2), &[(0, 1), (0, 1)]),
            Err(GraphError::DuplicateEdge(0, 1))
        ));
        assert!(matches!(
            Dag::new(names(2), &[(1, 1)]),
            Err(GraphError::SelfLoop(1))
        ));
        assert!(matches!(
            Dag::from_named(names(2), &[("x1", "zz")]),
            Err(GraphError::UnknownVertex(_))
        ));
    }

    #[test]
    fn topological_order_of_chain_and_ties() {
        let g = Dag::new(names(3), &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(g.topological_order(), &[0, 1, 2]);
        let edgeless = Dag::new(vec!["a".into(), "b".into(), "c".into()], &[]).unwrap();
        assert_eq!(edgeless.topological_order(), &[0, 1, 2]);
    }

    #[test]
    fn descendants_of_chain() {
        let g = Dag::new(names(3), &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(g.descendants(0).unwrap(), BTreeSet::from([1, 2]));
        assert!(g.descendants(2).unwrap().is_empty());
        assert_eq!(g.non_descendants(2).unwrap(), BTreeSet::from([0, 1]));
        assert!(g.descendants(9).is_err());
    }

    #[test]
    fn d_separation_collider_and_chain() {
        // a -> c <- b
        let g = Dag::new(names(3), &[(0, 2), (1, 2)]).unwrap();
        assert!(g.d_separated(0, 1, &[]).unwrap());
        assert!(!g.d_separated(0, 1, &[2]).unwrap());
        // a -> b -> c
        let chain = Dag::new(names(3), &[(0, 1), (1, 2)]).unwrap();
        assert!(chain.d_separated(0, 2, &[1]).unwrap());
        assert!(!chain.d_separated(0, 2, &[]).unwrap());
    }

    #[test]
    fn d_separation_argument_checks() {
        let g = Dag::new(names(3), &[(0, 1)]).unwrap();
        assert!(g.d_separated(0, 0, &[]).is_err());
        assert!(g.d_separated(0, 1, &[1]).is_err());
        assert!(g.d_separated(0, 7, &[]).is_err());
    }

    /// The five-vertex cycle-with-chord graph used widely in the tests:
    /// x1 -> x2 -> x3 -> x4 -> x5 and x1 -> x5.
    fn ring_with_chord() -> Dag {
        Dag::new(names(5), &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]).unwrap()
    }

    #[test]
    fn ring_with_chord_relations() {
        let g = ring_with_chord();
        assert_eq!(g.topological_order(), &[0, 1, 2, 3, 4]);
        assert_eq!(g.non_descendants(3).unwrap(), BTreeSet::from([0, 1, 2]));
        // Both trails x2-x3-x4 and x2<-x1->x5<-x4 are blocked by {x3}.
        assert!(g.d_separated(1, 3, &[2]).unwrap());
        assert!(!g.d_separated(1, 3, &[]).unwrap());
    }

    #[test]
    fn pattern_of_collider_and_shielded_collider() {
        let g = Dag::new(names(3), &[(0, 2), (1, 2)]).unwrap();
        let p = g.pattern();
        assert_eq!(p.skeleton().len(), 2);
        assert_eq!(p.v_structures(), &BTreeSet::from([(0, 2, 1)]));

        let shielded = Dag::new(names(3), &[(0, 2), (1, 2), (0, 1)]).unwrap();
        assert!(shielded.pattern().v_structures().is_empty());
    }

    #[test]
    fn pattern_invariants_are_checked() {
        let nm = Arc::new(names(3));
        // Arrow outside skeleton.
        assert!(PatternGraph::new(
            nm.clone(),
            BTreeSet::from([(0, 2)]),
            BTreeSet::from([(0, 2, 1)]),
        )
        .is_err());
        // Shielded triple.
        assert!(PatternGraph::new(
            nm.clone(),
            BTreeSet::from([(0, 2), (1, 2), (0, 1)]),
            BTreeSet::from([(0, 2, 1)]),
        )
        .is_err());
        // Valid.
        assert!(PatternGraph::new(
            nm,
            BTreeSet::from([(0, 2), (1, 2)]),
            BTreeSet::from([(0, 2, 1)]),
        )
        .is_ok());
    }

    #[test]
    fn merge_identity_and_disjoint_union() {
        let g = ring_with_chord();
        let p = g.pattern();
        let merged = merge_patterns(&[p.clone()]).unwrap();
        assert_eq!(merged, p);

        let nm = Arc::new(names(3));
        let p1 = PatternGraph::new(nm.clone(), BTreeSet::from([(0, 1)]), BTreeSet::new()).unwrap();
        let p2 = PatternGraph::new(nm, BTreeSet::from([(1, 2)]), BTreeSet::new()).unwrap();
        let merged = merge_patterns(&[p1, p2]).unwrap();
        assert_eq!(merged.skeleton(), &BTreeSet::from([(0, 1), (1, 2)]));
        assert!(merged.v_structures().is_empty());
    }

    #[test]
    fn merge_rejects_mismatched_vertices() {
        let p1 = PatternGraph::empty(Arc::new(names(3)));
        let p2 = PatternGraph::empty(Arc::new(names(4)));
        assert_eq!(
            merge_patterns(&[p1, p2]).unwrap_err(),
            GraphError::VertexMismatch
        );
    }

    #[test]
    fn merge_removes_conflicting_v_structures() {
        // Five vertices 0..5. Pattern A orients 2 -> 3 via v-structure
        // (2, 3, 4); pattern B orients 3 -> 2 via v-structure (1, 2, 3).
        let nm = Arc::new(names(5));
        let a = PatternGraph::new(
            nm.clone(),
            BTreeSet::from([(2, 3), (3, 4)]),
            BTreeSet::from([(2, 3, 4)]),
        )
        .unwrap();
        let b = PatternGraph::new(
            nm.clone(),
            BTreeSet::from([(1, 2), (2, 3)]),
            BTreeSet::from([(1, 2, 3)]),
        )
        .unwrap();
        let (merged, log) = merge_patterns_with_log(&[a, b]).unwrap();
        assert!(merged.v_structures().is_empty());
        assert_eq!(log.conflicting.len(), 2);
        assert_eq!(
            merged.skeleton(),
            &BTreeSet::from([(1, 2), (2, 3), (3, 4)])
        );
    }

    #[test]
    fn merge_drops_v_structures_shielded_by_the_union() {
        // Pattern A has the v-structure (0, 2, 1); pattern B contributes the
        // shielding edge 0 - 1, so the triple is no longer unshielded.
        let nm = Arc::new(names(3));
        let a = PatternGraph::new(
            nm.clone(),
            BTreeSet::from([(0, 2), (1, 2)]),
            BTreeSet::from([(0, 2, 1)]),
        )
        .unwrap();
        let b = PatternGraph::new(nm, BTreeSet::from([(0, 1)]), BTreeSet::new()).unwrap();
        let (merged, log) = merge_patterns_with_log(&[a, b]).unwrap();
        assert!(merged.v_structures().is_empty());
        assert_eq!(log.shielded, vec![(0, 2, 1)]);
    }
}
