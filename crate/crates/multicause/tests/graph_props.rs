//! Property suites for the graph layer: agreement of two independent
//! d-separation implementations, Markov-equivalence invariance of patterns,
//! merge algebra, and the local Markov property.

mod common;

use std::collections::BTreeSet;

use multicause::graph::{merge_patterns, Dag};

use common::{
    covered_edges, d_separated_by_trails, power_set, random_dag, reverse_edge, rng,
};

/// Trail-enumeration and moral-ancestral d-separation agree on every
/// (x, y, S) triple of 200 random DAGs with up to 7 vertices.
#[test]
fn dual_d_separation_implementations_agree() {
    let mut rng = rng(101);
    for case in 0..200 {
        let n = 3 + (case % 5); // 3..=7
        let dag = random_dag(n, 0.4, &mut rng);
        for x in 0..n {
            for y in (x + 1)..n {
                let universe: Vec<usize> = (0..n).filter(|&v| v != x && v != y).collect();
                for s in power_set(&universe) {
                    let s_vec: Vec<usize> = s.iter().copied().collect();
                    let fast = dag.d_separated(x, y, &s_vec).unwrap();
                    let slow = d_separated_by_trails(&dag, x, y, &s);
                    assert_eq!(
                        fast, slow,
                        "disagreement on case {case}: x={x} y={y} s={s:?}\n{dag:?}"
                    );
                }
            }
        }
    }
}

/// Reversing a covered edge keeps the skeleton and v-structures identical.
#[test]
fn pattern_is_invariant_across_markov_equivalent_dags() {
    let mut rng = rng(202);
    let mut reversals = 0;
    for _ in 0..300 {
        let n = 3 + (rng.gen_range(0..4)); // 3..=6
        let dag = random_dag(n, 0.45, &mut rng);
        let pattern = dag.pattern();
        for (x, y) in covered_edges(&dag) {
            let reversed = reverse_edge(&dag, x, y);
            assert_eq!(reversed.pattern(), pattern, "reversal of covered {x}->{y}");
            reversals += 1;
        }
    }
    assert!(reversals > 100, "exercised only {reversals} reversals");
}

use rand::Rng;

/// Merging is idempotent, commutative and associative on conflict-free
/// inputs (patterns of edge-deleted subgraphs of one DAG never conflict).
#[test]
fn merge_is_idempotent_commutative_associative_without_conflicts() {
    let mut rng = rng(303);
    for _ in 0..150 {
        let n = 4 + rng.gen_range(0..4);
        let base = random_dag(n, 0.5, &mut rng);
        let patterns: Vec<_> = (0..3)
            .map(|_| {
                let kept: Vec<(usize, usize)> = base
                    .edges()
                    .into_iter()
                    .filter(|_| rng.gen::<f64>() < 0.7)
                    .collect();
                Dag::new(base.names().as_ref().clone(), &kept)
                    .unwrap()
                    .pattern()
            })
            .collect();

        let merged = merge_patterns(&patterns).unwrap();
        // Idempotence.
        let idem = merge_patterns(&[patterns[0].clone(), patterns[0].clone()]).unwrap();
        assert_eq!(idem, patterns[0]);
        let again = merge_patterns(&[merged.clone()]).unwrap();
        assert_eq!(again, merged);
        // Commutativity.
        let swapped = merge_patterns(&[
            patterns[2].clone(),
            patterns[0].clone(),
            patterns[1].clone(),
        ])
        .unwrap();
        assert_eq!(swapped, merged);
        // Associativity: fold pairwise and compare with the flat union.
        let left = merge_patterns(&[patterns[0].clone(), patterns[1].clone()]).unwrap();
        let folded = merge_patterns(&[left, patterns[2].clone()]).unwrap();
        assert_eq!(folded, merged);
    }
}

/// Local Markov property on the graph side: every non-descendant outside the
/// parent set is d-separated by the parents.
#[test]
fn parents_d_separate_from_non_descendants() {
    let mut rng = rng(404);
    for _ in 0..100 {
        let n = 4 + rng.gen_range(0..4);
        let dag = random_dag(n, 0.4, &mut rng);
        for x in 0..n {
            let pa: Vec<usize> = dag.parents_of(x).to_vec();
            for y in dag.non_descendants(x).unwrap() {
                if pa.contains(&y) {
                    continue;
                }
                assert!(
                    dag.d_separated(x, y, &pa).unwrap(),
                    "x={x} y={y} pa={pa:?}\n{dag:?}"
                );
            }
        }
    }
}

/// The five-vertex example graph: topological order unique among all 5!
/// permutations, non-descendants by brute-force reachability, and the
/// blocked-trails claim for (x2, x4 | x3).
#[test]
fn example_graph_derived_values() {
    let names: Vec<String> = (1..=5).map(|i| format!("x{i}")).collect();
    let dag = Dag::new(names, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]).unwrap();

    // Enumerate all permutations of 5 vertices; exactly one satisfies every
    // edge, and it is the one the library reports.
    let mut valid = Vec::new();
    let mut perm = [0usize; 5];
    fn permute(used: &mut [bool; 5], perm: &mut [usize; 5], k: usize, dag: &Dag, out: &mut Vec<[usize; 5]>) {
        if k == 5 {
            let position: Vec<usize> = {
                let mut pos = vec![0; 5];
                for (i, &v) in perm.iter().enumerate() {
                    pos[v] = i;
                }
                pos
            };
            if dag.edges().iter().all(|&(u, v)| position[u] < position[v]) {
                out.push(*perm);
            }
            return;
        }
        for v in 0..5 {
            if !used[v] {
                used[v] = true;
                perm[k] = v;
                permute(used, perm, k + 1, dag, out);
                used[v] = false;
            }
        }
    }
    permute(&mut [false; 5], &mut perm, 0, &dag, &mut valid);
    assert_eq!(valid, vec![[0, 1, 2, 3, 4]]);
    assert_eq!(dag.topological_order(), &[0, 1, 2, 3, 4]);

    // Non-descendants of x4 by definition of reachability.
    assert_eq!(dag.non_descendants(3).unwrap(), BTreeSet::from([0, 1, 2]));

    // Both trails between x2 and x4 are blocked by {x3}: the chain through
    // x3 directly, and x2 <- x1 -> x5 <- x4 at the collider x5.
    assert!(d_separated_by_trails(&dag, 1, 3, &BTreeSet::from([2])));
    assert!(dag.d_separated(1, 3, &[2]).unwrap());
    assert!(!dag.d_separated(1, 3, &[]).unwrap());
}

/// The ALARM ground truth: 37 vertices and a 46-edge skeleton.
#[test]
fn alarm_skeleton_counts() {
    let net = common::load_alarm();
    assert_eq!(net.vertex_count(), 37);
    assert_eq!(net.dag().pattern().skeleton().len(), 46);
}
