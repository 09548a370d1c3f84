//! Shared test oracles, independent of the library's implementation paths:
//! a trail-enumeration d-separation check, random DAG and network
//! generators, covered-edge utilities, and quadrature for the χ² tail.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution};

use multicause::bayesnet::{Cpt, DiscreteBayesNet};
use multicause::graph::Dag;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn load_alarm() -> DiscreteBayesNet {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/alarm.bif");
    let text = std::fs::read_to_string(path).expect("alarm fixture present");
    multicause::io::parse_bif(&text).expect("alarm parses")
}

/// Random DAG: a uniformly drawn topological order, each forward pair an
/// edge independently with probability `edge_prob`.
pub fn random_dag<R: Rng>(n: usize, edge_prob: f64, rng: &mut R) -> Dag {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < edge_prob {
                edges.push((order[i], order[j]));
            }
        }
    }
    let names = (0..n).map(|v| format!("x{}", v + 1)).collect();
    Dag::new(names, &edges).expect("forward edges are acyclic")
}

/// Random CPTs over the given DAG: cardinalities drawn from `cards`,
/// rows drawn from a flat Dirichlet.
pub fn random_net<R: Rng>(dag: &Dag, cards: &[usize], rng: &mut R) -> DiscreteBayesNet {
    let n = dag.vertex_count();
    let card_of: Vec<usize> = (0..n).map(|_| cards[rng.gen_range(0..cards.len())]).collect();
    let cpts = (0..n)
        .map(|v| {
            let parents = dag.parents_of(v).to_vec();
            let parent_cards: Vec<usize> = parents.iter().map(|&p| card_of[p]).collect();
            let rows: usize = parent_cards.iter().product();
            let dirichlet = Dirichlet::new_with_size(1.0, card_of[v]).unwrap();
            let mut table = Vec::with_capacity(rows * card_of[v]);
            for _ in 0..rows {
                let mut row = dirichlet.sample(rng);
                let sum: f64 = row.iter().sum();
                row.iter_mut().for_each(|p| *p /= sum);
                table.extend(row);
            }
            Cpt::new(v, parents, card_of[v], parent_cards, table, dag.name_of(v)).unwrap()
        })
        .collect();
    DiscreteBayesNet::new(dag.clone(), cpts).unwrap()
}

/// d-separation decided by enumerating every simple trail between `x` and
/// `y` and checking the blocking conditions along it. Exponential, only for
/// small graphs; deliberately shares nothing with the library's
/// moral-ancestral implementation.
pub fn d_separated_by_trails(dag: &Dag, x: usize, y: usize, s: &BTreeSet<usize>) -> bool {
    let n = dag.vertex_count();
    // Vertices that are in S or have a descendant in S: exactly the
    // vertices at which a collider is opened.
    let mut opens = vec![false; n];
    let mut stack: Vec<usize> = s.iter().copied().collect();
    while let Some(v) = stack.pop() {
        if std::mem::replace(&mut opens[v], true) {
            continue;
        }
        stack.extend_from_slice(dag.parents_of(v));
    }

    // DFS over simple trails, tracking the direction of the last step:
    // `true` when the previous edge points INTO the current vertex.
    fn active_trail_exists(
        dag: &Dag,
        current: usize,
        entered_head: Option<bool>,
        target: usize,
        s: &BTreeSet<usize>,
        opens: &[bool],
        visited: &mut Vec<bool>,
    ) -> bool {
        if current == target {
            return true;
        }
        visited[current] = true;
        let neighbors: Vec<(usize, bool)> = dag
            .children_of(current)
            .iter()
            .map(|&c| (c, false))
            .chain(dag.parents_of(current).iter().map(|&p| (p, true)))
            .collect();
        for (next, into_current) in neighbors {
            if visited[next] {
                continue;
            }
            // `into_current` is true when the edge next -> current exists,
            // i.e. leaving `current` against the arrow.
            let ok = match entered_head {
                None => true,
                Some(prev_into_current) => {
                    let collider = prev_into_current && into_current;
                    if collider {
                        opens[current]
                    } else {
                        !s.contains(&current)
                    }
                }
            };
            if !ok {
                continue;
            }
            // The edge traversed is current -> next (head at next) when it
            // is a child edge; next -> current means the head is at current,
            // so at `next` we arrived via its tail.
            let entering_next_head = !into_current;
            if active_trail_exists(dag, next, Some(entering_next_head), target, s, opens, visited)
            {
                return true;
            }
        }
        visited[current] = false;
        false
    }

    let mut visited = vec![false; n];
    !active_trail_exists(dag, x, None, y, s, &opens, &mut visited)
}

/// All subsets of `universe`, smallest first.
pub fn power_set(universe: &[usize]) -> Vec<BTreeSet<usize>> {
    let mut out = Vec::with_capacity(1 << universe.len());
    for mask in 0u32..(1 << universe.len()) {
        out.push(
            universe
                .iter()
                .enumerate()
                .filter(|&(i, _)| mask & (1 << i) != 0)
                .map(|(_, &v)| v)
                .collect(),
        );
    }
    out
}

/// Edges `x -> y` with `pa(y) = pa(x) ∪ {x}`; reversing one keeps the DAG in
/// the same Markov equivalence class.
pub fn covered_edges(dag: &Dag) -> Vec<(usize, usize)> {
    dag.edges()
        .into_iter()
        .filter(|&(x, y)| {
            let mut pay: Vec<usize> = dag.parents_of(y).iter().copied().filter(|&p| p != x).collect();
            pay.sort_unstable();
            pay == dag.parents_of(x)
        })
        .collect()
}

pub fn reverse_edge(dag: &Dag, x: usize, y: usize) -> Dag {
    let edges: Vec<(usize, usize)> = dag
        .edges()
        .into_iter()
        .map(|e| if e == (x, y) { (y, x) } else { e })
        .collect();
    Dag::new(dag.names().as_ref().clone(), &edges).expect("covered reversal stays acyclic")
}

pub fn names(n: usize) -> Arc<Vec<String>> {
    Arc::new((0..n).map(|v| format!("x{}", v + 1)).collect())
}

// ---------------------------------------------------------------------------
// Quadrature oracle for the χ² upper tail
// ---------------------------------------------------------------------------

/// Γ(k/2) for integer `k >= 1`, computed from the half-integer recurrence.
fn gamma_half(k: usize) -> f64 {
    if k % 2 == 0 {
        (1..k / 2).map(|i| i as f64).product()
    } else {
        let mut acc = std::f64::consts::PI.sqrt();
        let mut z = 0.5;
        for _ in 0..(k - 1) / 2 {
            acc *= z;
            z += 1.0;
        }
        acc
    }
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(f, a, m, fa, flm, fm);
    let right = simpson(f, m, b, fm, frm, fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        left + right + (left + right - whole) / 15.0
    } else {
        adaptive(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + adaptive(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}

/// Upper-tail χ² probability by adaptive Simpson quadrature of the density
/// under the substitution `x = u^2`, which removes the dof-1 singularity.
pub fn chi_square_sf_quadrature(statistic: f64, dof: usize) -> f64 {
    assert!(dof >= 1);
    if statistic <= 0.0 {
        return 1.0;
    }
    let k = dof as f64;
    let norm = 2.0 / (2f64.powf(k / 2.0) * gamma_half(dof));
    let g = move |u: f64| norm * u.powf(k - 1.0) * (-u * u / 2.0).exp();
    let upper = statistic.sqrt();
    let (fa, fm, fb) = (g(0.0), g(upper / 2.0), g(upper));
    let whole = simpson(&g, 0.0, upper, fa, fm, fb);
    let cdf = adaptive(&g, 0.0, upper, fa, fm, fb, whole, 1e-13, 60);
    (1.0 - cdf).max(0.0)
}
