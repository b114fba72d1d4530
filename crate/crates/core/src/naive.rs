//! Naive reference evaluation, deliberately independent of the trie-based
//! join path. Used by tests and the acceptance suite as ground truth.

use std::collections::HashSet;

use crate::relation::Tuple;

/// One body atom for the reference evaluator. `vars[i]` is the variable
/// bound by attribute `i`; repeats are allowed.
pub struct NaiveAtom<'a> {
    pub tuples: &'a [Tuple],
    pub vars: Vec<usize>,
}

/// Evaluates a full conjunctive query by backtracking over atom tuples.
/// Returns the sorted, duplicate-free set of variable bindings.
pub fn nested_loop_join(n_vars: usize, atoms: &[NaiveAtom]) -> Vec<Tuple> {
    let mut out = Vec::new();
    let mut binding: Vec<Option<i64>> = vec![None; n_vars];
    descend(atoms, 0, &mut binding, &mut out);
    out.sort();
    out.dedup();
    out
}

fn descend(atoms: &[NaiveAtom], a: usize, binding: &mut Vec<Option<i64>>, out: &mut Vec<Tuple>) {
    if a == atoms.len() {
        // full conjunctive: every variable is mentioned by some atom
        out.push(binding.iter().map(|v| v.expect("unbound variable")).collect());
        return;
    }
    let atom = &atoms[a];
    'tuples: for t in atom.tuples {
        let saved = binding.clone();
        for (i, &var) in atom.vars.iter().enumerate() {
            match binding[var] {
                Some(v) if v != t[i] => {
                    *binding = saved;
                    continue 'tuples;
                }
                Some(_) => {}
                None => binding[var] = Some(t[i]),
            }
        }
        descend(atoms, a + 1, binding, out);
        *binding = saved;
    }
}

/// Brute-force triangle count over a directed (min, max) edge table:
/// triples x < y < z with (x,y), (x,z), (y,z) all present.
pub fn triangle_count_cubic(edges: &[Tuple]) -> u64 {
    triangle_list_cubic(edges).len() as u64
}

/// Brute-force triangle listing; cubic in the number of nodes.
pub fn triangle_list_cubic(edges: &[Tuple]) -> Vec<(i64, i64, i64)> {
    let set: HashSet<(i64, i64)> = edges.iter().map(|e| (e[0], e[1])).collect();
    let mut nodes: Vec<i64> = edges.iter().flat_map(|e| [e[0], e[1]]).collect();
    nodes.sort();
    nodes.dedup();
    let mut out = Vec::new();
    for (i, &x) in nodes.iter().enumerate() {
        for (j, &y) in nodes.iter().enumerate().skip(i + 1) {
            if !set.contains(&(x, y)) {
                continue;
            }
            for &z in &nodes[j + 1..] {
                if set.contains(&(x, z)) && set.contains(&(y, z)) {
                    out.push((x, y, z));
                }
            }
        }
    }
    out
}
