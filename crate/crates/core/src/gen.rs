//! Graph generators for the harness: uniform random, R-MAT, and the
//! clique-pack family maximizing triangle count at fixed edge budget.
//!
//! All generators emit simple undirected graphs as sorted (min, max)
//! edge tuples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

use crate::error::Error;
use crate::relation::Tuple;
use crate::Result;

/// Uniform random simple graph with exactly `edges` edges over `nodes`
/// vertices, sampled by rejection.
pub fn gen_rand(nodes: u64, edges: u64, seed: u64) -> Result<Vec<Tuple>> {
    let max_edges = nodes.saturating_mul(nodes.saturating_sub(1)) / 2;
    if edges > max_edges {
        return Err(Error::InvalidParameter(format!(
            "{edges} edges exceed the {max_edges} possible on {nodes} nodes"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set: BTreeSet<(i64, i64)> = BTreeSet::new();
    while (set.len() as u64) < edges {
        let a = rng.gen_range(0..nodes as i64);
        let b = rng.gen_range(0..nodes as i64);
        if a == b {
            continue;
        }
        set.insert((a.min(b), a.max(b)));
    }
    Ok(set.into_iter().map(|(a, b)| vec![a, b]).collect())
}

/// R-MAT graph over 2^scale vertices: `edges` recursive-quadrant samples
/// with the usual (0.57, 0.19, 0.19, 0.05) partition, then simplified
/// (self-loops dropped, symmetrized to (min, max), deduplicated). The
/// simplified graph may hold fewer than `edges` edges.
pub fn gen_rmat(scale: u32, edges: u64, seed: u64) -> Result<Vec<Tuple>> {
    if scale == 0 || scale > 40 {
        return Err(Error::InvalidParameter(format!("unsupported scale {scale}")));
    }
    const P: [f64; 4] = [0.57, 0.19, 0.19, 0.05];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set: BTreeSet<(i64, i64)> = BTreeSet::new();
    for _ in 0..edges {
        let (mut a, mut b) = (0i64, 0i64);
        for _ in 0..scale {
            let r: f64 = rng.gen();
            let q = if r < P[0] {
                0
            } else if r < P[0] + P[1] {
                1
            } else if r < P[0] + P[1] + P[2] {
                2
            } else {
                3
            };
            a = 2 * a + (q >> 1) as i64;
            b = 2 * b + (q & 1) as i64;
        }
        if a != b {
            set.insert((a.min(b), a.max(b)));
        }
    }
    Ok(set.into_iter().map(|(a, b)| vec![a, b]).collect())
}

/// Packs `m` edges into disjoint cliques K_k with k = 2 * alpha_hat, so the
/// graph has arboricity at most alpha_hat, plus isolated filler edges to
/// reach exactly `m` edges. This maximizes triangles at the given edge and
/// arboricity budget up to lower-order terms.
pub fn gen_clique_pack(alpha_hat: u64, m: u64) -> Result<Vec<Tuple>> {
    if alpha_hat == 0 {
        return Err(Error::InvalidParameter("alpha_hat must be positive".into()));
    }
    let k = 2 * alpha_hat as i64;
    let per_clique = (k * (k - 1) / 2) as u64;
    let cliques = m / per_clique;
    let mut edges: Vec<Tuple> = Vec::with_capacity(m as usize);
    for c in 0..cliques as i64 {
        let base = c * k;
        for i in 0..k {
            for j in i + 1..k {
                edges.push(vec![base + i, base + j]);
            }
        }
    }
    // filler: isolated edges on fresh vertices, no new triangles
    let mut next = cliques as i64 * k;
    while (edges.len() as u64) < m {
        edges.push(vec![next, next + 1]);
        next += 2;
    }
    edges.sort();
    Ok(edges)
}

/// Exact triangle count of `gen_clique_pack(alpha_hat, m)`.
pub fn clique_pack_triangles(alpha_hat: u64, m: u64) -> u64 {
    let k = 2 * alpha_hat;
    let per_clique = k * (k - 1) / 2;
    let cliques = m / per_clique;
    cliques * k * (k - 1) * (k - 2) / 6
}

/// Lower bound on the maximum triangle count of any graph with `m` edges
/// and arboricity at most `alpha_hat`, witnessed by the clique packing.
pub fn clique_pack_lower_bound(alpha_hat: u64, m: u64) -> f64 {
    let a = alpha_hat as f64;
    let m = m as f64;
    (2.0 / 3.0) * m * a - (2.0 / 3.0) * m - (4.0 / 3.0) * a * a * a - (2.0 / 3.0) * a * a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::naive::triangle_count_cubic;

    fn is_simple_sorted(edges: &[Tuple]) {
        for w in edges.windows(2) {
            assert!(w[0] < w[1], "not sorted or duplicated: {w:?}");
        }
        for e in edges {
            assert!(e[0] < e[1], "not a (min, max) simple edge: {e:?}");
        }
    }

    #[test]
    fn rand_exact_count_and_simple() {
        let e = gen_rand(50, 200, 7).unwrap();
        assert_eq!(e.len(), 200);
        is_simple_sorted(&e);
        for t in &e {
            assert!((0..50).contains(&t[0]) && (0..50).contains(&t[1]));
        }
    }

    #[test]
    fn rand_complete_graph() {
        let e = gen_rand(10, 45, 3).unwrap();
        assert_eq!(e.len(), 45);
        is_simple_sorted(&e);
        assert!(gen_rand(10, 46, 3).is_err());
    }

    #[test]
    fn rand_deterministic_per_seed() {
        assert_eq!(gen_rand(30, 80, 5).unwrap(), gen_rand(30, 80, 5).unwrap());
        assert_ne!(gen_rand(30, 80, 5).unwrap(), gen_rand(30, 80, 6).unwrap());
    }

    #[test]
    fn rmat_simple_and_bounded() {
        let e = gen_rmat(8, 500, 11).unwrap();
        assert!(!e.is_empty() && e.len() <= 500);
        is_simple_sorted(&e);
        for t in &e {
            assert!((0..256).contains(&t[0]) && (0..256).contains(&t[1]));
        }
        assert_eq!(gen_rmat(8, 500, 11).unwrap(), e);
    }

    #[test]
    fn clique_pack_structure() {
        // alpha_hat = 2: K_4 cliques of 6 edges each
        let e = gen_clique_pack(2, 12).unwrap();
        assert_eq!(e.len(), 12);
        is_simple_sorted(&e);
        assert_eq!(clique_pack_triangles(2, 12), 8);
        assert_eq!(triangle_count_cubic(&e), 8);

        // filler edges contribute no triangles
        let e = gen_clique_pack(2, 15).unwrap();
        assert_eq!(e.len(), 15);
        assert_eq!(triangle_count_cubic(&e), clique_pack_triangles(2, 15));
    }

    #[test]
    fn clique_pack_meets_lower_bound() {
        for alpha_hat in [2u64, 3, 4] {
            for m in [200u64, 1000, 5000] {
                let t = clique_pack_triangles(alpha_hat, m) as f64;
                assert!(
                    t >= clique_pack_lower_bound(alpha_hat, m),
                    "alpha_hat={alpha_hat} m={m}: {t} below bound"
                );
            }
        }
    }

    #[test]
    fn clique_pack_triangle_oracle() {
        for alpha_hat in [2u64, 3] {
            for m in [37u64, 100, 240] {
                let e = gen_clique_pack(alpha_hat, m).unwrap();
                assert_eq!(e.len() as u64, m);
                assert_eq!(
                    triangle_count_cubic(&e),
                    clique_pack_triangles(alpha_hat, m)
                );
            }
        }
    }
}
