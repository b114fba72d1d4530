//! Shared fixtures for the criterion benchmarks.

use lftj::{build_from_sorted, TrieArray};

/// Clique-pack graph as a trie, the standard triangle workload.
pub fn clique_pack_trie(alpha_hat: u64, m: u64) -> TrieArray {
    let edges = lftj::gen::gen_clique_pack(alpha_hat, m).expect("valid parameters");
    build_from_sorted(&edges, 2).expect("generator emits sorted edges")
}

/// Uniform random graph as a trie.
pub fn rand_trie(nodes: u64, edges: u64, seed: u64) -> TrieArray {
    let e = lftj::gen::gen_rand(nodes, edges, seed).expect("valid parameters");
    build_from_sorted(&e, 2).expect("generator emits sorted edges")
}
