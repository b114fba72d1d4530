//! Slices of trie-encoded relations: the sub-trie below a fixed prefix,
//! restricted to a value range at the first free level, rebased to local
//! offsets. `provision` materializes a slice; `probe` finds the widest
//! range whose slice fits a block budget without materializing it.

use std::collections::HashMap;

use crate::relation::{Tuple, TrieArray, POS_INF};
use crate::trie_iter::TrieBacking;

/// Counts block reads against on-disk arrays, coalescing repeated reads of
/// the most recent block per (file, array). Binary searches near array
/// boundaries and adjacent provisions therefore share boundary blocks.
#[derive(Debug, Default)]
pub struct ReadCounter {
    last: HashMap<(u32, u32), usize>,
    pub reads: u64,
}

impl ReadCounter {
    pub fn new() -> ReadCounter {
        ReadCounter::default()
    }

    fn read_word(&mut self, file: u32, array: u32, word: usize, block_size: usize) {
        self.read_block(file, array, word / block_size);
    }

    fn read_block(&mut self, file: u32, array: u32, block: usize) {
        if self.last.insert((file, array), block) != Some(block) {
            self.reads += 1;
        }
    }

    fn read_span(&mut self, file: u32, array: u32, lo: usize, hi_incl: usize, block_size: usize) {
        for b in lo / block_size..=hi_incl / block_size {
            self.read_block(file, array, b);
        }
    }
}

/// A materialized slice: relation `R` restricted to tuples extending
/// `prefix` with a level-k value in `[low, high]`. The prefix levels are
/// kept as singleton arrays so the slice walks like a full-arity trie;
/// index arrays are rebased to slice-local positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrieArraySlice {
    trie: TrieArray,
    prefix: Vec<i64>,
    low: i64,
    high: i64,
}

impl TrieArraySlice {
    pub fn prefix(&self) -> &[i64] {
        &self.prefix
    }

    pub fn bounds(&self) -> (i64, i64) {
        (self.low, self.high)
    }

    pub fn arity(&self) -> usize {
        self.trie.arity()
    }

    pub fn is_empty(&self) -> bool {
        self.trie.val(self.prefix.len()).is_empty()
    }

    pub fn tuples(&self) -> Vec<Tuple> {
        if self.is_empty() {
            return Vec::new();
        }
        self.trie.tuples()
    }

    /// Values at the slicing level.
    pub fn slice_vals(&self) -> &[i64] {
        self.trie.val(self.prefix.len())
    }

    /// Payload words of the provisioned arrays (levels at and below the
    /// slicing level; the prefix singletons are not counted).
    pub fn payload_words(&self) -> usize {
        let k = self.prefix.len();
        let arity = self.trie.arity();
        let mut words = 0;
        for level in k..arity {
            words += self.trie.val(level).len();
            if level < arity - 1 {
                words += self.trie.idx(level).len();
            }
        }
        words
    }

}

impl TrieBacking for &TrieArraySlice {
    fn arity(&self) -> usize {
        self.trie.arity()
    }
    fn val(&self, level: usize, pos: usize) -> i64 {
        self.trie.val(level)[pos]
    }
    fn idx(&self, level: usize, pos: usize) -> usize {
        self.trie.idx(level)[pos]
    }
    fn val_len(&self, level: usize) -> usize {
        self.trie.val(level).len()
    }
}

/// Smallest position in `val[range]` holding a value >= `v`, counting one
/// block read per binary-search probe.
#[allow(clippy::too_many_arguments)]
fn lower_bound(
    vals: &[i64],
    mut lo: usize,
    mut hi: usize,
    v: i64,
    file: u32,
    array: u32,
    block_size: usize,
    counter: &mut ReadCounter,
) -> usize {
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        counter.read_word(file, array, mid, block_size);
        if vals[mid] >= v {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// Locates the level-k sibling group under `prefix`, or None when some
/// prefix value is absent. Returns the half-open position range.
fn locate_group(
    r: &TrieArray,
    file: u32,
    prefix: &[i64],
    block_size: usize,
    counter: &mut ReadCounter,
) -> Option<(usize, usize)> {
    let mut b = 0;
    let mut e = r.val(0).len();
    for (level, &p) in prefix.iter().enumerate() {
        let pos = lower_bound(r.val(level), b, e, p, file, 2 * level as u32, block_size, counter);
        if pos == e || r.val(level)[pos] != p {
            return None;
        }
        counter.read_word(file, 2 * level as u32 + 1, pos, block_size);
        counter.read_word(file, 2 * level as u32 + 1, pos + 1, block_size);
        b = r.idx(level)[pos];
        e = r.idx(level)[pos + 1];
    }
    Some((b, e))
}

/// Payload words of the slice of `r` under the fixed group positions
/// `[l_pos, h_pos]` at level k. Reads only index boundary words.
fn range_words(
    r: &TrieArray,
    file: u32,
    k: usize,
    l_pos: usize,
    h_pos: usize,
    block_size: usize,
    counter: &mut ReadCounter,
) -> usize {
    let arity = r.arity();
    let mut lo = l_pos;
    let mut hi = h_pos + 1; // exclusive
    let mut words = 0;
    for level in k..arity {
        words += hi - lo;
        if level < arity - 1 {
            words += hi - lo + 1;
            counter.read_word(file, 2 * level as u32 + 1, lo, block_size);
            counter.read_word(file, 2 * level as u32 + 1, hi, block_size);
            let nlo = r.idx(level)[lo];
            let nhi = r.idx(level)[hi];
            lo = nlo;
            hi = nhi;
        }
    }
    words
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeResult {
    /// Largest h such that the slice over `[low, h]` fits the budget;
    /// POS_INF when the whole remainder fits (or nothing is left).
    Fits(i64),
    /// Even the first value at or above `low` overflows the budget on its
    /// own; the offending value is returned so the caller can spill it.
    Spill(i64),
}

/// Probes how far a box can extend: binary search over the level-k sibling
/// group under `prefix` for the widest range starting at `low` whose slice
/// payload fits in `budget_words`. Costs O(arity * log |R|) block reads.
pub fn probe(
    r: &TrieArray,
    file: u32,
    prefix: &[i64],
    low: i64,
    budget_words: usize,
    block_size: usize,
    counter: &mut ReadCounter,
) -> ProbeResult {
    let Some((b, e)) = locate_group(r, file, prefix, block_size, counter) else {
        return ProbeResult::Fits(POS_INF);
    };
    let k = prefix.len();
    let l_pos = lower_bound(r.val(k), b, e, low, file, 2 * k as u32, block_size, counter);
    if l_pos == e {
        return ProbeResult::Fits(POS_INF);
    }
    if range_words(r, file, k, l_pos, l_pos, block_size, counter) > budget_words {
        counter.read_word(file, 2 * k as u32, l_pos, block_size);
        return ProbeResult::Spill(r.val(k)[l_pos]);
    }
    // largest h_pos in [l_pos, e) still within budget
    let mut lo = l_pos;
    let mut hi = e - 1;
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if range_words(r, file, k, l_pos, mid, block_size, counter) <= budget_words {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    if lo == e - 1 {
        ProbeResult::Fits(POS_INF)
    } else {
        counter.read_word(file, 2 * k as u32, lo + 1, block_size);
        ProbeResult::Fits(r.val(k)[lo + 1] - 1)
    }
}

/// Materializes the slice of `r` under `prefix` restricted to level-k
/// values in `[low, high]`, counting the block reads of every copied word.
pub fn provision(
    r: &TrieArray,
    file: u32,
    prefix: &[i64],
    low: i64,
    high: i64,
    block_size: usize,
    counter: &mut ReadCounter,
) -> TrieArraySlice {
    let arity = r.arity();
    let k = prefix.len();
    assert!(k < arity, "prefix must leave at least one free level");

    let group = locate_group(r, file, prefix, block_size, counter);
    let (l_pos, h_excl) = match group {
        Some((b, e)) => {
            let l_pos = lower_bound(r.val(k), b, e, low, file, 2 * k as u32, block_size, counter);
            let h_excl = if high == POS_INF {
                e
            } else {
                lower_bound(r.val(k), l_pos, e, high + 1, file, 2 * k as u32, block_size, counter)
            };
            (l_pos, h_excl)
        }
        None => (0, 0),
    };

    let mut val: Vec<Vec<i64>> = Vec::with_capacity(arity);
    let mut idx: Vec<Vec<usize>> = Vec::with_capacity(arity - 1);
    // copy levels k.. following child pointers, rebasing index arrays
    let mut lo = l_pos;
    let mut hi = h_excl;
    let mut lens = Vec::with_capacity(arity - k);
    for level in k..arity {
        lens.push(hi - lo);
        if hi > lo {
            counter.read_span(file, 2 * level as u32, lo, hi - 1, block_size);
        }
        let vs = r.val(level)[lo..hi].to_vec();
        let is = if level < arity - 1 {
            counter.read_span(file, 2 * level as u32 + 1, lo, hi, block_size);
            let base = r.idx(level)[lo];
            let rebased: Vec<usize> = r.idx(level)[lo..=hi].iter().map(|&i| i - base).collect();
            let next = (r.idx(level)[lo], r.idx(level)[hi]);
            lo = next.0;
            hi = next.1;
            Some(rebased)
        } else {
            None
        };
        val.push(vs);
        if let Some(is) = is {
            idx.push(is);
        }
    }
    // prefix levels become singletons above the provisioned arrays
    for (i, &p) in prefix.iter().enumerate().rev() {
        let child_len = if i + 1 == k { lens[0] } else { 1 };
        val.insert(0, vec![p]);
        idx.insert(0, vec![0, child_len]);
    }

    TrieArraySlice { trie: TrieArray::from_parts(arity, val, idx), prefix: prefix.to_vec(), low, high }
}
