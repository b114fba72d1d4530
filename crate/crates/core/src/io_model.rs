//! The (M, B) external-memory cost model: an LRU buffer pool of
//! floor(M/B) blocks, charged per word access, plus the run statistics
//! reported by the harness.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use crate::error::Error;
use crate::relation::{Tuple, TrieArray};
use crate::trie_iter::TrieBacking;
use crate::Result;

/// A block address: which file, which array within it, which block.
pub type BlockKey = (u32, u32, usize);

/// LRU simulation of a buffer pool holding floor(M/B) blocks of B words.
#[derive(Debug)]
pub struct BlockModel {
    block_size: usize,
    capacity: usize,
    resident: HashMap<BlockKey, u64>,
    tick: u64,
    pub loads: u64,
}

impl BlockModel {
    pub fn new(memory_words: usize, block_size: usize) -> Result<BlockModel> {
        if block_size == 0 {
            return Err(Error::InvalidParameter("block size must be positive".into()));
        }
        let capacity = memory_words / block_size;
        if capacity == 0 {
            return Err(Error::InvalidParameter(format!(
                "memory of {memory_words} words holds no block of {block_size} words"
            )));
        }
        Ok(BlockModel {
            block_size,
            capacity,
            resident: HashMap::new(),
            tick: 0,
            loads: 0,
        })
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Touches the block containing word `word` of the given array.
    /// Returns true on a miss (a block load).
    pub fn access(&mut self, file: u32, array: u32, word: usize) -> bool {
        self.touch_block(file, array, word / self.block_size)
    }

    /// Touches a block directly. Returns true on a miss.
    pub fn touch_block(&mut self, file: u32, array: u32, block: usize) -> bool {
        self.tick += 1;
        let key = (file, array, block);
        if let Some(stamp) = self.resident.get_mut(&key) {
            *stamp = self.tick;
            return false;
        }
        if self.resident.len() == self.capacity {
            let victim = *self
                .resident
                .iter()
                .min_by_key(|(_, &stamp)| stamp)
                .map(|(k, _)| k)
                .unwrap();
            self.resident.remove(&victim);
        }
        self.resident.insert(key, self.tick);
        self.loads += 1;
        true
    }
}

/// Trie backing that routes every value and index word through the buffer
/// pool, modelling an unboxed run over on-disk arrays.
pub struct LruBacking<'a> {
    t: &'a TrieArray,
    file: u32,
    model: Rc<RefCell<BlockModel>>,
}

impl<'a> LruBacking<'a> {
    pub fn new(t: &'a TrieArray, file: u32, model: Rc<RefCell<BlockModel>>) -> LruBacking<'a> {
        LruBacking { t, file, model }
    }
}

impl TrieBacking for LruBacking<'_> {
    fn arity(&self) -> usize {
        self.t.arity()
    }

    fn val(&self, level: usize, pos: usize) -> i64 {
        self.model.borrow_mut().access(self.file, 2 * level as u32, pos);
        self.t.val(level)[pos]
    }

    fn idx(&self, level: usize, pos: usize) -> usize {
        self.model.borrow_mut().access(self.file, 2 * level as u32 + 1, pos);
        self.t.idx(level)[pos]
    }

    fn val_len(&self, level: usize) -> usize {
        self.t.val(level).len()
    }
}

/// Counters reported after a run, one `key=value` line each.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct RunStats {
    pub boxes: u64,
    pub spills: u64,
    pub provisioned_words: u64,
    pub probe_block_reads: u64,
    pub provision_block_reads: u64,
    pub lru_block_loads: u64,
    pub iterator_ops: u64,
    pub output_count: u64,
}

impl fmt::Display for RunStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "boxes={}", self.boxes)?;
        writeln!(f, "spills={}", self.spills)?;
        writeln!(f, "provisioned_words={}", self.provisioned_words)?;
        writeln!(f, "probe_block_reads={}", self.probe_block_reads)?;
        writeln!(f, "provision_block_reads={}", self.provision_block_reads)?;
        writeln!(f, "lru_block_loads={}", self.lru_block_loads)?;
        writeln!(f, "iterator_ops={}", self.iterator_ops)?;
        write!(f, "output_count={}", self.output_count)
    }
}

/// The thrashing graph G_N for memory M and block size B: edges
/// (x, N - B * (x mod T)) for x = 0..N with T = M/B + 1. Scanning the
/// destination column cycles through T+1 distinct blocks while the pool
/// holds only T-1, so an unboxed run reloads a block per edge.
pub fn gen_pathological(n: usize, memory_words: usize, block_size: usize) -> Result<Vec<Tuple>> {
    if block_size == 0 || !memory_words.is_multiple_of(block_size) {
        return Err(Error::InvalidParameter(format!(
            "block size {block_size} must evenly divide memory {memory_words}"
        )));
    }
    if n < memory_words + block_size {
        return Err(Error::InvalidParameter(format!(
            "n = {n} must be at least M + B = {}",
            memory_words + block_size
        )));
    }
    let t = memory_words / block_size + 1;
    let mut edges: Vec<Tuple> = (0..=n as i64)
        .map(|x| vec![x, n as i64 - block_size as i64 * (x % t as i64)])
        .collect();
    edges.sort();
    edges.dedup();
    Ok(edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::build_from_sorted;
    use crate::trie_iter::{IterCounters, TrieCursor, TrieIterator};

    #[test]
    fn lru_hits_and_misses() {
        // M = 2B: two resident blocks
        let mut m = BlockModel::new(8, 4).unwrap();
        assert_eq!(m.capacity(), 2);
        assert!(m.access(0, 0, 0)); // block 0: miss
        assert!(!m.access(0, 0, 3)); // block 0: hit
        assert!(m.access(0, 0, 4)); // block 1: miss
        assert!(m.access(0, 0, 8)); // block 2: miss, evicts block 0
        assert!(m.access(0, 0, 1)); // block 0 again: miss
        assert!(!m.access(0, 0, 9)); // block 2 still resident
        assert_eq!(m.loads, 4);
    }

    #[test]
    fn lru_keys_distinguish_arrays_and_files() {
        let mut m = BlockModel::new(12, 4).unwrap();
        assert!(m.access(0, 0, 0));
        assert!(m.access(0, 1, 0));
        assert!(m.access(1, 0, 0));
        assert!(!m.access(0, 0, 0));
        assert_eq!(m.loads, 3);
    }

    #[test]
    fn eviction_is_least_recently_used() {
        let mut m = BlockModel::new(8, 4).unwrap();
        m.access(0, 0, 0); // block 0
        m.access(0, 0, 4); // block 1
        m.access(0, 0, 0); // refresh block 0
        m.access(0, 0, 8); // block 2 evicts block 1
        assert!(!m.access(0, 0, 0), "block 0 was refreshed, must be resident");
        assert!(m.access(0, 0, 4), "block 1 was the LRU victim");
    }

    #[test]
    fn zero_capacity_rejected() {
        assert!(BlockModel::new(3, 4).is_err());
        assert!(BlockModel::new(8, 0).is_err());
    }

    #[test]
    fn pathological_small_instance() {
        let e = gen_pathological(24, 20, 4).unwrap();
        assert_eq!(e.len(), 25);
        assert_eq!(&e[..7], &[
            vec![0, 24],
            vec![1, 20],
            vec![2, 16],
            vec![3, 12],
            vec![4, 8],
            vec![5, 4],
            vec![6, 24],
        ]);
        assert_eq!(e.last().unwrap(), &vec![24, 24]);
    }

    #[test]
    fn pathological_validation() {
        assert!(gen_pathological(24, 20, 3).is_err());
        assert!(gen_pathological(20, 20, 4).is_err());
    }

    #[test]
    fn pathological_join_lookups_thrash() {
        // simulate the E(x,y), E(y,z) access pattern: for every edge, seek
        // its destination in val_0 of a second cursor over the same file.
        // The landing positions cycle through more blocks than the pool
        // holds, so nearly every lookup misses.
        let n = 24;
        let edges = gen_pathological(n, 20, 4).unwrap();
        let t = build_from_sorted(&edges, 2).unwrap();
        let model = Rc::new(RefCell::new(BlockModel::new(20, 4).unwrap()));
        let counters = IterCounters::new();
        let mut outer =
            TrieCursor::new(LruBacking::new(&t, 0, Rc::clone(&model)), Rc::clone(&counters));
        let mut inner =
            TrieCursor::new(LruBacking::new(&t, 0, Rc::clone(&model)), Rc::clone(&counters));
        outer.open();
        while !outer.at_end() {
            outer.open();
            let y = outer.value();
            outer.close();
            inner.open();
            inner.seek(y);
            assert_eq!(inner.value(), y);
            inner.close();
            outer.next();
        }
        let loads = model.borrow().loads;
        assert!(loads >= (n as u64 + 1), "expected thrashing, got {loads} loads");
    }

    #[test]
    fn stats_format() {
        let s = RunStats { boxes: 2, output_count: 7, ..Default::default() };
        let text = s.to_string();
        assert!(text.starts_with("boxes=2\n"));
        assert!(text.ends_with("output_count=7"));
        assert_eq!(text.lines().count(), 8);
    }
}
