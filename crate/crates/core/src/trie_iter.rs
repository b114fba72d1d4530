//! TrieIterator navigation over trie-encoded relations.
//!
//! An iterator is a pointer into the trie of a relation: `open`/`close` move
//! vertically, and the linear-iterator methods `next`/`seek`/`at_end`/`value`
//! move within one sibling group. `seek` gallops with an exponentially
//! increasing probe sequence before binary searching, so that a run of m
//! ascending seeks over an N-element group costs O(m (1 + log(N/m)))
//! comparisons in total.
//!
//! Illegal call sequences are programming errors and panic; data errors are
//! reported as `Error` values elsewhere.

use std::cell::Cell;
use std::rc::Rc;

use crate::relation::{TrieArray, NEG_INF};

/// Shared per-plan counters for amortization and CPU-trend checks.
#[derive(Debug, Default)]
pub struct IterCounters {
    /// Element comparisons performed by `seek`.
    pub comparisons: Cell<u64>,
    /// open/next/seek calls.
    pub ops: Cell<u64>,
}

impl IterCounters {
    pub fn new() -> Rc<IterCounters> {
        Rc::new(IterCounters::default())
    }
}

/// Read access to the arrays behind a trie, independent of where they live
/// (plain in-memory TrieArray, a slice with index offsets, or an on-disk
/// array charged through the block model).
pub trait TrieBacking {
    fn arity(&self) -> usize;
    fn val(&self, level: usize, pos: usize) -> i64;
    /// Entry `pos` of the level-`level` index array, already offset-corrected.
    fn idx(&self, level: usize, pos: usize) -> usize;
    fn val_len(&self, level: usize) -> usize;
}

impl TrieBacking for &TrieArray {
    fn arity(&self) -> usize {
        TrieArray::arity(self)
    }
    fn val(&self, level: usize, pos: usize) -> i64 {
        TrieArray::val(self, level)[pos]
    }
    fn idx(&self, level: usize, pos: usize) -> usize {
        TrieArray::idx(self, level)[pos]
    }
    fn val_len(&self, level: usize) -> usize {
        TrieArray::val(self, level).len()
    }
}

/// Object-safe trie navigation interface used by the join.
pub trait TrieIterator {
    fn open(&mut self);
    fn close(&mut self);
    fn next(&mut self);
    fn seek(&mut self, v: i64);
    fn at_end(&self) -> bool;
    fn value(&self) -> i64;
    /// Current depth; -1 is the root.
    fn depth(&self) -> isize;
}

/// Cursor over any `TrieBacking`.
pub struct TrieCursor<B: TrieBacking> {
    backing: B,
    depth: isize,
    pos: Vec<usize>,
    end: Vec<usize>,
    counters: Rc<IterCounters>,
}

impl<B: TrieBacking> TrieCursor<B> {
    pub fn new(backing: B, counters: Rc<IterCounters>) -> TrieCursor<B> {
        let arity = backing.arity();
        TrieCursor {
            backing,
            depth: -1,
            pos: vec![0; arity],
            end: vec![0; arity],
            counters,
        }
    }

    fn d(&self) -> usize {
        debug_assert!(self.depth >= 0);
        self.depth as usize
    }

    fn cmp(&self) {
        self.counters.comparisons.set(self.counters.comparisons.get() + 1);
    }

    fn op(&self) {
        self.counters.ops.set(self.counters.ops.get() + 1);
    }
}

impl<B: TrieBacking> TrieIterator for TrieCursor<B> {
    fn open(&mut self) {
        self.op();
        let (begin, end) = if self.depth < 0 {
            (0, self.backing.val_len(0))
        } else {
            assert!(!self.at_end(), "TrieIterator contract violation: open() while atEnd");
            let d = self.d();
            assert!(
                d + 1 < self.backing.arity(),
                "TrieIterator contract violation: open() at leaf level"
            );
            (self.backing.idx(d, self.pos[d]), self.backing.idx(d, self.pos[d] + 1))
        };
        self.depth += 1;
        let d = self.d();
        self.pos[d] = begin;
        self.end[d] = end;
    }

    fn close(&mut self) {
        assert!(self.depth >= 0, "TrieIterator contract violation: close() at root");
        self.depth -= 1;
    }

    fn next(&mut self) {
        self.op();
        assert!(!self.at_end(), "TrieIterator contract violation: next() while atEnd");
        let d = self.d();
        self.pos[d] += 1;
    }

    fn seek(&mut self, v: i64) {
        self.op();
        assert!(!self.at_end(), "TrieIterator contract violation: seek() while atEnd");
        let d = self.d();
        self.cmp();
        let cur = self.backing.val(d, self.pos[d]);
        assert!(
            v >= cur,
            "TrieIterator contract violation: seek({v}) below current value {cur}"
        );
        if v == cur {
            return;
        }
        // gallop: probe offsets 1, 4, 16, ... from the current position
        let begin = self.pos[d];
        let end = self.end[d];
        let mut step = 1usize;
        let mut lo = begin + 1; // val[begin] < v
        let mut hi = end;
        loop {
            let probe = begin.saturating_add(step);
            if probe >= end {
                break;
            }
            self.cmp();
            if self.backing.val(d, probe) >= v {
                hi = probe + 1;
                break;
            }
            lo = probe + 1;
            step *= 4;
        }
        // binary search: smallest position in [lo, hi) with val >= v
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            self.cmp();
            if self.backing.val(d, mid) >= v {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        self.pos[d] = lo;
    }

    fn at_end(&self) -> bool {
        if self.depth < 0 {
            return false;
        }
        let d = self.d();
        self.pos[d] == self.end[d]
    }

    fn value(&self) -> i64 {
        assert!(self.depth >= 0, "TrieIterator contract violation: value() at root");
        assert!(!self.at_end(), "TrieIterator contract violation: value() while atEnd");
        let d = self.d();
        self.backing.val(d, self.pos[d])
    }

    fn depth(&self) -> isize {
        self.depth
    }
}

/// The builtin infinite `Equal` predicate, behaving as the binary relation
/// `{(x, x)}`. At depth 0 it exposes every value; at depth 1 it exposes
/// exactly the singleton equal to the depth-0 binding.
pub struct EqualIterator {
    depth: isize,
    bound: i64,
    leaf_at_end: bool,
    counters: Rc<IterCounters>,
}

impl EqualIterator {
    pub fn new(counters: Rc<IterCounters>) -> EqualIterator {
        EqualIterator {
            depth: -1,
            bound: NEG_INF + 1,
            leaf_at_end: false,
            counters,
        }
    }

    fn op(&self) {
        self.counters.ops.set(self.counters.ops.get() + 1);
    }
}

impl TrieIterator for EqualIterator {
    fn open(&mut self) {
        self.op();
        assert!(self.depth < 1, "TrieIterator contract violation: open() at leaf level");
        assert!(!self.at_end(), "TrieIterator contract violation: open() while atEnd");
        self.depth += 1;
        if self.depth == 0 {
            self.bound = NEG_INF + 1;
        } else {
            self.leaf_at_end = false;
        }
    }

    fn close(&mut self) {
        assert!(self.depth >= 0, "TrieIterator contract violation: close() at root");
        self.depth -= 1;
        self.leaf_at_end = false;
    }

    fn next(&mut self) {
        self.op();
        assert!(!self.at_end(), "TrieIterator contract violation: next() while atEnd");
        match self.depth {
            0 => self.bound += 1,
            1 => self.leaf_at_end = true,
            _ => unreachable!(),
        }
    }

    fn seek(&mut self, v: i64) {
        self.op();
        assert!(!self.at_end(), "TrieIterator contract violation: seek() while atEnd");
        assert!(
            v >= self.value(),
            "TrieIterator contract violation: seek() below current value"
        );
        match self.depth {
            0 => self.bound = v,
            1 => {
                if v > self.bound {
                    self.leaf_at_end = true;
                }
            }
            _ => unreachable!(),
        }
    }

    fn at_end(&self) -> bool {
        self.depth == 1 && self.leaf_at_end
    }

    fn value(&self) -> i64 {
        assert!(self.depth >= 0, "TrieIterator contract violation: value() at root");
        assert!(!self.at_end(), "TrieIterator contract violation: value() while atEnd");
        self.bound
    }

    fn depth(&self) -> isize {
        self.depth
    }
}
