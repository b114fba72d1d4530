//! Leapfrog triejoin: a multiway join driver running one leapfrog join per
//! key-order variable over a pool of trie iterators.

use std::rc::Rc;

use crate::error::Error;
use crate::leapfrog::{IterPool, LeapfrogJoin};
use crate::relation::{Tuple, NEG_INF, POS_INF};
use crate::trie_iter::{IterCounters, TrieIterator};
use crate::Result;

/// One body atom handed to the plan builder: a positioned trie iterator plus
/// the key-order dimension bound by each of its attribute levels.
pub struct PlanAtom<'a> {
    pub iter: Box<dyn TrieIterator + 'a>,
    /// Strictly increasing key-order dims, one per attribute level.
    pub dims: Vec<usize>,
}

/// A ready-to-run join: the iterator pool plus one leapfrog join per
/// variable, wired to the iterators participating at that variable.
pub struct JoinPlan<'a> {
    pub n_vars: usize,
    pub pool: IterPool<'a>,
    levels: Vec<LeapfrogJoin>,
    counters: Rc<IterCounters>,
}

impl<'a> JoinPlan<'a> {
    pub fn new(
        n_vars: usize,
        atoms: Vec<PlanAtom<'a>>,
        counters: Rc<IterCounters>,
    ) -> Result<JoinPlan<'a>> {
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_vars];
        let mut pool: IterPool<'a> = Vec::with_capacity(atoms.len());
        for atom in atoms {
            if atom.dims.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidQuery(format!(
                    "atom dims {:?} not strictly increasing",
                    atom.dims
                )));
            }
            let id = pool.len();
            for &d in &atom.dims {
                if d >= n_vars {
                    return Err(Error::InvalidQuery(format!("dim {d} out of range")));
                }
                members[d].push(id);
            }
            pool.push(atom.iter);
        }
        let mut levels = Vec::with_capacity(n_vars);
        for (d, m) in members.into_iter().enumerate() {
            if m.is_empty() {
                return Err(Error::InvalidQuery(format!("variable {d} not joined by any atom")));
            }
            levels.push(LeapfrogJoin::new(m)?);
        }
        Ok(JoinPlan { n_vars, pool, levels, counters })
    }

    pub fn counters(&self) -> &Rc<IterCounters> {
        &self.counters
    }

    fn open_level(&mut self, depth: usize) {
        for &m in self.levels[depth].members() {
            self.pool[m].open();
        }
        let lfj = &mut self.levels[depth];
        lfj.init(&mut self.pool);
    }

    fn close_level(&mut self, depth: usize) {
        for &m in self.levels[depth].members() {
            self.pool[m].close();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SinkMode {
    Count,
    List,
}

/// Collects join results, projected onto the head dimensions.
#[derive(Debug)]
pub struct ResultSink {
    mode: SinkMode,
    /// Key-order dims to keep, in head order. None keeps the full binding.
    head_dims: Option<Vec<usize>>,
    pub count: u64,
    pub tuples: Vec<Tuple>,
}

impl ResultSink {
    pub fn new(mode: SinkMode, head_dims: Option<Vec<usize>>) -> ResultSink {
        ResultSink { mode, head_dims, count: 0, tuples: Vec::new() }
    }

    pub fn emit(&mut self, binding: &[i64]) {
        self.count += 1;
        if self.mode == SinkMode::List {
            let t = match &self.head_dims {
                Some(dims) => dims.iter().map(|&d| binding[d]).collect(),
                None => binding.to_vec(),
            };
            self.tuples.push(t);
        }
    }

    pub fn mode(&self) -> SinkMode {
        self.mode
    }

    /// Appends another sink's results; used to merge parallel chunks.
    pub fn absorb(&mut self, other: ResultSink) {
        self.count += other.count;
        self.tuples.extend(other.tuples);
    }
}

/// Runs the join to completion, emitting bindings in lexicographic key
/// order. The plan's iterators must all be at the root.
pub fn lftj_run(plan: &mut JoinPlan, sink: &mut ResultSink) {
    if plan.n_vars == 0 {
        return;
    }
    let mut binding = vec![0i64; plan.n_vars];
    descend(plan, 0, &mut binding, sink);
}

fn descend(plan: &mut JoinPlan, depth: usize, binding: &mut [i64], sink: &mut ResultSink) {
    plan.open_level(depth);
    while !plan.levels[depth].at_end() {
        binding[depth] = plan.levels[depth].value(&plan.pool);
        if depth + 1 == plan.n_vars {
            sink.emit(binding);
        } else {
            descend(plan, depth + 1, binding, sink);
        }
        let lfj = &mut plan.levels[depth];
        lfj.next(&mut plan.pool);
    }
    plan.close_level(depth);
}

/// Restricts an iterator's depth-0 sibling group to the inclusive range
/// `[lo, hi]`; deeper levels pass through. Used to split the first
/// variable's domain across parallel workers.
pub struct ClampedCursor<'a> {
    inner: Box<dyn TrieIterator + 'a>,
    lo: i64,
    hi: i64,
}

impl<'a> ClampedCursor<'a> {
    pub fn new(inner: Box<dyn TrieIterator + 'a>, lo: i64, hi: i64) -> ClampedCursor<'a> {
        ClampedCursor { inner, lo, hi }
    }
}

impl TrieIterator for ClampedCursor<'_> {
    fn open(&mut self) {
        self.inner.open();
        if self.inner.depth() == 0
            && self.lo > NEG_INF
            && !self.inner.at_end()
            && self.inner.value() < self.lo
        {
            self.inner.seek(self.lo);
        }
    }

    fn close(&mut self) {
        self.inner.close();
    }

    fn next(&mut self) {
        assert!(!self.at_end(), "TrieIterator contract violation: next() while atEnd");
        self.inner.next();
    }

    fn seek(&mut self, v: i64) {
        assert!(!self.at_end(), "TrieIterator contract violation: seek() while atEnd");
        self.inner.seek(v);
    }

    fn at_end(&self) -> bool {
        self.inner.at_end()
            || (self.inner.depth() == 0 && self.inner.value() > self.hi)
    }

    fn value(&self) -> i64 {
        assert!(!self.at_end(), "TrieIterator contract violation: value() while atEnd");
        self.inner.value()
    }

    fn depth(&self) -> isize {
        self.inner.depth()
    }
}

/// Splits the domain of the first variable into `width` inclusive ranges
/// covering all of it, with boundaries drawn from the given sorted
/// candidate values (typically val_0 of one participating relation).
pub fn partition_first_var(vals: &[i64], width: usize) -> Vec<(i64, i64)> {
    assert!(width >= 1, "width must be positive");
    if width == 1 || vals.len() < width {
        return vec![(NEG_INF, POS_INF)];
    }
    let mut bounds = Vec::with_capacity(width);
    let mut lo = NEG_INF;
    for w in 1..width {
        let cut = vals[w * vals.len() / width];
        if cut <= lo {
            continue;
        }
        bounds.push((lo, cut - 1));
        lo = cut;
    }
    bounds.push((lo, POS_INF));
    bounds
}
