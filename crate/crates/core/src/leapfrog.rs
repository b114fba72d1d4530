//! Leapfrog join: sorted intersection of n linear iterators.
//!
//! The join keeps its iterators circularly sorted by current value and
//! repeatedly seeks the smallest one to the largest current value until all
//! agree. Iterators live in a shared pool (they are also used by joins at
//! other trie levels); a join instance only stores pool indices.

use crate::error::Error;
use crate::trie_iter::TrieIterator;
use crate::Result;

pub type IterPool<'a> = Vec<Box<dyn TrieIterator + 'a>>;

/// State of one leapfrog join over the iterators named by `members`.
#[derive(Debug, Clone)]
pub struct LeapfrogJoin {
    /// Pool indices, kept sorted increasingly by current value (mod rotation).
    members: Vec<usize>,
    /// Position within `members` of the iterator at the smallest value.
    i: usize,
    at_end: bool,
}

impl LeapfrogJoin {
    pub fn new(members: Vec<usize>) -> Result<LeapfrogJoin> {
        if members.is_empty() {
            return Err(Error::InvalidQuery(
                "leapfrog join requires at least one iterator".into(),
            ));
        }
        Ok(LeapfrogJoin {
            members,
            i: 0,
            at_end: false,
        })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    /// lfj-init: sort members by value and search for the first match.
    /// Every member iterator must be freshly opened at its group.
    pub fn init(&mut self, pool: &mut [Box<dyn TrieIterator + '_>]) {
        if self.members.iter().any(|&m| pool[m].at_end()) {
            self.at_end = true;
            return;
        }
        // stable sort: ties keep input order
        self.members.sort_by_key(|&m| pool[m].value());
        self.i = 0;
        self.at_end = false;
        self.search(pool);
    }

    fn search(&mut self, pool: &mut [Box<dyn TrieIterator + '_>]) {
        let n = self.members.len();
        loop {
            let prev = self.members[(self.i + n - 1) % n];
            if pool[prev].at_end() {
                self.at_end = true;
                return;
            }
            let max_value = pool[prev].value();
            let cur = self.members[self.i];
            let min_value = pool[cur].value();
            if min_value == max_value {
                return; // found a value in the intersection
            }
            pool[cur].seek(max_value);
            self.i = (self.i + 1) % n;
        }
    }

    pub fn next(&mut self, pool: &mut [Box<dyn TrieIterator + '_>]) {
        assert!(!self.at_end, "LeapfrogJoin contract violation: next() while atEnd");
        let cur = self.members[self.i];
        pool[cur].next();
        self.i = (self.i + 1) % self.members.len();
        self.search(pool);
    }

    pub fn seek(&mut self, pool: &mut [Box<dyn TrieIterator + '_>], v: i64) {
        assert!(!self.at_end, "LeapfrogJoin contract violation: seek() while atEnd");
        let cur = self.members[self.i];
        pool[cur].seek(v);
        self.i = (self.i + 1) % self.members.len();
        self.search(pool);
    }

    pub fn value(&self, pool: &[Box<dyn TrieIterator + '_>]) -> i64 {
        assert!(!self.at_end, "LeapfrogJoin contract violation: value() while atEnd");
        pool[self.members[self.i]].value()
    }

    pub fn at_end(&self) -> bool {
        self.at_end
    }
}
