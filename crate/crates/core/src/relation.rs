//! Columnar trie encoding of sorted relations.
//!
//! A `TrieArray` stores an n-ary relation as n value arrays and n-1 index
//! arrays, CSR-style. The children of the node at position `j` of `val[i]`
//! live in `val[i+1]` in the half-open range `[idx[i][j], idx[i][j+1])`.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::Error;
use crate::Result;

/// A single tuple of domain values.
pub type Tuple = Vec<i64>;

/// Sentinel for the unbounded lower end of a range. Excluded from data.
pub const NEG_INF: i64 = i64::MIN;
/// Sentinel for the unbounded upper end of a range. Excluded from data.
pub const POS_INF: i64 = i64::MAX;

/// Columnar trie encoding of a sorted, duplicate-free n-ary relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrieArray {
    arity: usize,
    /// `arity` value arrays; `val[arity-1].len()` equals the tuple count.
    val: Vec<Vec<i64>>,
    /// `arity - 1` index arrays; `idx[i].len() == val[i].len() + 1`.
    idx: Vec<Vec<usize>>,
}

impl TrieArray {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn val(&self, level: usize) -> &[i64] {
        &self.val[level]
    }

    pub fn idx(&self, level: usize) -> &[usize] {
        &self.idx[level]
    }

    /// Number of tuples in the relation.
    pub fn len(&self) -> usize {
        self.val[self.arity - 1].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Total number of 64-bit words held by all value and index arrays.
    pub fn words(&self) -> usize {
        self.val.iter().map(Vec::len).sum::<usize>() + self.idx.iter().map(Vec::len).sum::<usize>()
    }

    pub(crate) fn from_parts(arity: usize, val: Vec<Vec<i64>>, idx: Vec<Vec<usize>>) -> TrieArray {
        TrieArray { arity, val, idx }
    }

    /// Enumerates the represented tuples in lexicographic order.
    pub fn tuples(&self) -> Vec<Tuple> {
        let mut out = Vec::with_capacity(self.len());
        let mut cur = vec![0i64; self.arity];
        self.walk(0, 0, self.val[0].len(), &mut cur, &mut out);
        out
    }

    fn walk(&self, level: usize, begin: usize, end: usize, cur: &mut Tuple, out: &mut Vec<Tuple>) {
        for pos in begin..end {
            cur[level] = self.val[level][pos];
            if level + 1 == self.arity {
                out.push(cur.clone());
            } else {
                let b = self.idx[level][pos];
                let e = self.idx[level][pos + 1];
                self.walk(level + 1, b, e, cur, out);
            }
        }
    }

    /// Checks the structural invariants; used after loading from disk.
    pub fn validate(&self) -> Result<()> {
        if self.arity == 0 || self.val.len() != self.arity || self.idx.len() != self.arity - 1 {
            return Err(Error::InvariantViolation("array count mismatch".into()));
        }
        for i in 0..self.arity - 1 {
            let idx = &self.idx[i];
            if idx.len() != self.val[i].len() + 1 {
                return Err(Error::InvariantViolation(format!(
                    "idx_{i} length {} != |val_{i}| + 1",
                    idx.len()
                )));
            }
            if idx.first() != Some(&0) {
                return Err(Error::InvariantViolation(format!("idx_{i} does not start at 0")));
            }
            if *idx.last().unwrap() != self.val[i + 1].len() {
                return Err(Error::InvariantViolation(format!(
                    "idx_{i} last entry {} != |val_{}| = {}",
                    idx.last().unwrap(),
                    i + 1,
                    self.val[i + 1].len()
                )));
            }
            if idx.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::InvariantViolation(format!("idx_{i} not monotone")));
            }
            // every interior node must have at least one child
            if idx.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvariantViolation(format!("idx_{i} has a childless node")));
            }
        }
        // siblings strictly increasing within each group
        for level in 0..self.arity {
            let groups: Vec<(usize, usize)> = if level == 0 {
                vec![(0, self.val[0].len())]
            } else {
                self.idx[level - 1].windows(2).map(|w| (w[0], w[1])).collect()
            };
            for (b, e) in groups {
                if self.val[level][b..e].windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvariantViolation(format!(
                        "val_{level} siblings not strictly increasing"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn check_tuple(t: &Tuple, arity: usize, position: usize) -> Result<()> {
    if t.len() != arity {
        return Err(Error::ArityMismatch {
            expected: arity,
            got: t.len(),
            position,
        });
    }
    for &v in t {
        if v == NEG_INF || v == POS_INF {
            return Err(Error::SentinelValue { value: v, position });
        }
    }
    Ok(())
}

/// Builds a `TrieArray` from a strictly lexicographically sorted,
/// duplicate-free tuple slice. Two passes: pass 1 sizes the arrays,
/// pass 2 fills them.
pub fn build_from_sorted(tuples: &[Tuple], arity: usize) -> Result<TrieArray> {
    assert!(arity >= 1, "arity must be positive");

    // pass 1: validate order and count nodes per level
    let mut sizes = vec![0usize; arity];
    for (pos, t) in tuples.iter().enumerate() {
        check_tuple(t, arity, pos)?;
        let diff = if pos == 0 {
            0
        } else {
            let prev = &tuples[pos - 1];
            match (0..arity).find(|&l| prev[l] != t[l]) {
                Some(l) if prev[l] < t[l] => l,
                Some(_) => return Err(Error::UnsortedInput { position: pos }),
                None => return Err(Error::DuplicateInput { position: pos }),
            }
        };
        for s in sizes.iter_mut().take(arity).skip(diff) {
            *s += 1;
        }
    }

    // pass 2: fill value and index arrays
    let mut val: Vec<Vec<i64>> = sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
    let mut idx: Vec<Vec<usize>> = sizes[..arity - 1]
        .iter()
        .map(|&s| Vec::with_capacity(s + 1))
        .collect();
    for (pos, t) in tuples.iter().enumerate() {
        let diff = if pos == 0 {
            0
        } else {
            (0..arity)
                .find(|&l| tuples[pos - 1][l] != t[l])
                .expect("duplicates rejected in pass 1")
        };
        for level in diff..arity {
            if level < arity - 1 {
                idx[level].push(val[level + 1].len());
            }
            val[level].push(t[level]);
        }
    }
    for level in 0..arity - 1 {
        idx[level].push(val[level + 1].len());
    }

    Ok(TrieArray { arity, val, idx })
}

/// Reads integer tuples from a CSV file and returns them sorted.
///
/// With `symmetrize_min_max` (arity-2 graphs only) every edge `{a, b}` with
/// `a != b` is emitted as `(min, max)` and self-loops are dropped. With
/// `dedup`, duplicates are removed after sorting.
pub fn ingest_csv(
    path: &Path,
    arity: usize,
    dedup: bool,
    symmetrize_min_max: bool,
) -> Result<Vec<Tuple>> {
    assert!(
        !symmetrize_min_max || arity == 2,
        "symmetrize_min_max requires arity 2"
    );
    let file = File::open(path)?;
    let mut tuples = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut t = Vec::with_capacity(arity);
        for field in line.split(',') {
            let v: i64 = field.trim().parse().map_err(|_| Error::Csv {
                line: lineno + 1,
                msg: format!("non-integer field {:?}", field.trim()),
            })?;
            t.push(v);
        }
        if t.len() != arity {
            return Err(Error::Csv {
                line: lineno + 1,
                msg: format!("expected {arity} fields, got {}", t.len()),
            });
        }
        if symmetrize_min_max {
            if t[0] == t[1] {
                continue;
            }
            let (a, b) = (t[0].min(t[1]), t[0].max(t[1]));
            t = vec![a, b];
        }
        tuples.push(t);
    }
    tuples.sort();
    if dedup {
        tuples.dedup();
    }
    Ok(tuples)
}

/// Builds the alternative index of a relation under an attribute permutation.
///
/// `permutation[i]` names the source column that becomes column `i` of the
/// index. The result enumerates `{pi(t) | t in base}` sorted.
pub fn make_alternative_index(base: &[Tuple], permutation: &[usize]) -> Result<TrieArray> {
    let arity = permutation.len();
    let mut seen = vec![false; arity];
    for &p in permutation {
        if p >= arity || seen[p] {
            return Err(Error::InvalidParameter(format!(
                "permutation {permutation:?} is not a bijection on 0..{arity}"
            )));
        }
        seen[p] = true;
    }
    let mut permuted: Vec<Tuple> = base
        .iter()
        .map(|t| permutation.iter().map(|&p| t[p]).collect())
        .collect();
    permuted.sort();
    permuted.dedup();
    build_from_sorted(&permuted, arity)
}

/// Catalog entry describing a persisted index of a base relation.
#[derive(Debug, Clone)]
pub struct RelationCatalogEntry {
    pub name: String,
    pub arity: usize,
    /// Attribute order of this index relative to the base relation.
    pub permutation: Vec<usize>,
    pub storage_path: std::path::PathBuf,
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn fig2_edges() -> Vec<Tuple> {
        [
            (1, 2),
            (1, 3),
            (1, 6),
            (2, 4),
            (2, 5),
            (3, 6),
            (4, 5),
            (4, 7),
            (5, 7),
            (6, 7),
        ]
        .iter()
        .map(|&(a, b)| vec![a, b])
        .collect()
    }

    #[test]
    fn fig2_layout() {
        let t = build_from_sorted(&fig2_edges(), 2).unwrap();
        assert_eq!(t.val(0), &[1, 2, 3, 4, 5, 6]);
        assert_eq!(t.idx(0), &[0, 3, 5, 6, 8, 9, 10]);
        assert_eq!(t.val(1), &[2, 3, 6, 4, 5, 6, 5, 7, 7, 7]);
        t.validate().unwrap();
    }

    #[test]
    fn empty_relation() {
        let t = build_from_sorted(&[], 2).unwrap();
        assert!(t.is_empty());
        assert_eq!(t.val(0).len(), 0);
        assert_eq!(t.idx(0), &[0]);
        assert_eq!(t.tuples(), Vec::<Tuple>::new());
    }

    #[test]
    fn single_tuple_arity3() {
        let t = build_from_sorted(&[vec![7, 7, 7]], 3).unwrap();
        assert_eq!(t.val(0), &[7]);
        assert_eq!(t.idx(0), &[0, 1]);
        assert_eq!(t.val(1), &[7]);
        assert_eq!(t.idx(1), &[0, 1]);
        assert_eq!(t.val(2), &[7]);
    }

    #[test]
    fn rejects_unsorted_and_duplicates() {
        let err = build_from_sorted(&[vec![2, 1], vec![1, 2]], 2).unwrap_err();
        assert!(matches!(err, Error::UnsortedInput { position: 1 }));
        let err = build_from_sorted(&[vec![1, 2], vec![1, 2]], 2).unwrap_err();
        assert!(matches!(err, Error::DuplicateInput { position: 1 }));
        let err = build_from_sorted(&[vec![1, 2], vec![3]], 2).unwrap_err();
        assert!(matches!(err, Error::ArityMismatch { position: 1, .. }));
    }

    #[test]
    fn enumerate_round_trip() {
        let tuples = fig2_edges();
        let t = build_from_sorted(&tuples, 2).unwrap();
        assert_eq!(t.tuples(), tuples);
    }

    #[test]
    fn alternative_index_examples() {
        let t = make_alternative_index(&[vec![1, 9], vec![2, 8]], &[1, 0]).unwrap();
        assert_eq!(t.tuples(), vec![vec![8, 2], vec![9, 1]]);

        let base = fig2_edges();
        let id = make_alternative_index(&base, &[0, 1]).unwrap();
        assert_eq!(id.tuples(), base);

        let rev = make_alternative_index(&base, &[1, 0]).unwrap();
        let mut expect: Vec<Tuple> = base.iter().map(|t| vec![t[1], t[0]]).collect();
        expect.sort();
        assert_eq!(rev.tuples(), expect);
        assert_eq!(
            rev.tuples(),
            vec![
                vec![2, 1],
                vec![3, 1],
                vec![4, 2],
                vec![5, 2],
                vec![5, 4],
                vec![6, 1],
                vec![6, 3],
                vec![7, 4],
                vec![7, 5],
                vec![7, 6]
            ]
        );
    }

    #[test]
    fn ingest_symmetrize_dedup() {
        use std::io::Write;
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.csv");
        std::fs::File::create(&p)
            .unwrap()
            .write_all(b"2,1\n1,2\n3,3\n")
            .unwrap();
        let tuples = ingest_csv(&p, 2, true, true).unwrap();
        assert_eq!(tuples, vec![vec![1, 2]]);

        let p2 = dir.path().join("p.csv");
        std::fs::File::create(&p2).unwrap().write_all(b"5,4\n").unwrap();
        assert_eq!(ingest_csv(&p2, 2, false, false).unwrap(), vec![vec![5, 4]]);

        let p3 = dir.path().join("bad.csv");
        std::fs::File::create(&p3).unwrap().write_all(b"1,2\nx,3\n").unwrap();
        let err = ingest_csv(&p3, 2, false, false).unwrap_err();
        assert!(matches!(err, Error::Csv { line: 2, .. }));
    }

    #[test]
    fn storage_size_linear() {
        let t = build_from_sorted(&fig2_edges(), 2).unwrap();
        assert!(t.words() <= 2 * t.arity() * t.len() + t.arity());
    }
}
