//! A general-purpose worst-case optimal join engine.
//!
//! The engine evaluates full conjunctive queries with Leapfrog Triejoin over
//! columnar trie-encoded relations (`TrieArray`). For data that does not fit
//! in memory it uses a "boxing" execution strategy: the n-dimensional binding
//! space is partitioned into hyper-rectangles whose input slices fit in a
//! configured memory budget, and the join runs once per box. All I/O is
//! modeled through an (M, B) block cost model with counters, including an LRU
//! buffer-pool simulation for unboxed ("vanilla") runs.

pub mod boxer;
pub mod error;
pub mod gen;
pub mod io_model;
pub mod leapfrog;
pub mod naive;
pub mod query;
pub mod relation;
pub mod runner;
pub mod slicer;
pub mod storage;
pub mod trie_iter;
pub mod triejoin;

pub use boxer::{run_boxed, BoxAtom, BoxBounds, BoxerConfig};
pub use error::Error;
pub use io_model::{gen_pathological, BlockModel, LruBacking, RunStats};
pub use query::{parse, CompiledQuery, Query};
pub use relation::{build_from_sorted, ingest_csv, Tuple, TrieArray, NEG_INF, POS_INF};
pub use runner::{run, Mode, RunConfig, RunOutput};
pub use slicer::{probe, provision, ProbeResult, ReadCounter, TrieArraySlice};
pub use trie_iter::{IterCounters, TrieCursor, TrieIterator};
pub use triejoin::{lftj_run, JoinPlan, PlanAtom, ResultSink, SinkMode};

pub type Result<T> = std::result::Result<T, Error>;
