//! End-to-end query execution: compile the query against the bound
//! relations, build any alternative indexes it needs, and run it boxed,
//! vanilla (through the LRU buffer-pool model), or in parallel.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::rc::Rc;

use crate::boxer::{run_boxed, BoxAtom, BoxBounds, BoxerConfig};
use crate::error::Error;
use crate::io_model::{BlockModel, LruBacking, RunStats};
use crate::query::{CompiledQuery, Query};
use crate::relation::{make_alternative_index, TrieArray};
use crate::trie_iter::{EqualIterator, IterCounters, TrieCursor, TrieIterator};
use crate::triejoin::{
    lftj_run, partition_first_var, ClampedCursor, JoinPlan, PlanAtom, ResultSink, SinkMode,
};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Boxed,
    Vanilla,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub query_text: String,
    pub memory_words: usize,
    pub block_size: usize,
    pub mode: Mode,
    pub sink: SinkMode,
    pub ratio: Option<Vec<u64>>,
    pub constraint_hook: bool,
    /// Worker count for vanilla runs; 1 disables threading.
    pub parallel: usize,
}

impl RunConfig {
    pub fn new(query_text: impl Into<String>) -> RunConfig {
        RunConfig {
            query_text: query_text.into(),
            memory_words: 1 << 20,
            block_size: 64,
            mode: Mode::Vanilla,
            sink: SinkMode::List,
            ratio: None,
            constraint_hook: false,
            parallel: 1,
        }
    }
}

pub struct RunOutput {
    pub stats: RunStats,
    pub sink: ResultSink,
    pub boxes: Vec<BoxBounds>,
}

/// Resolves each atom to its index. Returns, per atom, the shared file id
/// and which trie backs it (0 = the bound base relation, i > 0 = the
/// (i-1)-th alternative index), plus the materialized alternatives.
type ResolvedIndexes = (Vec<Option<(u32, usize)>>, Vec<TrieArray>);

fn resolve_indexes(
    compiled: &CompiledQuery,
    bindings: &BTreeMap<String, TrieArray>,
) -> Result<ResolvedIndexes> {
    // first pass: materialize each distinct (relation, permutation) once
    let mut alternatives: Vec<TrieArray> = Vec::new();
    let mut alt_keys: Vec<(String, Vec<usize>)> = Vec::new();
    for (rel, perm) in compiled.index_requests() {
        let base = bindings.get(&rel).ok_or_else(|| {
            Error::InvalidQuery(format!("unknown relation {rel}"))
        })?;
        alternatives.push(make_alternative_index(&base.tuples(), &perm)?);
        alt_keys.push((rel, perm));
    }
    // second pass: point each atom at its index and assign file ids, one
    // per distinct index
    let mut file_keys: Vec<(String, Vec<usize>)> = Vec::new();
    let mut per_atom = Vec::with_capacity(compiled.atoms.len());
    for atom in &compiled.atoms {
        if atom.builtin_eq {
            per_atom.push(None);
            continue;
        }
        let perm = atom
            .index_perm
            .clone()
            .unwrap_or_else(|| (0..atom.dims.len()).collect());
        let key = (atom.relation.clone(), perm);
        let file = match file_keys.iter().position(|k| *k == key) {
            Some(p) => p,
            None => {
                file_keys.push(key.clone());
                file_keys.len() - 1
            }
        };
        // which trie: an alternative if the atom needed a permutation
        let alt = alt_keys.iter().position(|k| *k == key);
        per_atom.push(Some((file as u32, alt.map(|i| i + 1).unwrap_or(0))));
    }
    Ok((per_atom, alternatives))
}

/// Compiles and executes a query over the bound relations.
pub fn run(config: &RunConfig, bindings: &BTreeMap<String, TrieArray>) -> Result<RunOutput> {
    let query: Query = crate::query::parse(&config.query_text)?;
    let catalog: BTreeMap<String, usize> =
        bindings.iter().map(|(k, v)| (k.clone(), v.arity())).collect();
    let compiled = query.compile(&catalog)?;
    let (per_atom, alternatives) = resolve_indexes(&compiled, bindings)?;
    let trie_of = |atom_ix: usize| -> Option<(&TrieArray, u32)> {
        per_atom[atom_ix].map(|(file, alt)| {
            let t = if alt == 0 {
                &bindings[&compiled.atoms[atom_ix].relation]
            } else {
                &alternatives[alt - 1]
            };
            (t, file)
        })
    };

    let head_dims = Some(compiled.head_dims.clone());
    let mut sink = ResultSink::new(config.sink, head_dims);

    match config.mode {
        Mode::Boxed => {
            if config.parallel > 1 {
                return Err(Error::InvalidParameter(
                    "parallel execution applies to vanilla runs only".into(),
                ));
            }
            let atoms: Vec<BoxAtom> = (0..compiled.atoms.len())
                .map(|i| match trie_of(i) {
                    Some((t, file)) => {
                        BoxAtom { trie: Some(t), file, dims: compiled.atoms[i].dims.clone() }
                    }
                    None => BoxAtom { trie: None, file: 0, dims: compiled.atoms[i].dims.clone() },
                })
                .collect();
            let bconfig = BoxerConfig {
                memory_words: config.memory_words,
                block_size: config.block_size,
                ratio: config.ratio.clone(),
                constraint_hook: config.constraint_hook,
            };
            let (stats, boxes) = run_boxed(compiled.n_vars, &atoms, &bconfig, &mut sink)?;
            Ok(RunOutput { stats, sink, boxes })
        }
        Mode::Vanilla if config.parallel > 1 => {
            run_parallel(config, &compiled, &trie_of, sink)
        }
        Mode::Vanilla => {
            let model = Rc::new(RefCell::new(BlockModel::new(
                config.memory_words,
                config.block_size,
            )?));
            let counters = IterCounters::new();
            let mut plan_atoms = Vec::with_capacity(compiled.atoms.len());
            for i in 0..compiled.atoms.len() {
                let iter: Box<dyn TrieIterator> = match trie_of(i) {
                    Some((t, file)) => Box::new(TrieCursor::new(
                        LruBacking::new(t, file, Rc::clone(&model)),
                        Rc::clone(&counters),
                    )),
                    None => Box::new(EqualIterator::new(Rc::clone(&counters))),
                };
                plan_atoms.push(PlanAtom { iter, dims: compiled.atoms[i].dims.clone() });
            }
            let mut plan = JoinPlan::new(compiled.n_vars, plan_atoms, Rc::clone(&counters))?;
            lftj_run(&mut plan, &mut sink);
            drop(plan);
            let stats = RunStats {
                lru_block_loads: model.borrow().loads,
                iterator_ops: counters.ops.get(),
                output_count: sink.count,
                ..Default::default()
            };
            Ok(RunOutput { stats, sink, boxes: Vec::new() })
        }
    }
}

fn run_parallel<'a>(
    config: &RunConfig,
    compiled: &CompiledQuery,
    trie_of: &dyn Fn(usize) -> Option<(&'a TrieArray, u32)>,
    mut sink: ResultSink,
) -> Result<RunOutput> {
    // split the first variable's domain on the values of one atom that
    // binds it; every result value must occur there
    let splitter = (0..compiled.atoms.len())
        .find(|&i| compiled.atoms[i].dims[0] == 0 && !compiled.atoms[i].builtin_eq)
        .ok_or_else(|| Error::InvalidQuery("no atom binds the first variable".into()))?;
    let (split_trie, _) = trie_of(splitter).unwrap();
    let bounds = partition_first_var(split_trie.val(0), config.parallel);

    let atom_tries: Vec<Option<&TrieArray>> =
        (0..compiled.atoms.len()).map(|i| trie_of(i).map(|(t, _)| t)).collect();
    let n_vars = compiled.n_vars;
    let dims: Vec<Vec<usize>> = compiled.atoms.iter().map(|a| a.dims.clone()).collect();

    let chunk_results: Vec<Result<(ResultSink, u64)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = bounds
            .iter()
            .map(|&(lo, hi)| {
                let atom_tries = &atom_tries;
                let dims = &dims;
                let mode = sink.mode();
                scope.spawn(move || -> Result<(ResultSink, u64)> {
                    let counters = IterCounters::new();
                    let mut plan_atoms = Vec::with_capacity(dims.len());
                    for (i, d) in dims.iter().enumerate() {
                        let iter: Box<dyn TrieIterator> = match atom_tries[i] {
                            Some(t) => {
                                let cursor = TrieCursor::new(t, Rc::clone(&counters));
                                if d[0] == 0 {
                                    Box::new(ClampedCursor::new(Box::new(cursor), lo, hi))
                                } else {
                                    Box::new(cursor)
                                }
                            }
                            None => Box::new(EqualIterator::new(Rc::clone(&counters))),
                        };
                        plan_atoms.push(PlanAtom { iter, dims: d.clone() });
                    }
                    let mut chunk_sink = ResultSink::new(mode, None);
                    let mut plan = JoinPlan::new(n_vars, plan_atoms, Rc::clone(&counters))?;
                    lftj_run(&mut plan, &mut chunk_sink);
                    drop(plan);
                    Ok((chunk_sink, counters.ops.get()))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });

    let mut ops = 0;
    for r in chunk_results {
        let (chunk, chunk_ops) = r?;
        ops += chunk_ops;
        // chunk sinks hold full bindings; emitting re-projects them
        for t in &chunk.tuples {
            sink.emit(t);
        }
        if sink.mode() == SinkMode::Count {
            sink.count += chunk.count;
        }
    }
    let stats = RunStats {
        iterator_ops: ops,
        output_count: sink.count,
        ..Default::default()
    };
    Ok(RunOutput { stats, sink, boxes: Vec::new() })
}
