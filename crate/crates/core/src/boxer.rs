//! Out-of-core execution by boxing: the variable space is cut into boxes
//! whose relation slices fit in memory together, and the join runs box by
//! box over provisioned slices instead of faulting blocks on demand.
//!
//! Each dimension owning atoms gets a share of the memory budget. Boxes
//! along a dimension are found by probing, widest first. When a single
//! value's subtree overflows its share, the value is spilled: the box
//! closes at it and the subtree is re-boxed along the atom's next
//! dimension, carrying the spiller's budget with it. Unused budget is
//! donated to the next dimension.

use std::collections::HashMap;
use std::rc::Rc;

use crate::error::Error;
use crate::io_model::RunStats;
use crate::relation::{TrieArray, NEG_INF, POS_INF};
use crate::slicer::{probe, provision, ProbeResult, ReadCounter, TrieArraySlice};
use crate::trie_iter::{EqualIterator, IterCounters, TrieBacking, TrieCursor};
use crate::triejoin::{lftj_run, JoinPlan, PlanAtom, ResultSink};
use crate::Result;

/// One body atom as seen by the boxer.
pub struct BoxAtom<'a> {
    /// Backing index, already permuted to match the key order; None for
    /// the builtin Eq predicate, which needs no memory.
    pub trie: Option<&'a TrieArray>,
    /// File id for block accounting; atoms over the same index share it.
    pub file: u32,
    /// Strictly increasing key-order dims, one per attribute level.
    pub dims: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct BoxerConfig {
    pub memory_words: usize,
    pub block_size: usize,
    /// Budget weights for the atom-owning dims in key order; even when None.
    pub ratio: Option<Vec<u64>>,
    /// Assume variables are monotonically increasing across dims (as in
    /// triangle listing over (min, max) edges) and skip boxes below the
    /// previous dimension's box.
    pub constraint_hook: bool,
}

/// The per-dimension value ranges of one executed box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoxBounds {
    pub dims: Vec<(i64, i64)>,
}

/// Splits the memory budget over the dims owning at least one atom,
/// evenly or by the given weights. Other dims get zero.
pub fn assign_budgets(
    owner: &[bool],
    memory_words: usize,
    ratio: Option<&[u64]>,
) -> Result<Vec<usize>> {
    let owners: Vec<usize> = (0..owner.len()).filter(|&d| owner[d]).collect();
    if owners.is_empty() {
        return Err(Error::InvalidQuery("no atom owns any dimension".into()));
    }
    let mut budgets = vec![0usize; owner.len()];
    match ratio {
        None => {
            let share = memory_words / owners.len();
            for &d in &owners {
                budgets[d] = share;
            }
        }
        Some(w) => {
            if w.len() != owners.len() || w.contains(&0) {
                return Err(Error::InvalidParameter(format!(
                    "ratio needs {} positive weights",
                    owners.len()
                )));
            }
            let total: u64 = w.iter().sum();
            for (&d, &wd) in owners.iter().zip(w) {
                budgets[d] = (memory_words as u64 * wd / total) as usize;
            }
        }
    }
    Ok(budgets)
}

#[derive(Debug, Clone)]
struct SpillEntry {
    atom: usize,
    prefix: Vec<i64>,
    budget: usize,
}

struct Group<'a> {
    trie: &'a TrieArray,
    file: u32,
    prefix: Vec<i64>,
    atoms: Vec<usize>,
    budget: usize,
    from_pred: bool,
}

struct Ctx<'a, 'b> {
    atoms: &'b [BoxAtom<'a>],
    n_vars: usize,
    preds: Vec<Vec<usize>>,
    budgets: Vec<usize>,
    spills: Vec<Vec<SpillEntry>>,
    slices: Vec<Option<Rc<TrieArraySlice>>>,
    bounds: Vec<(i64, i64)>,
    probe_reads: ReadCounter,
    prov_reads: ReadCounter,
    counters: Rc<IterCounters>,
    stats: RunStats,
    boxes: Vec<BoxBounds>,
    block_size: usize,
    hook: bool,
}

/// Backing over a shared slice, so several iterators can walk one
/// provisioned copy.
struct SliceRef(Rc<TrieArraySlice>);

impl TrieBacking for SliceRef {
    fn arity(&self) -> usize {
        self.0.arity()
    }
    fn val(&self, level: usize, pos: usize) -> i64 {
        (&*self.0).val(level, pos)
    }
    fn idx(&self, level: usize, pos: usize) -> usize {
        (&*self.0).idx(level, pos)
    }
    fn val_len(&self, level: usize) -> usize {
        (&*self.0).val_len(level)
    }
}

/// Runs the query boxed: never holds more than `memory_words` words of
/// slice payload at once. Returns the run counters and the executed boxes.
/// Results are emitted per box, so the overall output is grouped by box
/// rather than globally sorted.
pub fn run_boxed<'a>(
    n_vars: usize,
    atoms: &[BoxAtom<'a>],
    config: &BoxerConfig,
    sink: &mut ResultSink,
) -> Result<(RunStats, Vec<BoxBounds>)> {
    if config.block_size == 0 {
        return Err(Error::InvalidParameter("block size must be positive".into()));
    }
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n_vars];
    let mut owner = vec![false; n_vars];
    for (i, atom) in atoms.iter().enumerate() {
        if atom.trie.is_none() {
            continue;
        }
        let d = *atom.dims.first().ok_or_else(|| {
            Error::InvalidQuery("atom with no dimensions".into())
        })?;
        preds[d].push(i);
        owner[d] = true;
    }
    let budgets = assign_budgets(&owner, config.memory_words, config.ratio.as_deref())?;
    let mut ctx = Ctx {
        atoms,
        n_vars,
        preds,
        budgets,
        spills: vec![Vec::new(); n_vars],
        slices: vec![None; atoms.len()],
        bounds: vec![(NEG_INF, POS_INF); n_vars],
        probe_reads: ReadCounter::new(),
        prov_reads: ReadCounter::new(),
        counters: IterCounters::new(),
        stats: RunStats::default(),
        boxes: Vec::new(),
        block_size: config.block_size,
        hook: config.constraint_hook,
    };
    box_up(&mut ctx, sink, 0, 0)?;
    ctx.stats.probe_block_reads = ctx.probe_reads.reads;
    ctx.stats.provision_block_reads = ctx.prov_reads.reads;
    ctx.stats.iterator_ops = ctx.counters.ops.get();
    ctx.stats.output_count = sink.count;
    Ok((ctx.stats, ctx.boxes))
}

fn box_up(ctx: &mut Ctx, sink: &mut ResultSink, dim: usize, leftover: usize) -> Result<()> {
    if dim == ctx.n_vars {
        return run_leaf(ctx, sink);
    }
    ctx.bounds[dim] = (NEG_INF, POS_INF);
    let entries = ctx.spills[dim].clone();
    if ctx.preds[dim].is_empty() && entries.is_empty() {
        return box_up(ctx, sink, dim + 1, leftover + ctx.budgets[dim]);
    }
    let avail = ctx.budgets[dim] + leftover;

    // groups of atoms sharing one slice: same index file, same prefix
    let mut groups: Vec<Group> = Vec::new();
    let mut by_key: HashMap<(u32, Vec<i64>), usize> = HashMap::new();
    let mut pred_groups = 0usize;
    for &a in &ctx.preds[dim] {
        let atom = &ctx.atoms[a];
        let g = *by_key.entry((atom.file, Vec::new())).or_insert_with(|| {
            pred_groups += 1;
            groups.push(Group {
                trie: atom.trie.unwrap(),
                file: atom.file,
                prefix: Vec::new(),
                atoms: Vec::new(),
                budget: 0,
                from_pred: true,
            });
            groups.len() - 1
        });
        groups[g].atoms.push(a);
    }
    if let Some(share) = avail.checked_div(pred_groups) {
        if share == 0 {
            return Err(Error::InfeasibleBudget(format!(
                "dimension {dim} has no words for its {pred_groups} atom groups"
            )));
        }
        for g in groups.iter_mut() {
            g.budget = share;
        }
    }
    for e in &entries {
        let atom = &ctx.atoms[e.atom];
        let g = *by_key.entry((atom.file, e.prefix.clone())).or_insert_with(|| {
            groups.push(Group {
                trie: atom.trie.unwrap(),
                file: atom.file,
                prefix: e.prefix.clone(),
                atoms: Vec::new(),
                budget: 0,
                from_pred: false,
            });
            groups.len() - 1
        });
        groups[g].atoms.push(e.atom);
        groups[g].budget += e.budget;
    }

    let mut low = if ctx.hook && dim > 0 { ctx.bounds[dim - 1].0 } else { NEG_INF };
    loop {
        let results: Vec<ProbeResult> = groups
            .iter()
            .map(|g| {
                probe(
                    g.trie,
                    g.file,
                    &g.prefix,
                    low,
                    g.budget,
                    ctx.block_size,
                    &mut ctx.probe_reads,
                )
            })
            .collect();
        let high = results
            .iter()
            .map(|r| match *r {
                ProbeResult::Fits(h) => h,
                ProbeResult::Spill(v) => v,
            })
            .min()
            .unwrap();

        let mut saved: Vec<(usize, Option<Rc<TrieArraySlice>>)> = Vec::new();
        let mut pushed: Vec<usize> = Vec::new();
        let mut donation = avail;
        let mut empty_box = false;
        for (g, res) in groups.iter().zip(&results) {
            if !g.from_pred {
                donation += g.budget;
            }
            if let ProbeResult::Spill(v) = *res {
                if v == high {
                    // this value's subtree overflows: defer it to the
                    // atom's next dimension with the group's budget
                    let per_atom = g.budget / g.atoms.len();
                    for &a in &g.atoms {
                        let k = g.prefix.len();
                        if k + 1 >= ctx.atoms[a].dims.len() {
                            return Err(Error::InfeasibleBudget(format!(
                                "value {v} overflows its budget at the last level"
                            )));
                        }
                        let target = ctx.atoms[a].dims[k + 1];
                        let mut prefix = g.prefix.clone();
                        prefix.push(v);
                        ctx.spills[target].push(SpillEntry { atom: a, prefix, budget: per_atom });
                        pushed.push(target);
                        ctx.stats.spills += 1;
                        saved.push((a, ctx.slices[a].take()));
                    }
                    donation = donation.saturating_sub(g.budget);
                    continue;
                }
            }
            let s = provision(
                g.trie,
                g.file,
                &g.prefix,
                low,
                high,
                ctx.block_size,
                &mut ctx.prov_reads,
            );
            let words = s.payload_words();
            ctx.stats.provisioned_words += words as u64;
            donation = donation.saturating_sub(words);
            if s.is_empty() {
                empty_box = true;
            }
            let rc = Rc::new(s);
            for &a in &g.atoms {
                saved.push((a, ctx.slices[a].replace(Rc::clone(&rc))));
            }
        }
        ctx.bounds[dim] = (low, high);

        if !empty_box {
            box_up(ctx, sink, dim + 1, donation)?;
        }

        for (a, old) in saved.into_iter().rev() {
            ctx.slices[a] = old;
        }
        for target in pushed.into_iter().rev() {
            ctx.spills[target].pop();
        }

        if high == POS_INF {
            return Ok(());
        }
        low = high + 1;
    }
}

fn run_leaf(ctx: &mut Ctx, sink: &mut ResultSink) -> Result<()> {
    let mut plan_atoms = Vec::with_capacity(ctx.atoms.len());
    for (a, atom) in ctx.atoms.iter().enumerate() {
        let iter: Box<dyn crate::trie_iter::TrieIterator> = match atom.trie {
            None => Box::new(EqualIterator::new(Rc::clone(&ctx.counters))),
            Some(_) => {
                let slice = ctx.slices[a].as_ref().expect("atom not provisioned").clone();
                Box::new(TrieCursor::new(SliceRef(slice), Rc::clone(&ctx.counters)))
            }
        };
        plan_atoms.push(PlanAtom { iter, dims: atom.dims.clone() });
    }
    let mut plan = JoinPlan::new(ctx.n_vars, plan_atoms, Rc::clone(&ctx.counters))?;
    lftj_run(&mut plan, sink);
    drop(plan);
    ctx.stats.boxes += 1;
    ctx.boxes.push(BoxBounds { dims: ctx.bounds.clone() });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::{build_from_sorted, Tuple};
    use crate::triejoin::SinkMode;

    fn fig2() -> TrieArray {
        let tuples: Vec<Tuple> = [
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
        .collect();
        build_from_sorted(&tuples, 2).unwrap()
    }

    fn triangle_atoms(e: &TrieArray) -> Vec<BoxAtom<'_>> {
        vec![
            BoxAtom { trie: Some(e), file: 0, dims: vec![0, 1] },
            BoxAtom { trie: Some(e), file: 0, dims: vec![0, 2] },
            BoxAtom { trie: Some(e), file: 0, dims: vec![1, 2] },
        ]
    }

    fn run_triangles(e: &TrieArray, config: &BoxerConfig) -> (Vec<Tuple>, RunStats, Vec<BoxBounds>) {
        let atoms = triangle_atoms(e);
        let mut sink = ResultSink::new(SinkMode::List, None);
        let (stats, boxes) = run_boxed(3, &atoms, config, &mut sink).unwrap();
        let mut out = sink.tuples;
        out.sort();
        (out, stats, boxes)
    }

    #[test]
    fn budget_split_examples() {
        // triangle: x and y own atoms, z owns none
        let owner = [true, true, false];
        assert_eq!(assign_budgets(&owner, 100, None).unwrap(), vec![50, 50, 0]);
        assert_eq!(
            assign_budgets(&owner, 100, Some(&[4, 1])).unwrap(),
            vec![80, 20, 0]
        );
        assert!(assign_budgets(&owner, 100, Some(&[1])).is_err());
        assert!(assign_budgets(&[false, false], 100, None).is_err());
    }

    #[test]
    fn large_budget_single_box() {
        let e = fig2();
        let config = BoxerConfig {
            memory_words: 10_000,
            block_size: 4,
            ratio: None,
            constraint_hook: false,
        };
        let (out, stats, boxes) = run_triangles(&e, &config);
        assert_eq!(out, vec![vec![1, 3, 6], vec![2, 4, 5], vec![4, 5, 7]]);
        assert_eq!(stats.boxes, 1);
        assert_eq!(stats.spills, 0);
        assert_eq!(boxes.len(), 1);
        assert_eq!(boxes[0].dims[0], (NEG_INF, POS_INF));
    }

    #[test]
    fn fig2_first_dim_intervals() {
        // 22 words split evenly: the x dimension gets an 11-word budget,
        // carving val_0 into [-inf, 2], [3, 5], [6, +inf]
        let e = fig2();
        let config = BoxerConfig {
            memory_words: 22,
            block_size: 4,
            ratio: None,
            constraint_hook: false,
        };
        let (out, stats, boxes) = run_triangles(&e, &config);
        assert_eq!(out, vec![vec![1, 3, 6], vec![2, 4, 5], vec![4, 5, 7]]);
        assert_eq!(stats.spills, 0);
        let mut x_ranges: Vec<(i64, i64)> = boxes.iter().map(|b| b.dims[0]).collect();
        x_ranges.dedup();
        assert_eq!(x_ranges, vec![(NEG_INF, 2), (3, 5), (6, POS_INF)]);
    }

    #[test]
    fn unary_intersection_boxes() {
        // Q(x) <- R(x), S(x) with a budget of a few values per box
        let r: Vec<Tuple> = (0..60).step_by(2).map(|v| vec![v]).collect();
        let s: Vec<Tuple> = (0..60).step_by(3).map(|v| vec![v]).collect();
        let rt = build_from_sorted(&r, 1).unwrap();
        let st = build_from_sorted(&s, 1).unwrap();
        let atoms = vec![
            BoxAtom { trie: Some(&rt), file: 0, dims: vec![0] },
            BoxAtom { trie: Some(&st), file: 1, dims: vec![0] },
        ];
        let config = BoxerConfig {
            memory_words: 16,
            block_size: 4,
            ratio: None,
            constraint_hook: false,
        };
        let mut sink = ResultSink::new(SinkMode::List, None);
        let (stats, boxes) = run_boxed(1, &atoms, &config, &mut sink).unwrap();
        let expect: Vec<Tuple> = (0..60).step_by(6).map(|v| vec![v]).collect();
        assert_eq!(sink.tuples, expect);
        assert!(stats.boxes > 1, "expected several boxes, got {}", stats.boxes);
        // boxes partition the axis
        assert_eq!(boxes[0].dims[0].0, NEG_INF);
        assert_eq!(boxes.last().unwrap().dims[0].1, POS_INF);
        for w in boxes.windows(2) {
            assert_eq!(w[0].dims[0].1 + 1, w[1].dims[0].0);
        }
    }

    #[test]
    fn hub_spill_path() {
        // a hub whose adjacency list alone overflows the dim-0 share
        let mut edges: Vec<Tuple> = (1..=40).map(|j| vec![0, j]).collect();
        edges.push(vec![1, 2]);
        edges.push(vec![2, 3]);
        edges.sort();
        let e = build_from_sorted(&edges, 2).unwrap();
        let config = BoxerConfig {
            memory_words: 60,
            block_size: 4,
            ratio: None,
            constraint_hook: false,
        };
        let (out, stats, _) = run_triangles(&e, &config);
        assert!(stats.spills > 0, "expected the hub to spill");
        // ground truth via brute force
        let mut expect: Vec<Tuple> = crate::naive::triangle_list_cubic(&edges)
            .into_iter()
            .map(|(a, b, c)| vec![a, b, c])
            .collect();
        expect.sort();
        assert_eq!(out, expect);
    }

    #[test]
    fn boxed_matches_unboxed_on_random_budgets() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(61);
        let edges = crate::gen::gen_rand(30, 90, 5).unwrap();
        let e = build_from_sorted(&edges, 2).unwrap();
        let mut expect: Vec<Tuple> = crate::naive::triangle_list_cubic(&edges)
            .into_iter()
            .map(|(a, b, c)| vec![a, b, c])
            .collect();
        expect.sort();
        for _ in 0..10 {
            let config = BoxerConfig {
                memory_words: rng.gen_range(40..4000),
                block_size: 4,
                ratio: None,
                constraint_hook: false,
            };
            let (out, _, _) = run_triangles(&e, &config);
            assert_eq!(out, expect, "memory {}", config.memory_words);
        }
    }

    #[test]
    fn clique_pack_across_boxes() {
        let edges = crate::gen::gen_clique_pack(2, 12).unwrap();
        let e = build_from_sorted(&edges, 2).unwrap();
        let config = BoxerConfig {
            memory_words: 30,
            block_size: 4,
            ratio: None,
            constraint_hook: false,
        };
        let (out, stats, _) = run_triangles(&e, &config);
        assert_eq!(out.len(), 8);
        assert!(stats.boxes > 1);
    }

    #[test]
    fn constraint_hook_preserves_results() {
        let edges = crate::gen::gen_rand(25, 70, 9).unwrap();
        let e = build_from_sorted(&edges, 2).unwrap();
        let base = BoxerConfig {
            memory_words: 80,
            block_size: 4,
            ratio: None,
            constraint_hook: false,
        };
        let hooked = BoxerConfig { constraint_hook: true, ..base.clone() };
        let (out_a, stats_a, _) = run_triangles(&e, &base);
        let (out_b, stats_b, _) = run_triangles(&e, &hooked);
        assert_eq!(out_a, out_b);
        assert!(
            stats_b.provisioned_words <= stats_a.provisioned_words,
            "hook must not provision more: {} > {}",
            stats_b.provisioned_words,
            stats_a.provisioned_words
        );
    }

    #[test]
    fn ratio_shifts_box_counts() {
        let edges = crate::gen::gen_rand(40, 200, 13).unwrap();
        let e = build_from_sorted(&edges, 2).unwrap();
        let even = BoxerConfig {
            memory_words: 200,
            block_size: 4,
            ratio: None,
            constraint_hook: false,
        };
        let skewed = BoxerConfig { ratio: Some(vec![4, 1]), ..even.clone() };
        let (out_a, _, boxes_even) = run_triangles(&e, &even);
        let (out_b, _, boxes_skewed) = run_triangles(&e, &skewed);
        assert_eq!(out_a, out_b);
        // 4:1 gives x four times the budget: fewer, wider x ranges
        let distinct_x = |boxes: &[BoxBounds]| {
            let mut xs: Vec<(i64, i64)> = boxes.iter().map(|b| b.dims[0]).collect();
            xs.dedup();
            xs.len()
        };
        assert!(distinct_x(&boxes_skewed) <= distinct_x(&boxes_even));
    }

    #[test]
    fn infeasible_budget_reported() {
        let e = fig2();
        let atoms = triangle_atoms(&e);
        let config = BoxerConfig {
            memory_words: 1,
            block_size: 4,
            ratio: None,
            constraint_hook: false,
        };
        let mut sink = ResultSink::new(SinkMode::Count, None);
        let err = run_boxed(3, &atoms, &config, &mut sink).unwrap_err();
        assert!(matches!(err, Error::InfeasibleBudget(_)));
    }
}
