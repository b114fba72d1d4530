use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use lftj::{ingest_csv, Mode, RunConfig, SinkMode, TrieArray, Tuple};

#[derive(Parser)]
#[command(name = "lftj", about = "Worst-case optimal joins with out-of-core boxing")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a uniform random simple graph as CSV edges.
    GenRand {
        #[arg(long)]
        nodes: u64,
        #[arg(long)]
        edges: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate an R-MAT graph (simplified) as CSV edges.
    GenRmat {
        #[arg(long)]
        scale: u32,
        #[arg(long)]
        edges: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a clique packing with the given arboricity bound.
    GenClique {
        #[arg(long)]
        alpha_hat: u64,
        #[arg(long)]
        edges: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate the thrashing graph for the given memory geometry.
    GenPathological {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        memory: usize,
        #[arg(long)]
        block_size: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sort and encode a CSV relation as an on-disk trie.
    BuildTrie {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        arity: usize,
        #[arg(long)]
        out: PathBuf,
        /// Treat rows as undirected edges: keep (min, max), drop loops.
        #[arg(long)]
        symmetrize: bool,
    },
    /// Run a query over bound trie files.
    Run {
        /// Query file, e.g. `T(x,y,z) <- E(x,y), E(x,z), E(y,z).`
        #[arg(long)]
        query: PathBuf,
        /// Relation binding `name=path`, repeatable.
        #[arg(long = "bind")]
        bind: Vec<String>,
        /// Key order override, e.g. `x,y,z`.
        #[arg(long)]
        order: Option<String>,
        /// Memory budget in words.
        #[arg(long, default_value_t = 1 << 20)]
        memory: usize,
        /// Block size in words.
        #[arg(long, default_value_t = 64)]
        block_size: usize,
        #[arg(long, default_value = "vanilla")]
        mode: String,
        #[arg(long, default_value = "count")]
        sink: String,
        /// Where to write listed results; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Budget weights for the atom-owning dims, e.g. `4:1`.
        #[arg(long)]
        ratio: Option<String>,
        #[arg(long, default_value = "off")]
        constraint_hook: String,
        /// Vanilla-mode worker count.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
}

fn write_edges(edges: &[Tuple], out: Option<&Path>) -> Result<()> {
    let mut text = String::new();
    for e in edges {
        let fields: Vec<String> = e.iter().map(i64::to_string).collect();
        text.push_str(&fields.join(","));
        text.push('\n');
    }
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn parse_on_off(flag: &str, what: &str) -> Result<bool> {
    match flag {
        "on" => Ok(true),
        "off" => Ok(false),
        other => bail!("{what} must be on or off, got {other}"),
    }
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::GenRand { nodes, edges, seed, out } => {
            write_edges(&lftj::gen::gen_rand(nodes, edges, seed)?, out.as_deref())
        }
        Cmd::GenRmat { scale, edges, seed, out } => {
            write_edges(&lftj::gen::gen_rmat(scale, edges, seed)?, out.as_deref())
        }
        Cmd::GenClique { alpha_hat, edges, out } => {
            write_edges(&lftj::gen::gen_clique_pack(alpha_hat, edges)?, out.as_deref())
        }
        Cmd::GenPathological { n, memory, block_size, out } => {
            write_edges(&lftj::gen_pathological(n, memory, block_size)?, out.as_deref())
        }
        Cmd::BuildTrie { input, arity, out, symmetrize } => {
            let tuples = ingest_csv(&input, arity, true, symmetrize)?;
            let trie = lftj::build_from_sorted(&tuples, arity)?;
            lftj::storage::persist(&trie, &out)?;
            eprintln!("{} tuples, {} words", trie.len(), trie.words());
            Ok(())
        }
        Cmd::Run {
            query,
            bind,
            order,
            memory,
            block_size,
            mode,
            sink,
            out,
            ratio,
            constraint_hook,
            parallel,
        } => {
            let mut text = fs::read_to_string(&query)
                .with_context(|| format!("reading {}", query.display()))?;
            if let Some(order) = order {
                text.push_str(&format!("\norder {order}.\n"));
            }
            let mut bindings: BTreeMap<String, TrieArray> = BTreeMap::new();
            for b in bind {
                let (name, path) = b
                    .split_once('=')
                    .with_context(|| format!("bind {b:?} is not name=path"))?;
                bindings.insert(name.to_string(), lftj::storage::load(Path::new(path))?);
            }
            let config = RunConfig {
                query_text: text,
                memory_words: memory,
                block_size,
                mode: match mode.as_str() {
                    "boxed" => Mode::Boxed,
                    "vanilla" => Mode::Vanilla,
                    other => bail!("mode must be boxed or vanilla, got {other}"),
                },
                sink: match sink.as_str() {
                    "count" => SinkMode::Count,
                    "list" => SinkMode::List,
                    other => bail!("sink must be count or list, got {other}"),
                },
                ratio: match ratio {
                    None => None,
                    Some(r) => Some(
                        r.split(':')
                            .map(|w| w.parse::<u64>().context("ratio weights must be integers"))
                            .collect::<Result<Vec<u64>>>()?,
                    ),
                },
                constraint_hook: parse_on_off(&constraint_hook, "constraint-hook")?,
                parallel,
            };
            let output = lftj::run(&config, &bindings)?;
            println!("{}", output.stats);
            if config.sink == SinkMode::List {
                let mut text = String::new();
                for t in &output.sink.tuples {
                    let fields: Vec<String> = t.iter().map(i64::to_string).collect();
                    text.push_str(&fields.join(","));
                    text.push('\n');
                }
                match out {
                    Some(p) => {
                        let mut f = fs::File::create(&p)
                            .with_context(|| format!("creating {}", p.display()))?;
                        f.write_all(text.as_bytes())?;
                    }
                    None => print!("{text}"),
                }
            }
            Ok(())
        }
    }
}
