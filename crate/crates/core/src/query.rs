//! Datalog-like frontend for full conjunctive queries.
//!
//! Grammar: `Head(v1,...,vk) <- Atom1(..), Atom2(..), ... .` plus an
//! optional `order v1,...,vn.` directive fixing the key order. Repeated
//! variables within an atom are rewritten away with the builtin `Eq`
//! predicate, and atoms whose variables do not form a subsequence of the
//! key order are mapped to alternative indexes.

use std::collections::BTreeMap;

use crate::error::Error;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub relation: String,
    pub vars: Vec<String>,
    /// True for Eq atoms introduced by the repeated-variable rewrite.
    pub builtin_eq: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub head_name: String,
    pub head: Vec<String>,
    pub atoms: Vec<Atom>,
    /// Key order x_1..x_n over the body variables.
    pub order: Vec<String>,
}

/// A query lowered against a catalog: variables replaced by key-order
/// dimensions and index permutations resolved.
#[derive(Debug, Clone)]
pub struct CompiledQuery {
    pub n_vars: usize,
    pub order: Vec<String>,
    pub atoms: Vec<CompiledAtom>,
    /// Positions of the (original) head variables within the key order.
    pub head_dims: Vec<usize>,
    /// Rank r_pi(Q): largest 1-based key-order position that is the first
    /// variable of some atom.
    pub rank: usize,
}

#[derive(Debug, Clone)]
pub struct CompiledAtom {
    pub relation: String,
    /// Attribute permutation of the alternative index, or None when the
    /// base attribute order already conforms to the key order.
    pub index_perm: Option<Vec<usize>>,
    /// Key-order dimension of each (permuted) attribute, strictly increasing.
    pub dims: Vec<usize>,
    pub builtin_eq: bool,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Arrow,
    Dot,
    Eof,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Lexer<'a> {
        Lexer { src: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line, col: self.col, msg: msg.into() }
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.src.get(self.pos).copied()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn next_tok(&mut self) -> Result<Tok> {
        while let Some(c) = self.peek() {
            match c {
                b' ' | b'\t' | b'\r' | b'\n' => {
                    self.bump();
                }
                b'#' => {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
        let Some(c) = self.peek() else { return Ok(Tok::Eof) };
        match c {
            b'(' => {
                self.bump();
                Ok(Tok::LParen)
            }
            b')' => {
                self.bump();
                Ok(Tok::RParen)
            }
            b',' => {
                self.bump();
                Ok(Tok::Comma)
            }
            b'.' => {
                self.bump();
                Ok(Tok::Dot)
            }
            b'<' => {
                self.bump();
                if self.peek() == Some(b'-') {
                    self.bump();
                    Ok(Tok::Arrow)
                } else {
                    Err(self.err("expected '-' after '<'"))
                }
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut ident = String::new();
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == b'_' || c == b'\'' {
                        ident.push(c as char);
                        self.bump();
                    } else {
                        break;
                    }
                }
                Ok(Tok::Ident(ident))
            }
            c => Err(self.err(format!("unexpected character {:?}", c as char))),
        }
    }
}

struct Parser<'a> {
    lex: Lexer<'a>,
    tok: Tok,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Parser<'a>> {
        let mut lex = Lexer::new(src);
        let tok = lex.next_tok()?;
        Ok(Parser { lex, tok })
    }

    fn advance(&mut self) -> Result<Tok> {
        let t = std::mem::replace(&mut self.tok, self.lex.next_tok()?);
        Ok(t)
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if self.tok == want {
            self.advance()?;
            Ok(())
        } else {
            Err(self.lex.err(format!("expected {what}, found {:?}", self.tok)))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        match self.advance()? {
            Tok::Ident(s) => Ok(s),
            t => Err(self.lex.err(format!("expected {what}, found {t:?}"))),
        }
    }

    fn var_list(&mut self) -> Result<Vec<String>> {
        self.expect(Tok::LParen, "'('")?;
        let mut vars = vec![self.ident("variable")?];
        while self.tok == Tok::Comma {
            self.advance()?;
            vars.push(self.ident("variable")?);
        }
        self.expect(Tok::RParen, "')'")?;
        Ok(vars)
    }
}

/// Parses a query text into a structurally validated `Query`.
pub fn parse(text: &str) -> Result<Query> {
    let mut p = Parser::new(text)?;
    let mut head_name = None;
    let mut head = None;
    let mut atoms: Vec<Atom> = Vec::new();
    let mut order: Option<Vec<String>> = None;

    while p.tok != Tok::Eof {
        let name = p.ident("rule head or 'order' directive")?;
        if name == "order" {
            let mut vars = vec![p.ident("variable")?];
            while p.tok == Tok::Comma {
                p.advance()?;
                vars.push(p.ident("variable")?);
            }
            p.expect(Tok::Dot, "'.'")?;
            order = Some(vars);
            continue;
        }
        if head.is_some() {
            return Err(Error::InvalidQuery("multiple rules are not supported".into()));
        }
        head_name = Some(name);
        head = Some(p.var_list()?);
        p.expect(Tok::Arrow, "'<-'")?;
        loop {
            let rel = p.ident("atom")?;
            let vars = p.var_list()?;
            atoms.push(Atom { relation: rel, vars, builtin_eq: false });
            if p.tok == Tok::Comma {
                p.advance()?;
            } else {
                break;
            }
        }
        p.expect(Tok::Dot, "'.'")?;
    }

    let head = head.ok_or_else(|| Error::InvalidQuery("no rule found".into()))?;
    let head_name = head_name.unwrap();
    if atoms.is_empty() {
        return Err(Error::InvalidQuery("rule has no body atoms".into()));
    }

    let mut body_vars: Vec<String> = Vec::new();
    for atom in &atoms {
        for v in &atom.vars {
            if !body_vars.contains(v) {
                body_vars.push(v.clone());
            }
        }
    }
    for v in &head {
        if !body_vars.contains(v) {
            return Err(Error::InvalidQuery(format!("head variable {v} not in body")));
        }
    }
    for v in &body_vars {
        if !head.contains(v) {
            return Err(Error::InvalidQuery(format!(
                "body variable {v} missing from head: projection is unsupported"
            )));
        }
    }
    // arity consistency within the query
    let mut arities: BTreeMap<&str, usize> = BTreeMap::new();
    for atom in &atoms {
        let a = arities.entry(&atom.relation).or_insert(atom.vars.len());
        if *a != atom.vars.len() {
            return Err(Error::InvalidQuery(format!(
                "relation {} used with arities {} and {}",
                atom.relation,
                a,
                atom.vars.len()
            )));
        }
    }
    let order = match order {
        Some(o) => {
            for v in &o {
                if !body_vars.contains(v) {
                    return Err(Error::InvalidQuery(format!("order variable {v} not in body")));
                }
            }
            for v in &body_vars {
                if !o.contains(v) {
                    return Err(Error::InvalidQuery(format!("variable {v} missing from order")));
                }
            }
            o
        }
        None => head.clone(),
    };

    Ok(Query { head_name, head, atoms, order })
}

impl Query {
    /// Replaces repeated variables within an atom by fresh variables plus
    /// builtin `Eq` atoms; fresh variables are appended to the key order.
    pub fn rewrite_repeated_vars(&self) -> Query {
        let mut q = self.clone();
        let mut fresh = 0usize;
        let mut eq_atoms = Vec::new();
        for atom in &mut q.atoms {
            let mut seen: Vec<String> = Vec::new();
            for v in &mut atom.vars {
                if seen.contains(v) {
                    fresh += 1;
                    let nv = format!("{v}__{fresh}");
                    eq_atoms.push(Atom {
                        relation: "Eq".into(),
                        vars: vec![v.clone(), nv.clone()],
                        builtin_eq: true,
                    });
                    q.order.push(nv.clone());
                    *v = nv;
                } else {
                    seen.push(v.clone());
                }
            }
        }
        q.atoms.extend(eq_atoms);
        q
    }

    /// Rank of this query under its key order.
    pub fn rank(&self) -> usize {
        compute_rank(self, &self.order)
    }

    /// Lowers the query against a catalog of relation arities. Applies the
    /// repeated-variable rewrite and resolves alternative indexes.
    pub fn compile(&self, catalog: &BTreeMap<String, usize>) -> Result<CompiledQuery> {
        for atom in &self.atoms {
            if atom.builtin_eq {
                continue;
            }
            let Some(&arity) = catalog.get(&atom.relation) else {
                return Err(Error::InvalidQuery(format!("unknown relation {}", atom.relation)));
            };
            if arity != atom.vars.len() {
                return Err(Error::InvalidQuery(format!(
                    "relation {} has arity {}, used with {} variables",
                    atom.relation,
                    arity,
                    atom.vars.len()
                )));
            }
        }
        let q = self.rewrite_repeated_vars();
        let dim_of = |v: &str| -> usize {
            q.order.iter().position(|o| o == v).expect("order covers body vars")
        };
        let mut atoms = Vec::with_capacity(q.atoms.len());
        for atom in &q.atoms {
            let raw_dims: Vec<usize> = atom.vars.iter().map(|v| dim_of(v)).collect();
            let increasing = raw_dims.windows(2).all(|w| w[0] < w[1]);
            let (index_perm, dims) = if increasing {
                (None, raw_dims)
            } else {
                let mut perm: Vec<usize> = (0..raw_dims.len()).collect();
                perm.sort_by_key(|&i| raw_dims[i]);
                let dims = perm.iter().map(|&i| raw_dims[i]).collect();
                (Some(perm), dims)
            };
            atoms.push(CompiledAtom {
                relation: atom.relation.clone(),
                index_perm,
                dims,
                builtin_eq: atom.builtin_eq,
            });
        }
        let n_vars = q.order.len();
        let mut covered = vec![false; n_vars];
        for a in &atoms {
            for &d in &a.dims {
                covered[d] = true;
            }
        }
        if let Some(d) = covered.iter().position(|&c| !c) {
            return Err(Error::InvalidQuery(format!(
                "variable {} not joined by any atom",
                q.order[d]
            )));
        }
        // rank over the stored atoms; Eq atoms need no memory and do not
        // widen the boxed recursion
        let rank = atoms
            .iter()
            .filter(|a| !a.builtin_eq)
            .map(|a| a.dims[0] + 1)
            .max()
            .unwrap_or(1);
        let head_dims = self.head.iter().map(|v| dim_of(v)).collect();
        Ok(CompiledQuery { n_vars, order: q.order, atoms, head_dims, rank })
    }
}

impl CompiledQuery {
    /// The alternative indexes this query needs: deduplicated
    /// (relation, permutation) pairs.
    pub fn index_requests(&self) -> Vec<(String, Vec<usize>)> {
        let mut out: Vec<(String, Vec<usize>)> = Vec::new();
        for a in &self.atoms {
            if let Some(perm) = &a.index_perm {
                let req = (a.relation.clone(), perm.clone());
                if !out.contains(&req) {
                    out.push(req);
                }
            }
        }
        out
    }
}

fn compute_rank(q: &Query, order: &[String]) -> usize {
    q.atoms
        .iter()
        .map(|a| {
            a.vars
                .iter()
                .map(|v| order.iter().position(|o| o == v).unwrap() + 1)
                .min()
                .unwrap()
        })
        .max()
        .unwrap()
}

/// Diagnostic: enumerate all key orders (n <= 6) and return one minimizing
/// the rank, together with that rank.
pub fn min_rank(q: &Query) -> Result<(usize, Vec<String>)> {
    let vars = &q.order;
    if vars.len() > 6 {
        return Err(Error::InvalidParameter(
            "rank enumeration is limited to 6 variables".into(),
        ));
    }
    let mut best: Option<(usize, Vec<String>)> = None;
    permute(vars.clone(), 0, &mut |perm| {
        let r = compute_rank(q, perm);
        if best.as_ref().is_none_or(|(b, _)| r < *b) {
            best = Some((r, perm.to_vec()));
        }
    });
    Ok(best.unwrap())
}

fn permute(mut items: Vec<String>, k: usize, f: &mut impl FnMut(&[String])) {
    if k == items.len() {
        f(&items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items.clone(), k + 1, f);
        items.swap(k, i);
    }
}
