//! Grammar model and text format.
//!
//! A grammar file is line oriented; `#` starts a comment when it opens the
//! line or follows whitespace (so `sem=#0` is never a comment):
//!
//! ```text
//! param sem.arg1 sem.arg2 sem.arg3
//! restrict cat sem.arg1 sem.arg2 sem.arg3
//! start S
//! rule r1: S[sem=#0] -> NP[sem.arg1=#1] VP[sem=#0, sem.arg2=#1]
//! lex dog: N[sem.reln=dog, sem.arg1=#1]
//! ```
//!
//! `#n` names a variable scoped to one rule or lexical entry; repeating it
//! shares the node. A bare value is an atom; `_` is a fresh anonymous
//! variable. A daughter written without brackets is a bare category.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fs::{valid_symbol_char, FeatureStructure, FsBuilder, Path, Sym, CAT_LABEL};
use crate::restrict::Restrictor;

pub const MOTHER_LABEL: &str = "mother";

/// The reserved root label for daughter `i` in a production's combined
/// structure.
pub fn daughter_label(i: usize) -> Sym {
    Sym::from(format!("d{i}"))
}

/// One production, stored as a single feature structure whose root maps
/// `mother`, `d0`, `d1`, … to the participating signs. Keeping everything
/// in one structure preserves the token identities a rule establishes
/// across its mother and daughters.
#[derive(Clone, PartialEq, Eq)]
pub struct Production {
    pub name: Sym,
    combined: FeatureStructure,
    arity: usize,
}

impl Production {
    pub fn combined(&self) -> &FeatureStructure {
        &self.combined
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn mother(&self) -> FeatureStructure {
        self.combined
            .extract_at(&Path(vec![Sym::from(MOTHER_LABEL)]))
            .expect("combined structure always carries a mother")
    }

    pub fn daughter(&self, i: usize) -> FeatureStructure {
        self.combined
            .extract_at(&Path(vec![daughter_label(i)]))
            .expect("daughter index within arity")
    }

    pub fn daughters(&self) -> Vec<FeatureStructure> {
        (0..self.arity).map(|i| self.daughter(i)).collect()
    }

    pub fn mother_category(&self) -> Sym {
        self.mother()
            .category()
            .expect("validated at parse: every rule sign has a category")
    }

    pub fn daughter_category(&self, i: usize) -> Sym {
        self.daughter(i)
            .category()
            .expect("validated at parse: every rule sign has a category")
    }
}

impl std::fmt::Debug for Production {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {:?}", self.name, self.combined)
    }
}

#[derive(Clone)]
pub struct Grammar {
    pub productions: Vec<Production>,
    /// word-form → lexical entries, in declaration order.
    pub lexicon: BTreeMap<String, Vec<FeatureStructure>>,
    pub start: FeatureStructure,
    pub param_paths: Vec<Path>,
    pub restrictor: Restrictor,
    source_hash: String,
}

impl Grammar {
    /// Hex digest of the grammar text; domain caches are keyed on it.
    pub fn source_hash(&self) -> &str {
        &self.source_hash
    }

    pub fn start_category(&self) -> Sym {
        self.start
            .category()
            .expect("start sign is built from a category")
    }

    /// A start sign for an alternative category, validated against rule
    /// mothers the same way the declared start is.
    pub fn start_sign(&self, cat: &str) -> Result<FeatureStructure> {
        let sign = category_sign(cat);
        let known = self
            .productions
            .iter()
            .any(|p| p.mother_category().as_str() == cat);
        if !known {
            return Err(Error::GrammarInvalid(format!(
                "start category {cat} matches no production mother"
            )));
        }
        Ok(sign)
    }

    /// Mother signs of all productions (the nonterminal signs), deduplicated.
    pub fn nonterminal_signs(&self) -> BTreeSet<FeatureStructure> {
        self.productions.iter().map(|p| p.mother()).collect()
    }

    /// Daughter signs that unify with at least one lexical entry (the
    /// preterminal signs), deduplicated.
    pub fn preterminal_signs(&self) -> BTreeSet<FeatureStructure> {
        let mut out = BTreeSet::new();
        for p in &self.productions {
            for d in p.daughters() {
                if self.entries().any(|e| crate::fs::unifiable(&d, e)) {
                    out.insert(d);
                }
            }
        }
        out
    }

    /// Categories of the preterminal signs.
    pub fn preterminal_cats(&self) -> BTreeSet<Sym> {
        self.preterminal_signs()
            .iter()
            .filter_map(|s| s.category())
            .collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = &FeatureStructure> {
        self.lexicon.values().flatten()
    }
}

impl std::fmt::Debug for Grammar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Grammar({} rules, {} words, start {})",
            self.productions.len(),
            self.lexicon.len(),
            self.start_category()
        )
    }
}

/// A sign constraining only the category.
pub fn category_sign(cat: &str) -> FeatureStructure {
    let mut b = FsBuilder::new();
    let root = b.complex();
    let node = b
        .ensure_path(root, &Path(vec![Sym::from(CAT_LABEL)]))
        .expect("fresh root");
    let atom = b.atom(Sym::from(cat));
    b.uni(node, atom).expect("fresh node");
    b.extract(root).expect("two nodes cannot form a cycle")
}

/// Strip a comment: `#` at line start or after whitespace.
pub(crate) fn strip_comment(line: &str) -> &str {
    let bytes = line.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'#' && (i == 0 || bytes[i - 1].is_ascii_whitespace()) {
            return &line[..i];
        }
    }
    line
}

fn syntax_err(line: usize, msg: impl Into<String>) -> Error {
    Error::GrammarSyntax {
        line,
        msg: msg.into(),
    }
}

pub fn parse_grammar(text: &str) -> Result<Grammar> {
    let mut params: Vec<Path> = Vec::new();
    let mut restrict_paths: Vec<Path> = Vec::new();
    let mut start_cat: Option<String> = None;
    let mut productions: Vec<Production> = Vec::new();
    let mut rule_names: BTreeSet<Sym> = BTreeSet::new();
    let mut lexicon: BTreeMap<String, Vec<FeatureStructure>> = BTreeMap::new();

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let (keyword, rest) = match line.split_once(char::is_whitespace) {
            Some((k, r)) => (k, r.trim()),
            None => (line, ""),
        };
        match keyword {
            "param" => {
                for word in rest.split_whitespace() {
                    let p = Path::parse(word)
                        .ok_or_else(|| syntax_err(lineno, format!("bad path `{word}`")))?;
                    if params.contains(&p) {
                        return Err(syntax_err(lineno, format!("duplicate param path `{word}`")));
                    }
                    params.push(p);
                }
            }
            "restrict" => {
                for word in rest.split_whitespace() {
                    let p = Path::parse(word)
                        .ok_or_else(|| syntax_err(lineno, format!("bad path `{word}`")))?;
                    restrict_paths.push(p);
                }
            }
            "start" => {
                if start_cat.is_some() {
                    return Err(syntax_err(lineno, "start declared twice"));
                }
                if rest.is_empty() || !rest.chars().all(valid_symbol_char) {
                    return Err(syntax_err(lineno, format!("bad start category `{rest}`")));
                }
                start_cat = Some(rest.to_string());
            }
            "rule" => {
                let (name, body) = rest
                    .split_once(':')
                    .ok_or_else(|| syntax_err(lineno, "expected `rule name: ...`"))?;
                let name = name.trim();
                if name.is_empty() || !name.chars().all(valid_symbol_char) {
                    return Err(syntax_err(lineno, format!("bad rule name `{name}`")));
                }
                let name = Sym::from(name);
                if !rule_names.insert(name.clone()) {
                    return Err(syntax_err(lineno, format!("duplicate rule name `{name}`")));
                }
                let (mother_src, daughters_src) = body
                    .split_once("->")
                    .ok_or_else(|| syntax_err(lineno, "expected `mother -> daughters`"))?;
                let production = parse_production(lineno, name, mother_src, daughters_src)?;
                productions.push(production);
            }
            "lex" => {
                let (word, body) = rest
                    .split_once(':')
                    .ok_or_else(|| syntax_err(lineno, "expected `lex word: Sign`"))?;
                let word = word.trim();
                if word.is_empty() || !word.chars().all(valid_symbol_char) {
                    return Err(syntax_err(lineno, format!("bad word form `{word}`")));
                }
                let sign = parse_standalone_sign(lineno, body.trim())?;
                lexicon.entry(word.to_string()).or_default().push(sign);
            }
            other => {
                return Err(syntax_err(lineno, format!("unknown directive `{other}`")));
            }
        }
    }

    if productions.is_empty() {
        return Err(Error::GrammarInvalid("no rules declared".into()));
    }
    if params.is_empty() {
        return Err(Error::GrammarInvalid(
            "no connectivity-parameter paths declared (need a `param` line)".into(),
        ));
    }
    let start_cat =
        start_cat.ok_or_else(|| Error::GrammarInvalid("no start category declared".into()))?;
    if !productions
        .iter()
        .any(|p| p.mother_category().as_str() == start_cat)
    {
        return Err(Error::GrammarInvalid(format!(
            "start category {start_cat} matches no production mother"
        )));
    }

    let restrictor = Restrictor::new(
        restrict_paths
            .into_iter()
            .chain(params.iter().cloned())
            .collect::<Vec<_>>(),
    );

    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let source_hash = hex(&hasher.finalize());

    Ok(Grammar {
        productions,
        lexicon,
        start: category_sign(&start_cat),
        param_paths: params,
        restrictor,
        source_hash,
    })
}

fn hex(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// `Cat[...]` or a bare `Cat`; returns (category, constraint list src).
fn split_sign_src(lineno: usize, src: &str) -> Result<(String, String)> {
    let src = src.trim();
    match src.find('[') {
        Some(open) => {
            if !src.ends_with(']') {
                return Err(syntax_err(lineno, format!("unterminated `[` in `{src}`")));
            }
            let cat = &src[..open];
            let inner = &src[open + 1..src.len() - 1];
            if cat.is_empty() || !cat.chars().all(valid_symbol_char) {
                return Err(syntax_err(lineno, format!("bad category `{cat}`")));
            }
            if inner.contains('[') || inner.contains(']') {
                return Err(syntax_err(lineno, format!("nested brackets in `{src}`")));
            }
            Ok((cat.to_string(), inner.to_string()))
        }
        None => {
            if src.is_empty() || !src.chars().all(valid_symbol_char) {
                return Err(syntax_err(lineno, format!("bad sign `{src}`")));
            }
            Ok((src.to_string(), String::new()))
        }
    }
}

/// Build one sign under `slot` in the shared builder, wiring `#n` variables
/// through `vars` (the rule- or entry-level scope).
fn build_sign(
    lineno: usize,
    b: &mut FsBuilder,
    slot: usize,
    src: &str,
    vars: &mut BTreeMap<String, usize>,
) -> Result<()> {
    let (cat, inner) = split_sign_src(lineno, src)?;
    let cat_node = b
        .ensure_path(slot, &Path(vec![Sym::from(CAT_LABEL)]))
        .map_err(|_| syntax_err(lineno, "category clashes with an earlier constraint"))?;
    let atom = b.atom(Sym::from(cat.as_str()));
    b.uni(cat_node, atom)
        .map_err(|_| syntax_err(lineno, format!("conflicting categories on `{src}`")))?;

    for item in inner.split(',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let (path_src, value_src) = item
            .split_once('=')
            .ok_or_else(|| syntax_err(lineno, format!("expected `path=value` in `{item}`")))?;
        let path = Path::parse(path_src.trim())
            .ok_or_else(|| syntax_err(lineno, format!("bad path `{path_src}`")))?;
        let node = b
            .ensure_path(slot, &path)
            .map_err(|_| syntax_err(lineno, format!("path `{path_src}` crosses an atom")))?;
        let value_src = value_src.trim();
        let value = if let Some(var) = value_src.strip_prefix('#') {
            if var.is_empty() || !var.chars().all(valid_symbol_char) {
                return Err(syntax_err(lineno, format!("bad variable `{value_src}`")));
            }
            *vars.entry(var.to_string()).or_insert_with(|| b.var())
        } else if value_src == "_" {
            b.var()
        } else if value_src.chars().all(valid_symbol_char) && !value_src.is_empty() {
            b.atom(Sym::from(value_src))
        } else {
            return Err(syntax_err(lineno, format!("bad value `{value_src}`")));
        };
        b.uni(node, value)
            .map_err(|_| syntax_err(lineno, format!("`{item}` clashes with earlier constraints")))?;
    }
    Ok(())
}

fn parse_production(
    lineno: usize,
    name: Sym,
    mother_src: &str,
    daughters_src: &str,
) -> Result<Production> {
    let mut b = FsBuilder::new();
    let root = b.complex();
    let mut vars: BTreeMap<String, usize> = BTreeMap::new();

    let mother_slot = b
        .ensure_path(root, &Path(vec![Sym::from(MOTHER_LABEL)]))
        .expect("fresh root");
    build_sign(lineno, &mut b, mother_slot, mother_src, &mut vars)?;

    let daughter_srcs = split_daughters(lineno, daughters_src)?;
    if daughter_srcs.is_empty() {
        return Err(syntax_err(lineno, "a rule needs at least one daughter"));
    }
    let arity = daughter_srcs.len();
    for (i, src) in daughter_srcs.iter().enumerate() {
        let slot = b
            .ensure_path(root, &Path(vec![daughter_label(i)]))
            .expect("fresh root");
        build_sign(lineno, &mut b, slot, src, &mut vars)?;
    }

    let combined = b
        .extract(root)
        .map_err(|_| syntax_err(lineno, "rule constraints form a cycle"))?;
    Ok(Production {
        name,
        combined,
        arity,
    })
}

/// Daughters are whitespace-separated signs; brackets may contain spaces,
/// so split at top level only.
fn split_daughters(lineno: usize, src: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut depth = 0u32;
    let mut cur = String::new();
    for c in src.chars() {
        match c {
            '[' => {
                depth += 1;
                cur.push(c);
            }
            ']' => {
                depth = depth
                    .checked_sub(1)
                    .ok_or_else(|| syntax_err(lineno, "unbalanced `]`"))?;
                cur.push(c);
            }
            c if c.is_whitespace() && depth == 0 => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            _ => cur.push(c),
        }
    }
    if depth != 0 {
        return Err(syntax_err(lineno, "unbalanced `[`"));
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    Ok(out)
}

fn parse_standalone_sign(lineno: usize, src: &str) -> Result<FeatureStructure> {
    let mut b = FsBuilder::new();
    let root = b.complex();
    let mut vars = BTreeMap::new();
    build_sign(lineno, &mut b, root, src, &mut vars)?;
    b.extract(root)
        .map_err(|_| syntax_err(lineno, "sign constraints form a cycle"))
}
