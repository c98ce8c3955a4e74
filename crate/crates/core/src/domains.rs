//! Offline compilation of pairing domains.
//!
//! A *pairing domain* records, for an abstract sign, which lexical material
//! can occur in a derivation together with it and which semantic paths the
//! two are forced to share.  The *inner* domain of a sign covers the leaves
//! of its own subtree; the *outer* domain covers leaves in the rest of a
//! complete tree around it.  Both are finite because signs are quotiented by
//! the grammar's restrictor before they enter the fixpoint.
//!
//! The generator consults outer domains at run time: a partial result whose
//! sign shares no index with some unconsumed word, on any compiled path
//! pair, can never grow into a result that consumes that word.
//!
//! Precision caveat: path pairs range over the restrictor's prefix closure,
//! so the restrictor must cover every path where the grammar surfaces a
//! semantic index.  Declared parameters are always covered.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::fs::{unifiable, unify, FeatureStructure, Node, NodeId, Path, Probe, Sym};
use crate::grammar::{daughter_label, Grammar, MOTHER_LABEL};
use crate::restrict::{restrict, AbstractSign, Restrictor};

pub type Binds = BTreeSet<(Path, Path)>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum DomainKind {
    Inner,
    Outer,
}

impl DomainKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DomainKind::Inner => "inner",
            DomainKind::Outer => "outer",
        }
    }
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A compiled domain, distilled to category level for persistence and
/// run-time lookup: `(sign category, lexical category)` → the union of path
/// pairs collected over all abstract signs with those categories.  Merging
/// can only add pairs, so lookups stay conservative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainSet {
    kind: DomainKind,
    grammar_hash: String,
    map: BTreeMap<(Sym, Sym), Binds>,
}

impl DomainSet {
    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    /// Hash of the grammar text this was compiled from.
    pub fn grammar_hash(&self) -> &str {
        &self.grammar_hash
    }

    pub fn pairs(&self, sign_cat: &str, lex_cat: &str) -> Option<&Binds> {
        self.map
            .get(&(Sym::from(sign_cat), Sym::from(lex_cat)))
    }

    /// Rows in deterministic order.
    pub fn iter(&self) -> impl Iterator<Item = (&(Sym, Sym), &Binds)> {
        self.map.iter()
    }

    /// Number of `(sign, lex)` rows.
    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// True when every pair of every row here also appears in `other`.
    pub fn subset_of(&self, other: &DomainSet) -> bool {
        self.map.iter().all(|(key, binds)| {
            other
                .map
                .get(key)
                .is_some_and(|theirs| binds.is_subset(theirs))
        })
    }

    pub(crate) fn from_rows(
        kind: DomainKind,
        grammar_hash: String,
        map: BTreeMap<(Sym, Sym), Binds>,
    ) -> DomainSet {
        DomainSet {
            kind,
            grammar_hash,
            map,
        }
    }
}

/// Sizes of a fixpoint iteration after each pass.  Every component grows
/// monotonically; the last two entries are equal because the loop stops on
/// the first pass that adds nothing.
#[derive(Clone, Debug, Default)]
pub struct FixpointLog {
    pub passes: Vec<PassStats>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PassStats {
    /// Abstract signs registered (including ones without partners yet).
    pub signs: usize,
    /// `(sign, lexical abstraction)` partnerships with at least one pair.
    pub partners: usize,
    /// Total path pairs.
    pub pairs: usize,
}

impl PassStats {
    fn dominates(self, earlier: PassStats) -> bool {
        self.signs >= earlier.signs
            && self.partners >= earlier.partners
            && self.pairs >= earlier.pairs
    }
}

impl FixpointLog {
    /// True when every pass only added material and the run ended because a
    /// pass added nothing.
    pub fn is_monotone(&self) -> bool {
        self.passes.windows(2).all(|w| w[1].dominates(w[0]))
    }
}

/// Fixpoint state at full abstract-sign precision, before distilling to
/// category level.
#[derive(Clone, Default, PartialEq, Eq)]
struct TripleStore {
    map: BTreeMap<AbstractSign, BTreeMap<AbstractSign, Binds>>,
}

impl TripleStore {
    /// Register a sign as reachable even if it has no partners yet; the
    /// outer fixpoint descends through such signs.
    fn touch(&mut self, sign: AbstractSign) {
        self.map.entry(sign).or_default();
    }

    fn add(&mut self, sign: AbstractSign, lex: AbstractSign, binds: Binds) {
        if binds.is_empty() {
            // A partnership without a shared path carries no information.
            return;
        }
        self.map
            .entry(sign)
            .or_default()
            .entry(lex)
            .or_default()
            .extend(binds);
    }

    fn stats(&self) -> PassStats {
        PassStats {
            signs: self.map.len(),
            partners: self.map.values().map(|m| m.len()).sum(),
            pairs: self.map.values().flat_map(|m| m.values()).map(|b| b.len()).sum(),
        }
    }
}

fn mother_path() -> Path {
    Path(vec![Sym::from(MOTHER_LABEL)])
}

fn daughter_path(i: usize) -> Path {
    Path(vec![daughter_label(i)])
}

/// Candidate bind paths: every nonempty prefix of a restrictor path.  Pairs
/// outside this closure would not survive restriction, and admitting them
/// would make the fixpoint space infinite.
fn bind_candidates(r: &Restrictor) -> Vec<Path> {
    let mut set = BTreeSet::new();
    for path in r.paths() {
        for len in 1..=path.0.len() {
            set.insert(Path(path.0[..len].to_vec()));
        }
    }
    set.into_iter().collect()
}

/// Identity pairs of a lexical abstraction: one per candidate path that
/// resolves to a non-atom node.  Atoms carry no index, so sharing them says
/// nothing about connectivity.
fn identity_binds(sign: &AbstractSign, candidates: &[Path]) -> Binds {
    let fs = sign.repr();
    candidates
        .iter()
        .filter_map(|p| {
            let id = fs.resolve(p)?;
            (!matches!(fs.node(id), Node::Atom(_))).then(|| (p.clone(), p.clone()))
        })
        .collect()
}

/// Unify `sign` into the subtree of `host` at `slot`.  `None` when the slot
/// rejects the sign (category or feature clash).
fn graft(host: &FeatureStructure, slot: &Path, sign: &FeatureStructure) -> Option<FeatureStructure> {
    unify(host, &sign.nest(slot))
}

/// Rewrite binds across one composition step.  Each pair `(p, q)` talks
/// about the node reached from `from` via `p`; the result re-addresses that
/// node from `to` instead, once per candidate path that reaches it, keeping
/// `q` fixed.  Pairs whose node is unreachable from `to` within the
/// candidate closure are dropped; so are pairs whose node collapsed to an
/// atom during grafting.
fn rebind(
    fs: &FeatureStructure,
    from: NodeId,
    to: NodeId,
    binds: &Binds,
    candidates: &[Path],
) -> Binds {
    let mut out = Binds::new();
    for (p, q) in binds {
        let Some(target) = fs.resolve_from(from, p) else {
            continue;
        };
        if matches!(fs.node(target), Node::Atom(_)) {
            continue;
        }
        for p0 in candidates {
            if fs.resolve_from(to, p0) == Some(target) {
                out.insert((p0.clone(), q.clone()));
            }
        }
    }
    out
}

/// Inner fixpoint: start from every lexical abstraction paired with itself,
/// then repeatedly graft known subtree roots into rule daughters and
/// re-address their binds from the rule's mother.
fn abstract_inner(g: &Grammar, candidates: &[Path]) -> (TripleStore, FixpointLog) {
    let mpath = mother_path();
    let mut store = TripleStore::default();
    for entry in g.entries() {
        let a = restrict(entry, &g.restrictor);
        let binds = identity_binds(&a, candidates);
        store.add(a.clone(), a, binds);
    }
    let mut log = FixpointLog::default();
    log.passes.push(store.stats());
    loop {
        let snapshot = store.clone();
        for p in &g.productions {
            for i in 0..p.arity() {
                let slot = daughter_path(i);
                for (root, partners) in &snapshot.map {
                    let Some(merged) = graft(p.combined(), &slot, root.repr()) else {
                        continue;
                    };
                    let mother = merged.resolve(&mpath).expect("rule keeps its mother");
                    let slot_node = merged.resolve(&slot).expect("rule keeps its daughters");
                    let new_root = restrict(&merged.extract(mother), &g.restrictor);
                    for (lex, binds) in partners {
                        let rewritten = rebind(&merged, slot_node, mother, binds, candidates);
                        store.add(new_root.clone(), lex.clone(), rewritten);
                    }
                }
            }
        }
        log.passes.push(store.stats());
        if store == snapshot {
            break;
        }
    }
    (store, log)
}

/// Outer fixpoint: descend from the start sign.  A daughter inherits its
/// mother's outer partners (their leaves stay outside the daughter) and
/// gains the inner partners of each sister (those leaves sit beside it),
/// with binds re-addressed from the daughter slot each time.
fn abstract_outer(
    g: &Grammar,
    inner: &TripleStore,
    candidates: &[Path],
) -> (TripleStore, FixpointLog) {
    let mpath = mother_path();
    let mut store = TripleStore::default();
    store.touch(restrict(&g.start, &g.restrictor));
    let mut log = FixpointLog::default();
    log.passes.push(store.stats());
    loop {
        let snapshot = store.clone();
        for p in &g.productions {
            for (ctx, partners) in &snapshot.map {
                let Some(merged) = graft(p.combined(), &mpath, ctx.repr()) else {
                    continue;
                };
                let mother = merged.resolve(&mpath).expect("rule keeps its mother");
                for i in 0..p.arity() {
                    let slot = daughter_path(i);
                    let slot_node = merged.resolve(&slot).expect("rule keeps its daughters");
                    let child = restrict(&merged.extract(slot_node), &g.restrictor);
                    store.touch(child.clone());
                    for (lex, binds) in partners {
                        let rewritten = rebind(&merged, mother, slot_node, binds, candidates);
                        store.add(child.clone(), lex.clone(), rewritten);
                    }
                    for j in 0..p.arity() {
                        if j == i {
                            continue;
                        }
                        let sister = daughter_path(j);
                        for (sub, subpartners) in &inner.map {
                            let Some(with_sister) = graft(&merged, &sister, sub.repr()) else {
                                continue;
                            };
                            let at_slot = with_sister.resolve(&slot).expect("slot survives");
                            let at_sister = with_sister.resolve(&sister).expect("sister survives");
                            let refined = restrict(&with_sister.extract(at_slot), &g.restrictor);
                            store.touch(refined.clone());
                            for (lex, binds) in subpartners {
                                let rewritten =
                                    rebind(&with_sister, at_sister, at_slot, binds, candidates);
                                store.add(refined.clone(), lex.clone(), rewritten);
                            }
                        }
                    }
                }
            }
        }
        log.passes.push(store.stats());
        if store == snapshot {
            break;
        }
    }
    (store, log)
}

fn distill(store: &TripleStore, kind: DomainKind, hash: &str) -> DomainSet {
    let mut map: BTreeMap<(Sym, Sym), Binds> = BTreeMap::new();
    for (sign, partners) in &store.map {
        let Some(s_cat) = sign.category() else { continue };
        for (lex, binds) in partners {
            let Some(l_cat) = lex.category() else { continue };
            map.entry((s_cat.clone(), l_cat.clone()))
                .or_default()
                .extend(binds.iter().cloned());
        }
    }
    DomainSet {
        kind,
        grammar_hash: hash.to_string(),
        map,
    }
}

pub fn compute_inner(g: &Grammar) -> (DomainSet, FixpointLog) {
    let candidates = bind_candidates(&g.restrictor);
    let (store, log) = abstract_inner(g, &candidates);
    (distill(&store, DomainKind::Inner, g.source_hash()), log)
}

/// Compute outer domains on top of previously computed inner domains.
/// The inner set must come from the same grammar text.
pub fn compute_outer(g: &Grammar, inner: &DomainSet) -> Result<(DomainSet, FixpointLog)> {
    if inner.kind != DomainKind::Inner {
        return Err(Error::Internal(format!(
            "outer computation needs inner domains, got {}",
            inner.kind
        )));
    }
    if inner.grammar_hash != g.source_hash() {
        return Err(Error::StaleDomains {
            cached: inner.grammar_hash.clone(),
            current: g.source_hash().to_string(),
        });
    }
    let candidates = bind_candidates(&g.restrictor);
    // The fixpoint needs full abstract-sign precision, which category-level
    // sets no longer carry, so rebuild and check it matches what we were
    // handed.
    let (inner_store, _) = abstract_inner(g, &candidates);
    if distill(&inner_store, DomainKind::Inner, g.source_hash()) != *inner {
        return Err(Error::Internal(
            "supplied inner domains do not match this grammar".into(),
        ));
    }
    let (store, log) = abstract_outer(g, &inner_store, &candidates);
    Ok((distill(&store, DomainKind::Outer, g.source_hash()), log))
}

/// Inner and outer domains for one grammar, as persisted in a cache file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompiledDomains {
    pub inner: DomainSet,
    pub outer: DomainSet,
}

impl CompiledDomains {
    pub fn grammar_hash(&self) -> &str {
        self.inner.grammar_hash()
    }

    /// Guard against using a cache compiled from different grammar text.
    pub fn check_fresh(&self, g: &Grammar) -> Result<()> {
        for set in [&self.inner, &self.outer] {
            if set.grammar_hash() != g.source_hash() {
                return Err(Error::StaleDomains {
                    cached: set.grammar_hash().to_string(),
                    current: g.source_hash().to_string(),
                });
            }
        }
        Ok(())
    }
}

pub fn compile_domains(g: &Grammar) -> CompiledDomains {
    let (inner, _) = compute_inner(g);
    let (outer, _) = compute_outer(g, &inner).expect("inner was just computed for this grammar");
    CompiledDomains { inner, outer }
}

const DOMAINS_MAGIC: &str = "bagforge-domains";
const DOMAINS_VERSION: &str = "v1";

/// Serialize as a line-oriented text file: a header naming the format
/// version and grammar hash, then one line per `(sign, lex)` row with its
/// pairs comma-separated.  Everything is sorted, so equal domains render
/// byte-identically.
pub fn render_domains(d: &CompiledDomains) -> String {
    let mut out = format!(
        "{DOMAINS_MAGIC} {DOMAINS_VERSION} {}\n",
        d.inner.grammar_hash()
    );
    for set in [&d.inner, &d.outer] {
        for ((sign, lex), binds) in set.iter() {
            let pairs: Vec<String> = binds.iter().map(|(p, q)| format!("{p}~{q}")).collect();
            out.push_str(&format!(
                "{} {sign} :: {lex} :: {}\n",
                set.kind(),
                pairs.join(", ")
            ));
        }
    }
    out
}

pub fn parse_domains(text: &str) -> Result<CompiledDomains> {
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(Error::DomainsVersion(String::new()));
    };
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 3 || parts[0] != DOMAINS_MAGIC || parts[1] != DOMAINS_VERSION {
        return Err(Error::DomainsVersion(header.trim().to_string()));
    }
    let hash = parts[2].to_string();

    let mut maps: BTreeMap<DomainKind, BTreeMap<(Sym, Sym), Binds>> = BTreeMap::new();
    maps.insert(DomainKind::Inner, BTreeMap::new());
    maps.insert(DomainKind::Outer, BTreeMap::new());
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(" :: ").collect();
        let err = |msg: &str| Error::DomainsFormat {
            line: line_no,
            msg: msg.to_string(),
        };
        if fields.len() != 3 {
            return Err(err("expected `<kind> <sign> :: <lex> :: <pairs>`"));
        }
        let head: Vec<&str> = fields[0].split_whitespace().collect();
        let [kind_src, sign_cat] = head[..] else {
            return Err(err("expected `<kind> <sign>` before the first `::`"));
        };
        let kind = match kind_src {
            "inner" => DomainKind::Inner,
            "outer" => DomainKind::Outer,
            other => return Err(err(&format!("unknown domain kind `{other}`"))),
        };
        let lex_cat = fields[1].trim();
        if lex_cat.is_empty() || lex_cat.contains(char::is_whitespace) {
            return Err(err("bad lexical category"));
        }
        let mut binds = Binds::new();
        for pair_src in fields[2].split(", ") {
            let Some((p_src, q_src)) = pair_src.split_once('~') else {
                return Err(err(&format!("pair `{pair_src}` is missing `~`")));
            };
            let (Some(p), Some(q)) = (Path::parse(p_src), Path::parse(q_src)) else {
                return Err(err(&format!("bad path in pair `{pair_src}`")));
            };
            binds.insert((p, q));
        }
        if binds.is_empty() {
            return Err(err("row without pairs"));
        }
        maps.get_mut(&kind)
            .expect("both kinds preinserted")
            .entry((Sym::from(sign_cat), Sym::from(lex_cat)))
            .or_default()
            .extend(binds);
    }
    let mut take = |kind: DomainKind| DomainSet {
        kind,
        grammar_hash: hash.clone(),
        map: maps.remove(&kind).expect("both kinds preinserted"),
    };
    Ok(CompiledDomains {
        inner: take(DomainKind::Inner),
        outer: take(DomainKind::Outer),
    })
}

pub fn save_domains(d: &CompiledDomains, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, render_domains(d))?;
    Ok(())
}

pub fn load_domains(path: &std::path::Path) -> Result<CompiledDomains> {
    parse_domains(&std::fs::read_to_string(path)?)
}

/// Path pairs under which `lex` can share a semantic index with a result
/// whose sign is `sign`, according to compiled outer domains.  A pair
/// counts when the values the two paths reach unify.  A path that runs
/// into missing structure is unconstrained there, so it stays live: the
/// combination that would relate the two signs is free to create it.
/// Only a path walled off by an atom or index is dead.
pub fn lex_in_outer_pairs(
    outer: &DomainSet,
    sign: &FeatureStructure,
    lex: &FeatureStructure,
) -> Binds {
    let mut out = Binds::new();
    let (Some(s_cat), Some(l_cat)) = (sign.category(), lex.category()) else {
        return out;
    };
    let Some(pairs) = outer.map.get(&(s_cat, l_cat)) else {
        return out;
    };
    for (p, q) in pairs {
        if pair_live(sign, p, lex, q) {
            out.insert((p.clone(), q.clone()));
        }
    }
    out
}

/// Decision form of [`lex_in_outer_pairs`], short-circuiting on the first
/// live pair.
pub fn lex_in_outer(outer: &DomainSet, sign: &FeatureStructure, lex: &FeatureStructure) -> bool {
    let (Some(s_cat), Some(l_cat)) = (sign.category(), lex.category()) else {
        return false;
    };
    let Some(pairs) = outer.map.get(&(s_cat, l_cat)) else {
        return false;
    };
    pairs.iter().any(|(p, q)| pair_live(sign, p, lex, q))
}

fn pair_live(sign: &FeatureStructure, p: &Path, lex: &FeatureStructure, q: &Path) -> bool {
    match (sign.probe(p), lex.probe(q)) {
        (Probe::Blocked, _) | (_, Probe::Blocked) => false,
        (Probe::Open, _) | (_, Probe::Open) => true,
        (Probe::Value(a), Probe::Value(b)) => unifiable(&sign.extract(a), &lex.extract(b)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bag::parse_bag;
    use crate::fs::FsBuilder;
    use crate::grammar::{parse_grammar, tests::FIG1};

    fn fig1() -> Grammar {
        parse_grammar(FIG1).unwrap()
    }

    fn fig1_domains() -> CompiledDomains {
        compile_domains(&fig1())
    }

    fn row_set(set: &DomainSet) -> BTreeMap<(String, String), BTreeSet<String>> {
        set.iter()
            .map(|((s, l), binds)| {
                (
                    (s.to_string(), l.to_string()),
                    binds.iter().map(|(p, q)| format!("{p}~{q}")).collect(),
                )
            })
            .collect()
    }

    fn table(rows: &[(&str, &str, &[&str])]) -> BTreeMap<(String, String), BTreeSet<String>> {
        rows.iter()
            .map(|(s, l, pairs)| {
                (
                    (s.to_string(), l.to_string()),
                    pairs.iter().map(|p| p.to_string()).collect(),
                )
            })
            .collect()
    }

    const A1A1: &[&str] = &["sem.arg1~sem.arg1"];
    const A1_PREP: &[&str] = &["sem.arg1~sem.arg1", "sem.arg1~sem.arg3"];
    const A1_VERB: &[&str] = &["sem.arg1~sem.arg2", "sem.arg1~sem.arg3"];

    #[test]
    fn outer_table_of_the_seven_rule_fragment_is_exact() {
        let d = fig1_domains();
        // Hand-derived, complete. Notable absences are load-bearing: no
        // (S, _) row because nothing is outside the start; no (NP, Det),
        // (NP, N) or (NP, A) because a finished NP shares indices with the
        // outside only through its own arg1; no (N, N) or (Det, Det)
        // because two of those always sit in differently-indexed phrases.
        let expected = table(&[
            ("A", "A", A1A1),
            ("A", "Det", A1A1),
            ("A", "N", A1A1),
            ("A", "P", A1_PREP),
            ("A", "Vtra", A1_VERB),
            ("Det", "A", A1A1),
            ("Det", "N", A1A1),
            ("Det", "P", A1_PREP),
            ("Det", "Vtra", A1_VERB),
            ("N", "A", A1A1),
            ("N", "Det", A1A1),
            ("N", "P", A1_PREP),
            ("N", "Vtra", A1_VERB),
            ("N1", "A", A1A1),
            ("N1", "Det", A1A1),
            ("N1", "P", A1_PREP),
            ("N1", "Vtra", A1_VERB),
            ("NP", "P", &["sem.arg1~sem.arg3"]),
            ("NP", "Vtra", A1_VERB),
            ("P", "A", &["sem.arg1~sem.arg1", "sem.arg3~sem.arg1"]),
            ("P", "Det", &["sem.arg1~sem.arg1", "sem.arg3~sem.arg1"]),
            ("P", "N", &["sem.arg1~sem.arg1", "sem.arg3~sem.arg1"]),
            (
                "P",
                "P",
                &[
                    "sem.arg1~sem.arg1",
                    "sem.arg1~sem.arg3",
                    "sem.arg3~sem.arg1",
                ],
            ),
            ("P", "Vtra", A1_VERB),
            ("PP", "A", A1A1),
            ("PP", "Det", A1A1),
            ("PP", "N", A1A1),
            ("PP", "P", A1_PREP),
            ("PP", "Vtra", A1_VERB),
            ("VP", "A", &["sem.arg2~sem.arg1"]),
            ("VP", "Det", &["sem.arg2~sem.arg1"]),
            ("VP", "N", &["sem.arg2~sem.arg1"]),
            ("VP", "P", &["sem.arg2~sem.arg1"]),
            ("Vtra", "A", &["sem.arg2~sem.arg1", "sem.arg3~sem.arg1"]),
            ("Vtra", "Det", &["sem.arg2~sem.arg1", "sem.arg3~sem.arg1"]),
            ("Vtra", "N", &["sem.arg2~sem.arg1", "sem.arg3~sem.arg1"]),
            ("Vtra", "P", &["sem.arg2~sem.arg1", "sem.arg3~sem.arg1"]),
        ]);
        assert_eq!(row_set(&d.outer), expected);
    }

    #[test]
    fn inner_domains_pair_roots_with_their_possible_leaves() {
        let d = fig1_domains();
        let rows = row_set(&d.inner);
        // A lexical sign's inner domain is itself, sharing every non-atom
        // restricted path.
        assert_eq!(
            rows[&("Det".into(), "Det".into())],
            ["sem~sem", "sem.arg1~sem.arg1"]
                .map(String::from)
                .into_iter()
                .collect::<BTreeSet<_>>()
        );
        // A determiner inside an N1 can only hang off a modifier PP, where
        // its referent surfaces as the N1's arg3.
        assert_eq!(
            rows[&("N1".into(), "Det".into())],
            BTreeSet::from(["sem.arg3~sem.arg1".to_string()])
        );
        assert_eq!(
            rows[&("NP".into(), "Det".into())],
            ["sem.arg1~sem.arg1", "sem.arg3~sem.arg1"]
                .map(String::from)
                .into_iter()
                .collect::<BTreeSet<_>>()
        );
        assert_eq!(
            rows[&("S".into(), "Vtra".into())],
            ["sem~sem", "sem.arg2~sem.arg2", "sem.arg3~sem.arg3"]
                .map(String::from)
                .into_iter()
                .collect::<BTreeSet<_>>()
        );
        // Only preterminal categories appear on the lexical side.
        for (_, lex) in d.inner.iter().map(|(k, _)| k) {
            assert!(["A", "Det", "N", "P", "Vtra"].contains(&lex.as_str()));
        }
    }

    #[test]
    fn single_rule_grammar_has_trivial_inner_and_empty_outer() {
        let g = parse_grammar(
            "param sem\nstart N1\nrule r: N1[sem=#0] -> N[sem=#0]\nlex dog: N[sem=#1]\n",
        )
        .unwrap();
        let d = compile_domains(&g);
        let expected = table(&[("N", "N", &["sem~sem"]), ("N1", "N", &["sem~sem"])]);
        assert_eq!(row_set(&d.inner), expected);
        // Nothing is ever outside anything: the tree is a single spine.
        assert!(d.outer.is_empty());
    }

    #[test]
    fn fixpoint_logs_grow_monotonically_and_stabilize() {
        let g = fig1();
        let (inner, inner_log) = compute_inner(&g);
        let (_, outer_log) = compute_outer(&g, &inner).unwrap();
        for log in [&inner_log, &outer_log] {
            assert!(log.passes.len() >= 2);
            assert!(log.is_monotone());
            let last = log.passes[log.passes.len() - 1];
            let prev = log.passes[log.passes.len() - 2];
            assert_eq!(last, prev, "loop must stop on a pass that adds nothing");
        }
    }

    #[test]
    fn outer_computation_rejects_foreign_or_miskinded_inputs() {
        let g = fig1();
        let other = parse_grammar(
            "param sem\nstart N1\nrule r: N1[sem=#0] -> N[sem=#0]\nlex dog: N[sem=#1]\n",
        )
        .unwrap();
        let (stale_inner, _) = compute_inner(&other);
        match compute_outer(&g, &stale_inner) {
            Err(Error::StaleDomains { cached, current }) => {
                assert_eq!(cached, other.source_hash());
                assert_eq!(current, g.source_hash());
            }
            other => panic!("expected StaleDomains, got {other:?}"),
        }
        let d = compile_domains(&g);
        match compute_outer(&g, &d.outer) {
            Err(Error::Internal(msg)) => assert!(msg.contains("inner"), "{msg}"),
            other => panic!("expected Internal, got {other:?}"),
        }
        assert!(d.check_fresh(&g).is_ok());
        match d.check_fresh(&other) {
            Err(Error::StaleDomains { .. }) => {}
            other => panic!("expected StaleDomains, got {other:?}"),
        }
    }

    #[test]
    fn domain_files_round_trip_and_reject_corruption() {
        let d = fig1_domains();
        let text = render_domains(&d);
        assert!(text.starts_with("bagforge-domains v1 "));
        assert!(text.contains(
            "outer NP :: Vtra :: sem.arg1~sem.arg2, sem.arg1~sem.arg3\n"
        ));
        let back = parse_domains(&text).unwrap();
        assert_eq!(back, d);
        // Rendering is canonical, so the round trip is byte-stable.
        assert_eq!(render_domains(&back), text);

        let tampered = text.replacen("bagforge-domains v1", "bagforge-domains v9", 1);
        match parse_domains(&tampered) {
            Err(Error::DomainsVersion(h)) => assert!(h.contains("v9")),
            other => panic!("expected DomainsVersion, got {other:?}"),
        }
        let corrupt = format!("{text}outer NP\n");
        match parse_domains(&corrupt) {
            Err(Error::DomainsFormat { line, .. }) => {
                assert_eq!(line, text.lines().count() + 1)
            }
            other => panic!("expected DomainsFormat, got {other:?}"),
        }
        let bad_pair = format!("{text}outer NP :: P :: sem.arg1\n");
        assert!(matches!(
            parse_domains(&bad_pair),
            Err(Error::DomainsFormat { .. })
        ));
    }

    #[test]
    fn concrete_signs_share_indices_only_on_compiled_pairs() {
        let g = fig1();
        let d = fig1_domains();
        let bag = parse_bag("the 1\ndog 1\ndog 2\nwith 2 1\n", &g).unwrap();
        let the1 = &bag.elements[0].signs[0];
        let dog1 = &bag.elements[1].signs[0];
        let dog2 = &bag.elements[2].signs[0];
        let with21 = &bag.elements[3].signs[0];

        assert!(lex_in_outer(&d.outer, the1, dog1));
        assert_eq!(
            lex_in_outer_pairs(&d.outer, the1, dog1),
            Binds::from([(
                Path::parse("sem.arg1").unwrap(),
                Path::parse("sem.arg1").unwrap()
            )])
        );
        // Same categories, different referents: the pair exists but the
        // index values clash.
        assert!(!lex_in_outer(&d.outer, the1, dog2));
        // No (N, N) row at all.
        assert!(!lex_in_outer(&d.outer, dog1, dog2));

        // A phrase-level sign: NP with arg1 = 1 connects to a preposition
        // whose object is 1, not to one whose object is 2.
        let mut b = FsBuilder::new();
        let root = b.complex();
        let cat = b.ensure_path(root, &Path::parse("cat").unwrap()).unwrap();
        let atom = b.atom(Sym::from("NP"));
        b.uni(cat, atom).unwrap();
        let arg1 = b
            .ensure_path(root, &Path::parse("sem.arg1").unwrap())
            .unwrap();
        let idx = b.index(Sym::from("1"));
        b.uni(arg1, idx).unwrap();
        let np = b.extract(root).unwrap();
        assert!(lex_in_outer(&d.outer, &np, with21));
        let with12 = &parse_bag("with 1 2\ndog 1\n", &g).unwrap().elements[0].signs[0];
        assert!(!lex_in_outer(&d.outer, &np, with12));
    }
}
