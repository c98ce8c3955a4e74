//! Slow reference implementations for cross-checking the engine.
//!
//! [`permutation_oracle`] answers the same question as [`crate::generate`]
//! by brute force: try every ordering of the bag and parse each one as an
//! ordinary string, sharing chart work along common prefixes.  It never
//! touches bitmasks, agendas, or domains, so agreement with the engine is
//! meaningful.
//!
//! [`derivation_oracle`] recomputes outer domains by definition instead of
//! by fixpoint: it enumerates every partial derivation from the start sign
//! down to a depth bound, and records which paths of a frontier sign are
//! token-identical with paths of a lexical sign elsewhere in the same
//! form.  The result must be contained in the compiled table.

use std::collections::{BTreeMap, BTreeSet};

use crate::bag::{require_connected, Bag};
use crate::domains::{Binds, DomainKind, DomainSet};
use crate::error::{Error, Result};
use crate::fs::{unifiable, unify, BKind, Clash, FeatureStructure, FsBuilder, Path, Sym};
use crate::grammar::{daughter_label, Grammar, MOTHER_LABEL};

/// Largest bag the permutation oracle will accept; beyond this the
/// factorial blows up no matter how much sharing there is.
pub const ORACLE_BAG_LIMIT: usize = 9;

/// Deepest partial derivations [`derivation_oracle`] will enumerate.
pub const ORACLE_DEPTH_LIMIT: usize = 6;

/// Hard cap on enumerated forms; exceeding it is an error rather than a
/// silent truncation, so a returned set is always the complete one for
/// its depth.
pub const ORACLE_FORM_LIMIT: usize = 300_000;

/// Every ordering of `bag` the grammar licenses, found by parsing each
/// permutation as a plain string.  `start` overrides the grammar's start
/// category.
pub fn permutation_oracle(g: &Grammar, bag: &Bag, start: Option<&str>) -> Result<Vec<String>> {
    if bag.len() > ORACLE_BAG_LIMIT {
        return Err(Error::OracleGuard {
            what: "permutation oracle bag",
            size: bag.len(),
            limit: ORACLE_BAG_LIMIT,
        });
    }
    require_connected(bag)?;
    let start_sign = match start {
        Some(cat) => g.start_sign(cat)?,
        None => g.start.clone(),
    };
    let mut parser = OrderedParser {
        g,
        bag,
        chart: Vec::new(),
    };
    let mut found = BTreeSet::new();
    let mut seq = Vec::new();
    parser.search(0, &mut seq, &start_sign, &mut found);
    Ok(found.into_iter().collect())
}

/// An edge over a span of the ordered prefix under test.
#[derive(Clone, PartialEq, Eq)]
enum OEdge {
    Inactive {
        from: usize,
        to: usize,
        sign: FeatureStructure,
    },
    Active {
        from: usize,
        to: usize,
        production: usize,
        matched: usize,
        fs: FeatureStructure,
    },
}

struct OrderedParser<'a> {
    g: &'a Grammar,
    bag: &'a Bag,
    chart: Vec<OEdge>,
}

impl<'a> OrderedParser<'a> {
    fn search(
        &mut self,
        used: u64,
        seq: &mut Vec<usize>,
        start_sign: &FeatureStructure,
        found: &mut BTreeSet<String>,
    ) {
        let n = self.bag.len();
        if seq.len() == n {
            let full = self.chart.iter().any(|e| {
                matches!(e, OEdge::Inactive { from: 0, to, sign } if *to == n
                    && unifiable(sign, start_sign))
            });
            if full {
                let words: Vec<&str> = seq
                    .iter()
                    .map(|&p| self.bag.elements[p].word.as_str())
                    .collect();
                found.insert(words.join(" "));
            }
            return;
        }
        for p in 0..n {
            if used & (1 << p) != 0 {
                continue;
            }
            // Identical elements are interchangeable: fix their relative
            // order instead of permuting them.
            let twin_waiting = (0..p).any(|q| {
                used & (1 << q) == 0
                    && self.bag.elements[q].word == self.bag.elements[p].word
                    && self.bag.elements[q].signs == self.bag.elements[p].signs
            });
            if twin_waiting {
                continue;
            }
            let mark = self.chart.len();
            self.extend(seq.len(), p);
            seq.push(p);
            self.search(used | (1 << p), seq, start_sign, found);
            seq.pop();
            self.chart.truncate(mark);
        }
    }

    /// Place bag element `p` at string position `t` and close the chart.
    /// Every new edge ends at `t + 1`, so only combinations with existing
    /// edges ending at its start are possible.
    fn extend(&mut self, t: usize, p: usize) {
        let mut queue: Vec<OEdge> = self.bag.elements[p]
            .signs
            .iter()
            .map(|sign| OEdge::Inactive {
                from: t,
                to: t + 1,
                sign: sign.clone(),
            })
            .collect();
        while let Some(edge) = queue.pop() {
            if self.chart.contains(&edge) {
                continue;
            }
            self.chart.push(edge.clone());
            let OEdge::Inactive { from, to, sign } = edge else {
                continue;
            };
            for pi in 0..self.g.productions.len() {
                let combined = self.g.productions[pi].combined();
                let nested = sign.nest(&Path(vec![daughter_label(0)]));
                if let Some(fs) = unify(combined, &nested) {
                    queue.push(self.advance(pi, 1, fs, from, to));
                }
            }
            for k in 0..self.chart.len() {
                let OEdge::Active {
                    from: h,
                    to: i,
                    production,
                    matched,
                    fs,
                } = &self.chart[k]
                else {
                    continue;
                };
                if *i != from {
                    continue;
                }
                let slot = Path(vec![daughter_label(*matched)]);
                if let Some(next) = unify(fs, &sign.nest(&slot)) {
                    queue.push(self.advance(*production, matched + 1, next, *h, to));
                }
            }
        }
    }

    fn advance(
        &self,
        production: usize,
        matched: usize,
        fs: FeatureStructure,
        from: usize,
        to: usize,
    ) -> OEdge {
        if matched == self.g.productions[production].arity() {
            let mother = fs
                .extract_at(&Path(vec![Sym::from(MOTHER_LABEL)]))
                .expect("completed rule keeps its mother");
            OEdge::Inactive {
                from,
                to,
                sign: mother,
            }
        } else {
            OEdge::Active {
                from,
                to,
                production,
                matched,
                fs,
            }
        }
    }
}

/// One choice of how far to rewrite a slot in a partial derivation.
#[derive(Clone)]
enum Form<'a> {
    /// Leave the sign on the frontier unexpanded.
    Stop,
    /// Rewrite to a lexical entry.
    Word(&'a FeatureStructure),
    /// Apply a production and keep rewriting below it.
    Rule(usize, Vec<Form<'a>>),
}

/// The outer domains implied by exhaustive enumeration of partial
/// derivations from the start sign, `depth` rule applications deep.
/// Guaranteed complete for the given depth; enumeration past
/// [`ORACLE_FORM_LIMIT`] forms is refused instead of truncated.
pub fn derivation_oracle(g: &Grammar, depth: usize) -> Result<DomainSet> {
    if depth > ORACLE_DEPTH_LIMIT {
        return Err(Error::OracleGuard {
            what: "derivation depth",
            size: depth,
            limit: ORACLE_DEPTH_LIMIT,
        });
    }
    let mut by_cat: BTreeMap<Sym, Vec<&FeatureStructure>> = BTreeMap::new();
    for entries in g.lexicon.values() {
        for e in entries {
            if let Some(cat) = e.category() {
                by_cat.entry(cat).or_default().push(e);
            }
        }
    }
    let universe = bind_universe(g);
    let mut rows: BTreeMap<(Sym, Sym), Binds> = BTreeMap::new();
    let mut budget = ORACLE_FORM_LIMIT;
    if depth > 0 {
        let start = g.start_category();
        for (pi, p) in g.productions.iter().enumerate() {
            if p.mother_category() != start {
                continue;
            }
            let mut kid_lists = Vec::new();
            for i in 0..p.arity() {
                kid_lists.push(forms(g, &by_cat, &p.daughter_category(i), depth - 1, &mut budget)?);
            }
            // The root product is streamed: each combination is realized,
            // harvested, and dropped.
            let mut odo = vec![0usize; kid_lists.len()];
            if kid_lists.iter().all(|l| !l.is_empty()) {
                loop {
                    if budget == 0 {
                        return Err(budget_guard());
                    }
                    budget -= 1;
                    let kids: Vec<&Form> =
                        odo.iter().zip(&kid_lists).map(|(&k, l)| &l[k]).collect();
                    harvest(g, pi, &kids, &universe, &mut rows);
                    let mut carry = odo.len();
                    while carry > 0 {
                        odo[carry - 1] += 1;
                        if odo[carry - 1] < kid_lists[carry - 1].len() {
                            break;
                        }
                        odo[carry - 1] = 0;
                        carry -= 1;
                    }
                    if carry == 0 {
                        break;
                    }
                }
            }
        }
    }
    Ok(DomainSet::from_rows(
        DomainKind::Outer,
        g.source_hash().to_string(),
        rows,
    ))
}

fn budget_guard() -> Error {
    Error::OracleGuard {
        what: "derivation form budget",
        size: ORACLE_FORM_LIMIT + 1,
        limit: ORACLE_FORM_LIMIT,
    }
}

/// All ways to rewrite one slot of category `cat` using at most `depth`
/// rule applications.
fn forms<'a>(
    g: &'a Grammar,
    by_cat: &BTreeMap<Sym, Vec<&'a FeatureStructure>>,
    cat: &Sym,
    depth: usize,
    budget: &mut usize,
) -> Result<Vec<Form<'a>>> {
    let mut out = Vec::new();
    if *budget == 0 {
        return Err(budget_guard());
    }
    *budget -= 1;
    out.push(Form::Stop);
    if let Some(entries) = by_cat.get(cat) {
        for e in entries {
            if *budget == 0 {
                return Err(budget_guard());
            }
            *budget -= 1;
            out.push(Form::Word(e));
        }
    }
    if depth == 0 {
        return Ok(out);
    }
    for (pi, p) in g.productions.iter().enumerate() {
        if p.mother_category() != *cat {
            continue;
        }
        let mut combos: Vec<Vec<Form>> = vec![Vec::new()];
        for i in 0..p.arity() {
            let kid_forms = forms(g, by_cat, &p.daughter_category(i), depth - 1, budget)?;
            let mut next = Vec::new();
            for prefix in &combos {
                for kid in &kid_forms {
                    let mut kids = prefix.clone();
                    kids.push(kid.clone());
                    next.push(kids);
                }
            }
            combos = next;
        }
        for kids in combos {
            if *budget == 0 {
                return Err(budget_guard());
            }
            *budget -= 1;
            out.push(Form::Rule(pi, kids));
        }
    }
    Ok(out)
}

/// Realize one root production application and record every path pair a
/// frontier sign shares with a lexical frontier sign elsewhere.
fn harvest(
    g: &Grammar,
    pi: usize,
    kids: &[&Form],
    universe: &[Path],
    rows: &mut BTreeMap<(Sym, Sym), Binds>,
) {
    let mut b = FsBuilder::new();
    let mut frontier: Vec<(usize, bool)> = Vec::new();
    let root = b.import(g.productions[pi].combined());
    let realized = (|| -> std::result::Result<(), Clash> {
        for (i, kid) in kids.iter().enumerate() {
            let slot = b.ensure_path(root, &Path(vec![daughter_label(i)]))?;
            apply(&mut b, g, slot, kid, &mut frontier)?;
        }
        Ok(())
    })();
    if realized.is_err() {
        return;
    }
    let cats: Vec<Option<Sym>> = frontier.iter().map(|(id, _)| cat_of(&mut b, *id)).collect();
    let resolved: Vec<Vec<Option<usize>>> = frontier
        .iter()
        .map(|(id, _)| universe.iter().map(|p| b.peek_path(*id, p)).collect())
        .collect();
    for si in 0..frontier.len() {
        let Some(sign_cat) = &cats[si] else { continue };
        for (li, (_, is_lex)) in frontier.iter().enumerate() {
            if !is_lex || li == si {
                continue;
            }
            let Some(lex_cat) = &cats[li] else { continue };
            let mut pairs: Vec<(Path, Path)> = Vec::new();
            for (pidx, p) in universe.iter().enumerate() {
                let Some(sn) = resolved[si][pidx] else { continue };
                if matches!(b.kind(sn), BKind::Atom(_)) {
                    continue;
                }
                for (qidx, q) in universe.iter().enumerate() {
                    if resolved[li][qidx] == Some(sn) {
                        pairs.push((p.clone(), q.clone()));
                    }
                }
            }
            if !pairs.is_empty() {
                rows.entry((sign_cat.clone(), lex_cat.clone()))
                    .or_default()
                    .extend(pairs);
            }
        }
    }
}

fn apply<'a>(
    b: &mut FsBuilder,
    g: &Grammar,
    slot: usize,
    form: &Form<'a>,
    frontier: &mut Vec<(usize, bool)>,
) -> std::result::Result<(), Clash> {
    match form {
        Form::Stop => frontier.push((slot, false)),
        Form::Word(entry) => {
            let id = b.import(entry);
            b.uni(slot, id)?;
            frontier.push((slot, true));
        }
        Form::Rule(pi, kids) => {
            let r = b.import(g.productions[*pi].combined());
            let mother = b.ensure_path(r, &Path(vec![Sym::from(MOTHER_LABEL)]))?;
            b.uni(slot, mother)?;
            for (i, kid) in kids.iter().enumerate() {
                let s = b.ensure_path(r, &Path(vec![daughter_label(i)]))?;
                apply(b, g, s, kid, frontier)?;
            }
        }
    }
    Ok(())
}

fn cat_of(b: &mut FsBuilder, id: usize) -> Option<Sym> {
    let node = b.peek_path(id, &Path(vec![Sym::from("cat")]))?;
    match b.kind(node) {
        BKind::Atom(sym) => Some(sym),
        _ => None,
    }
}

/// Restrictor paths plus all their nonempty prefixes: the same universe
/// the domain compiler records binds over.
fn bind_universe(g: &Grammar) -> Vec<Path> {
    let mut set = BTreeSet::new();
    for p in g.restrictor.paths() {
        for k in 1..=p.0.len() {
            set.insert(Path(p.0[..k].to_vec()));
        }
    }
    set.into_iter().collect()
}
