//! Chart generation over bags.
//!
//! Ordinary chart parsing indexes edges by string position; here the input
//! is unordered, so an edge instead carries the *set* of bag positions it
//! consumes, as a bitmask, and two edges may combine whenever their masks
//! are disjoint and the grammar unifies them.  The output is every ordering
//! of the bag the grammar licenses, read off the derivation forest.
//!
//! Equal results over the same positions are packed: one edge, several
//! derivation sources.  With pruning enabled, a completed edge is admitted
//! only if it passes the outer-domain connectivity test; everything that
//! would have been built on top of a rejected edge is never explored.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::time::{Duration, Instant};

use crate::bag::{require_connected, Bag};
use crate::domains::DomainSet;
use crate::error::{Error, Result};
use crate::fs::{unifiable, unify, FeatureStructure, Path, Sym};
use crate::grammar::{daughter_label, Grammar, MOTHER_LABEL};
use crate::prune::PruneContext;

/// Which end of the agenda to take work from.  Results must not depend on
/// this; it exists so tests can prove they do not.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AgendaOrder {
    #[default]
    Fifo,
    Lifo,
}

#[derive(Clone, Debug)]
pub struct GenOpts {
    pub prune: bool,
    /// Collect bracketed derivations, not just strings.
    pub all_derivations: bool,
    /// Record one line per connectivity test.
    pub trace: bool,
    pub agenda: AgendaOrder,
    /// Stop as soon as one complete result is admitted.
    pub stop_after_first: bool,
    /// Generate for this category instead of the grammar's start symbol.
    pub start: Option<String>,
    /// Also report what every chart edge spells, solution or not.
    pub spell_edges: bool,
}

impl Default for GenOpts {
    fn default() -> Self {
        GenOpts {
            prune: true,
            all_derivations: false,
            trace: false,
            agenda: AgendaOrder::Fifo,
            stop_after_first: false,
            start: None,
            spell_edges: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct GenStats {
    /// Edges admitted to the chart, active and inactive together.
    pub edges_total: usize,
    pub edges_inactive: usize,
    pub edges_active: usize,
    /// Completed edges rejected by the connectivity test.
    pub pruned: usize,
    /// Packed result edges covering the whole bag.
    pub solutions: usize,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, Default)]
pub struct GenOutcome {
    /// Distinct orderings, sorted.
    pub strings: Vec<String>,
    /// Distinct bracketed derivations, sorted; filled in when
    /// `all_derivations` is set.
    pub derivations: Vec<String>,
    /// Distinct substrings spelled by any inactive edge, sorted; filled in
    /// when `spell_edges` is set.
    pub edge_spellings: Vec<String>,
    pub stats: GenStats,
    pub trace: Vec<String>,
}

/// How a packed edge can be derived.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Source {
    Leaf { position: usize },
    Rule { production: usize, children: Vec<usize> },
}

struct Inactive {
    sign: FeatureStructure,
    leaves: u64,
    sources: Vec<Source>,
}

struct Active {
    production: usize,
    matched: usize,
    fs: FeatureStructure,
    leaves: u64,
    children: Vec<usize>,
}

#[derive(Clone, Copy)]
enum Task {
    Inactive(usize),
    Active(usize),
}

struct Engine<'a> {
    g: &'a Grammar,
    bag: &'a Bag,
    pruner: Option<PruneContext<'a>>,
    opts: &'a GenOpts,
    all_mask: u64,
    start_sign: FeatureStructure,
    /// Per position, the positions sharing an index tag with it.
    neighbors: Vec<u64>,

    inactives: Vec<Inactive>,
    packed: HashMap<(FeatureStructure, u64), usize>,
    actives: Vec<Active>,
    active_seen: HashSet<(usize, Vec<usize>)>,
    chart_inactive: Vec<usize>,
    chart_active: Vec<usize>,
    agenda: VecDeque<Task>,

    pruned: usize,
    trace: Vec<String>,
    solutions: Vec<usize>,
    stop: bool,
}

/// Generate every ordering of `bag` admitted by `g`.  `domains` must be the
/// grammar's compiled outer domains whenever `opts.prune` is set.
pub fn generate(
    g: &Grammar,
    bag: &Bag,
    domains: Option<&DomainSet>,
    opts: &GenOpts,
) -> Result<GenOutcome> {
    let started = Instant::now();
    require_connected(bag)?;
    if let Some(outer) = domains {
        if outer.grammar_hash() != g.source_hash() {
            return Err(Error::StaleDomains {
                cached: outer.grammar_hash().to_string(),
                current: g.source_hash().to_string(),
            });
        }
    }
    let pruner = if opts.prune {
        let outer = domains.ok_or(Error::MissingDomains)?;
        let ctx = PruneContext::new(bag, outer);
        ctx.require_initial_connectivity()?;
        Some(ctx)
    } else {
        None
    };
    let start_sign = match &opts.start {
        Some(cat) => g.start_sign(cat)?,
        None => g.start.clone(),
    };
    let n = bag.len();
    let all_mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut neighbors = vec![0u64; n];
    for a in &bag.elements {
        let tags = a.tags();
        for b in &bag.elements {
            if a.position != b.position && !tags.is_disjoint(&b.tags()) {
                neighbors[a.position] |= 1 << b.position;
            }
        }
    }

    let mut engine = Engine {
        g,
        bag,
        pruner,
        opts,
        all_mask,
        start_sign,
        neighbors,
        inactives: Vec::new(),
        packed: HashMap::new(),
        actives: Vec::new(),
        active_seen: HashSet::new(),
        chart_inactive: Vec::new(),
        chart_active: Vec::new(),
        agenda: VecDeque::new(),
        pruned: 0,
        trace: Vec::new(),
        solutions: Vec::new(),
        stop: false,
    };
    engine.run();
    Ok(engine.finish(started))
}

impl<'a> Engine<'a> {
    fn run(&mut self) {
        for el in &self.bag.elements {
            for sign in &el.signs {
                self.admit_inactive(sign.clone(), 1 << el.position, Source::Leaf {
                    position: el.position,
                });
                if self.stop {
                    return;
                }
            }
        }
        while let Some(task) = self.pop() {
            match task {
                Task::Inactive(id) => self.process_inactive(id),
                Task::Active(aid) => self.process_active(aid),
            }
            if self.stop {
                return;
            }
        }
    }

    fn pop(&mut self) -> Option<Task> {
        match self.opts.agenda {
            AgendaOrder::Fifo => self.agenda.pop_front(),
            AgendaOrder::Lifo => self.agenda.pop_back(),
        }
    }

    /// Pair a newly popped inactive edge with the chart: as the first
    /// daughter of every production, and as the next daughter of every
    /// active edge popped before it.
    fn process_inactive(&mut self, id: usize) {
        self.chart_inactive.push(id);
        for pi in 0..self.g.productions.len() {
            let p = &self.g.productions[pi];
            let sign = &self.inactives[id].sign;
            let nested = sign.nest(&Path(vec![daughter_label(0)]));
            let Some(fs) = unify(p.combined(), &nested) else {
                continue;
            };
            let leaves = self.inactives[id].leaves;
            self.admit_advance(pi, 1, fs, leaves, vec![id]);
            if self.stop {
                return;
            }
        }
        for k in 0..self.chart_active.len() {
            let aid = self.chart_active[k];
            self.try_combine(aid, id);
            if self.stop {
                return;
            }
        }
    }

    fn process_active(&mut self, aid: usize) {
        self.chart_active.push(aid);
        for k in 0..self.chart_inactive.len() {
            let id = self.chart_inactive[k];
            self.try_combine(aid, id);
            if self.stop {
                return;
            }
        }
    }

    fn try_combine(&mut self, aid: usize, id: usize) {
        let a = &self.actives[aid];
        let e = &self.inactives[id];
        if a.leaves & e.leaves != 0 {
            return;
        }
        let slot = Path(vec![daughter_label(a.matched)]);
        let Some(fs) = unify(&a.fs, &e.sign.nest(&slot)) else {
            return;
        };
        let production = a.production;
        let matched = a.matched + 1;
        let leaves = a.leaves | e.leaves;
        let mut children = a.children.clone();
        children.push(id);
        self.admit_advance(production, matched, fs, leaves, children);
    }

    /// An active edge that has just matched daughter `matched - 1`: either
    /// it still needs daughters, or it completes into an inactive edge.
    fn admit_advance(
        &mut self,
        production: usize,
        matched: usize,
        fs: FeatureStructure,
        leaves: u64,
        children: Vec<usize>,
    ) {
        if matched < self.g.productions[production].arity() {
            let key = (production, children.clone());
            if !self.active_seen.insert(key) {
                return;
            }
            let aid = self.actives.len();
            self.actives.push(Active {
                production,
                matched,
                fs,
                leaves,
                children,
            });
            self.agenda.push_back(Task::Active(aid));
            return;
        }
        let mother = fs
            .extract_at(&Path(vec![Sym::from(MOTHER_LABEL)]))
            .expect("completed rule keeps its mother");
        self.admit_inactive(mother, leaves, Source::Rule {
            production,
            children,
        });
    }

    fn admit_inactive(&mut self, sign: FeatureStructure, leaves: u64, source: Source) {
        let key = (sign, leaves);
        if let Some(&id) = self.packed.get(&key) {
            // Same result, new derivation: no new combinations can follow,
            // so only the forest grows.
            if matches!(source, Source::Rule { ref children, .. } if children.contains(&id)) {
                // A rule that rebuilt the edge from itself would make the
                // forest cyclic; such a derivation is never wanted.
                return;
            }
            let sources = &mut self.inactives[id].sources;
            if !sources.contains(&source) {
                sources.push(source);
            }
            return;
        }
        let (sign, leaves) = key;
        if let Some(ctx) = &self.pruner {
            let ok = ctx.test(&sign, leaves);
            if self.opts.trace {
                let cat = sign.category().map(|c| c.to_string()).unwrap_or_else(|| "?".into());
                self.trace.push(format!(
                    "TEST {cat} leaves={} -> {}",
                    mask_str(leaves),
                    if ok { "accept" } else { "reject" }
                ));
            }
            if !ok {
                self.pruned += 1;
                return;
            }
        }
        // Rule bindings equate daughter indices, so a combined edge can only
        // span positions the bag's tags tie together.
        debug_assert!(
            self.tag_connected(leaves),
            "edge over {} spans tag-disconnected positions",
            mask_str(leaves)
        );
        let id = self.inactives.len();
        let is_solution = leaves == self.all_mask && unifiable(&sign, &self.start_sign);
        self.packed.insert((sign.clone(), leaves), id);
        self.inactives.push(Inactive {
            sign,
            leaves,
            sources: vec![source],
        });
        self.agenda.push_back(Task::Inactive(id));
        if is_solution {
            self.solutions.push(id);
            if self.opts.stop_after_first {
                self.stop = true;
            }
        }
    }

    /// Walk tag-sharing links within `mask`; a combined edge must reach all
    /// of its own positions this way.
    fn tag_connected(&self, mask: u64) -> bool {
        if mask == 0 {
            return false;
        }
        let mut reach = mask & mask.wrapping_neg();
        loop {
            let mut grown = reach;
            let mut m = reach;
            while m != 0 {
                let pos = m.trailing_zeros() as usize;
                grown |= self.neighbors[pos] & mask;
                m &= m - 1;
            }
            if grown == reach {
                return reach == mask;
            }
            reach = grown;
        }
    }

    fn finish(self, started: Instant) -> GenOutcome {
        let mut strings = BTreeSet::new();
        let mut derivations = BTreeSet::new();
        let mut spellings = BTreeSet::new();
        let mut yield_memo: HashMap<usize, BTreeSet<Vec<usize>>> = HashMap::new();
        let mut tree_memo: HashMap<usize, BTreeSet<String>> = HashMap::new();
        for &id in &self.solutions {
            for y in self.yields(id, &mut yield_memo, &mut Vec::new()) {
                let words: Vec<&str> = y
                    .iter()
                    .map(|&pos| self.bag.elements[pos].word.as_str())
                    .collect();
                strings.insert(words.join(" "));
            }
            if self.opts.all_derivations {
                derivations.extend(self.trees(id, &mut tree_memo, &mut Vec::new()));
            }
        }
        if self.opts.spell_edges {
            for id in 0..self.inactives.len() {
                for y in self.yields(id, &mut yield_memo, &mut Vec::new()) {
                    let words: Vec<&str> = y
                        .iter()
                        .map(|&pos| self.bag.elements[pos].word.as_str())
                        .collect();
                    spellings.insert(words.join(" "));
                }
            }
        }
        let stats = GenStats {
            edges_total: self.inactives.len() + self.actives.len(),
            edges_inactive: self.inactives.len(),
            edges_active: self.actives.len(),
            pruned: self.pruned,
            solutions: self.solutions.len(),
            elapsed: started.elapsed(),
        };
        GenOutcome {
            strings: strings.into_iter().collect(),
            derivations: derivations.into_iter().collect(),
            edge_spellings: spellings.into_iter().collect(),
            stats,
            trace: self.trace,
        }
    }

    /// All position sequences this edge can spell, daughters read in rule
    /// order.  `stack` guards against cyclic forests.
    fn yields(
        &self,
        id: usize,
        memo: &mut HashMap<usize, BTreeSet<Vec<usize>>>,
        stack: &mut Vec<usize>,
    ) -> BTreeSet<Vec<usize>> {
        if let Some(hit) = memo.get(&id) {
            return hit.clone();
        }
        if stack.contains(&id) {
            return BTreeSet::new();
        }
        stack.push(id);
        let mut out = BTreeSet::new();
        for source in &self.inactives[id].sources {
            match source {
                Source::Leaf { position } => {
                    out.insert(vec![*position]);
                }
                Source::Rule { children, .. } => {
                    let mut combos: Vec<Vec<usize>> = vec![Vec::new()];
                    for &child in children {
                        let child_yields = self.yields(child, memo, stack);
                        let mut next = Vec::new();
                        for prefix in &combos {
                            for y in &child_yields {
                                let mut seq = prefix.clone();
                                seq.extend(y);
                                next.push(seq);
                            }
                        }
                        combos = next;
                    }
                    out.extend(combos);
                }
            }
        }
        stack.pop();
        memo.insert(id, out.clone());
        out
    }

    /// Bracketed derivations: leaves spell their word, unary rules collapse
    /// into their daughter, wider rules wrap their daughters in parens.
    fn trees(
        &self,
        id: usize,
        memo: &mut HashMap<usize, BTreeSet<String>>,
        stack: &mut Vec<usize>,
    ) -> BTreeSet<String> {
        if let Some(hit) = memo.get(&id) {
            return hit.clone();
        }
        if stack.contains(&id) {
            return BTreeSet::new();
        }
        stack.push(id);
        let mut out = BTreeSet::new();
        for source in &self.inactives[id].sources {
            match source {
                Source::Leaf { position } => {
                    out.insert(self.bag.elements[*position].word.clone());
                }
                Source::Rule { children, .. } if children.len() == 1 => {
                    out.extend(self.trees(children[0], memo, stack));
                }
                Source::Rule { children, .. } => {
                    let mut combos: Vec<String> = vec![String::new()];
                    for (i, &child) in children.iter().enumerate() {
                        let child_trees = self.trees(child, memo, stack);
                        let mut next = Vec::new();
                        for prefix in &combos {
                            for t in &child_trees {
                                let mut s = prefix.clone();
                                if i > 0 {
                                    s.push(' ');
                                }
                                s.push_str(t);
                                next.push(s);
                            }
                        }
                        combos = next;
                    }
                    out.extend(combos.into_iter().map(|body| format!("({body})")));
                }
            }
        }
        stack.pop();
        memo.insert(id, out.clone());
        out
    }
}

fn mask_str(mask: u64) -> String {
    let mut parts = Vec::new();
    let mut m = mask;
    while m != 0 {
        parts.push((m.trailing_zeros() as usize).to_string());
        m &= m - 1;
    }
    format!("{{{}}}", parts.join(","))
}
