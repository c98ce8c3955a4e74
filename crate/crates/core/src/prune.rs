//! The run-time admissibility test for partial results.
//!
//! A candidate result that does not yet cover the whole bag must still be
//! able to reach every unconsumed word through shared semantic indices.
//! Sharing is only possible along the path pairs compiled into the outer
//! domains, so we build a graph: one vertex for the candidate, one per
//! unconsumed bag position, edges where a compiled pair is live on the
//! concrete signs.  If that graph is disconnected, no tree over the full
//! bag can contain the candidate, and the chart can drop it without losing
//! any complete result.

use std::collections::BTreeSet;

use crate::bag::Bag;
use crate::domains::{lex_in_outer, DomainSet};
use crate::error::{Error, Result};
use crate::fs::FeatureStructure;

/// Precomputed pruning state for one bag: the pairwise adjacency of the bag
/// elements themselves never changes during generation, so it is computed
/// once.  Candidate edges depend on the candidate's sign and are computed
/// per test.
pub struct PruneContext<'a> {
    bag: &'a Bag,
    outer: &'a DomainSet,
    /// Symmetric adjacency between bag positions, as bitmasks.
    lex_adj: Vec<u64>,
    all_mask: u64,
}

/// The test graph for one candidate, fully materialized for diagnostics
/// and tests; [`PruneContext::test`] itself never builds this.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConnectivityGraph {
    /// Unconsumed bag positions, ascending.
    pub remaining: Vec<usize>,
    /// Positions adjacent to the candidate result.
    pub result_edges: BTreeSet<usize>,
    /// Adjacent pairs `(i, j)`, `i < j`, among the remaining positions.
    pub lex_edges: BTreeSet<(usize, usize)>,
    pub connected: bool,
}

impl<'a> PruneContext<'a> {
    pub fn new(bag: &'a Bag, outer: &'a DomainSet) -> PruneContext<'a> {
        let n = bag.len();
        debug_assert!(n <= 64);
        let mut lex_adj = vec![0u64; n];
        for i in 0..n {
            for j in i + 1..n {
                if lex_pair_adjacent(outer, &bag.elements[i].signs, &bag.elements[j].signs) {
                    lex_adj[i] |= 1 << j;
                    lex_adj[j] |= 1 << i;
                }
            }
        }
        let all_mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        PruneContext {
            bag,
            outer,
            lex_adj,
            all_mask,
        }
    }

    pub fn bag(&self) -> &Bag {
        self.bag
    }

    /// Adjacent position pairs of the bag itself, `i < j`.
    pub fn initial_edges(&self) -> BTreeSet<(usize, usize)> {
        let mut out = BTreeSet::new();
        for (i, &mask) in self.lex_adj.iter().enumerate() {
            let mut m = mask & !((1u64 << (i + 1)) - 1);
            while m != 0 {
                let j = m.trailing_zeros() as usize;
                m &= m - 1;
                out.insert((i, j));
            }
        }
        out
    }

    /// Check the bag-only graph before generating anything: if the words
    /// cannot all reach each other, no candidate ever passes the test, so
    /// fail early with the components spelled out.
    pub fn require_initial_connectivity(&self) -> Result<()> {
        let components = self.position_components();
        if components.len() <= 1 {
            return Ok(());
        }
        let labeled = components
            .into_iter()
            .map(|c| {
                c.into_iter()
                    .map(|pos| format!("{pos}:{}", self.bag.elements[pos].word))
                    .collect()
            })
            .collect();
        Err(Error::DisconnectedGraph {
            components: labeled,
        })
    }

    fn position_components(&self) -> Vec<Vec<usize>> {
        let mut unseen = self.all_mask;
        let mut components = Vec::new();
        while unseen != 0 {
            let seed = unseen.trailing_zeros() as usize;
            let reached = self.flood(1u64 << seed, unseen);
            components.push(bits(reached));
            unseen &= !reached;
        }
        components
    }

    /// Positions of `within` reachable from the seed set over element
    /// adjacency.
    fn flood(&self, seed: u64, within: u64) -> u64 {
        let mut reached = seed & within;
        loop {
            let mut next = reached;
            let mut m = reached;
            while m != 0 {
                let j = m.trailing_zeros() as usize;
                m &= m - 1;
                next |= self.lex_adj[j] & within;
            }
            if next == reached {
                return reached;
            }
            reached = next;
        }
    }

    fn result_adjacency(&self, sign: &FeatureStructure, remaining: u64) -> u64 {
        let mut out = 0u64;
        let mut m = remaining;
        while m != 0 {
            let j = m.trailing_zeros() as usize;
            m &= m - 1;
            if self.bag.elements[j]
                .signs
                .iter()
                .any(|lex| lex_in_outer(self.outer, sign, lex))
            {
                out |= 1 << j;
            }
        }
        out
    }

    /// The admissibility test: true when every unconsumed position is
    /// reachable from the candidate.  A candidate covering the whole bag is
    /// always admissible.
    pub fn test(&self, sign: &FeatureStructure, leaves: u64) -> bool {
        let remaining = self.all_mask & !leaves;
        if remaining == 0 {
            return true;
        }
        let start = self.result_adjacency(sign, remaining);
        if start == 0 {
            return false;
        }
        self.flood(start, remaining) == remaining
    }

    /// Materialize the whole test graph; for tracing and tests.
    pub fn graph_for(&self, sign: &FeatureStructure, leaves: u64) -> ConnectivityGraph {
        let remaining = self.all_mask & !leaves;
        let result_adj = self.result_adjacency(sign, remaining);
        let mut lex_edges = BTreeSet::new();
        for (i, j) in self.initial_edges() {
            if remaining & (1 << i) != 0 && remaining & (1 << j) != 0 {
                lex_edges.insert((i, j));
            }
        }
        let connected = if remaining == 0 {
            true
        } else if result_adj == 0 {
            false
        } else {
            self.flood(result_adj, remaining) == remaining
        };
        ConnectivityGraph {
            remaining: bits(remaining),
            result_edges: bits(result_adj).into_iter().collect(),
            lex_edges,
            connected,
        }
    }
}

/// Two bag elements are adjacent when either can supply lexical material in
/// the other's outer domain, under any of their candidate entries.
fn lex_pair_adjacent(
    outer: &DomainSet,
    left: &[FeatureStructure],
    right: &[FeatureStructure],
) -> bool {
    left.iter().any(|a| {
        right
            .iter()
            .any(|b| lex_in_outer(outer, a, b) || lex_in_outer(outer, b, a))
    })
}

fn bits(mask: u64) -> Vec<usize> {
    let mut out = Vec::new();
    let mut m = mask;
    while m != 0 {
        out.push(m.trailing_zeros() as usize);
        m &= m - 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bag::parse_bag;
    use crate::domains::compile_domains;
    use crate::fs::{unify, Path};
    use crate::grammar::{daughter_label, parse_grammar, tests::FIG1, Grammar};

    /// FIG1 plus an intransitive verb, so a full sentence over a small bag
    /// exists.
    fn with_intransitive() -> String {
        format!(
            "{FIG1}rule r8: VP[sem=#0] -> Vintra[sem=#0]\n\
             lex barked: Vintra[sem.reln=bark, sem.arg2=#1]\n"
        )
    }

    /// Build a mother sign by plugging concrete kids into a named rule.
    fn apply(g: &Grammar, rule: &str, kids: &[&FeatureStructure]) -> FeatureStructure {
        let p = g
            .productions
            .iter()
            .find(|p| p.name.as_str() == rule)
            .unwrap_or_else(|| panic!("no rule {rule}"));
        let mut fs = p.combined().clone();
        for (i, kid) in kids.iter().enumerate() {
            let nested = kid.nest(&Path(vec![daughter_label(i)]));
            fs = unify(&fs, &nested).unwrap_or_else(|| panic!("{rule} rejects kid {i}"));
        }
        fs.extract_at(&Path::parse("mother").unwrap()).unwrap()
    }

    #[test]
    fn four_word_bag_starts_fully_connected() {
        let g = parse_grammar(FIG1).unwrap();
        let d = compile_domains(&g);
        let bag = parse_bag("dog 1\nthe 1\nbrown 1\nbig 1\n", &g).unwrap();
        let ctx = PruneContext::new(&bag, &d.outer);
        let all_pairs: BTreeSet<(usize, usize)> =
            [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)].into();
        assert_eq!(ctx.initial_edges(), all_pairs);
        assert!(ctx.require_initial_connectivity().is_ok());
    }

    #[test]
    fn finished_noun_phrase_cannot_reach_leftover_adjectives() {
        let g = parse_grammar(FIG1).unwrap();
        let d = compile_domains(&g);
        let bag = parse_bag("dog 1\nthe 1\nbrown 1\nbig 1\n", &g).unwrap();
        let ctx = PruneContext::new(&bag, &d.outer);

        // "the dog" as a complete NP, covering positions 0 and 1.
        let n1 = apply(&g, "r5", &[&bag.elements[0].signs[0]]);
        let np = apply(&g, "r2", &[&bag.elements[1].signs[0], &n1]);
        let graph = ctx.graph_for(&np, 0b0011);
        // The adjectives still connect to each other, but nothing links
        // them to the finished NP: modifiers can only attach inside.
        assert_eq!(graph.remaining, vec![2, 3]);
        assert!(graph.result_edges.is_empty());
        assert_eq!(graph.lex_edges, BTreeSet::from([(2, 3)]));
        assert!(!graph.connected);
        assert!(!ctx.test(&np, 0b0011));

        // "the brown dog" fails the same way against the remaining "big".
        let n1_brown = apply(&g, "r3", &[&bag.elements[2].signs[0], &n1]);
        let np_brown = apply(&g, "r2", &[&bag.elements[1].signs[0], &n1_brown]);
        assert!(!ctx.test(&np_brown, 0b0111));

        // Covering everything is always admissible.
        let n1_big = apply(&g, "r3", &[&bag.elements[3].signs[0], &n1_brown]);
        let np_full = apply(&g, "r2", &[&bag.elements[1].signs[0], &n1_big]);
        assert!(ctx.test(&np_full, 0b1111));

        // A single adjective still reaches everyone else.
        assert!(ctx.test(&bag.elements[3].signs[0], 0b1000));
    }

    #[test]
    fn subject_phrases_survive_when_a_verb_is_waiting() {
        let g = parse_grammar(&with_intransitive()).unwrap();
        let d = compile_domains(&g);
        let bag = parse_bag("dog 1\nbarked 1\nthe 1\nbrown 1\nbig 1\n", &g).unwrap();
        let ctx = PruneContext::new(&bag, &d.outer);

        // "the dog" covers {0, 2}; the verb's subject slot still points at
        // index 1, so the NP stays linked to the leftover words.
        let n1 = apply(&g, "r5", &[&bag.elements[0].signs[0]]);
        let np = apply(&g, "r2", &[&bag.elements[2].signs[0], &n1]);
        let graph = ctx.graph_for(&np, 0b00101);
        assert!(graph.connected);
        assert_eq!(graph.result_edges, BTreeSet::from([1]));
        assert!(ctx.test(&np, 0b00101));

        // "the brown dog" likewise.
        let n1_brown = apply(&g, "r3", &[&bag.elements[3].signs[0], &n1]);
        let np_brown = apply(&g, "r2", &[&bag.elements[2].signs[0], &n1_brown]);
        assert!(ctx.test(&np_brown, 0b01101));

        // But a full sentence that strands the adjectives is dead: a
        // finished S has no outer domain at all.
        let vp = apply(&g, "r8", &[&bag.elements[1].signs[0]]);
        let s = apply(&g, "r1", &[&np, &vp]);
        let graph = ctx.graph_for(&s, 0b00111);
        assert!(graph.result_edges.is_empty());
        assert_eq!(graph.lex_edges, BTreeSet::from([(3, 4)]));
        assert!(!ctx.test(&s, 0b00111));
    }

    #[test]
    fn unrelated_referents_split_the_initial_graph() {
        let g = parse_grammar(FIG1).unwrap();
        let d = compile_domains(&g);
        let bag = parse_bag("dog 1\ndog 2\n", &g).unwrap();
        let ctx = PruneContext::new(&bag, &d.outer);
        match ctx.require_initial_connectivity() {
            Err(Error::DisconnectedGraph { components }) => {
                assert_eq!(
                    components,
                    vec![vec!["0:dog".to_string()], vec!["1:dog".to_string()]]
                );
            }
            other => panic!("expected DisconnectedGraph, got {other:?}"),
        }
    }
}
