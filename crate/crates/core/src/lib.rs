//! Chart generation from unordered bags of indexed lexical signs.
//!
//! The pipeline: parse a grammar ([`grammar`]), compile its pairing domains
//! offline ([`domains`]), parse a bag ([`bag`]), then enumerate every
//! grammatical ordering of the bag with the chart engine ([`chart`]),
//! pruning intermediate results that can never extend to a full solution
//! ([`prune`]). Reference implementations that recompute the same answers
//! slowly live in [`oracle`]; [`bench`] compares pruned and unpruned runs.

pub mod bag;
pub mod bench;
pub mod chart;
pub mod domains;
pub mod error;
pub mod fs;
pub mod grammar;
pub mod oracle;
pub mod prune;
pub mod restrict;

pub use bag::{bag_components, bag_connected, parse_bag, Bag, BagElement};
pub use bench::{render_bench, run_bench, BenchReport, BenchRow};
pub use chart::{generate, AgendaOrder, GenOpts, GenOutcome, GenStats};
pub use domains::{
    compile_domains, compute_inner, compute_outer, lex_in_outer, lex_in_outer_pairs,
    load_domains, parse_domains, render_domains, save_domains, CompiledDomains, DomainKind,
    DomainSet, FixpointLog,
};
pub use error::{Error, Result};
pub use fs::{unifiable, unify, FeatureStructure, FsBuilder, Node, NodeId, Path, Probe, Sym};
pub use grammar::{parse_grammar, Grammar, Production};
pub use oracle::{derivation_oracle, permutation_oracle};
pub use prune::{ConnectivityGraph, PruneContext};
pub use restrict::{restrict, AbstractSign, Cell, Restrictor};
