//! Pruned-versus-unpruned measurements over a list of bags.
//!
//! Each bag is generated twice in first-solution mode: once with the
//! connectivity test off, once with it on.  A run that errors (a malformed
//! or disconnected bag, say) loses its row but not the rest of the table.
//! A run that disagrees with its twin about solvability, or that builds
//! *more* edges with pruning than without, aborts the whole benchmark:
//! that is a correctness failure, not a measurement.

use std::time::{Duration, Instant};

use crate::bag::Bag;
use crate::chart::{generate, GenOpts, GenOutcome};
use crate::domains::DomainSet;
use crate::error::{Error, Result};
use crate::grammar::Grammar;

#[derive(Clone, Debug)]
pub struct BenchRow {
    pub bag_size: usize,
    pub time_unpruned: Duration,
    pub edges_unpruned: usize,
    pub time_pruned: Duration,
    pub edges_pruned: usize,
}

/// The surviving rows plus, per failed bag, its index in the input list
/// and the error that stopped it.
#[derive(Debug, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub skipped: Vec<(usize, Error)>,
}

pub fn run_bench(g: &Grammar, bags: &[Bag], outer: &DomainSet) -> Result<BenchReport> {
    let mut report = BenchReport::default();
    for (i, bag) in bags.iter().enumerate() {
        match run_one(g, bag, outer) {
            Ok(row) => report.rows.push(row),
            Err(e @ Error::Internal(_)) => return Err(e),
            Err(e) => report.skipped.push((i, e)),
        }
    }
    Ok(report)
}

fn run_one(g: &Grammar, bag: &Bag, outer: &DomainSet) -> Result<BenchRow> {
    let mut opts = GenOpts {
        stop_after_first: true,
        ..GenOpts::default()
    };
    opts.prune = false;
    let (unpruned, time_unpruned) = timed(g, bag, None, &opts)?;
    opts.prune = true;
    let (pruned, time_pruned) = timed(g, bag, Some(outer), &opts)?;

    let solvable = |out: &GenOutcome| out.stats.solutions > 0;
    if solvable(&unpruned) != solvable(&pruned) {
        return Err(Error::Internal(format!(
            "pruning changed solvability on a {}-element bag",
            bag.len()
        )));
    }
    if pruned.stats.edges_total > unpruned.stats.edges_total {
        return Err(Error::Internal(format!(
            "pruned run built more edges than unpruned on a {}-element bag ({} > {})",
            bag.len(),
            pruned.stats.edges_total,
            unpruned.stats.edges_total
        )));
    }
    Ok(BenchRow {
        bag_size: bag.len(),
        time_unpruned,
        edges_unpruned: unpruned.stats.edges_total,
        time_pruned,
        edges_pruned: pruned.stats.edges_total,
    })
}

fn timed(
    g: &Grammar,
    bag: &Bag,
    outer: Option<&DomainSet>,
    opts: &GenOpts,
) -> Result<(GenOutcome, Duration)> {
    let started = Instant::now();
    let out = generate(g, bag, outer, opts)?;
    Ok((out, started.elapsed()))
}

/// Tab-separated table, one row per bag.  Timing columns are optional so
/// output can be compared byte for byte across runs.
pub fn render_bench(rows: &[BenchRow], timing: bool) -> String {
    let mut out = String::new();
    if timing {
        out.push_str("bag_size\ttime_unpruned_s\tedges_unpruned\ttime_pruned_s\tedges_pruned\n");
        for r in rows {
            out.push_str(&format!(
                "{}\t{:.1}\t{}\t{:.1}\t{}\n",
                r.bag_size,
                r.time_unpruned.as_secs_f64(),
                r.edges_unpruned,
                r.time_pruned.as_secs_f64(),
                r.edges_pruned
            ));
        }
    } else {
        out.push_str("bag_size\tedges_unpruned\tedges_pruned\n");
        for r in rows {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                r.bag_size, r.edges_unpruned, r.edges_pruned
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bag::parse_bag;
    use crate::domains::compile_domains;
    use crate::grammar::{parse_grammar, tests::FIG1};

    fn with_intransitive() -> String {
        format!(
            "{FIG1}rule r8: VP[sem=#0] -> Vintra[sem=#0]\n\
             lex barked: Vintra[sem.reln=bark, sem.arg2=#1]\n"
        )
    }

    #[test]
    fn rows_compare_the_same_bags_and_prune_never_adds_edges() {
        let g = parse_grammar(&with_intransitive()).unwrap();
        let d = compile_domains(&g);
        let bags = [
            "the 1\ndog 1\nbarked 1\n",
            "dog 1\nbarked 1\nthe 1\nbrown 1\nbig 1\n",
            "the 1\ndog 1\nwith sem.arg1=1 sem.arg3=2\nthe 2\ncollar 2\nbarked 1\n",
        ]
        .map(|t| parse_bag(t, &g).unwrap());
        let report = run_bench(&g, &bags, &d.outer).unwrap();
        assert!(report.skipped.is_empty());
        let sizes: Vec<usize> = report.rows.iter().map(|r| r.bag_size).collect();
        assert_eq!(sizes, [3, 5, 6]);
        for row in &report.rows {
            assert!(row.edges_pruned <= row.edges_unpruned, "{row:?}");
            assert!(row.edges_unpruned > 0);
        }
    }

    #[test]
    fn a_bad_bag_loses_its_row_but_not_the_table() {
        let g = parse_grammar(&with_intransitive()).unwrap();
        let d = compile_domains(&g);
        let bags = [
            "the 1\ndog 1\nbarked 1\n",
            "dog 1\nthe 2\n", // tags never meet
            "dog 1\nbarked 1\nthe 1\nbrown 1\nbig 1\n",
        ]
        .map(|t| parse_bag(t, &g).unwrap());
        let report = run_bench(&g, &bags, &d.outer).unwrap();
        let sizes: Vec<usize> = report.rows.iter().map(|r| r.bag_size).collect();
        assert_eq!(sizes, [3, 5]);
        assert_eq!(report.skipped.len(), 1);
        assert_eq!(report.skipped[0].0, 1);
        assert!(matches!(
            report.skipped[0].1,
            Error::DisconnectedBag { .. }
        ));
    }

    #[test]
    fn tables_render_with_and_without_timing() {
        let rows = [BenchRow {
            bag_size: 7,
            time_unpruned: Duration::from_millis(1234),
            edges_unpruned: 420,
            time_pruned: Duration::from_millis(56),
            edges_pruned: 99,
        }];
        assert_eq!(
            render_bench(&rows, true),
            "bag_size\ttime_unpruned_s\tedges_unpruned\ttime_pruned_s\tedges_pruned\n\
             7\t1.2\t420\t0.1\t99\n"
        );
        assert_eq!(
            render_bench(&rows, false),
            "bag_size\tedges_unpruned\tedges_pruned\n7\t420\t99\n"
        );
    }
}
