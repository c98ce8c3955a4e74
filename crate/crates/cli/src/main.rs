//! Command-line front end.  Exit codes: 0 on success, 2 for usage errors,
//! 3 for unreadable or malformed input, 4 for internal invariant failures.
//!
//! Stdout is deterministic byte for byte for a given input; anything
//! timing-dependent can be suppressed with `--no-timing`, and notices and
//! prune traces go to stderr.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use bagforge::{
    compile_domains, generate, load_domains, parse_bag, parse_grammar, permutation_oracle,
    render_bench, run_bench, save_domains, CompiledDomains, DomainKind, DomainSet, Error,
    GenOpts, GenStats, Grammar, Result,
};

#[derive(Parser)]
#[command(
    name = "bagforge",
    version,
    about = "Generate every grammatical ordering of a bag of indexed words"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compile a grammar's pairing domains into a cache file.
    Compile {
        grammar: PathBuf,
        /// Where to write the cache; defaults to the grammar path with a
        /// `.domains` extension.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate the orderings of a bag licensed by a grammar.
    Generate {
        grammar: PathBuf,
        bag: PathBuf,
        /// Apply the connectivity test while generating (the default).
        #[arg(long, conflicts_with = "no_prune")]
        prune: bool,
        /// Generate by exhaustive search alone.
        #[arg(long)]
        no_prune: bool,
        /// Generate for this category instead of the grammar's start symbol.
        #[arg(long)]
        start: Option<String>,
        /// Report every solution (the default).
        #[arg(long)]
        all_solutions: bool,
        /// Print bracketed derivations instead of bare strings.
        #[arg(long)]
        all_derivations: bool,
        /// Use this domain cache instead of compiling on the fly.
        #[arg(long)]
        domains: Option<PathBuf>,
        /// Log every connectivity test to stderr.
        #[arg(long)]
        trace_prune: bool,
        /// Format of the final stats line.
        #[arg(long, value_enum, default_value_t = StatsFormat::Json)]
        stats: StatsFormat,
        /// Leave timings out, making stdout reproducible.
        #[arg(long)]
        no_timing: bool,
    },
    /// Answer the same question by brute force over permutations.
    Oracle {
        grammar: PathBuf,
        bag: PathBuf,
        #[arg(long)]
        start: Option<String>,
    },
    /// Generate each bag with and without pruning and tabulate the cost.
    Bench {
        grammar: PathBuf,
        #[arg(required = true)]
        bags: Vec<PathBuf>,
        /// Use this domain cache instead of compiling on the fly.
        #[arg(long)]
        domains: Option<PathBuf>,
        /// Leave timing columns out, making stdout reproducible.
        #[arg(long)]
        no_timing: bool,
    },
    /// Print compiled domain rows, one path pair per line.
    DumpDomains {
        grammar: PathBuf,
        /// Only rows whose result category is this.
        #[arg(long)]
        cat: Option<String>,
        #[arg(long, value_enum, default_value_t = KindArg::Outer)]
        kind: KindArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StatsFormat {
    Json,
    Tsv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Inner,
    Outer,
    Both,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Internal(_) => ExitCode::from(4),
                _ => ExitCode::from(3),
            }
        }
    }
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Compile { grammar, out } => {
            let g = load_grammar(&grammar)?;
            let d = compile_domains(&g);
            let out = out.unwrap_or_else(|| grammar.with_extension("domains"));
            save_domains(&d, &out)?;
            println!(
                "compiled {}: {} inner rows, {} outer rows -> {}",
                grammar.display(),
                d.inner.len(),
                d.outer.len(),
                out.display()
            );
            Ok(())
        }
        Cmd::Generate {
            grammar,
            bag,
            prune: _,
            no_prune,
            start,
            all_solutions: _,
            all_derivations,
            domains,
            trace_prune,
            stats,
            no_timing,
        } => {
            let g = load_grammar(&grammar)?;
            let b = parse_bag(&read(&bag)?, &g)?;
            let prune = !no_prune;
            let compiled = obtain_domains(&g, &grammar, domains.as_deref(), prune)?;
            let outer: Option<&DomainSet> = compiled.as_ref().map(|d| &d.outer);
            let opts = GenOpts {
                prune,
                all_derivations,
                trace: trace_prune,
                start,
                ..GenOpts::default()
            };
            let out = generate(&g, &b, outer, &opts)?;
            for line in &out.trace {
                eprintln!("{line}");
            }
            if all_derivations {
                for d in &out.derivations {
                    println!("{d}");
                }
            } else {
                for s in &out.strings {
                    println!("{s}");
                }
            }
            println!(
                "{}",
                stats_line(stats, &out.stats, out.strings.len(), no_timing)
            );
            Ok(())
        }
        Cmd::Oracle { grammar, bag, start } => {
            let g = load_grammar(&grammar)?;
            let b = parse_bag(&read(&bag)?, &g)?;
            for s in permutation_oracle(&g, &b, start.as_deref())? {
                println!("{s}");
            }
            Ok(())
        }
        Cmd::Bench {
            grammar,
            bags,
            domains,
            no_timing,
        } => {
            let g = load_grammar(&grammar)?;
            let compiled = obtain_domains(&g, &grammar, domains.as_deref(), true)?
                .expect("pruning always needs domains");
            let mut parsed = Vec::new();
            let mut names = Vec::new();
            for path in &bags {
                match read(path).and_then(|text| parse_bag(&text, &g)) {
                    Ok(b) => {
                        parsed.push(b);
                        names.push(path.clone());
                    }
                    Err(e) => eprintln!("skipped {}: {e}", path.display()),
                }
            }
            let report = run_bench(&g, &parsed, &compiled.outer)?;
            for (i, e) in &report.skipped {
                eprintln!("skipped {}: {e}", names[*i].display());
            }
            print!("{}", render_bench(&report.rows, !no_timing));
            Ok(())
        }
        Cmd::DumpDomains { grammar, cat, kind } => {
            let g = load_grammar(&grammar)?;
            let d = compile_domains(&g);
            let sets: &[&DomainSet] = match kind {
                KindArg::Inner => &[&d.inner],
                KindArg::Outer => &[&d.outer],
                KindArg::Both => &[&d.inner, &d.outer],
            };
            for set in sets {
                let label = match set.kind() {
                    DomainKind::Inner => "inner",
                    DomainKind::Outer => "outer",
                };
                for ((sign, lex), binds) in set.iter() {
                    if cat.as_deref().is_some_and(|c| c != sign.as_str()) {
                        continue;
                    }
                    for (p, q) in binds {
                        println!("{label}\t{sign}\t{lex}\t{p}~{q}");
                    }
                }
            }
            Ok(())
        }
    }
}

/// Read a file with the path worked into any error message.
fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn load_grammar(path: &Path) -> Result<Grammar> {
    parse_grammar(&read(path)?)
}

/// The domains to hand the engine: a cache if one is named, a fresh
/// compile if pruning needs one, nothing otherwise.
fn obtain_domains(
    g: &Grammar,
    grammar_path: &Path,
    cache: Option<&Path>,
    prune: bool,
) -> Result<Option<CompiledDomains>> {
    match cache {
        Some(path) => Ok(Some(load_domains(path)?)),
        None if prune => {
            eprintln!(
                "note: compiling domains for {} (cache them with `bagforge compile`)",
                grammar_path.display()
            );
            Ok(Some(compile_domains(g)))
        }
        None => Ok(None),
    }
}

fn stats_line(format: StatsFormat, s: &GenStats, strings: usize, no_timing: bool) -> String {
    match format {
        StatsFormat::Json => {
            let mut line = format!(
                "{{\"strings\":{},\"solutions\":{},\"edges_total\":{},\"edges_inactive\":{},\"edges_active\":{},\"pruned\":{}",
                strings, s.solutions, s.edges_total, s.edges_inactive, s.edges_active, s.pruned
            );
            if !no_timing {
                line.push_str(&format!(",\"elapsed_s\":{:.3}", s.elapsed.as_secs_f64()));
            }
            line.push('}');
            line
        }
        StatsFormat::Tsv => {
            let mut line = format!(
                "{}\t{}\t{}\t{}\t{}\t{}",
                strings, s.solutions, s.edges_total, s.edges_inactive, s.edges_active, s.pruned
            );
            if !no_timing {
                line.push_str(&format!("\t{:.3}", s.elapsed.as_secs_f64()));
            }
            line
        }
    }
}
