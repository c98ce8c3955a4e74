use thiserror::Error;

/// Everything that can go wrong between reading a grammar and emitting strings.
///
/// `Internal` marks a broken engine invariant; all other variants are
/// problems with the input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grammar syntax error at line {line}: {msg}")]
    GrammarSyntax { line: usize, msg: String },

    #[error("invalid grammar: {0}")]
    GrammarInvalid(String),

    #[error("bag syntax error at line {line}: {msg}")]
    BagSyntax { line: usize, msg: String },

    #[error("bag line {line}: unknown word `{word}`")]
    UnknownWord { line: usize, word: String },

    #[error("bag line {line}: `{word}` has no lexical entry consistent with the given indices")]
    NoConsistentEntry { line: usize, word: String },

    #[error("bag is empty")]
    EmptyBag,

    #[error("bag is too large: {size} elements (limit {limit})")]
    BagTooLarge { size: usize, limit: usize },

    #[error("bag is not connected by its index tags; components: {}", format_components(.components))]
    DisconnectedBag { components: Vec<Vec<String>> },

    #[error("initial connectivity graph is not connected; components: {}", format_components(.components))]
    DisconnectedGraph { components: Vec<Vec<String>> },

    #[error("domain cache has unsupported version header `{0}`")]
    DomainsVersion(String),

    #[error("domain cache was compiled for a different grammar (cache {cached}, grammar {current})")]
    StaleDomains { cached: String, current: String },

    #[error("domain cache line {line}: {msg}")]
    DomainsFormat { line: usize, msg: String },

    #[error("{what} exceeds the oracle guard: {size} > {limit}")]
    OracleGuard {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("pruning requested but no outer domains supplied")]
    MissingDomains,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

fn format_components(components: &[Vec<String>]) -> String {
    let groups: Vec<String> = components
        .iter()
        .map(|c| format!("{{{}}}", c.join(", ")))
        .collect();
    groups.join(" | ")
}

pub type Result<T> = std::result::Result<T, Error>;
