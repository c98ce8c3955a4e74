//! Loading helpers for the grammars and bags bundled with the workspace,
//! shared by the criterion benchmarks.

use std::fs;
use std::path::PathBuf;

use bagforge::{parse_bag, parse_grammar, Bag, Grammar};

/// Root of the workspace checkout: fixtures live in `grammars/` and
/// `bags/` beside the crates.
pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// Load `grammars/<name>.gr`.
pub fn load_grammar(name: &str) -> Grammar {
    let path = workspace_root().join("grammars").join(format!("{name}.gr"));
    let text = fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("reading {}: {e}", path.display()));
    parse_grammar(&text).unwrap_or_else(|e| panic!("parsing {}: {e}", path.display()))
}

/// Load one bag file from `bags/`, relative path without extension.
pub fn load_bag(g: &Grammar, name: &str) -> Bag {
    let path = workspace_root().join("bags").join(format!("{name}.bag"));
    let text = fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("reading {}: {e}", path.display()));
    parse_bag(&text, g).unwrap_or_else(|e| panic!("parsing {}: {e}", path.display()))
}

/// Every bag under `bags/bench/`, sorted by file name (which sorts them
/// by size), paired with its stem.
pub fn bench_bags(g: &Grammar) -> Vec<(String, Bag)> {
    let dir = workspace_root().join("bags/bench");
    let mut names: Vec<String> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("listing {}: {e}", dir.display()))
        .filter_map(|entry| {
            let path = entry.unwrap().path();
            (path.extension().is_some_and(|x| x == "bag"))
                .then(|| path.file_stem().unwrap().to_str().unwrap().to_owned())
        })
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|stem| {
            let bag = load_bag(g, &format!("bench/{stem}"));
            (stem, bag)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_load_and_line_up() {
        let g = load_grammar("bench");
        let bags = bench_bags(&g);
        assert_eq!(bags.len(), 10);
        let sizes: Vec<usize> = bags.iter().map(|(_, b)| b.len()).collect();
        assert_eq!(sizes, [2, 4, 7, 7, 8, 11, 12, 15, 15, 17]);
        assert!(sizes.windows(2).all(|w| w[0] <= w[1]), "sorted by size");

        let t = load_grammar("test");
        assert_eq!(load_bag(&t, "ex1").len(), 5);
        assert_eq!(load_bag(&t, "ex3").len(), 6);
    }
}
