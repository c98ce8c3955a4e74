//! Input bags: unordered multisets of word forms carrying semantic indices.
//!
//! A bag file holds one element per line.  Each line names a word form and
//! instantiates the word's semantic parameters with index tags, either
//! positionally (`dog 1` tags the single parameter of `dog` with index 1) or
//! explicitly (`with sem.arg1=1 sem.arg3=2`).  Every lexical entry is
//! required to carry all of its parameters, so a line matches exactly those
//! entries whose parameter set lines up with the tags given.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::fs::{FeatureStructure, FsBuilder, Path, Sym};
use crate::grammar::{strip_comment, Grammar};

/// Chart leaf sets live in a `u64` bitset.
pub const MAX_BAG: usize = 64;

/// One occurrence of a word form in a bag, with its indices grafted in.
#[derive(Clone, Debug)]
pub struct BagElement {
    pub position: usize,
    pub word: String,
    /// Parameter instantiations in parameter declaration order.  When a word
    /// is ambiguous between entries with different parameter sets, these are
    /// the first consistent entry's paths.
    pub assignments: Vec<(Path, Sym)>,
    /// Every lexical entry of the word consistent with the given indices,
    /// in lexicon declaration order.  Generation picks among these.
    pub signs: Vec<FeatureStructure>,
}

impl BagElement {
    /// The index tags this element carries.
    pub fn tags(&self) -> BTreeSet<Sym> {
        self.assignments.iter().map(|(_, t)| t.clone()).collect()
    }
}

#[derive(Clone, Debug, Default)]
pub struct Bag {
    pub elements: Vec<BagElement>,
}

impl Bag {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Render in the explicit `word path=tag ...` form; `parse_bag` reads the
    /// result back into an equal bag.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for el in &self.elements {
            out.push_str(&el.word);
            for (path, tag) in &el.assignments {
                out.push_str(&format!(" {path}={tag}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Graft index tags onto a lexical entry.  Paths sharing a tag end up at one
/// node, so reentrancies demanded by the bag survive later unification.
/// `None` means the entry cannot carry these indices (an atom or a foreign
/// index sits on some path, or entry reentrancies force two tags together).
fn instantiate(entry: &FeatureStructure, assignments: &[(Path, Sym)]) -> Option<FeatureStructure> {
    let mut b = FsBuilder::new();
    let root = b.import(entry);
    let mut tag_nodes: BTreeMap<Sym, usize> = BTreeMap::new();
    for (path, tag) in assignments {
        let node = b.ensure_path(root, path).ok()?;
        let t = *tag_nodes
            .entry(tag.clone())
            .or_insert_with(|| b.index(tag.clone()));
        b.uni(node, t).ok()?;
    }
    b.extract(root).ok()
}

/// Parameter paths of the grammar that resolve inside `entry`, in
/// declaration order.
fn present_params(g: &Grammar, entry: &FeatureStructure) -> Vec<Path> {
    g.param_paths
        .iter()
        .filter(|p| entry.resolve(p).is_some())
        .cloned()
        .collect()
}

fn bag_err(line: usize, msg: impl Into<String>) -> Error {
    Error::BagSyntax {
        line,
        msg: msg.into(),
    }
}

/// Parse a bag file against a grammar's lexicon.
///
/// Each element keeps every consistent entry; choosing between them is
/// deferred to chart seeding, where each entry seeds its own leaf edge.
pub fn parse_bag(text: &str, g: &Grammar) -> Result<Bag> {
    let mut elements: Vec<BagElement> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let word = tokens.next().expect("non-empty line").to_string();
        let rest: Vec<&str> = tokens.collect();

        let explicit = rest.iter().filter(|t| t.contains('=')).count();
        if explicit != 0 && explicit != rest.len() {
            return Err(bag_err(
                line_no,
                "mix of positional tags and path=tag assignments",
            ));
        }

        let entries = g
            .lexicon
            .get(&word)
            .ok_or_else(|| Error::UnknownWord {
                line: line_no,
                word: word.clone(),
            })?;

        let position = elements.len();
        let element = if explicit > 0 {
            parse_explicit(g, entries, &word, &rest, position, line_no)?
        } else {
            parse_positional(g, entries, &word, &rest, position, line_no)?
        };
        elements.push(element);
    }

    if elements.is_empty() {
        return Err(Error::EmptyBag);
    }
    if elements.len() > MAX_BAG {
        return Err(Error::BagTooLarge {
            size: elements.len(),
            limit: MAX_BAG,
        });
    }
    Ok(Bag { elements })
}

/// `word path=tag ...`: the assigned paths must be exactly the parameter
/// set of a matching entry.
fn parse_explicit(
    g: &Grammar,
    entries: &[FeatureStructure],
    word: &str,
    rest: &[&str],
    position: usize,
    line_no: usize,
) -> Result<BagElement> {
    let mut given: BTreeMap<Path, Sym> = BTreeMap::new();
    for tok in rest {
        let (path_src, tag) = tok
            .split_once('=')
            .expect("token classified as assignment");
        if tag.is_empty() || tag.contains('=') {
            return Err(bag_err(line_no, format!("bad index tag in `{tok}`")));
        }
        let path = Path::parse(path_src)
            .ok_or_else(|| bag_err(line_no, format!("bad path in `{tok}`")))?;
        if !g.param_paths.contains(&path) {
            return Err(bag_err(
                line_no,
                format!("`{path}` is not a declared parameter path"),
            ));
        }
        if given.insert(path.clone(), Sym::from(tag)).is_some() {
            return Err(bag_err(line_no, format!("`{path}` assigned twice")));
        }
    }
    // Store in parameter declaration order.
    let assignments: Vec<(Path, Sym)> = g
        .param_paths
        .iter()
        .filter_map(|p| given.get(p).map(|t| (p.clone(), t.clone())))
        .collect();

    let mut signs = Vec::new();
    for entry in entries {
        if present_params(g, entry) != assignments.iter().map(|(p, _)| p.clone()).collect::<Vec<_>>()
        {
            continue;
        }
        if let Some(sign) = instantiate(entry, &assignments) {
            signs.push(sign);
        }
    }
    if signs.is_empty() {
        return Err(Error::NoConsistentEntry {
            line: line_no,
            word: word.to_string(),
        });
    }
    Ok(BagElement {
        position,
        word: word.to_string(),
        assignments,
        signs,
    })
}

/// `word tag1 tag2 ...`: tags fill a matching entry's parameters in
/// declaration order, so the tag count must equal the entry's parameter
/// count.
fn parse_positional(
    g: &Grammar,
    entries: &[FeatureStructure],
    word: &str,
    rest: &[&str],
    position: usize,
    line_no: usize,
) -> Result<BagElement> {
    let tags: Vec<Sym> = rest.iter().map(|t| Sym::from(*t)).collect();
    let mut assignments: Option<Vec<(Path, Sym)>> = None;
    let mut signs = Vec::new();
    for entry in entries {
        let params = present_params(g, entry);
        if params.len() != tags.len() {
            continue;
        }
        let assigned: Vec<(Path, Sym)> =
            params.into_iter().zip(tags.iter().cloned()).collect();
        if let Some(sign) = instantiate(entry, &assigned) {
            signs.push(sign);
            assignments.get_or_insert(assigned);
        }
    }
    let Some(assignments) = assignments else {
        return Err(Error::NoConsistentEntry {
            line: line_no,
            word: word.to_string(),
        });
    };
    Ok(BagElement {
        position,
        word: word.to_string(),
        assignments,
        signs,
    })
}

/// Positions grouped by transitive index-tag sharing, each group and the
/// list of groups sorted.  Elements without tags form singleton groups.
pub fn bag_components(bag: &Bag) -> Vec<Vec<usize>> {
    let n = bag.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let r = find(parent, parent[x]);
            parent[x] = r;
        }
        parent[x]
    }
    let mut seen: BTreeMap<Sym, usize> = BTreeMap::new();
    for el in &bag.elements {
        for tag in el.tags() {
            match seen.get(&tag) {
                Some(&first) => {
                    let a = find(&mut parent, first);
                    let b = find(&mut parent, el.position);
                    parent[a] = b;
                }
                None => {
                    seen.insert(tag, el.position);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for pos in 0..n {
        let root = find(&mut parent, pos);
        groups.entry(root).or_default().push(pos);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort();
    out
}

pub fn bag_connected(bag: &Bag) -> bool {
    bag_components(bag).len() <= 1
}

/// Error with per-component `position:word` labels when the bag's index tags
/// do not tie all elements together.  A disconnected bag has no single
/// covering analysis, so generation refuses it up front.
pub fn require_connected(bag: &Bag) -> Result<()> {
    let components = bag_components(bag);
    if components.len() <= 1 {
        return Ok(());
    }
    let labeled = components
        .into_iter()
        .map(|c| {
            c.into_iter()
                .map(|pos| format!("{pos}:{}", bag.elements[pos].word))
                .collect()
        })
        .collect();
    Err(Error::DisconnectedBag {
        components: labeled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{parse_grammar, tests::FIG1};
    use crate::fs::Node;

    fn fig1() -> Grammar {
        parse_grammar(FIG1).expect("fixture parses")
    }

    #[test]
    fn positional_tags_fill_parameters_in_declaration_order() {
        let g = fig1();
        let bag = parse_bag("with 1 2\n", &g).unwrap();
        let el = &bag.elements[0];
        assert_eq!(el.word, "with");
        let paths: Vec<String> = el.assignments.iter().map(|(p, _)| p.to_string()).collect();
        assert_eq!(paths, ["sem.arg1", "sem.arg3"]);
        let tags: Vec<&str> = el.assignments.iter().map(|(_, t)| t.as_str()).collect();
        assert_eq!(tags, ["1", "2"]);
        assert_eq!(el.signs.len(), 1);
        let sign = &el.signs[0];
        let a1 = sign.resolve(&Path::parse("sem.arg1").unwrap()).unwrap();
        assert!(matches!(sign.node(a1), Node::Index(t) if t.as_str() == "1"));
    }

    #[test]
    fn explicit_form_matches_positional_form() {
        let g = fig1();
        let pos = parse_bag("with 1 2\n", &g).unwrap();
        let exp = parse_bag("with sem.arg1=1 sem.arg3=2\n", &g).unwrap();
        assert_eq!(pos.elements[0].signs, exp.elements[0].signs);
        assert_eq!(pos.elements[0].assignments, exp.elements[0].assignments);
    }

    #[test]
    fn shared_tag_inside_one_element_shares_the_node() {
        let g = fig1();
        let bag = parse_bag("chases 7 7\n", &g).unwrap();
        let sign = &bag.elements[0].signs[0];
        assert!(sign.token_identical(
            &Path::parse("sem.arg2").unwrap(),
            &Path::parse("sem.arg3").unwrap()
        ));
    }

    #[test]
    fn tag_count_must_match_a_lexical_entry() {
        let g = fig1();
        match parse_bag("dog 1 2\n", &g) {
            Err(Error::NoConsistentEntry { line: 1, word }) => assert_eq!(word, "dog"),
            other => panic!("expected NoConsistentEntry, got {other:?}"),
        }
        match parse_bag("dog\n", &g) {
            Err(Error::NoConsistentEntry { .. }) => {}
            other => panic!("expected NoConsistentEntry, got {other:?}"),
        }
    }

    #[test]
    fn explicit_form_must_cover_the_entry_parameters() {
        let g = fig1();
        // `with` carries sem.arg1 and sem.arg3; naming only one matches nothing.
        match parse_bag("with sem.arg1=1\n", &g) {
            Err(Error::NoConsistentEntry { .. }) => {}
            other => panic!("expected NoConsistentEntry, got {other:?}"),
        }
    }

    #[test]
    fn unknown_words_and_foreign_paths_are_rejected() {
        let g = fig1();
        match parse_bag("cat 1\n", &g) {
            Err(Error::UnknownWord { line: 1, word }) => assert_eq!(word, "cat"),
            other => panic!("expected UnknownWord, got {other:?}"),
        }
        match parse_bag("dog sem.reln=1\n", &g) {
            Err(Error::BagSyntax { line: 1, msg }) => {
                assert!(msg.contains("parameter"), "{msg}")
            }
            other => panic!("expected BagSyntax, got {other:?}"),
        }
        match parse_bag("dog 1 sem.arg1=1\n", &g) {
            Err(Error::BagSyntax { line: 1, .. }) => {}
            other => panic!("expected BagSyntax, got {other:?}"),
        }
    }

    #[test]
    fn empty_input_is_an_error() {
        let g = fig1();
        match parse_bag("# nothing here\n\n", &g) {
            Err(Error::EmptyBag) => {}
            other => panic!("expected EmptyBag, got {other:?}"),
        }
    }

    #[test]
    fn components_follow_shared_tags_transitively() {
        let g = fig1();
        // 1-2 linked by `with`, 2 reached by the second `the`; dog stays with 1.
        let text = "the 1\ndog 1\nwith 1 2\nthe 2\ncollar 2\nbrown 3\n";
        let bag = parse_bag(text, &g).unwrap();
        assert!(!bag_connected(&bag));
        assert_eq!(bag_components(&bag), vec![vec![0, 1, 2, 3, 4], vec![5]]);
        match require_connected(&bag) {
            Err(Error::DisconnectedBag { components }) => {
                assert_eq!(components.len(), 2);
                assert_eq!(components[1], vec!["5:brown".to_string()]);
            }
            other => panic!("expected DisconnectedBag, got {other:?}"),
        }

        let joined = parse_bag("the 1\ndog 1\nbrown 1\n", &g).unwrap();
        assert!(bag_connected(&joined));
        assert!(require_connected(&joined).is_ok());
    }

    #[test]
    fn to_text_round_trips() {
        let g = fig1();
        let text = "the 1\ndog 1\nwith 1 2\nthe 2\nbrown 2\ncollar 2\n";
        let bag = parse_bag(text, &g).unwrap();
        let rendered = bag.to_text();
        assert!(rendered.contains("with sem.arg1=1 sem.arg3=2"));
        let reparsed = parse_bag(&rendered, &g).unwrap();
        assert_eq!(bag.elements.len(), reparsed.elements.len());
        for (a, b) in bag.elements.iter().zip(&reparsed.elements) {
            assert_eq!(a.word, b.word);
            assert_eq!(a.assignments, b.assignments);
            assert_eq!(a.signs, b.signs);
        }
    }

    #[test]
    fn ambiguous_words_keep_every_consistent_entry() {
        let src = "\
param sem.arg1 sem.arg2
start S
rule s: S[sem=#0] -> NP[sem.arg1=#1] VP[sem=#0, sem.arg1=#1]
lex duck: N[sem.arg1=#0]
lex duck: Vintra[sem.reln=duck, sem.arg2=#0, sem.arg1=#1]
";
        let g = parse_grammar(src).unwrap();
        // One tag: only the noun entry has exactly one parameter.
        let noun = parse_bag("duck 1\n", &g).unwrap();
        assert_eq!(noun.elements[0].signs.len(), 1);
        // Two tags: only the verb entry.
        let verb = parse_bag("duck 1 2\n", &g).unwrap();
        assert_eq!(verb.elements[0].signs.len(), 1);
        assert_eq!(
            verb.elements[0].signs[0].category().unwrap().as_str(),
            "Vintra"
        );
    }
}
