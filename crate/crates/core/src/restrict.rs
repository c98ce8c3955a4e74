//! Restriction of signs to a finite abstraction.
//!
//! A restrictor is a set of paths. Restricting a sign keeps only the
//! structure lying on chains toward those paths, erases concrete index tags,
//! and preserves node sharing among whatever is kept. Because the kept
//! shapes are bounded by the restrictor and the grammar's atom alphabet,
//! only finitely many distinct abstractions exist, which is what makes
//! domain compilation terminate.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::fs::{BKind, FeatureStructure, FsBuilder, Node, NodeId, Path, Sym, ROOT};

/// The set of paths a sign is abstracted to. Construction forces the
/// category path in; grammar loading additionally forces every
/// connectivity-parameter path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Restrictor {
    paths: BTreeSet<Path>,
}

impl Restrictor {
    pub fn new<I: IntoIterator<Item = Path>>(paths: I) -> Restrictor {
        let mut set: BTreeSet<Path> = paths.into_iter().collect();
        set.insert(Path(vec![Sym::from(crate::fs::CAT_LABEL)]));
        set.remove(&Path::root());
        Restrictor { paths: set }
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.paths.iter()
    }

    pub fn contains(&self, path: &Path) -> bool {
        self.paths.contains(path)
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

/// A sign projected through a restrictor. Equality is isomorphism of the
/// kept structure, so it is exactly "indistinguishable under the
/// restrictor"; concrete index tags are erased by construction.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AbstractSign {
    repr: FeatureStructure,
}

/// One restrictor-path cell of an abstraction: a fixed atom, or membership
/// in a sharing class (class ids are numbered by first occurrence in path
/// order). Paths missing from the sign have no cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cell {
    Atom(Sym),
    Class(u32),
}

impl AbstractSign {
    /// The kept structure itself; canonical, tag-free.
    pub fn repr(&self) -> &FeatureStructure {
        &self.repr
    }

    pub fn category(&self) -> Option<Sym> {
        self.repr.category()
    }

    /// The flat per-path view: atom value or sharing class for each
    /// restrictor path present in the sign.
    pub fn cells(&self, r: &Restrictor) -> BTreeMap<Path, Cell> {
        let mut classes: HashMap<NodeId, u32> = HashMap::new();
        let mut out = BTreeMap::new();
        for path in r.paths() {
            let Some(id) = self.repr.resolve(path) else {
                continue;
            };
            let cell = match self.repr.node(id) {
                Node::Atom(s) => Cell::Atom(s.clone()),
                _ => {
                    let next = classes.len() as u32;
                    Cell::Class(*classes.entry(id).or_insert(next))
                }
            };
            out.insert(path.clone(), cell);
        }
        out
    }
}

impl fmt::Display for AbstractSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.repr)
    }
}

impl fmt::Debug for AbstractSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.repr)
    }
}

/// Project `sign` through the restrictor.
///
/// Kept nodes: every node on the resolvable prefix of a restrictor path,
/// including a value the walk stops at early (an atom or an unconstrained
/// node standing where deeper structure could later appear — dropping it
/// would lose sharing the domain compiler needs). Index tags become plain
/// variables; children that serve no restrictor path are dropped.
pub fn restrict(sign: &FeatureStructure, r: &Restrictor) -> AbstractSign {
    // pass 1: which child labels must each node keep
    let mut demands: HashMap<NodeId, BTreeSet<Sym>> = HashMap::new();
    for path in r.paths() {
        let mut cur = ROOT;
        for label in &path.0 {
            match sign.node(cur) {
                Node::Complex(map) => match map.get(label) {
                    Some(&child) => {
                        demands.entry(cur).or_default().insert(label.clone());
                        cur = child;
                    }
                    None => break,
                },
                _ => break,
            }
        }
    }

    // pass 2: rebuild the demanded sub-graph, erasing index tags
    let mut b = FsBuilder::new();
    let mut memo: HashMap<NodeId, usize> = HashMap::new();
    let root = rebuild(sign, ROOT, &demands, &mut b, &mut memo);
    AbstractSign {
        repr: b.extract(root).expect("restriction of an acyclic sign is acyclic"),
    }
}

fn rebuild(
    sign: &FeatureStructure,
    id: NodeId,
    demands: &HashMap<NodeId, BTreeSet<Sym>>,
    b: &mut FsBuilder,
    memo: &mut HashMap<NodeId, usize>,
) -> usize {
    if let Some(&done) = memo.get(&id) {
        return done;
    }
    let out = match sign.node(id) {
        Node::Var | Node::Index(_) => b.var(),
        Node::Atom(s) => b.atom(s.clone()),
        Node::Complex(map) => {
            let node = b.complex();
            memo.insert(id, node); // pre-insert: sharing may be diamond-shaped
            if let Some(keep) = demands.get(&id) {
                let mut children = BTreeMap::new();
                for label in keep {
                    let child = rebuild(sign, map[label], demands, b, memo);
                    children.insert(label.clone(), child);
                }
                b.replace_complex(node, children);
            }
            return node;
        }
    };
    memo.insert(id, out);
    out
}

impl FsBuilder {
    pub(crate) fn replace_complex(&mut self, node: usize, children: BTreeMap<Sym, usize>) {
        self.set_kind(node, BKind::Complex(children));
    }
}
