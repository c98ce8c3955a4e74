//! Rooted acyclic feature structures with reentrancy and typed index
//! variables, plus non-destructive unification.
//!
//! A structure is stored as a compact arena in canonical form: node 0 is the
//! root and the remaining nodes are numbered by a preorder walk that visits
//! attributes in label order. Isomorphic structures therefore have identical
//! arenas, and `Eq`/`Ord`/`Hash` can be derived.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

/// Attribute or atom symbol. Cloning is a pointer copy.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sym(Arc<str>);

impl Sym {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Sym {
    fn from(s: &str) -> Self {
        Sym(Arc::from(s))
    }
}

impl From<String> for Sym {
    fn from(s: String) -> Self {
        Sym(Arc::from(s.as_str()))
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

pub(crate) fn valid_symbol_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

/// Attribute path from the root, e.g. `sem.arg1`. The empty path is the root.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path(pub Vec<Sym>);

impl Path {
    pub fn root() -> Self {
        Path(Vec::new())
    }

    /// Parse a dotted path. Rejects empty input and empty or malformed
    /// components; there is no spelling for the root path.
    pub fn parse(s: &str) -> Option<Path> {
        if s.is_empty() {
            return None;
        }
        let mut labels = Vec::new();
        for part in s.split('.') {
            if part.is_empty() || !part.chars().all(valid_symbol_char) {
                return None;
            }
            labels.push(Sym::from(part));
        }
        Some(Path(labels))
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, label: Sym) -> Path {
        let mut labels = self.0.clone();
        labels.push(label);
        Path(labels)
    }

    pub fn starts_with(&self, prefix: &Path) -> bool {
        self.0.len() >= prefix.0.len() && self.0[..prefix.0.len()] == prefix.0[..]
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("<root>");
        }
        for (i, label) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            f.write_str(label.as_str())?;
        }
        Ok(())
    }
}

impl fmt::Debug for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Index into a `FeatureStructure` arena.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NodeId(pub(crate) u32);

impl NodeId {
    fn idx(self) -> usize {
        self.0 as usize
    }
}

/// One node of a feature structure.
///
/// `Var` is an unconstrained node: rule variables and not-yet-bound index
/// positions. `Index` is a semantic index carrying a concrete tag from a
/// bag; two of them unify only when the tags are equal, and neither unifies
/// with an atom. `Complex` nodes merge attribute-wise.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Node {
    Var,
    Atom(Sym),
    Index(Sym),
    Complex(BTreeMap<Sym, NodeId>),
}

pub const ROOT: NodeId = NodeId(0);

/// Attribute holding a sign's category atom.
pub const CAT_LABEL: &str = "cat";

/// Result of walking a path that may not be fully present; see
/// [`FeatureStructure::probe`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Probe {
    Value(NodeId),
    Open,
    Blocked,
}

/// An immutable feature structure in canonical form. Construct through
/// [`FsBuilder`] or [`unify`]; share freely afterwards.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureStructure {
    nodes: Vec<Node>,
}

impl FeatureStructure {
    /// A single unconstrained node.
    pub fn top() -> Self {
        FeatureStructure {
            nodes: vec![Node::Var],
        }
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.idx()]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Follow `path` from the root.
    pub fn resolve(&self, path: &Path) -> Option<NodeId> {
        self.resolve_from(ROOT, path)
    }

    pub fn resolve_from(&self, start: NodeId, path: &Path) -> Option<NodeId> {
        let mut cur = start;
        for label in &path.0 {
            match self.node(cur) {
                Node::Complex(map) => cur = *map.get(label)?,
                _ => return None,
            }
        }
        Some(cur)
    }

    /// How far `path` gets: the node it reaches, an opening unification
    /// could still fill in, or a dead end under an atom or index.
    pub fn probe(&self, path: &Path) -> Probe {
        let mut cur = ROOT;
        for label in &path.0 {
            match self.node(cur) {
                Node::Complex(map) => match map.get(label) {
                    Some(&next) => cur = next,
                    None => return Probe::Open,
                },
                Node::Var => return Probe::Open,
                Node::Atom(_) | Node::Index(_) => return Probe::Blocked,
            }
        }
        Probe::Value(cur)
    }

    /// True iff both paths resolve and reach the same node.
    pub fn token_identical(&self, p: &Path, q: &Path) -> bool {
        match (self.resolve(p), self.resolve(q)) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        }
    }

    /// The category atom at the `cat` attribute, if present.
    pub fn category(&self) -> Option<Sym> {
        match self.resolve(&Path(vec![Sym::from(CAT_LABEL)])) {
            Some(id) => match self.node(id) {
                Node::Atom(sym) => Some(sym.clone()),
                _ => None,
            },
            None => None,
        }
    }

    /// Re-root the structure at `id`, keeping only what is reachable.
    pub fn extract(&self, id: NodeId) -> FeatureStructure {
        let mut b = FsBuilder::new();
        let offset = b.import(self);
        b.extract(offset + id.idx())
            .expect("canonical input cannot be cyclic")
    }

    /// Re-root at a path. `None` if the path does not resolve.
    pub fn extract_at(&self, path: &Path) -> Option<FeatureStructure> {
        self.resolve(path).map(|id| self.extract(id))
    }

    /// Wrap the whole structure under `path`, creating the spine above it.
    pub fn nest(&self, path: &Path) -> FeatureStructure {
        let mut b = FsBuilder::new();
        let mut cur = b.import(self);
        for label in path.0.iter().rev() {
            let mut map = BTreeMap::new();
            map.insert(label.clone(), cur);
            cur = b.push(BKind::Complex(map));
        }
        b.extract(cur).expect("nest cannot introduce cycles")
    }

    /// Every (path, node) pair reachable from the root, root included, in
    /// lexicographic path order. A reentrant node appears once per path, so
    /// this expands sharing; keep inputs small.
    pub fn paths(&self) -> Vec<(Path, NodeId)> {
        let mut out = Vec::new();
        let mut stack = vec![(Path::root(), ROOT)];
        while let Some((path, id)) = stack.pop() {
            if let Node::Complex(map) = self.node(id) {
                // reversed so the stack pops in label order
                for (label, child) in map.iter().rev() {
                    stack.push((path.child(label.clone()), *child));
                }
            }
            out.push((path, id));
        }
        out
    }

    /// True iff every constraint in `self` (attributes, values,
    /// reentrancies) also holds in `other`, i.e. `other` is at least as
    /// specific.
    pub fn subsumes(&self, other: &FeatureStructure) -> bool {
        let mut map: HashMap<NodeId, NodeId> = HashMap::new();
        let mut stack = vec![(ROOT, ROOT)];
        while let Some((a, b)) = stack.pop() {
            if let Some(&seen) = map.get(&a) {
                if seen != b {
                    return false; // sharing in self not mirrored in other
                }
                continue;
            }
            map.insert(a, b);
            match (self.node(a), other.node(b)) {
                (Node::Var, _) => {}
                (Node::Atom(x), Node::Atom(y)) if x == y => {}
                (Node::Index(x), Node::Index(y)) if x == y => {}
                (Node::Complex(ma), Node::Complex(mb)) => {
                    for (label, ca) in ma {
                        match mb.get(label) {
                            Some(cb) => stack.push((*ca, *cb)),
                            None => return false,
                        }
                    }
                }
                _ => return false,
            }
        }
        true
    }
}

/// Non-destructive unification. `None` is failure, either a value clash or
/// a unification that would create a cycle; both inputs are left untouched.
pub fn unify(a: &FeatureStructure, b: &FeatureStructure) -> Option<FeatureStructure> {
    let mut bld = FsBuilder::new();
    let ra = bld.import(a);
    let rb = bld.import(b);
    bld.uni(ra, rb).ok()?;
    bld.extract(ra).ok()
}

/// Is `unify(a, b)` defined?
pub fn unifiable(a: &FeatureStructure, b: &FeatureStructure) -> bool {
    unify(a, b).is_some()
}

/// Value clash during destructive unification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Clash;

/// The builder graph reachable from the requested root contains a cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cyclic;

#[derive(Clone, Debug)]
pub(crate) enum BKind {
    Var,
    Atom(Sym),
    Index(Sym),
    Complex(BTreeMap<Sym, usize>),
}

/// Mutable construction arena with a union-find over nodes. This is the
/// engine under [`unify`] and the target of all parsing.
///
/// After a `uni` returns `Err(Clash)` the arena contents are unspecified;
/// drop the builder.
pub struct FsBuilder {
    kinds: Vec<BKind>,
    parent: Vec<usize>,
}

impl FsBuilder {
    pub fn new() -> Self {
        FsBuilder {
            kinds: Vec::new(),
            parent: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, kind: BKind) -> usize {
        self.kinds.push(kind);
        self.parent.push(self.parent.len());
        self.parent.len() - 1
    }

    pub(crate) fn set_kind(&mut self, node: usize, kind: BKind) {
        let repr = self.find(node);
        self.kinds[repr] = kind;
    }

    pub fn var(&mut self) -> usize {
        self.push(BKind::Var)
    }

    pub fn atom(&mut self, sym: Sym) -> usize {
        self.push(BKind::Atom(sym))
    }

    pub fn index(&mut self, tag: Sym) -> usize {
        self.push(BKind::Index(tag))
    }

    pub fn complex(&mut self) -> usize {
        self.push(BKind::Complex(BTreeMap::new()))
    }

    /// Copy a finished structure into this arena; returns its root.
    pub fn import(&mut self, fs: &FeatureStructure) -> usize {
        let offset = self.kinds.len();
        for node in &fs.nodes {
            let kind = match node {
                Node::Var => BKind::Var,
                Node::Atom(s) => BKind::Atom(s.clone()),
                Node::Index(s) => BKind::Index(s.clone()),
                Node::Complex(map) => BKind::Complex(
                    map.iter()
                        .map(|(l, c)| (l.clone(), c.idx() + offset))
                        .collect(),
                ),
            };
            self.push(kind);
        }
        offset
    }

    pub fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    /// Walk `path` from `from`, creating missing structure. A `Var` on the
    /// way is refined to a complex node; an atom or index blocks the walk.
    pub fn ensure_path(&mut self, from: usize, path: &Path) -> Result<usize, Clash> {
        enum Step {
            Refine,
            Found(usize),
            Insert,
        }
        let mut cur = from;
        for label in &path.0 {
            cur = self.find(cur);
            let step = match &self.kinds[cur] {
                BKind::Var => Step::Refine,
                BKind::Complex(map) => match map.get(label) {
                    Some(&child) => Step::Found(child),
                    None => Step::Insert,
                },
                BKind::Atom(_) | BKind::Index(_) => return Err(Clash),
            };
            match step {
                Step::Found(child) => cur = child,
                Step::Refine => {
                    let child = self.var();
                    let mut map = BTreeMap::new();
                    map.insert(label.clone(), child);
                    self.kinds[cur] = BKind::Complex(map);
                    cur = child;
                }
                Step::Insert => {
                    let child = self.var();
                    if let BKind::Complex(map) = &mut self.kinds[cur] {
                        map.insert(label.clone(), child);
                    }
                    cur = child;
                }
            }
        }
        Ok(self.find(cur))
    }

    /// Walk `path` from `from` without creating anything along the way.
    pub(crate) fn peek_path(&mut self, from: usize, path: &Path) -> Option<usize> {
        let mut cur = from;
        for label in &path.0 {
            cur = self.find(cur);
            match &self.kinds[cur] {
                BKind::Complex(map) => cur = *map.get(label)?,
                _ => return None,
            }
        }
        Some(self.find(cur))
    }

    pub(crate) fn kind(&mut self, node: usize) -> BKind {
        let repr = self.find(node);
        self.kinds[repr].clone()
    }

    /// Destructive unification of two arena nodes.
    pub fn uni(&mut self, x: usize, y: usize) -> Result<(), Clash> {
        let x = self.find(x);
        let y = self.find(y);
        if x == y {
            return Ok(());
        }
        let kx = std::mem::replace(&mut self.kinds[x], BKind::Var);
        let ky = std::mem::replace(&mut self.kinds[y], BKind::Var);
        match (kx, ky) {
            (BKind::Var, ky) => {
                self.kinds[y] = ky;
                self.parent[x] = y;
            }
            (kx, BKind::Var) => {
                self.kinds[x] = kx;
                self.parent[y] = x;
            }
            (BKind::Atom(a), BKind::Atom(b)) => {
                if a != b {
                    return Err(Clash);
                }
                self.kinds[y] = BKind::Atom(b);
                self.parent[x] = y;
            }
            (BKind::Index(a), BKind::Index(b)) => {
                if a != b {
                    return Err(Clash);
                }
                self.kinds[y] = BKind::Index(b);
                self.parent[x] = y;
            }
            (BKind::Complex(mx), BKind::Complex(my)) => {
                let mut merged = my;
                let mut pending = Vec::new();
                for (label, cx) in mx {
                    match merged.get(&label) {
                        Some(&cy) => pending.push((cx, cy)),
                        None => {
                            merged.insert(label, cx);
                        }
                    }
                }
                self.kinds[y] = BKind::Complex(merged);
                // link before recursing so reentrant merges terminate
                self.parent[x] = y;
                for (cx, cy) in pending {
                    self.uni(cx, cy)?;
                }
            }
            _ => return Err(Clash),
        }
        Ok(())
    }

    /// Canonicalize everything reachable from `root` into an immutable
    /// structure. Fails iff unification produced a cycle.
    pub fn extract(&mut self, root: usize) -> Result<FeatureStructure, Cyclic> {
        let root = self.find(root);
        // resolve every child to its representative up front so the walk
        // below sees a plain graph
        let mut resolved: Vec<BKind> = Vec::with_capacity(self.kinds.len());
        for i in 0..self.kinds.len() {
            let repr = self.find(i);
            let kind = self.kinds[repr].clone();
            resolved.push(match kind {
                BKind::Complex(map) => {
                    let mut out = BTreeMap::new();
                    for (l, c) in map {
                        out.insert(l, self.find(c));
                    }
                    BKind::Complex(out)
                }
                other => other,
            });
        }

        const WHITE: u8 = 0;
        const GRAY: u8 = 1;
        const BLACK: u8 = 2;
        enum Step {
            Enter(usize),
            Leave(usize),
        }
        let mut color = vec![WHITE; resolved.len()];
        let mut order: Vec<usize> = Vec::new();
        let mut number: HashMap<usize, u32> = HashMap::new();
        let mut stack = vec![Step::Enter(root)];
        while let Some(step) = stack.pop() {
            match step {
                Step::Enter(u) => match color[u] {
                    BLACK => {}
                    GRAY => return Err(Cyclic),
                    _ => {
                        color[u] = GRAY;
                        number.insert(u, order.len() as u32);
                        order.push(u);
                        stack.push(Step::Leave(u));
                        if let BKind::Complex(map) = &resolved[u] {
                            for (_, &child) in map.iter().rev() {
                                stack.push(Step::Enter(child));
                            }
                        }
                    }
                },
                Step::Leave(u) => color[u] = BLACK,
            }
        }

        let nodes = order
            .iter()
            .map(|&u| match &resolved[u] {
                BKind::Var => Node::Var,
                BKind::Atom(s) => Node::Atom(s.clone()),
                BKind::Index(s) => Node::Index(s.clone()),
                BKind::Complex(map) => Node::Complex(
                    map.iter()
                        .map(|(l, c)| (l.clone(), NodeId(number[c])))
                        .collect(),
                ),
            })
            .collect();
        Ok(FeatureStructure { nodes })
    }
}

impl Default for FsBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Display for FeatureStructure {
    /// Flat form: `Cat[path=value, path=#n]`, entries in path order. `#n`
    /// marks a reentrancy class; its first occurrence also shows the value
    /// when the node is a leaf, and a shared complex is expanded only under
    /// that first occurrence. `_` is an unconstrained node, `~tag` a
    /// concrete index.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node(ROOT) {
            Node::Var => return f.write_str("_"),
            Node::Atom(s) => return write!(f, "{s}"),
            Node::Index(s) => return write!(f, "~{s}"),
            Node::Complex(_) => {}
        }
        let mut seen: HashMap<NodeId, u32> = HashMap::new();
        for (path, id) in self.paths() {
            if path.is_root() {
                continue;
            }
            *seen.entry(id).or_insert(0) += 1;
        }
        let shared: HashSet<NodeId> = seen
            .iter()
            .filter(|&(_, &count)| count > 1)
            .map(|(&id, _)| id)
            .collect();

        let cat = self.category();
        match &cat {
            Some(sym) => write!(f, "{sym}[")?,
            None => f.write_str("?[")?,
        }
        let mut classes: HashMap<NodeId, u32> = HashMap::new();
        let mut entries: Vec<String> = Vec::new();
        self.fmt_walk(
            ROOT,
            &Path::root(),
            cat.is_some(),
            &shared,
            &mut classes,
            &mut entries,
        );
        write!(f, "{}]", entries.join(", "))
    }
}

impl FeatureStructure {
    fn fmt_walk(
        &self,
        id: NodeId,
        path: &Path,
        skip_cat: bool,
        shared: &HashSet<NodeId>,
        classes: &mut HashMap<NodeId, u32>,
        entries: &mut Vec<String>,
    ) {
        if !path.is_root() {
            if skip_cat && path.0.len() == 1 && path.0[0].as_str() == CAT_LABEL {
                return; // already shown as the category prefix
            }
            if shared.contains(&id) {
                if let Some(&class) = classes.get(&id) {
                    entries.push(format!("{path}=#{class}"));
                    return; // expand a shared subtree only once
                }
                let class = classes.len() as u32;
                classes.insert(id, class);
                match self.node(id) {
                    Node::Atom(s) => entries.push(format!("{path}=#{class}:{s}")),
                    Node::Index(s) => entries.push(format!("{path}=#{class}:~{s}")),
                    _ => entries.push(format!("{path}=#{class}")),
                }
            } else {
                match self.node(id) {
                    Node::Var => entries.push(format!("{path}=_")),
                    Node::Atom(s) => entries.push(format!("{path}={s}")),
                    Node::Index(s) => entries.push(format!("{path}=~{s}")),
                    Node::Complex(_) => {}
                }
            }
        }
        if let Node::Complex(map) = self.node(id) {
            for (label, child) in map {
                self.fmt_walk(
                    *child,
                    &path.child(label.clone()),
                    skip_cat,
                    shared,
                    classes,
                    entries,
                );
            }
        }
    }
}

impl fmt::Debug for FeatureStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(s: &str) -> Sym {
        Sym::from(s)
    }

    fn path(s: &str) -> Path {
        Path::parse(s).unwrap()
    }

    /// `N[sem.arg1=~1, sem.reln=dog]`, the shape of an indexed noun sign.
    fn dog_sign() -> FeatureStructure {
        let mut b = FsBuilder::new();
        let root = b.complex();
        let cat = b.ensure_path(root, &path("cat")).unwrap();
        let atom = b.atom(sym("N"));
        b.uni(cat, atom).unwrap();
        let reln = b.ensure_path(root, &path("sem.reln")).unwrap();
        let dog = b.atom(sym("dog"));
        b.uni(reln, dog).unwrap();
        let arg1 = b.ensure_path(root, &path("sem.arg1")).unwrap();
        let idx = b.index(sym("1"));
        b.uni(arg1, idx).unwrap();
        b.extract(root).unwrap()
    }

    /// The daughter of a bare-noun projection rule: `N[sem=_]`.
    fn n_daughter() -> FeatureStructure {
        let mut b = FsBuilder::new();
        let root = b.complex();
        let cat = b.ensure_path(root, &path("cat")).unwrap();
        let atom = b.atom(sym("N"));
        b.uni(cat, atom).unwrap();
        b.ensure_path(root, &path("sem")).unwrap();
        b.extract(root).unwrap()
    }

    /// A sentence rule as one combined structure: `mother.sem` token
    /// identical with `d1.sem`, and `d0.sem.arg1` with `d1.sem.arg2`.
    fn sentence_rule_structure() -> FeatureStructure {
        let mut b = FsBuilder::new();
        let root = b.complex();
        for (position, cat) in [("mother", "S"), ("d0", "NP"), ("d1", "VP")] {
            let node = b
                .ensure_path(root, &Path::parse(&format!("{position}.cat")).unwrap())
                .unwrap();
            let atom = b.atom(sym(cat));
            b.uni(node, atom).unwrap();
        }
        let ms = b.ensure_path(root, &path("mother.sem")).unwrap();
        let vs = b.ensure_path(root, &path("d1.sem")).unwrap();
        b.uni(ms, vs).unwrap();
        let np1 = b.ensure_path(root, &path("d0.sem.arg1")).unwrap();
        let vp2 = b.ensure_path(root, &path("d1.sem.arg2")).unwrap();
        b.uni(np1, vp2).unwrap();
        b.extract(root).unwrap()
    }

    #[test]
    fn unify_with_self_is_identity() {
        let dog = dog_sign();
        assert_eq!(unify(&dog, &dog), Some(dog));
    }

    #[test]
    fn unify_instantiates_rule_daughter() {
        let out = unify(&n_daughter(), &dog_sign()).unwrap();
        let reln = out.resolve(&path("sem.reln")).unwrap();
        assert_eq!(out.node(reln), &Node::Atom(sym("dog")));
        let arg1 = out.resolve(&path("sem.arg1")).unwrap();
        assert_eq!(out.node(arg1), &Node::Index(sym("1")));
        assert_eq!(out, dog_sign());
    }

    #[test]
    fn distinct_index_tags_clash() {
        let mut b = FsBuilder::new();
        let one = b.index(sym("1"));
        let i1 = b.extract(one).unwrap();
        let mut b = FsBuilder::new();
        let two = b.index(sym("2"));
        let i2 = b.extract(two).unwrap();
        assert_eq!(unify(&i1, &i2), None);
        assert_eq!(unify(&i1, &i1.clone()), Some(i1));
    }

    #[test]
    fn index_does_not_unify_with_same_spelled_atom() {
        let mut b = FsBuilder::new();
        let n = b.index(sym("1"));
        let i = b.extract(n).unwrap();
        let mut b = FsBuilder::new();
        let n = b.atom(sym("1"));
        let a = b.extract(n).unwrap();
        assert_eq!(unify(&i, &a), None);
    }

    #[test]
    fn variables_absorb_anything() {
        let top = FeatureStructure::top();
        let dog = dog_sign();
        assert_eq!(unify(&top, &dog), Some(dog));
    }

    #[test]
    fn token_identity_tracks_sharing() {
        let fs = sentence_rule_structure();
        assert!(fs.token_identical(&path("mother.sem"), &path("d1.sem")));
        assert!(fs.token_identical(&path("d0.sem.arg1"), &path("d1.sem.arg2")));
        assert!(fs.token_identical(&path("mother.sem.arg2"), &path("d0.sem.arg1")));
        assert!(!fs.token_identical(&path("mother.sem"), &path("d0.sem")));
        assert!(!fs.token_identical(&path("mother.sem"), &path("missing")));
    }

    #[test]
    fn display_is_flat_and_sorted() {
        assert_eq!(dog_sign().to_string(), "N[sem.arg1=~1, sem.reln=dog]");
        assert_eq!(
            sentence_rule_structure().to_string(),
            "?[d0.cat=NP, d0.sem.arg1=#0, d1.cat=VP, d1.sem=#1, d1.sem.arg2=#0, \
             mother.cat=S, mother.sem=#1]"
        );
    }

    #[test]
    fn grafting_an_identical_subtree_changes_nothing() {
        let fs = sentence_rule_structure();
        // mother.sem and d1.sem are one node, so unifying a copy of that
        // node back in through a wrapper must leave the structure as it was
        let sub = fs.extract_at(&path("d1.sem")).unwrap();
        let wrapped = sub.nest(&path("mother.sem"));
        assert_eq!(unify(&fs, &wrapped), Some(fs));
    }

    #[test]
    fn unification_that_would_build_a_cycle_fails() {
        let mut b = FsBuilder::new();
        let root = b.complex();
        let inner = b.ensure_path(root, &path("f.g")).unwrap();
        b.uni(inner, root).unwrap();
        assert!(b.extract(root).is_err());
    }

    #[test]
    fn subsumption_orders_generality() {
        let dog = dog_sign();
        let daughter = n_daughter();
        let both = unify(&daughter, &dog).unwrap();
        assert!(daughter.subsumes(&both));
        assert!(dog.subsumes(&both));
        assert!(!both.subsumes(&daughter));
        // refining one end of a shared pair must not be mistaken for
        // generalization
        let fs = sentence_rule_structure();
        let mut b = FsBuilder::new();
        let root = b.import(&fs);
        let m = b.ensure_path(root, &path("mother.sem.extra")).unwrap();
        let a = b.atom(sym("x"));
        b.uni(m, a).unwrap();
        let refined = b.extract(root).unwrap();
        assert!(fs.subsumes(&refined));
        assert!(!refined.subsumes(&fs));
    }

    #[test]
    fn canonical_form_makes_isomorphism_equality() {
        let build = |swap: bool| {
            let mut b = FsBuilder::new();
            let root = b.complex();
            let order = if swap { ["b", "a"] } else { ["a", "b"] };
            for label in order {
                let node = b.ensure_path(root, &path(label)).unwrap();
                let atom = b.atom(sym("v"));
                b.uni(node, atom).unwrap();
            }
            b.extract(root).unwrap()
        };
        assert_eq!(build(false), build(true));
    }

    #[test]
    fn paths_enumerates_in_lexicographic_order() {
        let fs = dog_sign();
        let listed: Vec<String> = fs.paths().iter().map(|(p, _)| p.to_string()).collect();
        assert_eq!(listed, ["<root>", "cat", "sem", "sem.arg1", "sem.reln"]);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn leaf() -> impl Strategy<Value = BKind> {
            prop_oneof![
                Just(BKind::Var),
                prop_oneof![Just("a"), Just("b"), Just("c")].prop_map(|s| BKind::Atom(sym(s))),
                prop_oneof![Just("1"), Just("2")].prop_map(|s| BKind::Index(sym(s))),
            ]
        }

        /// Random small structure: a tree of leaves plus a few extra `uni`
        /// calls to introduce sharing.
        fn arb_fs() -> impl Strategy<Value = FeatureStructure> {
            let spec = prop::collection::vec((0..4u8, leaf()), 1..6);
            let merges = prop::collection::vec((0..8usize, 0..8usize), 0..3);
            (spec, merges).prop_filter_map(
                "cyclic or clashing construction",
                |(spec, merges)| {
                    let labels = ["f", "g", "h", "sem"];
                    let mut b = FsBuilder::new();
                    let root = b.complex();
                    let mut at = Vec::new();
                    for (i, (label_pick, leaf)) in spec.iter().enumerate() {
                        let depth = (i % 2) + 1;
                        let mut p = Vec::new();
                        for d in 0..depth {
                            p.push(Sym::from(labels[(*label_pick as usize + d + i) % 4]));
                        }
                        let node = b.ensure_path(root, &Path(p)).ok()?;
                        let leaf_node = b.push(leaf.clone());
                        b.uni(node, leaf_node).ok()?;
                        at.push(node);
                    }
                    for (x, y) in merges {
                        let a = at[x % at.len()];
                        let c = at[y % at.len()];
                        b.uni(a, c).ok()?;
                    }
                    b.extract(root).ok()
                },
            )
        }

        proptest! {
            #[test]
            fn unify_is_commutative(a in arb_fs(), b in arb_fs()) {
                prop_assert_eq!(unify(&a, &b), unify(&b, &a));
            }

            #[test]
            fn unify_is_idempotent(a in arb_fs()) {
                prop_assert_eq!(unify(&a, &a), Some(a));
            }

            #[test]
            fn unify_is_associative(a in arb_fs(), b in arb_fs(), c in arb_fs()) {
                let left = unify(&a, &b).and_then(|ab| unify(&ab, &c));
                let right = unify(&b, &c).and_then(|bc| unify(&a, &bc));
                prop_assert_eq!(left, right);
            }

            #[test]
            fn inputs_subsume_any_result(a in arb_fs(), b in arb_fs()) {
                if let Some(out) = unify(&a, &b) {
                    prop_assert!(a.subsumes(&out));
                    prop_assert!(b.subsumes(&out));
                }
            }
        }
    }
}
