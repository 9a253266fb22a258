//! Constituent-tree and dependency-graph utilities.
//!
//! Feature extraction asks a small set of questions about the syntax of a
//! sentence: what category a span maps to, who its neighbours are, and how
//! two tokens are connected through the constituent tree or the dependency
//! graph. Everything here is deterministic and borrows from the parsed
//! structures; nothing allocates per query beyond the returned path.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::corpus::{Document, TokenSpan};

/// Placeholder label for absent neighbours and cross-sentence paths.
pub const NONE_LABEL: &str = "NONE";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SyntaxError {
    #[error("token {token} is outside this sentence's tree")]
    TokenOutsideTree { token: usize },
    #[error("span {first}..={last} crosses the sentence boundary of this tree")]
    SpanOutsideTree { first: usize, last: usize },
    #[error("token {token} is not in this sentence's dependency graph")]
    TokenOutsideGraph { token: usize },
}

// ---------------------------------------------------------------------------
// Constituent trees
// ---------------------------------------------------------------------------

/// One node of a constituent tree. Preterminals carry the word and exactly
/// one token; internal nodes carry children and a covered token range.
#[derive(Debug, Clone)]
pub struct TreeNode {
    pub label: String,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// First and last covered token, inclusive, in document token indices.
    pub first_token: usize,
    pub last_token: usize,
    /// For preterminals, the covered token and its surface word.
    pub token: Option<usize>,
    pub word: Option<String>,
}

impl TreeNode {
    pub fn is_preterminal(&self) -> bool {
        self.token.is_some()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeParseError {
    #[error("unexpected end of bracketed tree text")]
    UnexpectedEnd,
    #[error("unexpected character {0:?} in bracketed tree")]
    UnexpectedChar(char),
    #[error("node {0:?} mixes word and child nodes")]
    MixedNode(String),
    #[error("node {0:?} has neither word nor children")]
    EmptyNode(String),
    #[error("trailing text after the root node")]
    TrailingText,
}

/// A labeled ordered tree whose preterminals map 1:1, in order, onto a
/// contiguous run of document tokens.
#[derive(Debug, Clone)]
pub struct ConstTree {
    nodes: Vec<TreeNode>,
    root: usize,
    /// Document index of the first covered token.
    first_token: usize,
    /// Preterminal node id for each covered token, in token order.
    preterminals: Vec<usize>,
}

impl ConstTree {
    /// Parses a bracketed tree like `(S (NP (DT the) (NN dog)) (VP (VBD ran)))`.
    /// Leaves are numbered left to right starting at `first_token`.
    pub fn parse(text: &str, first_token: usize) -> Result<ConstTree, TreeParseError> {
        let mut parser = TreeParser {
            chars: text.char_indices().peekable(),
            text,
            nodes: Vec::new(),
            next_token: first_token,
            preterminals: Vec::new(),
        };
        parser.skip_ws();
        let root = parser.node(None)?;
        parser.skip_ws();
        if parser.chars.next().is_some() {
            return Err(TreeParseError::TrailingText);
        }
        Ok(ConstTree {
            nodes: parser.nodes,
            root,
            first_token,
            preterminals: parser.preterminals,
        })
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn leaf_count(&self) -> usize {
        self.preterminals.len()
    }

    pub fn first_token(&self) -> usize {
        self.first_token
    }

    pub fn last_token(&self) -> usize {
        self.first_token + self.preterminals.len() - 1
    }

    pub fn covers(&self, token: usize) -> bool {
        token >= self.first_token && token <= self.last_token()
    }

    /// Preterminal node for a covered token.
    pub fn preterminal_of(&self, token: usize) -> Result<usize, SyntaxError> {
        if !self.covers(token) {
            return Err(SyntaxError::TokenOutsideTree { token });
        }
        Ok(self.preterminals[token - self.first_token])
    }

    /// The word stored at a covered token's preterminal.
    pub fn word_of(&self, token: usize) -> Result<&str, SyntaxError> {
        let pt = self.preterminal_of(token)?;
        Ok(self.nodes[pt].word.as_deref().unwrap_or(""))
    }

    /// Lowest node whose covered range contains every token of `span`.
    /// For a single-token span this is the token's preterminal.
    pub fn lowest_covering(&self, span: &TokenSpan) -> Result<usize, SyntaxError> {
        let (first, last) = (span.first(), span.last());
        if !self.covers(first) || !self.covers(last) {
            return Err(SyntaxError::SpanOutsideTree { first, last });
        }
        // Walk up from the first token's preterminal until the node covers
        // the whole span; parents only grow the range, so the first hit is
        // the lowest covering node.
        let mut id = self.preterminals[first - self.first_token];
        while self.nodes[id].last_token < last || self.nodes[id].first_token > first {
            id = self.nodes[id].parent.expect("root covers the whole sentence");
        }
        Ok(id)
    }

    /// True if the subtree rooted at `id` contains a node labeled `label`
    /// (including `id` itself).
    pub fn subtree_contains_label(&self, id: usize, label: &str) -> bool {
        if self.nodes[id].label == label {
            return true;
        }
        self.nodes[id]
            .children
            .iter()
            .any(|&c| self.subtree_contains_label(c, label))
    }

    fn sibling(&self, id: usize, offset: isize) -> Option<usize> {
        let parent = self.nodes[id].parent?;
        let siblings = &self.nodes[parent].children;
        let pos = siblings.iter().position(|&c| c == id)? as isize + offset;
        if pos < 0 {
            return None;
        }
        siblings.get(pos as usize).copied()
    }

    /// Renders the tree back to bracketed text.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_node(self.root, &mut out);
        out
    }

    fn render_node(&self, id: usize, out: &mut String) {
        let node = &self.nodes[id];
        out.push('(');
        out.push_str(&node.label);
        if let Some(word) = &node.word {
            out.push(' ');
            out.push_str(word);
        } else {
            for &c in &node.children {
                out.push(' ');
                self.render_node(c, out);
            }
        }
        out.push(')');
    }
}

struct TreeParser<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    text: &'a str,
    nodes: Vec<TreeNode>,
    next_token: usize,
    preterminals: Vec<usize>,
}

impl<'a> TreeParser<'a> {
    fn skip_ws(&mut self) {
        while matches!(self.chars.peek(), Some((_, c)) if c.is_whitespace()) {
            self.chars.next();
        }
    }

    fn atom(&mut self) -> Result<&'a str, TreeParseError> {
        let start = match self.chars.peek() {
            Some(&(i, c)) if c != '(' && c != ')' && !c.is_whitespace() => i,
            Some(&(_, c)) => return Err(TreeParseError::UnexpectedChar(c)),
            None => return Err(TreeParseError::UnexpectedEnd),
        };
        let mut end = self.text.len();
        while let Some(&(i, c)) = self.chars.peek() {
            if c == '(' || c == ')' || c.is_whitespace() {
                end = i;
                break;
            }
            self.chars.next();
        }
        Ok(&self.text[start..end])
    }

    fn node(&mut self, parent: Option<usize>) -> Result<usize, TreeParseError> {
        match self.chars.next() {
            Some((_, '(')) => {}
            Some((_, c)) => return Err(TreeParseError::UnexpectedChar(c)),
            None => return Err(TreeParseError::UnexpectedEnd),
        }
        self.skip_ws();
        let label = self.atom()?.to_string();
        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            label: label.clone(),
            parent,
            children: Vec::new(),
            first_token: 0,
            last_token: 0,
            token: None,
            word: None,
        });
        self.skip_ws();
        match self.chars.peek() {
            Some(&(_, '(')) => {
                // Internal node: one or more children.
                let mut children = Vec::new();
                while matches!(self.chars.peek(), Some(&(_, '('))) {
                    children.push(self.node(Some(id))?);
                    self.skip_ws();
                }
                match self.chars.next() {
                    Some((_, ')')) => {}
                    Some((_, c)) => return Err(TreeParseError::UnexpectedChar(c)),
                    None => return Err(TreeParseError::UnexpectedEnd),
                }
                let first = self.nodes[children[0]].first_token;
                let last = self.nodes[*children.last().unwrap()].last_token;
                let node = &mut self.nodes[id];
                node.children = children;
                node.first_token = first;
                node.last_token = last;
            }
            Some(&(_, ')')) => return Err(TreeParseError::EmptyNode(label)),
            Some(_) => {
                // Preterminal: a single word.
                let word = self.atom()?.to_string();
                self.skip_ws();
                match self.chars.next() {
                    Some((_, ')')) => {}
                    Some((_, '(')) => return Err(TreeParseError::MixedNode(label)),
                    Some((_, c)) => return Err(TreeParseError::UnexpectedChar(c)),
                    None => return Err(TreeParseError::UnexpectedEnd),
                }
                let token = self.next_token;
                self.next_token += 1;
                let node = &mut self.nodes[id];
                node.first_token = token;
                node.last_token = token;
                node.token = Some(token);
                node.word = Some(word);
                self.preterminals.push(id);
            }
            None => return Err(TreeParseError::UnexpectedEnd),
        }
        Ok(id)
    }
}

// ---------------------------------------------------------------------------
// Span category queries
// ---------------------------------------------------------------------------

/// Label of the lowest node covering the whole span. For a single-token
/// span this is the token's POS category.
pub fn self_category<'t>(tree: &'t ConstTree, span: &TokenSpan) -> Result<&'t str, SyntaxError> {
    let id = tree.lowest_covering(span)?;
    Ok(&tree.node(id).label)
}

/// Label of the covering node's parent, `None` at the root.
pub fn parent_category<'t>(
    tree: &'t ConstTree,
    span: &TokenSpan,
) -> Result<Option<&'t str>, SyntaxError> {
    let id = tree.lowest_covering(span)?;
    Ok(tree.node(id).parent.map(|p| tree.node(p).label.as_str()))
}

/// Label of the covering node's left sibling, `None` when there is none.
pub fn left_sibling_category<'t>(
    tree: &'t ConstTree,
    span: &TokenSpan,
) -> Result<Option<&'t str>, SyntaxError> {
    let id = tree.lowest_covering(span)?;
    Ok(tree.sibling(id, -1).map(|s| tree.node(s).label.as_str()))
}

/// Label of the covering node's right sibling, `None` when there is none.
pub fn right_sibling_category<'t>(
    tree: &'t ConstTree,
    span: &TokenSpan,
) -> Result<Option<&'t str>, SyntaxError> {
    let id = tree.lowest_covering(span)?;
    Ok(tree.sibling(id, 1).map(|s| tree.node(s).label.as_str()))
}

/// True if the covering node has a right sibling whose subtree contains a
/// VP node (the sibling itself counts).
pub fn right_sibling_contains_vp(tree: &ConstTree, span: &TokenSpan) -> Result<bool, SyntaxError> {
    let id = tree.lowest_covering(span)?;
    Ok(match tree.sibling(id, 1) {
        Some(s) => tree.subtree_contains_label(s, "VP"),
        None => false,
    })
}

// ---------------------------------------------------------------------------
// Paths
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    Up,
    Down,
}

impl Dir {
    fn sep(self) -> char {
        match self {
            Dir::Up => '/',
            Dir::Down => '\\',
        }
    }
}

/// A walk through the constituent tree: node labels joined by `/` for
/// up-hops and `\` for down-hops, e.g. `IN/PP/VP\VP\VBD`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstPath {
    labels: Vec<String>,
    dirs: Vec<Dir>,
    preterminal: Vec<bool>,
}

impl ConstPath {
    pub fn hops(&self) -> usize {
        self.dirs.len()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, label) in self.labels.iter().enumerate() {
            if i > 0 {
                out.push(self.dirs[i - 1].sep());
            }
            out.push_str(label);
        }
        out
    }

    /// Path with POS (preterminal) endpoints dropped and adjacent repeated
    /// labels merged: `IN/PP/VP\VP\VBD` collapses to `PP/VP`.
    pub fn collapsed(&self) -> String {
        let mut kept: Vec<(&str, Option<Dir>)> = Vec::new();
        for (i, label) in self.labels.iter().enumerate() {
            if self.preterminal[i] {
                continue;
            }
            let incoming = if i > 0 { Some(self.dirs[i - 1]) } else { None };
            match kept.last() {
                Some(&(prev, _)) if prev == label.as_str() => {}
                _ => kept.push((label, incoming)),
            }
        }
        let mut out = String::new();
        for (i, (label, incoming)) in kept.iter().enumerate() {
            if i > 0 {
                // The first kept label never prints its separator, so a
                // missing incoming direction only matters at position 0.
                out.push(incoming.unwrap_or(Dir::Up).sep());
            }
            out.push_str(label);
        }
        out
    }
}

impl fmt::Display for ConstPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Path from a token's preterminal, up through the lowest common ancestor,
/// down to the lowest node covering `to`.
pub fn const_path(
    tree: &ConstTree,
    from_token: usize,
    to: &TokenSpan,
) -> Result<ConstPath, SyntaxError> {
    let from = tree.preterminal_of(from_token)?;
    let to = tree.lowest_covering(to)?;
    let mut from_chain = ancestor_chain(tree, from);
    let mut to_chain = ancestor_chain(tree, to);
    // Drop the shared suffix down to the lowest common ancestor.
    while from_chain.len() > 1
        && to_chain.len() > 1
        && from_chain[from_chain.len() - 2] == to_chain[to_chain.len() - 2]
    {
        from_chain.pop();
        to_chain.pop();
    }
    // from_chain now ends at the LCA; to_chain mirrors it.
    let mut labels = Vec::new();
    let mut dirs = Vec::new();
    let mut preterminal = Vec::new();
    for (i, &id) in from_chain.iter().enumerate() {
        if i > 0 {
            dirs.push(Dir::Up);
        }
        labels.push(tree.node(id).label.clone());
        preterminal.push(tree.node(id).is_preterminal());
    }
    for &id in to_chain.iter().rev().skip(1) {
        dirs.push(Dir::Down);
        labels.push(tree.node(id).label.clone());
        preterminal.push(tree.node(id).is_preterminal());
    }
    Ok(ConstPath {
        labels,
        dirs,
        preterminal,
    })
}

fn ancestor_chain(tree: &ConstTree, id: usize) -> Vec<usize> {
    let mut chain = vec![id];
    let mut cur = id;
    while let Some(p) = tree.node(cur).parent {
        chain.push(p);
        cur = p;
    }
    chain
}

// ---------------------------------------------------------------------------
// Dependency graphs
// ---------------------------------------------------------------------------

/// Single-sentence dependency tree: every token except the root has exactly
/// one head, and all arcs stay inside the sentence.
#[derive(Debug, Clone)]
pub struct DepGraph {
    root: usize,
    /// dependent -> (head, arc label); the root has no entry.
    head: BTreeMap<usize, (usize, String)>,
}

impl DepGraph {
    /// Builds a graph from per-token heads. Callers have already checked
    /// ranges and uniqueness; this checks that every token actually reaches
    /// the root (i.e. the arcs form a tree, not cycles).
    pub fn new(root: usize, head: BTreeMap<usize, (usize, String)>) -> Result<DepGraph, String> {
        let graph = DepGraph { root, head };
        let bound = graph.head.len() + 1;
        for &tok in graph.head.keys() {
            let mut cur = tok;
            let mut steps = 0;
            while cur != graph.root {
                match graph.head.get(&cur) {
                    Some(&(h, _)) => cur = h,
                    None => return Err(format!("token {cur} has no head and is not the root")),
                }
                steps += 1;
                if steps > bound {
                    return Err(format!("dependency cycle reached from token {tok}"));
                }
            }
        }
        Ok(graph)
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn contains(&self, token: usize) -> bool {
        token == self.root || self.head.contains_key(&token)
    }

    /// Head and arc label of a token; `None` for the root.
    pub fn head_of(&self, token: usize) -> Option<(usize, &str)> {
        self.head.get(&token).map(|(h, l)| (*h, l.as_str()))
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize, &str)> + '_ {
        self.head.iter().map(|(&d, (h, l))| (*h, d, l.as_str()))
    }

    pub fn hops_to_root(&self, token: usize) -> Result<usize, SyntaxError> {
        if !self.contains(token) {
            return Err(SyntaxError::TokenOutsideGraph { token });
        }
        let mut cur = token;
        let mut hops = 0;
        while let Some(&(h, _)) = self.head.get(&cur) {
            cur = h;
            hops += 1;
        }
        Ok(hops)
    }

    fn chain_to_root(&self, token: usize) -> Vec<usize> {
        let mut chain = vec![token];
        let mut cur = token;
        while let Some(&(h, _)) = self.head.get(&cur) {
            chain.push(h);
            cur = h;
        }
        chain
    }
}

/// A walk through the dependency tree: arc labels prefixed with `/` when
/// moving from dependent to head and `\` when moving from head to
/// dependent, e.g. `/ccomp\prep\pcomp`. Empty for a token to itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepPath {
    hops: Vec<(Dir, String)>,
}

impl DepPath {
    pub fn len(&self) -> usize {
        self.hops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hops.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (dir, label) in &self.hops {
            out.push(dir.sep());
            out.push_str(label);
        }
        out
    }
}

impl fmt::Display for DepPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// The unique path between two tokens of one sentence's dependency tree.
pub fn dep_path(graph: &DepGraph, from: usize, to: usize) -> Result<DepPath, SyntaxError> {
    for t in [from, to] {
        if !graph.contains(t) {
            return Err(SyntaxError::TokenOutsideGraph { token: t });
        }
    }
    let from_chain = graph.chain_to_root(from);
    let to_chain = graph.chain_to_root(to);
    // Lowest common ancestor: strip the shared suffix.
    let mut fi = from_chain.len();
    let mut ti = to_chain.len();
    while fi > 1 && ti > 1 && from_chain[fi - 2] == to_chain[ti - 2] {
        fi -= 1;
        ti -= 1;
    }
    let mut hops = Vec::new();
    for &tok in &from_chain[..fi - 1] {
        let (_, label) = graph.head_of(tok).expect("non-root on upward walk");
        hops.push((Dir::Up, label.to_string()));
    }
    for &tok in to_chain[..ti - 1].iter().rev() {
        let (_, label) = graph.head_of(tok).expect("non-root on downward walk");
        hops.push((Dir::Down, label.to_string()));
    }
    Ok(DepPath { hops })
}

/// Dependency-step distance between any two document tokens. Within a
/// sentence this is the arc count of the unique dependency path. Across
/// sentences the walk is routed through the sentence roots: hops from `a`
/// to its root, one step per sentence boundary crossed, hops from `b`'s
/// root down to `b`. Symmetric by construction.
pub fn step_distance(doc: &Document, a: usize, b: usize) -> usize {
    let sa = doc.sentence_of(a);
    let sb = doc.sentence_of(b);
    if sa == sb {
        let graph = &doc.sentences[sa].deps;
        return dep_path(graph, a, b)
            .expect("tokens verified in sentence")
            .len();
    }
    let up = doc.sentences[sa]
        .deps
        .hops_to_root(a)
        .expect("token in own sentence graph");
    let down = doc.sentences[sb]
        .deps
        .hops_to_root(b)
        .expect("token in own sentence graph");
    up + sa.abs_diff(sb) + down
}
