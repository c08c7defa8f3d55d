//! Penn-Treebank-style bracketed constituency trees over MT tokens.
//!
//! `(S (NP (DT the) (NN cat)) (VP (VBD sat)))`: every `(` opens a labeled
//! constituent, bare tokens are leaves. An unlabeled outer wrapper
//! (`( (S ...) )`) is removed, `-NONE-` trace subtrees are dropped, and
//! functional suffixes (`NP-SBJ-1` -> `NP`) are stripped. Bracket escapes
//! (`-LRB-` and friends) in leaves are decoded to the literal characters.

use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::phrase::Span;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("unbalanced parentheses at byte {0}")]
    Unbalanced(usize),
    #[error("empty constituent at byte {0}")]
    EmptyConstituent(usize),
    #[error("constituent without label at byte {0}")]
    MissingLabel(usize),
    #[error("input is not a bracketed tree")]
    NotATree,
    #[error("unexpected input after tree at byte {0}")]
    TrailingInput(usize),
    #[error("nesting deeper than {MAX_DEPTH} levels")]
    TooDeep,
    #[error("tree has no leaves after removing traces")]
    NoLeaves,
    #[error("leaf {index} is {leaf:?}, MT token is {token:?}")]
    LeafMismatch {
        index: usize,
        leaf: String,
        token: String,
    },
    #[error("tree has {leaves} leaves, MT sentence has {tokens} tokens")]
    LeafCount { leaves: usize, tokens: usize },
    #[error("line {line}: {source}")]
    Line {
        line: usize,
        #[source]
        source: Box<TreeError>,
    },
    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, TreeError>;

/// Deepest bracket nesting accepted by the parser.
pub const MAX_DEPTH: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    pub label: String,
    pub span: Span,
    pub children: Vec<TreeNode>,
    /// Set for leaves only.
    pub leaf_token: Option<String>,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.leaf_token.is_some()
    }

    fn leaf(token: String, index: usize) -> Self {
        Self {
            label: String::new(),
            span: Span::new(index, index),
            children: Vec::new(),
            leaf_token: Some(token),
        }
    }

    fn write_bracketed(&self, out: &mut String) {
        match &self.leaf_token {
            Some(tok) => out.push_str(&escape(tok)),
            None => {
                out.push('(');
                out.push_str(&self.label);
                for c in &self.children {
                    out.push(' ');
                    c.write_bracketed(out);
                }
                out.push(')');
            }
        }
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a str>) {
        match &self.leaf_token {
            Some(t) => out.push(t),
            None => self.children.iter().for_each(|c| c.collect_leaves(out)),
        }
    }

    /// Pre-order traversal.
    pub fn preorder(&self) -> Vec<&TreeNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            out.push(node);
            stack.extend(node.children.iter().rev());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstituentTree {
    pub root: TreeNode,
    pub token_count: usize,
}

const ESCAPES: [(&str, &str); 6] = [
    ("-LRB-", "("),
    ("-RRB-", ")"),
    ("-LSB-", "["),
    ("-RSB-", "]"),
    ("-LCB-", "{"),
    ("-RCB-", "}"),
];

fn unescape(tok: &str) -> String {
    ESCAPES
        .iter()
        .find(|(esc, _)| *esc == tok)
        .map_or_else(|| tok.to_owned(), |(_, lit)| (*lit).to_owned())
}

fn escape(tok: &str) -> String {
    ESCAPES
        .iter()
        .find(|(_, lit)| *lit == tok)
        .map_or_else(|| tok.to_owned(), |(esc, _)| (*esc).to_owned())
}

/// `NP-SBJ-1` -> `NP`, `NP=2` -> `NP`; labels starting with `-` are kept.
fn strip_label(label: &str) -> String {
    if label.starts_with('-') {
        return label.to_owned();
    }
    label
        .split(['-', '='])
        .next()
        .filter(|s| !s.is_empty())
        .unwrap_or(label)
        .to_owned()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tok<'a> {
    Open(usize),
    Close(usize),
    Atom(usize, &'a str),
}

fn lex(text: &str) -> Vec<Tok<'_>> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' => {
                out.push(Tok::Open(i));
                i += 1;
            }
            b')' => {
                out.push(Tok::Close(i));
                i += 1;
            }
            b if b.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len()
                    && !matches!(bytes[i], b'(' | b')')
                    && !bytes[i].is_ascii_whitespace()
                {
                    i += 1;
                }
                out.push(Tok::Atom(start, &text[start..i]));
            }
        }
    }
    out
}

/// Raw s-expression before span assignment.
enum Raw {
    Node { label: String, children: Vec<Raw> },
    Leaf(String),
}

struct Parser<'a> {
    toks: Vec<Tok<'a>>,
    pos: usize,
    len: usize,
    depth: usize,
}

impl<'a> Parser<'a> {
    fn next(&mut self) -> Option<Tok<'a>> {
        let t = self.toks.get(self.pos).copied();
        self.pos += 1;
        t
    }

    fn peek(&self) -> Option<Tok<'a>> {
        self.toks.get(self.pos).copied()
    }

    /// Parses a constituent whose `(` has been consumed. `None` label means
    /// an unlabeled wrapper.
    fn constituent(&mut self, open_at: usize) -> Result<(Option<String>, Vec<Raw>)> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(TreeError::TooDeep);
        }
        let label = match self.peek() {
            Some(Tok::Atom(_, a)) => {
                self.pos += 1;
                Some(a.to_owned())
            }
            Some(Tok::Open(_)) => None,
            Some(Tok::Close(_)) => return Err(TreeError::EmptyConstituent(open_at)),
            None => return Err(TreeError::Unbalanced(self.len)),
        };
        let mut children = Vec::new();
        loop {
            match self.next() {
                Some(Tok::Close(_)) => break,
                Some(Tok::Open(at)) => {
                    let (l, c) = self.constituent(at)?;
                    match l {
                        Some(label) => children.push(Raw::Node { label, children: c }),
                        None => return Err(TreeError::MissingLabel(at)),
                    }
                }
                Some(Tok::Atom(_, a)) => children.push(Raw::Leaf(a.to_owned())),
                None => return Err(TreeError::Unbalanced(self.len)),
            }
        }
        if children.is_empty() {
            return Err(TreeError::EmptyConstituent(open_at));
        }
        self.depth -= 1;
        Ok((label, children))
    }
}

fn prune(raw: Raw) -> Option<Raw> {
    match raw {
        Raw::Leaf(t) => Some(Raw::Leaf(t)),
        Raw::Node { label, children } => {
            if label == "-NONE-" {
                return None;
            }
            let children: Vec<Raw> = children.into_iter().filter_map(prune).collect();
            (!children.is_empty()).then(|| Raw::Node {
                label: strip_label(&label),
                children,
            })
        }
    }
}

fn build(raw: Raw, next: &mut usize) -> TreeNode {
    match raw {
        Raw::Leaf(t) => {
            let node = TreeNode::leaf(unescape(&t), *next);
            *next += 1;
            node
        }
        Raw::Node { label, children } => {
            let start = *next;
            let children: Vec<TreeNode> = children.into_iter().map(|c| build(c, next)).collect();
            TreeNode {
                label,
                span: Span::new(start, *next - 1),
                children,
                leaf_token: None,
            }
        }
    }
}

/// Parses one bracketed tree.
pub fn parse_bracketed(text: &str) -> Result<ConstituentTree> {
    let mut p = Parser {
        toks: lex(text),
        pos: 0,
        len: text.len(),
        depth: 0,
    };
    let open_at = match p.next() {
        Some(Tok::Open(at)) => at,
        Some(Tok::Close(at)) => return Err(TreeError::Unbalanced(at)),
        Some(Tok::Atom(..)) | None => return Err(TreeError::NotATree),
    };
    let (mut label, mut children) = p.constituent(open_at)?;
    if let Some(tok) = p.peek() {
        return Err(match tok {
            Tok::Close(at) => TreeError::Unbalanced(at),
            Tok::Open(at) | Tok::Atom(at, _) => TreeError::TrailingInput(at),
        });
    }
    // Unwrap unlabeled wrappers around a single constituent.
    while label.is_none() {
        if children.len() != 1 {
            return Err(TreeError::MissingLabel(open_at));
        }
        match children.pop() {
            Some(Raw::Node { label: l, children: c }) => {
                label = Some(l);
                children = c;
            }
            _ => return Err(TreeError::MissingLabel(open_at)),
        }
    }
    let raw = Raw::Node {
        label: label.unwrap_or_default(),
        children,
    };
    let raw = prune(raw).ok_or(TreeError::NoLeaves)?;
    let mut next = 0;
    let root = build(raw, &mut next);
    Ok(ConstituentTree {
        root,
        token_count: next,
    })
}

impl ConstituentTree {
    /// Root over one preterminal per token, for use when no parse exists.
    pub fn flat(tokens: &[String]) -> Self {
        assert!(!tokens.is_empty(), "flat tree needs at least one token");
        let children = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| TreeNode {
                label: "X".to_owned(),
                span: Span::new(i, i),
                children: vec![TreeNode::leaf(t.clone(), i)],
                leaf_token: None,
            })
            .collect();
        Self {
            root: TreeNode {
                label: "S".to_owned(),
                span: Span::new(0, tokens.len() - 1),
                children,
                leaf_token: None,
            },
            token_count: tokens.len(),
        }
    }

    pub fn leaves(&self) -> Vec<&str> {
        let mut out = Vec::with_capacity(self.token_count);
        self.root.collect_leaves(&mut out);
        out
    }

    /// Checks that the leaves spell out `tokens` exactly.
    pub fn check_leaves(&self, tokens: &[String]) -> Result<()> {
        let leaves = self.leaves();
        if leaves.len() != tokens.len() {
            return Err(TreeError::LeafCount {
                leaves: leaves.len(),
                tokens: tokens.len(),
            });
        }
        for (index, (leaf, token)) in leaves.iter().zip(tokens).enumerate() {
            if leaf != token {
                return Err(TreeError::LeafMismatch {
                    index,
                    leaf: (*leaf).to_owned(),
                    token: token.clone(),
                });
            }
        }
        Ok(())
    }

    /// Canonical single-line bracketed form.
    pub fn to_bracketed(&self) -> String {
        let mut out = String::new();
        self.root.write_bracketed(&mut out);
        out
    }

    /// Non-leaf nodes whose span length lies in `[min_span, max_span]`, in
    /// pre-order. Preterminals are included.
    pub fn candidate_nodes(&self, min_span: usize, max_span: usize) -> Vec<&TreeNode> {
        self.root
            .preorder()
            .into_iter()
            .filter(|n| !n.is_leaf() && (min_span..=max_span).contains(&n.span.len()))
            .collect()
    }
}

impl fmt::Display for ConstituentTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bracketed())
    }
}

/// Parses one tree per line; errors carry 1-based line numbers.
pub fn parse_tree_lines(text: &str) -> Result<Vec<ConstituentTree>> {
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            parse_bracketed(line).map_err(|e| TreeError::Line {
                line: i + 1,
                source: Box::new(e),
            })
        })
        .collect()
}

pub fn read_trees(path: impl AsRef<Path>) -> Result<Vec<ConstituentTree>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| TreeError::Io(format!("{}: {e}", path.display())))?;
    parse_tree_lines(&text)
}
