//! Statement-level code context graphs.
//!
//! A [`CodeContextGraph`] holds one node per statement (compound statements
//! contribute their header only) and three edge families: control flow
//! between consecutive statements of a block, control dependence from
//! branch/loop headers to the statements they govern, and data dependence
//! from a definition of a name to its later uses.
//!
//! Graphs are cut into [`GraphSlice`]s by [`slice_at`], and every slice is
//! mapped back to source text as a [`SnippetRecord`].

pub(crate) mod python;
mod slice;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::fingerprint::{self, Fingerprint};
use crate::lexical::{self, TokenBag};

pub use slice::{enumerate_slices, slice_at, SliceError};

pub const DEFAULT_HOPS: usize = 3;
pub const DEFAULT_WINDOW: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Python,
    Java,
}

impl Language {
    /// Line-comment prefix used when annotating generated text.
    pub fn comment_prefix(self) -> &'static str {
        match self {
            Language::Python => "#",
            Language::Java => "//",
        }
    }

    /// File extension of source files in this language.
    pub fn extension(self) -> &'static str {
        match self {
            Language::Python => "py",
            Language::Java => "java",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Language::Python => "python",
            Language::Java => "java",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Language {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "python" | "py" => Ok(Language::Python),
            "java" => Ok(Language::Java),
            other => Err(format!("unknown language `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatementKind {
    Assignment,
    Call,
    Branch,
    Loop,
    Return,
    Definition,
    Import,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    ControlFlow,
    DataDep,
    ControlDep,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 3] = [EdgeKind::ControlFlow, EdgeKind::DataDep, EdgeKind::ControlDep];
}

/// Source location of a statement; lines are 1-based and inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub file: String,
    pub start_line: u32,
    pub end_line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CcgNode {
    pub id: usize,
    pub kind: StatementKind,
    pub text: String,
    pub norm_hash: Fingerprint,
    pub span: Span,
}

impl CcgNode {
    pub fn new(id: usize, kind: StatementKind, text: impl Into<String>, span: Span) -> Self {
        let text = text.into();
        let norm_hash = fingerprint::fingerprint(&text);
        Self { id, kind, text, norm_hash, span }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CcgEdge {
    pub src: usize,
    pub dst: usize,
    pub kind: EdgeKind,
}

impl CcgEdge {
    pub fn new(src: usize, dst: usize, kind: EdgeKind) -> Self {
        Self { src, dst, kind }
    }
}

/// Statement graph of one source file. `lines` keeps the normalized source
/// so slices can be mapped back to text.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CodeContextGraph {
    pub file: String,
    pub lines: Vec<String>,
    pub nodes: Vec<CcgNode>,
    pub edges: Vec<CcgEdge>,
}

impl CodeContextGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edges_of_kind(&self, kind: EdgeKind) -> impl Iterator<Item = &CcgEdge> {
        self.edges.iter().filter(move |e| e.kind == kind)
    }

    /// Source lines `start..=end` (1-based), clamped to the file.
    pub fn line_range(&self, start: u32, end: u32) -> &[String] {
        let lo = (start.max(1) as usize - 1).min(self.lines.len());
        let hi = (end as usize).min(self.lines.len()).max(lo);
        &self.lines[lo..hi]
    }
}

/// Induced subgraph around an anchor statement. Node ids are re-indexed to
/// `0..n` preserving source order; `core` is the largest id.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GraphSlice {
    pub anchor: usize,
    pub nodes: Vec<CcgNode>,
    pub edges: Vec<CcgEdge>,
    pub core: usize,
}

impl GraphSlice {
    /// Builds a slice from already re-indexed nodes and edges.
    pub fn new(anchor: usize, nodes: Vec<CcgNode>, mut edges: Vec<CcgEdge>) -> Self {
        edges.sort();
        edges.dedup();
        let core = nodes.len().saturating_sub(1);
        Self { anchor, nodes, edges, core }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Views the slice as a standalone graph (used for re-slicing).
    pub fn to_graph(&self) -> CodeContextGraph {
        CodeContextGraph {
            file: self.nodes.first().map(|n| n.span.file.clone()).unwrap_or_default(),
            lines: Vec::new(),
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
        }
    }
}

/// One retrievable unit: a slice and the exact source text it maps to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnippetRecord {
    pub id: String,
    pub text: String,
    pub slice: GraphSlice,
    pub token_bag: TokenBag,
    pub file: String,
}

impl SnippetRecord {
    pub fn new(id: String, file: String, text: String, slice: GraphSlice) -> Self {
        let token_bag = lexical::tokenize(&text);
        Self { id, text, slice, token_bag, file }
    }

    /// Last source line covered by the anchor statement.
    pub fn anchor_end_line(&self) -> Option<u32> {
        self.slice.nodes.get(self.slice.anchor).map(|n| n.span.end_line)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CcgError {
    #[error("{file}:{line}: syntax error")]
    Parse { file: String, line: u32 },
    #[error("language `{0}` has no frontend")]
    UnsupportedLanguage(Language),
}

/// Parse strictness. Repository files are indexed strictly; the unfinished
/// file of a completion request is usually cut mid-statement and is parsed
/// leniently (broken regions are skipped).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseMode {
    Strict,
    Lenient,
}

/// A statement as reported by a language frontend, before graph assembly.
#[derive(Debug, Clone, Default)]
pub(crate) struct RawStatement {
    pub kind: Option<StatementKind>,
    pub text: String,
    pub start_line: u32,
    pub end_line: u32,
    /// Header that governs this statement (its enclosing block owner).
    pub parent: Option<usize>,
    /// Nearest enclosing function or class header; `None` is module scope.
    pub scope: Option<usize>,
    /// `elif`/`else`/`except`/... headers hang off their statement rather
    /// than sitting in a block.
    pub is_clause: bool,
    /// Names bound in `scope`.
    pub defs: Vec<String>,
    /// Names bound inside the scope this statement opens (parameters).
    pub inner_defs: Vec<String>,
    pub uses: Vec<String>,
}

mod sealed {
    pub trait Sealed {}
}

/// Turns source text into a flat, pre-ordered statement list.
pub(crate) trait Frontend: sealed::Sealed {
    fn statements(&self, source: &str, mode: ParseMode) -> Result<Vec<RawStatement>, u32>;
}

fn frontend(language: Language) -> Result<&'static dyn Frontend, CcgError> {
    match language {
        Language::Python => Ok(&python::PythonFrontend),
        Language::Java => Err(CcgError::UnsupportedLanguage(language)),
    }
}

/// Converts CRLF and lone CR line endings to LF.
pub fn normalize_newlines(source: &str) -> String {
    if !source.contains('\r') {
        return source.to_string();
    }
    source.replace("\r\n", "\n").replace('\r', "\n")
}

/// Builds the code context graph of one file, rejecting files with syntax errors.
pub fn build_ccg(source: &str, language: Language, file: &str) -> Result<CodeContextGraph, CcgError> {
    build_ccg_with_mode(source, language, file, ParseMode::Strict)
}

pub fn build_ccg_with_mode(
    source: &str,
    language: Language,
    file: &str,
    mode: ParseMode,
) -> Result<CodeContextGraph, CcgError> {
    let source = normalize_newlines(source);
    let statements = frontend(language)?
        .statements(&source, mode)
        .map_err(|line| CcgError::Parse { file: file.to_string(), line })?;
    Ok(assemble(file, &source, statements))
}

fn assemble(file: &str, source: &str, statements: Vec<RawStatement>) -> CodeContextGraph {
    let nodes: Vec<CcgNode> = statements
        .iter()
        .enumerate()
        .map(|(id, s)| {
            let span = Span { file: file.to_string(), start_line: s.start_line, end_line: s.end_line };
            CcgNode::new(id, s.kind.unwrap_or(StatementKind::Other), s.text.clone(), span)
        })
        .collect();

    let mut edges = Vec::new();
    control_edges(&statements, &mut edges);
    data_edges(&statements, &mut edges);
    edges.sort();
    edges.dedup();

    CodeContextGraph {
        file: file.to_string(),
        lines: source.lines().map(str::to_string).collect(),
        nodes,
        edges,
    }
}

fn control_edges(statements: &[RawStatement], edges: &mut Vec<CcgEdge>) {
    // Previous non-clause statement seen under each parent.
    let mut last_in_block: HashMap<Option<usize>, usize> = HashMap::new();
    for (id, stmt) in statements.iter().enumerate() {
        if let Some(parent) = stmt.parent {
            if governs(&statements[parent]) {
                edges.push(CcgEdge::new(parent, id, EdgeKind::ControlDep));
            }
        }
        if stmt.is_clause {
            if let Some(parent) = stmt.parent {
                edges.push(CcgEdge::new(parent, id, EdgeKind::ControlFlow));
            }
            continue;
        }
        match last_in_block.insert(stmt.parent, id) {
            Some(prev) => edges.push(CcgEdge::new(prev, id, EdgeKind::ControlFlow)),
            None => {
                if let Some(parent) = stmt.parent {
                    edges.push(CcgEdge::new(parent, id, EdgeKind::ControlFlow));
                }
            }
        }
    }
}

fn governs(header: &RawStatement) -> bool {
    matches!(header.kind, Some(StatementKind::Branch) | Some(StatementKind::Loop))
}

fn data_edges(statements: &[RawStatement], edges: &mut Vec<CcgEdge>) {
    let mut reaching: HashMap<Option<usize>, HashMap<&str, Vec<usize>>> = HashMap::new();
    for (id, stmt) in statements.iter().enumerate() {
        let scope = reaching.entry(stmt.scope).or_default();
        for name in &stmt.uses {
            if let Some(defs) = scope.get(name.as_str()) {
                edges.extend(defs.iter().map(|&d| CcgEdge::new(d, id, EdgeKind::DataDep)));
            }
        }
        for name in &stmt.defs {
            let defs = scope.entry(name.as_str()).or_default();
            // A definition kills the earlier ones it post-dominates: those in
            // its own block or nested below it. Definitions in enclosing
            // blocks or sibling branches still reach.
            defs.retain(|&d| !within_block(statements, d, stmt.parent, stmt.scope));
            defs.push(id);
        }
        if !stmt.inner_defs.is_empty() {
            let inner = reaching.entry(Some(id)).or_default();
            for name in &stmt.inner_defs {
                inner.insert(name.as_str(), vec![id]);
            }
        }
    }
}

fn within_block(
    statements: &[RawStatement],
    node: usize,
    block: Option<usize>,
    scope: Option<usize>,
) -> bool {
    let mut current = statements[node].parent;
    loop {
        if current == block {
            return true;
        }
        match current {
            None => return false,
            Some(p) if Some(p) == scope => return false,
            Some(p) => current = statements[p].parent,
        }
    }
}
