use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tree_sitter::Node;

use crate::ccg::python::{first_error_line, parse, text};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub has_default: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "name", rename_all = "lowercase")]
pub enum Scope {
    Module,
    Class(String),
    Function(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodEntity {
    pub identifier: String,
    pub alias: Option<String>,
    /// First and last source line, 1-based inclusive; decorators included.
    pub line_range: (u32, u32),
    pub params: Vec<Param>,
    pub scope: Scope,
    /// Header text up to and including the colon.
    pub signature: String,
    /// Full source lines of the definition, original indentation kept.
    pub body_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassEntity {
    pub identifier: String,
    pub alias: Option<String>,
    pub line_range: (u32, u32),
    pub member_methods: Vec<MethodEntity>,
    pub member_variables: Vec<String>,
    pub signature: String,
    pub body_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Entity {
    Method(MethodEntity),
    Class(ClassEntity),
}

impl Entity {
    pub fn identifier(&self) -> &str {
        match self {
            Entity::Method(m) => &m.identifier,
            Entity::Class(c) => &c.identifier,
        }
    }

    pub fn line_range(&self) -> (u32, u32) {
        match self {
            Entity::Method(m) => m.line_range,
            Entity::Class(c) => c.line_range,
        }
    }

    pub fn alias(&self) -> Option<&str> {
        match self {
            Entity::Method(m) => m.alias.as_deref(),
            Entity::Class(c) => c.alias.as_deref(),
        }
    }

    pub(crate) fn set_alias(&mut self, alias: Option<String>) {
        match self {
            Entity::Method(m) => m.alias = alias,
            Entity::Class(c) => c.alias = alias,
        }
    }
}

/// Entities defined in one file. Only module-level entities are importable
/// and keyed by identifier; nested functions are kept with their scope.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileSymbols {
    pub entities: BTreeMap<String, Entity>,
    pub nested: Vec<MethodEntity>,
}

impl FileSymbols {
    /// Module-level entities by ascending start line.
    pub fn by_line(&self) -> Vec<&Entity> {
        let mut all: Vec<&Entity> = self.entities.values().collect();
        all.sort_by_key(|e| (e.line_range(), e.identifier().to_string()));
        all
    }
}

/// Identifier → entity table for every file of a repository.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolTable {
    /// Every source file known to exist, parseable or not (root-relative).
    pub files: BTreeSet<String>,
    pub modules: BTreeMap<String, FileSymbols>,
    pub warnings: Vec<String>,
}

impl SymbolTable {
    pub fn contains_file(&self, path: &str) -> bool {
        self.files.contains(path) || self.modules.contains_key(path)
    }

    pub fn lookup(&self, path: &str, identifier: &str) -> Option<&Entity> {
        self.modules.get(path)?.entities.get(identifier)
    }

    pub fn module(&self, path: &str) -> Option<&FileSymbols> {
        self.modules.get(path)
    }
}

/// Extracts function and class entities from `(path, source)` pairs.
/// Files that fail to parse are skipped with a warning.
pub fn build_symbol_table(files: &[(String, String)]) -> SymbolTable {
    let parsed: Vec<_> = files
        .par_iter()
        .map(|(path, source)| (path.clone(), extract_file(path, source)))
        .collect();
    let mut table = SymbolTable::default();
    for (path, result) in parsed {
        table.files.insert(path.clone());
        match result {
            Ok((symbols, warnings)) => {
                table.warnings.extend(warnings);
                table.modules.insert(path, symbols);
            }
            Err(warning) => table.warnings.push(warning),
        }
    }
    table
}

fn extract_file(path: &str, source: &str) -> Result<(FileSymbols, Vec<String>), String> {
    let tree = parse(source);
    let root = tree.root_node();
    if root.has_error() {
        let line = first_error_line(root).unwrap_or(1);
        return Err(format!("{path}:{line}: syntax error, file skipped"));
    }
    let lines: Vec<&str> = source.lines().collect();
    let mut ex = Extractor { src: source, lines: &lines, symbols: FileSymbols::default(), warnings: Vec::new(), path };
    ex.module_block(root);
    Ok((ex.symbols, ex.warnings))
}

struct Extractor<'a> {
    src: &'a str,
    lines: &'a [&'a str],
    symbols: FileSymbols,
    warnings: Vec<String>,
    path: &'a str,
}

/// Unwraps decorators: returns (definition node, outermost node).
fn definition(node: Node<'_>) -> Option<(Node<'_>, Node<'_>)> {
    match node.kind() {
        "function_definition" | "class_definition" => Some((node, node)),
        "decorated_definition" => node.child_by_field_name("definition").map(|d| (d, node)),
        _ => None,
    }
}

impl<'a> Extractor<'a> {
    fn module_block(&mut self, node: Node<'_>) {
        let mut cursor = node.walk();
        for child in node.named_children(&mut cursor) {
            if let Some((def, outer)) = definition(child) {
                let entity = match def.kind() {
                    "function_definition" => Entity::Method(self.method(def, outer, Scope::Module)),
                    _ => Entity::Class(self.class(def, outer)),
                };
                self.insert(entity);
            } else if matches!(child.kind(), "if_statement" | "try_statement" | "block" | "else_clause" | "elif_clause" | "except_clause" | "finally_clause") {
                // conditional definitions (`if TYPE_CHECKING:`, `try: ... except ImportError:`)
                self.module_block(child);
            }
        }
    }

    fn insert(&mut self, entity: Entity) {
        let id = entity.identifier().to_string();
        if let Some(previous) = self.symbols.entities.get(&id) {
            self.warnings.push(format!(
                "{}: `{id}` defined at lines {} and {}; keeping the later definition",
                self.path,
                previous.line_range().0,
                entity.line_range().0
            ));
            if previous.line_range().0 > entity.line_range().0 {
                return;
            }
        }
        self.symbols.entities.insert(id, entity);
    }

    fn line_range(&self, outer: Node<'_>) -> (u32, u32) {
        let start = outer.start_position().row as u32 + 1;
        let end_pos = outer.end_position();
        let mut end = end_pos.row as u32 + 1;
        if end_pos.column == 0 && end > start {
            end -= 1;
        }
        (start, end)
    }

    fn source_lines(&self, (start, end): (u32, u32)) -> String {
        let lo = (start as usize - 1).min(self.lines.len());
        let hi = (end as usize).min(self.lines.len());
        self.lines[lo..hi].join("\n")
    }

    fn signature(&self, def: Node<'_>, outer: Node<'_>) -> String {
        let body_start = def.child_by_field_name("body").map(|b| b.start_byte()).unwrap_or(def.end_byte());
        let mut cursor = def.walk();
        let colon_end = def
            .children(&mut cursor)
            .filter(|c| c.kind() == ":" && c.end_byte() <= body_start)
            .last()
            .map(|c| c.end_byte())
            .unwrap_or(body_start);
        // include the indentation of the first line so signatures line up with bodies
        let line_start = self.src[..outer.start_byte()].rfind('\n').map(|i| i + 1).unwrap_or(0);
        self.src[line_start..colon_end].trim_end().to_string()
    }

    fn method(&mut self, def: Node<'_>, outer: Node<'_>, scope: Scope) -> MethodEntity {
        let identifier = def.child_by_field_name("name").map(|n| text(n, self.src).to_string()).unwrap_or_default();
        let params = def.child_by_field_name("parameters").map(|p| self.params(p)).unwrap_or_default();
        let line_range = self.line_range(outer);
        if let Some(body) = def.child_by_field_name("body") {
            self.nested_functions(body, &identifier);
        }
        MethodEntity {
            signature: self.signature(def, outer),
            body_text: self.source_lines(line_range),
            identifier,
            alias: None,
            line_range,
            params,
            scope,
        }
    }

    fn nested_functions(&mut self, node: Node<'_>, enclosing: &str) {
        let mut cursor = node.walk();
        for child in node.named_children(&mut cursor) {
            if let Some((def, outer)) = definition(child) {
                if def.kind() == "function_definition" {
                    let nested = self.method(def, outer, Scope::Function(enclosing.to_string()));
                    self.symbols.nested.push(nested);
                }
            } else if child.kind() != "class_definition" {
                self.nested_functions(child, enclosing);
            }
        }
    }

    fn params(&self, params: Node<'_>) -> Vec<Param> {
        let mut out = Vec::new();
        let mut cursor = params.walk();
        for p in params.named_children(&mut cursor) {
            let (name, has_default) = match p.kind() {
                "identifier" => (text(p, self.src).to_string(), false),
                "default_parameter" | "typed_default_parameter" => {
                    let name = p.child_by_field_name("name").map(|n| text(n, self.src)).unwrap_or("");
                    (name.to_string(), true)
                }
                "typed_parameter" => {
                    let mut c = p.walk();
                    let inner = p.named_children(&mut c).next();
                    match inner {
                        Some(n) if n.kind() == "identifier" => (text(n, self.src).to_string(), false),
                        Some(n) => (text(n, self.src).to_string(), false),
                        None => continue,
                    }
                }
                "list_splat_pattern" | "dictionary_splat_pattern" => (text(p, self.src).to_string(), false),
                _ => continue,
            };
            if !name.is_empty() {
                out.push(Param { name, has_default });
            }
        }
        out
    }

    fn class(&mut self, def: Node<'_>, outer: Node<'_>) -> ClassEntity {
        let identifier = def.child_by_field_name("name").map(|n| text(n, self.src).to_string()).unwrap_or_default();
        let line_range = self.line_range(outer);
        let mut member_methods = Vec::new();
        let mut member_variables = Vec::new();
        if let Some(body) = def.child_by_field_name("body") {
            let mut cursor = body.walk();
            for child in body.named_children(&mut cursor) {
                if let Some((inner, inner_outer)) = definition(child) {
                    if inner.kind() == "function_definition" {
                        let m = self.method(inner, inner_outer, Scope::Class(identifier.clone()));
                        member_methods.push(m);
                    }
                } else if child.kind() == "expression_statement" {
                    self.class_level_vars(child, &mut member_variables);
                }
            }
            let mut cursor = body.walk();
            for child in body.named_children(&mut cursor) {
                if let Some((inner, _)) = definition(child) {
                    if inner.kind() == "function_definition" {
                        let receiver = inner
                            .child_by_field_name("parameters")
                            .and_then(|p| p.named_child(0))
                            .filter(|p| p.kind() == "identifier")
                            .map(|p| text(p, self.src).to_string());
                        if let (Some(receiver), Some(fbody)) = (receiver, inner.child_by_field_name("body")) {
                            self.instance_vars(fbody, &receiver, &mut member_variables);
                        }
                    }
                }
            }
        }
        ClassEntity {
            signature: self.signature(def, outer),
            body_text: self.source_lines(line_range),
            identifier,
            alias: None,
            line_range,
            member_methods,
            member_variables,
        }
    }

    fn class_level_vars(&self, stmt: Node<'_>, out: &mut Vec<String>) {
        let mut cursor = stmt.walk();
        for expr in stmt.named_children(&mut cursor) {
            if expr.kind() == "assignment" {
                if let Some(left) = expr.child_by_field_name("left") {
                    self.target_names(left, out);
                }
            }
        }
    }

    fn target_names(&self, node: Node<'_>, out: &mut Vec<String>) {
        match node.kind() {
            "identifier" => push_unique(out, text(node, self.src)),
            "pattern_list" | "tuple_pattern" | "list_pattern" => {
                let mut cursor = node.walk();
                for c in node.named_children(&mut cursor) {
                    self.target_names(c, out);
                }
            }
            _ => {}
        }
    }

    /// `self.x = ...` anywhere in a method body (nested defs excluded).
    fn instance_vars(&self, node: Node<'_>, receiver: &str, out: &mut Vec<String>) {
        if matches!(node.kind(), "function_definition" | "class_definition" | "lambda") {
            return;
        }
        if matches!(node.kind(), "assignment" | "augmented_assignment") {
            if let Some(left) = node.child_by_field_name("left") {
                self.attribute_targets(left, receiver, out);
            }
        }
        let mut cursor = node.walk();
        for c in node.named_children(&mut cursor) {
            self.instance_vars(c, receiver, out);
        }
    }

    fn attribute_targets(&self, node: Node<'_>, receiver: &str, out: &mut Vec<String>) {
        match node.kind() {
            "attribute" => {
                let object = node.child_by_field_name("object");
                let attr = node.child_by_field_name("attribute");
                if let (Some(o), Some(a)) = (object, attr) {
                    if o.kind() == "identifier" && text(o, self.src) == receiver {
                        push_unique(out, text(a, self.src));
                    }
                }
            }
            "pattern_list" | "tuple_pattern" | "list_pattern" => {
                let mut cursor = node.walk();
                for c in node.named_children(&mut cursor) {
                    self.attribute_targets(c, receiver, out);
                }
            }
            _ => {}
        }
    }
}

fn push_unique(out: &mut Vec<String>, name: &str) {
    if !out.iter().any(|n| n == name) {
        out.push(name.to_string());
    }
}
