use tree_sitter::{Node, Parser};

use super::{sealed, Frontend, ParseMode, RawStatement, StatementKind};

pub(crate) struct PythonFrontend;

impl sealed::Sealed for PythonFrontend {}

impl Frontend for PythonFrontend {
    fn statements(&self, source: &str, mode: ParseMode) -> Result<Vec<RawStatement>, u32> {
        let tree = parse(source);
        let root = tree.root_node();
        if mode == ParseMode::Strict && root.has_error() {
            return Err(first_error_line(root).unwrap_or(1));
        }
        let mut walker = Walker { src: source, out: Vec::new() };
        walker.block(root, None, None);
        Ok(walker.out)
    }
}

/// Parses Python source with the tree-sitter grammar.
pub(crate) fn parse(source: &str) -> tree_sitter::Tree {
    let mut parser = Parser::new();
    parser
        .set_language(&tree_sitter_python::LANGUAGE.into())
        .expect("python grammar is compatible with the linked tree-sitter");
    parser.parse(source, None).expect("parser has a language and no timeout")
}

pub(crate) fn first_error_line(node: Node<'_>) -> Option<u32> {
    if node.is_error() || node.is_missing() {
        return Some(node.start_position().row as u32 + 1);
    }
    if !node.has_error() {
        return None;
    }
    let mut cursor = node.walk();
    let children: Vec<_> = node.children(&mut cursor).collect();
    children.into_iter().find_map(first_error_line)
}

pub(crate) fn text<'a>(node: Node<'_>, src: &'a str) -> &'a str {
    &src[node.byte_range()]
}

fn is_compound(kind: &str) -> bool {
    matches!(
        kind,
        "if_statement"
            | "for_statement"
            | "while_statement"
            | "try_statement"
            | "with_statement"
            | "function_definition"
            | "class_definition"
            | "match_statement"
    )
}

fn is_clause(kind: &str) -> bool {
    matches!(
        kind,
        "elif_clause" | "else_clause" | "except_clause" | "except_group_clause" | "finally_clause" | "case_clause"
    )
}

struct Walker<'s> {
    src: &'s str,
    out: Vec<RawStatement>,
}

impl<'s> Walker<'s> {
    fn block(&mut self, node: Node<'_>, parent: Option<usize>, scope: Option<usize>) {
        let mut cursor = node.walk();
        for child in node.named_children(&mut cursor) {
            self.statement(child, parent, scope);
        }
    }

    fn statement(&mut self, node: Node<'_>, parent: Option<usize>, scope: Option<usize>) {
        let kind = node.kind();
        if kind == "comment" || node.is_error() || node.is_missing() {
            return;
        }
        if kind == "decorated_definition" {
            if let Some(def) = node.child_by_field_name("definition") {
                self.compound(def, node, parent, scope, false);
            }
        } else if is_compound(kind) {
            self.compound(node, node, parent, scope, false);
        } else if is_clause(kind) {
            self.compound(node, node, parent, scope, true);
        } else if kind == "block" {
            self.block(node, parent, scope);
        } else {
            self.simple(node, parent, scope);
        }
    }

    fn push(&mut self, stmt: RawStatement) -> usize {
        self.out.push(stmt);
        self.out.len() - 1
    }

    fn simple(&mut self, node: Node<'_>, parent: Option<usize>, scope: Option<usize>) {
        let mut names = Names::default();
        names.statement(node, self.src);
        let (start_line, end_line) = lines(node);
        self.push(RawStatement {
            kind: Some(simple_kind(node)),
            text: text(node, self.src).to_string(),
            start_line,
            end_line,
            parent,
            scope,
            is_clause: false,
            defs: names.defs,
            inner_defs: Vec::new(),
            uses: names.uses,
        });
    }

    /// Emits the header of a compound statement or clause, then its body.
    /// `outer` differs from `node` only for decorated definitions.
    fn compound(
        &mut self,
        node: Node<'_>,
        outer: Node<'_>,
        parent: Option<usize>,
        scope: Option<usize>,
        clause: bool,
    ) {
        let mut cursor = node.walk();
        let children: Vec<Node<'_>> = node.children(&mut cursor).collect();
        let body_start = children
            .iter()
            .position(|c| c.kind() == "block" || is_clause(c.kind()))
            .unwrap_or(children.len());
        let header_end = children[..body_start]
            .iter()
            .rev()
            .find(|c| c.kind() == ":")
            .or_else(|| children[..body_start].last())
            .map(|c| c.end_byte())
            .unwrap_or(node.end_byte());
        let header_end_line = row_of_byte(node, &children, header_end);

        let mut names = Names::default();
        let mut inner_defs = Vec::new();
        if outer.kind() == "decorated_definition" {
            let mut c = outer.walk();
            for decorator in outer.named_children(&mut c).filter(|d| d.kind() == "decorator") {
                names.collect(decorator, self.src, Ctx::Use);
            }
        }
        for child in &children[..body_start] {
            if child.is_named() {
                names.header_part(node, *child, self.src, &mut inner_defs);
            }
        }
        if node.kind() == "except_clause" {
            // `except E as e:` binds the name following `as`
            if let Some(pos) = children[..body_start].iter().position(|c| c.kind() == "as") {
                if let Some(id) = children.get(pos + 1).filter(|c| c.kind() == "identifier") {
                    let name = text(*id, self.src).to_string();
                    names.uses.retain(|u| u != &name);
                    names.defs.push(name);
                }
            }
        }

        let header_text = self.src[outer.start_byte()..header_end].trim_end().to_string();
        let opens_scope = matches!(node.kind(), "function_definition" | "class_definition");
        let id = self.push(RawStatement {
            kind: Some(compound_kind(node)),
            text: header_text,
            start_line: outer.start_position().row as u32 + 1,
            end_line: header_end_line,
            parent,
            scope,
            is_clause: clause,
            defs: names.defs,
            inner_defs,
            uses: names.uses,
        });

        let body_scope = if opens_scope { Some(id) } else { scope };
        for child in &children[body_start..] {
            if child.kind() == "block" {
                self.block(*child, Some(id), body_scope);
            } else if is_clause(child.kind()) {
                self.compound(*child, *child, Some(id), scope, true);
            }
        }
    }
}

fn row_of_byte(node: Node<'_>, children: &[Node<'_>], byte: usize) -> u32 {
    children
        .iter()
        .find(|c| c.end_byte() == byte)
        .map(|c| c.end_position().row as u32 + 1)
        .unwrap_or(node.start_position().row as u32 + 1)
}

fn lines(node: Node<'_>) -> (u32, u32) {
    let start = node.start_position();
    let end = node.end_position();
    let mut end_row = end.row;
    if end.column == 0 && end_row > start.row {
        end_row -= 1;
    }
    (start.row as u32 + 1, end_row as u32 + 1)
}

fn simple_kind(node: Node<'_>) -> StatementKind {
    match node.kind() {
        "return_statement" => StatementKind::Return,
        "import_statement" | "import_from_statement" | "future_import_statement" => StatementKind::Import,
        "expression_statement" => {
            let Some(first) = node.named_child(0) else {
                return StatementKind::Other;
            };
            match first.kind() {
                "assignment" | "augmented_assignment" => StatementKind::Assignment,
                "call" => StatementKind::Call,
                "await" if first.named_child(0).is_some_and(|c| c.kind() == "call") => StatementKind::Call,
                _ => StatementKind::Other,
            }
        }
        _ => StatementKind::Other,
    }
}

fn compound_kind(node: Node<'_>) -> StatementKind {
    match node.kind() {
        "if_statement" | "elif_clause" | "else_clause" | "except_clause" | "except_group_clause"
        | "match_statement" | "case_clause" => StatementKind::Branch,
        "for_statement" | "while_statement" => StatementKind::Loop,
        "function_definition" | "class_definition" => StatementKind::Definition,
        _ => StatementKind::Other,
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Ctx {
    Use,
    Def,
}

/// Collects names bound and read by a statement or header fragment.
#[derive(Default)]
struct Names {
    defs: Vec<String>,
    uses: Vec<String>,
}

impl Names {
    fn add(&mut self, name: &str, ctx: Ctx) {
        let list = match ctx {
            Ctx::Use => &mut self.uses,
            Ctx::Def => &mut self.defs,
        };
        if !list.iter().any(|n| n == name) {
            list.push(name.to_string());
        }
    }

    fn statement(&mut self, node: Node<'_>, src: &str) {
        match node.kind() {
            "import_statement" | "import_from_statement" | "future_import_statement" => self.import(node, src),
            "global_statement" | "nonlocal_statement" => {}
            _ => self.collect(node, src, Ctx::Use),
        }
    }

    fn import(&mut self, node: Node<'_>, src: &str) {
        let mut cursor = node.walk();
        for name in node.children_by_field_name("name", &mut cursor) {
            match name.kind() {
                "aliased_import" => {
                    if let Some(alias) = name.child_by_field_name("alias") {
                        self.add(text(alias, src), Ctx::Def);
                    }
                }
                "dotted_name" => {
                    let bound = if node.kind() == "import_statement" {
                        name.named_child(0).map(|n| text(n, src))
                    } else {
                        let count = name.named_child_count();
                        name.named_child(count.saturating_sub(1) as u32).map(|n| text(n, src))
                    };
                    if let Some(bound) = bound {
                        self.add(bound, Ctx::Def);
                    }
                }
                _ => {}
            }
        }
    }

    /// Handles one named child of a compound-statement header.
    fn header_part(&mut self, owner: Node<'_>, part: Node<'_>, src: &str, inner: &mut Vec<String>) {
        let field = field_name_of(owner, part);
        match (owner.kind(), field.as_deref()) {
            ("function_definition" | "class_definition", Some("name")) => self.add(text(part, src), Ctx::Def),
            ("function_definition", Some("parameters")) => self.parameters(part, src, inner),
            ("for_statement", Some("left")) => self.collect(part, src, Ctx::Def),
            _ => self.collect(part, src, Ctx::Use),
        }
    }

    fn parameters(&mut self, params: Node<'_>, src: &str, inner: &mut Vec<String>) {
        let mut cursor = params.walk();
        for p in params.named_children(&mut cursor) {
            let name = match p.kind() {
                "identifier" => Some(p),
                "default_parameter" | "typed_default_parameter" => {
                    if let Some(v) = p.child_by_field_name("value") {
                        self.collect(v, src, Ctx::Use);
                    }
                    if let Some(t) = p.child_by_field_name("type") {
                        self.collect(t, src, Ctx::Use);
                    }
                    p.child_by_field_name("name")
                }
                "typed_parameter" => {
                    if let Some(t) = p.child_by_field_name("type") {
                        self.collect(t, src, Ctx::Use);
                    }
                    first_identifier(p)
                }
                "list_splat_pattern" | "dictionary_splat_pattern" => first_identifier(p),
                _ => None,
            };
            if let Some(name) = name {
                let name = text(name, src).to_string();
                if !inner.contains(&name) {
                    inner.push(name);
                }
            }
        }
    }

    fn collect(&mut self, node: Node<'_>, src: &str, ctx: Ctx) {
        match node.kind() {
            "identifier" => self.add(text(node, src), ctx),
            "comment" | "string_content" | "escape_sequence" => {}
            "attribute" => {
                if let Some(object) = node.child_by_field_name("object") {
                    self.collect(object, src, Ctx::Use);
                }
            }
            "subscript" => {
                let mut cursor = node.walk();
                for child in node.named_children(&mut cursor) {
                    self.collect(child, src, Ctx::Use);
                }
            }
            "keyword_argument" => {
                if let Some(value) = node.child_by_field_name("value") {
                    self.collect(value, src, Ctx::Use);
                }
            }
            "assignment" => {
                if let Some(left) = node.child_by_field_name("left") {
                    self.collect(left, src, Ctx::Def);
                }
                if let Some(ty) = node.child_by_field_name("type") {
                    self.collect(ty, src, Ctx::Use);
                }
                if let Some(right) = node.child_by_field_name("right") {
                    self.collect(right, src, Ctx::Use);
                }
            }
            "augmented_assignment" => {
                if let Some(left) = node.child_by_field_name("left") {
                    self.collect(left, src, Ctx::Use);
                    self.collect(left, src, Ctx::Def);
                }
                if let Some(right) = node.child_by_field_name("right") {
                    self.collect(right, src, Ctx::Use);
                }
            }
            "named_expression" => {
                if let Some(name) = node.child_by_field_name("name") {
                    self.collect(name, src, Ctx::Def);
                }
                if let Some(value) = node.child_by_field_name("value") {
                    self.collect(value, src, Ctx::Use);
                }
            }
            "as_pattern" => {
                let mut cursor = node.walk();
                for child in node.named_children(&mut cursor) {
                    let c = if child.kind() == "as_pattern_target" { Ctx::Def } else { Ctx::Use };
                    self.collect(child, src, c);
                }
            }
            "lambda" => {
                if let Some(body) = node.child_by_field_name("body") {
                    self.collect(body, src, Ctx::Use);
                }
            }
            "for_in_clause" => {
                if let Some(right) = node.child_by_field_name("right") {
                    self.collect(right, src, Ctx::Use);
                }
            }
            _ => {
                let mut cursor = node.walk();
                for child in node.named_children(&mut cursor) {
                    self.collect(child, src, ctx);
                }
            }
        }
    }
}

fn first_identifier(node: Node<'_>) -> Option<Node<'_>> {
    let mut cursor = node.walk();
    let found = node.named_children(&mut cursor).find(|c| c.kind() == "identifier");
    found
}

fn field_name_of(owner: Node<'_>, part: Node<'_>) -> Option<String> {
    let mut cursor = owner.walk();
    if !cursor.goto_first_child() {
        return None;
    }
    loop {
        if cursor.node().id() == part.id() {
            return cursor.field_name().map(str::to_string);
        }
        if !cursor.goto_next_sibling() {
            return None;
        }
    }
}
