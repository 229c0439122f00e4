use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use tree_sitter::Node;

use super::symbols::{Entity, SymbolTable};
use crate::ccg::python::{parse, text};

/// Cap on entities pulled in by one wildcard or whole-module import.
pub const MODULE_ENTITY_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportedName {
    /// Dotted name as written.
    pub name: String,
    pub alias: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImportKind {
    /// `import a.b [as c], d`
    Module(Vec<ImportedName>),
    /// `from [.]*module import x [as y], ...` or `... import *`
    From { level: usize, module: Option<String>, names: Vec<ImportedName>, wildcard: bool },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportStatement {
    pub text: String,
    pub line: u32,
    pub kind: ImportKind,
}

/// Import statements of a (possibly unfinished) file, in source order.
pub fn extract_imports(source: &str) -> Vec<ImportStatement> {
    let source = crate::ccg::normalize_newlines(source);
    let tree = parse(&source);
    let mut out = Vec::new();
    collect(tree.root_node(), &source, &mut out);
    out
}

fn collect(node: Node<'_>, src: &str, out: &mut Vec<ImportStatement>) {
    match node.kind() {
        "import_statement" => {
            if node.has_error() {
                return;
            }
            let mut cursor = node.walk();
            let names = node.children_by_field_name("name", &mut cursor).filter_map(|n| imported(n, src)).collect();
            out.push(statement(node, src, ImportKind::Module(names)));
        }
        "import_from_statement" => {
            if node.has_error() {
                return;
            }
            let (level, module) = match node.child_by_field_name("module_name") {
                Some(m) if m.kind() == "relative_import" => {
                    let mut cursor = m.walk();
                    let mut level = 0;
                    let mut module = None;
                    for c in m.named_children(&mut cursor) {
                        match c.kind() {
                            "import_prefix" => level = text(c, src).chars().filter(|&ch| ch == '.').count(),
                            "dotted_name" => module = Some(dotted(c, src)),
                            _ => {}
                        }
                    }
                    (level, module)
                }
                Some(m) => (0, Some(dotted(m, src))),
                None => (0, None),
            };
            let mut cursor = node.walk();
            let names = node.children_by_field_name("name", &mut cursor).filter_map(|n| imported(n, src)).collect();
            let mut cursor = node.walk();
            let wildcard = node.children(&mut cursor).any(|c| c.kind() == "wildcard_import");
            out.push(statement(node, src, ImportKind::From { level, module, names, wildcard }));
        }
        _ => {
            let mut cursor = node.walk();
            for child in node.named_children(&mut cursor) {
                collect(child, src, out);
            }
        }
    }
}

fn statement(node: Node<'_>, src: &str, kind: ImportKind) -> ImportStatement {
    ImportStatement { text: text(node, src).to_string(), line: node.start_position().row as u32 + 1, kind }
}

fn dotted(node: Node<'_>, src: &str) -> String {
    text(node, src).split('.').map(str::trim).collect::<Vec<_>>().join(".")
}

fn imported(node: Node<'_>, src: &str) -> Option<ImportedName> {
    match node.kind() {
        "dotted_name" => Some(ImportedName { name: dotted(node, src), alias: None }),
        "aliased_import" => Some(ImportedName {
            name: dotted(node.child_by_field_name("name")?, src),
            alias: node.child_by_field_name("alias").map(|a| text(a, src).to_string()),
        }),
        _ => None,
    }
}

/// An intra-project entity pulled in by an import.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedEntity {
    pub file: String,
    pub entity: Entity,
}

/// External library references, canonical dotted name → local alias, in
/// first-import order without duplicate canonical names.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalRefTable {
    entries: Vec<(String, String)>,
}

impl ExternalRefTable {
    pub fn insert(&mut self, canonical: impl Into<String>, alias: impl Into<String>) {
        let canonical = canonical.into();
        if self.get(&canonical).is_none() {
            self.entries.push((canonical, alias.into()));
        }
    }

    pub fn get(&self, canonical: &str) -> Option<&str> {
        self.entries.iter().find(|(c, _)| c == canonical).map(|(_, a)| a.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(c, a)| (c.as_str(), a.as_str()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub entities: Vec<ResolvedEntity>,
    pub external: ExternalRefTable,
    /// Names and modules that could be neither resolved nor classified as external.
    pub unresolved: Vec<String>,
}

impl Resolution {
    fn push_entity(&mut self, seen: &mut BTreeSet<(String, String)>, file: &str, entity: &Entity, alias: Option<&str>) {
        if seen.insert((file.to_string(), entity.identifier().to_string())) {
            let mut entity = entity.clone();
            entity.set_alias(alias.map(str::to_string));
            self.entities.push(ResolvedEntity { file: file.to_string(), entity });
        }
    }

    fn push_module(&mut self, seen: &mut BTreeSet<(String, String)>, table: &SymbolTable, file: &str) {
        if let Some(module) = table.module(file) {
            for entity in module.by_line().into_iter().take(MODULE_ENTITY_CAP) {
                self.push_entity(seen, file, entity, None);
            }
        }
    }
}

/// `a/b.py`, falling back to the package form `a/b/__init__.py`.
fn module_file(table: &SymbolTable, parts: &[&str]) -> Option<String> {
    let base = parts.join("/");
    if !base.is_empty() {
        let module = format!("{base}.py");
        if table.contains_file(&module) {
            return Some(module);
        }
    }
    let package = if base.is_empty() { "__init__.py".to_string() } else { format!("{base}/__init__.py") };
    table.contains_file(&package).then_some(package)
}

/// Directory components a relative import of `level` dots starts from, or
/// `None` when it climbs above the repository root.
fn relative_base(current_file: &str, level: usize) -> Option<Vec<&str>> {
    let mut dirs: Vec<&str> = current_file.split('/').collect();
    dirs.pop();
    for _ in 1..level {
        dirs.pop()?;
    }
    Some(dirs)
}

/// Resolves `imports` of `current_file` (root-relative) against the
/// repository symbol table.
pub fn resolve_imports(imports: &[ImportStatement], current_file: &str, table: &SymbolTable) -> Resolution {
    let mut res = Resolution::default();
    let mut seen = BTreeSet::new();
    for stmt in imports {
        match &stmt.kind {
            ImportKind::Module(names) => {
                for imported in names {
                    let parts: Vec<&str> = imported.name.split('.').collect();
                    match module_file(table, &parts) {
                        Some(file) => res.push_module(&mut seen, table, &file),
                        None => {
                            let alias = imported.alias.clone().unwrap_or_else(|| imported.name.clone());
                            res.external.insert(imported.name.clone(), alias);
                        }
                    }
                }
            }
            ImportKind::From { level, module, names, wildcard } => {
                let base: Vec<&str> = if *level == 0 {
                    Vec::new()
                } else {
                    match relative_base(current_file, *level) {
                        Some(b) => b,
                        None => {
                            res.unresolved.push(format!("{}: relative import climbs above the repository root", stmt.text));
                            continue;
                        }
                    }
                };
                let mut parts = base.clone();
                if let Some(m) = module {
                    parts.extend(m.split('.'));
                }
                let file = module_file(table, &parts);
                if *wildcard {
                    match (&file, level) {
                        (Some(f), _) => res.push_module(&mut seen, table, f),
                        (None, 0) => {
                            let m = module.clone().unwrap_or_default();
                            res.external.insert(m.clone(), m);
                        }
                        (None, _) => res.unresolved.push(stmt.text.clone()),
                    }
                    continue;
                }
                let mut external_names = Vec::new();
                for imported in names {
                    if let Some(entity) = file.as_deref().and_then(|f| table.lookup(f, &imported.name)) {
                        res.push_entity(&mut seen, file.as_deref().unwrap(), entity, imported.alias.as_deref());
                        continue;
                    }
                    let mut sub = parts.clone();
                    sub.extend(imported.name.split('.'));
                    if let Some(sub_file) = module_file(table, &sub) {
                        res.push_module(&mut seen, table, &sub_file);
                    } else if file.is_some() || *level > 0 {
                        res.unresolved.push(format!("{} ({})", imported.name, stmt.text));
                    } else {
                        external_names.push(imported);
                    }
                }
                let module = module.clone().unwrap_or_default();
                for imported in external_names {
                    let canonical = format!("{module}.{}", imported.name);
                    let alias = imported.alias.clone().unwrap_or_else(|| canonical.clone());
                    res.external.insert(canonical, alias);
                }
            }
        }
    }
    res
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eaid::build_symbol_table;

    fn table(files: &[(&str, &str)]) -> SymbolTable {
        let owned: Vec<(String, String)> = files.iter().map(|(p, s)| (p.to_string(), s.to_string())).collect();
        build_symbol_table(&owned)
    }

    #[test]
    fn extracts_all_forms() {
        let src = "import numpy as np, os.path\nfrom .models import Repo as R, load\nfrom .. import util\nfrom pkg.sub import *\nx = 1\n";
        let imports = extract_imports(src);
        assert_eq!(imports.len(), 4);
        assert_eq!(
            imports[0].kind,
            ImportKind::Module(vec![
                ImportedName { name: "numpy".into(), alias: Some("np".into()) },
                ImportedName { name: "os.path".into(), alias: None },
            ])
        );
        assert_eq!(
            imports[1].kind,
            ImportKind::From {
                level: 1,
                module: Some("models".into()),
                names: vec![
                    ImportedName { name: "Repo".into(), alias: Some("R".into()) },
                    ImportedName { name: "load".into(), alias: None },
                ],
                wildcard: false,
            }
        );
        assert!(matches!(&imports[2].kind, ImportKind::From { level: 2, module: None, .. }));
        assert!(matches!(&imports[3].kind, ImportKind::From { wildcard: true, .. }));
        assert_eq!(imports[3].line, 4);
    }

    #[test]
    fn dotted_module_import_resolves_class() {
        let t = table(&[("my/module.py", "class MyClass:\n    def go(self):\n        pass\n")]);
        let imports = extract_imports("from my.module import MyClass\n");
        let res = resolve_imports(&imports, "main.py", &t);
        assert_eq!(res.entities.len(), 1);
        assert_eq!(res.entities[0].entity.identifier(), "MyClass");
        assert_eq!(res.entities[0].file, "my/module.py");
        assert!(res.external.is_empty());
    }

    #[test]
    fn external_alias() {
        let res = resolve_imports(&extract_imports("import numpy as np\nimport os\n"), "a.py", &SymbolTable::default());
        assert_eq!(res.external.get("numpy"), Some("np"));
        assert_eq!(res.external.get("os"), Some("os"));
        assert!(res.entities.is_empty());
    }

    #[test]
    fn relative_module_import() {
        let t = table(&[
            ("pkg/main.py", "from . import helper\n"),
            ("pkg/helper.py", "def assist(x):\n    return x\n\nclass Aid:\n    pass\n"),
        ]);
        let res = resolve_imports(&extract_imports("from . import helper\n"), "pkg/main.py", &t);
        let ids: Vec<_> = res.entities.iter().map(|e| e.entity.identifier()).collect();
        assert_eq!(ids, ["assist", "Aid"]);
    }

    #[test]
    fn package_init_fallback_and_climb() {
        let t = table(&[("lib/__init__.py", "def api():\n    pass\n"), ("lib/deep/x.py", "")]);
        let res = resolve_imports(&extract_imports("from lib import api\n"), "main.py", &t);
        assert_eq!(res.entities[0].file, "lib/__init__.py");
        let res = resolve_imports(&extract_imports("from .. import api\n"), "lib/deep/x.py", &t);
        assert_eq!(res.entities[0].entity.identifier(), "api");
        let res = resolve_imports(&extract_imports("from ... import api\n"), "lib/x.py", &t);
        assert!(res.entities.is_empty());
        assert_eq!(res.unresolved.len(), 1);
    }

    #[test]
    fn order_follows_imports_and_aliases_stick() {
        let t = table(&[
            ("a.py", "def first():\n    pass\n"),
            ("b.py", "def second():\n    pass\n"),
        ]);
        let res = resolve_imports(&extract_imports("from b import second as s\nfrom a import first\n"), "m.py", &t);
        let ids: Vec<_> = res.entities.iter().map(|e| e.entity.identifier()).collect();
        assert_eq!(ids, ["second", "first"]);
        assert_eq!(res.entities[0].entity.alias(), Some("s"));
    }

    #[test]
    fn wildcard_is_capped() {
        let src: String = (0..25).map(|i| format!("def f{i}():\n    pass\n")).collect();
        let t = table(&[("many.py", &src)]);
        let res = resolve_imports(&extract_imports("from many import *\n"), "m.py", &t);
        assert_eq!(res.entities.len(), MODULE_ENTITY_CAP);
        assert_eq!(res.entities[0].entity.identifier(), "f0");
        assert_eq!(res.entities[19].entity.identifier(), "f19");
    }

    #[test]
    fn from_external_names() {
        let res = resolve_imports(
            &extract_imports("from collections import OrderedDict as OD, deque\n"),
            "m.py",
            &SymbolTable::default(),
        );
        assert_eq!(res.external.get("collections.OrderedDict"), Some("OD"));
        assert_eq!(res.external.get("collections.deque"), Some("collections.deque"));
    }

    #[test]
    fn unfinished_file_still_yields_imports() {
        let imports = extract_imports("import os\nfrom a import b\n\ndef f(x):\n    return os.path.join(");
        assert_eq!(imports.len(), 2);
    }
}
