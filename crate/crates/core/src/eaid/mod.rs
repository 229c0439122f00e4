//! Import-aware identifier disambiguation.
//!
//! The unfinished file's import statements are resolved against a
//! repository-wide [`SymbolTable`]: imports that land on project files pull
//! the full function or class definitions into the prompt, and everything
//! else is listed as an external `canonical → alias` reference.

mod imports;
mod symbols;

use serde::{Deserialize, Serialize};

pub use imports::{
    extract_imports, resolve_imports, ExternalRefTable, ImportKind, ImportStatement, ImportedName, Resolution,
    ResolvedEntity, MODULE_ENTITY_CAP,
};
pub use symbols::{build_symbol_table, ClassEntity, Entity, FileSymbols, MethodEntity, Param, Scope, SymbolTable};

/// One resolved entity rendered two ways; the prompt budget decides which
/// one is used.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedEntity {
    pub file: String,
    pub full: String,
    pub signature_only: String,
}

/// The import-derived prompt section: raw import lines, resolved entities in
/// import order, then external references.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeSection {
    pub import_lines: Vec<String>,
    pub entities: Vec<RenderedEntity>,
    pub external_lines: Vec<String>,
    pub comment_prefix: String,
}

impl PeSection {
    pub fn is_empty(&self) -> bool {
        self.import_lines.is_empty() && self.entities.is_empty() && self.external_lines.is_empty()
    }

    /// Full rendering.
    pub fn text(&self) -> String {
        self.render(self.entities.len(), self.external_lines.len())
    }

    /// Renders with only the first `full_bodies` entities at full length (the
    /// rest as signatures) and the first `external` external lines.
    pub fn render(&self, full_bodies: usize, external: usize) -> String {
        let mut parts: Vec<String> = self.import_lines.clone();
        for (i, e) in self.entities.iter().enumerate() {
            parts.push(format!("{} {}", self.comment_prefix, e.file));
            parts.push(if i < full_bodies { e.full.clone() } else { e.signature_only.clone() });
        }
        parts.extend(self.external_lines.iter().take(external).cloned());
        parts.join("\n")
    }
}

fn stub_body(signature: &str) -> String {
    let indent: String = signature.chars().take_while(|c| c.is_whitespace()).collect();
    format!("{signature}\n{indent}    ...")
}

fn render_method(m: &MethodEntity) -> (String, String) {
    (m.body_text.clone(), stub_body(&m.signature))
}

fn render_class(c: &ClassEntity, prefix: &str) -> (String, String) {
    let indent: String = c.signature.chars().take_while(|ch| ch.is_whitespace()).collect();
    let mut head = vec![c.signature.clone()];
    if !c.member_variables.is_empty() {
        head.push(format!("{indent}    {prefix} variables: {}", c.member_variables.join(", ")));
    }
    let mut full = head.clone();
    let mut short = head;
    for m in &c.member_methods {
        full.push(m.body_text.clone());
        short.push(stub_body(&m.signature));
    }
    if c.member_methods.is_empty() {
        full.push(format!("{indent}    ..."));
        short.push(format!("{indent}    ..."));
    }
    (full.join("\n"), short.join("\n"))
}

/// Builds the import-derived prompt section from the unfinished file's
/// imports and their resolution. Empty imports give an empty section.
pub fn render_pe(imports: &[ImportStatement], resolution: &Resolution, comment_prefix: &str) -> PeSection {
    if imports.is_empty() {
        return PeSection { comment_prefix: comment_prefix.to_string(), ..Default::default() };
    }
    let entities = resolution
        .entities
        .iter()
        .map(|r| {
            let (full, signature_only) = match &r.entity {
                Entity::Method(m) => render_method(m),
                Entity::Class(c) => render_class(c, comment_prefix),
            };
            RenderedEntity { file: r.file.clone(), full, signature_only }
        })
        .collect();
    let external_lines = resolution
        .external
        .iter()
        .map(|(canonical, alias)| format!("{comment_prefix} external: {canonical} as {alias}"))
        .collect();
    PeSection {
        import_lines: imports.iter().map(|i| i.text.clone()).collect(),
        entities,
        external_lines,
        comment_prefix: comment_prefix.to_string(),
    }
}
