//! Prompt assembly: retrieved snippets, then the import section, then the
//! unfinished context, under an approximate token budget.

use serde::{Deserialize, Serialize};

use crate::ccg::Language;
use crate::eaid::PeSection;

pub const DEFAULT_BUDGET: usize = 2048;

/// `⌈chars / 4⌉`.
pub fn approx_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSnippet {
    pub id: String,
    pub file: String,
    pub text: String,
    pub score: f64,
}

/// Section header lines. A header is only emitted when its section follows
/// or contains other content, so a bare context stays verbatim.
pub fn markers(language: Language) -> [String; 3] {
    let p = language.comment_prefix();
    [format!("{p} <snippets>"), format!("{p} <imports>"), format!("{p} <context>")]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    /// Kept snippets, least similar first.
    pub snippets: Vec<PromptSnippet>,
    pub pe_section: String,
    pub context_section: String,
    pub budget: usize,
    pub approx_tokens: usize,
    pub text: String,
    pub dropped_snippets: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("budget of {budget} tokens cannot hold the {needed}-token context")]
pub struct BudgetExhausted {
    pub budget: usize,
    pub needed: usize,
}

/// How much of the import section survives.
#[derive(Debug, Clone, Copy)]
struct PeCut {
    entities: usize,
    full_bodies: usize,
    external: usize,
    imports: bool,
}

fn render_pe(pe: &PeSection, cut: PeCut) -> String {
    if !cut.imports && cut.entities == 0 && cut.external == 0 {
        return String::new();
    }
    let trimmed = PeSection {
        import_lines: if cut.imports { pe.import_lines.clone() } else { Vec::new() },
        entities: pe.entities[..cut.entities].to_vec(),
        external_lines: pe.external_lines.clone(),
        comment_prefix: pe.comment_prefix.clone(),
    };
    trimmed.render(cut.full_bodies, cut.external)
}

fn compose(snippets: &[PromptSnippet], pe: &str, context: &str, language: Language) -> String {
    let [snippet_marker, pe_marker, context_marker] = markers(language);
    let prefix = language.comment_prefix();
    let mut parts: Vec<String> = Vec::new();
    if !snippets.is_empty() {
        parts.push(snippet_marker);
        for s in snippets {
            parts.push(format!("{prefix} {}", s.file));
            parts.push(s.text.clone());
        }
    }
    if !pe.is_empty() {
        parts.push(pe_marker);
        parts.push(pe.to_string());
    }
    if parts.is_empty() {
        return context.to_string();
    }
    parts.push(context_marker);
    let mut text = parts.join("\n");
    text.push('\n');
    text.push_str(context);
    text
}

/// Assembles the final prompt.
///
/// Snippets are ordered by ascending score (ties by id) so the best match
/// sits next to the context. Over budget, content is shed in this order:
/// lowest-scoring snippets, external reference lines (last first), entity
/// bodies (reduced to signatures, last first), whole entities, import lines.
/// The context is never cut; if it alone exceeds the budget the call fails.
pub fn assemble(
    snippets: &[PromptSnippet],
    pe: &PeSection,
    context: &str,
    budget: usize,
    language: Language,
) -> Result<PromptBundle, BudgetExhausted> {
    let needed = approx_tokens(context);
    if needed > budget {
        return Err(BudgetExhausted { budget, needed });
    }
    let mut ordered = snippets.to_vec();
    ordered.sort_by(|a, b| a.score.total_cmp(&b.score).then_with(|| a.id.cmp(&b.id)));

    let mut cut = PeCut {
        entities: pe.entities.len(),
        full_bodies: pe.entities.len(),
        external: pe.external_lines.len(),
        imports: !pe.import_lines.is_empty(),
    };
    let mut first = 0;
    loop {
        let pe_text = render_pe(pe, cut);
        let text = compose(&ordered[first..], &pe_text, context, language);
        let tokens = approx_tokens(&text);
        if tokens <= budget {
            return Ok(PromptBundle {
                snippets: ordered[first..].to_vec(),
                pe_section: pe_text,
                context_section: context.to_string(),
                budget,
                approx_tokens: tokens,
                text,
                dropped_snippets: first,
            });
        }
        if first < ordered.len() {
            first += 1;
        } else if cut.external > 0 {
            cut.external -= 1;
        } else if cut.full_bodies > 0 {
            cut.full_bodies -= 1;
        } else if cut.entities > 0 {
            cut.entities -= 1;
        } else if cut.imports {
            cut.imports = false;
        } else {
            unreachable!("bare context fits the budget");
        }
    }
}
