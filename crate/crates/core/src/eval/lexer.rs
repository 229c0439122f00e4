use crate::ccg::{python, Language};

const PYTHON_KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del",
    "elif", "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is", "lambda", "nonlocal",
    "not", "or", "pass", "raise", "return", "try", "while", "with", "yield",
];

const JAVA_KEYWORDS: &[&str] = &[
    "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class", "const", "continue",
    "default", "do", "double", "else", "enum", "extends", "false", "final", "finally", "float", "for", "goto", "if",
    "implements", "import", "instanceof", "int", "interface", "long", "native", "new", "null", "package", "private",
    "protected", "public", "return", "short", "static", "strictfp", "super", "switch", "synchronized", "this",
    "throw", "throws", "transient", "true", "try", "void", "volatile", "while",
];

/// Identifier tokens of `code` in source order, keywords excluded. Works on
/// fragments: the grammar's error recovery still yields identifier leaves.
pub fn identifiers(code: &str, language: Language) -> Vec<String> {
    match language {
        Language::Python => python_identifiers(code),
        Language::Java => fallback_identifiers(code),
    }
}

fn python_identifiers(code: &str) -> Vec<String> {
    let tree = python::parse(code);
    let mut out = Vec::new();
    let mut cursor = tree.walk();
    let mut descending = true;
    loop {
        let node = cursor.node();
        if descending && node.kind() == "identifier" {
            let text = python::text(node, code);
            if !PYTHON_KEYWORDS.contains(&text) {
                out.push(text.to_string());
            }
        }
        if descending && cursor.goto_first_child() {
            continue;
        }
        if cursor.goto_next_sibling() {
            descending = true;
            continue;
        }
        if !cursor.goto_parent() {
            break;
        }
        descending = false;
    }
    out
}

/// Word-shaped non-keyword tokens not starting with a digit; used where no
/// grammar is linked.
fn fallback_identifiers(code: &str) -> Vec<String> {
    code.split(|c: char| !(c.is_alphanumeric() || c == '_' || c == '$'))
        .filter(|w| w.chars().next().is_some_and(|c| !c.is_ascii_digit()))
        .filter(|w| !JAVA_KEYWORDS.contains(w))
        .map(str::to_string)
        .collect()
}
