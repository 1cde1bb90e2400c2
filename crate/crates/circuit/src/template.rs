//! `{name}` placeholder substitution shared by circuit recipes and narratives.

use std::collections::BTreeSet;

/// Placeholder names in order of first appearance, without duplicates.
pub fn placeholders(text: &str) -> Result<Vec<String>, String> {
    let mut names = Vec::new();
    let mut seen = BTreeSet::new();
    scan(text, |name| {
        if seen.insert(name.to_string()) {
            names.push(name.to_string());
        }
        Some(String::new())
    })?;
    Ok(names)
}

/// Replaces every `{name}` with `lookup(name)`. `{{` and `}}` are literal
/// braces. Fails on unknown names, empty or unterminated placeholders.
pub fn render(text: &str, lookup: impl Fn(&str) -> Option<String>) -> Result<String, String> {
    scan(text, lookup)
}

fn scan(text: &str, mut lookup: impl FnMut(&str) -> Option<String>) -> Result<String, String> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(i) = rest.find(['{', '}']) {
        out.push_str(&rest[..i]);
        let brace = rest.as_bytes()[i];
        rest = &rest[i + 1..];
        if rest.as_bytes().first() == Some(&brace) {
            out.push(brace as char);
            rest = &rest[1..];
            continue;
        }
        if brace == b'}' {
            return Err("unmatched `}`".into());
        }
        let end = rest.find('}').ok_or("unterminated placeholder")?;
        let name = &rest[..end];
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(format!("invalid placeholder `{{{name}}}`"));
        }
        out.push_str(&lookup(name).ok_or_else(|| format!("no value for placeholder `{name}`"))?);
        rest = &rest[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}
