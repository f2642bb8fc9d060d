//! Prompt templates with `{name}` placeholders.

use std::path::Path;

use thiserror::Error;

use crate::io::IoError;

/// Placeholders a template may reference. Any other `{...}` text is literal.
pub const PLACEHOLDERS: &[&str] = &["query", "code", "pseudo_code", "n", "candidate", "scores"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("template {template} needs a value for {{{name}}}")]
    Missing { template: &'static str, name: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Templates {
    pub system: String,
    pub pseudocode: String,
    pub variants: String,
    pub evaluate_pseudocode: String,
    pub evaluate_variant: String,
    pub refine_pseudocode: String,
    pub refine_variant: String,
}

impl Default for Templates {
    fn default() -> Self {
        Self {
            system: include_str!("../templates/system.txt").into(),
            pseudocode: include_str!("../templates/pseudocode.txt").into(),
            variants: include_str!("../templates/variants.txt").into(),
            evaluate_pseudocode: include_str!("../templates/evaluate_pseudocode.txt").into(),
            evaluate_variant: include_str!("../templates/evaluate_variant.txt").into(),
            refine_pseudocode: include_str!("../templates/refine_pseudocode.txt").into(),
            refine_variant: include_str!("../templates/refine_variant.txt").into(),
        }
    }
}

impl Templates {
    /// Built-in templates, replaced file by file by `<name>.txt` in `dir`.
    pub fn load(dir: Option<&Path>) -> Result<Self, IoError> {
        let mut t = Self::default();
        let Some(dir) = dir else { return Ok(t) };
        for (name, slot) in [
            ("system", &mut t.system),
            ("pseudocode", &mut t.pseudocode),
            ("variants", &mut t.variants),
            ("evaluate_pseudocode", &mut t.evaluate_pseudocode),
            ("evaluate_variant", &mut t.evaluate_variant),
            ("refine_pseudocode", &mut t.refine_pseudocode),
            ("refine_variant", &mut t.refine_variant),
        ] {
            let path = dir.join(format!("{name}.txt"));
            if path.exists() {
                *slot = std::fs::read_to_string(&path).map_err(|e| IoError::io(&path, e))?;
            }
        }
        Ok(t)
    }
}

/// Substitutes known placeholders in one pass, so inserted values are never
/// re-scanned.
pub fn fill(template: &str, name: &'static str, values: &[(&str, &str)]) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let key = after.find('}').map(|close| &after[..close]).filter(|k| PLACEHOLDERS.contains(k));
        match key {
            Some(key) => {
                let value = values
                    .iter()
                    .find(|(k, _)| *k == key)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| TemplateError::Missing { template: name, name: key.to_string() })?;
                out.push_str(value);
                rest = &after[key.len() + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    Ok(out)
}

/// Placeholders that occur in `template`.
pub fn placeholders(template: &str) -> Vec<&'static str> {
    PLACEHOLDERS.iter().copied().filter(|p| template.contains(&format!("{{{p}}}"))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pseudocode_prompt_carries_the_three_constraints() {
        let t = Templates::default();
        let lower = t.pseudocode.to_lowercase();
        for phrase in ["prioritize key steps", "namespace standardization", "standardised indentation"] {
            assert!(lower.contains(phrase), "{phrase}");
        }
        assert_eq!(placeholders(&t.pseudocode), ["query", "code"]);
        assert_eq!(placeholders(&t.variants), ["code", "pseudo_code", "n"]);
    }

    #[test]
    fn values_are_not_rescanned() {
        let out = fill("A {query} B {code}", "t", &[("query", "{code}"), ("code", "x")]).unwrap();
        assert_eq!(out, "A {code} B x");
    }

    #[test]
    fn literal_braces_survive() {
        let out = fill("{\"a\": 1} {n} {other}", "t", &[("n", "4")]).unwrap();
        assert_eq!(out, "{\"a\": 1} 4 {other}");
    }

    #[test]
    fn missing_value_is_an_error() {
        let err = fill("{query}", "pseudocode", &[]).unwrap_err();
        assert_eq!(err.to_string(), "template pseudocode needs a value for {query}");
    }
}
