//! Rule-based pseudo-code for Python-like source.
//!
//! | source | pseudo-code |
//! |--------|-------------|
//! | `def f(args):` | `FUNCTION f(args):` |
//! | `return e` | `RETURN e` |
//! | `if c:` | `IF c:` |
//! | `elif c:` | `ELSE IF c:` |
//! | `else:` | `ELSE:` |
//! | `for x in s:` | `FOR EACH x IN s:` |
//! | `while c:` | `WHILE c:` |
//!
//! Comments and blank lines are dropped; every other line passes through
//! re-indented to four spaces per nesting level.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::lexer::{indent_levels, lex, line_infos, Kind};

/// Keywords the rule table can emit, longest first.
pub const PSEUDO_KEYWORDS: &[&str] = &["FUNCTION", "RETURN", "ELSE IF", "IF", "ELSE", "FOR EACH", "WHILE"];

pub fn strip_comments(src: &str) -> String {
    lex(src).iter().filter(|t| t.kind != Kind::Comment).map(|t| t.text).collect()
}

pub fn rewrite_line(content: &str) -> String {
    if let Some(rest) = content.strip_prefix("def ") {
        return format!("FUNCTION {rest}");
    }
    if content == "return" {
        return String::from("RETURN");
    }
    if let Some(rest) = content.strip_prefix("return ") {
        return format!("RETURN {rest}");
    }
    if content == "else:" {
        return String::from("ELSE:");
    }
    if content.ends_with(':') {
        if let Some(rest) = content.strip_prefix("elif ") {
            return format!("ELSE IF {rest}");
        }
        if let Some(rest) = content.strip_prefix("if ") {
            return format!("IF {rest}");
        }
        if let Some(rest) = content.strip_prefix("while ") {
            return format!("WHILE {rest}");
        }
        if let Some(rest) = content.strip_prefix("for ") {
            if let Some(split) = rest.find(" in ") {
                return format!("FOR EACH {} IN {}", &rest[..split], &rest[split + 4..]);
            }
        }
    }
    String::from(content)
}

pub fn to_pseudocode(code: &str) -> String {
    let stripped = strip_comments(code);
    let infos = line_infos(&stripped);
    let levels = indent_levels(&stripped, &infos);
    let mut out: Vec<String> = Vec::new();
    for ((line, info), level) in stripped.split('\n').zip(&infos).zip(levels) {
        if info.starts_in_string {
            out.push(String::from(line.trim_end()));
            continue;
        }
        let content = line.trim();
        if content.is_empty() {
            continue;
        }
        let continuation = info.depth_at_start > 0 || info.continued;
        let depth = if continuation { level + 1 } else { level };
        let body = if continuation { String::from(content) } else { rewrite_line(content) };
        out.push(format!("{}{}", "    ".repeat(depth), body));
    }
    out.join("\n")
}

/// Pseudo keywords opening each line of `pseudo`, in order.
pub fn keyword_profile(pseudo: &str) -> Vec<&'static str> {
    pseudo
        .lines()
        .filter_map(|l| {
            let t = l.trim_start();
            PSEUDO_KEYWORDS.iter().copied().find(|k| {
                t.strip_prefix(k).is_some_and(|rest| rest.is_empty() || rest.starts_with([' ', ':']))
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_add() {
        assert_eq!(to_pseudocode("def add(a, b):\n    return a + b"), "FUNCTION add(a, b):\n    RETURN a + b");
    }

    #[test]
    fn control_flow_and_comments() {
        let code = "def f(xs):  # entry\n  total = 0\n\n  for x in xs:\n    # skip\n    if x > 0:\n      total += x\n    elif x == 0:\n      pass\n    else:\n      return\n  while total > 10:\n    total -= 1\n  return total\n";
        let expected = "FUNCTION f(xs):\n    total = 0\n    FOR EACH x IN xs:\n        IF x > 0:\n            total += x\n        ELSE IF x == 0:\n            pass\n        ELSE:\n            RETURN\n    WHILE total > 10:\n        total -= 1\n    RETURN total";
        assert_eq!(to_pseudocode(code), expected);
    }

    #[test]
    fn continuation_lines_indent_one_deeper() {
        let code = "def f(a):\n    return g(a,\n             1)";
        assert_eq!(to_pseudocode(code), "FUNCTION f(a):\n    RETURN g(a,\n        1)");
    }

    #[test]
    fn profile_lists_keywords() {
        let p = to_pseudocode("def f(x):\n    if x:\n        return 1\n    else:\n        return 2");
        assert_eq!(keyword_profile(&p), ["FUNCTION", "IF", "RETURN", "ELSE", "RETURN"]);
    }

    #[test]
    fn deterministic() {
        let code = "def g(s):\n    for c in s:\n        print(c)";
        assert_eq!(to_pseudocode(code), to_pseudocode(code));
    }
}
