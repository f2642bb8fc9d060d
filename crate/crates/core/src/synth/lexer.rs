//! A lossless lexer for Python-like source.
//!
//! Concatenating the `text` of every token reproduces the input exactly,
//! which lets the style transforms rewrite individual tokens and splice the
//! rest back untouched.

use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Ident,
    Number,
    /// String literal including prefix and quotes.
    Str,
    /// `#` to end of line.
    Comment,
    /// Spaces, tabs, carriage returns.
    Space,
    Newline,
    /// Any other single character.
    Punct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub kind: Kind,
    pub text: &'a str,
    /// Byte offset into the source.
    pub start: usize,
}

pub const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del",
    "elif", "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is", "lambda", "nonlocal",
    "not", "or", "pass", "raise", "return", "try", "while", "with", "yield",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

fn is_string_prefix(s: &str) -> bool {
    matches!(
        s.to_ascii_lowercase().as_str(),
        "r" | "b" | "f" | "u" | "rb" | "br" | "fr" | "rf"
    )
}

/// Length in bytes of a string literal whose opening quote is at `at`.
fn string_len(src: &str, at: usize) -> usize {
    let bytes = src.as_bytes();
    let q = bytes[at];
    let triple = bytes.get(at + 1) == Some(&q) && bytes.get(at + 2) == Some(&q);
    let mut i = at + if triple { 3 } else { 1 };
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\\' {
            i += 2;
            continue;
        }
        if triple {
            if c == q && bytes.get(i + 1) == Some(&q) && bytes.get(i + 2) == Some(&q) {
                return i + 3 - at;
            }
        } else if c == q {
            return i + 1 - at;
        } else if c == b'\n' {
            // unterminated single-line string stops at the newline
            return i - at;
        }
        i += 1;
    }
    bytes.len().min(i) - at
}

pub fn lex(src: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut chars = src.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        let end = if c == '\n' {
            chars.next();
            out.push(Token { kind: Kind::Newline, text: &src[start..start + 1], start });
            continue;
        } else if c == ' ' || c == '\t' || c == '\r' {
            let mut end = start;
            while let Some(&(i, c)) = chars.peek() {
                if c == ' ' || c == '\t' || c == '\r' {
                    end = i + c.len_utf8();
                    chars.next();
                } else {
                    break;
                }
            }
            out.push(Token { kind: Kind::Space, text: &src[start..end], start });
            continue;
        } else if c == '#' {
            let end = src[start..].find('\n').map_or(src.len(), |n| start + n);
            (Kind::Comment, end)
        } else if c == '"' || c == '\'' {
            (Kind::Str, start + string_len(src, start))
        } else if c.is_alphabetic() || c == '_' {
            let mut end = start;
            for (i, c) in src[start..].char_indices() {
                if c.is_alphanumeric() || c == '_' {
                    end = start + i + c.len_utf8();
                } else {
                    break;
                }
            }
            let next = src.as_bytes().get(end).copied();
            if is_string_prefix(&src[start..end]) && matches!(next, Some(b'"' | b'\'')) {
                (Kind::Str, end + string_len(src, end))
            } else {
                (Kind::Ident, end)
            }
        } else if c.is_ascii_digit() {
            let mut end = start;
            for (i, c) in src[start..].char_indices() {
                if c.is_alphanumeric() || c == '_' || c == '.' {
                    end = start + i + c.len_utf8();
                } else {
                    break;
                }
            }
            (Kind::Number, end)
        } else {
            (Kind::Punct, start + c.len_utf8())
        };
        let (kind, end) = end;
        out.push(Token { kind, text: &src[start..end], start });
        while chars.peek().is_some_and(|&(i, _)| i < end) {
            chars.next();
        }
    }
    out
}

/// Splits a string token into (prefix, quote, body) where quote is the
/// opening delimiter (one or three chars).
pub fn split_string(tok: &str) -> (&str, &str, &str) {
    let qpos = tok.find(['"', '\'']).unwrap_or(0);
    let prefix = &tok[..qpos];
    let rest = &tok[qpos..];
    let q = rest.as_bytes().first().copied().unwrap_or(b'"');
    let qlen = if rest.len() >= 6 && rest.as_bytes()[1] == q && rest.as_bytes()[2] == q { 3 } else { 1 };
    let quote = &rest[..qlen.min(rest.len())];
    let body_end = if rest.len() >= 2 * qlen && rest.ends_with(quote) { rest.len() - qlen } else { rest.len() };
    let body = &rest[qlen.min(body_end)..body_end];
    (prefix, quote, body)
}

/// Per-line structural facts derived from the token stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LineInfo {
    /// The line begins inside a multi-line string literal.
    pub starts_in_string: bool,
    /// The line ends inside a multi-line string literal.
    pub ends_in_string: bool,
    /// Bracket depth when the line starts.
    pub depth_at_start: usize,
    /// The previous line ended with a backslash continuation.
    pub continued: bool,
    /// Last significant token is a backslash.
    pub ends_with_backslash: bool,
    pub has_comment: bool,
}

/// Facts for each `\n`-separated line of `src`.
pub fn line_infos(src: &str) -> Vec<LineInfo> {
    let n_lines = src.split('\n').count();
    let mut infos = alloc::vec![LineInfo::default(); n_lines];
    let line_starts: Vec<usize> =
        core::iter::once(0).chain(src.match_indices('\n').map(|(i, _)| i + 1)).collect();
    let line_of = |offset: usize| line_starts.partition_point(|&s| s <= offset) - 1;

    let mut depth = 0usize;
    let mut line = 0usize;
    let mut last_sig: Option<&str> = None;
    for tok in lex(src) {
        match tok.kind {
            Kind::Newline => {
                infos[line].ends_with_backslash = last_sig == Some("\\");
                line += 1;
                if line < n_lines {
                    infos[line].depth_at_start = depth;
                    infos[line].continued = infos[line - 1].ends_with_backslash;
                }
                last_sig = None;
            }
            Kind::Str => {
                let first = line_of(tok.start);
                let last = line_of(tok.start + tok.text.len().saturating_sub(1));
                for l in first + 1..=last {
                    infos[l].starts_in_string = true;
                    infos[l].depth_at_start = depth;
                }
                for info in &mut infos[first..last] {
                    info.ends_in_string = true;
                }
                line = last;
                last_sig = Some(tok.text);
            }
            Kind::Comment => infos[line].has_comment = true,
            Kind::Space => {}
            Kind::Punct => {
                match tok.text {
                    "(" | "[" | "{" => depth += 1,
                    ")" | "]" | "}" => depth = depth.saturating_sub(1),
                    _ => {}
                }
                last_sig = Some(tok.text);
            }
            Kind::Ident | Kind::Number => last_sig = Some(tok.text),
        }
    }
    if line < n_lines {
        infos[line].ends_with_backslash = last_sig == Some("\\");
    }
    infos
}

/// Indentation width of a line (tabs count as 8).
pub fn indent_width(line: &str) -> usize {
    line.chars()
        .take_while(|c| *c == ' ' || *c == '\t')
        .map(|c| if c == '\t' { 8 } else { 1 })
        .sum()
}

/// Assigns a nesting level to each line that opens a logical statement,
/// using a stack of indentation widths. Blank and continuation lines get
/// the level of the statement they belong to.
pub fn indent_levels(src: &str, infos: &[LineInfo]) -> Vec<usize> {
    let mut stack: Vec<usize> = alloc::vec![0];
    let mut current = 0usize;
    src.split('\n')
        .zip(infos)
        .map(|(line, info)| {
            let is_statement_start =
                !info.starts_in_string && info.depth_at_start == 0 && !info.continued && !line.trim().is_empty();
            let is_comment_only = line.trim_start().starts_with('#');
            if is_statement_start && !is_comment_only {
                let w = indent_width(line);
                while stack.len() > 1 && *stack.last().unwrap() > w {
                    stack.pop();
                }
                if w > *stack.last().unwrap() {
                    stack.push(w);
                }
                current = stack.len() - 1;
            }
            current
        })
        .collect()
}
