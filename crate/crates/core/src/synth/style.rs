//! Logic-invariant style transforms and the normalization that checks them.
//!
//! `normalize` drops whitespace and comments, keeps keywords, punctuation,
//! numbers and string contents (not their quote style), keeps attribute
//! names and keyword-argument keys verbatim, and renames every other
//! identifier to `id0, id1, ...` by first appearance. Each transform
//! below only touches what `normalize` discards or renames consistently, so
//! `normalize(t(code)) == normalize(code)` for all of them.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::lexer::{indent_levels, is_keyword, lex, line_infos, split_string, Kind, Token};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum StyleTransform {
    /// Locally bound names become `v1, v2, ...` by first appearance.
    RenameLocals,
    /// Two-space indentation, blank line after each block opener.
    Reflow,
    /// Inline comment after each control-flow line.
    Annotate,
    /// Swapped string quotes plus trailing whitespace.
    QuotesAndPadding,
}

pub const ALL_TRANSFORMS: [StyleTransform; 4] = [
    StyleTransform::RenameLocals,
    StyleTransform::Reflow,
    StyleTransform::Annotate,
    StyleTransform::QuotesAndPadding,
];

impl StyleTransform {
    pub fn apply(self, code: &str, seed: u64) -> String {
        match self {
            Self::RenameLocals => rename_locals(code),
            Self::Reflow => reflow(code),
            Self::Annotate => annotate(code, seed),
            Self::QuotesAndPadding => swap_quotes_and_pad(code),
        }
    }
}

/// Number of distinct variants the offline transforms can produce.
pub const MAX_VARIANTS: usize = 15;

/// Transforms making up variant `k` (1-based): the four single transforms
/// first, then pairs, triples, and all four, each in lexicographic order.
pub fn variant_recipe(k: usize) -> Option<Vec<StyleTransform>> {
    if k == 0 || k > MAX_VARIANTS {
        return None;
    }
    let mut subsets: Vec<u8> = (1u8..16).collect();
    subsets.sort_by_key(|m| (m.count_ones(), (0..4).filter(|i| m & (1 << i) != 0).collect::<Vec<_>>()));
    let mask = subsets[k - 1];
    Some(ALL_TRANSFORMS.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, t)| *t).collect())
}

pub fn apply_variant(code: &str, k: usize, seed: u64) -> Option<String> {
    let recipe = variant_recipe(k)?;
    Some(recipe.into_iter().fold(String::from(code), |acc, t| t.apply(&acc, seed)))
}

pub fn normalize(code: &str) -> Vec<String> {
    let scan = Scan::new(code);
    let mut names: BTreeMap<&str, usize> = BTreeMap::new();
    let mut out = Vec::new();
    for s in 0..scan.sig.len() {
        let text = scan.text(s);
        match scan.kind(s) {
            Kind::Ident if scan.renamable(s) => {
                let next = names.len();
                let id = *names.entry(text).or_insert(next);
                out.push(format!("id{id}"));
            }
            Kind::Ident if scan.is_name(s) => out.push(format!("name:{text}")),
            Kind::Str => {
                let (prefix, _, body) = split_string(text);
                out.push(format!("STR:{}:{body}", prefix.to_ascii_lowercase()));
            }
            _ => out.push(text.to_string()),
        }
    }
    out
}

pub fn normalized_text(code: &str) -> String {
    normalize(code).join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Paren {
    DefParams,
    Call,
    Group,
}

/// Significant-token view with paren context, shared by the rename passes.
struct Scan<'a> {
    toks: Vec<Token<'a>>,
    /// Indices into `toks` of non-space, non-newline, non-comment tokens.
    sig: Vec<usize>,
    /// Innermost paren kind at each significant token (after an opening
    /// paren is processed, before a closing one is).
    ctx: Vec<Option<Paren>>,
    /// Whether each significant token begins a logical line.
    line_start: Vec<bool>,
}

impl<'a> Scan<'a> {
    fn new(code: &'a str) -> Self {
        let toks = lex(code);
        let mut sig = Vec::new();
        let mut ctx = Vec::new();
        let mut line_start = Vec::new();
        let mut stack: Vec<Paren> = Vec::new();
        let mut at_start = true;
        let mut last: Option<&str> = None;
        for (i, t) in toks.iter().enumerate() {
            match t.kind {
                Kind::Space | Kind::Comment => continue,
                Kind::Newline => {
                    if stack.is_empty() && last != Some("\\") {
                        at_start = true;
                    }
                    continue;
                }
                _ => {}
            }
            if t.kind == Kind::Punct && matches!(t.text, ")" | "]" | "}") {
                stack.pop();
            }
            sig.push(i);
            ctx.push(stack.last().copied());
            line_start.push(at_start);
            at_start = t.kind == Kind::Punct && t.text == ";" && stack.is_empty();
            if t.kind == Kind::Punct && matches!(t.text, "(" | "[" | "{") {
                let n = sig.len();
                let prev = (n >= 2).then(|| toks[sig[n - 2]]);
                let prev2 = (n >= 3).then(|| toks[sig[n - 3]]);
                let kind = match (t.text, prev) {
                    ("(", Some(p)) if p.kind == Kind::Ident && !is_keyword(p.text) => {
                        match prev2 {
                            Some(d) if d.text == "def" => Paren::DefParams,
                            Some(d) if d.text == "class" => Paren::Group,
                            _ => Paren::Call,
                        }
                    }
                    ("(", Some(p)) if matches!(p.text, ")" | "]") || p.kind == Kind::Str => Paren::Call,
                    _ => Paren::Group,
                };
                stack.push(kind);
            }
            last = Some(t.text);
        }
        Self { toks, sig, ctx, line_start }
    }

    fn text(&self, s: usize) -> &'a str {
        self.toks[self.sig[s]].text
    }

    fn kind(&self, s: usize) -> Kind {
        self.toks[self.sig[s]].kind
    }

    fn is_name(&self, s: usize) -> bool {
        s < self.sig.len() && self.kind(s) == Kind::Ident && !is_keyword(self.text(s))
    }

    /// `=` that is neither `==` nor part of a comparison.
    fn is_assign_eq(&self, s: usize) -> bool {
        if s >= self.sig.len() || self.text(s) != "=" {
            return false;
        }
        let next_is_eq = s + 1 < self.sig.len() && self.text(s + 1) == "=" && self.sig[s + 1] == self.sig[s] + 1;
        let prev_cmp = s > 0 && matches!(self.text(s - 1), "=" | "!" | "<" | ">") && self.sig[s - 1] + 1 == self.sig[s];
        !next_is_eq && !prev_cmp
    }

    /// Collects a comma-separated name list starting at `s` (parens allowed);
    /// returns the names and the index after the list.
    fn name_list(&self, mut s: usize) -> (Vec<&'a str>, usize) {
        let mut names = Vec::new();
        while s < self.sig.len() {
            match self.text(s) {
                "(" | ")" | "[" | "]" | "," | "*" => s += 1,
                _ if self.is_name(s) => {
                    names.push(self.text(s));
                    s += 1;
                }
                _ => break,
            }
        }
        (names, s)
    }

    fn bound_names(&self) -> BTreeSet<&'a str> {
        let mut bound = BTreeSet::new();
        let mut excluded = BTreeSet::new();
        let n = self.sig.len();
        for s in 0..n {
            let text = self.text(s);
            match text {
                "def" | "class" if s + 1 < n => {
                    excluded.insert(self.text(s + 1));
                }
                "global" | "nonlocal" => {
                    let (names, _) = self.name_list(s + 1);
                    excluded.extend(names);
                }
                "for" => {
                    let (names, end) = self.name_list(s + 1);
                    if end < n && self.text(end) == "in" {
                        bound.extend(names);
                    }
                }
                "as" if self.is_name(s + 1) => {
                    bound.insert(self.text(s + 1));
                }
                "lambda" => {
                    let (names, end) = self.name_list(s + 1);
                    if end < n && self.text(end) == ":" {
                        bound.extend(names);
                    }
                }
                _ => {}
            }
            if self.is_name(s) && self.ctx[s] == Some(Paren::DefParams) {
                let prev = self.text(s - 1);
                if matches!(prev, "(" | "," | "*") {
                    bound.insert(text);
                }
            }
            if self.line_start[s] && self.is_name(s) {
                let (names, end) = self.name_list(s);
                let augmented = end + 1 < n
                    && self.kind(end) == Kind::Punct
                    && self.text(end + 1) == "="
                    && self.sig[end] + 1 == self.sig[end + 1]
                    && matches!(self.text(end), "+" | "-" | "*" | "/" | "%" | "&" | "|" | "^" | "@");
                if self.is_assign_eq(end) || augmented {
                    bound.extend(names);
                }
            }
        }
        // names referenced from f-string bodies stay untouched
        for t in &self.toks {
            if t.kind == Kind::Str && split_string(t.text).0.to_ascii_lowercase().contains('f') {
                for inner in lex(split_string(t.text).2) {
                    if inner.kind == Kind::Ident {
                        excluded.insert(inner.text);
                    }
                }
            }
        }
        bound.retain(|name| !excluded.contains(name));
        bound
    }

    /// Whether significant token `s` is a keyword-argument key in a call.
    fn is_kwarg_key(&self, s: usize) -> bool {
        self.ctx[s] == Some(Paren::Call) && s > 0 && matches!(self.text(s - 1), "(" | ",") && self.is_assign_eq(s + 1)
    }

    fn renamable(&self, s: usize) -> bool {
        self.is_name(s) && !(s > 0 && self.text(s - 1) == ".") && !self.is_kwarg_key(s)
    }
}

pub fn rename_locals(code: &str) -> String {
    let scan = Scan::new(code);
    let bound = scan.bound_names();
    let existing: BTreeSet<&str> = scan.toks.iter().filter(|t| t.kind == Kind::Ident).map(|t| t.text).collect();
    let mut mapping: BTreeMap<&str, String> = BTreeMap::new();
    let mut counter = 0usize;
    let mut replace: BTreeMap<usize, String> = BTreeMap::new();
    for s in 0..scan.sig.len() {
        if !scan.renamable(s) || !bound.contains(scan.text(s)) {
            continue;
        }
        let new = mapping.entry(scan.text(s)).or_insert_with(|| loop {
            counter += 1;
            let candidate = format!("v{counter}");
            if !existing.contains(candidate.as_str()) {
                break candidate;
            }
        });
        replace.insert(scan.sig[s], new.clone());
    }
    scan.toks
        .iter()
        .enumerate()
        .map(|(i, t)| replace.get(&i).map_or(t.text, String::as_str))
        .collect()
}

fn code_part(line: &str) -> &str {
    match lex(line).iter().find(|t| t.kind == Kind::Comment) {
        Some(c) => line[..c.start].trim_end(),
        None => line.trim_end(),
    }
}

pub fn reflow(code: &str) -> String {
    let infos = line_infos(code);
    let levels = indent_levels(code, &infos);
    let mut out: Vec<String> = Vec::new();
    let mut inserted = false;
    for (i, line) in code.split('\n').enumerate() {
        let info = infos[i];
        if info.starts_in_string {
            out.push(String::from(line));
        } else if line.trim().is_empty() {
            continue;
        } else {
            let continuation = info.depth_at_start > 0 || info.continued;
            let depth = levels[i] + if continuation { 2 } else { 0 };
            out.push(format!("{}{}", "  ".repeat(depth), line.trim_start()));
        }
        let blank_ok = !info.ends_in_string && !info.ends_with_backslash;
        if blank_ok && code_part(line).ends_with(':') && !info.starts_in_string {
            out.push(String::new());
            inserted = true;
        }
    }
    if !inserted {
        out.push(String::new());
    }
    out.join("\n")
}

const CONTROL_WORDS: &[&str] =
    &["def", "if", "elif", "else", "for", "while", "try", "except", "finally", "with", "return", "class"];

fn phrase(word: &str, seed: u64) -> &'static str {
    let options: &[&str] = match word {
        "def" => &["entry point", "routine start", "begin routine"],
        "if" | "elif" => &["check condition", "branch", "guard"],
        "else" => &["fallback path", "otherwise", "default case"],
        "for" | "while" => &["loop step", "iterate", "repeat"],
        "return" => &["hand back", "output", "done"],
        _ => &["block", "scope", "section"],
    };
    options[(seed % options.len() as u64) as usize]
}

pub fn annotate(code: &str, seed: u64) -> String {
    let infos = line_infos(code);
    let lines: Vec<&str> = code.split('\n').collect();
    let eligible = |i: usize| {
        let info = infos[i];
        !info.starts_in_string
            && !info.ends_in_string
            && !info.ends_with_backslash
            && !info.has_comment
            && info.depth_at_start == 0
            && !info.continued
            && !lines[i].trim().is_empty()
    };
    let first_word = |line: &str| -> String {
        lex(line).iter().find(|t| t.kind != Kind::Space).map(|t| t.text.to_string()).unwrap_or_default()
    };
    let mut out: Vec<String> = lines.iter().map(|l| String::from(*l)).collect();
    let mut touched = false;
    for (i, line) in lines.iter().enumerate() {
        let word = first_word(line);
        if eligible(i) && CONTROL_WORDS.contains(&word.as_str()) {
            out[i] = format!("{}  # {}", line.trim_end(), phrase(&word, seed));
            touched = true;
        }
    }
    if !touched {
        match (0..lines.len()).find(|&i| eligible(i)) {
            Some(i) => out[i] = format!("{}  # {}", lines[i].trim_end(), phrase("", seed)),
            None => out.push(format!("# {}", phrase("", seed))),
        }
    }
    out.join("\n")
}

pub fn swap_quotes_and_pad(code: &str) -> String {
    let mut swapped = String::with_capacity(code.len() + 16);
    for t in lex(code) {
        if t.kind != Kind::Str {
            swapped.push_str(t.text);
            continue;
        }
        let (prefix, quote, body) = split_string(t.text);
        let terminated = t.text.len() >= prefix.len() + 2 * quote.len() && t.text.ends_with(quote);
        if !terminated || body.contains(['"', '\'']) || body.ends_with('\\') {
            swapped.push_str(t.text);
            continue;
        }
        let other = if quote.starts_with('"') { quote.replace('"', "'") } else { quote.replace('\'', "\"") };
        swapped.push_str(prefix);
        swapped.push_str(&other);
        swapped.push_str(body);
        swapped.push_str(&other);
    }
    let infos = line_infos(&swapped);
    swapped
        .split('\n')
        .enumerate()
        .map(|(i, line)| {
            let info = infos[i];
            if line.trim().is_empty() || info.ends_in_string || info.ends_with_backslash {
                String::from(line)
            } else {
                format!("{line}{}", " ".repeat(1 + i % 2))
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "def count_positive(values, limit=10):\n    total = 0\n    for value in values:\n        if value > 0 and total < limit:\n            total += 1\n    print(f\"{total} found\", sep='')\n    return total";

    #[test]
    fn recipes_enumerate_subsets() {
        assert_eq!(variant_recipe(1).unwrap(), [StyleTransform::RenameLocals]);
        assert_eq!(variant_recipe(4).unwrap(), [StyleTransform::QuotesAndPadding]);
        assert_eq!(variant_recipe(5).unwrap(), [StyleTransform::RenameLocals, StyleTransform::Reflow]);
        assert_eq!(variant_recipe(15).unwrap(), ALL_TRANSFORMS);
        assert!(variant_recipe(0).is_none());
        assert!(variant_recipe(16).is_none());
        let all: BTreeSet<Vec<StyleTransform>> = (1..=15).map(|k| variant_recipe(k).unwrap()).collect();
        assert_eq!(all.len(), 15);
    }

    #[test]
    fn rename_keeps_functions_attributes_kwargs_and_fstrings() {
        let out = rename_locals(SAMPLE);
        assert!(out.starts_with("def count_positive(v1, v2=10):"));
        assert!(out.contains("for v3 in v1:"));
        assert!(out.contains("print(f\"{total} found\", sep='')"), "{out}");
        assert!(out.contains("total = 0"));
    }

    #[test]
    fn rename_skips_existing_names() {
        let out = rename_locals("def f(v1, x):\n    y = v1 + x\n    return y");
        assert_eq!(out, "def f(v2, v3):\n    v4 = v2 + v3\n    return v4");
    }

    #[test]
    fn rename_skips_attributes_and_kwargs() {
        let out = rename_locals("def f(key):\n    d = dict(key=key)\n    return d.key");
        assert_eq!(out, "def f(v1):\n    v2 = dict(key=v1)\n    return v2.key");
    }

    #[test]
    fn reflow_output() {
        let out = reflow("def f(x):\n    if x:\n        return 1\n\n    return 2");
        assert_eq!(out, "def f(x):\n\n  if x:\n\n    return 1\n  return 2");
    }

    #[test]
    fn annotate_output() {
        let out = annotate("def f(x):\n    y = x\n    return y", 0);
        assert_eq!(out, "def f(x):  # entry point\n    y = x\n    return y  # hand back");
    }

    #[test]
    fn quote_swap_and_padding() {
        let out = swap_quotes_and_pad("def f():\n    return 'a' + \"b\" + 'it\"s'");
        assert_eq!(out, "def f(): \n    return \"a\" + 'b' + 'it\"s'  ");
    }

    #[test]
    fn multiline_strings_untouched() {
        let code = "def f():\n    s = \"\"\"keep\n    this   \"\"\"\n    return s";
        for k in 1..=15 {
            let v = apply_variant(code, k, 0).unwrap();
            assert!(v.contains("keep\n    this   "), "variant {k}: {v:?}");
            assert_eq!(normalize(&v), normalize(code), "variant {k}");
        }
    }

    #[test]
    fn every_variant_normalizes_like_the_original() {
        for k in 1..=15 {
            let v = apply_variant(SAMPLE, k, 3).unwrap();
            assert_eq!(normalize(&v), normalize(SAMPLE), "variant {k}:\n{v}");
        }
    }

    #[test]
    fn first_four_variants_distinct() {
        let vs: BTreeSet<String> = (1..=4).map(|k| apply_variant(SAMPLE, k, 0).unwrap()).collect();
        assert_eq!(vs.len(), 4);
    }

    #[test]
    fn normalization_ignores_comments_whitespace_names_and_quotes() {
        assert_eq!(normalize("a = 'x'  # c\nb=a"), normalize("p = \"x\"\nq  =  p"));
        assert_ne!(normalize("a = 'x'"), normalize("a = 'y'"));
        assert_ne!(normalize("a = b"), normalize("a = a"));
    }
}
