//! Synthetic `<query, code>` corpora for desk-scale experiments.
//!
//! Each sample pairs one list operation with one collection noun. Queries
//! are phrased with synonyms that never appear in the code, so a model has
//! to learn the correspondence rather than match shared tokens.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::sample::Sample;

/// Source dialect of generated code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dialect {
    Python,
    JavaScript,
}

impl Dialect {
    pub fn language(self) -> &'static str {
        match self {
            Self::Python => "python",
            Self::JavaScript => "javascript",
        }
    }
}

struct Operation {
    /// Function-name stem used in code.
    name: &'static str,
    /// Query phrasings; `{}` takes the noun synonym.
    phrasings: &'static [&'static str],
    /// Python body with `{n}` for the collection parameter.
    python: &'static str,
    javascript: &'static str,
}

const OPERATIONS: &[Operation] = &[
    Operation {
        name: "sum",
        phrasings: &["add up all the {}", "compute the grand total of the {}", "accumulate every one of the {}"],
        python: "    total = 0\n    for item in {n}:\n        total += item\n    return total",
        javascript: "  let total = 0;\n  for (const item of {n}) {\n    total += item;\n  }\n  return total;",
    },
    Operation {
        name: "largest",
        phrasings: &["find the biggest of the {}", "pick the greatest among the {}", "return the highest {}"],
        python: "    best = {n}[0]\n    for item in {n}:\n        if item > best:\n            best = item\n    return best",
        javascript: "  let best = {n}[0];\n  for (const item of {n}) {\n    if (item > best) {\n      best = item;\n    }\n  }\n  return best;",
    },
    Operation {
        name: "smallest",
        phrasings: &["find the tiniest of the {}", "pick the least among the {}", "return the lowest {}"],
        python: "    best = {n}[0]\n    for item in {n}:\n        if item < best:\n            best = item\n    return best",
        javascript: "  let best = {n}[0];\n  for (const item of {n}) {\n    if (item < best) {\n      best = item;\n    }\n  }\n  return best;",
    },
    Operation {
        name: "count",
        phrasings: &["tally how many {} there are", "determine the quantity of {}", "number of {} present"],
        python: "    size = 0\n    for _ in {n}:\n        size += 1\n    return size",
        javascript: "  let size = 0;\n  for (const _ of {n}) {\n    size += 1;\n  }\n  return size;",
    },
    Operation {
        name: "positive",
        phrasings: &["keep only the {} above zero", "discard the {} that are not greater than nil", "select strictly upbeat {}"],
        python: "    kept = []\n    for item in {n}:\n        if item > 0:\n            kept.append(item)\n    return kept",
        javascript: "  const kept = [];\n  for (const item of {n}) {\n    if (item > 0) {\n      kept.push(item);\n    }\n  }\n  return kept;",
    },
    Operation {
        name: "sort",
        phrasings: &["arrange the {} in ascending order", "put the {} into increasing sequence", "order the {} from low to high"],
        python: "    ordered = sorted({n})\n    return ordered",
        javascript: "  const ordered = [...{n}].sort((a, b) => a - b);\n  return ordered;",
    },
    Operation {
        name: "reverse",
        phrasings: &["flip the ordering of the {}", "produce the {} backwards", "invert the sequence of {}"],
        python: "    flipped = {n}[::-1]\n    return flipped",
        javascript: "  const flipped = [...{n}].reverse();\n  return flipped;",
    },
    Operation {
        name: "mean",
        phrasings: &["average the {}", "compute the arithmetic midpoint of the {}", "typical expected {} overall"],
        python: "    if not {n}:\n        return 0\n    return sum({n}) / len({n})",
        javascript: "  if ({n}.length === 0) {\n    return 0;\n  }\n  return {n}.reduce((a, b) => a + b, 0) / {n}.length;",
    },
    Operation {
        name: "unique",
        phrasings: &["drop repeated {}", "deduplicate the {}", "distinct {} without copies"],
        python: "    seen = []\n    for item in {n}:\n        if item not in seen:\n            seen.append(item)\n    return seen",
        javascript: "  const seen = [];\n  for (const item of {n}) {\n    if (!seen.includes(item)) {\n      seen.push(item);\n    }\n  }\n  return seen;",
    },
    Operation {
        name: "first",
        phrasings: &["get the leading entry of the {}", "opening element among the {}", "head of the {} sequence"],
        python: "    if {n}:\n        return {n}[0]\n    return None",
        javascript: "  if ({n}.length > 0) {\n    return {n}[0];\n  }\n  return null;",
    },
    Operation {
        name: "last",
        phrasings: &["get the final entry of the {}", "closing element among the {}", "tail end of the {} sequence"],
        python: "    if {n}:\n        return {n}[-1]\n    return None",
        javascript: "  if ({n}.length > 0) {\n    return {n}[{n}.length - 1];\n  }\n  return null;",
    },
    Operation {
        name: "contains",
        phrasings: &["check whether the {} include a target", "test membership of a value within the {}", "is a wanted entry among the {}"],
        python: "    for item in {n}:\n        if item == target:\n            return True\n    return False",
        javascript: "  for (const item of {n}) {\n    if (item === target) {\n      return true;\n    }\n  }\n  return false;",
    },
    Operation {
        name: "double",
        phrasings: &["multiply each of the {} by two", "twice every one of the {}", "scale the {} twofold"],
        python: "    doubled = []\n    for item in {n}:\n        doubled.append(item * 2)\n    return doubled",
        javascript: "  const doubled = [];\n  for (const item of {n}) {\n    doubled.push(item * 2);\n  }\n  return doubled;",
    },
    Operation {
        name: "join",
        phrasings: &["concatenate the {} into text", "glue the {} together as a string", "render the {} comma separated"],
        python: "    text = \", \".join(str(item) for item in {n})\n    return text",
        javascript: "  const text = {n}.map(String).join(\", \");\n  return text;",
    },
    Operation {
        name: "empty",
        phrasings: &["check whether there are no {}", "test if the {} are blank", "are the {} lacking anything"],
        python: "    return len({n}) == 0",
        javascript: "  return {n}.length === 0;",
    },
    Operation {
        name: "index",
        phrasings: &["locate the position of a target in the {}", "where does a wanted value sit within the {}", "offset of an entry among the {}"],
        python: "    for position, item in enumerate({n}):\n        if item == target:\n            return position\n    return -1",
        javascript: "  for (let position = 0; position < {n}.length; position++) {\n    if ({n}[position] === target) {\n      return position;\n    }\n  }\n  return -1;",
    },
    Operation {
        name: "square",
        phrasings: &["raise each of the {} to the second power", "every one of the {} times itself", "quadratic of all {}"],
        python: "    squares = []\n    for item in {n}:\n        squares.append(item * item)\n    return squares",
        javascript: "  const squares = [];\n  for (const item of {n}) {\n    squares.push(item * item);\n  }\n  return squares;",
    },
    Operation {
        name: "product",
        phrasings: &["multiply all the {} together", "overall multiplicative result of the {}", "chain multiplication across the {}"],
        python: "    result = 1\n    for item in {n}:\n        result *= item\n    return result",
        javascript: "  let result = 1;\n  for (const item of {n}) {\n    result *= item;\n  }\n  return result;",
    },
    Operation {
        name: "absolute",
        phrasings: &["magnitude of each of the {}", "strip the sign from the {}", "non negative form of every one of the {}"],
        python: "    magnitudes = []\n    for item in {n}:\n        magnitudes.append(abs(item))\n    return magnitudes",
        javascript: "  const magnitudes = [];\n  for (const item of {n}) {\n    magnitudes.push(Math.abs(item));\n  }\n  return magnitudes;",
    },
    Operation {
        name: "even",
        phrasings: &["select the {} divisible by two", "keep {} with no remainder when halved", "retain evenly splittable {}"],
        python: "    evens = []\n    for item in {n}:\n        if item % 2 == 0:\n            evens.append(item)\n    return evens",
        javascript: "  const evens = [];\n  for (const item of {n}) {\n    if (item % 2 === 0) {\n      evens.push(item);\n    }\n  }\n  return evens;",
    },
];

/// `(code name, query synonyms)`.
const NOUNS: &[(&str, &[&str])] = &[
    ("prices", &["costs", "tariffs"]),
    ("scores", &["grades", "marks"]),
    ("ages", &["birthdays", "lifespans"]),
    ("weights", &["masses", "loads"]),
    ("sizes", &["dimensions", "extents"]),
    ("temperatures", &["readings", "thermals"]),
    ("distances", &["lengths", "spans"]),
    ("speeds", &["velocities", "paces"]),
    ("salaries", &["wages", "earnings"]),
    ("votes", &["ballots", "polls"]),
    ("heights", &["elevations", "altitudes"]),
    ("ratings", &["stars", "reviews"]),
    ("balances", &["funds", "deposits"]),
    ("orders", &["purchases", "bookings"]),
    ("items", &["goods", "wares"]),
    ("files", &["documents", "attachments"]),
    ("users", &["accounts", "members"]),
    ("names", &["labels", "titles"]),
    ("tokens", &["words", "lexemes"]),
    ("pages", &["sheets", "leaves"]),
    ("tasks", &["jobs", "chores"]),
    ("events", &["occurrences", "happenings"]),
    ("records", &["entries", "rows"]),
    ("values", &["numbers", "figures"]),
    ("counts", &["tallies", "totals"]),
];

/// Distinct operation/noun pairs available.
pub fn combinations() -> usize {
    OPERATIONS.len() * NOUNS.len()
}

fn camel(stem: &str, noun: &str) -> String {
    let mut out = String::from(stem);
    let mut chars = noun.chars();
    if let Some(c) = chars.next() {
        out.extend(c.to_uppercase());
        out.push_str(chars.as_str());
    }
    out
}

fn render(op: &Operation, noun: &str, dialect: Dialect) -> String {
    let needs_target = op.python.contains("target");
    match dialect {
        Dialect::Python => {
            let params = if needs_target { format!("{noun}, target") } else { String::from(noun) };
            format!("def {}_{noun}({params}):\n{}", op.name, op.python.replace("{n}", noun))
        }
        Dialect::JavaScript => {
            let params = if needs_target { format!("{noun}, target") } else { String::from(noun) };
            format!("function {}({params}) {{\n{}\n}}", camel(op.name, noun), op.javascript.replace("{n}", noun))
        }
    }
}

/// `count` samples in `dialect`, deterministic in `seed`. Pairs are drawn
/// without replacement until all [`combinations`] are used, then reused
/// with fresh phrasings.
pub fn toy_corpus(count: usize, seed: u64, dialect: Dialect) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs: Vec<(usize, usize)> =
        (0..OPERATIONS.len()).flat_map(|o| (0..NOUNS.len()).map(move |n| (o, n))).collect();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        pairs.shuffle(&mut rng);
        for &(o, n) in pairs.iter().take(count - out.len()) {
            let op = &OPERATIONS[o];
            let (noun, synonyms) = NOUNS[n];
            let phrasing = op.phrasings.choose(&mut rng).copied().unwrap_or("{}");
            let synonym = synonyms.choose(&mut rng).copied().unwrap_or(noun);
            let query = phrasing.replace("{}", synonym);
            let id = format!("{}-{:04}", dialect.language(), out.len());
            out.push(Sample::new(id, dialect.language(), query, render(op, noun, dialect)));
        }
    }
    out
}

const NAMES: &[&str] = &["data", "total", "count", "node", "key", "result", "path", "items", "limit", "flag"];
const METHODS: &[&str] = &["append", "get", "update", "strip", "split", "items"];

struct PyGen {
    rng: ChaCha8Rng,
    out: Vec<String>,
    bound: Vec<&'static str>,
}

impl PyGen {
    fn pick<T: Copy>(&mut self, xs: &[T]) -> T {
        *xs.choose(&mut self.rng).expect("non-empty choice")
    }

    fn name(&mut self) -> &'static str {
        if self.bound.is_empty() || self.rng.random_bool(0.2) {
            self.pick(NAMES)
        } else {
            let bound = self.bound.clone();
            self.pick(&bound)
        }
    }

    fn string(&mut self) -> String {
        match self.rng.random_range(0..5) {
            0 => String::from("'plain'"),
            1 => String::from("\"it's\""),
            2 => format!("f\"{{{}}} done\"", self.name()),
            3 => String::from("r'\\d+'"),
            _ => String::from("\"# not a comment\""),
        }
    }

    fn expr(&mut self, depth: usize) -> String {
        match self.rng.random_range(0..if depth > 1 { 3 } else { 7 }) {
            0 => String::from(self.name()),
            1 => format!("{}", self.rng.random_range(0..100)),
            2 => self.string(),
            3 => format!("{} + {}", self.expr(depth + 1), self.expr(depth + 1)),
            4 => format!("len({})", self.name()),
            5 => {
                let (m, a) = (self.pick(METHODS), self.expr(depth + 1));
                format!("{}.{m}({a}, sep={})", self.name(), self.string())
            }
            _ => format!("(lambda v: v * 2)({})", self.name()),
        }
    }

    fn line(&mut self, depth: usize, text: String) {
        self.out.push(format!("{}{text}", "    ".repeat(depth)));
    }

    fn bind(&mut self) -> &'static str {
        let n = self.pick(NAMES);
        if !self.bound.contains(&n) {
            self.bound.push(n);
        }
        n
    }

    fn block(&mut self, depth: usize, len: usize) {
        for _ in 0..len {
            self.statement(depth);
        }
    }

    fn statement(&mut self, depth: usize) {
        let nested = depth < 3;
        match self.rng.random_range(0..if nested { 12 } else { 6 }) {
            0 | 1 => {
                let e = self.expr(0);
                let n = self.bind();
                self.line(depth, format!("{n} = {e}"));
            }
            2 => {
                let e = self.expr(1);
                let n = self.bind();
                self.line(depth, format!("{n} += {e}"));
            }
            3 => {
                let e = self.expr(0);
                self.line(depth, format!("print({e})  # trace"));
            }
            4 => self.line(depth, String::from("# step marker")),
            5 => {
                let (a, b) = (self.name(), self.expr(1));
                self.line(depth, format!("{a}.update({b},"));
                let key = self.string();
                self.line(depth + 2, format!("key={key})"));
            }
            6 | 7 => {
                let c = self.expr(1);
                self.line(depth, format!("if {c} > 0:"));
                let len = 1 + self.rng.random_range(0..2);
                self.block(depth + 1, len);
                if self.rng.random_bool(0.5) {
                    let c = self.expr(1);
                    self.line(depth, format!("elif {c}:"));
                    self.block(depth + 1, 1);
                }
                if self.rng.random_bool(0.5) {
                    self.line(depth, String::from("else:"));
                    self.block(depth + 1, 1);
                }
            }
            8 => {
                let src = self.name();
                let v = self.bind();
                self.line(depth, format!("for {v} in {src}:"));
                let len = 1 + self.rng.random_range(0..2);
                self.block(depth + 1, len);
            }
            9 => {
                let c = self.name();
                self.line(depth, format!("while {c}:"));
                self.block(depth + 1, 1);
                self.line(depth + 1, String::from("break"));
            }
            10 => {
                let p = self.name();
                let h = self.bind();
                self.line(depth, format!("with open({p}) as {h}:"));
                self.block(depth + 1, 1);
            }
            _ => {
                self.line(depth, String::from("try:"));
                self.block(depth + 1, 1);
                let e = self.bind();
                self.line(depth, format!("except ValueError as {e}:"));
                self.line(depth + 1, format!("raise RuntimeError({e})"));
            }
        }
    }
}

/// A random Python-like function mixing the constructs the style transforms
/// must preserve: strings of every quote style, f-strings, comments,
/// keyword arguments, attribute access, continuation lines, and nested
/// blocks. Deterministic in `seed`.
pub fn random_python(seed: u64) -> String {
    let mut g = PyGen { rng: ChaCha8Rng::seed_from_u64(seed), out: Vec::new(), bound: Vec::new() };
    let arity = g.rng.random_range(1..4);
    let params: Vec<&str> = (0..arity).map(|_| g.bind()).collect::<Vec<_>>();
    let mut unique = params.clone();
    unique.dedup();
    let fname = format!("task_{}", g.rng.random_range(0..1000));
    g.line(0, format!("def {fname}({}):", unique.join(", ")));
    if g.rng.random_bool(0.3) {
        g.line(1, String::from("\"\"\"Doc line."));
        g.line(1, String::from("    keeps 'quotes' and  spacing.\"\"\""));
    }
    let len = g.rng.random_range(2..7);
    g.block(1, len);
    let e = g.expr(0);
    g.line(1, format!("return {e}"));
    g.out.join("\n")
}
