//! Hashed-subword tokenizer.
//!
//! Text is split on every non-alphanumeric character and additionally at
//! camelCase seams (`fooBar` -> `foo`, `Bar`; `HTTPServer` -> `HTTP`,
//! `Server`). Each piece is optionally lowercased and hashed with 64-bit
//! FNV-1a over its UTF-8 bytes; the bucket is `hash % vocab_buckets`.
//! Underscores are separators, so snake_case splits for free.

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tokenizer {
    pub vocab_buckets: u32,
    pub max_len: usize,
    pub lowercase: bool,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Self {
            vocab_buckets: 32_768,
            max_len: 512,
            lowercase: true,
        }
    }
}

impl Tokenizer {
    /// Surface pieces before hashing, already lowercased when configured.
    /// Not truncated.
    pub fn pieces(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        for word in text.split(|c: char| !c.is_alphanumeric()) {
            if word.is_empty() {
                continue;
            }
            split_camel(word, |piece| {
                let piece = if self.lowercase {
                    piece.to_lowercase()
                } else {
                    String::from(piece)
                };
                out.push(piece);
            });
        }
        out
    }

    pub fn bucket(&self, piece: &str) -> u32 {
        (fnv1a(piece.as_bytes()) % u64::from(self.vocab_buckets)) as u32
    }

    pub fn tokenize(&self, text: &str) -> Vec<u32> {
        let mut ids = self.pieces(text);
        ids.truncate(self.max_len);
        ids.iter().map(|p| self.bucket(p)).collect()
    }
}

/// Calls `emit` for each camelCase segment of an alphanumeric word.
fn split_camel(word: &str, mut emit: impl FnMut(&str)) {
    let chars: Vec<(usize, char)> = word.char_indices().collect();
    let mut start = 0;
    for k in 1..chars.len() {
        let prev = chars[k - 1].1;
        let cur = chars[k].1;
        let next = chars.get(k + 1).map(|&(_, c)| c);
        let lower_to_upper = (prev.is_lowercase() || prev.is_numeric()) && cur.is_uppercase();
        let acronym_end = prev.is_uppercase() && cur.is_uppercase() && next.is_some_and(char::is_lowercase);
        if lower_to_upper || acronym_end {
            emit(&word[start..chars[k].0]);
            start = chars[k].0;
        }
    }
    emit(&word[start..]);
}
