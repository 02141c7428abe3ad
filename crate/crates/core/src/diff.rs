//! Word-level diffs for the suggestion review dialog.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fragment::RichFragment;
use crate::text::word_tokens;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffOp {
    Keep,
    Delete,
    Insert,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hunk {
    pub op: DiffOp,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Diff {
    pub hunks: Vec<Hunk>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("diff does not match the old token stream at token {0}")]
pub struct DiffMismatch(pub usize);

impl Diff {
    /// Keep + delete tokens, i.e. the old stream.
    pub fn old_tokens(&self) -> Vec<String> {
        self.stream(DiffOp::Delete)
    }

    /// Keep + insert tokens, i.e. the new stream.
    pub fn new_tokens(&self) -> Vec<String> {
        self.stream(DiffOp::Insert)
    }

    fn stream(&self, side: DiffOp) -> Vec<String> {
        self.hunks
            .iter()
            .filter(|h| h.op == DiffOp::Keep || h.op == side)
            .flat_map(|h| h.tokens.iter().cloned())
            .collect()
    }

    /// True when nothing is deleted or inserted.
    pub fn is_unchanged(&self) -> bool {
        self.hunks.iter().all(|h| h.op == DiffOp::Keep)
    }

    /// Inline word-diff rendering: `a [-b-] {+x+} c`.
    pub fn render_inline(&self) -> String {
        self.hunks
            .iter()
            .filter(|h| !h.tokens.is_empty())
            .map(|h| {
                let words = h.tokens.join(" ");
                match h.op {
                    DiffOp::Keep => words,
                    DiffOp::Delete => format!("[-{words}-]"),
                    DiffOp::Insert => format!("{{+{words}+}}"),
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Replays `diff` against `old`, checking that keep/delete hunks match, and
/// returns the new token stream.
pub fn apply_diff(old: &[String], diff: &Diff) -> Result<Vec<String>, DiffMismatch> {
    let mut pos = 0;
    let mut out = Vec::new();
    for hunk in &diff.hunks {
        match hunk.op {
            DiffOp::Insert => out.extend(hunk.tokens.iter().cloned()),
            DiffOp::Keep | DiffOp::Delete => {
                for tok in &hunk.tokens {
                    if old.get(pos) != Some(tok) {
                        return Err(DiffMismatch(pos));
                    }
                    if hunk.op == DiffOp::Keep {
                        out.push(tok.clone());
                    }
                    pos += 1;
                }
            }
        }
    }
    if pos != old.len() {
        return Err(DiffMismatch(pos));
    }
    Ok(out)
}

pub fn compute_diff(old: &RichFragment, new: &RichFragment) -> Diff {
    diff_tokens(&word_tokens(old), &word_tokens(new))
}

pub fn compute_text_diff(old: &str, new: &str) -> Diff {
    let split = |s: &str| s.split_whitespace().map(str::to_string).collect::<Vec<_>>();
    diff_tokens(&split(old), &split(new))
}

/// Minimal LCS diff. Ties resolve toward the earliest match, and a
/// substitution is reported as delete-then-insert.
pub fn diff_tokens(old: &[String], new: &[String]) -> Diff {
    if old == new {
        return Diff {
            hunks: vec![Hunk {
                op: DiffOp::Keep,
                tokens: old.to_vec(),
            }],
        };
    }

    let prefix = old.iter().zip(new).take_while(|(a, b)| a == b).count();
    let a = &old[prefix..];
    let b = &new[prefix..];
    let (n, m) = (a.len(), b.len());

    // lcs[i][j] = LCS length of a[i..] and b[j..]
    let width = m + 1;
    let mut lcs = vec![0u32; (n + 1) * width];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            lcs[i * width + j] = if a[i] == b[j] {
                lcs[(i + 1) * width + j + 1] + 1
            } else {
                lcs[(i + 1) * width + j].max(lcs[i * width + j + 1])
            };
        }
    }

    let mut builder = HunkBuilder::default();
    for tok in &old[..prefix] {
        builder.push(DiffOp::Keep, tok);
    }
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if a[i] == b[j] {
            builder.push(DiffOp::Keep, &a[i]);
            i += 1;
            j += 1;
        } else if lcs[(i + 1) * width + j] >= lcs[i * width + j + 1] {
            builder.push(DiffOp::Delete, &a[i]);
            i += 1;
        } else {
            builder.push(DiffOp::Insert, &b[j]);
            j += 1;
        }
    }
    for tok in &a[i..] {
        builder.push(DiffOp::Delete, tok);
    }
    for tok in &b[j..] {
        builder.push(DiffOp::Insert, tok);
    }
    Diff {
        hunks: builder.hunks,
    }
}

#[derive(Default)]
struct HunkBuilder {
    hunks: Vec<Hunk>,
}

impl HunkBuilder {
    fn push(&mut self, op: DiffOp, tok: &str) {
        match self.hunks.last_mut() {
            Some(h) if h.op == op => h.tokens.push(tok.to_string()),
            _ => self.hunks.push(Hunk {
                op,
                tokens: vec![tok.to_string()],
            }),
        }
    }
}
