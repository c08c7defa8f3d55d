//! Minimal-edit alignment of an MT sentence against a (pseudo-)post-edit,
//! and the OK/BAD token and gap tags derived from it.
//!
//! Matching is exact and case-sensitive. Block shifts are optional and off by
//! default; without them the alignment is a plain monotone edit distance.

use thiserror::Error;

use crate::corpus::{Tag, TagSeq, TokenizedSentence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EditKind {
    Match,
    Substitute,
    /// MT token with no counterpart in the post-edit.
    Insert,
    /// Post-edit token missing from the MT.
    Delete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EditOp {
    pub kind: EditKind,
    pub mt_index: Option<usize>,
    pub pe_index: Option<usize>,
}

impl EditOp {
    fn new(kind: EditKind, mt_index: Option<usize>, pe_index: Option<usize>) -> Self {
        Self {
            kind,
            mt_index,
            pe_index,
        }
    }
}

/// A block move applied to the MT before alignment: the `len` tokens at
/// `start` are removed and reinserted so they begin at `dest` in the result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shift {
    pub start: usize,
    pub len: usize,
    pub dest: usize,
}

impl Shift {
    /// Applies the shift to a sequence, returning the reordered copy.
    pub fn apply<T: Clone>(&self, items: &[T]) -> Vec<T> {
        let mut rest: Vec<T> = items[..self.start].to_vec();
        rest.extend_from_slice(&items[self.start + self.len..]);
        let block = &items[self.start..self.start + self.len];
        let mut out = rest[..self.dest].to_vec();
        out.extend_from_slice(block);
        out.extend_from_slice(&rest[self.dest..]);
        out
    }
}

/// Ordered edit operations turning the MT into the post-edit.
///
/// `mt_index` always refers to the original (unshifted) MT position. Ops are
/// ordered along the shifted MT, so with no shifts both index streams are
/// increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditScript {
    pub ops: Vec<EditOp>,
    pub cost: usize,
    pub shifts: Vec<Shift>,
}

impl EditScript {
    pub fn edit_count(&self) -> usize {
        self.ops.iter().filter(|op| op.kind != EditKind::Match).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TerError {
    #[error("reference (post-edit) sentence is empty")]
    EmptyReference,
}

/// Longest block considered for a shift.
pub const MAX_SHIFT_BLOCK: usize = 10;

/// Default bound on how far a block may move.
pub const DEFAULT_MAX_SHIFT_DIST: usize = 50;

fn dp_table<T: PartialEq>(mt: &[T], pe: &[T]) -> Vec<Vec<usize>> {
    let (n, m) = (mt.len(), pe.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=m {
        d[0][j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let diag = d[i - 1][j - 1] + usize::from(mt[i - 1] != pe[j - 1]);
            d[i][j] = diag.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d
}

/// Unit-cost edit distance, two-row version.
pub fn edit_distance<T: PartialEq>(mt: &[T], pe: &[T]) -> usize {
    let m = pe.len();
    let mut prev: Vec<usize> = (0..=m).collect();
    let mut cur = vec![0usize; m + 1];
    for (i, a) in mt.iter().enumerate() {
        cur[0] = i + 1;
        for j in 1..=m {
            let diag = prev[j - 1] + usize::from(*a != pe[j - 1]);
            cur[j] = diag.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

fn backtrace<T: PartialEq>(mt: &[T], pe: &[T], mt_ids: &[usize]) -> Vec<EditOp> {
    let d = dp_table(mt, pe);
    let (mut i, mut j) = (mt.len(), pe.len());
    let mut ops = Vec::with_capacity(i.max(j));
    while i > 0 || j > 0 {
        let here = d[i][j];
        if i > 0 && j > 0 && mt[i - 1] == pe[j - 1] && d[i - 1][j - 1] == here {
            ops.push(EditOp::new(EditKind::Match, Some(mt_ids[i - 1]), Some(j - 1)));
            i -= 1;
            j -= 1;
        } else if i > 0 && j > 0 && mt[i - 1] != pe[j - 1] && d[i - 1][j - 1] + 1 == here {
            ops.push(EditOp::new(EditKind::Substitute, Some(mt_ids[i - 1]), Some(j - 1)));
            i -= 1;
            j -= 1;
        } else if j > 0 && d[i][j - 1] + 1 == here {
            ops.push(EditOp::new(EditKind::Delete, None, Some(j - 1)));
            j -= 1;
        } else {
            ops.push(EditOp::new(EditKind::Insert, Some(mt_ids[i - 1]), None));
            i -= 1;
        }
    }
    ops.reverse();
    ops
}

/// Monotone minimal-edit alignment. Backtrace ties prefer
/// Match > Substitute > Delete > Insert.
pub fn levenshtein_align(mt: &TokenizedSentence, pe: &TokenizedSentence) -> EditScript {
    let ids: Vec<usize> = (0..mt.len()).collect();
    let ops = backtrace(mt.tokens(), pe.tokens(), &ids);
    let cost = ops.iter().filter(|op| op.kind != EditKind::Match).count();
    EditScript {
        ops,
        cost,
        shifts: Vec::new(),
    }
}

/// Every shift of a block of up to [`MAX_SHIFT_BLOCK`] tokens moving at most
/// `max_dist` positions, in (start, len, dest) order.
pub fn candidate_shifts(n: usize, max_dist: usize) -> Vec<Shift> {
    let mut out = Vec::new();
    for start in 0..n {
        for len in 1..=MAX_SHIFT_BLOCK.min(n - start) {
            for dest in 0..=(n - len) {
                if dest != start && dest.abs_diff(start) <= max_dist {
                    out.push(Shift { start, len, dest });
                }
            }
        }
    }
    out
}

/// TER with greedy block shifts: repeatedly applies the shift that lowers
/// `edit distance + 1` the most, then aligns the shifted MT monotonically.
pub fn greedy_shift_align(
    mt: &TokenizedSentence,
    pe: &TokenizedSentence,
    max_shift_dist: usize,
) -> EditScript {
    let pe_toks = pe.tokens();
    let mut cur: Vec<(usize, &String)> = mt.tokens().iter().enumerate().collect();
    let mut words: Vec<&String> = cur.iter().map(|(_, w)| *w).collect();
    let pe_refs: Vec<&String> = pe_toks.iter().collect();
    let mut dist = edit_distance(&words, &pe_refs);
    let mut shifts = Vec::new();

    loop {
        let mut best: Option<(usize, Shift)> = None;
        for shift in candidate_shifts(cur.len(), max_shift_dist) {
            let moved = shift.apply(&words);
            let d = edit_distance(&moved, &pe_refs);
            if d + 1 < dist && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, shift));
            }
        }
        let Some((d, shift)) = best else { break };
        cur = shift.apply(&cur);
        words = cur.iter().map(|(_, w)| *w).collect();
        dist = d;
        shifts.push(shift);
    }

    let ids: Vec<usize> = cur.iter().map(|(i, _)| *i).collect();
    let ops = backtrace(&words, &pe_refs, &ids);
    let cost = ops.iter().filter(|op| op.kind != EditKind::Match).count() + shifts.len();
    EditScript { ops, cost, shifts }
}

pub fn align(mt: &TokenizedSentence, pe: &TokenizedSentence, use_shifts: bool) -> EditScript {
    if use_shifts {
        greedy_shift_align(mt, pe, DEFAULT_MAX_SHIFT_DIST)
    } else {
        levenshtein_align(mt, pe)
    }
}

/// Converts an edit script into token and gap tags for an MT of length `n`.
///
/// Match is OK; Substitute and Insert mark the MT token BAD; a run of Deletes
/// marks the single gap at the point of the run BAD. Gap positions count MT
/// tokens consumed so far along the script.
pub fn tags_from_script(script: &EditScript, n: usize) -> TagSeq {
    let mut tokens = vec![Tag::Ok; n];
    let mut gaps = vec![Tag::Ok; n + 1];
    let mut consumed = 0usize;
    for op in &script.ops {
        match op.kind {
            EditKind::Match => consumed += 1,
            EditKind::Substitute | EditKind::Insert => {
                if let Some(i) = op.mt_index {
                    tokens[i] = Tag::Bad;
                }
                consumed += 1;
            }
            EditKind::Delete => gaps[consumed] = Tag::Bad,
        }
    }
    TagSeq::new(tokens, Some(gaps)).expect("gap count is n + 1")
}

/// OK/BAD token and gap tags of `mt` against `pe`.
pub fn ter_tags(mt: &TokenizedSentence, pe: &TokenizedSentence, use_shifts: bool) -> TagSeq {
    tags_from_script(&align(mt, pe, use_shifts), mt.len())
}

/// Translation error rate: edit cost (including shifts) per reference token.
pub fn ter_score(
    mt: &TokenizedSentence,
    pe: &TokenizedSentence,
    use_shifts: bool,
) -> Result<f64, TerError> {
    if pe.is_empty() {
        return Err(TerError::EmptyReference);
    }
    Ok(align(mt, pe, use_shifts).cost as f64 / pe.len() as f64)
}
