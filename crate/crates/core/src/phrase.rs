//! Consistent phrase-pair extraction from word alignments and projection of
//! MT spans onto the pseudo-post-edit.
//!
//! Alignments here are `(mt index, pe index)` links. A span pair is
//! consistent when at least one link falls inside it and no link connects a
//! token inside one span to a token outside the other.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::word_align::{AlignError, Alignment};

/// Inclusive token span `[l, r]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub l: usize,
    pub r: usize,
}

impl Span {
    pub fn new(l: usize, r: usize) -> Self {
        assert!(l <= r, "span [{l}, {r}] is reversed");
        Self { l, r }
    }

    pub fn len(&self) -> usize {
        self.r - self.l + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, i: usize) -> bool {
        self.l <= i && i <= self.r
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.l <= other.r && other.l <= self.r
    }

    pub fn range(&self) -> std::ops::RangeInclusive<usize> {
        self.l..=self.r
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.l, self.r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PhrasePair {
    pub mt_span: Span,
    pub pe_span: Span,
}

impl fmt::Display for PhrasePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ||| {}", self.mt_span, self.pe_span)
    }
}

/// Default cap on phrase length, both sides.
pub const DEFAULT_MAX_PHRASE_LEN: usize = 7;

/// Whether `(mt, pe)` is a consistent span pair under `align`.
pub fn is_consistent(align: &Alignment, mt: Span, pe: Span) -> bool {
    let mut touched = false;
    for (i, j) in align.iter() {
        match (mt.contains(i), pe.contains(j)) {
            (true, true) => touched = true,
            (false, false) => {}
            _ => return false,
        }
    }
    touched
}

/// All consistent phrase pairs with both sides at most `max_len` tokens.
///
/// For each MT span the minimal PE cover of its links is checked for
/// consistency and then widened over unaligned PE tokens on either edge.
pub fn extract_phrases(
    mt_len: usize,
    pe_len: usize,
    align: &Alignment,
    max_len: usize,
) -> Result<BTreeSet<PhrasePair>, AlignError> {
    align.check_bounds(mt_len, pe_len)?;
    let mut pe_aligned = vec![false; pe_len];
    let mut by_mt: Vec<Vec<usize>> = vec![Vec::new(); mt_len];
    let mut by_pe: Vec<Vec<usize>> = vec![Vec::new(); pe_len];
    for (i, j) in align.iter() {
        pe_aligned[j] = true;
        by_mt[i].push(j);
        by_pe[j].push(i);
    }

    let mut out = BTreeSet::new();
    for l in 0..mt_len {
        for r in l..mt_len.min(l + max_len) {
            let mt_span = Span::new(l, r);
            let linked = (l..=r).flat_map(|i| by_mt[i].iter().copied());
            let (lo, hi) = linked.fold((usize::MAX, 0usize), |(lo, hi), j| (lo.min(j), hi.max(j)));
            if lo == usize::MAX {
                continue;
            }
            if hi - lo + 1 > max_len {
                continue;
            }
            let leaks = (lo..=hi).any(|j| by_pe[j].iter().any(|&i| !mt_span.contains(i)));
            if leaks {
                continue;
            }
            let mut start = lo;
            loop {
                let mut end = hi;
                loop {
                    out.insert(PhrasePair {
                        mt_span,
                        pe_span: Span::new(start, end),
                    });
                    end += 1;
                    if end >= pe_len || pe_aligned[end] || end - start + 1 > max_len {
                        break;
                    }
                }
                if start == 0 || pe_aligned[start - 1] || hi - (start - 1) + 1 > max_len {
                    break;
                }
                start -= 1;
            }
        }
    }
    Ok(out)
}

/// Minimal PE span covering every link of `mt_span`, if that pair is
/// consistent. Returns `None` when the span is unaligned or the cover pulls in
/// PE tokens linked outside `mt_span`.
pub fn project_span(align: &Alignment, mt_span: Span, pe_len: usize) -> Option<Span> {
    let mut cover: Option<(usize, usize)> = None;
    for (i, j) in align.iter() {
        if mt_span.contains(i) && j < pe_len {
            cover = Some(match cover {
                None => (j, j),
                Some((lo, hi)) => (lo.min(j), hi.max(j)),
            });
        }
    }
    let (lo, hi) = cover?;
    let pe_span = Span::new(lo, hi);
    is_consistent(align, mt_span, pe_span).then_some(pe_span)
}
