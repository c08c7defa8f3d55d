//! Tag correction: refinement of TER-based BAD spans, constituent-tree
//! annotation, and the artificial corpus builder that ties them together.
//!
//! Perplexity changes are always `after - before`, so a negative value means
//! the pseudo-post-edit phrase made the sentence more fluent.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusError, Dataset, QeSample, Tag, TagSeq, TokenizedSentence};
use crate::ngram_lm::{LmError, NGramModel};
use crate::phrase::{project_span, Span};
use crate::ter_align::ter_tags;
use crate::tree::{ConstituentTree, TreeError, TreeNode};
use crate::word_align::{AlignError, Aligner, Alignment};

#[derive(Debug, Error)]
pub enum CorrectError {
    #[error("sample {0} has no post-edit")]
    MissingPe(u64),
    #[error("sample {0} has no tags")]
    MissingTags(u64),
    #[error("sample {0} has an empty MT sentence")]
    EmptyMt(u64),
    #[error("sample {id}: {source}")]
    Tree {
        id: u64,
        #[source]
        source: TreeError,
    },
    #[error("sample {id}: {source}")]
    Align {
        id: u64,
        #[source]
        source: AlignError,
    },
    #[error(transparent)]
    Lm(#[from] LmError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{what} has {found} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("strategy {0} needs {1}")]
    MissingResource(Strategy, &'static str),
    #[error("alpha must be non-negative, got {0}")]
    Alpha(f64),
}

pub type Result<T> = std::result::Result<T, CorrectError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    #[default]
    TerOnly,
    Refine,
    TreeAnnotate,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::TerOnly => "ter-only",
            Strategy::Refine => "refine",
            Strategy::TreeAnnotate => "tree-annotate",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "ter-only" => Ok(Strategy::TerOnly),
            "refine" => Ok(Strategy::Refine),
            "tree-annotate" => Ok(Strategy::TreeAnnotate),
            other => Err(format!("unknown strategy {other:?}")),
        }
    }
}

pub const DEFAULT_ALPHA: f64 = 1.0;
pub const DEFAULT_BETA: f64 = -3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionParams {
    /// Refinement flips a BAD span to OK when `|delta ppl| < alpha`.
    pub alpha: f64,
    /// Tree annotation selects a node when `delta ppl / span length < beta`.
    pub beta: f64,
    pub strategy: Strategy,
}

impl Default for CorrectionParams {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            strategy: Strategy::TerOnly,
        }
    }
}

impl CorrectionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) {
            return Err(CorrectError::Alpha(self.alpha));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    /// Refinement: span flipped to OK.
    FlippedOk,
    /// Refinement: perplexity change too large, span stays BAD.
    KeptBad,
    /// No consistent projection onto the post-edit.
    NoProjection,
    /// Tree annotation: node selected and tagged BAD.
    Selected,
    /// Tree annotation: node passed the threshold but overlaps a better one.
    Overlap,
    /// Tree annotation: node did not pass the threshold.
    AboveThreshold,
}

/// One JSON-lines audit record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub id: u64,
    pub span: [usize; 2],
    pub delta_ppl: Option<f64>,
    pub decision: Decision,
}

impl AuditEntry {
    fn new(id: u64, span: Span, delta_ppl: Option<f64>, decision: Decision) -> Self {
        Self {
            id,
            span: [span.l, span.r],
            delta_ppl,
            decision,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("audit entry serializes")
    }
}

/// Maximal runs of BAD token tags, left to right.
pub fn extract_bad_spans(tags: &[Tag]) -> Vec<Span> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, t) in tags.iter().enumerate() {
        match (t, start) {
            (Tag::Bad, None) => start = Some(i),
            (Tag::Ok, Some(l)) => {
                out.push(Span::new(l, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(l) = start {
        out.push(Span::new(l, tags.len() - 1));
    }
    out
}

fn pe_of(sample: &QeSample) -> Result<&TokenizedSentence> {
    sample.pe.as_ref().ok_or(CorrectError::MissingPe(sample.id))
}

fn check_alignment(sample: &QeSample, pe: &TokenizedSentence, align: &Alignment) -> Result<()> {
    align
        .check_bounds(sample.mt.len(), pe.len())
        .map_err(|source| CorrectError::Align {
            id: sample.id,
            source,
        })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corrected {
    pub tags: TagSeq,
    pub audit: Vec<AuditEntry>,
}

/// Flips TER BAD spans to OK when substituting the aligned post-edit phrase
/// barely changes perplexity. OK tokens and gap tags never change.
pub fn refine_tags(
    sample: &QeSample,
    align: &Alignment,
    lm: &NGramModel,
    alpha: f64,
) -> Result<Corrected> {
    let pe = pe_of(sample)?;
    let tags = sample
        .tags
        .as_ref()
        .ok_or(CorrectError::MissingTags(sample.id))?;
    check_alignment(sample, pe, align)?;

    let mut token_tags = tags.token_tags().to_vec();
    let mut audit = Vec::new();
    for span in extract_bad_spans(tags.token_tags()) {
        let Some(pe_span) = project_span(align, span, pe.len()) else {
            audit.push(AuditEntry::new(sample.id, span, None, Decision::NoProjection));
            continue;
        };
        let replacement = &pe.tokens()[pe_span.range()];
        let d = lm.delta_ppl(&sample.mt, span, replacement)?;
        let decision = if d.delta.abs() < alpha {
            token_tags[span.range()].fill(Tag::Ok);
            Decision::FlippedOk
        } else {
            Decision::KeptBad
        };
        audit.push(AuditEntry::new(sample.id, span, Some(d.delta), decision));
    }
    Ok(Corrected {
        tags: tags.with_token_tags(token_tags)?,
        audit,
    })
}

/// A constituent scored by substituting its aligned post-edit phrase.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredNode<'a> {
    pub node: &'a TreeNode,
    pub pe_span: Span,
    pub delta_ppl: f64,
    pub delta_ppl_norm: f64,
}

impl<'a> ScoredNode<'a> {
    pub fn new(node: &'a TreeNode, pe_span: Span, delta_ppl: f64) -> Self {
        Self {
            node,
            pe_span,
            delta_ppl,
            delta_ppl_norm: delta_ppl / node.span.len() as f64,
        }
    }
}

/// Scores every constituent with a consistent projection, in pre-order.
pub fn score_nodes<'a>(
    sample: &QeSample,
    tree: &'a ConstituentTree,
    align: &Alignment,
    lm: &NGramModel,
) -> Result<Vec<ScoredNode<'a>>> {
    let pe = pe_of(sample)?;
    let mut out = Vec::new();
    for node in tree.candidate_nodes(1, usize::MAX) {
        let Some(pe_span) = project_span(align, node.span, pe.len()) else {
            continue;
        };
        let d = lm.delta_ppl(&sample.mt, node.span, &pe.tokens()[pe_span.range()])?;
        out.push(ScoredNode::new(node, pe_span, d.delta));
    }
    Ok(out)
}

/// Greedy non-overlapping selection: ascending normalized perplexity change,
/// ties to the longer span and then the leftmost. Only nodes strictly below
/// `beta` are selected. Returns indices into `scored` in selection order.
pub fn select_nodes(scored: &[ScoredNode<'_>], beta: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scored.len())
        .filter(|&k| !scored[k].delta_ppl_norm.is_nan())
        .collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (&scored[a], &scored[b]);
        x.delta_ppl_norm
            .total_cmp(&y.delta_ppl_norm)
            .then(y.node.span.len().cmp(&x.node.span.len()))
            .then(x.node.span.l.cmp(&y.node.span.l))
    });
    let mut chosen: Vec<usize> = Vec::new();
    for k in order {
        if !(scored[k].delta_ppl_norm < beta) {
            break;
        }
        let span = scored[k].node.span;
        if chosen.iter().all(|&c| !scored[c].node.span.overlaps(&span)) {
            chosen.push(k);
        }
    }
    chosen
}

/// Tags selected constituents BAD and everything else OK, ignoring any
/// existing tags. Gap tags are all OK.
pub fn tree_annotate(
    sample: &QeSample,
    tree: &ConstituentTree,
    align: &Alignment,
    lm: &NGramModel,
    beta: f64,
) -> Result<Corrected> {
    let pe = pe_of(sample)?;
    tree.check_leaves(sample.mt.tokens())
        .map_err(|source| CorrectError::Tree {
            id: sample.id,
            source,
        })?;
    check_alignment(sample, pe, align)?;

    let scored = score_nodes(sample, tree, align, lm)?;
    let chosen = select_nodes(&scored, beta);
    let mut token_tags = vec![Tag::Ok; sample.mt.len()];
    for &k in &chosen {
        token_tags[scored[k].node.span.range()].fill(Tag::Bad);
    }
    let audit = scored
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let decision = if chosen.contains(&k) {
                Decision::Selected
            } else if s.delta_ppl_norm < beta {
                Decision::Overlap
            } else {
                Decision::AboveThreshold
            };
            AuditEntry::new(sample.id, s.node.span, Some(s.delta_ppl), decision)
        })
        .collect();
    Ok(Corrected {
        tags: TagSeq::new(token_tags.clone(), Some(vec![Tag::Ok; token_tags.len() + 1]))?,
        audit,
    })
}

/// Sentence-length window applied to both sides of a parallel pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LengthFilter {
    pub min: usize,
    pub max: usize,
}

impl Default for LengthFilter {
    fn default() -> Self {
        Self { min: 10, max: 100 }
    }
}

impl LengthFilter {
    pub fn accepts(&self, src: &TokenizedSentence, tgt: &TokenizedSentence) -> bool {
        let ok = |n: usize| self.min <= n && n <= self.max;
        ok(src.len()) && ok(tgt.len())
    }
}

/// Shared read-only inputs for corpus construction.
#[derive(Debug, Clone, Copy, Default)]
pub struct Resources<'a> {
    /// MT-to-pseudo-PE aligner (MT as source side).
    pub aligner: Option<&'a Aligner>,
    pub lm: Option<&'a NGramModel>,
    /// One tree per input MT line; a flat tree is used when absent.
    pub trees: Option<&'a [ConstituentTree]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildOutput {
    pub dataset: Dataset,
    pub audit: Vec<AuditEntry>,
}

/// Indices of the pairs kept by `filter` that also have a non-empty MT.
pub fn kept_indices(
    parallel: &[(TokenizedSentence, TokenizedSentence)],
    mt_outputs: &[TokenizedSentence],
    filter: LengthFilter,
) -> Vec<usize> {
    parallel
        .iter()
        .zip(mt_outputs)
        .enumerate()
        .filter(|(_, ((src, tgt), mt))| filter.accepts(src, tgt) && !mt.is_empty())
        .map(|(i, _)| i)
        .collect()
}

/// Builds a tagged corpus: the parallel target is the pseudo-post-edit, TER
/// tags are computed against it, and the chosen strategy corrects them.
/// Sample ids are input line indices; pairs outside `filter` are dropped.
pub fn build_artificial_corpus(
    parallel: &[(TokenizedSentence, TokenizedSentence)],
    mt_outputs: &[TokenizedSentence],
    params: CorrectionParams,
    resources: Resources<'_>,
    filter: LengthFilter,
    use_shifts: bool,
    language_pair: &str,
) -> Result<BuildOutput> {
    params.validate()?;
    if parallel.len() != mt_outputs.len() {
        return Err(CorrectError::LengthMismatch {
            what: "MT outputs",
            expected: parallel.len(),
            found: mt_outputs.len(),
        });
    }
    if let Some(trees) = resources.trees {
        if trees.len() != mt_outputs.len() {
            return Err(CorrectError::LengthMismatch {
                what: "trees",
                expected: mt_outputs.len(),
                found: trees.len(),
            });
        }
    }
    let needs = |what| CorrectError::MissingResource(params.strategy, what);
    let (aligner, lm) = match params.strategy {
        Strategy::TerOnly => (None, None),
        _ => (
            Some(resources.aligner.ok_or_else(|| needs("an aligner"))?),
            Some(resources.lm.ok_or_else(|| needs("a language model"))?),
        ),
    };

    let kept = kept_indices(parallel, mt_outputs, filter);
    let results: Vec<(QeSample, Vec<AuditEntry>)> = kept
        .par_iter()
        .map(|&i| {
            let (src, tgt) = &parallel[i];
            let mt = &mt_outputs[i];
            let ter = ter_tags(mt, tgt, use_shifts);
            let sample = QeSample::new(i as u64, src.clone(), mt.clone())
                .with_pe(tgt.clone())
                .with_tags(ter)?;
            let corrected = match (params.strategy, aligner, lm) {
                (Strategy::Refine, Some(a), Some(lm)) => {
                    Some(refine_tags(&sample, &a.align(mt, tgt), lm, params.alpha)?)
                }
                (Strategy::TreeAnnotate, Some(a), Some(lm)) => {
                    let flat;
                    let tree = match resources.trees {
                        Some(t) => &t[i],
                        None => {
                            flat = ConstituentTree::flat(mt.tokens());
                            &flat
                        }
                    };
                    Some(tree_annotate(&sample, tree, &a.align(mt, tgt), lm, params.beta)?)
                }
                _ => None,
            };
            Ok(match corrected {
                Some(c) => (sample.with_tags(c.tags)?, c.audit),
                None => (sample, Vec::new()),
            })
        })
        .collect::<Result<_>>()?;

    let mut samples = Vec::with_capacity(results.len());
    let mut audit = Vec::new();
    for (s, a) in results {
        samples.push(s);
        audit.extend(a);
    }
    Ok(BuildOutput {
        dataset: Dataset::new(language_pair, samples)?,
        audit,
    })
}
