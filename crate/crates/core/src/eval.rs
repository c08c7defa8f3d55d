//! Word-level QE metrics and dataset statistics.
//!
//! BAD is the positive class throughout. Metrics are pooled over the whole
//! corpus rather than averaged per sentence.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::correct::extract_bad_spans;
use crate::corpus::{CorpusError, Dataset, Tag, TagSeq};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("gold has {gold} samples, prediction has {pred}")]
    SampleCount { gold: usize, pred: usize },
    #[error("sample {index}: gold has {gold} tags, prediction has {pred}")]
    TagCount {
        index: usize,
        gold: usize,
        pred: usize,
    },
    #[error("sample {index}: gap tags missing from {side}")]
    MissingGaps { index: usize, side: &'static str },
}

pub type Result<T> = std::result::Result<T, EvalError>;

/// Confusion counts with BAD as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    fn add(&mut self, gold: Tag, pred: Tag) {
        match (gold.is_bad(), pred.is_bad()) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    fn merge(self, o: Confusion) -> Confusion {
        Confusion {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
            tn: self.tn + o.tn,
        }
    }

    /// Same counts with OK as the positive class.
    pub fn swapped(&self) -> Confusion {
        Confusion {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
        }
    }
}

fn check_counts(gold: &[TagSeq], pred: &[TagSeq]) -> Result<()> {
    if gold.len() != pred.len() {
        return Err(EvalError::SampleCount {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    for (index, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.len() != p.len() {
            return Err(EvalError::TagCount {
                index,
                gold: g.len(),
                pred: p.len(),
            });
        }
    }
    Ok(())
}

/// Pooled confusion over token tags, plus gap tags when `include_gaps`.
pub fn confusion(gold: &[TagSeq], pred: &[TagSeq], include_gaps: bool) -> Result<Confusion> {
    check_counts(gold, pred)?;
    gold.par_iter()
        .zip(pred)
        .enumerate()
        .map(|(index, (g, p))| {
            let mut c = Confusion::default();
            for (&a, &b) in g.token_tags().iter().zip(p.token_tags()) {
                c.add(a, b);
            }
            if include_gaps {
                let gg = g.gap_tags().ok_or(EvalError::MissingGaps { index, side: "gold" })?;
                let pg = p.gap_tags().ok_or(EvalError::MissingGaps {
                    index,
                    side: "prediction",
                })?;
                for (&a, &b) in gg.iter().zip(pg) {
                    c.add(a, b);
                }
            }
            Ok(c)
        })
        .try_reduce(Confusion::default, |a, b| Ok(a.merge(b)))
}

/// Matthews correlation coefficient; 0 when any marginal is empty.
pub fn mcc(c: &Confusion) -> f64 {
    let (tp, fp, fn_, tn) = (c.tp as f64, c.fp as f64, c.fn_ as f64, c.tn as f64);
    let denom = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    if denom == 0.0 {
        return 0.0;
    }
    (tp * tn - fp * fn_) / denom.sqrt()
}

fn harmonic(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// F1 of the given class; 0 when precision or recall is undefined.
pub fn f1(c: &Confusion, positive: Tag) -> f64 {
    let c = match positive {
        Tag::Bad => *c,
        Tag::Ok => c.swapped(),
    };
    harmonic(ratio(c.tp, c.tp + c.fp), ratio(c.tp, c.tp + c.fn_))
}

/// F1 over maximal BAD spans; a predicted span counts only if a gold span in
/// the same sample has identical boundaries.
pub fn span_f1(gold: &[TagSeq], pred: &[TagSeq]) -> Result<f64> {
    check_counts(gold, pred)?;
    let (matches, n_gold, n_pred) = gold
        .par_iter()
        .zip(pred)
        .map(|(g, p)| {
            let gs = extract_bad_spans(g.token_tags());
            let ps = extract_bad_spans(p.token_tags());
            let m = ps.iter().filter(|s| gs.contains(s)).count() as u64;
            (m, gs.len() as u64, ps.len() as u64)
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    Ok(harmonic(ratio(matches, n_pred), ratio(matches, n_gold)))
}

/// The fixed evaluation report. `mcc_star` is `None` when either side lacks
/// gap tags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalReport {
    pub mcc: f64,
    pub mcc_star: Option<f64>,
    pub f_ok: f64,
    pub f_bad: f64,
    pub f_bad_span: f64,
}

pub fn evaluate(gold: &[TagSeq], pred: &[TagSeq]) -> Result<EvalReport> {
    let c = confusion(gold, pred, false)?;
    let has_gaps = gold
        .iter()
        .chain(pred)
        .all(|t| t.gap_tags().is_some());
    let mcc_star = if has_gaps {
        Some(mcc(&confusion(gold, pred, true)?))
    } else {
        None
    };
    Ok(EvalReport {
        mcc: mcc(&c),
        mcc_star,
        f_ok: f1(&c, Tag::Ok),
        f_bad: f1(&c, Tag::Bad),
        f_bad_span: span_f1(gold, pred)?,
    })
}

impl EvalReport {
    /// One `name<TAB>value` line per metric, scaled by 100.
    pub fn to_text(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_owned(), |v| format!("{:.2}", v * 100.0));
        let rows = [
            ("MCC", Some(self.mcc)),
            ("MCC*", self.mcc_star),
            ("F-OK", Some(self.f_ok)),
            ("F-BAD", Some(self.f_bad)),
            ("F-BAD-Span", Some(self.f_bad_span)),
        ];
        rows.iter()
            .map(|(name, v)| format!("{name}\t{}\n", fmt(*v)))
            .collect()
    }
}

/// Corpus statistics in the layout of the usual QE data tables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub samples: u64,
    pub tokens: u64,
    pub bad_tokens: u64,
    pub bad_token_pct: f64,
    /// `None` when the tags carry no gaps.
    pub gap_tags: Option<u64>,
    pub bad_gaps: Option<u64>,
    pub bad_gap_pct: Option<f64>,
    /// BAD span length -> number of spans.
    pub span_lengths: BTreeMap<usize, u64>,
    /// Number of BAD spans in a sample -> number of samples.
    pub spans_per_sample: BTreeMap<usize, u64>,
    pub all_ok_samples: u64,
}

fn pct(num: u64, den: u64) -> f64 {
    ratio(num, den) * 100.0
}

/// Statistics over bare tag sequences. Gap figures are reported only if
/// every sequence has gaps.
pub fn tag_stats(tags: &[TagSeq]) -> StatsReport {
    let mut r = StatsReport {
        samples: tags.len() as u64,
        tokens: 0,
        bad_tokens: 0,
        bad_token_pct: 0.0,
        gap_tags: None,
        bad_gaps: None,
        bad_gap_pct: None,
        span_lengths: BTreeMap::new(),
        spans_per_sample: BTreeMap::new(),
        all_ok_samples: 0,
    };
    let with_gaps = !tags.is_empty() && tags.iter().all(|t| t.gap_tags().is_some());
    let (mut gaps, mut bad_gaps) = (0u64, 0u64);
    for t in tags {
        let tt = t.token_tags();
        r.tokens += tt.len() as u64;
        let bad = tt.iter().filter(|t| t.is_bad()).count() as u64;
        r.bad_tokens += bad;
        if bad == 0 {
            r.all_ok_samples += 1;
        }
        let spans = extract_bad_spans(tt);
        *r.spans_per_sample.entry(spans.len()).or_insert(0) += 1;
        for s in spans {
            *r.span_lengths.entry(s.len()).or_insert(0) += 1;
        }
        if let Some(g) = t.gap_tags() {
            gaps += g.len() as u64;
            bad_gaps += g.iter().filter(|t| t.is_bad()).count() as u64;
        }
    }
    r.bad_token_pct = pct(r.bad_tokens, r.tokens);
    if with_gaps {
        r.gap_tags = Some(gaps);
        r.bad_gaps = Some(bad_gaps);
        r.bad_gap_pct = Some(pct(bad_gaps, gaps));
    }
    r
}

/// Statistics of a tagged dataset; fails on the first untagged sample.
pub fn dataset_stats(ds: &Dataset) -> std::result::Result<StatsReport, CorpusError> {
    let tags = ds
        .samples
        .iter()
        .map(|s| s.tags.clone().ok_or(CorpusError::Untagged { id: s.id }))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(tag_stats(&tags))
}

impl StatsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize")
    }

    /// Header plus one row: samples, tokens, BAD tags, gap BAD tags; then the
    /// two histograms.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let gap = match (self.bad_gaps, self.bad_gap_pct) {
            (Some(n), Some(p)) => format!("{n} ({p:.2}%)"),
            _ => "-".to_owned(),
        };
        let _ = writeln!(out, "samples\ttokens\tMT BAD tags\tMT Gap BAD tags");
        let _ = writeln!(
            out,
            "{}\t{}\t{} ({:.2}%)\t{}",
            self.samples, self.tokens, self.bad_tokens, self.bad_token_pct, gap
        );
        let _ = writeln!(out, "all-OK samples\t{}", self.all_ok_samples);
        let _ = writeln!(out, "span length\tspans");
        for (k, v) in &self.span_lengths {
            let _ = writeln!(out, "{k}\t{v}");
        }
        let _ = writeln!(out, "spans per sample\tsamples");
        for (k, v) in &self.spans_per_sample {
            let _ = writeln!(out, "{k}\t{v}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Tag::{Bad as B, Ok as O};

    fn toks(t: &[Tag]) -> TagSeq {
        TagSeq::tokens_only(t.to_vec())
    }

    #[test]
    fn direct_count() {
        let c = confusion(&[toks(&[O, O, B, O])], &[toks(&[O, B, B, O])], false).unwrap();
        assert_eq!(c, Confusion { tp: 1, fp: 1, fn_: 0, tn: 2 });
        assert!((mcc(&c) - 2.0 / 12f64.sqrt()).abs() < 1e-12);
        assert!((f1(&c, Tag::Bad) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn gaps_extend_the_stream() {
        let g = TagSeq::new(vec![O, B], Some(vec![O, O, B])).unwrap();
        let c = confusion(std::slice::from_ref(&g), std::slice::from_ref(&g), true).unwrap();
        assert_eq!(c.total(), 5);
        assert!(confusion(&[g], &[toks(&[O, B])], true).is_err());
    }

    #[test]
    fn conventions() {
        let c = confusion(&[toks(&[O, B])], &[toks(&[O, O])], false).unwrap();
        assert_eq!(mcc(&c), 0.0);
        let all_ok = confusion(&[toks(&[O, O])], &[toks(&[O, O])], false).unwrap();
        assert_eq!(f1(&all_ok, Tag::Bad), 0.0);
        assert_eq!(f1(&all_ok, Tag::Ok), 1.0);
        let perfect = confusion(&[toks(&[O, B])], &[toks(&[O, B])], false).unwrap();
        assert_eq!(mcc(&perfect), 1.0);
    }

    #[test]
    fn mismatched_lengths() {
        assert!(confusion(&[toks(&[O])], &[toks(&[O, O])], false).is_err());
        assert!(span_f1(&[toks(&[O])], &[]).is_err());
    }

    #[test]
    fn span_examples() {
        let gold = [toks(&[O, B, B, O, B])];
        assert_eq!(span_f1(&gold, &gold).unwrap(), 1.0);
        let narrow = [toks(&[O, B, O, O, O])];
        assert_eq!(span_f1(&[toks(&[O, B, B, O, O])], &narrow).unwrap(), 0.0);
        let half = [toks(&[O, B, B, O, O])];
        assert!((span_f1(&gold, &half).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn report_text() {
        let g = [toks(&[O, B])];
        let text = evaluate(&g, &g).unwrap().to_text();
        assert_eq!(
            text,
            "MCC\t100.00\nMCC*\t-\nF-OK\t100.00\nF-BAD\t100.00\nF-BAD-Span\t100.00\n"
        );
    }

    #[test]
    fn stats_single_ok_sample() {
        let r = tag_stats(&[toks(&[O, O])]);
        assert_eq!(r.all_ok_samples, 1);
        assert!(r.span_lengths.is_empty());
        assert_eq!(r.spans_per_sample.get(&0), Some(&1));
    }

    #[test]
    fn stats_counts_and_gaps() {
        let a = TagSeq::new(vec![B, O, B, B], Some(vec![O, B, O, O, O])).unwrap();
        let b = TagSeq::new(vec![O], Some(vec![O, O])).unwrap();
        let r = tag_stats(&[a, b]);
        assert_eq!((r.samples, r.tokens, r.bad_tokens), (2, 5, 3));
        assert_eq!(r.bad_token_pct, 60.0);
        // gaps = tokens + samples
        assert_eq!(r.gap_tags, Some(7));
        assert_eq!(r.bad_gaps, Some(1));
        assert_eq!(r.span_lengths, BTreeMap::from([(1, 1), (2, 1)]));
        assert_eq!(r.spans_per_sample, BTreeMap::from([(0, 1), (2, 1)]));
        assert!(r.to_table().contains("2\t5\t3 (60.00%)\t1 (14.29%)"));
    }
}
