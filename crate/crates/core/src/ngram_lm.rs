//! N-gram language model with interpolated Kneser-Ney smoothing, sentence
//! perplexity, and the perplexity change caused by a span substitution.
//!
//! The trained model is held in backoff form: every stored n-gram carries its
//! fully interpolated conditional probability, and every observed history
//! carries the weight given to the lower order for unseen continuations. For
//! an interpolated model this representation is exact, so the text format
//! written by [`NGramModel::to_text`] reloads to an identical scorer.
//!
//! Lower orders use continuation counts (number of distinct left contexts).
//! N-grams with no left context (starting with `<s>`, or at the start of a
//! sentence when boundaries are off) keep their raw counts.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::TokenizedSentence;
use crate::phrase::Span;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

pub const MAX_ORDER: usize = 5;
pub const DEFAULT_ORDER: usize = 3;
pub const DEFAULT_DISCOUNT: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LmError {
    #[error("language model training corpus is empty")]
    EmptyCorpus,
    #[error("order must be between 1 and {MAX_ORDER}, got {0}")]
    Order(usize),
    #[error("discount must lie in (0, 1], got {0}")]
    Discount(f64),
    #[error("cannot score an empty sentence")]
    EmptySentence,
    #[error("span {span} outside a sentence of {len} tokens")]
    SpanOutOfRange { span: Span, len: usize },
    #[error("model line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, LmError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Smoothing {
    /// Interpolated Kneser-Ney with one fixed discount for every order.
    KneserNey { discount: f64 },
    /// Relative frequencies with no smoothing. Unseen words score zero.
    Mle,
}

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing::KneserNey {
            discount: DEFAULT_DISCOUNT,
        }
    }
}

impl std::fmt::Display for Smoothing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Smoothing::KneserNey { discount } => write!(f, "kneser-ney:{discount}"),
            Smoothing::Mle => f.write_str("mle"),
        }
    }
}

impl FromStr for Smoothing {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "mle" {
            return Ok(Smoothing::Mle);
        }
        match s.split_once(':') {
            Some(("kneser-ney", d)) => d
                .parse::<f64>()
                .map(|discount| Smoothing::KneserNey { discount })
                .map_err(|e| e.to_string()),
            _ => Err(format!("unknown smoothing {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmConfig {
    pub order: usize,
    pub use_boundaries: bool,
    pub smoothing: Smoothing,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            order: DEFAULT_ORDER,
            use_boundaries: true,
            smoothing: Smoothing::default(),
        }
    }
}

impl LmConfig {
    /// Unsmoothed model without sentence boundaries.
    pub fn mle(order: usize) -> Self {
        Self {
            order,
            use_boundaries: false,
            smoothing: Smoothing::Mle,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(1..=MAX_ORDER).contains(&self.order) {
            return Err(LmError::Order(self.order));
        }
        if let Smoothing::KneserNey { discount } = self.smoothing {
            if !(discount > 0.0 && discount <= 1.0) {
                return Err(LmError::Discount(discount));
            }
        }
        Ok(())
    }
}

type Id = u32;
type Gram = Vec<Id>;

const UNK_ID: Id = 0;
const BOS_ID: Id = 1;
const EOS_ID: Id = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    /// log10 of the conditional probability; `None` for histories that are
    /// never predicted (those ending in `<s>`).
    log_prob: Option<f64>,
    /// log10 weight applied when backing off from this n-gram as a history.
    log_backoff: f64,
}

/// A trained n-gram model. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    order: usize,
    use_boundaries: bool,
    smoothing: Smoothing,
    words: Vec<String>,
    ids: HashMap<String, Id>,
    /// `tables[k - 1]` holds the k-grams.
    tables: Vec<HashMap<Gram, Entry>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PplDelta {
    pub before: f64,
    pub after: f64,
    pub delta: f64,
}

impl PplDelta {
    fn new(before: f64, after: f64) -> Self {
        Self {
            before,
            after,
            delta: after - before,
        }
    }
}

struct Interner {
    ids: HashMap<String, Id>,
    words: Vec<String>,
}

impl Interner {
    fn new() -> Self {
        let mut me = Self {
            ids: HashMap::new(),
            words: Vec::new(),
        };
        for w in [UNK, BOS, EOS] {
            me.intern(w);
        }
        me
    }

    fn intern(&mut self, w: &str) -> Id {
        if let Some(&id) = self.ids.get(w) {
            return id;
        }
        let id = self.words.len() as Id;
        self.ids.insert(w.to_owned(), id);
        self.words.push(w.to_owned());
        id
    }
}

/// Per-order counts gathered from the corpus.
#[derive(Default)]
struct Counts {
    raw: HashMap<Gram, u64>,
    /// Occurrences with no token to the left.
    at_start: HashMap<Gram, u64>,
}

/// Trains a model on tokenized sentences.
pub fn train(corpus: &[TokenizedSentence], config: LmConfig) -> Result<NGramModel> {
    config.validate()?;
    let n = config.order;
    let mut interner = Interner::new();
    let mut counts: Vec<Counts> = (0..n).map(|_| Counts::default()).collect();
    let mut predicted = 0usize;

    for sent in corpus {
        let mut seq: Vec<Id> = Vec::with_capacity(sent.len() + n);
        let first = if config.use_boundaries {
            seq.extend(std::iter::repeat_n(BOS_ID, n - 1));
            n - 1
        } else {
            0
        };
        seq.extend(sent.tokens().iter().map(|w| interner.intern(w)));
        if config.use_boundaries {
            seq.push(EOS_ID);
        }
        for p in first..seq.len() {
            predicted += 1;
            for k in 1..=n.min(p + 1) {
                let start = p + 1 - k;
                let gram = seq[start..=p].to_vec();
                if start == 0 {
                    *counts[k - 1].at_start.entry(gram.clone()).or_insert(0) += 1;
                }
                *counts[k - 1].raw.entry(gram).or_insert(0) += 1;
            }
        }
    }
    if predicted == 0 {
        return Err(LmError::EmptyCorpus);
    }

    // Adjusted counts per order.
    let mut adjusted: Vec<HashMap<Gram, f64>> = Vec::with_capacity(n);
    for k in 1..=n {
        let table = match config.smoothing {
            Smoothing::Mle => counts[k - 1]
                .raw
                .iter()
                .map(|(g, &c)| (g.clone(), c as f64))
                .collect(),
            Smoothing::KneserNey { .. } if k == n => counts[k - 1]
                .raw
                .iter()
                .map(|(g, &c)| (g.clone(), c as f64))
                .collect(),
            Smoothing::KneserNey { .. } => {
                let mut left: HashMap<Gram, f64> = HashMap::new();
                for g in counts[k].raw.keys() {
                    *left.entry(g[1..].to_vec()).or_insert(0.0) += 1.0;
                }
                counts[k - 1]
                    .raw
                    .iter()
                    .map(|(g, &c)| {
                        let a = if g[0] == BOS_ID {
                            c as f64
                        } else {
                            left.get(g).copied().unwrap_or(0.0)
                                + counts[k - 1].at_start.get(g).copied().unwrap_or(0) as f64
                        };
                        (g.clone(), a)
                    })
                    .collect()
            }
        };
        adjusted.push(table);
    }

    let mut vocab_size = interner.words.len() - 1;
    if !config.use_boundaries {
        vocab_size -= 1;
    }

    let mut model = NGramModel {
        order: n,
        use_boundaries: config.use_boundaries,
        smoothing: config.smoothing,
        words: interner.words,
        ids: interner.ids,
        tables: (0..n).map(|_| HashMap::new()).collect(),
    };

    for k in 1..=n {
        // History totals and distinct-continuation counts, in sorted order so
        // float sums are reproducible.
        let mut grams: Vec<(&Gram, f64)> = adjusted[k - 1].iter().map(|(g, &a)| (g, a)).collect();
        grams.sort_unstable_by(|a, b| a.0.cmp(b.0));
        let mut hist: BTreeMap<&[Id], (f64, f64)> = BTreeMap::new();
        for &(g, a) in &grams {
            let h = hist.entry(&g[..k - 1]).or_insert((0.0, 0.0));
            h.0 += a;
            h.1 += 1.0;
        }

        let mut new_entries: Vec<(Gram, f64)> = Vec::with_capacity(grams.len());
        for &(g, a) in &grams {
            let (total, types) = hist[&g[..k - 1]];
            let p = match config.smoothing {
                Smoothing::Mle => a / total,
                Smoothing::KneserNey { discount } => {
                    let lower = if k == 1 {
                        1.0 / vocab_size as f64
                    } else {
                        10f64.powf(model.log_prob_ids(&g[1..k - 1], g[k - 1]))
                    };
                    (a - discount).max(0.0) / total + discount * types / total * lower
                }
            };
            new_entries.push((g.clone(), p.log10()));
        }
        for (g, lp) in new_entries {
            model.tables[k - 1].insert(
                g,
                Entry {
                    log_prob: Some(lp),
                    log_backoff: 0.0,
                },
            );
        }
        if k == 1 {
            let unk = match config.smoothing {
                Smoothing::Mle => f64::NEG_INFINITY,
                Smoothing::KneserNey { discount } => {
                    let (total, types) = hist[&[][..]];
                    (discount * types / total / vocab_size as f64).log10()
                }
            };
            model.tables[0].insert(
                vec![UNK_ID],
                Entry {
                    log_prob: Some(unk),
                    log_backoff: 0.0,
                },
            );
        }
        if k >= 2 {
            for (h, (total, types)) in hist {
                let bo = match config.smoothing {
                    Smoothing::Mle => f64::NEG_INFINITY,
                    Smoothing::KneserNey { discount } => (discount * types / total).log10(),
                };
                model.tables[k - 2]
                    .entry(h.to_vec())
                    .or_insert(Entry {
                        log_prob: None,
                        log_backoff: 0.0,
                    })
                    .log_backoff = bo;
            }
        }
    }
    Ok(model)
}

impl NGramModel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn use_boundaries(&self) -> bool {
        self.use_boundaries
    }

    pub fn smoothing(&self) -> Smoothing {
        self.smoothing
    }

    fn id(&self, w: &str) -> Id {
        self.ids.get(w).copied().unwrap_or(UNK_ID)
    }

    /// Tokens that can be predicted: every training word, `<unk>`, and
    /// `</s>` when boundaries are on.
    pub fn vocabulary(&self) -> Vec<&str> {
        self.tables[0]
            .iter()
            .filter(|(_, e)| e.log_prob.is_some())
            .map(|(g, _)| self.words[g[0] as usize].as_str())
            .collect()
    }

    pub fn vocab_size(&self) -> usize {
        self.tables[0].values().filter(|e| e.log_prob.is_some()).count()
    }

    /// Every history with a backoff entry, i.e. every context observed in
    /// training, plus the empty history.
    pub fn observed_histories(&self) -> Vec<Vec<&str>> {
        let mut out = vec![Vec::new()];
        for k in 1..self.order {
            let mut hs: Vec<Vec<&str>> = self.tables[k - 1]
                .iter()
                .filter(|(_, e)| e.log_backoff != 0.0 || e.log_prob.is_none())
                .map(|(g, _)| g.iter().map(|&i| self.words[i as usize].as_str()).collect())
                .collect();
            hs.sort();
            out.extend(hs);
        }
        out
    }

    fn log_prob_ids(&self, context: &[Id], w: Id) -> f64 {
        let ctx = &context[context.len().saturating_sub(self.order - 1)..];
        let mut backoff = 0.0;
        for k in (1..=ctx.len() + 1).rev() {
            let hist = &ctx[ctx.len() + 1 - k..];
            let mut gram = hist.to_vec();
            gram.push(w);
            if let Some(Entry {
                log_prob: Some(lp), ..
            }) = self.tables[k - 1].get(&gram)
            {
                return backoff + lp;
            }
            if k > 1 {
                if let Some(e) = self.tables[k - 2].get(hist) {
                    backoff += e.log_backoff;
                }
            }
        }
        backoff + self.tables[0][&vec![UNK_ID]].log_prob.unwrap_or(f64::NEG_INFINITY)
    }

    /// log10 p(word | history); unknown tokens map to `<unk>`.
    pub fn log10_prob(&self, history: &[&str], word: &str) -> f64 {
        let ctx: Vec<Id> = history.iter().map(|w| self.id(w)).collect();
        self.log_prob_ids(&ctx, self.id(word))
    }

    pub fn prob(&self, history: &[&str], word: &str) -> f64 {
        10f64.powf(self.log10_prob(history, word))
    }

    /// Total log10 probability and number of scored tokens.
    pub fn score_tokens(&self, tokens: &[String]) -> (f64, usize) {
        let mut ctx: Vec<Id> = Vec::with_capacity(tokens.len() + self.order);
        if self.use_boundaries {
            ctx.extend(std::iter::repeat_n(BOS_ID, self.order - 1));
        }
        let mut total = 0.0;
        let mut scored = 0;
        for w in tokens {
            let id = self.id(w);
            total += self.log_prob_ids(&ctx, id);
            ctx.push(id);
            scored += 1;
        }
        if self.use_boundaries {
            total += self.log_prob_ids(&ctx, EOS_ID);
            scored += 1;
        }
        (total, scored)
    }

    /// `10^(-(1/N) * sum log10 p)` over the scored tokens.
    pub fn perplexity_tokens(&self, tokens: &[String]) -> Result<f64> {
        if tokens.is_empty() {
            return Err(LmError::EmptySentence);
        }
        let (total, scored) = self.score_tokens(tokens);
        Ok(10f64.powf(-total / scored as f64))
    }

    pub fn perplexity(&self, s: &TokenizedSentence) -> Result<f64> {
        self.perplexity_tokens(s.tokens())
    }

    /// Perplexity change from splicing `replacement` over `span` of
    /// `original` (`after - before`).
    pub fn delta_ppl(
        &self,
        original: &TokenizedSentence,
        span: Span,
        replacement: &[String],
    ) -> Result<PplDelta> {
        let toks = original.tokens();
        if span.r >= toks.len() {
            return Err(LmError::SpanOutOfRange {
                span,
                len: toks.len(),
            });
        }
        let mut spliced = Vec::with_capacity(toks.len() - span.len() + replacement.len());
        spliced.extend_from_slice(&toks[..span.l]);
        spliced.extend_from_slice(replacement);
        spliced.extend_from_slice(&toks[span.r + 1..]);
        let before = self.perplexity_tokens(toks)?;
        let after = self.perplexity_tokens(&spliced)?;
        Ok(PplDelta::new(before, after))
    }

    /// Sorted plain-text serialization. Each section lists
    /// `log10 prob <TAB> n-gram <TAB> log10 backoff`; a `-` in the first
    /// column marks a history that is never predicted.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("\\data\\\n");
        let _ = writeln!(out, "order={}", self.order);
        let _ = writeln!(out, "vocab={}", self.vocab_size());
        let _ = writeln!(out, "boundaries={}", self.use_boundaries);
        let _ = writeln!(out, "smoothing={}", self.smoothing);
        for k in 1..=self.order {
            let _ = writeln!(out, "ngrams {k}={}", self.tables[k - 1].len());
        }
        for k in 1..=self.order {
            let _ = writeln!(out, "\n\\{k}-grams:");
            let mut lines: Vec<(String, &Entry)> = self.tables[k - 1]
                .iter()
                .map(|(g, e)| {
                    let text = g
                        .iter()
                        .map(|&i| self.words[i as usize].as_str())
                        .collect::<Vec<_>>()
                        .join(" ");
                    (text, e)
                })
                .collect();
            lines.sort_by(|a, b| a.0.cmp(&b.0));
            for (text, e) in lines {
                match e.log_prob {
                    Some(lp) => {
                        let _ = write!(out, "{lp}");
                    }
                    None => out.push('-'),
                }
                let _ = writeln!(out, "\t{text}\t{}", e.log_backoff);
            }
        }
        out.push_str("\n\\end\\\n");
        out
    }

    /// Parses the format written by [`NGramModel::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let err = |line: usize, msg: &str| LmError::Parse {
            line,
            msg: msg.to_owned(),
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, "\\data\\")) => {}
            _ => return Err(err(1, "missing \\data\\ header")),
        }
        let mut header: HashMap<String, String> = HashMap::new();
        let mut declared: Vec<usize> = Vec::new();
        let mut current: Option<usize> = None;
        let mut interner = Interner::new();
        let mut tables: Vec<HashMap<Gram, Entry>> = Vec::new();
        let mut order = 0usize;
        let mut ended = false;

        for (no, line) in lines {
            if ended {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(err(no, "content after \\end\\"));
            }
            if line.is_empty() {
                continue;
            }
            if line == "\\end\\" {
                ended = true;
                continue;
            }
            if let Some(rest) = line.strip_prefix('\\') {
                let k = rest
                    .strip_suffix("-grams:")
                    .and_then(|k| k.parse::<usize>().ok())
                    .ok_or_else(|| err(no, "bad section header"))?;
                if order == 0 {
                    order = header
                        .get("order")
                        .and_then(|o| o.parse().ok())
                        .ok_or_else(|| err(no, "missing order"))?;
                    if !(1..=MAX_ORDER).contains(&order) {
                        return Err(err(no, "order out of range"));
                    }
                    tables = (0..order).map(|_| HashMap::new()).collect();
                }
                if k != current.map_or(1, |c| c + 1) || k > order {
                    return Err(err(no, "sections out of order"));
                }
                current = Some(k);
                continue;
            }
            match current {
                None => {
                    if let Some(rest) = line.strip_prefix("ngrams ") {
                        let (_, c) = rest.split_once('=').ok_or_else(|| err(no, "bad count"))?;
                        declared.push(c.parse().map_err(|_| err(no, "bad count"))?);
                    } else {
                        let (key, value) =
                            line.split_once('=').ok_or_else(|| err(no, "bad header line"))?;
                        header.insert(key.to_owned(), value.to_owned());
                    }
                }
                Some(k) => {
                    let mut cols = line.split('\t');
                    let (Some(lp), Some(gram), Some(bo), None) =
                        (cols.next(), cols.next(), cols.next(), cols.next())
                    else {
                        return Err(err(no, "expected three tab-separated columns"));
                    };
                    let log_prob = if lp == "-" {
                        None
                    } else {
                        Some(lp.parse::<f64>().map_err(|_| err(no, "bad log probability"))?)
                    };
                    let log_backoff = bo.parse::<f64>().map_err(|_| err(no, "bad backoff"))?;
                    if log_prob.is_some_and(|p| p.is_nan() || p > 0.0) || log_backoff.is_nan() {
                        return Err(err(no, "probability out of range"));
                    }
                    let ids: Gram = gram.split(' ').map(|w| interner.intern(w)).collect();
                    if ids.len() != k || gram.split(' ').any(str::is_empty) {
                        return Err(err(no, "n-gram length does not match section"));
                    }
                    let entry = Entry {
                        log_prob,
                        log_backoff,
                    };
                    if tables[k - 1].insert(ids, entry).is_some() {
                        return Err(err(no, "duplicate n-gram"));
                    }
                }
            }
        }
        if !ended {
            return Err(err(0, "missing \\end\\"));
        }
        if current != Some(order) || order == 0 {
            return Err(err(0, "missing n-gram sections"));
        }
        if declared.len() != order
            || declared.iter().zip(&tables).any(|(&d, t)| d != t.len())
        {
            return Err(err(0, "n-gram counts do not match header"));
        }
        let use_boundaries = match header.get("boundaries").map(String::as_str) {
            Some("true") => true,
            Some("false") => false,
            _ => return Err(err(0, "bad boundaries flag")),
        };
        let smoothing = header
            .get("smoothing")
            .ok_or_else(|| err(0, "missing smoothing"))?
            .parse::<Smoothing>()
            .map_err(|m| err(0, &m))?;
        if !tables[0]
            .get(&vec![UNK_ID])
            .is_some_and(|e| e.log_prob.is_some())
        {
            return Err(err(0, "missing <unk> unigram"));
        }
        let model = NGramModel {
            order,
            use_boundaries,
            smoothing,
            words: interner.words,
            ids: interner.ids,
            tables,
        };
        let vocab: usize = header
            .get("vocab")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| err(0, "missing vocab"))?;
        if vocab != model.vocab_size() {
            return Err(err(0, "vocabulary size does not match header"));
        }
        Ok(model)
    }
}
