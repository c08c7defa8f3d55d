//! Statistical word alignment: a lexical translation model trained by EM
//! with a diagonal position prior and a reserved null-alignment mass, plus
//! symmetrization of two directional alignments.
//!
//! The alignment prior of target position `j` (of `n`) to source position `i`
//! (of `m`) is proportional to `exp(-tension * |(i+1)/m - (j+1)/n|)`, scaled
//! by `1 - null_prob`; the null source receives `null_prob`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::TokenizedSentence;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlignError {
    #[error("alignment corpus is empty")]
    EmptyCorpus,
    #[error("iterations must be at least 1")]
    NoIterations,
    #[error("diagonal tension must be positive, got {0}")]
    Tension(f64),
    #[error("null probability must lie in [0, 1), got {0}")]
    NullProb(f64),
    #[error("bad alignment link {0:?}")]
    BadLink(String),
    #[error("link {i}-{j} outside a {m}x{n} sentence pair")]
    OutOfRange { i: usize, j: usize, m: usize, n: usize },
    #[error("unknown symmetrization heuristic {0:?}")]
    UnknownHeuristic(String),
}

pub type Result<T> = std::result::Result<T, AlignError>;

/// Set of `(source index, target index)` links.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Alignment {
    links: BTreeSet<(usize, usize)>,
}

impl Alignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, i: usize, j: usize) -> bool {
        self.links.insert((i, j))
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.links.contains(&(i, j))
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Links in `(i, j)` lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.links.iter().copied()
    }

    /// Swaps the two sides of every link.
    pub fn transposed(&self) -> Self {
        self.iter().map(|(i, j)| (j, i)).collect()
    }

    pub fn intersection(&self, other: &Self) -> Self {
        Self {
            links: self.links.intersection(&other.links).copied().collect(),
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        Self {
            links: self.links.union(&other.links).copied().collect(),
        }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.links.is_subset(&other.links)
    }

    /// Fails on the first link outside an `m x n` sentence pair.
    pub fn check_bounds(&self, m: usize, n: usize) -> Result<()> {
        match self.iter().find(|&(i, j)| i >= m || j >= n) {
            Some((i, j)) => Err(AlignError::OutOfRange { i, j, m, n }),
            None => Ok(()),
        }
    }

    /// Parses one line of Pharaoh format (`"0-0 1-2"`).
    pub fn from_pharaoh(line: &str) -> Result<Self> {
        let mut out = Self::new();
        for pair in line.split_whitespace() {
            let (i, j) = pair
                .split_once('-')
                .ok_or_else(|| AlignError::BadLink(pair.to_owned()))?;
            let i = i
                .parse::<usize>()
                .map_err(|_| AlignError::BadLink(pair.to_owned()))?;
            let j = j
                .parse::<usize>()
                .map_err(|_| AlignError::BadLink(pair.to_owned()))?;
            out.insert(i, j);
        }
        Ok(out)
    }

    pub fn to_pharaoh(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Alignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, j) in self.iter() {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{i}-{j}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromIterator<(usize, usize)> for Alignment {
    fn from_iter<T: IntoIterator<Item = (usize, usize)>>(iter: T) -> Self {
        Self {
            links: iter.into_iter().collect(),
        }
    }
}

/// Parses a Pharaoh alignment file, one line per sentence pair.
pub fn parse_pharaoh(text: &str) -> Result<Vec<Alignment>> {
    text.lines().map(Alignment::from_pharaoh).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Vocab {
    ids: HashMap<String, u32>,
    words: Vec<String>,
}

impl Vocab {
    fn intern(&mut self, w: &str) -> u32 {
        if let Some(&id) = self.ids.get(w) {
            return id;
        }
        let id = self.words.len() as u32;
        self.ids.insert(w.to_owned(), id);
        self.words.push(w.to_owned());
        id
    }

    fn get(&self, w: &str) -> Option<u32> {
        self.ids.get(w).copied()
    }

    fn len(&self) -> usize {
        self.words.len()
    }
}

/// Source id reserved for the null word.
const NULL_SRC: u32 = 0;
const NULL_TOKEN: &str = "<null>";

/// Lexical translation probabilities `p(target | source)`, including the
/// null source.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationTable {
    probs: HashMap<(u32, u32), f64>,
    src_vocab: Vocab,
    tgt_vocab: Vocab,
}

impl TranslationTable {
    /// `p(tgt | src)`, zero for unseen pairs and unknown words.
    pub fn prob(&self, src: &str, tgt: &str) -> f64 {
        match (self.src_vocab.get(src), self.tgt_vocab.get(tgt)) {
            (Some(s), Some(t)) => self.probs.get(&(s, t)).copied().unwrap_or(0.0),
            _ => 0.0,
        }
    }

    /// `p(tgt | null)`.
    pub fn null_prob(&self, tgt: &str) -> f64 {
        self.tgt_vocab
            .get(tgt)
            .and_then(|t| self.probs.get(&(NULL_SRC, t)))
            .copied()
            .unwrap_or(0.0)
    }

    /// Per-source total probability mass, keyed by source token (the null
    /// source as `"<null>"`), in source-vocabulary order.
    pub fn source_totals(&self) -> Vec<(String, f64)> {
        let mut totals = vec![0.0; self.src_vocab.len()];
        let mut seen = vec![false; self.src_vocab.len()];
        let mut entries: Vec<_> = self.probs.iter().collect();
        entries.sort_unstable_by_key(|(k, _)| **k);
        for (&(s, _), &p) in entries {
            totals[s as usize] += p;
            seen[s as usize] = true;
        }
        self.src_vocab
            .words
            .iter()
            .zip(totals)
            .zip(seen)
            .filter(|(_, seen)| *seen)
            .map(|((w, t), _)| (w.clone(), t))
            .collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = f64> + '_ {
        self.probs.values().copied()
    }

    fn lookup(&self, s: u32, t: u32, uniform: Option<f64>) -> f64 {
        match uniform {
            Some(u) => u,
            None => self.probs.get(&(s, t)).copied().unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignParams {
    pub iterations: usize,
    pub tension: f64,
    pub null_prob: f64,
}

impl Default for AlignParams {
    fn default() -> Self {
        Self {
            iterations: 5,
            tension: 4.0,
            null_prob: 0.08,
        }
    }
}

impl AlignParams {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(AlignError::NoIterations);
        }
        if !(self.tension > 0.0) || !self.tension.is_finite() {
            return Err(AlignError::Tension(self.tension));
        }
        if !(0.0..1.0).contains(&self.null_prob) {
            return Err(AlignError::NullProb(self.null_prob));
        }
        Ok(())
    }
}

/// Unnormalized diagonal prior weight of source `i` (of `m`) for target `j`
/// (of `n`).
pub fn diagonal_weight(i: usize, j: usize, m: usize, n: usize, tension: f64) -> f64 {
    let h = ((i + 1) as f64 / m as f64 - (j + 1) as f64 / n as f64).abs();
    (-tension * h).exp()
}

/// Normalized prior over the `m` source positions for target `j` of `n`,
/// excluding the null mass.
pub fn diagonal_prior(j: usize, m: usize, n: usize, tension: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..m).map(|i| diagonal_weight(i, j, m, n, tension)).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// A trained directional alignment model.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignModel {
    pub table: TranslationTable,
    pub tension: f64,
    pub null_prob: f64,
    /// Corpus log-likelihood under the initial parameters and after each
    /// EM iteration (`iterations + 1` entries).
    pub log_likelihoods: Vec<f64>,
}

type Encoded = Vec<(Vec<u32>, Vec<u32>)>;

const CHUNK: usize = 256;

struct Estep {
    counts: HashMap<(u32, u32), f64>,
    loglik: f64,
}

fn estep_chunk(
    chunk: &[(Vec<u32>, Vec<u32>)],
    table: &TranslationTable,
    uniform: Option<f64>,
    params: &AlignParams,
    collect: bool,
) -> Estep {
    let mut counts = HashMap::new();
    let mut loglik = 0.0;
    let mut post = Vec::new();
    for (src, tgt) in chunk {
        let (m, n) = (src.len(), tgt.len());
        if m == 0 || n == 0 {
            continue;
        }
        for (j, &t) in tgt.iter().enumerate() {
            let prior = diagonal_prior(j, m, n, params.tension);
            post.clear();
            let null = params.null_prob * table.lookup(NULL_SRC, t, uniform);
            let mut z = null;
            for (i, &s) in src.iter().enumerate() {
                let p = (1.0 - params.null_prob) * prior[i] * table.lookup(s, t, uniform);
                post.push(p);
                z += p;
            }
            if z <= 0.0 {
                continue;
            }
            loglik += z.ln();
            if collect {
                if null > 0.0 {
                    *counts.entry((NULL_SRC, t)).or_insert(0.0) += null / z;
                }
                for (&s, &p) in src.iter().zip(&post) {
                    if p > 0.0 {
                        *counts.entry((s, t)).or_insert(0.0) += p / z;
                    }
                }
            }
        }
    }
    Estep { counts, loglik }
}

/// One pass over the corpus. Chunks are processed in parallel and merged in
/// chunk order, so results do not depend on scheduling.
fn estep(
    corpus: &Encoded,
    table: &TranslationTable,
    uniform: Option<f64>,
    params: &AlignParams,
    collect: bool,
) -> Estep {
    let parts: Vec<Estep> = corpus
        .par_chunks(CHUNK)
        .map(|c| estep_chunk(c, table, uniform, params, collect))
        .collect();
    let mut counts: HashMap<(u32, u32), f64> = HashMap::new();
    let mut loglik = 0.0;
    for part in parts {
        loglik += part.loglik;
        for (k, v) in part.counts {
            *counts.entry(k).or_insert(0.0) += v;
        }
    }
    Estep { counts, loglik }
}

fn mstep(counts: HashMap<(u32, u32), f64>, n_src: usize) -> HashMap<(u32, u32), f64> {
    let mut entries: Vec<((u32, u32), f64)> = counts.into_iter().collect();
    entries.sort_unstable_by_key(|(k, _)| *k);
    let mut totals = vec![0.0; n_src];
    for &((s, _), c) in &entries {
        totals[s as usize] += c;
    }
    entries
        .into_iter()
        .map(|((s, t), c)| ((s, t), c / totals[s as usize]))
        .collect()
}

/// Trains a directional model with `src` as the conditioning side.
pub fn train(
    corpus: &[(TokenizedSentence, TokenizedSentence)],
    params: AlignParams,
) -> Result<AlignModel> {
    if corpus.is_empty() {
        return Err(AlignError::EmptyCorpus);
    }
    params.validate()?;

    let mut src_vocab = Vocab::default();
    src_vocab.intern(NULL_TOKEN);
    let mut tgt_vocab = Vocab::default();
    let encoded: Encoded = corpus
        .iter()
        .map(|(s, t)| {
            (
                s.tokens().iter().map(|w| src_vocab.intern(w)).collect(),
                t.tokens().iter().map(|w| tgt_vocab.intern(w)).collect(),
            )
        })
        .collect();
    if tgt_vocab.len() == 0 {
        return Err(AlignError::EmptyCorpus);
    }

    let mut table = TranslationTable {
        probs: HashMap::new(),
        src_vocab,
        tgt_vocab,
    };
    let mut uniform = Some(1.0 / table.tgt_vocab.len() as f64);
    let mut log_likelihoods = Vec::with_capacity(params.iterations + 1);
    for _ in 0..params.iterations {
        let e = estep(&encoded, &table, uniform, &params, true);
        log_likelihoods.push(e.loglik);
        table.probs = mstep(e.counts, table.src_vocab.len());
        uniform = None;
    }
    log_likelihoods.push(estep(&encoded, &table, None, &params, false).loglik);

    Ok(AlignModel {
        table,
        tension: params.tension,
        null_prob: params.null_prob,
        log_likelihoods,
    })
}

impl AlignModel {
    /// Most probable source position for every target token. A target token
    /// stays unlinked when the null word scores at least as high as the best
    /// source position; among equal source scores the smaller index wins.
    pub fn viterbi(&self, src: &TokenizedSentence, tgt: &TokenizedSentence) -> Alignment {
        let (m, n) = (src.len(), tgt.len());
        let mut out = Alignment::new();
        if m == 0 || n == 0 {
            return out;
        }
        for (j, t) in tgt.tokens().iter().enumerate() {
            let prior = diagonal_prior(j, m, n, self.tension);
            let mut best: Option<(usize, f64)> = None;
            for (i, s) in src.tokens().iter().enumerate() {
                let score = prior[i] * self.table.prob(s, t);
                if best.is_none_or(|(_, b)| score > b) {
                    best = Some((i, score));
                }
            }
            let null = self.null_prob * self.table.null_prob(t);
            if let Some((i, score)) = best {
                if (1.0 - self.null_prob) * score > null {
                    out.insert(i, j);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Heuristic {
    Intersection,
    Union,
    #[default]
    GrowDiagFinalAnd,
}

impl FromStr for Heuristic {
    type Err = AlignError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intersection" => Ok(Self::Intersection),
            "union" => Ok(Self::Union),
            "grow-diag-final-and" => Ok(Self::GrowDiagFinalAnd),
            other => Err(AlignError::UnknownHeuristic(other.to_owned())),
        }
    }
}

impl fmt::Display for Heuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Intersection => "intersection",
            Self::Union => "union",
            Self::GrowDiagFinalAnd => "grow-diag-final-and",
        })
    }
}

const NEIGHBORS: [(isize, isize); 8] = [
    (-1, 0),
    (0, -1),
    (1, 0),
    (0, 1),
    (-1, -1),
    (-1, 1),
    (1, -1),
    (1, 1),
];

/// Combines two directional alignments, both given as `(source, target)`
/// links over the same sentence pair.
pub fn symmetrize(forward: &Alignment, reverse: &Alignment, heuristic: Heuristic) -> Alignment {
    match heuristic {
        Heuristic::Intersection => forward.intersection(reverse),
        Heuristic::Union => forward.union(reverse),
        Heuristic::GrowDiagFinalAnd => grow_diag_final_and(forward, reverse),
    }
}

fn grow_diag_final_and(forward: &Alignment, reverse: &Alignment) -> Alignment {
    let union = forward.union(reverse);
    let mut out = forward.intersection(reverse);
    let mut src_cov: BTreeSet<usize> = out.iter().map(|(i, _)| i).collect();
    let mut tgt_cov: BTreeSet<usize> = out.iter().map(|(_, j)| j).collect();

    loop {
        let mut added = false;
        let snapshot: Vec<(usize, usize)> = out.iter().collect();
        for (i, j) in snapshot {
            for (di, dj) in NEIGHBORS {
                let (Some(ni), Some(nj)) = (i.checked_add_signed(di), j.checked_add_signed(dj))
                else {
                    continue;
                };
                if !union.contains(ni, nj) || out.contains(ni, nj) {
                    continue;
                }
                if !src_cov.contains(&ni) || !tgt_cov.contains(&nj) {
                    out.insert(ni, nj);
                    src_cov.insert(ni);
                    tgt_cov.insert(nj);
                    added = true;
                }
            }
        }
        if !added {
            break;
        }
    }

    for directional in [forward, reverse] {
        for (i, j) in directional.iter() {
            if !src_cov.contains(&i) && !tgt_cov.contains(&j) {
                out.insert(i, j);
                src_cov.insert(i);
                tgt_cov.insert(j);
            }
        }
    }
    out
}

/// Forward and reverse models plus the symmetrization heuristic.
#[derive(Debug, Clone)]
pub struct Aligner {
    pub forward: AlignModel,
    pub reverse: AlignModel,
    pub heuristic: Heuristic,
}

impl Aligner {
    /// Trains both directions on `(source side, target side)` pairs.
    pub fn train(
        corpus: &[(TokenizedSentence, TokenizedSentence)],
        params: AlignParams,
        heuristic: Heuristic,
    ) -> Result<Self> {
        let flipped: Vec<_> = corpus.iter().map(|(s, t)| (t.clone(), s.clone())).collect();
        let (forward, reverse) = rayon::join(|| train(corpus, params), || train(&flipped, params));
        Ok(Self {
            forward: forward?,
            reverse: reverse?,
            heuristic,
        })
    }

    /// Symmetrized `(source index, target index)` links.
    pub fn align(&self, src: &TokenizedSentence, tgt: &TokenizedSentence) -> Alignment {
        let fwd = self.forward.viterbi(src, tgt);
        let rev = self.reverse.viterbi(tgt, src).transposed();
        symmetrize(&fwd, &rev, self.heuristic)
    }
}
