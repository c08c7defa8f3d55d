//! Reference implementations and generators shared by the integration tests.
//! Everything here is written independently of the library code it checks.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use rand::rngs::StdRng;
use rand::Rng;

use qetag::corpus::{Tag, TokenizedSentence};

pub fn sent(words: &[String]) -> TokenizedSentence {
    TokenizedSentence::new(words.iter().cloned()).unwrap()
}

pub fn random_words(rng: &mut StdRng, vocab: usize, min: usize, max: usize) -> Vec<String> {
    let n = rng.gen_range(min..=max);
    (0..n).map(|_| format!("w{}", rng.gen_range(0..vocab))).collect()
}

/// Minimal number of insert/delete/substitute operations turning `a` into
/// `b`, by exhaustive search over monotone edit paths (no memoization).
pub fn brute_edit_cost(a: &[String], b: &[String]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let step = usize::from(a[0] != b[0]);
    let diag = step + brute_edit_cost(&a[1..], &b[1..]);
    let del = 1 + brute_edit_cost(&a[1..], b);
    let ins = 1 + brute_edit_cost(a, &b[1..]);
    diag.min(del).min(ins)
}

/// All `(mt l, mt r, pe l, pe r)` span pairs with both sides at most
/// `max_len` tokens that contain a link and are not crossed by any link.
pub fn brute_phrases(
    mt_len: usize,
    pe_len: usize,
    links: &BTreeSet<(usize, usize)>,
    max_len: usize,
) -> BTreeSet<(usize, usize, usize, usize)> {
    let mut out = BTreeSet::new();
    for ml in 0..mt_len {
        for mr in ml..mt_len {
            for pl in 0..pe_len {
                for pr in pl..pe_len {
                    if mr - ml + 1 > max_len || pr - pl + 1 > max_len {
                        continue;
                    }
                    let mut inside = 0;
                    let mut crossing = false;
                    for &(i, j) in links {
                        let a = (ml..=mr).contains(&i);
                        let b = (pl..=pr).contains(&j);
                        if a && b {
                            inside += 1;
                        } else if a != b {
                            crossing = true;
                        }
                    }
                    if inside > 0 && !crossing {
                        out.insert((ml, mr, pl, pr));
                    }
                }
            }
        }
    }
    out
}

/// Plain EM for the diagonal-prior lexical model with a null word, written
/// with nested loops over string-keyed tables.
pub struct EmOracle {
    pub t: HashMap<(String, String), f64>,
    pub log_likelihoods: Vec<f64>,
}

pub const NULL: &str = "\u{0}null";

fn prior(i: usize, j: usize, m: usize, n: usize, tension: f64) -> f64 {
    let w = |i: usize| (-tension * ((i + 1) as f64 / m as f64 - (j + 1) as f64 / n as f64).abs()).exp();
    w(i) / (0..m).map(w).sum::<f64>()
}

impl EmOracle {
    pub fn train(
        corpus: &[(Vec<String>, Vec<String>)],
        iterations: usize,
        tension: f64,
        p0: f64,
    ) -> Self {
        let tgt_vocab: BTreeSet<&String> = corpus.iter().flat_map(|(_, t)| t).collect();
        let init = 1.0 / tgt_vocab.len() as f64;
        let mut t: HashMap<(String, String), f64> = HashMap::new();
        let get = |t: &HashMap<(String, String), f64>, s: &str, w: &str, first: bool| {
            if first {
                init
            } else {
                *t.get(&(s.to_owned(), w.to_owned())).unwrap_or(&0.0)
            }
        };
        let mut lls = Vec::new();
        for it in 0..=iterations {
            let first = it == 0;
            let mut counts: HashMap<(String, String), f64> = HashMap::new();
            let mut ll = 0.0;
            for (src, tgt) in corpus {
                let (m, n) = (src.len(), tgt.len());
                for (j, w) in tgt.iter().enumerate() {
                    let null = p0 * get(&t, NULL, w, first);
                    let scores: Vec<f64> = (0..m)
                        .map(|i| (1.0 - p0) * prior(i, j, m, n, tension) * get(&t, &src[i], w, first))
                        .collect();
                    let z = null + scores.iter().sum::<f64>();
                    ll += z.ln();
                    *counts.entry((NULL.to_owned(), w.clone())).or_default() += null / z;
                    for i in 0..m {
                        *counts.entry((src[i].clone(), w.clone())).or_default() += scores[i] / z;
                    }
                }
            }
            lls.push(ll);
            if it == iterations {
                break;
            }
            let mut totals: HashMap<String, f64> = HashMap::new();
            for ((s, _), c) in &counts {
                *totals.entry(s.clone()).or_default() += c;
            }
            t = counts
                .into_iter()
                .filter(|(_, c)| *c > 0.0)
                .map(|((s, w), c)| {
                    let z = totals[&s];
                    ((s, w), c / z)
                })
                .collect();
        }
        Self {
            t,
            log_likelihoods: lls,
        }
    }

    pub fn prob(&self, s: &str, w: &str) -> f64 {
        *self.t.get(&(s.to_owned(), w.to_owned())).unwrap_or(&0.0)
    }
}

pub fn mcc_direct(tp: u64, fp: u64, fn_: u64, tn: u64) -> f64 {
    let (tp, fp, fn_, tn) = (tp as f64, fp as f64, fn_ as f64, tn as f64);
    let d = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
    if d == 0.0 {
        0.0
    } else {
        (tp * tn - fp * fn_) / d
    }
}

pub fn f1_direct(tp: u64, fp: u64, fn_: u64) -> f64 {
    if tp == 0 {
        // precision or recall is zero or undefined
        return 0.0;
    }
    let p = tp as f64 / (tp + fp) as f64;
    let r = tp as f64 / (tp + fn_) as f64;
    2.0 * p * r / (p + r)
}

/// Tag sequence realizing the given confusion counts against the returned
/// gold sequence.
pub fn tags_for(tp: u64, fp: u64, fn_: u64, tn: u64) -> (Vec<Tag>, Vec<Tag>) {
    let mut gold = Vec::new();
    let mut pred = Vec::new();
    for (n, g, p) in [
        (tp, Tag::Bad, Tag::Bad),
        (fp, Tag::Ok, Tag::Bad),
        (fn_, Tag::Bad, Tag::Ok),
        (tn, Tag::Ok, Tag::Ok),
    ] {
        for _ in 0..n {
            gold.push(g);
            pred.push(p);
        }
    }
    (gold, pred)
}

/// Random bracketed tree over `tokens`, built by recursive random splits.
pub fn random_tree(rng: &mut StdRng, tokens: &[String]) -> String {
    fn build(rng: &mut StdRng, toks: &[String], out: &mut String, depth: usize) {
        let label = ["NP", "VP", "PP", "S", "ADJP"][rng.gen_range(0..5)];
        out.push('(');
        out.push_str(label);
        if toks.len() == 1 || depth > 6 {
            for t in toks {
                out.push_str(" (X ");
                out.push_str(t);
                out.push(')');
            }
        } else {
            let mut cuts: Vec<usize> = (1..toks.len()).filter(|_| rng.gen_bool(0.4)).collect();
            if cuts.is_empty() {
                cuts.push(rng.gen_range(1..toks.len()));
            }
            let mut start = 0;
            for c in cuts.into_iter().chain(std::iter::once(toks.len())) {
                out.push(' ');
                build(rng, &toks[start..c], out, depth + 1);
                start = c;
            }
        }
        out.push(')');
    }
    let mut out = String::new();
    build(rng, tokens, &mut out, 0);
    out
}

/// Maximal BAD runs as `(l, r)` pairs.
pub fn bad_runs(tags: &[Tag]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < tags.len() {
        if tags[i] == Tag::Bad {
            let l = i;
            while i + 1 < tags.len() && tags[i + 1] == Tag::Bad {
                i += 1;
            }
            out.push((l, i));
        }
        i += 1;
    }
    out
}

/// A synthetic parallel corpus plus noisy "MT" output, as text lines.
pub struct Synthetic {
    pub src: Vec<String>,
    pub tgt: Vec<String>,
    pub mt: Vec<String>,
}

pub fn synthetic_corpus(rng: &mut StdRng, n: usize) -> Synthetic {
    let mut out = Synthetic {
        src: Vec::new(),
        tgt: Vec::new(),
        mt: Vec::new(),
    };
    for _ in 0..n {
        let len = rng.gen_range(8..=30);
        let ids: Vec<usize> = (0..len).map(|_| rng.gen_range(0..60)).collect();
        let src: Vec<String> = ids.iter().map(|i| format!("s{i}")).collect();
        let tgt: Vec<String> = ids.iter().map(|i| format!("t{i}")).collect();
        let mut mt = tgt.clone();
        for _ in 0..rng.gen_range(0..4) {
            match rng.gen_range(0..4) {
                0 => {
                    let k = rng.gen_range(0..mt.len());
                    mt[k] = format!("t{}", rng.gen_range(0..80));
                }
                1 if mt.len() > 1 => {
                    mt.remove(rng.gen_range(0..mt.len()));
                }
                2 => {
                    let k = rng.gen_range(0..=mt.len());
                    mt.insert(k, format!("t{}", rng.gen_range(0..80)));
                }
                _ if mt.len() > 2 => {
                    let k = rng.gen_range(0..mt.len() - 1);
                    mt.swap(k, k + 1);
                }
                _ => {}
            }
        }
        out.src.push(src.join(" "));
        out.tgt.push(tgt.join(" "));
        out.mt.push(mt.join(" "));
    }
    out
}
