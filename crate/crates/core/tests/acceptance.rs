//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --test acceptance`. The corpus-statistics checks (2
//! and 3) read the public MLQE-PE / HJQE tag files from `$QETAG_DATA_DIR`
//! (default `<workspace>/data`), laid out as
//! `<dataset>/<pair>/<split>/{mt.txt,tags.txt}` with dataset `mlqe-pe` or
//! `hjqe`, pair `en-de` or `en-zh`, split `train`, `valid` or `test`.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use qetag::correct::{
    refine_tags, score_nodes, select_nodes, tree_annotate, Decision,
};
use qetag::corpus::{read_plain, read_tags, QeSample, Tag, TagSeq, TokenizedSentence};
use qetag::eval::{confusion, f1, mcc, span_f1, tag_stats, StatsReport};
use qetag::ngram_lm::{self, LmConfig, Smoothing, EOS, UNK};
use qetag::phrase::extract_phrases;
use qetag::ter_align::{levenshtein_align, ter_tags};
use qetag::tree::parse_bracketed;
use qetag::word_align::{self, AlignParams, Aligner, Alignment, Heuristic};

use common::*;

const TER_PAIRS: usize = 1000;
const TER_BUDGET_S: f64 = 60.0;
const STATS_PCT_TOL: f64 = 0.01;
const STATS_BUDGET_S: f64 = 10.0;
const LM_CORPORA: usize = 50;
const LM_NORM_TOL: f64 = 1e-6;
const LM_PPL_TOL: f64 = 1e-4;
const PHRASE_CASES: usize = 500;
const REFINE_SAMPLES: usize = 1000;
const TREE_SAMPLES: usize = 300;
const METRIC_MAX: u64 = 6;
const METRIC_TOL: f64 = 1e-12;
const E2E_SENTENCES: usize = 1000;
const E2E_BUDGET_S: f64 = 300.0;

type Outcome = Result<String, String>;

fn main() {
    let checks: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "TER oracle equivalence", c1_ter),
        (2, "corpus statistics table", c2_table),
        (3, "span histograms and all-OK counts", c3_histograms),
        (4, "LM correctness", c4_lm),
        (5, "phrase-extraction equivalence", c5_phrases),
        (6, "aligner convergence", c6_aligner),
        (7, "refinement properties", c7_refine),
        (8, "tree-annotation structure", c8_tree),
        (9, "metric closed forms", c9_metrics),
        (10, "end-to-end determinism", c10_determinism),
    ];
    let mut failed = 0;
    for (n, name, f) in checks {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{n}] {name}: {detail} ({secs:.2} s)"),
            Err(why) => {
                failed += 1;
                println!("FAIL [{n}] {name}: {why} ({secs:.2} s)");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn c1_ter() -> Outcome {
    let mut rng = StdRng::seed_from_u64(1);
    let t = Instant::now();
    let mut mismatches = 0;
    for _ in 0..TER_PAIRS {
        let vocab = rng.gen_range(1..=5);
        let a = random_words(&mut rng, vocab, 0, 6);
        let b = random_words(&mut rng, vocab, 0, 6);
        let script = levenshtein_align(&sent(&a), &sent(&b));
        let want = brute_edit_cost(&a, &b);
        if script.cost != want || script.edit_count() != want {
            mismatches += 1;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    if mismatches > 0 {
        return Err(format!("{mismatches} of {TER_PAIRS} costs differ from brute force"));
    }
    if secs >= TER_BUDGET_S {
        return Err(format!("took {secs:.1} s, budget {TER_BUDGET_S} s"));
    }
    Ok(format!("{TER_PAIRS} pairs, 0 mismatches"))
}

fn data_dir() -> PathBuf {
    std::env::var_os("QETAG_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

/// One published row: samples, tokens, BAD tokens and %, gap BAD and %.
struct Row {
    dataset: &'static str,
    pair: &'static str,
    split: &'static str,
    samples: u64,
    tokens: u64,
    bad: u64,
    bad_pct: f64,
    gap_bad: u64,
    gap_pct: f64,
}

const fn row(
    dataset: &'static str,
    pair: &'static str,
    split: &'static str,
    v: (u64, u64, u64, f64, u64, f64),
) -> Row {
    Row {
        dataset,
        pair,
        split,
        samples: v.0,
        tokens: v.1,
        bad: v.2,
        bad_pct: v.3,
        gap_bad: v.4,
        gap_pct: v.5,
    }
}

const TABLE: [Row; 10] = [
    row("mlqe-pe", "en-de", "train", (7000, 112342, 31621, 28.15, 5483, 4.59)),
    row("mlqe-pe", "en-de", "valid", (1000, 16160, 4445, 27.51, 716, 4.17)),
    row("hjqe", "en-de", "train", (7000, 112342, 10804, 9.62, 640, 0.54)),
    row("hjqe", "en-de", "valid", (1000, 16160, 1375, 8.51, 30, 0.17)),
    row("hjqe", "en-de", "test", (1000, 16154, 993, 6.15, 28, 0.16)),
    row("mlqe-pe", "en-zh", "train", (7000, 120015, 65204, 54.33, 10206, 8.04)),
    row("mlqe-pe", "en-zh", "valid", (1000, 17063, 9022, 52.87, 1157, 6.41)),
    row("hjqe", "en-zh", "train", (7000, 120015, 19952, 16.62, 348, 0.27)),
    row("hjqe", "en-zh", "valid", (1000, 17063, 2459, 14.41, 8, 0.04)),
    row("hjqe", "en-zh", "test", (1000, 17230, 2784, 16.16, 11, 0.06)),
];

fn split_dir(dataset: &str, pair: &str, split: &str) -> PathBuf {
    data_dir().join(dataset).join(pair).join(split)
}

fn load_stats(dataset: &str, pair: &str, split: &str) -> Result<StatsReport, String> {
    let dir = split_dir(dataset, pair, split);
    let (mt_path, tags_path) = (dir.join("mt.txt"), dir.join("tags.txt"));
    if !mt_path.exists() || !tags_path.exists() {
        return Err(format!("tag files not found under {}", dir.display()));
    }
    let mt = read_plain(&mt_path).map_err(|e| e.to_string())?;
    let lengths: Vec<usize> = mt.iter().map(TokenizedSentence::len).collect();
    let tags = read_tags(&tags_path, &lengths).map_err(|e| e.to_string())?;
    Ok(tag_stats(&tags))
}

fn c2_table() -> Outcome {
    // The printed percentages must follow from the printed counts, with the
    // gap denominator being tokens + samples.
    for r in &TABLE {
        let bad = 100.0 * r.bad as f64 / r.tokens as f64;
        let gap = 100.0 * r.gap_bad as f64 / (r.tokens + r.samples) as f64;
        if (bad - r.bad_pct).abs() > 0.005 + 1e-9 || (gap - r.gap_pct).abs() > 0.005 + 1e-9 {
            return Err(format!(
                "published row {} {} {} is not self-consistent",
                r.dataset, r.pair, r.split
            ));
        }
    }
    let mut problems = Vec::new();
    for r in &TABLE {
        let t = Instant::now();
        let s = match load_stats(r.dataset, r.pair, r.split) {
            Ok(s) => s,
            Err(e) => {
                problems.push(e);
                continue;
            }
        };
        let secs = t.elapsed().as_secs_f64();
        let id = format!("{} {} {}", r.dataset, r.pair, r.split);
        let counts_ok = s.samples == r.samples
            && s.tokens == r.tokens
            && s.bad_tokens == r.bad
            && s.bad_gaps == Some(r.gap_bad);
        let pct_ok = (s.bad_token_pct - r.bad_pct).abs() <= STATS_PCT_TOL
            && s.bad_gap_pct.is_some_and(|p| (p - r.gap_pct).abs() <= STATS_PCT_TOL);
        if !counts_ok || !pct_ok {
            problems.push(format!(
                "{id}: got {} samples, {} tokens, {} BAD ({:.2}%), {:?} gap BAD",
                s.samples, s.tokens, s.bad_tokens, s.bad_token_pct, s.bad_gaps
            ));
        }
        if secs >= STATS_BUDGET_S {
            problems.push(format!("{id}: took {secs:.1} s"));
        }
    }
    if problems.is_empty() {
        Ok(format!("{} rows reproduced exactly", TABLE.len()))
    } else {
        Err(format!(
            "{} of {} rows not reproduced; first: {} (set QETAG_DATA_DIR)",
            problems.len(),
            TABLE.len(),
            problems[0]
        ))
    }
}

fn c3_histograms() -> Outcome {
    let hj = load_stats("hjqe", "en-de", "valid")?;
    let mode = hj
        .span_lengths
        .iter()
        .max_by_key(|(len, n)| (**n, std::cmp::Reverse(**len)))
        .map(|(len, _)| *len);
    if mode != Some(1) {
        return Err(format!("span-length mode is {mode:?}, expected 1"));
    }
    let de = load_stats("mlqe-pe", "en-de", "valid")?;
    let zh = load_stats("mlqe-pe", "en-zh", "valid")?;
    if de.all_ok_samples != 78 || zh.all_ok_samples != 5 {
        return Err(format!(
            "all-OK samples {} en-de / {} en-zh, expected 78 / 5",
            de.all_ok_samples, zh.all_ok_samples
        ));
    }
    Ok("one-token spans are the mode; all-OK counts 78 / 5".into())
}

/// Every history that precedes a predicted token in the padded training
/// data, including the empty one.
fn training_histories(corpus: &[Vec<String>], order: usize, bounds: bool) -> BTreeSet<Vec<String>> {
    let mut out = BTreeSet::new();
    out.insert(Vec::new());
    for s in corpus {
        let mut seq: Vec<String> = Vec::new();
        let first = if bounds { order - 1 } else { 0 };
        if bounds {
            seq.extend(std::iter::repeat_n("<s>".to_owned(), order - 1));
        }
        seq.extend(s.iter().cloned());
        if bounds {
            seq.push(EOS.to_owned());
        }
        for p in first..seq.len() {
            for k in 1..order.min(p + 1) {
                out.insert(seq[p - k..p].to_vec());
            }
        }
    }
    out
}

fn c4_lm() -> Outcome {
    let mut rng = StdRng::seed_from_u64(4);
    let mut checked = 0;
    for c in 0..LM_CORPORA {
        let order = rng.gen_range(1..=4);
        let bounds = rng.gen_bool(0.7);
        let discount = [0.75, 0.5, 1.0][c % 3];
        let vocab = rng.gen_range(2..=6);
        let corpus: Vec<Vec<String>> = (0..rng.gen_range(1..=8))
            .map(|_| random_words(&mut rng, vocab, 1, 7))
            .collect();
        let sents: Vec<_> = corpus.iter().map(|s| sent(s)).collect();
        let config = LmConfig {
            order,
            use_boundaries: bounds,
            smoothing: Smoothing::KneserNey { discount },
        };
        let lm = ngram_lm::train(&sents, config).map_err(|e| e.to_string())?;
        let mut words: BTreeSet<String> = corpus.iter().flatten().cloned().collect();
        words.insert(UNK.to_owned());
        if bounds {
            words.insert(EOS.to_owned());
        }
        for h in training_histories(&corpus, order, bounds) {
            let hist: Vec<&str> = h.iter().map(String::as_str).collect();
            let total: f64 = words.iter().map(|w| lm.prob(&hist, w)).sum();
            if (total - 1.0).abs() > LM_NORM_TOL {
                return Err(format!("corpus {c}: sum over history {h:?} is {total}"));
            }
            checked += 1;
        }
    }
    let toy = ngram_lm::train(&[sent(&["a", "a", "a", "b"].map(String::from))], LmConfig::mle(1))
        .map_err(|e| e.to_string())?;
    let ppl = toy
        .perplexity(&sent(&["a", "b"].map(String::from)))
        .map_err(|e| e.to_string())?;
    if (ppl - 2.3094).abs() > LM_PPL_TOL {
        return Err(format!("MLE perplexity {ppl}, expected 2.3094"));
    }
    Ok(format!("{checked} histories normalized on {LM_CORPORA} corpora; MLE ppl {ppl:.4}"))
}

fn c5_phrases() -> Outcome {
    let mut rng = StdRng::seed_from_u64(5);
    for case in 0..PHRASE_CASES {
        let m = rng.gen_range(1..=6);
        let n = rng.gen_range(1..=6);
        let density = rng.gen_range(0.05..0.6);
        let links: BTreeSet<(usize, usize)> = (0..m)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|_| rng.gen_bool(density))
            .collect();
        let max_len = rng.gen_range(1..=7);
        let align: Alignment = links.iter().copied().collect();
        let got: BTreeSet<_> = extract_phrases(m, n, &align, max_len)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|p| (p.mt_span.l, p.mt_span.r, p.pe_span.l, p.pe_span.r))
            .collect();
        if got != brute_phrases(m, n, &links, max_len) {
            return Err(format!("case {case} ({m}x{n}, links {links:?}) differs"));
        }
    }
    Ok(format!("{PHRASE_CASES} alignments, 0 mismatches"))
}

fn c6_aligner() -> Outcome {
    let p = |a: &str, b: &str| (TokenizedSentence::from(a), TokenizedSentence::from(b));
    let mut corpus = vec![p("a b", "x y"); 100];
    corpus.extend(vec![p("a", "x"); 10]);
    corpus.extend(vec![p("b", "y"); 10]);
    let params = AlignParams::default();
    let model = word_align::train(&corpus, params).map_err(|e| e.to_string())?;
    let lls = &model.log_likelihoods;
    if lls.windows(2).any(|w| w[1] < w[0] - 1e-9) {
        return Err(format!("log-likelihood decreased: {lls:?}"));
    }
    let raw: Vec<(Vec<String>, Vec<String>)> = corpus
        .iter()
        .map(|(s, t)| (s.tokens().to_vec(), t.tokens().to_vec()))
        .collect();
    let oracle = EmOracle::train(&raw, params.iterations, params.tension, params.null_prob);
    for (s, t) in [("a", "x"), ("a", "y"), ("b", "x"), ("b", "y")] {
        let (got, want) = (model.table.prob(s, t), oracle.prob(s, t));
        if (got - want).abs() > 1e-9 {
            return Err(format!("p({t}|{s}) = {got}, oracle {want}"));
        }
    }
    for (got, want) in lls.iter().zip(&oracle.log_likelihoods) {
        if (got - want).abs() > 1e-6 * want.abs().max(1.0) {
            return Err(format!("log-likelihood {got} vs oracle {want}"));
        }
    }
    let aligner = Aligner::train(&corpus, params, Heuristic::GrowDiagFinalAnd).map_err(|e| e.to_string())?;
    let mut links = 0;
    for (s, t) in &corpus {
        let identity: Alignment = (0..s.len()).map(|i| (i, i)).collect();
        if model.viterbi(s, t) != identity || aligner.align(s, t) != identity {
            return Err(format!("non-identity alignment for {s} / {t}"));
        }
        links += identity.len();
    }
    Ok(format!("{links} identity links; log-likelihood non-decreasing over {} steps", lls.len()))
}

fn random_sample(rng: &mut StdRng, id: u64) -> (QeSample, Alignment) {
    let mt = random_words(rng, 6, 1, 8);
    let pe = random_words(rng, 6, 1, 8);
    let (mts, pes) = (sent(&mt), sent(&pe));
    let tags = ter_tags(&mts, &pes, rng.gen_bool(0.5));
    let density = rng.gen_range(0.1..0.5);
    let align: Alignment = (0..mt.len())
        .flat_map(|i| (0..pe.len()).map(move |j| (i, j)))
        .filter(|_| rng.gen_bool(density))
        .collect();
    let s = QeSample::new(id, sent(&["x".to_owned()]), mts)
        .with_pe(pes)
        .with_tags(tags)
        .unwrap();
    (s, align)
}

fn random_lm(rng: &mut StdRng) -> ngram_lm::NGramModel {
    let corpus: Vec<_> = (0..20).map(|_| sent(&random_words(rng, 6, 1, 8))).collect();
    let order = rng.gen_range(1..=3);
    ngram_lm::train(
        &corpus,
        LmConfig {
            order,
            ..LmConfig::default()
        },
    )
    .unwrap()
}

fn c7_refine() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let lms: Vec<_> = (0..10).map(|_| random_lm(&mut rng)).collect();
    let mut flipped_identity = 0;
    for k in 0..REFINE_SAMPLES {
        let lm = &lms[k % lms.len()];
        let (s, align) = random_sample(&mut rng, k as u64);
        let before = s.tags.as_ref().unwrap().token_tags().to_vec();
        let alpha = rng.gen_range(0.0..5.0);
        let out = refine_tags(&s, &align, lm, alpha).map_err(|e| e.to_string())?;
        let after = out.tags.token_tags();
        if after.iter().zip(&before).any(|(a, b)| a.is_bad() && !b.is_bad()) {
            return Err(format!("sample {k}: an OK tag became BAD"));
        }
        if out.tags.gap_tags() != s.tags.as_ref().unwrap().gap_tags() {
            return Err(format!("sample {k}: gap tags changed"));
        }
        let zero = refine_tags(&s, &align, lm, 0.0).map_err(|e| e.to_string())?;
        if zero.tags != *s.tags.as_ref().unwrap() {
            return Err(format!("sample {k}: alpha = 0 changed tags"));
        }

        // Identity substitution: pe = mt with one-to-one links.
        let mt = s.mt.clone();
        let ident: Alignment = (0..mt.len()).map(|i| (i, i)).collect();
        let tags: Vec<Tag> = (0..mt.len())
            .map(|_| if rng.gen_bool(0.5) { Tag::Bad } else { Tag::Ok })
            .collect();
        let same = QeSample::new(k as u64, s.src.clone(), mt.clone())
            .with_pe(mt)
            .with_tags(TagSeq::tokens_only(tags))
            .unwrap();
        let out = refine_tags(&same, &ident, lm, f64::MIN_POSITIVE).map_err(|e| e.to_string())?;
        if out.tags.token_tags().iter().any(|t| t.is_bad()) {
            return Err(format!("sample {k}: identity substitution left a BAD tag"));
        }
        flipped_identity += out.audit.len();
    }
    Ok(format!(
        "{REFINE_SAMPLES} samples; {flipped_identity} identity spans all flipped"
    ))
}

fn c8_tree() -> Outcome {
    let mut rng = StdRng::seed_from_u64(8);
    let lms: Vec<_> = (0..10).map(|_| random_lm(&mut rng)).collect();
    let (mut selected_total, mut merged_runs) = (0, 0);
    for k in 0..TREE_SAMPLES {
        let lm = &lms[k % lms.len()];
        let (mut s, align) = random_sample(&mut rng, k as u64);
        let tree = parse_bracketed(&random_tree(&mut rng, s.mt.tokens())).map_err(|e| e.to_string())?;
        let beta = rng.gen_range(-3.0..1.0);

        for sc in score_nodes(&s, &tree, &align, lm).map_err(|e| e.to_string())? {
            let width = (sc.node.span.r - sc.node.span.l + 1) as f64;
            if sc.delta_ppl_norm.to_bits() != (sc.delta_ppl / width).to_bits() {
                return Err(format!("sample {k}: normalized delta is not delta / width"));
            }
        }

        let out = tree_annotate(&s, &tree, &align, lm, beta).map_err(|e| e.to_string())?;
        let tags = out.tags.token_tags();
        let selected: Vec<(usize, usize)> = out
            .audit
            .iter()
            .filter(|a| a.decision == Decision::Selected)
            .map(|a| (a.span[0], a.span[1]))
            .collect();
        let constituents: Vec<(usize, usize)> = tree
            .root
            .preorder()
            .iter()
            .filter(|n| !n.is_leaf())
            .map(|n| (n.span.l, n.span.r))
            .collect();
        for (x, &a) in selected.iter().enumerate() {
            if !constituents.contains(&a) {
                return Err(format!("sample {k}: selected span {a:?} is not a constituent"));
            }
            if selected[x + 1..].iter().any(|b| a.0 <= b.1 && b.0 <= a.1) {
                return Err(format!("sample {k}: selected spans overlap"));
            }
        }
        // The selected spans tile the BAD tokens exactly; a maximal BAD run
        // is one selected span unless two selections happen to be adjacent.
        let covered: BTreeSet<usize> = selected.iter().flat_map(|&(l, r)| l..=r).collect();
        let bad: BTreeSet<usize> = (0..tags.len()).filter(|&i| tags[i].is_bad()).collect();
        if covered != bad {
            return Err(format!("sample {k}: BAD tokens differ from the selected spans"));
        }
        for run in bad_runs(tags) {
            if !selected.contains(&run) {
                merged_runs += 1;
            }
        }
        selected_total += selected.len();

        let sel_again = select_nodes(&score_nodes(&s, &tree, &align, lm).unwrap(), beta).len();
        if sel_again != selected.len() {
            return Err(format!("sample {k}: audit disagrees with selection"));
        }
        if out.tags.gap_tags().is_some_and(|g| g.iter().any(|t| t.is_bad())) {
            return Err(format!("sample {k}: BAD gap tag"));
        }

        // Input tags are ignored.
        s.tags = Some(TagSeq::all_ok(s.mt.len(), false));
        let again = tree_annotate(&s, &tree, &align, lm, beta).map_err(|e| e.to_string())?;
        if again.tags != out.tags {
            return Err(format!("sample {k}: output depends on input tags"));
        }
        let none = tree_annotate(&s, &tree, &align, lm, f64::NEG_INFINITY).map_err(|e| e.to_string())?;
        if none.tags.token_tags().iter().any(|t| t.is_bad()) {
            return Err(format!("sample {k}: beta = -inf produced BAD tags"));
        }
    }
    Ok(format!(
        "{TREE_SAMPLES} trees, {selected_total} selected spans disjoint and exact \
         ({merged_runs} BAD runs formed by adjacent selections)"
    ))
}

fn c9_metrics() -> Outcome {
    let mut cases = 0;
    for tp in 0..=METRIC_MAX {
        for fp in 0..=METRIC_MAX {
            for fn_ in 0..=METRIC_MAX {
                for tn in 0..=METRIC_MAX {
                    let (g, p) = tags_for(tp, fp, fn_, tn);
                    let c = confusion(&[TagSeq::tokens_only(g)], &[TagSeq::tokens_only(p)], false)
                        .map_err(|e| e.to_string())?;
                    if (c.tp, c.fp, c.fn_, c.tn) != (tp, fp, fn_, tn) {
                        return Err(format!("confusion mismatch at {:?}", (tp, fp, fn_, tn)));
                    }
                    let checks = [
                        (mcc(&c), mcc_direct(tp, fp, fn_, tn), "mcc"),
                        (f1(&c, Tag::Bad), f1_direct(tp, fp, fn_), "F-BAD"),
                        (f1(&c, Tag::Ok), f1_direct(tn, fn_, fp), "F-OK"),
                    ];
                    for (got, want, what) in checks {
                        if (got - want).abs() > METRIC_TOL {
                            return Err(format!("{what} at {:?}: {got} vs {want}", (tp, fp, fn_, tn)));
                        }
                    }
                    cases += 1;
                }
            }
        }
    }
    use Tag::{Bad as B, Ok as O};
    let t = |v: &[Tag]| vec![TagSeq::tokens_only(v.to_vec())];
    let examples = [
        (t(&[O, B, B, O, B]), t(&[O, B, B, O, B]), 1.0),
        (t(&[O, B, B, O, O]), t(&[O, B, O, O, O]), 0.0),
        (t(&[O, B, B, O, B]), t(&[O, B, B, O, O]), 2.0 / 3.0),
    ];
    for (g, p, want) in examples {
        let got = span_f1(&g, &p).map_err(|e| e.to_string())?;
        if got != want {
            return Err(format!("span F1 {got}, expected {want}"));
        }
    }
    Ok(format!("{cases} confusion tuples and 3 span examples exact"))
}

fn c10_determinism() -> Outcome {
    let t = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = StdRng::seed_from_u64(10);
    let corpus = synthetic_corpus(&mut rng, E2E_SENTENCES);
    for (name, lines) in [("src", &corpus.src), ("tgt", &corpus.tgt), ("mt", &corpus.mt)] {
        std::fs::write(dir.path().join(name), lines.join("\n") + "\n").map_err(|e| e.to_string())?;
    }
    let mut files = 0;
    for strategy in ["tree-annotate", "refine"] {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("{strategy}-{run}"));
            let status = Command::new(env!("CARGO_BIN_EXE_qetag"))
                .arg("build-corpus")
                .args(["--strategy", strategy, "--lang", "en-de"])
                .arg("--src")
                .arg(dir.path().join("src"))
                .arg("--tgt")
                .arg(dir.path().join("tgt"))
                .arg("--mt")
                .arg(dir.path().join("mt"))
                .arg("--out-dir")
                .arg(&out)
                .output()
                .map_err(|e| e.to_string())?;
            if !status.status.success() {
                return Err(format!(
                    "build-corpus failed: {}",
                    String::from_utf8_lossy(&status.stderr)
                ));
            }
            outputs.push(read_tree_bytes(&out)?);
        }
        if outputs[0].is_empty() || outputs[0] != outputs[1] {
            return Err(format!("{strategy}: outputs differ between runs"));
        }
        files += outputs[0].len();
    }
    let secs = t.elapsed().as_secs_f64();
    if secs >= E2E_BUDGET_S {
        return Err(format!("took {secs:.1} s"));
    }
    Ok(format!("{E2E_SENTENCES} sentences, 2 strategies, {files} files byte-identical"))
}

fn read_tree_bytes(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let entry = entry.map_err(|e| e.to_string())?;
        let name = entry.file_name().to_string_lossy().into_owned();
        out.insert(name, std::fs::read(entry.path()).map_err(|e| e.to_string())?);
    }
    Ok(out)
}
