//! Configuration and subcommand drivers behind the `qetag` binary.
//!
//! Every run resolves a [`PipelineConfig`] from defaults, an optional
//! `key = value` file and command-line flags (flags win), then writes the
//! resolved settings next to its outputs so a run can be repeated.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::correct::{
    build_artificial_corpus, kept_indices, refine_tags, tree_annotate, AuditEntry,
    CorrectionParams, LengthFilter, Resources, Strategy,
};
use crate::corpus::{
    self, read_dataset, read_plain, read_tags, write_dataset, write_lines, Dataset,
    QeSample, TagSeq, TokenizedSentence,
};
use crate::eval::{evaluate, tag_stats, StatsReport};
use crate::ngram_lm::{self, LmConfig, NGramModel, Smoothing};
use crate::phrase::{extract_phrases, DEFAULT_MAX_PHRASE_LEN};
use crate::ter_align::ter_tags;
use crate::tree::{read_trees, ConstituentTree};
use crate::word_align::{parse_pharaoh, AlignParams, Aligner, Alignment, Heuristic};
use crate::{Error, Result};

/// Path keys naming files a run writes. They are left out of the config echo
/// so that the echo only depends on what was computed.
pub const OUTPUT_KEYS: [&str; 4] = ["audit", "json", "out", "out_dir"];

/// Path keys naming inputs.
pub const INPUT_KEYS: [&str; 11] = [
    "align", "dataset", "gold", "lm", "mt", "pe", "pred", "src", "tags", "tgt", "trees",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub paths: BTreeMap<String, PathBuf>,
    pub align: AlignParams,
    pub heuristic: Heuristic,
    pub lm: LmConfig,
    pub correction: CorrectionParams,
    pub filter: LengthFilter,
    pub shifts: bool,
    pub max_phrase_len: usize,
    pub lang: String,
    /// Worker threads; 0 lets the pool pick.
    pub threads: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            paths: BTreeMap::new(),
            align: AlignParams::default(),
            heuristic: Heuristic::default(),
            lm: LmConfig::default(),
            correction: CorrectionParams::default(),
            filter: LengthFilter::default(),
            shifts: false,
            max_phrase_len: DEFAULT_MAX_PHRASE_LEN,
            lang: "xx-xx".to_owned(),
            threads: 0,
        }
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| usage(format!("{key}: cannot parse {value:?}: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(usage(format!("{key}: expected true or false, got {value:?}"))),
    }
}

impl PipelineConfig {
    /// Sets one key from its string form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('-', "_");
        let k = key.as_str();
        if OUTPUT_KEYS.contains(&k) || INPUT_KEYS.contains(&k) {
            if value.is_empty() {
                return Err(usage(format!("{k}: empty path")));
            }
            self.paths.insert(key.clone(), PathBuf::from(value));
            return Ok(());
        }
        match k {
            "iterations" => self.align.iterations = parse_num(k, value)?,
            "tension" => self.align.tension = parse_num(k, value)?,
            "null_prob" => self.align.null_prob = parse_num(k, value)?,
            "heuristic" => self.heuristic = value.parse().map_err(|e| usage(format!("{e}")))?,
            "order" => self.lm.order = parse_num(k, value)?,
            "boundaries" => self.lm.use_boundaries = parse_bool(k, value)?,
            "smoothing" => {
                self.lm.smoothing = match value {
                    "mle" => Smoothing::Mle,
                    "kneser-ney" => Smoothing::KneserNey {
                        discount: ngram_lm::DEFAULT_DISCOUNT,
                    },
                    _ => value.parse().map_err(usage)?,
                }
            }
            "discount" => {
                let discount = parse_num(k, value)?;
                self.lm.smoothing = Smoothing::KneserNey { discount };
            }
            "max_phrase_len" => self.max_phrase_len = parse_num(k, value)?,
            "strategy" => self.correction.strategy = value.parse().map_err(usage)?,
            "alpha" => self.correction.alpha = parse_num(k, value)?,
            "beta" => self.correction.beta = parse_num(k, value)?,
            "min_len" => self.filter.min = parse_num(k, value)?,
            "max_len" => self.filter.max = parse_num(k, value)?,
            "shifts" => self.shifts = parse_bool(k, value)?,
            "lang" => self.lang = value.to_owned(),
            "threads" => self.threads = parse_num(k, value)?,
            _ => return Err(usage(format!("unknown config key {k:?}"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file. Blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("config line {}: expected key = value", n + 1)))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| usage(format!("config line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    /// Range checks on thresholds, orders and the length window.
    pub fn validate(&self) -> Result<()> {
        self.align.validate()?;
        if !(1..=ngram_lm::MAX_ORDER).contains(&self.lm.order) {
            return Err(ngram_lm::LmError::Order(self.lm.order).into());
        }
        if let Smoothing::KneserNey { discount } = self.lm.smoothing {
            if !(discount > 0.0 && discount <= 1.0) {
                return Err(ngram_lm::LmError::Discount(discount).into());
            }
        }
        self.correction.validate()?;
        if self.correction.beta.is_nan() {
            return Err(usage("beta must be a number"));
        }
        if self.filter.min > self.filter.max {
            return Err(usage(format!(
                "min_len {} exceeds max_len {}",
                self.filter.min, self.filter.max
            )));
        }
        if self.max_phrase_len == 0 {
            return Err(usage("max_phrase_len must be at least 1"));
        }
        Ok(())
    }

    /// Resolved settings as sorted `key = value` lines, output paths omitted.
    pub fn echo(&self) -> String {
        let mut m: BTreeMap<&str, String> = BTreeMap::new();
        m.insert("iterations", self.align.iterations.to_string());
        m.insert("tension", self.align.tension.to_string());
        m.insert("null_prob", self.align.null_prob.to_string());
        m.insert("heuristic", self.heuristic.to_string());
        m.insert("order", self.lm.order.to_string());
        m.insert("boundaries", self.lm.use_boundaries.to_string());
        m.insert("smoothing", self.lm.smoothing.to_string());
        m.insert("strategy", self.correction.strategy.to_string());
        m.insert("alpha", self.correction.alpha.to_string());
        m.insert("beta", self.correction.beta.to_string());
        m.insert("min_len", self.filter.min.to_string());
        m.insert("max_len", self.filter.max.to_string());
        m.insert("shifts", self.shifts.to_string());
        m.insert("max_phrase_len", self.max_phrase_len.to_string());
        m.insert("lang", self.lang.clone());
        for (k, v) in &self.paths {
            if !OUTPUT_KEYS.contains(&k.as_str()) {
                m.insert(k, v.display().to_string());
            }
        }
        let mut out = String::new();
        for (k, v) in m {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn path(&self, key: &str) -> Option<&Path> {
        self.paths.get(key).map(PathBuf::as_path)
    }

    /// An input path that must be set and exist.
    pub fn input(&self, key: &str) -> Result<&Path> {
        let p = self
            .path(key)
            .ok_or_else(|| usage(format!("missing required input --{}", key.replace('_', "-"))))?;
        if !p.exists() {
            return Err(usage(format!("{key}: {} does not exist", p.display())));
        }
        Ok(p)
    }

    fn optional_input(&self, key: &str) -> Result<Option<&Path>> {
        match self.path(key) {
            None => Ok(None),
            Some(_) => self.input(key).map(Some),
        }
    }
}

fn log(msg: impl AsRef<str>) {
    eprintln!("qetag: {}", msg.as_ref());
}

/// Writes `text` to the `out` path, or stdout when unset, and echoes the
/// config beside it (`<out>.config`) or to stderr.
fn emit(cfg: &PipelineConfig, text: &str) -> Result<()> {
    match cfg.path("out") {
        Some(p) => {
            write_text(p, text)?;
            write_text(&sidecar(p, "config"), &cfg.echo())
        }
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::Internal(format!("stdout: {e}")))?;
            eprint!("{}", cfg.echo());
            Ok(())
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| {
        corpus::CorpusError::Io {
            path: path.to_path_buf(),
            source,
        }
        .into()
    })
}

fn sidecar(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn lines<I: IntoIterator<Item = String>>(items: I) -> String {
    items.into_iter().map(|l| l + "\n").collect()
}

fn expect_same_len(what: &str, a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(corpus::CorpusError::LineCount {
            expected: a,
            found: b,
        })
        .map_err(|e| usage(format!("{what}: {e}")));
    }
    Ok(())
}

fn read_parallel(cfg: &PipelineConfig, a: &str, b: &str) -> Result<Vec<(TokenizedSentence, TokenizedSentence)>> {
    let left = read_plain(cfg.input(a)?)?;
    let right = read_plain(cfg.input(b)?)?;
    expect_same_len(&format!("{a}/{b} line counts"), left.len(), right.len())?;
    Ok(left.into_iter().zip(right).collect())
}

fn train_aligner(cfg: &PipelineConfig, pairs: &[(TokenizedSentence, TokenizedSentence)]) -> Result<Aligner> {
    let usable: Vec<_> = pairs
        .iter()
        .filter(|(a, b)| !a.is_empty() && !b.is_empty())
        .cloned()
        .collect();
    log(format!("training aligner on {} sentence pairs", usable.len()));
    Ok(Aligner::train(&usable, cfg.align, cfg.heuristic)?)
}

fn train_lm(cfg: &PipelineConfig, corpus: &[TokenizedSentence]) -> Result<NGramModel> {
    let usable: Vec<_> = corpus.iter().filter(|s| !s.is_empty()).cloned().collect();
    log(format!("training {}-gram model on {} sentences", cfg.lm.order, usable.len()));
    Ok(ngram_lm::train(&usable, cfg.lm)?)
}

fn load_lm(path: &Path) -> Result<NGramModel> {
    let text = fs::read_to_string(path).map_err(|source| corpus::CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(NGramModel::from_text(&text)?)
}

fn load_alignments(path: &Path, expected: usize) -> Result<Vec<Alignment>> {
    let text = fs::read_to_string(path).map_err(|source| corpus::CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let aligns = parse_pharaoh(&text)?;
    if aligns.len() != expected {
        return Err(corpus::CorpusError::LineCount {
            expected,
            found: aligns.len(),
        }
        .into());
    }
    Ok(aligns)
}

/// `ter-tag`: TER tags (with gaps) of each MT line against its post-edit.
pub fn run_ter_tag(cfg: &PipelineConfig) -> Result<()> {
    let pairs = read_parallel(cfg, "mt", "pe")?;
    let tags: Vec<String> = pairs
        .par_iter()
        .map(|(mt, pe)| ter_tags(mt, pe, cfg.shifts).to_line())
        .collect();
    emit(cfg, &lines(tags))
}

/// `align`: symmetrized Pharaoh alignments of `src` to `tgt`.
pub fn run_align(cfg: &PipelineConfig) -> Result<()> {
    let pairs = read_parallel(cfg, "src", "tgt")?;
    let aligner = train_aligner(cfg, &pairs)?;
    let out: Vec<String> = pairs
        .par_iter()
        .map(|(s, t)| aligner.align(s, t).to_pharaoh())
        .collect();
    emit(cfg, &lines(out))
}

/// `extract-phrases`: consistent span pairs, one `id<TAB>pair` per line.
pub fn run_extract_phrases(cfg: &PipelineConfig) -> Result<()> {
    let pairs = read_parallel(cfg, "mt", "pe")?;
    let aligns = load_alignments(cfg.input("align")?, pairs.len())?;
    let per_line: Vec<Vec<String>> = pairs
        .par_iter()
        .zip(&aligns)
        .enumerate()
        .map(|(id, ((mt, pe), a))| {
            let set = extract_phrases(mt.len(), pe.len(), a, cfg.max_phrase_len)?;
            Ok(set.iter().map(|p| format!("{id}\t{p}")).collect())
        })
        .collect::<Result<_>>()?;
    emit(cfg, &lines(per_line.into_iter().flatten()))
}

/// `lm-train`: trains on `tgt` and writes the model text.
pub fn run_lm_train(cfg: &PipelineConfig) -> Result<()> {
    let corpus = read_plain(cfg.input("tgt")?)?;
    let lm = train_lm(cfg, &corpus)?;
    emit(cfg, &lm.to_text())
}

/// `lm-score`: perplexity of each `mt` line, `-` for blank lines.
pub fn run_lm_score(cfg: &PipelineConfig) -> Result<()> {
    let lm = load_lm(cfg.input("lm")?)?;
    let sents = read_plain(cfg.input("mt")?)?;
    let out: Vec<String> = sents
        .par_iter()
        .map(|s| match lm.perplexity(s) {
            Ok(p) => format!("{p:.6}"),
            Err(_) => "-".to_owned(),
        })
        .collect();
    emit(cfg, &lines(out))
}

/// Inputs shared by `refine` and `tree-annotate`.
struct Tagged {
    samples: Vec<QeSample>,
    aligns: Vec<Alignment>,
    lm: NGramModel,
}

fn load_tagged(cfg: &PipelineConfig) -> Result<Tagged> {
    let mt = read_plain(cfg.input("mt")?)?;
    let pe = read_plain(cfg.input("pe")?)?;
    expect_same_len("mt/pe line counts", mt.len(), pe.len())?;
    let src = match cfg.optional_input("src")? {
        Some(p) => {
            let s = read_plain(p)?;
            expect_same_len("src/mt line counts", mt.len(), s.len())?;
            s
        }
        None => vec![TokenizedSentence::default(); mt.len()],
    };
    let lengths: Vec<usize> = mt.iter().map(TokenizedSentence::len).collect();
    let tags = match cfg.optional_input("tags")? {
        Some(p) => read_tags(p, &lengths)?,
        None => mt
            .iter()
            .zip(&pe)
            .map(|(m, p)| ter_tags(m, p, cfg.shifts))
            .collect(),
    };
    let aligns = match cfg.optional_input("align")? {
        Some(p) => load_alignments(p, mt.len())?,
        None => {
            let pairs: Vec<_> = mt.iter().cloned().zip(pe.iter().cloned()).collect();
            let aligner = train_aligner(cfg, &pairs)?;
            pairs.par_iter().map(|(m, p)| aligner.align(m, p)).collect()
        }
    };
    let lm = match cfg.optional_input("lm")? {
        Some(p) => load_lm(p)?,
        None => train_lm(cfg, &pe)?,
    };
    let samples = src
        .into_iter()
        .zip(mt)
        .zip(pe)
        .zip(tags)
        .enumerate()
        .map(|(i, (((s, m), p), t))| QeSample::new(i as u64, s, m).with_pe(p).with_tags(t))
        .collect::<corpus::Result<_>>()?;
    Ok(Tagged {
        samples,
        aligns,
        lm,
    })
}

fn emit_corrected(cfg: &PipelineConfig, results: Vec<(TagSeq, Vec<AuditEntry>)>) -> Result<()> {
    let mut tag_lines = Vec::with_capacity(results.len());
    let mut audit = Vec::new();
    for (t, a) in results {
        tag_lines.push(t.to_line());
        audit.extend(a.iter().map(AuditEntry::to_json));
    }
    let audit_path = match (cfg.path("audit"), cfg.path("out")) {
        (Some(p), _) => Some(p.to_path_buf()),
        (None, Some(out)) => Some(sidecar(out, "audit.jsonl")),
        (None, None) => None,
    };
    if let Some(p) = audit_path {
        write_lines(&p, audit)?;
    }
    emit(cfg, &lines(tag_lines))
}

/// `refine`: flips BAD spans whose aligned post-edit phrase barely moves
/// perplexity.
pub fn run_refine(cfg: &PipelineConfig) -> Result<()> {
    let t = load_tagged(cfg)?;
    let alpha = cfg.correction.alpha;
    let results = t
        .samples
        .par_iter()
        .zip(&t.aligns)
        .map(|(s, a)| {
            if s.mt.is_empty() {
                return Ok((s.tags.clone().unwrap_or_else(|| TagSeq::all_ok(0, false)), Vec::new()));
            }
            let c = refine_tags(s, a, &t.lm, alpha)?;
            Ok((c.tags, c.audit))
        })
        .collect::<Result<Vec<_>>>()?;
    emit_corrected(cfg, results)
}

/// `tree-annotate`: tags the best non-overlapping constituents BAD.
pub fn run_tree_annotate(cfg: &PipelineConfig) -> Result<()> {
    let t = load_tagged(cfg)?;
    let trees = load_trees(cfg, t.samples.len())?;
    let beta = cfg.correction.beta;
    let results = t
        .samples
        .par_iter()
        .zip(&t.aligns)
        .enumerate()
        .map(|(i, (s, a))| {
            if s.mt.is_empty() {
                return Ok((TagSeq::all_ok(0, true), Vec::new()));
            }
            let flat;
            let tree = match &trees {
                Some(ts) => &ts[i],
                None => {
                    flat = ConstituentTree::flat(s.mt.tokens());
                    &flat
                }
            };
            let c = tree_annotate(s, tree, a, &t.lm, beta)?;
            Ok((c.tags, c.audit))
        })
        .collect::<Result<Vec<_>>>()?;
    emit_corrected(cfg, results)
}

fn load_trees(cfg: &PipelineConfig, expected: usize) -> Result<Option<Vec<ConstituentTree>>> {
    let Some(p) = cfg.optional_input("trees")? else {
        return Ok(None);
    };
    let trees = read_trees(p)?;
    if trees.len() != expected {
        return Err(corpus::CorpusError::LineCount {
            expected,
            found: trees.len(),
        }
        .into());
    }
    Ok(Some(trees))
}

/// `build-corpus`: pseudo-post-edit tagging plus the configured correction,
/// written as a dataset directory with the audit log and config echo.
pub fn run_build_corpus(cfg: &PipelineConfig) -> Result<()> {
    let out_dir = cfg
        .path("out_dir")
        .ok_or_else(|| usage("missing required output --out-dir"))?;
    let parallel = read_parallel(cfg, "src", "tgt")?;
    let mt = read_plain(cfg.input("mt")?)?;
    expect_same_len("src/mt line counts", parallel.len(), mt.len())?;
    let trees = load_trees(cfg, mt.len())?;

    let strategy = cfg.correction.strategy;
    let (aligner, lm) = if strategy == Strategy::TerOnly {
        (None, None)
    } else {
        let kept = kept_indices(&parallel, &mt, cfg.filter);
        let pairs: Vec<_> = kept
            .iter()
            .map(|&i| (mt[i].clone(), parallel[i].1.clone()))
            .collect();
        let tgt: Vec<_> = parallel.iter().map(|(_, t)| t.clone()).collect();
        let (a, l) = rayon::join(|| train_aligner(cfg, &pairs), || train_lm(cfg, &tgt));
        (Some(a?), Some(l?))
    };
    let resources = Resources {
        aligner: aligner.as_ref(),
        lm: lm.as_ref(),
        trees: trees.as_deref(),
    };
    let built = build_artificial_corpus(
        &parallel,
        &mt,
        cfg.correction,
        resources,
        cfg.filter,
        cfg.shifts,
        &cfg.lang,
    )?;
    log(format!(
        "kept {} of {} pairs, strategy {strategy}",
        built.dataset.len(),
        parallel.len()
    ));
    fs::create_dir_all(out_dir).map_err(|source| corpus::CorpusError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    write_dataset(&built.dataset, out_dir)?;
    write_lines(
        out_dir.join("audit.jsonl"),
        built.audit.iter().map(AuditEntry::to_json),
    )?;
    write_text(&out_dir.join("config.txt"), &cfg.echo())
}

fn read_tag_file(cfg: &PipelineConfig, key: &str, lengths: &[usize]) -> Result<Vec<TagSeq>> {
    Ok(read_tags(cfg.input(key)?, lengths)?)
}

/// `evaluate`: the fixed metric report for `pred` against `gold`.
pub fn run_evaluate(cfg: &PipelineConfig) -> Result<()> {
    let mt = read_plain(cfg.input("mt")?)?;
    let lengths: Vec<usize> = mt.iter().map(TokenizedSentence::len).collect();
    let gold = read_tag_file(cfg, "gold", &lengths)?;
    let pred = read_tag_file(cfg, "pred", &lengths)?;
    let report = evaluate(&gold, &pred)?;
    if let Some(p) = cfg.path("json") {
        write_text(p, &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"))?;
    }
    emit(cfg, &report.to_text())
}

/// Statistics for a dataset directory or an `mt` + `tags` file pair.
pub fn compute_stats(cfg: &PipelineConfig) -> Result<StatsReport> {
    if let Some(dir) = cfg.optional_input("dataset")? {
        let ds = read_dataset(dir)?;
        return Ok(crate::eval::dataset_stats(&ds)?);
    }
    let mt = read_plain(cfg.input("mt")?)?;
    let lengths: Vec<usize> = mt.iter().map(TokenizedSentence::len).collect();
    let tags = read_tag_file(cfg, "tags", &lengths)?;
    Ok(tag_stats(&tags))
}

/// `stats`: table to `out`/stdout, JSON to the `json` path if given.
pub fn run_stats(cfg: &PipelineConfig) -> Result<()> {
    let report = compute_stats(cfg)?;
    if let Some(p) = cfg.path("json") {
        write_text(p, &(report.to_json() + "\n"))?;
    }
    emit(cfg, &report.to_table())
}

/// `concat`: appends dataset directories in order, renumbering ids.
pub fn run_concat(cfg: &PipelineConfig, inputs: &[PathBuf]) -> Result<()> {
    let out_dir = cfg
        .path("out_dir")
        .ok_or_else(|| usage("missing required output --out-dir"))?;
    if inputs.is_empty() {
        return Err(usage("concat needs at least one input dataset"));
    }
    let mut merged: Option<Dataset> = None;
    for dir in inputs {
        if !dir.exists() {
            return Err(usage(format!("{} does not exist", dir.display())));
        }
        let ds = read_dataset(dir)?;
        merged = Some(match merged {
            None => ds,
            Some(m) => m.concat(ds),
        });
    }
    let merged = merged.expect("non-empty inputs");
    fs::create_dir_all(out_dir).map_err(|source| corpus::CorpusError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    write_dataset(&merged, out_dir)?;
    let mut echo = cfg.echo();
    for (k, dir) in inputs.iter().enumerate() {
        let _ = writeln!(echo, "input.{k} = {}", dir.display());
    }
    write_text(&out_dir.join("config.txt"), &echo)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let mut c = PipelineConfig::parse("# comment\nalpha = 0.5\nstrategy = refine\n\n").unwrap();
        assert_eq!(c.correction.alpha, 0.5);
        assert_eq!(c.correction.strategy, Strategy::Refine);
        assert_eq!(c.correction.beta, -3.0);
        c.set("alpha", "2").unwrap();
        assert_eq!(c.correction.alpha, 2.0);
        c.set("max-len", "50").unwrap();
        assert_eq!(c.filter.max, 50);
    }

    #[test]
    fn bad_keys_and_values() {
        assert!(PipelineConfig::parse("nonsense = 1").is_err());
        assert!(PipelineConfig::parse("alpha").is_err());
        assert!(PipelineConfig::parse("order = x").is_err());
        let c = PipelineConfig::parse("order = 9").unwrap();
        assert!(c.validate().is_err());
        let c = PipelineConfig::parse("alpha = -1").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn echo_skips_outputs_and_sorts() {
        let c = PipelineConfig::parse("out = /tmp/x\nsrc = a.txt\nlang = en-de").unwrap();
        let echo = c.echo();
        assert!(!echo.contains("/tmp/x"));
        assert!(echo.contains("src = a.txt"));
        assert!(echo.contains("lang = en-de"));
        let keys: Vec<&str> = echo.lines().map(|l| l.split(' ').next().unwrap()).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        // echo reparses to the same config
        let again = PipelineConfig::parse(&echo).unwrap();
        assert_eq!(again.echo(), echo);
    }
}
