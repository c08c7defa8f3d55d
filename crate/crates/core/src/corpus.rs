//! Domain data model and plain-text file formats for parallel corpora,
//! MT outputs and tagged QE samples.
//!
//! Sentence files hold one pre-tokenized sentence per line with tokens
//! separated by single spaces. Tag files hold space-separated `OK`/`BAD`
//! literals, either `n` token tags or `2n+1` interleaved gap/token tags
//! (`gap tok gap tok ... gap`).

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: empty token")]
    EmptyToken { line: usize },
    #[error("line {line}: token contains whitespace")]
    WhitespaceInToken { line: usize },
    #[error("line {line}: unknown tag literal {literal:?}")]
    UnknownTag { line: usize, literal: String },
    #[error("line {line}: {found} tags match neither {n} nor {}", 2 * n + 1)]
    TagCount { line: usize, n: usize, found: usize },
    #[error("expected {expected} lines, found {found}")]
    LineCount { expected: usize, found: usize },
    #[error("token tags have length {tags}, sentence has {tokens} tokens")]
    TokenTagLength { tags: usize, tokens: usize },
    #[error("gap tags have length {gaps}, expected {expected}")]
    GapTagLength { gaps: usize, expected: usize },
    #[error("sample {id} is not tagged")]
    Untagged { id: u64 },
    #[error("duplicate sample id {0}")]
    DuplicateId(u64),
    #[error("metadata line {line}: {msg}")]
    Metadata { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, CorpusError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// A pre-tokenized sentence. Tokens never contain whitespace and are never
/// empty; the sentence itself may be empty (blank input line).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct TokenizedSentence(Vec<String>);

impl TokenizedSentence {
    /// Builds a sentence from tokens, validating the token invariants.
    pub fn new<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        for tok in &tokens {
            if tok.is_empty() {
                return Err(CorpusError::EmptyToken { line: 0 });
            }
            if tok.chars().any(char::is_whitespace) {
                return Err(CorpusError::WhitespaceInToken { line: 0 });
            }
        }
        Ok(Self(tokens))
    }

    /// Splits on single spaces. An empty line yields an empty sentence.
    pub fn parse_line(line: &str) -> Result<Self> {
        if line.is_empty() {
            return Ok(Self::default());
        }
        let mut tokens = Vec::new();
        for tok in line.split(' ') {
            if tok.is_empty() {
                return Err(CorpusError::EmptyToken { line: 0 });
            }
            if tok.chars().any(char::is_whitespace) {
                return Err(CorpusError::WhitespaceInToken { line: 0 });
            }
            tokens.push(tok.to_owned());
        }
        Ok(Self(tokens))
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.0
    }
}

impl fmt::Display for TokenizedSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

impl From<TokenizedSentence> for Vec<String> {
    fn from(s: TokenizedSentence) -> Self {
        s.0
    }
}

/// Shorthand for tests and examples: splits on single spaces and panics on
/// invalid input.
impl From<&str> for TokenizedSentence {
    fn from(s: &str) -> Self {
        Self::parse_line(s).expect("invalid sentence literal")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tag {
    #[serde(rename = "OK")]
    Ok,
    #[serde(rename = "BAD")]
    Bad,
}

impl Tag {
    pub fn as_str(self) -> &'static str {
        match self {
            Tag::Ok => "OK",
            Tag::Bad => "BAD",
        }
    }

    pub fn is_bad(self) -> bool {
        self == Tag::Bad
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "OK" => Ok(Tag::Ok),
            "BAD" => Ok(Tag::Bad),
            other => Err(other.to_owned()),
        }
    }
}

/// Token tags for an MT sentence of length `n`, plus optional gap tags
/// (`n + 1` entries, one before, between and after the tokens).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagSeq {
    token_tags: Vec<Tag>,
    gap_tags: Option<Vec<Tag>>,
}

impl TagSeq {
    pub fn new(token_tags: Vec<Tag>, gap_tags: Option<Vec<Tag>>) -> Result<Self> {
        if let Some(gaps) = &gap_tags {
            if gaps.len() != token_tags.len() + 1 {
                return Err(CorpusError::GapTagLength {
                    gaps: gaps.len(),
                    expected: token_tags.len() + 1,
                });
            }
        }
        Ok(Self {
            token_tags,
            gap_tags,
        })
    }

    pub fn tokens_only(token_tags: Vec<Tag>) -> Self {
        Self {
            token_tags,
            gap_tags: None,
        }
    }

    pub fn all_ok(n: usize, with_gaps: bool) -> Self {
        Self {
            token_tags: vec![Tag::Ok; n],
            gap_tags: with_gaps.then(|| vec![Tag::Ok; n + 1]),
        }
    }

    pub fn token_tags(&self) -> &[Tag] {
        &self.token_tags
    }

    pub fn gap_tags(&self) -> Option<&[Tag]> {
        self.gap_tags.as_deref()
    }

    pub fn len(&self) -> usize {
        self.token_tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_tags.is_empty()
    }

    pub fn with_token_tags(&self, token_tags: Vec<Tag>) -> Result<Self> {
        Self::new(token_tags, self.gap_tags.clone())
    }

    pub fn without_gaps(&self) -> Self {
        Self::tokens_only(self.token_tags.clone())
    }

    /// Decodes one line of a tag file for a sentence of `n` tokens.
    pub fn parse_line(line: &str, n: usize) -> Result<Self> {
        let mut tags = Vec::new();
        for lit in line.split_whitespace() {
            let tag = lit.parse::<Tag>().map_err(|literal| CorpusError::UnknownTag {
                line: 0,
                literal,
            })?;
            tags.push(tag);
        }
        if tags.len() == n {
            Ok(Self::tokens_only(tags))
        } else if tags.len() == 2 * n + 1 {
            let mut token_tags = Vec::with_capacity(n);
            let mut gap_tags = Vec::with_capacity(n + 1);
            for (k, tag) in tags.into_iter().enumerate() {
                if k % 2 == 0 {
                    gap_tags.push(tag);
                } else {
                    token_tags.push(tag);
                }
            }
            Ok(Self {
                token_tags,
                gap_tags: Some(gap_tags),
            })
        } else {
            Err(CorpusError::TagCount {
                line: 0,
                n,
                found: tags.len(),
            })
        }
    }

    /// Encodes as a tag-file line: `n` tags, or `2n+1` when gaps are present.
    pub fn to_line(&self) -> String {
        let mut out: Vec<&str> = Vec::with_capacity(2 * self.token_tags.len() + 1);
        match &self.gap_tags {
            None => out.extend(self.token_tags.iter().map(|t| t.as_str())),
            Some(gaps) => {
                for (k, gap) in gaps.iter().enumerate() {
                    out.push(gap.as_str());
                    if let Some(tok) = self.token_tags.get(k) {
                        out.push(tok.as_str());
                    }
                }
            }
        }
        out.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QeSample {
    pub id: u64,
    pub src: TokenizedSentence,
    pub mt: TokenizedSentence,
    pub pe: Option<TokenizedSentence>,
    pub tags: Option<TagSeq>,
}

impl QeSample {
    pub fn new(id: u64, src: TokenizedSentence, mt: TokenizedSentence) -> Self {
        Self {
            id,
            src,
            mt,
            pe: None,
            tags: None,
        }
    }

    pub fn with_pe(mut self, pe: TokenizedSentence) -> Self {
        self.pe = Some(pe);
        self
    }

    pub fn with_tags(mut self, tags: TagSeq) -> Result<Self> {
        if tags.len() != self.mt.len() {
            return Err(CorpusError::TokenTagLength {
                tags: tags.len(),
                tokens: self.mt.len(),
            });
        }
        self.tags = Some(tags);
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Dataset {
    pub samples: Vec<QeSample>,
    pub language_pair: String,
}

impl Dataset {
    pub fn new(language_pair: impl Into<String>, samples: Vec<QeSample>) -> Result<Self> {
        let ds = Self {
            samples,
            language_pair: language_pair.into(),
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Checks id uniqueness and tag/MT length consistency.
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::with_capacity(self.samples.len());
        for s in &self.samples {
            if !seen.insert(s.id) {
                return Err(CorpusError::DuplicateId(s.id));
            }
            if let Some(tags) = &s.tags {
                if tags.len() != s.mt.len() {
                    return Err(CorpusError::TokenTagLength {
                        tags: tags.len(),
                        tokens: s.mt.len(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Appends `other`, shifting its ids past the current maximum so ids stay
    /// unique.
    pub fn concat(mut self, other: Dataset) -> Dataset {
        let offset = self.samples.iter().map(|s| s.id + 1).max().unwrap_or(0);
        self.samples.extend(other.samples.into_iter().map(|mut s| {
            s.id += offset;
            s
        }));
        self
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    String::from_utf8(bytes).map_err(|e| CorpusError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
    })
}

fn with_line<T>(line: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        CorpusError::EmptyToken { .. } => CorpusError::EmptyToken { line },
        CorpusError::WhitespaceInToken { .. } => CorpusError::WhitespaceInToken { line },
        CorpusError::UnknownTag { literal, .. } => CorpusError::UnknownTag { line, literal },
        CorpusError::TagCount { n, found, .. } => CorpusError::TagCount { line, n, found },
        other => other,
    })
}

/// Parses sentence-per-line text. Line numbers in errors are 1-based.
pub fn parse_plain(text: &str) -> Result<Vec<TokenizedSentence>> {
    text.lines()
        .enumerate()
        .map(|(i, line)| with_line(i + 1, TokenizedSentence::parse_line(line)))
        .collect()
}

pub fn read_plain(path: impl AsRef<Path>) -> Result<Vec<TokenizedSentence>> {
    let path = path.as_ref();
    parse_plain(&read_to_string(path)?)
}

/// Parses a tag file given the MT length of every sample. The layout
/// (`n` or `2n+1` tags) is detected per line.
pub fn parse_tags(text: &str, mt_lengths: &[usize]) -> Result<Vec<TagSeq>> {
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() != mt_lengths.len() {
        return Err(CorpusError::LineCount {
            expected: mt_lengths.len(),
            found: lines.len(),
        });
    }
    lines
        .iter()
        .zip(mt_lengths)
        .enumerate()
        .map(|(i, (line, &n))| with_line(i + 1, TagSeq::parse_line(line, n)))
        .collect()
}

pub fn read_tags(path: impl AsRef<Path>, mt_lengths: &[usize]) -> Result<Vec<TagSeq>> {
    let path = path.as_ref();
    parse_tags(&read_to_string(path)?, mt_lengths)
}

pub fn write_lines<I, S>(path: impl AsRef<Path>, lines: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for line in lines {
        w.write_all(line.as_ref().as_bytes())
            .and_then(|_| w.write_all(b"\n"))
            .map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_plain(path: impl AsRef<Path>, sents: &[TokenizedSentence]) -> Result<()> {
    write_lines(path, sents.iter().map(|s| s.to_string()))
}

pub fn write_tags(path: impl AsRef<Path>, tags: &[TagSeq]) -> Result<()> {
    write_lines(path, tags.iter().map(TagSeq::to_line))
}

pub const SRC_FILE: &str = "src.txt";
pub const MT_FILE: &str = "mt.txt";
pub const PE_FILE: &str = "pe.txt";
pub const TAGS_FILE: &str = "tags.txt";
pub const META_FILE: &str = "meta.jsonl";
pub const DATASET_FILE: &str = "dataset.json";

#[derive(Debug, Serialize, Deserialize)]
struct MetaLine {
    id: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetHeader {
    language_pair: String,
    samples: usize,
    has_pe: bool,
}

/// Writes a tagged dataset as `src.txt`, `mt.txt`, `tags.txt`, optional
/// `pe.txt` (only when every sample has one), `meta.jsonl` with one
/// `{"id": ..}` per sample, and a `dataset.json` header.
pub fn write_dataset(ds: &Dataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    ds.validate()?;
    let mut tags = Vec::with_capacity(ds.len());
    for s in &ds.samples {
        match &s.tags {
            Some(t) => tags.push(t.clone()),
            None => return Err(CorpusError::Untagged { id: s.id }),
        }
    }
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let has_pe = !ds.is_empty() && ds.samples.iter().all(|s| s.pe.is_some());

    write_lines(dir.join(SRC_FILE), ds.samples.iter().map(|s| s.src.to_string()))?;
    write_lines(dir.join(MT_FILE), ds.samples.iter().map(|s| s.mt.to_string()))?;
    if has_pe {
        write_lines(
            dir.join(PE_FILE),
            ds.samples
                .iter()
                .map(|s| s.pe.as_ref().map(|p| p.to_string()).unwrap_or_default()),
        )?;
    }
    write_tags(dir.join(TAGS_FILE), &tags)?;
    write_lines(
        dir.join(META_FILE),
        ds.samples
            .iter()
            .map(|s| serde_json::to_string(&MetaLine { id: s.id }).expect("serializable")),
    )?;
    let header = DatasetHeader {
        language_pair: ds.language_pair.clone(),
        samples: ds.len(),
        has_pe,
    };
    let header_path = dir.join(DATASET_FILE);
    fs::write(
        &header_path,
        serde_json::to_string_pretty(&header).expect("serializable") + "\n",
    )
    .map_err(io_err(&header_path))
}

/// Reads a dataset written by [`write_dataset`].
pub fn read_dataset(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let header_path = dir.join(DATASET_FILE);
    let header: DatasetHeader =
        serde_json::from_str(&read_to_string(&header_path)?).map_err(|e| CorpusError::Metadata {
            line: e.line(),
            msg: e.to_string(),
        })?;
    let src = read_plain(dir.join(SRC_FILE))?;
    let mt = read_plain(dir.join(MT_FILE))?;
    let pe = if header.has_pe {
        Some(read_plain(dir.join(PE_FILE))?)
    } else {
        None
    };
    let lengths: Vec<usize> = mt.iter().map(TokenizedSentence::len).collect();
    let tags = read_tags(dir.join(TAGS_FILE), &lengths)?;
    let ids = parse_meta(&read_to_string(&dir.join(META_FILE))?)?;

    for (name, n) in [("src", src.len()), ("tags", tags.len()), ("meta", ids.len())] {
        if n != mt.len() {
            return Err(CorpusError::Metadata {
                line: 0,
                msg: format!("{name} has {n} lines, mt has {}", mt.len()),
            });
        }
    }
    if let Some(pe) = &pe {
        if pe.len() != mt.len() {
            return Err(CorpusError::LineCount {
                expected: mt.len(),
                found: pe.len(),
            });
        }
    }

    let mut pe_iter = pe.map(Vec::into_iter);
    let samples = ids
        .into_iter()
        .zip(src)
        .zip(mt)
        .zip(tags)
        .map(|(((id, src), mt), tags)| QeSample {
            id,
            src,
            mt,
            pe: pe_iter.as_mut().and_then(Iterator::next),
            tags: Some(tags),
        })
        .collect();
    Dataset::new(header.language_pair, samples)
}

/// Parses JSON-lines metadata, returning sample ids in order.
pub fn parse_meta(text: &str) -> Result<Vec<u64>> {
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            serde_json::from_str::<MetaLine>(line)
                .map(|m| m.id)
                .map_err(|e| CorpusError::Metadata {
                    line: i + 1,
                    msg: e.to_string(),
                })
        })
        .collect()
}
