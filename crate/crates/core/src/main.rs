use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qetag::pipeline::{self, PipelineConfig};
use qetag::{Error, ErrorKind};

#[derive(Parser)]
#[command(name = "qetag", version, about = "Word-level QE corpus construction and tag correction")]
struct Cli {
    /// key = value settings file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Default)]
struct AlignOpts {
    /// EM iterations.
    #[arg(long)]
    iterations: Option<String>,
    /// Diagonal tension.
    #[arg(long)]
    tension: Option<String>,
    /// Null-alignment probability.
    #[arg(long)]
    null_prob: Option<String>,
    /// intersection, union or grow-diag-final-and.
    #[arg(long)]
    heuristic: Option<String>,
}

#[derive(Args, Default)]
struct LmOpts {
    #[arg(long)]
    order: Option<String>,
    /// Pad sentences with <s> and </s>.
    #[arg(long)]
    boundaries: Option<String>,
    /// kneser-ney, kneser-ney:<D> or mle.
    #[arg(long)]
    smoothing: Option<String>,
    /// Kneser-Ney discount.
    #[arg(long)]
    discount: Option<String>,
}

#[derive(Args, Default)]
struct TerOpts {
    /// Allow TER block shifts.
    #[arg(long)]
    shifts: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// TER OK/BAD tags of MT against post-edits.
    TerTag {
        #[arg(long)]
        mt: Option<String>,
        #[arg(long)]
        pe: Option<String>,
        #[arg(long)]
        out: Option<String>,
        #[command(flatten)]
        ter: TerOpts,
    },
    /// Symmetrized word alignments in Pharaoh format.
    Align {
        #[arg(long)]
        src: Option<String>,
        #[arg(long)]
        tgt: Option<String>,
        #[arg(long)]
        out: Option<String>,
        #[command(flatten)]
        align: AlignOpts,
    },
    /// Consistent phrase pairs from MT/PE alignments.
    ExtractPhrases {
        #[arg(long)]
        mt: Option<String>,
        #[arg(long)]
        pe: Option<String>,
        /// Pharaoh alignments, MT index first.
        #[arg(long)]
        align: Option<String>,
        #[arg(long)]
        max_phrase_len: Option<String>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Train an n-gram language model.
    LmTrain {
        #[arg(long)]
        tgt: Option<String>,
        #[arg(long)]
        out: Option<String>,
        #[command(flatten)]
        lm: LmOpts,
    },
    /// Per-line perplexity under a trained model.
    LmScore {
        #[arg(long)]
        lm: Option<String>,
        #[arg(long)]
        mt: Option<String>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Flip BAD spans whose post-edit substitution barely changes perplexity.
    Refine {
        #[command(flatten)]
        io: CorrectIo,
        #[arg(long)]
        alpha: Option<String>,
    },
    /// Tag the best-scoring non-overlapping constituents BAD.
    TreeAnnotate {
        #[command(flatten)]
        io: CorrectIo,
        /// Bracketed trees over MT tokens, one per line.
        #[arg(long)]
        trees: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<String>,
    },
    /// Build a tagged corpus from parallel data and MT output.
    BuildCorpus {
        #[arg(long)]
        src: Option<String>,
        #[arg(long)]
        tgt: Option<String>,
        #[arg(long)]
        mt: Option<String>,
        #[arg(long)]
        trees: Option<String>,
        #[arg(long)]
        out_dir: Option<String>,
        /// ter-only, refine or tree-annotate.
        #[arg(long)]
        strategy: Option<String>,
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<String>,
        #[arg(long)]
        min_len: Option<String>,
        #[arg(long)]
        max_len: Option<String>,
        /// Language pair recorded in the dataset, e.g. en-de.
        #[arg(long)]
        lang: Option<String>,
        #[command(flatten)]
        align: AlignOpts,
        #[command(flatten)]
        lm: LmOpts,
        #[command(flatten)]
        ter: TerOpts,
    },
    /// MCC, MCC*, F-OK, F-BAD and F-BAD-Span of predicted tags.
    Evaluate {
        #[arg(long)]
        mt: Option<String>,
        #[arg(long)]
        gold: Option<String>,
        #[arg(long)]
        pred: Option<String>,
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        json: Option<String>,
    },
    /// Tag statistics of a dataset directory or an MT/tags file pair.
    Stats {
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long)]
        mt: Option<String>,
        #[arg(long)]
        tags: Option<String>,
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        json: Option<String>,
    },
    /// Concatenate dataset directories.
    Concat {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out_dir: Option<String>,
    },
}

#[derive(Args)]
struct CorrectIo {
    #[arg(long)]
    src: Option<String>,
    #[arg(long)]
    mt: Option<String>,
    #[arg(long)]
    pe: Option<String>,
    /// TER tags; computed from mt/pe when omitted.
    #[arg(long)]
    tags: Option<String>,
    /// Pharaoh MT-PE alignments; trained from mt/pe when omitted.
    #[arg(long)]
    align: Option<String>,
    /// Model text from lm-train; trained on pe when omitted.
    #[arg(long)]
    lm: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// JSON-lines audit log (default <out>.audit.jsonl).
    #[arg(long)]
    audit: Option<String>,
    #[command(flatten)]
    align_opts: AlignOpts,
    #[command(flatten)]
    lm_opts: LmOpts,
    #[command(flatten)]
    ter: TerOpts,
}

type Pairs = Vec<(&'static str, Option<String>)>;

impl AlignOpts {
    fn pairs(self) -> Pairs {
        vec![
            ("iterations", self.iterations),
            ("tension", self.tension),
            ("null_prob", self.null_prob),
            ("heuristic", self.heuristic),
        ]
    }
}

impl LmOpts {
    fn pairs(self) -> Pairs {
        vec![
            ("order", self.order),
            ("boundaries", self.boundaries),
            ("smoothing", self.smoothing),
            ("discount", self.discount),
        ]
    }
}

impl CorrectIo {
    fn pairs(self) -> Pairs {
        let mut v = vec![
            ("src", self.src),
            ("mt", self.mt),
            ("pe", self.pe),
            ("tags", self.tags),
            ("align", self.align),
            ("lm", self.lm),
            ("out", self.out),
            ("audit", self.audit),
            ("shifts", self.ter.shifts),
        ];
        v.extend(self.align_opts.pairs());
        v.extend(self.lm_opts.pairs());
        v
    }
}

enum Run {
    TerTag,
    Align,
    ExtractPhrases,
    LmTrain,
    LmScore,
    Refine,
    TreeAnnotate,
    BuildCorpus,
    Evaluate,
    Stats,
    Concat(Vec<PathBuf>),
}

fn flags(cmd: Cmd) -> (Run, Pairs) {
    match cmd {
        Cmd::TerTag { mt, pe, out, ter } => (
            Run::TerTag,
            vec![("mt", mt), ("pe", pe), ("out", out), ("shifts", ter.shifts)],
        ),
        Cmd::Align {
            src,
            tgt,
            out,
            align,
        } => {
            let mut v = vec![("src", src), ("tgt", tgt), ("out", out)];
            v.extend(align.pairs());
            (Run::Align, v)
        }
        Cmd::ExtractPhrases {
            mt,
            pe,
            align,
            max_phrase_len,
            out,
        } => (
            Run::ExtractPhrases,
            vec![
                ("mt", mt),
                ("pe", pe),
                ("align", align),
                ("max_phrase_len", max_phrase_len),
                ("out", out),
            ],
        ),
        Cmd::LmTrain { tgt, out, lm } => {
            let mut v = vec![("tgt", tgt), ("out", out)];
            v.extend(lm.pairs());
            (Run::LmTrain, v)
        }
        Cmd::LmScore { lm, mt, out } => {
            (Run::LmScore, vec![("lm", lm), ("mt", mt), ("out", out)])
        }
        Cmd::Refine { io, alpha } => {
            let mut v = io.pairs();
            v.push(("alpha", alpha));
            (Run::Refine, v)
        }
        Cmd::TreeAnnotate { io, trees, beta } => {
            let mut v = io.pairs();
            v.push(("trees", trees));
            v.push(("beta", beta));
            (Run::TreeAnnotate, v)
        }
        Cmd::BuildCorpus {
            src,
            tgt,
            mt,
            trees,
            out_dir,
            strategy,
            alpha,
            beta,
            min_len,
            max_len,
            lang,
            align,
            lm,
            ter,
        } => {
            let mut v = vec![
                ("src", src),
                ("tgt", tgt),
                ("mt", mt),
                ("trees", trees),
                ("out_dir", out_dir),
                ("strategy", strategy),
                ("alpha", alpha),
                ("beta", beta),
                ("min_len", min_len),
                ("max_len", max_len),
                ("lang", lang),
                ("shifts", ter.shifts),
            ];
            v.extend(align.pairs());
            v.extend(lm.pairs());
            (Run::BuildCorpus, v)
        }
        Cmd::Evaluate {
            mt,
            gold,
            pred,
            out,
            json,
        } => (
            Run::Evaluate,
            vec![
                ("mt", mt),
                ("gold", gold),
                ("pred", pred),
                ("out", out),
                ("json", json),
            ],
        ),
        Cmd::Stats {
            dataset,
            mt,
            tags,
            out,
            json,
        } => (
            Run::Stats,
            vec![
                ("dataset", dataset),
                ("mt", mt),
                ("tags", tags),
                ("out", out),
                ("json", json),
            ],
        ),
        Cmd::Concat { inputs, out_dir } => (Run::Concat(inputs), vec![("out_dir", out_dir)]),
    }
}

fn resolve(config: Option<PathBuf>, threads: Option<String>, pairs: Pairs) -> qetag::Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    if let Some(p) = config {
        let text = std::fs::read_to_string(&p)
            .map_err(|e| Error::Usage(format!("config {}: {e}", p.display())))?;
        cfg.apply_text(&text)?;
    }
    for (k, v) in pairs {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
    }
    if let Some(t) = threads {
        cfg.set("threads", &t)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(run: Run, cfg: &PipelineConfig) -> qetag::Result<()> {
    match run {
        Run::TerTag => pipeline::run_ter_tag(cfg),
        Run::Align => pipeline::run_align(cfg),
        Run::ExtractPhrases => pipeline::run_extract_phrases(cfg),
        Run::LmTrain => pipeline::run_lm_train(cfg),
        Run::LmScore => pipeline::run_lm_score(cfg),
        Run::Refine => pipeline::run_refine(cfg),
        Run::TreeAnnotate => pipeline::run_tree_annotate(cfg),
        Run::BuildCorpus => pipeline::run_build_corpus(cfg),
        Run::Evaluate => pipeline::run_evaluate(cfg),
        Run::Stats => pipeline::run_stats(cfg),
        Run::Concat(inputs) => pipeline::run_concat(cfg, &inputs),
    }
}

fn run() -> qetag::Result<()> {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return Ok(());
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            return Err(Error::Usage(first.trim_start_matches("error: ").to_owned()));
        }
    };
    let (run, pairs) = flags(cli.cmd);
    let cfg = resolve(cli.config, cli.threads, pairs)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(run, &cfg))
}

fn main() -> ExitCode {
    let outcome = std::panic::catch_unwind(run).unwrap_or_else(|panic| {
        let msg = panic
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| panic.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "panic".to_owned());
        Err(Error::Internal(msg))
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind: ErrorKind = e.kind();
            let line = serde_json::json!({ "error": kind.as_str(), "message": e.to_string() });
            eprintln!("{line}");
            ExitCode::from(kind.exit_code() as u8)
        }
    }
}
