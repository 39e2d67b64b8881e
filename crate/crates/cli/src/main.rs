use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use indexmap::IndexMap;
use serde::Deserialize;

use relexsum::baselines::{
    cluster_corpus, longest_da, prototype_da, Idf, StopRule, DEFAULT_THRESHOLD,
};
use relexsum::corpus::{
    build_decision_documents, ClusterAssignment, Clustering, Corpus, CorpusError, DecisionDocument,
};
use relexsum::features::{FeatureError, HypernymLexicon, Phase};
use relexsum::inference::trace_tsv;
use relexsum::model::synth::{sample_corpus, truth_tsv, PlantedModel, ShapeConfig};
use relexsum::pipeline::{
    annotate_cue_context, learn_content_model, learn_cue_model, learn_phase, upperbound_summary,
    LearnedModel, ModelArtifact, PipelineConfig, PipelineError, Resources, Summary, SummaryFile,
};
use relexsum::rouge::{evaluate, Aggregate, RougeReport};
use relexsum::text::Stopwords;

#[derive(Parser)]
#[command(
    name = "relexsum",
    version,
    about = "Relation-based decision summarization for meeting transcripts"
)]
struct Cli {
    /// Worker threads for restarts (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a corpus file and list every problem found.
    Validate {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Learn cue and/or content relations and write a model artifact.
    Train(TrainArgs),
    /// Write relation-based summaries from a model artifact.
    Summarize {
        #[arg(long)]
        model: PathBuf,
        /// Restrict to the decision documents of this corpus.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, requires = "corpus")]
        clusters: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Utterance-level baselines and the oracle upper bound.
    Baseline {
        #[command(flatten)]
        docs: DocArgs,
        #[arg(long, value_enum)]
        method: BaselineMethod,
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cluster decision-related dialogue acts per meeting.
    Cluster {
        #[arg(long)]
        corpus: PathBuf,
        /// Stop merging below this average-link similarity.
        #[arg(long, conflicts_with = "target")]
        threshold: Option<f64>,
        /// Stop merging at this many clusters per meeting.
        #[arg(long)]
        target: Option<usize>,
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score one summary file against the gold abstracts.
    Evaluate {
        #[command(flatten)]
        docs: DocArgs,
        #[arg(long)]
        summaries: PathBuf,
        #[arg(long, default_value = "macro")]
        aggregate: Aggregate,
        #[arg(long)]
        stopwords: Option<PathBuf>,
        /// Per-decision scores as TSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample a corpus from a planted model.
    Synth {
        #[arg(long, default_value_t = 40)]
        docs: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        segments: usize,
        #[arg(long)]
        out: PathBuf,
        /// Planted choices as TSV (defaults next to the corpus).
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Compare summary files side by side with a score table.
    Report {
        #[command(flatten)]
        docs: DocArgs,
        /// Summary files, one per system; repeat the flag.
        #[arg(long, required = true)]
        summaries: Vec<PathBuf>,
        #[arg(long, default_value = "macro")]
        aggregate: Aggregate,
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct DocArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// `da_id<TAB>cluster_id` file; annotated decisions are used without it.
    #[arg(long)]
    clusters: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PhaseArg {
    Cue,
    Content,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineMethod {
    Longest,
    Prototype,
    Upperbound,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    docs: DocArgs,
    #[arg(long, value_enum, default_value = "both")]
    phase: PhaseArg,
    /// TOML file with pipeline settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    k_cue: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    allow_null: bool,
    #[arg(long)]
    stopwords: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    pipeline: PipelineConfig,
    stopwords: Option<PathBuf>,
    lexicon: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RELEXSUM_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

/// The error chain without causes already quoted by their wrappers.
fn describe(e: &anyhow::Error) -> String {
    let mut s = String::new();
    for c in e.chain() {
        let m = c.to_string();
        if !s.contains(&m) {
            if !s.is_empty() {
                s.push_str(": ");
            }
            s.push_str(&m);
        }
    }
    s
}

/// 2 for anything that failed on file access, 1 otherwise.
fn exit_code(e: &anyhow::Error) -> u8 {
    let io = e.chain().any(|c| {
        c.is::<std::io::Error>()
            || c.downcast_ref::<CorpusError>()
                .is_some_and(CorpusError::is_io)
            || c.downcast_ref::<PipelineError>()
                .is_some_and(PipelineError::is_io)
            || matches!(
                c.downcast_ref::<FeatureError>(),
                Some(FeatureError::Io { .. })
            )
    });
    if io {
        2
    } else {
        1
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Validate { corpus } => validate(&corpus),
        Command::Train(args) => train(args),
        Command::Summarize {
            model,
            corpus,
            clusters,
            out,
        } => summarize(&model, corpus.as_deref(), clusters.as_deref(), &out),
        Command::Baseline {
            docs,
            method,
            stopwords,
            out,
        } => baseline(&docs, method, stopwords.as_deref(), &out),
        Command::Cluster {
            corpus,
            threshold,
            target,
            stopwords,
            out,
        } => cluster(&corpus, threshold, target, stopwords.as_deref(), &out),
        Command::Evaluate {
            docs,
            summaries,
            aggregate,
            stopwords,
            out,
        } => evaluate_cmd(
            &docs,
            &summaries,
            aggregate,
            stopwords.as_deref(),
            out.as_deref(),
        ),
        Command::Synth {
            docs,
            k,
            seed,
            segments,
            out,
            truth,
        } => synth(docs, k, seed, segments, &out, truth.as_deref()),
        Command::Report {
            docs,
            summaries,
            aggregate,
            stopwords,
            out,
        } => report(
            &docs,
            &summaries,
            aggregate,
            stopwords.as_deref(),
            out.as_deref(),
        ),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn load_stopwords(path: Option<&Path>) -> Result<Stopwords> {
    match path {
        Some(p) => Stopwords::from_file(p)
            .with_context(|| format!("cannot read stopwords {}", p.display())),
        None => Ok(Stopwords::default()),
    }
}

fn load_documents(args: &DocArgs, segments: usize) -> Result<Vec<DecisionDocument>> {
    let corpus = Corpus::load(&args.corpus)?;
    load_documents_from(&corpus, args.clusters.as_deref(), segments)
}

fn load_documents_from(
    corpus: &Corpus,
    clusters: Option<&Path>,
    segments: usize,
) -> Result<Vec<DecisionDocument>> {
    let docs = match clusters {
        Some(p) => {
            let assignment = ClusterAssignment::load(p)?;
            build_decision_documents(corpus, Clustering::Provided(&assignment), segments)
        }
        None => build_decision_documents(corpus, Clustering::True, segments),
    };
    if docs.is_empty() {
        bail!("the corpus yields no decision documents");
    }
    Ok(docs)
}

fn validate(path: &Path) -> Result<()> {
    match Corpus::load(path) {
        Ok(c) => {
            let das: usize = c.meetings.iter().map(|m| m.dialogue_acts.len()).sum();
            println!("ok: {} meeting(s), {das} dialogue act(s)", c.meetings.len());
            Ok(())
        }
        Err(CorpusError::Invalid(diags)) => {
            for d in &diags {
                eprintln!("{d}");
            }
            bail!("corpus failed validation with {} problem(s)", diags.len())
        }
        Err(e) => Err(e.into()),
    }
}

fn train(args: TrainArgs) -> Result<()> {
    let file: FileConfig = match &args.config {
        Some(p) => {
            let text =
                fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("invalid config {}", p.display()))?
        }
        None => FileConfig::default(),
    };
    let mut cfg = file.pipeline;
    if let Some(k) = args.k {
        cfg.k = k;
    }
    if let Some(k) = args.k_cue {
        cfg.k_cue = k;
    }
    if let Some(r) = args.restarts {
        cfg.inference.restarts = r;
    }
    if let Some(t) = args.tol {
        cfg.inference.tol = t;
    }
    if let Some(s) = args.seed {
        cfg.inference.seed = s;
    }
    cfg.allow_null |= args.allow_null;
    if cfg.k == 0 || cfg.k_cue == 0 || cfg.segments == 0 {
        bail!("relation counts and segments must be positive");
    }
    cfg.inference.validate().map_err(PipelineError::from)?;

    let stopwords = load_stopwords(args.stopwords.as_deref().or(file.stopwords.as_deref()))?;
    let lexicon = match args.lexicon.as_deref().or(file.lexicon.as_deref()) {
        Some(p) => Some(HypernymLexicon::load(p)?),
        None => None,
    };
    let res = Resources {
        stopwords: &stopwords,
        lexicon: lexicon.as_ref(),
    };
    let docs = load_documents(&args.docs, cfg.segments)?;
    log::info!(
        "training on {} decision document(s), K = {}",
        docs.len(),
        cfg.k
    );
    let ids: Vec<String> = docs.iter().map(|d| d.decision_id.clone()).collect();

    let (cue, content): (Option<LearnedModel>, Option<LearnedModel>) = match args.phase {
        PhaseArg::Cue => (Some(learn_phase(&docs, Phase::Cue, &cfg, res, None)?), None),
        PhaseArg::Content | PhaseArg::Both => {
            let (cue, instances) = learn_cue_model(&docs, &cfg, res)?;
            let ctx = annotate_cue_context(&docs, &instances);
            let content = learn_content_model(&docs, &ctx, &cfg, res)?;
            let keep_cue = matches!(args.phase, PhaseArg::Both);
            (keep_cue.then_some(cue), Some(content))
        }
    };
    for m in cue.iter().chain(content.iter()) {
        println!(
            "{}: free energy {:.6}, max constraint violation {:.3e} (restart {})",
            m.phase.as_str(),
            m.result.free_energy,
            m.max_violation(),
            m.result.best_restart
        );
        write(&trace_path(&args.out, m.phase), &trace_tsv(&m.result.trace))?;
    }
    ModelArtifact::new(cfg, ids, cue.as_ref(), content.as_ref()).save(&args.out)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

/// `model.json` gets `model.cue.trace.tsv` and `model.content.trace.tsv`.
fn trace_path(out: &Path, phase: Phase) -> PathBuf {
    let stem = out
        .file_stem()
        .map_or("model".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.{}.trace.tsv", phase.as_str()))
}

fn summarize(
    model: &Path,
    corpus: Option<&Path>,
    clusters: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let art = ModelArtifact::load(model)?;
    let ids = match corpus {
        Some(c) => {
            let corpus = Corpus::load(c)?;
            load_documents_from(&corpus, clusters, art.config.segments)?
                .into_iter()
                .map(|d| d.decision_id)
                .collect()
        }
        None => art.decision_ids.clone(),
    };
    let file = SummaryFile {
        summaries: art.summaries_for(&ids)?,
    };
    file.save(out)?;
    println!(
        "wrote {} summaries to {}",
        file.summaries.len(),
        out.display()
    );
    Ok(())
}

fn baseline(
    args: &DocArgs,
    method: BaselineMethod,
    stopwords: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let sw = load_stopwords(stopwords)?;
    let corpus = Corpus::load(&args.corpus)?;
    let docs = load_documents_from(
        &corpus,
        args.clusters.as_deref(),
        PipelineConfig::default().segments,
    )?;
    let summaries: Vec<Summary> = match method {
        BaselineMethod::Longest => docs.iter().map(longest_da).collect(),
        BaselineMethod::Prototype => {
            let idf = Idf::from_corpus(&corpus, &sw);
            docs.iter().map(|d| prototype_da(d, &idf, &sw)).collect()
        }
        BaselineMethod::Upperbound => docs
            .iter()
            .map(|d| upperbound_summary(d, &sw))
            .collect::<Result<_, _>>()?,
    };
    let file = SummaryFile { summaries };
    file.save(out)?;
    println!(
        "wrote {} summaries to {}",
        file.summaries.len(),
        out.display()
    );
    Ok(())
}

fn cluster(
    corpus: &Path,
    threshold: Option<f64>,
    target: Option<usize>,
    stopwords: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let sw = load_stopwords(stopwords)?;
    let corpus = Corpus::load(corpus)?;
    let rule = match (threshold, target) {
        (_, Some(t)) => StopRule::Target(t),
        (t, None) => StopRule::Threshold(t.unwrap_or(DEFAULT_THRESHOLD)),
    };
    let assignment = cluster_corpus(&corpus, &sw, rule);
    write(out, &assignment.to_tsv())?;
    println!(
        "wrote {} cluster(s) over {} dialogue act(s) to {}",
        assignment.cluster_count(),
        assignment.entries.len(),
        out.display()
    );
    Ok(())
}

/// Gold abstracts keyed by decision id, in document order.
fn golds(docs: &[DecisionDocument]) -> Result<IndexMap<String, String>> {
    docs.iter()
        .map(|d| {
            d.gold_abstract
                .clone()
                .map(|g| (d.decision_id.clone(), g))
                .ok_or_else(|| anyhow!(PipelineError::MissingAbstract(d.decision_id.clone())))
        })
        .collect()
}

fn rendered(file: &SummaryFile) -> IndexMap<String, String> {
    file.summaries
        .iter()
        .map(|s| (s.decision_id.clone(), s.render()))
        .collect()
}

fn evaluate_cmd(
    docs: &DocArgs,
    summaries: &Path,
    aggregate: Aggregate,
    stopwords: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let sw = load_stopwords(stopwords)?;
    let gold = golds(&load_documents(docs, PipelineConfig::default().segments)?)?;
    let file = SummaryFile::load(summaries)?;
    let r = evaluate(&rendered(&file), &gold, &sw, aggregate)?;
    println!("{}", RougeReport::table_header());
    println!("{}", r.table_row(&system_label(&file, summaries)));
    if let Some(p) = out {
        write(p, &r.to_tsv())?;
    }
    Ok(())
}

fn system_label(file: &SummaryFile, path: &Path) -> String {
    match file.summaries.first() {
        Some(s) => s.method.as_str().to_string(),
        None => path
            .file_stem()
            .map_or("system".into(), |s| s.to_string_lossy().into_owned()),
    }
}

fn synth(
    docs: usize,
    k: usize,
    seed: u64,
    segments: usize,
    out: &Path,
    truth: Option<&Path>,
) -> Result<()> {
    if k == 0 || segments == 0 {
        bail!("--k and --segments must be positive");
    }
    let planted = PlantedModel::well_separated(k, segments);
    let shape = ShapeConfig {
        docs,
        ..ShapeConfig::default()
    };
    let sc = sample_corpus(&planted, &shape, seed).map_err(PipelineError::from)?;
    sc.corpus.save(out)?;
    let truth_path = truth.map_or_else(
        || {
            let stem = out
                .file_stem()
                .map_or("corpus".into(), |s| s.to_string_lossy().into_owned());
            out.with_file_name(format!("{stem}.truth.tsv"))
        },
        Path::to_path_buf,
    );
    write(&truth_path, &truth_tsv(&sc.truth))?;
    println!("wrote {} and {}", out.display(), truth_path.display());
    Ok(())
}

fn report(
    docs: &DocArgs,
    paths: &[PathBuf],
    aggregate: Aggregate,
    stopwords: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let sw = load_stopwords(stopwords)?;
    let gold = golds(&load_documents(docs, PipelineConfig::default().segments)?)?;
    let mut systems = Vec::new();
    for p in paths {
        let file = SummaryFile::load(p)?;
        let mut label = system_label(&file, p);
        if systems.iter().any(|(l, _, _): &(String, _, _)| *l == label) {
            label = format!("{label} ({})", p.display());
        }
        let texts = rendered(&file);
        let r = evaluate(&texts, &gold, &sw, aggregate)
            .with_context(|| format!("scoring {}", p.display()))?;
        systems.push((label, texts, r));
    }
    let mut s = String::new();
    s.push_str(&RougeReport::table_header());
    s.push('\n');
    for (label, _, r) in &systems {
        s.push_str(&r.table_row(label));
        s.push('\n');
    }
    for (id, g) in &gold {
        s.push_str(&format!("\n[{id}]\ngold\t{g}\n"));
        for (label, texts, _) in &systems {
            s.push_str(&format!("{label}\t{}\n", texts[id]));
        }
    }
    print!("{s}");
    if let Some(p) = out {
        write(p, &s)?;
    }
    Ok(())
}
