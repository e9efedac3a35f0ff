//! `kgr`: build, query and evaluate hierarchical index graphs.

mod config;

use std::fmt;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use kgr_core::clock::{Clock, SteppingClock, SystemClock};
use kgr_core::evaluation::{run_benchmark, BenchmarkOptions};
use kgr_core::extraction::ExtractionCache;
use kgr_core::generation::{answer_query, AnswerTemplate};
use kgr_core::hig::{build_hig, load_index, save_index, BuildConfig};
use kgr_core::retrieval::{retrieve_with_clock, RetrievalParams, DEFAULT_MULTI_HOPS};
use kgr_core::{
    load_corpus, load_qa_items, AnswerStyle, Preset, Profile, PromptTemplate, Strategy,
    TemplateLanguage,
};

use config::{FileConfig, ParamsSection};

/// Invalid arguments or configuration; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "kgr", version, about = "Hierarchical index graph retrieval", propagate_version = true)]
struct Cli {
    /// TOML file with [embedding], [completion] and [params] sections.
    /// Without it the offline mock providers are used.
    #[arg(long, global = true, value_name = "FILE")]
    provider_config: Option<PathBuf>,

    /// Seed for the mock embedder [default: 0]
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Log provider traffic and retries to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract knowledge graphs, embed and link a corpus, and write the index.
    BuildIndex(BuildArgs),
    /// Retrieve knowledge for one question and print it as JSON.
    Query(QueryArgs),
    /// Answer and score a QA dataset.
    Eval(EvalArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    OneHop,
    Attentive,
    MultiHop,
}

#[derive(Clone, Copy, ValueEnum)]
enum StyleArg {
    Short,
    Long,
}

#[derive(Clone, Copy, ValueEnum)]
enum LanguageArg {
    En,
    Zh,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Hotpotqa,
    Musique,
    #[value(name = "2wiki")]
    TwoWiki,
    Crud1,
    Crud2,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Hotpotqa => Preset::HotpotQa,
            PresetArg::Musique => Preset::Musique,
            PresetArg::TwoWiki => Preset::TwoWiki,
            PresetArg::Crud1 => Preset::Crud1,
            PresetArg::Crud2 => Preset::Crud2,
        }
    }
}

#[derive(Args)]
struct PresetFlag {
    /// Hyperparameter profile; explicit flags and [params] override it
    /// [default: hotpotqa values]
    #[arg(long)]
    preset: Option<PresetArg>,
}

#[derive(Args)]
struct BuildArgs {
    /// JSONL corpus, one {"id", "text", "title"?} object per line.
    #[arg(long, value_name = "FILE")]
    corpus: PathBuf,
    /// Index directory to create.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Neighbours per document in the document graph [default: 2]
    #[arg(long)]
    k: Option<usize>,
    #[command(flatten)]
    preset: PresetFlag,
    /// Built-in extraction examples [default: en, zh for crud presets]
    #[arg(long)]
    template_language: Option<LanguageArg>,
    /// Extraction template as JSON {"instruction", "few_shot_examples": [{"text", "triples"}], "language"}.
    #[arg(long, value_name = "FILE", conflicts_with = "template_language")]
    template: Option<PathBuf>,
    /// Embed "title\ntext" instead of the text alone.
    #[arg(long)]
    embed_title: bool,
    /// Do not read or write <out>/extraction_cache.jsonl.
    #[arg(long)]
    no_cache: bool,
}

#[derive(Args)]
struct RetrievalArgs {
    /// Index directory written by build-index.
    #[arg(long, value_name = "DIR")]
    index: PathBuf,
    #[command(flatten)]
    preset: PresetFlag,
    /// Seed documents matched against the query [default: 3]
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: Option<u64>,
    /// Maximum triples returned [default: 20]
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    t: Option<u64>,
    /// Entity score threshold [default: 0.1]
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Document collaboration strategy [default: one-hop]
    #[arg(long)]
    strategy: Option<StrategyArg>,
    /// Edges followed by the multi-hop strategy [default: 2]
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    hops: Option<u64>,
    /// Answer style [default: short, long for crud presets]
    #[arg(long)]
    style: Option<StyleArg>,
    /// Answer prompt template with {{triples}} and {{question}} placeholders.
    #[arg(long, value_name = "FILE")]
    answer_template: Option<PathBuf>,
    /// Time with a clock that advances 1 ms per reading, so output is
    /// byte-identical across runs.
    #[arg(long)]
    fixed_clock: bool,
}

#[derive(Args)]
struct QueryArgs {
    #[command(flatten)]
    retrieval: RetrievalArgs,
    /// Also generate an answer from the retrieved triples.
    #[arg(long)]
    generate: bool,
    /// The question.
    question: String,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    retrieval: RetrievalArgs,
    /// JSONL dataset, one {"id", "question", "answers"} object per line.
    #[arg(long, value_name = "FILE")]
    dataset: PathBuf,
    /// Write the JSON report here (the table is always printed).
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
    /// Questions answered at once [default: provider in-flight limit]
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
}

fn strategy_from_name(name: &str, hops: usize) -> Result<Strategy> {
    Strategy::parse(name, Some(hops)).map_err(|e| UsageError(e.to_string()).into())
}

/// Flag, then config [params], then preset, then built-in default.
fn resolve_profile(
    preset_flag: Option<PresetArg>,
    k: Option<usize>,
    r: Option<&RetrievalArgs>,
    file: &ParamsSection,
) -> Result<(Option<Preset>, Profile)> {
    let preset = preset_flag.map(Preset::from).or(file.preset);
    let base = preset.map(Preset::profile).unwrap_or_default();
    let hops = r
        .and_then(|r| r.hops.map(|h| h as usize))
        .or(file.hops)
        .unwrap_or(DEFAULT_MULTI_HOPS);
    let strategy = match r.and_then(|r| r.strategy) {
        Some(StrategyArg::OneHop) => Strategy::OneHop,
        Some(StrategyArg::Attentive) => Strategy::Attentive,
        Some(StrategyArg::MultiHop) => Strategy::MultiHop { hops },
        None => match &file.strategy {
            Some(name) => strategy_from_name(name, hops)?,
            None => match base.strategy {
                Strategy::MultiHop { .. } => Strategy::MultiHop { hops },
                s => s,
            },
        },
    };
    let style = match r.and_then(|r| r.style) {
        Some(StyleArg::Short) => AnswerStyle::ShortForm,
        Some(StyleArg::Long) => AnswerStyle::LongForm,
        None => match &file.style {
            Some(s) => s.parse().map_err(|e: kgr_core::generation::GenerationError| UsageError(e.to_string()))?,
            None => base.style,
        },
    };
    let profile = Profile {
        k: k.or(file.k).unwrap_or(base.k),
        n: r.and_then(|r| r.n.map(|v| v as usize)).or(file.n).unwrap_or(base.n),
        t: r.and_then(|r| r.t.map(|v| v as usize)).or(file.t).unwrap_or(base.t),
        lambda: r.and_then(|r| r.lambda).or(file.lambda).unwrap_or(base.lambda),
        strategy,
        language: base.language,
        style,
    };
    profile
        .retrieval()
        .validate()
        .map_err(|e| UsageError(e.to_string()))?;
    Ok((preset, profile))
}

struct Session {
    file: Option<FileConfig>,
    seed: Option<u64>,
}

impl Session {
    fn new(cli: &Cli) -> Result<Self> {
        let file = match &cli.provider_config {
            Some(p) => Some(FileConfig::load(p)?),
            None => {
                eprintln!("note: no --provider-config given; using offline mock providers");
                None
            }
        };
        Ok(Self { file, seed: cli.seed })
    }

    fn params(&self) -> &ParamsSection {
        static EMPTY: std::sync::OnceLock<ParamsSection> = std::sync::OnceLock::new();
        self.file
            .as_ref()
            .map(|f| &f.params)
            .unwrap_or_else(|| EMPTY.get_or_init(ParamsSection::default))
    }
}

fn build_index(session: &Session, args: &BuildArgs) -> Result<()> {
    let (_, profile) = resolve_profile(args.preset.preset, args.k, None, session.params())?;
    let corpus = load_corpus(&args.corpus)?;
    let template = match (&args.template, args.template_language) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read template {}", path.display()))?;
            let t: PromptTemplate = serde_json::from_str(&text)
                .map_err(|e| UsageError(format!("template {}: {e}", path.display())))?;
            t.validate().map_err(|e| UsageError(e.to_string()))?;
            t
        }
        (None, Some(LanguageArg::En)) => PromptTemplate::builtin(TemplateLanguage::English),
        (None, Some(LanguageArg::Zh)) => PromptTemplate::builtin(TemplateLanguage::Chinese),
        (None, None) => PromptTemplate::builtin(profile.language),
    };
    let embed = config::embedder(session.file.as_ref(), session.seed)?;
    let completion = config::completion(session.file.as_ref())?;
    let mut cfg = BuildConfig::new(profile.k, template);
    cfg.embed_title = args.embed_title || session.params().embed_title.unwrap_or(false);

    let mut cache = if args.no_cache {
        None
    } else {
        Some(ExtractionCache::open(args.out.join("extraction_cache.jsonl"))?)
    };
    let out = build_hig(&corpus, embed.as_ref(), completion.as_ref(), &cfg, cache.as_mut())?;
    save_index(&out.graph, &args.out)?;

    let c = out.graph.manifest().counts;
    let s = &out.stats;
    for w in &s.warnings {
        eprintln!("warning: {w}");
    }
    emit(&format!(
        "indexed {} documents: {} edges, {} entities, {} triples\n\
         extraction: {} completion calls, {} cache hits, {} skipped groups\n\
         embedding calls: {}\n\
         index written to {}\n",
        c.documents,
        c.edges,
        c.entities,
        c.triples,
        s.completion_calls,
        s.cache_hits,
        s.skipped_groups,
        s.embed_calls,
        args.out.display()
    ))
}

fn answer_template(args: &RetrievalArgs) -> Result<AnswerTemplate> {
    match &args.answer_template {
        Some(p) => Ok(AnswerTemplate::from_file(p)?),
        None => Ok(AnswerTemplate::default()),
    }
}

fn clock(args: &RetrievalArgs) -> Box<dyn Clock> {
    if args.fixed_clock {
        Box::new(SteppingClock::new(Duration::from_millis(1)))
    } else {
        Box::new(SystemClock::default())
    }
}

fn retrieval_setup(session: &Session, args: &RetrievalArgs) -> Result<(Profile, RetrievalParams)> {
    let (_, profile) = resolve_profile(args.preset.preset, None, Some(args), session.params())?;
    if args.hops.is_some() && !matches!(profile.strategy, Strategy::MultiHop { .. }) {
        eprintln!("note: --hops only applies to the multi-hop strategy");
    }
    Ok((profile, profile.retrieval()))
}

fn query(session: &Session, args: &QueryArgs) -> Result<()> {
    let r = &args.retrieval;
    let (profile, params) = retrieval_setup(session, r)?;
    let template = answer_template(r)?;
    let graph = load_index(&r.index)?;
    let embed = config::embedder(session.file.as_ref(), session.seed)?;
    let clock = clock(r);
    let json = if args.generate {
        let completion = config::completion(session.file.as_ref())?;
        let answered = answer_query(
            &args.question,
            &graph,
            &params,
            embed.as_ref(),
            completion.as_ref(),
            &template,
            profile.style,
            clock.as_ref(),
        )?;
        serde_json::to_string_pretty(&answered)?
    } else {
        let ctx = retrieve_with_clock(&args.question, &graph, &params, embed.as_ref(), clock.as_ref())?;
        serde_json::to_string_pretty(&ctx)?
    };
    emit(&format!("{json}\n"))
}

fn eval(session: &Session, args: &EvalArgs) -> Result<()> {
    let r = &args.retrieval;
    let (profile, params) = retrieval_setup(session, r)?;
    let template = answer_template(r)?;
    let items = load_qa_items(&args.dataset)?;
    let graph = load_index(&r.index)?;
    let embed = config::embedder(session.file.as_ref(), session.seed)?;
    let completion = config::completion(session.file.as_ref())?;
    let options = BenchmarkOptions {
        style: profile.style,
        template,
        workers: if r.fixed_clock {
            Some(1)
        } else {
            args.workers.map(|w| w as usize)
        },
    };
    let clock = clock(r);
    let report = run_benchmark(
        &items,
        &graph,
        &params,
        embed.as_ref(),
        completion.as_ref(),
        &options,
        clock.as_ref(),
    )?;
    if let Some(path) = &args.report {
        write_report(path, &serde_json::to_string_pretty(&report)?)?;
    }
    emit(&report.table())
}

fn write_report(path: &Path, json: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    std::fs::write(path, format!("{json}\n")).with_context(|| format!("cannot write report {}", path.display()))
}

/// The error and its causes, skipping causes already quoted by their parent.
fn error_chain(e: &anyhow::Error) -> String {
    let mut out = e.to_string();
    let mut last = out.clone();
    for cause in e.chain().skip(1) {
        let text = cause.to_string();
        if !last.contains(&text) {
            out.push_str(": ");
            out.push_str(&text);
        }
        last = text;
    }
    out
}

/// Writes to stdout; a closed pipe (`kgr ... | head`) is not an error.
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn run(cli: &Cli) -> Result<()> {
    let session = Session::new(cli)?;
    match &cli.command {
        Command::BuildIndex(a) => build_index(&session, a),
        Command::Query(a) => query(&session, a),
        Command::Eval(a) => eval(&session, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .with_max_level(if cli.verbose {
            tracing_subscriber::filter::LevelFilter::DEBUG
        } else {
            tracing_subscriber::filter::LevelFilter::ERROR
        })
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", error_chain(&e));
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    fn retrieval(extra: &[&str]) -> RetrievalArgs {
        let mut argv = vec!["kgr", "query", "--index", "i"];
        argv.extend_from_slice(extra);
        argv.push("q");
        match Cli::try_parse_from(argv).unwrap().command {
            Command::Query(q) => q.retrieval,
            _ => unreachable!(),
        }
    }

    #[test]
    fn precedence_flag_over_file_over_preset() {
        let file = ParamsSection {
            preset: Some(Preset::Musique),
            t: Some(7),
            lambda: Some(0.5),
            ..Default::default()
        };
        let r = retrieval(&["--lambda", "0.05"]);
        let (preset, p) = resolve_profile(r.preset.preset, None, Some(&r), &file).unwrap();
        assert_eq!(preset, Some(Preset::Musique));
        assert_eq!((p.k, p.n, p.t, p.lambda), (3, 3, 7, 0.05));

        let r = retrieval(&["--preset", "crud1"]);
        let (_, p) = resolve_profile(r.preset.preset, None, Some(&r), &file).unwrap();
        assert_eq!((p.k, p.t, p.lambda), (1, 7, 0.5));
        assert_eq!(p.style, AnswerStyle::LongForm);

        let r = retrieval(&[]);
        let (_, p) = resolve_profile(r.preset.preset, None, Some(&r), &ParamsSection::default()).unwrap();
        assert_eq!((p.k, p.n, p.t, p.lambda), (2, 3, 20, 0.1));
    }

    #[test]
    fn strategy_sources() {
        let r = retrieval(&["--strategy", "multi-hop", "--hops", "3"]);
        let (_, p) = resolve_profile(None, None, Some(&r), &ParamsSection::default()).unwrap();
        assert_eq!(p.strategy, Strategy::MultiHop { hops: 3 });

        let file = ParamsSection {
            strategy: Some("attentive".into()),
            ..Default::default()
        };
        let r = retrieval(&[]);
        let (_, p) = resolve_profile(None, None, Some(&r), &file).unwrap();
        assert_eq!(p.strategy, Strategy::Attentive);

        let file = ParamsSection {
            strategy: Some("sideways".into()),
            ..Default::default()
        };
        let err = resolve_profile(None, None, Some(&r), &file).unwrap_err();
        assert!(err.downcast_ref::<UsageError>().is_some());
    }

    #[test]
    fn bad_values_are_usage_errors() {
        assert!(Cli::try_parse_from(["kgr", "query", "--index", "i", "--n", "0", "q"]).is_err());
        assert!(Cli::try_parse_from(["kgr", "query", "--index", "i", "--hops", "1", "q"]).is_err());
        assert!(Cli::try_parse_from(["kgr", "query", "--index", "i", "--strategy", "bogus", "q"]).is_err());
        let file = ParamsSection {
            lambda: Some(f64::INFINITY),
            ..Default::default()
        };
        let r = retrieval(&[]);
        assert!(resolve_profile(None, None, Some(&r), &file).is_err());
    }
}
