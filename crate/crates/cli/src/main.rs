//! `taboo`: ingest corpora, select target words, run tournaments, aggregate
//! statistics, serve games and replay transcripts.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime errors.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use taboo_core::corpus::select::{select_target_words, ConcretenessTable, SelectionCriteria};
use taboo_core::corpus::{ingest_corpus, Corpus, Format};
use taboo_core::tournament::{self, aggregate, read_skipped, read_transcripts, Resources, TournamentConfig};
use taboo_core::transcript::Transcript;
use taboo_service::{AppState, ServiceConfig};

#[derive(Parser, Debug)]
#[command(name = "taboo", version, about = "Adversarial Taboo simulation platform")]
struct Cli {
    /// Master seed; overrides the config file.
    #[arg(long, global = true, env = "TABOO_SEED")]
    seed: Option<u64>,
    /// Worker threads for tournaments; 0 uses every core.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Read a raw corpus and write the indexed corpus as JSON.
    Ingest(IngestArgs),
    /// Write the target words that pass the selection criteria, one per line.
    SelectWords(SelectArgs),
    /// Run a tournament config and write transcripts and reports.
    Simulate(SimulateArgs),
    /// Aggregate a directory of transcripts into a report.
    Stats(StatsArgs),
    /// Start the HTTP game service.
    Serve(ServeArgs),
    /// Re-execute transcripts and check their recorded outcomes.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum InputFormat {
    Plain,
    Pairs,
}

impl From<InputFormat> for Format {
    fn from(f: InputFormat) -> Self {
        match f {
            InputFormat::Plain => Format::PlainText,
            InputFormat::Pairs => Format::PairList,
        }
    }
}

#[derive(Args, Debug)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "plain")]
    format: InputFormat,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    Encyclopedia,
    Conversation,
}

#[derive(Args, Debug)]
struct SelectArgs {
    /// Raw corpus, or a `.json` corpus written by `ingest`.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum, default_value = "plain")]
    format: InputFormat,
    #[arg(long, value_enum, default_value = "conversation")]
    preset: Preset,
    /// Minimum lemma frequency, inclusive.
    #[arg(long)]
    min_freq: Option<u64>,
    /// Minimum concreteness rating, inclusive; requires --concreteness.
    #[arg(long)]
    min_concreteness: Option<f64>,
    /// Tab separated word/rating table.
    #[arg(long)]
    concreteness: Option<PathBuf>,
    /// Keep words outside the noun list.
    #[arg(long)]
    all_pos: bool,
    /// Defaults to stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    rounds: Option<u32>,
    #[arg(long)]
    max_turns: Option<u32>,
    #[arg(long)]
    words_file: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StatsArgs {
    /// Directory of `*.jsonl` transcripts; `../skipped.json` is read if present.
    #[arg(long)]
    transcripts: PathBuf,
    /// Adds the concreteness buckets and correlation from this table.
    #[arg(long)]
    by_concreteness: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    buckets: usize,
    /// Writes report.json and report.csv here instead of printing JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[arg(long, env = "TABOO_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, env = "TABOO_BIND")]
    bind: Option<String>,
    #[arg(long, env = "TABOO_WORDS")]
    words_file: Option<PathBuf>,
    #[arg(long, env = "TABOO_CORPUS")]
    corpus: Option<PathBuf>,
    #[arg(long, env = "TABOO_PAIRS")]
    pairs: Option<PathBuf>,
    #[arg(long, env = "TABOO_GRAPH")]
    graph: Option<PathBuf>,
    #[arg(long, env = "TABOO_SCRIPT")]
    script: Option<PathBuf>,
    #[arg(long, env = "TABOO_TRANSCRIPTS")]
    transcripts: Option<PathBuf>,
    #[arg(long)]
    api_budget: Option<usize>,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    /// Transcript files or directories of them.
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    /// Re-judge utterances with the judge built from this tournament config
    /// instead of the recorded verdicts.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::SelectWords(a) => select_words(a),
        Command::Simulate(a) => simulate(a, cli.seed, cli.jobs),
        Command::Stats(a) => stats(a),
        Command::Serve(a) => serve(a, cli.seed),
        Command::Replay(a) => replay(a, cli.seed),
    }
}

fn ingest(a: IngestArgs) -> Result<()> {
    let corpus = ingest_corpus(&a.input, a.format.into())?;
    corpus.save_json(&a.output)?;
    println!(
        "{} documents, {} paragraphs, {} sentences -> {}",
        corpus.documents().len(),
        corpus.paragraph_count(),
        corpus.sentences().len(),
        a.output.display()
    );
    Ok(())
}

fn load_corpus(path: &Path, format: InputFormat) -> Result<Corpus> {
    if path.extension().is_some_and(|e| e == "json") {
        Ok(Corpus::load_json(path)?)
    } else {
        Ok(ingest_corpus(path, format.into())?)
    }
}

fn select_words(a: SelectArgs) -> Result<()> {
    let corpus = load_corpus(&a.corpus, a.format)?;
    let mut criteria = match a.preset {
        Preset::Encyclopedia => SelectionCriteria::encyclopedia_preset(),
        Preset::Conversation => SelectionCriteria::conversation_preset(),
    };
    if let Some(f) = a.min_freq {
        criteria.min_frequency = f;
    }
    if a.min_concreteness.is_some() {
        criteria.min_concreteness = a.min_concreteness;
    }
    if a.all_pos {
        criteria.nouns_only = false;
    }
    let table = a.concreteness.as_deref().map(ConcretenessTable::load).transpose()?;
    let words = select_target_words(Some(&corpus), &criteria, table.as_ref())?;
    let mut text = String::new();
    for w in &words {
        text.push_str(&w.word);
        text.push('\n');
    }
    match &a.output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn simulate(a: SimulateArgs, seed: Option<u64>, jobs: Option<usize>) -> Result<()> {
    let mut cfg = TournamentConfig::load(&a.config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(j) = jobs {
        cfg.jobs = j;
    }
    if let Some(r) = a.rounds {
        cfg.rounds = r;
    }
    if let Some(t) = a.max_turns {
        cfg.game.max_turns = t;
    }
    if let Some(w) = a.words_file {
        cfg.words.clear();
        cfg.words_file = Some(w);
    }
    cfg.validate()?;
    let res = Resources::for_tournament(&cfg)?;
    let out = tournament::run(&cfg, &res)?;
    out.write(&a.out)?;
    let r = &out.report;
    println!(
        "{} games: attacker {:.2}% defender {:.2}% tie {:.2}% aborted {:.2}%, {} skipped -> {}",
        r.games,
        r.attacker_rate,
        r.defender_rate,
        r.tie_rate,
        r.aborted_rate,
        r.skipped.len(),
        a.out.display()
    );
    Ok(())
}

fn stats(a: StatsArgs) -> Result<()> {
    let found = read_transcripts(&a.transcripts)?;
    if found.is_empty() {
        bail!("no transcripts in {}", a.transcripts.display());
    }
    let transcripts: Vec<Transcript> = found.into_iter().map(|(_, t)| t).collect();
    let skipped: Vec<String> = read_skipped(&a.transcripts)?.into_iter().map(|s| s.word).collect();
    let mut report = aggregate(&transcripts, &skipped)?;
    if let Some(p) = &a.by_concreteness {
        report = report.with_concreteness(&ConcretenessTable::load(p)?, a.buckets)?;
    }
    match &a.out {
        Some(dir) => report.write(dir)?,
        None => std::io::stdout().write_all(report.to_json().as_bytes())?,
    }
    Ok(())
}

fn serve(a: ServeArgs, seed: Option<u64>) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => ServiceConfig::load(p)?,
        None => ServiceConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    for (slot, flag) in [
        (&mut cfg.data.corpus, a.corpus),
        (&mut cfg.data.pairs, a.pairs),
        (&mut cfg.data.graph, a.graph),
        (&mut cfg.data.script, a.script),
        (&mut cfg.transcripts, a.transcripts),
    ] {
        if flag.is_some() {
            *slot = flag;
        }
    }
    if let Some(w) = a.words_file {
        cfg.words.clear();
        cfg.words_file = Some(w);
    }
    if a.api_budget.is_some() {
        cfg.api_budget = a.api_budget;
    }
    let bind = a.bind.or(cfg.bind.clone()).unwrap_or_else(|| "127.0.0.1:8080".into());
    let state = Arc::new(AppState::from_config(&cfg)?);
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&bind)
            .await
            .with_context(|| format!("cannot bind {bind}"))?;
        println!("listening on {}", listener.local_addr()?);
        taboo_service::serve(listener, state).await?;
        Ok(())
    })
}

fn transcript_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            files.extend(read_transcripts(p)?.into_iter().map(|(f, _)| f));
        } else if p.is_file() {
            files.push(p.clone());
        } else {
            bail!("{} does not exist", p.display());
        }
    }
    if files.is_empty() {
        bail!("no transcripts found");
    }
    Ok(files)
}

fn replay(a: ReplayArgs, seed: Option<u64>) -> Result<()> {
    let files = transcript_files(&a.paths)?;
    let judge = match &a.config {
        Some(p) => {
            let mut cfg = TournamentConfig::load(p)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            Some(Resources::for_tournament(&cfg)?.judge)
        }
        None => None,
    };
    for f in &files {
        let t = Transcript::read(f)?;
        let outcome = match &judge {
            Some(j) => t.replay_with(&**j),
            None => t.replay(),
        }
        .with_context(|| format!("{}", f.display()))?;
        println!("{}: {:?} at turn {}, outcome verified", f.display(), outcome.kind, outcome.turn);
    }
    Ok(())
}
