use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use studyscope::api::{self, AppState};
use studyscope::config::{load_snapshot, Config, LoadReport};
use studyscope::graph::{queue_to_csv, resolve_review, DecisionLog, Verdict};
use studyscope::ingest;
use studyscope::similarity::export::{edge_list_csv, matrix_csv, Scores};
use studyscope::similarity::{neighbors, SimilarityMode};
use studyscope::snapshot::CorpusSnapshot;
use studyscope::submissions::SubmissionStore;

#[derive(Parser)]
#[command(name = "studyscope", version, about = "Explore an annotated research-study corpus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct DataArgs {
    /// TOML config file; the flags below override it.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Criterion manifest (TOML); the built-in schema when omitted.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Corpus table (CSV).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Abstracts (CSV: study_id,abstract).
    #[arg(long)]
    abstracts: Option<PathBuf>,
    /// Corpus bibliography (BibTeX).
    #[arg(long)]
    bib: Option<PathBuf>,
    /// Directory of <study_id>.bib reference lists.
    #[arg(long)]
    references: Option<PathBuf>,
    /// Alias map for one criterion, as CRITERION=PATH. Repeatable.
    #[arg(long = "alias", value_name = "CRITERION=PATH")]
    aliases: Vec<String>,
    /// Review decisions log (JSON lines).
    #[arg(long)]
    decisions: Option<PathBuf>,
}

#[derive(Args, Clone, Default)]
struct SnapshotArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Use a saved snapshot instead of rebuilding from the inputs.
    #[arg(long)]
    snapshot: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Db,
    Abstract,
}

impl From<ModeArg> for SimilarityMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Db => SimilarityMode::Database,
            ModeArg::Abstract => SimilarityMode::Abstract,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScoreArg {
    Raw,
    Z,
}

#[derive(Clone, Copy, ValueEnum)]
enum MatrixFormat {
    Matrix,
    Edges,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the corpus table and print the ingestion report.
    Ingest(DataArgs),
    /// Like ingest, but exit non-zero when any row is rejected.
    Validate(DataArgs),
    /// Build a snapshot and optionally save it.
    Snapshot {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Export a similarity matrix.
    Similarity {
        #[command(flatten)]
        src: SnapshotArgs,
        #[arg(long, value_enum, default_value = "db")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "z")]
        scores: ScoreArg,
        #[arg(long, value_enum, default_value = "matrix")]
        format: MatrixFormat,
        /// Edge list only: drop pairs below this z.
        #[arg(long)]
        min_z: Option<f64>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Most similar studies to one study.
    Neighbors {
        id: String,
        #[command(flatten)]
        src: SnapshotArgs,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        threshold: f64,
        #[arg(long, value_enum, default_value = "db")]
        mode: ModeArg,
    },
    /// Shared-author and citation graph.
    Graph {
        #[command(subcommand)]
        command: GraphCommand,
    },
    /// Serve the HTTP API.
    Serve {
        #[command(flatten)]
        data: DataArgs,
        /// Overrides the configured bind address.
        #[arg(long)]
        bind: Option<String>,
    },
}

#[derive(Subcommand)]
enum GraphCommand {
    /// Print extracted edges, queue and warnings as JSON.
    Extract {
        #[command(flatten)]
        src: SnapshotArgs,
    },
    Review {
        #[command(subcommand)]
        command: ReviewCommand,
    },
}

#[derive(Subcommand)]
enum ReviewCommand {
    /// Print the pending review queue as CSV.
    List {
        #[command(flatten)]
        src: SnapshotArgs,
    },
    /// Promote a queued candidate to an edge.
    Accept {
        key: String,
        #[command(flatten)]
        src: SnapshotArgs,
    },
    /// Discard a queued candidate.
    Reject {
        key: String,
        #[command(flatten)]
        src: SnapshotArgs,
    },
}

fn config_from(args: &DataArgs) -> Result<Config> {
    let mut cfg = match &args.config {
        Some(p) => Config::load(p)?,
        None => {
            let mut c = Config::default();
            c.apply_env(std::env::vars())?;
            c
        }
    };
    let d = &mut cfg.data;
    for (slot, flag) in [
        (&mut d.schema, &args.schema),
        (&mut d.corpus, &args.corpus),
        (&mut d.abstracts, &args.abstracts),
        (&mut d.bibliography, &args.bib),
        (&mut d.references, &args.references),
        (&mut d.decisions, &args.decisions),
    ] {
        if flag.is_some() {
            *slot = flag.clone();
        }
    }
    for spec in &args.aliases {
        let (criterion, path) =
            spec.split_once('=').with_context(|| format!("--alias expects CRITERION=PATH, got {spec:?}"))?;
        d.aliases.insert(criterion.to_string(), PathBuf::from(path));
    }
    Ok(cfg)
}

fn print_load_report(report: &LoadReport) {
    let r = &report.ingest;
    eprintln!("{} rows parsed, {} records, {} rejected", r.rows_parsed, r.record_count, r.rejected_rows);
    for v in &r.violations {
        eprintln!("  violation: {v}");
    }
    for id in &r.duplicate_ids {
        eprintln!("  duplicate id: {id}");
    }
    for note in &report.abstract_notes {
        eprintln!("  note: {note}");
    }
    for w in &report.bibliography_warnings {
        eprintln!("  bibtex [{}] byte {}: {}", w.source, w.offset, w.message);
    }
}

fn open_snapshot(src: &SnapshotArgs) -> Result<(CorpusSnapshot, Config)> {
    let cfg = config_from(&src.data)?;
    if let Some(path) = &src.snapshot {
        return Ok((CorpusSnapshot::load(path)?, cfg));
    }
    let (snap, report) = load_snapshot(&cfg)?;
    print_load_report(&report);
    Ok((snap, cfg))
}

fn write_out(out: Option<&PathBuf>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn ingest_only(args: &DataArgs) -> Result<ingest::IngestReport> {
    let cfg = config_from(args)?;
    let schema = cfg.schema()?;
    let corpus = cfg.data.corpus.as_ref().context("no corpus table given (--corpus)")?;
    let (_, report) = ingest::parse_corpus_table(&std::fs::read(corpus)?, &schema, &cfg.aliases()?)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(report)
}

fn review(key: &str, verdict: Verdict, src: &SnapshotArgs) -> Result<()> {
    let (snap, cfg) = open_snapshot(src)?;
    let log_path = cfg.data.decisions.clone().context("no decisions log configured (--decisions)")?;
    let decision = resolve_review(snap.graph(), key, verdict)?;
    DecisionLog::new(&log_path).append(&decision)?;
    let next = snap.with_decision(decision, cfg.embedding_for(snap.records())?)?;
    println!(
        "{} {key}; snapshot {} ({} author edges, {} citation edges, {} pending)",
        match verdict {
            Verdict::Accept => "accepted",
            Verdict::Reject => "rejected",
        },
        next.id(),
        next.graph().author_edges.len(),
        next.graph().citation_edges.len(),
        next.graph().review_queue.len()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Ingest(args) => {
            ingest_only(&args)?;
        }
        Command::Validate(args) => {
            if !ingest_only(&args)?.is_clean() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Snapshot { data, out } => {
            let cfg = config_from(&data)?;
            let (snap, report) = load_snapshot(&cfg)?;
            print_load_report(&report);
            for note in snap.notes() {
                eprintln!("  note: {note}");
            }
            if let Some(p) = out {
                snap.save(&p)?;
            }
            println!("{}", snap.id());
        }
        Command::Similarity { src, mode, scores, format, min_z, out } => {
            let (snap, _) = open_snapshot(&src)?;
            let m = snap.matrix(mode.into())?;
            for flag in &m.flags {
                eprintln!("  flag: {flag}");
            }
            let scores = match scores {
                ScoreArg::Raw => Scores::Raw,
                ScoreArg::Z => Scores::Z,
            };
            let text = match format {
                MatrixFormat::Matrix => matrix_csv(m, scores)?,
                MatrixFormat::Edges => edge_list_csv(m, min_z)?,
            };
            write_out(out.as_ref(), text.as_bytes())?;
        }
        Command::Neighbors { id, src, threshold, mode } => {
            let (snap, _) = open_snapshot(&src)?;
            let found = neighbors(snap.matrix(mode.into())?, &id, threshold, None)?;
            println!("{}", serde_json::to_string_pretty(&found)?);
        }
        Command::Graph { command } => match command {
            GraphCommand::Extract { src } => {
                let (snap, _) = open_snapshot(&src)?;
                println!("{}", serde_json::to_string_pretty(snap.graph())?);
            }
            GraphCommand::Review { command } => match command {
                ReviewCommand::List { src } => {
                    let (snap, _) = open_snapshot(&src)?;
                    print!("{}", queue_to_csv(&snap.graph().review_queue)?);
                }
                ReviewCommand::Accept { key, src } => review(&key, Verdict::Accept, &src)?,
                ReviewCommand::Reject { key, src } => review(&key, Verdict::Reject, &src)?,
            },
        },
        Command::Serve { data, bind } => {
            let cfg = config_from(&data)?;
            let (snap, report) = load_snapshot(&cfg)?;
            print_load_report(&report);
            let store = match &cfg.data.submissions {
                Some(p) => SubmissionStore::open(p)?,
                None => SubmissionStore::ephemeral(),
            };
            let factory_cfg = cfg.clone();
            let mut state = AppState::new(snap, store)
                .with_rate_limit(cfg.server.submissions_per_minute)
                .with_embedding(Arc::new(move |records| factory_cfg.embedding_for(records)));
            if let Some(t) = &cfg.server.maintainer_token {
                state = state.with_maintainer_token(t.clone());
            }
            let bind = bind.unwrap_or(cfg.server.bind.clone());
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(api::serve(Arc::new(state), &bind))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if let Some(studyscope::Error::Validation(vs)) = e.downcast_ref::<studyscope::Error>() {
                for v in vs {
                    eprintln!("  {v}");
                }
            }
            ExitCode::FAILURE
        }
    }
}
