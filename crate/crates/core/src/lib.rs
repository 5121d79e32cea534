//! Engine for exploring an annotated research-study corpus.
//!
//! The crate turns a curated corpus table (plus abstracts and bibliography)
//! into an immutable [`CorpusSnapshot`] and answers the queries behind four
//! coordinated views: a filterable table, per-criterion distributions, a
//! similarity graph and a year-positioned citation/co-authorship graph.
//!
//! ```no_run
//! use studyscope::{ingest, schema, snapshot};
//!
//! let schema = schema::default_schema();
//! let table = std::fs::read("corpus.csv")?;
//! let (records, report) = ingest::parse_corpus_table(&table, &schema, &Default::default())?;
//! assert!(report.is_clean());
//! let snap = snapshot::SnapshotBuilder::new(schema, records).build()?;
//! println!("{} studies, snapshot {}", snap.len(), snap.id());
//! # Ok::<(), studyscope::Error>(())
//! ```

pub mod api;
pub mod config;
pub mod error;
pub mod graph;
pub mod ingest;
pub mod model;
pub mod query;
pub mod schema;
pub mod similarity;
pub mod snapshot;
pub mod submissions;
pub mod validate;

pub use error::{Error, Result};
pub use model::{BibEntry, Criterion, CriterionKind, FieldValue, StudyRecord};
pub use schema::Schema;
