//! Human review of uncertain author and citation matches.
//!
//! Entries are keyed by a hash of their content (kind, ids, evidence), so a
//! decision recorded against one snapshot applies to any rebuild that
//! produces the same candidate.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReviewKind {
    Author,
    Citation,
}

impl ReviewKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ReviewKind::Author => "author",
            ReviewKind::Citation => "citation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewEntry {
    pub key: String,
    pub kind: ReviewKind,
    /// Author entries: unordered pair, smaller id first. Citation entries:
    /// (citing, cited).
    pub ids: (String, String),
    pub evidence: Vec<String>,
    pub score: f64,
}

impl ReviewEntry {
    pub fn new(kind: ReviewKind, a: &str, b: &str, evidence: Vec<String>, score: f64) -> Self {
        let ids = match kind {
            ReviewKind::Author if b < a => (b.to_string(), a.to_string()),
            _ => (a.to_string(), b.to_string()),
        };
        ReviewEntry { key: review_key(kind, &ids, &evidence), kind, ids, evidence, score }
    }
}

pub fn review_key(kind: ReviewKind, ids: &(String, String), evidence: &[String]) -> String {
    let mut h = Sha256::new();
    for part in
        [kind.as_str(), ids.0.as_str(), ids.1.as_str()].into_iter().chain(evidence.iter().map(String::as_str))
    {
        h.update(part.as_bytes());
        h.update([0x1f]);
    }
    hex::encode(&h.finalize()[..16])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    Reject,
}

impl std::str::FromStr for Verdict {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accept" => Ok(Verdict::Accept),
            "reject" => Ok(Verdict::Reject),
            other => Err(Error::Config(format!("unknown verdict {other:?}"))),
        }
    }
}

/// A recorded verdict. Carries the entry so the log is readable on its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewDecision {
    pub key: String,
    pub verdict: Verdict,
    pub entry: ReviewEntry,
}

/// Append-only JSON-lines file of review decisions. Later lines override
/// earlier ones for the same key.
#[derive(Debug, Clone)]
pub struct DecisionLog {
    path: PathBuf,
}

impl DecisionLog {
    pub fn new(path: impl AsRef<Path>) -> Self {
        DecisionLog { path: path.as_ref().to_path_buf() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn load(&self) -> Result<Vec<ReviewDecision>> {
        let text = match fs::read_to_string(&self.path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(Error::from))
            .collect()
    }

    /// Append one decision as a single write so concurrent readers never
    /// see a partial line.
    pub fn append(&self, decision: &ReviewDecision) -> Result<()> {
        if let Some(dir) = self.path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let mut line = serde_json::to_vec(decision)?;
        line.push(b'\n');
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
        f.write_all(&line)?;
        f.sync_data()?;
        Ok(())
    }
}

const EVIDENCE_SEPARATOR: &str = " | ";

/// Review queue as CSV: `key,kind,id_a,id_b,evidence,score`.
pub fn queue_to_csv(queue: &[ReviewEntry]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["key", "kind", "id_a", "id_b", "evidence", "score"])?;
    for e in queue {
        w.write_record([
            e.key.as_str(),
            e.kind.as_str(),
            &e.ids.0,
            &e.ids.1,
            &e.evidence.join(EVIDENCE_SEPARATOR),
            &crate::model::format_number(e.score),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is UTF-8"))
}

pub fn queue_from_csv(text: &str) -> Result<Vec<ReviewEntry>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        if row.len() != 6 {
            return Err(Error::Config(format!("review row has {} fields, expected 6", row.len())));
        }
        let kind = match &row[1] {
            "author" => ReviewKind::Author,
            "citation" => ReviewKind::Citation,
            other => return Err(Error::Config(format!("unknown review kind {other:?}"))),
        };
        let evidence: Vec<String> = row[4].split(EVIDENCE_SEPARATOR).map(str::to_string).collect();
        let score: f64 = row[5].parse().map_err(|_| Error::Config(format!("bad score {:?}", &row[5])))?;
        let entry = ReviewEntry::new(kind, &row[2], &row[3], evidence, score);
        if entry.key != row[0] {
            return Err(Error::Config(format!("review key {} does not match its content", &row[0])));
        }
        out.push(entry);
    }
    Ok(out)
}
