#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use studyscope::config::read_reference_dir;
use studyscope::ingest::{load_abstracts, load_bibliography, parse_corpus_table, AliasMap};
use studyscope::model::{BibEntry, CriterionKind, StudyRecord};
use studyscope::schema::Schema;
use studyscope::snapshot::{CorpusSnapshot, SnapshotBuilder};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic")
}

pub fn read_fixture(name: &str) -> Vec<u8> {
    std::fs::read(fixture_dir().join(name)).unwrap()
}

pub fn fixture_schema() -> Schema {
    Schema::from_manifest(&String::from_utf8(read_fixture("schema.toml")).unwrap()).unwrap()
}

pub fn parse_records(schema: &Schema, csv: &[u8]) -> Vec<StudyRecord> {
    let (records, report) = parse_corpus_table(csv, schema, &AliasMap::new()).unwrap();
    assert!(report.is_clean(), "{report:?}");
    records
}

pub fn builder_from_corpus(corpus: &[u8]) -> SnapshotBuilder {
    let schema = fixture_schema();
    let records = parse_records(&schema, corpus);
    let ids: BTreeSet<String> = records.iter().map(|r| r.study_id.clone()).collect();
    let abstracts = load_abstracts(&read_fixture("abstracts.csv"), &ids).unwrap();
    let refs = read_reference_dir(&fixture_dir().join("references")).unwrap();
    let bib = load_bibliography(&read_fixture("corpus.bib"), &refs).unwrap();
    SnapshotBuilder::new(schema, records).abstracts(abstracts.texts).bibliography(bib)
}

pub fn fixture_snapshot() -> CorpusSnapshot {
    builder_from_corpus(&read_fixture("corpus.csv")).build().unwrap()
}

/// Raw CSV rows keyed by column name.
pub fn raw_rows(csv: &[u8]) -> Vec<BTreeMap<String, String>> {
    let mut rdr = csv::Reader::from_reader(csv);
    let header: Vec<String> = rdr.headers().unwrap().iter().map(str::to_string).collect();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            header.iter().cloned().zip(r.iter().map(|c| c.trim().to_string())).collect()
        })
        .collect()
}

// ---- naive database-similarity oracle, working on cell strings only ----

enum Cell {
    Na,
    Scalar(f64),
    Set(BTreeSet<String>),
}

fn read_cell(
    kind: CriterionKind,
    multi: bool,
    levels: &BTreeMap<String, f64>,
    log: bool,
    text: &str,
) -> Cell {
    if text == "N/A" {
        return Cell::Na;
    }
    match kind {
        CriterionKind::Binary => Cell::Scalar(if text == "Yes" { 1.0 } else { 0.0 }),
        CriterionKind::Ordinal => Cell::Scalar(levels[text]),
        CriterionKind::Numeric => {
            let v: f64 = text.parse().unwrap();
            Cell::Scalar(if log { (1.0 + v).ln() } else { v })
        }
        CriterionKind::Categorical => {
            let set: BTreeSet<String> = if multi {
                text.split(';').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
            } else if text.is_empty() {
                BTreeSet::new()
            } else {
                BTreeSet::from([text.to_string()])
            };
            Cell::Set(set)
        }
        CriterionKind::Text => unreachable!(),
    }
}

/// Per-criterion similarity matrices, one per participating criterion, in
/// schema order, with rows in CSV order.
pub fn oracle_terms(schema: &Schema, rows: &[BTreeMap<String, String>]) -> Vec<(String, Vec<Vec<f64>>)> {
    let n = rows.len();
    let mut out = Vec::new();
    for c in schema.criteria() {
        if c.kind == CriterionKind::Text || !c.similarity_participates {
            continue;
        }
        let mut cells: Vec<Cell> = rows
            .iter()
            .map(|r| read_cell(c.kind, c.multi_valued, &c.ordinal_values, c.log_transform, &r[&c.name]))
            .collect();
        if c.kind == CriterionKind::Numeric {
            let vals: Vec<f64> =
                cells.iter().filter_map(|x| if let Cell::Scalar(v) = x { Some(*v) } else { None }).collect();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for cell in cells.iter_mut() {
                if let Cell::Scalar(v) = cell {
                    *v = if hi > lo { (*v - lo) / (hi - lo) } else { 0.0 };
                }
            }
        }
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                m[i][j] = match (&cells[i], &cells[j]) {
                    (Cell::Scalar(a), Cell::Scalar(b)) => 1.0 - (a - b).abs(),
                    (Cell::Set(a), Cell::Set(b)) if !a.is_empty() && !b.is_empty() => {
                        a.intersection(b).count() as f64 / ((a.len() * b.len()) as f64).sqrt()
                    }
                    _ => 0.0,
                };
            }
        }
        out.push((c.name.clone(), m));
    }
    out
}

pub fn oracle_database(schema: &Schema, rows: &[BTreeMap<String, String>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut total = vec![vec![0.0; n]; n];
    for (_, m) in oracle_terms(schema, rows) {
        for i in 0..n {
            for j in 0..n {
                total[i][j] += m[i][j];
            }
        }
    }
    total
}

/// Mean and population sd of the upper-triangle entries among `keep`.
pub fn pair_stats(m: &dyn Fn(usize, usize) -> f64, n: usize, keep: &[bool]) -> (f64, f64, usize) {
    let mut vals = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if keep[i] && keep[j] {
                vals.push(m(i, j));
            }
        }
    }
    let k = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / k;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k;
    (mean, var.sqrt(), vals.len())
}

// ---- naive tf-idf oracle ----

pub fn words(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Cosine of idf-weighted term counts, fitted on the non-empty texts.
/// `None` for pairs involving an empty text.
pub fn oracle_tfidf(texts: &[&str]) -> Vec<Vec<Option<f64>>> {
    let docs: Vec<Vec<String>> = texts.iter().map(|t| words(t)).collect();
    let fitted: Vec<&Vec<String>> = docs.iter().filter(|d| !d.is_empty()).collect();
    let n = fitted.len() as f64;
    let mut df: HashMap<&str, f64> = HashMap::new();
    for d in &fitted {
        let uniq: BTreeSet<&str> = d.iter().map(String::as_str).collect();
        for w in uniq {
            *df.entry(w).or_default() += 1.0;
        }
    }
    let vecs: Vec<HashMap<&str, f64>> = docs
        .iter()
        .map(|d| {
            let mut v: HashMap<&str, f64> = HashMap::new();
            for w in d {
                *v.entry(w.as_str()).or_default() += 1.0;
            }
            for (w, x) in v.iter_mut() {
                *x *= ((1.0 + n) / (1.0 + df[w])).ln() + 1.0;
            }
            v
        })
        .collect();
    let dot = |a: &HashMap<&str, f64>, b: &HashMap<&str, f64>| -> f64 {
        a.iter().map(|(w, x)| x * b.get(w).copied().unwrap_or(0.0)).sum()
    };
    let k = texts.len();
    let mut out = vec![vec![None; k]; k];
    for i in 0..k {
        for j in 0..k {
            if texts[i].trim().is_empty() || texts[j].trim().is_empty() {
                continue;
            }
            let (a, b) = (&vecs[i], &vecs[j]);
            out[i][j] = Some(dot(a, b) / (dot(a, a) * dot(b, b)).sqrt());
        }
    }
    out
}

// ---- random corpora over the fixture schema ----

const PLACES: [&str; 4] = ["Ear", "Head", "Neck", "Face"];
const PARTS: [&str; 5] = ["Head", "Teeth", "Face", "Hand", "Eyes"];
const SENSORS: [&str; 5] = ["IMU", "Microphone", "EMG", "EOG", "Capacitive"];
const RESOLUTION: [&str; 3] = ["Semantic", "Coarse", "Fine"];
const KEYWORDS: [&str; 4] = ["teeth", "gaze", "touch", "eeg"];
const AUTHORS: [&str; 4] = ["Lee", "Kim", "Novak", "Brown"];

fn subset<R: Rng>(rng: &mut R, pool: &[&str], allow_empty: bool) -> String {
    let min = usize::from(!allow_empty);
    let k = rng.gen_range(min..=pool.len().min(3));
    let mut picked: Vec<&str> = pool.choose_multiple(rng, k).cloned().collect();
    picked.sort();
    picked.join(";")
}

fn pick<R: Rng>(rng: &mut R, options: &[&str]) -> String {
    options.choose(rng).unwrap().to_string()
}

fn maybe_na<R: Rng>(rng: &mut R, value: String) -> String {
    if rng.gen_bool(0.2) {
        "N/A".into()
    } else {
        value
    }
}

/// One random row in header order of the fixture corpus.
pub fn random_row<R: Rng>(rng: &mut R, id: &str) -> Vec<String> {
    let gestures = rng.gen_range(0..40).to_string();
    let disc = pick(rng, &["Low", "Medium", "High"]);
    let rt = pick(rng, &["Yes", "No"]);
    let res = subset(rng, &RESOLUTION, false);
    vec![
        id.to_string(),
        format!("{}. Author", &id[1..]),
        pick(rng, &AUTHORS),
        rng.gen_range(2012..2025).to_string(),
        subset(rng, &PLACES, true),
        subset(rng, &PARTS, true),
        subset(rng, &SENSORS, false),
        maybe_na(rng, gestures),
        maybe_na(rng, disc),
        pick(rng, &["Yes", "Partly", "No"]),
        maybe_na(rng, rt),
        pick(rng, &["Yes", "No"]),
        maybe_na(rng, res),
        "notes".into(),
        subset(rng, &KEYWORDS, true),
    ]
}

pub const HEADER: &str = "study_id,authors,Main Author,Year,Location,Input Body Part,Sensors,Number of Selected Gestures,Discreetness,Hands-Free,Real-Time Processing,Usability Evaluation,Resolution,Study Notes,Keywords";

pub fn to_csv(rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER.split(',')).unwrap();
    for r in rows {
        w.write_record(r).unwrap();
    }
    w.into_inner().unwrap()
}

// ---- random filters and a cell-level filter oracle ----

pub fn observed_labels(rows: &[BTreeMap<String, String>], column: &str) -> Vec<String> {
    let set: BTreeSet<String> = rows
        .iter()
        .flat_map(|r| r[column].split(';').map(|s| s.trim().to_string()).collect::<Vec<_>>())
        .filter(|s| !s.is_empty() && s != "N/A")
        .collect();
    set.into_iter().collect()
}

pub fn random_filter<R: Rng>(
    rng: &mut R,
    schema: &Schema,
    rows: &[BTreeMap<String, String>],
) -> serde_json::Value {
    let names: Vec<&str> =
        schema.criteria().iter().filter(|c| c.kind != CriterionKind::Text).map(|c| c.name.as_str()).collect();
    let mut spec = serde_json::Map::new();
    let k = rng.gen_range(0..=3);
    for name in names.choose_multiple(rng, k) {
        let c = schema.get(name).unwrap();
        let mut f = serde_json::Map::new();
        match c.kind {
            CriterionKind::Numeric => {
                let a = if c.name == "Year" { rng.gen_range(2014..2024) } else { rng.gen_range(0..20) };
                let b = a + rng.gen_range(0..8);
                f.insert("numeric_range".into(), serde_json::json!([a as f64, b as f64]));
            }
            CriterionKind::Ordinal if rng.gen_bool(0.5) => {
                let k = rng.gen_range(1..=c.answer_options.len());
                let levels: Vec<&String> = c.answer_options.choose_multiple(rng, k).collect();
                f.insert("ordinal_levels".into(), serde_json::json!(levels));
            }
            _ => {
                let mut pool = observed_labels(rows, name);
                if pool.is_empty() {
                    pool.push("Yes".into());
                }
                let k = rng.gen_range(1..=pool.len().min(2));
                let labels: Vec<&String> = pool.choose_multiple(rng, k).collect();
                let key = if rng.gen_bool(0.6) { "include" } else { "exclude" };
                f.insert(key.into(), serde_json::json!(labels));
            }
        }
        if rng.gen_bool(0.4) {
            f.insert("include_na".into(), serde_json::json!(false));
        }
        spec.insert(name.to_string(), serde_json::Value::Object(f));
    }
    serde_json::Value::Object(spec)
}

fn cell_matches(c: &studyscope::model::Criterion, cell: &str, f: &serde_json::Value) -> bool {
    let labels: Vec<String> = if c.kind == CriterionKind::Categorical && c.multi_valued {
        cell.split(';').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
    } else if cell.is_empty() || cell == "N/A" {
        Vec::new()
    } else {
        vec![cell.to_string()]
    };
    if cell == "N/A" || labels.is_empty() {
        return f.get("include_na").and_then(|v| v.as_bool()).unwrap_or(true);
    }
    let list = |key: &str| -> Option<Vec<String>> {
        f.get(key).map(|v| v.as_array().unwrap().iter().map(|x| x.as_str().unwrap().to_string()).collect())
    };
    if let Some(inc) = list("include") {
        if !labels.iter().any(|l| inc.contains(l)) {
            return false;
        }
    }
    if let Some(exc) = list("exclude") {
        if labels.iter().any(|l| exc.contains(l)) {
            return false;
        }
    }
    if let Some(levels) = list("ordinal_levels") {
        if !levels.contains(&labels[0]) {
            return false;
        }
    }
    if let Some(r) = f.get("numeric_range") {
        let v: f64 = cell.parse().unwrap();
        if v < r[0].as_f64().unwrap() || v > r[1].as_f64().unwrap() {
            return false;
        }
    }
    true
}

/// Ids whose raw cells satisfy every criterion filter, ordered by (year, id).
pub fn oracle_filter(
    schema: &Schema,
    rows: &[BTreeMap<String, String>],
    spec: &serde_json::Value,
) -> Vec<String> {
    let mut hits: Vec<(i32, String)> = rows
        .iter()
        .filter(|r| {
            spec.as_object()
                .unwrap()
                .iter()
                .all(|(name, f)| cell_matches(schema.get(name).unwrap(), &r[name], f))
        })
        .map(|r| (r["Year"].parse().unwrap(), r["study_id"].clone()))
        .collect();
    hits.sort();
    hits.into_iter().map(|(_, id)| id).collect()
}

// ---- in-process HTTP ----

pub struct Reply {
    pub status: axum::http::StatusCode,
    pub headers: axum::http::HeaderMap,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.body)
            .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.body)))
    }
}

pub fn query_string(pairs: &[(&str, &str)]) -> String {
    let mut s = form_urlencoded::Serializer::new(String::new());
    for (k, v) in pairs {
        s.append_pair(k, v);
    }
    s.finish()
}

pub async fn send(app: &axum::Router, req: axum::http::Request<axum::body::Body>) -> Reply {
    use http_body_util::BodyExt;
    use tower::ServiceExt;
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let headers = res.headers().clone();
    let body = res.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, headers, body }
}

pub async fn get(app: &axum::Router, path: &str, params: &[(&str, &str)]) -> Reply {
    let uri = if params.is_empty() { path.to_string() } else { format!("{path}?{}", query_string(params)) };
    let req = axum::http::Request::get(uri).body(axum::body::Body::empty()).unwrap();
    send(app, req).await
}

pub async fn post_json(
    app: &axum::Router,
    path: &str,
    body: &serde_json::Value,
    token: Option<&str>,
) -> Reply {
    let mut req = axum::http::Request::post(path).header("content-type", "application/json");
    if let Some(t) = token {
        req = req.header("x-maintainer-token", t);
    }
    send(app, req.body(axum::body::Body::from(body.to_string())).unwrap()).await
}

pub fn csv_data_rows(bytes: &[u8]) -> usize {
    csv::Reader::from_reader(bytes).records().collect::<Result<Vec<_>, _>>().unwrap().len()
}

// ---- citation and author fixtures ----

pub fn bib(key: &str, title: &str, year: i32, author: &str) -> BibEntry {
    BibEntry {
        entry_type: "article".into(),
        key: key.into(),
        fields: BTreeMap::from([
            ("title".into(), title.into()),
            ("year".into(), year.to_string()),
            ("author".into(), author.into()),
        ]),
    }
}

pub fn record(id: &str, year: i32, authors: &[&str], entry: Option<BibEntry>) -> StudyRecord {
    StudyRecord {
        study_id: id.into(),
        year,
        values: BTreeMap::new(),
        authors: authors.iter().map(|s| s.to_string()).collect(),
        abstract_text: String::new(),
        bib_entry: entry,
    }
}

pub struct WordSource {
    rng: rand_chacha::ChaCha8Rng,
    used: BTreeSet<String>,
}

impl WordSource {
    pub fn fresh(&mut self) -> String {
        loop {
            let len = self.rng.gen_range(5..9);
            let w: String = (0..len).map(|_| self.rng.gen_range(b'a'..=b'z') as char).collect();
            if self.used.insert(w.clone()) {
                return w;
            }
        }
    }
}

/// Oracle score: title Jaccard over lowercase word sets, plus matching year
/// and first-author family.
pub fn expected_score(reference: &str, target: &str) -> f64 {
    let a: BTreeSet<String> = words(reference).into_iter().collect();
    let b: BTreeSet<String> = words(target).into_iter().collect();
    let j = a.intersection(&b).count() as f64 / a.union(&b).count() as f64;
    0.7 * j + 0.2 + 0.1
}

pub struct CitationFixture {
    pub records: Vec<StudyRecord>,
    pub references: BTreeMap<String, Vec<BibEntry>>,
    /// (citing, cited, oracle score) for every true reference.
    pub truth: Vec<(String, String, f64)>,
}

/// Twenty studies with disjoint title vocabularies. Each cites two others
/// through titles perturbed by 0 to 2 token edits, plus one decoy.
pub fn citation_fixture(seed: u64) -> CitationFixture {
    use rand::SeedableRng;
    let mut src = WordSource { rng: rand_chacha::ChaCha8Rng::seed_from_u64(seed), used: BTreeSet::new() };
    let n = 20;
    let titles: Vec<Vec<String>> = (0..n).map(|_| (0..8).map(|_| src.fresh()).collect()).collect();
    let family = |i: usize| format!("Fam{}", (b'a' + i as u8) as char);
    let records: Vec<StudyRecord> = (0..n)
        .map(|i| {
            let id = format!("c{i:02}");
            let author = format!("{}, Ana", family(i));
            let entry = bib(&id, &titles[i].join(" "), 2000 + i as i32, &author);
            record(&id, 2000 + i as i32, &[], Some(entry))
        })
        .collect();

    let mut references: BTreeMap<String, Vec<BibEntry>> = BTreeMap::new();
    let mut truth: Vec<(String, String, f64)> = Vec::new();
    let mut op = 0usize;
    for i in 0..n {
        let citing = format!("c{i:02}");
        let mut refs = Vec::new();
        for (k, target) in [(i + 1) % n, (i + 7) % n].into_iter().enumerate() {
            let mut t = titles[target].clone();
            let edits = op % 3;
            for e in 0..edits {
                let at = (op + e) % t.len();
                match (op / 3 + e) % 3 {
                    0 => t[at] = src.fresh(),
                    1 => {
                        t.remove(at);
                    }
                    _ => t.insert(at, src.fresh()),
                }
            }
            op += 1;
            let title = t.join(" ");
            let score = expected_score(&title, &titles[target].join(" "));
            truth.push((citing.clone(), format!("c{target:02}"), score));
            refs.push(bib(
                &format!("t{k}"),
                &title,
                2000 + target as i32,
                &format!("{}, Ana", family(target)),
            ));
        }
        let decoy: Vec<String> = (0..8).map(|_| src.fresh()).collect();
        refs.push(bib("decoy", &decoy.join(" "), 1990 + i as i32, "Nobody, Decoy"));
        references.insert(citing, refs);
    }

    CitationFixture { records, references, truth }
}

pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for i in 1..=a.len() {
        let mut cur = vec![i; b.len() + 1];
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}
