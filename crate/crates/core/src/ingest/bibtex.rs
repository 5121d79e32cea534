//! A tolerant BibTeX reader.
//!
//! Entry-level problems (bad key, malformed field) are reported as warnings
//! and the entry is skipped. Only an entry whose delimiters never balance is
//! a hard error, since nothing after it can be located reliably.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::ingest::decode_utf8;
use crate::model::BibEntry;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BibWarning {
    /// Which document the warning came from ("corpus" or a study id).
    pub source: String,
    pub key: Option<String>,
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bibliography {
    /// Corpus entries by citation key.
    pub entries: BTreeMap<String, BibEntry>,
    /// Referenced works per citing study, in document order.
    pub references: BTreeMap<String, Vec<BibEntry>>,
    pub warnings: Vec<BibWarning>,
}

/// Parse one BibTeX document. Entries come back in document order,
/// duplicates included.
pub fn parse_bibtex(text: &str) -> Result<(Vec<BibEntry>, Vec<BibWarning>)> {
    let (entries, warnings) = parse_with_offsets(text)?;
    Ok((entries.into_iter().map(|(e, _)| e).collect(), warnings))
}

/// An entry and the byte offset where it starts.
type Located = (BibEntry, usize);

/// As [`parse_bibtex`], keeping each entry's byte offset.
fn parse_with_offsets(text: &str) -> Result<(Vec<Located>, Vec<BibWarning>)> {
    let mut parser = Parser { text, bytes: text.as_bytes(), macros: HashMap::new(), warnings: Vec::new() };
    let entries = parser.run()?;
    Ok((entries, parser.warnings))
}

pub fn load_bibliography(corpus: &[u8], references: &[(String, Vec<u8>)]) -> Result<Bibliography> {
    let mut bib = Bibliography::default();
    let (entries, warnings) = parse_with_offsets(decode_utf8(corpus)?)?;
    bib.warnings.extend(warnings.into_iter().map(|w| BibWarning { source: "corpus".into(), ..w }));
    for (entry, offset) in dedupe("corpus", entries, &mut bib.warnings) {
        if entry.year().is_none() {
            bib.warnings.push(BibWarning {
                source: "corpus".into(),
                key: Some(entry.key.clone()),
                offset,
                message: "entry has no year".into(),
            });
        }
        bib.entries.insert(entry.key.clone(), entry);
    }
    for (study, bytes) in references {
        let text = decode_utf8(bytes)?;
        let (entries, warnings) = parse_with_offsets(text).map_err(|e| match e {
            Error::Bibtex { offset, message } => {
                Error::Bibtex { offset, message: format!("references of {study}: {message}") }
            }
            other => other,
        })?;
        bib.warnings.extend(warnings.into_iter().map(|w| BibWarning { source: study.clone(), ..w }));
        let mut list = Vec::new();
        for (entry, offset) in dedupe(study, entries, &mut bib.warnings) {
            if entry.year().is_none() {
                bib.warnings.push(BibWarning {
                    source: study.clone(),
                    key: Some(entry.key.clone()),
                    offset,
                    message: "reference has no year".into(),
                });
            }
            list.push(entry);
        }
        bib.references.entry(study.clone()).or_default().extend(list);
    }
    Ok(bib)
}

/// Keep the last entry for each key, in the position of its last
/// occurrence. Offsets are not tracked past parsing, so 0 is reported.
fn dedupe(
    source: &str,
    entries: Vec<(BibEntry, usize)>,
    warnings: &mut Vec<BibWarning>,
) -> Vec<(BibEntry, usize)> {
    let mut last: HashMap<String, usize> = HashMap::new();
    for (i, (e, offset)) in entries.iter().enumerate() {
        if last.insert(e.key.clone(), i).is_some() {
            warnings.push(BibWarning {
                source: source.to_string(),
                key: Some(e.key.clone()),
                offset: *offset,
                message: "duplicate citation key, last entry wins".into(),
            });
        }
    }
    entries.into_iter().enumerate().filter(|(i, (e, _))| last[&e.key] == *i).map(|(_, entry)| entry).collect()
}

struct Parser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    macros: HashMap<String, String>,
    warnings: Vec<BibWarning>,
}

impl<'a> Parser<'a> {
    fn warn(&mut self, key: Option<&str>, offset: usize, message: impl Into<String>) {
        self.warnings.push(BibWarning {
            source: String::new(),
            key: key.map(str::to_string),
            offset,
            message: message.into(),
        });
    }

    fn run(&mut self) -> Result<Vec<(BibEntry, usize)>> {
        let mut entries = Vec::new();
        let mut pos = 0;
        while let Some(rel) = self.text[pos..].find('@') {
            let start = pos + rel;
            let mut p = start + 1;
            while p < self.bytes.len() && self.bytes[p].is_ascii_alphabetic() {
                p += 1;
            }
            let entry_type = self.text[start + 1..p].to_ascii_lowercase();
            let open = skip_ws(self.bytes, p);
            if entry_type.is_empty() || open >= self.bytes.len() || !matches!(self.bytes[open], b'{' | b'(') {
                self.warn(None, start, "stray '@' outside an entry");
                pos = start + 1;
                continue;
            }
            let end = find_close(self.bytes, open).ok_or_else(|| Error::Bibtex {
                offset: start,
                message: format!("unterminated @{entry_type} entry"),
            })?;
            let body = &self.text[open + 1..end];
            match entry_type.as_str() {
                "comment" | "preamble" => {}
                "string" => self.parse_string_macro(body, open + 1),
                _ => match self.parse_entry(&entry_type, body, open + 1) {
                    Ok(entry) => entries.push((entry, start)),
                    Err((key, msg)) => {
                        let msg = format!("skipped entry: {msg}");
                        self.warn(key.as_deref(), start, msg)
                    }
                },
            }
            pos = end + 1;
        }
        Ok(entries)
    }

    fn parse_string_macro(&mut self, body: &str, base: usize) {
        let mut cur = Cursor::new(body);
        let result = (|| {
            let name = cur.ident().ok_or("expected macro name")?;
            cur.skip_ws();
            cur.expect(b'=')?;
            let value = self.parse_value(&mut cur)?;
            Ok::<_, String>((name.to_ascii_lowercase(), value))
        })();
        match result {
            Ok((name, value)) => {
                self.macros.insert(name, value);
            }
            Err(msg) => self.warn(None, base, format!("bad @string: {msg}")),
        }
    }

    fn parse_entry(
        &mut self,
        entry_type: &str,
        body: &str,
        base: usize,
    ) -> std::result::Result<BibEntry, (Option<String>, String)> {
        let Some(comma) = body.find(',') else {
            let key = body.trim();
            if is_valid_key(key) {
                return Ok(BibEntry {
                    entry_type: entry_type.to_string(),
                    key: key.to_string(),
                    fields: BTreeMap::new(),
                });
            }
            return Err((None, "missing citation key".into()));
        };
        let key = body[..comma].trim().to_string();
        if !is_valid_key(&key) {
            return Err((None, format!("invalid citation key {key:?}")));
        }
        let mut fields = BTreeMap::new();
        let mut cur = Cursor::new(&body[comma + 1..]);
        loop {
            cur.skip_ws_and_commas();
            if cur.at_end() {
                break;
            }
            let field_at = base + comma + 1 + cur.pos;
            let name = cur
                .ident()
                .ok_or_else(|| (Some(key.clone()), format!("expected field name at byte {field_at}")))?
                .to_ascii_lowercase();
            cur.skip_ws();
            cur.expect(b'=').map_err(|m| (Some(key.clone()), format!("{name}: {m}")))?;
            let value =
                self.parse_value(&mut cur).map_err(|m| (Some(key.clone()), format!("{name}: {m}")))?;
            cur.skip_ws();
            if !cur.at_end() && cur.peek() != Some(b',') {
                return Err((Some(key.clone()), format!("{name}: expected ',' after value")));
            }
            if fields.insert(name.clone(), value).is_some() {
                self.warn(Some(&key), field_at, format!("field {name} repeated, last value kept"));
            }
        }
        Ok(BibEntry { entry_type: entry_type.to_string(), key, fields })
    }

    fn parse_value(&mut self, cur: &mut Cursor<'_>) -> std::result::Result<String, String> {
        let mut out = String::new();
        loop {
            cur.skip_ws();
            match cur.peek() {
                Some(b'{') => out.push_str(&cur.braced()?),
                Some(b'"') => out.push_str(&cur.quoted()?),
                Some(c) if c.is_ascii_alphanumeric() => {
                    let word = cur.ident().ok_or("expected value")?;
                    if word.bytes().all(|b| b.is_ascii_digit()) {
                        out.push_str(word);
                    } else {
                        let lower = word.to_ascii_lowercase();
                        match self.macros.get(&lower) {
                            Some(v) => out.push_str(v),
                            None => out.push_str(month_macro(&lower).unwrap_or(word)),
                        }
                    }
                }
                _ => return Err("expected value".into()),
            }
            cur.skip_ws();
            if cur.peek() == Some(b'#') {
                cur.pos += 1;
            } else {
                break;
            }
        }
        Ok(clean_value(&out))
    }
}

fn is_valid_key(key: &str) -> bool {
    !key.is_empty()
        && !key.chars().any(|c| c.is_whitespace() || matches!(c, '=' | '{' | '}' | '"' | '#' | '%'))
}

fn month_macro(name: &str) -> Option<&'static str> {
    Some(match name {
        "jan" => "January",
        "feb" => "February",
        "mar" => "March",
        "apr" => "April",
        "may" => "May",
        "jun" => "June",
        "jul" => "July",
        "aug" => "August",
        "sep" => "September",
        "oct" => "October",
        "nov" => "November",
        "dec" => "December",
        _ => return None,
    })
}

fn skip_ws(bytes: &[u8], mut p: usize) -> usize {
    while p < bytes.len() && bytes[p].is_ascii_whitespace() {
        p += 1;
    }
    p
}

/// Position of the delimiter closing the one at `open`.
fn find_close(bytes: &[u8], open: usize) -> Option<usize> {
    let paren = bytes[open] == b'(';
    let mut depth = 0usize;
    for (i, &b) in bytes.iter().enumerate().skip(open) {
        match b {
            b'{' => depth += 1,
            b'}' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 && !paren {
                    return Some(i);
                }
            }
            b')' if paren && depth == 0 && i > open => return Some(i),
            b'(' if paren && i == open => {}
            _ => {}
        }
    }
    None
}

struct Cursor<'a> {
    s: &'a str,
    b: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(s: &'a str) -> Self {
        Cursor { s, b: s.as_bytes(), pos: 0 }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.b.len()
    }

    fn peek(&self) -> Option<u8> {
        self.b.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        self.pos = skip_ws(self.b, self.pos);
    }

    fn skip_ws_and_commas(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_ascii_whitespace() || c == b',' {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn expect(&mut self, c: u8) -> std::result::Result<(), String> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(format!("expected '{}'", c as char))
        }
    }

    fn ident(&mut self) -> Option<&'a str> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || matches!(c, b'_' | b'-' | b':' | b'.' | b'+' | b'/') {
                self.pos += 1;
            } else {
                break;
            }
        }
        (self.pos > start).then(|| &self.s[start..self.pos])
    }

    fn braced(&mut self) -> std::result::Result<String, String> {
        let start = self.pos + 1;
        let mut depth = 0usize;
        while let Some(c) = self.peek() {
            match c {
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        self.pos += 1;
                        return Ok(self.s[start..self.pos - 1].to_string());
                    }
                }
                _ => {}
            }
            self.pos += 1;
        }
        Err("unbalanced braces in value".into())
    }

    fn quoted(&mut self) -> std::result::Result<String, String> {
        self.pos += 1;
        let start = self.pos;
        let mut depth = 0usize;
        while let Some(c) = self.peek() {
            match c {
                b'{' => depth += 1,
                b'}' => depth = depth.saturating_sub(1),
                b'"' if depth == 0 => {
                    self.pos += 1;
                    return Ok(self.s[start..self.pos - 1].to_string());
                }
                _ => {}
            }
            self.pos += 1;
        }
        Err("unterminated quoted value".into())
    }
}

/// Fold common LaTeX accent commands into Unicode, drop grouping braces and
/// collapse whitespace.
fn clean_value(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut chars = raw.chars().peekable();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        let Some(&cmd) = chars.peek() else {
            out.push(c);
            break;
        };
        let combining = match cmd {
            '"' => Some('\u{0308}'),
            '\'' => Some('\u{0301}'),
            '`' => Some('\u{0300}'),
            '^' => Some('\u{0302}'),
            '~' => Some('\u{0303}'),
            '=' => Some('\u{0304}'),
            '.' => Some('\u{0307}'),
            'c' => Some('\u{0327}'),
            'v' => Some('\u{030C}'),
            'u' => Some('\u{0306}'),
            _ => None,
        };
        match (cmd, combining) {
            ('&' | '%' | '_' | '$' | '#' | '{' | '}', _) => {
                chars.next();
                out.push(cmd);
            }
            (_, Some(mark)) => {
                chars.next();
                if matches!(cmd, 'c' | 'v' | 'u') {
                    // Letter commands need a following brace or space.
                    while chars.peek() == Some(&' ') {
                        chars.next();
                    }
                }
                let braced = chars.peek() == Some(&'{');
                if braced {
                    chars.next();
                }
                match chars.next() {
                    Some(base) if base.is_alphabetic() => {
                        out.push(base);
                        out.push(mark);
                    }
                    Some(other) => out.push(other),
                    None => {}
                }
                if braced && chars.peek() == Some(&'}') {
                    chars.next();
                }
            }
            _ => out.push(c),
        }
    }
    let stripped: String = out.chars().filter(|c| *c != '{' && *c != '}').collect();
    stripped.split_whitespace().collect::<Vec<_>>().join(" ").nfc().collect()
}
