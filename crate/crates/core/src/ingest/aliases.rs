//! Label consolidation: raw spellings mapped onto canonical labels.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::schema::Schema;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliasMap {
    by_criterion: BTreeMap<String, BTreeMap<String, String>>,
}

impl AliasMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.by_criterion.values().all(BTreeMap::is_empty)
    }

    /// Add one mapping. Rejects entries that would make the map
    /// non-idempotent (a canonical label that is itself remapped).
    pub fn insert(
        &mut self,
        criterion: &str,
        raw: impl Into<String>,
        canonical: impl Into<String>,
    ) -> Result<()> {
        let raw = raw.into().trim().to_string();
        let canonical = canonical.into().trim().to_string();
        let err = |message: String| Error::Alias { criterion: criterion.to_string(), message };
        if raw.is_empty() || canonical.is_empty() {
            return Err(err("empty label".into()));
        }
        let map = self.by_criterion.entry(criterion.to_string()).or_default();
        if let Some(target) = map.get(&canonical) {
            if *target != canonical {
                return Err(err(format!("canonical label {canonical:?} is itself mapped to {target:?}")));
            }
        }
        if raw != canonical && map.values().any(|v| *v == raw) {
            return Err(err(format!("{raw:?} is already a canonical label and cannot be remapped")));
        }
        if let Some(prev) = map.get(&raw) {
            if *prev != canonical {
                return Err(err(format!("{raw:?} mapped to both {prev:?} and {canonical:?}")));
            }
        }
        map.insert(raw, canonical);
        Ok(())
    }

    /// Load a two-column `raw,canonical` CSV (with header) for one criterion.
    pub fn load_csv(&mut self, criterion: &str, bytes: &[u8]) -> Result<()> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "raw" || &headers[1] != "canonical" {
            return Err(Error::Alias {
                criterion: criterion.to_string(),
                message: "expected header \"raw,canonical\"".into(),
            });
        }
        for row in rdr.records() {
            let row = row?;
            self.insert(criterion, &row[0], &row[1])?;
        }
        Ok(())
    }

    pub fn apply<'a>(&'a self, criterion: &str, label: &'a str) -> &'a str {
        self.by_criterion.get(criterion).and_then(|m| m.get(label)).map_or(label, String::as_str)
    }

    /// Check that every canonical label is admissible for its criterion.
    pub fn check_against(&self, schema: &Schema) -> Result<()> {
        for (name, map) in &self.by_criterion {
            let c = schema.require(name)?;
            if !c.has_closed_vocabulary() {
                continue;
            }
            for canonical in map.values() {
                if !c.answer_options.contains(canonical) {
                    return Err(Error::Alias {
                        criterion: name.clone(),
                        message: format!("canonical label {canonical:?} is not an answer option"),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.by_criterion
            .iter()
            .flat_map(|(c, m)| m.iter().map(move |(raw, canon)| (c.as_str(), raw.as_str(), canon.as_str())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn loads_csv() {
        let mut m = AliasMap::new();
        m.load_csv("Sensors", b"raw,canonical\nIMUs,IMU\nMic,Microphone\n").unwrap();
        assert_eq!(m.apply("Sensors", "IMUs"), "IMU");
        assert_eq!(m.apply("Sensors", "IMU"), "IMU");
        assert_eq!(m.apply("Location", "IMUs"), "IMUs");
    }

    #[test]
    fn rejects_chains() {
        let mut m = AliasMap::new();
        m.insert("S", "a", "b").unwrap();
        assert!(m.insert("S", "b", "c").is_err());
        let mut m = AliasMap::new();
        m.insert("S", "b", "c").unwrap();
        assert!(m.insert("S", "a", "b").is_err());
    }

    #[test]
    fn canonical_outside_closed_vocab() {
        let schema = crate::schema::default_schema();
        let mut m = AliasMap::new();
        m.insert("Resolution", "semantic", "Semantic").unwrap();
        assert!(m.check_against(&schema).is_ok());
        m.insert("Resolution", "continuous", "Continuous").unwrap();
        assert!(m.check_against(&schema).is_err());
    }

    proptest! {
        #[test]
        fn apply_is_idempotent(pairs in prop::collection::vec(("[a-e]", "[a-e]"), 0..12), probe in "[a-e]") {
            let mut m = AliasMap::new();
            for (raw, canon) in pairs {
                let _ = m.insert("C", raw, canon);
            }
            let once = m.apply("C", &probe).to_string();
            prop_assert_eq!(m.apply("C", &once), once.as_str());
        }
    }
}
