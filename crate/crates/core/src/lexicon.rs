//! Sense inventories with exemplar sentences.
//!
//! File format: one JSON object per line,
//! `{"lemma": str, "pos": "noun"|"verb"|"adj", "senses": [{"id": str, "examples": [str]}]}`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{LemmaKey, Pos};
use crate::error::{Result, WsiError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexiconSense {
    pub id: String,
    #[serde(default)]
    pub examples: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexiconEntry {
    pub lemma: String,
    pub pos: Pos,
    pub senses: Vec<LexiconSense>,
}

impl LexiconEntry {
    pub fn key(&self) -> LemmaKey {
        LemmaKey::new(self.lemma.clone(), self.pos)
    }

    pub fn sense_count(&self) -> usize {
        self.senses.len()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    pub entries: BTreeMap<LemmaKey, LexiconEntry>,
}

impl Lexicon {
    pub fn get(&self, key: &LemmaKey) -> Option<&LexiconEntry> {
        self.entries.get(key)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, entry: LexiconEntry) -> Result<()> {
        let key = entry.key();
        if self.entries.contains_key(&key) {
            return Err(WsiError::DuplicateId(format!("lexicon entry {key}")));
        }
        self.entries.insert(key, entry);
        Ok(())
    }

    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut lexicon = Lexicon::default();
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| WsiError::io("<lexicon>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: LexiconEntry = serde_json::from_str(&line).map_err(|e| WsiError::MalformedLine {
                line: n + 1,
                message: e.to_string(),
            })?;
            lexicon.insert(entry)?;
        }
        Ok(lexicon)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| WsiError::io(path, e))?;
        Self::parse(BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_entries() {
        let text = r#"{"lemma":"bank","pos":"noun","senses":[{"id":"s1","examples":["a b"]},{"id":"s2"}]}

{"lemma":"run","pos":"verb","senses":[]}
"#;
        let lex = Lexicon::parse(text.as_bytes()).unwrap();
        assert_eq!(lex.len(), 2);
        let bank = lex.get(&LemmaKey::new("bank", Pos::Noun)).unwrap();
        assert_eq!(bank.sense_count(), 2);
        assert!(bank.senses[1].examples.is_empty());
    }

    #[test]
    fn duplicate_entry_rejected() {
        let line = r#"{"lemma":"x","pos":"adj","senses":[]}"#;
        let text = format!("{line}\n{line}\n");
        assert!(Lexicon::parse(text.as_bytes()).is_err());
    }
}
