//! Model archive: pretty-printed JSON with fixed key order.
//!
//! Patterns are stored as ascending token-index lists so the archive can be
//! read and diffed by hand. Each dictionary also carries its packed words
//! (little-endian `i64`, base64) which are checked against the lists on load.

use std::path::Path;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bitpack::{PackedMatrix, PackedRow};
use crate::error::{Error, Result};
use crate::infer::{ClassifierParams, StatsMode};
use crate::mine::{pattern_score, Pattern};
use crate::model::{ClassifierSettings, Model};
use crate::pipeline::{DatasetSchema, TokenVocabulary};
use crate::purify::PureDictionary;
use crate::Class;

pub const FORMAT_NAME: &str = "igdetect-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// SHA-256 of the training file, hex.
    pub input_sha256: String,
    pub tool_version: String,
    /// Seconds since the Unix epoch.
    pub created_unix: u64,
}

impl Provenance {
    /// Provenance for `data`, stamped now (or at `SOURCE_DATE_EPOCH` when set).
    pub fn for_input(data: &[u8]) -> Self {
        let created_unix = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or_else(|| {
                std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0)
            });
        Self {
            input_sha256: sha256_hex(data),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix,
        }
    }
}

pub fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Serialize, Deserialize)]
struct StoredPattern {
    tokens: Vec<usize>,
    support: u64,
    score: i64,
}

#[derive(Serialize, Deserialize)]
struct StoredDictionary {
    class: Class,
    total_score: i64,
    patterns: Vec<StoredPattern>,
    packed_words: String,
}

#[derive(Serialize, Deserialize)]
struct StoredDictionaries {
    attack: StoredDictionary,
    normal: StoredDictionary,
}

#[derive(Serialize, Deserialize)]
struct StoredClassifier {
    r: f64,
    stats_mode: StatsMode,
    frozen: Option<ClassifierParams>,
}

#[derive(Serialize, Deserialize)]
struct StoredArchive {
    format: String,
    format_version: u32,
    provenance: Provenance,
    schema: DatasetSchema,
    vocabulary: Vec<String>,
    classifier: StoredClassifier,
    dictionaries: StoredDictionaries,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelArchive {
    pub provenance: Provenance,
    pub model: Model,
}

fn encode_words(m: &PackedMatrix) -> String {
    let bytes: Vec<u8> = m.as_words().iter().flat_map(|w| w.to_le_bytes()).collect();
    B64.encode(bytes)
}

fn decode_words(text: &str) -> Result<Vec<i64>> {
    let bytes = B64
        .decode(text)
        .map_err(|e| Error::Archive(format!("packed words: {e}")))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Archive("packed words are not a whole number of i64".into()));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| i64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

fn store_dictionary(d: &PureDictionary) -> StoredDictionary {
    StoredDictionary {
        class: d.class(),
        total_score: d.total_score(),
        patterns: d
            .patterns()
            .iter()
            .map(|p| StoredPattern {
                tokens: p.bits.unpack(),
                support: p.support,
                score: p.score,
            })
            .collect(),
        packed_words: encode_words(d.matrix()),
    }
}

fn load_dictionary(s: StoredDictionary, expected: Class, len: usize) -> Result<PureDictionary> {
    if s.class != expected {
        return Err(Error::Archive(format!("{expected} dictionary tagged {}", s.class)));
    }
    let mut patterns = Vec::with_capacity(s.patterns.len());
    for (i, sp) in s.patterns.into_iter().enumerate() {
        if sp.tokens.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Archive(format!("{expected} pattern {i}: token list not strictly ascending")));
        }
        let bits = PackedRow::pack(sp.tokens.iter().copied(), len)
            .map_err(|e| Error::Archive(format!("{expected} pattern {i}: {e}")))?;
        let size = bits.popcount();
        if size == 0 || sp.support == 0 || pattern_score(sp.support, size)? != sp.score {
            return Err(Error::Archive(format!("{expected} pattern {i}: inconsistent size/support/score")));
        }
        patterns.push(Pattern {
            bits,
            size,
            class: expected,
            support: sp.support,
            score: sp.score,
        });
    }
    let dict = PureDictionary::new(expected, len, patterns)?;
    if dict.total_score() != s.total_score {
        return Err(Error::Archive(format!("{expected} total score does not match its patterns")));
    }
    if decode_words(&s.packed_words)? != dict.matrix().as_words() {
        return Err(Error::Archive(format!("{expected} packed words disagree with token lists")));
    }
    Ok(dict)
}

impl ModelArchive {
    pub fn new(model: Model, provenance: Provenance) -> Self {
        Self { provenance, model }
    }

    pub fn to_json(&self) -> Result<String> {
        let m = &self.model;
        let stored = StoredArchive {
            format: FORMAT_NAME.into(),
            format_version: FORMAT_VERSION,
            provenance: self.provenance.clone(),
            schema: m.schema.clone(),
            vocabulary: m.vocabulary.tokens().to_vec(),
            classifier: StoredClassifier {
                r: m.classifier.r,
                stats_mode: m.classifier.stats_mode,
                frozen: m.classifier.frozen,
            },
            dictionaries: StoredDictionaries {
                attack: store_dictionary(&m.attack),
                normal: store_dictionary(&m.normal),
            },
        };
        let mut text = serde_json::to_string_pretty(&stored)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: StoredArchive = serde_json::from_str(text)
            .map_err(|e| Error::Archive(e.to_string()))?;
        if s.format != FORMAT_NAME {
            return Err(Error::Archive(format!("not a model archive (format `{}`)", s.format)));
        }
        if s.format_version != FORMAT_VERSION {
            return Err(Error::Archive(format!(
                "unsupported format version {} (this build reads {FORMAT_VERSION})",
                s.format_version
            )));
        }
        let vocabulary = TokenVocabulary::from_tokens(s.vocabulary)
            .map_err(|e| Error::Archive(e.to_string()))?;
        let len = vocabulary.len();
        let attack = load_dictionary(s.dictionaries.attack, Class::Attack, len)?;
        let normal = load_dictionary(s.dictionaries.normal, Class::Normal, len)?;
        if s.schema
            .columns
            .iter()
            .filter(|c| c.kind == crate::pipeline::ColumnKind::Label)
            .count()
            != 1
        {
            return Err(Error::Archive("schema must have exactly one label column".into()));
        }
        Ok(Self {
            provenance: s.provenance,
            model: Model {
                schema: s.schema,
                vocabulary,
                attack,
                normal,
                classifier: ClassifierSettings {
                    r: s.classifier.r,
                    stats_mode: s.classifier.stats_mode,
                    frozen: s.classifier.frozen,
                },
            },
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_hex_sha256() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn word_codec_round_trips_negative_words() {
        let m = PackedMatrix::from_words(vec![-1, 5, i64::MIN], 64, crate::ClassTag::Attack).unwrap();
        assert_eq!(decode_words(&encode_words(&m)).unwrap(), m.as_words());
        assert!(decode_words("AAA=").is_err());
    }

    #[test]
    fn rejects_foreign_json() {
        assert!(matches!(ModelArchive::from_json("{}"), Err(Error::Archive(_))));
        assert!(matches!(ModelArchive::from_json("not json"), Err(Error::Archive(_))));
    }
}
