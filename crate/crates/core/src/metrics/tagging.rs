//! Part-of-speech tagging and token counting.
//!
//! The crate does not tag text itself. Tags come either from the scorer
//! sidecar's `/tag` endpoint ([`SidecarTagger`]) or from canned tables
//! ([`FixtureTagger`], loadable from JSONL or CoNLL-U).

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;
use unicode_segmentation::UnicodeSegmentation;

use crate::corpus::Lang;
use crate::inference::Client;
use crate::util::read_utf8;
use crate::{Error, Result};

/// Universal POS tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Upos {
    Adj,
    Adp,
    Adv,
    Aux,
    Cconj,
    Det,
    Intj,
    Noun,
    Num,
    Part,
    Pron,
    Propn,
    Punct,
    Sconj,
    Sym,
    Verb,
    X,
}

const UPOS_NAMES: [(Upos, &str); 17] = [
    (Upos::Adj, "ADJ"),
    (Upos::Adp, "ADP"),
    (Upos::Adv, "ADV"),
    (Upos::Aux, "AUX"),
    (Upos::Cconj, "CCONJ"),
    (Upos::Det, "DET"),
    (Upos::Intj, "INTJ"),
    (Upos::Noun, "NOUN"),
    (Upos::Num, "NUM"),
    (Upos::Part, "PART"),
    (Upos::Pron, "PRON"),
    (Upos::Propn, "PROPN"),
    (Upos::Punct, "PUNCT"),
    (Upos::Sconj, "SCONJ"),
    (Upos::Sym, "SYM"),
    (Upos::Verb, "VERB"),
    (Upos::X, "X"),
];

impl Upos {
    /// Content words: nouns (incl. proper nouns), verbs, adjectives, adverbs.
    /// Auxiliaries count as function words.
    pub fn is_content(self) -> bool {
        matches!(self, Upos::Noun | Upos::Propn | Upos::Verb | Upos::Adj | Upos::Adv)
    }

    pub fn as_str(self) -> &'static str {
        UPOS_NAMES.iter().find(|(u, _)| *u == self).map(|(_, n)| *n).unwrap_or("X")
    }
}

impl FromStr for Upos {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        UPOS_NAMES
            .iter()
            .find(|(_, n)| *n == s)
            .map(|(u, _)| *u)
            .ok_or_else(|| Error::param(format!("unknown UPOS tag `{s}`")))
    }
}

impl fmt::Display for Upos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedToken {
    pub surface: String,
    pub upos: Upos,
}

impl TaggedToken {
    pub fn new(surface: impl Into<String>, upos: Upos) -> Self {
        TaggedToken { surface: surface.into(), upos }
    }
}

/// Tags a batch of texts in one language, preserving order.
pub trait Tagger: Send + Sync {
    fn tag(&self, lang: Lang, texts: &[&str]) -> Result<Vec<Vec<TaggedToken>>>;

    fn tag_one(&self, lang: Lang, text: &str) -> Result<Vec<TaggedToken>> {
        self.tag(lang, &[text])?
            .pop()
            .ok_or_else(|| Error::MalformedResponse("tagger returned no result".into()))
    }
}

/// Number of word tokens (punctuation excluded) in a text.
pub trait Tokenizer: Send + Sync {
    fn count_tokens(&self, lang: Lang, text: &str) -> Result<usize>;
}

/// Word count from a tagger's tokenisation.
pub fn word_count(tokens: &[TaggedToken]) -> usize {
    tokens.iter().filter(|t| t.upos != Upos::Punct).count()
}

/// Counts tokens with a tagger's tokenisation.
pub struct TaggerTokenizer<'a>(pub &'a dyn Tagger);

impl Tokenizer for TaggerTokenizer<'_> {
    fn count_tokens(&self, lang: Lang, text: &str) -> Result<usize> {
        Ok(word_count(&self.0.tag_one(lang, text)?))
    }
}

/// Tagger-free fallback: Unicode word boundaries (each Han character is a
/// word). Coarser than a real segmenter for Chinese.
#[derive(Debug, Clone, Copy, Default)]
pub struct BasicTokenizer;

impl Tokenizer for BasicTokenizer {
    fn count_tokens(&self, _lang: Lang, text: &str) -> Result<usize> {
        Ok(text.unicode_words().count())
    }
}

/// Canned tags keyed by (language, exact text).
#[derive(Debug, Clone, Default)]
pub struct FixtureTagger {
    table: HashMap<(Lang, String), Vec<TaggedToken>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TagFixtureLine {
    pub lang: String,
    pub text: String,
    pub tokens: Vec<TaggedToken>,
}

impl FixtureTagger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, lang: Lang, text: impl Into<String>, tokens: Vec<TaggedToken>) {
        self.table.insert((lang, text.into()), tokens);
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Loads JSONL lines of `{"lang", "text", "tokens": [{"surface", "upos"}]}`.
    pub fn load_jsonl(path: &Path) -> Result<Self> {
        let mut tagger = Self::new();
        for (i, line) in read_utf8(path)?.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: TagFixtureLine = serde_json::from_str(line).map_err(|e| Error::MalformedFixture {
                path: path.to_path_buf(),
                message: format!("line {}: {e}", i + 1),
            })?;
            tagger.insert(entry.lang.parse()?, entry.text, entry.tokens);
        }
        Ok(tagger)
    }

    /// Adds every sentence of a CoNLL-U file, keyed by its `# text =` line.
    /// Multiword-token ranges and empty nodes are skipped.
    pub fn add_conllu(&mut self, lang: Lang, content: &str) -> Result<usize> {
        let mut added = 0;
        let mut text: Option<String> = None;
        let mut tokens = Vec::new();
        let mut flush = |text: &mut Option<String>, tokens: &mut Vec<TaggedToken>| -> Result<()> {
            if tokens.is_empty() {
                *text = None;
                return Ok(());
            }
            let key = text.take().ok_or_else(|| Error::param("CoNLL-U sentence without `# text =` comment"))?;
            self.insert(lang, key, std::mem::take(tokens));
            added += 1;
            Ok(())
        };
        for (i, line) in content.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                flush(&mut text, &mut tokens)?;
            } else if let Some(comment) = line.strip_prefix('#') {
                if let Some(t) = comment.trim_start().strip_prefix("text =") {
                    text = Some(t.trim().to_string());
                }
            } else {
                let cols: Vec<&str> = line.split('\t').collect();
                if cols.len() < 4 {
                    return Err(Error::param(format!("CoNLL-U line {}: expected 10 columns", i + 1)));
                }
                if cols[0].contains('-') || cols[0].contains('.') {
                    continue;
                }
                tokens.push(TaggedToken::new(cols[1], cols[3].parse()?));
            }
        }
        flush(&mut text, &mut tokens)?;
        Ok(added)
    }
}

impl Tagger for FixtureTagger {
    fn tag(&self, lang: Lang, texts: &[&str]) -> Result<Vec<Vec<TaggedToken>>> {
        texts
            .iter()
            .map(|t| {
                self.table
                    .get(&(lang, (*t).to_string()))
                    .cloned()
                    .ok_or_else(|| Error::NoFixture(format!("tags ({lang}) of {t:?}")))
            })
            .collect()
    }
}

/// Largest batch the sidecar accepts per `/tag` call.
pub const TAG_BATCH_LIMIT: usize = 256;

/// Tagger backed by the sidecar's `POST /tag`.
pub struct SidecarTagger {
    client: Arc<Client>,
}

#[derive(Deserialize)]
struct TagResponse {
    tokens: Vec<TaggedToken>,
}

impl SidecarTagger {
    pub fn new(client: Arc<Client>) -> Self {
        SidecarTagger { client }
    }
}

/// JSON body of a `/tag` request.
pub fn tag_request_body(lang: Lang, texts: &[&str]) -> serde_json::Value {
    json!({ "lang": lang.code(), "texts": texts })
}

impl Tagger for SidecarTagger {
    fn tag(&self, lang: Lang, texts: &[&str]) -> Result<Vec<Vec<TaggedToken>>> {
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(TAG_BATCH_LIMIT) {
            let raw = self.client.post_json("tag", &tag_request_body(lang, chunk))?;
            let resp: Vec<TagResponse> =
                serde_json::from_str(&raw).map_err(|e| Error::MalformedResponse(format!("tag: {e}")))?;
            if resp.len() != chunk.len() {
                return Err(Error::MalformedResponse(format!(
                    "tag: {} results for {} texts",
                    resp.len(),
                    chunk.len()
                )));
            }
            out.extend(resp.into_iter().map(|r| r.tokens));
        }
        Ok(out)
    }
}
