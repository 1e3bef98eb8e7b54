//! Datasets, vocabularies, embedding files and synonym lexicons.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{TokenSequence, PAD, UNK};
use crate::scalar::Scalar;

pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation() || matches!(c, '“' | '”' | '‘' | '’' | '…' | '–' | '—')
}

/// Lowercases, splits on whitespace, and splits leading/trailing punctuation
/// characters off each word as their own tokens.
pub fn tokenize(text: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let word = word.to_lowercase();
        let chars: Vec<char> = word.chars().collect();
        let start = chars.iter().position(|&c| !is_punct(c));
        let Some(start) = start else {
            out.extend(chars.iter().map(|c| c.to_string()));
            continue;
        };
        let end = chars.iter().rposition(|&c| !is_punct(c)).unwrap() + 1;
        out.extend(chars[..start].iter().map(|c| c.to_string()));
        out.push(chars[start..end].iter().collect());
        out.extend(chars[end..].iter().map(|c| c.to_string()));
    }
    if out.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(out)
}

/// One labeled line of a dataset file, tokenized but not yet encoded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledText {
    pub label: usize,
    pub words: Vec<String>,
}

/// An encoded, labeled example.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub label: usize,
    pub tokens: TokenSequence,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub split: String,
    pub examples: Vec<Example>,
}

/// Parses `label<TAB>text` lines. Blank lines are skipped; CRLF is accepted.
pub fn parse_dataset(text: &str) -> Result<Vec<LabeledText>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (label, body) = line.split_once('\t').ok_or_else(|| Error::Parse {
            line: line_no,
            msg: "expected `label<TAB>text`".into(),
        })?;
        let label = match label.trim() {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::Label {
                    line: line_no,
                    label: other.to_string(),
                })
            }
        };
        let words = tokenize(body).map_err(|_| Error::Parse {
            line: line_no,
            msg: "text is empty after tokenization".into(),
        })?;
        out.push(LabeledText { label, words });
    }
    Ok(out)
}

pub fn load_texts(path: impl AsRef<Path>) -> Result<Vec<LabeledText>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text)
}

/// Loads and encodes a dataset file. The split name is the file stem.
pub fn load_dataset(path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<Dataset> {
    let path = path.as_ref();
    let texts = load_texts(path)?;
    let split = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Dataset {
        split,
        examples: vocab.encode_all(&texts),
    })
}

/// Token ↔ id map with PAD = 0 and UNK = 1 reserved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    index: HashMap<String, usize>,
    tokens: Vec<String>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocabulary {
    /// Just PAD and UNK.
    pub fn new() -> Self {
        let mut v = Self {
            index: HashMap::new(),
            tokens: Vec::new(),
        };
        v.insert(PAD_TOKEN);
        v.insert(UNK_TOKEN);
        v
    }

    /// Ids follow first occurrence in `texts`.
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a LabeledText>) -> Self {
        let mut v = Self::new();
        for t in texts {
            for w in &t.words {
                v.insert(w);
            }
        }
        v
    }

    /// Returns the id of `token`, adding it if new.
    pub fn insert(&mut self, token: &str) -> usize {
        if let Some(&id) = self.index.get(token) {
            return id;
        }
        let id = self.tokens.len();
        self.tokens.push(token.to_string());
        self.index.insert(token.to_string(), id);
        id
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn id(&self, token: &str) -> usize {
        self.get(token).unwrap_or(UNK)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn encode(&self, words: &[String]) -> Result<TokenSequence> {
        let ids = words.iter().map(|w| self.id(w)).collect();
        TokenSequence::new(words.to_vec(), ids)
    }

    pub fn decode(&self, ids: &[usize]) -> Vec<String> {
        ids.iter()
            .map(|&i| self.token(i).unwrap_or(UNK_TOKEN).to_string())
            .collect()
    }

    pub fn encode_all(&self, texts: &[LabeledText]) -> Vec<Example> {
        texts
            .iter()
            .map(|t| Example {
                label: t.label,
                tokens: self.encode(&t.words).expect("tokenizer never yields empty texts"),
            })
            .collect()
    }

    /// One token per line, in id order.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = self.tokens.join("\n");
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut v = Self {
            index: HashMap::new(),
            tokens: Vec::new(),
        };
        for (i, line) in text.lines().enumerate() {
            let tok = line.trim_end_matches('\r');
            if v.index.contains_key(tok) {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("duplicate vocabulary entry `{tok}`"),
                });
            }
            v.insert(tok);
        }
        if v.token(PAD) != Some(PAD_TOKEN) || v.token(UNK) != Some(UNK_TOKEN) {
            return Err(Error::Parse {
                line: 1,
                msg: "vocabulary must start with <pad> and <unk>".into(),
            });
        }
        Ok(v)
    }
}

/// Reads a `word v1 … vd` text file into a `|V| × d` table.
///
/// Rows for words missing from the file (UNK included) are drawn from
/// uniform(−0.1, 0.1) with `rng`; the PAD row is zero.
pub fn parse_embeddings<T: Scalar, R: Rng + ?Sized>(
    text: &str,
    vocab: &Vocabulary,
    rng: &mut R,
) -> Result<Array2<T>> {
    let mut dim: Option<usize> = None;
    let mut found: Vec<(usize, Vec<T>)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let mut toks = line.split_whitespace();
        let Some(word) = toks.next() else { continue };
        let values: Vec<T> = toks
            .map(|t| {
                t.parse::<T>().map_err(|_| Error::Parse {
                    line: i + 1,
                    msg: format!("bad real `{t}`"),
                })
            })
            .collect::<Result<_>>()?;
        match dim {
            None if values.is_empty() => {
                return Err(Error::Dimension(format!("line {}: no vector values", i + 1)))
            }
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::Dimension(format!(
                    "line {}: {} values, expected {d}",
                    i + 1,
                    values.len()
                )))
            }
            Some(_) => {}
        }
        if let Some(id) = vocab.get(word) {
            found.push((id, values));
        }
    }
    let d = dim.ok_or_else(|| Error::Dimension("embedding file holds no vectors".into()))?;
    let mut table = Array2::from_shape_fn((vocab.len(), d), |_| T::of(rng.random_range(-0.1..0.1)));
    for (id, values) in found {
        for (k, v) in values.into_iter().enumerate() {
            table[[id, k]] = v;
        }
    }
    table.row_mut(PAD).fill(T::zero());
    Ok(table)
}

pub fn load_embeddings<T: Scalar, R: Rng + ?Sized>(
    path: impl AsRef<Path>,
    vocab: &Vocabulary,
    rng: &mut R,
) -> Result<Array2<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(&text, vocab, rng)
}

/// Surface token → ordered synonym list. Lookups are lowercased.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymLexicon {
    map: HashMap<String, Vec<String>>,
}

impl SynonymLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces the entry for `word`; self references are dropped.
    pub fn insert(&mut self, word: &str, synonyms: impl IntoIterator<Item = String>) -> bool {
        let head = word.to_lowercase();
        let list: Vec<String> = synonyms
            .into_iter()
            .map(|s| s.to_lowercase())
            .filter(|s| *s != head)
            .collect();
        self.map.insert(head, list).is_some()
    }

    pub fn synonyms(&self, word: &str) -> &[String] {
        self.map
            .get(&word.to_lowercase())
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Parses `word<TAB>syn1 syn2 …` lines. A repeated head word replaces the
/// earlier entry with a warning.
pub fn parse_synonyms(text: &str) -> Result<SynonymLexicon> {
    let mut lex = SynonymLexicon::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (head, rest) = line.split_once('\t').ok_or_else(|| Error::Parse {
            line: i + 1,
            msg: "expected `word<TAB>synonyms`".into(),
        })?;
        let head = head.trim();
        if head.is_empty() {
            return Err(Error::Parse {
                line: i + 1,
                msg: "empty head word".into(),
            });
        }
        if lex.insert(head, rest.split_whitespace().map(str::to_string)) {
            log::warn!("line {}: duplicate synonym entry for `{head}`, keeping the last", i + 1);
        }
    }
    Ok(lex)
}

pub fn load_synonyms(path: impl AsRef<Path>) -> Result<SynonymLexicon> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_synonyms(&text)
}
