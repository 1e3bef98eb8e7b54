//! Seeded generator for a small synthetic sentiment corpus, with matching
//! embedding and synonym files. Every word belongs to a group of
//! interchangeable surface forms; groups are positive, negative or neutral.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::seq::IndexedRandom;
use rand::Rng;

use crate::corpus::{LabeledText, SynonymLexicon};
use crate::error::{Error, Result};
use crate::model::{ClassifierModel, ModelParts, NUM_CLASSES, PAD};
use crate::scalar::Scalar;

const POSITIVE: &[&[&str]] = &[
    &["good", "fine", "decent"],
    &["great", "terrific"],
    &["excellent", "superb", "outstanding"],
    &["wonderful", "marvelous"],
    &["charming", "delightful"],
    &["brilliant", "dazzling"],
    &["enjoyable", "pleasant"],
    &["moving", "touching"],
];

const NEGATIVE: &[&[&str]] = &[
    &["bad", "poor", "lousy"],
    &["awful", "terrible", "dreadful"],
    &["boring", "dull", "tedious"],
    &["weak", "feeble"],
    &["messy", "sloppy"],
    &["annoying", "irritating"],
    &["bland", "flat"],
    &["clumsy", "awkward"],
];

const NEUTRAL: &[&[&str]] = &[
    &["the"],
    &["a"],
    &["and"],
    &["with"],
    &["of"],
    &["was"],
    &["is"],
    &["this"],
    &["it"],
    &["movie", "film"],
    &["story", "tale"],
    &["plot", "storyline"],
    &["actor", "performer"],
    &["scene", "sequence"],
    &["director", "filmmaker"],
    &["ending", "finale"],
    &["script", "screenplay"],
    &["music", "score"],
    &["camera", "cinematography"],
    &["very", "quite"],
    &["really", "truly"],
    &["overall"],
    &["again"],
];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Embedding width of the generated vectors.
    pub dim: usize,
    /// Probability that a sentence also contains one word of the opposite polarity.
    pub distractor_rate: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            train: 800,
            dev: 200,
            test: 200,
            min_len: 8,
            max_len: 16,
            dim: 16,
            distractor_rate: 0.3,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_len < 4 || self.max_len < self.min_len || self.dim < 2 {
            return Err(Error::InvalidArgument(
                "synthetic corpus needs 4 ≤ min_len ≤ max_len and dim ≥ 2".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.distractor_rate) {
            return Err(Error::InvalidArgument("distractor_rate must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub train: Vec<LabeledText>,
    pub dev: Vec<LabeledText>,
    pub test: Vec<LabeledText>,
    /// Contents of a `word v1 … vd` embedding file.
    pub embeddings: String,
    pub lexicon: SynonymLexicon,
}

fn pick<'a, R: Rng + ?Sized>(groups: &[&[&'a str]], rng: &mut R) -> &'a str {
    groups.choose(rng).unwrap().choose(rng).unwrap()
}

fn sentence<R: Rng + ?Sized>(label: usize, cfg: &SyntheticConfig, rng: &mut R) -> LabeledText {
    let (own, other) = if label == 1 { (POSITIVE, NEGATIVE) } else { (NEGATIVE, POSITIVE) };
    let len = rng.random_range(cfg.min_len..=cfg.max_len);
    let mut words: Vec<String> = (0..len).map(|_| pick(NEUTRAL, rng).to_string()).collect();
    let polar = rng.random_range(2..=3.min(len / 2).max(2));
    let mut slots: Vec<usize> = (0..len).collect();
    for k in 0..polar {
        let j = rng.random_range(k..len);
        slots.swap(k, j);
        words[slots[k]] = pick(own, rng).to_string();
    }
    if rng.random_bool(cfg.distractor_rate) {
        let j = rng.random_range(polar..len);
        slots.swap(polar, j);
        words[slots[polar]] = pick(other, rng).to_string();
    }
    LabeledText { label, words }
}

fn split<R: Rng + ?Sized>(count: usize, cfg: &SyntheticConfig, rng: &mut R) -> Vec<LabeledText> {
    (0..count).map(|i| sentence(i % 2, cfg, rng)).collect()
}

fn embeddings<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> String {
    let mut out = String::new();
    let groups = [(POSITIVE, 1.0), (NEGATIVE, -1.0), (NEUTRAL, 0.0)];
    for (set, polarity) in groups {
        for group in set {
            let centre: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.5..0.5)).collect();
            for word in *group {
                out.push_str(word);
                for (k, c) in centre.iter().enumerate() {
                    let mut v = c + rng.random_range(-0.05..0.05);
                    if k == 0 {
                        v += polarity;
                    }
                    write!(out, " {v:.6}").unwrap();
                }
                out.push('\n');
            }
        }
    }
    out
}

fn lexicon() -> SynonymLexicon {
    let mut lex = SynonymLexicon::new();
    for group in POSITIVE.iter().chain(NEGATIVE).chain(NEUTRAL) {
        for word in *group {
            lex.insert(word, group.iter().map(|s| s.to_string()));
        }
    }
    lex
}

/// Balanced splits (labels alternate), embeddings and lexicon.
pub fn generate<R: Rng + ?Sized>(cfg: &SyntheticConfig, rng: &mut R) -> Result<SyntheticCorpus> {
    cfg.validate()?;
    Ok(SyntheticCorpus {
        train: split(cfg.train, cfg, rng),
        dev: split(cfg.dev, cfg, rng),
        test: split(cfg.test, cfg, rng),
        embeddings: embeddings(cfg.dim, rng),
        lexicon: lexicon(),
    })
}

fn dataset_text(texts: &[LabeledText]) -> String {
    texts
        .iter()
        .map(|t| format!("{}\t{}\n", t.label, t.words.join(" ")))
        .collect()
}

fn lexicon_text(lex: &SynonymLexicon) -> String {
    let mut words: Vec<&str> = POSITIVE
        .iter()
        .chain(NEGATIVE)
        .chain(NEUTRAL)
        .flat_map(|g| g.iter().copied())
        .collect();
    words.sort_unstable();
    let mut out = String::new();
    for w in words {
        let syns = lex.synonyms(w);
        if !syns.is_empty() {
            writeln!(out, "{w}\t{}", syns.join(" ")).unwrap();
        }
    }
    out
}

/// Writes `train.tsv`, `dev.tsv`, `test.tsv`, `embeddings.txt` and
/// `synonyms.tsv` into `dir`.
pub fn write_corpus(corpus: &SyntheticCorpus, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = [
        ("train.tsv", dataset_text(&corpus.train)),
        ("dev.tsv", dataset_text(&corpus.dev)),
        ("test.tsv", dataset_text(&corpus.test)),
        ("embeddings.txt", corpus.embeddings.clone()),
        ("synonyms.tsv", lexicon_text(&corpus.lexicon)),
    ];
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Frobenius radius around an input with entries in `[−1, 1]` inside which
/// [`linear_collapse_model`] keeps every ReLU active.
pub const COLLAPSE_HEADROOM: f64 = 50.0;

/// A model whose hidden pre-activations stay strictly positive for every input
/// with entries in `[−1, 1]`, even after a perturbation of Frobenius norm up
/// to [`COLLAPSE_HEADROOM`]. On that region both logits are affine in the mean
/// embedding, and `b3` is chosen so both logits vanish when the mean embedding
/// is zero. Embedding rows other than PAD are uniform in `[−1, 1]`.
pub fn linear_collapse_model<T: Scalar, R: Rng + ?Sized>(
    vocab: usize,
    dim: usize,
    hidden: usize,
    rng: &mut R,
) -> Result<ClassifierModel<T>> {
    let mut uniform = |shape: (usize, usize), half: f64| {
        Array2::from_shape_fn(shape, |_| T::of(rng.random_range(-half..=half)))
    };
    let mut embedding = uniform((vocab, dim), 1.0);
    if vocab > PAD {
        embedding.row_mut(PAD).fill(T::zero());
    }
    let w1 = uniform((hidden, dim), 0.5);
    let w2 = uniform((hidden, hidden), 0.5 / hidden as f64);
    let w3 = uniform((NUM_CLASSES, hidden), 1.0);
    // |W1_j·e| ≤ d/2 on the input box and moves by at most ‖W1_j‖·R ≤ √d·R/2.
    let reach = 0.5 * dim as f64 + 0.5 * (dim as f64).sqrt() * COLLAPSE_HEADROOM;
    let b1 = reach + 1.0;
    // The pooled vector lies in [1, 2·b1], so |W2·p| ≤ b1.
    let b2 = b1 + 1.0;
    let b1 = Array1::from_elem(hidden, T::of(b1));
    let b2 = Array1::from_elem(hidden, T::of(b2));
    let a2_at_zero = w2.dot(&b1) + &b2;
    let b3 = -w3.dot(&a2_at_zero);
    ClassifierModel::new(ModelParts {
        embedding,
        w1,
        b1,
        w2,
        b2,
        w3,
        b3,
    })
}
