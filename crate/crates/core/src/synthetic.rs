//! A small generative toy grammar for smoke tests and experiments.
//!
//! Sentences follow `NP VERB [NP] [ADP NP]` with `NP = [DET] [ADJ] NOUN`.
//! The verb heads the sentence, nouns attach to the verb, determiners and
//! adjectives to their noun, prepositions to the noun they introduce.
//! Projected score matrices are the gold parse matrix plus Gaussian noise,
//! standardized over the whole corpus.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus_io::{EmbeddingTable, ScoredSentence, Sentence};
use crate::decoder::heads_to_matrix;
use crate::error::{Error, Result};
use crate::projection::{standardize, SourceCorpus};
use crate::scores::ScoreMatrix;

const LEXICON: &[(&str, &[&str])] = &[
    ("DET", &["the", "a", "this", "every"]),
    ("ADJ", &["big", "small", "red", "old", "quick"]),
    ("NOUN", &["dog", "cat", "man", "park", "ball", "tree", "child"]),
    ("VERB", &["sees", "walks", "likes", "finds", "chases"]),
    ("ADP", &["in", "near", "with"]),
];

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub sentences: usize,
    /// Longest sentence kept; longer draws are resampled.
    pub max_len: usize,
    pub embedding_width: usize,
    /// Standard deviation of the noise added to gold parse matrices.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            sentences: 200,
            max_len: 8,
            embedding_width: 8,
            noise: 0.5,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticCorpus {
    /// Gold-annotated sentences.
    pub treebank: Vec<Sentence>,
    pub embeddings: EmbeddingTable,
    /// Noisy standardized score matrices for the same sentences.
    pub projected: Vec<ScoredSentence>,
}

fn word(rng: &mut ChaCha8Rng, tag: &str) -> String {
    let words = LEXICON.iter().find(|(t, _)| *t == tag).expect("known tag").1;
    words.choose(rng).expect("non-empty lexicon").to_string()
}

/// Appends a noun phrase and returns the 1-based index of its noun.
fn noun_phrase(rng: &mut ChaCha8Rng, tokens: &mut Vec<(String, &'static str, usize)>) -> usize {
    let det = rng.random_bool(0.7);
    let adj = rng.random_bool(0.4);
    let noun = tokens.len() + 1 + det as usize + adj as usize;
    if det {
        tokens.push((word(rng, "DET"), "DET", noun));
    }
    if adj {
        tokens.push((word(rng, "ADJ"), "ADJ", noun));
    }
    tokens.push((word(rng, "NOUN"), "NOUN", 0));
    noun
}

fn draw_sentence(rng: &mut ChaCha8Rng) -> Vec<(String, &'static str, usize)> {
    let mut tokens = Vec::new();
    let subj = noun_phrase(rng, &mut tokens);
    tokens.push((word(rng, "VERB"), "VERB", 0));
    let verb = tokens.len();
    tokens[subj - 1].2 = verb;
    if rng.random_bool(0.6) {
        let obj = noun_phrase(rng, &mut tokens);
        tokens[obj - 1].2 = verb;
    }
    if rng.random_bool(0.3) {
        let adp = tokens.len();
        tokens.push((word(rng, "ADP"), "ADP", 0));
        let noun = noun_phrase(rng, &mut tokens);
        tokens[adp].2 = noun;
        tokens[noun - 1].2 = verb;
    }
    tokens
}

pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticCorpus> {
    if cfg.sentences == 0 || cfg.embedding_width == 0 {
        return Err(Error::Config("synthetic corpus needs sentences and an embedding width".into()));
    }
    // shortest possible sentence is NOUN VERB
    if cfg.max_len < 2 {
        return Err(Error::Config("synthetic sentences have at least 2 tokens".into()));
    }
    let noise = Normal::new(0.0, cfg.noise)
        .map_err(|e| Error::Config(format!("noise level {}: {e}", cfg.noise)))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut embeddings = EmbeddingTable::new(cfg.embedding_width);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    for (_, words) in LEXICON {
        for w in *words {
            let v: Vec<f64> = (0..cfg.embedding_width).map(|_| unit.sample(&mut rng)).collect();
            embeddings.insert(*w, v)?;
        }
    }

    let mut treebank = Vec::with_capacity(cfg.sentences);
    let mut raw = Vec::with_capacity(cfg.sentences);
    while treebank.len() < cfg.sentences {
        let tokens = draw_sentence(&mut rng);
        if tokens.len() > cfg.max_len {
            continue;
        }
        let heads: Vec<usize> = tokens.iter().map(|t| t.2).collect();
        let gold = heads_to_matrix(&heads)?;
        let mut scores = ScoreMatrix::new(gold)?;
        for (i, j) in scores.unmasked_cells().collect::<Vec<_>>() {
            scores.set(i, j, scores.get(i, j) + noise.sample(&mut rng));
        }
        let s = Sentence {
            id: format!("syn-{}", treebank.len() + 1),
            tokens: tokens.iter().map(|t| t.0.clone()).collect(),
            pos: tokens.iter().map(|t| t.1.to_string()).collect(),
            heads: Some(heads),
        };
        raw.push(ScoredSentence {
            id: s.id.clone(),
            tokens: s.tokens.clone(),
            pos: s.pos.clone(),
            scores,
        });
        treebank.push(s);
    }
    let projected = standardize(&SourceCorpus {
        language: "synthetic".into(),
        sentences: raw,
    })?
    .sentences;
    Ok(SyntheticCorpus {
        treebank,
        embeddings,
        projected,
    })
}
