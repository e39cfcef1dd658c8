//! Runs every parser over the fuzz seed corpus and seeded byte mutations of
//! it. Seeds must parse; mutants may fail but must not panic.

use std::fs;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Parser = fn(&[u8]) -> bool;

fn parsers() -> Vec<(&'static str, Parser)> {
    vec![
        ("conllu", |d| tlstm::corpus_io::parse_treebank(d, "fuzz").is_ok()),
        ("embeddings", |d| tlstm::corpus_io::parse_embeddings(d, "fuzz").is_ok()),
        ("score_corpus", |d| tlstm::corpus_io::parse_score_corpus(d, "fuzz").is_ok()),
        ("sentence_alignment", |d| tlstm::projection::parse_sentence_alignment(d, "fuzz").is_ok()),
        ("word_alignment", |d| tlstm::projection::parse_word_alignment(d, "fuzz").is_ok()),
        ("model_file", |d| tlstm::model_file::parse_model(d, "fuzz").is_ok()),
    ]
}

fn seeds(target: &str) -> Vec<Vec<u8>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut paths: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    paths.sort();
    paths.iter().map(|p| fs::read(p).unwrap()).collect()
}

fn mutate(seed: &[u8], rng: &mut ChaCha8Rng) -> Vec<u8> {
    let mut out = seed.to_vec();
    const BYTES: &[u8] = b"\t\n -:.0123456789eE_#{}[],\"\xff";
    for _ in 0..rng.random_range(1..=4) {
        match rng.random_range(0..4) {
            0 if !out.is_empty() => {
                let cut = rng.random_range(0..out.len());
                out.truncate(cut);
            }
            1 if !out.is_empty() => {
                let at = rng.random_range(0..out.len());
                out[at] = BYTES[rng.random_range(0..BYTES.len())];
            }
            2 if !out.is_empty() => {
                let at = rng.random_range(0..out.len());
                out.remove(at);
            }
            _ => {
                let at = rng.random_range(0..=out.len());
                out.insert(at, BYTES[rng.random_range(0..BYTES.len())]);
            }
        }
    }
    out
}

#[test]
fn seeds_parse() {
    for (name, parse) in parsers() {
        for (k, s) in seeds(name).iter().enumerate() {
            assert!(parse(s), "{name} seed {k} rejected");
        }
    }
}

#[test]
fn mutants_do_not_panic() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (name, parse) in parsers() {
        let corpus = seeds(name);
        for _ in 0..300 {
            let s = &corpus[rng.random_range(0..corpus.len())];
            let m = mutate(s, &mut rng);
            parse(&m);
        }
    }
}
