//! Multi-source projection of edge scores across sentence and word
//! alignments.
//!
//! For a target edge `(u_t, v_t)` (head, dependent) every source edge
//! `(u_s, v_s)` votes `W(u_s,u_t) · W(v_s,v_t) · score(u_s,v_s)`; a source
//! sentence contributes its strongest vote, weighted by its sentence
//! alignment confidence; the weighted votes of all source languages are
//! summed and divided by the total alignment weight `Z` of the target
//! sentence. Targets with `Z = 0` get an all-zero matrix.
//!
//! Source roots align to the target root with confidence 1.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus_io::{ScoredSentence, Sentence};
use crate::error::{Error, Result};
use crate::scores::ScoreMatrix;

/// Source-language sentences with monolingual edge scores.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceCorpus {
    pub language: String,
    pub sentences: Vec<ScoredSentence>,
}

/// Mean and population standard deviation of every unmasked score in the
/// corpus pooled together.
pub fn pooled_moments(corpus: &SourceCorpus) -> (f64, f64) {
    let values = || {
        corpus
            .sentences
            .iter()
            .flat_map(|s| s.scores.unmasked_cells().map(move |(i, j)| s.scores.get(i, j)))
    };
    let n = values().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values().sum::<f64>() / n as f64;
    let var = values().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (mean, var.sqrt())
}

/// Rescales all scores of the language to mean 0 and standard deviation 1.
pub fn standardize(corpus: &SourceCorpus) -> Result<SourceCorpus> {
    let (mean, std) = pooled_moments(corpus);
    if !(std > 0.0) || !std.is_finite() {
        return Err(Error::DegenerateCorpus(format!(
            "scores of language {} have no spread",
            corpus.language
        )));
    }
    let sentences = corpus
        .sentences
        .iter()
        .map(|s| {
            let mut scores = s.scores.with_masked_zeroed();
            for (i, j) in s.scores.unmasked_cells() {
                scores.set(i, j, (s.scores.get(i, j) - mean) / std);
            }
            ScoredSentence {
                scores,
                ..s.clone()
            }
        })
        .collect();
    Ok(SourceCorpus {
        language: corpus.language.clone(),
        sentences,
    })
}

/// One source edge's vote for one target edge.
#[inline]
pub fn edge_vote(score: f64, head_confidence: f64, dependent_confidence: f64) -> f64 {
    head_confidence * dependent_confidence * score
}

/// Dense word-alignment confidences `W[source][target]` over nodes
/// including the root (index 0).
#[derive(Clone, Debug, PartialEq)]
pub struct AlignmentMatrix {
    source_len: usize,
    target_len: usize,
    conf: Vec<f64>,
}

impl AlignmentMatrix {
    /// Only the root-to-root link.
    pub fn new(source_len: usize, target_len: usize) -> Self {
        let mut conf = vec![0.0; (source_len + 1) * (target_len + 1)];
        conf[0] = 1.0;
        AlignmentMatrix {
            source_len,
            target_len,
            conf,
        }
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn target_len(&self) -> usize {
        self.target_len
    }

    pub fn get(&self, source: usize, target: usize) -> f64 {
        self.conf[source * (self.target_len + 1) + target]
    }

    pub fn set(&mut self, source: usize, target: usize, confidence: f64) {
        let t = self.target_len + 1;
        self.conf[source * t + target] = confidence;
    }
}

/// Strongest vote of any source edge for target edge `(head_t, dep_t)`.
pub fn sentence_vote(source: &ScoreMatrix, align: &AlignmentMatrix, head_t: usize, dep_t: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for (row, head_s) in source.unmasked_cells() {
        let dep_s = row + 1;
        let v = edge_vote(source.get(row, head_s), align.get(head_s, head_t), align.get(dep_s, dep_t));
        best = best.max(v);
    }
    best
}

/// A target sentence with projected scores.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedInstance {
    pub sentence: ScoredSentence,
    /// Share of unmasked cells that are exactly 0.
    pub missing_fraction: f64,
}

impl ProjectedInstance {
    pub fn new(sentence: ScoredSentence) -> Self {
        let missing_fraction = sentence.scores.zero_fraction();
        ProjectedInstance {
            sentence,
            missing_fraction,
        }
    }
}

/// One line of a sentence alignment file.
#[derive(Clone, Debug, PartialEq)]
pub struct SentenceLink {
    pub source_id: String,
    pub target_id: String,
    pub confidence: f64,
    pub line: usize,
}

/// Sentence-level alignment between one source language and the target.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SentenceAlignment {
    pub origin: String,
    pub links: Vec<SentenceLink>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WordLink {
    /// 1-based source token, 0 for the root.
    pub source: usize,
    /// 1-based target token, 0 for the root.
    pub target: usize,
    pub confidence: f64,
}

/// Word links of one aligned sentence pair.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignedPair {
    pub source_id: String,
    pub target_id: String,
    pub links: Vec<WordLink>,
    pub line: usize,
}

/// Word-level alignment between one source language and the target.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct WordAlignment {
    pub origin: String,
    pub pairs: Vec<AlignedPair>,
}

fn parse_confidence(raw: &str, locus: &str) -> Result<f64> {
    let c: f64 = raw
        .parse()
        .map_err(|_| Error::parse(locus, format!("invalid confidence {raw:?}")))?;
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::data(locus, format!("confidence {c} outside [0, 1]")));
    }
    Ok(c)
}

pub fn read_sentence_alignment(path: impl AsRef<Path>) -> Result<SentenceAlignment> {
    let path = path.as_ref();
    parse_sentence_alignment(BufReader::new(File::open(path)?), &path.display().to_string())
}

/// Reads `source_id  target_id  confidence` lines.
pub fn parse_sentence_alignment<R: BufRead>(reader: R, origin: &str) -> Result<SentenceAlignment> {
    let mut links = Vec::new();
    let mut seen = HashMap::new();
    for (n, line) in reader.lines().enumerate() {
        let lineno = n + 1;
        let locus = format!("{origin}:{lineno}");
        let line = line.map_err(|e| Error::parse(&locus, e.to_string()))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 3 {
            return Err(Error::parse(
                &locus,
                format!("expected source_id, target_id, confidence; found {} fields", fields.len()),
            ));
        }
        let confidence = parse_confidence(fields[2], &locus)?;
        match seen.entry((fields[0].to_string(), fields[1].to_string())) {
            Entry::Occupied(e) => {
                return Err(Error::data(
                    &locus,
                    format!("duplicate sentence pair, first given on line {}", e.get()),
                ))
            }
            Entry::Vacant(e) => {
                e.insert(lineno);
            }
        }
        links.push(SentenceLink {
            source_id: fields[0].to_string(),
            target_id: fields[1].to_string(),
            confidence,
            line: lineno,
        });
    }
    Ok(SentenceAlignment {
        origin: origin.to_string(),
        links,
    })
}

pub fn read_word_alignment(path: impl AsRef<Path>) -> Result<WordAlignment> {
    let path = path.as_ref();
    parse_word_alignment(BufReader::new(File::open(path)?), &path.display().to_string())
}

/// Reads `source_id  target_id  i-j:conf …` lines with 1-based token indices.
pub fn parse_word_alignment<R: BufRead>(reader: R, origin: &str) -> Result<WordAlignment> {
    let mut pairs = Vec::new();
    let mut seen = HashMap::new();
    for (n, line) in reader.lines().enumerate() {
        let lineno = n + 1;
        let locus = format!("{origin}:{lineno}");
        let line = line.map_err(|e| Error::parse(&locus, e.to_string()))?;
        let mut fields = line.split_whitespace();
        let Some(source_id) = fields.next() else {
            continue;
        };
        let target_id = fields
            .next()
            .ok_or_else(|| Error::parse(&locus, "missing target id"))?;
        let mut links: Vec<WordLink> = Vec::new();
        for raw in fields {
            let bad = || Error::parse(&locus, format!("malformed link {raw:?}, expected i-j:conf"));
            let (pair, conf) = raw.split_once(':').ok_or_else(bad)?;
            let (i, j) = pair.split_once('-').ok_or_else(bad)?;
            let source: usize = i.parse().map_err(|_| bad())?;
            let target: usize = j.parse().map_err(|_| bad())?;
            let confidence = parse_confidence(conf, &locus)?;
            if links.iter().any(|l| l.source == source && l.target == target) {
                return Err(Error::data(&locus, format!("duplicate link {source}-{target}")));
            }
            links.push(WordLink {
                source,
                target,
                confidence,
            });
        }
        match seen.entry((source_id.to_string(), target_id.to_string())) {
            Entry::Occupied(e) => {
                return Err(Error::data(
                    &locus,
                    format!("duplicate sentence pair, first given on line {}", e.get()),
                ))
            }
            Entry::Vacant(e) => {
                e.insert(lineno);
            }
        }
        pairs.push(AlignedPair {
            source_id: source_id.to_string(),
            target_id: target_id.to_string(),
            links,
            line: lineno,
        });
    }
    Ok(WordAlignment {
        origin: origin.to_string(),
        pairs,
    })
}

fn index_by_id<'a, I>(ids: I, what: &str) -> Result<HashMap<&'a str, usize>>
where
    I: Iterator<Item = &'a str>,
{
    let mut map = HashMap::new();
    for (k, id) in ids.enumerate() {
        if map.insert(id, k).is_some() {
            return Err(Error::data(what, format!("duplicate sentence id {id:?}")));
        }
    }
    Ok(map)
}

/// A resolved contribution of one source sentence to one target sentence.
struct Contribution<'a> {
    weight: f64,
    source: &'a ScoreMatrix,
    align: AlignmentMatrix,
}

/// Projects the source scores onto every target sentence.
///
/// `sentence_alignments[k]` and `word_alignments[k]` belong to `sources[k]`.
/// Sources are used as given; standardize them first.
pub fn project(
    targets: &[Sentence],
    sources: &[SourceCorpus],
    sentence_alignments: &[SentenceAlignment],
    word_alignments: &[WordAlignment],
) -> Result<Vec<ProjectedInstance>> {
    if sources.len() != sentence_alignments.len() || sources.len() != word_alignments.len() {
        return Err(Error::Argument(format!(
            "{} sources need as many sentence and word alignments, got {} and {}",
            sources.len(),
            sentence_alignments.len(),
            word_alignments.len()
        )));
    }
    let target_index = index_by_id(targets.iter().map(|s| s.id.as_str()), "target corpus")?;
    if let Some(s) = targets.iter().find(|s| s.is_empty()) {
        return Err(Error::data("target corpus", format!("sentence {} is empty", s.id)));
    }

    let mut per_target: Vec<Vec<Contribution>> = targets.iter().map(|_| Vec::new()).collect();
    for ((src, sa), wa) in sources.iter().zip(sentence_alignments).zip(word_alignments) {
        let source_index = index_by_id(
            src.sentences.iter().map(|s| s.id.as_str()),
            &format!("source corpus {}", src.language),
        )?;
        let resolve = |origin: &str, line: usize, sid: &str, tid: &str| -> Result<(usize, usize)> {
            let locus = format!("{origin}:{line}");
            let s = *source_index
                .get(sid)
                .ok_or_else(|| Error::data(&locus, format!("unknown source sentence {sid:?}")))?;
            let t = *target_index
                .get(tid)
                .ok_or_else(|| Error::data(&locus, format!("unknown target sentence {tid:?}")))?;
            Ok((s, t))
        };

        let mut matrices: HashMap<(usize, usize), AlignmentMatrix> = HashMap::new();
        for pair in &wa.pairs {
            let (s, t) = resolve(&wa.origin, pair.line, &pair.source_id, &pair.target_id)?;
            let (ws, wt) = (src.sentences[s].len(), targets[t].len());
            let mut m = AlignmentMatrix::new(ws, wt);
            for link in &pair.links {
                if link.source > ws || link.target > wt {
                    return Err(Error::data(
                        format!("{}:{}", wa.origin, pair.line),
                        format!(
                            "link {}-{} out of range for sentence lengths {ws} and {wt}",
                            link.source, link.target
                        ),
                    ));
                }
                if link.source != 0 || link.target != 0 {
                    m.set(link.source, link.target, link.confidence);
                }
            }
            matrices.insert((s, t), m);
        }

        for link in &sa.links {
            let (s, t) = resolve(&sa.origin, link.line, &link.source_id, &link.target_id)?;
            let source = &src.sentences[s];
            let align = matrices
                .remove(&(s, t))
                .unwrap_or_else(|| AlignmentMatrix::new(source.len(), targets[t].len()));
            per_target[t].push(Contribution {
                weight: link.confidence,
                source: &source.scores,
                align,
            });
        }
    }

    Ok(targets
        .par_iter()
        .zip(per_target.par_iter())
        .map(|(target, contributions)| {
            let scores = project_sentence(target.len(), contributions);
            ProjectedInstance::new(ScoredSentence {
                id: target.id.clone(),
                tokens: target.tokens.clone(),
                pos: target.pos.clone(),
                scores,
            })
        })
        .collect())
}

fn project_sentence(w: usize, contributions: &[Contribution]) -> ScoreMatrix {
    let z: f64 = contributions.iter().map(|c| c.weight).sum();
    let mut out = ScoreMatrix::zeros(w);
    if z == 0.0 {
        return out;
    }
    for c in contributions {
        if c.weight == 0.0 {
            continue;
        }
        let votes = sparse_sentence_votes(c.source, &c.align);
        for (i, j) in out.unmasked_cells().collect::<Vec<_>>() {
            let v = votes.get(i, j);
            out.set(i, j, out.get(i, j) + c.weight * v);
        }
    }
    for (i, j) in out.unmasked_cells().collect::<Vec<_>>() {
        out.set(i, j, out.get(i, j) / z);
    }
    out
}

/// Sentence votes for every target cell, visiting only aligned node pairs.
///
/// A source edge with any unaligned endpoint votes exactly 0, so 0 joins the
/// maximum whenever fewer than all source edges were visited.
fn sparse_sentence_votes(source: &ScoreMatrix, align: &AlignmentMatrix) -> ScoreMatrix {
    let (ws, wt) = (align.source_len(), align.target_len());
    // aligned[t] = source nodes with nonzero confidence to target node t
    let mut aligned: Vec<Vec<(usize, f64)>> = vec![Vec::new(); wt + 1];
    for s in 0..=ws {
        for (t, list) in aligned.iter_mut().enumerate() {
            let c = align.get(s, t);
            if c != 0.0 {
                list.push((s, c));
            }
        }
    }
    let all_edges = ws * ws;
    let mut out = ScoreMatrix::zeros(wt);
    for dep_t in 1..=wt {
        for head_t in 0..=wt {
            if head_t == dep_t {
                continue;
            }
            let mut best = f64::NEG_INFINITY;
            let mut visited = 0usize;
            for &(head_s, ch) in &aligned[head_t] {
                for &(dep_s, cd) in &aligned[dep_t] {
                    if dep_s == 0 || dep_s == head_s {
                        continue;
                    }
                    visited += 1;
                    best = best.max(edge_vote(source.get(dep_s - 1, head_s), ch, cd));
                }
            }
            if visited < all_edges {
                best = best.max(0.0);
            }
            out.set(dep_t - 1, head_t, best);
        }
    }
    out
}

fn exact_count(p: f64, n: usize) -> usize {
    // guards against p·n landing just below an integer
    ((p * n as f64) + 1e-9).floor() as usize
}

/// Zeroes exactly `⌊p·N⌋` of the `N` nonzero unmasked cells pooled across
/// all instances, chosen by a seeded shuffle.
pub fn blankout(instances: &[ProjectedInstance], p: f64, seed: u64) -> Result<Vec<ProjectedInstance>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Argument(format!("blankout fraction {p} outside [0, 1]")));
    }
    let mut cells: Vec<(usize, usize, usize)> = instances
        .iter()
        .enumerate()
        .flat_map(|(k, inst)| {
            let s = &inst.sentence.scores;
            s.unmasked_cells()
                .filter(|&(i, j)| s.get(i, j) != 0.0)
                .map(move |(i, j)| (k, i, j))
        })
        .collect();
    let count = exact_count(p, cells.len()).min(cells.len());
    cells.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut sentences: Vec<ScoredSentence> = instances.iter().map(|i| i.sentence.clone()).collect();
    for &(k, i, j) in &cells[..count] {
        sentences[k].scores.set(i, j, 0.0);
    }
    Ok(sentences.into_iter().map(ProjectedInstance::new).collect())
}

/// `min(n, len)` items in seeded-shuffle order.
pub fn subsample<T: Clone>(items: &[T], n: usize, seed: u64) -> Vec<T> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order.truncate(n.min(items.len()));
    order.into_iter().map(|k| items[k].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scored(id: &str, rows: &[&[f64]]) -> ScoredSentence {
        let w = rows.len();
        ScoredSentence {
            id: id.into(),
            tokens: (0..w).map(|k| format!("t{k}")).collect(),
            pos: vec!["X".into(); w],
            scores: ScoreMatrix::from_rows(rows).unwrap(),
        }
    }

    fn target(id: &str, w: usize) -> Sentence {
        Sentence {
            id: id.into(),
            tokens: (0..w).map(|k| format!("u{k}")).collect(),
            pos: vec!["X".into(); w],
            heads: None,
        }
    }

    #[test]
    fn standardize_three_values() {
        // w=1 has one unmasked cell; three sentences pool {1,2,3}
        let c = SourceCorpus {
            language: "xx".into(),
            sentences: vec![
                scored("a", &[&[1.0, 0.0]]),
                scored("b", &[&[2.0, 0.0]]),
                scored("c", &[&[3.0, 0.0]]),
            ],
        };
        let s = standardize(&c).unwrap();
        let got: Vec<f64> = s.sentences.iter().map(|x| x.scores.get(0, 0)).collect();
        assert_abs_diff_eq!(got[0], -1.224745, epsilon = 1e-6);
        assert_abs_diff_eq!(got[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(got[2], 1.224745, epsilon = 1e-6);

        let again = standardize(&s).unwrap();
        for (a, b) in again.sentences.iter().zip(&s.sentences) {
            assert_abs_diff_eq!(a.scores.get(0, 0), b.scores.get(0, 0), epsilon = 1e-12);
        }
    }

    #[test]
    fn standardize_rejects_constant_scores() {
        let c = SourceCorpus {
            language: "xx".into(),
            sentences: vec![scored("a", &[&[4.0, 0.0, 4.0], &[4.0, 4.0, 0.0]])],
        };
        assert!(matches!(standardize(&c), Err(Error::DegenerateCorpus(_))));
    }

    #[test]
    fn edge_votes() {
        assert_abs_diff_eq!(edge_vote(1.5, 0.9, 0.8), 1.08, epsilon = 1e-12);
        assert_eq!(edge_vote(1.5, 0.0, 0.8), 0.0);
        assert_eq!(edge_vote(-2.0, 1.0, 0.5), -1.0);
    }

    #[test]
    fn sentence_vote_is_max() {
        // source: 2 tokens; edge root->1 score 1.5, 2->1 score 0.5/0.9*...
        let src = ScoreMatrix::from_rows(&[[1.5, 0.0, 1.0], [-1.0, -3.0, 0.0]]).unwrap();
        let mut a = AlignmentMatrix::new(2, 2);
        a.set(1, 1, 0.8);
        a.set(2, 2, 1.0);
        // target edge root -> token 1: candidates root->1 (1*0.8*1.5=1.2), others
        assert_abs_diff_eq!(sentence_vote(&src, &a, 0, 1), 1.2, epsilon = 1e-12);
        // target edge 2 -> 1: source 2->1 gives 1*0.8*1.0 = 0.8
        assert_abs_diff_eq!(sentence_vote(&src, &a, 2, 1), 0.8, epsilon = 1e-12);
        let none = AlignmentMatrix::new(2, 2);
        assert_eq!(sentence_vote(&src, &none, 2, 1), 0.0);
        let one = ScoreMatrix::from_rows(&[[2.0, 0.0]]).unwrap();
        let mut a1 = AlignmentMatrix::new(1, 1);
        a1.set(1, 1, 0.5);
        assert_eq!(sentence_vote(&one, &a1, 0, 1), 1.0);
    }

    fn one_source(
        sources: Vec<ScoredSentence>,
        sent: &str,
        words: &str,
    ) -> (SourceCorpus, SentenceAlignment, WordAlignment) {
        (
            SourceCorpus {
                language: "src".into(),
                sentences: sources,
            },
            parse_sentence_alignment(sent.as_bytes(), "sa").unwrap(),
            parse_word_alignment(words.as_bytes(), "wa").unwrap(),
        )
    }

    #[test]
    fn single_edge_projects_its_vote() {
        // one-token source with root edge score 1.5, aligned 0.9
        let (c, sa, wa) = one_source(
            vec![scored("s1", &[&[1.5, 0.0]])],
            "s1\tt1\t1.0\n",
            "s1\tt1\t1-1:0.9\n",
        );
        let out = project(&[target("t1", 1)], &[c], &[sa], &[wa]).unwrap();
        assert_abs_diff_eq!(out[0].sentence.scores.get(0, 0), 1.35, epsilon = 1e-12);
        assert_eq!(out[0].missing_fraction, 0.0);
    }

    #[test]
    fn unaligned_target_is_all_zero() {
        let (c, sa, wa) = one_source(vec![scored("s1", &[&[1.5, 0.0]])], "", "");
        let out = project(&[target("t1", 3)], &[c], &[sa], &[wa]).unwrap();
        assert_eq!(out[0].sentence.scores, ScoreMatrix::zeros(3));
        assert_eq!(out[0].missing_fraction, 1.0);
    }

    #[test]
    fn weighted_average_over_two_sentences() {
        let (c, sa, wa) = one_source(
            vec![scored("s1", &[&[2.0, 0.0]]), scored("s2", &[&[-5.0, 0.0]])],
            "s1\tt1\t0.5\ns2\tt1\t0.5\n",
            "s1\tt1\t1-1:1.0\n",
        );
        let out = project(&[target("t1", 1)], &[c], &[sa], &[wa]).unwrap();
        // s2 has no word links: its only edge votes 0
        assert_abs_diff_eq!(out[0].sentence.scores.get(0, 0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn bad_references_carry_file_and_line() {
        let (c, sa, wa) = one_source(
            vec![scored("s1", &[&[1.5, 0.0]])],
            "s1\tt1\t1.0\nsX\tt1\t0.2\n",
            "",
        );
        let err = project(&[target("t1", 1)], &[c.clone()], &[sa], &[wa.clone()]).unwrap_err();
        assert!(matches!(err, Error::Data { ref locus, .. } if locus == "sa:2"), "{err}");

        let wa = parse_word_alignment("s1 t1 2-1:0.5\n".as_bytes(), "wa").unwrap();
        let sa = parse_sentence_alignment("s1 t1 1\n".as_bytes(), "sa").unwrap();
        let err = project(&[target("t1", 1)], &[c], &[sa], &[wa]).unwrap_err();
        assert!(matches!(err, Error::Data { ref locus, .. } if locus == "wa:1"), "{err}");
    }

    #[test]
    fn alignment_parsers_reject_garbage() {
        assert!(parse_sentence_alignment("a b\n".as_bytes(), "f").is_err());
        assert!(parse_sentence_alignment("a b 1.5\n".as_bytes(), "f").is_err());
        assert!(parse_sentence_alignment("a b x\n".as_bytes(), "f").is_err());
        assert!(parse_sentence_alignment("a b 1\na b 0.5\n".as_bytes(), "f").is_err());
        assert!(parse_word_alignment("a\n".as_bytes(), "f").is_err());
        assert!(parse_word_alignment("a b 1-1\n".as_bytes(), "f").is_err());
        assert!(parse_word_alignment("a b 1:0.5\n".as_bytes(), "f").is_err());
        assert!(parse_word_alignment("a b 1-1:0.5 1-1:0.2\n".as_bytes(), "f").is_err());
        let ok = parse_word_alignment("a\tb\t1-2:0.5 3-1:1\n\n".as_bytes(), "f").unwrap();
        assert_eq!(ok.pairs.len(), 1);
        assert_eq!(ok.pairs[0].links.len(), 2);
    }

    fn instances() -> Vec<ProjectedInstance> {
        // 2 sentences of w=2 with 4 unmasked cells each, 10 nonzero in total
        let a = scored("a", &[&[1.0, 0.0, 2.0], &[3.0, 4.0, 0.0]]);
        let b = scored("b", &[&[5.0, 0.0, 6.0], &[7.0, 8.0, 0.0]]);
        let c = scored("c", &[&[9.0, 0.0], ]);
        let d = scored("d", &[&[10.0, 0.0]]);
        [a, b, c, d].into_iter().map(ProjectedInstance::new).collect()
    }

    fn nonzero(xs: &[ProjectedInstance]) -> usize {
        xs.iter()
            .map(|x| {
                let s = &x.sentence.scores;
                s.unmasked_cells().filter(|&(i, j)| s.get(i, j) != 0.0).count()
            })
            .sum()
    }

    #[test]
    fn blankout_counts_and_determinism() {
        let xs = instances();
        assert_eq!(nonzero(&xs), 10);
        assert_eq!(blankout(&xs, 0.0, 3).unwrap(), xs);
        let all = blankout(&xs, 1.0, 3).unwrap();
        assert_eq!(nonzero(&all), 0);
        assert!(all.iter().all(|x| x.missing_fraction == 1.0));
        let a = blankout(&xs, 0.4, 11).unwrap();
        assert_eq!(nonzero(&a), 6);
        assert_eq!(a, blankout(&xs, 0.4, 11).unwrap());
        for x in &a {
            assert_eq!(x.missing_fraction, x.sentence.scores.zero_fraction());
        }
        assert!(blankout(&xs, 1.5, 0).is_err());
        assert!(blankout(&xs, -0.1, 0).is_err());
    }

    #[test]
    fn subsample_cases() {
        let items: Vec<u32> = (0..10).collect();
        let mut all = subsample(&items, 50, 1);
        assert_eq!(all.len(), 10);
        all.sort();
        assert_eq!(all, items);
        assert_eq!(subsample(&items, 1, 1).len(), 1);
        assert_eq!(subsample(&items, 4, 9), subsample(&items, 4, 9));
    }
}
