//! Readers and writers for treebanks, embeddings and score corpora, plus
//! sentence featurization.
//!
//! Every reader comes in two flavours: `read_*` opens a path, `parse_*`
//! consumes any [`BufRead`] and labels errors with a caller-chosen origin.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::encoder::FeatureMatrix;
use crate::error::{Error, Result};
use crate::scores::{is_self_arc, ScoreMatrix};
use crate::tensor::DenseTensor;

/// A tokenized sentence with POS tags and optional gold heads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    pub id: String,
    pub tokens: Vec<String>,
    pub pos: Vec<String>,
    /// `heads[i]` is the head of token `i + 1`, 0 for the root.
    pub heads: Option<Vec<usize>>,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

fn origin(path: &Path) -> String {
    path.display().to_string()
}

pub fn read_treebank(path: impl AsRef<Path>) -> Result<Vec<Sentence>> {
    let path = path.as_ref();
    parse_treebank(open(path)?, &origin(path))
}

struct PendingSentence {
    id: Option<String>,
    tokens: Vec<String>,
    pos: Vec<String>,
    heads: Vec<Option<usize>>,
    first_line: usize,
}

impl PendingSentence {
    fn new() -> Self {
        PendingSentence {
            id: None,
            tokens: Vec::new(),
            pos: Vec::new(),
            heads: Vec::new(),
            first_line: 0,
        }
    }

    fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    fn finish(self, ordinal: usize, origin: &str) -> Result<Sentence> {
        let w = self.tokens.len();
        let locus = format!("{origin}:{}", self.first_line);
        let heads = if self.heads.iter().all(Option::is_none) {
            None
        } else if self.heads.iter().all(Option::is_some) {
            let heads: Vec<usize> = self.heads.into_iter().map(Option::unwrap).collect();
            if let Some(h) = heads.iter().find(|&&h| h > w) {
                return Err(Error::parse(locus, format!("head {h} beyond sentence length {w}")));
            }
            Some(heads)
        } else {
            return Err(Error::parse(locus, "sentence mixes numeric and '_' heads"));
        };
        Ok(Sentence {
            id: self.id.unwrap_or_else(|| ordinal.to_string()),
            tokens: self.tokens,
            pos: self.pos,
            heads,
        })
    }
}

/// Reads CoNLL-U. Comments, multi-word ranges and empty nodes are skipped;
/// only ID, FORM, UPOS and HEAD are kept. A `# sent_id = …` comment names the
/// sentence, otherwise its 1-based ordinal does.
pub fn parse_treebank<R: BufRead>(reader: R, origin: &str) -> Result<Vec<Sentence>> {
    let mut sentences = Vec::new();
    let mut cur = PendingSentence::new();
    for (n, line) in reader.lines().enumerate() {
        let lineno = n + 1;
        let locus = || format!("{origin}:{lineno}");
        let line = line.map_err(|e| Error::parse(locus(), e.to_string()))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !cur.is_empty() {
                let done = std::mem::replace(&mut cur, PendingSentence::new());
                sentences.push(done.finish(sentences.len() + 1, origin)?);
            } else {
                cur = PendingSentence::new();
            }
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                if key.trim() == "sent_id" {
                    cur.id = Some(value.trim().to_string());
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::parse(
                locus(),
                format!("expected 10 tab-separated columns, found {}", cols.len()),
            ));
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let id: usize = cols[0]
            .parse()
            .map_err(|_| Error::parse(locus(), format!("invalid token id {:?}", cols[0])))?;
        if id != cur.tokens.len() + 1 {
            return Err(Error::parse(
                locus(),
                format!("token id {id} out of sequence, expected {}", cur.tokens.len() + 1),
            ));
        }
        if cur.tokens.is_empty() {
            cur.first_line = lineno;
        }
        let head = match cols[6] {
            "_" => None,
            h => Some(
                h.parse::<usize>()
                    .map_err(|_| Error::parse(locus(), format!("non-integer head {h:?}")))?,
            ),
        };
        cur.tokens.push(cols[1].to_string());
        cur.pos.push(cols[3].to_string());
        cur.heads.push(head);
    }
    if !cur.is_empty() {
        sentences.push(cur.finish(sentences.len() + 1, origin)?);
    }
    Ok(sentences)
}

pub fn write_treebank(
    path: impl AsRef<Path>,
    sentences: &[Sentence],
    predicted_heads: Option<&[Vec<usize>]>,
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    format_treebank(&mut out, sentences, predicted_heads)?;
    out.flush()?;
    Ok(())
}

/// Writes CoNLL-U. HEAD comes from `predicted_heads` when given, else from
/// the sentence's own heads, else `_`. Columns not modelled here are `_`.
pub fn format_treebank<W: Write>(
    out: &mut W,
    sentences: &[Sentence],
    predicted_heads: Option<&[Vec<usize>]>,
) -> Result<()> {
    if let Some(pred) = predicted_heads {
        if pred.len() != sentences.len() {
            return Err(Error::Argument(format!(
                "{} predictions for {} sentences",
                pred.len(),
                sentences.len()
            )));
        }
        if let Some((k, _)) = pred
            .iter()
            .zip(sentences)
            .enumerate()
            .find(|(_, (p, s))| p.len() != s.len())
        {
            return Err(Error::Argument(format!(
                "prediction for sentence {} has the wrong length",
                k + 1
            )));
        }
    }
    for (k, s) in sentences.iter().enumerate() {
        if s.pos.len() != s.len() {
            return Err(Error::Argument(format!("sentence {} has mismatched POS tags", s.id)));
        }
        let heads = predicted_heads.map(|p| &p[k]).or(s.heads.as_ref());
        writeln!(out, "# sent_id = {}", s.id)?;
        for i in 0..s.len() {
            let head = heads.map_or("_".to_string(), |h| h[i].to_string());
            writeln!(
                out,
                "{}\t{}\t_\t{}\t_\t_\t{}\t_\t_\t_",
                i + 1,
                s.tokens[i],
                s.pos[i],
                head
            )?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Word vectors of a fixed width; unknown words map to the zero vector.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    width: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(width: usize) -> Self {
        EmbeddingTable {
            width,
            vectors: HashMap::new(),
        }
    }

    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.width {
            return Err(Error::shape(format!(
                "vector of width {} in a table of width {}",
                vector.len(),
                self.width
            )));
        }
        self.vectors.insert(word.into(), vector);
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    /// The stored vector, or zeros for unknown words.
    pub fn lookup(&self, word: &str) -> Vec<f64> {
        self.get(word)
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| vec![0.0; self.width])
    }
}

pub fn write_embeddings(path: impl AsRef<Path>, table: &EmbeddingTable) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    format_embeddings(&mut out, table)?;
    out.flush()?;
    Ok(())
}

/// One `word v₁ … v_k` line per entry, words in sorted order.
pub fn format_embeddings<W: Write>(out: &mut W, table: &EmbeddingTable) -> Result<()> {
    let mut words: Vec<&String> = table.vectors.keys().collect();
    words.sort();
    for w in words {
        let mut line = w.clone();
        for v in &table.vectors[w] {
            write!(line, " {v}").expect("writing to a String");
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    parse_embeddings(open(path)?, &origin(path))
}

/// Reads `word v₁ … v_k` lines. Blank lines are skipped; later duplicates win.
pub fn parse_embeddings<R: BufRead>(reader: R, origin: &str) -> Result<EmbeddingTable> {
    let mut table: Option<EmbeddingTable> = None;
    for (n, line) in reader.lines().enumerate() {
        let locus = || format!("{origin}:{}", n + 1);
        let line = line.map_err(|e| Error::parse(locus(), e.to_string()))?;
        let mut fields = line.split_whitespace();
        let Some(word) = fields.next() else {
            continue;
        };
        let vector = fields
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::parse(locus(), format!("invalid value {v:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if vector.is_empty() {
            return Err(Error::parse(locus(), "word without a vector"));
        }
        let table = table.get_or_insert_with(|| EmbeddingTable::new(vector.len()));
        if vector.len() != table.width {
            return Err(Error::parse(
                locus(),
                format!("width {} differs from {}", vector.len(), table.width),
            ));
        }
        table.vectors.insert(word.to_string(), vector);
    }
    table.ok_or_else(|| Error::parse(origin, "no embeddings found; width undefined"))
}

/// How tokens become feature rows.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub embedding_width: usize,
    /// Sorted tag inventory; position = one-hot index.
    pub pos_vocab: Vec<String>,
    pub use_pos: bool,
}

impl FeatureConfig {
    /// Freezes the POS inventory seen in `sentences`.
    pub fn from_sentences<'a>(
        embedding_width: usize,
        sentences: impl IntoIterator<Item = &'a Sentence>,
        use_pos: bool,
    ) -> Self {
        let tags: BTreeSet<&str> = sentences
            .into_iter()
            .flat_map(|s| s.pos.iter().map(String::as_str))
            .collect();
        FeatureConfig {
            embedding_width,
            pos_vocab: tags.into_iter().map(str::to_string).collect(),
            use_pos,
        }
    }

    pub fn width(&self) -> usize {
        self.embedding_width + if self.use_pos { self.pos_vocab.len() } else { 0 }
    }
}

/// Row `i` is the embedding of token `i` followed by the one-hot of its tag
/// (all zero for unseen tags).
pub fn featurize(s: &Sentence, emb: &EmbeddingTable, cfg: &FeatureConfig) -> Result<FeatureMatrix> {
    if emb.width() != cfg.embedding_width {
        return Err(Error::data(
            "embeddings",
            format!(
                "table width {} but feature configuration expects {}",
                emb.width(),
                cfg.embedding_width
            ),
        ));
    }
    if s.is_empty() {
        return Err(Error::data(format!("sentence {}", s.id), "empty sentence"));
    }
    let f = cfg.width();
    let mut data = Vec::with_capacity(s.len() * f);
    for (i, token) in s.tokens.iter().enumerate() {
        data.extend(emb.lookup(token));
        if cfg.use_pos {
            let mut onehot = vec![0.0; cfg.pos_vocab.len()];
            if let Some(tag) = s.pos.get(i) {
                if let Ok(k) = cfg.pos_vocab.binary_search(tag) {
                    onehot[k] = 1.0;
                }
            }
            data.extend(onehot);
        }
    }
    FeatureMatrix::new(DenseTensor::new(vec![s.len(), f], data)?)
}

/// A sentence paired with an edge-score matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredSentence {
    pub id: String,
    pub tokens: Vec<String>,
    pub pos: Vec<String>,
    pub scores: ScoreMatrix,
}

impl ScoredSentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// As a [`Sentence`] without heads.
    pub fn sentence(&self) -> Sentence {
        Sentence {
            id: self.id.clone(),
            tokens: self.tokens.clone(),
            pos: self.pos.clone(),
            heads: None,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScoreRecord {
    id: String,
    tokens: Vec<String>,
    pos: Vec<String>,
    scores: Vec<Vec<Option<f64>>>,
}

/// Seventeen significant digits: enough to round-trip any `f64`.
fn push_f64(out: &mut String, v: f64) {
    write!(out, "{v:.16e}").expect("writing to a String");
}

fn push_json_str(out: &mut String, s: &str) {
    out.push_str(&serde_json::to_string(s).expect("strings serialize"));
}

/// One JSON object per sentence, self-arc cells as `null`.
pub fn score_record_line(s: &ScoredSentence) -> String {
    let mut out = String::from("{\"id\":");
    push_json_str(&mut out, &s.id);
    out.push_str(",\"tokens\":");
    out.push_str(&serde_json::to_string(&s.tokens).expect("strings serialize"));
    out.push_str(",\"pos\":");
    out.push_str(&serde_json::to_string(&s.pos).expect("strings serialize"));
    out.push_str(",\"scores\":[");
    let w = s.scores.len();
    for i in 0..w {
        if i > 0 {
            out.push(',');
        }
        out.push('[');
        for j in 0..=w {
            if j > 0 {
                out.push(',');
            }
            if is_self_arc(i, j) {
                out.push_str("null");
            } else {
                push_f64(&mut out, s.scores.get(i, j));
            }
        }
        out.push(']');
    }
    out.push_str("]}");
    out
}

pub fn write_score_corpus(path: impl AsRef<Path>, sentences: &[ScoredSentence]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    format_score_corpus(&mut out, sentences)?;
    out.flush()?;
    Ok(())
}

pub fn format_score_corpus<W: Write>(out: &mut W, sentences: &[ScoredSentence]) -> Result<()> {
    for s in sentences {
        writeln!(out, "{}", score_record_line(s))?;
    }
    Ok(())
}

pub fn read_score_corpus(path: impl AsRef<Path>) -> Result<Vec<ScoredSentence>> {
    let path = path.as_ref();
    parse_score_corpus(open(path)?, &origin(path))
}

/// Parses one JSON record per non-blank line.
pub fn parse_score_corpus<R: BufRead>(reader: R, origin: &str) -> Result<Vec<ScoredSentence>> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let locus = format!("{origin}:{}", n + 1);
        let line = line.map_err(|e| Error::parse(&locus, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ScoreRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(&locus, e.to_string()))?;
        let record_locus = format!("{locus} (record {})", rec.id);
        let w = rec.tokens.len();
        if w == 0 {
            return Err(Error::data(record_locus, "record has no tokens"));
        }
        if rec.pos.len() != w {
            return Err(Error::data(record_locus, "pos and tokens differ in length"));
        }
        if rec.scores.len() != w || rec.scores.iter().any(|r| r.len() != w + 1) {
            return Err(Error::data(
                record_locus,
                format!("scores must be {w} x {}", w + 1),
            ));
        }
        let mut scores = ScoreMatrix::zeros(w);
        for (i, row) in rec.scores.iter().enumerate() {
            for (j, cell) in row.iter().enumerate() {
                match (is_self_arc(i, j), cell) {
                    (true, None) => {}
                    (false, Some(v)) if v.is_finite() => scores.set(i, j, *v),
                    (true, Some(_)) => {
                        return Err(Error::data(
                            record_locus,
                            format!("self-arc cell ({i}, {j}) must be null"),
                        ))
                    }
                    _ => {
                        return Err(Error::data(
                            record_locus,
                            format!("cell ({i}, {j}) must be a finite number"),
                        ))
                    }
                }
            }
        }
        out.push(ScoredSentence {
            id: rec.id,
            tokens: rec.tokens,
            pos: rec.pos,
            scores,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embeddings_round_trip() {
        let mut t = EmbeddingTable::new(2);
        t.insert("b", vec![0.1, -3.5e-300]).unwrap();
        t.insert("a", vec![1.0 / 3.0, 2.0]).unwrap();
        let mut buf = Vec::new();
        format_embeddings(&mut buf, &t).unwrap();
        assert!(buf.starts_with(b"a "));
        assert_eq!(parse_embeddings(buf.as_slice(), "mem").unwrap(), t);
    }

    const TWO: &str = "# sent_id = s1\n1\tJohn\tjohn\tPROPN\t_\t_\t2\tnsubj\t_\t_\n2\twalks\twalk\tVERB\t_\t_\t0\troot\t_\t_\n\n";

    #[test]
    fn reads_a_two_token_sentence() {
        let s = parse_treebank(TWO.as_bytes(), "t").unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].id, "s1");
        assert_eq!(s[0].tokens, ["John", "walks"]);
        assert_eq!(s[0].pos, ["PROPN", "VERB"]);
        assert_eq!(s[0].heads, Some(vec![2, 0]));
    }

    #[test]
    fn skips_ranges_and_empty_nodes() {
        let text = "1-2\tdel\t_\t_\t_\t_\t_\t_\t_\t_\n1\tde\t_\tADP\t_\t_\t2\t_\t_\t_\n2\tel\t_\tDET\t_\t_\t0\t_\t_\t_\n2.1\tx\t_\tX\t_\t_\t_\t_\t_\t_\n";
        let s = parse_treebank(text.as_bytes(), "t").unwrap();
        assert_eq!(s[0].tokens, ["de", "el"]);
        assert_eq!(s[0].id, "1");
    }

    #[test]
    fn malformed_lines_report_their_line() {
        let err = parse_treebank("1\tx\t_\tX\n".as_bytes(), "f").unwrap_err();
        assert!(matches!(err, Error::Parse { ref locus, .. } if locus == "f:1"), "{err}");
        let err = parse_treebank("1\tx\t_\tX\t_\t_\tab\t_\t_\t_\n".as_bytes(), "f").unwrap_err();
        assert!(err.to_string().contains("non-integer head"));
        let err = parse_treebank("1\tx\t_\tX\t_\t_\t5\t_\t_\t_\n".as_bytes(), "f").unwrap_err();
        assert!(err.to_string().contains("beyond sentence length"));
        let err = parse_treebank("2\tx\t_\tX\t_\t_\t0\t_\t_\t_\n".as_bytes(), "f").unwrap_err();
        assert!(err.to_string().contains("out of sequence"));
    }

    #[test]
    fn writes_empty_and_single_token_corpora() {
        let mut buf = Vec::new();
        format_treebank(&mut buf, &[], None).unwrap();
        assert!(buf.is_empty());

        let s = Sentence {
            id: "a".into(),
            tokens: vec!["Hi".into()],
            pos: vec!["INTJ".into()],
            heads: None,
        };
        let mut buf = Vec::new();
        format_treebank(&mut buf, std::slice::from_ref(&s), Some(&[vec![0]])).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "# sent_id = a\n1\tHi\t_\tINTJ\t_\t_\t0\t_\t_\t_\n\n");
        assert!(format_treebank(&mut Vec::new(), &[s], Some(&[vec![0, 1]])).is_err());
    }

    #[test]
    fn embeddings_width_and_unknowns() {
        let table = parse_embeddings("a 1 2 3\nb 4 5 6\n".as_bytes(), "e").unwrap();
        assert_eq!(table.width(), 3);
        assert_eq!(table.lookup("b"), vec![4.0, 5.0, 6.0]);
        assert_eq!(table.lookup("zzz"), vec![0.0; 3]);

        let dup = parse_embeddings("a 1\na 2\n".as_bytes(), "e").unwrap();
        assert_eq!(dup.lookup("a"), vec![2.0]);

        assert!(parse_embeddings("".as_bytes(), "e").is_err());
        let err = parse_embeddings("a 1 2\nb 1\n".as_bytes(), "e").unwrap_err();
        assert!(matches!(err, Error::Parse { ref locus, .. } if locus == "e:2"));
    }

    fn feature_setup() -> (EmbeddingTable, FeatureConfig) {
        let mut emb = EmbeddingTable::new(2);
        emb.insert("dog", vec![0.5, -1.0]).unwrap();
        let cfg = FeatureConfig {
            embedding_width: 2,
            pos_vocab: vec!["DET".into(), "NOUN".into(), "VERB".into()],
            use_pos: true,
        };
        (emb, cfg)
    }

    #[test]
    fn featurize_known_and_unknown() {
        let (emb, cfg) = feature_setup();
        let s = Sentence {
            id: "1".into(),
            tokens: vec!["dog".into(), "cat".into()],
            pos: vec!["NOUN".into(), "ADJ".into()],
            heads: None,
        };
        let f = featurize(&s, &emb, &cfg).unwrap();
        assert_eq!(f.width(), 5);
        assert_eq!(f.values().row(0), &[0.5, -1.0, 0.0, 1.0, 0.0]);
        assert_eq!(f.values().row(1), &[0.0; 5]);

        let no_pos = FeatureConfig {
            use_pos: false,
            ..cfg
        };
        assert_eq!(featurize(&s, &emb, &no_pos).unwrap().width(), 2);
    }

    #[test]
    fn pos_vocab_is_sorted_and_unique() {
        let s = parse_treebank(TWO.as_bytes(), "t").unwrap();
        let cfg = FeatureConfig::from_sentences(4, s.iter().chain(s.iter()), true);
        assert_eq!(cfg.pos_vocab, ["PROPN", "VERB"]);
        assert_eq!(cfg.width(), 6);
    }

    #[test]
    fn score_corpus_null_cells_and_shape_errors() {
        let line = r#"{"id":"x","tokens":["a","b"],"pos":["N","V"],"scores":[[1.5,null,-2],[0.25,3,null]]}"#;
        let s = parse_score_corpus(line.as_bytes(), "c").unwrap();
        assert_eq!(s[0].scores.get(0, 2), -2.0);
        assert_eq!(s[0].scores.get(1, 1), 3.0);

        let bad = r#"{"id":"y","tokens":["a"],"pos":["N"],"scores":[[1.0]]}"#;
        let err = parse_score_corpus(bad.as_bytes(), "c").unwrap_err();
        assert!(err.to_string().contains("record y"), "{err}");

        let not_null = r#"{"id":"z","tokens":["a"],"pos":["N"],"scores":[[1.0,2.0]]}"#;
        assert!(parse_score_corpus(not_null.as_bytes(), "c").is_err());

        assert!(parse_score_corpus("".as_bytes(), "c").unwrap().is_empty());
    }

    #[test]
    fn score_corpus_is_value_exact() {
        let mut scores = ScoreMatrix::zeros(2);
        scores.set(0, 0, 0.1 + 0.2);
        scores.set(0, 2, -1.0 / 3.0);
        scores.set(1, 0, 1e-300);
        scores.set(1, 1, f64::MAX);
        let s = ScoredSentence {
            id: "q\"uote".into(),
            tokens: vec!["a".into(), "b c".into()],
            pos: vec!["X".into(), "Y".into()],
            scores,
        };
        let mut buf = Vec::new();
        format_score_corpus(&mut buf, std::slice::from_ref(&s)).unwrap();
        let back = parse_score_corpus(buf.as_slice(), "mem").unwrap();
        assert_eq!(back, vec![s]);
    }
}
