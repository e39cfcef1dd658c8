#![allow(dead_code)]

use rand::Rng;

use tlstm::corpus_io::{ScoredSentence, Sentence};
use tlstm::encoder::{LayerParams, LstmParams, ModelDims, ModelParams, ScoringMode};
use tlstm::losses::GoldTarget;
use tlstm::projection::{
    AlignedPair, SentenceAlignment, SentenceLink, SourceCorpus, WordAlignment, WordLink,
};
use tlstm::trainer::{example_gradients, LossMode, TrainingExample};
use tlstm::{DenseTensor, ScoreMatrix};

pub fn random_tensor<R: Rng>(shape: &[usize], rng: &mut R) -> DenseTensor {
    let n = shape.iter().product();
    DenseTensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

pub fn random_lstm<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> LstmParams {
    let mut p = LstmParams::zeros(input, hidden);
    for w in [&mut p.w_input, &mut p.w_forget, &mut p.w_output, &mut p.w_cell] {
        *w = random_tensor(&[hidden, input + hidden], rng);
    }
    for b in [&mut p.b_input, &mut p.b_forget, &mut p.b_output, &mut p.b_cell] {
        *b = random_tensor(&[hidden], rng);
    }
    p
}

pub fn random_layer<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> LayerParams {
    LayerParams {
        row_fwd: random_lstm(input, hidden, rng),
        row_bwd: random_lstm(input, hidden, rng),
        col_fwd: random_lstm(input, hidden, rng),
        col_bwd: random_lstm(input, hidden, rng),
    }
}

pub fn random_model<R: Rng>(dims: ModelDims, rng: &mut R) -> ModelParams {
    let mut m = ModelParams::zeros(dims).unwrap();
    for (k, layer) in m.layers.iter_mut().enumerate() {
        *layer = random_layer(dims.layer_input(k), dims.hidden, rng);
    }
    m.output_weights = random_tensor(&[4 * dims.hidden], rng);
    m.output_bias = rng.random_range(-1.0..1.0);
    m
}

pub fn random_scores<R: Rng>(w: usize, rng: &mut R) -> ScoreMatrix {
    let mut s = ScoreMatrix::zeros(w);
    for (i, j) in ScoreMatrix::zeros(w).unmasked_cells() {
        s.set(i, j, rng.random_range(-1.0..1.0));
    }
    s
}

/// Uniformly random head assignment that forms a tree.
pub fn random_tree<R: Rng>(w: usize, rng: &mut R) -> Vec<usize> {
    loop {
        let heads: Vec<usize> = (0..w)
            .map(|i| loop {
                let h = rng.random_range(0..=w);
                if h != i + 1 {
                    break h;
                }
            })
            .collect();
        if tlstm::ParseTree::new(heads.clone()).is_ok() {
            return heads;
        }
    }
}

/// Every arborescence over `w` tokens, by enumeration of all head vectors.
pub fn all_trees(w: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut heads = vec![0usize; w];
    loop {
        if tlstm::ParseTree::new(heads.clone()).is_ok() {
            out.push(heads.clone());
        }
        let mut k = 0;
        loop {
            if k == w {
                return out;
            }
            heads[k] += 1;
            if heads[k] <= w {
                break;
            }
            heads[k] = 0;
            k += 1;
        }
    }
}

pub fn tree_score(scores: &ScoreMatrix, heads: &[usize]) -> f64 {
    heads.iter().enumerate().map(|(i, &h)| scores.get(i, h)).sum()
}

/// Gradient check result for one parameter tensor.
#[derive(Clone, Debug)]
pub struct GradientCheck {
    pub name: String,
    /// Largest `|analytic − fd| / max(1e-8, |fd|)` over the components.
    pub max_relative: f64,
    pub max_abs_error: f64,
    pub max_abs_analytic: f64,
    pub max_abs_fd: f64,
}

/// Compares analytic gradients with central differences of step `delta`
/// for every parameter component.
pub fn gradient_check(
    model: &ModelParams,
    example: &TrainingExample,
    loss: LossMode,
    delta: f64,
) -> Vec<GradientCheck> {
    let dims = model.dims;
    let mut params = model.to_param_set();
    let ctx = example_gradients(&params, &dims, example, loss, ScoringMode::Eval).unwrap();
    let mut out = Vec::new();
    for k in 0..params.len() {
        let mut check = GradientCheck {
            name: params.names()[k].clone(),
            max_relative: 0.0,
            max_abs_error: 0.0,
            max_abs_analytic: 0.0,
            max_abs_fd: 0.0,
        };
        for e in 0..params.tensors()[k].len() {
            let orig = params.tensors()[k].data()[e];
            params.tensors_mut()[k].data_mut()[e] = orig + delta;
            let up = example_gradients(&params, &dims, example, loss, ScoringMode::Eval).unwrap().loss;
            params.tensors_mut()[k].data_mut()[e] = orig - delta;
            let down = example_gradients(&params, &dims, example, loss, ScoringMode::Eval).unwrap().loss;
            params.tensors_mut()[k].data_mut()[e] = orig;
            let fd = (up - down) / (2.0 * delta);
            let analytic = ctx.grads[k].data()[e];
            let err = (analytic - fd).abs();
            check.max_relative = check.max_relative.max(err / fd.abs().max(1e-8));
            check.max_abs_error = check.max_abs_error.max(err);
            check.max_abs_analytic = check.max_abs_analytic.max(analytic.abs());
            check.max_abs_fd = check.max_abs_fd.max(fd.abs());
        }
        out.push(check);
    }
    out
}

/// A small random example for gradient checks: `w` tokens, `f` features.
pub fn gradient_example<R: Rng>(loss: LossMode, w: usize, f: usize, rng: &mut R) -> TrainingExample {
    let features = tlstm::FeatureMatrix::new(random_tensor(&[w, f], rng)).unwrap();
    let target = match loss {
        LossMode::CrossEntropy => GoldTarget::Tree(tlstm::ParseTree::new(random_tree(w, rng)).unwrap()),
        LossMode::Mse => GoldTarget::Scores(random_scores(w, rng)),
    };
    TrainingExample { features, target }
}

/// A random multi-source projection setup.
pub struct ProjectionSetup {
    pub targets: Vec<Sentence>,
    pub sources: Vec<SourceCorpus>,
    pub sentence_alignments: Vec<SentenceAlignment>,
    pub word_alignments: Vec<WordAlignment>,
}

fn plain_sentence(id: String, w: usize) -> Sentence {
    Sentence {
        id,
        tokens: (0..w).map(|k| format!("w{k}")).collect(),
        pos: vec!["X".into(); w],
        heads: None,
    }
}

fn confidence<R: Rng>(rng: &mut R) -> f64 {
    match rng.random_range(0..10) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.random_range(0.0..1.0),
    }
}

pub fn random_projection_setup<R: Rng>(rng: &mut R) -> ProjectionSetup {
    let n_targets = rng.random_range(1..=5);
    let targets: Vec<Sentence> = (0..n_targets)
        .map(|t| plain_sentence(format!("t{t}"), rng.random_range(1..=6)))
        .collect();
    let n_sources = rng.random_range(1..=3);
    let mut setup = ProjectionSetup {
        targets,
        sources: Vec::new(),
        sentence_alignments: Vec::new(),
        word_alignments: Vec::new(),
    };
    for k in 0..n_sources {
        let n_sent = rng.random_range(1..=5);
        let sentences: Vec<ScoredSentence> = (0..n_sent)
            .map(|s| {
                let w = rng.random_range(1..=6);
                let base = plain_sentence(format!("s{k}.{s}"), w);
                let mut scores = random_scores(w, rng);
                for (i, j) in ScoreMatrix::zeros(w).unmasked_cells() {
                    scores.set(i, j, scores.get(i, j) * 3.0);
                }
                ScoredSentence {
                    id: base.id,
                    tokens: base.tokens,
                    pos: base.pos,
                    scores,
                }
            })
            .collect();
        let mut sa = SentenceAlignment {
            origin: format!("sent{k}"),
            links: Vec::new(),
        };
        let mut wa = WordAlignment {
            origin: format!("word{k}"),
            pairs: Vec::new(),
        };
        for s in &sentences {
            for t in &setup.targets {
                // leave some targets without any evidence
                if rng.random_range(0..3) == 0 || (t.id == "t0" && n_targets > 1) {
                    continue;
                }
                sa.links.push(SentenceLink {
                    source_id: s.id.clone(),
                    target_id: t.id.clone(),
                    confidence: confidence(rng),
                    line: sa.links.len() + 1,
                });
                if rng.random_range(0..5) == 0 {
                    continue;
                }
                let mut links = Vec::new();
                for i in 0..=s.len() {
                    for j in 0..=t.len() {
                        if (i, j) != (0, 0) && rng.random_range(0..4) == 0 {
                            links.push(WordLink {
                                source: i,
                                target: j,
                                confidence: confidence(rng),
                            });
                        }
                    }
                }
                wa.pairs.push(AlignedPair {
                    source_id: s.id.clone(),
                    target_id: t.id.clone(),
                    links,
                    line: wa.pairs.len() + 1,
                });
            }
        }
        setup.sources.push(SourceCorpus {
            language: format!("l{k}"),
            sentences,
        });
        setup.sentence_alignments.push(sa);
        setup.word_alignments.push(wa);
    }
    setup
}

/// Direct transcription of the projection formulas with nested loops.
pub fn projection_oracle(setup: &ProjectionSetup) -> Vec<ScoreMatrix> {
    let mut out = Vec::new();
    for target in &setup.targets {
        let wt = target.len();
        let mut result = ScoreMatrix::zeros(wt);
        let mut z = 0.0;
        for sa in &setup.sentence_alignments {
            for link in sa.links.iter().filter(|l| l.target_id == target.id) {
                z += link.confidence;
            }
        }
        for v_t in 1..=wt {
            for u_t in 0..=wt {
                if u_t == v_t {
                    continue;
                }
                let mut total = 0.0;
                for ((src, sa), wa) in setup
                    .sources
                    .iter()
                    .zip(&setup.sentence_alignments)
                    .zip(&setup.word_alignments)
                {
                    for link in sa.links.iter().filter(|l| l.target_id == target.id) {
                        let source = src.sentences.iter().find(|s| s.id == link.source_id).unwrap();
                        let pair = wa
                            .pairs
                            .iter()
                            .find(|p| p.source_id == link.source_id && p.target_id == target.id);
                        let w = |s: usize, t: usize| -> f64 {
                            if s == 0 && t == 0 {
                                return 1.0;
                            }
                            pair.and_then(|p| p.links.iter().find(|l| l.source == s && l.target == t))
                                .map_or(0.0, |l| l.confidence)
                        };
                        let ws = source.len();
                        let mut best = f64::NEG_INFINITY;
                        for v_s in 1..=ws {
                            for u_s in 0..=ws {
                                if u_s == v_s {
                                    continue;
                                }
                                let vote = w(u_s, u_t) * w(v_s, v_t) * source.scores.get(v_s - 1, u_s);
                                if vote > best {
                                    best = vote;
                                }
                            }
                        }
                        total += link.confidence * best;
                    }
                }
                result.set(v_t - 1, u_t, if z == 0.0 { 0.0 } else { total / z });
            }
        }
        out.push(result);
    }
    out
}
