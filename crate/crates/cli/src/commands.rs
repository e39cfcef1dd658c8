use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use tlstm::corpus_io::{
    featurize, read_embeddings, read_score_corpus, read_treebank, write_embeddings,
    write_score_corpus, write_treebank, EmbeddingTable, FeatureConfig, ScoredSentence, Sentence,
};
use tlstm::losses::GoldTarget;
use tlstm::model_file::{load_model, save_model, SavedModel};
use tlstm::projection::{
    blankout, project as project_scores, read_sentence_alignment, read_word_alignment, standardize,
    ProjectedInstance, SourceCorpus,
};
use tlstm::synthetic::{generate, SyntheticConfig};
use tlstm::trainer::{
    attachment_score, decode_targets, evaluate_uas, predict_heads, train as fit, EvalExample,
    LossMode, Schedule, TrainConfig, TrainingExample,
};
use tlstm::encoder::{score_sentence, ScoringMode};
use tlstm::{Error, FeatureMatrix, ParseTree};

use crate::args::*;

/// Why a command failed, mapped onto the process exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Core(Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Core(Error::Argument(_) | Error::Config(_)) => 2,
            Failure::Core(Error::Numeric { .. }) => 3,
            Failure::Core(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn loss_mode(l: Loss) -> LossMode {
    match l {
        Loss::Xent => LossMode::CrossEntropy,
        Loss::Mse => LossMode::Mse,
    }
}

fn featurize_all(
    sentences: &[Sentence],
    emb: &EmbeddingTable,
    cfg: &FeatureConfig,
) -> Result<Vec<FeatureMatrix>, Error> {
    sentences.iter().map(|s| featurize(s, emb, cfg)).collect()
}

fn gold_heads(s: &Sentence, origin: &Path) -> Result<Vec<usize>, Error> {
    s.heads.clone().ok_or_else(|| Error::Data {
        locus: format!("{} sentence {}", origin.display(), s.id),
        detail: "gold heads required".into(),
    })
}

fn read_gold(path: &Path) -> Result<Vec<Sentence>, Error> {
    let sentences = read_treebank(path)?;
    for s in &sentences {
        ParseTree::new(gold_heads(s, path)?).map_err(|e| Error::Data {
            locus: format!("{} sentence {}", path.display(), s.id),
            detail: e.to_string(),
        })?;
    }
    Ok(sentences)
}

fn dev_examples(
    path: &Path,
    emb: &EmbeddingTable,
    cfg: &FeatureConfig,
) -> Result<Vec<EvalExample>, Error> {
    let sentences = read_gold(path)?;
    let features = featurize_all(&sentences, emb, cfg)?;
    Ok(sentences
        .into_iter()
        .zip(features)
        .map(|(s, features)| EvalExample {
            features,
            heads: s.heads.expect("checked by read_gold"),
        })
        .collect())
}

fn base_config(loss: LossMode, mode: Mode, seed: u64, shape: &ModelShape) -> TrainConfig {
    let mut cfg = match mode {
        Mode::Mono => TrainConfig::monolingual(loss),
        Mode::Xling => TrainConfig::cross_lingual(loss),
    };
    cfg.seed = seed;
    cfg.hidden = shape.hidden;
    cfg.layers = shape.layers;
    cfg.batch_size = shape.batch_size;
    cfg.subsample = shape.subsample;
    if shape.no_noise {
        cfg.gradient_noise = false;
    }
    if shape.no_dropout {
        cfg.dropout_hidden = 0.0;
        cfg.dropout_input = 0.0;
    }
    cfg
}

fn check_shape(shape: &ModelShape) -> Outcome {
    if shape.hidden == 0 || shape.layers == 0 || shape.batch_size == 0 {
        return Err(usage("--hidden, --layers and --batch-size must be at least 1"));
    }
    if shape.subsample == Some(0) {
        return Err(usage("--subsample must be at least 1"));
    }
    Ok(())
}

fn metrics_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".metrics.jsonl");
    PathBuf::from(name)
}

pub fn train(a: TrainArgs) -> Outcome {
    check_shape(&a.shape)?;
    if a.epochs == Some(0) {
        return Err(usage("--epochs must be at least 1"));
    }
    if a.mode == Mode::Mono && a.dev.is_none() && a.epochs.is_none() {
        return Err(usage("mono training without --dev needs --epochs"));
    }
    let loss = loss_mode(a.loss);
    let emb = read_embeddings(&a.embeddings)?;

    let (sentences, data) = match a.mode {
        Mode::Mono => {
            let sentences = read_gold(&a.train)?;
            let targets = sentences
                .iter()
                .map(|s| Ok(GoldTarget::Tree(ParseTree::new(gold_heads(s, &a.train)?)?)))
                .collect::<Result<Vec<_>, Error>>()?;
            (sentences, targets)
        }
        Mode::Xling => {
            let scored = read_score_corpus(&a.train)?;
            let sentences: Vec<Sentence> = scored.iter().map(ScoredSentence::sentence).collect();
            let targets = scored.into_iter().map(|s| GoldTarget::Scores(s.scores)).collect();
            (sentences, targets)
        }
    };
    if sentences.is_empty() {
        return Err(Error::Data {
            locus: a.train.display().to_string(),
            detail: "no training sentences".into(),
        }
        .into());
    }
    let features = FeatureConfig::from_sentences(emb.width(), &sentences, !a.no_pos);
    let matrices = featurize_all(&sentences, &emb, &features)?;
    let mut examples: Vec<TrainingExample> = matrices
        .into_iter()
        .zip(data)
        .map(|(features, target)| TrainingExample { features, target })
        .collect();
    // cross entropy needs trees: decode projected scores up front
    if a.mode == Mode::Xling && loss == LossMode::CrossEntropy {
        examples = decode_targets(&examples);
    }
    let dev = match &a.dev {
        Some(p) => Some(dev_examples(p, &emb, &features)?),
        None => None,
    };

    let mut cfg = base_config(loss, a.mode, a.seed, &a.shape);
    cfg.schedule = match (a.mode, &dev) {
        (Mode::Mono, Some(_)) => Schedule::EarlyStopping {
            patience: 5,
            max_epochs: a.epochs.unwrap_or(100),
        },
        (Mode::Mono, None) => Schedule::FixedEpochs(a.epochs.expect("checked above")),
        (Mode::Xling, _) => a.epochs.map_or(cfg.schedule, Schedule::FixedEpochs),
    };
    let outcome = fit(&examples, dev.as_deref(), &cfg)?;

    save_model(
        &a.out,
        &SavedModel {
            params: outcome.model,
            features,
        },
    )?;
    let log = a.metrics.unwrap_or_else(|| metrics_path(&a.out));
    let mut out = BufWriter::new(File::create(&log)?);
    for m in &outcome.metrics {
        let line = serde_json::to_string(m).map_err(std::io::Error::from)?;
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    eprintln!(
        "trained {} epochs, kept epoch {}",
        outcome.metrics.len(),
        outcome.selected_epoch
    );
    Ok(())
}

fn load_for_input(model: &Path, input: &Path, embeddings: &Path) -> Result<(SavedModel, Vec<Sentence>, Vec<FeatureMatrix>), Error> {
    let saved = load_model(model)?;
    let emb = read_embeddings(embeddings)?;
    let sentences = read_treebank(input)?;
    let features = featurize_all(&sentences, &emb, &saved.features)?;
    Ok((saved, sentences, features))
}

pub fn export_scores(a: ExportArgs) -> Outcome {
    let (saved, sentences, features) = load_for_input(&a.model, &a.input, &a.embeddings)?;
    let scored = sentences
        .iter()
        .zip(&features)
        .map(|(s, f)| {
            let scores = score_sentence(f, &saved.params, ScoringMode::Eval)?;
            Ok(ScoredSentence {
                id: s.id.clone(),
                tokens: s.tokens.clone(),
                pos: s.pos.clone(),
                scores: scores.with_masked_zeroed(),
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    write_score_corpus(&a.out, &scored)?;
    Ok(())
}

pub fn parse(a: ParseArgs) -> Outcome {
    let (saved, sentences, features) = load_for_input(&a.model, &a.input, &a.embeddings)?;
    let heads = predict_heads(&saved.params, &features)?;
    write_treebank(&a.out, &sentences, Some(&heads))?;
    Ok(())
}

pub fn project(a: ProjectArgs) -> Outcome {
    if a.sources.len() != a.sent_align.len() || a.sources.len() != a.word_align.len() {
        return Err(usage(format!(
            "{} --sources need as many --sent-align and --word-align files, got {} and {}",
            a.sources.len(),
            a.sent_align.len(),
            a.word_align.len()
        )));
    }
    let targets = read_treebank(&a.target)?;
    let mut sources = Vec::with_capacity(a.sources.len());
    for path in &a.sources {
        let corpus = SourceCorpus {
            language: path.display().to_string(),
            sentences: read_score_corpus(path)?,
        };
        sources.push(if a.no_standardize {
            corpus
        } else {
            standardize(&corpus)?
        });
    }
    let sent_align = a
        .sent_align
        .iter()
        .map(read_sentence_alignment)
        .collect::<Result<Vec<_>, Error>>()?;
    let word_align = a
        .word_align
        .iter()
        .map(read_word_alignment)
        .collect::<Result<Vec<_>, Error>>()?;
    let projected = project_scores(&targets, &sources, &sent_align, &word_align)?;
    let scored: Vec<ScoredSentence> = projected.iter().map(|p| p.sentence.clone()).collect();
    write_score_corpus(&a.out, &scored)?;

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "id\tmissing_fraction")?;
    for p in &projected {
        writeln!(out, "{}\t{:.4}", p.sentence.id, p.missing_fraction)?;
    }
    if !projected.is_empty() {
        let mean = projected.iter().map(|p| p.missing_fraction).sum::<f64>() / projected.len() as f64;
        writeln!(out, "mean\t{mean:.4}")?;
    }
    Ok(())
}

pub fn eval(a: EvalArgs) -> Outcome {
    let gold = read_gold(&a.gold)?;
    let pred = read_treebank(&a.pred)?;
    if gold.len() != pred.len() {
        return Err(Error::Data {
            locus: a.pred.display().to_string(),
            detail: format!("{} sentences, gold has {}", pred.len(), gold.len()),
        }
        .into());
    }
    let mut g = Vec::with_capacity(gold.len());
    let mut p = Vec::with_capacity(pred.len());
    for (gs, ps) in gold.iter().zip(&pred) {
        let heads = gold_heads(ps, &a.pred)?;
        if heads.len() != gs.len() {
            return Err(Error::Data {
                locus: format!("{} sentence {}", a.pred.display(), ps.id),
                detail: format!("{} tokens, gold has {}", heads.len(), gs.len()),
            }
            .into());
        }
        g.push(gold_heads(gs, &a.gold)?);
        p.push(heads);
    }
    let uas = attachment_score(&g, &p)?;
    println!("{:.2}", 100.0 * uas);
    Ok(())
}

pub fn blankout_experiment(a: BlankoutArgs) -> Outcome {
    check_shape(&a.shape)?;
    if a.fractions.is_empty() {
        return Err(usage("--fractions is empty"));
    }
    if let Some(p) = a.fractions.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(usage(format!("fraction {p} outside [0, 1]")));
    }
    if a.epochs == Some(0) {
        return Err(usage("--epochs must be at least 1"));
    }
    let losses: &[LossMode] = match a.loss {
        LossChoice::Xent => &[LossMode::CrossEntropy],
        LossChoice::Mse => &[LossMode::Mse],
        LossChoice::Both => &[LossMode::CrossEntropy, LossMode::Mse],
    };

    let emb = read_embeddings(&a.embeddings)?;
    let scored = read_score_corpus(&a.train)?;
    if scored.is_empty() {
        return Err(Error::Data {
            locus: a.train.display().to_string(),
            detail: "no training sentences".into(),
        }
        .into());
    }
    let sentences: Vec<Sentence> = scored.iter().map(ScoredSentence::sentence).collect();
    let features = FeatureConfig::from_sentences(emb.width(), &sentences, !a.no_pos);
    let matrices = featurize_all(&sentences, &emb, &features)?;
    let dev = dev_examples(&a.dev, &emb, &features)?;
    let instances: Vec<ProjectedInstance> = scored.into_iter().map(ProjectedInstance::new).collect();

    let mut rows = Vec::new();
    for &fraction in &a.fractions {
        let blanked = blankout(&instances, fraction, a.seed)?;
        let examples: Vec<TrainingExample> = matrices
            .iter()
            .zip(&blanked)
            .map(|(f, inst)| TrainingExample {
                features: f.clone(),
                target: GoldTarget::Scores(inst.sentence.scores.clone()),
            })
            .collect();
        for &loss in losses {
            let mut cfg = base_config(loss, Mode::Xling, a.seed, &a.shape);
            if let Some(n) = a.epochs {
                cfg.schedule = Schedule::FixedEpochs(n);
            }
            let data = match loss {
                LossMode::CrossEntropy => decode_targets(&examples),
                LossMode::Mse => examples.clone(),
            };
            let outcome = fit(&data, None, &cfg)?;
            let uas = evaluate_uas(&outcome.model, &dev)?;
            eprintln!("fraction {fraction} loss {} uas {:.2}", loss.as_str(), 100.0 * uas);
            rows.push((fraction, loss, uas));
        }
    }

    let mut out = BufWriter::new(File::create(&a.out)?);
    writeln!(out, "fraction\tloss\tuas")?;
    for (fraction, loss, uas) in &rows {
        writeln!(out, "{fraction}\t{}\t{:.4}", loss.as_str(), 100.0 * uas)?;
    }
    out.flush()?;

    let (lo, hi) = a.fractions.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &f| {
        (lo.min(f), hi.max(f))
    });
    for &loss in losses {
        let at = |f: f64| rows.iter().find(|r| r.0 == f && r.1 == loss).map(|r| 100.0 * r.2);
        if let (Some(first), Some(last)) = (at(lo), at(hi)) {
            println!(
                "{}: UAS {first:.2} at fraction {lo}, {last:.2} at fraction {hi}, change {:+.2}",
                loss.as_str(),
                last - first
            );
        }
    }
    Ok(())
}

pub fn synth(a: SynthArgs) -> Outcome {
    if a.sentences == 0 {
        return Err(usage("--sentences must be at least 1"));
    }
    let corpus = generate(&SyntheticConfig {
        sentences: a.sentences + a.dev_sentences,
        max_len: a.max_len,
        embedding_width: a.embedding_width,
        noise: a.noise,
        seed: a.seed,
    })?;
    fs::create_dir_all(&a.out_dir)?;
    let (train, dev) = corpus.treebank.split_at(a.sentences);
    write_treebank(a.out_dir.join("train.conllu"), train, None)?;
    write_treebank(a.out_dir.join("dev.conllu"), dev, None)?;
    write_score_corpus(a.out_dir.join("projected.jsonl"), &corpus.projected[..a.sentences])?;
    write_embeddings(a.out_dir.join("embeddings.txt"), &corpus.embeddings)?;
    Ok(())
}
