use tlstm::corpus_io::{featurize, FeatureConfig};
use tlstm::losses::GoldTarget;
use tlstm::synthetic::{generate, SyntheticConfig, SyntheticCorpus};
use tlstm::trainer::*;
use tlstm::ParseTree;

fn corpus(n: usize, seed: u64) -> (SyntheticCorpus, Vec<tlstm::FeatureMatrix>) {
    let c = generate(&SyntheticConfig {
        sentences: n,
        max_len: 7,
        embedding_width: 4,
        noise: 0.5,
        seed,
    })
    .unwrap();
    let fc = FeatureConfig::from_sentences(4, &c.treebank, true);
    let feats = c.treebank.iter().map(|s| featurize(s, &c.embeddings, &fc).unwrap()).collect();
    (c, feats)
}

fn tree_data(c: &SyntheticCorpus, feats: &[tlstm::FeatureMatrix]) -> Vec<TrainingExample> {
    c.treebank
        .iter()
        .zip(feats)
        .map(|(s, f)| TrainingExample {
            features: f.clone(),
            target: GoldTarget::Tree(ParseTree::new(s.heads.clone().unwrap()).unwrap()),
        })
        .collect()
}

fn eval_data(c: &SyntheticCorpus, feats: &[tlstm::FeatureMatrix]) -> Vec<EvalExample> {
    c.treebank
        .iter()
        .zip(feats)
        .map(|(s, f)| EvalExample {
            features: f.clone(),
            heads: s.heads.clone().unwrap(),
        })
        .collect()
}

fn small(loss: LossMode, epochs: usize) -> TrainConfig {
    TrainConfig {
        hidden: 4,
        layers: 1,
        batch_size: 8,
        schedule: Schedule::FixedEpochs(epochs),
        seed: 5,
        ..TrainConfig::monolingual(loss)
    }
}

#[test]
fn training_is_reproducible() {
    let (c, feats) = corpus(20, 1);
    let data = tree_data(&c, &feats);
    let cfg = small(LossMode::CrossEntropy, 2);
    let a = train(&data, None, &cfg).unwrap();
    let b = train(&data, None, &cfg).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.metrics.len(), 2);
    for (x, y) in a.metrics.iter().zip(&b.metrics) {
        assert_eq!(x.train_loss.to_bits(), y.train_loss.to_bits());
    }
    let other = train(&data, None, &TrainConfig { seed: 6, ..cfg }).unwrap();
    assert_ne!(a.model, other.model);
}

#[test]
fn reproducible_across_thread_counts() {
    let (c, feats) = corpus(12, 2);
    let data = tree_data(&c, &feats);
    let cfg = small(LossMode::Mse, 1);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| train(&data, None, &cfg)).unwrap();
    let b = four.install(|| train(&data, None, &cfg)).unwrap();
    assert_eq!(a.model, b.model);
}

#[test]
fn learning_beats_the_untrained_model() {
    let (c, feats) = corpus(40, 3);
    let data = tree_data(&c, &feats);
    let dev = eval_data(&c, &feats);
    let mut cfg = small(LossMode::CrossEntropy, 15);
    cfg.gradient_noise = false;
    cfg.dropout_hidden = 0.0;
    cfg.dropout_input = 0.0;
    let start = evaluate_uas(&init_model(tlstm::ModelDims { features: feats[0].width(), hidden: 4, layers: 1 }, 5).unwrap(), &dev).unwrap();
    let out = train(&data, None, &cfg).unwrap();
    let end = evaluate_uas(&out.model, &dev).unwrap();
    assert!(end > start && end > 0.8, "{start} -> {end}");
    assert!(out.metrics.last().unwrap().train_loss < out.metrics[0].train_loss);
}

#[test]
fn early_stopping_keeps_the_best_dev_epoch() {
    let (c, feats) = corpus(16, 4);
    let data = tree_data(&c, &feats);
    let dev = eval_data(&c, &feats);
    let mut cfg = small(LossMode::CrossEntropy, 1);
    cfg.schedule = Schedule::EarlyStopping {
        patience: 2,
        max_epochs: 12,
    };
    let out = train(&data, Some(&dev), &cfg).unwrap();
    let best = out
        .metrics
        .iter()
        .map(|m| m.dev_uas.unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(out.metrics[out.selected_epoch - 1].dev_uas, Some(best));
    assert_eq!(evaluate_uas(&out.model, &dev).unwrap(), best);
    let last = out.metrics.len();
    assert!(last == 12 || last - out.selected_epoch == 2);

    assert!(train(&data, Some(&[]), &cfg).is_err());
}

#[test]
fn score_targets_train_with_mse_and_decode_for_cross_entropy() {
    let (c, feats) = corpus(10, 5);
    let data: Vec<TrainingExample> = c
        .projected
        .iter()
        .zip(&feats)
        .map(|(p, f)| TrainingExample {
            features: f.clone(),
            target: GoldTarget::Scores(p.scores.clone()),
        })
        .collect();
    assert!(train(&data, None, &small(LossMode::Mse, 1)).is_ok());
    assert!(train(&data, None, &small(LossMode::CrossEntropy, 1)).is_err());
    let decoded = decode_targets(&data);
    assert!(decoded.iter().all(|e| matches!(e.target, GoldTarget::Tree(_))));
    assert!(train(&decoded, None, &small(LossMode::CrossEntropy, 1)).is_ok());
}

#[test]
fn subsampling_limits_the_training_set() {
    let (c, feats) = corpus(30, 6);
    let data = tree_data(&c, &feats);
    let mut cfg = small(LossMode::CrossEntropy, 1);
    cfg.subsample = Some(5);
    cfg.batch_size = 1;
    let out = train(&data, None, &cfg).unwrap();
    assert_eq!(out.metrics.len(), 1);
}

#[test]
fn cross_lingual_defaults() {
    assert_eq!(TrainConfig::cross_lingual(LossMode::CrossEntropy).schedule, Schedule::FixedEpochs(6));
    assert_eq!(TrainConfig::cross_lingual(LossMode::Mse).schedule, Schedule::FixedEpochs(5));
    let mono = TrainConfig::monolingual(LossMode::CrossEntropy);
    assert_eq!(mono.batch_size, 64);
    assert_eq!((mono.hidden, mono.layers), (100, 4));
}
