//! Epoch loop with probe-set objectives, early stopping and checkpoints.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::backward::objective_and_gradient;
use super::config::TrainConfig;
use super::loss::{forward_batch, l2_penalty, triplet_hinge_loss, Triplet, TripletBatch};
use super::sampler::{RatingPool, ReviewPool, TripletSource};
use crate::corpus::{Corpus, EncodedDocument, Split, SupervisionMode, Vocabulary};
use crate::encoder::{init_model, AspectModel, Checkpoint, EncoderConfig, SeedRecord};
use crate::error::{Error, Result};
use crate::io::to_jsonl;
use crate::scalar::Scalar;

const TRAIN_PROBE_STREAM: u64 = u64::MAX - 1;
const VALID_PROBE_STREAM: u64 = u64::MAX - 2;

/// Triplet sources for the train and validation splits.
#[derive(Debug, Clone)]
pub struct TrainingData {
    pub train: TripletSource,
    pub valid: Option<TripletSource>,
    pub vocab_hash: String,
    pub vocab_size: usize,
    pub pad_id: u32,
}

pub fn split_source(corpus: &Corpus, split: Split, vocab: &Vocabulary, seq_len: usize) -> Result<TripletSource> {
    let docs = corpus.docs_in(split);
    Ok(match corpus.manifest.supervision_mode {
        SupervisionMode::ReviewGroups => TripletSource::Reviews(ReviewPool::new(docs, corpus.n_aspects(), vocab, seq_len)?),
        SupervisionMode::DichotomizedRatings => TripletSource::Ratings(RatingPool::new(
            docs.map(|d| d.encode(vocab, seq_len)).collect(),
            corpus.manifest.aspect_names.clone(),
        )),
    })
}

impl TrainingData {
    pub fn from_corpus(corpus: &Corpus, vocab: &Vocabulary, seq_len: usize) -> Result<Self> {
        let train = split_source(corpus, Split::Train, vocab, seq_len)?;
        if train.n_documents() == 0 {
            return Err(Error::EmptyCorpus("training split has no usable documents"));
        }
        let valid = split_source(corpus, Split::Valid, vocab, seq_len)?;
        Ok(Self {
            train,
            valid: (valid.n_documents() > 0).then_some(valid),
            vocab_hash: vocab.content_hash(),
            vocab_size: vocab.len(),
            pad_id: vocab.pad_id(),
        })
    }
}

/// One line of the metrics log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_obj: f64,
    pub valid_obj: Option<f64>,
    pub mean_gate: f64,
    pub lr: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub final_checkpoint: Checkpoint<T>,
    pub best_checkpoint: Checkpoint<T>,
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub log: Vec<EpochLog>,
    /// Set when the validation split could not produce probe triplets.
    pub valid_unavailable: Option<String>,
}

pub fn metrics_jsonl(log: &[EpochLog]) -> Result<String> {
    to_jsonl(log)
}

/// Objective over a fixed triplet list, evaluated in chunks; also returns the
/// mean unmasked gate over all documents touched.
pub fn probe_objective<T: Scalar>(model: &AspectModel<T>, triplets: &[Triplet], config: &TrainConfig) -> Result<(f64, f64)> {
    if triplets.is_empty() {
        return Err(Error::config("probe set is empty"));
    }
    let margin = T::of(config.margin);
    let mut hinge = 0.0;
    let mut gate_sum = 0.0;
    let mut positions = 0usize;
    for chunk in triplets.chunks(config.batch_size.max(1)) {
        let batch = TripletBatch { items: chunk.to_vec() };
        let fwd = forward_batch(model, &batch)?;
        for (r, [s, d, o]) in chunk.iter().zip(&fwd.items) {
            hinge += triplet_hinge_loss(&s.embedding, &d.embedding, &o.embedding, margin).as_f64();
            for x in [s, d, o] {
                gate_sum += x.gates.iter().map(|g| g.as_f64()).sum::<f64>();
            }
            positions += r.s.true_len + r.d.true_len + r.o.true_len;
        }
    }
    let n = triplets.len() as f64;
    let total = hinge / n
        + config.lambda_l2 * l2_penalty(&model.params).as_f64()
        + config.lambda_l1 * gate_sum / (3.0 * n);
    let mean_gate = if positions == 0 { 0.0 } else { gate_sum / positions as f64 };
    Ok((total, mean_gate))
}

/// Mean gate value over unmasked positions of `docs`, across every aspect.
pub fn mean_gate_activation<T: Scalar>(model: &AspectModel<T>, docs: &[EncodedDocument]) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for doc in docs {
        for a in 0..model.n_aspects() {
            let r = model.forward_aspect(doc, a)?;
            sum += r.gates[..doc.true_len.min(doc.ids.len())].iter().map(|g| g.as_f64()).sum::<f64>();
            count += doc.true_len.min(doc.ids.len());
        }
    }
    Ok(if count == 0 { 0.0 } else { sum / count as f64 })
}

fn sample_probe(source: &TripletSource, n: usize, seed: u64, stream: u64) -> Result<Vec<Triplet>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..n).map(|i| source.sample(i % source.n_aspects(), &mut rng)).collect()
}

fn checkpoint<T: Scalar>(
    model: &AspectModel<T>,
    adam: &AdamState<T>,
    data: &TrainingData,
    lineage: &[SeedRecord],
    epoch: usize,
) -> Checkpoint<T> {
    let mut ck = Checkpoint::from_model(model, data.vocab_hash.clone(), lineage.to_vec(), epoch);
    ck.optimizer = Some(adam.snapshot());
    ck
}

/// Trains a freshly initialized model (seeded by `config.seed`).
pub fn train<T: Scalar>(data: &TrainingData, encoder: &EncoderConfig, config: &TrainConfig) -> Result<TrainOutcome<T>> {
    config.validate()?;
    if encoder.n_aspects != data.train.n_aspects() {
        return Err(Error::config(format!(
            "encoder has {} aspects, corpus has {}",
            encoder.n_aspects,
            data.train.n_aspects()
        )));
    }
    let model = init_model(encoder, data.vocab_size, data.pad_id, config.seed)?;
    let adam = AdamState::new(&model.params);
    let lineage = vec![
        SeedRecord {
            stage: "init".into(),
            seed: config.seed,
        },
        SeedRecord {
            stage: "train".into(),
            seed: config.seed,
        },
    ];
    run(data, model, adam, 0, lineage, config)
}

/// Continues training from a checkpoint for `config.epochs` more epochs.
pub fn resume<T: Scalar>(data: &TrainingData, from: &Checkpoint<T>, config: &TrainConfig) -> Result<TrainOutcome<T>> {
    config.validate()?;
    from.check_vocab(&data.vocab_hash)?;
    if from.config.n_aspects != data.train.n_aspects() {
        return Err(Error::config("checkpoint and corpus disagree on the number of aspects"));
    }
    if config.epochs == 0 {
        return Ok(TrainOutcome {
            final_checkpoint: from.clone(),
            best_checkpoint: from.clone(),
            best_epoch: from.epoch,
            stopped_early: false,
            log: Vec::new(),
            valid_unavailable: None,
        });
    }
    let model = from.model()?;
    let adam = match &from.optimizer {
        Some(s) => AdamState::from_snapshot(&model.config, s)?,
        None => AdamState::new(&model.params),
    };
    let mut lineage = from.seed_lineage.clone();
    lineage.push(SeedRecord {
        stage: "resume".into(),
        seed: config.seed,
    });
    run(data, model, adam, from.epoch, lineage, config)
}

fn run<T: Scalar>(
    data: &TrainingData,
    mut model: AspectModel<T>,
    mut adam: AdamState<T>,
    start_epoch: usize,
    lineage: Vec<SeedRecord>,
    config: &TrainConfig,
) -> Result<TrainOutcome<T>> {
    let n_aspects = data.train.n_aspects();
    let train_probe = sample_probe(&data.train, config.probe_triplets.max(1), config.seed, TRAIN_PROBE_STREAM)?;
    let (valid_probe, valid_unavailable) = match &data.valid {
        None => (None, Some("validation split is empty".to_owned())),
        Some(v) => match sample_probe(v, config.probe_triplets.max(1), config.seed, VALID_PROBE_STREAM) {
            Ok(p) => (Some(p), None),
            Err(e) => (None, Some(e.to_string())),
        },
    };

    let evaluate = |model: &AspectModel<T>, epoch: usize| -> Result<EpochLog> {
        let (train_obj, mean_gate) = probe_objective(model, &train_probe, config)?;
        let valid_obj = valid_probe
            .as_ref()
            .map(|p| probe_objective(model, p, config).map(|x| x.0))
            .transpose()?;
        if !train_obj.is_finite() || valid_obj.is_some_and(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("probe objective after epoch {epoch}")));
        }
        Ok(EpochLog {
            epoch,
            train_obj,
            valid_obj,
            mean_gate,
            lr: config.learning_rate,
        })
    };

    let mut log = vec![evaluate(&model, start_epoch)?];
    let mut best = checkpoint(&model, &adam, data, &lineage, start_epoch);
    let mut best_epoch = start_epoch;
    let mut best_valid = log[0].valid_obj;
    let mut stale = 0usize;
    let mut stopped_early = false;

    let per_epoch = config.triplets_per_epoch.unwrap_or_else(|| data.train.n_documents()).max(1);
    let n_batches = per_epoch.div_ceil(config.batch_size);
    for epoch in start_epoch + 1..=start_epoch + config.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(epoch as u64);
        for b in 0..n_batches {
            let aspect = b % n_aspects;
            let size = config.batch_size.min(per_epoch - b * config.batch_size);
            let items = (0..size)
                .map(|_| data.train.sample(aspect, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            let (objective, grads) = objective_and_gradient(&model, &TripletBatch { items }, config)?;
            if !objective.total.is_finite() {
                return Err(Error::NonFinite(format!(
                    "objective {} at epoch {epoch}, batch {b}",
                    objective.total
                )));
            }
            adam_step(&mut model, &grads, &mut adam, config)?;
        }
        let entry = evaluate(&model, epoch)?;
        let improved = match (entry.valid_obj, best_valid) {
            (Some(v), Some(b)) => v < b,
            (Some(_), None) => true,
            (None, _) => true,
        };
        log.push(entry);
        if improved {
            best_valid = log.last().and_then(|e| e.valid_obj);
            best = checkpoint(&model, &adam, data, &lineage, epoch);
            best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if config.patience.is_some_and(|p| stale >= p) {
                stopped_early = true;
                break;
            }
        }
    }
    let last_epoch = log.last().map(|e| e.epoch).unwrap_or(start_epoch);
    Ok(TrainOutcome {
        final_checkpoint: checkpoint(&model, &adam, data, &lineage, last_epoch),
        best_checkpoint: best,
        best_epoch,
        stopped_early,
        log,
        valid_unavailable,
    })
}
