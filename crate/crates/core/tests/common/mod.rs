#![allow(dead_code)]

use std::path::Path;

use aspect_embed::corpus::{
    encode_split, generate_synthetic_corpus, parse_corpus, training_sequence_length, training_vocabulary, Corpus,
    EncodedDocument, LoadOptions, Split, SplitRatios, SyntheticSpec, Vocabulary,
};
use aspect_embed::encoder::{init_model, AspectModel, ConvLayer, EncoderConfig};
use aspect_embed::training::{objective_and_gradient, total_objective, TrainConfig, Triplet, TripletBatch};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct SyntheticRun {
    pub spec: SyntheticSpec,
    pub corpus: Corpus,
    pub vocab: Vocabulary,
    pub seq_len: usize,
}

/// Synthetic two-way-labeled corpus split by explicit document counts.
pub fn synthetic_run(spec: SyntheticSpec, train: usize, valid: usize, test: usize, min_df: usize) -> SyntheticRun {
    let n = (train + valid + test) as f64;
    let text = generate_synthetic_corpus(&spec).unwrap();
    let options = LoadOptions {
        split: SplitRatios {
            train: train as f64 / n,
            valid: valid as f64 / n,
            test: test as f64 / n,
        },
        split_seed: spec.seed,
        ..LoadOptions::default()
    };
    let corpus = parse_corpus(&text, Path::new("synthetic.jsonl"), None, &options).unwrap();
    let vocab = training_vocabulary(&corpus, min_df).unwrap();
    let seq_len = training_sequence_length(&corpus, 0.95).unwrap();
    SyntheticRun {
        spec,
        corpus,
        vocab,
        seq_len,
    }
}

impl SyntheticRun {
    pub fn encoded(&self, split: Split) -> Vec<EncodedDocument> {
        encode_split(&self.corpus, split, &self.vocab, self.seq_len)
    }
}

pub fn tiny_config(seq_len: usize, embed_dim: usize, filters: usize, window: usize, layers: usize) -> EncoderConfig {
    EncoderConfig {
        seq_len,
        embed_dim,
        filters,
        window,
        layers,
        n_aspects: 2,
        lambda_l2: 0.0,
        lambda_l1: 0.0,
    }
}

/// Model with every trainable value redrawn from `[-scale, scale]`.
pub fn random_model(config: &EncoderConfig, vocab_size: usize, seed: u64, scale: f64) -> AspectModel<f64> {
    let mut model = init_model::<f64>(config, vocab_size, 0, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let m = config.embed_dim;
    for (i, t) in model.params.tensors_mut().into_iter().enumerate() {
        for (j, v) in t.data_mut().iter_mut().enumerate() {
            if i == 0 && j < m {
                continue;
            }
            *v = rng.gen_range(-scale..scale);
        }
    }
    model
}

pub fn random_doc(rng: &mut ChaCha8Rng, id: String, seq_len: usize, vocab_size: usize) -> EncodedDocument {
    let true_len = rng.gen_range(1..=seq_len);
    let mut ids = vec![0u32; seq_len];
    for v in ids.iter_mut().take(true_len) {
        *v = rng.gen_range(1..vocab_size as u32);
    }
    EncodedDocument {
        doc_id: id,
        ids,
        true_len,
        group_id: None,
        labels: Vec::new(),
    }
}

pub fn random_batch(rng: &mut ChaCha8Rng, n: usize, seq_len: usize, vocab_size: usize, aspects: &[usize]) -> TripletBatch {
    let items = (0..n)
        .map(|i| Triplet {
            s: random_doc(rng, format!("s{i}"), seq_len, vocab_size),
            d: random_doc(rng, format!("d{i}"), seq_len, vocab_size),
            o: random_doc(rng, format!("o{i}"), seq_len, vocab_size),
            aspect: aspects[i % aspects.len()],
        })
        .collect();
    TripletBatch { items }
}

/// Largest relative gap between analytic and central-difference gradients,
/// skipping the pad row.
pub fn max_gradient_error(model: &AspectModel<f64>, batch: &TripletBatch, config: &TrainConfig, h: f64) -> f64 {
    let (_, grads) = objective_and_gradient(model, batch, config).unwrap();
    let m = model.config.embed_dim;
    let pad = model.pad_id as usize;
    let mut probe = model.clone();
    let mut worst = 0.0f64;
    let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.data().to_vec()).collect();
    for (ti, g) in analytic.iter().enumerate() {
        for (j, &a) in g.iter().enumerate() {
            if ti == 0 && j / m == pad {
                continue;
            }
            let orig = probe.params.tensors()[ti].data()[j];
            probe.params.tensors_mut()[ti].data_mut()[j] = orig + h;
            let up = total_objective(&probe, batch, config).unwrap().total;
            probe.params.tensors_mut()[ti].data_mut()[j] = orig - h;
            let down = total_objective(&probe, batch, config).unwrap().total;
            probe.params.tensors_mut()[ti].data_mut()[j] = orig;
            let fd = (up - down) / (2.0 * h);
            let err = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6);
            worst = worst.max(err);
        }
    }
    worst
}

fn cosine(u: &[f64], v: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for i in 0..u.len() {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    (dot / (nu.sqrt() * nv.sqrt() + 1e-12)).clamp(-1.0, 1.0)
}

fn oracle_layer(x: &[Vec<f64>], layer: &ConvLayer<f64>, window: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let inp = x[0].len();
    let k = layer.bias.data().len();
    let kern = layer.kernel.data();
    let half = window as isize / 2;
    let mut out = vec![vec![0.0; k]; n];
    for t in 0..n {
        for j in 0..k {
            let mut z = layer.bias.data()[j];
            for w in 0..window {
                let src = t as isize + w as isize - half;
                if src < 0 || src >= n as isize {
                    continue;
                }
                for i in 0..inp {
                    z += x[src as usize][i] * kern[(w * inp + i) * k + j];
                }
            }
            out[t][j] = if z > 0.0 { z } else { layer.prelu_alpha.data()[j] * z };
        }
    }
    out
}

/// Plain re-evaluation of one document's embedding and gates.
pub fn oracle_forward(model: &AspectModel<f64>, doc: &EncodedDocument, aspect: usize) -> (Vec<f64>, Vec<f64>) {
    let c = &model.config;
    let m = c.embed_dim;
    let emb = model.params.embedding.data();
    let x0: Vec<Vec<f64>> = doc.ids.iter().map(|&id| emb[id as usize * m..(id as usize + 1) * m].to_vec()).collect();
    let mut outs = vec![oracle_layer(&x0, &model.params.conv1, c.window)];
    for conv in &model.params.aspects[aspect].convs {
        let mut input = vec![vec![0.0; c.filters]; c.seq_len];
        for o in &outs {
            for t in 0..c.seq_len {
                for j in 0..c.filters {
                    input[t][j] += o[t][j];
                }
            }
        }
        outs.push(oracle_layer(&input, conv, c.window));
    }
    let mut s = vec![vec![0.0; c.filters]; c.seq_len];
    for o in &outs {
        for t in 0..c.seq_len {
            for j in 0..c.filters {
                s[t][j] += o[t][j];
            }
        }
    }
    let gate = &model.params.aspects[aspect].gate;
    let mut gates = vec![0.0; c.seq_len];
    let mut e = vec![0.0; c.filters];
    for t in 0..doc.true_len {
        let mut z = gate.bias.data()[0];
        for j in 0..c.filters {
            z += s[t][j] * gate.weight.data()[j];
        }
        gates[t] = 1.0 / (1.0 + (-z).exp());
        for j in 0..c.filters {
            e[j] += gates[t] * s[t][j];
        }
    }
    (e, gates)
}

/// Objective recomputed from scratch without the library's forward or loss code.
pub fn oracle_objective(model: &AspectModel<f64>, batch: &TripletBatch, config: &TrainConfig) -> f64 {
    let mut hinge = 0.0;
    let mut gate_sum = 0.0;
    for t in &batch.items {
        let (es, gs) = oracle_forward(model, &t.s, t.aspect);
        let (ed, gd) = oracle_forward(model, &t.d, t.aspect);
        let (eo, go) = oracle_forward(model, &t.o, t.aspect);
        hinge += (config.margin - cosine(&ed, &es) + cosine(&ed, &eo)).max(0.0);
        gate_sum += gs.iter().chain(&gd).chain(&go).sum::<f64>();
    }
    let mut sq = 0.0;
    for t in model.params.tensors() {
        for v in t.data() {
            sq += v * v;
        }
    }
    let b = batch.items.len() as f64;
    hinge / b + config.lambda_l2 * sq + config.lambda_l1 * gate_sum / (3.0 * b)
}
