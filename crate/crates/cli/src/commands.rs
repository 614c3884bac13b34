use std::path::{Path, PathBuf};

use aspect_embed::corpus::{
    encode_split, generate_synthetic_corpus, load_corpus, training_sequence_length, training_vocabulary, Corpus,
    EncodedDocument, SyntheticSpec, Vocabulary,
};
use aspect_embed::encoder::{Checkpoint, EncoderConfig};
use aspect_embed::eval::{
    aspect_auc, cross_auc_matrix, decorrelated_cross_auc, embed_documents, group_retrieval_auc,
    parse_embeddings_jsonl, top_activated_words, EmbeddingTable, WordActivation,
};
use aspect_embed::interpret::{highlight_records, render_html, to_jsonl as highlights_jsonl};
use aspect_embed::io::{sha256_file, to_jsonl, write_atomic};
use aspect_embed::training::{metrics_jsonl, resume, train as train_model, TrainConfig, TrainOutcome, TrainingData};
use aspect_embed::Scalar;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;
use crate::{CliError, CliResult, OUT_DIR_ENV};

fn out_dir(explicit: Option<&PathBuf>) -> PathBuf {
    explicit
        .cloned()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn output_path(explicit: Option<&PathBuf>, default_name: &str) -> PathBuf {
    explicit.cloned().unwrap_or_else(|| out_dir(None).join(default_name))
}

fn require_input(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("input file not found: {}", path.display())))
    }
}

fn read(path: &Path) -> CliResult<String> {
    require_input(path)?;
    std::fs::read_to_string(path).map_err(|e| CliError::Library(aspect_embed::Error::Io { path: path.into(), source: e }))
}

fn pretty<S: Serialize>(value: &S) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Resolved configuration, seed and input hashes, written next to the outputs.
fn write_run_record(
    path: &Path,
    command: &str,
    config: &impl Serialize,
    seed: Option<u64>,
    inputs: &[&Path],
    outputs: &[PathBuf],
    extra: Value,
) -> CliResult<PathBuf> {
    let inputs = inputs
        .iter()
        .map(|p| Ok(json!({ "path": p.display().to_string(), "sha256": sha256_file(p)? })))
        .collect::<CliResult<Vec<_>>>()?;
    let mut record = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "seed": seed,
        "inputs": inputs,
        "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    if let (Value::Object(r), Value::Object(e)) = (&mut record, extra) {
        r.extend(e);
    }
    write_atomic(path, pretty(&record)?.as_bytes())?;
    Ok(path.to_path_buf())
}

fn sidecar(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".run.json");
    output.with_file_name(name)
}

fn load(args: &CorpusArgs) -> CliResult<Corpus> {
    require_input(&args.corpus)?;
    Ok(load_corpus(&args.corpus, args.mode.map(Into::into), &args.load_options())?)
}

fn docs_for(corpus: &Corpus, split: SplitArg, vocab: &Vocabulary, seq_len: usize) -> Vec<EncodedDocument> {
    match split.split() {
        Some(s) => encode_split(corpus, s, vocab, seq_len),
        None => corpus.docs.iter().map(|d| d.encode(vocab, seq_len)).collect(),
    }
}

pub fn build_vocab(a: &BuildVocabArgs) -> CliResult<Vec<PathBuf>> {
    let corpus = load(&a.corpus)?;
    let vocab = training_vocabulary(&corpus, a.min_df)?;
    let out = output_path(a.output.as_ref(), "vocab.json");
    write_atomic(&out, vocab.to_json()?.as_bytes())?;
    let rec = write_run_record(
        &sidecar(&out),
        "build-vocab",
        a,
        Some(a.corpus.split_seed),
        &[&a.corpus.corpus],
        &[out.clone()],
        json!({ "vocab_size": vocab.len(), "vocab_hash": vocab.content_hash() }),
    )?;
    Ok(vec![out, rec])
}

pub fn gen_synthetic(a: &GenSyntheticArgs) -> CliResult<Vec<PathBuf>> {
    if a.aspects == 0 || a.docs == 0 {
        return Err(CliError::Usage("--aspects and --docs must be positive".into()));
    }
    let spec = SyntheticSpec::with_generated_pools(a.docs, a.aspects, a.pool_size, a.filler_size, a.signal_count, a.seed);
    let text = generate_synthetic_corpus(&spec)?;
    let out = output_path(a.output.as_ref(), "synthetic.jsonl");
    write_atomic(&out, text.as_bytes())?;
    let rec = write_run_record(&sidecar(&out), "gen-synthetic", a, Some(a.seed), &[], &[out.clone()], json!({ "spec": spec }))?;
    Ok(vec![out, rec])
}

fn train_configs(a: &TrainArgs, seq_len: usize, n_aspects: usize) -> CliResult<(EncoderConfig, TrainConfig)> {
    let encoder = EncoderConfig {
        seq_len,
        embed_dim: a.embed_dim,
        filters: a.filters,
        window: a.window,
        layers: a.layers,
        n_aspects,
        lambda_l2: a.l2,
        lambda_l1: a.l1,
    };
    encoder.validate()?;
    let train = TrainConfig {
        margin: a.margin,
        learning_rate: a.lr,
        beta1: a.beta1,
        beta2: a.beta2,
        adam_eps: a.adam_eps,
        batch_size: a.batch_size,
        epochs: a.epochs,
        seed: a.seed,
        lambda_l2: a.l2,
        lambda_l1: a.l1,
        triplets_per_epoch: a.triplets_per_epoch,
        probe_triplets: a.probe_triplets,
        patience: (!a.no_early_stopping).then_some(a.patience),
        parallel: a.parallel,
    };
    train.validate()?;
    Ok((encoder, train))
}

fn run_training<T: Scalar>(
    data: &TrainingData,
    encoder: &EncoderConfig,
    config: &TrainConfig,
    from: Option<&Path>,
) -> CliResult<(TrainOutcome<T>, String, String)> {
    let outcome = match from {
        Some(p) => resume(data, &Checkpoint::<T>::from_json(&read(p)?)?, config)?,
        None => train_model::<T>(data, encoder, config)?,
    };
    let final_json = outcome.final_checkpoint.to_json()?;
    let best_json = outcome.best_checkpoint.to_json()?;
    Ok((outcome, final_json, best_json))
}

pub fn train(a: &TrainArgs) -> CliResult<Vec<PathBuf>> {
    let corpus = load(&a.corpus)?;
    let vocab = match &a.vocab {
        Some(p) => Vocabulary::from_json(&read(p)?)?,
        None => training_vocabulary(&corpus, a.min_df)?,
    };
    let resumed = match &a.resume {
        Some(p) => Some(Checkpoint::<f64>::from_json(&read(p)?)?),
        None => None,
    };
    let seq_len = match (&resumed, a.seq_len) {
        (Some(ck), _) => ck.config.seq_len,
        (None, Some(n)) => n,
        (None, None) => training_sequence_length(&corpus, a.percentile)?,
    };
    let (encoder, config) = train_configs(a, seq_len, corpus.n_aspects())?;
    let data = TrainingData::from_corpus(&corpus, &vocab, seq_len)?;
    let from = a.resume.as_deref();
    let (log, final_json, best_json, best_epoch, stopped_early, valid_note) = match a.precision {
        Precision::F64 => {
            let (o, f, b) = run_training::<f64>(&data, &encoder, &config, from)?;
            (o.log, f, b, o.best_epoch, o.stopped_early, o.valid_unavailable)
        }
        Precision::F32 => {
            let (o, f, b) = run_training::<f32>(&data, &encoder, &config, from)?;
            (o.log, f, b, o.best_epoch, o.stopped_early, o.valid_unavailable)
        }
    };

    let dir = out_dir(a.out_dir.as_ref());
    let paths = [dir.join("vocab.json"), dir.join("checkpoint.json"), dir.join("best.json"), dir.join("metrics.jsonl")];
    write_atomic(&paths[0], vocab.to_json()?.as_bytes())?;
    write_atomic(&paths[1], final_json.as_bytes())?;
    write_atomic(&paths[2], best_json.as_bytes())?;
    write_atomic(&paths[3], metrics_jsonl(&log)?.as_bytes())?;
    let mut inputs: Vec<&Path> = vec![&a.corpus.corpus];
    inputs.extend(a.vocab.as_deref());
    inputs.extend(a.resume.as_deref());
    let rec = write_run_record(
        &dir.join("run.json"),
        "train",
        a,
        Some(a.seed),
        &inputs,
        &paths,
        json!({
            "encoder": encoder,
            "train": config,
            "vocab_hash": vocab.content_hash(),
            "best_epoch": best_epoch,
            "stopped_early": stopped_early,
            "validation_note": valid_note,
        }),
    )?;
    let mut out = paths.to_vec();
    out.push(rec);
    Ok(out)
}

struct LoadedModel {
    checkpoint: Checkpoint<f64>,
    vocab: Vocabulary,
    corpus: Corpus,
}

fn load_model(a: &ModelArgs) -> CliResult<LoadedModel> {
    let checkpoint = Checkpoint::<f64>::from_json(&read(&a.checkpoint)?)?;
    let vocab = Vocabulary::from_json(&read(&a.vocab)?)?;
    checkpoint.check_vocab(&vocab.content_hash())?;
    let corpus = load(&a.corpus)?;
    if corpus.n_aspects() != checkpoint.config.n_aspects {
        return Err(CliError::Library(aspect_embed::Error::InvalidConfig(format!(
            "corpus declares {} aspects, checkpoint has {}",
            corpus.n_aspects(),
            checkpoint.config.n_aspects
        ))));
    }
    Ok(LoadedModel { checkpoint, vocab, corpus })
}

fn model_inputs(a: &ModelArgs) -> [&Path; 3] {
    [&a.checkpoint, &a.vocab, &a.corpus.corpus]
}

pub fn embed(a: &EmbedArgs) -> CliResult<Vec<PathBuf>> {
    let m = load_model(&a.model)?;
    let model = m.checkpoint.model()?;
    let docs = docs_for(&m.corpus, a.split, &m.vocab, model.config.seq_len);
    let records = embed_documents(&model, &docs, &m.corpus.manifest.aspect_names)?;
    let out = output_path(a.output.as_ref(), "embeddings.jsonl");
    write_atomic(&out, to_jsonl(&records)?.as_bytes())?;
    let rec = write_run_record(&sidecar(&out), "embed", a, None, &model_inputs(&a.model), &[out.clone()], json!({}))?;
    Ok(vec![out, rec])
}

fn load_table(path: &Path) -> CliResult<EmbeddingTable> {
    Ok(EmbeddingTable::from_records(&parse_embeddings_jsonl(&read(path)?)?)?)
}

pub fn eval_auc(a: &EvalAucArgs) -> CliResult<Vec<PathBuf>> {
    let table = load_table(&a.embeddings)?;
    let aspect = match (&a.aspect, table.aspects.len()) {
        (Some(name), _) => table.aspect_index(name)?,
        (None, 1) => 0,
        (None, n) => return Err(CliError::Usage(format!("--aspect is required: the file holds {n} aspects"))),
    };
    let affinity = table.affinity(aspect)?;
    let groups = table.complete_groups();
    let report = match (a.by, groups) {
        (AucBy::Auto | AucBy::Group, Some(g)) => group_retrieval_auc(&affinity, &g)?,
        (AucBy::Group, None) => return Err(CliError::Usage("not every document in the file has a group".into())),
        (AucBy::Auto | AucBy::Label, _) => aspect_auc(&affinity, &table.labels[aspect])?,
    };
    let out = output_path(a.output.as_ref(), "auc.json");
    write_atomic(&out, pretty(&report)?.as_bytes())?;
    let rec = write_run_record(
        &sidecar(&out),
        "eval-auc",
        a,
        None,
        &[&a.embeddings],
        &[out.clone()],
        json!({ "aspect": table.aspects[aspect] }),
    )?;
    Ok(vec![out, rec])
}

pub fn cross_auc(a: &MatrixArgs, decorrelated: bool) -> CliResult<Vec<PathBuf>> {
    let table = load_table(&a.embeddings)?;
    let affinities = table.affinities()?;
    let (json_text, csv_text) = if decorrelated {
        let m = decorrelated_cross_auc(&affinities, &table.labels, &table.aspects)?;
        (pretty(&m)?, m.to_csv())
    } else {
        let m = cross_auc_matrix(&affinities, &table.labels, &table.aspects)?;
        (pretty(&m)?, m.to_csv())
    };
    let (command, default_name) = if decorrelated {
        ("decorrelated-auc", "decorrelated_auc.json")
    } else {
        ("cross-auc", "cross_auc.json")
    };
    let out = output_path(a.output.as_ref(), default_name);
    write_atomic(&out, json_text.as_bytes())?;
    let mut outputs = vec![out.clone()];
    if let Some(csv) = &a.csv {
        write_atomic(csv, csv_text.as_bytes())?;
        outputs.push(csv.clone());
    }
    let rec = write_run_record(&sidecar(&out), command, a, None, &[&a.embeddings], &outputs, json!({}))?;
    outputs.push(rec);
    Ok(outputs)
}

#[derive(Serialize)]
struct AspectWords {
    aspect: String,
    words: Vec<WordActivation>,
}

pub fn top_words(a: &TopWordsArgs) -> CliResult<Vec<PathBuf>> {
    let m = load_model(&a.model)?;
    let model = m.checkpoint.model()?;
    let docs = docs_for(&m.corpus, a.split, &m.vocab, model.config.seq_len);
    let names = &m.corpus.manifest.aspect_names;
    let selected: Vec<usize> = match &a.aspect {
        Some(name) => vec![m
            .corpus
            .manifest
            .aspect_index(name)
            .ok_or_else(|| CliError::Usage(format!("unknown aspect `{name}`")))?],
        None => (0..names.len()).collect(),
    };
    let result = selected
        .into_iter()
        .map(|i| {
            Ok(AspectWords {
                aspect: names[i].clone(),
                words: top_activated_words(&model, &docs, &m.vocab, i, a.top, a.min_occurrence)?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let out = output_path(a.output.as_ref(), "top_words.json");
    write_atomic(&out, pretty(&result)?.as_bytes())?;
    let rec = write_run_record(&sidecar(&out), "top-words", a, None, &model_inputs(&a.model), &[out.clone()], json!({}))?;
    Ok(vec![out, rec])
}

pub fn highlight(a: &HighlightArgs) -> CliResult<Vec<PathBuf>> {
    let m = load_model(&a.model)?;
    let mut docs = docs_for(&m.corpus, a.split, &m.vocab, m.checkpoint.config.seq_len);
    if let Some(n) = a.limit {
        docs.truncate(n);
    }
    let names = &m.corpus.manifest.aspect_names;
    let records = highlight_records(&m.checkpoint, &docs, &m.vocab, names, a.window)?;
    let (text, default_name) = match a.format {
        HighlightFormat::Json => (highlights_jsonl(&records)?, "highlights.jsonl"),
        HighlightFormat::Html => (render_html(&records, names), "highlights.html"),
    };
    let out = output_path(a.output.as_ref(), default_name);
    write_atomic(&out, text.as_bytes())?;
    let rec = write_run_record(&sidecar(&out), "highlight", a, None, &model_inputs(&a.model), &[out.clone()], json!({}))?;
    Ok(vec![out, rec])
}
