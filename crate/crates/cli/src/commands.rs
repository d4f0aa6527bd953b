use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use seedstab::checklist::{
    build_suite, capability_catalog, evaluate_model, EvalRecord, NameLists, SuiteManifest, TestInstance,
};
use seedstab::data::{
    extract_name_polarity, gen_synthetic_corpus_with, load_tsv, match_test_labels, LabeledInstance, PhraseDictionary,
};
use seedstab::lexicon::{Lexicons, NAMES};
use seedstab::stability::{compose_report, ModelRun, ReportInput, StabilityReport};
use seedstab::swa::{select_swa_lr, train_swa};
use seedstab::textmodel::{
    build_vocab, content_hash, encode, predict, train, weights_from_bytes, weights_to_bytes, Encoded, ModelWeights,
    Vocab, WeightsHeader,
};
use seedstab::{Error, Variant};

use crate::config::{DataSource, RunConfig};
use crate::error::{CliError, CliResult};
use crate::layout::{read_json, read_jsonl, write_atomic, write_json, write_jsonl, write_lines, Layout};
use crate::output::write_report_dir;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrepareSummary {
    pub n_train: usize,
    pub n_dev: usize,
    pub n_test: usize,
    pub vocab_size: usize,
    pub positive_names: usize,
    pub negative_names: usize,
    pub capabilities: usize,
    pub instances: usize,
}

#[derive(Debug, Serialize)]
struct TestMatchSummary {
    labeled: usize,
    dropped: Vec<(String, String, f64)>,
    unmatched: Vec<(String, String)>,
}

fn load_lexicons(cfg: &RunConfig) -> CliResult<Lexicons> {
    let Some(dir) = &cfg.data.lexicons else {
        return Ok(Lexicons::builtin());
    };
    for spec in capability_catalog() {
        if !cfg.suite.enabled.is_empty() && !cfg.suite.enabled.iter().any(|e| e == spec.name) {
            continue;
        }
        for slot in spec.required_slots() {
            let path = dir.join(format!("{slot}.txt"));
            if !path.is_file() {
                return Err(CliError::file(
                    path,
                    format!("lexicon required by capability '{}' is missing", spec.name),
                ));
            }
        }
    }
    let present: Vec<&str> = Lexicons::builtin_slots()
        .filter(|s| dir.join(format!("{s}.txt")).is_file())
        .collect();
    Ok(Lexicons::load_dir(dir, &present)?)
}

fn read_sentences(path: &Path) -> CliResult<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::file(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| CliError::file(path, "empty file"))?;
    let col = header
        .split('\t')
        .position(|c| c.trim() == "sentence")
        .ok_or_else(|| CliError::file(path, "header has no 'sentence' column"))?;
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.split('\t')
                .nth(col)
                .map(str::to_string)
                .ok_or_else(|| CliError::file(path, format!("line {}: missing sentence column", i + 2)))
        })
        .collect()
}

struct Corpus {
    train: Vec<LabeledInstance>,
    dev: Vec<LabeledInstance>,
    test: Vec<LabeledInstance>,
    lexicons: Lexicons,
}

fn load_corpus(cfg: &RunConfig, layout: &Layout) -> CliResult<Corpus> {
    let lexicons = load_lexicons(cfg)?;
    match cfg.data.source {
        DataSource::Synthetic => {
            let s = &cfg.data.synthetic;
            let c = gen_synthetic_corpus_with(s.seed, s.n_train, s.n_dev, s.n_test, lexicons)?;
            Ok(Corpus {
                train: c.train,
                dev: c.dev,
                test: c.test,
                lexicons: c.lexicons,
            })
        }
        DataSource::Tsv => {
            let paths = cfg.data.tsv.as_ref().ok_or_else(|| CliError::Config("data.tsv: missing".into()))?;
            let train = load_tsv(&paths.train)?;
            let dev = load_tsv(&paths.dev)?;
            let sentences = read_sentences(&paths.test)?;
            let dict = PhraseDictionary::load(&paths.dictionary, &paths.sentiment_labels)?;
            let report = match_test_labels(&sentences, &dict);
            let summary = TestMatchSummary {
                labeled: report.labeled.len(),
                dropped: report.dropped.iter().map(|d| (d.id.clone(), d.text.clone(), d.score)).collect(),
                unmatched: report.unmatched.clone(),
            };
            write_json(&layout.test_match(), &summary)?;
            Ok(Corpus {
                train,
                dev,
                test: report.labeled,
                lexicons,
            })
        }
    }
}

pub fn cmd_prepare(cfg: &RunConfig, layout: &Layout) -> CliResult<PrepareSummary> {
    cfg.validate()?;
    let corpus = load_corpus(cfg, layout)?;
    write_jsonl(&layout.split("train"), &corpus.train)?;
    write_jsonl(&layout.split("dev"), &corpus.dev)?;
    write_jsonl(&layout.split("test"), &corpus.test)?;
    let lx_dir = layout.lexicons();
    if lx_dir.exists() {
        fs::remove_dir_all(&lx_dir).map_err(|e| CliError::file(&lx_dir, e))?;
    }
    corpus.lexicons.write_dir(&lx_dir)?;

    let texts: Vec<&str> = corpus.train.iter().map(|i| i.text.as_str()).collect();
    let vocab = build_vocab(&texts, cfg.data.min_freq)?;
    write_lines(&layout.vocab(), vocab.tokens())?;

    let name_lexicon = corpus.lexicons.get(NAMES).unwrap_or(&[]);
    let mined = if name_lexicon.is_empty() {
        Default::default()
    } else {
        extract_name_polarity(&corpus.train, name_lexicon, cfg.names.min_count)?
    };
    let excluded: BTreeSet<&str> = cfg.names.exclude.iter().map(String::as_str).collect();
    let keep = |v: &[String]| -> Vec<String> { v.iter().filter(|n| !excluded.contains(n.as_str())).cloned().collect() };
    let names = NameLists {
        positive: keep(&mined.positive),
        negative: keep(&mined.negative),
    };
    write_json(&layout.names("polarity.json"), &mined.polarity)?;
    write_lines(&layout.names("positive.txt"), &names.positive)?;
    write_lines(&layout.names("negative.txt"), &names.negative)?;

    let suite = build_suite(&cfg.suite, &corpus.test, &names, &corpus.lexicons, cfg.suite_seed)?;
    write_jsonl(&layout.suite_instances(), &suite.instances)?;
    write_json(&layout.suite_manifest(), &suite.manifest(cfg.suite_seed, &cfg.suite))?;
    write_atomic(&layout.config(), cfg.to_toml().as_bytes())?;

    Ok(PrepareSummary {
        n_train: corpus.train.len(),
        n_dev: corpus.dev.len(),
        n_test: corpus.test.len(),
        vocab_size: vocab.len(),
        positive_names: names.positive.len(),
        negative_names: names.negative.len(),
        capabilities: suite.capabilities.len(),
        instances: suite.instances.len(),
    })
}

fn load_vocab(layout: &Layout) -> CliResult<Vocab> {
    let path = layout.vocab();
    let text = fs::read_to_string(&path).map_err(|e| CliError::file(&path, e))?;
    Vocab::from_tokens(text.lines().map(str::to_string).collect()).map_err(|e| CliError::file(&path, e))
}

fn encode_all(items: &[LabeledInstance], vocab: &Vocab) -> Vec<Encoded> {
    items
        .iter()
        .map(|i| Encoded {
            tokens: encode(&i.text, vocab),
            label: i.label,
        })
        .collect()
}

fn config_hash(cfg: &RunConfig) -> String {
    let v = serde_json::json!({ "train": cfg.train, "swa": cfg.swa, "data": cfg.data });
    content_hash(v.to_string().as_bytes())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwaCandidate {
    pub lr: f64,
    pub dev_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwaLog {
    pub cutoff_epoch: usize,
    pub constant_lr: f64,
    pub n_averaged: usize,
    pub candidates: Vec<SwaCandidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub seed: u64,
    pub variant: Variant,
    pub vocab_hash: String,
    pub config_hash: String,
    pub steps_per_epoch: usize,
    /// Live weights at the end of each epoch.
    pub epoch_dev_accuracy: Vec<f64>,
    /// Dev accuracy of the saved model.
    pub dev_accuracy: f64,
    pub lr_trace: Vec<f64>,
    pub snapshot_hashes: Vec<String>,
    pub weights_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub swa: Option<SwaLog>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainFailure {
    pub seed: u64,
    pub variant: Variant,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainSummary {
    pub trained: Vec<(u64, Variant)>,
    pub failures: Vec<TrainFailure>,
}

struct TrainCtx<'a> {
    cfg: &'a RunConfig,
    layout: &'a Layout,
    vocab_hash: String,
    config_hash: String,
    vocab_size: usize,
    train: &'a [Encoded],
    dev: &'a [Encoded],
}

impl TrainCtx<'_> {
    fn save(&self, path: &Path, w: &ModelWeights, seed: u64, v: Variant, epoch: Option<usize>) -> CliResult<String> {
        let mut header = WeightsHeader::new(w, &self.vocab_hash, &self.config_hash, v.as_str(), seed);
        header.epoch = epoch;
        let bytes = weights_to_bytes(&header, w);
        write_atomic(path, &bytes)?;
        Ok(content_hash(&bytes))
    }

    fn run(&self, seed: u64, v: Variant) -> CliResult<TrainLog> {
        let cfg = self.cfg;
        let (weights, snapshots, epoch_acc, dev_acc, lr_trace, swa) = match v {
            Variant::Vanilla => {
                let schedule = cfg.train.vanilla_schedule(self.train.len());
                let out = train(&cfg.train, &schedule, self.vocab_size, self.train, self.dev, seed)?;
                let acc = *out.dev_accuracy.last().expect("at least one epoch");
                (out.weights, out.snapshots, out.dev_accuracy, acc, out.lr_trace, None)
            }
            Variant::Swa => {
                let lrs = if cfg.swa.select_lr {
                    cfg.swa.candidate_lrs.clone()
                } else {
                    vec![cfg.swa.constant_lr]
                };
                let mut outcomes = Vec::new();
                for &lr in &lrs {
                    let out = train_swa(&cfg.train, &cfg.swa, lr, self.vocab_size, self.train, self.dev, seed)?;
                    outcomes.push((lr, out));
                }
                let scores: Vec<(f64, f64)> = outcomes.iter().map(|(lr, o)| (*lr, o.dev_accuracy)).collect();
                let chosen = select_swa_lr(&scores)?;
                let (_, out) = outcomes
                    .into_iter()
                    .find(|(lr, _)| *lr == chosen)
                    .expect("selected lr is a candidate");
                let log = SwaLog {
                    cutoff_epoch: cfg.swa.cutoff_epoch,
                    constant_lr: chosen,
                    n_averaged: out.n_averaged,
                    candidates: scores
                        .iter()
                        .map(|&(lr, dev_accuracy)| SwaCandidate { lr, dev_accuracy })
                        .collect(),
                };
                let acc = out.dev_accuracy;
                (out.weights, out.epoch_snapshots, out.epoch_dev_accuracy, acc, out.lr_trace, Some(log))
            }
        };
        let mut snapshot_hashes = Vec::new();
        for (e, snap) in snapshots.iter().enumerate() {
            snapshot_hashes.push(self.save(&self.layout.snapshot(seed, v, e + 1), snap, seed, v, Some(e + 1))?);
        }
        let weights_hash = self.save(&self.layout.weights(seed, v), &weights, seed, v, None)?;
        let log = TrainLog {
            seed,
            variant: v,
            vocab_hash: self.vocab_hash.clone(),
            config_hash: self.config_hash.clone(),
            steps_per_epoch: cfg.train.steps_per_epoch(self.train.len()),
            epoch_dev_accuracy: epoch_acc,
            dev_accuracy: dev_acc,
            lr_trace,
            snapshot_hashes,
            weights_hash,
            swa,
        };
        write_json(&self.layout.train_log(seed, v), &log)?;
        Ok(log)
    }
}

fn jobs(cfg: &RunConfig) -> Vec<(u64, Variant)> {
    let mut out = Vec::new();
    for &seed in &cfg.seeds {
        for v in Variant::ALL {
            if cfg.variants.contains(&v) {
                out.push((seed, v));
            }
        }
    }
    out
}

fn pool(cfg: &RunConfig) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| CliError::Config(format!("parallelism: {e}")))
}

pub fn cmd_train(cfg: &RunConfig, layout: &Layout) -> CliResult<TrainSummary> {
    cfg.validate()?;
    let vocab = load_vocab(layout)?;
    let train_set: Vec<LabeledInstance> = read_jsonl(&layout.split("train"))?;
    let dev_set: Vec<LabeledInstance> = read_jsonl(&layout.split("dev"))?;
    let tr = encode_all(&train_set, &vocab);
    let dev = encode_all(&dev_set, &vocab);
    let ctx = TrainCtx {
        cfg,
        layout,
        vocab_hash: vocab.hash(),
        config_hash: config_hash(cfg),
        vocab_size: vocab.len(),
        train: &tr,
        dev: &dev,
    };
    let jobs = jobs(cfg);
    let results: Vec<CliResult<TrainLog>> = pool(cfg)?.install(|| jobs.par_iter().map(|&(s, v)| ctx.run(s, v)).collect());
    let mut summary = TrainSummary {
        trained: Vec::new(),
        failures: Vec::new(),
    };
    for (&(seed, variant), r) in jobs.iter().zip(results) {
        match r {
            Ok(_) => summary.trained.push((seed, variant)),
            Err(CliError::Data(e @ (Error::Diverged { .. } | Error::Numeric { .. }))) => {
                summary.failures.push(TrainFailure {
                    seed,
                    variant,
                    error: e.to_string(),
                });
            }
            Err(e) => return Err(e),
        }
    }
    write_json(&layout.failures(), &summary.failures)?;
    if summary.trained.is_empty() {
        let list: Vec<String> = summary
            .failures
            .iter()
            .map(|f| format!("seed {} {}: {}", f.seed, f.variant, f.error))
            .collect();
        return Err(CliError::Training(list.join("; ")));
    }
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DevPrediction {
    pub id: String,
    pub label: u8,
    pub pred: u8,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalSummary {
    pub evaluated: Vec<(u64, Variant)>,
    /// Runs skipped because training failed.
    pub skipped: Vec<(u64, Variant)>,
    pub records_per_model: usize,
}

fn read_failures(layout: &Layout) -> CliResult<Vec<TrainFailure>> {
    let path = layout.failures();
    if path.exists() {
        read_json(&path)
    } else {
        Ok(Vec::new())
    }
}

pub fn cmd_eval(cfg: &RunConfig, layout: &Layout) -> CliResult<EvalSummary> {
    cfg.validate()?;
    let vocab = load_vocab(layout)?;
    let vocab_hash = vocab.hash();
    let manifest: SuiteManifest = read_json(&layout.suite_manifest())?;
    let instances: Vec<TestInstance> = read_jsonl(&layout.suite_instances())?;
    let dev: Vec<LabeledInstance> = read_jsonl(&layout.split("dev"))?;
    let failed: BTreeSet<(u64, Variant)> = read_failures(layout)?.iter().map(|f| (f.seed, f.variant)).collect();
    let (todo, skipped): (Vec<_>, Vec<_>) = jobs(cfg).into_iter().partition(|j| !failed.contains(j));

    let eval_one = |seed: u64, v: Variant| -> CliResult<()> {
        let path = layout.weights(seed, v);
        let bytes = fs::read(&path)
            .map_err(|e| CliError::file(&path, format!("no model for seed {seed} variant {v}: {e}")))?;
        let (header, weights) = weights_from_bytes(&bytes, &path)?;
        if header.vocab_hash != vocab_hash {
            return Err(CliError::file(&path, "model was trained with a different vocabulary"));
        }
        let dev_preds: Vec<DevPrediction> = dev
            .iter()
            .map(|d| {
                let p = predict(&weights, &encode(&d.text, &vocab))?;
                Ok(DevPrediction {
                    id: d.id.clone(),
                    label: d.label,
                    pred: p.label,
                    confidence: p.confidence,
                })
            })
            .collect::<seedstab::Result<_>>()?;
        let (records, _) = evaluate_model(
            |text| predict(&weights, &encode(text, &vocab)),
            &manifest.capabilities,
            &instances,
            manifest.tau,
            seed,
            v,
        )?;
        write_jsonl(&layout.dev_predictions(seed, v), &dev_preds)?;
        write_jsonl(&layout.eval_records(seed, v), &records)?;
        Ok(())
    };
    let results: Vec<CliResult<()>> = pool(cfg)?.install(|| todo.par_iter().map(|&(s, v)| eval_one(s, v)).collect());
    for r in results {
        r?;
    }
    Ok(EvalSummary {
        evaluated: todo,
        skipped,
        records_per_model: instances.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSummary {
    pub report: StabilityReport,
    pub without_outliers: Option<StabilityReport>,
}

pub fn cmd_report(cfg: &RunConfig, layout: &Layout) -> CliResult<ReportSummary> {
    cfg.validate()?;
    let manifest: SuiteManifest = read_json(&layout.suite_manifest())?;
    let dev: Vec<LabeledInstance> = read_jsonl(&layout.split("dev"))?;
    let mut runs = Vec::new();
    let mut missing = Vec::new();
    for (seed, v) in jobs(cfg) {
        let (dp, rp) = (layout.dev_predictions(seed, v), layout.eval_records(seed, v));
        if !dp.exists() || !rp.exists() {
            missing.push(format!("seed {seed} {v}"));
            continue;
        }
        let preds: Vec<DevPrediction> = read_jsonl(&dp)?;
        let records: Vec<EvalRecord> = read_jsonl(&rp)?;
        runs.push(ModelRun {
            seed,
            variant: v,
            dev_predictions: preds.into_iter().map(|p| (p.id, p.pred)).collect::<HashMap<_, _>>(),
            records,
        });
    }
    if !missing.is_empty() {
        return Err(CliError::IncompleteEval(format!("missing evaluations for {}", missing.join(", "))));
    }
    let input = ReportInput {
        capabilities: &manifest.capabilities,
        dev: &dev,
        runs: &runs,
    };
    let report = compose_report(input, &BTreeSet::new())?;
    let flagged: BTreeSet<u64> = report.outliers.iter().map(|o| o.seed).collect();
    let stale = layout.report_without_outliers();
    let without_outliers = if flagged.is_empty() {
        if stale.exists() {
            fs::remove_dir_all(&stale).map_err(|e| CliError::file(&stale, e))?;
        }
        None
    } else {
        Some(compose_report(input, &flagged)?)
    };
    write_report_dir(&layout.report(), &report)?;
    if let Some(r) = &without_outliers {
        write_report_dir(&stale, r)?;
    }
    Ok(ReportSummary {
        report,
        without_outliers,
    })
}

#[derive(Debug, Serialize)]
pub struct AllSummary {
    pub prepare: PrepareSummary,
    pub train: TrainSummary,
    pub eval: EvalSummary,
    pub report: ReportSummary,
}

pub fn cmd_all(cfg: &RunConfig, layout: &Layout) -> CliResult<AllSummary> {
    let prepare = cmd_prepare(cfg, layout)?;
    let train = cmd_train(cfg, layout)?;
    let eval = cmd_eval(cfg, layout)?;
    let report = cmd_report(cfg, layout)?;
    Ok(AllSummary {
        prepare,
        train,
        eval,
        report,
    })
}

/// Reads back a training log.
pub fn read_train_log(layout: &Layout, seed: u64, v: Variant) -> CliResult<TrainLog> {
    read_json(&layout.train_log(seed, v))
}
