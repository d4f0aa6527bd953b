//! Acceptance criteria, one line each. Runs without the libtest harness so
//! the PASS/FAIL lines always reach stdout.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::Rng;
use seedstab::checklist::{build_suite, capability_catalog, NameLists, SuiteConfig, TestType};
use seedstab::data::{gen_synthetic_corpus, LabeledInstance};
use seedstab::rng::seeded;
use seedstab::stability::{build_dev_matrix, fleiss_kappa, overlap_ratio, FailureSet, RatingMatrix};
use seedstab::swa::{train_swa, SwaConfig};
use seedstab::textmodel::{build_vocab, encode, loss_and_grad, train, Dims, Encoded, LrSchedule, ModelWeights, TrainConfig};
use seedstab::Variant;
use seedstab_cli::{cmd_all, Layout, RunConfig};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn check(cond: bool, ok: impl Into<String>, bad: impl Into<String>) -> Outcome {
    if cond {
        Ok(ok.into())
    } else {
        Err(bad.into())
    }
}

fn within(limit: Duration, t: Duration) -> Outcome {
    check(t < limit, format!("{:.3}s", t.as_secs_f64()), format!("took {:.3}s, limit {:?}", t.as_secs_f64(), limit))
}

// ---- 1: Fleiss' kappa against a pairwise-agreement oracle

fn oracle_kappa(counts: &[Vec<u32>]) -> Option<f64> {
    let k = counts[0].len();
    let n: u32 = counts[0].iter().sum();
    let mut ratings: Vec<Vec<usize>> = Vec::new();
    for row in counts {
        ratings.push(row.iter().enumerate().flat_map(|(c, &m)| std::iter::repeat_n(c, m as usize)).collect());
    }
    let items = ratings.len() as f64;
    let mut p_bar = 0.0;
    for r in &ratings {
        let mut agree = 0u32;
        for a in 0..r.len() {
            for b in 0..r.len() {
                if a != b && r[a] == r[b] {
                    agree += 1;
                }
            }
        }
        p_bar += agree as f64 / (n * (n - 1)) as f64;
    }
    p_bar /= items;
    let mut p_e = 0.0;
    for c in 0..k {
        let share = ratings.iter().flatten().filter(|&&x| x == c).count() as f64 / (items * n as f64);
        p_e += share * share;
    }
    if (1.0 - p_e).abs() < 1e-12 {
        None
    } else {
        Some((p_bar - p_e) / (1.0 - p_e))
    }
}

fn criterion_kappa() -> Outcome {
    let start = Instant::now();
    let mut rng = seeded(101);
    let mut worst = 0.0f64;
    for i in 0..200 {
        let (items, n, k) = (rng.gen_range(1..=30), rng.gen_range(2..=10u32), rng.gen_range(2..=4));
        let counts: Vec<Vec<u32>> = (0..items)
            .map(|_| {
                let mut row = vec![0u32; k];
                for _ in 0..n {
                    row[rng.gen_range(0..k)] += 1;
                }
                row
            })
            .collect();
        let got = fleiss_kappa(&RatingMatrix::from_counts(counts.clone()).map_err(|e| e.to_string())?);
        match (oracle_kappa(&counts), got.raw) {
            (Some(want), Some(raw)) => worst = worst.max((want - raw).abs()),
            (None, None) if got.kappa == Some(1.0) => {}
            (want, raw) => return Err(format!("matrix {i}: oracle {want:?}, got {raw:?}")),
        }
    }
    if worst > 1e-10 {
        return Err(format!("max deviation {worst:e}"));
    }
    for rows in [vec![vec![4, 0], vec![0, 4], vec![4, 0]], vec![vec![0, 3, 0]; 5]] {
        let k = fleiss_kappa(&RatingMatrix::from_counts(rows).map_err(|e| e.to_string())?);
        if k.kappa != Some(1.0) {
            return Err(format!("perfect agreement gave {:?}", k.kappa));
        }
    }
    within(Duration::from_secs(1), start.elapsed())?;
    Ok(format!("200 matrices, max deviation {worst:.1e}, {:.3}s", start.elapsed().as_secs_f64()))
}

// ---- 2: overlap ratio properties

fn failure_set(seed: u64, ids: BTreeSet<String>) -> FailureSet {
    FailureSet {
        seed,
        variant: Variant::Vanilla,
        capability: "c".into(),
        failing: ids,
    }
}

fn random_set<R: Rng>(rng: &mut R) -> BTreeSet<String> {
    let n = rng.gen_range(0..8);
    (0..n).map(|_| format!("i{}", rng.gen_range(0..12))).collect()
}

fn criterion_overlap() -> Outcome {
    let start = Instant::now();
    let mut rng = seeded(202);
    for i in 0..1000 {
        let (sa, sb) = (random_set(&mut rng), random_set(&mut rng));
        let a = failure_set(0, sa.clone());
        let b = failure_set(1, sb.clone());
        let ab = overlap_ratio(&a, &b).map_err(|e| e.to_string())?;
        let ba = overlap_ratio(&b, &a).map_err(|e| e.to_string())?;
        if ab != ba {
            return Err(format!("pair {i}: not symmetric"));
        }
        let union = sa.union(&sb).count();
        let inter = sa.intersection(&sb).count();
        match ab {
            None if union == 0 => {}
            Some(r) if union > 0 => {
                if !(0.0..=1.0).contains(&r) || (r - inter as f64 / union as f64).abs() > 1e-15 {
                    return Err(format!("pair {i}: ratio {r}"));
                }
                if inter == 0 && r != 0.0 {
                    return Err(format!("pair {i}: disjoint sets gave {r}"));
                }
            }
            other => return Err(format!("pair {i}: {other:?} with union {union}")),
        }
        if !sa.is_empty() && overlap_ratio(&a, &failure_set(2, sa.clone())).map_err(|e| e.to_string())? != Some(1.0) {
            return Err(format!("pair {i}: identical sets not 1"));
        }
    }
    within(Duration::from_secs(1), start.elapsed())?;
    Ok(format!("1000 pairs, {:.3}s", start.elapsed().as_secs_f64()))
}

// ---- 3: gradient check

fn criterion_gradient() -> Outcome {
    const EPS: f64 = 1e-5;
    let start = Instant::now();
    let mut rng = seeded(303);
    let mut worst = 0.0f64;
    let models = 24;
    for _ in 0..models {
        let dims = Dims::new(rng.gen_range(3..10), rng.gen_range(1..6), rng.gen_range(1..6));
        let mut w = ModelWeights::init(dims, &mut rng);
        for p in w.params_mut() {
            *p *= rng.gen_range(1.0..5.0);
        }
        let batch: Vec<Encoded> = (0..rng.gen_range(1..6))
            .map(|_| Encoded {
                tokens: (0..rng.gen_range(1..7)).map(|_| rng.gen_range(0..dims.vocab_size)).collect(),
                label: rng.gen_range(0..2),
            })
            .collect();
        let refs: Vec<&Encoded> = batch.iter().collect();
        let analytic = loss_and_grad(&w, &refs).map_err(|e| e.to_string())?.1;
        let mut probe = w.clone();
        for (i, &a) in analytic.params().iter().enumerate() {
            let x = w.params()[i];
            probe.params_mut()[i] = x + EPS;
            let up = loss_and_grad(&probe, &refs).map_err(|e| e.to_string())?.0;
            probe.params_mut()[i] = x - EPS;
            let down = loss_and_grad(&probe, &refs).map_err(|e| e.to_string())?.0;
            probe.params_mut()[i] = x;
            let num = (up - down) / (2.0 * EPS);
            worst = worst.max((a - num).abs() / a.abs().max(num.abs()).max(1e-6));
        }
    }
    check(worst < 1e-4, "", format!("max relative error {worst:e}"))?;
    within(Duration::from_secs(5), start.elapsed())?;
    Ok(format!("{models} models, max relative error {worst:.1e}, {:.3}s", start.elapsed().as_secs_f64()))
}

// ---- 4, 5: SWA

fn small_corpus() -> (usize, Vec<Encoded>, Vec<Encoded>) {
    let c = gen_synthetic_corpus(5, 600, 100, 10).expect("corpus");
    let texts: Vec<&str> = c.train.iter().map(|i| i.text.as_str()).collect();
    let vocab = build_vocab(&texts, 1).expect("vocab");
    let enc = |v: &[LabeledInstance]| -> Vec<Encoded> {
        v.iter()
            .map(|i| Encoded {
                tokens: encode(&i.text, &vocab),
                label: i.label,
            })
            .collect()
    };
    (vocab.len(), enc(&c.train), enc(&c.dev))
}

fn criterion_swa_mean() -> Outcome {
    let (v, tr, dev) = small_corpus();
    let cfg = TrainConfig::default();
    let swa = SwaConfig::default();
    let out = train_swa(&cfg, &swa, swa.constant_lr, v, &tr, &dev, 4).map_err(|e| e.to_string())?;
    let expected = cfg.epochs - swa.cutoff_epoch;
    check(out.contributing.len() == expected, "", format!("{} snapshots averaged, expected {expected}", out.contributing.len()))?;
    let n = out.contributing.len() as f64;
    let mut worst = 0.0f64;
    for (i, &w) in out.weights.params().iter().enumerate() {
        let mean = out.contributing.iter().map(|s| s.params()[i]).sum::<f64>() / n;
        worst = worst.max((w - mean).abs());
    }
    check(worst <= 1e-9, format!("{expected} snapshots, max deviation {worst:.1e}"), format!("max deviation {worst:e}"))
}

fn criterion_pre_cutoff() -> Outcome {
    let (v, tr, dev) = small_corpus();
    let cfg = TrainConfig::default();
    let swa = SwaConfig::default();
    for seed in 0..3 {
        let vanilla = train(&cfg, &cfg.vanilla_schedule(tr.len()), v, &tr, &dev, seed).map_err(|e| e.to_string())?;
        let averaged = train_swa(&cfg, &swa, swa.constant_lr * 1.25, v, &tr, &dev, seed).map_err(|e| e.to_string())?;
        for e in 0..swa.cutoff_epoch {
            let a: Vec<u64> = vanilla.snapshots[e].params().iter().map(|x| x.to_bits()).collect();
            let b: Vec<u64> = averaged.epoch_snapshots[e].params().iter().map(|x| x.to_bits()).collect();
            if a != b {
                return Err(format!("seed {seed}: epoch {} differs", e + 1));
            }
        }
    }
    Ok(format!("3 seeds bit-identical through epoch {}", swa.cutoff_epoch))
}

// ---- 6: schedule

fn criterion_schedule() -> Outcome {
    let s = LrSchedule::warmup_linear_decay(1256, 1e-5, 20935);
    let swa = s.with_constant_after(8374, 6e-6);
    let ok = s.lr_at(0) == 0.0
        && s.lr_at(1256) == 1e-5
        && s.lr_at(20935) == 0.0
        && (s.lr_at(628) - 5e-6).abs() < 1e-18
        && swa.lr_at(8373) == s.lr_at(8373)
        && [8374, 8375, 15000, 20935].iter().all(|&t| swa.lr_at(t) == 6e-6);
    check(ok, "warmup 1256 to 1e-5, zero at 20935, 6e-6 from step 8374", "schedule values differ")
}

// ---- 7: suite sizes at reference scale

fn criterion_suite_sizes() -> Outcome {
    let corpus = gen_synthetic_corpus(0, 2000, 10, 3000).map_err(|e| e.to_string())?;
    let names = NameLists {
        positive: corpus.positive_biased_names.clone(),
        negative: corpus.negative_biased_names.clone(),
    };
    let config = SuiteConfig {
        scale: 1.0,
        ..SuiteConfig::default()
    };
    let suite = build_suite(&config, &corpus.test, &names, &corpus.lexicons, 0).map_err(|e| e.to_string())?;
    let get = |n: &str| suite.capabilities.iter().find(|c| c.name == n).map(|c| c.m_instances).unwrap_or(0);
    let (names_m, pos_m, neg_m) = (get("Change Names"), get("Add Positive Phrases"), get("Add Negative Phrases"));
    check(
        (names_m, pos_m, neg_m) == (1617, 5500, 5000),
        format!("Change Names {names_m}, Add Positive Phrases {pos_m}, Add Negative Phrases {neg_m}"),
        format!("got {names_m}/{pos_m}/{neg_m}"),
    )?;
    for spec in capability_catalog().iter().filter(|c| c.test_type == TestType::Mft) {
        let n = suite.capabilities.iter().find(|c| c.name == spec.name).map(|c| c.n_cases).unwrap_or(0);
        if n != spec.reference_cases {
            return Err(format!("{}: {n} cases, expected {}", spec.name, spec.reference_cases));
        }
    }
    Ok(format!("{names_m}/{pos_m}/{neg_m} instances; MFT sizes match"))
}

// ---- 8, 9: end to end

fn desk_config() -> RunConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.toml");
    RunConfig::load(&path).expect("desk config")
}

fn criterion_end_to_end(root: &Path) -> Outcome {
    let cfg = desk_config();
    let layout = Layout::new(root);
    let start = Instant::now();
    let out = cmd_all(&cfg, &layout).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    within(Duration::from_secs(180), elapsed)?;

    let main = &out.report.report;
    check(out.train.trained.len() == 20, "", format!("{} models trained", out.train.trained.len()))?;
    for cap in &main.capabilities {
        for v in Variant::ALL {
            let stats = cap.variants.iter().find(|s| s.variant == v).ok_or(format!("{}: no {v} stats", cap.name))?;
            if stats.error_rates.len() != 10 {
                return Err(format!("{} {v}: {} error rates", cap.name, stats.error_rates.len()));
            }
            if stats.overlap.pairs.len() != 45 {
                return Err(format!("{} {v}: {} pairs in the full report", cap.name, stats.overlap.pairs.len()));
            }
        }
        if cap.variants.iter().any(|s| s.kappa.is_none()) {
            return Err(format!("{}: kappa missing", cap.name));
        }
    }
    check(main.dev_kappa.len() == 2, "", "dev kappa missing for a variant")?;
    for f in ["report.json", "error_rates.csv", "overlap_pairs.csv", "kappa.csv", "dev_accuracy.csv", "summary.txt"] {
        if !layout.report().join(f).is_file() {
            return Err(format!("report/{f} missing"));
        }
    }

    let Some(clean) = &out.report.without_outliers else {
        return Err("no outlier seed flagged: the analysis covers 10 seeds and 45 pairs, not 36".into());
    };
    check(clean.seeds.len() == 9, "", format!("{} seeds after exclusion", clean.seeds.len()))?;
    for cap in &clean.capabilities {
        for s in &cap.variants {
            if s.overlap.pairs.len() != 36 || s.overlap.matrix.len() != 9 {
                return Err(format!("{} {}: {} pairs after exclusion", cap.name, s.variant, s.overlap.pairs.len()));
            }
        }
    }
    let flagged: Vec<String> = main.outliers.iter().map(|o| format!("seed {} {}", o.seed, o.variant)).collect();
    Ok(format!(
        "{:.1}s; 20 models x {} capabilities; {} flagged, 36 pairs per capability after exclusion (45 before)",
        elapsed.as_secs_f64(),
        main.capabilities.len(),
        flagged.join(", ")
    ))
}

fn report_bytes(root: &Path) -> Vec<Vec<u8>> {
    let layout = Layout::new(root);
    [layout.report(), layout.report_without_outliers()]
        .iter()
        .map(|d| fs::read(d.join("report.json")).unwrap_or_default())
        .collect()
}

fn criterion_determinism(first: &Path) -> Outcome {
    let mut cfg = desk_config();
    let again = tempfile::tempdir().map_err(|e| e.to_string())?;
    cmd_all(&cfg, &Layout::new(again.path())).map_err(|e| e.to_string())?;
    cfg.parallelism = 4;
    let parallel = tempfile::tempdir().map_err(|e| e.to_string())?;
    cmd_all(&cfg, &Layout::new(parallel.path())).map_err(|e| e.to_string())?;
    let base = report_bytes(first);
    check(!base[0].is_empty(), "", "first run has no report")?;
    check(report_bytes(again.path()) == base, "", "rerun differs")?;
    check(report_bytes(parallel.path()) == base, "", "parallelism 4 differs")?;
    Ok("report.json identical across a rerun and parallelism 1 vs 4".into())
}

// ---- 10: kappa calibration

fn criterion_calibration() -> Outcome {
    let mut rng = seeded(1010);
    let dev: Vec<LabeledInstance> = (0..1000)
        .map(|i| LabeledInstance {
            id: format!("d{i}"),
            text: String::new(),
            label: rng.gen_range(0..2),
        })
        .collect();
    let coin: BTreeMap<u64, HashMap<String, u8>> = (0..9)
        .map(|s| (s, dev.iter().map(|d| (d.id.clone(), rng.gen_range(0..2))).collect()))
        .collect();
    let random = fleiss_kappa(&build_dev_matrix(&dev, &coin, false).map_err(|e| e.to_string())?);
    let k = random.kappa.ok_or("coin-flip kappa undefined")?;
    check(k.abs() < 0.1, "", format!("coin-flip kappa {k}"))?;
    let shared: HashMap<String, u8> = dev.iter().map(|d| (d.id.clone(), rng.gen_range(0..2))).collect();
    let same: BTreeMap<u64, HashMap<String, u8>> = (0..9).map(|s| (s, shared.clone())).collect();
    let agree = fleiss_kappa(&build_dev_matrix(&dev, &same, false).map_err(|e| e.to_string())?);
    check(agree.kappa == Some(1.0), format!("coin flips {k:+.4}, identical raters 1.0"), format!("identical raters gave {:?}", agree.kappa))
}

fn main() {
    let desk = tempfile::tempdir().expect("tempdir");
    let criteria: Vec<Criterion<'_>> = vec![
        ("kappa matches oracle", Box::new(criterion_kappa)),
        ("overlap ratio properties", Box::new(criterion_overlap)),
        ("gradient check", Box::new(criterion_gradient)),
        ("SWA weights are the snapshot mean", Box::new(criterion_swa_mean)),
        ("SWA equals vanilla through the cutoff", Box::new(criterion_pre_cutoff)),
        ("learning-rate schedule", Box::new(criterion_schedule)),
        ("suite sizes at reference scale", Box::new(criterion_suite_sizes)),
        ("end-to-end desk run", Box::new(|| criterion_end_to_end(desk.path()))),
        ("determinism", Box::new(|| criterion_determinism(desk.path()))),
        ("kappa calibration", Box::new(criterion_calibration)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
