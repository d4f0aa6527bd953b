use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{
    build_capability_matrix, build_dev_matrix, case_error_rate, fleiss_kappa, pairwise_overlap, quantile, FailureSet,
    Kappa, PairwiseOverlap, Summary,
};
use crate::checklist::{case_results, Capability, DirMove, EvalRecord, TestType};
use crate::data::LabeledInstance;
use crate::{Error, Result, Variant};

/// Capability label used for dev-set rows.
pub const DEV: &str = "dev";

/// Everything one trained model contributes to the analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelRun {
    pub seed: u64,
    pub variant: Variant,
    /// Instance id to predicted label over the dev set.
    pub dev_predictions: HashMap<String, u8>,
    pub records: Vec<EvalRecord>,
}

#[derive(Debug, Clone, Copy)]
pub struct ReportInput<'a> {
    pub capabilities: &'a [Capability],
    pub dev: &'a [LabeledInstance],
    pub runs: &'a [ModelRun],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierFlag {
    pub seed: u64,
    pub variant: Variant,
    pub dev_accuracy: f64,
    pub median: f64,
    pub iqr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedAccuracy {
    pub seed: u64,
    pub variant: Variant,
    pub accuracy: f64,
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DevKappa {
    pub variant: Variant,
    /// Every dev instance rated {correct, incorrect}.
    pub all_instances: Kappa,
    /// Only instances at least one seed got wrong; `None` if there are none.
    pub misclassified_only: Option<Kappa>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedErrorRate {
    pub seed: u64,
    pub n_cases: usize,
    pub failed_cases: usize,
    pub error_rate: f64,
    pub failing_instances: usize,
    /// DIR only: cases whose every move stayed within tolerance are left
    /// out of the denominator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_rate_excluding_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub within_tolerance_instances: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantStats {
    pub variant: Variant,
    pub error_rates: Vec<SeedErrorRate>,
    pub error_rate_summary: Summary,
    pub overlap: PairwiseOverlap,
    /// `None` when the capability has no rated instances.
    pub kappa: Option<Kappa>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapabilityReport {
    pub name: String,
    pub test_type: TestType,
    pub n_cases: usize,
    pub m_instances: usize,
    pub variants: Vec<VariantStats>,
    /// SWA kappa minus vanilla kappa.
    pub kappa_difference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmittedCapability {
    pub name: String,
    pub notice: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub variants: Vec<Variant>,
    /// Seeds entering the statistics.
    pub seeds: Vec<u64>,
    pub excluded_seeds: Vec<u64>,
    pub outliers: Vec<OutlierFlag>,
    pub dev_accuracy: Vec<SeedAccuracy>,
    pub dev_kappa: Vec<DevKappa>,
    pub capabilities: Vec<CapabilityReport>,
    pub omitted: Vec<OmittedCapability>,
}

impl StabilityReport {
    pub fn capability(&self, name: &str) -> Option<&CapabilityReport> {
        self.capabilities.iter().find(|c| c.name == name)
    }
}

impl CapabilityReport {
    pub fn variant(&self, v: Variant) -> Option<&VariantStats> {
        self.variants.iter().find(|s| s.variant == v)
    }
}

/// Seeds whose dev accuracy lies more than three interquartile ranges below
/// the median of `accuracies`. Nothing is flagged when the IQR is zero.
pub fn outlier_seeds(variant: Variant, accuracies: &[(u64, f64)]) -> Vec<OutlierFlag> {
    let mut sorted: Vec<f64> = accuracies.iter().map(|a| a.1).collect();
    sorted.sort_by(f64::total_cmp);
    let (Some(q1), Some(median), Some(q3)) = (quantile(&sorted, 0.25), quantile(&sorted, 0.5), quantile(&sorted, 0.75))
    else {
        return Vec::new();
    };
    let iqr = q3 - q1;
    if iqr <= 0.0 {
        return Vec::new();
    }
    accuracies
        .iter()
        .filter(|(_, acc)| median - acc > 3.0 * iqr)
        .map(|&(seed, acc)| OutlierFlag {
            seed,
            variant,
            dev_accuracy: acc,
            median,
            iqr,
        })
        .collect()
}

fn dev_accuracy(run: &ModelRun, dev: &[LabeledInstance]) -> Result<f64> {
    if dev.is_empty() {
        return Err(Error::input("empty dev set"));
    }
    let mut correct = 0usize;
    for d in dev {
        let pred = run.dev_predictions.get(&d.id).ok_or_else(|| {
            Error::input(format!("seed {} {} has no prediction for {}", run.seed, run.variant, d.id))
        })?;
        correct += usize::from(*pred == d.label);
    }
    Ok(correct as f64 / dev.len() as f64)
}

fn seed_error_rate(seed: u64, test_type: TestType, records: &[&EvalRecord]) -> Result<SeedErrorRate> {
    let owned: Vec<EvalRecord> = records.iter().map(|r| (*r).clone()).collect();
    let cases = case_results(&owned);
    let error_rate = case_error_rate(&cases)?;
    let failed_cases = cases.iter().filter(|c| c.failed).count();
    let (excl, within) = if test_type == TestType::Dir {
        let mut moved: BTreeSet<&str> = BTreeSet::new();
        let mut within = 0;
        for r in records {
            match r.flags.dir_direction {
                Some(DirMove::WithinTolerance) => within += 1,
                Some(_) => {
                    moved.insert(r.case_id.as_str());
                }
                None => {}
            }
        }
        let rate = (!moved.is_empty()).then(|| failed_cases as f64 / moved.len() as f64);
        (rate, Some(within))
    } else {
        (None, None)
    };
    Ok(SeedErrorRate {
        seed,
        n_cases: cases.len(),
        failed_cases,
        error_rate,
        failing_instances: records.iter().filter(|r| r.flags.failed()).count(),
        error_rate_excluding_tolerance: excl,
        within_tolerance_instances: within,
    })
}

/// Assembles the full report over every run not in `exclude`.
pub fn compose_report(input: ReportInput<'_>, exclude: &BTreeSet<u64>) -> Result<StabilityReport> {
    let mut by_key: BTreeMap<(Variant, u64), &ModelRun> = BTreeMap::new();
    for run in input.runs {
        if by_key.insert((run.variant, run.seed), run).is_some() {
            return Err(Error::input(format!("duplicate run for seed {} {}", run.seed, run.variant)));
        }
    }
    let variants: Vec<Variant> = Variant::ALL
        .iter()
        .copied()
        .filter(|v| by_key.keys().any(|k| k.0 == *v))
        .collect();
    let seeds_of = |v: Variant| -> BTreeSet<u64> { by_key.keys().filter(|k| k.0 == v).map(|k| k.1).collect() };
    let all_seeds = variants.first().map(|v| seeds_of(*v)).unwrap_or_default();
    for v in &variants {
        if seeds_of(*v) != all_seeds {
            return Err(Error::input("variants were run over different seed sets"));
        }
    }
    let seeds: Vec<u64> = all_seeds.iter().copied().filter(|s| !exclude.contains(s)).collect();
    if seeds.len() < 2 {
        return Err(Error::input(format!(
            "stability analysis needs at least two seeds, got {}",
            seeds.len()
        )));
    }

    let mut dev_acc = Vec::new();
    let mut outliers = Vec::new();
    for &v in &variants {
        let mut accs = Vec::new();
        for &seed in &all_seeds {
            let acc = dev_accuracy(by_key[&(v, seed)], input.dev)?;
            accs.push((seed, acc));
            dev_acc.push(SeedAccuracy {
                seed,
                variant: v,
                accuracy: acc,
                excluded: exclude.contains(&seed),
            });
        }
        outliers.extend(outlier_seeds(v, &accs));
    }

    let mut dev_kappa = Vec::new();
    for &v in &variants {
        let preds: BTreeMap<u64, HashMap<String, u8>> = seeds
            .iter()
            .map(|&s| (s, by_key[&(v, s)].dev_predictions.clone()))
            .collect();
        let all = fleiss_kappa(&build_dev_matrix(input.dev, &preds, false)?);
        let misclassified_only = if no_errors(input.dev, &preds) {
            None
        } else {
            Some(fleiss_kappa(&build_dev_matrix(input.dev, &preds, true)?))
        };
        dev_kappa.push(DevKappa {
            variant: v,
            all_instances: all,
            misclassified_only,
        });
    }

    // (variant, seed) -> capability -> records
    let mut grouped: BTreeMap<(Variant, u64), HashMap<&str, Vec<&EvalRecord>>> = BTreeMap::new();
    for (&key, run) in &by_key {
        let g = grouped.entry(key).or_default();
        for r in &run.records {
            if r.seed != key.1 || r.variant != key.0 {
                return Err(Error::input(format!(
                    "record {} is labeled {} {} inside the run for {} {}",
                    r.instance_id, r.seed, r.variant, key.1, key.0
                )));
            }
            g.entry(r.capability.as_str()).or_default().push(r);
        }
    }

    let mut capabilities = Vec::new();
    let mut omitted = Vec::new();
    for cap in input.capabilities {
        if cap.n_cases == 0 {
            omitted.push(OmittedCapability {
                name: cap.name.clone(),
                notice: cap.notice.clone().unwrap_or_else(|| "capability has no cases".into()),
            });
            continue;
        }
        let mut stats = Vec::new();
        for &v in &variants {
            let mut rates = Vec::new();
            let mut sets = Vec::new();
            let mut pooled: Vec<&EvalRecord> = Vec::new();
            for &seed in &seeds {
                let recs: &[&EvalRecord] = grouped[&(v, seed)].get(cap.name.as_str()).map_or(&[], Vec::as_slice);
                if recs.is_empty() {
                    return Err(Error::input(format!("seed {seed} {v} has no records for '{}'", cap.name)));
                }
                rates.push(seed_error_rate(seed, cap.test_type, recs)?);
                sets.push(FailureSet {
                    seed,
                    variant: v,
                    capability: cap.name.clone(),
                    failing: recs.iter().filter(|r| r.flags.failed()).map(|r| r.instance_id.clone()).collect(),
                });
                pooled.extend(recs);
            }
            let rated = pooled.iter().any(|r| match cap.test_type {
                TestType::Mft => r.flags.mft_failed.is_some(),
                TestType::Inv => r.flags.flipped.is_some(),
                TestType::Dir => r.flags.dir_direction.is_some(),
            });
            let kappa = if rated {
                Some(fleiss_kappa(&build_capability_matrix(pooled.iter().copied(), cap)?))
            } else {
                None
            };
            let summary = Summary::of(&rates.iter().map(|r| Some(r.error_rate)).collect::<Vec<_>>());
            stats.push(VariantStats {
                variant: v,
                error_rates: rates,
                error_rate_summary: summary,
                overlap: pairwise_overlap(&sets)?,
                kappa,
            });
        }
        let kappa_of = |v: Variant| stats.iter().find(|s| s.variant == v).and_then(|s| s.kappa.as_ref()?.kappa);
        let kappa_difference = match (kappa_of(Variant::Vanilla), kappa_of(Variant::Swa)) {
            (Some(a), Some(b)) => Some(b - a),
            _ => None,
        };
        capabilities.push(CapabilityReport {
            name: cap.name.clone(),
            test_type: cap.test_type,
            n_cases: cap.n_cases,
            m_instances: cap.m_instances,
            variants: stats,
            kappa_difference,
        });
    }

    Ok(StabilityReport {
        variants,
        seeds,
        excluded_seeds: exclude.iter().copied().collect(),
        outliers,
        dev_accuracy: dev_acc,
        dev_kappa,
        capabilities,
        omitted,
    })
}

fn no_errors(dev: &[LabeledInstance], preds: &BTreeMap<u64, HashMap<String, u8>>) -> bool {
    preds.values().all(|p| dev.iter().all(|d| p.get(&d.id) == Some(&d.label)))
}
