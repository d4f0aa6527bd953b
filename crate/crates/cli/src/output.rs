//! Report files: `report.json`, plot-ready CSVs and `summary.txt`.
//!
//! CSV columns:
//!
//! * `error_rates.csv`: variant, seed, capability, test_type, n_cases,
//!   failed_cases, error_rate, error_rate_excluding_tolerance (DIR only)
//! * `overlap_pairs.csv`: variant, capability, test_type, seed_a, seed_b,
//!   intersection, union, overlap (empty when both failure sets are empty)
//! * `kappa.csv`: capability, test_type, vanilla, swa, difference,
//!   vanilla_raw, swa_raw, n_items. The `dev` row is the dev set over all
//!   instances, `dev (misclassified only)` restricts it to instances some seed
//!   got wrong.
//! * `dev_accuracy.csv`: variant, seed, accuracy, excluded

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use seedstab::stability::{Kappa, StabilityReport, DEV};
use seedstab::Variant;

use crate::error::{CliError, CliResult};
use crate::layout::{write_atomic, write_json};

fn num(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_bytes(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::file(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| CliError::file(path, e))?;
    }
    w.into_inner().map_err(|e| CliError::file(path, e.error()))
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> CliResult<()> {
    let bytes = csv_bytes(path, header, rows)?;
    write_atomic(path, &bytes)
}

fn kappa_row(name: &str, test_type: &str, by_variant: &[(Variant, Option<&Kappa>)], diff: Option<f64>) -> Vec<String> {
    let get = |v: Variant| by_variant.iter().find(|(x, _)| *x == v).and_then(|(_, k)| *k);
    let n_items = by_variant.iter().find_map(|(_, k)| k.map(|k| k.n_items));
    vec![
        name.to_string(),
        test_type.to_string(),
        num(get(Variant::Vanilla).and_then(|k| k.kappa)),
        num(get(Variant::Swa).and_then(|k| k.kappa)),
        num(diff),
        num(get(Variant::Vanilla).and_then(|k| k.raw)),
        num(get(Variant::Swa).and_then(|k| k.raw)),
        n_items.map(|n| n.to_string()).unwrap_or_default(),
    ]
}

fn difference(by_variant: &[(Variant, Option<&Kappa>)]) -> Option<f64> {
    let get = |v: Variant| by_variant.iter().find(|(x, _)| *x == v).and_then(|(_, k)| k.and_then(|k| k.kappa));
    Some(get(Variant::Swa)? - get(Variant::Vanilla)?)
}

pub fn write_report_dir(dir: &Path, report: &StabilityReport) -> CliResult<()> {
    write_json(&dir.join("report.json"), report)?;

    let mut rows = Vec::new();
    for cap in &report.capabilities {
        for vs in &cap.variants {
            for e in &vs.error_rates {
                rows.push(vec![
                    vs.variant.to_string(),
                    e.seed.to_string(),
                    cap.name.clone(),
                    cap.test_type.as_str().to_string(),
                    e.n_cases.to_string(),
                    e.failed_cases.to_string(),
                    e.error_rate.to_string(),
                    num(e.error_rate_excluding_tolerance),
                ]);
            }
        }
    }
    write_csv(
        &dir.join("error_rates.csv"),
        &[
            "variant",
            "seed",
            "capability",
            "test_type",
            "n_cases",
            "failed_cases",
            "error_rate",
            "error_rate_excluding_tolerance",
        ],
        rows,
    )?;

    let mut rows = Vec::new();
    for cap in &report.capabilities {
        for vs in &cap.variants {
            for p in &vs.overlap.pairs {
                rows.push(vec![
                    vs.variant.to_string(),
                    cap.name.clone(),
                    cap.test_type.as_str().to_string(),
                    p.seed_a.to_string(),
                    p.seed_b.to_string(),
                    p.intersection.to_string(),
                    p.union.to_string(),
                    num(p.ratio),
                ]);
            }
        }
    }
    write_csv(
        &dir.join("overlap_pairs.csv"),
        &["variant", "capability", "test_type", "seed_a", "seed_b", "intersection", "union", "overlap"],
        rows,
    )?;

    let mut rows = Vec::new();
    let dev_all: Vec<(Variant, Option<&Kappa>)> =
        report.dev_kappa.iter().map(|d| (d.variant, Some(&d.all_instances))).collect();
    rows.push(kappa_row(DEV, "DEV", &dev_all, difference(&dev_all)));
    let dev_mis: Vec<(Variant, Option<&Kappa>)> =
        report.dev_kappa.iter().map(|d| (d.variant, d.misclassified_only.as_ref())).collect();
    rows.push(kappa_row("dev (misclassified only)", "DEV", &dev_mis, difference(&dev_mis)));
    for cap in &report.capabilities {
        let ks: Vec<(Variant, Option<&Kappa>)> = cap.variants.iter().map(|v| (v.variant, v.kappa.as_ref())).collect();
        rows.push(kappa_row(&cap.name, cap.test_type.as_str(), &ks, cap.kappa_difference));
    }
    write_csv(
        &dir.join("kappa.csv"),
        &["capability", "test_type", "vanilla", "swa", "difference", "vanilla_raw", "swa_raw", "n_items"],
        rows,
    )?;

    let rows = report
        .dev_accuracy
        .iter()
        .map(|a| {
            vec![
                a.variant.to_string(),
                a.seed.to_string(),
                a.accuracy.to_string(),
                a.excluded.to_string(),
            ]
        })
        .collect();
    write_csv(&dir.join("dev_accuracy.csv"), &["variant", "seed", "accuracy", "excluded"], rows)?;

    write_atomic(&dir.join("summary.txt"), summary_text(report).as_bytes())
}

fn fmt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into())
}

pub fn summary_text(report: &StabilityReport) -> String {
    let mut s = String::new();
    let seeds: Vec<String> = report.seeds.iter().map(u64::to_string).collect();
    let _ = writeln!(s, "Seeds analyzed: {}", seeds.join(", "));
    if !report.excluded_seeds.is_empty() {
        let ex: Vec<String> = report.excluded_seeds.iter().map(u64::to_string).collect();
        let _ = writeln!(s, "Seeds excluded: {}", ex.join(", "));
    }
    if report.outliers.is_empty() {
        let _ = writeln!(s, "No outlier seed flagged; this is the only report.");
    } else {
        for o in &report.outliers {
            let _ = writeln!(
                s,
                "Outlier: seed {} ({}) dev accuracy {:.4}, median {:.4}, IQR {:.4}",
                o.seed, o.variant, o.dev_accuracy, o.median, o.iqr
            );
        }
        if report.excluded_seeds.is_empty() {
            let _ = writeln!(s, "A report without the flagged seeds is in report_without_outliers/.");
        }
    }

    let _ = writeln!(s, "\nDev accuracy");
    let _ = writeln!(s, "{:<6} {:>10} {:>10}", "seed", "vanilla", "swa");
    let seeds_all: BTreeSet<u64> = report.dev_accuracy.iter().map(|a| a.seed).collect();
    for seed in seeds_all {
        let acc = |v: Variant| {
            report
                .dev_accuracy
                .iter()
                .find(|a| a.seed == seed && a.variant == v)
                .map(|a| a.accuracy)
        };
        let _ = writeln!(s, "{:<6} {:>10} {:>10}", seed, fmt(acc(Variant::Vanilla)), fmt(acc(Variant::Swa)));
    }

    let kappa_of = |v: Variant| report.dev_kappa.iter().find(|d| d.variant == v);
    let _ = writeln!(s, "\nFleiss' kappa, dev set mistakes");
    let _ = writeln!(s, "{:<28} {:>10} {:>10} {:>11}", "", "Vanilla", "SWA", "Difference");
    let dv = kappa_of(Variant::Vanilla).and_then(|d| d.all_instances.kappa);
    let ds = kappa_of(Variant::Swa).and_then(|d| d.all_instances.kappa);
    let diff = dv.zip(ds).map(|(a, b)| b - a);
    let _ = writeln!(s, "{:<28} {:>10} {:>10} {:>11}", "all instances", fmt(dv), fmt(ds), fmt(diff));
    let mv = kappa_of(Variant::Vanilla).and_then(|d| d.misclassified_only.as_ref()?.kappa);
    let ms = kappa_of(Variant::Swa).and_then(|d| d.misclassified_only.as_ref()?.kappa);
    let diff = mv.zip(ms).map(|(a, b)| b - a);
    let _ = writeln!(s, "{:<28} {:>10} {:>10} {:>11}", "misclassified only", fmt(mv), fmt(ms), fmt(diff));

    let width = report.capabilities.iter().map(|c| c.name.len()).max().unwrap_or(10);
    let _ = writeln!(s, "\nFleiss' kappa, CheckList mistakes per capability");
    let _ = writeln!(s, "{:<width$} {:<4} {:>10} {:>10} {:>11}", "Capability", "Type", "Vanilla", "SWA", "Difference");
    for cap in &report.capabilities {
        let k = |v: Variant| cap.variant(v).and_then(|x| x.kappa.as_ref()?.kappa);
        let _ = writeln!(
            s,
            "{:<width$} {:<4} {:>10} {:>10} {:>11}",
            cap.name,
            cap.test_type.as_str(),
            fmt(k(Variant::Vanilla)),
            fmt(k(Variant::Swa)),
            fmt(cap.kappa_difference)
        );
    }

    let _ = writeln!(s, "\nError rate (median over seeds) and overlap ratio (median over seed pairs)");
    let _ = writeln!(
        s,
        "{:<width$} {:>11} {:>11} {:>11} {:>11}",
        "Capability", "err vanilla", "err swa", "ovl vanilla", "ovl swa"
    );
    for cap in &report.capabilities {
        let e = |v: Variant| cap.variant(v).and_then(|x| x.error_rate_summary.median);
        let o = |v: Variant| cap.variant(v).and_then(|x| x.overlap.summary.median);
        let _ = writeln!(
            s,
            "{:<width$} {:>11} {:>11} {:>11} {:>11}",
            cap.name,
            fmt(e(Variant::Vanilla)),
            fmt(e(Variant::Swa)),
            fmt(o(Variant::Vanilla)),
            fmt(o(Variant::Swa))
        );
    }
    for o in &report.omitted {
        let _ = writeln!(s, "Omitted: {} ({})", o.name, o.notice);
    }
    s
}
