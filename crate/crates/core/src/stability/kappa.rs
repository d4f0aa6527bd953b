use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::Category;
use crate::checklist::{Capability, DirMove, EvalRecord, TestType};
use crate::data::LabeledInstance;
use crate::{Error, Result};

/// N items by k categories; `counts[i][j]` raters put item i in category j.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingMatrix {
    items: Vec<String>,
    categories: Vec<Category>,
    counts: Vec<Vec<u32>>,
    n_raters: u32,
}

impl RatingMatrix {
    pub fn new(items: Vec<String>, categories: Vec<Category>, counts: Vec<Vec<u32>>) -> Result<Self> {
        if categories.len() < 2 {
            return Err(Error::input("a rating matrix needs at least two categories"));
        }
        if items.is_empty() || items.len() != counts.len() {
            return Err(Error::input(format!(
                "rating matrix has {} items but {} rows",
                items.len(),
                counts.len()
            )));
        }
        let n_raters: u32 = counts[0].iter().sum();
        for (item, row) in items.iter().zip(&counts) {
            if row.len() != categories.len() {
                return Err(Error::input(format!("row for item {item} has {} columns", row.len())));
            }
            let sum: u32 = row.iter().sum();
            if sum != n_raters {
                return Err(Error::input(format!(
                    "row for item {item} sums to {sum}, expected {n_raters}"
                )));
            }
        }
        if n_raters < 2 {
            return Err(Error::input("a rating matrix needs at least two raters"));
        }
        Ok(RatingMatrix {
            items,
            categories,
            counts,
            n_raters,
        })
    }

    /// Unlabeled matrix with generic category names.
    pub fn from_counts(counts: Vec<Vec<u32>>) -> Result<Self> {
        const GENERIC: [Category; 7] = [
            Category::Correct,
            Category::Incorrect,
            Category::Flipped,
            Category::Consistent,
            Category::Up,
            Category::Down,
            Category::WithinTolerance,
        ];
        let k = counts.first().map_or(0, Vec::len);
        if k > GENERIC.len() {
            return Err(Error::input(format!("at most {} categories are supported", GENERIC.len())));
        }
        let items = (0..counts.len()).map(|i| i.to_string()).collect();
        RatingMatrix::new(items, GENERIC[..k].to_vec(), counts)
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }
    pub fn categories(&self) -> &[Category] {
        &self.categories
    }
    pub fn counts(&self) -> &[Vec<u32>] {
        &self.counts
    }
    pub fn n_raters(&self) -> u32 {
        self.n_raters
    }
    pub fn n_items(&self) -> usize {
        self.items.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kappa {
    /// Reported value; 1.0 when every rating falls in one category.
    pub kappa: Option<f64>,
    /// The plain formula; `None` when its denominator vanishes.
    pub raw: Option<f64>,
    pub p_bar: f64,
    pub p_e: f64,
    /// All ratings fall in a single category.
    pub degenerate: bool,
    pub n_items: usize,
    pub n_raters: u32,
    pub n_categories: usize,
}

pub fn fleiss_kappa(m: &RatingMatrix) -> Kappa {
    let n_items = m.counts.len();
    let n = m.n_raters as u64;
    let k = m.categories.len();
    let mut col = vec![0u64; k];
    let mut sq: u64 = 0;
    for row in &m.counts {
        for (j, &c) in row.iter().enumerate() {
            col[j] += c as u64;
            sq += (c as u64) * (c as u64);
        }
    }
    let total = (n_items as u64 * n) as f64;
    let p_bar = (sq - n_items as u64 * n) as f64 / (n_items as u64 * n * (n - 1)) as f64;
    let p_e: f64 = col.iter().map(|&c| (c as f64 / total).powi(2)).sum();
    let degenerate = col.iter().filter(|&&c| c > 0).count() == 1;
    let raw = (!degenerate).then(|| (p_bar - p_e) / (1.0 - p_e));
    Kappa {
        kappa: if degenerate { Some(1.0) } else { raw },
        raw,
        p_bar,
        p_e,
        degenerate,
        n_items,
        n_raters: m.n_raters,
        n_categories: k,
    }
}

/// Dev instances as items, seeds as raters, {correct, incorrect} as
/// categories. `predictions` maps seed to instance id to predicted label.
/// With `misclassified_only`, items every seed got right are dropped.
pub fn build_dev_matrix(
    dev: &[LabeledInstance],
    predictions: &BTreeMap<u64, HashMap<String, u8>>,
    misclassified_only: bool,
) -> Result<RatingMatrix> {
    let mut items = Vec::new();
    let mut counts = Vec::new();
    for inst in dev {
        let mut row = vec![0u32; 2];
        for (seed, preds) in predictions {
            let pred = preds
                .get(&inst.id)
                .ok_or_else(|| Error::input(format!("seed {seed} has no prediction for dev instance {}", inst.id)))?;
            row[usize::from(*pred != inst.label)] += 1;
        }
        if misclassified_only && row[1] == 0 {
            continue;
        }
        items.push(inst.id.clone());
        counts.push(row);
    }
    RatingMatrix::new(items, vec![Category::Correct, Category::Incorrect], counts)
}

/// Items are the capability's rated instances (all MFT instances, the
/// perturbed INV/DIR instances); raters are the seeds in `records`.
pub fn build_capability_matrix<'a>(
    records: impl IntoIterator<Item = &'a EvalRecord>,
    capability: &Capability,
) -> Result<RatingMatrix> {
    let categories = match capability.test_type {
        TestType::Mft => vec![Category::Correct, Category::Incorrect],
        TestType::Inv => vec![Category::Flipped, Category::Consistent],
        TestType::Dir => vec![Category::Up, Category::Down, Category::WithinTolerance],
    };
    let mut variant = None;
    let mut items: Vec<String> = Vec::new();
    let mut index: HashMap<&'a str, usize> = HashMap::new();
    let mut by_seed: BTreeMap<u64, HashMap<&'a str, usize>> = BTreeMap::new();
    for r in records {
        if r.capability != capability.name {
            return Err(Error::input(format!(
                "record {} belongs to '{}', not '{}'",
                r.instance_id, r.capability, capability.name
            )));
        }
        if *variant.get_or_insert(r.variant) != r.variant {
            return Err(Error::input("records mix variants"));
        }
        let cat = match capability.test_type {
            TestType::Mft => r.flags.mft_failed.map(usize::from),
            TestType::Inv => r.flags.flipped.map(|f| usize::from(!f)),
            TestType::Dir => r.flags.dir_direction.map(|d| match d {
                DirMove::Up => 0,
                DirMove::Down => 1,
                DirMove::WithinTolerance => 2,
            }),
        };
        let Some(cat) = cat else { continue };
        let id = r.instance_id.as_str();
        if !index.contains_key(id) {
            index.insert(id, items.len());
            items.push(id.to_string());
        }
        if by_seed.entry(r.seed).or_default().insert(id, cat).is_some() {
            return Err(Error::input(format!("seed {} rates {id} twice", r.seed)));
        }
    }
    let mut counts = vec![vec![0u32; categories.len()]; items.len()];
    for (seed, rated) in &by_seed {
        if rated.len() != items.len() {
            return Err(Error::input(format!(
                "seed {seed} rates {} of {} instances of '{}'",
                rated.len(),
                items.len(),
                capability.name
            )));
        }
        for (id, &cat) in rated {
            counts[index[id]][cat] += 1;
        }
    }
    RatingMatrix::new(items, categories, counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checklist::EvalFlags;
    use crate::Variant;

    fn kappa(rows: Vec<Vec<u32>>) -> Option<f64> {
        fleiss_kappa(&RatingMatrix::from_counts(rows).unwrap()).kappa
    }

    #[test]
    fn reference_values() {
        let k = fleiss_kappa(&RatingMatrix::from_counts(vec![vec![2, 0], vec![0, 2]]).unwrap());
        assert_eq!((k.p_bar, k.p_e, k.kappa), (1.0, 0.5, Some(1.0)));
        let k = fleiss_kappa(&RatingMatrix::from_counts(vec![vec![1, 1], vec![1, 1]]).unwrap());
        assert_eq!((k.p_bar, k.p_e, k.kappa), (0.0, 0.5, Some(-1.0)));
    }

    #[test]
    fn degenerate_single_category() {
        let k = fleiss_kappa(&RatingMatrix::from_counts(vec![vec![3, 0]; 4]).unwrap());
        assert!(k.degenerate);
        assert_eq!(k.kappa, Some(1.0));
        assert_eq!(k.raw, None);
    }

    #[test]
    fn textbook_example() {
        // 10 subjects, 14 raters, 5 categories; kappa = 0.20993...
        let rows = vec![
            vec![0, 0, 0, 0, 14],
            vec![0, 2, 6, 4, 2],
            vec![0, 0, 3, 5, 6],
            vec![0, 3, 9, 2, 0],
            vec![2, 2, 8, 1, 1],
            vec![7, 7, 0, 0, 0],
            vec![3, 2, 6, 3, 0],
            vec![2, 5, 3, 2, 2],
            vec![6, 5, 2, 1, 0],
            vec![0, 2, 2, 3, 7],
        ];
        let k = kappa(rows).unwrap();
        assert!((k - 0.20993).abs() < 1e-5, "{k}");
    }

    #[test]
    fn malformed_matrices() {
        assert!(RatingMatrix::from_counts(vec![vec![2, 0], vec![1, 0]]).is_err());
        assert!(RatingMatrix::from_counts(vec![vec![2]]).is_err());
        assert!(RatingMatrix::from_counts(vec![vec![1, 0]]).is_err());
        assert!(RatingMatrix::from_counts(vec![]).is_err());
    }

    fn dev() -> Vec<LabeledInstance> {
        (0..4)
            .map(|i| LabeledInstance {
                id: format!("d{i}"),
                text: String::new(),
                label: (i % 2) as u8,
            })
            .collect()
    }

    #[test]
    fn dev_matrix_rows_sum_to_seed_count() {
        let mut preds = BTreeMap::new();
        for seed in 0..9u64 {
            let p: HashMap<String, u8> = (0..4).map(|i| (format!("d{i}"), ((i + seed as usize) % 2) as u8)).collect();
            preds.insert(seed, p);
        }
        let m = build_dev_matrix(&dev(), &preds, false).unwrap();
        assert!(m.counts().iter().all(|r| r.iter().sum::<u32>() == 9));
        assert_eq!(m.n_items(), 4);
    }

    #[test]
    fn dev_matrix_perfect_and_missing() {
        let perfect: HashMap<String, u8> = dev().into_iter().map(|d| (d.id, d.label)).collect();
        let preds: BTreeMap<u64, _> = (0..3).map(|s| (s, perfect.clone())).collect();
        let m = build_dev_matrix(&dev(), &preds, false).unwrap();
        assert_eq!(fleiss_kappa(&m).kappa, Some(1.0));
        assert!(build_dev_matrix(&dev(), &preds, true).is_err());
        let mut broken = preds.clone();
        broken.get_mut(&1).unwrap().remove("d2");
        assert!(build_dev_matrix(&dev(), &broken, false).is_err());
    }

    fn record(seed: u64, cap: &str, id: &str, flags: EvalFlags) -> EvalRecord {
        EvalRecord {
            seed,
            variant: Variant::Vanilla,
            instance_id: id.into(),
            case_id: "c".into(),
            capability: cap.into(),
            pred: 0,
            confidence: 0.5,
            flags,
        }
    }

    fn capability(name: &str, t: TestType) -> Capability {
        Capability {
            name: name.into(),
            test_type: t,
            n_cases: 1,
            m_instances: 3,
            direction: None,
            skipped: 0,
            notice: None,
        }
    }

    #[test]
    fn inv_without_flips_is_degenerate_one() {
        let cap = capability("i", TestType::Inv);
        let mut recs = Vec::new();
        for seed in 0..3 {
            recs.push(record(seed, "i", "c/00", EvalFlags::default()));
            for id in ["c/01", "c/02"] {
                let flags = EvalFlags {
                    flipped: Some(false),
                    ..Default::default()
                };
                recs.push(record(seed, "i", id, flags));
            }
        }
        let m = build_capability_matrix(&recs, &cap).unwrap();
        assert_eq!(m.n_items(), 2);
        assert_eq!(fleiss_kappa(&m).kappa, Some(1.0));
    }

    #[test]
    fn dir_has_three_columns() {
        let cap = capability("d", TestType::Dir);
        let recs: Vec<_> = (0..2)
            .map(|seed| {
                let flags = EvalFlags {
                    dir_direction: Some(DirMove::Up),
                    dir_failed: Some(false),
                    ..Default::default()
                };
                record(seed, "d", "c/01", flags)
            })
            .collect();
        let m = build_capability_matrix(&recs, &cap).unwrap();
        assert_eq!(m.categories().len(), 3);
    }

    #[test]
    fn mixed_capabilities_and_gaps_are_rejected() {
        let cap = capability("m", TestType::Mft);
        let flags = EvalFlags {
            mft_failed: Some(true),
            ..Default::default()
        };
        let recs = vec![record(0, "m", "a", flags), record(1, "other", "a", flags)];
        assert!(build_capability_matrix(&recs, &cap).is_err());
        let recs = vec![record(0, "m", "a", flags), record(0, "m", "b", flags), record(1, "m", "a", flags)];
        assert!(build_capability_matrix(&recs, &cap).is_err());
    }
}
