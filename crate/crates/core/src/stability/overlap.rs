use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Variant};

/// Instance ids one model fails on within one capability (or the dev set).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureSet {
    pub seed: u64,
    pub variant: Variant,
    pub capability: String,
    pub failing: BTreeSet<String>,
}

/// Jaccard index of the two failure sets; `None` when both are empty.
pub fn overlap_ratio(a: &FailureSet, b: &FailureSet) -> Result<Option<f64>> {
    if a.capability != b.capability || a.variant != b.variant {
        return Err(Error::input(format!(
            "overlap between {}/{} and {}/{}",
            a.variant, a.capability, b.variant, b.capability
        )));
    }
    let inter = a.failing.intersection(&b.failing).count();
    let union = a.failing.len() + b.failing.len() - inter;
    Ok((union > 0).then(|| inter as f64 / union as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapPair {
    pub seed_a: u64,
    pub seed_b: u64,
    pub intersection: usize,
    pub union: usize,
    pub ratio: Option<f64>,
}

/// Five-number summary over the defined values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_defined: usize,
    pub n_undefined: usize,
    pub min: Option<f64>,
    pub q1: Option<f64>,
    pub median: Option<f64>,
    pub q3: Option<f64>,
    pub max: Option<f64>,
}

impl Summary {
    pub fn of(values: &[Option<f64>]) -> Self {
        let mut defined: Vec<f64> = values.iter().flatten().copied().collect();
        defined.sort_by(f64::total_cmp);
        let q = |p| quantile(&defined, p);
        Summary {
            n_defined: defined.len(),
            n_undefined: values.len() - defined.len(),
            min: defined.first().copied(),
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: defined.last().copied(),
        }
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseOverlap {
    pub seeds: Vec<u64>,
    /// Symmetric; the diagonal is 1 for non-empty sets.
    pub matrix: Vec<Vec<Option<f64>>>,
    /// Unordered pairs, `seed_a` before `seed_b` in `seeds` order.
    pub pairs: Vec<OverlapPair>,
    pub summary: Summary,
}

pub fn pairwise_overlap(sets: &[FailureSet]) -> Result<PairwiseOverlap> {
    if sets.len() < 2 {
        return Err(Error::input("pairwise overlap needs at least two seeds"));
    }
    let n = sets.len();
    let mut matrix = vec![vec![None; n]; n];
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        matrix[i][i] = overlap_ratio(&sets[i], &sets[i])?;
        for j in i + 1..n {
            let ratio = overlap_ratio(&sets[i], &sets[j])?;
            matrix[i][j] = ratio;
            matrix[j][i] = ratio;
            let inter = sets[i].failing.intersection(&sets[j].failing).count();
            pairs.push(OverlapPair {
                seed_a: sets[i].seed,
                seed_b: sets[j].seed,
                intersection: inter,
                union: sets[i].failing.len() + sets[j].failing.len() - inter,
                ratio,
            });
        }
    }
    let ratios: Vec<Option<f64>> = pairs.iter().map(|p| p.ratio).collect();
    Ok(PairwiseOverlap {
        seeds: sets.iter().map(|s| s.seed).collect(),
        matrix,
        summary: Summary::of(&ratios),
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(seed: u64, ids: &[u32]) -> FailureSet {
        FailureSet {
            seed,
            variant: Variant::Vanilla,
            capability: "c".into(),
            failing: ids.iter().map(|i| i.to_string()).collect(),
        }
    }

    #[test]
    fn reference_ratios() {
        assert_eq!(overlap_ratio(&set(0, &[1, 2, 3]), &set(1, &[2, 3, 4])).unwrap(), Some(0.5));
        assert_eq!(overlap_ratio(&set(0, &[1, 2]), &set(1, &[1, 2])).unwrap(), Some(1.0));
        assert_eq!(overlap_ratio(&set(0, &[1, 2]), &set(1, &[3])).unwrap(), Some(0.0));
        assert_eq!(overlap_ratio(&set(0, &[]), &set(1, &[])).unwrap(), None);
    }

    #[test]
    fn mismatched_capability_is_rejected() {
        let mut b = set(1, &[1]);
        b.capability = "other".into();
        assert!(overlap_ratio(&set(0, &[1]), &b).is_err());
    }

    #[test]
    fn nine_seeds_give_thirty_six_pairs() {
        let sets: Vec<_> = (0..9).map(|s| set(s, &[1, 2])).collect();
        let p = pairwise_overlap(&sets).unwrap();
        assert_eq!(p.pairs.len(), 36);
        assert!(p.pairs.iter().all(|x| x.ratio == Some(1.0)));
        assert_eq!(p.summary.min, p.summary.max);
    }

    #[test]
    fn empty_seed_pairs_are_zero() {
        let sets = vec![set(0, &[]), set(1, &[1]), set(2, &[1, 2])];
        let p = pairwise_overlap(&sets).unwrap();
        assert_eq!(p.matrix[0][1], Some(0.0));
        assert_eq!(p.matrix[0][2], Some(0.0));
        assert_eq!(p.matrix[0][0], None);
        assert_eq!(p.matrix[1][2], Some(0.5));
        assert_eq!(p.matrix[2][1], Some(0.5));
    }

    #[test]
    fn summary_excludes_undefined() {
        let s = Summary::of(&[None, Some(0.0), Some(1.0), Some(0.5), None, Some(0.25)]);
        assert_eq!(s.n_defined, 4);
        assert_eq!(s.n_undefined, 2);
        assert_eq!(s.min, Some(0.0));
        assert_eq!(s.max, Some(1.0));
        assert_eq!(s.median, Some(0.375));
        assert_eq!(s.q1, Some(0.1875));
        assert_eq!(Summary::of(&[None]).median, None);
    }

    #[test]
    fn single_seed_is_rejected() {
        assert!(pairwise_overlap(&[set(0, &[1])]).is_err());
    }
}
