//! Cross-seed stability statistics: case-level error rates, instance-level
//! overlap ratios and Fleiss' kappa with models as raters.

mod kappa;
mod overlap;
mod report;

use serde::{Deserialize, Serialize};

use crate::checklist::CaseResult;
use crate::{Error, Result};

pub use kappa::{build_capability_matrix, build_dev_matrix, fleiss_kappa, Kappa, RatingMatrix};
pub use overlap::{overlap_ratio, pairwise_overlap, quantile, FailureSet, OverlapPair, PairwiseOverlap, Summary};
pub use report::{
    compose_report, outlier_seeds, CapabilityReport, DevKappa, ModelRun, OutlierFlag, ReportInput, SeedErrorRate,
    StabilityReport, VariantStats, DEV,
};

/// Fraction of failed cases.
pub fn case_error_rate(cases: &[CaseResult]) -> Result<f64> {
    if cases.is_empty() {
        return Err(Error::input("error rate of an empty case set"));
    }
    let failed = cases.iter().filter(|c| c.failed).count();
    Ok(failed as f64 / cases.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Correct,
    Incorrect,
    Flipped,
    Consistent,
    Up,
    Down,
    WithinTolerance,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cases(failed: &[bool]) -> Vec<CaseResult> {
        failed
            .iter()
            .enumerate()
            .map(|(i, &f)| CaseResult {
                case_id: i.to_string(),
                capability: "c".into(),
                failed: f,
                failing: Vec::new(),
            })
            .collect()
    }

    #[test]
    fn error_rates() {
        let mut f = vec![false; 10];
        f[1] = true;
        f[4] = true;
        f[7] = true;
        assert_eq!(case_error_rate(&cases(&f)).unwrap(), 0.3);
        assert_eq!(case_error_rate(&cases(&[false; 4])).unwrap(), 0.0);
        assert_eq!(case_error_rate(&cases(&[true; 4])).unwrap(), 1.0);
        assert!(case_error_rate(&[]).is_err());
    }
}
