use std::collections::HashMap;

use super::{CaseResult, Capability, DirMove, Direction, EvalFlags, EvalRecord, Role, TestInstance, TestType};
use crate::textmodel::Prediction;
use crate::{Error, Result, Variant};

fn dir_move(original: f64, perturbed: f64, tau: f64) -> DirMove {
    let delta = perturbed - original;
    if delta > tau {
        DirMove::Up
    } else if delta < -tau {
        DirMove::Down
    } else {
        DirMove::WithinTolerance
    }
}

/// Runs `predict` over every instance and derives per-instance flags and
/// per-case outcomes. Instances of a case must be contiguous with the
/// original first, as produced by the suite builder.
pub fn evaluate_model<F>(
    mut predict: F,
    capabilities: &[Capability],
    instances: &[TestInstance],
    tau: f64,
    seed: u64,
    variant: Variant,
) -> Result<(Vec<EvalRecord>, Vec<CaseResult>)>
where
    F: FnMut(&str) -> Result<Prediction>,
{
    let by_name: HashMap<&str, &Capability> = capabilities.iter().map(|c| (c.name.as_str(), c)).collect();
    let mut records = Vec::with_capacity(instances.len());
    let mut original: Option<(&str, Prediction)> = None;
    for inst in instances {
        let cap = by_name
            .get(inst.capability.as_str())
            .ok_or_else(|| Error::input(format!("instance {} has unknown capability '{}'", inst.instance_id, inst.capability)))?;
        let pred = predict(&inst.text)?;
        let mut flags = EvalFlags::default();
        match cap.test_type {
            TestType::Mft => {
                let expected = inst
                    .expected_label
                    .ok_or_else(|| Error::input(format!("MFT instance {} has no expected label", inst.instance_id)))?;
                flags.mft_failed = Some(pred.label != expected);
            }
            TestType::Inv | TestType::Dir => match inst.role {
                Role::Original => original = Some((inst.case_id.as_str(), pred)),
                Role::Perturbed => {
                    let orig = match original {
                        Some((case, p)) if case == inst.case_id => p,
                        _ => {
                            return Err(Error::input(format!(
                                "perturbed instance {} does not follow its case original",
                                inst.instance_id
                            )))
                        }
                    };
                    if cap.test_type == TestType::Inv {
                        flags.flipped = Some(pred.label != orig.label);
                    } else {
                        let direction = cap.direction.ok_or_else(|| {
                            Error::input(format!("DIR capability '{}' has no direction", cap.name))
                        })?;
                        let mv = dir_move(orig.confidence, pred.confidence, tau);
                        flags.dir_direction = Some(mv);
                        flags.dir_failed = Some(matches!(
                            (direction, mv),
                            (Direction::PositiveUp, DirMove::Down) | (Direction::NegativeUp, DirMove::Up)
                        ));
                    }
                }
            },
        }
        records.push(EvalRecord {
            seed,
            variant,
            instance_id: inst.instance_id.clone(),
            case_id: inst.case_id.clone(),
            capability: inst.capability.clone(),
            pred: pred.label,
            confidence: pred.confidence,
            flags,
        });
    }
    let cases = case_results(&records);
    Ok((records, cases))
}

/// Groups records by case, in order of first appearance.
pub fn case_results(records: &[EvalRecord]) -> Vec<CaseResult> {
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut out: Vec<CaseResult> = Vec::new();
    for r in records {
        let i = *index.entry(r.case_id.as_str()).or_insert_with(|| {
            out.push(CaseResult {
                case_id: r.case_id.clone(),
                capability: r.capability.clone(),
                failed: false,
                failing: Vec::new(),
            });
            out.len() - 1
        });
        if r.flags.failed() {
            out[i].failed = true;
            out[i].failing.push(r.instance_id.clone());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cap(name: &str, t: TestType, direction: Option<Direction>) -> Capability {
        Capability {
            name: name.into(),
            test_type: t,
            n_cases: 0,
            m_instances: 0,
            direction,
            skipped: 0,
            notice: None,
        }
    }

    fn inst(cap: &str, case: &str, j: usize, text: &str, role: Role, expected: Option<u8>) -> TestInstance {
        TestInstance {
            instance_id: format!("{case}/{j:02}"),
            case_id: case.into(),
            capability: cap.into(),
            text: text.into(),
            role,
            expected_label: expected,
        }
    }

    /// The text is the positive-class confidence.
    fn oracle(text: &str) -> Result<Prediction> {
        let p: f64 = text.parse().unwrap();
        Ok(Prediction {
            label: u8::from(p > 0.5),
            confidence: p,
        })
    }

    #[test]
    fn mft_fails_on_wrong_label() {
        let caps = [cap("m", TestType::Mft, None)];
        let insts = [
            inst("m", "m/0", 0, "0.9", Role::Original, Some(1)),
            inst("m", "m/1", 0, "0.9", Role::Original, Some(0)),
        ];
        let (recs, cases) = evaluate_model(oracle, &caps, &insts, 0.1, 0, Variant::Vanilla).unwrap();
        assert_eq!(recs[0].flags.mft_failed, Some(false));
        assert_eq!(recs[1].flags.mft_failed, Some(true));
        assert_eq!(cases.iter().map(|c| c.failed).collect::<Vec<_>>(), [false, true]);
    }

    #[test]
    fn inv_case_fails_when_any_perturbation_flips() {
        let caps = [cap("i", TestType::Inv, None)];
        let insts = [
            inst("i", "i/0", 0, "0.8", Role::Original, None),
            inst("i", "i/0", 1, "0.7", Role::Perturbed, None),
            inst("i", "i/0", 2, "0.3", Role::Perturbed, None),
            inst("i", "i/1", 0, "0.2", Role::Original, None),
            inst("i", "i/1", 1, "0.4", Role::Perturbed, None),
        ];
        let (recs, cases) = evaluate_model(oracle, &caps, &insts, 0.1, 0, Variant::Swa).unwrap();
        assert_eq!(recs[0].flags, EvalFlags::default());
        assert_eq!(recs[1].flags.flipped, Some(false));
        assert_eq!(recs[2].flags.flipped, Some(true));
        assert!(cases[0].failed);
        assert_eq!(cases[0].failing, ["i/0/02"]);
        assert!(!cases[1].failed);
    }

    #[test]
    fn dir_dead_band() {
        let caps = [
            cap("up", TestType::Dir, Some(Direction::PositiveUp)),
            cap("down", TestType::Dir, Some(Direction::NegativeUp)),
        ];
        let insts = [
            inst("up", "u/0", 0, "0.50", Role::Original, None),
            inst("up", "u/0", 1, "0.65", Role::Perturbed, None),
            inst("up", "u/0", 2, "0.45", Role::Perturbed, None),
            inst("up", "u/1", 0, "0.50", Role::Original, None),
            inst("up", "u/1", 1, "0.30", Role::Perturbed, None),
            inst("down", "d/0", 0, "0.50", Role::Original, None),
            inst("down", "d/0", 1, "0.70", Role::Perturbed, None),
        ];
        let (recs, cases) = evaluate_model(oracle, &caps, &insts, 0.1, 0, Variant::Vanilla).unwrap();
        assert_eq!(recs[1].flags.dir_direction, Some(DirMove::Up));
        assert_eq!(recs[1].flags.dir_failed, Some(false));
        assert_eq!(recs[2].flags.dir_direction, Some(DirMove::WithinTolerance));
        assert_eq!(recs[2].flags.dir_failed, Some(false));
        assert_eq!(recs[4].flags.dir_direction, Some(DirMove::Down));
        assert_eq!(recs[4].flags.dir_failed, Some(true));
        assert_eq!(recs[6].flags.dir_failed, Some(true));
        assert_eq!(cases.iter().map(|c| c.failed).collect::<Vec<_>>(), [false, true, true]);
    }

    #[test]
    fn orphan_perturbation_is_rejected() {
        let caps = [cap("i", TestType::Inv, None)];
        let insts = [inst("i", "i/0", 1, "0.7", Role::Perturbed, None)];
        assert!(evaluate_model(oracle, &caps, &insts, 0.1, 0, Variant::Vanilla).is_err());
    }

    #[test]
    fn unknown_capability_is_rejected() {
        let insts = [inst("x", "x/0", 0, "0.7", Role::Original, Some(1))];
        assert!(evaluate_model(oracle, &[], &insts, 0.1, 0, Variant::Vanilla).is_err());
    }
}
