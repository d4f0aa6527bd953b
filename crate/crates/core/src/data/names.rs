use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{word_spans, LabeledInstance};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamePolarity {
    pub name: String,
    /// Number of training instances containing the name.
    pub occurrence_count: usize,
    pub mean_label: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NamePolarityResult {
    /// Names seen only in positive instances, at least `min_count` times.
    pub positive: Vec<String>,
    pub negative: Vec<String>,
    /// Every lexicon name that occurs at all, sorted by name.
    pub polarity: Vec<NamePolarity>,
}

/// Byte spans of whole-token, case-sensitive lexicon matches in `text`.
pub fn find_names(text: &str, names: &HashSet<&str>) -> Vec<(usize, usize)> {
    word_spans(text)
        .into_iter()
        .filter(|&(a, b)| names.contains(&text[a..b]))
        .collect()
}

pub fn extract_name_polarity(
    train: &[LabeledInstance],
    name_lexicon: &[String],
    min_count: usize,
) -> Result<NamePolarityResult> {
    if name_lexicon.is_empty() {
        return Err(Error::input("name lexicon is empty"));
    }
    if min_count == 0 {
        return Err(Error::input("min_count must be at least 1"));
    }
    let names: HashSet<&str> = name_lexicon.iter().map(String::as_str).collect();
    let mut stats: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for inst in train {
        let mut seen = HashSet::new();
        for (a, b) in find_names(&inst.text, &names) {
            let name = &inst.text[a..b];
            if seen.insert(name) {
                let e = stats.entry(names.get(name).copied().unwrap()).or_default();
                e.0 += 1;
                e.1 += usize::from(inst.label);
            }
        }
    }
    let mut out = NamePolarityResult::default();
    for (name, (count, positives)) in stats {
        if count >= min_count && positives == count {
            out.positive.push(name.to_string());
        } else if count >= min_count && positives == 0 {
            out.negative.push(name.to_string());
        }
        out.polarity.push(NamePolarity {
            name: name.to_string(),
            occurrence_count: count,
            mean_label: positives as f64 / count as f64,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(text: &str, label: u8) -> LabeledInstance {
        LabeledInstance {
            id: text.into(),
            text: text.into(),
            label,
        }
    }

    fn lex() -> Vec<String> {
        ["Anna", "Bruce", "Clara", "Diego"].iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn polarity_rules() {
        let train = vec![
            inst("Anna was great.", 1),
            inst("Loved Anna here.", 1),
            inst("Anna's best role.", 1),
            inst("Bruce was fine.", 1),
            inst("Bruce was awful.", 0),
            inst("Clara bored me.", 0),
            inst("Diego ruined it.", 0),
            inst("Diego and Diego again.", 0),
            inst("anna lowercase is not a name match", 0),
        ];
        let r = extract_name_polarity(&train, &lex(), 2).unwrap();
        assert_eq!(r.positive, ["Anna"]);
        assert_eq!(r.negative, ["Diego"]);
        let by_name: BTreeMap<_, _> = r.polarity.iter().map(|p| (p.name.as_str(), p)).collect();
        assert_eq!(by_name["Anna"].occurrence_count, 3);
        assert_eq!(by_name["Bruce"].mean_label, 0.5);
        // below min_count: reported but not listed
        assert_eq!(by_name["Clara"].occurrence_count, 1);
        assert_eq!(by_name["Clara"].mean_label, 0.0);
        assert_eq!(by_name["Diego"].occurrence_count, 2);
    }

    #[test]
    fn empty_lexicon_is_an_error() {
        assert!(extract_name_polarity(&[], &[], 2).is_err());
    }
}
