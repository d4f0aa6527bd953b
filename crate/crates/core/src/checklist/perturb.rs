use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;

use crate::data::{find_names, word_spans};

/// `text` with the byte range `span` replaced.
pub fn perturb_replace_word(text: &str, span: (usize, usize), replacement: &str) -> String {
    let mut out = String::with_capacity(text.len() + replacement.len());
    out.push_str(&text[..span.0]);
    out.push_str(replacement);
    out.push_str(&text[span.1..]);
    out
}

/// Replaces the first whole-token occurrence of any of `names` with up to `k`
/// distinct replacements, never the name itself. `None` when `text` contains
/// no name.
pub fn perturb_change_names<R: Rng>(
    text: &str,
    names: &HashSet<&str>,
    replacements: &[String],
    k: usize,
    rng: &mut R,
) -> Option<Vec<String>> {
    let span = *find_names(text, names).first()?;
    let original = &text[span.0..span.1];
    let mut seen = HashSet::new();
    let candidates: Vec<&str> = replacements
        .iter()
        .map(String::as_str)
        .filter(|r| *r != original && seen.insert(*r))
        .collect();
    let k = k.min(candidates.len());
    Some(
        index::sample(rng, candidates.len(), k)
            .into_iter()
            .map(|i| perturb_replace_word(text, span, candidates[i]))
            .collect(),
    )
}

/// Swaps one neutral function word for another from its group. Every
/// (occurrence, alternative) pair is a candidate; up to `k` of them are
/// sampled. Matching is on the exact lowercase token. `None` when `text` has
/// no neutral word.
pub fn perturb_change_neutral<R: Rng>(
    text: &str,
    groups: &[Vec<String>],
    k: usize,
    rng: &mut R,
) -> Option<Vec<String>> {
    let mut candidates: Vec<((usize, usize), &str)> = Vec::new();
    for span in word_spans(text) {
        let word = &text[span.0..span.1];
        if let Some(group) = groups.iter().find(|g| g.iter().any(|w| w == word)) {
            candidates.extend(group.iter().filter(|w| *w != word).map(|w| (span, w.as_str())));
        }
    }
    if candidates.is_empty() {
        return None;
    }
    let mut picked = index::sample(rng, candidates.len(), k.min(candidates.len())).into_vec();
    picked.sort_unstable();
    Some(
        picked
            .into_iter()
            .map(|i| perturb_replace_word(text, candidates[i].0, candidates[i].1))
            .collect(),
    )
}

/// Appends `phrase` after a single space.
pub fn perturb_add_phrase(text: &str, phrase: &str) -> String {
    format!("{text} {phrase}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn names() -> HashSet<&'static str> {
        ["Anna", "Bruce"].into_iter().collect()
    }

    fn reps() -> Vec<String> {
        ["Anna", "Clara", "Diego", "Elena", "Felix"].iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn names_replace_first_match_only() {
        let out = perturb_change_names("Anna met Bruce.", &names(), &reps(), 3, &mut seeded(1)).unwrap();
        assert_eq!(out.len(), 3);
        for t in &out {
            assert!(t.ends_with(" met Bruce."), "{t}");
            assert!(!t.starts_with("Anna "));
        }
        let distinct: HashSet<_> = out.iter().collect();
        assert_eq!(distinct.len(), 3);
    }

    #[test]
    fn original_name_is_never_sampled() {
        for seed in 0..50 {
            let out = perturb_change_names("I saw Anna.", &names(), &reps(), 10, &mut seeded(seed)).unwrap();
            assert_eq!(out.len(), 4);
            assert!(!out.iter().any(|t| t == "I saw Anna."));
        }
    }

    #[test]
    fn no_name_means_skip() {
        assert!(perturb_change_names("annaliese was here", &names(), &reps(), 3, &mut seeded(0)).is_none());
    }

    #[test]
    fn neutral_swap_is_local() {
        let groups = vec![vec!["that".to_string(), "this".to_string()]];
        let out = perturb_change_neutral("I love that movie", &groups, 5, &mut seeded(0)).unwrap();
        assert_eq!(out, ["I love this movie"]);
        assert!(perturb_change_neutral("I love movies", &groups, 5, &mut seeded(0)).is_none());
    }

    #[test]
    fn neutral_candidates_span_all_occurrences() {
        let groups = vec![
            vec!["the".to_string(), "this".to_string(), "that".to_string()],
            vec!["of".to_string(), "about".to_string()],
        ];
        let out = perturb_change_neutral("the story of the war", &groups, 10, &mut seeded(0)).unwrap();
        assert_eq!(out.len(), 5);
        assert!(out.contains(&"this story of the war".to_string()));
        assert!(out.contains(&"the story about the war".to_string()));
        assert!(out.contains(&"the story of that war".to_string()));
    }

    #[test]
    fn phrase_is_a_suffix() {
        let t = perturb_add_phrase("Not bad.", "I loved it.");
        assert_eq!(t, "Not bad. I loved it.");
        assert!(t.starts_with("Not bad."));
    }
}
