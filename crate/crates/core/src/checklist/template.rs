use rand::seq::index;

use super::{Role, TestInstance};
use crate::lexicon::Lexicons;
use crate::rng::seeded;
use crate::{Error, Result};

/// A sentence pattern with `{slot}` placeholders and the label every filling
/// of it receives. A slot used twice takes the same value both times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub pattern: String,
    pub label: u8,
}

impl Template {
    pub fn new(pattern: impl Into<String>, label: u8) -> Self {
        Template {
            pattern: pattern.into(),
            label,
        }
    }

    /// Distinct slot names in order of first appearance.
    pub fn slots(&self) -> Result<Vec<String>> {
        Ok(parse(&self.pattern)?.1.into_iter().map(str::to_string).collect())
    }
}

enum Piece<'a> {
    Text(&'a str),
    Slot(usize),
}

fn parse(pattern: &str) -> Result<(Vec<Piece<'_>>, Vec<&str>)> {
    let mut pieces = Vec::new();
    let mut slots: Vec<&str> = Vec::new();
    let mut rest = pattern;
    while let Some(open) = rest.find('{') {
        if open > 0 {
            pieces.push(Piece::Text(&rest[..open]));
        }
        let close = rest[open..]
            .find('}')
            .ok_or_else(|| Error::Template(format!("unclosed '{{' in {pattern:?}")))?
            + open;
        let name = &rest[open + 1..close];
        if name.is_empty() || name.contains('{') {
            return Err(Error::Template(format!("bad slot in {pattern:?}")));
        }
        let idx = match slots.iter().position(|s| *s == name) {
            Some(i) => i,
            None => {
                slots.push(name);
                slots.len() - 1
            }
        };
        pieces.push(Piece::Slot(idx));
        rest = &rest[close + 1..];
    }
    if rest.contains('}') {
        return Err(Error::Template(format!("stray '}}' in {pattern:?}")));
    }
    if !rest.is_empty() {
        pieces.push(Piece::Text(rest));
    }
    Ok((pieces, slots))
}

/// Every filling of `template`, slots in order of first appearance, the last
/// slot varying fastest.
fn fill_all(template: &Template, lexicons: &Lexicons) -> Result<Vec<(String, u8)>> {
    let (pieces, slots) = parse(&template.pattern)?;
    let lists: Vec<&[String]> = slots
        .iter()
        .map(|s| lexicons.get(s).ok_or_else(|| Error::Template(format!("unknown slot '{{{s}}}'"))))
        .collect::<Result<_>>()?;
    let total: usize = lists.iter().map(|l| l.len()).product();
    let mut out = Vec::with_capacity(total);
    let mut choice = vec![0usize; lists.len()];
    for _ in 0..total {
        let mut text = String::new();
        for p in &pieces {
            match p {
                Piece::Text(t) => text.push_str(t),
                Piece::Slot(i) => text.push_str(&lists[*i][choice[*i]]),
            }
        }
        out.push((text, template.label));
        for i in (0..choice.len()).rev() {
            choice[i] += 1;
            if choice[i] < lists[i].len() {
                break;
            }
            choice[i] = 0;
        }
    }
    Ok(out)
}

/// Cartesian expansion of `templates` into MFT instances, subsampled to `cap`
/// with `seed` when the product is larger. Each instance is its own case.
pub fn expand_template(
    capability: &str,
    templates: &[Template],
    lexicons: &Lexicons,
    cap: usize,
    seed: u64,
) -> Result<Vec<TestInstance>> {
    let mut all = Vec::new();
    for t in templates {
        all.extend(fill_all(t, lexicons)?);
    }
    if all.len() > cap {
        let mut keep = index::sample(&mut seeded(seed), all.len(), cap).into_vec();
        keep.sort_unstable();
        all = keep.into_iter().map(|i| std::mem::take(&mut all[i])).collect();
    }
    let prefix = super::slug(capability);
    Ok(all
        .into_iter()
        .enumerate()
        .map(|(i, (text, label))| {
            let case_id = format!("{prefix}/{i:05}");
            TestInstance {
                instance_id: format!("{case_id}/00"),
                case_id,
                capability: capability.to_string(),
                text,
                role: Role::Original,
                expected_label: Some(label),
            }
        })
        .collect())
}
