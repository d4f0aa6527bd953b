use std::collections::{BTreeMap, HashSet};

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::{
    expand_template, perturb_add_phrase, perturb_change_names, perturb_change_neutral, slug, Capability, Direction,
    Role, Template, TestInstance, TestType,
};
use crate::data::{find_names, word_spans, LabeledInstance};
use crate::lexicon::{
    Lexicons, INDUSTRY_PIVOT, MOVIE_INDUSTRIES, NAMES, NEGATIVE_PHRASES, NEUTRAL_WORDS, POSITIVE_PHRASES,
};
use crate::rng::{derive_seed, seeded, SeededRng};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    /// Multiplier on the reference case counts; 1.0 reproduces them.
    pub scale: f64,
    /// DIR dead band on the positive-class confidence.
    pub tau: f64,
    /// Capability names to build; empty means all.
    pub enabled: Vec<String>,
    /// Per-capability case counts overriding `scale`.
    pub sizes: BTreeMap<String, usize>,
    pub names_per_case: usize,
    pub neutral_per_case: usize,
    pub industries_per_case: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            scale: 0.1,
            tau: 0.1,
            enabled: Vec::new(),
            sizes: BTreeMap::new(),
            names_per_case: 10,
            neutral_per_case: 7,
            industries_per_case: 13,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::input("suite.scale must be a positive number"));
        }
        if !(self.tau >= 0.0 && self.tau < 1.0) {
            return Err(Error::input("suite.tau must lie in [0, 1)"));
        }
        let known: HashSet<&str> = capability_catalog().iter().map(|c| c.name).collect();
        for name in self.enabled.iter().chain(self.sizes.keys()) {
            if !known.contains(name.as_str()) {
                return Err(Error::input(format!("suite: unknown capability '{name}'")));
            }
        }
        if self.names_per_case == 0 || self.neutral_per_case == 0 || self.industries_per_case == 0 {
            return Err(Error::input("suite: *_per_case values must be at least 1"));
        }
        Ok(())
    }

    fn n_cases(&self, spec: &CapabilitySpec) -> usize {
        self.sizes
            .get(spec.name)
            .copied()
            .unwrap_or_else(|| ((spec.reference_cases as f64 * self.scale).round() as usize).max(1))
    }
}

/// Mined name lists used by the polarizing-name capabilities.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NameLists {
    pub positive: Vec<String>,
    pub negative: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Polarity {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy)]
enum Source {
    Templates(&'static [(&'static str, u8)]),
    ChangeNeutral,
    ChangeNames,
    PolarizingNames { names: Polarity, instances: Polarity },
    ChangeIndustry,
    AddPhrases(&'static str, Direction),
}

#[derive(Debug, Clone, Copy)]
pub struct CapabilitySpec {
    pub name: &'static str,
    pub test_type: TestType,
    /// Case count at scale 1.
    pub reference_cases: usize,
    source: Source,
}

const SENTIMENT_IN_CONTEXT: &[(&str, u8)] = &[
    ("{det} {movie_noun} {be} {pos_adj}.", 1),
    ("{det} {movie_noun} {be} {neg_adj}.", 0),
    ("I {pos_verb_present} {det_lc} {movie_noun}.", 1),
    ("I {neg_verb_present} {det_lc} {movie_noun}.", 0),
    ("I {pos_verb_past} {det_lc} {movie_noun}.", 1),
    ("I {neg_verb_past} {det_lc} {movie_noun}.", 0),
];

const TEMPORAL: &[(&str, u8)] = &[
    ("I used to {neg_verb_present} this {movie_noun}, but now I {pos_verb_present} it.", 1),
    ("I used to {pos_verb_present} this {movie_noun}, but now I {neg_verb_present} it.", 0),
    ("In the past I thought this {movie_noun} was {neg_adj}, now I think it is {pos_adj}.", 1),
    ("In the past I thought this {movie_noun} was {pos_adj}, now I think it is {neg_adj}.", 0),
];

const NEGATED_POSITIVE: &[(&str, u8)] = &[
    ("I {dont} {pos_verb_present} {det_lc} {movie_noun}.", 0),
    ("{det} {movie_noun} {isnt} {pos_adj}.", 0),
];

const NEGATED_POSITIVE_NEUTRAL_MIDDLE: &[(&str, u8)] = &[
    ("I don't think, {neutral_middle}, that I {pos_verb_present} {det_lc} {movie_noun}.", 0),
    ("{det} {movie_noun} {isnt}, {neutral_middle}, {pos_adj}.", 0),
];

const GENRE: &[(&str, u8)] = &[
    ("{det} horror {movie_short} {be} {intens} {horror_pos}.", 1),
    ("{det} horror {movie_short} {be} {intens} {horror_neg}.", 0),
    ("{det} comedy {movie_short} {be} {intens} {comedy_pos}.", 1),
    ("{det} comedy {movie_short} {be} {intens} {comedy_neg}.", 0),
    ("{det} drama {movie_short} {be} {intens} {drama_pos}.", 1),
    ("{det} drama {movie_short} {be} {intens} {drama_neg}.", 0),
];

const MOVIE_SENTIMENTS: &[(&str, u8)] = &[
    ("The movie was {pos_adj}.", 1),
    ("The movie was {neg_adj}.", 0),
    ("I {pos_verb_past} the movie.", 1),
    ("I {neg_verb_past} the movie.", 0),
];

const INDUSTRY_SENTIMENTS: &[(&str, u8)] = &[
    ("{industry} movies are {pos_adj}.", 1),
    ("{industry} movies are {neg_adj}.", 0),
    ("I think {industry} films are {pos_adj}.", 1),
    ("I think {industry} films are {neg_adj}.", 0),
    ("{industry} makes {pos_adj} movies.", 1),
    ("{industry} makes {neg_adj} movies.", 0),
];

/// Slot holding the pivot industry followed by the alternatives.
const INDUSTRY_SLOT: &str = "industry";

const CATALOG: &[CapabilitySpec] = &[
    CapabilitySpec {
        name: "Single Positive Words",
        test_type: TestType::Mft,
        reference_cases: 22,
        source: Source::Templates(&[("{single_positive_words}", 1)]),
    },
    CapabilitySpec {
        name: "Single Negative Words",
        test_type: TestType::Mft,
        reference_cases: 14,
        source: Source::Templates(&[("{single_negative_words}", 0)]),
    },
    CapabilitySpec {
        name: "Sentiment-laden Words in Context",
        test_type: TestType::Mft,
        reference_cases: 1350,
        source: Source::Templates(SENTIMENT_IN_CONTEXT),
    },
    CapabilitySpec {
        name: "Temporal Sentiment Change",
        test_type: TestType::Mft,
        reference_cases: 2152,
        source: Source::Templates(TEMPORAL),
    },
    CapabilitySpec {
        name: "Negation of Positive Sentences",
        test_type: TestType::Mft,
        reference_cases: 1350,
        source: Source::Templates(NEGATED_POSITIVE),
    },
    CapabilitySpec {
        name: "Negation of Positive, neutral words in the middle",
        test_type: TestType::Mft,
        reference_cases: 500,
        source: Source::Templates(NEGATED_POSITIVE_NEUTRAL_MIDDLE),
    },
    CapabilitySpec {
        name: "Movie Genre Specific Sentiments",
        test_type: TestType::Mft,
        reference_cases: 736,
        source: Source::Templates(GENRE),
    },
    CapabilitySpec {
        name: "Movie Sentiments",
        test_type: TestType::Mft,
        reference_cases: 58,
        source: Source::Templates(MOVIE_SENTIMENTS),
    },
    CapabilitySpec {
        name: "Movie Industries Sentiments",
        test_type: TestType::Mft,
        reference_cases: 1200,
        source: Source::Templates(INDUSTRY_SENTIMENTS),
    },
    CapabilitySpec {
        name: "Change Neutral Words",
        test_type: TestType::Inv,
        reference_cases: 500,
        source: Source::ChangeNeutral,
    },
    CapabilitySpec {
        name: "Change Names",
        test_type: TestType::Inv,
        reference_cases: 147,
        source: Source::ChangeNames,
    },
    CapabilitySpec {
        name: "Negative Names - Positive Instances",
        test_type: TestType::Inv,
        reference_cases: 157,
        source: Source::PolarizingNames {
            names: Polarity::Negative,
            instances: Polarity::Positive,
        },
    },
    CapabilitySpec {
        name: "Positive Names - Negative Instances",
        test_type: TestType::Inv,
        reference_cases: 123,
        source: Source::PolarizingNames {
            names: Polarity::Positive,
            instances: Polarity::Negative,
        },
    },
    CapabilitySpec {
        name: "Negative Names - Negative Instances",
        test_type: TestType::Inv,
        reference_cases: 123,
        source: Source::PolarizingNames {
            names: Polarity::Negative,
            instances: Polarity::Negative,
        },
    },
    CapabilitySpec {
        name: "Positive Names - Positive Instances",
        test_type: TestType::Inv,
        reference_cases: 157,
        source: Source::PolarizingNames {
            names: Polarity::Positive,
            instances: Polarity::Positive,
        },
    },
    CapabilitySpec {
        name: "Change Movie Industries",
        test_type: TestType::Inv,
        reference_cases: 18,
        source: Source::ChangeIndustry,
    },
    CapabilitySpec {
        name: "Add Positive Phrases",
        test_type: TestType::Dir,
        reference_cases: 500,
        source: Source::AddPhrases(POSITIVE_PHRASES, Direction::PositiveUp),
    },
    CapabilitySpec {
        name: "Add Negative Phrases",
        test_type: TestType::Dir,
        reference_cases: 500,
        source: Source::AddPhrases(NEGATIVE_PHRASES, Direction::NegativeUp),
    },
];

impl CapabilitySpec {
    /// Lexicon slots the capability draws on.
    pub fn required_slots(&self) -> Vec<String> {
        let mut out: Vec<String> = match self.source {
            Source::Templates(patterns) => {
                let mut slots = Vec::new();
                for (p, l) in patterns {
                    for s in Template::new(*p, *l).slots().unwrap_or_default() {
                        let s = if s == INDUSTRY_SLOT { MOVIE_INDUSTRIES.to_string() } else { s };
                        if !slots.contains(&s) {
                            slots.push(s);
                        }
                    }
                }
                slots
            }
            Source::ChangeNeutral => vec![NEUTRAL_WORDS.to_string()],
            Source::ChangeNames | Source::PolarizingNames { .. } => vec![NAMES.to_string()],
            Source::ChangeIndustry => vec![MOVIE_INDUSTRIES.to_string()],
            Source::AddPhrases(slot, _) => vec![slot.to_string()],
        };
        out.sort();
        out
    }
}

/// All capabilities in report order: MFTs, then INVs, then DIRs.
pub fn capability_catalog() -> &'static [CapabilitySpec] {
    CATALOG
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteManifest {
    pub seed: u64,
    pub scale: f64,
    pub tau: f64,
    pub n_instances: usize,
    pub capabilities: Vec<Capability>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Suite {
    pub capabilities: Vec<Capability>,
    pub instances: Vec<TestInstance>,
}

impl Suite {
    pub fn manifest(&self, seed: u64, config: &SuiteConfig) -> SuiteManifest {
        SuiteManifest {
            seed,
            scale: config.scale,
            tau: config.tau,
            n_instances: self.instances.len(),
            capabilities: self.capabilities.clone(),
        }
    }
}

struct Built {
    instances: Vec<TestInstance>,
    n_cases: usize,
    skipped: usize,
}

fn build_error(spec: &CapabilitySpec, reason: impl Into<String>) -> Error {
    Error::Build {
        capability: spec.name.to_string(),
        reason: reason.into(),
    }
}

fn lexicon<'a>(spec: &CapabilitySpec, lx: &'a Lexicons, slot: &str) -> Result<&'a [String]> {
    match lx.get(slot) {
        Some(l) if !l.is_empty() => Ok(l),
        _ => Err(build_error(spec, format!("missing or empty lexicon '{slot}'"))),
    }
}

/// Picks up to `n` eligible sources (seeded, order preserved), perturbs each
/// and lays the cases out as original followed by its perturbations.
fn perturbation_cases<P>(
    spec: &CapabilitySpec,
    sources: Vec<&LabeledInstance>,
    eligible: impl Fn(&str) -> bool,
    n: usize,
    rng: &mut SeededRng,
    mut perturb: P,
) -> Built
where
    P: FnMut(&str, &mut SeededRng) -> Option<Vec<String>>,
{
    let total = sources.len();
    let mut pool: Vec<&LabeledInstance> = sources.into_iter().filter(|s| eligible(&s.text)).collect();
    let skipped = total - pool.len();
    if pool.len() > n {
        let mut keep = index::sample(rng, pool.len(), n).into_vec();
        keep.sort_unstable();
        pool = keep.into_iter().map(|i| pool[i]).collect();
    }
    let prefix = slug(spec.name);
    let mut instances = Vec::new();
    let mut n_cases = 0;
    for source in pool {
        let Some(perturbed) = perturb(&source.text, rng) else {
            continue;
        };
        let case_id = format!("{prefix}/{n_cases:05}");
        let make = |j: usize, text: String, role| TestInstance {
            instance_id: format!("{case_id}/{j:02}"),
            case_id: case_id.clone(),
            capability: spec.name.to_string(),
            text,
            role,
            expected_label: None,
        };
        instances.push(make(0, source.text.clone(), Role::Original));
        for (j, text) in perturbed.into_iter().enumerate() {
            instances.push(make(j + 1, text, Role::Perturbed));
        }
        n_cases += 1;
    }
    Built {
        instances,
        n_cases,
        skipped,
    }
}

fn build_one(
    spec: &CapabilitySpec,
    config: &SuiteConfig,
    test: &[LabeledInstance],
    names: &NameLists,
    lx: &Lexicons,
    seed: u64,
) -> Result<Built> {
    let n = config.n_cases(spec);
    let cap_seed = derive_seed(seed, spec.name);
    let mut rng = seeded(cap_seed);
    let all: Vec<&LabeledInstance> = test.iter().collect();
    let built = match spec.source {
        Source::Templates(patterns) => {
            let templates: Vec<Template> = patterns.iter().map(|(p, l)| Template::new(*p, *l)).collect();
            let instances = expand_template(spec.name, &templates, lx, n, cap_seed)
                .map_err(|e| build_error(spec, e.to_string()))?;
            Built {
                n_cases: instances.len(),
                instances,
                skipped: 0,
            }
        }
        Source::ChangeNeutral => {
            let groups = lx.neutral_groups().map_err(|e| build_error(spec, e.to_string()))?;
            if groups.is_empty() {
                return Err(build_error(spec, "no neutral word groups"));
            }
            let words: HashSet<&str> = groups.iter().flatten().map(String::as_str).collect();
            let k = config.neutral_per_case;
            perturbation_cases(
                spec,
                all,
                |t| word_spans(t).iter().any(|&(a, b)| words.contains(&t[a..b])),
                n,
                &mut rng,
                |t, r| perturb_change_neutral(t, &groups, k, r),
            )
        }
        Source::ChangeNames | Source::PolarizingNames { .. } => {
            let lexicon_names = lexicon(spec, lx, NAMES)?;
            let name_set: HashSet<&str> = lexicon_names.iter().map(String::as_str).collect();
            let (replacements, sources): (&[String], Vec<&LabeledInstance>) = match spec.source {
                Source::PolarizingNames { names: p, instances } => {
                    let list = match p {
                        Polarity::Positive => &names.positive,
                        Polarity::Negative => &names.negative,
                    };
                    if list.is_empty() {
                        let which = if p == Polarity::Positive { "positive" } else { "negative" };
                        return Err(build_error(spec, format!("no {which} names were mined")));
                    }
                    let label = u8::from(instances == Polarity::Positive);
                    (list, all.into_iter().filter(|i| i.label == label).collect())
                }
                _ => (lexicon_names, all),
            };
            let k = config.names_per_case;
            perturbation_cases(
                spec,
                sources,
                |t| !find_names(t, &name_set).is_empty(),
                n,
                &mut rng,
                |t, r| perturb_change_names(t, &name_set, replacements, k, r),
            )
        }
        Source::ChangeIndustry => {
            let industries = lexicon(spec, lx, MOVIE_INDUSTRIES)?;
            let pivot: HashSet<&str> = [INDUSTRY_PIVOT].into_iter().collect();
            let k = config.industries_per_case;
            perturbation_cases(
                spec,
                all,
                |t| !find_names(t, &pivot).is_empty(),
                n,
                &mut rng,
                |t, r| perturb_change_names(t, &pivot, industries, k, r),
            )
        }
        Source::AddPhrases(slot, _) => {
            let phrases = lexicon(spec, lx, slot)?;
            perturbation_cases(spec, all, |_| true, n, &mut rng, |t, _| {
                Some(phrases.iter().map(|p| perturb_add_phrase(t, p)).collect())
            })
        }
    };
    Ok(built)
}

/// Materializes the enabled capabilities, each from its own seeded stream so
/// that enabling or disabling one leaves the others unchanged.
pub fn build_suite(
    config: &SuiteConfig,
    test: &[LabeledInstance],
    names: &NameLists,
    lexicons: &Lexicons,
    seed: u64,
) -> Result<Suite> {
    config.validate()?;
    let mut lx = lexicons.clone();
    if let Some(industries) = lexicons.get(MOVIE_INDUSTRIES) {
        let mut slot = vec![INDUSTRY_PIVOT.to_string()];
        slot.extend(industries.iter().filter(|s| *s != INDUSTRY_PIVOT).cloned());
        lx.insert(INDUSTRY_SLOT, slot);
    }
    let mut capabilities = Vec::new();
    let mut instances = Vec::new();
    for spec in CATALOG {
        if !config.enabled.is_empty() && !config.enabled.iter().any(|e| e == spec.name) {
            continue;
        }
        let built = build_one(spec, config, test, names, &lx, seed)?;
        let target = config.n_cases(spec);
        let notice = if built.n_cases == 0 {
            Some("no eligible source instances; capability is empty".to_string())
        } else if built.n_cases < target {
            Some(format!("only {} of {} requested cases available", built.n_cases, target))
        } else {
            None
        };
        capabilities.push(Capability {
            name: spec.name.to_string(),
            test_type: spec.test_type,
            n_cases: built.n_cases,
            m_instances: built.instances.len(),
            direction: match spec.source {
                Source::AddPhrases(_, d) => Some(d),
                _ => None,
            },
            skipped: built.skipped,
            notice,
        });
        instances.extend(built.instances);
    }
    Ok(Suite {
        capabilities,
        instances,
    })
}
