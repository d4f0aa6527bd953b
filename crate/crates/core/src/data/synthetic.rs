//! Template-generated movie reviews with labels fixed by construction.
//!
//! Reviews mix plain sentiment statements, named-person reviews, Hollywood
//! mentions, two-clause reviews, negations, changes of opinion over time and
//! genre-dependent reactions. In the training split a small set of names only
//! ever appears in positive reviews and another only in negative ones, which
//! plants the spurious name/label correlation the polarizing-name suites probe.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use super::LabeledInstance;
use crate::lexicon::{Lexicons, INDUSTRY_PIVOT, NAMES};
use crate::rng::{derive_seed, seeded, SeededRng};
use crate::{Error, Result};

const BIASED_NAMES_PER_POLARITY: usize = 20;
const MAX_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub train: Vec<LabeledInstance>,
    pub dev: Vec<LabeledInstance>,
    pub test: Vec<LabeledInstance>,
    pub lexicons: Lexicons,
    /// Names the generator only placed in positive training reviews.
    pub positive_biased_names: Vec<String>,
    pub negative_biased_names: Vec<String>,
}

#[derive(Clone, Copy, PartialEq)]
enum Split {
    Train,
    Dev,
    Test,
}

struct Generator<'a> {
    lx: &'a Lexicons,
    rng: SeededRng,
    pos_names: Vec<String>,
    neg_names: Vec<String>,
    neutral_names: Vec<String>,
    all_names: &'a [String],
}

impl<'a> Generator<'a> {
    fn pick(&mut self, slot: &str) -> String {
        let list = self.lx.get(slot).expect("slot checked up front");
        list.choose(&mut self.rng).cloned().unwrap_or_default()
    }

    fn polar(&mut self, pos_slot: &str, neg_slot: &str, label: u8) -> String {
        self.pick(if label == 1 { pos_slot } else { neg_slot })
    }

    fn adj(&mut self, label: u8) -> String {
        self.polar("pos_adj", "neg_adj", label)
    }

    fn verb(&mut self, label: u8) -> String {
        self.polar("pos_verb_present", "neg_verb_present", label)
    }

    fn verb_past(&mut self, label: u8) -> String {
        self.polar("pos_verb_past", "neg_verb_past", label)
    }

    fn maybe_intens(&mut self) -> String {
        if self.rng.gen_bool(0.4) {
            format!("{} ", self.pick("intens"))
        } else {
            String::new()
        }
    }

    fn name(&mut self, split: Split, label: u8) -> String {
        let pool = match split {
            Split::Train if self.rng.gen_bool(0.5) => {
                if label == 1 {
                    &self.pos_names
                } else {
                    &self.neg_names
                }
            }
            Split::Train => &self.neutral_names,
            Split::Dev | Split::Test => self.all_names,
        };
        pool.choose(&mut self.rng).cloned().unwrap_or_default()
    }

    fn review(&mut self, split: Split, y: u8) -> String {
        let opp = 1 - y;
        let family = self.rng.gen_range(0..100);
        match family {
            0..=29 => {
                let opener = self.pick("openers");
                match self.rng.gen_range(0..3) {
                    0 => format!(
                        "{opener}{} {} {} {}{}.",
                        self.pick("det"),
                        self.pick("movie_noun"),
                        self.pick("be"),
                        self.maybe_intens(),
                        self.adj(y)
                    ),
                    1 => format!(
                        "{opener}I {} {} {}.",
                        self.verb_past(y),
                        self.pick("det_lc"),
                        self.pick("movie_noun")
                    ),
                    _ => format!(
                        "{opener}The {} of this {} {} {} {}{}.",
                        self.pick("movie_noun"),
                        self.pick("genres"),
                        self.pick("movie_short"),
                        self.pick("be"),
                        self.maybe_intens(),
                        self.adj(y)
                    ),
                }
            }
            30..=54 => {
                let name = self.name(split, y);
                match self.rng.gen_range(0..4) {
                    0 => format!(
                        "{name} gives a {} performance in this {} {}.",
                        self.adj(y),
                        self.pick("genres"),
                        self.pick("movie_short")
                    ),
                    1 => format!(
                        "{name}'s performance as the {} is {}{}.",
                        self.pick("roles"),
                        self.maybe_intens(),
                        self.adj(y)
                    ),
                    2 => format!("I {} {name} in the role of the {}.", self.verb_past(y), self.pick("roles")),
                    _ => format!(
                        "The {} {} directed by {name} is {}.",
                        self.pick("genres"),
                        self.pick("movie_short"),
                        self.adj(y)
                    ),
                }
            }
            55..=62 => match self.rng.gen_range(0..3) {
                0 => format!(
                    "Another {} {INDUSTRY_PIVOT} {} {}.",
                    self.adj(y),
                    self.pick("genres"),
                    self.pick("movie_short")
                ),
                1 => format!("This {INDUSTRY_PIVOT} production is {}{}.", self.maybe_intens(), self.adj(y)),
                _ => {
                    let name = self.name(split, y);
                    format!(
                        "{name} delivers a {} turn in this {INDUSTRY_PIVOT} {}.",
                        self.adj(y),
                        self.pick("genres")
                    )
                }
            },
            63..=74 => {
                let first = self.pick("movie_noun");
                let mut second = self.pick("movie_noun");
                while second == first {
                    second = self.pick("movie_noun");
                }
                format!("The {first} is {} and the {second} is {}.", self.adj(y), self.adj(y))
            }
            75..=84 => match self.rng.gen_range(0..3) {
                0 => format!("The {} was not {}.", self.pick("movie_noun"), self.adj(opp)),
                1 => format!("I did not {} this {}.", self.verb(opp), self.pick("movie_short")),
                _ => format!(
                    "{} {} is not {}{}.",
                    self.pick("det"),
                    self.pick("movie_noun"),
                    self.maybe_intens(),
                    self.adj(opp)
                ),
            },
            85..=92 => {
                if self.rng.gen_bool(0.5) {
                    let name = self.name(split, y);
                    format!(
                        "I used to {} {name}'s movies, but now I {} them.",
                        self.verb(opp),
                        self.verb(y)
                    )
                } else {
                    format!(
                        "At first the {} seemed {}, but in the end it was {}.",
                        self.pick("movie_noun"),
                        self.adj(opp),
                        self.adj(y)
                    )
                }
            }
            _ => {
                let genre = ["horror", "comedy", "drama"][self.rng.gen_range(0..3)];
                let word = self.polar(&format!("{genre}_pos"), &format!("{genre}_neg"), y);
                format!(
                    "The {genre} {} was {}{word}.",
                    self.pick("movie_short"),
                    self.maybe_intens()
                )
            }
        }
    }

    fn split(
        &mut self,
        split: Split,
        prefix: &str,
        n: usize,
        seen: &mut HashSet<String>,
    ) -> Result<Vec<LabeledInstance>> {
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let label = u8::from(self.rng.gen_bool(0.5));
            let mut attempts = 0;
            let text = loop {
                let text = self.review(split, label);
                if seen.insert(text.clone()) {
                    break text;
                }
                attempts += 1;
                if attempts >= MAX_ATTEMPTS {
                    return Err(Error::input(format!(
                        "synthetic corpus exhausted its unique reviews after {} instances",
                        seen.len()
                    )));
                }
            };
            out.push(LabeledInstance {
                id: format!("{prefix}-{:06}", i + 1),
                text,
                label,
            });
        }
        Ok(out)
    }
}

const REQUIRED_SLOTS: &[&str] = &[
    NAMES,
    "pos_adj",
    "neg_adj",
    "pos_verb_present",
    "neg_verb_present",
    "pos_verb_past",
    "neg_verb_past",
    "movie_noun",
    "movie_short",
    "det",
    "det_lc",
    "be",
    "intens",
    "genres",
    "roles",
    "openers",
    "horror_pos",
    "horror_neg",
    "comedy_pos",
    "comedy_neg",
    "drama_pos",
    "drama_neg",
];

pub fn gen_synthetic_corpus(seed: u64, n_train: usize, n_dev: usize, n_test: usize) -> Result<SyntheticCorpus> {
    gen_synthetic_corpus_with(seed, n_train, n_dev, n_test, Lexicons::builtin())
}

/// Generates disjoint train/dev/test splits. No review text occurs twice
/// across the three splits.
pub fn gen_synthetic_corpus_with(
    seed: u64,
    n_train: usize,
    n_dev: usize,
    n_test: usize,
    lexicons: Lexicons,
) -> Result<SyntheticCorpus> {
    if n_train == 0 || n_dev == 0 || n_test == 0 {
        return Err(Error::input("synthetic split sizes must all be at least 1"));
    }
    for slot in REQUIRED_SLOTS {
        if lexicons.get(slot).is_none_or(|l| l.is_empty()) {
            return Err(Error::input(format!("synthetic corpus needs a non-empty '{slot}' lexicon")));
        }
    }
    let all_names = lexicons.get(NAMES).unwrap();
    if all_names.len() < 3 * BIASED_NAMES_PER_POLARITY {
        return Err(Error::input(format!(
            "synthetic corpus needs at least {} names",
            3 * BIASED_NAMES_PER_POLARITY
        )));
    }

    let mut shuffled = all_names.to_vec();
    let mut rng = seeded(derive_seed(seed, "synthetic-corpus"));
    shuffled.shuffle(&mut rng);
    let k = BIASED_NAMES_PER_POLARITY;
    let mut pos_names = shuffled[..k].to_vec();
    let mut neg_names = shuffled[k..2 * k].to_vec();
    let neutral_names = shuffled[2 * k..].to_vec();

    let mut gen = Generator {
        lx: &lexicons,
        rng,
        pos_names: pos_names.clone(),
        neg_names: neg_names.clone(),
        neutral_names,
        all_names,
    };
    let mut seen = HashSet::new();
    let train = gen.split(Split::Train, "train", n_train, &mut seen)?;
    let dev = gen.split(Split::Dev, "dev", n_dev, &mut seen)?;
    let test = gen.split(Split::Test, "test", n_test, &mut seen)?;
    drop(gen);

    pos_names.sort();
    neg_names.sort();
    Ok(SyntheticCorpus {
        train,
        dev,
        test,
        lexicons,
        positive_biased_names: pos_names,
        negative_biased_names: neg_names,
    })
}
