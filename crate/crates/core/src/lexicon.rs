//! Word lists shared by the synthetic corpus and the behavioral suites.
//!
//! Every list is addressed by a slot name (`pos_adj`, `names`, ...). On disk a
//! lexicon is `<slot>.txt` with one entry per line; `neutral_words` entries
//! are whitespace-separated groups of mutually swappable words.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::{Error, Result};

pub const NAMES: &str = "names";
pub const NEUTRAL_WORDS: &str = "neutral_words";
pub const POSITIVE_PHRASES: &str = "positive_phrases";
pub const NEGATIVE_PHRASES: &str = "negative_phrases";
pub const MOVIE_INDUSTRIES: &str = "movie_industries";

/// The industry every other one is compared against.
pub const INDUSTRY_PIVOT: &str = "Hollywood";

const DEFAULTS: &[(&str, &[&str])] = &[
    ("names", &[
        "Aaron", "Abigail", "Adam", "Adrian", "Aisha", "Alan", "Albert", "Alexander", "Alice", "Alicia",
        "Allison", "Amanda", "Amelia", "Amir", "Andrea", "Andrew", "Angela", "Anna", "Anthony", "Antonio",
        "Ashley", "Audrey", "Barbara", "Benjamin", "Beth", "Brandon", "Brian", "Bruce", "Caleb", "Cameron",
        "Carla", "Carlos", "Caroline", "Catherine", "Charles", "Charlotte", "Chloe", "Christina", "Christopher", "Claire",
        "Clara", "Colin", "Craig", "Cynthia", "Daniel", "David", "Deborah", "Dennis", "Diana", "Diego",
        "Dominic", "Donald", "Dorothy", "Douglas", "Dylan", "Edward", "Eleanor", "Elena", "Elijah", "Elizabeth",
        "Ella", "Emily", "Emma", "Eric", "Ethan", "Evelyn", "Fatima", "Felix", "Fiona", "Francesca",
        "Gabriel", "Gary", "George", "Gerald", "Gloria", "Gregory", "Hannah", "Harold", "Harriet", "Hassan",
        "Heather", "Helen", "Henry", "Hugo", "Ian", "Isaac", "Isabel", "Ivan", "Jacob", "Jamal",
        "James", "Janet", "Jason", "Jeffrey", "Jennifer", "Jeremy", "Jessica", "Joanna", "Jonathan", "Joseph",
        "Joshua", "Julia", "Julian", "Justin", "Karen", "Katherine", "Keith", "Kenneth", "Kevin", "Kimberly",
        "Laura", "Lauren", "Leonard", "Liam", "Linda", "Lisa", "Lucas", "Lucy", "Luis", "Madeline",
        "Malcolm", "Margaret", "Maria", "Marcus", "Martha", "Martin", "Matthew", "Megan", "Melissa", "Michael",
        "Michelle", "Miguel", "Monica", "Nancy", "Natalie", "Nathan", "Nicholas", "Nicole", "Noah", "Oliver",
        "Olivia", "Omar", "Oscar", "Pamela", "Patricia", "Patrick", "Paul", "Peter", "Philip", "Priya",
        "Rachel", "Rafael", "Rebecca", "Richard", "Robert", "Roger", "Ronald", "Ruth", "Ryan", "Samantha",
        "Samuel", "Sandra", "Sarah", "Scott", "Sean", "Sebastian", "Sharon", "Simon", "Sofia", "Sophie",
        "Stephanie", "Stephen", "Steven", "Susan", "Tamara", "Teresa", "Thomas", "Timothy", "Tyler", "Valerie",
        "Vanessa", "Victor", "Victoria", "Vincent", "Walter", "Wendy", "William", "Yusuf", "Zachary", "Zoe",
    ]),
    ("movie_industries", &[
        "Bollywood", "Tollywood", "Kollywood", "Mollywood", "Sandalwood", "Nollywood", "Lollywood",
        "Dhallywood", "Ghallywood", "Kannywood", "Chinawood", "Ollywood", "Pollywood",
    ]),
    ("neutral_words", &[
        "the this that",
        "of about",
        "in within inside",
        "with alongside",
        "a one",
        "and plus",
    ]),
    ("positive_phrases", &[
        "I loved it.",
        "It was wonderful.",
        "Highly recommended.",
        "A true delight.",
        "I really enjoyed it.",
        "What a great film.",
        "It is a must-see.",
        "Absolutely brilliant.",
        "I would happily watch it again.",
        "The cast was excellent.",
    ]),
    ("negative_phrases", &[
        "I hated it.",
        "It was terrible.",
        "A complete letdown.",
        "A total waste of time.",
        "I really disliked it.",
        "What an awful film.",
        "Avoid it at all costs.",
        "Absolutely dreadful.",
        "I want my money back.",
    ]),
    ("single_positive_words", &[
        "beautiful", "brilliant", "enjoyed", "good", "great", "excellent", "amazing", "wonderful",
        "fantastic", "superb", "delightful", "enjoyable", "charming", "terrific", "outstanding", "lovely",
        "loved", "liked", "admired", "impressive", "remarkable", "marvelous",
    ]),
    ("single_negative_words", &[
        "hate", "disliked", "dreaded", "bad", "terrible", "awful", "horrible", "boring",
        "dull", "dreadful", "hated", "despised", "tedious", "disappointing",
    ]),
    ("pos_adj", &[
        "good", "great", "excellent", "amazing", "wonderful", "brilliant", "fantastic", "beautiful",
        "superb", "delightful", "enjoyable", "charming", "terrific", "outstanding", "lovely", "fun",
        "clever", "impressive", "engaging", "remarkable", "stunning", "marvelous", "gripping", "fresh",
    ]),
    ("neg_adj", &[
        "bad", "terrible", "awful", "horrible", "boring", "dull", "dreadful", "poor",
        "weak", "lousy", "tedious", "mediocre", "disappointing", "painful", "annoying", "lame",
        "pointless", "awkward", "messy", "bland", "ridiculous", "sloppy", "stale", "clumsy",
    ]),
    ("pos_verb_present", &["like", "love", "enjoy", "admire", "appreciate", "adore", "recommend", "value"]),
    ("neg_verb_present", &["hate", "dislike", "despise", "regret", "loathe", "detest", "abhor", "dread"]),
    ("pos_verb_past", &["liked", "loved", "enjoyed", "admired", "appreciated", "adored", "recommended", "valued"]),
    ("neg_verb_past", &["hated", "disliked", "despised", "regretted", "loathed", "detested", "abhorred", "dreaded"]),
    ("movie_noun", &[
        "movie", "film", "show", "series", "plot", "story", "script", "cast", "acting",
        "director", "actor", "actress", "ending", "soundtrack", "cinematography", "scene", "screenplay", "dialogue",
    ]),
    ("movie_short", &["movie", "film", "picture"]),
    ("det", &["This", "That", "The"]),
    ("det_lc", &["this", "that", "the"]),
    ("be", &["is", "was"]),
    ("isnt", &["is not", "isn't", "was not", "wasn't"]),
    ("dont", &["don't", "didn't"]),
    ("intens", &["very", "so", "really", "quite", "truly", "extremely"]),
    ("neutral_middle", &[
        "given my history with movies",
        "given that it is a Tuesday",
        "looking back on it",
        "all things considered",
        "if I am being honest",
        "after thinking about it for a while",
    ]),
    ("horror_pos", &["scary", "terrifying", "frightening", "creepy", "chilling"]),
    ("horror_neg", &["calming", "relaxing", "soothing"]),
    ("comedy_pos", &["funny", "hilarious", "witty", "amusing"]),
    ("comedy_neg", &["serious", "gloomy", "somber"]),
    ("drama_pos", &["serious", "touching", "moving", "powerful"]),
    ("drama_neg", &["funny", "silly", "goofy"]),
    ("genres", &["horror", "comedy", "drama", "thriller", "romance", "documentary", "action", "western"]),
    ("roles", &["villain", "hero", "detective", "mother", "teacher", "soldier", "captain", "stranger"]),
    ("openers", &["", "Honestly, ", "Overall, ", "In the end, ", "Frankly, ", "To me, "]),
];

/// Slot name -> entries.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Lexicons {
    lists: BTreeMap<String, Vec<String>>,
}

impl Lexicons {
    pub fn builtin() -> Self {
        let lists = DEFAULTS
            .iter()
            .map(|(k, v)| (k.to_string(), v.iter().map(|s| s.to_string()).collect()))
            .collect();
        Lexicons { lists }
    }

    pub fn builtin_slots() -> impl Iterator<Item = &'static str> {
        DEFAULTS.iter().map(|(k, _)| *k)
    }

    pub fn get(&self, slot: &str) -> Option<&[String]> {
        self.lists.get(slot).map(Vec::as_slice)
    }

    pub fn require(&self, slot: &str) -> Result<&[String]> {
        self.get(slot)
            .ok_or_else(|| Error::Template(format!("no lexicon for slot '{slot}'")))
    }

    pub fn insert(&mut self, slot: impl Into<String>, entries: Vec<String>) {
        self.lists.insert(slot.into(), entries);
    }

    pub fn remove(&mut self, slot: &str) -> Option<Vec<String>> {
        self.lists.remove(slot)
    }

    pub fn slots(&self) -> impl Iterator<Item = &str> {
        self.lists.keys().map(String::as_str)
    }

    /// `neutral_words` as groups of interchangeable words.
    pub fn neutral_groups(&self) -> Result<Vec<Vec<String>>> {
        Ok(self
            .require(NEUTRAL_WORDS)?
            .iter()
            .map(|line| line.split_whitespace().map(str::to_string).collect::<Vec<_>>())
            .filter(|g| g.len() >= 2)
            .collect())
    }

    /// Reads `<dir>/<slot>.txt` for each slot. Blank lines are skipped; other
    /// lines are kept verbatim apart from the trailing newline.
    pub fn load_dir(dir: &Path, slots: &[&str]) -> Result<Self> {
        let mut out = Lexicons::default();
        for slot in slots {
            let path = dir.join(format!("{slot}.txt"));
            out.insert(*slot, read_list(&path)?);
        }
        Ok(out)
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (slot, entries) in &self.lists {
            let path = dir.join(format!("{slot}.txt"));
            let mut body = String::new();
            for e in entries {
                // empty entries (e.g. the no-opener) are stored as a lone marker
                body.push_str(if e.is_empty() { EMPTY_ENTRY } else { e });
                body.push('\n');
            }
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

const EMPTY_ENTRY: &str = "<empty>";

pub fn read_list(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .filter(|l| !l.trim().is_empty())
        .map(|l| if l == EMPTY_ENTRY { String::new() } else { l.to_string() })
        .collect())
}
