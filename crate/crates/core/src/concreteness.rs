//! Word-level concreteness scoring.
//!
//! A [`Lexicon`] maps lowercase words to mean concreteness ratings on the
//! 1 (abstract) to 5 (concrete) scale. Prompts are tokenized into alphabetic
//! words and each word gets a highlight opacity: the less concrete the word,
//! the more opaque its highlight.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_RATING: f64 = 1.0;
pub const MAX_RATING: f64 = 5.0;

/// Header names accepted for the mean-concreteness column, compared after
/// lowercasing and dropping non-alphanumeric characters ("Conc.M" -> "concm").
const RATING_HEADERS: &[&str] = &[
    "concm",
    "concmean",
    "meanconcreteness",
    "concretenessmean",
    "concreteness",
];

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("lexicon is missing required column `{0}`")]
    MissingColumn(&'static str),
    #[error("lexicon I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed lexicon row {row}: {source}")]
    Csv {
        row: u64,
        #[source]
        source: csv::Error,
    },
}

/// Counts of rows that did not make it into the lexicon.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub loaded: usize,
    /// Rating missing, unparseable, or outside `[1, 5]`.
    pub skipped_invalid: usize,
    /// Multi-word expressions and empty words.
    pub skipped_multiword: usize,
    pub duplicates: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    ratings: HashMap<String, f64>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a lexicon from `(word, rating)` pairs, applying the same
    /// normalization and rejection rules as the file loader.
    pub fn from_entries<I, S>(entries: I) -> (Self, LoadReport)
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        let mut lexicon = Lexicon::new();
        let mut report = LoadReport::default();
        for (word, rating) in entries {
            lexicon.insert_row(word.as_ref(), Some(rating), &mut report);
        }
        (lexicon, report)
    }

    pub fn load_path(path: impl AsRef<Path>) -> Result<(Self, LoadReport), LexiconError> {
        Self::load(File::open(path)?)
    }

    /// Reads delimiter-separated text with a header row. The delimiter is
    /// picked from tab, comma and semicolon by counting them in the header.
    pub fn load(source: impl Read) -> Result<(Self, LoadReport), LexiconError> {
        let mut reader = BufReader::new(source);
        let mut header = String::new();
        reader.read_line(&mut header)?;
        let delimiter = detect_delimiter(&header);

        let mut csv = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .flexible(true)
            .has_headers(true)
            .from_reader(header.as_bytes().chain(reader));

        let headers = csv
            .headers()
            .map_err(|source| LexiconError::Csv { row: 0, source })?
            .clone();
        let normalized: Vec<String> = headers.iter().map(normalize_header).collect();
        let word_col = normalized
            .iter()
            .position(|h| h == "word")
            .ok_or(LexiconError::MissingColumn("Word"))?;
        let rating_col = RATING_HEADERS
            .iter()
            .find_map(|name| normalized.iter().position(|h| h == name))
            .ok_or(LexiconError::MissingColumn("Conc.M"))?;

        let mut lexicon = Lexicon::new();
        let mut report = LoadReport::default();
        for (i, record) in csv.records().enumerate() {
            let record = record.map_err(|source| LexiconError::Csv {
                row: i as u64 + 1,
                source,
            })?;
            let word = record.get(word_col).unwrap_or("");
            let rating = record
                .get(rating_col)
                .and_then(|r| r.trim().parse::<f64>().ok());
            lexicon.insert_row(word, rating, &mut report);
        }
        if report.skipped_invalid > 0 {
            tracing::warn!(
                skipped = report.skipped_invalid,
                "skipped lexicon rows with unusable ratings"
            );
        }
        Ok((lexicon, report))
    }

    fn insert_row(&mut self, word: &str, rating: Option<f64>, report: &mut LoadReport) {
        let word = word.trim();
        if word.is_empty() || word.chars().any(char::is_whitespace) {
            report.skipped_multiword += 1;
            return;
        }
        let rating = match rating {
            Some(r) if r.is_finite() && (MIN_RATING..=MAX_RATING).contains(&r) => r,
            _ => {
                report.skipped_invalid += 1;
                return;
            }
        };
        match self.ratings.entry(word.to_lowercase()) {
            Entry::Occupied(_) => report.duplicates += 1,
            Entry::Vacant(slot) => {
                slot.insert(rating);
                report.loaded += 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }

    /// Exact lookup of an already-lowercased word.
    pub fn get(&self, word: &str) -> Option<f64> {
        self.ratings.get(word).copied()
    }

    pub fn words(&self) -> impl Iterator<Item = (&str, f64)> {
        self.ratings.iter().map(|(w, r)| (w.as_str(), *r))
    }

    /// Lowercase match first, then a naive singular: a trailing "s" is
    /// dropped from words longer than three characters.
    pub fn rate(&self, token: &str) -> Option<f64> {
        let lower = token.to_lowercase();
        if let Some(r) = self.get(&lower) {
            return Some(r);
        }
        if lower.chars().count() > 3 {
            if let Some(stem) = lower.strip_suffix('s') {
                return self.get(stem);
            }
        }
        None
    }
}

fn detect_delimiter(header: &str) -> u8 {
    let mut best = (b'\t', header.matches('\t').count());
    for &d in b",;" {
        let n = header.matches(d as char).count();
        if n > best.1 {
            best = (d, n);
        }
    }
    best.0
}

fn normalize_header(h: &str) -> String {
    h.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

/// A word in a prompt with its character offsets (end exclusive).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub char_start: usize,
    pub char_end: usize,
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '-')
}

/// Splits a prompt into maximal alphabetic runs; apostrophes and hyphens are
/// kept when they sit between two letters. Offsets count `char`s.
pub fn tokenize(prompt: &str) -> Vec<Token> {
    let chars: Vec<char> = prompt.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].is_alphabetic() {
            i += 1;
            continue;
        }
        let start = i;
        i += 1;
        while i < chars.len() {
            if chars[i].is_alphabetic() {
                i += 1;
            } else if is_joiner(chars[i]) && chars.get(i + 1).is_some_and(|c| c.is_alphabetic()) {
                i += 2;
            } else {
                break;
            }
        }
        tokens.push(Token {
            text: chars[start..i].iter().collect(),
            char_start: start,
            char_end: i,
        });
    }
    tokens
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcretenessAnnotation {
    pub token: String,
    pub char_start: usize,
    pub char_end: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating: Option<f64>,
    pub opacity: f64,
}

/// Highlight alpha for a rating: 1.0 for the most abstract words, 0.0 for the
/// most concrete, linear in between.
pub fn opacity_for(rating: Option<f64>) -> f64 {
    match rating {
        Some(r) => ((MAX_RATING - r) / (MAX_RATING - MIN_RATING)).clamp(0.0, 1.0),
        None => 0.0,
    }
}

pub fn annotate_prompt(prompt: &str, lexicon: &Lexicon) -> Vec<ConcretenessAnnotation> {
    tokenize(prompt)
        .into_iter()
        .map(|t| {
            let rating = lexicon.rate(&t.text);
            ConcretenessAnnotation {
                opacity: opacity_for(rating),
                rating,
                token: t.text,
                char_start: t.char_start,
                char_end: t.char_end,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const BRYSBAERT_HEADER: &str =
        "Word\tBigram\tConc.M\tConc.SD\tUnknown\tTotal\tPercent_known\tSUBTLEX\tDom_Pos\n";

    fn tok(t: &str, s: usize, e: usize) -> Token {
        Token {
            text: t.to_string(),
            char_start: s,
            char_end: e,
        }
    }

    #[test]
    fn tokenize_examples() {
        assert!(tokenize("").is_empty());
        assert_eq!(
            tokenize("A soft cloud"),
            vec![tok("A", 0, 1), tok("soft", 2, 6), tok("cloud", 7, 12)]
        );
        assert_eq!(
            tokenize("state-of-the-art robot!"),
            vec![tok("state-of-the-art", 0, 16), tok("robot", 17, 22)]
        );
    }

    #[test]
    fn tokenize_edge_joiners() {
        assert_eq!(tokenize("-cat- don't"), vec![tok("cat", 1, 4), tok("don't", 6, 11)]);
        assert_eq!(tokenize("rock--n"), vec![tok("rock", 0, 4), tok("n", 6, 7)]);
        assert_eq!(tokenize("café 42 naïve"), vec![tok("café", 0, 4), tok("naïve", 8, 13)]);
    }

    #[test]
    fn empty_file_with_header_loads_nothing() {
        let (lex, report) = Lexicon::load(BRYSBAERT_HEADER.as_bytes()).unwrap();
        assert!(lex.is_empty());
        assert_eq!(report, LoadReport::default());
    }

    #[test]
    fn loads_brysbaert_layout() {
        let data = format!(
            "{BRYSBAERT_HEADER}cloud\t0\t4.54\t0.9\t0\t28\t1\t1084\tNoun\nHope\t0\t1.25\t0.5\t1\t30\t0.97\t300\tNoun\n"
        );
        let (lex, report) = Lexicon::load(data.as_bytes()).unwrap();
        assert_eq!(lex.get("cloud"), Some(4.54));
        assert_eq!(lex.get("hope"), Some(1.25));
        assert_eq!(report.loaded, 2);
    }

    #[test]
    fn unparseable_rating_is_skipped_and_counted() {
        let data = format!("{BRYSBAERT_HEADER}cloud\t0\tabc\t0.9\t0\t28\t1\t1084\tNoun\n");
        let (lex, report) = Lexicon::load(data.as_bytes()).unwrap();
        assert!(lex.is_empty());
        assert_eq!(report.skipped_invalid, 1);
    }

    #[test]
    fn out_of_range_multiword_and_duplicate_rows() {
        let data = "Word,Conc.M\nrobot,4.9\nRobot,1.0\nice cream,4.8\nfog,5.5\nfog,4.2\n";
        let (lex, report) = Lexicon::load(data.as_bytes()).unwrap();
        assert_eq!(lex.get("robot"), Some(4.9));
        assert_eq!(lex.get("fog"), Some(4.2));
        assert_eq!(report.duplicates, 1);
        assert_eq!(report.skipped_multiword, 1);
        assert_eq!(report.skipped_invalid, 1);
    }

    #[test]
    fn semicolon_delimiter_and_alternate_header() {
        let data = "word;mean_concreteness\nlamp;4.7\n";
        let (lex, _) = Lexicon::load(data.as_bytes()).unwrap();
        assert_eq!(lex.get("lamp"), Some(4.7));
    }

    #[test]
    fn missing_columns_are_named() {
        let err = Lexicon::load("Term\tConc.M\n".as_bytes()).unwrap_err();
        assert!(matches!(err, LexiconError::MissingColumn("Word")), "{err}");
        let err = Lexicon::load("Word\tSD\n".as_bytes()).unwrap_err();
        assert!(matches!(err, LexiconError::MissingColumn("Conc.M")), "{err}");
        let err = Lexicon::load("".as_bytes()).unwrap_err();
        assert!(matches!(err, LexiconError::MissingColumn("Word")), "{err}");
    }

    #[test]
    fn opacity_endpoints_and_oov() {
        let (lex, _) = Lexicon::from_entries([("stone", 5.0), ("idea", 1.0), ("soft", 3.0)]);
        let ann = annotate_prompt("stone idea zxqv soft", &lex);
        assert_eq!(ann[0].opacity, 0.0);
        assert_eq!(ann[1].opacity, 1.0);
        assert_eq!(ann[2].rating, None);
        assert_eq!(ann[2].opacity, 0.0);
        assert_eq!(ann[3].opacity, 0.5);
    }

    #[test]
    fn singular_fallback_only_for_longer_words() {
        let (lex, _) = Lexicon::from_entries([("cloud", 4.5), ("bu", 2.0)]);
        assert_eq!(lex.rate("Clouds"), Some(4.5));
        assert_eq!(lex.rate("bus"), None);
    }

    #[test]
    fn soft_cloud_prompt_matches_direct_lookup() {
        let data = format!(
            "{BRYSBAERT_HEADER}a\t0\t1.46\t1\t0\t30\t1\t1\tArticle\ndrawing\t0\t4.38\t1\t0\t30\t1\t1\tNoun\nof\t0\t1.74\t1\t0\t30\t1\t1\tPrep\nsoft\t0\t3.93\t1\t0\t30\t1\t1\tAdj\ncloud\t0\t4.54\t1\t0\t30\t1\t1\tNoun\n"
        );
        let (lex, _) = Lexicon::load(data.as_bytes()).unwrap();
        // Oracle: direct scan of the same rows.
        let direct: HashMap<&str, f64> = data
            .lines()
            .skip(1)
            .map(|l| {
                let cols: Vec<&str> = l.split('\t').collect();
                (cols[0], cols[2].parse().unwrap())
            })
            .collect();
        for a in annotate_prompt("a drawing of a soft cloud", &lex) {
            assert_eq!(a.rating, Some(direct[a.token.as_str()]), "{}", a.token);
        }
    }

    proptest! {
        #[test]
        fn tokens_slice_back_and_are_ordered(s in "\\PC{0,60}") {
            let chars: Vec<char> = s.chars().collect();
            let tokens = tokenize(&s);
            let mut last_end = 0;
            for t in &tokens {
                prop_assert!(t.char_start >= last_end);
                prop_assert!(t.char_start < t.char_end && t.char_end <= chars.len());
                let slice: String = chars[t.char_start..t.char_end].iter().collect();
                prop_assert_eq!(&slice, &t.text);
                last_end = t.char_end;
            }
        }

        #[test]
        fn opacity_is_non_increasing_in_rating(a in 1.0f64..=5.0, b in 1.0f64..=5.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(opacity_for(Some(lo)) >= opacity_for(Some(hi)));
            prop_assert!((0.0..=1.0).contains(&opacity_for(Some(a))));
        }
    }
}
