use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EngineError;

/// Number of `char`s in `s`. All span offsets in this crate count chars.
pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

fn byte_offset(s: &str, char_idx: usize) -> usize {
    s.char_indices()
        .nth(char_idx)
        .map(|(b, _)| b)
        .unwrap_or(s.len())
}

/// `s[char_start..char_end]` by character offsets.
pub fn char_slice(s: &str, char_start: usize, char_end: usize) -> &str {
    &s[byte_offset(s, char_start)..byte_offset(s, char_end)]
}

/// The part of a prompt the user chose to explore. `char_end` is exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanSelection {
    pub char_start: usize,
    pub char_end: usize,
    pub text: String,
}

impl SpanSelection {
    pub fn from_prompt(prompt: &str, char_start: usize, char_end: usize) -> Result<Self, EngineError> {
        let len = char_len(prompt);
        if char_start >= char_end || char_end > len {
            return Err(EngineError::InvalidRequest(format!(
                "span {char_start}..{char_end} is not a non-empty range within a {len}-character prompt"
            )));
        }
        Ok(Self {
            char_start,
            char_end,
            text: char_slice(prompt, char_start, char_end).to_string(),
        })
    }

    pub fn validate_against(&self, prompt: &str) -> Result<(), EngineError> {
        let expected = Self::from_prompt(prompt, self.char_start, self.char_end)?;
        if expected.text != self.text {
            return Err(EngineError::InvalidRequest(format!(
                "span text {:?} does not match prompt text {:?} at {}..{}",
                self.text, expected.text, self.char_start, self.char_end
            )));
        }
        Ok(())
    }

    pub fn char_count(&self) -> usize {
        self.char_end - self.char_start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansionMode {
    AddDetails,
    GenerateAlternatives,
}

impl fmt::Display for ExpansionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExpansionMode::AddDetails => "detail",
            ExpansionMode::GenerateAlternatives => "alt",
        })
    }
}

impl FromStr for ExpansionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "detail" | "details" | "add_details" => Ok(ExpansionMode::AddDetails),
            "alt" | "alternatives" | "generate_alternatives" => Ok(ExpansionMode::GenerateAlternatives),
            other => Err(format!("unknown expansion mode `{other}` (expected detail or alt)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionRequest {
    pub origin_prompt: String,
    pub span: SpanSelection,
    pub mode: ExpansionMode,
    pub novelty: f64,
}

impl ExpansionRequest {
    pub fn new(
        origin_prompt: impl Into<String>,
        char_start: usize,
        char_end: usize,
        mode: ExpansionMode,
        novelty: f64,
    ) -> Result<Self, EngineError> {
        let origin_prompt = origin_prompt.into();
        let span = SpanSelection::from_prompt(&origin_prompt, char_start, char_end)?;
        let request = Self {
            origin_prompt,
            span,
            mode,
            novelty,
        };
        request.validate()?;
        Ok(request)
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if !(0.0..=1.0).contains(&self.novelty) {
            return Err(EngineError::InvalidRequest(format!(
                "novelty {} outside [0, 1]",
                self.novelty
            )));
        }
        self.span.validate_against(&self.origin_prompt)
    }
}

/// One rewrite of the selected span, placed back into the full prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub span_text: String,
    pub full_prompt: String,
    /// Unit-norm embedding of `full_prompt`.
    pub embedding: Vec<f64>,
    /// `1 - cos(embedding, origin)`, clamped to `[0, 1]`.
    pub origin_distance: f64,
}

/// Which quantity the novelty band is centred on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandSpace {
    /// Band over distance from the origin; higher novelty means further away.
    #[default]
    Distance,
    /// Band over similarity to the origin (`1 - distance`).
    Similarity,
}

impl BandSpace {
    pub fn coordinate(self, origin_distance: f64) -> f64 {
        match self {
            BandSpace::Distance => origin_distance,
            BandSpace::Similarity => 1.0 - origin_distance,
        }
    }
}

impl FromStr for BandSpace {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "distance" => Ok(BandSpace::Distance),
            "similarity" => Ok(BandSpace::Similarity),
            other => Err(format!("unknown band space `{other}`")),
        }
    }
}

/// Four representative candidates plus the pool they were drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestionSet {
    pub request: ExpansionRequest,
    pub rng_seed: u64,
    /// Final half-width of the novelty band, after any widening.
    pub band_halfwidth: f64,
    /// Indices into `retained_pool`, one per cluster.
    pub suggestions: Vec<usize>,
    /// Cluster id for every member of `retained_pool`.
    pub cluster_assignments: Vec<usize>,
    pub retained_pool: Vec<Candidate>,
}

impl SuggestionSet {
    pub fn suggestion_candidates(&self) -> impl Iterator<Item = &Candidate> {
        self.suggestions.iter().map(|&i| &self.retained_pool[i])
    }
}
