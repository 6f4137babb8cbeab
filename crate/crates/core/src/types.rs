//! Value types shared by every stage of the engine.

use serde::{Deserialize, Serialize};

use crate::constraints::ConstraintState;

pub type TokenId = u32;
pub type TokenSequence = Vec<TokenId>;

/// One original sentence together with the text the decoder is conditioned on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceUnit {
    pub original: String,
    pub left_context: String,
    pub index_in_paragraph: usize,
    pub paragraph_index: usize,
    /// Sentences shorter than three words are passed through untouched.
    pub skip: bool,
}

/// A partial decoded sequence. `tokens` holds generated tokens only; the
/// prompt lives with the decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub tokens: TokenSequence,
    pub cum_logprob: f64,
    pub constraints: ConstraintState,
    pub finished: bool,
}

impl Hypothesis {
    pub fn root(num_clauses: usize) -> Self {
        Self {
            tokens: Vec::new(),
            cum_logprob: 0.0,
            constraints: ConstraintState::new(num_clauses),
            finished: false,
        }
    }

    /// Bank index: number of clauses counted as satisfied.
    pub fn bank(&self) -> usize {
        self.constraints.count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMode {
    Greedy,
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintVariant {
    #[serde(rename = "original")]
    Original,
    #[serde(rename = "+like")]
    Like,
    #[serde(rename = "+like+similar")]
    LikeSimilar,
}

impl ConstraintVariant {
    pub const ALL: [ConstraintVariant; 3] = [Self::Original, Self::Like, Self::LikeSimilar];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Original => "original",
            Self::Like => "+like",
            Self::LikeSimilar => "+like+similar",
        }
    }
}

impl std::str::FromStr for ConstraintVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "original" => Ok(Self::Original),
            "+like" | "like" => Ok(Self::Like),
            "+like+similar" | "like+similar" => Ok(Self::LikeSimilar),
            other => Err(format!("unknown constraint variant {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extractor {
    Embedding,
    Autoregressive,
    Infill,
}

impl Extractor {
    pub const ALL: [Extractor; 3] = [Self::Embedding, Self::Autoregressive, Self::Infill];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Embedding => "embedding",
            Self::Autoregressive => "autoregressive",
            Self::Infill => "infill",
        }
    }
}

/// Which generation setting produced a candidate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub extractor: Extractor,
    pub decode_mode: DecodeMode,
    pub constraint_variant: ConstraintVariant,
    pub ordered: bool,
    pub diversity: bool,
    pub seed: u64,
}

/// A finished generation before content/fluency scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub text: String,
    pub tokens: TokenSequence,
    pub cum_logprob: f64,
    pub bank: usize,
    pub provenance: Option<Provenance>,
}

/// A generation annotated with entailment and acceptability probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub text: String,
    pub tokens: TokenSequence,
    pub nli: f64,
    pub cola: f64,
    pub cum_logprob: f64,
    pub provenance: Option<Provenance>,
}

/// Non-negative weights over a finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreDistribution<T> {
    support: Vec<T>,
    weights: Vec<f64>,
}

impl<T> ScoreDistribution<T> {
    pub fn empty() -> Self {
        Self {
            support: Vec::new(),
            weights: Vec::new(),
        }
    }

    /// Builds a distribution from raw non-negative masses, normalizing them to
    /// sum to one. An all-zero mass vector becomes uniform.
    pub fn from_masses(support: Vec<T>, masses: Vec<f64>) -> Self {
        assert_eq!(support.len(), masses.len(), "support/weight length mismatch");
        debug_assert!(masses.iter().all(|m| m.is_finite() && *m >= 0.0));
        if support.is_empty() {
            return Self::empty();
        }
        let total: f64 = masses.iter().sum();
        let weights = if total > 0.0 {
            masses.iter().map(|m| m / total).collect()
        } else {
            vec![1.0 / support.len() as f64; support.len()]
        };
        Self { support, weights }
    }

    /// Min-max normalizes `scores`, then renormalizes to sum one.
    /// Equal scores (max = min) yield the uniform distribution.
    pub fn min_max(support: Vec<T>, scores: &[f64]) -> Self {
        assert_eq!(support.len(), scores.len(), "support/score length mismatch");
        if support.is_empty() {
            return Self::empty();
        }
        let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let range = max - min;
        let masses = if range > 0.0 {
            scores.iter().map(|s| (s - min) / range).collect()
        } else {
            vec![1.0; scores.len()]
        };
        Self::from_masses(support, masses)
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[T] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, f64)> {
        self.support.iter().zip(self.weights.iter().copied())
    }
}

impl<T: PartialEq> ScoreDistribution<T> {
    pub fn weight_of(&self, item: &T) -> Option<f64> {
        self.support
            .iter()
            .position(|s| s == item)
            .map(|i| self.weights[i])
    }
}
