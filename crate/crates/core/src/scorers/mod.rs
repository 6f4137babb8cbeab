//! Scoring contracts for every model-dependent quantity.
//!
//! Log-space values cross these boundaries except where a method is
//! documented as returning a probability.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{TokenId, TokenSequence};

pub mod mock;
#[cfg(feature = "mock-server")]
pub mod mock_server;
pub mod remote;
pub mod wire;

pub use mock::MockModel;
pub use remote::{RemoteBackend, RetryPolicy};

pub trait NextTokenScorer: Send + Sync {
    fn vocab_size(&self) -> usize;

    /// End-of-sequence token; mocks reserve id 0.
    fn eos_id(&self) -> TokenId;

    /// Raw next-token logits for `prefix`, of length `vocab_size()`.
    fn logits(&self, prefix: &[TokenId]) -> Result<Vec<f64>>;

    fn tokenize(&self, text: &str) -> Result<TokenSequence>;

    fn detokenize(&self, tokens: &[TokenId]) -> Result<String>;

    /// Tokens for a single word as it appears inside running text.
    /// Non-initial words carry a leading space, which matters for
    /// byte-level BPE vocabularies.
    fn tokenize_word(&self, word: &str, initial: bool) -> Result<TokenSequence> {
        if initial {
            self.tokenize(word)
        } else {
            self.tokenize(&format!(" {word}"))
        }
    }
}

pub trait InfillScorer: Send + Sync {
    /// Probability of `ids[mask_index]` when that position is masked.
    fn infill_prob(&self, ids: &[TokenId], mask_index: usize) -> Result<f64>;
}

pub trait EmbeddingProvider: Send + Sync {
    fn dim(&self) -> usize;

    /// Fixed-dimension vector; the zero vector for out-of-vocabulary words.
    fn embed(&self, word: &str) -> Result<Vec<f64>>;
}

pub trait EntailmentScorer: Send + Sync {
    fn entail_prob(&self, premise: &str, hypothesis: &str) -> Result<f64>;
}

pub trait AcceptabilityScorer: Send + Sync {
    fn accept_prob(&self, sentence: &str) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PosClass {
    NounSg,
    NounPl,
    VerbPast,
    VerbPresent,
    VerbOther,
    Adjective,
    Function,
    Other,
}

impl PosClass {
    pub fn as_str(self) -> &'static str {
        match self {
            PosClass::NounSg => "noun_sg",
            PosClass::NounPl => "noun_pl",
            PosClass::VerbPast => "verb_past",
            PosClass::VerbPresent => "verb_present",
            PosClass::VerbOther => "verb_other",
            PosClass::Adjective => "adjective",
            PosClass::Function => "function",
            PosClass::Other => "other",
        }
    }

    /// Nouns, verbs and adjectives.
    pub fn is_content(self) -> bool {
        !matches!(self, PosClass::Function | PosClass::Other)
    }
}

impl std::str::FromStr for PosClass {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "noun_sg" => PosClass::NounSg,
            "noun_pl" => PosClass::NounPl,
            "verb_past" => PosClass::VerbPast,
            "verb_present" => PosClass::VerbPresent,
            "verb_other" => PosClass::VerbOther,
            "adjective" => PosClass::Adjective,
            "function" => PosClass::Function,
            "other" => PosClass::Other,
            _ => return Err(format!("unknown POS class {s:?}")),
        })
    }
}

pub trait MorphologyProvider: Send + Sync {
    /// Idempotent: `lemma(lemma(w)) == lemma(w)`.
    fn lemma(&self, word: &str) -> Result<String>;

    fn pos_class(&self, word: &str, context: &str) -> Result<PosClass>;
}

/// Everything a full pipeline run needs from a backend.
pub trait Backend:
    NextTokenScorer
    + InfillScorer
    + EmbeddingProvider
    + EntailmentScorer
    + AcceptabilityScorer
    + MorphologyProvider
{
    /// Human-readable identity recorded in run manifests.
    fn identity(&self) -> String;
}

/// Borrowed handles to each scorer role. Roles may be served by different
/// backends.
#[derive(Clone, Copy)]
pub struct Scorers<'a> {
    pub lm: &'a dyn NextTokenScorer,
    pub infill: &'a dyn InfillScorer,
    pub embed: &'a dyn EmbeddingProvider,
    pub nli: &'a dyn EntailmentScorer,
    pub cola: &'a dyn AcceptabilityScorer,
    pub morph: &'a dyn MorphologyProvider,
}

impl<'a> Scorers<'a> {
    pub fn from_backend<B: Backend>(backend: &'a B) -> Self {
        Self {
            lm: backend,
            infill: backend,
            embed: backend,
            nli: backend,
            cola: backend,
            morph: backend,
        }
    }
}

/// Fetches logits and validates shape and finiteness. Debug builds also
/// assert that the softmax of the row sums to one.
pub fn checked_logits(scorer: &dyn NextTokenScorer, prefix: &[TokenId]) -> Result<Vec<f64>> {
    let logits = scorer.logits(prefix)?;
    let v = scorer.vocab_size();
    if logits.len() != v {
        return Err(Error::Protocol {
            message: format!("logits length {} != vocab size {v}", logits.len()),
            body: String::new(),
        });
    }
    if let Some(i) = logits.iter().position(|x| !x.is_finite()) {
        return Err(Error::Protocol {
            message: format!("non-finite logit at index {i}"),
            body: String::new(),
        });
    }
    debug_assert!(
        (softmax(&logits).iter().sum::<f64>() - 1.0).abs() <= 1e-4,
        "softmax does not normalize"
    );
    Ok(logits)
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    logits.iter().map(|x| x - lse).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    log_softmax(logits).into_iter().map(f64::exp).collect()
}

/// Sum of per-position log-probabilities of `seq` continuing `given`.
pub fn sequence_logprob(
    scorer: &dyn NextTokenScorer,
    seq: &[TokenId],
    given: &[TokenId],
) -> Result<f64> {
    if seq.is_empty() {
        return Err(Error::Input("sequence_logprob of an empty sequence".into()));
    }
    let v = scorer.vocab_size();
    let mut prefix = given.to_vec();
    let mut total = 0.0;
    for &tok in seq {
        if tok as usize >= v {
            return Err(Error::Vocabulary { token: tok, vocab_size: v });
        }
        let row = log_softmax(&checked_logits(scorer, &prefix)?);
        total += row[tok as usize];
        prefix.push(tok);
    }
    Ok(total)
}

/// Cosine similarity, defined as -1 when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        -1.0
    } else {
        dot / (na * nb)
    }
}
