//! Word-substitution obfuscator used as a fallback when no generated
//! candidate passes the filter. Function words and punctuation stay frozen;
//! each content word is replaced by a draw from a mix of an embedding
//! similarity distribution and an acceptability distribution.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keywords::Dictionary;
use crate::scorers::{cosine, AcceptabilityScorer, EmbeddingProvider, MorphologyProvider, PosClass, Scorers};
use crate::text::{self, FunctionWords, Span, SpanKind};
use crate::types::ScoreDistribution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StyloConfig {
    /// Similar words considered per position.
    pub top_k: usize,
    /// Acceptability floor: candidates scoring at or below it are dropped.
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub sample_seed: u64,
}

impl Default for StyloConfig {
    fn default() -> Self {
        Self {
            top_k: 10,
            delta: 0.5,
            alpha: 0.5,
            beta: 0.5,
            sample_seed: 0,
        }
    }
}

impl StyloConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alpha < 0.0 || self.beta < 0.0 || self.alpha + self.beta <= 0.0 {
            return Err(Error::Input("alpha and beta must be >= 0 with a positive sum".into()));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::Input("delta must lie in [0,1]".into()));
        }
        Ok(())
    }
}

/// One flag per word or punctuation span: true when the span must be kept.
pub fn freeze_mask(
    sentence: &str,
    morph: &dyn MorphologyProvider,
    function_words: &FunctionWords,
) -> Result<Vec<bool>> {
    text::spans(sentence)
        .iter()
        .map(|span| {
            let word = span.as_str(sentence);
            Ok(span.kind == SpanKind::Punct
                || function_words.contains(word)
                || !morph.pos_class(word, sentence)?.is_content())
        })
        .collect()
}

/// The `top_k` dictionary words closest to `word` among those sharing its
/// POS class, plus `word` itself, weighted by min-max normalized cosine
/// similarity. Empty when the dictionary has no compatible word.
pub fn similarity_distribution(
    word: &str,
    pos: PosClass,
    embed: &dyn EmbeddingProvider,
    dictionary: &Dictionary,
    top_k: usize,
) -> Result<ScoreDistribution<String>> {
    let lower = word.to_lowercase();
    let query = embed.embed(&lower)?;
    let mut ranked: Vec<(String, f64)> = dictionary
        .ranked_by_similarity(&query)
        .into_iter()
        .filter(|&(i, _)| dictionary.pos(i) == pos && dictionary.word(i) != lower)
        .map(|(i, s)| (dictionary.word(i).to_string(), s))
        .collect();
    if ranked.is_empty() || top_k == 0 {
        return Ok(ScoreDistribution::empty());
    }
    let own = (lower, cosine(&query, &query));
    let at = ranked.partition_point(|(_, s)| *s >= own.1);
    ranked.insert(at, own);
    ranked.truncate(top_k);
    let (words, sims): (Vec<String>, Vec<f64>) = ranked.into_iter().unzip();
    Ok(ScoreDistribution::min_max(words, &sims))
}

fn join_parts(parts: &[&str]) -> String {
    parts
        .iter()
        .map(|p| p.trim())
        .filter(|p| !p.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Acceptability of the sentence with each candidate slotted between the
/// already rewritten prefix and the original suffix. Candidates at or below
/// `delta` are dropped; the rest are min-max normalized.
pub fn grammar_distribution(
    candidates: &[String],
    generated_prefix: &str,
    original_suffix: &str,
    cola: &dyn AcceptabilityScorer,
    delta: f64,
) -> Result<ScoreDistribution<String>> {
    let mut kept = Vec::new();
    let mut scores = Vec::new();
    for cand in candidates {
        let g = cola.accept_prob(&join_parts(&[generated_prefix, cand, original_suffix]))?;
        if g > delta {
            kept.push(cand.clone());
            scores.push(g);
        }
    }
    Ok(ScoreDistribution::min_max(kept, &scores))
}

/// `alpha * s + beta * g` on the words both distributions support.
pub fn mix(
    similarity: &ScoreDistribution<String>,
    grammar: &ScoreDistribution<String>,
    alpha: f64,
    beta: f64,
) -> ScoreDistribution<String> {
    let (words, masses): (Vec<String>, Vec<f64>) = similarity
        .iter()
        .filter_map(|(w, s)| grammar.weight_of(w).map(|g| (w.clone(), alpha * s + beta * g)))
        .unzip();
    ScoreDistribution::from_masses(words, masses)
}

fn match_case(replacement: &str, original: &str) -> String {
    let mut chars = replacement.chars();
    match (original.chars().next(), chars.next()) {
        (Some(o), Some(first)) if o.is_uppercase() => first.to_uppercase().chain(chars).collect(),
        _ => replacement.to_string(),
    }
}

/// Rewrites the content words of `sentence` left to right. Whitespace,
/// punctuation and frozen words are copied verbatim.
pub fn obfuscate_sentence(
    sentence: &str,
    scorers: &Scorers<'_>,
    dictionary: &Dictionary,
    function_words: &FunctionWords,
    cfg: &StyloConfig,
) -> Result<String> {
    cfg.validate()?;
    let spans: Vec<Span> = text::spans(sentence);
    let frozen = freeze_mask(sentence, scorers.morph, function_words)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.sample_seed);
    let mut out = String::with_capacity(sentence.len());
    let mut cursor = 0;
    for (span, &keep) in spans.iter().zip(&frozen) {
        out.push_str(&sentence[cursor..span.start]);
        cursor = span.end;
        let word = span.as_str(sentence);
        if keep {
            out.push_str(word);
            continue;
        }
        let pos = scorers.morph.pos_class(word, sentence)?;
        let similar = similarity_distribution(word, pos, scorers.embed, dictionary, cfg.top_k)?;
        let combined = if cfg.beta == 0.0 {
            similar
        } else {
            let grammar = grammar_distribution(
                similar.support(),
                &out,
                &sentence[span.end..],
                scorers.cola,
                cfg.delta,
            )?;
            mix(&similar, &grammar, cfg.alpha, cfg.beta)
        };
        if combined.is_empty() {
            out.push_str(word);
            continue;
        }
        let pick = WeightedIndex::new(combined.weights())
            .map_err(|e| Error::Input(format!("bad replacement weights: {e}")))?
            .sample(&mut rng);
        out.push_str(&match_case(&combined.support()[pick], word));
    }
    out.push_str(&sentence[cursor..]);
    Ok(out)
}
