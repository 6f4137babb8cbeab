//! Keyword extraction and expansion into disjunctive constraint sets.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constraints::{ClauseOrigin, ConstraintClause, ConstraintSet, ConstraintTerm};
use crate::error::{Error, Result};
use crate::scorers::{
    checked_logits, cosine, softmax, EmbeddingProvider, InfillScorer, MorphologyProvider,
    NextTokenScorer, PosClass,
};
use crate::text::{self, FunctionWords, SpanKind};
use crate::types::{ConstraintVariant, TokenId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KeywordConfig {
    /// Words whose probability falls below this are keywords.
    pub likelihood_threshold: f64,
    pub like_k: usize,
    pub similar_k: usize,
    /// One word per line, most frequent first. Mock backends fall back to
    /// their vocabulary when unset.
    pub dictionary_path: Option<PathBuf>,
}

impl Default for KeywordConfig {
    fn default() -> Self {
        Self {
            likelihood_threshold: 0.5,
            like_k: 4,
            similar_k: 4,
            dictionary_path: None,
        }
    }
}

impl KeywordConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.likelihood_threshold > 0.0 && self.likelihood_threshold < 1.0) {
            return Err(Error::Input(format!(
                "likelihood_threshold {} must lie in (0,1)",
                self.likelihood_threshold
            )));
        }
        Ok(())
    }

    /// Number of embedding keywords for a sentence of `words` words:
    /// half the word count, rounded down, at least one.
    pub fn embedding_keyword_count(words: usize) -> usize {
        (words / 2).max(1)
    }
}

/// A word list with each entry's lemma, part of speech and embedding
/// precomputed against the active providers.
#[derive(Debug, Clone)]
pub struct Dictionary {
    words: Vec<String>,
    lemmas: Vec<String>,
    pos: Vec<PosClass>,
    vectors: Vec<Vec<f64>>,
}

impl Dictionary {
    pub fn read_words(path: &Path) -> Result<Vec<String>> {
        let text = std::fs::read_to_string(path)?;
        Ok(text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect())
    }

    pub fn build(
        words: Vec<String>,
        morph: &dyn MorphologyProvider,
        embed: &dyn EmbeddingProvider,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        let words: Vec<String> = words
            .into_iter()
            .map(|w| w.to_lowercase())
            .filter(|w| seen.insert(w.clone()))
            .collect();
        let mut lemmas = Vec::with_capacity(words.len());
        let mut pos = Vec::with_capacity(words.len());
        let mut vectors = Vec::with_capacity(words.len());
        for w in &words {
            lemmas.push(morph.lemma(w)?);
            pos.push(morph.pos_class(w, w)?);
            vectors.push(embed.embed(w)?);
        }
        Ok(Self {
            words,
            lemmas,
            pos,
            vectors,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, i: usize) -> &str {
        &self.words[i]
    }

    pub fn lemma(&self, i: usize) -> &str {
        &self.lemmas[i]
    }

    pub fn pos(&self, i: usize) -> PosClass {
        self.pos[i]
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i]
    }

    pub fn position(&self, word: &str) -> Option<usize> {
        let w = word.to_lowercase();
        self.words.iter().position(|d| *d == w)
    }

    /// Dictionary indices ranked by cosine similarity to `query`,
    /// descending, ties by dictionary order.
    pub fn ranked_by_similarity(&self, query: &[f64]) -> Vec<(usize, f64)> {
        let mut scored: Vec<(usize, f64)> = self
            .vectors
            .iter()
            .enumerate()
            .map(|(i, v)| (i, cosine(query, v)))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored
    }
}

/// A sentence tokenized span by span, remembering where each word starts.
struct TokenizedSentence<'a> {
    tokens: Vec<TokenId>,
    /// (word text, index of its first token)
    words: Vec<(&'a str, usize)>,
}

fn tokenize_sentence<'a>(sentence: &'a str, lm: &dyn NextTokenScorer) -> Result<TokenizedSentence<'a>> {
    let mut tokens = Vec::new();
    let mut words = Vec::new();
    for (i, span) in text::spans(sentence).into_iter().enumerate() {
        let s = span.as_str(sentence);
        let piece = lm.tokenize_word(s, i == 0)?;
        if span.kind == SpanKind::Word && !piece.is_empty() {
            words.push((s, tokens.len()));
        }
        tokens.extend(piece);
    }
    Ok(TokenizedSentence { tokens, words })
}

fn dedup_case_insensitive(words: Vec<&str>) -> Vec<String> {
    let mut seen = HashSet::new();
    words
        .into_iter()
        .filter(|w| seen.insert(w.to_lowercase()))
        .map(str::to_string)
        .collect()
}

/// Unigrams most similar to the mean embedding of the sentence.
pub fn extract_embedding_keywords(
    sentence: &str,
    provider: &dyn EmbeddingProvider,
) -> Result<Vec<String>> {
    let words = text::words(sentence);
    if words.is_empty() {
        return Ok(Vec::new());
    }
    let dim = provider.dim();
    let vectors = words.iter().map(|w| provider.embed(w)).collect::<Result<Vec<_>>>()?;
    let mut mean = vec![0.0; dim];
    for v in &vectors {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= words.len() as f64;
    }
    let stop = FunctionWords::bundled();
    let mut seen = HashSet::new();
    let mut scored: Vec<(usize, f64)> = Vec::new();
    for (i, (w, v)) in words.iter().zip(&vectors).enumerate() {
        if stop.contains(w) || !seen.insert(w.to_lowercase()) || v.iter().all(|x| *x == 0.0) {
            continue;
        }
        scored.push((i, cosine(v, &mean)));
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let count = KeywordConfig::embedding_keyword_count(words.len());
    Ok(scored
        .into_iter()
        .take(count)
        .map(|(i, _)| words[i].to_string())
        .collect())
}

/// Words whose first token is unlikely under a left-to-right model given
/// the preceding sentence tokens. The sentence is conditioned on the
/// end-of-sequence token as its start marker.
pub fn extract_autoregressive_keywords(
    sentence: &str,
    lm: &dyn NextTokenScorer,
    cfg: &KeywordConfig,
) -> Result<Vec<String>> {
    let tokenized = tokenize_sentence(sentence, lm)?;
    let mut prefix = vec![lm.eos_id()];
    prefix.extend_from_slice(&tokenized.tokens);
    let mut picked = Vec::new();
    for &(word, start) in &tokenized.words {
        let probs = softmax(&checked_logits(lm, &prefix[..start + 1])?);
        if probs[tokenized.tokens[start] as usize] < cfg.likelihood_threshold {
            picked.push(word);
        }
    }
    Ok(dedup_case_insensitive(picked))
}

/// Words whose first token is unlikely when masked and infilled.
pub fn extract_infill_keywords(
    sentence: &str,
    lm: &dyn NextTokenScorer,
    infill: &dyn InfillScorer,
    cfg: &KeywordConfig,
) -> Result<Vec<String>> {
    let tokenized = tokenize_sentence(sentence, lm)?;
    let mut picked = Vec::new();
    for &(word, start) in &tokenized.words {
        if infill.infill_prob(&tokenized.tokens, start)? < cfg.likelihood_threshold {
            picked.push(word);
        }
    }
    Ok(dedup_case_insensitive(picked))
}

/// First `k` dictionary words sharing `word`'s lemma, in dictionary order.
pub fn expand_like_words(
    word: &str,
    morph: &dyn MorphologyProvider,
    dictionary: &Dictionary,
    k: usize,
) -> Result<Vec<String>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    let lower = word.to_lowercase();
    let lemma = morph.lemma(&lower)?;
    Ok((0..dictionary.len())
        .filter(|&i| dictionary.word(i) != lower && dictionary.lemma(i) == lemma)
        .take(k)
        .map(|i| dictionary.word(i).to_string())
        .collect())
}

/// Top `k` dictionary words by cosine similarity to `word`.
pub fn expand_similar_words(
    word: &str,
    provider: &dyn EmbeddingProvider,
    dictionary: &Dictionary,
    k: usize,
) -> Result<Vec<String>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    let query = provider.embed(word)?;
    if query.iter().all(|x| *x == 0.0) {
        return Ok(Vec::new());
    }
    let lower = word.to_lowercase();
    Ok(dictionary
        .ranked_by_similarity(&query)
        .into_iter()
        .filter(|(i, _)| dictionary.word(*i) != lower)
        .take(k)
        .map(|(i, _)| dictionary.word(i).to_string())
        .collect())
}

/// Everything constraint construction needs besides the keywords.
#[derive(Clone, Copy)]
pub struct ExpansionContext<'a> {
    pub lm: &'a dyn NextTokenScorer,
    pub morph: &'a dyn MorphologyProvider,
    pub embed: &'a dyn EmbeddingProvider,
    pub dictionary: &'a Dictionary,
    pub cfg: &'a KeywordConfig,
}

/// One clause per keyword, in keyword order. The keyword is always the
/// first alternative.
pub fn build_constraint_sets(
    keywords: &[String],
    variant: ConstraintVariant,
    ordered: bool,
    ctx: ExpansionContext<'_>,
) -> Result<ConstraintSet> {
    let mut clauses = Vec::with_capacity(keywords.len());
    for keyword in keywords {
        let mut surfaces = vec![(keyword.clone(), ClauseOrigin::Original)];
        if variant != ConstraintVariant::Original {
            for w in expand_like_words(keyword, ctx.morph, ctx.dictionary, ctx.cfg.like_k)? {
                surfaces.push((w, ClauseOrigin::Like));
            }
        }
        if variant == ConstraintVariant::LikeSimilar {
            for w in expand_similar_words(keyword, ctx.embed, ctx.dictionary, ctx.cfg.similar_k)? {
                surfaces.push((w, ClauseOrigin::Similar));
            }
        }
        let mut seen = HashSet::new();
        let mut alternatives = Vec::with_capacity(surfaces.len());
        let mut origin = ClauseOrigin::Original;
        for (surface, o) in surfaces {
            if !seen.insert(surface.to_lowercase()) {
                continue;
            }
            let tokens = ctx.lm.tokenize_word(&surface, false)?;
            if tokens.is_empty() {
                continue;
            }
            origin = origin.max_with(o);
            alternatives.push(ConstraintTerm { surface, tokens });
        }
        if !alternatives.is_empty() {
            clauses.push(ConstraintClause { alternatives, origin });
        }
    }
    Ok(ConstraintSet::new(clauses, ordered))
}

impl ClauseOrigin {
    /// Widest expansion present in a clause.
    fn max_with(self, other: ClauseOrigin) -> ClauseOrigin {
        use ClauseOrigin::*;
        match (self, other) {
            (Similar, _) | (_, Similar) => Similar,
            (Like, _) | (_, Like) => Like,
            _ => Original,
        }
    }
}
