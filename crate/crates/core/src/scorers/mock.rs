//! Deterministic table-driven backend.
//!
//! Tables are loaded from a line-oriented UTF-8 file. Sections start with a
//! header line and hold one whitespace-separated record per line:
//!
//! ```text
//! #VOCAB            one token per line; line 0 is end-of-sequence
//! </s>
//! <unk>
//! the
//! ##s               continuation piece, glued to the previous token
//! #NGRAM 2          context tokens (n-1), next token, probability
//! the cat 0.5
//! * cat 0.1         `*` context: fallback row for unseen contexts
//! #EMBED 3          word followed by d components
//! cat 0.1 0.2 0.3
//! #NLI              key probability; key is pair_key(premise, hypothesis)
//! 0f3c9a2b11d07e44 0.9
//! * overlap         fallback: constant or unigram-F1 overlap
//! #COLA             key probability; key is text_key(sentence)
//! * 0.8
//! #LEMMA            word lemma [pos]
//! walks walk verb_present
//! ```
//!
//! Lines starting with `//` are comments. Listed probabilities in an n-gram
//! row may sum to less than one; the remainder is spread uniformly over the
//! unlisted tokens. Contexts shorter than n-1 are left-padded with token 0.

use std::collections::HashMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scorers::{
    AcceptabilityScorer, Backend, EmbeddingProvider, EntailmentScorer, InfillScorer,
    MorphologyProvider, NextTokenScorer, PosClass,
};
use crate::text::{self, FunctionWords, SpanKind};
use crate::types::{TokenId, TokenSequence};

/// Logit standing in for a zero-probability token; finite, and its
/// exponential underflows to exactly zero.
pub const ZERO_PROB_LOGIT: f64 = -1000.0;

const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// 16-hex-digit table key for a sentence.
pub fn text_key(text: &str) -> String {
    let digest = Sha256::digest(text.trim().as_bytes());
    hex::encode(&digest[..8])
}

/// Table key for an ordered (premise, hypothesis) pair.
pub fn pair_key(premise: &str, hypothesis: &str) -> String {
    text_key(&format!("{}\u{1f}{}", premise.trim(), hypothesis.trim()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NliFallback {
    Constant(f64),
    /// Unigram F1 between premise and hypothesis.
    Overlap,
}

#[derive(Debug, Clone)]
pub struct MockModel {
    vocab: Vec<String>,
    index: HashMap<String, TokenId>,
    unk: Option<TokenId>,
    order: usize,
    rows: HashMap<Vec<TokenId>, Vec<f64>>,
    default_row: Vec<f64>,
    dim: usize,
    embeddings: HashMap<String, Vec<f64>>,
    nli: HashMap<String, f64>,
    nli_fallback: NliFallback,
    cola: HashMap<String, f64>,
    cola_fallback: f64,
    lemmas: HashMap<String, (String, Option<PosClass>)>,
    identity: String,
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Vocab,
    Ngram,
    Embed,
    Nli,
    Cola,
    Lemma,
}

fn table_err(line: usize, message: impl Into<String>) -> Error {
    Error::MockTable {
        line,
        message: message.into(),
    }
}

fn parse_prob(raw: &str, line: usize) -> Result<f64> {
    let p: f64 = raw
        .parse()
        .map_err(|_| table_err(line, format!("bad probability {raw:?}")))?;
    if !(0.0..=1.0).contains(&p) {
        return Err(table_err(line, format!("probability {p} outside [0,1]")));
    }
    Ok(p)
}

impl MockModel {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut model = Self::parse(&text)?;
        model.identity = format!("mock:{}#{}", path.display(), model.identity);
        Ok(model)
    }

    pub fn parse(source: &str) -> Result<Self> {
        let mut section = Section::None;
        let mut vocab: Vec<String> = Vec::new();
        let mut order = 1usize;
        let mut listed: HashMap<Vec<TokenId>, Vec<(TokenId, f64, usize)>> = HashMap::new();
        let mut default_listed: Vec<(TokenId, f64, usize)> = Vec::new();
        let mut dim = 0usize;
        let mut embeddings = HashMap::new();
        let mut nli = HashMap::new();
        let mut nli_fallback = NliFallback::Constant(0.5);
        let mut cola = HashMap::new();
        let mut cola_fallback = 1.0;
        let mut lemmas = HashMap::new();
        let mut index: HashMap<String, TokenId> = HashMap::new();

        for (lineno, raw) in source.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with("//") {
                continue;
            }
            if let Some(header) = line.strip_prefix('#').filter(|h| !h.starts_with('#')) {
                let mut parts = header.split_whitespace();
                section = match parts.next() {
                    Some("VOCAB") => Section::Vocab,
                    Some("NGRAM") => {
                        order = parts
                            .next()
                            .and_then(|n| n.parse().ok())
                            .filter(|n| *n >= 1)
                            .ok_or_else(|| table_err(lineno, "#NGRAM needs an order n >= 1"))?;
                        Section::Ngram
                    }
                    Some("EMBED") => {
                        dim = parts
                            .next()
                            .and_then(|n| n.parse().ok())
                            .ok_or_else(|| table_err(lineno, "#EMBED needs a dimension"))?;
                        Section::Embed
                    }
                    Some("NLI") => Section::Nli,
                    Some("COLA") => Section::Cola,
                    Some("LEMMA") => Section::Lemma,
                    other => return Err(table_err(lineno, format!("unknown section {other:?}"))),
                };
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match section {
                Section::None => return Err(table_err(lineno, "record outside any section")),
                Section::Vocab => {
                    if fields.len() != 1 {
                        return Err(table_err(lineno, "vocabulary lines hold one token"));
                    }
                    let tok = fields[0].to_string();
                    if index.insert(tok.clone(), vocab.len() as TokenId).is_some() {
                        return Err(table_err(lineno, format!("duplicate token {tok:?}")));
                    }
                    vocab.push(tok);
                }
                Section::Ngram => {
                    if fields.len() != order + 1 {
                        return Err(table_err(
                            lineno,
                            format!("expected {} fields for an order-{order} record", order + 1),
                        ));
                    }
                    let lookup = |w: &str| {
                        index
                            .get(w)
                            .copied()
                            .ok_or_else(|| table_err(lineno, format!("token {w:?} not in #VOCAB")))
                    };
                    let ctx_fields = &fields[..order - 1];
                    let next = lookup(fields[order - 1])?;
                    let p = parse_prob(fields[order], lineno)?;
                    if !ctx_fields.is_empty() && ctx_fields.iter().all(|f| *f == "*") {
                        default_listed.push((next, p, lineno));
                    } else if ctx_fields.contains(&"*") {
                        return Err(table_err(lineno, "partial wildcard contexts are not supported"));
                    } else if ctx_fields.is_empty() {
                        default_listed.push((next, p, lineno));
                    } else {
                        let ctx = ctx_fields.iter().map(|w| lookup(w)).collect::<Result<Vec<_>>>()?;
                        listed.entry(ctx).or_default().push((next, p, lineno));
                    }
                }
                Section::Embed => {
                    if fields.len() != dim + 1 {
                        return Err(table_err(lineno, format!("expected word and {dim} components")));
                    }
                    let v = fields[1..]
                        .iter()
                        .map(|x| x.parse::<f64>().ok().filter(|x| x.is_finite()))
                        .collect::<Option<Vec<f64>>>()
                        .ok_or_else(|| table_err(lineno, "bad embedding component"))?;
                    embeddings.insert(fields[0].to_lowercase(), v);
                }
                Section::Nli => {
                    if fields.len() != 2 {
                        return Err(table_err(lineno, "#NLI records are `key prob`"));
                    }
                    if fields[0] == "*" {
                        nli_fallback = if fields[1] == "overlap" {
                            NliFallback::Overlap
                        } else {
                            NliFallback::Constant(parse_prob(fields[1], lineno)?)
                        };
                    } else {
                        nli.insert(fields[0].to_string(), parse_prob(fields[1], lineno)?);
                    }
                }
                Section::Cola => {
                    if fields.len() != 2 {
                        return Err(table_err(lineno, "#COLA records are `key prob`"));
                    }
                    let p = parse_prob(fields[1], lineno)?;
                    if fields[0] == "*" {
                        cola_fallback = p;
                    } else {
                        cola.insert(fields[0].to_string(), p);
                    }
                }
                Section::Lemma => {
                    if !(2..=3).contains(&fields.len()) {
                        return Err(table_err(lineno, "#LEMMA records are `word lemma [pos]`"));
                    }
                    let pos = fields
                        .get(2)
                        .map(|p| p.parse::<PosClass>().map_err(|e| table_err(lineno, e)))
                        .transpose()?;
                    lemmas.insert(fields[0].to_lowercase(), (fields[1].to_lowercase(), pos));
                }
            }
        }

        if vocab.is_empty() {
            return Err(table_err(0, "missing #VOCAB section"));
        }
        for (word, (lemma, _)) in &lemmas {
            if let Some((again, _)) = lemmas.get(lemma) {
                if again != lemma {
                    return Err(table_err(
                        0,
                        format!("lemma map not idempotent: {word} -> {lemma} -> {again}"),
                    ));
                }
            }
        }

        let v = vocab.len();
        let build_row = |entries: &[(TokenId, f64, usize)]| -> Result<Vec<f64>> {
            let mut row = vec![f64::NAN; v];
            let mut total = 0.0;
            for &(tok, p, line) in entries {
                if !row[tok as usize].is_nan() {
                    return Err(table_err(line, "duplicate next token in row"));
                }
                row[tok as usize] = p;
                total += p;
            }
            let line = entries.first().map_or(0, |e| e.2);
            if total > 1.0 + NORMALIZATION_TOLERANCE {
                return Err(table_err(line, format!("row sums to {total} > 1")));
            }
            let unlisted = row.iter().filter(|p| p.is_nan()).count();
            let rest = (1.0 - total).max(0.0);
            if unlisted == 0 && rest > NORMALIZATION_TOLERANCE {
                return Err(table_err(line, format!("row sums to {total} < 1")));
            }
            let share = if unlisted > 0 { rest / unlisted as f64 } else { 0.0 };
            for p in row.iter_mut().filter(|p| p.is_nan()) {
                *p = share;
            }
            Ok(row)
        };
        let default_row = if default_listed.is_empty() {
            vec![1.0 / v as f64; v]
        } else {
            build_row(&default_listed)?
        };
        let rows = listed
            .iter()
            .map(|(ctx, entries)| Ok((ctx.clone(), build_row(entries)?)))
            .collect::<Result<HashMap<_, _>>>()?;

        let unk = index.get("<unk>").copied();
        Ok(Self {
            vocab,
            index,
            unk,
            order,
            rows,
            default_row,
            dim,
            embeddings,
            nli,
            nli_fallback,
            cola,
            cola_fallback,
            lemmas,
            identity: format!("mock#{}", text_key(source)),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn token_id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    /// The (n-1)-token conditioning context for `prefix`.
    pub fn context_of(&self, prefix: &[TokenId]) -> Vec<TokenId> {
        let n = self.order - 1;
        let mut ctx = vec![0; n.saturating_sub(prefix.len())];
        ctx.extend_from_slice(&prefix[prefix.len().saturating_sub(n)..]);
        ctx
    }

    /// Next-token distribution after `prefix`.
    pub fn distribution(&self, prefix: &[TokenId]) -> &[f64] {
        self.rows
            .get(&self.context_of(prefix))
            .unwrap_or(&self.default_row)
    }

    /// Whole-word dictionary entries: vocabulary tokens that are neither
    /// special markers, continuation pieces nor punctuation.
    pub fn word_list(&self) -> Vec<String> {
        self.vocab
            .iter()
            .skip(1)
            .filter(|t| {
                !t.starts_with("##")
                    && !(t.starts_with('<') && t.ends_with('>'))
                    && t.chars().next().is_some_and(char::is_alphanumeric)
            })
            .cloned()
            .collect()
    }

    fn piece_ids(&self, word: &str) -> Result<Vec<TokenId>> {
        if let Some(&id) = self.index.get(word) {
            return Ok(vec![id]);
        }
        let mut out = Vec::new();
        let mut rest = word;
        let mut first = true;
        while !rest.is_empty() {
            let mut found = None;
            let mut cut = rest.len();
            while cut > 0 {
                if rest.is_char_boundary(cut) {
                    let piece = &rest[..cut];
                    let key = if first { piece.to_string() } else { format!("##{piece}") };
                    if let Some(&id) = self.index.get(&key) {
                        found = Some((id, cut));
                        break;
                    }
                }
                cut -= 1;
            }
            match found {
                Some((id, cut)) => {
                    out.push(id);
                    rest = &rest[cut..];
                    first = false;
                }
                None => {
                    return match self.unk {
                        Some(unk) => Ok(vec![unk]),
                        None => Err(Error::Input(format!("cannot tokenize {word:?} with mock vocabulary"))),
                    };
                }
            }
        }
        Ok(out)
    }
}

impl NextTokenScorer for MockModel {
    fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    fn eos_id(&self) -> TokenId {
        0
    }

    fn logits(&self, prefix: &[TokenId]) -> Result<Vec<f64>> {
        if let Some(&bad) = prefix.iter().find(|t| **t as usize >= self.vocab.len()) {
            return Err(Error::Vocabulary {
                token: bad,
                vocab_size: self.vocab.len(),
            });
        }
        Ok(self
            .distribution(prefix)
            .iter()
            .map(|&p| if p > 0.0 { p.ln() } else { ZERO_PROB_LOGIT })
            .collect())
    }

    fn tokenize(&self, text: &str) -> Result<TokenSequence> {
        let lower = text.to_lowercase();
        let mut out = Vec::new();
        for span in text::spans(&lower) {
            out.extend(self.piece_ids(span.as_str(&lower))?);
        }
        Ok(out)
    }

    fn detokenize(&self, tokens: &[TokenId]) -> Result<String> {
        let mut out = String::new();
        let mut glue_next = false;
        for &t in tokens {
            let piece = self.vocab.get(t as usize).ok_or(Error::Vocabulary {
                token: t,
                vocab_size: self.vocab.len(),
            })?;
            if t == self.eos_id() {
                continue;
            }
            if let Some(cont) = piece.strip_prefix("##") {
                out.push_str(cont);
                continue;
            }
            let closing = matches!(piece.as_str(), "." | "," | ";" | ":" | "!" | "?" | ")" | "]" | "'" | "%");
            if !out.is_empty() && !closing && !glue_next {
                out.push(' ');
            }
            out.push_str(piece);
            glue_next = matches!(piece.as_str(), "(" | "[");
        }
        Ok(out)
    }
}

impl InfillScorer for MockModel {
    /// Bidirectional n-gram infill: P(v | left) times the probability of the
    /// following n-1 tokens given v, normalized over the vocabulary.
    fn infill_prob(&self, ids: &[TokenId], mask_index: usize) -> Result<f64> {
        if mask_index >= ids.len() {
            return Err(Error::Input(format!(
                "mask index {mask_index} outside sequence of length {}",
                ids.len()
            )));
        }
        if let Some(&bad) = ids.iter().find(|t| **t as usize >= self.vocab.len()) {
            return Err(Error::Vocabulary {
                token: bad,
                vocab_size: self.vocab.len(),
            });
        }
        let right_end = (mask_index + self.order).min(ids.len());
        let mut work = ids[..right_end].to_vec();
        let mut masses = Vec::with_capacity(self.vocab.len());
        for v in 0..self.vocab.len() as TokenId {
            work[mask_index] = v;
            let mut m = self.distribution(&work[..mask_index])[v as usize];
            for j in mask_index + 1..right_end {
                m *= self.distribution(&work[..j])[work[j] as usize];
            }
            masses.push(m);
        }
        let total: f64 = masses.iter().sum();
        if total <= 0.0 {
            return Ok(0.0);
        }
        Ok(masses[ids[mask_index] as usize] / total)
    }
}

impl EmbeddingProvider for MockModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, word: &str) -> Result<Vec<f64>> {
        Ok(self
            .embeddings
            .get(&word.to_lowercase())
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.dim]))
    }
}

impl EntailmentScorer for MockModel {
    fn entail_prob(&self, premise: &str, hypothesis: &str) -> Result<f64> {
        if let Some(&p) = self.nli.get(&pair_key(premise, hypothesis)) {
            return Ok(p);
        }
        if premise.trim() == hypothesis.trim() {
            return Ok(1.0);
        }
        Ok(match self.nli_fallback {
            NliFallback::Constant(p) => p,
            NliFallback::Overlap => text::unigram_f1(premise, hypothesis),
        })
    }
}

impl AcceptabilityScorer for MockModel {
    fn accept_prob(&self, sentence: &str) -> Result<f64> {
        Ok(self
            .cola
            .get(&text_key(sentence))
            .copied()
            .unwrap_or(self.cola_fallback))
    }
}

impl MorphologyProvider for MockModel {
    fn lemma(&self, word: &str) -> Result<String> {
        let w = word.to_lowercase();
        Ok(self.lemmas.get(&w).map_or(w, |(l, _)| l.clone()))
    }

    fn pos_class(&self, word: &str, _context: &str) -> Result<PosClass> {
        let w = word.to_lowercase();
        if let Some((_, Some(pos))) = self.lemmas.get(&w) {
            return Ok(*pos);
        }
        let is_word = text::spans(&w).first().is_some_and(|s| s.kind == SpanKind::Word);
        Ok(if FunctionWords::bundled().contains(&w) || !is_word {
            PosClass::Function
        } else {
            PosClass::Other
        })
    }
}

impl Backend for MockModel {
    fn identity(&self) -> String {
        self.identity.clone()
    }
}
