//! Independent oracles and fixtures shared by the integration tests and the
//! acceptance target. Nothing here calls the engine function it checks.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet};
use std::path::PathBuf;

use obfusc_core::constraints::{ClauseOrigin, ConstraintClause, ConstraintTerm};
use obfusc_core::keywords::Dictionary;
use obfusc_core::pipeline::{Engine, PipelineConfig};
use obfusc_core::scorers::{AcceptabilityScorer, MockModel, Scorers};
use obfusc_core::text::FunctionWords;
use obfusc_core::types::TokenId;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn tiny_model() -> MockModel {
    MockModel::from_path(fixture_path("tiny.tbl")).expect("tiny fixture parses")
}

pub fn engine<'a>(m: &'a MockModel, cfg: PipelineConfig) -> Engine<'a> {
    let dict = Dictionary::build(m.word_list(), m, m).expect("dictionary");
    Engine::new(Scorers::from_backend(m), dict, cfg).expect("valid config")
}

// ---------------------------------------------------------------- decoding

/// Builds an order-2 mock from `rows[ctx] = [(next, prob)]`; unlisted
/// continuations get zero probability when a row sums to one.
pub fn bigram_mock(rows: &[Vec<(usize, f64)>]) -> MockModel {
    let v = rows.len();
    let name = |i: usize| if i == 0 { "</s>".to_string() } else { format!("t{i}") };
    let mut text = String::from("#VOCAB\n");
    for i in 0..v {
        text.push_str(&name(i));
        text.push('\n');
    }
    text.push_str("#NGRAM 2\n");
    for (ctx, row) in rows.iter().enumerate() {
        for &(next, p) in row {
            text.push_str(&format!("{} {} {p}\n", name(ctx), name(next)));
        }
    }
    MockModel::parse(&text).unwrap()
}

pub fn clause(alternatives: &[&[TokenId]]) -> ConstraintClause {
    ConstraintClause {
        alternatives: alternatives
            .iter()
            .map(|t| ConstraintTerm {
                surface: String::new(),
                tokens: t.to_vec(),
            })
            .collect(),
        origin: ClauseOrigin::Original,
    }
}

pub fn repeats_trigram(seq: &[TokenId]) -> bool {
    let mut seen = HashSet::new();
    seq.windows(3).any(|w| !seen.insert(w.to_vec()))
}

/// End positions at which some alternative of the clause occurs.
fn occurrence_ends(alternatives: &[Vec<TokenId>], seq: &[TokenId]) -> Vec<usize> {
    (0..seq.len())
        .filter(|&end| {
            alternatives
                .iter()
                .any(|a| !a.is_empty() && end + 1 >= a.len() && seq[end + 1 - a.len()..=end] == a[..])
        })
        .collect()
}

/// Clause count by exhaustive search: unordered counts every clause with an
/// occurrence; ordered finds the longest clause prefix admitting
/// non-decreasing occurrence ends.
pub fn oracle_satisfied(clauses: &[Vec<Vec<TokenId>>], ordered: bool, seq: &[TokenId]) -> usize {
    let ends: Vec<Vec<usize>> = clauses.iter().map(|c| occurrence_ends(c, seq)).collect();
    if !ordered {
        return ends.iter().filter(|e| !e.is_empty()).count();
    }
    fn placeable(ends: &[Vec<usize>], from: usize) -> bool {
        match ends.split_first() {
            None => true,
            Some((first, rest)) => first.iter().any(|&e| e >= from && placeable(rest, e)),
        }
    }
    (0..=clauses.len()).rev().find(|&j| placeable(&ends[..j], 0)).unwrap_or(0)
}

/// Every nonzero-probability, trigram-free sequence that ends in EOS or
/// reaches `max_len`, with its log-probability, plus the number of such
/// prefixes at each depth. A depth is marked `usize::MAX` when some prefix
/// has no admissible continuation.
pub fn enumerate(m: &MockModel, max_len: usize) -> (Vec<(Vec<TokenId>, f64)>, Vec<usize>) {
    fn walk(
        m: &MockModel,
        seq: &mut Vec<TokenId>,
        lp: f64,
        max_len: usize,
        out: &mut Vec<(Vec<TokenId>, f64)>,
        depth: &mut Vec<usize>,
    ) {
        if !seq.is_empty() {
            depth[seq.len() - 1] = depth[seq.len() - 1].saturating_add(1);
        }
        if seq.last() == Some(&0) || seq.len() == max_len {
            out.push((seq.clone(), lp));
            return;
        }
        let mut prefix = vec![0];
        prefix.extend_from_slice(seq);
        let dist = m.distribution(&prefix).to_vec();
        let mut extended = false;
        for (t, &p) in dist.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            seq.push(t as TokenId);
            if !repeats_trigram(seq) {
                extended = true;
                walk(m, seq, lp + p.ln(), max_len, out, depth);
            }
            seq.pop();
        }
        if !extended {
            // dead end: the decoder would fall back to zero-probability tokens
            depth[seq.len()] = usize::MAX;
        }
    }
    let mut out = Vec::new();
    let mut depth = vec![0; max_len];
    walk(m, &mut Vec::new(), 0.0, max_len, &mut out, &mut depth);
    (out, depth)
}

/// Rows with one or two successors each, so the search tree stays small.
pub fn random_sparse_rows(rng: &mut ChaCha8Rng, v: usize, single_bias: f64) -> Vec<Vec<(usize, f64)>> {
    (0..v)
        .map(|_| {
            let a = rng.gen_range(0..v);
            if rng.gen_bool(single_bias) {
                vec![(a, 1.0)]
            } else {
                let mut b = rng.gen_range(0..v);
                while b == a {
                    b = rng.gen_range(0..v);
                }
                let p: f64 = rng.gen_range(0.1..0.9);
                vec![(a, p), (b, 1.0 - p)]
            }
        })
        .collect()
}

/// Dense random bigram model with every continuation possible.
pub fn dense_mock(rng: &mut ChaCha8Rng, v: usize) -> MockModel {
    let rows: Vec<Vec<(usize, f64)>> = (0..v)
        .map(|_| {
            let w: Vec<f64> = (0..v).map(|_| rng.gen_range(0.0f64..1.0).powi(3) + 1e-3).collect();
            let s: f64 = w.iter().sum();
            w.iter().enumerate().map(|(i, x)| (i, x / s)).collect()
        })
        .collect();
    bigram_mock(&rows)
}

/// Diverse preprocessing transcribed step by step from its pseudocode:
/// the argmax list is rebuilt from all processed rows so far, and each later
/// row subtracts lambda times the bincount of that list.
pub fn reference_diverse_preprocess(logits: &[Vec<f64>], lambda: f64) -> Vec<Vec<f64>> {
    let k = logits.len();
    let mut processed: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut current_tokens: Vec<usize> = Vec::new();
    for i in 1..=k {
        let row = &logits[i - 1];
        if i == 1 {
            processed.push(row.clone());
        } else {
            let mut freq = vec![0usize; row.len()];
            for &t in &current_tokens {
                freq[t] += 1;
            }
            processed.push(row.iter().zip(&freq).map(|(l, &f)| l - lambda * f as f64).collect());
        }
        if i < k {
            current_tokens = processed
                .iter()
                .map(|r| {
                    // first index attaining the maximum
                    let mut best = 0;
                    for j in 0..r.len() {
                        if r[j] > r[best] {
                            best = j;
                        }
                    }
                    best
                })
                .collect();
        }
    }
    processed
}

// ---------------------------------------------------------------- tables

/// Direct reading of the n-gram, embedding and lemma sections of a bigram
/// table file, independent of the mock model's parser.
pub struct TableOracle {
    pub vocab: Vec<String>,
    index: HashMap<String, usize>,
    rows: HashMap<usize, Vec<f64>>,
    fallback: Vec<f64>,
    pub embeddings: HashMap<String, Vec<f64>>,
    pub pos: HashMap<String, String>,
}

impl TableOracle {
    pub fn load(path: &std::path::Path) -> Self {
        let text = std::fs::read_to_string(path).unwrap();
        let mut section = "";
        let mut vocab = Vec::new();
        let mut listed: HashMap<String, Vec<(String, f64)>> = HashMap::new();
        let mut embeddings = HashMap::new();
        let mut pos = HashMap::new();
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with("//") {
                continue;
            }
            if let Some(h) = line.strip_prefix('#') {
                section = match h.split_whitespace().next().unwrap() {
                    "VOCAB" => "vocab",
                    "NGRAM" => {
                        assert_eq!(h.split_whitespace().nth(1), Some("2"), "oracle reads bigram tables");
                        "ngram"
                    }
                    "EMBED" => "embed",
                    "LEMMA" => "lemma",
                    _ => "other",
                };
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            match section {
                "vocab" => vocab.push(f[0].to_string()),
                "ngram" => listed
                    .entry(f[0].to_string())
                    .or_default()
                    .push((f[1].to_string(), f[2].parse().unwrap())),
                "embed" => {
                    embeddings.insert(f[0].to_string(), f[1..].iter().map(|x| x.parse().unwrap()).collect());
                }
                "lemma" => {
                    if let Some(p) = f.get(2) {
                        pos.insert(f[0].to_string(), p.to_string());
                    }
                }
                _ => {}
            }
        }
        let index: HashMap<String, usize> = vocab.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        let v = vocab.len();
        let build = |entries: &[(String, f64)]| {
            let mut row = vec![None; v];
            for (w, p) in entries {
                row[index[w]] = Some(*p);
            }
            let used: f64 = row.iter().flatten().sum();
            let unlisted = row.iter().filter(|p| p.is_none()).count();
            let share = if unlisted > 0 { (1.0 - used).max(0.0) / unlisted as f64 } else { 0.0 };
            row.into_iter().map(|p| p.unwrap_or(share)).collect::<Vec<f64>>()
        };
        let fallback = listed.get("*").map_or(vec![1.0 / v as f64; v], |e| build(e));
        let rows = listed
            .iter()
            .filter(|(ctx, _)| ctx.as_str() != "*")
            .map(|(ctx, e)| (index[ctx], build(e)))
            .collect();
        Self {
            vocab,
            index,
            rows,
            fallback,
            embeddings,
            pos,
        }
    }

    pub fn id(&self, word: &str) -> usize {
        let w = word.to_lowercase();
        self.index.get(&w).copied().unwrap_or_else(|| self.index["<unk>"])
    }

    /// P(next | prev).
    pub fn prob(&self, prev: usize, next: usize) -> f64 {
        self.rows.get(&prev).unwrap_or(&self.fallback)[next]
    }

    pub fn embedding(&self, word: &str) -> Option<&Vec<f64>> {
        self.embeddings.get(&word.to_lowercase())
    }

    pub fn is_content(&self, word: &str) -> bool {
        self.pos
            .get(&word.to_lowercase())
            .is_some_and(|p| !matches!(p.as_str(), "function" | "other"))
    }
}

/// Splits a generated test sentence into its word and punctuation pieces.
/// Test sentences put spaces between every piece.
pub fn pieces(sentence: &str) -> Vec<&str> {
    sentence.split(' ').filter(|p| !p.is_empty()).collect()
}

pub fn is_punct(piece: &str) -> bool {
    !piece.chars().next().unwrap().is_alphanumeric()
}

/// A random sentence over the table's words, with an occasional unknown
/// word and comma. Pieces are space-separated except final punctuation.
pub fn random_sentence(rng: &mut ChaCha8Rng, words: &[String]) -> String {
    let n = rng.gen_range(3..10);
    let mut parts: Vec<String> = Vec::new();
    for i in 0..n {
        let w = if rng.gen_bool(0.08) {
            "zebra".to_string()
        } else {
            words[rng.gen_range(0..words.len())].clone()
        };
        parts.push(if i == 0 { capitalize(&w) } else { w });
        if i + 1 < n && rng.gen_bool(0.1) {
            parts.push(",".into());
        }
    }
    format!("{} .", parts.join(" ")).replace(" .", ".").replace(" ,", ",")
}

pub fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    c.next().map_or_else(String::new, |f| f.to_uppercase().chain(c).collect())
}

/// Words and punctuation of a sentence in order, punctuation split off.
pub fn surface_pieces(sentence: &str) -> Vec<String> {
    let mut out = Vec::new();
    for raw in sentence.split_whitespace() {
        let mut word = String::new();
        for ch in raw.chars() {
            if ch.is_alphanumeric() || ch == '\'' {
                word.push(ch);
            } else {
                if !word.is_empty() {
                    out.push(std::mem::take(&mut word));
                }
                out.push(ch.to_string());
            }
        }
        if !word.is_empty() {
            out.push(word);
        }
    }
    out
}

fn dedup_ci(words: Vec<String>) -> Vec<String> {
    let mut seen = HashSet::new();
    words.into_iter().filter(|w| seen.insert(w.to_lowercase())).collect()
}

/// Returned when a probability sits within rounding distance of the
/// threshold, so the expected set is not well defined.
pub struct Ambiguous;

fn below(p: f64, threshold: f64) -> Result<bool, Ambiguous> {
    if (p - threshold).abs() < 1e-9 {
        Err(Ambiguous)
    } else {
        Ok(p < threshold)
    }
}

impl TableOracle {
    pub fn autoregressive_keywords(&self, sentence: &str, threshold: f64) -> Result<Vec<String>, Ambiguous> {
        let mut prev = self.index["</s>"];
        let mut out = Vec::new();
        for piece in surface_pieces(sentence) {
            let id = self.id(&piece);
            if !is_punct(&piece) && below(self.prob(prev, id), threshold)? {
                out.push(piece.clone());
            }
            prev = id;
        }
        Ok(dedup_ci(out))
    }

    pub fn infill_keywords(&self, sentence: &str, threshold: f64) -> Result<Vec<String>, Ambiguous> {
        let ps = surface_pieces(sentence);
        let ids: Vec<usize> = ps.iter().map(|p| self.id(p)).collect();
        let eos = self.index["</s>"];
        let mut out = Vec::new();
        for (j, piece) in ps.iter().enumerate() {
            if is_punct(piece) {
                continue;
            }
            let left = if j == 0 { eos } else { ids[j - 1] };
            let mass = |v: usize| {
                let right = ids.get(j + 1).map_or(1.0, |&r| self.prob(v, r));
                self.prob(left, v) * right
            };
            let total: f64 = (0..self.vocab.len()).map(mass).sum();
            let p = if total > 0.0 { mass(ids[j]) / total } else { 0.0 };
            if below(p, threshold)? {
                out.push(piece.clone());
            }
        }
        Ok(dedup_ci(out))
    }

    pub fn embedding_keywords(&self, sentence: &str, stop: &FunctionWords) -> Vec<String> {
        let words: Vec<String> = surface_pieces(sentence).into_iter().filter(|p| !is_punct(p)).collect();
        let dim = self.embeddings.values().next().map_or(0, Vec::len);
        let vec_of = |w: &str| self.embedding(w).cloned().unwrap_or_else(|| vec![0.0; dim]);
        let mut mean = vec![0.0; dim];
        for w in &words {
            for (m, x) in mean.iter_mut().zip(vec_of(w)) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= words.len() as f64);
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut seen = HashSet::new();
        let mut scored: Vec<(usize, f64)> = Vec::new();
        for (i, w) in words.iter().enumerate() {
            let v = vec_of(w);
            if stop.contains(w) || !seen.insert(w.to_lowercase()) || norm(&v) == 0.0 {
                continue;
            }
            let cos = if norm(&mean) == 0.0 {
                -1.0
            } else {
                v.iter().zip(&mean).map(|(a, b)| a * b).sum::<f64>() / (norm(&v) * norm(&mean))
            };
            scored.push((i, cos));
        }
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        scored
            .into_iter()
            .take((words.len() / 2).max(1))
            .map(|(i, _)| words[i].clone())
            .collect()
    }

    /// Perplexity of a space-separated sentence under the bigram table,
    /// conditioned on the start marker.
    pub fn perplexity(&self, sentence: &str) -> f64 {
        let mut prev = self.index["</s>"];
        let mut total = 0.0;
        let ps = surface_pieces(sentence);
        for p in &ps {
            let id = self.id(p);
            total += self.prob(prev, id).ln();
            prev = id;
        }
        (-total / ps.len() as f64).exp()
    }
}

// ---------------------------------------------------------------- scorers

/// Acceptability looked up by exact sentence text.
pub struct MapCola {
    pub scores: HashMap<String, f64>,
    pub default: f64,
}

impl AcceptabilityScorer for MapCola {
    fn accept_prob(&self, sentence: &str) -> obfusc_core::Result<f64> {
        Ok(self.scores.get(sentence).copied().unwrap_or(self.default))
    }
}

/// Acceptability derived from a hash of the sentence, in [0,1).
pub struct HashCola(pub u64);

impl AcceptabilityScorer for HashCola {
    fn accept_prob(&self, sentence: &str) -> obfusc_core::Result<f64> {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.0.hash(&mut h);
        sentence.hash(&mut h);
        Ok((h.finish() % 10_000) as f64 / 10_000.0)
    }
}

// ---------------------------------------------------------------- numerics

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Min-max normalization followed by renormalization to sum one; constant
/// inputs give the uniform distribution.
pub fn oracle_min_max(scores: &[f64]) -> Vec<f64> {
    if scores.is_empty() {
        return Vec::new();
    }
    let lo = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return vec![1.0 / scores.len() as f64; scores.len()];
    }
    let raw: Vec<f64> = scores.iter().map(|s| (s - lo) / (hi - lo)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|r| r / total).collect()
}

/// Masses normalized to sum one; all-zero masses give the uniform
/// distribution.
pub fn oracle_normalize(masses: &[f64]) -> Vec<f64> {
    let total: f64 = masses.iter().sum();
    if total > 0.0 {
        masses.iter().map(|m| m / total).collect()
    } else {
        vec![1.0 / masses.len() as f64; masses.len()]
    }
}

/// Multiset unigram F1 over lowercased words, counted by sorting.
pub fn oracle_unigram_f1(a: &[&str], b: &[&str]) -> f64 {
    let mut x: Vec<String> = a.iter().map(|w| w.to_lowercase()).collect();
    let mut y: Vec<String> = b.iter().map(|w| w.to_lowercase()).collect();
    if x.is_empty() || y.is_empty() {
        return 0.0;
    }
    x.sort();
    y.sort();
    let (mut i, mut j, mut common) = (0, 0, 0usize);
    while i < x.len() && j < y.len() {
        match x[i].cmp(&y[j]) {
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
        }
    }
    if common == 0 {
        return 0.0;
    }
    let p = common as f64 / y.len() as f64;
    let r = common as f64 / x.len() as f64;
    2.0 * p * r / (p + r)
}

// ---------------------------------------------------------------- end to end

pub fn golden_path() -> PathBuf {
    fixture_path("golden/e2e.jsonl")
}

/// Configuration of the frozen end-to-end run: full grid, beam width 5.
pub fn e2e_config() -> PipelineConfig {
    let mut cfg = PipelineConfig {
        seed: 7,
        filter: obfusc_core::filtering::FilterPreset::AmtStylo.config(),
        ..Default::default()
    };
    cfg.decode.beam_width = 5;
    cfg
}

/// The output record followed by every candidate-pool record, one JSON
/// object per line.
pub fn e2e_output(m: &MockModel, workers: usize) -> (String, obfusc_core::pipeline::ObfuscationResult) {
    let text = std::fs::read_to_string(fixture_path("e2e_document.txt")).unwrap();
    let eng = engine(m, e2e_config());
    let opts = obfusc_core::pipeline::RunOptions { workers, keep_pools: true };
    let result = eng.run_document("e2e", &text, &opts, None).expect("pipeline run");
    let mut out = serde_json::to_string(&result.output_record()).unwrap();
    out.push('\n');
    for p in result.pool_records() {
        out.push_str(&serde_json::to_string(&p).unwrap());
        out.push('\n');
    }
    (out, result)
}
