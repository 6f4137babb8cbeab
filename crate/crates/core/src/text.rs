//! Word-level text splitting and the bundled closed-class word list.

use std::collections::HashSet;
use std::sync::OnceLock;

const FUNCTION_WORDS: &str = include_str!("../resources/function_words.txt");
const ABBREVIATIONS: &str = include_str!("../resources/abbreviations.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpanKind {
    Word,
    Punct,
}

/// A byte range of the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub kind: SpanKind,
}

impl Span {
    pub fn as_str<'a>(&self, text: &'a str) -> &'a str {
        &text[self.start..self.end]
    }
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '-' | '\u{2019}')
}

/// Splits `text` into word and punctuation spans; whitespace is dropped.
/// Words are alphanumeric runs that may contain inner apostrophes or hyphens.
pub fn spans(text: &str) -> Vec<Span> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (start, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_alphanumeric() {
            let mut j = i + 1;
            while j < chars.len() {
                let cj = chars[j].1;
                let joined = is_joiner(cj) && chars.get(j + 1).is_some_and(|n| n.1.is_alphanumeric());
                if cj.is_alphanumeric() || joined {
                    j += 1;
                } else {
                    break;
                }
            }
            let end = chars.get(j).map_or(text.len(), |c| c.0);
            out.push(Span { start, end, kind: SpanKind::Word });
            i = j;
        } else {
            let end = chars.get(i + 1).map_or(text.len(), |c| c.0);
            out.push(Span { start, end, kind: SpanKind::Punct });
            i += 1;
        }
    }
    out
}

/// The word spans of `text`, as string slices.
pub fn words(text: &str) -> Vec<&str> {
    spans(text)
        .into_iter()
        .filter(|s| s.kind == SpanKind::Word)
        .map(|s| s.as_str(text))
        .collect()
}

pub fn word_count(text: &str) -> usize {
    words(text).len()
}

/// Lowercased words with punctuation removed.
pub fn normalized_words(text: &str) -> Vec<String> {
    words(text).into_iter().map(str::to_lowercase).collect()
}

/// Harmonic mean of multiset unigram precision and recall over lowercased,
/// punctuation-free words. Zero when either side has no words.
pub fn unigram_f1(reference: &str, candidate: &str) -> f64 {
    use std::collections::HashMap;
    let r = normalized_words(reference);
    let c = normalized_words(candidate);
    if r.is_empty() || c.is_empty() {
        return 0.0;
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for w in &r {
        *counts.entry(w.as_str()).or_default() += 1;
    }
    let mut matched = 0usize;
    for w in &c {
        if let Some(n) = counts.get_mut(w.as_str()) {
            if *n > 0 {
                *n -= 1;
                matched += 1;
            }
        }
    }
    if matched == 0 {
        return 0.0;
    }
    let precision = matched as f64 / c.len() as f64;
    let recall = matched as f64 / r.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

fn abbreviations() -> &'static HashSet<String> {
    static SET: OnceLock<HashSet<String>> = OnceLock::new();
    SET.get_or_init(|| {
        ABBREVIATIONS
            .lines()
            .map(|l| l.trim().to_lowercase())
            .filter(|l| !l.is_empty())
            .collect()
    })
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{2019}' | '\u{201d}')
}

/// True when the period ending at byte `dot` closes an abbreviation or a
/// single-letter initial rather than a sentence.
fn period_is_abbreviation(text: &str, dot: usize) -> bool {
    let before = &text[..dot];
    let start = before
        .rfind(|c: char| !(c.is_alphanumeric() || c == '.'))
        .map_or(0, |i| i + before[i..].chars().next().map_or(1, char::len_utf8));
    let token = before[start..].trim_matches('.').to_lowercase();
    if token.is_empty() {
        return false;
    }
    let single_letter = token.chars().count() == 1 && token.chars().all(char::is_alphabetic);
    single_letter || abbreviations().contains(&token)
}

/// Byte ranges of the sentences in `text`, trimmed of surrounding whitespace.
/// A boundary is a run of `.`, `!` or `?` (plus closing quotes or brackets)
/// followed by whitespace and a character that is not lowercase. Periods
/// after bundled abbreviations and single-letter initials do not split.
pub fn sentence_spans(text: &str) -> Vec<(usize, usize)> {
    boundary_spans(text, true)
}

/// The first sentence of `text`. Unlike [`sentence_spans`], any following
/// character may start a new sentence, which suits lowercased model output.
pub fn leading_sentence(text: &str) -> &str {
    boundary_spans(text, false)
        .first()
        .map_or("", |&(s, e)| &text[s..e])
}

fn boundary_spans(text: &str, require_capital: bool) -> Vec<(usize, usize)> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if !matches!(c, '.' | '!' | '?') {
            i += 1;
            continue;
        }
        let mut j = i;
        while j < chars.len() && matches!(chars[j].1, '.' | '!' | '?') {
            j += 1;
        }
        let lone_period = c == '.' && j == i + 1;
        while j < chars.len() && is_closer(chars[j].1) {
            j += 1;
        }
        let end = chars.get(j).map_or(text.len(), |c| c.0);
        let mut k = j;
        while k < chars.len() && chars[k].1.is_whitespace() {
            k += 1;
        }
        let boundary = if k == chars.len() {
            true
        } else {
            k > j
                && !(require_capital && chars[k].1.is_lowercase())
                && !(lone_period && period_is_abbreviation(text, pos))
        };
        if boundary {
            push_trimmed(text, start, end, &mut out);
            start = end;
        }
        i = j.max(i + 1);
    }
    push_trimmed(text, start, text.len(), &mut out);
    out
}

fn push_trimmed(text: &str, start: usize, end: usize, out: &mut Vec<(usize, usize)>) {
    let piece = &text[start..end];
    let lead = piece.len() - piece.trim_start().len();
    let trimmed = piece.trim();
    if !trimmed.is_empty() {
        out.push((start + lead, start + lead + trimmed.len()));
    }
}

/// The sentences of `text` as slices.
pub fn split_sentences(text: &str) -> Vec<&str> {
    sentence_spans(text).into_iter().map(|(s, e)| &text[s..e]).collect()
}

/// Closed-class word list used for freezing, stopword removal and
/// style features.
#[derive(Debug, Clone)]
pub struct FunctionWords {
    ordered: Vec<String>,
    set: HashSet<String>,
}

impl FunctionWords {
    pub fn parse(list: &str) -> Self {
        let mut ordered = Vec::new();
        let mut set = HashSet::new();
        for line in list.lines() {
            let w = line.trim().to_lowercase();
            if !w.is_empty() && !w.starts_with('#') && set.insert(w.clone()) {
                ordered.push(w);
            }
        }
        Self { ordered, set }
    }

    pub fn bundled() -> &'static FunctionWords {
        static LIST: OnceLock<FunctionWords> = OnceLock::new();
        LIST.get_or_init(|| FunctionWords::parse(FUNCTION_WORDS))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.set.contains(&word.to_lowercase())
    }

    pub fn words(&self) -> &[String] {
        &self.ordered
    }

    pub fn len(&self) -> usize {
        self.ordered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordered.is_empty()
    }
}
