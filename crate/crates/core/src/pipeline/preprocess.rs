use crate::text::{sentence_spans, word_count};
use crate::types::SentenceUnit;

/// Sentences shorter than this many words are left untouched.
pub const MIN_WORDS: usize = 3;

/// A segmented document. `spans[i]` is the byte range of `units[i].original`
/// in the source text.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub units: Vec<SentenceUnit>,
    pub spans: Vec<(usize, usize)>,
}

impl Document {
    /// Rebuilds the source text with each unit's sentence replaced by the
    /// matching entry of `outputs`. Everything between sentences is kept.
    pub fn reassemble(&self, source: &str, outputs: &[String]) -> String {
        assert_eq!(outputs.len(), self.spans.len(), "one output per unit");
        let mut out = String::with_capacity(source.len());
        let mut cursor = 0;
        for (&(start, end), text) in self.spans.iter().zip(outputs) {
            out.push_str(&source[cursor..start]);
            out.push_str(text);
            cursor = end;
        }
        out.push_str(&source[cursor..]);
        out
    }
}

/// Byte ranges of blank-line separated paragraphs.
fn paragraph_spans(text: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut current: Option<(usize, usize)> = None;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        if line.trim().is_empty() {
            out.extend(current.take());
        } else {
            let end = start + line.trim_end().len();
            current = Some(current.map_or((start, end), |(s, _)| (s, end)));
        }
    }
    out.extend(current);
    out
}

/// Splits a document into sentence units with their left contexts.
///
/// The context is every earlier sentence of the same paragraph, or only the
/// last `context_sentences` of them when set. A paragraph's first sentence
/// uses the previous paragraph's last sentence; the document's first
/// sentence uses itself.
pub fn segment_document(text: &str, context_sentences: Option<usize>) -> Document {
    let mut units = Vec::new();
    let mut spans = Vec::new();
    let mut previous_last: Option<String> = None;
    for (p_idx, (p_start, p_end)) in paragraph_spans(text).into_iter().enumerate() {
        let para = &text[p_start..p_end];
        let sentences: Vec<(usize, usize)> = sentence_spans(para)
            .into_iter()
            .map(|(s, e)| (p_start + s, p_start + e))
            .collect();
        for (i, &(s, e)) in sentences.iter().enumerate() {
            let original = text[s..e].to_string();
            let left_context = if i == 0 {
                previous_last.clone().unwrap_or_else(|| original.clone())
            } else {
                let from = context_sentences.map_or(0, |m| i.saturating_sub(m.max(1)));
                sentences[from..i]
                    .iter()
                    .map(|&(a, b)| &text[a..b])
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            units.push(SentenceUnit {
                skip: word_count(&original) < MIN_WORDS,
                original,
                left_context,
                index_in_paragraph: i,
                paragraph_index: p_idx,
            });
            spans.push((s, e));
        }
        if let Some(&(s, e)) = sentences.last() {
            previous_last = Some(text[s..e].to_string());
        }
    }
    Document { units, spans }
}

/// Sentence units of `document` under the default context rule.
pub fn preprocess(document: &str) -> Vec<SentenceUnit> {
    segment_document(document, None).units
}
