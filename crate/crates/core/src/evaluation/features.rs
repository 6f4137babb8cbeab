use crate::text::{self, split_sentences, FunctionWords, SpanKind};

/// Punctuation characters counted individually, in feature order.
pub const PUNCTUATION_CLASSES: [char; 10] = ['.', ',', ';', ':', '!', '?', '\'', '"', '-', '('];

const SCALARS: [&str; 5] = [
    "words_per_sentence",
    "word_length",
    "type_token_ratio",
    "digit_fraction",
    "uppercase_fraction",
];

/// Names of the features produced by [`style_features`], in order.
pub fn style_feature_names(function_words: &FunctionWords) -> Vec<String> {
    SCALARS
        .iter()
        .map(|s| s.to_string())
        .chain(PUNCTUATION_CLASSES.iter().map(|c| format!("punct:{c}")))
        .chain(function_words.words().iter().map(|w| format!("fw:{w}")))
        .chain(('a'..='z').map(|c| format!("letter:{c}")))
        .collect()
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// A compact lexical style profile: sentence and word length, vocabulary
/// richness, character class shares, punctuation rates, function-word rates
/// and letter frequencies. Every rate lies in [0,1].
pub fn style_features(text: &str, function_words: &FunctionWords) -> Vec<f64> {
    let spans = text::spans(text);
    let words: Vec<String> = spans
        .iter()
        .filter(|s| s.kind == SpanKind::Word)
        .map(|s| s.as_str(text).to_lowercase())
        .collect();
    let sentences = split_sentences(text).len();
    let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
    let letters: Vec<char> = chars.iter().copied().filter(|c| c.is_alphabetic()).collect();
    let distinct = words.iter().collect::<std::collections::HashSet<_>>().len();

    let mut out = vec![
        ratio(words.len(), sentences),
        ratio(words.iter().map(|w| w.chars().count()).sum(), words.len()),
        ratio(distinct, words.len()),
        ratio(chars.iter().filter(|c| c.is_ascii_digit()).count(), chars.len()),
        ratio(letters.iter().filter(|c| c.is_uppercase()).count(), letters.len()),
    ];
    for p in PUNCTUATION_CLASSES {
        out.push(ratio(chars.iter().filter(|&&c| c == p).count(), chars.len()));
    }
    for fw in function_words.words() {
        out.push(ratio(words.iter().filter(|w| *w == fw).count(), words.len()));
    }
    for l in 'a'..='z' {
        out.push(ratio(
            letters.iter().filter(|c| c.to_ascii_lowercase() == l).count(),
            letters.len(),
        ));
    }
    out
}
