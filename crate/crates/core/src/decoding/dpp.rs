use crate::error::{Error, Result};

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in row.iter().enumerate().skip(1) {
        if x > row[best] {
            best = i;
        }
    }
    best
}

/// Penalizes, in each beam row, the tokens already picked as argmax by the
/// processed rows above it: `out[i] = logits[i] - lambda * freq`, where
/// `freq[v]` counts earlier processed rows whose argmax is `v`. The first
/// row is returned unchanged.
pub fn diverse_preprocess(logits: &[Vec<f64>], lambda: f64) -> Result<Vec<Vec<f64>>> {
    if logits.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Input("non-finite logits".into()));
    }
    let Some(first) = logits.first() else {
        return Ok(Vec::new());
    };
    let vocab = first.len();
    if logits.iter().any(|r| r.len() != vocab) {
        return Err(Error::Input("ragged logit matrix".into()));
    }
    let mut freq = vec![0u32; vocab];
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(logits.len());
    for (i, row) in logits.iter().enumerate() {
        let processed = if i == 0 {
            row.clone()
        } else {
            row.iter()
                .zip(&freq)
                .map(|(&l, &f)| l - lambda * f as f64)
                .collect()
        };
        if i + 1 < logits.len() && vocab > 0 {
            freq[argmax(&processed)] += 1;
        }
        out.push(processed);
    }
    Ok(out)
}
