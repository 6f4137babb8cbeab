use std::collections::BTreeMap;

use obfusc_core::evaluation::{
    cola_average, content_preservation_nli, drop_rate, perplexity_ratio, style_feature_names, style_features,
    task_score, unigram_overlap, AttributionClassifier, NearestCentroid,
};
use obfusc_core::text::FunctionWords;
use serde::{Deserialize, Serialize};

use crate::backend::Loaded;
use crate::documents::{read_documents, read_jsonl, InputDocument};
use crate::{io_error, CliError, EvaluateArgs, TrainArgs};

#[derive(Deserialize)]
struct ObfuscatedDocument {
    id: String,
    #[serde(alias = "text")]
    obfuscated: String,
}

#[derive(Serialize, Default)]
struct TextMetrics {
    id: String,
    unigram_overlap: f64,
    nli: Option<f64>,
    cola: Option<f64>,
    perplexity_ratio: Option<f64>,
    author: Option<String>,
    original_prediction: Option<String>,
    obfuscated_prediction: Option<String>,
}

#[derive(Serialize, Default)]
struct Aggregate {
    documents: usize,
    drop_rate: Option<f64>,
    nli: Option<f64>,
    unigram_overlap: f64,
    cola: Option<f64>,
    task_score: Option<f64>,
    perplexity_ratio: Option<f64>,
}

#[derive(Serialize)]
struct Report {
    aggregate: Aggregate,
    per_text: Vec<TextMetrics>,
}

fn mean(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Option<Vec<f64>> = xs.collect();
    v.filter(|v| !v.is_empty()).map(|v| v.iter().sum::<f64>() / v.len() as f64)
}

fn pair(
    originals: Vec<InputDocument>,
    obfuscated: Vec<ObfuscatedDocument>,
) -> Result<Vec<(InputDocument, String)>, CliError> {
    let mut by_id: BTreeMap<String, String> = obfuscated.into_iter().map(|d| (d.id, d.obfuscated)).collect();
    let mut pairs = Vec::new();
    let mut missing = Vec::new();
    for doc in originals {
        match by_id.remove(&doc.id) {
            Some(o) => pairs.push((doc, o)),
            None => missing.push(format!("{} (no obfuscated text)", doc.id)),
        }
    }
    missing.extend(by_id.into_keys().map(|id| format!("{id} (no original text)")));
    if !missing.is_empty() {
        return Err(CliError::Usage(format!("unpaired ids: {}", missing.join(", "))));
    }
    Ok(pairs)
}

fn render(report: &Report) -> String {
    let fmt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
    let mut out = format!(
        "{:<24} {:>8} {:>8} {:>8} {:>10}\n",
        "id", "nli", "overlap", "cola", "ppl ratio"
    );
    for t in &report.per_text {
        out.push_str(&format!(
            "{:<24} {:>8} {:>8.4} {:>8} {:>10}\n",
            t.id,
            fmt(t.nli),
            t.unigram_overlap,
            fmt(t.cola),
            fmt(t.perplexity_ratio)
        ));
    }
    let a = &report.aggregate;
    out.push_str(&format!(
        "\ndocuments {}  drop rate {}  nli {}  overlap {:.4}  cola {}  ppl ratio {}  task score {}\n",
        a.documents,
        fmt(a.drop_rate),
        fmt(a.nli),
        a.unigram_overlap,
        fmt(a.cola),
        fmt(a.perplexity_ratio),
        a.task_score.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"))
    ));
    out
}

fn check_range(name: &str, v: Option<f64>, lo: f64) -> Result<(), CliError> {
    match v {
        Some(x) if !(lo..=1.0).contains(&x) => Err(CliError::Usage(format!("--{name} must lie in [{lo}, 1]"))),
        _ => Ok(()),
    }
}

pub fn run(args: &EvaluateArgs) -> Result<(), CliError> {
    check_range("drop-rate", args.drop_rate, -1.0)?;
    check_range("nli", args.nli, 0.0)?;
    check_range("cola", args.cola, 0.0)?;
    let originals = read_jsonl::<InputDocument>(&args.original)?;
    let obfuscated = read_jsonl::<ObfuscatedDocument>(&args.obfuscated)?;
    let pairs = pair(originals, obfuscated)?;
    let backend = match &args.backend.backend {
        Some(spec) => Some(Loaded::open(Some(spec))?),
        None => None,
    };
    let classifier = match &args.classifier {
        Some(p) => Some(NearestCentroid::load(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let fw = FunctionWords::bundled();

    let mut per_text = Vec::new();
    for (doc, obf) in &pairs {
        let mut t = TextMetrics {
            id: doc.id.clone(),
            unigram_overlap: unigram_overlap(&doc.text, obf),
            author: doc.author.clone(),
            ..Default::default()
        };
        if let Some(b) = &backend {
            let s = b.scorers();
            t.nli = Some(content_preservation_nli(&doc.text, obf, s.nli)?);
            t.cola = Some(cola_average(obf, s.cola)?);
            t.perplexity_ratio = Some(perplexity_ratio(&doc.text, obf, s.lm)?);
        }
        if let Some(c) = &classifier {
            t.original_prediction = Some(c.predict(&style_features(&doc.text, fw))?);
            t.obfuscated_prediction = Some(c.predict(&style_features(obf, fw))?);
        }
        per_text.push(t);
    }

    let computed_drop = match &classifier {
        Some(_) if per_text.iter().all(|t| t.author.is_some()) => {
            let col = |f: fn(&TextMetrics) -> &Option<String>| -> Vec<String> {
                per_text.iter().map(|t| f(t).clone().unwrap_or_default()).collect()
            };
            Some(drop_rate(
                &col(|t| &t.original_prediction),
                &col(|t| &t.obfuscated_prediction),
                &col(|t| &t.author),
            )?)
        }
        Some(_) => {
            log::warn!("drop rate needs an author for every original; skipping it");
            None
        }
        None => None,
    };
    let mut aggregate = Aggregate {
        documents: per_text.len(),
        drop_rate: args.drop_rate.or(computed_drop),
        nli: args.nli.or_else(|| mean(per_text.iter().map(|t| t.nli))),
        unigram_overlap: mean(per_text.iter().map(|t| Some(t.unigram_overlap))).unwrap_or(0.0),
        cola: args.cola.or_else(|| mean(per_text.iter().map(|t| t.cola))),
        perplexity_ratio: mean(per_text.iter().map(|t| t.perplexity_ratio)),
        task_score: None,
    };
    if let (Some(d), Some(n), Some(c)) = (aggregate.drop_rate, aggregate.nli, aggregate.cola) {
        aggregate.task_score = Some(task_score(d, n, c));
    }
    let report = Report { aggregate, per_text };
    if let Some(path) = &args.out {
        let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Usage(e.to_string()))?;
        std::fs::write(path, json + "\n").map_err(|e| io_error("write", path, e))?;
    }
    crate::print_stdout(&render(&report));
    Ok(())
}

pub fn train(args: &TrainArgs) -> Result<(), CliError> {
    let docs = read_documents(&args.input)?;
    let fw = FunctionWords::bundled();
    let mut examples = Vec::new();
    for d in docs {
        let author = d
            .author
            .ok_or_else(|| CliError::Usage(format!("document {} has no author", d.id)))?;
        examples.push((author, style_features(&d.text, fw)));
    }
    let mut model = NearestCentroid::new(style_feature_names(fw));
    model.fit(&examples)?;
    model
        .save(&args.out)
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.out.display())))?;
    crate::print_stdout(&format!(
        "trained on {} documents from {} authors\n",
        examples.len(),
        model.authors().count()
    ));
    Ok(())
}
