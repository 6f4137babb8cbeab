use std::time::{Duration, Instant};

use obfusc_core::scorers::{
    AcceptabilityScorer, EmbeddingProvider, EntailmentScorer, InfillScorer, MorphologyProvider, NextTokenScorer,
    RemoteBackend, RetryPolicy,
};
use serde::Serialize;

use crate::{io_error, CliError, ServeCheckArgs};

#[derive(Serialize)]
struct EndpointResult {
    endpoint: &'static str,
    ok: bool,
    latency_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    violation: Option<String>,
}

#[derive(Serialize)]
struct Report {
    backend: String,
    passed: bool,
    endpoints: Vec<EndpointResult>,
    violations: Vec<String>,
}

/// Times one probe; a probe returns a violation message or nothing.
fn probe(endpoint: &'static str, f: impl FnOnce() -> Result<Option<String>, obfusc_core::Error>) -> EndpointResult {
    let start = Instant::now();
    let outcome = f();
    let latency_ms = start.elapsed().as_secs_f64() * 1000.0;
    let violation = match outcome {
        Ok(v) => v,
        Err(e) => Some(e.to_string()),
    };
    EndpointResult { endpoint, ok: violation.is_none(), latency_ms, violation }
}

fn unit_interval(name: &str, x: f64) -> Option<String> {
    (!(0.0..=1.0).contains(&x)).then(|| format!("{name} {x} outside [0, 1]"))
}

fn check_all(r: &RemoteBackend) -> Vec<EndpointResult> {
    let vocab = r.vocab_size();
    let mut results = Vec::new();
    let mut sample = vec![r.eos_id()];
    results.push(probe("/v1/tokenize", || {
        let ids = r.tokenize("the cat sat on the mat.")?;
        if let Some(bad) = ids.iter().find(|&&t| t as usize >= vocab) {
            return Ok(Some(format!("token id {bad} beyond vocabulary size {vocab}")));
        }
        sample.extend(&ids);
        Ok(ids.is_empty().then(|| "empty tokenization".to_string()))
    }));
    results.push(probe("/v1/detokenize", || {
        let text = r.detokenize(&sample[1..])?;
        Ok(text.trim().is_empty().then(|| "empty detokenization".to_string()))
    }));
    results.push(probe("/v1/logits", || {
        let a = r.logits(&sample[..1])?;
        if a.len() != vocab {
            return Ok(Some(format!("logits length {} != vocabulary size {vocab}", a.len())));
        }
        let top = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = a.iter().map(|l| (l - top).exp()).sum();
        let sum: f64 = a.iter().map(|l| (l - top).exp() / total).sum();
        if !a.iter().all(|x| x.is_finite() || *x == f64::NEG_INFINITY) || (sum - 1.0).abs() > 1e-4 {
            return Ok(Some("logits do not normalize to a distribution".into()));
        }
        let b = r.logits(&sample[..1])?;
        Ok((a != b).then(|| "logits differ across identical requests".to_string()))
    }));
    results.push(probe("/v1/infill", || {
        let ids = &sample[1..];
        if ids.is_empty() {
            return Ok(Some("no tokens to mask".into()));
        }
        Ok(unit_interval("infill probability", r.infill_prob(ids, 0)?))
    }));
    results.push(probe("/v1/embed", || {
        let v = r.embed("cat")?;
        Ok((v.len() != r.dim()).then(|| format!("embedding length {} != dimension {}", v.len(), r.dim())))
    }));
    results.push(probe("/v1/nli", || {
        Ok(unit_interval("entailment", r.entail_prob("The cat sat on the mat.", "The cat sat on the mat.")?))
    }));
    results.push(probe("/v1/cola", || {
        Ok(unit_interval("acceptability", r.accept_prob("The cat sat on the mat.")?))
    }));
    results.push(probe("/v1/morph", || {
        let lemma = r.lemma("cats")?;
        r.pos_class("cats", "the cats sat")?;
        let again = r.lemma(&lemma)?;
        Ok((again != lemma).then(|| format!("lemma is not idempotent: {lemma:?} -> {again:?}")))
    }));
    results
}

pub fn run(args: &ServeCheckArgs) -> Result<(), CliError> {
    let policy = RetryPolicy {
        max_attempts: 2,
        timeout: Duration::from_secs(args.timeout),
        ..RetryPolicy::default()
    };
    let mut endpoints = Vec::new();
    let mut remote = None;
    endpoints.push(probe("/v1/meta", || match RemoteBackend::connect(&args.backend, policy) {
        Ok(r) => {
            let bad = (r.vocab_size() == 0 || r.dim() == 0).then(|| "meta reports an empty vocabulary or dimension".into());
            remote = Some(r);
            Ok(bad)
        }
        Err(e) => Err(e),
    }));
    if let Some(r) = &remote {
        endpoints.extend(check_all(r));
    }
    let violations: Vec<String> = endpoints
        .iter()
        .filter_map(|e| e.violation.as_ref().map(|v| format!("{}: {v}", e.endpoint)))
        .collect();
    let report = Report {
        backend: args.backend.clone(),
        passed: violations.is_empty() && remote.is_some(),
        endpoints,
        violations,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(path) = &args.out {
        std::fs::write(path, json.clone() + "\n").map_err(|e| io_error("write", path, e))?;
    }
    crate::print_stdout(&format!("{json}\n"));
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Conformance(format!(
            "{} violation(s): {}",
            report.violations.len(),
            report.violations.join("; ")
        )))
    }
}
