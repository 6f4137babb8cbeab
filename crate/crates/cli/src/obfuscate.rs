use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use obfusc_core::pipeline::{derive_seed, Checkpoint, Engine, RunOptions};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::backend::Loaded;
use crate::config::settings;
use crate::documents::read_documents;
use crate::{io_error, CliError, ObfuscateArgs};

#[derive(Serialize)]
struct Manifest<'a> {
    tool_version: &'static str,
    config_hash: String,
    backend: String,
    input: String,
    input_sha256: String,
    root_seed: u64,
    document_seeds: Vec<(String, u64)>,
    resumed_sentences: usize,
    config: &'a obfusc_core::pipeline::PipelineConfig,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    out.with_file_name(format!("{stem}.{suffix}"))
}

pub fn manifest_path(out: &Path) -> PathBuf {
    sibling(out, "manifest.json")
}

pub fn checkpoint_path(out: &Path) -> PathBuf {
    sibling(out, "checkpoint.jsonl")
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_error("write", path, e))
}

fn write_line<T: Serialize>(w: &mut impl Write, path: &Path, value: &T) -> Result<(), CliError> {
    let line = serde_json::to_string(value).map_err(|e| CliError::Usage(e.to_string()))?;
    writeln!(w, "{line}").and_then(|_| w.flush()).map_err(|e| io_error("write", path, e))
}

pub fn run(args: &ObfuscateArgs) -> Result<(), CliError> {
    let docs = read_documents(&args.input)?;
    let settings = settings(args)?;
    let backend = Loaded::open(settings.backend.as_deref())?;
    let dictionary = backend.dictionary(&args.backend)?;
    let cfg = settings.pipeline;

    let config_json = serde_json::to_string(&cfg).map_err(|e| CliError::Usage(e.to_string()))?;
    let config_hash = sha256_hex(config_json.as_bytes());
    let identity = backend.identity();
    let fingerprint = sha256_hex(format!("{config_hash}\n{identity}").as_bytes());

    let ckpt_path = checkpoint_path(&args.out);
    let checkpoint = Checkpoint::open(&ckpt_path, &fingerprint, args.resume)
        .map_err(|e| CliError::Usage(format!("checkpoint {}: {e}", ckpt_path.display())))?;
    let resumed = checkpoint.resumed();
    if resumed > 0 {
        log::info!("resuming with {resumed} completed sentences");
    }

    let input_bytes = std::fs::read(&args.input).map_err(|e| io_error("read", &args.input, e))?;
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        config_hash,
        backend: identity,
        input: args.input.display().to_string(),
        input_sha256: sha256_hex(&input_bytes),
        root_seed: cfg.seed,
        document_seeds: docs.iter().map(|d| (d.id.clone(), derive_seed(cfg.seed, &["document", &d.id]))).collect(),
        resumed_sentences: resumed,
        config: &cfg,
    };
    let mpath = manifest_path(&args.out);
    let manifest_json = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Usage(e.to_string()))?;
    std::fs::write(&mpath, manifest_json + "\n").map_err(|e| io_error("write", &mpath, e))?;

    let engine = Engine::new(backend.scorers(), dictionary, cfg.clone())?;
    let opts = RunOptions {
        workers: args
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
        keep_pools: args.dump_candidates.is_some(),
    };
    let mut out = create(&args.out)?;
    let mut pools = match &args.dump_candidates {
        Some(p) => Some((create(p)?, p.clone())),
        None => None,
    };
    for doc in &docs {
        let result = engine
            .run_document(&doc.id, &doc.text, &opts, Some(&checkpoint))
            .map_err(|e| match CliError::from(e) {
                CliError::Backend { source, .. } => CliError::Backend {
                    source,
                    checkpoint: Some(ckpt_path.clone()),
                },
                other => other,
            })?;
        write_line(&mut out, &args.out, &result.output_record())?;
        if let Some((w, p)) = &mut pools {
            for record in result.pool_records() {
                write_line(w, p, &record)?;
            }
        }
        log::info!(
            "{}: {} generated, {} original, {} stylo",
            doc.id,
            result.outcomes.generated,
            result.outcomes.original,
            result.outcomes.stylo
        );
    }
    Ok(())
}
