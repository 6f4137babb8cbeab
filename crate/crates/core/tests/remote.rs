mod common;

use std::sync::Arc;
use std::time::Duration;

use common::*;
use obfusc_core::pipeline::RunOptions;
use obfusc_core::scorers::mock_server::{Faults, MockServer};
use obfusc_core::scorers::{
    AcceptabilityScorer, Backend, EmbeddingProvider, EntailmentScorer, InfillScorer, MorphologyProvider,
    NextTokenScorer, RemoteBackend, RetryPolicy,
};
use obfusc_core::Error;

fn fast_policy(attempts: u32) -> RetryPolicy {
    RetryPolicy {
        max_attempts: attempts,
        base_delay: Duration::from_millis(1),
        max_delay: Duration::from_millis(5),
        timeout: Duration::from_secs(10),
        max_connections: 4,
    }
}

fn serve(faults: Faults) -> (Arc<obfusc_core::scorers::MockModel>, MockServer) {
    let m = Arc::new(tiny_model());
    let server = MockServer::spawn_with_faults(m.clone(), faults).unwrap();
    (m, server)
}

#[test]
fn every_method_matches_the_local_model() {
    let (m, server) = serve(Faults::default());
    let r = RemoteBackend::connect(&server.url(), fast_policy(2)).unwrap();
    assert_eq!(r.vocab_size(), m.vocab_size());
    assert_eq!(r.eos_id(), m.eos_id());
    assert_eq!(r.dim(), m.dim());
    for text in ["the cat sat on the mat .", "a dog ran", "zebra", ""] {
        let ids = m.tokenize(text).unwrap();
        assert_eq!(r.tokenize(text).unwrap(), ids);
        assert_eq!(r.detokenize(&ids).unwrap(), m.detokenize(&ids).unwrap());
        let mut prefix = vec![0];
        prefix.extend(&ids);
        assert_eq!(r.logits(&prefix).unwrap(), m.logits(&prefix).unwrap());
        for i in 0..ids.len() {
            assert_eq!(r.infill_prob(&ids, i).unwrap(), m.infill_prob(&ids, i).unwrap());
        }
    }
    for w in ["cat", "sits", "quietly", "zebra"] {
        assert_eq!(r.embed(w).unwrap(), m.embed(w).unwrap());
        assert_eq!(r.lemma(w).unwrap(), m.lemma(w).unwrap());
        assert_eq!(r.pos_class(w, "the cat sat").unwrap(), m.pos_class(w, "the cat sat").unwrap());
    }
    let (p, h) = ("The cat sat on the mat.", "A cat sat.");
    assert_eq!(r.entail_prob(p, h).unwrap(), m.entail_prob(p, h).unwrap());
    assert_eq!(r.accept_prob(h).unwrap(), m.accept_prob(h).unwrap());
    assert!(r.identity().starts_with("remote:"));
}

#[test]
fn pipeline_through_remote_matches_local() {
    let (m, server) = serve(Faults::default());
    let r = RemoteBackend::connect(&server.url(), fast_policy(2)).unwrap();
    let text = std::fs::read_to_string(fixture_path("e2e_document.txt")).unwrap();
    let mut cfg = e2e_config();
    cfg.grid = obfusc_core::pipeline::GridSpec::parse("original,ordered").unwrap();
    let opts = RunOptions { workers: 2, keep_pools: true };

    let local = engine(&m, cfg.clone()).run_document("d", &text, &opts, None).unwrap();
    let dict = obfusc_core::keywords::Dictionary::build(m.word_list(), &r, &r).unwrap();
    let remote_engine =
        obfusc_core::pipeline::Engine::new(obfusc_core::scorers::Scorers::from_backend(&r), dict, cfg).unwrap();
    let remote = remote_engine.run_document("d", &text, &opts, None).unwrap();
    assert_eq!(
        serde_json::to_string(&remote.output_record()).unwrap(),
        serde_json::to_string(&local.output_record()).unwrap()
    );
    assert_eq!(
        serde_json::to_string(&remote.pool_records()).unwrap(),
        serde_json::to_string(&local.pool_records()).unwrap()
    );
}

#[test]
fn transient_unavailability_is_retried() {
    let (m, server) = serve(Faults { transient_failures: 3, ..Faults::default() });
    let r = RemoteBackend::connect(&server.url(), fast_policy(5)).unwrap();
    assert_eq!(r.logits(&[0]).unwrap(), m.logits(&[0]).unwrap());
}

#[test]
fn exhausted_retries_surface_as_unavailable() {
    let (_m, server) = serve(Faults { transient_failures: 100, ..Faults::default() });
    let err = RemoteBackend::connect(&server.url(), fast_policy(2)).unwrap_err();
    assert!(err.is_backend(), "{err:?}");
}

#[test]
fn short_logits_are_a_protocol_error() {
    let (_m, server) = serve(Faults { short_logits: true, ..Faults::default() });
    let r = RemoteBackend::connect(&server.url(), fast_policy(2)).unwrap();
    assert!(matches!(r.logits(&[0]), Err(Error::Protocol { .. })));
}

#[test]
fn out_of_range_entailment_is_a_protocol_error() {
    let (_m, server) = serve(Faults { bad_entailment: true, ..Faults::default() });
    let r = RemoteBackend::connect(&server.url(), fast_policy(2)).unwrap();
    assert!(matches!(r.entail_prob("a", "b"), Err(Error::Protocol { .. })));
}

#[test]
fn unreachable_server_is_unavailable() {
    let err = RemoteBackend::connect("http://127.0.0.1:9", fast_policy(1)).unwrap_err();
    assert!(err.is_backend(), "{err:?}");
}

#[test]
fn model_errors_are_reported_not_retried() {
    let (_m, server) = serve(Faults::default());
    let r = RemoteBackend::connect(&server.url(), fast_policy(3)).unwrap();
    assert!(r.infill_prob(&[1, 2], 7).is_err());
}
