//! Serves a [`MockModel`] over the `/v1/*` protocol on a loopback port.
//! Test harness only; fault switches let conformance tests provoke contract
//! violations.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use tokio::sync::oneshot;

use crate::error::Error;
use crate::scorers::wire::*;
use crate::scorers::{
    AcceptabilityScorer, EmbeddingProvider, EntailmentScorer, InfillScorer, MockModel,
    MorphologyProvider, NextTokenScorer,
};

#[derive(Debug, Clone, Default)]
pub struct Faults {
    /// Drop the last element of every logits vector.
    pub short_logits: bool,
    /// Answer the first N requests with 503 and `Retry-After: 0`.
    pub transient_failures: u32,
    /// Return an entailment value outside [0,1].
    pub bad_entailment: bool,
}

struct ServerState {
    model: Arc<MockModel>,
    faults: Faults,
    failures_left: AtomicU32,
}

pub struct MockServer {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

type Reply<T> = Result<Json<T>, Response>;

fn model_error(e: Error) -> Response {
    let body = ErrorBody {
        error: ErrorDetail {
            code: "bad_request".into(),
            message: e.to_string(),
        },
    };
    (StatusCode::BAD_REQUEST, Json(body)).into_response()
}

#[allow(clippy::result_large_err)]
fn gate(state: &ServerState) -> Result<(), Response> {
    let left = state.failures_left.load(Ordering::SeqCst);
    if left > 0 {
        state.failures_left.store(left - 1, Ordering::SeqCst);
        return Err((StatusCode::SERVICE_UNAVAILABLE, [("retry-after", "0")], "busy").into_response());
    }
    Ok(())
}

async fn logits(State(s): State<Arc<ServerState>>, Json(r): Json<LogitsRequest>) -> Reply<LogitsResponse> {
    gate(&s)?;
    let mut logits = s.model.logits(&r.prefix_ids).map_err(model_error)?;
    if s.faults.short_logits {
        logits.pop();
    }
    Ok(Json(LogitsResponse { logits }))
}

async fn infill(State(s): State<Arc<ServerState>>, Json(r): Json<InfillRequest>) -> Reply<InfillResponse> {
    gate(&s)?;
    let prob = s.model.infill_prob(&r.ids, r.mask_index).map_err(model_error)?;
    Ok(Json(InfillResponse { prob }))
}

async fn embed(State(s): State<Arc<ServerState>>, Json(r): Json<EmbedRequest>) -> Reply<EmbedResponse> {
    gate(&s)?;
    let vector = s.model.embed(&r.word).map_err(model_error)?;
    Ok(Json(EmbedResponse { vector }))
}

async fn nli(State(s): State<Arc<ServerState>>, Json(r): Json<NliRequest>) -> Reply<NliResponse> {
    gate(&s)?;
    let mut entail = s.model.entail_prob(&r.premise, &r.hypothesis).map_err(model_error)?;
    if s.faults.bad_entailment {
        entail += 2.0;
    }
    Ok(Json(NliResponse { entail }))
}

async fn cola(State(s): State<Arc<ServerState>>, Json(r): Json<ColaRequest>) -> Reply<ColaResponse> {
    gate(&s)?;
    let accept = s.model.accept_prob(&r.sentence).map_err(model_error)?;
    Ok(Json(ColaResponse { accept }))
}

async fn morph(State(s): State<Arc<ServerState>>, Json(r): Json<MorphRequest>) -> Reply<MorphResponse> {
    gate(&s)?;
    let lemma = s.model.lemma(&r.word).map_err(model_error)?;
    let pos = s.model.pos_class(&r.word, &r.context).map_err(model_error)?;
    Ok(Json(MorphResponse {
        lemma,
        pos: pos.as_str().into(),
    }))
}

async fn meta(State(s): State<Arc<ServerState>>) -> Reply<MetaResponse> {
    gate(&s)?;
    let mut model_ids = std::collections::BTreeMap::new();
    model_ids.insert("all".to_string(), crate::scorers::Backend::identity(s.model.as_ref()));
    Ok(Json(MetaResponse {
        vocab_size: s.model.vocab_size(),
        dim: s.model.dim(),
        model_ids,
        eos_id: Some(s.model.eos_id()),
    }))
}

async fn tokenize(State(s): State<Arc<ServerState>>, Json(r): Json<TokenizeRequest>) -> Reply<TokenizeResponse> {
    gate(&s)?;
    let ids = s.model.tokenize(&r.text).map_err(model_error)?;
    Ok(Json(TokenizeResponse { ids }))
}

async fn detokenize(
    State(s): State<Arc<ServerState>>,
    Json(r): Json<DetokenizeRequest>,
) -> Reply<DetokenizeResponse> {
    gate(&s)?;
    let text = s.model.detokenize(&r.ids).map_err(model_error)?;
    Ok(Json(DetokenizeResponse { text }))
}

impl MockServer {
    pub fn spawn(model: Arc<MockModel>) -> std::io::Result<Self> {
        Self::spawn_with_faults(model, Faults::default())
    }

    pub fn spawn_with_faults(model: Arc<MockModel>, faults: Faults) -> std::io::Result<Self> {
        let listener = std::net::TcpListener::bind("127.0.0.1:0")?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let state = Arc::new(ServerState {
            failures_left: AtomicU32::new(faults.transient_failures),
            model,
            faults,
        });
        let app = Router::new()
            .route(LOGITS, post(logits))
            .route(INFILL, post(infill))
            .route(EMBED, post(embed))
            .route(NLI, post(nli))
            .route(COLA, post(cola))
            .route(MORPH, post(morph))
            .route(META, post(meta))
            .route(TOKENIZE, post(tokenize))
            .route(DETOKENIZE, post(detokenize))
            .with_state(state);
        let (tx, rx) = oneshot::channel::<()>();
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_io()
            .build()?;
        let thread = std::thread::spawn(move || {
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(listener).expect("listener");
                axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = rx.await;
                    })
                    .await
                    .expect("mock server");
            });
        });
        Ok(Self {
            addr,
            shutdown: Some(tx),
            thread: Some(thread),
        })
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}
