//! HTTP/JSON service over the current snapshot.
//!
//! Readers clone an `Arc` of the current snapshot under a short read lock,
//! so every request sees exactly one snapshot. Writers (submission
//! acceptance) serialize on a mutex, build the next snapshot off to the
//! side and swap it in.

mod error;
mod handlers;
mod rate;

use std::sync::Arc;

use axum::routing::{get, post};
use axum::Router;
use parking_lot::{Mutex, RwLock};

use crate::error::Result;
use crate::model::StudyRecord;
use crate::snapshot::{CorpusSnapshot, Embedding};
use crate::submissions::SubmissionStore;

pub use error::ApiError;
pub use rate::RateLimiter;

/// Chooses the embedding provider for a rebuilt record set.
pub type EmbeddingFactory = Arc<dyn Fn(&[StudyRecord]) -> Result<Embedding> + Send + Sync>;

pub struct AppState {
    snapshot: RwLock<Arc<CorpusSnapshot>>,
    writer: Mutex<SubmissionStore>,
    maintainer_token: Option<String>,
    limiter: RateLimiter,
    embedding: EmbeddingFactory,
}

impl AppState {
    pub fn new(snapshot: CorpusSnapshot, submissions: SubmissionStore) -> Self {
        AppState {
            snapshot: RwLock::new(Arc::new(snapshot)),
            writer: Mutex::new(submissions),
            maintainer_token: None,
            limiter: RateLimiter::per_minute(10),
            embedding: Arc::new(|_| Ok(Embedding::Fallback)),
        }
    }

    pub fn with_maintainer_token(mut self, token: impl Into<String>) -> Self {
        self.maintainer_token = Some(token.into());
        self
    }

    pub fn with_rate_limit(mut self, per_minute: u32) -> Self {
        self.limiter = RateLimiter::per_minute(per_minute);
        self
    }

    pub fn with_embedding(mut self, factory: EmbeddingFactory) -> Self {
        self.embedding = factory;
        self
    }

    pub fn current(&self) -> Arc<CorpusSnapshot> {
        self.snapshot.read().clone()
    }

    /// Publish a new snapshot atomically.
    pub fn publish(&self, next: CorpusSnapshot) {
        *self.snapshot.write() = Arc::new(next);
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/snapshot", get(handlers::snapshot_info))
        .route("/studies", get(handlers::studies))
        .route("/studies/{id}", get(handlers::study))
        .route("/distribution", get(handlers::distribution))
        .route("/similarity", get(handlers::similarity))
        .route("/timeline", get(handlers::timeline))
        .route("/export.csv", get(handlers::export))
        .route("/submissions", post(handlers::submit).get(handlers::list_submissions))
        .route("/submissions/{id}/accept", post(handlers::accept_submission))
        .route("/submissions/{id}/reject", post(handlers::reject_submission))
        .with_state(state)
}

/// Bind and serve until ctrl-c.
pub async fn serve(state: Arc<AppState>, bind: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
