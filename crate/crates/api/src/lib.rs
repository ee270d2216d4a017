//! HTTP/JSON service over a categorisation project.
//!
//! Handlers are thin: they authenticate, parse, call one workflow, stats or
//! store operation and serialize the result. Role checks live in the core.

mod error;
mod routes;
mod session;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use parking_lot::RwLock;

use crosscat_core::store;
use crosscat_core::workflow::Project;

pub use error::{classify, ApiError};
pub use routes::router;
pub use session::{load_secrets, Session, Sessions, SECRETS_ENV};

pub const DEFAULT_SESSION_TTL: Duration = Duration::from_secs(12 * 3600);

/// Shared server state: the project, live sessions and where to persist.
pub struct AppState {
    project: RwLock<Project>,
    sessions: Sessions,
    snapshot: Option<PathBuf>,
}

impl AppState {
    pub fn new(project: Project, secrets: HashMap<String, String>) -> Self {
        Self::with_sessions(project, Sessions::new(secrets, DEFAULT_SESSION_TTL))
    }

    pub fn with_sessions(project: Project, sessions: Sessions) -> Self {
        AppState {
            project: RwLock::new(project),
            sessions,
            snapshot: None,
        }
    }

    /// Persist every successful mutation to `path`.
    pub fn persist_to(mut self, path: PathBuf) -> Self {
        self.snapshot = Some(path);
        self
    }

    pub fn sessions(&self) -> &Sessions {
        &self.sessions
    }

    /// Read access for callers embedding the server.
    pub fn read<T>(&self, f: impl FnOnce(&Project) -> T) -> T {
        f(&self.project.read())
    }

    /// Runs `op` on a copy of the project and installs it only if the op
    /// succeeds and, when persisting, the snapshot on disk was still at our
    /// base revision.
    pub(crate) fn mutate<T>(
        &self,
        op: impl FnOnce(&mut Project) -> crosscat_core::Result<T>,
    ) -> Result<T, ApiError> {
        let mut guard = self.project.write();
        let mut next = guard.clone();
        let out = op(&mut next)?;
        if next.revision != guard.revision {
            if let Some(path) = &self.snapshot {
                store::save(path, &next, Some(guard.revision))?;
            }
            *guard = next;
        }
        Ok(out)
    }
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(addr: &str, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}
