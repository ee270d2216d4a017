//! Client for the NVD CVE API (2.0): fetches base score and attack vector
//! for a CVE, keeps the raw payloads in a content-addressed cache and paces
//! requests so a sliding window limit is never exceeded.

mod cache;
mod limiter;
mod parse;
mod transport;

use std::time::Duration;

use crosscat_core::ingest::NvdResponse;
use crosscat_core::model::CveId;

pub use cache::Cache;
pub use limiter::{Clock, FakeClock, RateLimiter, SystemClock};
pub use parse::parse_response;
pub use transport::{HttpTransport, Reply, Transport, DEFAULT_ENDPOINT};

#[derive(Debug, thiserror::Error)]
pub enum NvdError {
    #[error("{0} not found in NVD")]
    NotFound(String),
    #[error("rate limited by NVD (HTTP {status})")]
    RateLimited { status: u16 },
    #[error("unexpected NVD payload for {cve}: {detail}")]
    UpstreamSchemaError { cve: String, detail: String },
    #[error("NVD returned HTTP {status}")]
    Upstream { status: u16 },
    #[error("{0} not cached and the client is offline")]
    Offline(String),
    #[error("transport: {0}")]
    Transport(String),
    #[error("cache: {0}")]
    Cache(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NvdError>;

/// Default pacing of the public service without an API key.
pub const DEFAULT_WINDOW: Duration = Duration::from_secs(30);
pub const DEFAULT_REQUESTS: usize = 5;
/// Allowance with an API key.
pub const KEYED_REQUESTS: usize = 50;

pub struct NvdClient<T: Transport, C: Clock> {
    transport: T,
    limiter: RateLimiter<C>,
    cache: Option<Cache>,
    offline: bool,
}

impl<T: Transport, C: Clock> NvdClient<T, C> {
    pub fn new(transport: T, limiter: RateLimiter<C>) -> Self {
        NvdClient {
            transport,
            limiter,
            cache: None,
            offline: false,
        }
    }

    pub fn with_cache(mut self, cache: Cache) -> Self {
        self.cache = Some(cache);
        self
    }

    /// Never touch the transport; cache misses become [`NvdError::Offline`].
    pub fn offline(mut self, offline: bool) -> Self {
        self.offline = offline;
        self
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    pub fn limiter(&self) -> &RateLimiter<C> {
        &self.limiter
    }

    /// Score and attack vector for one CVE, from cache when possible.
    pub fn fetch_cve(&self, cve: &CveId) -> Result<NvdResponse> {
        if let Some(cache) = &self.cache {
            if let Some(body) = cache.get(cve.as_str())? {
                return parse_response(cve, &body);
            }
        }
        if self.offline {
            return Err(NvdError::Offline(cve.to_string()));
        }
        self.limiter.acquire();
        let reply = self.transport.get(cve.as_str())?;
        match reply.status {
            200 => {}
            404 => return Err(NvdError::NotFound(cve.to_string())),
            403 | 429 | 503 => return Err(NvdError::RateLimited { status: reply.status }),
            status => return Err(NvdError::Upstream { status }),
        }
        let parsed = parse_response(cve, &reply.body)?;
        if let Some(cache) = &self.cache {
            cache.put(cve.as_str(), &reply.body)?;
        }
        Ok(parsed)
    }

    /// Fetches every id in order; failures are reported per id.
    pub fn fetch_all<'a>(
        &self,
        ids: impl IntoIterator<Item = &'a CveId>,
    ) -> Vec<(CveId, Result<NvdResponse>)> {
        ids.into_iter()
            .map(|id| (id.clone(), self.fetch_cve(id)))
            .collect()
    }
}
