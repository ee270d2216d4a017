use std::time::Duration;

use crate::{NvdError, Result};

pub const DEFAULT_ENDPOINT: &str = "https://services.nvd.nist.gov/rest/json/cves/2.0";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reply {
    pub status: u16,
    pub body: String,
}

/// One HTTP GET per CVE id. Implemented over the network and by fixtures.
pub trait Transport {
    fn get(&self, cve: &str) -> Result<Reply>;
}

impl<T: Transport + ?Sized> Transport for &T {
    fn get(&self, cve: &str) -> Result<Reply> {
        (**self).get(cve)
    }
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
    endpoint: String,
    api_key: Option<String>,
}

impl HttpTransport {
    pub fn new(api_key: Option<String>) -> Result<Self> {
        Self::with_endpoint(DEFAULT_ENDPOINT, api_key)
    }

    pub fn with_endpoint(endpoint: &str, api_key: Option<String>) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(60))
            .user_agent(concat!("crosscat/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| NvdError::Transport(e.to_string()))?;
        Ok(HttpTransport {
            client,
            endpoint: endpoint.to_string(),
            api_key: api_key.filter(|k| !k.trim().is_empty()),
        })
    }
}

impl Transport for HttpTransport {
    fn get(&self, cve: &str) -> Result<Reply> {
        let mut req = self.client.get(&self.endpoint).query(&[("cveId", cve)]);
        if let Some(key) = &self.api_key {
            req = req.header("apiKey", key);
        }
        let resp = req.send().map_err(|e| NvdError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| NvdError::Transport(e.to_string()))?;
        Ok(Reply { status, body })
    }
}
