use std::collections::HashMap;
use std::path::Path;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use parking_lot::Mutex;
use rand::RngCore;

use crosscat_core::ActorId;

/// Environment variable naming the JSON secrets file (`{"actor": "secret"}`).
pub const SECRETS_ENV: &str = "CROSSCAT_SECRETS";

pub fn load_secrets(path: &Path) -> std::io::Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
}

#[derive(Debug, Clone)]
pub struct Session {
    pub actor: ActorId,
    pub expires: Instant,
    pub expires_at: u64,
}

/// Static per-actor secrets in, bearer tokens out.
pub struct Sessions {
    secrets: HashMap<String, String>,
    ttl: Duration,
    live: Mutex<HashMap<String, Session>>,
}

fn same(a: &str, b: &str) -> bool {
    // length leaks, content does not
    a.len() == b.len() && a.bytes().zip(b.bytes()).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

impl Sessions {
    pub fn new(secrets: HashMap<String, String>, ttl: Duration) -> Self {
        Sessions {
            secrets,
            ttl,
            live: Mutex::new(HashMap::new()),
        }
    }

    pub fn login(&self, actor: &str, secret: &str) -> Option<(String, Session)> {
        let known = self.secrets.get(actor)?;
        if secret.is_empty() || !same(known, secret) {
            return None;
        }
        let mut raw = [0u8; 32];
        rand::thread_rng().fill_bytes(&mut raw);
        let token: String = raw.iter().map(|b| format!("{b:02x}")).collect();
        let now = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
        let session = Session {
            actor: ActorId::from(actor),
            expires: Instant::now() + self.ttl,
            expires_at: (now + self.ttl).as_secs(),
        };
        let mut live = self.live.lock();
        live.retain(|_, s| s.expires > Instant::now());
        live.insert(token.clone(), session.clone());
        Some((token, session))
    }

    pub fn check(&self, token: &str) -> Option<Session> {
        let mut live = self.live.lock();
        match live.get(token) {
            Some(s) if s.expires > Instant::now() => Some(s.clone()),
            Some(_) => {
                live.remove(token);
                None
            }
            None => None,
        }
    }

    pub fn logout(&self, token: &str) -> bool {
        self.live.lock().remove(token).is_some()
    }
}
