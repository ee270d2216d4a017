use std::collections::VecDeque;
use std::sync::Arc;
use std::time::{Duration, Instant};

use parking_lot::Mutex;

pub trait Clock: Send + Sync {
    /// Time elapsed since some fixed origin.
    fn now(&self) -> Duration;
    fn sleep(&self, d: Duration);
}

#[derive(Debug, Clone)]
pub struct SystemClock {
    origin: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        SystemClock {
            origin: Instant::now(),
        }
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d)
    }
}

/// Manually driven clock; `sleep` advances it instantly.
#[derive(Debug, Clone, Default)]
pub struct FakeClock {
    now: Arc<Mutex<Duration>>,
}

impl FakeClock {
    pub fn advance(&self, d: Duration) {
        *self.now.lock() += d;
    }
}

impl Clock for FakeClock {
    fn now(&self) -> Duration {
        *self.now.lock()
    }

    fn sleep(&self, d: Duration) {
        self.advance(d)
    }
}

/// At most `max` grants in any window of length `window`. Unlike a token
/// bucket this never lets a refill stack on top of a full burst.
pub struct RateLimiter<C: Clock> {
    clock: C,
    max: usize,
    window: Duration,
    grants: Mutex<VecDeque<Duration>>,
}

impl<C: Clock> RateLimiter<C> {
    pub fn new(clock: C, max: usize, window: Duration) -> Self {
        assert!(max > 0, "rate limit must allow at least one request");
        RateLimiter {
            clock,
            max,
            window,
            grants: Mutex::new(VecDeque::new()),
        }
    }

    pub fn clock(&self) -> &C {
        &self.clock
    }

    pub fn max(&self) -> usize {
        self.max
    }

    pub fn window(&self) -> Duration {
        self.window
    }

    /// Blocks until a request may be sent and records it.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut grants = self.grants.lock();
                let now = self.clock.now();
                while grants
                    .front()
                    .is_some_and(|t| now.saturating_sub(*t) >= self.window)
                {
                    grants.pop_front();
                }
                if grants.len() < self.max {
                    grants.push_back(now);
                    return;
                }
                self.window - now.saturating_sub(grants[0])
            };
            self.clock.sleep(wait);
        }
    }
}
