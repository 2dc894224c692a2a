//! Wall-clock helpers. `wasm32-unknown-unknown` has no monotonic clock in
//! `std`, so there every stopwatch reads zero and deadlines never expire.

use std::time::Duration;

#[cfg(not(target_arch = "wasm32"))]
use std::time::Instant;

#[derive(Debug, Clone, Copy)]
pub struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    started: Instant,
}

impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch {
            #[cfg(not(target_arch = "wasm32"))]
            started: Instant::now(),
        }
    }

    pub fn elapsed(&self) -> Duration {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.started.elapsed()
        }
        #[cfg(target_arch = "wasm32")]
        {
            Duration::ZERO
        }
    }
}

/// Optional time budget measured from construction.
#[derive(Debug, Clone, Copy)]
pub struct Deadline {
    watch: Stopwatch,
    budget: Option<Duration>,
}

impl Deadline {
    pub fn new(budget: Option<Duration>) -> Self {
        Deadline { watch: Stopwatch::start(), budget }
    }

    pub fn never() -> Self {
        Deadline::new(None)
    }

    pub fn expired(&self) -> bool {
        self.budget.is_some_and(|b| self.watch.elapsed() >= b)
    }

    /// Time left, `None` when unbounded.
    pub fn remaining(&self) -> Option<Duration> {
        self.budget.map(|b| b.saturating_sub(self.watch.elapsed()))
    }

    pub fn elapsed(&self) -> Duration {
        self.watch.elapsed()
    }
}
