use std::sync::Mutex;
use std::time::{Duration, Instant};

/// Spaces out request starts so that no more than `per_second` begin in any
/// one-second window on average. Runtime-agnostic: callers sleep for the
/// returned delay themselves.
#[derive(Debug)]
pub struct Pacer {
    spacing: Duration,
    next_slot: Mutex<Option<Instant>>,
}

impl Pacer {
    pub fn per_second(rate: f64) -> Self {
        Self::with_spacing(Duration::from_secs_f64(1.0 / rate.max(1e-9)))
    }

    pub fn per_minute(rate: f64) -> Self {
        Self::with_spacing(Duration::from_secs_f64(60.0 / rate.max(1e-9)))
    }

    pub fn with_spacing(spacing: Duration) -> Self {
        Self { spacing, next_slot: Mutex::new(None) }
    }

    /// Claims the next start slot and returns how long to wait for it.
    pub fn reserve(&self) -> Duration {
        let now = Instant::now();
        let mut next = self.next_slot.lock().expect("pacer lock");
        let slot = match *next {
            Some(t) if t > now => t,
            _ => now,
        };
        *next = Some(slot + self.spacing);
        slot - now
    }
}
