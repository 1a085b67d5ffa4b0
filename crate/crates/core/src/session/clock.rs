use chrono::{DateTime, TimeDelta, Utc};

/// Source of node timestamps. `sequence` is the number of events already
/// recorded in the session, which lets [`LogicalClock`] produce the same
/// timestamps no matter when, or in how many processes, a session is built.
pub trait Clock: Send + Sync {
    fn now(&self, sequence: u64) -> DateTime<Utc>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self, _sequence: u64) -> DateTime<Utc> {
        Utc::now()
    }
}

/// One second per event after a fixed epoch.
#[derive(Debug, Clone, Copy)]
pub struct LogicalClock {
    epoch: DateTime<Utc>,
}

impl LogicalClock {
    pub fn new(epoch: DateTime<Utc>) -> Self {
        Self { epoch }
    }
}

impl Default for LogicalClock {
    fn default() -> Self {
        Self::new(DateTime::UNIX_EPOCH)
    }
}

impl Clock for LogicalClock {
    fn now(&self, sequence: u64) -> DateTime<Utc> {
        self.epoch + TimeDelta::seconds(sequence as i64)
    }
}
