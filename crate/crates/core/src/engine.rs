//! Deterministic discrete-event scheduler.
//!
//! Time is an integer nanosecond count so that periodic activities (the
//! 0.1 ms offload poll, the 75 ms VoIP period) land on exact instants.
//! Events sharing a timestamp run in insertion order.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::ops::{Add, Sub};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Simulated time in nanoseconds since the start of the run.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(u64::MAX);

    pub const fn from_nanos(nanos: u64) -> Self {
        SimTime(nanos)
    }

    pub const fn from_micros(micros: u64) -> Self {
        SimTime(micros * 1_000)
    }

    pub const fn from_millis(millis: u64) -> Self {
        SimTime(millis * 1_000_000)
    }

    pub const fn from_secs(secs: u64) -> Self {
        SimTime(secs * 1_000_000_000)
    }

    pub const fn as_nanos(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e9
    }

    pub fn checked_sub(self, rhs: SimTime) -> Option<SimTime> {
        self.0.checked_sub(rhs.0).map(SimTime)
    }

    pub fn saturating_add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_add(rhs.0))
    }
}

impl Add for SimTime {
    type Output = SimTime;

    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl Sub for SimTime {
    type Output = SimTime;

    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl From<SimTime> for Duration {
    fn from(t: SimTime) -> Duration {
        Duration::from_nanos(t.0)
    }
}

impl From<Duration> for SimTime {
    fn from(d: Duration) -> SimTime {
        SimTime(d.as_nanos() as u64)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}.{:09}s",
            self.0 / 1_000_000_000,
            self.0 % 1_000_000_000
        )
    }
}

/// Handle returned by [`Scheduler::schedule`]; equal to the insertion counter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventId(pub u64);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("causality violation: cannot schedule at {at} when clock reads {now}")]
    Causality { at: SimTime, now: SimTime },
}

struct Entry<E> {
    fire_at: SimTime,
    seq: u64,
    action: E,
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.fire_at == other.fire_at && self.seq == other.seq
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    // BinaryHeap is a max-heap; reverse so the earliest (time, seq) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .fire_at
            .cmp(&self.fire_at)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Event queue plus clock. `E` is the caller's description of what to do
/// when the event fires; the scheduler never interprets it.
pub struct Scheduler<E> {
    now: SimTime,
    next_seq: u64,
    executed: u64,
    queue: BinaryHeap<Entry<E>>,
}

impl<E> Default for Scheduler<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> Scheduler<E> {
    pub fn new() -> Self {
        Scheduler {
            now: SimTime::ZERO,
            next_seq: 0,
            executed: 0,
            queue: BinaryHeap::new(),
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Number of events executed so far.
    pub fn executed(&self) -> u64 {
        self.executed
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.queue.peek().map(|e| e.fire_at)
    }

    pub fn schedule(&mut self, at: SimTime, action: E) -> Result<EventId, EngineError> {
        if at < self.now {
            return Err(EngineError::Causality { at, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Entry {
            fire_at: at,
            seq,
            action,
        });
        Ok(EventId(seq))
    }

    pub fn schedule_in(&mut self, delay: SimTime, action: E) -> EventId {
        let at = self.now + delay;
        self.schedule(at, action)
            .expect("relative schedule is never in the past")
    }

    /// Pops the next event if it fires at or before `end`, advancing the clock to it.
    pub fn pop_until(&mut self, end: SimTime) -> Option<(SimTime, E)> {
        if self.queue.peek()?.fire_at > end {
            return None;
        }
        let entry = self.queue.pop()?;
        self.now = entry.fire_at;
        self.executed += 1;
        Some((entry.fire_at, entry.action))
    }

    /// Runs every event with `fire_at <= end` through `handler`, which may
    /// schedule further events. Afterwards the clock reads `end` (or stays put
    /// if it was already past it).
    pub fn run_until<F>(&mut self, end: SimTime, mut handler: F)
    where
        F: FnMut(&mut Scheduler<E>, E),
    {
        while let Some((_, action)) = self.pop_until(end) {
            handler(self, action);
        }
        if end > self.now {
            self.now = end;
        }
    }

    /// Runs until the queue is empty.
    pub fn run<F>(&mut self, handler: F)
    where
        F: FnMut(&mut Scheduler<E>, E),
    {
        self.run_until(SimTime::MAX, handler);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_timestamps_are_fifo() {
        let mut s = Scheduler::new();
        s.schedule(SimTime::ZERO, "A").unwrap();
        s.schedule(SimTime::ZERO, "B").unwrap();
        let mut order = Vec::new();
        s.run_until(SimTime::from_secs(1), |_, a| order.push(a));
        assert_eq!(order, vec!["A", "B"]);
    }

    #[test]
    fn scheduling_in_the_past_is_rejected() {
        let mut s: Scheduler<()> = Scheduler::new();
        s.run_until(SimTime::from_nanos(10), |_, _| {});
        let err = s.schedule(SimTime::from_nanos(5), ()).unwrap_err();
        assert_eq!(
            err,
            EngineError::Causality {
                at: SimTime::from_nanos(5),
                now: SimTime::from_nanos(10)
            }
        );
    }

    #[test]
    fn fires_at_exact_integer_time() {
        let mut s = Scheduler::new();
        s.schedule(SimTime::from_micros(100), ()).unwrap();
        let mut seen = None;
        s.run(|s, _| seen = Some(s.now()));
        assert_eq!(seen, Some(SimTime::from_nanos(100_000)));
    }

    #[test]
    fn empty_queue_advances_clock_to_end() {
        let mut s: Scheduler<()> = Scheduler::new();
        s.run_until(SimTime::from_secs(1), |_, _| panic!("no events"));
        assert_eq!(s.now(), SimTime::from_secs(1));
        assert_eq!(s.executed(), 0);
    }

    #[test]
    fn run_until_is_inclusive_and_stops() {
        let mut s = Scheduler::new();
        for ms in [1, 2, 3] {
            s.schedule(SimTime::from_millis(ms), ms).unwrap();
        }
        let mut ran = Vec::new();
        s.run_until(SimTime::from_millis(2), |_, ms| ran.push(ms));
        assert_eq!(ran, vec![1, 2]);
        assert_eq!(s.pending(), 1);
        assert_eq!(s.now(), SimTime::from_millis(2));
    }

    #[test]
    fn recurring_poll_count_matches_enumeration() {
        let interval = SimTime::from_micros(100);
        let end = SimTime::from_micros(4_825_000);

        // enumeration oracle: every k*interval with 1 <= k and k*interval <= end
        let mut expected = 0u64;
        let mut t = interval.as_nanos();
        while t <= end.as_nanos() {
            expected += 1;
            t += interval.as_nanos();
        }
        assert_eq!(expected, 48_250);

        let mut s = Scheduler::new();
        s.schedule(interval, ()).unwrap();
        let mut fired = 0u64;
        s.run_until(end, |s, ()| {
            fired += 1;
            s.schedule_in(interval, ());
        });
        assert_eq!(fired, expected);
    }

    #[test]
    fn clock_never_moves_backward() {
        let mut s = Scheduler::new();
        for t in [50u64, 10, 30, 10, 70, 0] {
            s.schedule(SimTime::from_nanos(t), t).unwrap();
        }
        let mut last = SimTime::ZERO;
        s.run(|s, _| {
            assert!(s.now() >= last);
            last = s.now();
        });
    }
}
