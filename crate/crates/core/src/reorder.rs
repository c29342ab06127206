//! In-sequence aggregation of the LTE and Wi-Fi deliveries at the UE.
//!
//! A single reordering timer guards the buffer. Its deadline is always the
//! arrival of the oldest held packet plus `t_reordering`, so it restarts
//! whenever partial progress releases that packet. On expiry the buffer
//! skips to the smallest held sequence number, recording the gap as lost.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::engine::SimTime;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ReorderStats {
    pub delivered: u64,
    pub lost: u64,
    pub duplicates: u64,
    pub holds: u64,
    pub max_held: usize,
    pub timeouts: u64,
}

#[derive(Debug, PartialEq, Eq)]
pub struct Flush<T> {
    pub delivered: Vec<(u32, T)>,
    pub lost: Vec<u32>,
}

#[derive(Debug)]
pub struct ReorderBuffer<T> {
    next_expected: u32,
    held: BTreeMap<u32, (T, SimTime)>,
    t_reordering: SimTime,
    pub stats: ReorderStats,
}

impl<T> ReorderBuffer<T> {
    pub fn new(t_reordering: SimTime) -> Self {
        ReorderBuffer {
            next_expected: 0,
            held: BTreeMap::new(),
            t_reordering,
            stats: ReorderStats::default(),
        }
    }

    pub fn next_expected(&self) -> u32 {
        self.next_expected
    }

    pub fn held(&self) -> usize {
        self.held.len()
    }

    pub fn held_seqs(&self) -> impl Iterator<Item = u32> + '_ {
        self.held.keys().copied()
    }

    /// When the reordering timer fires, if anything is held.
    pub fn deadline(&self) -> Option<SimTime> {
        self.held
            .values()
            .map(|(_, at)| *at)
            .min()
            .map(|at| at + self.t_reordering)
    }

    /// Accepts one arrival and returns whatever became deliverable in order.
    pub fn ingest(&mut self, seq: u32, item: T, now: SimTime) -> Vec<(u32, T)> {
        if seq < self.next_expected || self.held.contains_key(&seq) {
            self.stats.duplicates += 1;
            return Vec::new();
        }
        if seq > self.next_expected {
            self.held.insert(seq, (item, now));
            self.stats.holds += 1;
            self.stats.max_held = self.stats.max_held.max(self.held.len());
            return Vec::new();
        }
        let mut out = vec![(seq, item)];
        self.next_expected = seq.wrapping_add(1);
        self.drain_consecutive(&mut out);
        self.stats.delivered += out.len() as u64;
        out
    }

    /// Handles timer expiry at `now`. Does nothing if the deadline has not
    /// been reached (a stale timer event).
    pub fn on_timeout(&mut self, now: SimTime) -> Flush<T> {
        let mut flush = Flush {
            delivered: Vec::new(),
            lost: Vec::new(),
        };
        let mut fired = false;
        while matches!(self.deadline(), Some(d) if d <= now) {
            fired = true;
            self.skip_gap(&mut flush);
        }
        if fired {
            self.stats.timeouts += 1;
        }
        flush
    }

    /// Releases everything held, recording every gap as lost.
    pub fn flush_all(&mut self) -> Flush<T> {
        let mut flush = Flush {
            delivered: Vec::new(),
            lost: Vec::new(),
        };
        while !self.held.is_empty() {
            self.skip_gap(&mut flush);
        }
        flush
    }

    fn skip_gap(&mut self, flush: &mut Flush<T>) {
        let Some(&first) = self.held.keys().next() else {
            return;
        };
        flush.lost.extend(self.next_expected..first);
        self.stats.lost += u64::from(first - self.next_expected);
        self.next_expected = first;
        let start = flush.delivered.len();
        self.drain_consecutive(&mut flush.delivered);
        self.stats.delivered += (flush.delivered.len() - start) as u64;
    }

    fn drain_consecutive(&mut self, out: &mut Vec<(u32, T)>) {
        while let Some((item, _)) = self.held.remove(&self.next_expected) {
            out.push((self.next_expected, item));
            self.next_expected = self.next_expected.wrapping_add(1);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const T_R: SimTime = SimTime::from_millis(100);

    fn seqs<T>(v: &[(u32, T)]) -> Vec<u32> {
        v.iter().map(|(s, _)| *s).collect()
    }

    #[test]
    fn in_order_passes_through() {
        let mut b = ReorderBuffer::new(T_R);
        for s in 0..3 {
            assert_eq!(seqs(&b.ingest(s, (), SimTime::ZERO)), vec![s]);
        }
        assert_eq!(b.stats.holds, 0);
        assert_eq!(b.deadline(), None);
    }

    #[test]
    fn gap_is_filled() {
        let mut b = ReorderBuffer::new(T_R);
        assert_eq!(seqs(&b.ingest(0, (), SimTime::ZERO)), vec![0]);
        assert!(b.ingest(2, (), SimTime::from_millis(1)).is_empty());
        assert_eq!(b.deadline(), Some(SimTime::from_millis(101)));
        assert_eq!(seqs(&b.ingest(1, (), SimTime::from_millis(2))), vec![1, 2]);
        assert_eq!(b.deadline(), None);
    }

    #[test]
    fn duplicates_are_dropped() {
        let mut b = ReorderBuffer::new(T_R);
        b.ingest(0, (), SimTime::ZERO);
        assert!(b.ingest(0, (), SimTime::ZERO).is_empty());
        b.ingest(3, (), SimTime::ZERO);
        assert!(b.ingest(3, (), SimTime::ZERO).is_empty());
        assert_eq!(b.stats.duplicates, 2);
    }

    #[test]
    fn timeout_skips_gap() {
        let mut b = ReorderBuffer::new(T_R);
        b.ingest(0, 'a', SimTime::ZERO);
        b.ingest(2, 'c', SimTime::from_millis(10));
        // early, stale timer
        let f = b.on_timeout(SimTime::from_millis(50));
        assert!(f.delivered.is_empty() && f.lost.is_empty());
        let f = b.on_timeout(SimTime::from_millis(110));
        assert_eq!(f.delivered, vec![(2, 'c')]);
        assert_eq!(f.lost, vec![1]);
        assert_eq!(b.stats.timeouts, 1);
        assert_eq!(b.next_expected(), 3);
    }

    #[test]
    fn timeout_stops_at_next_gap_when_not_overdue() {
        let mut b = ReorderBuffer::new(T_R);
        b.ingest(1, (), SimTime::ZERO);
        b.ingest(4, (), SimTime::from_millis(60));
        let f = b.on_timeout(SimTime::from_millis(100));
        assert_eq!(seqs(&f.delivered), vec![1]);
        assert_eq!(f.lost, vec![0]);
        assert_eq!(b.deadline(), Some(SimTime::from_millis(160)));
        let f = b.on_timeout(SimTime::from_millis(160));
        assert_eq!(seqs(&f.delivered), vec![4]);
        assert_eq!(f.lost, vec![2, 3]);
    }

    #[test]
    fn flush_all_releases_everything() {
        let mut b = ReorderBuffer::new(T_R);
        b.ingest(1, (), SimTime::ZERO);
        b.ingest(3, (), SimTime::ZERO);
        let f = b.flush_all();
        assert_eq!(seqs(&f.delivered), vec![1, 3]);
        assert_eq!(f.lost, vec![0, 2]);
        assert_eq!(b.held(), 0);
    }

    /// Drives the buffer the way the simulator does: timer events at the
    /// reported deadline, interleaved with arrivals.
    fn drive(arrivals: &[(u32, SimTime)]) -> (Vec<u32>, Vec<u32>, ReorderBuffer<()>, Vec<SimTime>) {
        let mut b = ReorderBuffer::new(T_R);
        let mut delivered = Vec::new();
        let mut lost = Vec::new();
        let mut release = Vec::new();
        let mut arrived_at = std::collections::HashMap::new();
        for &(seq, at) in arrivals {
            while let Some(d) = b.deadline().filter(|d| *d < at) {
                let f = b.on_timeout(d);
                for (s, _) in &f.delivered {
                    release.push(d - arrived_at[s]);
                }
                delivered.extend(seqs(&f.delivered));
                lost.extend(f.lost);
            }
            arrived_at.entry(seq).or_insert(at);
            for (s, _) in b.ingest(seq, (), at) {
                release.push(at - arrived_at[&s]);
                delivered.push(s);
            }
        }
        while let Some(d) = b.deadline() {
            let f = b.on_timeout(d);
            for (s, _) in &f.delivered {
                release.push(d - arrived_at[s]);
            }
            delivered.extend(seqs(&f.delivered));
            lost.extend(f.lost);
        }
        (delivered, lost, b, release)
    }

    proptest! {
        #[test]
        fn output_is_strictly_increasing_and_bounded(
            mut arr in proptest::collection::vec((0u32..40, 0u64..400), 0..80)
        ) {
            arr.sort_by_key(|&(_, t)| t);
            let arrivals: Vec<(u32, SimTime)> =
                arr.iter().map(|&(s, t)| (s, SimTime::from_millis(t))).collect();
            let (delivered, lost, b, release) = drive(&arrivals);
            prop_assert!(delivered.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(release.iter().all(|&r| r <= T_R));
            prop_assert_eq!(b.held(), 0);
            let distinct: std::collections::BTreeSet<u32> = arr.iter().map(|a| a.0).collect();
            // every distinct seq is delivered once, or discarded as stale
            prop_assert_eq!(
                delivered.len() as u64 + b.stats.duplicates,
                arr.len() as u64
            );
            prop_assert!(delivered.iter().all(|s| distinct.contains(s)));
            prop_assert!(lost.iter().all(|s| !delivered.contains(s)));
        }

        #[test]
        fn permutation_within_window_is_complete(perm in Just((0u32..30).collect::<Vec<_>>()).prop_shuffle()) {
            // all arrivals inside one reordering window
            let arrivals: Vec<(u32, SimTime)> = perm
                .iter()
                .enumerate()
                .map(|(i, &s)| (s, SimTime::from_millis(i as u64)))
                .collect();
            let (delivered, lost, b, _) = drive(&arrivals);
            prop_assert_eq!(delivered, (0..30).collect::<Vec<_>>());
            prop_assert!(lost.is_empty());
            prop_assert_eq!(b.stats.timeouts, 0);
        }
    }
}
