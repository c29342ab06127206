//! Rate + propagation-delay link abstraction with FIFO transmission.

use serde::{Deserialize, Serialize};

use crate::engine::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkModel {
    pub rate_bps: u64,
    #[serde(rename = "delay_ns")]
    pub delay: SimTime,
    /// Per-frame framing bytes, present on the medium and stripped at the receiver.
    #[serde(default)]
    pub framing_overhead_bytes: usize,
}

impl LinkModel {
    pub fn new(rate_bps: u64, delay: SimTime) -> Self {
        LinkModel {
            rate_bps,
            delay,
            framing_overhead_bytes: 0,
        }
    }

    pub fn with_framing(mut self, bytes: usize) -> Self {
        self.framing_overhead_bytes = bytes;
        self
    }

    /// Length of a frame on the medium for a `len` byte packet.
    pub fn frame_len(&self, len: usize) -> usize {
        len + self.framing_overhead_bytes
    }

    /// `frame_len * 8 / rate_bps`, rounded up to whole nanoseconds.
    pub fn serialization(&self, len: usize) -> SimTime {
        let bits = self.frame_len(len) as u128 * 8 * 1_000_000_000;
        let rate = self.rate_bps as u128;
        SimTime::from_nanos(bits.div_ceil(rate) as u64)
    }
}

/// A link instance: the model plus the time its transmitter frees up.
#[derive(Clone, Debug)]
pub struct Link {
    pub model: LinkModel,
    busy_until: SimTime,
    pub frames: u64,
}

/// Timing of one transmission.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Transmission {
    pub start: SimTime,
    pub arrival: SimTime,
}

impl Link {
    pub fn new(model: LinkModel) -> Self {
        Link {
            model,
            busy_until: SimTime::ZERO,
            frames: 0,
        }
    }

    /// Queues a `len` byte packet behind earlier frames and returns when it
    /// starts serializing and when it reaches the far end.
    pub fn transmit(&mut self, now: SimTime, len: usize) -> Transmission {
        let start = now.max(self.busy_until);
        let done = start + self.model.serialization(len);
        self.busy_until = done;
        self.frames += 1;
        Transmission {
            start,
            arrival: done + self.model.delay,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arrival_is_send_plus_delay_plus_serialization() {
        // 1000 B at 8 Mb/s = 1 ms
        let mut l = Link::new(LinkModel::new(8_000_000, SimTime::from_millis(2)));
        let tx = l.transmit(SimTime::from_millis(10), 1000);
        assert_eq!(tx.start, SimTime::from_millis(10));
        assert_eq!(tx.arrival, SimTime::from_millis(13));
    }

    #[test]
    fn back_to_back_frames_queue_fifo() {
        let mut l = Link::new(LinkModel::new(8_000_000, SimTime::ZERO));
        let a = l.transmit(SimTime::ZERO, 1000);
        let b = l.transmit(SimTime::ZERO, 1000);
        assert_eq!(a.arrival, SimTime::from_millis(1));
        assert_eq!(b.start, SimTime::from_millis(1));
        assert_eq!(b.arrival, SimTime::from_millis(2));
    }

    #[test]
    fn framing_counts_toward_serialization() {
        let m = LinkModel::new(8_000_000, SimTime::ZERO).with_framing(82);
        assert_eq!(m.frame_len(658), 740);
        assert_eq!(m.serialization(658), SimTime::from_nanos(740_000));
        assert_eq!(LinkModel::new(1, SimTime::ZERO).frame_len(658), 658);
    }

    #[test]
    fn serialization_rounds_up() {
        let m = LinkModel::new(3, SimTime::ZERO);
        // 8 bits at 3 b/s = 2.666..s
        assert_eq!(m.serialization(1), SimTime::from_nanos(2_666_666_667));
    }
}
