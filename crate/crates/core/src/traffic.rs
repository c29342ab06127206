//! Constant-bit-rate VoIP source and the packet sink at the UE.

use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::SimTime;
use crate::headers::{Header, IpUdpHeader, LwaHeader, LwipHeader, SeqTsHeader};
use crate::packet::{Packet, PacketError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TrafficError {
    #[error("rate_bps must be positive")]
    ZeroRate,
    #[error("app_packet_bytes must exceed the {min} byte sequence header, got {got}")]
    PacketTooSmall { min: usize, got: usize },
}

/// Source parameters. `app_packet_bytes` is the UDP payload including
/// the 12-byte sequence/timestamp header.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnOffConfig {
    pub rate_bps: u64,
    pub app_packet_bytes: usize,
    #[serde(rename = "start_ns")]
    pub start: SimTime,
    #[serde(rename = "stop_ns")]
    pub stop: SimTime,
}

impl Default for OnOffConfig {
    fn default() -> Self {
        OnOffConfig {
            rate_bps: 64_000,
            app_packet_bytes: 600,
            start: SimTime::ZERO,
            stop: SimTime::from_millis(4_825),
        }
    }
}

impl OnOffConfig {
    pub fn validate(&self) -> Result<(), TrafficError> {
        if self.rate_bps == 0 {
            return Err(TrafficError::ZeroRate);
        }
        if self.app_packet_bytes <= SeqTsHeader::SIZE {
            return Err(TrafficError::PacketTooSmall {
                min: SeqTsHeader::SIZE + 1,
                got: self.app_packet_bytes,
            });
        }
        Ok(())
    }

    /// Inter-packet period, rounded down to whole nanoseconds.
    pub fn period(&self) -> SimTime {
        let bits = self.app_packet_bytes as u128 * 8;
        SimTime::from_nanos((bits * 1_000_000_000 / self.rate_bps as u128) as u64)
    }

    /// Emission instants `start, start + P, ...` up to and including `stop`.
    pub fn emission_schedule(&self) -> Vec<SimTime> {
        if self.stop < self.start {
            return Vec::new();
        }
        let period = self.period();
        let mut out = Vec::new();
        let mut t = self.start;
        loop {
            out.push(t);
            if period == SimTime::ZERO {
                break;
            }
            t = t + period;
            if t > self.stop {
                break;
            }
        }
        out
    }

    pub fn filler_len(&self) -> usize {
        self.app_packet_bytes - SeqTsHeader::SIZE
    }

    /// Application datagram for sequence number `seq` sent at `now`,
    /// before any IP/UDP encapsulation.
    pub fn make_app_packet(&self, seq: u32, now: SimTime) -> Packet {
        let mut p = Packet::new(u64::from(seq), self.filler_len());
        p.push_header(&SeqTsHeader { seq, ts: now })
            .expect("SeqTsHeader always encodes");
        p
    }
}

/// UDP endpoint pair used to address the application flow.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Endpoints {
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    pub src_port: u16,
    pub dst_port: u16,
}

impl Endpoints {
    pub fn header_for(&self, p: &Packet) -> IpUdpHeader {
        IpUdpHeader {
            src: self.src,
            dst: self.dst,
            src_port: self.src_port,
            dst_port: self.dst_port,
            payload_len: p.wire_len() as u16,
        }
    }

    /// Wraps `p` in an IP/UDP header addressed by these endpoints.
    pub fn encapsulate(&self, p: &mut Packet) -> Result<IpUdpHeader, PacketError> {
        let h = self.header_for(p);
        p.push_header(&h)?;
        Ok(h)
    }
}

/// Which path a delivery arrived over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeliveryPath {
    Lte,
    Lwa,
    Lwip,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DeliveryRecord {
    pub seq: u32,
    pub path: DeliveryPath,
    pub bearer_id: Option<u8>,
    pub activate: Option<u8>,
    /// IP datagram length seen at the receiving IP layer.
    pub ip_len: usize,
    pub sent_at: SimTime,
    pub received_at: SimTime,
}

impl DeliveryRecord {
    pub fn latency(&self) -> SimTime {
        self.received_at - self.sent_at
    }
}

/// Collects delivery records. Malformed packets are counted and dropped.
#[derive(Debug, Default)]
pub struct PacketSink {
    pub log: Vec<DeliveryRecord>,
    pub corrupt: u64,
}

impl PacketSink {
    pub fn new() -> Self {
        Self::default()
    }

    /// Strips the headers expected on `path` and logs the delivery.
    pub fn receive(
        &mut self,
        p: Packet,
        now: SimTime,
        path: DeliveryPath,
    ) -> Result<&DeliveryRecord, PacketError> {
        match parse_delivery(p, now, path) {
            Ok(rec) => {
                self.log.push(rec);
                Ok(self.log.last().unwrap())
            }
            Err(e) => {
                log::warn!("malformed delivery at {now}: {e}");
                self.corrupt += 1;
                Err(e)
            }
        }
    }
}

fn parse_delivery(
    mut p: Packet,
    now: SimTime,
    path: DeliveryPath,
) -> Result<DeliveryRecord, PacketError> {
    let ip_len = p.wire_len();
    p.pop_header::<IpUdpHeader>()?;
    let (activate, bearer_id) = match path {
        DeliveryPath::Lte => (None, None),
        DeliveryPath::Lwa => {
            let h = p.pop_header::<LwaHeader>()?;
            p.pop_framing()?;
            (Some(h.activate), Some(h.bearer_id))
        }
        DeliveryPath::Lwip => {
            let h = p.pop_header::<LwipHeader>()?;
            p.pop_framing()?;
            (Some(h.activate), Some(h.bearer_id))
        }
    };
    let seq_ts = p.pop_header::<SeqTsHeader>()?;
    Ok(DeliveryRecord {
        seq: seq_ts.seq,
        path,
        bearer_id,
        activate,
        ip_len,
        sent_at: seq_ts.ts,
        received_at: now,
    })
}
