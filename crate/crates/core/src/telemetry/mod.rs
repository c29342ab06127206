//! Per-flow statistics in the style of a flow monitor, plus pcap taps.

pub mod pcap;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::net::Ipv4Addr;

use serde::Serialize;
use thiserror::Error;

use crate::engine::SimTime;
use crate::headers::IpUdpHeader;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TelemetryError {
    #[error("throughput undefined: last rx ({last_rx}) is not after first tx ({first_tx})")]
    UndefinedThroughput { first_tx: SimTime, last_rx: SimTime },
    #[error("flow has received nothing")]
    NoTraffic,
}

/// UDP four-tuple; the protocol is always UDP.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct FlowKey {
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    pub src_port: u16,
    pub dst_port: u16,
}

impl From<&IpUdpHeader> for FlowKey {
    fn from(h: &IpUdpHeader) -> Self {
        FlowKey {
            src: h.src,
            dst: h.dst,
            src_port: h.src_port,
            dst_port: h.dst_port,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FlowStats {
    pub tx_packets: u64,
    pub rx_packets: u64,
    pub tx_bytes: u64,
    pub rx_bytes: u64,
    pub time_first_tx: Option<SimTime>,
    pub time_last_tx: Option<SimTime>,
    pub time_first_rx: Option<SimTime>,
    pub time_last_rx: Option<SimTime>,
    pub delays: Vec<SimTime>,
    pub lost_packets: u64,
}

impl FlowStats {
    pub fn delay_sum(&self) -> SimTime {
        SimTime::from_nanos(self.delays.iter().map(|d| d.as_nanos()).sum())
    }

    pub fn mean_delay(&self) -> Option<SimTime> {
        let n = self.delays.len() as u64;
        (n > 0).then(|| SimTime::from_nanos(self.delay_sum().as_nanos() / n))
    }
}

/// `rx_bytes * 8 / (last_rx - first_tx) / 1024`, in kbit/s.
pub fn throughput_kbps(s: &FlowStats) -> Result<f64, TelemetryError> {
    let (Some(first_tx), Some(last_rx)) = (s.time_first_tx, s.time_last_rx) else {
        return Err(TelemetryError::NoTraffic);
    };
    if last_rx <= first_tx {
        return Err(TelemetryError::UndefinedThroughput { first_tx, last_rx });
    }
    let dt = last_rx.as_secs_f64() - first_tx.as_secs_f64();
    Ok(s.rx_bytes as f64 * 8.0 / dt / 1024.0)
}

/// Collects tx/rx events per flow. Flow ids are assigned in order of first
/// appearance, starting at 1.
#[derive(Debug, Default)]
pub struct FlowMonitor {
    flows: Vec<(FlowKey, FlowStats)>,
    index: HashMap<FlowKey, usize>,
    in_flight: HashMap<(usize, u64), SimTime>,
}

impl FlowMonitor {
    pub fn new() -> Self {
        Self::default()
    }

    fn slot(&mut self, key: FlowKey) -> usize {
        *self.index.entry(key).or_insert_with(|| {
            self.flows.push((key, FlowStats::default()));
            self.flows.len() - 1
        })
    }

    pub fn flow_id(&self, key: &FlowKey) -> Option<u32> {
        self.index.get(key).map(|i| *i as u32 + 1)
    }

    pub fn record_tx(&mut self, key: FlowKey, uid: u64, now: SimTime, bytes: usize) {
        let i = self.slot(key);
        let s = &mut self.flows[i].1;
        s.tx_packets += 1;
        s.tx_bytes += bytes as u64;
        s.time_first_tx.get_or_insert(now);
        s.time_last_tx = Some(now);
        self.in_flight.insert((i, uid), now);
    }

    /// Returns the flow's tx timestamp for this packet, if it was seen.
    pub fn record_rx(
        &mut self,
        key: FlowKey,
        uid: u64,
        now: SimTime,
        bytes: usize,
    ) -> Option<SimTime> {
        let i = self.slot(key);
        let sent = self.in_flight.remove(&(i, uid));
        let s = &mut self.flows[i].1;
        s.rx_packets += 1;
        s.rx_bytes += bytes as u64;
        s.time_first_rx.get_or_insert(now);
        s.time_last_rx = Some(now);
        if let Some(t) = sent {
            s.delays.push(now - t);
        }
        sent
    }

    /// Marks every packet still in flight as lost.
    pub fn finalize(&mut self) {
        for (i, _) in self.in_flight.keys() {
            self.flows[*i].1.lost_packets += 1;
        }
        self.in_flight.clear();
    }

    pub fn flows(&self) -> impl Iterator<Item = (u32, &FlowKey, &FlowStats)> {
        self.flows
            .iter()
            .enumerate()
            .map(|(i, (k, s))| (i as u32 + 1, k, s))
    }

    pub fn stats(&self, key: &FlowKey) -> Option<&FlowStats> {
        self.index.get(key).map(|&i| &self.flows[i].1)
    }

    pub fn report(&self) -> Vec<FlowReport> {
        self.flows()
            .map(|(id, k, s)| FlowReport::new(id, k, s))
            .collect()
    }
}

/// Machine-readable per-flow record with stable key names.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowReport {
    pub flow_id: u32,
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    pub src_port: u16,
    pub dst_port: u16,
    pub protocol: &'static str,
    pub tx_packets: u64,
    pub rx_packets: u64,
    pub tx_bytes: u64,
    pub rx_bytes: u64,
    pub lost_packets: u64,
    pub time_first_tx_ns: Option<u64>,
    pub time_last_rx_ns: Option<u64>,
    pub throughput_kbps: Option<f64>,
    pub mean_delay_ns: Option<u64>,
    pub min_delay_ns: Option<u64>,
    pub max_delay_ns: Option<u64>,
}

impl FlowReport {
    pub fn new(flow_id: u32, k: &FlowKey, s: &FlowStats) -> Self {
        FlowReport {
            flow_id,
            src: k.src,
            dst: k.dst,
            src_port: k.src_port,
            dst_port: k.dst_port,
            protocol: "UDP",
            tx_packets: s.tx_packets,
            rx_packets: s.rx_packets,
            tx_bytes: s.tx_bytes,
            rx_bytes: s.rx_bytes,
            lost_packets: s.lost_packets,
            time_first_tx_ns: s.time_first_tx.map(SimTime::as_nanos),
            time_last_rx_ns: s.time_last_rx.map(SimTime::as_nanos),
            throughput_kbps: throughput_kbps(s).ok(),
            mean_delay_ns: s.mean_delay().map(SimTime::as_nanos),
            min_delay_ns: s.delays.iter().min().map(|d| d.as_nanos()),
            max_delay_ns: s.delays.iter().max().map(|d| d.as_nanos()),
        }
    }

    /// Mean IP datagram size received on this flow.
    pub fn rx_packet_bytes(&self) -> Option<u64> {
        (self.rx_packets > 0).then(|| self.rx_bytes / self.rx_packets)
    }
}

pub fn render_flows(flows: &[FlowReport]) -> String {
    let mut out = String::new();
    for f in flows {
        let _ = writeln!(
            out,
            "Flow {} (UDP {}:{} -> {}:{})",
            f.flow_id, f.src, f.src_port, f.dst, f.dst_port
        );
        let _ = writeln!(out, "  Tx Packets: {}", f.tx_packets);
        let _ = writeln!(out, "  Tx Bytes:   {}", f.tx_bytes);
        let _ = writeln!(out, "  Rx Packets: {}", f.rx_packets);
        let _ = writeln!(out, "  Rx Bytes:   {}", f.rx_bytes);
        if let Some(b) = f.rx_packet_bytes() {
            let _ = writeln!(out, "  Rx Packet Size: {b} bytes");
        }
        match f.throughput_kbps {
            Some(t) => {
                let _ = writeln!(out, "  Throughput: {t:.6} Kbps");
            }
            None => {
                let _ = writeln!(out, "  Throughput: n/a");
            }
        }
        if let Some(d) = f.mean_delay_ns {
            let _ = writeln!(out, "  Mean Delay: {:.6} ms", d as f64 / 1e6);
        }
        let _ = writeln!(out, "  Lost Packets: {}", f.lost_packets);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key() -> FlowKey {
        FlowKey {
            src: Ipv4Addr::new(1, 0, 0, 2),
            dst: Ipv4Addr::new(7, 0, 0, 2),
            src_port: 49153,
            dst_port: 9,
        }
    }

    #[test]
    fn throughput_formula_identity() {
        let s = FlowStats {
            rx_bytes: 1024,
            time_first_tx: Some(SimTime::ZERO),
            time_last_rx: Some(SimTime::from_secs(8)),
            ..FlowStats::default()
        };
        assert_eq!(throughput_kbps(&s).unwrap(), 1.0);
    }

    #[test]
    fn zero_interval_is_an_error() {
        let s = FlowStats {
            rx_bytes: 1024,
            time_first_tx: Some(SimTime::from_secs(1)),
            time_last_rx: Some(SimTime::from_secs(1)),
            ..FlowStats::default()
        };
        assert!(matches!(
            throughput_kbps(&s),
            Err(TelemetryError::UndefinedThroughput { .. })
        ));
        assert_eq!(
            throughput_kbps(&FlowStats::default()),
            Err(TelemetryError::NoTraffic)
        );
    }

    #[test]
    fn baseline_like_flow() {
        let mut m = FlowMonitor::new();
        let period = SimTime::from_millis(75);
        let delay = SimTime::from_millis(5);
        for i in 0..65u64 {
            let t = SimTime::from_nanos(i * period.as_nanos());
            m.record_tx(key(), i, t, 628);
            m.record_rx(key(), i, t + delay, 628);
        }
        m.finalize();
        let r = m.report();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].flow_id, 1);
        assert_eq!((r[0].tx_packets, r[0].rx_packets), (65, 65));
        assert_eq!(r[0].lost_packets, 0);
        assert_eq!(r[0].rx_packet_bytes(), Some(628));
        assert_eq!(r[0].mean_delay_ns, Some(5_000_000));
        // 65 * 628 * 8 / 4.805 s / 1024
        let oracle = 65.0 * 628.0 * 8.0 / 4.805 / 1024.0;
        let got = r[0].throughput_kbps.unwrap();
        assert!((got - oracle).abs() / oracle < 1e-12);
        assert!((got - 66.4).abs() < 0.1);
    }

    #[test]
    fn undelivered_packets_count_as_lost() {
        let mut m = FlowMonitor::new();
        m.record_tx(key(), 1, SimTime::ZERO, 10);
        m.record_tx(key(), 2, SimTime::ZERO, 10);
        m.record_rx(key(), 1, SimTime::from_millis(1), 10);
        m.finalize();
        assert_eq!(m.stats(&key()).unwrap().lost_packets, 1);
    }

    #[test]
    fn empty_monitor_reports_nothing() {
        let m = FlowMonitor::new();
        assert!(m.report().is_empty());
        assert_eq!(render_flows(&m.report()), "");
    }
}
