//! The assembled scenario: remote host, eNB PDCP, LTE radio, LWA/LWIP
//! offload path, Wi-Fi station and UE aggregation, all driven by one
//! event loop.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::config::{Scenario, ScenarioConfig};
use crate::engine::{EngineError, Scheduler, SimTime};
use crate::headers::{Header, IpUdpHeader, LwaHeader};
use crate::link::Link;
use crate::lte::{OffloadQueue, Pdcp, RouteDecision};
use crate::lwip::{lwipep_encapsulate, Tunnel, TunnelRx};
use crate::packet::{Hop, Packet, PacketError};
use crate::reorder::{ReorderBuffer, ReorderStats};
use crate::telemetry::pcap::{LinkType, PcapError, PcapWriter};
use crate::telemetry::{render_flows, FlowKey, FlowMonitor, FlowReport};
use crate::traffic::{DeliveryPath, DeliveryRecord, PacketSink};
use crate::wlan::{air_frame_bytes, lwaap_encapsulate, readdress, OffloadError, WlanPath};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Mode(#[from] crate::lte::ModeError),
    #[error("offload pipeline: {0}")]
    Offload(#[from] OffloadError),
    #[error("packet: {0}")]
    Packet(#[from] PacketError),
    #[error(transparent)]
    Pcap(#[from] PcapError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("wire: {0}")]
    Wire(String),
}

/// Where offloaded PDUs go once they leave the LWAAP node or SeGW.
pub trait OffloadSink {
    /// `pdu` is the Xw datagram: outer IP/UDP header on top.
    fn send(&mut self, now: SimTime, pdu: &Packet) -> Result<(), SimError>;
    fn finish(&mut self, now: SimTime) -> Result<(), SimError>;
    fn stats(&self) -> WireStats;
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct WireStats {
    pub sent: u64,
    pub retries: u64,
    pub dropped: u64,
    pub received: u64,
    pub corrupt: u64,
}

#[derive(Debug)]
enum Event {
    Emit { seq: u32 },
    LteArrive(Packet),
    Poll,
    XwArrive(Packet),
    StationArrive(Packet),
    ReorderTimer { generation: u64 },
}

/// One row of the delivery log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DeliveryEntry {
    #[serde(flatten)]
    pub record: DeliveryRecord,
    pub flow_id: u32,
    pub flow_tx: Option<SimTime>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PdcpSummary {
    pub submitted: u64,
    pub routed_lte: u64,
    pub routed_offload: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OffloadSummary {
    pub enqueued: u64,
    pub forwarded: u64,
    pub polls: u64,
    pub max_wait_ns: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DeliverySummary {
    pub lte: u64,
    pub wifi: u64,
    pub corrupt: u64,
    pub auth_failures: u64,
    pub path_violations: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PcapSummary {
    pub lte_records: u64,
    pub xw_records: u64,
    pub air_records: u64,
}

/// Machine-readable run summary; field names are stable.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: Scenario,
    pub role: &'static str,
    pub lwa_mode: u8,
    pub lwip_mode: u8,
    pub split_modulus: u64,
    pub seed: u64,
    pub emitted: u64,
    pub pdcp: PdcpSummary,
    pub offload_queue: OffloadSummary,
    pub deliveries: DeliverySummary,
    pub ue_aggregation: ReorderStats,
    pub wire: Option<WireStats>,
    pub pcap: PcapSummary,
    pub flows: Vec<FlowReport>,
}

/// Everything a run produces.
#[derive(Debug)]
pub struct RunOutcome {
    pub summary: Summary,
    pub deliveries: Vec<DeliveryEntry>,
    /// Sequence numbers released in order by the UE aggregation.
    pub aggregated: Vec<u32>,
    pub lost: Vec<u32>,
    pub lte_pcap: Vec<u8>,
    pub xw_pcap: Vec<u8>,
    pub air_pcap: Vec<u8>,
    /// Hop traces of offloaded packets received at the station.
    pub offload_traces: Vec<(u32, Vec<Hop>)>,
    pub end_time: SimTime,
}

impl RunOutcome {
    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn summary_text(&self) -> String {
        let s = &self.summary;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "scenario {} (lwa_mode={}, lwip_mode={}, N={}, seed={})",
            s.scenario, s.lwa_mode, s.lwip_mode, s.split_modulus, s.seed
        );
        let _ = writeln!(
            out,
            "emitted {} | pdcp lte {} offload {} | delivered lte {} wifi {} | corrupt {} auth-fail {}",
            s.emitted,
            s.pdcp.routed_lte,
            s.pdcp.routed_offload,
            s.deliveries.lte,
            s.deliveries.wifi,
            s.deliveries.corrupt,
            s.deliveries.auth_failures
        );
        let a = &s.ue_aggregation;
        let _ = writeln!(
            out,
            "ue aggregation: delivered {} lost {} duplicates {} holds {} max-held {} timeouts {}",
            a.delivered, a.lost, a.duplicates, a.holds, a.max_held, a.timeouts
        );
        if let Some(w) = &s.wire {
            let _ = writeln!(
                out,
                "wire: sent {} retries {} dropped {} received {} corrupt {}",
                w.sent, w.retries, w.dropped, w.received, w.corrupt
            );
        }
        out.push_str(&render_flows(&s.flows));
        out
    }

    pub fn deliveries_csv(&self) -> String {
        let mut out = String::from(
            "seq,path,bearer_id,activate,ip_len,sent_ns,flow_id,flow_tx_ns,received_ns\n",
        );
        let opt = |v: Option<u8>| v.map(|v| v.to_string()).unwrap_or_default();
        for d in &self.deliveries {
            let r = &d.record;
            let path = match r.path {
                DeliveryPath::Lte => "lte",
                DeliveryPath::Lwa => "lwa",
                DeliveryPath::Lwip => "lwip",
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.seq,
                path,
                opt(r.bearer_id),
                opt(r.activate),
                r.ip_len,
                r.sent_at.as_nanos(),
                d.flow_id,
                d.flow_tx
                    .map(|t| t.as_nanos().to_string())
                    .unwrap_or_default(),
                r.received_at.as_nanos()
            );
        }
        out
    }

    /// Writes summary.json, summary.txt, deliveries.csv and the three pcaps.
    pub fn write_artifacts(
        &self,
        dir: &std::path::Path,
        cfg: &ScenarioConfig,
    ) -> Result<(), SimError> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("summary.json"), self.summary_json())?;
        std::fs::write(dir.join("summary.txt"), self.summary_text())?;
        std::fs::write(dir.join("deliveries.csv"), self.deliveries_csv())?;
        std::fs::write(dir.join("lte.pcap"), &self.lte_pcap)?;
        std::fs::write(dir.join("xw.pcap"), &self.xw_pcap)?;
        std::fs::write(dir.join("air.pcap"), &self.air_pcap)?;
        let mut cfg = cfg.clone();
        cfg.out = None;
        std::fs::write(dir.join("config.toml"), cfg.to_dotted())?;
        Ok(())
    }
}

/// The UE: LTE-side IP stack and, co-located, the Wi-Fi station.
struct Ue {
    sink: PacketSink,
    reorder: ReorderBuffer<()>,
    timer_generation: u64,
    armed: Option<SimTime>,
    aggregated: Vec<u32>,
    lost: Vec<u32>,
    deliveries: Vec<DeliveryEntry>,
    lte: u64,
    wifi: u64,
    traces: Vec<(u32, Vec<Hop>)>,
    path_violations: u64,
}

pub struct Simulation {
    cfg: ScenarioConfig,
    role: &'static str,
    sched: Scheduler<Event>,
    pdcp: Pdcp,
    queue: OffloadQueue,
    poll_pending: bool,
    polls: u64,
    lte: Link,
    wlan: WlanPath,
    tunnel: Tunnel,
    offload_sink: Option<Box<dyn OffloadSink>>,
    emit_traffic: bool,
    ue: Ue,
    flows: FlowMonitor,
    lte_tap: PcapWriter<Vec<u8>>,
    xw_tap: PcapWriter<Vec<u8>>,
    air_tap: PcapWriter<Vec<u8>>,
    emitted: u64,
    wire_rx: WireStats,
    failure: Option<SimError>,
}

impl Simulation {
    /// Complete in-process run of one scenario.
    pub fn new(cfg: ScenarioConfig) -> Result<Self, SimError> {
        Self::build(cfg, "in_process", None, true)
    }

    /// eNB side of the two-process mode: offloaded PDUs go to `sink`.
    pub fn with_offload_sink(
        cfg: ScenarioConfig,
        sink: Box<dyn OffloadSink>,
    ) -> Result<Self, SimError> {
        Self::build(cfg, "enb", Some(sink), true)
    }

    /// Station side of the two-process mode: no traffic source; Xw
    /// datagrams are injected as they arrive.
    pub fn station(cfg: ScenarioConfig) -> Result<Self, SimError> {
        Self::build(cfg, "sta", None, false)
    }

    fn build(
        cfg: ScenarioConfig,
        role: &'static str,
        offload_sink: Option<Box<dyn OffloadSink>>,
        emit_traffic: bool,
    ) -> Result<Self, SimError> {
        cfg.validate()?;
        let mode = cfg.activation();
        let pdcp = Pdcp::new(cfg.bearer, mode, cfg.split_modulus)?;
        let mut sim = Simulation {
            role,
            sched: Scheduler::new(),
            pdcp,
            queue: OffloadQueue::new(cfg.poll_interval),
            poll_pending: false,
            polls: 0,
            lte: Link::new(cfg.lte_link),
            wlan: WlanPath::new(cfg.xw_link, cfg.wifi_link),
            tunnel: Tunnel::new(cfg.tunnel, cfg.seed, cfg.bearer.rbid),
            offload_sink,
            emit_traffic,
            ue: Ue {
                sink: PacketSink::new(),
                reorder: ReorderBuffer::new(cfg.t_reordering),
                timer_generation: 0,
                armed: None,
                aggregated: Vec::new(),
                lost: Vec::new(),
                deliveries: Vec::new(),
                lte: 0,
                wifi: 0,
                traces: Vec::new(),
                path_violations: 0,
            },
            flows: FlowMonitor::new(),
            lte_tap: PcapWriter::new(Vec::new(), LinkType::RawIp)?,
            xw_tap: PcapWriter::new(Vec::new(), LinkType::RawIp)?,
            air_tap: PcapWriter::new(Vec::new(), LinkType::User0)?,
            emitted: 0,
            wire_rx: WireStats::default(),
            failure: None,
            cfg,
        };
        if sim.emit_traffic {
            if let Some(&first) = sim.cfg.traffic.emission_schedule().first() {
                sim.sched.schedule(first, Event::Emit { seq: 0 })?;
            }
            let offloads = mode.is_lwip() || mode.lwa_mode() != crate::lte::LwaMode::LteOnly;
            if offloads {
                let tick = sim.queue.next_tick(SimTime::ZERO);
                sim.sched.schedule(tick, Event::Poll)?;
                sim.poll_pending = true;
            }
        }
        Ok(sim)
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn now(&self) -> SimTime {
        self.sched.now()
    }

    pub fn next_event_time(&self) -> Option<SimTime> {
        self.sched.peek_time()
    }

    /// Last instant at which anything can still be in flight.
    pub fn horizon(&self) -> SimTime {
        let c = &self.cfg;
        c.traffic.stop
            + c.lte_link.delay
            + c.xw_link.delay
            + c.wifi_link.delay
            + c.t_reordering
            + SimTime::from_secs(1)
    }

    /// Executes every event up to and including `t`.
    pub fn advance_to(&mut self, t: SimTime) -> Result<(), SimError> {
        while let Some((_, ev)) = self.sched.pop_until(t) {
            if let Err(e) = self.handle(ev) {
                self.failure.get_or_insert(e);
            }
            if let Some(e) = self.failure.take() {
                return Err(e);
            }
        }
        if t > self.sched.now() && t != SimTime::MAX {
            self.sched
                .run_until(t, |_, _| unreachable!("queue drained up to t"));
        }
        Ok(())
    }

    /// Runs to completion and collects the outcome.
    pub fn run(mut self) -> Result<RunOutcome, SimError> {
        let horizon = self.horizon();
        self.advance_to(horizon)?;
        self.finish()
    }

    /// Station side: an Xw datagram reached the AP at the current time.
    pub fn inject_ap_arrival(&mut self, p: Packet) -> Result<(), SimError> {
        let now = self.now();
        let key = self.offload_flow_key(&p)?;
        self.flows
            .record_tx(key, p.uid(), now, self.offload_ip_len(&p)?);
        self.wire_rx.received += 1;
        self.on_xw_arrive(p)
    }

    pub fn count_wire_corrupt(&mut self) {
        self.wire_rx.corrupt += 1;
    }

    /// Drains remaining events, flushes the reorder buffer and seals the taps.
    pub fn finish(mut self) -> Result<RunOutcome, SimError> {
        self.advance_to(SimTime::MAX)?;
        let end = self.now();
        if let Some(sink) = self.offload_sink.as_mut() {
            sink.finish(end)?;
        }
        let flush = self.ue.reorder.flush_all();
        self.ue
            .aggregated
            .extend(flush.delivered.iter().map(|(s, _)| *s));
        self.ue.lost.extend(flush.lost);
        self.flows.finalize();

        let mode = self.cfg.activation();
        let wire = match (&self.offload_sink, self.role) {
            (Some(s), _) => Some(s.stats()),
            (None, "sta") => Some(self.wire_rx),
            _ => None,
        };
        let summary = Summary {
            scenario: self.cfg.scenario,
            role: self.role,
            lwa_mode: mode.lwa_mode().into(),
            lwip_mode: mode.lwip_mode().into(),
            split_modulus: self.cfg.split_modulus,
            seed: self.cfg.seed,
            emitted: self.emitted,
            pdcp: PdcpSummary {
                submitted: self.pdcp.submitted,
                routed_lte: self.pdcp.routed_lte,
                routed_offload: self.pdcp.routed_offload,
            },
            offload_queue: OffloadSummary {
                enqueued: self.queue.enqueued,
                forwarded: self.queue.forwarded,
                polls: self.polls,
                max_wait_ns: self.queue.max_wait.as_nanos(),
            },
            deliveries: DeliverySummary {
                lte: self.ue.lte,
                wifi: self.ue.wifi,
                corrupt: self.ue.sink.corrupt,
                auth_failures: self.tunnel.auth_failures,
                path_violations: self.ue.path_violations,
            },
            ue_aggregation: self.ue.reorder.stats,
            wire,
            pcap: PcapSummary {
                lte_records: self.lte_tap.records(),
                xw_records: self.xw_tap.records(),
                air_records: self.air_tap.records(),
            },
            flows: self.flows.report(),
        };
        Ok(RunOutcome {
            summary,
            deliveries: self.ue.deliveries,
            aggregated: self.ue.aggregated,
            lost: self.ue.lost,
            lte_pcap: self.lte_tap.finish()?,
            xw_pcap: self.xw_tap.finish()?,
            air_pcap: self.air_tap.finish()?,
            offload_traces: self.ue.traces,
            end_time: end,
        })
    }

    fn handle(&mut self, ev: Event) -> Result<(), SimError> {
        match ev {
            Event::Emit { seq } => self.on_emit(seq),
            Event::LteArrive(p) => self.on_lte_arrive(p),
            Event::Poll => self.on_poll(),
            Event::XwArrive(p) => self.on_xw_arrive(p),
            Event::StationArrive(p) => self.on_station_arrive(p),
            Event::ReorderTimer { generation } => {
                if generation == self.ue.timer_generation {
                    self.ue.armed = None;
                    let now = self.now();
                    let flush = self.ue.reorder.on_timeout(now);
                    self.ue
                        .aggregated
                        .extend(flush.delivered.iter().map(|(s, _)| *s));
                    self.ue.lost.extend(flush.lost);
                    self.rearm_reorder_timer()?;
                }
                Ok(())
            }
        }
    }

    fn on_emit(&mut self, seq: u32) -> Result<(), SimError> {
        let now = self.now();
        let traffic = &self.cfg.traffic;
        let mut p = traffic.make_app_packet(seq, now);
        p.hops.push(Hop::RemoteHost);
        self.cfg.app.encapsulate(&mut p)?;
        self.emitted += 1;

        let next = now + traffic.period();
        if traffic.period() > SimTime::ZERO && next <= traffic.stop {
            self.sched.schedule(next, Event::Emit { seq: seq + 1 })?;
        }

        // remote host to eNB is not modeled; the datagram reaches PDCP at once
        p.hops.push(Hop::Pdcp);
        let len = p.wire_len();
        match self.pdcp.submit(&mut p) {
            RouteDecision::Lte => {
                let key = FlowKey::from(&p.peek_header::<IpUdpHeader>()?);
                self.flows.record_tx(key, p.uid(), now, len);
                p.hops.push(Hop::LteRadio);
                let tx = self.lte.transmit(now, len);
                self.sched.schedule(tx.arrival, Event::LteArrive(p))?;
            }
            RouteDecision::Offload => {
                self.queue.enqueue(p, now);
                if !self.poll_pending {
                    let tick = self.queue.next_tick(now);
                    self.sched.schedule(tick, Event::Poll)?;
                    self.poll_pending = true;
                }
            }
        }
        Ok(())
    }

    fn on_poll(&mut self) -> Result<(), SimError> {
        let now = self.now();
        self.polls += 1;
        self.poll_pending = false;
        for mut p in self.queue.poll(now) {
            if self.pdcp.mode.is_lwip() {
                lwipep_encapsulate(&mut p)?;
                let inner = self.tunnel.send(&mut p)?;
                self.flows.record_tx(
                    FlowKey::from(&inner),
                    p.uid(),
                    now,
                    inner.payload_len as usize + IpUdpHeader::SIZE,
                );
            } else {
                lwaap_encapsulate(&mut p)?;
                let outer = readdress::<LwaHeader>(&mut p, &self.cfg.xw)?;
                self.flows
                    .record_tx(FlowKey::from(&outer), p.uid(), now, p.wire_len());
            }
            self.xw_send(now, p)?;
        }
        let next = now + self.queue.poll_interval;
        if next <= self.cfg.traffic.stop || !self.queue.is_empty() {
            self.sched.schedule(next, Event::Poll)?;
            self.poll_pending = true;
        }
        Ok(())
    }

    fn xw_send(&mut self, now: SimTime, mut p: Packet) -> Result<(), SimError> {
        let tx = self.wlan.xw_transmit(now, &mut p);
        self.xw_tap
            .write_record(tx.start, &p.to_bytes(self.cfg.seed))?;
        match self.offload_sink.as_mut() {
            Some(sink) => sink.send(now, &p),
            None => {
                self.sched.schedule(tx.arrival, Event::XwArrive(p))?;
                Ok(())
            }
        }
    }

    /// WLAN termination relays to the AP, which puts the frame on the air.
    fn on_xw_arrive(&mut self, mut p: Packet) -> Result<(), SimError> {
        let now = self.now();
        let (tx, _) = self.wlan.air_transmit(now, &mut p);
        let frame = air_frame_bytes(&p, self.cfg.seed, self.wlan.framing_overhead());
        self.air_tap.write_record(tx.start, &frame)?;
        self.sched.schedule(tx.arrival, Event::StationArrive(p))?;
        Ok(())
    }

    fn on_lte_arrive(&mut self, p: Packet) -> Result<(), SimError> {
        let now = self.now();
        self.lte_tap.write_record(now, &p.to_bytes(self.cfg.seed))?;
        let key = FlowKey::from(&p.peek_header::<IpUdpHeader>()?);
        let (uid, len) = (p.uid(), p.wire_len());
        let rec = match self.ue.sink.receive(p, now, DeliveryPath::Lte) {
            Ok(r) => r.clone(),
            Err(_) => return Ok(()),
        };
        self.ue.lte += 1;
        let flow_tx = self.flows.record_rx(key, uid, now, len);
        self.deliver(rec, key, flow_tx)
    }

    fn on_station_arrive(&mut self, mut p: Packet) -> Result<(), SimError> {
        let now = self.now();
        p.hops.push(Hop::Station);
        let path = if self.pdcp.mode.is_lwip() {
            match self.tunnel.receive(p) {
                TunnelRx::Delivered(inner) => {
                    p = inner;
                    DeliveryPath::Lwip
                }
                TunnelRx::Ignored(_) => {
                    log::warn!("non-tunnel datagram at the station tunnel endpoint, ignored");
                    return Ok(());
                }
                TunnelRx::AuthFailed => {
                    log::warn!("tunnel authentication failure at {now}");
                    return Ok(());
                }
            }
        } else {
            DeliveryPath::Lwa
        };
        let key = FlowKey::from(&p.peek_header::<IpUdpHeader>()?);
        let (uid, len) = (p.uid(), p.wire_len());
        let hops = p.hops.clone();
        let rec = match self.ue.sink.receive(p, now, path) {
            Ok(r) => r.clone(),
            Err(_) => return Ok(()),
        };
        self.ue.wifi += 1;
        if self.role == "in_process" && hops != expected_offload_trace(path) {
            self.ue.path_violations += 1;
        }
        self.ue.traces.push((rec.seq, hops));
        let flow_tx = self.flows.record_rx(key, uid, now, len);
        self.deliver(rec, key, flow_tx)
    }

    fn deliver(
        &mut self,
        rec: DeliveryRecord,
        key: FlowKey,
        flow_tx: Option<SimTime>,
    ) -> Result<(), SimError> {
        let now = self.now();
        let flow_id = self.flows.flow_id(&key).unwrap_or(0);
        let released = self.ue.reorder.ingest(rec.seq, (), now);
        self.ue.aggregated.extend(released.iter().map(|(s, _)| *s));
        self.ue.deliveries.push(DeliveryEntry {
            record: rec,
            flow_id,
            flow_tx,
        });
        self.rearm_reorder_timer()
    }

    fn rearm_reorder_timer(&mut self) -> Result<(), SimError> {
        let deadline = self.ue.reorder.deadline();
        if deadline == self.ue.armed {
            return Ok(());
        }
        self.ue.timer_generation += 1;
        self.ue.armed = deadline;
        if let Some(d) = deadline {
            let at = d.max(self.now());
            self.sched.schedule(
                at,
                Event::ReorderTimer {
                    generation: self.ue.timer_generation,
                },
            )?;
        }
        Ok(())
    }

    fn offload_flow_key(&self, p: &Packet) -> Result<FlowKey, SimError> {
        let mut probe = p.clone();
        let outer = probe.pop_header::<IpUdpHeader>()?;
        if self.pdcp.mode.is_lwip() {
            Ok(FlowKey::from(&probe.peek_header::<IpUdpHeader>()?))
        } else {
            Ok(FlowKey::from(&outer))
        }
    }

    fn offload_ip_len(&self, p: &Packet) -> Result<usize, SimError> {
        if self.pdcp.mode.is_lwip() {
            Ok(p.wire_len() - IpUdpHeader::SIZE)
        } else {
            Ok(p.wire_len())
        }
    }
}

/// Hops every offloaded packet takes, in order.
pub fn expected_offload_trace(path: DeliveryPath) -> Vec<Hop> {
    match path {
        DeliveryPath::Lwip => vec![
            Hop::RemoteHost,
            Hop::Pdcp,
            Hop::Lwipep,
            Hop::Segw,
            Hop::Xw,
            Hop::Ap,
            Hop::Air,
            Hop::Station,
        ],
        _ => vec![
            Hop::RemoteHost,
            Hop::Pdcp,
            Hop::Lwaap,
            Hop::Xw,
            Hop::Ap,
            Hop::Air,
            Hop::Station,
        ],
    }
}

/// Validates `cfg`, runs it in-process, and writes artifacts if `cfg.out` is set.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutcome, SimError> {
    let outcome = Simulation::new(cfg.clone())?.run()?;
    if let Some(dir) = &cfg.out {
        outcome.write_artifacts(dir, cfg)?;
    }
    Ok(outcome)
}
