//! Two-process mode. The eNB process sends each offloaded PDU as one UDP
//! datagram; the station process hosts the AP, the air link and the UE.
//!
//! LWA frame: `LwaHeader ∥ SeqTsHeader ∥ filler`, where the filler is the
//! PDCP framing followed by the application filler. LWIP frame: the inner
//! IP/UDP header, then the same layout with `LwipHeader`.

use std::io;
use std::net::{SocketAddr, UdpSocket};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use crate::config::{Pacing, ScenarioConfig};
use crate::engine::SimTime;
use crate::headers::{Header, IpUdpHeader, LwaHeader, LwipHeader, SeqTsHeader};
use crate::lwip::AUTH_TAG_LEN;
use crate::packet::{filler, Hop, Packet, PacketError};
use crate::sim::{OffloadSink, RunOutcome, SimError, Simulation, WireStats};

/// End-of-run marker: an all-ones adaptation header.
pub const SENTINEL: [u8; 2] = [0xff, 0xff];
/// Adaptation header plus sequence header.
pub const MIN_FRAME: usize = LwaHeader::SIZE + SeqTsHeader::SIZE;
const SEND_RETRIES: u32 = 3;
const MAX_DATAGRAM: usize = 65_535;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("frame of {0} bytes is below the {MIN_FRAME} byte minimum")]
    TooShort(usize),
    #[error("frame does not match the expected layout: {0}")]
    Layout(#[from] PacketError),
    #[error("payload of seq {0} does not match the seeded filler")]
    Payload(u32),
}

/// UDP payload of the Xw datagram for `pdu` (outer IP/UDP header on top).
pub fn encode_frame(pdu: &Packet, seed: u64, lwip: bool) -> Result<Vec<u8>, PacketError> {
    let mut p = pdu.clone();
    p.pop_header::<IpUdpHeader>()?;
    let mut out = Vec::with_capacity(p.wire_len());
    if lwip {
        out.extend(p.pop_header::<IpUdpHeader>()?.encode()?);
        out.extend(p.pop_header::<LwipHeader>()?.encode()?);
    } else {
        out.extend(p.pop_header::<LwaHeader>()?.encode()?);
    }
    let framing = p.pop_framing()?;
    out.extend(p.pop_header::<SeqTsHeader>()?.encode()?);
    out.extend(std::iter::repeat_n(0u8, framing));
    out.extend(p.payload_bytes(seed));
    Ok(out)
}

/// Rebuilds the Xw datagram a frame was cut from. The payload filler is
/// checked against the run seed.
pub fn decode_frame(bytes: &[u8], cfg: &ScenarioConfig) -> Result<Packet, FrameError> {
    if bytes.len() < MIN_FRAME {
        return Err(FrameError::TooShort(bytes.len()));
    }
    let lwip = cfg.activation().is_lwip();
    let mut rest = bytes;
    let inner = if lwip {
        let (h, tail) = IpUdpHeader::decode(rest).map_err(PacketError::from)?;
        rest = tail;
        Some(h)
    } else {
        None
    };
    let (lwa, lwip_h) = if lwip {
        let (h, tail) = LwipHeader::decode(rest).map_err(PacketError::from)?;
        rest = tail;
        (None, Some(h))
    } else {
        let (h, tail) = LwaHeader::decode(rest).map_err(PacketError::from)?;
        rest = tail;
        (Some(h), None)
    };
    let (seq_ts, tail) = SeqTsHeader::decode(rest).map_err(PacketError::from)?;
    rest = tail;
    let framing = cfg.bearer.framing_bytes();
    let trailer = if lwip { AUTH_TAG_LEN } else { 0 };
    if rest.len() < framing + trailer || rest[..framing].iter().any(|&b| b != 0) {
        return Err(FrameError::Payload(seq_ts.seq));
    }
    let payload = &rest[framing..];
    let uid = u64::from(seq_ts.seq);
    let body = payload.len() - trailer;
    if payload[..body] != filler(cfg.seed, uid, payload.len())[..body] {
        return Err(FrameError::Payload(seq_ts.seq));
    }

    let mut p = Packet::new(uid, payload.len());
    p.push_header(&seq_ts)?;
    p.push_framing(framing);
    if let Some(h) = lwa {
        p.push_header(&h)?;
        cfg.xw.encapsulate(&mut p)?;
    }
    if let (Some(h), Some(inner)) = (lwip_h, inner) {
        p.set_trailer(&payload[body..])?;
        p.push_header(&h)?;
        p.push_header(&inner)?;
        cfg.tunnel.outer.encapsulate(&mut p)?;
    }
    p.hops.push(Hop::Xw);
    Ok(p)
}

/// eNB side: sends each offloaded PDU to the station process.
pub struct WireSender {
    socket: UdpSocket,
    seed: u64,
    lwip: bool,
    pacing: Pacing,
    started: Instant,
    stats: WireStats,
}

impl WireSender {
    pub fn connect(cfg: &ScenarioConfig, peer: SocketAddr) -> io::Result<Self> {
        let bind: SocketAddr = if peer.is_ipv4() {
            "0.0.0.0:0".parse().unwrap()
        } else {
            "[::]:0".parse().unwrap()
        };
        let socket = UdpSocket::bind(bind)?;
        socket.connect(peer)?;
        Ok(WireSender {
            socket,
            seed: cfg.seed,
            lwip: cfg.activation().is_lwip(),
            pacing: cfg.wire.as_ref().map(|w| w.pacing).unwrap_or_default(),
            started: Instant::now(),
            stats: WireStats::default(),
        })
    }

    fn pace(&self, now: SimTime) {
        if self.pacing == Pacing::Real {
            let due = self.started + Duration::from_nanos(now.as_nanos());
            if let Some(wait) = due.checked_duration_since(Instant::now()) {
                thread::sleep(wait);
            }
        }
    }

    fn send_bytes(&mut self, bytes: &[u8]) -> bool {
        for attempt in 0..=SEND_RETRIES {
            match self.socket.send(bytes) {
                Ok(_) => return true,
                Err(e) => {
                    log::debug!("wire send attempt {} failed: {e}", attempt + 1);
                    if attempt < SEND_RETRIES {
                        self.stats.retries += 1;
                    }
                }
            }
        }
        false
    }
}

impl OffloadSink for WireSender {
    fn send(&mut self, now: SimTime, pdu: &Packet) -> Result<(), SimError> {
        self.pace(now);
        let frame = encode_frame(pdu, self.seed, self.lwip)?;
        if self.send_bytes(&frame) {
            self.stats.sent += 1;
        } else {
            log::warn!(
                "wire drop of seq {} after {SEND_RETRIES} retries",
                pdu.uid()
            );
            self.stats.dropped += 1;
        }
        Ok(())
    }

    fn finish(&mut self, now: SimTime) -> Result<(), SimError> {
        self.pace(now);
        if !self.send_bytes(&SENTINEL) {
            return Err(SimError::Wire(
                "could not send the end-of-run sentinel".into(),
            ));
        }
        Ok(())
    }

    fn stats(&self) -> WireStats {
        self.stats
    }
}

/// Runs the eNB process: the full simulation with the Xw handoff replaced
/// by datagrams to `peer`.
pub fn run_enb(cfg: &ScenarioConfig, peer: SocketAddr) -> Result<RunOutcome, SimError> {
    let sender = WireSender::connect(cfg, peer)?;
    let outcome = Simulation::with_offload_sink(cfg.clone(), Box::new(sender))?.run()?;
    if let Some(dir) = &cfg.out {
        outcome.write_artifacts(dir, cfg)?;
    }
    Ok(outcome)
}

enum NetMsg {
    Frame(Vec<u8>, Instant),
    Sentinel,
    Idle,
    Failed(io::Error),
}

/// Station process: bound socket, ready to run.
pub struct Station {
    socket: UdpSocket,
    cfg: ScenarioConfig,
}

impl Station {
    pub fn bind(cfg: &ScenarioConfig, listen: SocketAddr) -> io::Result<Self> {
        Ok(Station {
            socket: UdpSocket::bind(listen)?,
            cfg: cfg.clone(),
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.socket.local_addr()
    }

    /// Receives until the sentinel or the idle timeout. Frames are handed
    /// from the network thread to the event loop over a channel.
    pub fn run(self) -> Result<RunOutcome, SimError> {
        let idle = self
            .cfg
            .wire
            .as_ref()
            .map(|w| Duration::from_nanos(w.idle_timeout.as_nanos()))
            .unwrap_or(Duration::from_secs(10));
        self.socket.set_read_timeout(Some(idle))?;
        let (tx, rx) = mpsc::channel();
        let socket = self.socket;
        let net = thread::spawn(move || {
            let mut buf = vec![0u8; MAX_DATAGRAM];
            loop {
                let msg = match socket.recv(&mut buf) {
                    Ok(n) if buf[..n] == SENTINEL => NetMsg::Sentinel,
                    Ok(n) => NetMsg::Frame(buf[..n].to_vec(), Instant::now()),
                    Err(e)
                        if matches!(
                            e.kind(),
                            io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut
                        ) =>
                    {
                        NetMsg::Idle
                    }
                    Err(e) => NetMsg::Failed(e),
                };
                let last = !matches!(msg, NetMsg::Frame(..));
                if tx.send(msg).is_err() || last {
                    return;
                }
            }
        });

        let started = Instant::now();
        let at = |i: Instant| SimTime::from_nanos(i.duration_since(started).as_nanos() as u64);
        let mut sim = Simulation::station(self.cfg.clone())?;
        loop {
            let wait = match sim.next_event_time() {
                Some(t) => Duration::from_nanos(t.as_nanos()).saturating_sub(started.elapsed()),
                None => Duration::from_secs(3600),
            };
            match rx.recv_timeout(wait) {
                Ok(NetMsg::Frame(bytes, when)) => {
                    sim.advance_to(at(when).max(sim.now()))?;
                    match decode_frame(&bytes, &self.cfg) {
                        Ok(p) => sim.inject_ap_arrival(p)?,
                        Err(e) => {
                            log::warn!("corrupt frame: {e}");
                            sim.count_wire_corrupt();
                        }
                    }
                }
                Ok(NetMsg::Sentinel) => break,
                Ok(NetMsg::Idle) => {
                    log::warn!("no sentinel within the idle timeout, shutting down");
                    break;
                }
                Ok(NetMsg::Failed(e)) => return Err(e.into()),
                Err(mpsc::RecvTimeoutError::Timeout) => {
                    sim.advance_to(at(Instant::now()).max(sim.now()))?;
                }
                Err(mpsc::RecvTimeoutError::Disconnected) => break,
            }
        }
        let _ = net.join();
        let outcome = sim.finish()?;
        if let Some(dir) = &self.cfg.out {
            outcome.write_artifacts(dir, &self.cfg)?;
        }
        Ok(outcome)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Scenario;
    use crate::lte::{tag_for_offload, LwaMode};
    use crate::lwip::{lwipep_encapsulate, Tunnel};
    use crate::wlan::{lwaap_encapsulate, readdress};

    fn xw_pdu(cfg: &ScenarioConfig, seq: u32) -> Packet {
        let mut p = cfg.traffic.make_app_packet(seq, SimTime::from_millis(75));
        cfg.app.encapsulate(&mut p).unwrap();
        tag_for_offload(&mut p, &cfg.bearer, cfg.activation());
        if cfg.activation().is_lwip() {
            lwipep_encapsulate(&mut p).unwrap();
            Tunnel::new(cfg.tunnel, cfg.seed, cfg.bearer.rbid)
                .send(&mut p)
                .unwrap();
        } else {
            lwaap_encapsulate(&mut p).unwrap();
            readdress::<LwaHeader>(&mut p, &cfg.xw).unwrap();
        }
        p
    }

    #[test]
    fn lwa_frame_layout() {
        let cfg = ScenarioConfig::preset(Scenario::Lwa);
        let frame = encode_frame(&xw_pdu(&cfg, 3), cfg.seed, false).unwrap();
        assert_eq!(frame.len(), 630);
        assert_eq!(frame[..2], [1, 1]);
        let (h, _) = SeqTsHeader::decode(&frame[2..14]).unwrap();
        assert_eq!(h.seq, 3);
        assert!(frame[14..42].iter().all(|&b| b == 0));
    }

    #[test]
    fn lwa_frame_round_trips_to_the_same_datagram() {
        let mut cfg = ScenarioConfig::preset(Scenario::Lwa);
        cfg.lwa_mode = LwaMode::WifiOnly;
        let pdu = xw_pdu(&cfg, 8);
        let frame = encode_frame(&pdu, cfg.seed, false).unwrap();
        let back = decode_frame(&frame, &cfg).unwrap();
        assert_eq!(back.to_bytes(cfg.seed), pdu.to_bytes(cfg.seed));
        assert_eq!(back.wire_len(), 658);
    }

    #[test]
    fn lwip_frame_round_trips_and_authenticates() {
        let cfg = ScenarioConfig::preset(Scenario::Lwip);
        let pdu = xw_pdu(&cfg, 5);
        let frame = encode_frame(&pdu, cfg.seed, true).unwrap();
        assert_eq!(frame.len(), 658);
        let back = decode_frame(&frame, &cfg).unwrap();
        assert_eq!(back.to_bytes(cfg.seed), pdu.to_bytes(cfg.seed));
        let mut t = Tunnel::new(cfg.tunnel, cfg.seed, cfg.bearer.rbid);
        assert!(matches!(
            t.receive(back),
            crate::lwip::TunnelRx::Delivered(_)
        ));
    }

    #[test]
    fn short_and_tampered_frames_are_rejected() {
        let cfg = ScenarioConfig::preset(Scenario::Lwa);
        assert_eq!(
            decode_frame(&[0u8; 13], &cfg),
            Err(FrameError::TooShort(13))
        );
        let mut frame = encode_frame(&xw_pdu(&cfg, 1), cfg.seed, false).unwrap();
        *frame.last_mut().unwrap() ^= 1;
        assert_eq!(decode_frame(&frame, &cfg), Err(FrameError::Payload(1)));
        let mut other = cfg.clone();
        other.seed = 2;
        let frame = encode_frame(&xw_pdu(&cfg, 1), cfg.seed, false).unwrap();
        assert!(decode_frame(&frame, &other).is_err());
    }

    #[test]
    fn sentinel_is_not_a_valid_frame() {
        let cfg = ScenarioConfig::preset(Scenario::Lwa);
        assert!(decode_frame(&SENTINEL, &cfg).is_err());
        assert!(LwaHeader::decode(&SENTINEL).is_err());
    }
}
