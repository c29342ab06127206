//! LWIP offload path: LWIPEP encapsulation and the authenticated,
//! unencrypted IP/UDP tunnel from the SeGW to the station's virtual interface.
//!
//! Authentication is a 4-byte keyed digest over the inner header stack,
//! written into the tail of the payload filler so it never changes the
//! datagram length.

use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::headers::{IpUdpHeader, LwipHeader};
use crate::packet::{rbid_from_lcid, Hop, Packet, PacketError};
use crate::traffic::Endpoints;
use crate::wlan::{readdress, OffloadError};

pub const AUTH_TAG_LEN: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TunnelConfig {
    /// Virtual interface addressing carried inside the tunnel.
    pub inner: Endpoints,
    /// SeGW to station transport over the Xw/Wi-Fi delivery network.
    pub outer: Endpoints,
}

impl Default for TunnelConfig {
    fn default() -> Self {
        TunnelConfig {
            inner: Endpoints {
                src: Ipv4Addr::new(11, 0, 0, 1),
                dst: Ipv4Addr::new(11, 0, 0, 254),
                src_port: 49155,
                dst_port: 11,
            },
            outer: Endpoints {
                src: Ipv4Addr::new(10, 1, 2, 1),
                dst: Ipv4Addr::new(10, 1, 3, 2),
                src_port: 4500,
                dst_port: 4500,
            },
        }
    }
}

/// Reads the LWIP and lcid tags and prepends the LWIPEP header.
pub fn lwipep_encapsulate(p: &mut Packet) -> Result<LwipHeader, OffloadError> {
    let activate = p
        .tags
        .lwip
        .ok_or(OffloadError::MissingTag {
            uid: p.uid(),
            tag: "LwipTag",
        })?
        .0;
    let lcid = p
        .tags
        .lcid
        .ok_or(OffloadError::MissingTag {
            uid: p.uid(),
            tag: "LcidTag",
        })?
        .0;
    let h = LwipHeader {
        activate,
        bearer_id: rbid_from_lcid(lcid)?,
    };
    p.push_header(&h)?;
    p.hops.push(Hop::Lwipep);
    Ok(h)
}

pub fn derive_key(seed: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"lwip-tunnel-auth");
    h.update(seed.to_be_bytes());
    h.finalize().into()
}

fn auth_tag(key: &[u8; 32], headers: &[u8]) -> [u8; AUTH_TAG_LEN] {
    let mut h = Sha256::new();
    h.update(key);
    h.update(headers);
    let d = h.finalize();
    [d[0], d[1], d[2], d[3]]
}

#[derive(Debug, PartialEq, Eq)]
pub enum TunnelRx {
    /// Inner packet, outer header stripped.
    Delivered(Packet),
    /// Not addressed to this tunnel endpoint; returned untouched.
    Ignored(Packet),
    AuthFailed,
}

/// One UE's tunnel: SeGW egress on one side, the station's virtual
/// interface on the other.
#[derive(Debug)]
pub struct Tunnel {
    pub cfg: TunnelConfig,
    key: [u8; 32],
    expected: LwipHeader,
    pub sent: u64,
    pub received: u64,
    pub auth_failures: u64,
    pub ignored: u64,
}

impl Tunnel {
    pub fn new(cfg: TunnelConfig, seed: u64, rbid: u8) -> Self {
        Tunnel {
            cfg,
            key: derive_key(seed),
            expected: LwipHeader {
                activate: 1,
                bearer_id: rbid,
            },
            sent: 0,
            received: 0,
            auth_failures: 0,
            ignored: 0,
        }
    }

    /// Wraps an LWIPEP PDU for transport. Returns the inner header; the
    /// packet grows by exactly one outer IP/UDP header.
    pub fn send(&mut self, p: &mut Packet) -> Result<IpUdpHeader, PacketError> {
        let inner = readdress::<LwipHeader>(p, &self.cfg.inner)?;
        let tag = auth_tag(&self.key, &p.header_bytes());
        p.set_trailer(&tag)?;
        self.cfg.outer.encapsulate(p)?;
        p.hops.push(Hop::Segw);
        self.sent += 1;
        Ok(inner)
    }

    pub fn receive(&mut self, mut p: Packet) -> TunnelRx {
        let outer = match p.peek_header::<IpUdpHeader>() {
            Ok(h) => h,
            Err(_) => {
                self.ignored += 1;
                return TunnelRx::Ignored(p);
            }
        };
        if outer.dst != self.cfg.outer.dst || outer.dst_port != self.cfg.outer.dst_port {
            self.ignored += 1;
            return TunnelRx::Ignored(p);
        }
        p.pop_header::<IpUdpHeader>().expect("peeked above");
        if self.verify(&p) {
            self.received += 1;
            TunnelRx::Delivered(p)
        } else {
            self.auth_failures += 1;
            TunnelRx::AuthFailed
        }
    }

    /// Checks the keyed digest and that the LWIPEP header names this
    /// tunnel's bearer with LWIP active.
    pub fn verify(&self, inner: &Packet) -> bool {
        if auth_tag(&self.key, &inner.header_bytes()) != inner.trailer() {
            return false;
        }
        let mut probe = inner.clone();
        if probe.pop_header::<IpUdpHeader>().is_err() {
            return false;
        }
        matches!(probe.pop_header::<LwipHeader>(), Ok(h) if h == self.expected)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::SimTime;
    use crate::lte::{tag_for_offload, ActivationMode, BearerConfig, LwipMode};
    use crate::traffic::{DeliveryPath, OnOffConfig, PacketSink};

    fn app_ep() -> Endpoints {
        Endpoints {
            src: Ipv4Addr::new(1, 0, 0, 2),
            dst: Ipv4Addr::new(7, 0, 0, 2),
            src_port: 49153,
            dst_port: 9,
        }
    }

    fn lwipep_pdu(seq: u32) -> Packet {
        let mut p = OnOffConfig::default().make_app_packet(seq, SimTime::from_millis(75));
        app_ep().encapsulate(&mut p).unwrap();
        tag_for_offload(
            &mut p,
            &BearerConfig::default(),
            ActivationMode::lwip(LwipMode::On),
        );
        lwipep_encapsulate(&mut p).unwrap();
        p
    }

    #[test]
    fn lwipep_header_fields() {
        let p = lwipep_pdu(0);
        assert_eq!(p.wire_len(), 658);
        let h: LwipHeader = p.peek_header().unwrap();
        assert_eq!(
            h,
            LwipHeader {
                activate: 1,
                bearer_id: 1
            }
        );
    }

    #[test]
    fn tunnel_adds_28_bytes_over_lwa_equivalent() {
        let mut t = Tunnel::new(TunnelConfig::default(), 7, 1);
        let mut p = lwipep_pdu(3);
        let inner = t.send(&mut p).unwrap();
        assert_eq!(inner.payload_len, 630);
        assert_eq!(p.wire_len(), 658 + 28);
        // 740 B LWA air frame becomes 768 B
        assert_eq!(p.wire_len() + 82, 768);
    }

    #[test]
    fn round_trip_delivers_inner_658() {
        let mut t = Tunnel::new(TunnelConfig::default(), 7, 1);
        let mut p = lwipep_pdu(3);
        t.send(&mut p).unwrap();
        let inner = match t.receive(p) {
            TunnelRx::Delivered(inner) => inner,
            other => panic!("unexpected {other:?}"),
        };
        assert_eq!(inner.wire_len(), 658);
        let mut sink = PacketSink::new();
        let rec = sink
            .receive(inner, SimTime::from_millis(80), DeliveryPath::Lwip)
            .unwrap();
        assert_eq!(rec.seq, 3);
        assert_eq!(rec.ip_len, 658);
        assert_eq!(rec.activate, Some(1));
        assert_eq!(rec.bearer_id, Some(1));
        assert_eq!(t.received, 1);
    }

    #[test]
    fn decapsulate_inverts_encapsulate() {
        let mut t = Tunnel::new(TunnelConfig::default(), 7, 1);
        let mut p = lwipep_pdu(9);
        t.send(&mut p).unwrap();
        let mut expected = p.clone();
        expected.pop_header::<IpUdpHeader>().unwrap();
        match t.receive(p) {
            TunnelRx::Delivered(inner) => assert_eq!(inner, expected),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_activate_fails_authentication() {
        let mut t = Tunnel::new(TunnelConfig::default(), 7, 1);
        let mut p = lwipep_pdu(1);
        // corrupt the activation field before sending
        p.pop_header::<LwipHeader>().unwrap();
        p.push_header(&LwipHeader {
            activate: 0,
            bearer_id: 1,
        })
        .unwrap();
        t.send(&mut p).unwrap();
        assert_eq!(t.receive(p), TunnelRx::AuthFailed);
        assert_eq!(t.auth_failures, 1);
    }

    #[test]
    fn wrong_key_fails_authentication() {
        let mut tx = Tunnel::new(TunnelConfig::default(), 7, 1);
        let mut rx = Tunnel::new(TunnelConfig::default(), 8, 1);
        let mut p = lwipep_pdu(1);
        tx.send(&mut p).unwrap();
        assert_eq!(rx.receive(p), TunnelRx::AuthFailed);
    }

    #[test]
    fn foreign_traffic_is_ignored() {
        let mut t = Tunnel::new(TunnelConfig::default(), 7, 1);
        let mut p = OnOffConfig::default().make_app_packet(0, SimTime::ZERO);
        app_ep().encapsulate(&mut p).unwrap();
        let before = p.clone();
        assert_eq!(t.receive(p), TunnelRx::Ignored(before));
        assert_eq!(t.ignored, 1);
    }
}
