//! LWA offload path: LWAAP encapsulation, the Xw-U segment through the WLAN
//! termination, and the Wi-Fi air interface to the station.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::SimTime;
use crate::headers::{IpUdpHeader, LwaHeader};
use crate::link::{Link, LinkModel, Transmission};
use crate::packet::{rbid_from_lcid, Hop, Packet, PacketError};
use crate::traffic::Endpoints;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OffloadError {
    #[error("offloaded packet {uid} is missing its {tag}")]
    MissingTag { uid: u64, tag: &'static str },
    #[error(transparent)]
    Packet(#[from] PacketError),
}

/// Reads the LWA and lcid tags and prepends the LWAAP header.
pub fn lwaap_encapsulate(p: &mut Packet) -> Result<LwaHeader, OffloadError> {
    let activate = p
        .tags
        .lwa
        .ok_or(OffloadError::MissingTag {
            uid: p.uid(),
            tag: "LwaTag",
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
    let h = LwaHeader {
        activate,
        bearer_id: rbid_from_lcid(lcid)?,
    };
    p.push_header(&h)?;
    p.hops.push(Hop::Lwaap);
    Ok(h)
}

/// Hands an adaptation-layer PDU to a UDP socket: the PDU body keeps its
/// adaptation header, framing, and application data, while the original
/// IP/UDP header is replaced by one addressed to `to`.
///
/// Expects the stack `[adaptation header, framing, IpUdp, ...]`.
pub fn readdress<H>(p: &mut Packet, to: &Endpoints) -> Result<IpUdpHeader, PacketError>
where
    H: crate::packet::StackHeader,
{
    let adaptation = p.pop_header::<H>()?;
    let framing = p.pop_framing()?;
    p.pop_header::<IpUdpHeader>()?;
    p.push_framing(framing);
    p.push_header(&adaptation)?;
    to.encapsulate(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XwConfig {
    pub link: LinkModel,
    /// LWAAP node socket toward the station.
    pub endpoints: Endpoints,
}

/// Xw-U segment plus the Wi-Fi air link. The WLAN termination is a
/// zero-cost relay between them.
#[derive(Debug)]
pub struct WlanPath {
    pub xw: Link,
    pub air: Link,
}

impl WlanPath {
    pub fn new(xw: LinkModel, wifi: LinkModel) -> Self {
        WlanPath {
            xw: Link::new(xw),
            air: Link::new(wifi),
        }
    }

    pub fn xw_transmit(&mut self, now: SimTime, p: &mut Packet) -> Transmission {
        p.hops.push(Hop::Xw);
        self.xw.transmit(now, p.wire_len())
    }

    /// Returns the transmission and the air frame length including framing.
    pub fn air_transmit(&mut self, now: SimTime, p: &mut Packet) -> (Transmission, usize) {
        p.hops.push(Hop::Ap);
        p.hops.push(Hop::Air);
        let len = p.wire_len();
        (self.air.transmit(now, len), self.air.model.frame_len(len))
    }

    pub fn framing_overhead(&self) -> usize {
        self.air.model.framing_overhead_bytes
    }
}

/// Air frame image: zeroed framing block followed by the IP datagram.
pub fn air_frame_bytes(p: &Packet, seed: u64, framing: usize) -> Vec<u8> {
    let mut out = vec![0u8; framing];
    out.extend_from_slice(&p.to_bytes(seed));
    out
}
