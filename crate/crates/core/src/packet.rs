//! Simulated packets: a virtual payload, a LIFO stack of encoded header
//! blocks, and side-band tags that never count toward the wire length.

use std::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::headers::{CodecError, Header, IpUdpHeader, LwaHeader, LwipHeader, SeqTsHeader};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HeaderKind {
    IpUdp,
    SeqTs,
    Lwa,
    Lwip,
    /// Opaque PDCP/RRC framing added at the eNB when a PDU is copied for offload.
    PdcpFraming,
}

impl fmt::Display for HeaderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            HeaderKind::IpUdp => "IpUdpHeader",
            HeaderKind::SeqTs => "SeqTsHeader",
            HeaderKind::Lwa => "LwaHeader",
            HeaderKind::Lwip => "LwipHeader",
            HeaderKind::PdcpFraming => "PdcpFraming",
        };
        f.write_str(s)
    }
}

/// Ties a header codec to its kind in the stack.
pub trait StackHeader: Header {
    const KIND: HeaderKind;
}

impl StackHeader for IpUdpHeader {
    const KIND: HeaderKind = HeaderKind::IpUdp;
}
impl StackHeader for SeqTsHeader {
    const KIND: HeaderKind = HeaderKind::SeqTs;
}
impl StackHeader for LwaHeader {
    const KIND: HeaderKind = HeaderKind::Lwa;
}
impl StackHeader for LwipHeader {
    const KIND: HeaderKind = HeaderKind::Lwip;
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PacketError {
    #[error("expected {expected} on top of the header stack, found {}", found.map(|k| k.to_string()).unwrap_or_else(|| "nothing".into()))]
    HeaderMismatch {
        expected: HeaderKind,
        found: Option<HeaderKind>,
    },
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("lcid {0} does not identify a data radio bearer")]
    NoDataBearer(u8),
    #[error("payload trailer of {trailer} bytes does not fit a {payload} byte payload")]
    TrailerTooLong { trailer: usize, payload: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct HeaderBlock {
    kind: HeaderKind,
    bytes: Vec<u8>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LwaTag(pub u8);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LwipTag(pub u8);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LcidTag(pub u8);

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Tags {
    pub lwa: Option<LwaTag>,
    pub lwip: Option<LwipTag>,
    pub lcid: Option<LcidTag>,
}

/// Nodes a packet has visited, in order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Hop {
    RemoteHost,
    Pdcp,
    LteRadio,
    Ue,
    Lwaap,
    Lwipep,
    Segw,
    Xw,
    Ap,
    Air,
    Station,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Packet {
    uid: u64,
    payload_len: usize,
    trailer: Vec<u8>,
    headers: Vec<HeaderBlock>,
    pub tags: Tags,
    pub hops: Vec<Hop>,
}

impl Packet {
    pub fn new(uid: u64, payload_len: usize) -> Self {
        Packet {
            uid,
            payload_len,
            trailer: Vec::new(),
            headers: Vec::new(),
            tags: Tags::default(),
            hops: Vec::new(),
        }
    }

    pub fn uid(&self) -> u64 {
        self.uid
    }

    pub fn payload_len(&self) -> usize {
        self.payload_len
    }

    pub fn wire_len(&self) -> usize {
        self.payload_len + self.headers.iter().map(|h| h.bytes.len()).sum::<usize>()
    }

    pub fn header_kinds(&self) -> Vec<HeaderKind> {
        self.headers.iter().rev().map(|h| h.kind).collect()
    }

    pub fn top_kind(&self) -> Option<HeaderKind> {
        self.headers.last().map(|h| h.kind)
    }

    pub fn push_header<H: StackHeader>(&mut self, h: &H) -> Result<(), PacketError> {
        let bytes = h.encode()?;
        self.headers.push(HeaderBlock {
            kind: H::KIND,
            bytes,
        });
        Ok(())
    }

    pub fn peek_header<H: StackHeader>(&self) -> Result<H, PacketError> {
        match self.headers.last() {
            Some(b) if b.kind == H::KIND => Ok(H::decode(&b.bytes)?.0),
            other => Err(PacketError::HeaderMismatch {
                expected: H::KIND,
                found: other.map(|b| b.kind),
            }),
        }
    }

    pub fn pop_header<H: StackHeader>(&mut self) -> Result<H, PacketError> {
        let h = self.peek_header::<H>()?;
        self.headers.pop();
        Ok(h)
    }

    /// Pushes `len` opaque zero bytes of PDCP/RRC framing.
    pub fn push_framing(&mut self, len: usize) {
        self.headers.push(HeaderBlock {
            kind: HeaderKind::PdcpFraming,
            bytes: vec![0; len],
        });
    }

    /// Pops the framing block, returning its length.
    pub fn pop_framing(&mut self) -> Result<usize, PacketError> {
        match self.headers.last() {
            Some(b) if b.kind == HeaderKind::PdcpFraming => {
                let len = b.bytes.len();
                self.headers.pop();
                Ok(len)
            }
            other => Err(PacketError::HeaderMismatch {
                expected: HeaderKind::PdcpFraming,
                found: other.map(|b| b.kind),
            }),
        }
    }

    /// Overwrites the final bytes of the payload filler. Does not change
    /// the wire length.
    pub fn set_trailer(&mut self, trailer: &[u8]) -> Result<(), PacketError> {
        if trailer.len() > self.payload_len {
            return Err(PacketError::TrailerTooLong {
                trailer: trailer.len(),
                payload: self.payload_len,
            });
        }
        self.trailer = trailer.to_vec();
        Ok(())
    }

    pub fn trailer(&self) -> &[u8] {
        &self.trailer
    }

    /// Payload bytes: seeded filler with the trailer (if any) at the end.
    pub fn payload_bytes(&self, seed: u64) -> Vec<u8> {
        let mut out = filler(seed, self.uid, self.payload_len);
        let start = self.payload_len - self.trailer.len();
        out[start..].copy_from_slice(&self.trailer);
        out
    }

    /// Header bytes from outermost to innermost.
    pub fn header_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.wire_len() - self.payload_len);
        for b in self.headers.iter().rev() {
            out.extend_from_slice(&b.bytes);
        }
        out
    }

    /// Full wire image: headers outermost first, then payload.
    pub fn to_bytes(&self, seed: u64) -> Vec<u8> {
        let mut out = self.header_bytes();
        out.extend_from_slice(&self.payload_bytes(seed));
        out
    }
}

/// Deterministic payload filler for packet `uid` under run `seed`.
pub fn filler(seed: u64, uid: u64, len: usize) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(uid);
    let mut out = vec![0u8; len];
    rng.fill_bytes(&mut out);
    out
}

/// Radio bearer id for a logical channel id; data bearers start at lcid 2.
pub fn rbid_from_lcid(lcid: u8) -> Result<u8, PacketError> {
    lcid.checked_sub(2).ok_or(PacketError::NoDataBearer(lcid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::SimTime;

    #[test]
    fn rbid_derivation() {
        assert_eq!(rbid_from_lcid(3), Ok(1));
        assert_eq!(rbid_from_lcid(2), Ok(0));
        assert_eq!(rbid_from_lcid(1), Err(PacketError::NoDataBearer(1)));
    }

    #[test]
    fn wire_len_counts_headers_not_tags() {
        let mut p = Packet::new(0, 588);
        p.push_header(&SeqTsHeader {
            seq: 0,
            ts: SimTime::ZERO,
        })
        .unwrap();
        assert_eq!(p.wire_len(), 600);
        p.tags.lwa = Some(LwaTag(1));
        p.tags.lcid = Some(LcidTag(3));
        assert_eq!(p.wire_len(), 600);
        p.tags = Tags::default();
        assert_eq!(p.wire_len(), 600);
    }

    #[test]
    fn header_stack_is_lifo() {
        let mut p = Packet::new(1, 10);
        let seq = SeqTsHeader {
            seq: 7,
            ts: SimTime::from_millis(3),
        };
        let lwa = LwaHeader {
            activate: 2,
            bearer_id: 1,
        };
        p.push_header(&seq).unwrap();
        p.push_framing(28);
        p.push_header(&lwa).unwrap();
        assert_eq!(
            p.header_kinds(),
            vec![HeaderKind::Lwa, HeaderKind::PdcpFraming, HeaderKind::SeqTs]
        );
        assert_eq!(
            p.pop_header::<SeqTsHeader>().unwrap_err(),
            PacketError::HeaderMismatch {
                expected: HeaderKind::SeqTs,
                found: Some(HeaderKind::Lwa)
            }
        );
        assert_eq!(p.pop_header::<LwaHeader>().unwrap(), lwa);
        assert_eq!(p.pop_framing().unwrap(), 28);
        assert_eq!(p.pop_header::<SeqTsHeader>().unwrap(), seq);
        assert!(p.pop_header::<SeqTsHeader>().is_err());
        assert_eq!(p.wire_len(), 10);
    }

    #[test]
    fn bytes_are_headers_then_payload() {
        let mut p = Packet::new(5, 8);
        p.push_header(&LwaHeader {
            activate: 1,
            bearer_id: 4,
        })
        .unwrap();
        let b = p.to_bytes(42);
        assert_eq!(b.len(), 10);
        assert_eq!(&b[..2], &[1, 4]);
        assert_eq!(&b[2..], &filler(42, 5, 8)[..]);
    }

    #[test]
    fn trailer_overwrites_end_of_filler() {
        let mut p = Packet::new(9, 16);
        p.set_trailer(&[0xde, 0xad, 0xbe, 0xef]).unwrap();
        let b = p.payload_bytes(1);
        assert_eq!(b.len(), 16);
        assert_eq!(&b[12..], &[0xde, 0xad, 0xbe, 0xef]);
        assert_eq!(&b[..12], &filler(1, 9, 16)[..12]);
        assert!(Packet::new(0, 2).set_trailer(&[0; 4]).is_err());
    }

    #[test]
    fn filler_depends_on_seed_and_uid() {
        assert_eq!(filler(1, 2, 32), filler(1, 2, 32));
        assert_ne!(filler(1, 2, 32), filler(1, 3, 32));
        assert_ne!(filler(1, 2, 32), filler(2, 2, 32));
    }
}
