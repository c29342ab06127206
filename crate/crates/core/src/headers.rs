//! Fixed-layout, big-endian codecs for every header the simulator puts on
//! the wire or into a pcap trace.
//!
//! | header        | size | layout                                              |
//! |---------------|------|-----------------------------------------------------|
//! | `LwaHeader`   | 2    | activate, bearer_id                                 |
//! | `LwipHeader`  | 2    | activate, bearer_id                                 |
//! | `SeqTsHeader` | 12   | seq (u32), timestamp ns (u64)                       |
//! | `IpUdpHeader` | 28   | IPv4 (no options, checksum 0) followed by UDP       |

use std::net::Ipv4Addr;

use thiserror::Error;

use crate::engine::SimTime;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("{header}: field `{field}` value {value} out of range")]
    OutOfRange {
        header: &'static str,
        field: &'static str,
        value: u64,
    },
    #[error("{header}: truncated input, need {need} bytes, got {got}")]
    Truncated {
        header: &'static str,
        need: usize,
        got: usize,
    },
    #[error("{header}: malformed ({reason})")]
    Malformed {
        header: &'static str,
        reason: &'static str,
    },
}

/// A header with a fixed encoded size.
pub trait Header: Sized {
    const NAME: &'static str;
    const SIZE: usize;

    /// Appends exactly `SIZE` bytes to `out`.
    fn encode_into(&self, out: &mut Vec<u8>) -> Result<(), CodecError>;

    /// Decodes from the front of `buf`; the caller has checked the length.
    fn decode_fixed(buf: &[u8]) -> Result<Self, CodecError>;

    fn encode(&self) -> Result<Vec<u8>, CodecError> {
        let mut out = Vec::with_capacity(Self::SIZE);
        self.encode_into(&mut out)?;
        debug_assert_eq!(out.len(), Self::SIZE);
        Ok(out)
    }

    /// Returns the header and the bytes following it.
    fn decode(buf: &[u8]) -> Result<(Self, &[u8]), CodecError> {
        if buf.len() < Self::SIZE {
            return Err(CodecError::Truncated {
                header: Self::NAME,
                need: Self::SIZE,
                got: buf.len(),
            });
        }
        let (head, rest) = buf.split_at(Self::SIZE);
        Ok((Self::decode_fixed(head)?, rest))
    }
}

/// LWAAP header. `activate` carries the PDCP LWA mode (0, 1 or 2).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LwaHeader {
    pub activate: u8,
    pub bearer_id: u8,
}

impl LwaHeader {
    pub const MAX_ACTIVATE: u8 = 2;
}

impl Header for LwaHeader {
    const NAME: &'static str = "LwaHeader";
    const SIZE: usize = 2;

    fn encode_into(&self, out: &mut Vec<u8>) -> Result<(), CodecError> {
        check_activate(Self::NAME, self.activate, Self::MAX_ACTIVATE)?;
        out.push(self.activate);
        out.push(self.bearer_id);
        Ok(())
    }

    fn decode_fixed(buf: &[u8]) -> Result<Self, CodecError> {
        check_activate(Self::NAME, buf[0], Self::MAX_ACTIVATE)?;
        Ok(LwaHeader {
            activate: buf[0],
            bearer_id: buf[1],
        })
    }
}

/// LWIPEP header. `activate` is 0 or 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LwipHeader {
    pub activate: u8,
    pub bearer_id: u8,
}

impl LwipHeader {
    pub const MAX_ACTIVATE: u8 = 1;
}

impl Header for LwipHeader {
    const NAME: &'static str = "LwipHeader";
    const SIZE: usize = 2;

    fn encode_into(&self, out: &mut Vec<u8>) -> Result<(), CodecError> {
        check_activate(Self::NAME, self.activate, Self::MAX_ACTIVATE)?;
        out.push(self.activate);
        out.push(self.bearer_id);
        Ok(())
    }

    fn decode_fixed(buf: &[u8]) -> Result<Self, CodecError> {
        check_activate(Self::NAME, buf[0], Self::MAX_ACTIVATE)?;
        Ok(LwipHeader {
            activate: buf[0],
            bearer_id: buf[1],
        })
    }
}

fn check_activate(header: &'static str, value: u8, max: u8) -> Result<(), CodecError> {
    if value > max {
        return Err(CodecError::OutOfRange {
            header,
            field: "activate",
            value: value.into(),
        });
    }
    Ok(())
}

/// Application sequence number and send timestamp.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeqTsHeader {
    pub seq: u32,
    pub ts: SimTime,
}

impl Header for SeqTsHeader {
    const NAME: &'static str = "SeqTsHeader";
    const SIZE: usize = 12;

    fn encode_into(&self, out: &mut Vec<u8>) -> Result<(), CodecError> {
        out.extend_from_slice(&self.seq.to_be_bytes());
        out.extend_from_slice(&self.ts.as_nanos().to_be_bytes());
        Ok(())
    }

    fn decode_fixed(buf: &[u8]) -> Result<Self, CodecError> {
        let seq = u32::from_be_bytes(buf[0..4].try_into().unwrap());
        let ts = u64::from_be_bytes(buf[4..12].try_into().unwrap());
        Ok(SeqTsHeader {
            seq,
            ts: SimTime::from_nanos(ts),
        })
    }
}

/// IPv4 + UDP header pair. `payload_len` is the number of bytes after the
/// UDP header; the IP total length and UDP length fields derive from it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct IpUdpHeader {
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    pub src_port: u16,
    pub dst_port: u16,
    pub payload_len: u16,
}

impl IpUdpHeader {
    pub const IP_LEN: usize = 20;
    pub const UDP_LEN: usize = 8;
    pub const TTL: u8 = 64;
    pub const PROTO_UDP: u8 = 17;
    pub const MAX_PAYLOAD: u16 = u16::MAX - Self::SIZE as u16;
}

impl Header for IpUdpHeader {
    const NAME: &'static str = "IpUdpHeader";
    const SIZE: usize = Self::IP_LEN + Self::UDP_LEN;

    fn encode_into(&self, out: &mut Vec<u8>) -> Result<(), CodecError> {
        if self.payload_len > Self::MAX_PAYLOAD {
            return Err(CodecError::OutOfRange {
                header: Self::NAME,
                field: "payload_len",
                value: self.payload_len.into(),
            });
        }
        let total = self.payload_len + Self::SIZE as u16;
        let udp_len = self.payload_len + Self::UDP_LEN as u16;
        out.push(0x45); // version 4, IHL 5
        out.push(0); // DSCP/ECN
        out.extend_from_slice(&total.to_be_bytes());
        out.extend_from_slice(&[0, 0]); // identification
        out.extend_from_slice(&[0, 0]); // flags + fragment offset
        out.push(Self::TTL);
        out.push(Self::PROTO_UDP);
        out.extend_from_slice(&[0, 0]); // checksum
        out.extend_from_slice(&self.src.octets());
        out.extend_from_slice(&self.dst.octets());
        out.extend_from_slice(&self.src_port.to_be_bytes());
        out.extend_from_slice(&self.dst_port.to_be_bytes());
        out.extend_from_slice(&udp_len.to_be_bytes());
        out.extend_from_slice(&[0, 0]);
        Ok(())
    }

    fn decode_fixed(buf: &[u8]) -> Result<Self, CodecError> {
        let malformed = |reason| CodecError::Malformed {
            header: Self::NAME,
            reason,
        };
        if buf[0] != 0x45 {
            return Err(malformed("not an option-less IPv4 header"));
        }
        if buf[9] != Self::PROTO_UDP {
            return Err(malformed("protocol is not UDP"));
        }
        let be16 = |i: usize| u16::from_be_bytes([buf[i], buf[i + 1]]);
        let total = be16(2);
        let udp_len = be16(24);
        if total < Self::SIZE as u16 || udp_len != total - Self::IP_LEN as u16 {
            return Err(malformed("inconsistent IP/UDP length fields"));
        }
        Ok(IpUdpHeader {
            src: Ipv4Addr::new(buf[12], buf[13], buf[14], buf[15]),
            dst: Ipv4Addr::new(buf[16], buf[17], buf[18], buf[19]),
            src_port: be16(20),
            dst_port: be16(22),
            payload_len: total - Self::SIZE as u16,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lwa_header_layout() {
        let h = LwaHeader {
            activate: 1,
            bearer_id: 1,
        };
        assert_eq!(h.encode().unwrap(), vec![0x01, 0x01]);
        let (d, rest) = LwaHeader::decode(&[0x02, 0x05]).unwrap();
        assert_eq!(
            d,
            LwaHeader {
                activate: 2,
                bearer_id: 5
            }
        );
        assert!(rest.is_empty());
    }

    #[test]
    fn lwa_header_truncated() {
        assert_eq!(
            LwaHeader::decode(&[0x01]).unwrap_err(),
            CodecError::Truncated {
                header: "LwaHeader",
                need: 2,
                got: 1
            }
        );
    }

    #[test]
    fn lwip_activate_out_of_range() {
        let h = LwipHeader {
            activate: 2,
            bearer_id: 1,
        };
        assert!(matches!(
            h.encode(),
            Err(CodecError::OutOfRange {
                field: "activate",
                value: 2,
                ..
            })
        ));
        assert!(LwipHeader::decode(&[2, 1]).is_err());
        assert!(LwaHeader::decode(&[3, 1]).is_err());
    }

    #[test]
    fn seq_ts_zero_is_twelve_zero_bytes() {
        let h = SeqTsHeader {
            seq: 0,
            ts: SimTime::ZERO,
        };
        assert_eq!(h.encode().unwrap(), vec![0u8; 12]);
    }

    #[test]
    fn seq_ts_is_big_endian() {
        let h = SeqTsHeader {
            seq: 0x0102_0304,
            ts: SimTime::from_nanos(0x0a0b_0c0d_0e0f_1011),
        };
        assert_eq!(
            h.encode().unwrap(),
            vec![1, 2, 3, 4, 0x0a, 0x0b, 0x0c, 0x0d, 0x0e, 0x0f, 0x10, 0x11]
        );
    }

    #[test]
    fn ip_udp_fields() {
        let h = IpUdpHeader {
            src: Ipv4Addr::new(1, 0, 0, 2),
            dst: Ipv4Addr::new(7, 0, 0, 2),
            src_port: 49153,
            dst_port: 9,
            payload_len: 600,
        };
        let b = h.encode().unwrap();
        assert_eq!(b.len(), 28);
        assert_eq!(u16::from_be_bytes([b[2], b[3]]), 628);
        assert_eq!(u16::from_be_bytes([b[24], b[25]]), 608);
        assert_eq!(b[9], 17);
        assert_eq!(&b[12..16], &[1, 0, 0, 2]);
        let (d, _) = IpUdpHeader::decode(&b).unwrap();
        assert_eq!(d, h);
    }

    #[test]
    fn ip_udp_rejects_non_udp() {
        let mut b = IpUdpHeader {
            src: Ipv4Addr::LOCALHOST,
            dst: Ipv4Addr::LOCALHOST,
            src_port: 1,
            dst_port: 2,
            payload_len: 0,
        }
        .encode()
        .unwrap();
        b[9] = 6;
        assert!(matches!(
            IpUdpHeader::decode(&b),
            Err(CodecError::Malformed { .. })
        ));
    }
}
