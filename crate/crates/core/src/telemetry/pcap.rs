//! Classic libpcap writer (microsecond timestamps, big-endian headers) and
//! a small reader used to check the traces we emit.

use std::io::{self, Write};

use thiserror::Error;

use crate::engine::SimTime;

pub const MAGIC: u32 = 0xa1b2_c3d4;
pub const VERSION_MAJOR: u16 = 2;
pub const VERSION_MINOR: u16 = 4;
pub const SNAPLEN: u32 = 65_535;
pub const GLOBAL_HEADER_LEN: usize = 24;
pub const RECORD_HEADER_LEN: usize = 16;

/// Link-layer type stored in the global header.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinkType {
    /// LINKTYPE_RAW: frames start with an IPv4 header.
    RawIp,
    /// LINKTYPE_USER0: modeled Wi-Fi framing followed by the IP datagram.
    User0,
}

impl LinkType {
    pub fn code(self) -> u32 {
        match self {
            LinkType::RawIp => 101,
            LinkType::User0 => 147,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            101 => Some(LinkType::RawIp),
            147 => Some(LinkType::User0),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum PcapError {
    #[error("pcap I/O: {0}")]
    Io(#[from] io::Error),
    #[error("record at {at} precedes previous record at {prev}")]
    NonMonotonic { at: SimTime, prev: SimTime },
    #[error("frame of {0} bytes exceeds the snapshot length")]
    TooLong(usize),
    #[error("malformed pcap: {0}")]
    Malformed(&'static str),
}

pub struct PcapWriter<W: Write> {
    inner: W,
    last: SimTime,
    records: u64,
}

impl<W: Write> PcapWriter<W> {
    pub fn new(mut inner: W, link: LinkType) -> Result<Self, PcapError> {
        let mut hdr = Vec::with_capacity(GLOBAL_HEADER_LEN);
        hdr.extend_from_slice(&MAGIC.to_be_bytes());
        hdr.extend_from_slice(&VERSION_MAJOR.to_be_bytes());
        hdr.extend_from_slice(&VERSION_MINOR.to_be_bytes());
        hdr.extend_from_slice(&0i32.to_be_bytes()); // thiszone
        hdr.extend_from_slice(&0u32.to_be_bytes()); // sigfigs
        hdr.extend_from_slice(&SNAPLEN.to_be_bytes());
        hdr.extend_from_slice(&link.code().to_be_bytes());
        inner.write_all(&hdr)?;
        Ok(PcapWriter {
            inner,
            last: SimTime::ZERO,
            records: 0,
        })
    }

    pub fn records(&self) -> u64 {
        self.records
    }

    pub fn write_record(&mut self, at: SimTime, frame: &[u8]) -> Result<(), PcapError> {
        if at < self.last {
            return Err(PcapError::NonMonotonic {
                at,
                prev: self.last,
            });
        }
        if frame.len() > SNAPLEN as usize {
            return Err(PcapError::TooLong(frame.len()));
        }
        self.last = at;
        let nanos = at.as_nanos();
        let secs = (nanos / 1_000_000_000) as u32;
        let micros = ((nanos % 1_000_000_000) / 1_000) as u32;
        let len = frame.len() as u32;
        let mut hdr = [0u8; RECORD_HEADER_LEN];
        hdr[0..4].copy_from_slice(&secs.to_be_bytes());
        hdr[4..8].copy_from_slice(&micros.to_be_bytes());
        hdr[8..12].copy_from_slice(&len.to_be_bytes());
        hdr[12..16].copy_from_slice(&len.to_be_bytes());
        self.inner.write_all(&hdr)?;
        self.inner.write_all(frame)?;
        self.records += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W, PcapError> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PcapRecord {
    pub ts_sec: u32,
    pub ts_usec: u32,
    pub orig_len: u32,
    pub data: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PcapFile {
    pub link: u32,
    pub snaplen: u32,
    pub records: Vec<PcapRecord>,
}

/// Parses a classic pcap in either byte order.
pub fn read_pcap(bytes: &[u8]) -> Result<PcapFile, PcapError> {
    if bytes.len() < GLOBAL_HEADER_LEN {
        return Err(PcapError::Malformed("short global header"));
    }
    let big = match &bytes[0..4] {
        [0xa1, 0xb2, 0xc3, 0xd4] => true,
        [0xd4, 0xc3, 0xb2, 0xa1] => false,
        _ => return Err(PcapError::Malformed("bad magic")),
    };
    let u32_at = |b: &[u8], i: usize| {
        let a = [b[i], b[i + 1], b[i + 2], b[i + 3]];
        if big {
            u32::from_be_bytes(a)
        } else {
            u32::from_le_bytes(a)
        }
    };
    let snaplen = u32_at(bytes, 16);
    let link = u32_at(bytes, 20);
    let mut records = Vec::new();
    let mut off = GLOBAL_HEADER_LEN;
    while off < bytes.len() {
        if bytes.len() - off < RECORD_HEADER_LEN {
            return Err(PcapError::Malformed("short record header"));
        }
        let ts_sec = u32_at(bytes, off);
        let ts_usec = u32_at(bytes, off + 4);
        let incl = u32_at(bytes, off + 8) as usize;
        let orig_len = u32_at(bytes, off + 12);
        off += RECORD_HEADER_LEN;
        if ts_usec >= 1_000_000 || incl > snaplen as usize || bytes.len() - off < incl {
            return Err(PcapError::Malformed("inconsistent record"));
        }
        records.push(PcapRecord {
            ts_sec,
            ts_usec,
            orig_len,
            data: bytes[off..off + incl].to_vec(),
        });
        off += incl;
    }
    Ok(PcapFile {
        link,
        snaplen,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn global_header_layout() {
        let w = PcapWriter::new(Vec::new(), LinkType::RawIp).unwrap();
        let b = w.finish().unwrap();
        assert_eq!(b.len(), 24);
        assert_eq!(&b[0..4], &[0xa1, 0xb2, 0xc3, 0xd4]);
        assert_eq!(&b[4..8], &[0, 2, 0, 4]);
        assert_eq!(&b[20..24], &101u32.to_be_bytes());
    }

    #[test]
    fn record_round_trip_with_truncated_timestamp() {
        let mut w = PcapWriter::new(Vec::new(), LinkType::User0).unwrap();
        w.write_record(SimTime::from_nanos(4_800_123_999), &[1, 2, 3])
            .unwrap();
        w.write_record(SimTime::from_nanos(4_800_123_999), &[4; 740])
            .unwrap();
        let f = read_pcap(&w.finish().unwrap()).unwrap();
        assert_eq!(f.link, 147);
        assert_eq!(f.records.len(), 2);
        assert_eq!(f.records[0].ts_sec, 4);
        assert_eq!(f.records[0].ts_usec, 800_123);
        assert_eq!(f.records[0].data, vec![1, 2, 3]);
        assert_eq!(f.records[1].orig_len, 740);
    }

    #[test]
    fn decreasing_timestamps_rejected() {
        let mut w = PcapWriter::new(Vec::new(), LinkType::RawIp).unwrap();
        w.write_record(SimTime::from_millis(2), &[]).unwrap();
        assert!(matches!(
            w.write_record(SimTime::from_millis(1), &[]),
            Err(PcapError::NonMonotonic { .. })
        ));
    }

    #[test]
    fn reader_rejects_garbage() {
        assert!(read_pcap(&[0u8; 24]).is_err());
        let mut b = PcapWriter::new(Vec::new(), LinkType::RawIp)
            .unwrap()
            .finish()
            .unwrap();
        b.extend_from_slice(&[0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 9, 0, 0, 0, 9, 1]);
        assert!(read_pcap(&b).is_err());
    }

    struct FailingWriter;

    impl Write for FailingWriter {
        fn write(&mut self, _: &[u8]) -> io::Result<usize> {
            Err(io::Error::other("disk full"))
        }
        fn flush(&mut self) -> io::Result<()> {
            Ok(())
        }
    }

    #[test]
    fn io_failure_surfaces() {
        assert!(matches!(
            PcapWriter::new(FailingWriter, LinkType::RawIp),
            Err(PcapError::Io(_))
        ));
    }
}
