//! eNB PDCP stage: activation modes, the modulo-N split, offload tagging,
//! and the polled hand-off queue toward LWAAP/LWIPEP.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::SimTime;
use crate::packet::{LcidTag, LwaTag, LwipTag, Packet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModeError {
    #[error("lwa mode must be 0, 1 or 2, got {0}")]
    BadLwa(u8),
    #[error("lwip mode must be 0 or 1, got {0}")]
    BadLwip(u8),
    #[error("LWA and LWIP cannot both be active (lwa={lwa}, lwip={lwip})")]
    BothActive { lwa: u8, lwip: u8 },
    #[error("split modulus must be at least 2, got {0}")]
    BadModulus(u64),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum LwaMode {
    #[default]
    LteOnly,
    Split,
    WifiOnly,
}

impl TryFrom<u8> for LwaMode {
    type Error = ModeError;

    fn try_from(v: u8) -> Result<Self, ModeError> {
        match v {
            0 => Ok(LwaMode::LteOnly),
            1 => Ok(LwaMode::Split),
            2 => Ok(LwaMode::WifiOnly),
            _ => Err(ModeError::BadLwa(v)),
        }
    }
}

impl From<LwaMode> for u8 {
    fn from(m: LwaMode) -> u8 {
        match m {
            LwaMode::LteOnly => 0,
            LwaMode::Split => 1,
            LwaMode::WifiOnly => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum LwipMode {
    #[default]
    Off,
    On,
}

impl TryFrom<u8> for LwipMode {
    type Error = ModeError;

    fn try_from(v: u8) -> Result<Self, ModeError> {
        match v {
            0 => Ok(LwipMode::Off),
            1 => Ok(LwipMode::On),
            _ => Err(ModeError::BadLwip(v)),
        }
    }
}

impl From<LwipMode> for u8 {
    fn from(m: LwipMode) -> u8 {
        match m {
            LwipMode::Off => 0,
            LwipMode::On => 1,
        }
    }
}

/// PDCP routing state, fixed for the whole run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ActivationMode {
    lwa: LwaMode,
    lwip: LwipMode,
}

impl ActivationMode {
    pub fn new(lwa: LwaMode, lwip: LwipMode) -> Result<Self, ModeError> {
        if lwa != LwaMode::LteOnly && lwip != LwipMode::Off {
            return Err(ModeError::BothActive {
                lwa: lwa.into(),
                lwip: lwip.into(),
            });
        }
        Ok(ActivationMode { lwa, lwip })
    }

    pub fn lwa(lwa: LwaMode) -> Self {
        ActivationMode {
            lwa,
            lwip: LwipMode::Off,
        }
    }

    pub fn lwip(lwip: LwipMode) -> Self {
        ActivationMode {
            lwa: LwaMode::LteOnly,
            lwip,
        }
    }

    pub fn lwa_mode(&self) -> LwaMode {
        self.lwa
    }

    pub fn lwip_mode(&self) -> LwipMode {
        self.lwip
    }

    pub fn is_lwip(&self) -> bool {
        self.lwip == LwipMode::On
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RouteDecision {
    Lte,
    Offload,
}

impl fmt::Display for RouteDecision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RouteDecision::Lte => f.write_str("LTE"),
            RouteDecision::Offload => f.write_str("OFFLOAD"),
        }
    }
}

/// Per-bearer PDCP PDU counter driving the modulo-N split.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitState {
    pub counter: u64,
    modulus: u64,
}

impl SplitState {
    pub fn new(modulus: u64) -> Result<Self, ModeError> {
        if modulus < 2 {
            return Err(ModeError::BadModulus(modulus));
        }
        Ok(SplitState {
            counter: 0,
            modulus,
        })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BearerConfig {
    pub rbid: u8,
    pub pdcp_rrc_overhead_bytes: usize,
}

impl Default for BearerConfig {
    fn default() -> Self {
        BearerConfig {
            rbid: 1,
            pdcp_rrc_overhead_bytes: 30,
        }
    }
}

impl BearerConfig {
    /// Logical channel id; data bearers are offset by two.
    pub fn lcid(&self) -> u8 {
        self.rbid + 2
    }

    /// Opaque framing added when a PDU is copied for offload. The
    /// remaining two bytes of the PDCP/RRC overhead are the LWAAP/LWIPEP header.
    pub fn framing_bytes(&self) -> usize {
        self.pdcp_rrc_overhead_bytes.saturating_sub(2)
    }
}

/// Routes one PDCP PDU and advances the split counter.
pub fn pdcp_submit(mode: ActivationMode, split: &mut SplitState) -> RouteDecision {
    let remainder = split.counter % split.modulus;
    split.counter += 1;
    if mode.lwip == LwipMode::On {
        return RouteDecision::Offload;
    }
    match mode.lwa {
        LwaMode::LteOnly => RouteDecision::Lte,
        LwaMode::WifiOnly => RouteDecision::Offload,
        LwaMode::Split if remainder == 0 => RouteDecision::Lte,
        LwaMode::Split => RouteDecision::Offload,
    }
}

/// Attaches activation and lcid tags and the opaque PDCP/RRC framing.
pub fn tag_for_offload(p: &mut Packet, bearer: &BearerConfig, mode: ActivationMode) {
    if mode.is_lwip() {
        p.tags.lwip = Some(LwipTag(mode.lwip.into()));
    } else {
        p.tags.lwa = Some(LwaTag(mode.lwa.into()));
    }
    p.tags.lcid = Some(LcidTag(bearer.lcid()));
    p.push_framing(bearer.framing_bytes());
}

/// PDCP entity for one bearer, with per-route counters.
#[derive(Clone, Debug)]
pub struct Pdcp {
    pub bearer: BearerConfig,
    pub mode: ActivationMode,
    pub split: SplitState,
    pub submitted: u64,
    pub routed_lte: u64,
    pub routed_offload: u64,
}

impl Pdcp {
    pub fn new(
        bearer: BearerConfig,
        mode: ActivationMode,
        modulus: u64,
    ) -> Result<Self, ModeError> {
        Ok(Pdcp {
            bearer,
            mode,
            split: SplitState::new(modulus)?,
            submitted: 0,
            routed_lte: 0,
            routed_offload: 0,
        })
    }

    /// Routes `p`; offloaded packets come back tagged and framed.
    pub fn submit(&mut self, p: &mut Packet) -> RouteDecision {
        self.submitted += 1;
        let route = pdcp_submit(self.mode, &mut self.split);
        match route {
            RouteDecision::Lte => self.routed_lte += 1,
            RouteDecision::Offload => {
                self.routed_offload += 1;
                tag_for_offload(p, &self.bearer, self.mode);
            }
        }
        route
    }
}

/// FIFO buffer between PDCP and the offload adaptation entity, drained on
/// every poll tick.
#[derive(Debug)]
pub struct OffloadQueue {
    pub poll_interval: SimTime,
    fifo: VecDeque<(Packet, SimTime)>,
    pub enqueued: u64,
    pub forwarded: u64,
    pub max_wait: SimTime,
}

impl OffloadQueue {
    pub fn new(poll_interval: SimTime) -> Self {
        OffloadQueue {
            poll_interval,
            fifo: VecDeque::new(),
            enqueued: 0,
            forwarded: 0,
            max_wait: SimTime::ZERO,
        }
    }

    pub fn enqueue(&mut self, p: Packet, now: SimTime) {
        self.enqueued += 1;
        self.fifo.push_back((p, now));
    }

    pub fn is_empty(&self) -> bool {
        self.fifo.is_empty()
    }

    pub fn len(&self) -> usize {
        self.fifo.len()
    }

    /// Drains the queue in FIFO order.
    pub fn poll(&mut self, now: SimTime) -> Vec<Packet> {
        let mut out = Vec::with_capacity(self.fifo.len());
        while let Some((p, at)) = self.fifo.pop_front() {
            self.max_wait = self.max_wait.max(now - at);
            out.push(p);
        }
        self.forwarded += out.len() as u64;
        out
    }

    /// First poll tick at or after `t`, on the grid `k * poll_interval`, k >= 1.
    pub fn next_tick(&self, t: SimTime) -> SimTime {
        let iv = self.poll_interval.as_nanos().max(1);
        let k = t.as_nanos().div_ceil(iv).max(1);
        SimTime::from_nanos(k * iv)
    }
}
