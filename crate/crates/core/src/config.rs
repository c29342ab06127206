//! Scenario configuration: presets, flat dotted-key files, CLI overrides,
//! and validation.

use std::fmt;
use std::net::{Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::SimTime;
use crate::link::LinkModel;
use crate::lte::{ActivationMode, BearerConfig, LwaMode, LwipMode, ModeError};
use crate::lwip::TunnelConfig;
use crate::traffic::{Endpoints, OnOffConfig, TrafficError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parsing config: {0}")]
    Parse(String),
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("scenario `baseline` requires lwa_mode=0 and lwip_mode=0 (got lwa_mode={lwa}, lwip_mode={lwip})")]
    BaselineWithOffload { lwa: u8, lwip: u8 },
    #[error("scenario `lwa` cannot enable LWIP (lwip_mode={0}); use --scenario lwip")]
    LwaWithLwip(u8),
    #[error("LWIP is switched-only: lwa_mode must be 0 under scenario `lwip` (got {0}); split bearers need --scenario lwa")]
    LwipSplit(u8),
    #[error(transparent)]
    Mode(#[from] ModeError),
    #[error("traffic: {0}")]
    Traffic(#[from] TrafficError),
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("bearer rbid {0} leaves no room for lcid = rbid + 2")]
    BadRbid(u8),
    #[error("pdcp_rrc_overhead_bytes must be at least 2 (the adaptation header), got {0}")]
    OverheadTooSmall(usize),
    #[error("role `enb` needs wire.peer")]
    MissingPeer,
    #[error("role `sta` needs wire.listen")]
    MissingListen,
}

#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    #[default]
    Baseline,
    Lwa,
    Lwip,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Baseline => "baseline",
            Scenario::Lwa => "lwa",
            Scenario::Lwip => "lwip",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Enb,
    Sta,
}

#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "snake_case")]
pub enum Pacing {
    Real,
    #[default]
    Fast,
}

/// Two-process mode settings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireConfig {
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peer: Option<SocketAddr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub listen: Option<SocketAddr>,
    #[serde(default)]
    pub pacing: Pacing,
    #[serde(rename = "idle_timeout_ns")]
    pub idle_timeout: SimTime,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub lwa_mode: LwaMode,
    pub lwip_mode: LwipMode,
    pub split_modulus: u64,
    pub seed: u64,
    #[serde(rename = "poll_interval_ns")]
    pub poll_interval: SimTime,
    #[serde(rename = "t_reordering_ns")]
    pub t_reordering: SimTime,
    pub traffic: OnOffConfig,
    pub bearer: BearerConfig,
    pub lte_link: LinkModel,
    pub xw_link: LinkModel,
    pub wifi_link: LinkModel,
    /// Remote host to UE application flow.
    pub app: Endpoints,
    /// LWAAP node socket toward the Wi-Fi station.
    pub xw: Endpoints,
    pub tunnel: TunnelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wire: Option<WireConfig>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scenario: Scenario::Baseline,
            lwa_mode: LwaMode::LteOnly,
            lwip_mode: LwipMode::Off,
            split_modulus: 2,
            seed: 1,
            poll_interval: SimTime::from_micros(100),
            t_reordering: SimTime::from_millis(100),
            traffic: OnOffConfig::default(),
            bearer: BearerConfig::default(),
            lte_link: LinkModel::new(100_000_000, SimTime::from_millis(5)),
            xw_link: LinkModel::new(1_000_000_000, SimTime::from_millis(1)),
            wifi_link: LinkModel::new(54_000_000, SimTime::from_millis(1)).with_framing(82),
            app: Endpoints {
                src: Ipv4Addr::new(1, 0, 0, 2),
                dst: Ipv4Addr::new(7, 0, 0, 2),
                src_port: 49153,
                dst_port: 9,
            },
            xw: Endpoints {
                src: Ipv4Addr::new(10, 1, 2, 1),
                dst: Ipv4Addr::new(10, 1, 3, 2),
                src_port: 49154,
                dst_port: 10,
            },
            tunnel: TunnelConfig::default(),
            out: None,
            wire: None,
        }
    }
}

impl ScenarioConfig {
    /// Defaults for a preset: `lwa` starts split, `lwip` starts switched on.
    pub fn preset(scenario: Scenario) -> Self {
        let mut c = ScenarioConfig {
            scenario,
            ..ScenarioConfig::default()
        };
        match scenario {
            Scenario::Baseline => {}
            Scenario::Lwa => c.lwa_mode = LwaMode::Split,
            Scenario::Lwip => c.lwip_mode = LwipMode::On,
        }
        c
    }

    pub fn activation(&self) -> ActivationMode {
        ActivationMode::new(self.lwa_mode, self.lwip_mode)
            .expect("validated configs never enable both")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let lwa: u8 = self.lwa_mode.into();
        let lwip: u8 = self.lwip_mode.into();
        match self.scenario {
            Scenario::Baseline if lwa != 0 || lwip != 0 => {
                return Err(ConfigError::BaselineWithOffload { lwa, lwip })
            }
            Scenario::Lwa if lwip != 0 => return Err(ConfigError::LwaWithLwip(lwip)),
            Scenario::Lwip if lwa != 0 => return Err(ConfigError::LwipSplit(lwa)),
            _ => {}
        }
        ActivationMode::new(self.lwa_mode, self.lwip_mode)?;
        if self.split_modulus < 2 {
            return Err(ModeError::BadModulus(self.split_modulus).into());
        }
        self.traffic.validate()?;
        for (name, link) in [
            ("lte_link.rate_bps", &self.lte_link),
            ("xw_link.rate_bps", &self.xw_link),
            ("wifi_link.rate_bps", &self.wifi_link),
        ] {
            if link.rate_bps == 0 {
                return Err(ConfigError::NotPositive(name));
            }
        }
        if self.poll_interval == SimTime::ZERO {
            return Err(ConfigError::NotPositive("poll_interval_ns"));
        }
        if self.t_reordering == SimTime::ZERO {
            return Err(ConfigError::NotPositive("t_reordering_ns"));
        }
        if self.bearer.rbid > u8::MAX - 2 {
            return Err(ConfigError::BadRbid(self.bearer.rbid));
        }
        if self.bearer.pdcp_rrc_overhead_bytes < 2 {
            return Err(ConfigError::OverheadTooSmall(
                self.bearer.pdcp_rrc_overhead_bytes,
            ));
        }
        if let Some(w) = &self.wire {
            match w.role {
                Role::Enb if w.peer.is_none() => return Err(ConfigError::MissingPeer),
                Role::Sta if w.listen.is_none() => return Err(ConfigError::MissingListen),
                _ => {}
            }
        }
        Ok(())
    }

    /// Serializes to flat `dotted.key = value` lines, sorted by key.
    pub fn to_dotted(&self) -> String {
        let value = toml::Value::try_from(self).expect("config serializes");
        let mut lines = Vec::new();
        flatten("", &value, &mut lines);
        lines.sort();
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }

    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = s
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        let mut base = toml::Value::try_from(ScenarioConfig::default()).expect("config serializes");
        check_keys(&base, &toml::Value::Table(table.clone()), "")?;
        merge(&mut base, toml::Value::Table(table));
        deserialize(base)
    }
}

fn flatten(prefix: &str, v: &toml::Value, out: &mut Vec<String>) {
    match v {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out);
            }
        }
        other => out.push(format!("{prefix} = {other}")),
    }
}

fn merge(base: &mut toml::Value, overlay: toml::Value) {
    match (base, overlay) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_table() && v.is_table() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Rejects keys that do not exist in the default config. Optional sections
/// (`out`, `wire.*`) are accepted as-is and checked by serde.
fn check_keys(known: &toml::Value, given: &toml::Value, prefix: &str) -> Result<(), ConfigError> {
    let (Some(known), Some(given)) = (known.as_table(), given.as_table()) else {
        return Ok(());
    };
    for (k, v) in given {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        if prefix.is_empty() && (k == "out" || k == "wire") {
            continue;
        }
        match known.get(k) {
            None => return Err(ConfigError::UnknownKey(key)),
            Some(kv) => check_keys(kv, v, &key)?,
        }
    }
    Ok(())
}

fn deserialize(v: toml::Value) -> Result<ScenarioConfig, ConfigError> {
    v.try_into().map_err(|e: toml::de::Error| {
        let msg = e.to_string();
        match msg.split('`').nth(1) {
            Some(key) if msg.contains("unknown field") => ConfigError::UnknownKey(key.to_string()),
            _ => ConfigError::Parse(msg),
        }
    })
}

/// Command-line surface. Every flag is optional so that unset flags fall
/// through to the config file and then to the preset defaults.
#[derive(Clone, Debug, Default, clap::Parser)]
#[command(
    name = "lwsim",
    version,
    about = "LTE-WLAN aggregation (LWA/LWIP) packet-level simulator"
)]
pub struct CliArgs {
    /// Scenario preset.
    #[arg(long, value_enum)]
    pub scenario: Option<Scenario>,
    /// LWA activation: 0 LTE only, 1 split, 2 Wi-Fi only.
    #[arg(long)]
    pub lwa_mode: Option<u8>,
    /// LWIP activation: 0 off, 1 on.
    #[arg(long)]
    pub lwip_mode: Option<u8>,
    /// Split modulus N: PDU counter % N == 0 goes to LTE.
    #[arg(long)]
    pub split_modulus: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Source data rate in bit/s.
    #[arg(long)]
    pub rate_bps: Option<u64>,
    /// UDP payload bytes per packet, sequence header included.
    #[arg(long)]
    pub packet_size: Option<usize>,
    /// Traffic duration in seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Offload queue poll interval in microseconds.
    #[arg(long)]
    pub poll_interval_us: Option<u64>,
    /// Reordering timer in milliseconds.
    #[arg(long)]
    pub t_reordering_ms: Option<f64>,
    #[arg(long)]
    pub lte_rate_bps: Option<u64>,
    #[arg(long)]
    pub lte_delay_ms: Option<f64>,
    #[arg(long)]
    pub xw_rate_bps: Option<u64>,
    #[arg(long)]
    pub xw_delay_ms: Option<f64>,
    #[arg(long)]
    pub wifi_rate_bps: Option<u64>,
    #[arg(long)]
    pub wifi_delay_ms: Option<f64>,
    #[arg(long)]
    pub wifi_framing_bytes: Option<usize>,
    #[arg(long)]
    pub pdcp_rrc_overhead_bytes: Option<usize>,
    /// Structured config file (flat dotted keys).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for summary, delivery log and pcaps.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Two-process role.
    #[arg(long, value_enum)]
    pub role: Option<Role>,
    /// Station address the eNB sends to (role enb).
    #[arg(long)]
    pub peer: Option<String>,
    /// Port (or host:port) the station binds (role sta).
    #[arg(long)]
    pub listen: Option<String>,
    #[arg(long, value_enum)]
    pub pacing: Option<Pacing>,
    /// Station idle timeout in seconds.
    #[arg(long)]
    pub idle_timeout: Option<f64>,
    /// Print the resolved configuration as dotted keys and exit.
    #[arg(long)]
    pub print_config: bool,
}

fn secs(v: f64) -> SimTime {
    SimTime::from_nanos((v * 1e9).round() as u64)
}

fn millis(v: f64) -> SimTime {
    SimTime::from_nanos((v * 1e6).round() as u64)
}

fn parse_listen(s: &str) -> Result<SocketAddr, ConfigError> {
    if let Ok(port) = u16::from_str(s) {
        return Ok(SocketAddr::from((Ipv4Addr::LOCALHOST, port)));
    }
    s.parse()
        .map_err(|_| ConfigError::Parse(format!("bad listen address `{s}`")))
}

fn parse_peer(s: &str) -> Result<SocketAddr, ConfigError> {
    use std::net::ToSocketAddrs;
    s.to_socket_addrs()
        .ok()
        .and_then(|mut a| a.next())
        .ok_or_else(|| ConfigError::Parse(format!("bad peer address `{s}`")))
}

/// Resolves CLI flags over the config file over preset defaults, then validates.
pub fn parse_and_validate(args: &CliArgs) -> Result<ScenarioConfig, ConfigError> {
    let file_table = match &args.config {
        Some(path) => Some(read_table(path)?),
        None => None,
    };
    let scenario = args
        .scenario
        .or_else(|| {
            file_table
                .as_ref()
                .and_then(|t| t.get("scenario"))
                .and_then(|v| v.as_str())
                .and_then(|s| Scenario::deserialize(toml::Value::String(s.into())).ok())
        })
        .unwrap_or_default();

    let mut base =
        toml::Value::try_from(ScenarioConfig::preset(scenario)).expect("config serializes");
    if let Some(t) = file_table {
        let t = toml::Value::Table(t);
        check_keys(&base, &t, "")?;
        merge(&mut base, t);
    }
    let mut cfg = deserialize(base)?;
    cfg.scenario = scenario;

    if let Some(v) = args.lwa_mode {
        cfg.lwa_mode = LwaMode::try_from(v)?;
    }
    if let Some(v) = args.lwip_mode {
        cfg.lwip_mode = LwipMode::try_from(v)?;
    }
    if let Some(v) = args.split_modulus {
        cfg.split_modulus = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.rate_bps {
        cfg.traffic.rate_bps = v;
    }
    if let Some(v) = args.packet_size {
        cfg.traffic.app_packet_bytes = v;
    }
    if let Some(v) = args.duration {
        cfg.traffic.stop = cfg.traffic.start + secs(v);
    }
    if let Some(v) = args.poll_interval_us {
        cfg.poll_interval = SimTime::from_micros(v);
    }
    if let Some(v) = args.t_reordering_ms {
        cfg.t_reordering = millis(v);
    }
    if let Some(v) = args.lte_rate_bps {
        cfg.lte_link.rate_bps = v;
    }
    if let Some(v) = args.lte_delay_ms {
        cfg.lte_link.delay = millis(v);
    }
    if let Some(v) = args.xw_rate_bps {
        cfg.xw_link.rate_bps = v;
    }
    if let Some(v) = args.xw_delay_ms {
        cfg.xw_link.delay = millis(v);
    }
    if let Some(v) = args.wifi_rate_bps {
        cfg.wifi_link.rate_bps = v;
    }
    if let Some(v) = args.wifi_delay_ms {
        cfg.wifi_link.delay = millis(v);
    }
    if let Some(v) = args.wifi_framing_bytes {
        cfg.wifi_link.framing_overhead_bytes = v;
    }
    if let Some(v) = args.pdcp_rrc_overhead_bytes {
        cfg.bearer.pdcp_rrc_overhead_bytes = v;
    }
    if let Some(v) = &args.out {
        cfg.out = Some(v.clone());
    }
    if args.role.is_some() || cfg.wire.is_some() {
        let mut w = cfg.wire.take().unwrap_or(WireConfig {
            role: Role::Enb,
            peer: None,
            listen: None,
            pacing: Pacing::Fast,
            idle_timeout: SimTime::from_secs(10),
        });
        if let Some(r) = args.role {
            w.role = r;
        }
        if let Some(p) = &args.peer {
            w.peer = Some(parse_peer(p)?);
        }
        if let Some(l) = &args.listen {
            w.listen = Some(parse_listen(l)?);
        }
        if let Some(p) = args.pacing {
            w.pacing = p;
        }
        if let Some(t) = args.idle_timeout {
            w.idle_timeout = secs(t);
        }
        cfg.wire = Some(w);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn read_table(path: &Path) -> Result<toml::Table, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    text.parse()
        .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))
}
