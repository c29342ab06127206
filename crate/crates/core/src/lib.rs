//! Packet-level discrete-event simulator of LTE-WLAN aggregation (LWA) and
//! LTE/WLAN radio level integration with IPsec tunnel (LWIP).

pub mod config;
pub mod engine;
pub mod headers;
pub mod link;
pub mod lte;
pub mod lwip;
pub mod packet;
pub mod reorder;
pub mod sim;
pub mod telemetry;
pub mod traffic;
pub mod wire;
pub mod wlan;
