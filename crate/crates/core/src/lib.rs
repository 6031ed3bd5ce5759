//! Agent-based market simulator in which traders sit at the leaves of a
//! complete k-ary tree of communities.
//!
//! Each trader is a fundamentalist, an optimist or a pessimist. Communities
//! aggregate their members' roles bottom-up and blend in their parent's view
//! top-down; a trader's opinion switching is driven by its own community.
//! The price is formed from excess demand one tick at a time.
//!
//! Alongside the simulator the crate ships the analysis used to judge its
//! output: tail indices, kurtosis at several horizons, volatility
//! clustering, ACF decay, and SADF/GSADF bubble tests with date-stamping.
//! The [`harness`] module runs seeded batches from a TOML config and
//! exports CSV/JSON.

pub mod bubble;
pub mod error;
pub mod harness;
pub mod hierarchy;
pub mod market;
pub mod scenario;
pub mod seed;
pub mod stylized;

pub use error::{Error, Result};
pub use hierarchy::{counts, CommunityState, HierarchyParams, HierarchyTree};
pub use market::{simulate, MarketSeries, ModelParams, Preset, Simulation, TraderRole};
pub use scenario::{EchoConfig, EchoMode, PumpDumpConfig, Scenario};
pub use seed::StreamSeed;
