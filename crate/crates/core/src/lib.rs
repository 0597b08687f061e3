//! Delay statistics for an energy-harvesting sensor that senses, transmits and
//! retransmits within a bounded window.
//!
//! The crate computes the update age (blocks from sensing to delivery) and the
//! update cycle (blocks between consecutive deliveries) for deterministic,
//! exponential and general i.i.d. per-block energy arrivals, and ships a
//! block-level simulator of the same protocol to check every analytic result.
//!
//! ```
//! use harvest_delay::{analyze, AnalyticOptions, ArrivalModel, ProtocolParams, validate};
//!
//! let params = ProtocolParams::new(50, 250.0, 200.0);
//! let cfg = validate(params, ArrivalModel::Deterministic { rho: 50.0 }).unwrap();
//! let out = analyze(&cfg, 0.5, &AnalyticOptions::default()).unwrap();
//! assert!((out.age.prob(1) - 0.5 / (1.0 - 0.5f64.powi(10))).abs() < 1e-12);
//! assert_eq!(out.cycle.prob(11), 0.5);
//! ```

pub mod analytic;
pub mod arrivals;
pub mod channel;
pub mod config;
pub mod error;
pub mod sim;

pub use analytic::{analyze, summarize, AgeCycleSummary, Analysis, AnalyticOptions, GeneralEngine, Pmf};
pub use arrivals::{ArrivalModel, GridDensity, TabulatedDensity};
pub use channel::ChannelParams;
pub use config::{validate, ProtocolParams, TxParams, ValidatedConfig};
pub use error::{Error, Result};
pub use sim::{simulate, SimOptions, SimResult};

// chapters of the guide run as doctests
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/protocol.md")]
    mod protocol {}
    #[doc = include_str!("../../../book/src/arrivals.md")]
    mod arrivals {}
    #[doc = include_str!("../../../book/src/age.md")]
    mod age {}
    #[doc = include_str!("../../../book/src/cycle.md")]
    mod cycle {}
    #[doc = include_str!("../../../book/src/limits.md")]
    mod limits {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/limitations.md")]
    mod limitations {}
}
