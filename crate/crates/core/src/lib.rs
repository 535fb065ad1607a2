//! Physical-layer secret key generation for LoRaWAN class A links.
//!
//! A gateway (Alice) and an end device (Bob) both observe the RSSI of the radio
//! channel between them once per uplink/downlink exchange. Because the channel is
//! reciprocal, the two series are strongly correlated, while an eavesdropper more than
//! half a wavelength away sees an independent channel. This crate turns paired RSSI
//! traces into shared 128-bit session keys:
//!
//! 1. [`trace`]: ingest and align paired probe traces, split them into blocks.
//! 2. [`chansim`]: or synthesize them from a seeded Gauss-Markov channel model.
//! 3. [`pipeline`]: normalize each block and quantize it to a preliminary key.
//! 4. [`reconcile`]: correct disagreeing bits by BCH syndrome exchange.
//! 5. [`amplify`]: test key randomness and hash reconciled blocks into final keys.
//! 6. [`metrics`]: bit disagreement rate, key generation rate and Eve's advantage.
//!
//! [`keygen`] strings the stages together; [`cli`] exposes them as the `physec` binary.

pub mod amplify;
pub mod bits;
pub mod chansim;
pub mod cli;
pub mod error;
pub mod keygen;
pub mod metrics;
pub mod pipeline;
pub mod reconcile;
pub mod trace;

pub use bits::Bits;
pub use error::{Error, Result};
