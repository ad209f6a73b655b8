//! Closed-loop simulation of an O-RAN traffic-steering control loop.
//!
//! The crate models a small radio network whose cells and UEs report KPIs to a
//! miniature near-RT RIC (KPI monitor, anomaly detection, QoE prediction and
//! traffic steering). On top of that loop it implements
//!
//! * a decision-based evasion attack in which a rogue cell perturbs its own
//!   cell-level KPI reports so that the QoE predictor over-rates it
//!   ([`attack`]), and
//! * a two-stage LSTM autoencoder detector that flags untrusted cell telemetry
//!   using network-wide latent context ([`marrs`]).
//!
//! Everything here is `no_std` + `alloc`. File formats, sockets, CSV export
//! and the command line live in the companion `ransteer` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

mod error;
pub use error::{Error, Result};

pub mod math;
pub mod rng;

pub mod anomaly;
pub mod attack;
pub mod container;
pub mod harness;
pub mod marrs;
pub mod netsim;
pub mod nn;
pub mod ric;
