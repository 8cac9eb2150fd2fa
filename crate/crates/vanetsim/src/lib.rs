//! vanetsim couples a microscopic signalized-intersection traffic
//! simulation with a V2V ad hoc network layer: plain-file network
//! inputs, Krauss-style car following, SUMO-style tlLogic schedules, an
//! RSU-style adaptive green-split controller, unit-disk AODV messaging
//! with delivery metrics, and a text-over-TCP control protocol.

// `!(x > 0.0)` guards are deliberate: unlike `x <= 0.0` they also
// reject NaN values coming from parsed input.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptive;
pub mod control;
pub mod engine;
pub mod error;
pub mod fixtures;
pub mod mobility;
pub mod netmodel;
pub mod plot;
pub mod runner;
pub mod scenario;
pub mod signals;
pub mod vanet;
mod xml;

pub use error::{Error, Result};
