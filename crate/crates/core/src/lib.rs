//! Trusted data usage: usage policies over IoT sensor data, compiled to
//! modal defeasible logic and enforced by proof.
//!
//! * [`dl`]: ground modal defeasible logic (facts, strict and defeasible
//!   rules, defeaters, superiority) with proof tags +Δ, −Δ, +∂, −∂.
//! * [`tduo`]: data items, scope conditions and usage policies, with XML and
//!   JSON encodings.
//! * [`compiler`]: policies and rule text to theories.
//! * [`enforcement`]: consumer requests decided by proof.
//! * [`data`]: readings, datasets and the granularity transforms.
//! * [`ledger`]: the append-only record of every decision.

pub mod compiler;
pub mod data;
pub mod dl;
pub mod enforcement;
pub mod ledger;
pub mod scenario;
pub mod tduo;

/// A reading with an `f64` value.
pub type Reading = data::Reading<f64>;
/// A dataset of `f64` readings.
pub type Dataset = data::Dataset<f64>;
/// Group statistics over `f64` readings.
pub type GroupStats = data::GroupStats<f64>;
