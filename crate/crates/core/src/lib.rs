//! Core of the policy interpretability toolkit: the Microlanguage, the simulator,
//! behavior metrics, obfuscation and the bundled fixtures.

pub mod microlang;
pub mod sim;
pub mod metrics;
pub mod obfuscate;
pub mod fixtures;
