//! Exact symbolic calculus for loop-weight modules over the quantum
//! affinization of sl-infinity.
//!
//! The crate provides tableau-indexed bases for the level-0 extremal modules,
//! exact actions of the Drinfeld current generators in delta normal form,
//! fusion along the Drinfeld coproduct with precise pole detection,
//! q-characters and their folding to the toroidal (cyclic) quotient, and a
//! battery of finite, deterministic verification sweeps with geometric-series
//! certificates that extend bounded mode checks to all modes.

pub mod crystal;
pub mod descriptor;
pub mod monomial;
pub mod repr;
pub mod scalar;
pub mod verify;
