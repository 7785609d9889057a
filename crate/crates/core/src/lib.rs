//! Transverse biphoton simulation of a two-arm ghost-imaging bench.
//!
//! A double-Gaussian SPDC amplitude is sampled on a 1-D transverse grid per
//! photon and carried through each arm with paraxial angular-spectrum
//! propagation, thin lenses and slits. Coincidence and singles scans, the
//! advanced-wave (unfolded) picture, pattern metrics and a two-time
//! wavepacket model are built on top.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod elements;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod source;
pub mod temporal;

pub use error::{Error, Result};
