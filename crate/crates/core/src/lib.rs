//! Diffusions in stable Lévy environments.
//!
//! Environments are sampled on a uniform grid ([`stable`]), analysed with
//! path algebra ([`path`]) and valley detection ([`valley`]), compared with
//! processes conditioned to stay positive ([`conditioned`]), and explored by
//! two diffusion engines ([`diffusion`]). [`verify`] holds the Monte Carlo
//! experiments and [`cli`] the command-line front end.

pub mod cli;
pub mod conditioned;
pub mod config;
pub mod diffusion;
pub mod error;
pub mod path;
pub mod rng;
pub mod selftest;
pub mod stable;
pub mod stats;
pub mod valley;
pub mod verify;

pub use error::{Error, Result};
