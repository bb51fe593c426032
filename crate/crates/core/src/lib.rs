//! Implicit neural representations of gridded Earth signals, with spherical
//! location encodings and a subgroup-stratified evaluation harness.
//!
//! The crate is organised bottom-up:
//!
//! - [`sphere`]: points, rotations, stereographic dilation, lattices, areas.
//! - [`encodings`]: spherical harmonic, spherical wavelet and baseline encoders.
//! - [`geodata`]: equirectangular grids, landmass and coastline metadata,
//!   sampling, synthetic generators, file formats.
//! - [`inr`]: a sinusoidal MLP with analytic gradients, Adam, and training.
//! - [`fairness`]: per-subgroup losses, correlations, country extremes and
//!   binned error maps.

pub mod config;
pub mod encodings;
pub mod error;
pub mod fairness;
pub mod geodata;
pub mod inr;
pub mod sphere;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/sphere.md")]
    mod sphere {}
    #[doc = include_str!("../../../book/src/encodings.md")]
    mod encodings {}
    #[doc = include_str!("../../../book/src/geodata.md")]
    mod geodata {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/fairness.md")]
    mod fairness {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
