//! Exact and sampled estimators for colored r-uniform hypergraph parameters.
//!
//! The crate is organized around four layers:
//! * [`graphs`]: finite colored hypergraphs, subgraph sampling, exact
//!   induced and product densities;
//! * [`kernels`]: step kernels on `[0,1]^r` (class weights plus symmetric
//!   cell values), graph lifts, exact sampling distributions;
//! * [`norms`]: cut-type norms with exact subset enumeration, doubled-edge
//!   density bounds, and weak regularity decompositions;
//! * [`sampling`], [`energy`], [`ndtest`]: concentration experiments,
//!   ground-state energies, density tensors, and the non-deterministic
//!   parameter tester with its coloring-transfer pipeline.
//!
//! All exact paths run on arbitrary-precision rationals; floats appear only
//! in Monte Carlo rates, heuristic search, and explicitly labeled
//! large-instance certificates.

pub mod comb;
pub mod energy;
pub mod error;
pub mod graphs;
pub mod kernels;
pub mod limits;
pub mod ndtest;
pub mod norms;
pub mod rat;
pub mod rngutil;
pub mod sampling;

pub use error::{Error, Result};
pub use limits::Limits;
pub use rat::Rat;
