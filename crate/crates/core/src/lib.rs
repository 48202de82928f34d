//! Solver for packing `n` equal unit circles into the smallest circular
//! container.
//!
//! The layout is relaxed into an elastic model whose energy is zero exactly on
//! feasible packings. [`gbo`] minimizes that energy with one BFGS model per
//! geometric batch of circles, [`container`] shrinks the container with a
//! penalty on `R^2`, [`sed`] searches for a zero-energy layout at a fixed
//! radius by perturbation, and [`framework`] ties them into a time-bounded
//! solve loop.

pub mod bench;
pub mod cli;
pub mod container;
pub mod energy;
pub mod error;
pub mod framework;
pub mod gbo;
pub mod instance;
pub mod neighbor;
pub mod partition;
pub mod render;
pub mod rng;
pub mod sed;

pub use error::{Error, Result};
pub use instance::{check_feasibility, contact_counts, random_layout, Instance, Layout, Solution};
