//! Simulation and reconstruction kernels for monostatic OFDM radio imaging.
//!
//! The crate is organized along the signal chain:
//!
//! - [`geometry`]: rigid poses, antenna layout, spherical imaging grid, steering weights
//! - [`scene`]: synthetic scenes, trajectories, propagation paths, ground-truth rendering
//! - [`ofdm`]: frequency-domain channel synthesis, channel estimation, CIR
//! - [`imaging`]: delay-and-sum beamforming into radio frames, Cartesian projection
//! - [`fusion`]: per-frame encoding and confidence-weighted multi-frame warp-and-fuse
//! - [`reconstruct`]: occupancy and depth heads
//! - [`metrics`]: depth, voxel and point-cloud evaluation measures
//! - [`io`]: raw float32 tensors with JSON sidecars, PGM, PLY and CSV exports

pub mod error;
pub mod fusion;
pub mod geometry;
pub mod grid;
pub mod imaging;
pub mod io;
pub mod metrics;
pub mod ofdm;
pub mod reconstruct;
pub mod scene;

pub use error::{Error, Result};
pub use geometry::{AntennaArray, DirectionFormula, Fov, Pose, SphericalGrid, SPEED_OF_LIGHT};
pub use grid::GridSpec;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
