//! Minimum time functions of driftless control systems `y' = Σ f_i(y) u_i`
//! generated by polynomial vector fields: exact Lie bracket algebra, grid
//! eikonal solvers, characteristic points of reachable sets, normal and
//! singular extremals, and Lipschitz regularity diagnostics.

pub mod analysis;
pub mod eikonal;
pub mod error;
pub mod extremals;
pub mod fields;
pub mod geometry;
pub mod grid;
pub mod hamiltonian;
pub mod io;
pub mod linalg;
pub mod poly;
pub mod systems;

pub use error::{Error, Result};
pub use fields::{ControlSystem, PolyVectorField};
pub use grid::{GridSet, TargetSet, UniformGrid};
pub use hamiltonian::CotangentPoint;
