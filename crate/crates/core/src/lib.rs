//! Discrete pseudospherical and spherical circular nets of revolution.
//!
//! The crate is organised bottom-up:
//!
//! - [`quat`]: quaternions as 2×2 complex matrices, the R³ embedding and first-order jets.
//! - [`lattice`]: lattice domains, connections, flatness, parallel frames, gauges.
//! - [`nets`]: contact element nets, the Sym formula, curvatures, cross ratios, alignment.
//! - [`revolution`]: meridian profiles and rc-net assembly, Jacobi elliptic functions.
//! - [`connect`]: rotationally invariant flat connections and their gauge to the HS Lax pair.
//! - [`backlund`]: single and double Bäcklund transforms, periodicity, linearization.
//! - [`acceptance`]: the acceptance criteria as runnable checks.

pub mod acceptance;
pub mod backlund;
pub mod connect;
pub mod error;
pub mod lattice;
pub mod nets;
pub mod quat;
pub mod revolution;

pub use error::{Error, Result};
pub use lattice::{ConnectionFamily, Domain, FrameFamily, Grid};
pub use nets::ContactElementNet;
pub use quat::{CJet, QJet, Quat, Vec3};
pub use revolution::Profile;
