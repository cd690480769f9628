//! Linear connections and covariant derivatives induced by operator-valued
//! reproducing kernels on trivialized Hermitian vector bundles.
//!
//! The crate computes connection forms of kernels, cross-checks them against
//! a direct derivative of the kernel embedding and against a literal
//! sampled-RKHS projection, and realizes the Grassmannian universal
//! connection, homogeneous-bundle connections and Stinespring dilations of
//! completely positive maps through the same pipeline.

pub mod connections;
pub mod cpmaps;
pub mod error;
pub mod grassmann;
pub mod kernels;
pub mod numerics;
pub mod random;
pub mod rkhs;
pub mod verify;

pub use error::{Error, Result};
