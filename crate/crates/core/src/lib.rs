//! Matrix hyperbolic cosine balancing and its applications.
//!
//! The [`hypercosine`] selector picks one index per step from a family of
//! symmetric matrices so that the running sum stays small in operator norm.
//! Drivers built on it construct expanding Cayley graphs ([`cayley`]),
//! sparsify vectors in isotropic position ([`isotropic`]), spectrally sparsify
//! sums of outer products ([`spectral`]) and sparsify matrices entry by entry
//! ([`elementwise`]). Every driver certifies its output with a direct
//! eigensolve from [`linalg`].

pub mod cayley;
pub mod elementwise;
pub mod error;
pub mod hypercosine;
pub mod io;
pub mod isotropic;
pub mod linalg;
pub mod spectral;

pub use error::{Error, Result};
pub use linalg::{Matrix, SymMatrix};
