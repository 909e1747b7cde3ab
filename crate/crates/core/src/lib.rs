//! Recovery of arbitrary vectors in ℝ^m to any precision from
//! `⌈log₂(m+1)⌉ + 1` adaptively chosen, 1-Lipschitz measurements.
//!
//! The measurements are max-norm distances to color classes of a facet
//! partition of ℝ^m ([`partition`]). A bisection over the `m + 1` colors
//! ([`recovery`]) finds a color class whose closure contains the unknown
//! vector, and one last separating functional names the cell inside that
//! class. [`widths`] lifts the construction to non-adaptive sketches and
//! diagonal operators; [`verify`] holds brute-force oracles for all of it.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod enumeration;
pub mod error;
pub mod measurement;
pub mod partition;
pub mod recovery;
pub mod render;
pub mod scalar;
pub mod verify;
pub mod widths;

pub use error::{Error, Result};
pub use scalar::{Exact, Mode, Scalar};
