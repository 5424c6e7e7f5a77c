//! Branched optimal transport on finite atomic measures.
//!
//! Exact small-scale Gilbert networks by topology enumeration and convex
//! branch-point placement, flat norms of atomic 0-currents, polyhedral
//! 1-current utilities, the dyadic transport construction, and the local
//! machinery behind generic uniqueness of minimizers.

pub mod chains;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod local_branch;
pub mod measures;
pub mod optimizer;
pub mod solver;
pub mod svg;
pub mod topology;

mod mcf;

pub use chains::{Edge, PolyChain};
pub use error::{Error, Result};
pub use geometry::Point;
pub use measures::{Atom, AtomicMeasure, Boundary};
