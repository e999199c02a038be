//! Spectra of a square mass-spring lattice with a line defect and point
//! defects: propagating bands, waves guided along the defect line, and
//! frequencies trapped by the point perturbation.

pub mod banded;
pub mod config;
pub mod error;
pub mod finite;
pub mod guided;
pub mod interval;
pub mod lattice;
pub mod localized;
pub mod modes;
pub mod par;
pub mod propagative;
pub mod quad;
pub mod roots;
pub mod tolerances;

pub use error::{Error, Result};
