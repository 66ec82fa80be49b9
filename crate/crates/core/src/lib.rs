//! Numerical toolkit for smeared-space quantum mechanics.

pub mod dynamics;
pub mod error;
pub mod grid;
pub mod massradius;
pub mod measurement;
pub mod multiparticle;
pub mod povm;
pub mod scales;
pub mod smearing;
pub mod uncertainty;

pub use error::{Checked, Error, Result, Warning};
