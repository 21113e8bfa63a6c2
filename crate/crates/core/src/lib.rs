//! Numerical laboratory for multilinear rearrangement functionals
//! `Φ_L(E) = ∫ Π_j 1_{E_j}(L_j x) dx`.

pub mod admissibility;
pub mod config;
pub mod error;
pub mod family;
pub mod functional;
pub mod harmonics;
pub mod kernels;
pub mod linalg;
pub mod lp;
pub mod orbit;
pub mod polygon;
pub mod quadrature;
pub mod rng;
pub mod settuple;
pub mod slice;
pub mod spectral;
pub mod stability;
pub mod symflow;

pub use error::{LabError, Result};
pub use family::{LinearFamily, MeasureSpec, NondegeneracyReport};
