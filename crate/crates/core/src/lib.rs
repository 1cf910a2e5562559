//! Exact and numeric kernels for Siegel Poincaré series on congruence
//! subgroups of Sp_n(ℤ).
//!
//! Layers, bottom up: [`exact_linalg`] (big-integer and rational symmetric
//! matrices, Minkowski reduction), [`symplectic`] (elements, the action on
//! `𝐇_n`, coset enumeration), [`subgroup`] (congruence families, cusp widths,
//! the translation lattice and its dual), [`lattice_forms`] (half-integral
//! forms and theta tails), [`poincare`] (Poincaré series, Fourier
//! coefficients, Bergman kernels) and [`degree_one`] (Kloosterman sums and
//! Petersson Gram matrices).

pub mod degree_one;
pub mod error;
pub mod exact_linalg;
pub mod lattice_forms;
pub mod poincare;
pub mod special;
pub mod subgroup;
pub mod symplectic;
pub(crate) mod small;

pub use error::{Error, Result};
pub use exact_linalg::{IntMatrix, RationalSymMatrix, RealSymMatrix};
pub use lattice_forms::HalfIntegralForm;
pub use poincare::{GridSpec, PrecisionMode, SpectralConstants, TruncationParams};
pub use subgroup::{CuspData, DualLatticeDescriptor, Family, GroupDescriptor};
pub use symplectic::{CosetClass, SiegelPoint, SymplecticElement};
