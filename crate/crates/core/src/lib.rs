//! Nakajima–Zwanzig projectors, exact memory kernels and generalized quantum
//! master equations for finite-dimensional closed quantum systems.
//!
//! The crate is organised bottom-up:
//!
//! - [`liouville`]: dense operator/superoperator algebra, vectorization,
//!   Liouvillians, propagators and resolvents.
//! - [`projectors`]: population/component projection superoperators and
//!   conserved-charge rotation frames.
//! - [`kernels`]: memory kernels `K(τ; P)`, generalized forces `F(τ; P)`,
//!   inhomogeneities and their Laplace transforms, plus closed-form two-level
//!   references.
//! - [`solver`]: Volterra integro-differential solver and problem builders for
//!   the different master-equation forms.
//! - [`equivalence`]: numerical checks of the identities relating kernels of
//!   different projectors.
//!
//! Units are ħ = 1 throughout. Operators are vectorized row-major: the matrix
//! element `⟨m|ρ|n⟩` of a `d × d` operator sits at flat index `m·d + n`.

pub mod equivalence;
pub mod error;
pub mod grid;
pub mod kernels;
pub mod liouville;
pub mod projectors;
pub mod random;
pub mod solver;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub use error::{Error, Result};
pub use grid::TimeGrid;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// An ordered pair `(m, n)` of system state labels, addressing `|m⟩⟨n|`.
pub type Pair = (usize, usize);

/// Numerical tolerances used by validating constructors and solvers.
///
/// The defaults are the values the library is tested against; front ends may
/// override individual fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Max-norm bound on `A − A†` for Hermitian operators.
    pub hermiticity: f64,
    /// Bound on `|Tr ρ − 1|` for density matrices.
    pub trace: f64,
    /// Most negative eigenvalue tolerated in a density matrix.
    pub positivity: f64,
    /// Resolvent solves with a larger 1-norm condition estimate are rejected.
    pub max_condition: f64,
    /// Relative residual required of a resolvent solve.
    pub resolvent_residual: f64,
    /// Max-norm bound on `[H, C]` for a conserved charge.
    pub commutator: f64,
    /// Relative norm below which a Gram–Schmidt candidate counts as dependent.
    pub linear_dependence: f64,
    /// Bound on `‖Q vec(ρ₀)‖` for an initial state to count as projected.
    pub projection_leak: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermiticity: 1e-12,
            trace: 1e-12,
            positivity: 1e-10,
            max_condition: 1e12,
            resolvent_residual: 1e-10,
            commutator: 1e-10,
            linear_dependence: 1e-8,
            projection_leak: 1e-10,
        }
    }
}

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Largest absolute entry of a complex matrix.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}
