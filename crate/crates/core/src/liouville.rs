//! Dense operator and superoperator algebra.
//!
//! Operators live on a `d`-dimensional Hilbert space and are stored as complex
//! `d × d` matrices. Superoperators act on vectorized operators and are stored
//! as `d² × d²` matrices; the vectorization is row-major (`⟨m|ρ|n⟩` at flat
//! index `m·d + n`), so `vec(A ρ B) = (A ⊗ Bᵀ) vec(ρ)`.

use std::ops::{Add, Mul, Sub};

use nalgebra::linalg::SymmetricEigen;

use crate::grid::TimeGrid;
use crate::{c, max_abs, CMatrix, CVector, Error, Result, Tolerances, C64, I};

fn ensure_square(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(())
}

fn ensure_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// `max |A − A†|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Hilbert–Schmidt inner product `Tr(A† B)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn hs_norm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `|k⟩⟨k|` in dimension `d`.
pub fn basis_projector(d: usize, k: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    m[(k, k)] = c(1.0);
    m
}

/// `|m⟩⟨n|` in dimension `d`.
pub fn matrix_unit(d: usize, m: usize, n: usize) -> CMatrix {
    let mut out = CMatrix::zeros(d, d);
    out[(m, n)] = c(1.0);
    out
}

/// A Hermitian operator, e.g. a Hamiltonian, an observable or a charge.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator(CMatrix);

impl HermitianOperator {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerance(m, Tolerances::default().hermiticity)
    }

    pub fn with_tolerance(m: CMatrix, tol: f64) -> Result<Self> {
        ensure_square(&m)?;
        ensure_finite(&m)?;
        let deviation = hermiticity_defect(&m);
        if deviation > tol {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self(m))
    }

    /// Wraps a matrix already known to be Hermitian (e.g. `(A + A†)/2`).
    pub(crate) fn from_hermitian_unchecked(m: CMatrix) -> Self {
        Self(m)
    }

    pub fn identity(d: usize) -> Self {
        Self(CMatrix::identity(d, d))
    }

    pub fn zeros(d: usize) -> Self {
        Self(CMatrix::zeros(d, d))
    }

    /// Real symmetric operator from row-major entries.
    pub fn from_real(d: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != d * d {
            return Err(Error::DimensionMismatch { expected: d * d, found: entries.len() });
        }
        Self::new(CMatrix::from_row_iterator(d, d, entries.iter().map(|&x| c(x))))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    /// `A ⊗ B`.
    pub fn tensor(&self, other: &HermitianOperator) -> HermitianOperator {
        Self(self.0.kronecker(&other.0))
    }

    /// Real Hilbert–Schmidt inner product `Tr(A B)`.
    pub fn hs_inner(&self, other: &HermitianOperator) -> f64 {
        hs_inner(&self.0, &other.0).re
    }

    pub fn hs_norm(&self) -> f64 {
        hs_norm(&self.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &HermitianOperator) -> Self {
        Self(&self.0 + other.0.map(|z| z * s))
    }

    pub fn commutator(&self, other: &CMatrix) -> CMatrix {
        &self.0 * other - other * &self.0
    }

    /// `Tr(A ρ)`; real for a Hermitian `ρ`.
    pub fn expectation(&self, rho: &CMatrix) -> f64 {
        (&self.0 * rho).trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.0.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// A density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerances(m, &Tolerances::default())
    }

    pub fn with_tolerances(m: CMatrix, tol: &Tolerances) -> Result<Self> {
        ensure_square(&m)?;
        ensure_finite(&m)?;
        let deviation = hermiticity_defect(&m);
        if deviation > tol.hermiticity {
            return Err(Error::NotHermitian { deviation });
        }
        let trace = m.trace();
        if (trace - c(1.0)).norm() > tol.trace {
            return Err(Error::BadTrace { trace });
        }
        let lowest = SymmetricEigen::new(m.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if lowest < -tol.positivity {
            return Err(Error::NotPositive(lowest));
        }
        Ok(Self(m))
    }

    pub(crate) fn from_matrix_unchecked(m: CMatrix) -> Self {
        Self(m)
    }

    /// `|k⟩⟨k|`.
    pub fn basis_state(d: usize, k: usize) -> Result<Self> {
        if k >= d {
            return Err(Error::LabelOutOfRange { label: k, dim: d });
        }
        Ok(Self(basis_projector(d, k)))
    }

    /// `|ψ⟩⟨ψ|` for a normalized copy of `psi`.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NonFinite);
        }
        let v = psi / c(norm);
        Ok(Self(&v * v.adjoint()))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self(CMatrix::identity(d, d) / c(d as f64))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        Self(self.0.kronecker(&other.0))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        hs_inner(&self.0, &self.0).re
    }

    pub fn vectorize(&self) -> StateVector {
        vectorize(&self.0)
    }
}

/// A vectorized operator: entry `m·d + n` holds `⟨m|A|n⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(CVector);

impl StateVector {
    pub fn new(v: CVector) -> Result<Self> {
        operator_dim(v.len())?;
        Ok(Self(v))
    }

    /// Dimension `d` of the operator this vector represents.
    pub fn operator_dim(&self) -> usize {
        operator_dim(self.0.len()).expect("validated on construction")
    }

    pub fn as_vector(&self) -> &CVector {
        &self.0
    }

    pub fn into_vector(self) -> CVector {
        self.0
    }
}

fn operator_dim(len: usize) -> Result<usize> {
    let d = (len as f64).sqrt().round() as usize;
    if d == 0 || d * d != len {
        return Err(Error::NotVectorized(len));
    }
    Ok(d)
}

pub fn vectorize(op: &CMatrix) -> StateVector {
    let d = op.nrows();
    StateVector(CVector::from_iterator(d * d, (0..d).flat_map(|m| (0..d).map(move |n| op[(m, n)]))))
}

pub fn devectorize(v: &StateVector) -> CMatrix {
    let d = v.operator_dim();
    CMatrix::from_row_iterator(d, d, v.0.iter().copied())
}

/// A linear map on vectorized operators.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator(CMatrix);

impl Superoperator {
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        ensure_square(&m)?;
        operator_dim(m.nrows())?;
        Ok(Self(m))
    }

    pub fn identity(hilbert_dim: usize) -> Self {
        let n = hilbert_dim * hilbert_dim;
        Self(CMatrix::identity(n, n))
    }

    pub fn zeros(hilbert_dim: usize) -> Self {
        let n = hilbert_dim * hilbert_dim;
        Self(CMatrix::zeros(n, n))
    }

    /// `ρ ↦ A ρ B`.
    pub fn sandwich(a: &CMatrix, b: &CMatrix) -> Self {
        Self(a.kronecker(&b.transpose()))
    }

    pub fn hilbert_dim(&self) -> usize {
        operator_dim(self.0.nrows()).expect("validated on construction")
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        StateVector(&self.0 * &v.0)
    }

    /// Applies the superoperator to an operator.
    pub fn apply_operator(&self, op: &CMatrix) -> CMatrix {
        devectorize(&self.apply(&vectorize(op)))
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }
}

impl<'a> Mul<&'a Superoperator> for &'a Superoperator {
    type Output = Superoperator;
    fn mul(self, rhs: &'a Superoperator) -> Superoperator {
        Superoperator(&self.0 * &rhs.0)
    }
}

impl<'a> Add<&'a Superoperator> for &'a Superoperator {
    type Output = Superoperator;
    fn add(self, rhs: &'a Superoperator) -> Superoperator {
        Superoperator(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a Superoperator> for &'a Superoperator {
    type Output = Superoperator;
    fn sub(self, rhs: &'a Superoperator) -> Superoperator {
        Superoperator(&self.0 - &rhs.0)
    }
}

/// `𝓛 ρ = [H, ρ]`, i.e. `H ⊗ 1 − 1 ⊗ Hᵀ` in the row-major vectorization.
pub fn build_liouvillian(h: &HermitianOperator) -> Superoperator {
    let d = h.dim();
    let id = CMatrix::identity(d, d);
    Superoperator(h.0.kronecker(&id) - id.kronecker(&h.0.transpose()))
}

/// `e^{-iHt}`.
pub fn unitary(h: &HermitianOperator, t: f64) -> CMatrix {
    (&h.0 * (-I * t)).exp()
}

/// `ρ(t) = e^{-iHt} ρ₀ e^{iHt}`.
pub fn exact_evolve(h: &HermitianOperator, rho0: &DensityMatrix, t: f64) -> DensityMatrix {
    let u = unitary(h, t);
    DensityMatrix(&u * &rho0.0 * u.adjoint())
}

/// `Tr(A ρ(t_j))` along the exact unitary evolution, sampled on `grid`.
pub fn exact_expectation_series(
    h: &HermitianOperator,
    rho0: &DensityMatrix,
    observable: &HermitianOperator,
    grid: &TimeGrid,
) -> Vec<f64> {
    let u = unitary(h, grid.dt());
    let ud = u.adjoint();
    let mut rho = rho0.0.clone();
    let mut out = Vec::with_capacity(grid.len());
    out.push(observable.expectation(&rho));
    for _ in 0..grid.n_steps() {
        rho = &u * rho * &ud;
        out.push(observable.expectation(&rho));
    }
    out
}

/// `e^{tA} v`.
pub fn propagator_apply(a: &Superoperator, t: f64, v: &StateVector) -> Result<StateVector> {
    if !t.is_finite() {
        return Err(Error::NonFinite);
    }
    ensure_finite(&a.0)?;
    if v.0.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::NonFinite);
    }
    if a.0.nrows() != v.0.len() {
        return Err(Error::DimensionMismatch { expected: a.0.nrows(), found: v.0.len() });
    }
    Ok(StateVector((&a.0 * c(t)).exp() * &v.0))
}

/// Fixed-step propagator `e^{dt·A}` used to sweep a uniform time grid.
#[derive(Debug, Clone)]
pub struct GridPropagator {
    step: CMatrix,
}

impl GridPropagator {
    pub fn new(generator: &CMatrix, dt: f64) -> Result<Self> {
        ensure_square(generator)?;
        ensure_finite(generator)?;
        if !dt.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(Self { step: (generator * c(dt)).exp() })
    }

    pub fn step_matrix(&self) -> &CMatrix {
        &self.step
    }

    /// Visits `e^{t_j A} X` for every grid point, starting with `X` itself.
    pub fn sweep<F>(&self, start: CMatrix, n_steps: usize, mut visit: F)
    where
        F: FnMut(usize, &CMatrix),
    {
        let mut x = start;
        visit(0, &x);
        for j in 1..=n_steps {
            x = &self.step * x;
            visit(j, &x);
        }
    }
}

/// `(z·1 + A)⁻¹` at a fixed `z`, factored once for repeated solves.
#[derive(Debug, Clone)]
pub struct Resolvent {
    z: C64,
    shifted: CMatrix,
    inverse: CMatrix,
    condition: f64,
    residual_tol: f64,
}

fn one_norm(m: &CMatrix) -> f64 {
    m.column_iter().map(|col| col.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

impl Resolvent {
    pub fn new(a: &Superoperator, z: C64) -> Result<Self> {
        Self::from_matrix(&a.0, z, &Tolerances::default())
    }

    pub fn from_matrix(a: &CMatrix, z: C64, tol: &Tolerances) -> Result<Self> {
        ensure_square(a)?;
        ensure_finite(a)?;
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let n = a.nrows();
        let shifted = a + CMatrix::identity(n, n) * z;
        let inverse = shifted
            .clone()
            .lu()
            .try_inverse()
            .ok_or(Error::SingularResolvent { z, condition: f64::INFINITY })?;
        let condition = one_norm(&shifted) * one_norm(&inverse);
        if !condition.is_finite() || condition > tol.max_condition {
            return Err(Error::SingularResolvent { z, condition });
        }
        Ok(Self { z, shifted, inverse, condition, residual_tol: tol.resolvent_residual })
    }

    pub fn z(&self) -> C64 {
        self.z
    }

    /// 1-norm condition estimate of `z·1 + A`.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn solve(&self, v: &CVector) -> Result<CVector> {
        if v.len() != self.shifted.nrows() {
            return Err(Error::DimensionMismatch { expected: self.shifted.nrows(), found: v.len() });
        }
        let scale = v.norm();
        if scale == 0.0 {
            return Ok(CVector::zeros(v.len()));
        }
        let mut x = &self.inverse * v;
        let mut residual = (&self.shifted * &x - v).norm() / scale;
        // One round of iterative refinement.
        if residual > self.residual_tol {
            let r = v - &self.shifted * &x;
            x += &self.inverse * r;
            residual = (&self.shifted * &x - v).norm() / scale;
        }
        if residual > self.residual_tol {
            return Err(Error::ResolventResidual { z: self.z, residual });
        }
        Ok(x)
    }

    /// Applies the resolvent to every column of `b`.
    pub fn solve_columns(&self, b: &CMatrix) -> Result<CMatrix> {
        let mut out = CMatrix::zeros(b.nrows(), b.ncols());
        for (j, col) in b.column_iter().enumerate() {
            out.set_column(j, &self.solve(&col.into_owned())?);
        }
        Ok(out)
    }
}

/// `(z·1 + A)⁻¹ v`.
pub fn resolvent_apply(a: &Superoperator, z: C64, v: &StateVector) -> Result<StateVector> {
    Ok(StateVector(Resolvent::new(a, z)?.solve(&v.0)?))
}

/// Two-level system `H = ε τᶻ + Δ τˣ`.
///
/// State `|1⟩` carries energy `+ε` and `|0⟩` carries `−ε`, so in the
/// `(|0⟩, |1⟩)` basis `H = [[−ε, Δ], [Δ, ε]]`. With this labelling the
/// Liouvillian reproduces the reference `−i𝓛` matrix in the
/// `(σ₀₀, σ₀₁, σ₁₀, σ₁₁)` ordering, and `|0⟩⟨0|` has energy `E = −ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TlsModel {
    pub epsilon: f64,
    pub delta: f64,
    /// Conserved energy `Tr(H σ(0))`.
    pub energy: f64,
}

impl TlsModel {
    /// Model prepared in `|0⟩⟨0|`, so `E = −ε`.
    pub fn new(epsilon: f64, delta: f64) -> Self {
        Self { epsilon, delta, energy: -epsilon }
    }

    /// `ε = 5/13`, `Δ = 12/13`, for which `Ω = 1`.
    pub fn reference() -> Self {
        Self::new(5.0 / 13.0, 12.0 / 13.0)
    }

    pub fn with_energy(mut self, energy: f64) -> Self {
        self.energy = energy;
        self
    }

    pub fn with_initial_state(mut self, rho0: &DensityMatrix) -> Self {
        self.energy = self.hamiltonian().expectation(rho0.matrix());
        self
    }

    /// `Ω = √(ε² + Δ²)`, the frequency of the full population dynamics.
    pub fn rabi_frequency(&self) -> f64 {
        self.epsilon.hypot(self.delta)
    }

    /// `ω = √(ε² + Δ²/2)`, the frequency of the `|0⟩⟨0|`-projected dynamics.
    pub fn projected_frequency(&self) -> f64 {
        (self.epsilon * self.epsilon + 0.5 * self.delta * self.delta).sqrt()
    }

    pub fn hamiltonian(&self) -> HermitianOperator {
        HermitianOperator(CMatrix::from_row_slice(
            2,
            2,
            &[c(-self.epsilon), c(self.delta), c(self.delta), c(self.epsilon)],
        ))
    }

    /// `σ₀(t) = 1 − Δ² sin²(Ωt)/Ω²` for `σ(0) = |0⟩⟨0|`.
    pub fn population(&self, t: f64) -> f64 {
        let omega = self.rabi_frequency();
        if omega == 0.0 {
            return 1.0;
        }
        let s = (omega * t).sin();
        1.0 - self.delta * self.delta * s * s / (omega * omega)
    }
}
