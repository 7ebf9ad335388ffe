//! Memory kernels, generalized forces and inhomogeneities of projected
//! dynamics, sampled on a time grid or evaluated exactly in Laplace space.
//!
//! For a projector built from component states `v_b = vec(|m'⟩⟨n'| ⊗ ρ_B)`
//! and functionals `w_a = vec(|m⟩⟨n| ⊗ 1_B)`:
//!
//! ```text
//! K_ab(τ) =  w_a·𝓛 e^{−iτ𝓠𝓛} 𝓠𝓛 v_b
//! F_ab(τ) = i w_a·𝓛 e^{−iτ𝓠𝓛} v_b            (dF/dτ = K)
//! θ_a(t)  = −i w_a·𝓛 e^{−it𝓠𝓛} 𝓠 vec(ρ₀)
//! F̃_ab(z) = i w_a·𝓛 (z + i𝓠𝓛)⁻¹ v_b
//! ```
//!
//! Kernels come from the superoperator product directly, never from
//! differentiating `F`.

use std::fmt;
use std::str::FromStr;

use crate::grid::TimeGrid;
use crate::liouville::{
    build_liouvillian, matrix_unit, vectorize, DensityMatrix, GridPropagator, HermitianOperator,
    Resolvent, TlsModel,
};
use crate::projectors::{build_projector_sum, ProjectorSpec};
use crate::{c, CMatrix, CVector, Error, Pair, Result, Tolerances, C64, I};

/// A Hamiltonian on `system ⊗ bath` together with the reference bath state
/// used by the projectors.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumSystem {
    hamiltonian: HermitianOperator,
    system_dim: usize,
    bath_ref: DensityMatrix,
}

impl QuantumSystem {
    pub fn new(hamiltonian: HermitianOperator, system_dim: usize, bath_ref: DensityMatrix) -> Result<Self> {
        let expected = system_dim * bath_ref.dim();
        if system_dim == 0 || hamiltonian.dim() != expected {
            return Err(Error::DimensionMismatch { expected, found: hamiltonian.dim() });
        }
        Ok(Self { hamiltonian, system_dim, bath_ref })
    }

    pub fn hamiltonian(&self) -> &HermitianOperator {
        &self.hamiltonian
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn bath_dim(&self) -> usize {
        self.bath_ref.dim()
    }

    pub fn total_dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn bath_ref(&self) -> &DensityMatrix {
        &self.bath_ref
    }

    /// `|m⟩⟨m| ⊗ 1_B`.
    pub fn observable(&self, m: usize) -> Result<HermitianOperator> {
        if m >= self.system_dim {
            return Err(Error::LabelOutOfRange { label: m, dim: self.system_dim });
        }
        let id = HermitianOperator::identity(self.bath_dim());
        Ok(HermitianOperator::new(matrix_unit(self.system_dim, m, m))?.tensor(&id))
    }

    /// `ρ_S ⊗ ρ_B`.
    pub fn factorized(&self, rho_s: &DensityMatrix) -> Result<DensityMatrix> {
        if rho_s.dim() != self.system_dim {
            return Err(Error::DimensionMismatch { expected: self.system_dim, found: rho_s.dim() });
        }
        Ok(rho_s.tensor(&self.bath_ref))
    }

    /// `|0⟩⟨0| ⊗ ρ_B`.
    pub fn reference_state(&self) -> DensityMatrix {
        DensityMatrix::basis_state(self.system_dim, 0).expect("dimension is positive").tensor(&self.bath_ref)
    }
}

impl From<&TlsModel> for QuantumSystem {
    fn from(model: &TlsModel) -> Self {
        Self { hamiltonian: model.hamiltonian(), system_dim: 2, bath_ref: DensityMatrix::maximally_mixed(1) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleKind {
    Kernel,
    Force,
    Inhomogeneity,
}

/// Matrix-valued samples `X_ab(t_j)` with rows indexed by `rows` and columns
/// by `cols`. Inhomogeneities have no column labels and a single column.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSamples {
    grid: TimeGrid,
    kind: SampleKind,
    rows: Vec<Pair>,
    cols: Vec<Pair>,
    values: Vec<CMatrix>,
}

impl KernelSamples {
    pub fn new(grid: TimeGrid, kind: SampleKind, rows: Vec<Pair>, cols: Vec<Pair>, values: Vec<CMatrix>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::MalformedProblem(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        let ncols = if kind == SampleKind::Inhomogeneity { 1 } else { cols.len() };
        if values.iter().any(|m| m.nrows() != rows.len() || m.ncols() != ncols) {
            return Err(Error::MalformedProblem("sample shape does not match labels".into()));
        }
        Ok(Self { grid, kind, rows, cols, values })
    }

    /// Scalar series labelled by a single pair in both directions.
    pub fn scalar(grid: TimeGrid, kind: SampleKind, pair: Pair, series: &[C64]) -> Result<Self> {
        let values = series.iter().map(|&x| CMatrix::from_element(1, 1, x)).collect();
        let cols = if kind == SampleKind::Inhomogeneity { Vec::new() } else { vec![pair] };
        Self::new(grid, kind, vec![pair], cols, values)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn kind(&self) -> SampleKind {
        self.kind
    }

    pub fn rows(&self) -> &[Pair] {
        &self.rows
    }

    pub fn cols(&self) -> &[Pair] {
        &self.cols
    }

    pub fn values(&self) -> &[CMatrix] {
        &self.values
    }

    pub fn at(&self, j: usize) -> &CMatrix {
        &self.values[j]
    }

    pub fn series(&self, i: usize, k: usize) -> Vec<C64> {
        self.values.iter().map(|m| m[(i, k)]).collect()
    }

    pub fn real_series(&self, i: usize, k: usize) -> Vec<f64> {
        self.values.iter().map(|m| m[(i, k)].re).collect()
    }

    /// Series of the element `(row, col)` addressed by pair labels.
    pub fn element(&self, row: Pair, col: Pair) -> Option<Vec<C64>> {
        let i = self.rows.iter().position(|&p| p == row)?;
        let k = self.cols.iter().position(|&p| p == col)?;
        Some(self.series(i, k))
    }

    /// Largest imaginary part over all samples.
    pub fn max_imag(&self) -> f64 {
        self.values.iter().flat_map(|m| m.iter()).map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(crate::max_abs).fold(0.0, f64::max)
    }

    /// Sub-block over the given row and column positions.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let values = self
            .values
            .iter()
            .map(|m| CMatrix::from_fn(rows.len(), cols.len(), |i, k| m[(rows[i], cols[k])]))
            .collect();
        Self {
            grid: self.grid,
            kind: self.kind,
            rows: rows.iter().map(|&i| self.rows[i]).collect(),
            cols: cols.iter().map(|&k| self.cols[k]).collect(),
            values,
        }
    }
}

/// A Laplace variable in the open right half-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplacePoint(C64);

impl LaplacePoint {
    pub fn new(z: C64) -> Result<Self> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        if z.re <= 0.0 {
            return Err(Error::LeftHalfPlane(z));
        }
        Ok(Self(z))
    }

    pub fn z(&self) -> C64 {
        self.0
    }

    /// `a + bi` for `a ∈ {0.25, 0.5, 1, 2}` and `b ∈ {−3, −1, 1, 3}`.
    pub fn default_set() -> Vec<Self> {
        let mut out = Vec::with_capacity(16);
        for a in [0.25, 0.5, 1.0, 2.0] {
            for b in [-3.0, -1.0, 1.0, 3.0] {
                out.push(Self(C64::new(a, b)));
            }
        }
        out
    }
}

/// A system with a projector, precomputing `𝓛`, `𝓠` and the contraction
/// vectors of the index set.
#[derive(Debug, Clone)]
pub struct ProjectedSystem {
    system: QuantumSystem,
    spec: ProjectorSpec,
    liouvillian: CMatrix,
    complement: CMatrix,
    tolerances: Tolerances,
}

impl ProjectedSystem {
    pub fn new(system: &QuantumSystem, spec: ProjectorSpec) -> Result<Self> {
        if spec.system_dim() != system.system_dim() {
            return Err(Error::DimensionMismatch { expected: system.system_dim(), found: spec.system_dim() });
        }
        if spec.bath_dim() != system.bath_dim() {
            return Err(Error::DimensionMismatch { expected: system.bath_dim(), found: spec.bath_dim() });
        }
        let liouvillian = build_liouvillian(system.hamiltonian()).into_matrix();
        let (_, q) = build_projector_sum(&spec);
        Ok(Self {
            system: system.clone(),
            spec,
            liouvillian,
            complement: q.into_matrix(),
            tolerances: Tolerances::default(),
        })
    }

    /// Projector over `index_set` with the system's own bath reference.
    pub fn with_index_set(system: &QuantumSystem, index_set: Vec<Pair>) -> Result<Self> {
        let spec = ProjectorSpec::new(system.system_dim(), index_set, system.bath_ref().clone())?;
        Self::new(system, spec)
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn system(&self) -> &QuantumSystem {
        &self.system
    }

    pub fn spec(&self) -> &ProjectorSpec {
        &self.spec
    }

    pub fn liouvillian(&self) -> &CMatrix {
        &self.liouvillian
    }

    pub fn complement(&self) -> &CMatrix {
        &self.complement
    }

    fn readout(&self, pairs: &[Pair]) -> Result<CMatrix> {
        Ok(self.spec.functionals_for(pairs)? * &self.liouvillian)
    }

    /// `rows · e^{−it𝓠𝓛} · cols` at every grid point.
    fn sample_contractions(&self, rows: &CMatrix, cols: CMatrix, grid: &TimeGrid) -> Result<Vec<CMatrix>> {
        let generator = (&self.complement * &self.liouvillian) * (-I);
        let propagator = GridPropagator::new(&generator, grid.dt())?;
        let mut out = Vec::with_capacity(grid.len());
        propagator.sweep(cols, grid.n_steps(), |_, x| out.push(rows * x));
        Ok(out)
    }

    pub fn kernel_samples(&self, rows: &[Pair], cols: &[Pair], grid: &TimeGrid) -> Result<KernelSamples> {
        let readout = self.readout(rows)?;
        let sources = &self.complement * &self.liouvillian * self.spec.states_for(cols)?;
        let values = self.sample_contractions(&readout, sources, grid)?;
        KernelSamples::new(*grid, SampleKind::Kernel, rows.to_vec(), cols.to_vec(), values)
    }

    pub fn force_samples(&self, rows: &[Pair], cols: &[Pair], grid: &TimeGrid) -> Result<KernelSamples> {
        let readout = self.readout(rows)? * I;
        let values = self.sample_contractions(&readout, self.spec.states_for(cols)?, grid)?;
        KernelSamples::new(*grid, SampleKind::Force, rows.to_vec(), cols.to_vec(), values)
    }

    /// `K_{(mn),(m'n')}(τ)` as a 1×1 series.
    pub fn kernel_element(&self, out: Pair, input: Pair, grid: &TimeGrid) -> Result<KernelSamples> {
        self.kernel_samples(&[out], &[input], grid)
    }

    /// `F_{(mn),(m'n')}(τ)` as a 1×1 series.
    pub fn f_element(&self, out: Pair, input: Pair, grid: &TimeGrid) -> Result<KernelSamples> {
        self.force_samples(&[out], &[input], grid)
    }

    /// Full kernel matrix over the index set.
    pub fn kernel_matrix(&self, grid: &TimeGrid) -> Result<KernelSamples> {
        let set = self.spec.index_set().to_vec();
        self.kernel_samples(&set, &set, grid)
    }

    pub fn force_matrix(&self, grid: &TimeGrid) -> Result<KernelSamples> {
        let set = self.spec.index_set().to_vec();
        self.force_samples(&set, &set, grid)
    }

    /// `θ(t)` for every component of the index set.
    pub fn theta(&self, rho0: &DensityMatrix, grid: &TimeGrid) -> Result<KernelSamples> {
        let rows = self.spec.index_set().to_vec();
        let readout = self.readout(&rows)? * (-I);
        let leak = self.complement_vector(rho0)?;
        let values = self.sample_contractions(&readout, CMatrix::from_column_slice(leak.len(), 1, leak.as_slice()), grid)?;
        KernelSamples::new(*grid, SampleKind::Inhomogeneity, rows, Vec::new(), values)
    }

    fn complement_vector(&self, rho0: &DensityMatrix) -> Result<CVector> {
        if rho0.dim() != self.system.total_dim() {
            return Err(Error::DimensionMismatch { expected: self.system.total_dim(), found: rho0.dim() });
        }
        Ok(&self.complement * vectorize(rho0.matrix()).as_vector())
    }

    /// `‖𝓠 vec(ρ₀)‖`.
    pub fn complement_leak(&self, rho0: &DensityMatrix) -> Result<f64> {
        Ok(self.complement_vector(rho0)?.norm())
    }

    /// Components `σ_(mn) = Tr{(|n⟩⟨m| ⊗ 1_B) ρ}` over the index set.
    pub fn coordinates(&self, rho: &CMatrix) -> CVector {
        self.spec.functionals() * vectorize(rho).as_vector()
    }

    /// Coefficient matrix of the streaming term, `−i w_a·𝓛 v_b`.
    /// Equals `−F(0)`, and vanishes when the index set holds only populations.
    pub fn streaming_matrix(&self) -> CMatrix {
        self.readout(self.spec.index_set()).expect("validated index set") * self.spec.states() * (-I)
    }

    /// `F̃(z)` over the index set, from an exact resolvent.
    pub fn laplace_f_matrix(&self, z: LaplacePoint) -> Result<CMatrix> {
        let set = self.spec.index_set().to_vec();
        self.laplace_forces(&set, &set, z)
    }

    pub fn laplace_forces(&self, rows: &[Pair], cols: &[Pair], z: LaplacePoint) -> Result<CMatrix> {
        let generator = (&self.complement * &self.liouvillian) * I;
        let resolvent = Resolvent::from_matrix(&generator, z.z(), &self.tolerances)?;
        let solved = resolvent.solve_columns(&self.spec.states_for(cols)?)?;
        Ok(self.readout(rows)? * solved * I)
    }
}

/// Closed-form two-level kernel families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TlsScheme {
    /// `𝓟⁰` alone: `K = 2Δ² cos(2ωτ)`.
    ProjectedSingle,
    /// `𝓟⁰ + 𝓟¹`: `K_{m,n} = ±2Δ² cos(2ετ)`.
    ProjectedPair,
    /// Constant kernels from energy and trace constraints.
    ConstraintConstant,
    /// Oscillating kernels from the reality constraint.
    ConstraintOscillating,
}

impl TlsScheme {
    pub const ALL: [TlsScheme; 4] = [
        TlsScheme::ProjectedSingle,
        TlsScheme::ProjectedPair,
        TlsScheme::ConstraintConstant,
        TlsScheme::ConstraintOscillating,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TlsScheme::ProjectedSingle => "projected_single",
            TlsScheme::ProjectedPair => "projected_pair",
            TlsScheme::ConstraintConstant => "constraint_constant",
            TlsScheme::ConstraintOscillating => "constraint_oscillating",
        }
    }
}

impl fmt::Display for TlsScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TlsScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|scheme| scheme.name() == s).ok_or_else(|| Error::UnknownName {
            kind: "scheme",
            name: s.to_string(),
            expected: Self::ALL.map(|scheme| scheme.name()).join(", "),
        })
    }
}

/// Form of the energy term in the constant constraint kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyTerm {
    /// `2Eε`.
    Plain,
    /// `2Eε/Δ`; inconsistent with the exact dynamics unless `Δ = 1`.
    DividedByDelta,
}

/// `(K_{0,0}, K_{0,1})` of the constant scheme; `K_{1,0} = −K_{0,0}` and
/// `K_{1,1} = −K_{0,1}`.
pub fn constant_kernel_entries(model: &TlsModel, term: EnergyTerm) -> (f64, f64) {
    let TlsModel { epsilon, delta, energy } = *model;
    let base = 2.0 * (delta * delta + epsilon * epsilon);
    let shift = match term {
        EnergyTerm::Plain => 2.0 * energy * epsilon,
        EnergyTerm::DividedByDelta => 2.0 * energy * epsilon / delta,
    };
    (base + shift, -base + shift)
}

const TLS_PAIRS: [Pair; 2] = [(0, 0), (1, 1)];

fn tls_samples<F>(grid: &TimeGrid, kind: SampleKind, single: bool, entry: F) -> KernelSamples
where
    F: Fn(f64) -> [[f64; 2]; 2],
{
    let n = if single { 1 } else { 2 };
    let values = grid
        .points()
        .map(|t| {
            let e = entry(t);
            CMatrix::from_fn(n, n, |i, k| c(e[i][k]))
        })
        .collect();
    let pairs = TLS_PAIRS[..n].to_vec();
    KernelSamples::new(*grid, kind, pairs.clone(), pairs, values).expect("shapes are consistent")
}

/// Closed-form kernels; the constant scheme uses the plain energy term.
pub fn closed_form_tls_kernels(model: &TlsModel, scheme: TlsScheme, grid: &TimeGrid) -> KernelSamples {
    let d2 = 2.0 * model.delta * model.delta;
    let eps = model.epsilon;
    let omega = model.projected_frequency();
    match scheme {
        TlsScheme::ProjectedSingle => {
            tls_samples(grid, SampleKind::Kernel, true, |t| [[d2 * (2.0 * omega * t).cos(), 0.0], [0.0, 0.0]])
        }
        TlsScheme::ProjectedPair | TlsScheme::ConstraintOscillating => tls_samples(grid, SampleKind::Kernel, false, |t| {
            let k = d2 * (2.0 * eps * t).cos();
            [[k, -k], [-k, k]]
        }),
        TlsScheme::ConstraintConstant => closed_form_constant_kernels(model, EnergyTerm::Plain, grid),
    }
}

pub fn closed_form_constant_kernels(model: &TlsModel, term: EnergyTerm, grid: &TimeGrid) -> KernelSamples {
    let (k00, k01) = constant_kernel_entries(model, term);
    tls_samples(grid, SampleKind::Kernel, false, |_| [[k00, k01], [-k00, -k01]])
}

/// `sin(2aτ)/a`, continuous at `a = 0`.
fn sin_over(a: f64, t: f64) -> f64 {
    if a == 0.0 {
        2.0 * t
    } else {
        (2.0 * a * t).sin() / a
    }
}

/// Closed-form forces `F = ∫₀^τ K`.
pub fn closed_form_tls_forces(model: &TlsModel, scheme: TlsScheme, grid: &TimeGrid) -> KernelSamples {
    let d2 = model.delta * model.delta;
    let eps = model.epsilon;
    let omega = model.projected_frequency();
    match scheme {
        TlsScheme::ProjectedSingle => {
            tls_samples(grid, SampleKind::Force, true, |t| [[d2 * sin_over(omega, t), 0.0], [0.0, 0.0]])
        }
        TlsScheme::ProjectedPair | TlsScheme::ConstraintOscillating => tls_samples(grid, SampleKind::Force, false, |t| {
            let f = d2 * sin_over(eps, t);
            [[f, -f], [-f, f]]
        }),
        TlsScheme::ConstraintConstant => {
            let (k00, k01) = constant_kernel_entries(model, EnergyTerm::Plain);
            tls_samples(grid, SampleKind::Force, false, |t| [[k00 * t, k01 * t], [-k00 * t, -k01 * t]])
        }
    }
}

/// Forces under `𝓟⁰` alone over the population pairs, `F_{m,n} = ±(Δ²/ω) sin(2ωτ)`.
/// The column sums vanish for any projector, which fixes the off-diagonal signs.
pub fn closed_form_tls_forces_embedded_single(model: &TlsModel, grid: &TimeGrid) -> KernelSamples {
    let d2 = model.delta * model.delta;
    let omega = model.projected_frequency();
    tls_samples(grid, SampleKind::Force, false, |t| {
        let f = d2 * sin_over(omega, t);
        [[f, -f], [-f, f]]
    })
}

/// `F̃_{0,0}(z; 𝓟⁰) = 2Δ²/(z² + 4ω²)`.
pub fn closed_form_tls_laplace_single(model: &TlsModel, z: C64) -> C64 {
    let omega = model.projected_frequency();
    c(2.0 * model.delta * model.delta) / (z * z + c(4.0 * omega * omega))
}

/// `F̃_{m,m}(z; 𝓟⁰ + 𝓟¹) = 2Δ²/(z² + 4ε²)`.
pub fn closed_form_tls_laplace_pair(model: &TlsModel, z: C64) -> C64 {
    let eps = model.epsilon;
    c(2.0 * model.delta * model.delta) / (z * z + c(4.0 * eps * eps))
}
