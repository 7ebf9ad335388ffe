//! Projection superoperators onto components of the system's reduced density
//! matrix, and conserved-charge rotation frames.
//!
//! The component projector for the pair `(m, n)` is
//!
//! ```text
//! 𝓟^{mn} ρ = (|m⟩⟨n| ⊗ ρ_B) · Tr{(|n⟩⟨m| ⊗ 1_B) ρ}
//! ```
//!
//! with `ρ_B` a reference bath state. It is idempotent whenever `Tr ρ_B = 1`,
//! and projectors for distinct pairs annihilate each other. In vectorized form
//! it is the rank-one matrix `vec(|m⟩⟨n| ⊗ ρ_B) · vec(|m⟩⟨n| ⊗ 1_B)ᵀ`.

use nalgebra::linalg::SymmetricEigen;
use nalgebra::DMatrix;

use crate::liouville::{
    hs_inner, matrix_unit, vectorize, DensityMatrix, HermitianOperator, Superoperator,
};
use crate::{c, max_abs, CMatrix, CVector, Error, Pair, Result, Tolerances, C64};

fn check_label(label: usize, dim: usize) -> Result<()> {
    if label >= dim {
        return Err(Error::LabelOutOfRange { label, dim });
    }
    Ok(())
}

/// `vec(|m⟩⟨n| ⊗ ρ_B)`.
pub fn component_state(system_dim: usize, m: usize, n: usize, bath_ref: &DensityMatrix) -> Result<CVector> {
    check_label(m, system_dim)?;
    check_label(n, system_dim)?;
    Ok(vectorize(&matrix_unit(system_dim, m, n).kronecker(bath_ref.matrix())).into_vector())
}

/// `vec(|m⟩⟨n| ⊗ 1_B)`; its transpose dotted with `vec(ρ)` gives
/// `Tr{(|n⟩⟨m| ⊗ 1_B) ρ}`.
pub fn component_functional(system_dim: usize, bath_dim: usize, m: usize, n: usize) -> Result<CVector> {
    check_label(m, system_dim)?;
    check_label(n, system_dim)?;
    let id = CMatrix::identity(bath_dim, bath_dim);
    Ok(vectorize(&matrix_unit(system_dim, m, n).kronecker(&id)).into_vector())
}

pub fn build_component_projector(
    system_dim: usize,
    m: usize,
    n: usize,
    bath_ref: &DensityMatrix,
) -> Result<Superoperator> {
    let state = component_state(system_dim, m, n, bath_ref)?;
    let functional = component_functional(system_dim, bath_ref.dim(), m, n)?;
    Superoperator::from_matrix(state * functional.transpose())
}

/// `𝓟ⁿ`: projector onto the `n`-th system population.
pub fn build_population_projector(system_dim: usize, n: usize, bath_ref: &DensityMatrix) -> Result<Superoperator> {
    build_component_projector(system_dim, n, n, bath_ref)
}

/// Which components of the reduced density matrix are relevant: `(0, 0)`
/// plus an arbitrary set `S` of further pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorSpec {
    system_dim: usize,
    index_set: Vec<Pair>,
    bath_ref: DensityMatrix,
}

impl ProjectorSpec {
    pub fn new(system_dim: usize, index_set: Vec<Pair>, bath_ref: DensityMatrix) -> Result<Self> {
        if system_dim == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        for (i, &(m, n)) in index_set.iter().enumerate() {
            check_label(m, system_dim)?;
            check_label(n, system_dim)?;
            if index_set[..i].contains(&(m, n)) {
                return Err(Error::DuplicateIndex(m, n));
            }
        }
        if !index_set.contains(&(0, 0)) {
            return Err(Error::MissingReferencePopulation);
        }
        Ok(Self { system_dim, index_set, bath_ref })
    }

    /// `𝓟⁰⁰` alone.
    pub fn reference_population(system_dim: usize, bath_ref: DensityMatrix) -> Result<Self> {
        Self::new(system_dim, vec![(0, 0)], bath_ref)
    }

    /// All system populations, `Σₙ 𝓟ⁿ`.
    pub fn populations(system_dim: usize, bath_ref: DensityMatrix) -> Result<Self> {
        Self::new(system_dim, (0..system_dim).map(|n| (n, n)).collect(), bath_ref)
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn bath_dim(&self) -> usize {
        self.bath_ref.dim()
    }

    /// Full Hilbert-space dimension `D · D_B`.
    pub fn total_dim(&self) -> usize {
        self.system_dim * self.bath_dim()
    }

    pub fn index_set(&self) -> &[Pair] {
        &self.index_set
    }

    pub fn bath_ref(&self) -> &DensityMatrix {
        &self.bath_ref
    }

    pub fn position(&self, pair: Pair) -> Option<usize> {
        self.index_set.iter().position(|&p| p == pair)
    }

    /// Same bath reference, different index set.
    pub fn with_index_set(&self, index_set: Vec<Pair>) -> Result<Self> {
        Self::new(self.system_dim, index_set, self.bath_ref.clone())
    }

    pub fn is_population_only(&self) -> bool {
        self.index_set.iter().all(|(m, n)| m == n)
    }

    /// Columns `vec(|m⟩⟨n| ⊗ ρ_B)` for the given pairs.
    pub fn states_for(&self, pairs: &[Pair]) -> Result<CMatrix> {
        let d2 = self.total_dim().pow(2);
        let mut out = CMatrix::zeros(d2, pairs.len());
        for (k, &(m, n)) in pairs.iter().enumerate() {
            out.set_column(k, &component_state(self.system_dim, m, n, &self.bath_ref)?);
        }
        Ok(out)
    }

    /// Rows `vec(|m⟩⟨n| ⊗ 1_B)ᵀ` for the given pairs; row `k` applied to
    /// `vec(ρ)` yields the component `σ_(mn)`.
    pub fn functionals_for(&self, pairs: &[Pair]) -> Result<CMatrix> {
        let d2 = self.total_dim().pow(2);
        let mut out = CMatrix::zeros(pairs.len(), d2);
        for (k, &(m, n)) in pairs.iter().enumerate() {
            out.set_row(k, &component_functional(self.system_dim, self.bath_dim(), m, n)?.transpose());
        }
        Ok(out)
    }

    pub fn states(&self) -> CMatrix {
        self.states_for(&self.index_set).expect("validated index set")
    }

    pub fn functionals(&self) -> CMatrix {
        self.functionals_for(&self.index_set).expect("validated index set")
    }
}

/// `(𝓟, 𝓠 = 1 − 𝓟)` for the summed projector of a spec.
pub fn build_projector_sum(spec: &ProjectorSpec) -> (Superoperator, Superoperator) {
    let p = spec.states() * spec.functionals();
    let n = p.nrows();
    let q = CMatrix::identity(n, n) - &p;
    (
        Superoperator::from_matrix(p).expect("square by construction"),
        Superoperator::from_matrix(q).expect("square by construction"),
    )
}

/// Orthonormal basis (Hilbert–Schmidt) of the real space of `d × d`
/// Hermitian matrices: `|k⟩⟨k|`, then `(|m⟩⟨n| + |n⟩⟨m|)/√2` and
/// `i(|m⟩⟨n| − |n⟩⟨m|)/√2` for `m < n`.
pub fn hermitian_basis(d: usize) -> Vec<HermitianOperator> {
    let mut out: Vec<HermitianOperator> =
        (0..d).map(|k| HermitianOperator::from_hermitian_unchecked(matrix_unit(d, k, k))).collect();
    out.extend(off_diagonal_basis(d));
    out
}

/// Orthonormal basis of traceless Hermitian matrices (generalized Gell-Mann).
pub fn traceless_hermitian_basis(d: usize) -> Vec<HermitianOperator> {
    let mut out = Vec::with_capacity(d * d - 1);
    for k in 1..d {
        let norm = ((k * (k + 1)) as f64).sqrt();
        let mut m = CMatrix::zeros(d, d);
        for j in 0..k {
            m[(j, j)] = c(1.0 / norm);
        }
        m[(k, k)] = c(-(k as f64) / norm);
        out.push(HermitianOperator::from_hermitian_unchecked(m));
    }
    out.extend(off_diagonal_basis(d));
    out
}

fn off_diagonal_basis(d: usize) -> Vec<HermitianOperator> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::new();
    for m in 0..d {
        for n in (m + 1)..d {
            let mut sym = CMatrix::zeros(d, d);
            sym[(m, n)] = c(s);
            sym[(n, m)] = c(s);
            let mut anti = CMatrix::zeros(d, d);
            anti[(m, n)] = C64::new(0.0, s);
            anti[(n, m)] = C64::new(0.0, -s);
            out.push(HermitianOperator::from_hermitian_unchecked(sym));
            out.push(HermitianOperator::from_hermitian_unchecked(anti));
        }
    }
    out
}

/// Traceless Hermitian operators commuting with `h`, orthonormal in the
/// Hilbert–Schmidt inner product, at most `max_count` of them.
///
/// Computed as the null space of `A ↦ i[H, A]` restricted to traceless
/// Hermitian matrices, where it is a real antisymmetric matrix.
pub fn find_conserved_charges(h: &HermitianOperator, max_count: usize) -> Vec<HermitianOperator> {
    let tol = Tolerances::default().commutator;
    let d = h.dim();
    if d < 2 || max_count == 0 {
        return Vec::new();
    }
    let basis = traceless_hermitian_basis(d);
    let n = basis.len();
    let images: Vec<CMatrix> = basis.iter().map(|b| h.commutator(b.matrix()) * C64::new(0.0, 1.0)).collect();
    let ad = DMatrix::<f64>::from_fn(n, n, |i, j| hs_inner(basis[i].matrix(), &images[j]).re);

    let svd = ad.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let scale = svd.singular_values.iter().copied().fold(1.0_f64, f64::max);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));

    let mut charges = Vec::new();
    for k in order {
        if charges.len() == max_count || svd.singular_values[k] > 1e-9 * scale {
            break;
        }
        let mut m = CMatrix::zeros(d, d);
        for (coef, b) in v_t.row(k).iter().zip(&basis) {
            m += b.matrix() * c(*coef);
        }
        let charge = HermitianOperator::from_hermitian_unchecked(m);
        if max_abs(&h.commutator(charge.matrix())) <= tol {
            charges.push(charge);
        }
    }
    charges
}

/// Orthonormal charges `C⁽¹⁾ = 1/√D, C⁽²⁾, …` with their values
/// `q_k = Tr{C⁽ᵏ⁾ ρ(0)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeSet {
    operators: Vec<HermitianOperator>,
    values: Vec<f64>,
}

impl ChargeSet {
    pub fn operators(&self) -> &[HermitianOperator] {
        &self.operators
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.operators[0].dim()
    }

    /// `Tr{C⁽ᵏ⁾ ρ}` for every charge.
    pub fn evaluate(&self, rho: &CMatrix) -> Vec<f64> {
        self.operators.iter().map(|op| op.expectation(rho)).collect()
    }
}

/// Removes the components of `v` along the orthonormal `basis`, with a
/// second pass if the first leaves more than `1e-8` relative overlap.
fn orthogonalize(v: &HermitianOperator, basis: &[HermitianOperator]) -> HermitianOperator {
    let mut out = v.clone();
    for pass in 0..2 {
        for b in basis {
            out = out.axpy(-b.hs_inner(&out), b);
        }
        let norm = out.hs_norm();
        let worst = basis.iter().map(|b| b.hs_inner(&out).abs()).fold(0.0, f64::max);
        if pass == 0 && worst <= 1e-8 * norm {
            break;
        }
    }
    out
}

pub fn orthonormalize_charges(raw: &[HermitianOperator], rho0: &DensityMatrix) -> Result<ChargeSet> {
    let d = rho0.dim();
    let tol = Tolerances::default().linear_dependence;
    let mut operators = vec![HermitianOperator::identity(d).scaled(1.0 / (d as f64).sqrt())];
    for (index, op) in raw.iter().enumerate() {
        if op.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: op.dim() });
        }
        let residual = orthogonalize(op, &operators);
        let norm = residual.hs_norm();
        if norm <= tol * op.hs_norm().max(f64::MIN_POSITIVE) {
            return Err(Error::DependentCharge { index });
        }
        operators.push(residual.scaled(1.0 / norm));
    }
    let values = operators.iter().map(|op| op.expectation(rho0.matrix())).collect();
    Ok(ChargeSet { operators, values })
}

/// Orthonormal frame `{Ô, C⁽¹⁾, …, C⁽ᴺ⁾, r₁, …}` and the induced unitary
/// change of coordinates on vectorized operators.
///
/// Row `i` of the rotation is `vec(Bᵢ)†`, so the coordinates of `vec(ρ)` are
/// `Tr(Bᵢ ρ)`: real for Hermitian `ρ`. Coordinate 0 is
/// `[σ₀ − Σ_k q_k Tr(O C⁽ᵏ⁾)]/𝒩`, coordinates `1..=N` are the charge values.
#[derive(Debug, Clone)]
pub struct RotationFrame {
    rotation: CMatrix,
    normalization: f64,
    observable: HermitianOperator,
    distinguished: HermitianOperator,
    charges: ChargeSet,
    basis: Vec<HermitianOperator>,
    rotated_liouvillian: CMatrix,
}

pub fn build_rotation_frame(
    charges: &ChargeSet,
    observable: &HermitianOperator,
    liouvillian: &Superoperator,
) -> Result<RotationFrame> {
    let d = observable.dim();
    if charges.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: charges.dim() });
    }
    if liouvillian.hilbert_dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: liouvillian.hilbert_dim() });
    }
    let tol = Tolerances::default();

    let residual = orthogonalize(observable, charges.operators());
    let normalization = residual.hs_norm();
    if normalization <= tol.linear_dependence * observable.hs_norm().max(f64::MIN_POSITIVE) {
        return Err(Error::ObservableInChargeSpan);
    }
    let distinguished = residual.scaled(1.0 / normalization);

    let mut basis = Vec::with_capacity(d * d);
    basis.push(distinguished.clone());
    basis.extend(charges.operators().iter().cloned());
    for candidate in hermitian_basis(d) {
        if basis.len() == d * d {
            break;
        }
        let r = orthogonalize(&candidate, &basis);
        let norm = r.hs_norm();
        if norm > 1e-6 {
            basis.push(r.scaled(1.0 / norm));
        }
    }
    if basis.len() != d * d {
        return Err(Error::Numerical(format!("basis completion produced {} of {} elements", basis.len(), d * d)));
    }

    let d2 = d * d;
    let mut columns = CMatrix::zeros(d2, d2);
    for (i, b) in basis.iter().enumerate() {
        columns.set_column(i, vectorize(b.matrix()).as_vector());
    }
    let rotation = columns.adjoint();
    let unitarity = max_abs(&(&rotation * rotation.adjoint() - CMatrix::identity(d2, d2)));
    if unitarity > 1e-10 {
        return Err(Error::Numerical(format!("rotation is not unitary (defect {unitarity:e})")));
    }
    let rotated_liouvillian = &rotation * liouvillian.matrix() * &columns;

    let spectrum = |m: &CMatrix| {
        let herm = (m + m.adjoint()) * c(0.5);
        let mut ev: Vec<f64> = SymmetricEigen::new(herm).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    };
    let scale = max_abs(liouvillian.matrix()).max(1.0);
    let drift = spectrum(liouvillian.matrix())
        .iter()
        .zip(spectrum(&rotated_liouvillian))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if drift > 1e-9 * scale {
        return Err(Error::Numerical(format!("rotated Liouvillian spectrum drifted by {drift:e}")));
    }

    Ok(RotationFrame {
        rotation,
        normalization,
        observable: observable.clone(),
        distinguished,
        charges: charges.clone(),
        basis,
        rotated_liouvillian,
    })
}

impl RotationFrame {
    pub fn rotation(&self) -> &CMatrix {
        &self.rotation
    }

    /// `𝒩`, the norm of the observable's component orthogonal to the charges.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn observable(&self) -> &HermitianOperator {
        &self.observable
    }

    /// `Ô`.
    pub fn distinguished(&self) -> &HermitianOperator {
        &self.distinguished
    }

    pub fn charges(&self) -> &ChargeSet {
        &self.charges
    }

    /// `L' = R L R†`.
    pub fn rotated_liouvillian(&self) -> &CMatrix {
        &self.rotated_liouvillian
    }

    /// Frame operators in coordinate order.
    pub fn basis(&self) -> &[HermitianOperator] {
        &self.basis
    }

    /// The residual operators `r₁, …` completing the frame.
    pub fn completed_basis(&self) -> &[HermitianOperator] {
        &self.basis[1 + self.charges.len()..]
    }

    pub fn completed_labels(&self) -> Vec<String> {
        (1..=self.completed_basis().len()).map(|i| format!("r{i}")).collect()
    }

    pub fn dim(&self) -> usize {
        self.observable.dim()
    }

    /// `R vec(ρ)`.
    pub fn coordinates(&self, rho: &CMatrix) -> CVector {
        &self.rotation * vectorize(rho).as_vector()
    }

    /// `Σ_k q_k Tr(O C⁽ᵏ⁾)` with `q_k` evaluated on `rho0`.
    pub fn charge_offset(&self, rho0: &CMatrix) -> f64 {
        self.charges
            .operators()
            .iter()
            .map(|ck| ck.expectation(rho0) * self.observable.hs_inner(ck))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::{build_liouvillian, exact_evolve, TlsModel};
    use crate::random;

    fn ket0() -> DensityMatrix {
        DensityMatrix::basis_state(2, 0).unwrap()
    }

    fn no_bath() -> DensityMatrix {
        DensityMatrix::maximally_mixed(1)
    }

    #[test]
    fn tls_complement_of_ket0_projector() {
        let p0 = build_population_projector(2, 0, &no_bath()).unwrap();
        let q0 = &Superoperator::identity(2) - &p0;
        let expected = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.0), c(1.0), c(1.0), c(1.0)]));
        assert_eq!(q0.matrix(), &expected);
    }

    #[test]
    fn population_projector_fixes_its_state() {
        let p0 = build_population_projector(2, 0, &no_bath()).unwrap();
        let v = ket0().vectorize();
        assert_eq!(p0.apply(&v), v);
    }

    #[test]
    fn population_projector_on_random_state() {
        let mut rng = random::seeded(11);
        let rho = random::random_density(2, &mut rng);
        let p0 = build_population_projector(2, 0, &no_bath()).unwrap();
        let out = p0.apply_operator(rho.matrix());
        let expected = ket0().matrix() * rho.matrix()[(0, 0)];
        assert!(max_abs(&(out - expected)) < 1e-15);
    }

    #[test]
    fn population_projector_with_bath_is_idempotent_rank_one() {
        let mut rng = random::seeded(12);
        let bath = random::random_density(3, &mut rng);
        let p = build_population_projector(2, 1, &bath).unwrap();
        assert!(max_abs(&((&p * &p).into_matrix() - p.matrix())) < 1e-14);
        assert_eq!(p.matrix().rank(1e-10), 1);
        assert!(build_population_projector(2, 2, &bath).is_err());
    }

    #[test]
    fn coherence_projectors_are_orthogonal() {
        let mut rng = random::seeded(13);
        let p01 = build_component_projector(2, 0, 1, &no_bath()).unwrap();
        let p10 = build_component_projector(2, 1, 0, &no_bath()).unwrap();
        let rho = random::random_density(2, &mut rng);
        let out = p01.apply(&p10.apply(&rho.vectorize()));
        assert!(out.as_vector().norm() < 1e-15);
        let p00 = build_component_projector(2, 0, 0, &no_bath()).unwrap();
        assert_eq!(p00, build_population_projector(2, 0, &no_bath()).unwrap());
    }

    #[test]
    fn component_projectors_are_complete_on_product_states() {
        let mut rng = random::seeded(14);
        let bath = random::random_density(2, &mut rng);
        let sys = random::random_density(3, &mut rng);
        let product = sys.tensor(&bath);
        let mut total = CMatrix::zeros(36, 36);
        for m in 0..3 {
            for n in 0..3 {
                total += build_component_projector(3, m, n, &bath).unwrap().matrix();
            }
        }
        let out = &total * product.vectorize().as_vector();
        assert!((out - product.vectorize().as_vector()).norm() < 1e-14);
    }

    #[test]
    fn projector_sums() {
        let spec = ProjectorSpec::populations(2, no_bath()).unwrap();
        let (p, q) = build_projector_sum(&spec);
        let diag = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0), c(0.0), c(0.0), c(1.0)]));
        assert_eq!(p.matrix(), &diag);
        assert!(max_abs(&(p.matrix() + q.matrix() - CMatrix::identity(4, 4))) == 0.0);

        let all = ProjectorSpec::new(2, vec![(0, 0), (0, 1), (1, 0), (1, 1)], no_bath()).unwrap();
        let (p, q) = build_projector_sum(&all);
        assert_eq!(p.matrix(), &CMatrix::identity(4, 4));
        assert_eq!(max_abs(q.matrix()), 0.0);

        let single = ProjectorSpec::reference_population(2, no_bath()).unwrap();
        let (p, q) = build_projector_sum(&single);
        assert_eq!(p, build_population_projector(2, 0, &no_bath()).unwrap());
        assert_eq!(q.matrix()[(0, 0)], c(0.0));
        assert_eq!(q.matrix()[(3, 3)], c(1.0));
    }

    #[test]
    fn spec_validation() {
        assert_eq!(ProjectorSpec::new(2, vec![(1, 1)], no_bath()), Err(Error::MissingReferencePopulation));
        assert_eq!(ProjectorSpec::new(2, vec![(0, 0), (1, 1), (1, 1)], no_bath()), Err(Error::DuplicateIndex(1, 1)));
        assert!(matches!(ProjectorSpec::new(2, vec![(0, 0), (2, 0)], no_bath()), Err(Error::LabelOutOfRange { .. })));
    }

    #[test]
    fn hermitian_bases_are_orthonormal() {
        for d in 1..=4 {
            for basis in [hermitian_basis(d), traceless_hermitian_basis(d)] {
                for (i, a) in basis.iter().enumerate() {
                    for (j, b) in basis.iter().enumerate() {
                        let expected = if i == j { 1.0 } else { 0.0 };
                        assert!((a.hs_inner(b) - expected).abs() < 1e-14);
                    }
                }
            }
            assert_eq!(hermitian_basis(d).len(), d * d);
            assert!(traceless_hermitian_basis(d).iter().all(|b| b.matrix().trace().norm() < 1e-14));
        }
    }

    #[test]
    fn tls_charge_is_the_hamiltonian() {
        let model = TlsModel::new(0.3, 0.9);
        let h = model.hamiltonian();
        let charges = find_conserved_charges(&h, 10);
        assert_eq!(charges.len(), 1);
        let overlap = charges[0].hs_inner(&h) / h.hs_norm();
        assert!((overlap.abs() - 1.0).abs() < 1e-12);
        // Its expectation is the energy ε(σ₁₁ − σ₀₀) + Δ(σ₁₀ + σ₀₁), up to normalization.
        let mut rng = random::seeded(15);
        let rho = random::random_density(2, &mut rng);
        let s = rho.matrix();
        let energy = model.epsilon * (s[(1, 1)].re - s[(0, 0)].re) + model.delta * (s[(1, 0)].re + s[(0, 1)].re);
        assert!((charges[0].expectation(s) * h.hs_norm() * overlap.signum() - energy).abs() < 1e-12);
    }

    #[test]
    fn distinct_diagonal_hamiltonian_has_diagonal_charges() {
        let h = HermitianOperator::new(CMatrix::from_diagonal(&CVector::from_vec(vec![
            c(-1.0),
            c(0.25),
            c(2.0),
            c(3.5),
        ])))
        .unwrap();
        let charges = find_conserved_charges(&h, 100);
        assert_eq!(charges.len(), 3);
        for ch in &charges {
            let m = ch.matrix();
            let off: f64 = (0..4).flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j))).map(|ij| m[ij].norm()).sum();
            assert!(off < 1e-10);
            assert!(m.trace().norm() < 1e-12);
        }
    }

    #[test]
    fn identity_hamiltonian_conserves_everything() {
        let h = HermitianOperator::identity(3).scaled(0.7);
        assert_eq!(find_conserved_charges(&h, 100).len(), 8);
        assert_eq!(find_conserved_charges(&h, 5).len(), 5);
        assert!(find_conserved_charges(&h, 0).is_empty());
    }

    #[test]
    fn charges_are_conserved_along_exact_dynamics() {
        let mut rng = random::seeded(16);
        // Block-diagonal Hamiltonian so that a nontrivial commutant exists.
        let a = random::random_hermitian(2, &mut rng);
        let b = random::random_hermitian(2, &mut rng);
        let mut m = CMatrix::zeros(4, 4);
        m.view_mut((0, 0), (2, 2)).copy_from(a.matrix());
        m.view_mut((2, 2), (2, 2)).copy_from(b.matrix());
        let h = HermitianOperator::new(m).unwrap();
        let charges = find_conserved_charges(&h, 100);
        assert!(charges.len() >= 3);
        let rho0 = random::random_density(4, &mut rng);
        for ch in &charges {
            let q0 = ch.expectation(rho0.matrix());
            for k in 0..=10 {
                let rho = exact_evolve(&h, &rho0, k as f64);
                assert!((ch.expectation(rho.matrix()) - q0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn gram_schmidt_of_tls_energy() {
        let model = TlsModel::new(0.3, 0.9);
        let h = model.hamiltonian();
        let set = orthonormalize_charges(std::slice::from_ref(&h), &ket0()).unwrap();
        assert_eq!(set.len(), 2);
        let id = HermitianOperator::identity(2).scaled(std::f64::consts::FRAC_1_SQRT_2);
        assert!(max_abs(&(set.operators()[0].matrix() - id.matrix())) < 1e-15);
        // H is traceless, so C² = H/‖H‖.
        assert!(max_abs(&(set.operators()[1].matrix() - h.scaled(1.0 / h.hs_norm()).matrix())) < 1e-14);
        assert!((set.values()[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((set.values()[1] + model.epsilon / h.hs_norm()).abs() < 1e-14);
    }

    #[test]
    fn empty_raw_charges_and_forced_dependence() {
        let rho = DensityMatrix::maximally_mixed(3);
        let set = orthonormalize_charges(&[], &rho).unwrap();
        assert_eq!(set.len(), 1);
        assert!((set.values()[0] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        let err = orthonormalize_charges(&[HermitianOperator::identity(3)], &rho).unwrap_err();
        assert_eq!(err, Error::DependentCharge { index: 0 });
    }

    #[test]
    fn tls_rotation_frame() {
        let model = TlsModel::new(0.3, 0.9);
        let h = model.hamiltonian();
        let set = orthonormalize_charges(std::slice::from_ref(&h), &ket0()).unwrap();
        let obs = HermitianOperator::new(ket0().into_matrix()).unwrap();
        let l = build_liouvillian(&h);
        let frame = build_rotation_frame(&set, &obs, &l).unwrap();

        // 𝒩 from direct Gram–Schmidt arithmetic on |0⟩⟨0|.
        let mut residual = obs.clone();
        for ck in set.operators() {
            residual = residual.axpy(-obs.hs_inner(ck), ck);
        }
        assert!((frame.normalization() - residual.hs_norm()).abs() < 1e-14);
        assert_eq!(frame.completed_labels(), vec!["r1".to_string()]);

        let mut rng = random::seeded(17);
        for _ in 0..10 {
            let rho = random::random_density(2, &mut rng);
            let x = frame.coordinates(rho.matrix());
            let q = set.evaluate(rho.matrix());
            let shift: f64 = q.iter().zip(set.operators()).map(|(qk, ck)| qk * obs.hs_inner(ck)).sum();
            let expected = (rho.matrix()[(0, 0)].re - shift) / frame.normalization();
            assert!((x[0] - c(expected)).norm() < 1e-13);
            assert!((x[1] - c(q[0])).norm() < 1e-13);
            assert!((x[2] - c(q[1])).norm() < 1e-13);
            assert!(x.iter().all(|z| z.im.abs() < 1e-13));
        }
    }

    #[test]
    fn observable_orthogonal_to_charges() {
        // τ^y-like observable is orthogonal to 1 and to a τ^z Hamiltonian.
        let h = HermitianOperator::from_real(2, &[1.0, 0.0, 0.0, -1.0]).unwrap();
        let set = orthonormalize_charges(std::slice::from_ref(&h), &ket0()).unwrap();
        let obs = HermitianOperator::new(CMatrix::from_row_slice(
            2,
            2,
            &[c(0.0), C64::new(0.0, -2.0), C64::new(0.0, 2.0), c(0.0)],
        ))
        .unwrap();
        let frame = build_rotation_frame(&set, &obs, &build_liouvillian(&h)).unwrap();
        assert!((frame.normalization() - obs.hs_norm()).abs() < 1e-14);
        assert!(max_abs(&(frame.distinguished().matrix() - obs.scaled(1.0 / obs.hs_norm()).matrix())) < 1e-15);
    }

    #[test]
    fn observable_in_charge_span_is_rejected() {
        let h = TlsModel::new(0.3, 0.9).hamiltonian();
        let set = orthonormalize_charges(std::slice::from_ref(&h), &ket0()).unwrap();
        let obs = set.operators()[1].clone();
        let err = build_rotation_frame(&set, &obs, &build_liouvillian(&h)).unwrap_err();
        assert_eq!(err, Error::ObservableInChargeSpan);
    }
}
