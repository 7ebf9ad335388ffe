//! Seeded random operators for randomized checks and generated configs.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::kernels::QuantumSystem;
use crate::liouville::{vectorize, DensityMatrix, HermitianOperator, StateVector};
use crate::{CMatrix, C64};

/// Deterministic generator used wherever a `seed` is accepted.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// Matrix with independent standard complex Gaussian entries.
pub fn random_complex_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// GUE-distributed Hermitian matrix.
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> HermitianOperator {
    let a = random_complex_matrix(d, rng);
    HermitianOperator::from_hermitian_unchecked((&a + a.adjoint()) * C64::new(0.5, 0.0))
}

/// Full-rank density matrix `G G† / Tr(G G†)` from a Ginibre matrix `G`.
pub fn random_density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityMatrix {
    let g = random_complex_matrix(d, rng);
    let mut rho = &g * g.adjoint();
    let tr = rho.trace();
    rho /= tr;
    // Force exact Hermiticity after the division.
    let rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    DensityMatrix::from_matrix_unchecked(rho)
}

/// Vectorization of a random (not necessarily Hermitian) `d × d` operator.
pub fn random_state_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> StateVector {
    vectorize(&random_complex_matrix(d, rng))
}

/// Random Hamiltonian on a `system_dim · bath_dim` space, with either a
/// maximally mixed or a random full-rank reference bath state.
pub fn random_system<R: Rng + ?Sized>(
    system_dim: usize,
    bath_dim: usize,
    random_bath: bool,
    rng: &mut R,
) -> QuantumSystem {
    let h = random_hermitian(system_dim * bath_dim, rng);
    let bath = if random_bath { random_density(bath_dim, rng) } else { DensityMatrix::maximally_mixed(bath_dim) };
    QuantumSystem::new(h, system_dim, bath).expect("dimensions are consistent by construction")
}
