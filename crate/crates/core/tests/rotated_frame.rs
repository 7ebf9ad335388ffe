use nzkl::kernels::QuantumSystem;
use nzkl::liouville::{build_liouvillian, exact_expectation_series, DensityMatrix, TlsModel};
use nzkl::projectors::{build_rotation_frame, find_conserved_charges, orthonormalize_charges, RotationFrame};
use nzkl::solver::{build_problem_rotated, build_problem_single, rotated_terms, solve_volterra};
use nzkl::{random, CMatrix, TimeGrid, C64};

fn energy_frame(model: &TlsModel, rho0: &DensityMatrix) -> RotationFrame {
    let h = model.hamiltonian();
    let charges = orthonormalize_charges(&find_conserved_charges(&h, usize::MAX), rho0).unwrap();
    assert_eq!(charges.len(), 2);
    let obs = QuantumSystem::from(model).observable(0).unwrap();
    build_rotation_frame(&charges, &obs, &build_liouvillian(&h)).unwrap()
}

fn max_dev(a: &[C64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.re - y).abs().max(x.im.abs())).fold(0.0, f64::max)
}

#[test]
fn rotated_equation_reproduces_population() {
    let model = TlsModel::reference();
    let rho0 = DensityMatrix::basis_state(2, 0).unwrap();
    let frame = energy_frame(&model, &rho0);
    let grid = TimeGrid::with_horizon(1e-3, 10.0).unwrap();
    let traj = solve_volterra(&build_problem_rotated(&frame, &rho0, &grid).unwrap()).unwrap();
    let exact: Vec<f64> = grid.points().map(|t| model.population(t)).collect();
    assert!(max_dev(&traj.values[0], &exact) < 2e-4);
}

#[test]
fn rotated_kernel_is_constant_for_two_levels() {
    // Only one residual direction remains, so the memory cannot decay.
    let model = TlsModel::reference();
    let rho0 = DensityMatrix::basis_state(2, 0).unwrap();
    let frame = energy_frame(&model, &rho0);
    let grid = TimeGrid::with_horizon(1e-2, 10.0).unwrap();
    let terms = rotated_terms(&frame, &rho0, &grid).unwrap();
    let omega = model.rabi_frequency();
    for k in &terms.kernel {
        assert!((k - C64::new(4.0 * omega * omega, 0.0)).norm() < 1e-10);
    }
}

#[test]
fn ground_basis_state_has_no_residual_overlap() {
    // The residual direction is proportional to τʸ, which has zero expectation
    // in |0⟩⟨0|; hence θ vanishes identically for this initial state.
    let model = TlsModel::reference();
    let rho0 = DensityMatrix::basis_state(2, 0).unwrap();
    let frame = energy_frame(&model, &rho0);
    let r1 = &frame.completed_basis()[0];
    let tau_y = CMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)]);
    let overlap = nzkl::liouville::hs_inner(r1.matrix(), &tau_y).norm();
    assert!((overlap - 2f64.sqrt()).abs() < 1e-12);
    let grid = TimeGrid::with_horizon(1e-2, 10.0).unwrap();
    let terms = rotated_terms(&frame, &rho0, &grid).unwrap();
    assert!(terms.theta.iter().all(|t| t.norm() < 1e-12));
}

#[test]
fn theta_is_nonzero_with_a_tau_y_component() {
    let model = TlsModel::reference();
    let psi = nzkl::CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)]).unscale(2f64.sqrt());
    let rho0 = DensityMatrix::pure(&psi).unwrap();
    let frame = energy_frame(&model, &rho0);
    let grid = TimeGrid::with_horizon(1e-3, 10.0).unwrap();
    let terms = rotated_terms(&frame, &rho0, &grid).unwrap();
    let peak = terms.theta.iter().map(|t| t.norm()).fold(0.0, f64::max);
    assert!(peak > 1e-1, "{peak}");

    let traj = solve_volterra(&build_problem_rotated(&frame, &rho0, &grid).unwrap()).unwrap();
    let obs = QuantumSystem::from(&model).observable(0).unwrap();
    let exact = exact_expectation_series(&model.hamiltonian(), &rho0, &obs, &grid);
    assert!(max_dev(&traj.values[0], &exact) < 2e-4);
}

#[test]
fn identity_only_frame_matches_single_projector_dynamics() {
    let mut rng = random::seeded(41);
    let h = random::random_hermitian(3, &mut rng);
    let sys = QuantumSystem::new(h.clone(), 3, DensityMatrix::maximally_mixed(1)).unwrap();
    let rho0 = sys.reference_state();
    let charges = orthonormalize_charges(&[], &rho0).unwrap();
    let obs = sys.observable(0).unwrap();
    let frame = build_rotation_frame(&charges, &obs, &build_liouvillian(&h)).unwrap();
    let grid = TimeGrid::with_horizon(1e-3, 3.0).unwrap();

    let terms = rotated_terms(&frame, &rho0, &grid).unwrap();
    let single = build_problem_single(&sys, &rho0, &grid).unwrap();
    // The memory acts on σ₀ − 1/D rather than σ₀, so the kernels differ;
    // at τ = 0 both are ‖[H, |0⟩⟨0|]‖², up to the frame normalization.
    let k_single = single.kernel.series(0, 0);
    let n2 = frame.normalization().powi(2);
    assert!((terms.kernel[0] * n2 - k_single[0]).norm() < 1e-12);
    assert!((terms.offset - 1.0 / 3.0).abs() < 1e-15);
    // Q vec(ρ₀) in the rotated frame carries only the identity charge, which
    // the Liouvillian annihilates.
    assert!(terms.theta.iter().all(|t| t.norm() < 1e-12));

    let a = solve_volterra(&build_problem_rotated(&frame, &rho0, &grid).unwrap()).unwrap();
    let b = solve_volterra(&single).unwrap();
    for (x, y) in a.values[0].iter().zip(&b.values[0]) {
        assert!((x - y).norm() < 1e-6);
    }
}

#[test]
fn rotated_problem_checks_dimensions() {
    let model = TlsModel::reference();
    let frame = energy_frame(&model, &DensityMatrix::basis_state(2, 0).unwrap());
    let grid = TimeGrid::with_horizon(1e-2, 1.0).unwrap();
    assert!(build_problem_rotated(&frame, &DensityMatrix::maximally_mixed(3), &grid).is_err());
}
