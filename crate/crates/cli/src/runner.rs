//! Computations behind each subcommand, returning tables and reports.

use std::fmt;

use nzkl::equivalence::{
    check_f_convolution_identity, check_kernel_relation_via_g, check_matrix_laplace_identity, compare_to_reference,
    compare_trajectories, laplace_formal_solution, IdentityReport, LaplaceForm,
};
use nzkl::kernels::{closed_form_tls_kernels, LaplacePoint, ProjectedSystem, TlsScheme};
use nzkl::liouville::{build_liouvillian, exact_expectation_series, TlsModel};
use nzkl::projectors::{build_rotation_frame, find_conserved_charges, orthonormalize_charges, ProjectorSpec};
use nzkl::solver::{
    build_problem_constraint, build_problem_general, build_problem_pair_reduced, build_problem_rotated, rotated_terms,
    solve_volterra, ConstraintMethod, Trajectory,
};
use nzkl::{Error, Pair, TimeGrid, Tolerances};

use crate::config::{ConfigError, Experiment};
use crate::names::{CheckName, Scheme};
use crate::output::Table;

/// Failure of a command, split by exit code.
#[derive(Debug)]
pub enum RunError {
    /// Invalid config or a request the model cannot serve (exit 2).
    Config(ConfigError),
    Usage(String),
    /// Numerical breakdown (exit 1).
    Numerical(Error),
    Io(std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) | RunError::Usage(_) => 2,
            RunError::Numerical(_) | RunError::Io(_) => 1,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Usage(msg) => write!(f, "usage: {msg}"),
            RunError::Numerical(e) => write!(f, "numerical failure: {e}"),
            RunError::Io(e) => write!(f, "i/o: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            // Preconditions of the requested computation rather than numerics.
            Error::Unsupported(_) | Error::InhomogeneousInitialState(_) => RunError::Usage(e.to_string()),
            e => RunError::Numerical(e),
        }
    }
}

pub type RunResult<T> = Result<T, RunError>;

fn pair_name((m, n): Pair) -> String {
    format!("{m}-{n}")
}

fn populations(d: usize) -> Vec<Pair> {
    (0..d).map(|m| (m, m)).collect()
}

/// A solved scheme plus the data written next to it.
#[derive(Debug, Clone)]
pub struct SchemeRun {
    pub scheme: Scheme,
    pub trajectory: Trajectory,
    /// Variables that are coherences and get an imaginary-part column.
    pub complex: Vec<bool>,
    /// Rotated-frame inhomogeneity.
    pub theta: Option<Vec<f64>>,
}

/// `⟨|0⟩⟨0| ⊗ 1⟩(t)` by exact unitary evolution.
pub fn exact_population(exp: &Experiment, grid: &TimeGrid) -> RunResult<Vec<f64>> {
    let obs = exp.system.observable(0)?;
    Ok(exact_expectation_series(exp.system.hamiltonian(), &exp.rho0, &obs, grid))
}

fn relabel_reference(mut traj: Trajectory, set: &[Pair]) -> Trajectory {
    if let Some(i) = set.iter().position(|&p| p == (0, 0)) {
        traj.labels[i] = "sigma0".into();
    }
    traj
}

fn general(exp: &Experiment, set: Vec<Pair>) -> RunResult<(Trajectory, Vec<bool>)> {
    let projected = ProjectedSystem::with_index_set(&exp.system, set.clone())?;
    let traj = solve_volterra(&build_problem_general(&projected, &exp.rho0, &exp.grid)?)?;
    Ok((relabel_reference(traj, &set), set.iter().map(|(m, n)| m != n).collect()))
}

fn tls_with_ket0(exp: &Experiment, scheme: Scheme) -> RunResult<TlsModel> {
    match exp.tls {
        Some(model) if exp.ket0 => Ok(model),
        _ => Err(RunError::Usage(format!("scheme `{scheme}` needs a tls model prepared in ket0"))),
    }
}

pub fn solve_scheme(exp: &Experiment, scheme: Scheme) -> RunResult<SchemeRun> {
    let mut theta = None;
    let (trajectory, complex) = match scheme {
        Scheme::ProjectedSingle => general(exp, vec![(0, 0)])?,
        Scheme::ProjectedPair => {
            let pair = populations(2);
            let projected = exp.system.system_dim() == 2 && exp.index_set == pair && {
                let p = ProjectedSystem::with_index_set(&exp.system, pair.clone())?;
                p.complement_leak(&exp.rho0)? <= Tolerances::default().projection_leak
            };
            if projected {
                let traj = solve_volterra(&build_problem_pair_reduced(&exp.system, &exp.rho0, &exp.grid)?)?;
                (traj, vec![false])
            } else {
                general(exp, exp.index_set.clone())?
            }
        }
        Scheme::ConstraintConstant | Scheme::ConstraintOscillating => {
            let model = tls_with_ket0(exp, scheme)?;
            let method = if scheme == Scheme::ConstraintConstant {
                ConstraintMethod::Constant
            } else {
                ConstraintMethod::Oscillating
            };
            (solve_volterra(&build_problem_constraint(&model, method, &exp.grid)?)?, vec![false, false])
        }
        Scheme::Rotated => {
            let h = exp.system.hamiltonian();
            let charges = orthonormalize_charges(&find_conserved_charges(h, usize::MAX), &exp.rho0)?;
            let obs = exp.system.observable(0)?;
            let frame = build_rotation_frame(&charges, &obs, &build_liouvillian(h))?;
            let terms = rotated_terms(&frame, &exp.rho0, &exp.grid)?;
            theta = Some(terms.theta.iter().map(|z| z.re).collect());
            let mut traj = solve_volterra(&build_problem_rotated(&frame, &exp.rho0, &exp.grid)?)?;
            traj.labels[0] = "sigma0".into();
            (traj, vec![false])
        }
    };
    Ok(SchemeRun { scheme, trajectory, complex, theta })
}

/// `t`, one column per variable (real part, plus `_im` for coherences),
/// `exact`, and `theta` for the rotated scheme.
pub fn trajectory_table(exp: &Experiment, run: &SchemeRun) -> RunResult<Table> {
    let traj = &run.trajectory;
    let mut table = Table::new(&traj.grid);
    for (i, label) in traj.labels.iter().enumerate() {
        table.push(label.clone(), traj.real(i));
        if run.complex[i] {
            table.push(format!("{label}_im"), traj.values[i].iter().map(|z| z.im).collect());
        }
    }
    table.push("exact", exact_population(exp, &traj.grid)?);
    if let Some(theta) = &run.theta {
        table.push("theta", theta.clone());
    }
    Ok(table)
}

/// Kernel matrix over the configured index set, columns `K_<a>_<b>`.
pub fn kernel_table(exp: &Experiment) -> RunResult<Table> {
    let projected = ProjectedSystem::with_index_set(&exp.system, exp.index_set.clone())?;
    let k = projected.kernel_matrix(&exp.grid)?;
    let complex = exp.index_set.iter().any(|(m, n)| m != n);
    let mut table = Table::new(&exp.grid);
    for (i, &a) in k.rows().iter().enumerate() {
        for (j, &b) in k.cols().iter().enumerate() {
            let name = format!("K_{}_{}", pair_name(a), pair_name(b));
            let series = k.series(i, j);
            table.push(name.clone(), series.iter().map(|z| z.re).collect());
            if complex {
                table.push(format!("{name}_im"), series.iter().map(|z| z.im).collect());
            }
        }
    }
    Ok(table)
}

fn require_two_levels(exp: &Experiment, check: CheckName) -> RunResult<()> {
    if exp.system.system_dim() != 2 {
        return Err(RunError::Usage(format!(
            "check `{check}` relates the two population projectors and needs system_dim = 2"
        )));
    }
    Ok(())
}

fn failed_report(check: CheckName, tol: f64, error: &Error) -> IdentityReport {
    let mut r = IdentityReport::from_residuals(check.name(), format!("error: {error}"), &[f64::NAN], 1.0, tol);
    r.pass = false;
    r
}

/// Runs one check. Precondition violations are usage errors; numerical
/// breakdowns become failing reports.
pub fn run_check(exp: &Experiment, check: CheckName) -> RunResult<Vec<IdentityReport>> {
    let tol = exp.tolerances.for_check(check);
    let result = check_reports(exp, check, tol);
    match result {
        Ok(reports) => Ok(reports),
        Err(RunError::Numerical(e)) => Ok(vec![failed_report(check, tol, &e)]),
        Err(e) => Err(e),
    }
}

fn check_reports(exp: &Experiment, check: CheckName, tol: f64) -> RunResult<Vec<IdentityReport>> {
    let sys = &exp.system;
    let grid = &exp.grid;
    let reports = match check {
        CheckName::FConvolution => {
            require_two_levels(exp, check)?;
            let pops = populations(2);
            let single = ProjectedSystem::with_index_set(sys, vec![(0, 0)])?.force_samples(&pops, &pops, grid)?;
            let pair = ProjectedSystem::with_index_set(sys, pops)?.force_matrix(grid)?;
            vec![check_f_convolution_identity(&single, &pair, tol)?]
        }
        CheckName::KernelRelation => {
            require_two_levels(exp, check)?;
            let single = ProjectedSystem::with_index_set(sys, vec![(0, 0)])?.kernel_matrix(grid)?;
            let pair = ProjectedSystem::with_index_set(sys, populations(2))?.kernel_matrix(grid)?;
            vec![check_kernel_relation_via_g(&pair, &single, tol)?.1]
        }
        CheckName::MatrixLaplace => {
            let spec = ProjectorSpec::new(sys.system_dim(), exp.index_set.clone(), sys.bath_ref().clone())?;
            let z_set = LaplacePoint::default_set();
            [LaplaceForm::Direct, LaplaceForm::Inverted]
                .into_iter()
                .map(|form| {
                    let mut r = check_matrix_laplace_identity(sys, &spec, &z_set, form, tol)?;
                    // Nothing checked is not a pass.
                    r.pass &= r.skipped.len() < z_set.len();
                    Ok(r)
                })
                .collect::<nzkl::Result<Vec<_>>>()?
        }
        CheckName::LaplaceSolution => {
            let single = ProjectedSystem::with_index_set(sys, vec![(0, 0)])?;
            let full = ProjectedSystem::with_index_set(sys, exp.index_set.clone())?;
            let position = exp.index_set.iter().position(|&p| p == (0, 0)).expect("validated index set");
            let z_set = LaplacePoint::default_set();
            let mut residuals = Vec::with_capacity(z_set.len());
            for z in z_set.iter().copied() {
                let a = laplace_formal_solution(&single, z, &exp.rho0)?[0];
                let b = laplace_formal_solution(&full, z, &exp.rho0)?[position];
                residuals.push((a - b).norm() / a.norm().max(f64::MIN_POSITIVE));
            }
            let domain = format!("{} z points, index set {:?}", z_set.len(), exp.index_set);
            vec![IdentityReport::from_residuals("laplace_solution", domain, &residuals, 1.0, tol)]
        }
        CheckName::SumRule => {
            let k = ProjectedSystem::with_index_set(sys, populations(sys.system_dim()))?.kernel_matrix(grid)?;
            let scale = k.max_abs().max(1.0);
            let residuals: Vec<f64> = k
                .values()
                .iter()
                .map(|m| m.column_iter().map(|c| c.iter().sum::<nzkl::C64>().norm() / scale).fold(0.0, f64::max))
                .collect();
            let domain = format!("t in [0, {}], dt = {}", grid.t_max(), grid.dt());
            vec![IdentityReport::from_residuals("sum_rule", domain, &residuals, grid.dt(), tol)]
        }
        CheckName::ExactDynamics => {
            let run = solve_scheme(exp, exp.scheme)?;
            let exact = exact_population(exp, grid)?;
            let mut r = compare_to_reference("exact_dynamics", &run.trajectory, "sigma0", &exact, tol)?;
            r.domain = format!("{}: {}", exp.scheme, r.domain);
            vec![r]
        }
    };
    Ok(reports)
}

pub fn run_checks(exp: &Experiment, checks: &[CheckName]) -> RunResult<Vec<IdentityReport>> {
    let mut out = Vec::new();
    for &check in checks {
        out.extend(run_check(exp, check)?);
    }
    Ok(out)
}

/// Both schemes, their deviation table and the comparison report.
pub fn compare_schemes(exp: &Experiment, a: Scheme, b: Scheme) -> RunResult<(Table, IdentityReport)> {
    let ra = solve_scheme(exp, a)?;
    let rb = solve_scheme(exp, b)?;
    let mut report = compare_trajectories(&ra.trajectory, &rb.trajectory, exp.tolerances.compare())?;
    report.name = format!("compare {a} vs {b}");
    let sa = ra.trajectory.real(0);
    let sb = rb.trajectory.real(0);
    let mut table = Table::new(&exp.grid);
    table.push(format!("sigma0_{a}"), sa.clone());
    table.push(format!("sigma0_{b}"), sb.clone());
    table.push("deviation", sa.iter().zip(&sb).map(|(x, y)| (x - y).abs()).collect());
    Ok((table, report))
}

/// Canonical two-level reproduction.
#[derive(Debug, Clone)]
pub struct Fig1 {
    /// `t, K, K1, K0`.
    pub kernels: Table,
    /// `t, sigma0, sigma0_pair, exact`.
    pub dynamics: Table,
    pub reports: Vec<IdentityReport>,
}

pub fn fig1(model: &TlsModel, grid: &TimeGrid) -> RunResult<Fig1> {
    let sys = nzkl::kernels::QuantumSystem::from(model);
    let k_single = ProjectedSystem::with_index_set(&sys, vec![(0, 0)])?.kernel_matrix(grid)?;
    let k_pair = ProjectedSystem::with_index_set(&sys, populations(2))?.kernel_matrix(grid)?;
    let k = k_single.real_series(0, 0);
    let k1 = k_pair.real_series(1, 1);
    let k0: Vec<f64> = k_pair.real_series(0, 0).iter().zip(&k1).map(|(a, b)| a + b).collect();
    let mut kernels = Table::new(grid);
    kernels.push("K", k.clone());
    kernels.push("K1", k1.clone());
    kernels.push("K0", k0);

    let closed_single = closed_form_tls_kernels(model, TlsScheme::ProjectedSingle, grid).real_series(0, 0);
    let closed_pair = closed_form_tls_kernels(model, TlsScheme::ProjectedPair, grid).real_series(1, 1);
    let dev = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect::<Vec<_>>();
    let domain = format!("t in [0, {}], dt = {}", grid.t_max(), grid.dt());
    let mut reports = vec![
        IdentityReport::from_residuals("kernel K closed form", domain.clone(), &dev(&k, &closed_single), grid.dt(), 1e-8),
        IdentityReport::from_residuals("kernel K1 closed form", domain, &dev(&k1, &closed_pair), grid.dt(), 1e-8),
    ];

    let rho0 = sys.reference_state();
    let single = solve_volterra(&build_problem_general(
        &ProjectedSystem::with_index_set(&sys, vec![(0, 0)])?,
        &rho0,
        grid,
    )?)?;
    let pair = solve_volterra(&build_problem_pair_reduced(&sys, &rho0, grid)?)?;
    let exact: Vec<f64> = grid.points().map(|t| model.population(t)).collect();
    let single = relabel_reference(single, &[(0, 0)]);
    reports.push(compare_to_reference("sigma0 single vs exact", &single, "sigma0", &exact, 1e-4)?);
    reports.push(compare_to_reference("sigma0 pair vs exact", &pair, "sigma0", &exact, 1e-4)?);

    let mut dynamics = Table::new(grid);
    dynamics.push("sigma0", single.real(0));
    dynamics.push("sigma0_pair", pair.real(0));
    dynamics.push("exact", exact);
    Ok(Fig1 { kernels, dynamics, reports })
}
