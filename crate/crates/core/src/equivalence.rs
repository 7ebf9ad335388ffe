//! Numerical checks of the identities that relate kernels and forces of
//! different projectors.

use std::fmt;

use crate::grid::TimeGrid;
use crate::kernels::{KernelSamples, LaplacePoint, ProjectedSystem, QuantumSystem, SampleKind};
use crate::liouville::DensityMatrix;
use crate::projectors::ProjectorSpec;
use crate::solver::{solve_volterra, GqmeProblem, Trajectory};
use crate::{c, max_abs, CMatrix, CVector, Error, Pair, Result, Tolerances, C64};

/// Condition numbers above this mark a Laplace point as uninformative.
pub const BRACKET_CONDITION_LIMIT: f64 = 1e10;

/// Outcome of one identity check. `pass` holds iff `residual_max ≤ tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub name: String,
    pub residual_max: f64,
    pub residual_norm: f64,
    pub domain: String,
    pub tolerance: f64,
    pub pass: bool,
    /// Points excluded from the check, with the reason.
    pub skipped: Vec<String>,
}

impl IdentityReport {
    /// `residual_norm` is `√(w Σ r²)`; use `w = dt` for time series.
    pub fn from_residuals(name: &str, domain: String, residuals: &[f64], weight: f64, tolerance: f64) -> Self {
        let residual_max = residuals.iter().copied().fold(0.0, f64::max);
        let residual_norm = (weight * residuals.iter().map(|r| r * r).sum::<f64>()).sqrt();
        let nan = residuals.iter().any(|r| r.is_nan());
        Self {
            name: name.to_string(),
            residual_max: if nan { f64::NAN } else { residual_max },
            residual_norm,
            domain,
            tolerance,
            pass: !nan && residual_max <= tolerance,
            skipped: Vec::new(),
        }
    }
}

impl fmt::Display for IdentityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{}] {}: max {:.3e}, norm {:.3e}, tol {:.1e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.domain,
            self.residual_max,
            self.residual_norm,
            self.tolerance
        )?;
        if !self.skipped.is_empty() {
            write!(f, ", {} skipped", self.skipped.len())?;
        }
        Ok(())
    }
}

/// `G(t)` with `G(0) = 1`, solving `G' = −∫₀ᵗ K₁₁(t−τ) G(τ) dτ`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryG {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
}

fn grid_domain(grid: &TimeGrid) -> String {
    format!("t in [0, {}], dt = {}", grid.t_max(), grid.dt())
}

/// Trapezoid approximation of `∫₀^{t_j} f(τ) g(t_j − τ) dτ`.
pub fn discrete_convolution(f: &[C64], g: &[C64], grid: &TimeGrid) -> Result<Vec<C64>> {
    if f.len() != grid.len() || g.len() != grid.len() {
        return Err(Error::GridMismatch);
    }
    let dt = grid.dt();
    let mut out = Vec::with_capacity(f.len());
    out.push(C64::default());
    for j in 1..f.len() {
        let inner: C64 = (1..j).map(|k| f[k] * g[j - k]).sum();
        out.push((inner + (f[0] * g[j] + f[j] * g[0]) * 0.5) * dt);
    }
    Ok(out)
}

/// Trapezoid approximation of `∫₀^T e^{−zt} f(t) dt`.
pub fn laplace_transform_trapezoid(f: &[C64], grid: &TimeGrid, z: C64) -> Result<C64> {
    if f.len() != grid.len() {
        return Err(Error::GridMismatch);
    }
    let dt = grid.dt();
    let last = f.len() - 1;
    let sum: C64 = f
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let w = if j == 0 || j == last { 0.5 } else { 1.0 };
            (-z * grid.t(j)).exp() * x * w
        })
        .sum();
    Ok(sum * dt)
}

fn diagonal(samples: &KernelSamples, m: usize) -> Result<Vec<C64>> {
    samples
        .element((m, m), (m, m))
        .ok_or_else(|| Error::MalformedProblem(format!("samples lack the ({m},{m}) diagonal element")))
}

/// Residual of
///
/// `F_{m,m}(t; 𝓟⁰) − F_{m,m}(t; 𝓟⁰+𝓟¹) + ∫₀ᵗ F_{1,1}(τ; 𝓟⁰) F_{m,m}(t−τ; 𝓟⁰+𝓟¹) dτ`
///
/// for `m = 0, 1`. `f_single` holds forces computed under `𝓟⁰` over the
/// population pairs, `f_pair` those under `𝓟⁰ + 𝓟¹`.
pub fn check_f_convolution_identity(f_single: &KernelSamples, f_pair: &KernelSamples, tol: f64) -> Result<IdentityReport> {
    let grid = *f_single.grid();
    if f_pair.grid() != &grid {
        return Err(Error::GridMismatch);
    }
    if f_single.kind() != SampleKind::Force || f_pair.kind() != SampleKind::Force {
        return Err(Error::MalformedProblem("convolution identity needs force samples".into()));
    }
    let f11_single = diagonal(f_single, 1)?;
    let mut residuals = vec![0.0_f64; grid.len()];
    for m in 0..2 {
        let single = diagonal(f_single, m)?;
        let pair = diagonal(f_pair, m)?;
        let conv = discrete_convolution(&f11_single, &pair, &grid)?;
        for (j, r) in residuals.iter_mut().enumerate() {
            *r = r.max((single[j] - pair[j] + conv[j]).norm());
        }
    }
    Ok(IdentityReport::from_residuals("f_convolution", grid_domain(&grid), &residuals, grid.dt(), tol))
}

/// Recovers `G` from `K₁₁` of the pair projector with the Volterra solver,
/// then checks `K₀₀(t; 𝓟⁰) = K₀₀(t; 𝓟⁰+𝓟¹) + ∫₀ᵗ K₀₀(t−τ; 𝓟⁰+𝓟¹) G'(τ) dτ`.
pub fn check_kernel_relation_via_g(
    k_pair: &KernelSamples,
    k_single: &KernelSamples,
    tol: f64,
) -> Result<(AuxiliaryG, IdentityReport)> {
    let grid = *k_pair.grid();
    if k_single.grid() != &grid {
        return Err(Error::GridMismatch);
    }
    let k00 = diagonal(k_pair, 0)?;
    let k11 = diagonal(k_pair, 1)?;
    let target = diagonal(k_single, 0)?;

    let g = solve_g(&k11, &grid)?;
    let g_complex: Vec<C64> = g.iter().map(|&x| c(x)).collect();
    // G' = −K₁₁ * G, exactly as the solver discretizes it.
    let g_prime: Vec<C64> = discrete_convolution(&k11, &g_complex, &grid)?.into_iter().map(|x| -x).collect();
    let conv = discrete_convolution(&k00, &g_prime, &grid)?;
    let residuals: Vec<f64> = (0..grid.len()).map(|j| (k00[j] + conv[j] - target[j]).norm()).collect();
    let report = IdentityReport::from_residuals("kernel_relation", grid_domain(&grid), &residuals, grid.dt(), tol);
    Ok((AuxiliaryG { grid, values: g }, report))
}

/// `G' = −∫₀ᵗ K(t−τ) G(τ) dτ`, `G(0) = 1`.
pub fn solve_g(k11: &[C64], grid: &TimeGrid) -> Result<Vec<f64>> {
    let kernel = KernelSamples::scalar(*grid, SampleKind::Kernel, (1, 1), k11)?;
    let traj = solve_volterra(&GqmeProblem::homogeneous(kernel, vec![c(1.0)])?)?;
    Ok(traj.real(0))
}

/// Which side of the matrix Laplace identity is reconstructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaplaceForm {
    /// `F̃(𝓟⁰⁰) = F̃(𝓟⁰⁰+𝓟ˢ) [1 + F̃(𝓟⁰⁰+𝓟ˢ) − 𝐏⁰⁰ F̃(𝓟⁰⁰+𝓟ˢ)]⁻¹`.
    Direct,
    /// `F̃(𝓟⁰⁰+𝓟ˢ) = [1 − F̃(𝓟⁰⁰) + F̃(𝓟⁰⁰) 𝐏⁰⁰]⁻¹ F̃(𝓟⁰⁰)`.
    Inverted,
}

/// The two sides of the identity at one `z`: `small` computed under `𝓟⁰⁰`
/// and `full` under `𝓟⁰⁰ + 𝓟ˢ`, both over the full index set.
#[derive(Debug, Clone)]
pub struct LaplacePair {
    pub small: CMatrix,
    pub full: CMatrix,
    pub reference_position: usize,
}

pub fn laplace_pair(system: &QuantumSystem, spec_full: &ProjectorSpec, z: LaplacePoint) -> Result<LaplacePair> {
    let set: Vec<Pair> = spec_full.index_set().to_vec();
    let full = ProjectedSystem::new(system, spec_full.clone())?;
    let single = ProjectedSystem::new(system, spec_full.with_index_set(vec![(0, 0)])?)?;
    Ok(LaplacePair {
        small: single.laplace_forces(&set, &set, z)?,
        full: full.laplace_f_matrix(z)?,
        reference_position: spec_full.position((0, 0)).expect("validated spec contains (0,0)"),
    })
}

fn inverse_with_condition(m: &CMatrix) -> Option<(CMatrix, f64)> {
    let inv = m.clone().lu().try_inverse()?;
    let one = |x: &CMatrix| x.column_iter().map(|col| col.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    let cond = one(m) * one(&inv);
    cond.is_finite().then_some((inv, cond))
}

/// Relative residual of one form of the identity at one `z`, or `None` if
/// the bracket is too ill-conditioned to be informative.
pub fn laplace_identity_residual(pair: &LaplacePair, form: LaplaceForm) -> Option<f64> {
    let n = pair.full.nrows();
    let id = CMatrix::identity(n, n);
    let mut p00 = CMatrix::zeros(n, n);
    p00[(pair.reference_position, pair.reference_position)] = c(1.0);
    let (bracket, target) = match form {
        LaplaceForm::Direct => (&id + &pair.full - &p00 * &pair.full, &pair.small),
        LaplaceForm::Inverted => (&id - &pair.small + &pair.small * &p00, &pair.full),
    };
    let (inv, cond) = inverse_with_condition(&bracket)?;
    if cond > BRACKET_CONDITION_LIMIT {
        return None;
    }
    let rebuilt = match form {
        LaplaceForm::Direct => &pair.full * inv,
        LaplaceForm::Inverted => inv * &pair.small,
    };
    let scale = max_abs(target);
    let diff = max_abs(&(rebuilt - target));
    Some(if scale > 0.0 { diff / scale } else { diff })
}

pub fn check_matrix_laplace_identity(
    system: &QuantumSystem,
    spec_full: &ProjectorSpec,
    z_set: &[LaplacePoint],
    form: LaplaceForm,
    tol: f64,
) -> Result<IdentityReport> {
    let mut residuals = Vec::with_capacity(z_set.len());
    let mut skipped = Vec::new();
    for &z in z_set {
        let outcome = match laplace_pair(system, spec_full, z) {
            Ok(pair) => laplace_identity_residual(&pair, form).ok_or("ill-conditioned bracket".to_string()),
            Err(e @ (Error::SingularResolvent { .. } | Error::ResolventResidual { .. })) => Err(e.to_string()),
            Err(e) => return Err(e),
        };
        match outcome {
            Ok(r) => residuals.push(r),
            Err(reason) => skipped.push(format!("z = {}: {reason}", z.z())),
        }
    }
    let name = match form {
        LaplaceForm::Direct => "matrix_laplace",
        LaplaceForm::Inverted => "matrix_laplace_inverted",
    };
    let domain = format!("{} z points, index set {:?}", z_set.len(), spec_full.index_set());
    let mut report = IdentityReport::from_residuals(name, domain, &residuals, 1.0, tol);
    report.skipped = skipped;
    Ok(report)
}

/// `(1/z) (1 + F̃(z))⁻¹ σ(0)` over the projector's index set.
pub fn laplace_formal_solution(projected: &ProjectedSystem, z: LaplacePoint, rho0: &DensityMatrix) -> Result<CVector> {
    let leak = projected.complement_leak(rho0)?;
    if leak > Tolerances::default().projection_leak {
        return Err(Error::InhomogeneousInitialState(leak));
    }
    let f = projected.laplace_f_matrix(z)?;
    let n = f.nrows();
    let bracket = CMatrix::identity(n, n) + f;
    let (inv, cond) = inverse_with_condition(&bracket)
        .ok_or(Error::SingularResolvent { z: z.z(), condition: f64::INFINITY })?;
    if cond > BRACKET_CONDITION_LIMIT {
        return Err(Error::SingularResolvent { z: z.z(), condition: cond });
    }
    Ok(inv * projected.coordinates(rho0.matrix()) / z.z())
}

/// Max and L2 deviation over all shared variables of two trajectories.
pub fn compare_trajectories(a: &Trajectory, b: &Trajectory, tol: f64) -> Result<IdentityReport> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    let shared: Vec<(usize, usize)> = a
        .labels
        .iter()
        .enumerate()
        .filter_map(|(i, l)| b.labels.iter().position(|m| m == l).map(|k| (i, k)))
        .collect();
    if shared.is_empty() {
        return Err(Error::MalformedProblem("trajectories share no variable labels".into()));
    }
    let residuals: Vec<f64> = (0..a.grid.len())
        .map(|j| shared.iter().map(|&(i, k)| (a.values[i][j] - b.values[k][j]).norm()).fold(0.0, f64::max))
        .collect();
    let names: Vec<&str> = shared.iter().map(|&(i, _)| a.labels[i].as_str()).collect();
    let domain = format!("{} over {}", names.join(","), grid_domain(&a.grid));
    Ok(IdentityReport::from_residuals("compare", domain, &residuals, a.grid.dt(), tol))
}

/// Deviation of one trajectory variable from reference samples.
pub fn compare_to_reference(name: &str, traj: &Trajectory, label: &str, reference: &[f64], tol: f64) -> Result<IdentityReport> {
    let series = traj
        .series(label)
        .ok_or_else(|| Error::MalformedProblem(format!("trajectory has no variable `{label}`")))?;
    if reference.len() != series.len() {
        return Err(Error::GridMismatch);
    }
    let residuals: Vec<f64> = series.iter().zip(reference).map(|(y, r)| (y - c(*r)).norm()).collect();
    Ok(IdentityReport::from_residuals(name, grid_domain(&traj.grid), &residuals, traj.grid.dt(), tol))
}
