//! Volterra integro-differential solver and builders for the various
//! generalized master equations.
//!
//! Every problem has the form
//!
//! ```text
//! y'(t) = A y(t) + g(t) − ∫₀ᵗ K(τ) [y(t−τ) − c] dτ
//! ```
//!
//! with `A` a constant streaming matrix, `g` a drive, and `c` a constant
//! offset. The integral is discretized by the trapezoid rule and the time
//! stepping is the implicit trapezoid rule, solved exactly at every step.

use nalgebra::DVector;

use crate::grid::TimeGrid;
use crate::kernels::{
    closed_form_tls_kernels, KernelSamples, ProjectedSystem, QuantumSystem, SampleKind, TlsScheme,
};
use crate::liouville::{vectorize, DensityMatrix, GridPropagator, TlsModel};
use crate::projectors::RotationFrame;
use crate::{c, CMatrix, Error, Result, Tolerances, C64, I};

/// One master equation on a grid.
#[derive(Debug, Clone)]
pub struct GqmeProblem {
    pub grid: TimeGrid,
    pub kernel: KernelSamples,
    pub streaming: CMatrix,
    pub drive: Vec<Vec<C64>>,
    pub offset: Vec<C64>,
    pub initial: Vec<C64>,
    pub labels: Vec<String>,
}

fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("sigma{i}")).collect()
}

impl GqmeProblem {
    /// `y' = −∫K y` with default labels `sigma0, sigma1, …`.
    pub fn homogeneous(kernel: KernelSamples, initial: Vec<C64>) -> Result<Self> {
        let n = initial.len();
        let grid = *kernel.grid();
        let problem = Self {
            grid,
            kernel,
            streaming: CMatrix::zeros(n, n),
            drive: vec![vec![C64::default(); grid.len()]; n],
            offset: vec![C64::default(); n],
            initial,
            labels: default_labels(n),
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn with_drive(mut self, drive: Vec<Vec<C64>>) -> Result<Self> {
        self.drive = drive;
        self.validate()?;
        Ok(self)
    }

    pub fn with_offset(mut self, offset: Vec<C64>) -> Result<Self> {
        self.offset = offset;
        self.validate()?;
        Ok(self)
    }

    pub fn with_streaming(mut self, streaming: CMatrix) -> Result<Self> {
        self.streaming = streaming;
        self.validate()?;
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        self.labels = labels;
        self.validate()?;
        Ok(self)
    }

    pub fn unknowns(&self) -> usize {
        self.initial.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.unknowns();
        let bad = |what: &str| Err(Error::MalformedProblem(what.to_string()));
        if n == 0 {
            return bad("no unknowns");
        }
        if self.kernel.kind() != SampleKind::Kernel {
            return bad("kernel samples must be of kernel kind");
        }
        if self.kernel.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        if self.kernel.rows().len() != n || self.kernel.cols().len() != n {
            return bad("kernel index set does not match the number of unknowns");
        }
        if self.streaming.shape() != (n, n) {
            return bad("streaming matrix shape does not match the number of unknowns");
        }
        if self.drive.len() != n || self.drive.iter().any(|d| d.len() != self.grid.len()) {
            return bad("drive must hold one series per unknown, sampled on the grid");
        }
        if self.offset.len() != n || self.labels.len() != n {
            return bad("offset and labels must have one entry per unknown");
        }
        let finite = |z: &C64| z.re.is_finite() && z.im.is_finite();
        let all_finite = self.kernel.values().iter().all(|m| m.iter().all(finite))
            && self.streaming.iter().all(finite)
            && self.drive.iter().flatten().all(finite)
            && self.offset.iter().chain(&self.initial).all(finite);
        if !all_finite {
            return Err(Error::NonFinite);
        }
        Ok(())
    }
}

/// Solution samples, one series per unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub labels: Vec<String>,
    pub values: Vec<Vec<C64>>,
}

impl Trajectory {
    pub fn series(&self, label: &str) -> Option<&[C64]> {
        let i = self.labels.iter().position(|l| l == label)?;
        Some(&self.values[i])
    }

    pub fn real(&self, i: usize) -> Vec<f64> {
        self.values[i].iter().map(|z| z.re).collect()
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().flatten().map(|z| z.im.abs()).fold(0.0, f64::max)
    }
}

fn inf_norm(m: &CMatrix) -> f64 {
    m.row_iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn solve_volterra(problem: &GqmeProblem) -> Result<Trajectory> {
    problem.validate()?;
    let grid = problem.grid;
    let n = problem.unknowns();
    let dt = grid.dt();
    let len = grid.len();

    let k0 = problem.kernel.at(0);
    let guard = dt * inf_norm(k0);
    if guard >= 1.0 {
        return Err(Error::StabilityGuard(guard));
    }

    // Kernel flattened as [time][row][col] for the history sums.
    let mut kernel = Vec::with_capacity(len * n * n);
    for m in problem.kernel.values() {
        for i in 0..n {
            for k in 0..n {
                kernel.push(m[(i, k)]);
            }
        }
    }
    let a = &problem.streaming;
    let offset = DVector::from_column_slice(&problem.offset);
    let h2 = c(dt * dt / 4.0);
    let lhs = CMatrix::identity(n, n) - a * c(dt / 2.0) + k0 * h2;
    let lhs_inv = lhs
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("implicit step matrix is singular".into()))?;
    let k0_offset = k0 * &offset * h2;

    // u_j = y_j − c, stored flat as [time][unknown].
    let mut y: Vec<C64> = Vec::with_capacity(len * n);
    let mut u: Vec<C64> = Vec::with_capacity(len * n);
    y.extend_from_slice(&problem.initial);
    u.extend(problem.initial.iter().zip(&problem.offset).map(|(a, b)| a - b));

    let drive_at = |j: usize| DVector::from_fn(n, |i, _| problem.drive[i][j]);
    let y0 = DVector::from_column_slice(&problem.initial);
    // f_{j−1}: right-hand side at the previous grid point (no memory at t = 0).
    let mut f_prev = a * &y0 + drive_at(0);

    let mut history = vec![C64::default(); n];
    for j in 1..len {
        // S_j = dt [Σ_{k=1}^{j−1} K_k u_{j−k} + ½ K_j u_0].
        history.iter_mut().for_each(|s| *s = C64::default());
        for kk in 1..j {
            let kb = &kernel[kk * n * n..(kk + 1) * n * n];
            let ub = &u[(j - kk) * n..(j - kk + 1) * n];
            for (i, s) in history.iter_mut().enumerate() {
                let row = &kb[i * n..(i + 1) * n];
                *s += row.iter().zip(ub).map(|(x, y)| x * y).sum::<C64>();
            }
        }
        let kb = &kernel[j * n * n..(j + 1) * n * n];
        for (i, s) in history.iter_mut().enumerate() {
            let tail: C64 = kb[i * n..(i + 1) * n].iter().zip(&u[..n]).map(|(x, y)| x * y).sum();
            *s = (*s + tail * 0.5) * dt;
        }
        let s_j = DVector::from_column_slice(&history);
        let g_j = drive_at(j);
        let y_prev = DVector::from_column_slice(&y[(j - 1) * n..j * n]);

        let rhs = &y_prev + (&f_prev + &g_j - &s_j) * c(dt / 2.0) + &k0_offset;
        let y_j = &lhs_inv * rhs;
        let u_j = &y_j - &offset;
        // Memory at t_j including the implicit endpoint term.
        let z_j = &s_j + k0 * &u_j * c(dt / 2.0);
        f_prev = a * &y_j + g_j - z_j;

        y.extend(y_j.iter());
        u.extend(u_j.iter());
    }

    let values = (0..n).map(|i| (0..len).map(|j| y[j * n + i]).collect()).collect();
    Ok(Trajectory { grid, labels: problem.labels.clone(), values })
}

/// Cumulative trapezoid `∫₀^{t_j} f`.
pub fn cumulative_trapezoid(f: &[C64], dt: f64) -> Vec<C64> {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = C64::default();
    out.push(acc);
    for w in f.windows(2) {
        acc += (w[0] + w[1]) * (dt / 2.0);
        out.push(acc);
    }
    out
}

fn ensure_projected(projected: &ProjectedSystem, rho0: &DensityMatrix) -> Result<()> {
    let leak = projected.complement_leak(rho0)?;
    if leak > Tolerances::default().projection_leak {
        return Err(Error::InhomogeneousInitialState(leak));
    }
    Ok(())
}

/// Scalar equation for `σ₀` under `𝓟⁰` alone. Requires `𝓠 ρ₀ = 0`.
pub fn build_problem_single(system: &QuantumSystem, rho0: &DensityMatrix, grid: &TimeGrid) -> Result<GqmeProblem> {
    let projected = ProjectedSystem::with_index_set(system, vec![(0, 0)])?;
    ensure_projected(&projected, rho0)?;
    let kernel = projected.kernel_matrix(grid)?;
    let initial = projected.coordinates(rho0.matrix()).iter().copied().collect();
    GqmeProblem::homogeneous(kernel, initial)
}

/// Full projected equation over an arbitrary index set, including the
/// streaming term and the inhomogeneity `θ(t)` from `𝓠 ρ₀`.
pub fn build_problem_general(projected: &ProjectedSystem, rho0: &DensityMatrix, grid: &TimeGrid) -> Result<GqmeProblem> {
    let kernel = projected.kernel_matrix(grid)?;
    let theta = projected.theta(rho0, grid)?;
    let n = projected.spec().index_set().len();
    let drive = (0..n).map(|i| theta.series(i, 0)).collect();
    let initial = projected.coordinates(rho0.matrix()).iter().copied().collect();
    let labels = projected.spec().index_set().iter().map(|(m, k)| format!("sigma{m}{k}")).collect();
    GqmeProblem::homogeneous(kernel, initial)?
        .with_streaming(projected.streaming_matrix())?
        .with_drive(drive)?
        .with_labels(labels)
}

/// Scalar `σ₀` equation obtained from the pair `𝓟⁰ + 𝓟¹` of a two-level
/// system by eliminating `σ₁ = 1 − σ₀`: kernel `K₀₀ + K₁₁`, drive `∫K₁₁`.
pub fn build_problem_pair_reduced(system: &QuantumSystem, rho0: &DensityMatrix, grid: &TimeGrid) -> Result<GqmeProblem> {
    if system.system_dim() != 2 {
        return Err(Error::Unsupported(format!(
            "pair reduction eliminates sigma1 = 1 - sigma0 and needs system_dim = 2, got {}",
            system.system_dim()
        )));
    }
    let projected = ProjectedSystem::with_index_set(system, vec![(0, 0), (1, 1)])?;
    ensure_projected(&projected, rho0)?;
    let kernels = projected.kernel_matrix(grid)?;
    let sigma0 = projected.coordinates(rho0.matrix())[0];
    pair_reduced_from_kernels(&kernels, sigma0)
}

/// Pair reduction from a 2×2 population kernel matrix.
pub fn pair_reduced_from_kernels(kernels: &KernelSamples, sigma0: C64) -> Result<GqmeProblem> {
    if kernels.rows().len() != 2 || kernels.cols().len() != 2 {
        return Err(Error::MalformedProblem("pair reduction needs a 2x2 kernel matrix".into()));
    }
    let grid = *kernels.grid();
    let k11 = kernels.series(1, 1);
    let summed: Vec<C64> = kernels.series(0, 0).iter().zip(&k11).map(|(a, b)| a + b).collect();
    let kernel = KernelSamples::scalar(grid, SampleKind::Kernel, (0, 0), &summed)?;
    GqmeProblem::homogeneous(kernel, vec![sigma0])?.with_drive(vec![cumulative_trapezoid(&k11, grid.dt())])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintMethod {
    Constant,
    Oscillating,
}

/// Two-unknown `(σ₀₀, σ₁₁)` equation with closed-form constraint kernels,
/// starting from `σ₀₀ = 1`.
pub fn build_problem_constraint(model: &TlsModel, method: ConstraintMethod, grid: &TimeGrid) -> Result<GqmeProblem> {
    let scheme = match method {
        ConstraintMethod::Constant => TlsScheme::ConstraintConstant,
        ConstraintMethod::Oscillating => TlsScheme::ConstraintOscillating,
    };
    GqmeProblem::homogeneous(closed_form_tls_kernels(model, scheme, grid), vec![c(1.0), c(0.0)])
}

/// Kernel and inhomogeneity of the scalar equation in a rotation frame.
#[derive(Debug, Clone)]
pub struct RotatedTerms {
    pub kernel: Vec<C64>,
    pub theta: Vec<C64>,
    pub offset: f64,
    pub normalization: f64,
    pub initial: f64,
}

pub fn rotated_terms(frame: &RotationFrame, rho0: &DensityMatrix, grid: &TimeGrid) -> Result<RotatedTerms> {
    if rho0.dim() != frame.dim() {
        return Err(Error::DimensionMismatch { expected: frame.dim(), found: rho0.dim() });
    }
    let lp = frame.rotated_liouvillian();
    let n = lp.nrows();
    let streaming = lp[(0, 0)];
    if streaming.norm() > 1e-10 * crate::max_abs(lp).max(1.0) {
        return Err(Error::Numerical(format!("rotated streaming term {streaming} does not vanish")));
    }
    let mut q0 = CMatrix::identity(n, n);
    q0[(0, 0)] = c(0.0);
    let x0 = frame.rotation() * vectorize(rho0.matrix()).as_vector();

    let mut sources = CMatrix::zeros(n, 2);
    sources.set_column(0, &(&q0 * lp.column(0)));
    sources.set_column(1, &(&q0 * &x0));
    let row = lp.row(0).into_owned();
    let propagator = GridPropagator::new(&(&q0 * lp * (-I)), grid.dt())?;
    let mut kernel = Vec::with_capacity(grid.len());
    let mut theta = Vec::with_capacity(grid.len());
    propagator.sweep(sources, grid.n_steps(), |_, x| {
        let r = &row * x;
        kernel.push(r[(0, 0)]);
        theta.push(r[(0, 1)] * (-I));
    });

    Ok(RotatedTerms {
        kernel,
        theta,
        offset: frame.charge_offset(rho0.matrix()),
        normalization: frame.normalization(),
        initial: frame.observable().expectation(rho0.matrix()),
    })
}

/// Scalar `σ₀` equation in a conserved-charge frame: drive `𝒩θ(t)` and
/// memory acting on `σ₀ − Σ_k q_k Tr(O C⁽ᵏ⁾)`.
pub fn build_problem_rotated(frame: &RotationFrame, rho0: &DensityMatrix, grid: &TimeGrid) -> Result<GqmeProblem> {
    let terms = rotated_terms(frame, rho0, grid)?;
    let kernel = KernelSamples::scalar(*grid, SampleKind::Kernel, (0, 0), &terms.kernel)?;
    let drive = terms.theta.iter().map(|t| t * terms.normalization).collect();
    GqmeProblem::homogeneous(kernel, vec![c(terms.initial)])?
        .with_drive(vec![drive])?
        .with_offset(vec![c(terms.offset)])
}
