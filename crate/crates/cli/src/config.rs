//! JSON experiment configs and their resolution into library objects.

use std::fmt;

use nzkl::kernels::QuantumSystem;
use nzkl::liouville::{DensityMatrix, HermitianOperator, TlsModel};
use nzkl::{random, CMatrix, Pair, TimeGrid, C64};
use serde::Deserialize;

use crate::names::{CheckName, Scheme};

/// Largest `system_dim · bath_dim` accepted from a config.
pub const MAX_TOTAL_DIM: usize = 16;

pub const FIG1_PRESET: &str = include_str!("../presets/fig1.json");

/// Schema or validation error, located by a dotted field path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn at(path: &str, message: impl fmt::Display) -> Self {
        Self { path: path.to_string(), message: message.to_string() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "config: {}", self.message)
        } else {
            write!(f, "config field `{}`: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

/// A complex number written as `[re, im]`.
pub type Entry = [f64; 2];

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub initial_state: InitialState,
    #[serde(default)]
    pub projector: ProjectorConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub checks: Vec<CheckName>,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Tls(TlsConfig),
    General(GeneralConfig),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TlsConfig {
    pub epsilon: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneralConfig {
    pub system_dim: usize,
    #[serde(default = "one")]
    pub bath_dim: usize,
    /// Row-major `[re, im]` entries; drawn from `seed` when absent.
    #[serde(default)]
    pub hamiltonian: Option<Vec<Entry>>,
    /// Row-major bath reference state; maximally mixed when absent.
    #[serde(default)]
    pub bath_ref: Option<Vec<Entry>>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum InitialState {
    /// A named preset; only `"ket0"` (`|0⟩⟨0| ⊗ ρ_B`) exists.
    Named(String),
    /// Row-major entries of either a system state (tensored with the bath
    /// reference) or a full system ⊗ bath state.
    Entries(Vec<Entry>),
}

impl Default for InitialState {
    fn default() -> Self {
        Self::Named("ket0".into())
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectorConfig {
    /// Pairs `[m, n]`; all populations when absent.
    #[serde(default)]
    pub index_set: Option<Vec<Pair>>,
    #[serde(default)]
    pub bath_ref: Option<Vec<Entry>>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dt: f64,
    pub t_max: f64,
}

/// Per-check tolerance overrides.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    pub f_convolution: Option<f64>,
    pub kernel_relation: Option<f64>,
    pub matrix_laplace: Option<f64>,
    pub laplace_solution: Option<f64>,
    pub sum_rule: Option<f64>,
    pub exact_dynamics: Option<f64>,
    pub compare: Option<f64>,
}

impl ToleranceConfig {
    pub fn for_check(&self, check: CheckName) -> f64 {
        let value = match check {
            CheckName::FConvolution => self.f_convolution,
            CheckName::KernelRelation => self.kernel_relation,
            CheckName::MatrixLaplace => self.matrix_laplace,
            CheckName::LaplaceSolution => self.laplace_solution,
            CheckName::SumRule => self.sum_rule,
            CheckName::ExactDynamics => self.exact_dynamics,
        };
        value.unwrap_or(check.default_tolerance())
    }

    pub fn compare(&self) -> f64 {
        self.compare.unwrap_or(1e-4)
    }

    /// Sets every tolerance to `tol`.
    pub fn uniform(tol: f64) -> Self {
        let t = Some(tol);
        Self {
            f_convolution: t,
            kernel_relation: t,
            matrix_laplace: t,
            laplace_solution: t,
            sum_rule: t,
            exact_dynamics: t,
            compare: t,
        }
    }
}

/// Parses a config, reporting schema violations with their field path.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError { path, message: e.into_inner().to_string() }
    })
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

/// A validated experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub system: QuantumSystem,
    /// Present for two-level models.
    pub tls: Option<TlsModel>,
    pub rho0: DensityMatrix,
    /// Whether `rho0` is the `ket0` preset.
    pub ket0: bool,
    pub index_set: Vec<Pair>,
    pub grid: TimeGrid,
    pub scheme: Scheme,
    pub checks: Vec<CheckName>,
    pub tolerances: ToleranceConfig,
    pub seed: u64,
}

fn entries_matrix(path: &str, entries: &[Entry], d: usize) -> Result<CMatrix, ConfigError> {
    if entries.len() != d * d {
        return Err(ConfigError::at(path, format!("expected {} entries for a {d}x{d} matrix, got {}", d * d, entries.len())));
    }
    Ok(CMatrix::from_row_iterator(d, d, entries.iter().map(|[re, im]| C64::new(*re, *im))))
}

fn density(path: &str, entries: &[Entry], d: usize) -> Result<DensityMatrix, ConfigError> {
    DensityMatrix::new(entries_matrix(path, entries, d)?).map_err(|e| ConfigError::at(path, e))
}

/// Square root of `n` if it is a perfect square.
fn side(n: usize) -> Option<usize> {
    let d = (n as f64).sqrt().round() as usize;
    (d * d == n).then_some(d)
}

impl ExperimentConfig {
    pub fn resolve(&self, overrides: &Overrides) -> Result<Experiment, ConfigError> {
        let seed = overrides.seed.unwrap_or(self.seed);
        let (hamiltonian, system_dim, model_bath, tls) = match &self.model {
            ModelConfig::Tls(TlsConfig { epsilon, delta }) => {
                if !(epsilon.is_finite() && delta.is_finite()) {
                    return Err(ConfigError::at("model.tls", "epsilon and delta must be finite"));
                }
                let model = TlsModel::new(*epsilon, *delta);
                (model.hamiltonian(), 2, DensityMatrix::maximally_mixed(1), Some(model))
            }
            ModelConfig::General(g) => {
                if g.system_dim == 0 || g.bath_dim == 0 {
                    return Err(ConfigError::at("model.general", "system_dim and bath_dim must be positive"));
                }
                let total = g.system_dim.saturating_mul(g.bath_dim);
                if total > MAX_TOTAL_DIM {
                    return Err(ConfigError::at(
                        "model.general",
                        format!("system_dim * bath_dim = {total} exceeds the limit {MAX_TOTAL_DIM}"),
                    ));
                }
                let h = match &g.hamiltonian {
                    Some(entries) => {
                        let path = "model.general.hamiltonian";
                        HermitianOperator::new(entries_matrix(path, entries, total)?).map_err(|e| ConfigError::at(path, e))?
                    }
                    None => random::random_hermitian(total, &mut random::seeded(seed)),
                };
                let bath = match &g.bath_ref {
                    Some(entries) => density("model.general.bath_ref", entries, g.bath_dim)?,
                    None => DensityMatrix::maximally_mixed(g.bath_dim),
                };
                (h, g.system_dim, bath, None)
            }
        };
        let bath = match &self.projector.bath_ref {
            Some(entries) => density("projector.bath_ref", entries, model_bath.dim())?,
            None => model_bath,
        };
        let system = QuantumSystem::new(hamiltonian, system_dim, bath).map_err(|e| ConfigError::at("model", e))?;

        let (rho0, ket0) = match &self.initial_state {
            InitialState::Named(name) if name == "ket0" => (system.reference_state(), true),
            InitialState::Named(name) => {
                return Err(ConfigError::at("initial_state", format!("unknown preset `{name}` (expected: ket0)")))
            }
            InitialState::Entries(entries) => {
                let path = "initial_state";
                match side(entries.len()) {
                    Some(d) if d == system_dim => {
                        (system.factorized(&density(path, entries, d)?).map_err(|e| ConfigError::at(path, e))?, false)
                    }
                    Some(d) if d == system.total_dim() => (density(path, entries, d)?, false),
                    _ => {
                        return Err(ConfigError::at(
                            path,
                            format!(
                                "expected {} (system) or {} (system x bath) entries, got {}",
                                system_dim * system_dim,
                                system.total_dim() * system.total_dim(),
                                entries.len()
                            ),
                        ))
                    }
                }
            }
        };
        let tls = tls.map(|m| m.with_initial_state(&rho0));

        let index_set = self.projector.index_set.clone().unwrap_or_else(|| (0..system_dim).map(|m| (m, m)).collect());
        nzkl::projectors::ProjectorSpec::new(system_dim, index_set.clone(), system.bath_ref().clone())
            .map_err(|e| ConfigError::at("projector.index_set", e))?;

        let dt = overrides.dt.unwrap_or(self.grid.dt);
        let t_max = overrides.t_max.unwrap_or(self.grid.t_max);
        let grid = TimeGrid::with_horizon(dt, t_max).map_err(|e| ConfigError::at("grid", e))?;

        let mut tolerances = self.tolerances;
        if let Some(tol) = overrides.tol {
            if !(tol.is_finite() && tol >= 0.0) {
                return Err(ConfigError::at("tol", "tolerance must be finite and non-negative"));
            }
            tolerances = ToleranceConfig::uniform(tol);
        }
        for (name, value) in [
            ("f_convolution", tolerances.f_convolution),
            ("kernel_relation", tolerances.kernel_relation),
            ("matrix_laplace", tolerances.matrix_laplace),
            ("laplace_solution", tolerances.laplace_solution),
            ("sum_rule", tolerances.sum_rule),
            ("exact_dynamics", tolerances.exact_dynamics),
            ("compare", tolerances.compare),
        ] {
            if value.is_some_and(|v| !(v.is_finite() && v >= 0.0)) {
                return Err(ConfigError::at(&format!("tolerances.{name}"), "must be finite and non-negative"));
            }
        }

        Ok(Experiment {
            system,
            tls,
            rho0,
            ket0,
            index_set,
            grid,
            scheme: self.scheme,
            checks: self.checks.clone(),
            tolerances,
            seed,
        })
    }
}
