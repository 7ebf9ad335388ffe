use crate::{Error, Result};

/// Uniform grid `t_j = j·dt`, `j = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, n_steps: usize) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidGrid(format!("dt must be positive and finite, got {dt}")));
        }
        if n_steps == 0 {
            return Err(Error::InvalidGrid("n_steps must be at least 1".into()));
        }
        Ok(Self { dt, n_steps })
    }

    /// Grid covering `[0, t_max]`, with `t_max` rounded to the nearest multiple of `dt`.
    pub fn with_horizon(dt: f64, t_max: f64) -> Result<Self> {
        if !(t_max.is_finite() && dt.is_finite() && dt > 0.0 && t_max >= dt) {
            return Err(Error::InvalidGrid(format!(
                "need 0 < dt <= t_max, got dt = {dt}, t_max = {t_max}"
            )));
        }
        let steps = (t_max / dt).round();
        if steps > 1e8 {
            return Err(Error::InvalidGrid(format!("{steps} steps is beyond desk scale")));
        }
        Self::new(dt, steps as usize)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of sample points, `n_steps + 1`.
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }

    pub fn t_max(&self) -> f64 {
        self.t(self.n_steps)
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|j| self.t(j))
    }

    /// Same horizon with half the step.
    pub fn refined(&self) -> Self {
        Self { dt: self.dt / 2.0, n_steps: self.n_steps * 2 }
    }
}
