//! Sampler schedules: baseline grids and loss-adaptive schedules (LAS).
//!
//! LAS picks `K + 1` increasing indices from a candidate set of SNRs,
//! pinned at the first and last candidate, minimizing
//!
//! ```text
//! Σ_k (η_{i_k} − η_{i_{k−1}}) L(i_{k−1})  +  α Σ_{k≥2} (h_k − h_{k−1})²
//! ```
//!
//! where `η(γ) = γ/(1 + λ²γ)` is the regularized SNR axis and
//! `h_k = ln γ_{i_k} − ln γ_{i_{k−1}}`. With `α = 0` the problem is a
//! shortest path on a DAG and [`las_exact`] solves it exactly; with `α > 0`
//! [`las_beam`] runs the beam-and-window DP over index pairs.

mod grids;
mod io;
mod las;

pub use grids::{grid_edm, grid_geometric, grid_time_uniform};
pub use io::{emit_timesteps, parse_timesteps};
pub use las::{las, las_beam, las_exact, schedule_objective};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SnrGrid;
use crate::loss::LossProfile;

/// Default SNR-axis regularization.
pub const DEFAULT_LAMBDA: f64 = 1.5;

/// Regularized SNR axis `γ/(1 + λ²γ)`; saturates at `1/λ²`.
pub fn eta_axis(gamma: f64, lambda: f64) -> f64 {
    gamma / (1.0 + lambda * lambda * gamma)
}

/// Parameters of the LAS search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LasConfig {
    /// Number of steps `K`.
    pub steps: usize,
    pub lambda: f64,
    /// Smoothness weight; zero selects the exact first-order DP.
    pub alpha: f64,
    /// States kept per endpoint.
    pub beam: usize,
    /// Window radius around the predicted next index.
    pub window: usize,
    /// Evenly spaced global candidates added to every window.
    pub extra: usize,
}

impl LasConfig {
    pub fn new(steps: usize) -> Self {
        Self {
            steps,
            lambda: DEFAULT_LAMBDA,
            alpha: 0.0,
            beam: 16,
            window: 4,
            extra: 2,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_beam(mut self, beam: usize, window: usize, extra: usize) -> Self {
        self.beam = beam;
        self.window = window;
        self.extra = extra;
        self
    }

    pub(crate) fn validate(&self, n: usize) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if self.beam == 0 || self.window == 0 {
            return Err(Error::InvalidConfig("beam and window must be >= 1".into()));
        }
        if self.steps == 0 {
            return Err(Error::Infeasible("K must be at least 1".into()));
        }
        if n < self.steps + 1 {
            return Err(Error::Infeasible(format!(
                "{} candidates cannot host {} steps",
                n, self.steps
            )));
        }
        Ok(())
    }
}

/// Candidate SNRs with their `x₀` risks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    gammas: Vec<f64>,
    risks: Vec<f64>,
}

impl CandidateSet {
    pub fn new(gammas: Vec<f64>, risks: Vec<f64>) -> Result<Self> {
        if gammas.len() != risks.len() {
            return Err(Error::InvalidConfig("one risk per candidate required".into()));
        }
        if gammas.len() < 2 {
            return Err(Error::Infeasible("need at least two candidates".into()));
        }
        if gammas[0] <= 0.0 || gammas.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidGrid("candidate SNRs must be positive".into()));
        }
        if gammas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("candidate SNRs must strictly increase".into()));
        }
        if risks.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return Err(Error::InvalidConfig("risks must be finite and >= 0".into()));
        }
        Ok(Self { gammas, risks })
    }

    /// Uses the profile's own knots (converted to `x₀` risk) as candidates,
    /// keeping only those inside `endpoints` when given.
    pub fn from_profile(profile: &LossProfile, endpoints: Option<(f64, f64)>) -> Result<Self> {
        let (gammas, risks): (Vec<f64>, Vec<f64>) = profile
            .gammas()
            .into_iter()
            .zip(profile.x0_losses())
            .filter(|(g, _)| endpoints.is_none_or(|(lo, hi)| *g >= lo && *g <= hi))
            .unzip();
        Self::new(gammas, risks)
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn risks(&self) -> &[f64] {
        &self.risks
    }

    pub fn etas(&self, lambda: f64) -> Vec<f64> {
        self.gammas.iter().map(|g| eta_axis(*g, lambda)).collect()
    }

    pub fn log_gammas(&self) -> Vec<f64> {
        self.gammas.iter().map(|g| g.ln()).collect()
    }

    /// Same candidates with every risk multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.gammas.clone(), self.risks.iter().map(|r| r * c).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Exact,
    Beam,
}

/// A selected schedule. Serializes to the schedule JSON format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub indices: Vec<usize>,
    pub gammas: Vec<f64>,
    #[serde(rename = "K")]
    pub steps: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub objective: f64,
    pub algorithm: Algorithm,
    /// Equal-cost comparisons resolved toward the smaller index.
    #[serde(skip)]
    pub tie_breaks: usize,
}

impl Schedule {
    pub fn grid(&self) -> Result<SnrGrid> {
        SnrGrid::new(self.gammas.clone())
    }

    /// Log-SNR steps `h_k`.
    pub fn log_steps(&self) -> Vec<f64> {
        self.gammas.windows(2).map(|w| w[1].ln() - w[0].ln()).collect()
    }

    /// `Σ_{k≥2} (h_k − h_{k−1})²`.
    pub fn smoothness_penalty(&self) -> f64 {
        self.log_steps().windows(2).map(|w| (w[1] - w[0]).powi(2)).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Schedule = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if s.indices.len() != s.gammas.len() || s.steps + 1 != s.gammas.len() {
            return Err(Error::Parse("schedule JSON is inconsistent".into()));
        }
        SnrGrid::new(s.gammas.clone())?;
        Ok(s)
    }
}
