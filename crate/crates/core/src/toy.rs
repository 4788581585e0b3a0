//! Two-dimensional toy priors: eight isotropic components on a circle or a
//! 2×4 lattice.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::target::{Atom, Component, TargetDistribution};

pub const TOY_COMPONENTS: usize = 8;
pub const DEFAULT_SIGMA0: f64 = 0.25;
pub const DEFAULT_RADIUS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToyKind {
    Circle8,
    Grid8,
}

impl fmt::Display for ToyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ToyKind::Circle8 => "circle8",
            ToyKind::Grid8 => "grid8",
        })
    }
}

impl FromStr for ToyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circle8" => Ok(ToyKind::Circle8),
            "grid8" => Ok(ToyKind::Grid8),
            other => Err(Error::Parse(format!("unknown toy target `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyConfig {
    pub kind: ToyKind,
    pub weights: Option<Vec<f64>>,
    pub sigma0: f64,
    /// Circle radius, or lattice half-extent along the long axis.
    pub scale: f64,
}

impl ToyConfig {
    pub fn new(kind: ToyKind) -> Self {
        Self {
            kind,
            weights: None,
            sigma0: DEFAULT_SIGMA0,
            scale: DEFAULT_RADIUS,
        }
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
        self.weights = Some(weights);
        self
    }

    pub fn with_sigma0(mut self, sigma0: f64) -> Self {
        self.sigma0 = sigma0;
        self
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }
}

/// `(8, 7, …, 1)/36`, assigned in component order.
pub fn default_weights() -> Vec<f64> {
    (1..=TOY_COMPONENTS).rev().map(|w| w as f64 / 36.0).collect()
}

fn means(kind: ToyKind, scale: f64) -> Vec<Vec<f64>> {
    match kind {
        ToyKind::Circle8 => (0..TOY_COMPONENTS)
            .map(|j| {
                let a = 2.0 * PI * j as f64 / TOY_COMPONENTS as f64;
                vec![scale * a.cos(), scale * a.sin()]
            })
            .collect(),
        // Two rows of four, row-major, spacing 2·scale/3 on both axes.
        ToyKind::Grid8 => {
            let step = 2.0 * scale / 3.0;
            let mut out = Vec::with_capacity(TOY_COMPONENTS);
            for row in 0..2 {
                for col in 0..4 {
                    out.push(vec![-scale + step * col as f64, step * (row as f64 - 0.5)]);
                }
            }
            out
        }
    }
}

pub fn build_toy(cfg: &ToyConfig) -> Result<TargetDistribution> {
    let weights = match &cfg.weights {
        Some(w) if w.len() != TOY_COMPONENTS => {
            return Err(Error::InvalidDistribution(format!(
                "toy targets take {TOY_COMPONENTS} weights, got {}",
                w.len()
            )))
        }
        Some(w) => w.clone(),
        None => default_weights(),
    };
    if !(cfg.sigma0 > 0.0 && cfg.sigma0.is_finite()) {
        return Err(Error::InvalidDistribution(format!(
            "sigma0 must be positive, got {}",
            cfg.sigma0
        )));
    }
    if !(cfg.scale > 0.0 && cfg.scale.is_finite()) {
        return Err(Error::InvalidDistribution(format!(
            "scale must be positive, got {}",
            cfg.scale
        )));
    }
    let components = means(cfg.kind, cfg.scale)
        .into_iter()
        .zip(weights)
        .map(|(mean, weight)| Component {
            weight,
            mean,
            sigma: cfg.sigma0,
        })
        .collect();
    TargetDistribution::gaussian_mixture(2, components)
}

/// Atoms at the component means with the component weights.
pub fn discrete_companion(dist: &TargetDistribution) -> Result<TargetDistribution> {
    let atoms = dist
        .weights()
        .into_iter()
        .zip(dist.centers())
        .map(|(prob, point)| Atom {
            prob,
            point: point.to_vec(),
        })
        .collect();
    TargetDistribution::discrete(dist.dim(), atoms)
}
