//! Exactly tractable target distributions and their information functionals.
//!
//! Two families are supported: isotropic Gaussian mixtures (used by the
//! sampler experiments) and finite discrete distributions (used wherever an
//! entropy is needed). Both have closed-form posteriors under the Gaussian
//! channel, which is what makes every oracle in this crate exact.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, log_sum_exp};

const PROB_SUM_TOL: f64 = 1e-12;

/// Default number of points on the λ grid used by the sub-exponential fit.
pub const DEFAULT_LAMBDA_GRID: usize = 41;

/// One isotropic mixture component `w · N(mean, sigma² I)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    #[serde(rename = "w")]
    pub weight: f64,
    pub mean: Vec<f64>,
    pub sigma: f64,
}

/// One support point of a finite discrete distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    #[serde(rename = "p")]
    pub prob: f64,
    #[serde(rename = "x")]
    pub point: Vec<f64>,
}

/// A validated target distribution. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetDistribution {
    GaussianMixture { dim: usize, components: Vec<Component> },
    FiniteDiscrete { dim: usize, atoms: Vec<Atom> },
}

/// JSON file schema for a target distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum TargetSpec {
    #[serde(rename = "gmm")]
    Gmm { dim: usize, components: Vec<Component> },
    #[serde(rename = "discrete")]
    Discrete { dim: usize, atoms: Vec<Atom> },
}

fn check_probs(probs: impl Iterator<Item = f64>) -> Result<()> {
    let mut total = Vec::new();
    for p in probs {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "probabilities must be strictly positive, got {p}"
            )));
        }
        total.push(p);
    }
    if total.is_empty() {
        return Err(Error::InvalidDistribution("empty support".into()));
    }
    let s = compensated_sum(total);
    if (s - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::InvalidDistribution(format!(
            "probabilities sum to {s}, expected 1"
        )));
    }
    Ok(())
}

fn check_dim(dim: usize, v: &[f64]) -> Result<()> {
    if v.len() != dim {
        return Err(Error::InvalidDistribution(format!(
            "point has length {}, expected dim {dim}",
            v.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidDistribution("non-finite coordinate".into()));
    }
    Ok(())
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl TargetDistribution {
    pub fn gaussian_mixture(dim: usize, components: Vec<Component>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDistribution("dim must be positive".into()));
        }
        check_probs(components.iter().map(|c| c.weight))?;
        for c in &components {
            check_dim(dim, &c.mean)?;
            if !(c.sigma > 0.0 && c.sigma.is_finite()) {
                return Err(Error::InvalidDistribution(format!(
                    "component sigma must be positive, got {}",
                    c.sigma
                )));
            }
        }
        Ok(Self::GaussianMixture { dim, components })
    }

    pub fn discrete(dim: usize, atoms: Vec<Atom>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDistribution("dim must be positive".into()));
        }
        check_probs(atoms.iter().map(|a| a.prob))?;
        for a in &atoms {
            check_dim(dim, &a.point)?;
        }
        for (i, a) in atoms.iter().enumerate() {
            if atoms[..i].iter().any(|b| b.point == a.point) {
                return Err(Error::InvalidDistribution(
                    "discrete atoms must be pairwise distinct".into(),
                ));
            }
        }
        Ok(Self::FiniteDiscrete { dim, atoms })
    }

    /// `N(mean, sigma² I)`.
    pub fn single_gaussian(mean: Vec<f64>, sigma: f64) -> Result<Self> {
        Self::gaussian_mixture(
            mean.len(),
            vec![Component {
                weight: 1.0,
                mean,
                sigma,
            }],
        )
    }

    pub fn point_mass(point: Vec<f64>) -> Result<Self> {
        Self::discrete(point.len(), vec![Atom { prob: 1.0, point }])
    }

    /// Equal-weight atoms at `±a` in one dimension.
    pub fn two_point(a: f64) -> Result<Self> {
        Self::discrete(
            1,
            vec![
                Atom {
                    prob: 0.5,
                    point: vec![-a],
                },
                Atom {
                    prob: 0.5,
                    point: vec![a],
                },
            ],
        )
    }

    /// Discrete distribution with the given probabilities on the points
    /// `0, 1, 2, …` of the real line.
    pub fn discrete_on_line(probs: &[f64]) -> Result<Self> {
        let atoms = probs
            .iter()
            .enumerate()
            .map(|(i, &p)| Atom {
                prob: p,
                point: vec![i as f64],
            })
            .collect();
        Self::discrete(1, atoms)
    }

    pub fn from_spec(spec: TargetSpec) -> Result<Self> {
        match spec {
            TargetSpec::Gmm { dim, components } => Self::gaussian_mixture(dim, components),
            TargetSpec::Discrete { dim, atoms } => Self::discrete(dim, atoms),
        }
    }

    pub fn to_spec(&self) -> TargetSpec {
        match self {
            Self::GaussianMixture { dim, components } => TargetSpec::Gmm {
                dim: *dim,
                components: components.clone(),
            },
            Self::FiniteDiscrete { dim, atoms } => TargetSpec::Discrete {
                dim: *dim,
                atoms: atoms.clone(),
            },
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: TargetSpec = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_spec(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_spec()).expect("target spec serializes")
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::GaussianMixture { dim, .. } | Self::FiniteDiscrete { dim, .. } => *dim,
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            Self::GaussianMixture { .. } => "gmm",
            Self::FiniteDiscrete { .. } => "discrete",
        }
    }

    /// Number of mixture components or atoms.
    pub fn len(&self) -> usize {
        match self {
            Self::GaussianMixture { components, .. } => components.len(),
            Self::FiniteDiscrete { atoms, .. } => atoms.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(mean, sigma)` when the target is a single Gaussian.
    pub fn as_single_gaussian(&self) -> Option<(&[f64], f64)> {
        match self {
            Self::GaussianMixture { components, .. } if components.len() == 1 => {
                Some((&components[0].mean, components[0].sigma))
            }
            _ => None,
        }
    }

    pub fn is_point_mass(&self) -> bool {
        matches!(self, Self::FiniteDiscrete { atoms, .. } if atoms.len() == 1)
    }

    /// Mixture weights or atom probabilities.
    pub fn weights(&self) -> Vec<f64> {
        match self {
            Self::GaussianMixture { components, .. } => components.iter().map(|c| c.weight).collect(),
            Self::FiniteDiscrete { atoms, .. } => atoms.iter().map(|a| a.prob).collect(),
        }
    }

    /// Component means or atom locations.
    pub fn centers(&self) -> Vec<&[f64]> {
        match self {
            Self::GaussianMixture { components, .. } => components.iter().map(|c| c.mean.as_slice()).collect(),
            Self::FiniteDiscrete { atoms, .. } => atoms.iter().map(|a| a.point.as_slice()).collect(),
        }
    }

    /// Per-component isotropic std (zero for atoms).
    pub fn spreads(&self) -> Vec<f64> {
        match self {
            Self::GaussianMixture { components, .. } => components.iter().map(|c| c.sigma).collect(),
            Self::FiniteDiscrete { atoms, .. } => vec![0.0; atoms.len()],
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim()];
        for (w, c) in self.weights().into_iter().zip(self.centers()) {
            for (mi, ci) in m.iter_mut().zip(c) {
                *mi += w * ci;
            }
        }
        m
    }

    /// `tr Cov(Z)`, the largest value mmse can take.
    pub fn cov_trace(&self) -> f64 {
        let mean = self.mean();
        let d = self.dim() as f64;
        let terms = self
            .weights()
            .into_iter()
            .zip(self.centers())
            .zip(self.spreads())
            .map(|((w, c), s)| w * (sq_dist(c, &mean) + d * s * s));
        compensated_sum(terms).max(0.0)
    }

    /// Draws the component/atom index of one sample.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let weights = self.weights();
        let mut acc = 0.0;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        weights.len() - 1
    }

    /// Draws one sample `Z ~ p`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let i = self.sample_index(rng);
        match self {
            Self::GaussianMixture { components, .. } => {
                let c = &components[i];
                c.mean
                    .iter()
                    .map(|m| m + c.sigma * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            }
            Self::FiniteDiscrete { atoms, .. } => atoms[i].point.clone(),
        }
    }

    /// `log p(x)` for the Gaussian mixture. Discrete targets have no density.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        match self {
            Self::GaussianMixture { .. } => Ok(self.smoothed_log_density(x, 0.0)),
            Self::FiniteDiscrete { .. } => Err(Error::UnsupportedVariant {
                op: "log_density",
                variant: "discrete",
            }),
        }
    }

    /// `log p_t(x)`, the density of `X_t = Z + W_t`. For Gaussian mixtures
    /// `t = 0` gives the target density itself; discrete targets need `t > 0`.
    pub fn smoothed_log_density(&self, x: &[f64], t: f64) -> f64 {
        let d = self.dim() as f64;
        let terms: Vec<f64> = self
            .weights()
            .into_iter()
            .zip(self.centers())
            .zip(self.spreads())
            .map(|((w, c), s)| {
                let var = s * s + t;
                w.ln() - 0.5 * sq_dist(x, c) / var - 0.5 * d * (2.0 * PI * var).ln()
            })
            .collect();
        log_sum_exp(&terms)
    }

    fn discrete_probs(&self, op: &'static str) -> Result<Vec<f64>> {
        match self {
            Self::FiniteDiscrete { atoms, .. } => Ok(atoms.iter().map(|a| a.prob).collect()),
            Self::GaussianMixture { .. } => Err(Error::UnsupportedVariant { op, variant: "gmm" }),
        }
    }

    /// Information content `-ln p_i` of one atom, in nats.
    pub fn surprisal(&self, atom_index: usize) -> Result<f64> {
        let probs = self.discrete_probs("surprisal")?;
        let p = probs.get(atom_index).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "atom index {atom_index} out of range for {} atoms",
                probs.len()
            ))
        })?;
        Ok(-p.ln())
    }

    pub fn shannon_entropy(&self) -> Result<f64> {
        let probs = sorted_probs(self.discrete_probs("shannon_entropy")?);
        Ok(shannon_of_sorted(&probs))
    }

    /// Rényi entropy of order ½, `2 ln Σ √p_i`.
    pub fn renyi_half_entropy(&self) -> Result<f64> {
        let probs = sorted_probs(self.discrete_probs("renyi_half_entropy")?);
        Ok(renyi_half_of_sorted(&probs))
    }

    /// Sub-exponential fit of the centred surprisal on the default λ grid.
    pub fn fit_subexponential(&self, b: f64) -> Result<InfoProfile> {
        self.fit_subexponential_with(b, DEFAULT_LAMBDA_GRID)
    }

    /// Evaluates `M(λ) = Σ p_i exp(λ(ι_i − H))` exactly on `grid_points`
    /// evenly spaced λ in `[−1/b, 1/b]` (plus `±½`), and returns the
    /// smallest `ν²` with `M(λ) ≤ exp(ν²λ²)` on that grid.
    pub fn fit_subexponential_with(&self, b: f64, grid_points: usize) -> Result<InfoProfile> {
        let probs = sorted_probs(self.discrete_probs("fit_subexponential")?);
        if !(b > 0.0 && b <= 2.0) {
            return Err(Error::InvalidConfig(format!("scale b must lie in (0, 2], got {b}")));
        }
        if grid_points < 3 || grid_points.is_multiple_of(2) {
            return Err(Error::InvalidConfig(
                "lambda grid needs an odd number (>= 3) of points".into(),
            ));
        }
        let shannon = shannon_of_sorted(&probs);
        let renyi_half = renyi_half_of_sorted(&probs);
        let lambdas = lambda_grid(b, grid_points);
        let mut nu_sq = 0.0_f64;
        let mut mgf_ok = true;
        for &lam in &lambdas {
            if lam == 0.0 {
                continue;
            }
            let log_m = log_mgf(&probs, shannon, lam);
            if !log_m.is_finite() {
                mgf_ok = false;
                continue;
            }
            nu_sq = nu_sq.max(log_m / (lam * lam));
        }
        Ok(InfoProfile {
            shannon,
            renyi_half,
            nu_sq,
            b,
            mgf_ok,
        })
    }
}

/// Entropy summary of a finite discrete target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoProfile {
    pub shannon: f64,
    pub renyi_half: f64,
    pub nu_sq: f64,
    pub b: f64,
    pub mgf_ok: bool,
}

impl InfoProfile {
    /// Upper bound `H + ν²/2` on the order-½ Rényi entropy.
    pub fn renyi_bound(&self) -> f64 {
        self.shannon + 0.5 * self.nu_sq
    }
}

fn sorted_probs(mut probs: Vec<f64>) -> Vec<f64> {
    probs.sort_by(|a, b| a.total_cmp(b));
    probs
}

fn shannon_of_sorted(probs: &[f64]) -> f64 {
    compensated_sum(probs.iter().map(|&p| -p * p.ln())).max(0.0)
}

fn renyi_half_of_sorted(probs: &[f64]) -> f64 {
    (2.0 * compensated_sum(probs.iter().map(|p| p.sqrt())).ln()).max(0.0)
}

/// `ln Σ p_i exp(λ(−ln p_i − H))`, with atoms visited in ascending order.
fn log_mgf(sorted: &[f64], shannon: f64, lam: f64) -> f64 {
    let terms: Vec<f64> = sorted.iter().map(|p| p.ln() + lam * (-p.ln() - shannon)).collect();
    log_sum_exp(&terms)
}

/// Evenly spaced λ in `[−1/b, 1/b]` (odd count, so 0 is included) with
/// `±½` added when missing; `λ = ½` is where the MGF controls `H_{1/2}`.
pub fn lambda_grid(b: f64, points: usize) -> Vec<f64> {
    let hi = 1.0 / b;
    let half = (points - 1) / 2;
    let mut grid: Vec<f64> = (0..points)
        .map(|i| {
            let k = i as f64 - half as f64;
            if i == half {
                0.0
            } else {
                hi * k / half as f64
            }
        })
        .collect();
    for extra in [-0.5f64, 0.5] {
        if extra.abs() <= hi && !grid.contains(&extra) {
            grid.push(extra);
        }
    }
    grid.sort_by(|a, b| a.total_cmp(b));
    grid
}
