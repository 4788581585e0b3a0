//! Exact Bayes machinery for the Gaussian channel `X_t = Z + W_t`.
//!
//! Every target here has a posterior that is itself a finite mixture of
//! isotropic Gaussians (atoms are components of zero width), so the
//! denoiser `m_t(x) = E[Z | X_t = x]` and the posterior covariance are
//! available in closed form. The mmse curve and its derivative are then
//! expectations over `X_t` evaluated in closed form, by Gauss–Hermite
//! quadrature, or by Monte Carlo.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{derive_seed, rng_from_seed, Estimate};
use crate::quadrature::GaussHermite;
use crate::target::{sq_dist, TargetDistribution};

/// Samples per Monte-Carlo work unit; each unit gets its own derived seed.
pub const MC_CHUNK: usize = 4096;

/// Default Gauss–Hermite node count per axis.
pub const DEFAULT_HERMITE_NODES: usize = 1000;

/// A point on the channel: time `t`, its SNR `1/t`, and an observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPoint {
    t: f64,
    gamma: f64,
    pub x: Vec<f64>,
}

impl ChannelPoint {
    pub fn at_time(t: f64, x: Vec<f64>) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidConfig(format!("channel time must be positive, got {t}")));
        }
        Ok(Self { t, gamma: 1.0 / t, x })
    }

    pub fn at_snr(gamma: f64, x: Vec<f64>) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!("SNR must be positive, got {gamma}")));
        }
        Ok(Self {
            t: 1.0 / gamma,
            gamma,
            x,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// Posterior law of `Z` given `X_t = x`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    /// Posterior probability of each component/atom.
    pub weights: Vec<f64>,
    /// The denoiser output `m_t(x)`.
    pub mean: Vec<f64>,
    /// `tr Σ_t(x)`.
    pub cov_trace: f64,
    /// `tr(Σ_t(x)²)`.
    pub cov_frobenius_sq: f64,
}

/// Per-component posterior centres and variances, shared by the summary
/// and the denoiser-only fast path.
struct ComponentPosterior {
    weights: Vec<f64>,
    centers: Vec<Vec<f64>>,
    variances: Vec<f64>,
}

fn component_posterior(dist: &TargetDistribution, t: f64, x: &[f64]) -> ComponentPosterior {
    let d = dist.dim() as f64;
    let weights_prior = dist.weights();
    let centers_prior = dist.centers();
    let spreads = dist.spreads();
    let n = weights_prior.len();
    let mut logw = Vec::with_capacity(n);
    let mut centers = Vec::with_capacity(n);
    let mut variances = Vec::with_capacity(n);
    for i in 0..n {
        let s2 = spreads[i] * spreads[i];
        let v = s2 + t;
        let mu = centers_prior[i];
        logw.push(weights_prior[i].ln() - 0.5 * sq_dist(x, mu) / v - 0.5 * d * v.ln());
        // Conjugate update; reduces to the atom itself when s2 = 0.
        centers.push(mu.iter().zip(x).map(|(m, xi)| (t * m + s2 * xi) / v).collect());
        variances.push(s2 * t / v);
    }
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    ComponentPosterior {
        weights,
        centers,
        variances,
    }
}

/// Posterior weights, mean and covariance functionals at `point`.
pub fn posterior(dist: &TargetDistribution, point: &ChannelPoint) -> Result<PosteriorSummary> {
    if point.x.len() != dist.dim() {
        return Err(Error::InvalidConfig(format!(
            "observation has length {}, expected {}",
            point.x.len(),
            dist.dim()
        )));
    }
    Ok(summarize(dist, point.t, &point.x))
}

pub(crate) fn summarize(dist: &TargetDistribution, t: f64, x: &[f64]) -> PosteriorSummary {
    let d = dist.dim();
    let cp = component_posterior(dist, t, x);
    let mut mean = vec![0.0; d];
    for (w, c) in cp.weights.iter().zip(&cp.centers) {
        for (m, ci) in mean.iter_mut().zip(c) {
            *m += w * ci;
        }
    }
    // Σ = Σ_c w_c (v_c I + (c − m)(c − m)ᵀ)
    let mut cov = vec![0.0; d * d];
    for ((w, c), v) in cp.weights.iter().zip(&cp.centers).zip(&cp.variances) {
        for i in 0..d {
            let ui = c[i] - mean[i];
            cov[i * d + i] += w * v;
            for j in 0..d {
                cov[i * d + j] += w * ui * (c[j] - mean[j]);
            }
        }
    }
    let cov_trace = (0..d).map(|i| cov[i * d + i]).sum::<f64>().max(0.0);
    // tr(Σ²) ≤ (tr Σ)² for PSD Σ; rank-one posteriors hit equality and
    // rounding can land on either side.
    let cov_frobenius_sq = cov.iter().map(|c| c * c).sum::<f64>().min(cov_trace * cov_trace);
    PosteriorSummary {
        weights: cp.weights,
        mean,
        cov_trace,
        cov_frobenius_sq,
    }
}

/// The exact denoiser `m_t(x)`.
pub fn denoise(dist: &TargetDistribution, t: f64, x: &[f64]) -> Vec<f64> {
    let cp = component_posterior(dist, t, x);
    let mut mean = vec![0.0; dist.dim()];
    for (w, c) in cp.weights.iter().zip(&cp.centers) {
        for (m, ci) in mean.iter_mut().zip(c) {
            *m += w * ci;
        }
    }
    mean
}

/// `E‖Z − a‖⁴` under the posterior of a discrete target, by enumeration.
pub fn posterior_fourth_central(dist: &TargetDistribution, point: &ChannelPoint, a: &[f64]) -> Result<f64> {
    let TargetDistribution::FiniteDiscrete { atoms, .. } = dist else {
        return Err(Error::UnsupportedVariant {
            op: "posterior_fourth_central",
            variant: "gmm",
        });
    };
    let s = posterior(dist, point)?;
    Ok(s.weights
        .iter()
        .zip(atoms)
        .map(|(w, at)| {
            let r = sq_dist(&at.point, a);
            w * r * r
        })
        .sum())
}

/// How an mmse-type expectation over `X_t` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MmsePolicy {
    /// Closed form; single Gaussian targets only.
    ClosedForm,
    /// Tensor-product Gauss–Hermite over each component of `p_t`; `dim ≤ 2`.
    Quadrature { nodes: usize },
    /// Rao–Blackwellized Monte Carlo over `(Z, ξ)`.
    MonteCarlo { n_samples: usize, seed: u64 },
}

impl MmsePolicy {
    /// Closed form for a single Gaussian, 1000-node quadrature in one
    /// dimension, Monte Carlo otherwise.
    pub fn auto(dist: &TargetDistribution, mc_samples: usize, seed: u64) -> Self {
        if dist.as_single_gaussian().is_some() {
            Self::ClosedForm
        } else if dist.dim() == 1 {
            Self::Quadrature {
                nodes: DEFAULT_HERMITE_NODES,
            }
        } else {
            Self::MonteCarlo {
                n_samples: mc_samples,
                seed,
            }
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, Self::MonteCarlo { .. })
    }

    fn validate(&self, dist: &TargetDistribution) -> Result<()> {
        match *self {
            Self::ClosedForm if dist.as_single_gaussian().is_none() => Err(Error::InvalidConfig(
                "closed-form mmse needs a single Gaussian target".into(),
            )),
            Self::Quadrature { nodes: 0 } => Err(Error::InvalidConfig("quadrature needs at least one node".into())),
            Self::Quadrature { .. } if dist.dim() > 2 => {
                Err(Error::InvalidConfig("tensor quadrature is limited to dim <= 2".into()))
            }
            Self::MonteCarlo { n_samples: 0, .. } => {
                Err(Error::InvalidConfig("monte_carlo needs n_samples > 0".into()))
            }
            _ => Ok(()),
        }
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "SNR must be positive and finite, got {gamma}"
        )))
    }
}

/// `E_{X ~ p_t}[f(X)]` by tensor Gauss–Hermite over each mixture component.
pub(crate) fn quadrature_expect<F>(dist: &TargetDistribution, t: f64, nodes: usize, f: F) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let gh = GaussHermite::cached(nodes);
    let pts = gh.normal_points();
    let d = dist.dim();
    let mut total = 0.0;
    for ((w, c), s) in dist.weights().into_iter().zip(dist.centers()).zip(dist.spreads()) {
        let scale = (s * s + t).sqrt();
        let mut acc = 0.0;
        match d {
            1 => {
                for &(xi, wi) in &pts {
                    acc += wi * f(&[c[0] + scale * xi]);
                }
            }
            2 => {
                for &(xi, wi) in &pts {
                    for &(yj, wj) in &pts {
                        acc += wi * wj * f(&[c[0] + scale * xi, c[1] + scale * yj]);
                    }
                }
            }
            _ => unreachable!("validated by MmsePolicy"),
        }
        total += w * acc;
    }
    total
}

/// Monte-Carlo over `(Z, ξ)`; `f` receives the clean sample and the
/// standard normal draw. Work is chunked with seeds derived from `seed`,
/// so results are independent of the thread count.
pub fn mc_expect<F>(dist: &TargetDistribution, n_samples: usize, seed: u64, f: F) -> Vec<f64>
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    let d = dist.dim();
    let chunks = n_samples.div_ceil(MC_CHUNK);
    let per_chunk: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = rng_from_seed(derive_seed(seed, ci as u64));
            let len = MC_CHUNK.min(n_samples - ci * MC_CHUNK);
            let mut out = Vec::with_capacity(len);
            let mut xi = vec![0.0; d];
            for _ in 0..len {
                let z = dist.sample(&mut rng);
                for v in xi.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                out.push(f(&z, &xi));
            }
            out
        })
        .collect();
    per_chunk.concat()
}

fn observe(z: &[f64], xi: &[f64], t: f64) -> Vec<f64> {
    let s = t.sqrt();
    z.iter().zip(xi).map(|(a, b)| a + s * b).collect()
}

/// Closed-form `(mmse, −mmse')` for a single Gaussian `N(μ, σ²I)`:
/// the posterior covariance is `σ²/(1 + σ²γ)·I` everywhere.
fn gaussian_functionals(dist: &TargetDistribution, gamma: f64) -> (f64, f64) {
    let (_, sigma) = dist.as_single_gaussian().expect("validated");
    let d = dist.dim() as f64;
    let v = sigma * sigma / (1.0 + sigma * sigma * gamma);
    (d * v, d * v * v)
}

/// `mmse(γ) = E‖Z − m_{1/γ}(X_{1/γ})‖² = E tr Σ_{1/γ}(X)`.
pub fn mmse(dist: &TargetDistribution, gamma: f64, policy: MmsePolicy) -> Result<Estimate> {
    check_gamma(gamma)?;
    policy.validate(dist)?;
    let t = 1.0 / gamma;
    match policy {
        MmsePolicy::ClosedForm => Ok(Estimate::exact(gaussian_functionals(dist, gamma).0)),
        MmsePolicy::Quadrature { nodes } => Ok(Estimate::exact(quadrature_expect(dist, t, nodes, |x| {
            summarize(dist, t, x).cov_trace
        }))),
        MmsePolicy::MonteCarlo { n_samples, seed } => {
            let v = mc_expect(dist, n_samples, seed, |z, xi| {
                summarize(dist, t, &observe(z, xi, t)).cov_trace
            });
            Ok(Estimate::from_samples(&v))
        }
    }
}

/// `mmse'(γ) = −E tr(Σ_{1/γ}(X)²)`; never positive.
pub fn mmse_derivative(dist: &TargetDistribution, gamma: f64, policy: MmsePolicy) -> Result<Estimate> {
    check_gamma(gamma)?;
    policy.validate(dist)?;
    let t = 1.0 / gamma;
    let e = match policy {
        MmsePolicy::ClosedForm => Estimate::exact(gaussian_functionals(dist, gamma).1),
        MmsePolicy::Quadrature { nodes } => Estimate::exact(quadrature_expect(dist, t, nodes, |x| {
            summarize(dist, t, x).cov_frobenius_sq
        })),
        MmsePolicy::MonteCarlo { n_samples, seed } => {
            let v = mc_expect(dist, n_samples, seed, |z, xi| {
                summarize(dist, t, &observe(z, xi, t)).cov_frobenius_sq
            });
            Estimate::from_samples(&v)
        }
    };
    Ok(Estimate {
        value: -e.value,
        stderr: e.stderr,
    })
}

/// Central finite difference of mmse at `γ` with step `rel_step·γ`.
///
/// Under Monte Carlo the two evaluations share `(Z, ξ)` per sample, so the
/// reported stderr is that of the paired difference.
pub fn mmse_finite_difference(
    dist: &TargetDistribution,
    gamma: f64,
    rel_step: f64,
    policy: MmsePolicy,
) -> Result<Estimate> {
    check_gamma(gamma)?;
    policy.validate(dist)?;
    let h = rel_step * gamma;
    if !(h > 0.0 && h < gamma) {
        return Err(Error::InvalidConfig(format!("bad finite-difference step {rel_step}")));
    }
    match policy {
        MmsePolicy::MonteCarlo { n_samples, seed } => {
            let (tp, tm) = (1.0 / (gamma + h), 1.0 / (gamma - h));
            let v = mc_expect(dist, n_samples, seed, |z, xi| {
                let up = summarize(dist, tp, &observe(z, xi, tp)).cov_trace;
                let dn = summarize(dist, tm, &observe(z, xi, tm)).cov_trace;
                (up - dn) / (2.0 * h)
            });
            Ok(Estimate::from_samples(&v))
        }
        _ => {
            let up = mmse(dist, gamma + h, policy)?.value;
            let dn = mmse(dist, gamma - h, policy)?.value;
            Ok(Estimate::exact((up - dn) / (2.0 * h)))
        }
    }
}

/// `E‖Z′ − Z‖⁴` with `Z′` an independent posterior draw given `X_t`.
pub fn posterior_fourth_moment(dist: &TargetDistribution, t: f64, n_samples: usize, seed: u64) -> Result<Estimate> {
    let TargetDistribution::FiniteDiscrete { atoms, .. } = dist else {
        return Err(Error::UnsupportedVariant {
            op: "posterior_fourth_moment",
            variant: "gmm",
        });
    };
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidConfig(format!("time must be positive, got {t}")));
    }
    if n_samples == 0 {
        return Err(Error::InvalidConfig("n_samples must be positive".into()));
    }
    let d = dist.dim();
    let chunks = n_samples.div_ceil(MC_CHUNK);
    let per_chunk: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = rng_from_seed(derive_seed(seed, ci as u64));
            let len = MC_CHUNK.min(n_samples - ci * MC_CHUNK);
            let mut out = Vec::with_capacity(len);
            let mut xi = vec![0.0; d];
            for _ in 0..len {
                let z = dist.sample(&mut rng);
                for v in xi.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                let x = observe(&z, &xi, t);
                let w = component_posterior(dist, t, &x).weights;
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut j = w.len() - 1;
                for (k, wk) in w.iter().enumerate() {
                    acc += wk;
                    if u < acc {
                        j = k;
                        break;
                    }
                }
                let r = sq_dist(&atoms[j].point, &z);
                out.push(r * r);
            }
            out
        })
        .collect();
    Ok(Estimate::from_samples(&per_chunk.concat()))
}

/// `E‖Z′ − Z‖⁴` for a one-dimensional discrete target by Gauss–Hermite
/// quadrature over each atom's channel output; no sampling involved.
pub fn posterior_fourth_moment_quadrature(dist: &TargetDistribution, t: f64, nodes: usize) -> Result<f64> {
    let TargetDistribution::FiniteDiscrete { atoms, dim } = dist else {
        return Err(Error::UnsupportedVariant {
            op: "posterior_fourth_moment_quadrature",
            variant: "gmm",
        });
    };
    if *dim != 1 {
        return Err(Error::InvalidConfig("quadrature oracle needs dim = 1".into()));
    }
    let pts = GaussHermite::cached(nodes).normal_points();
    let s = t.sqrt();
    let mut total = 0.0;
    for a in atoms {
        let z = a.point[0];
        let mut acc = 0.0;
        for &(xi, wi) in &pts {
            let w = component_posterior(dist, t, &[z + s * xi]).weights;
            let inner: f64 = w.iter().zip(atoms).map(|(wj, b)| wj * (b.point[0] - z).powi(4)).sum();
            acc += wi * inner;
        }
        total += a.prob * acc;
    }
    Ok(total)
}

/// Fitted constant of the `|mmse'(γ)| ≤ C²H²/γ²` shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeBoundFit {
    /// `max_γ γ²|mmse'(γ)|/H²` over the knots.
    pub constant: f64,
    /// `(γ, γ²|mmse'(γ)|/H²)` per knot.
    pub ratios: Vec<(f64, f64)>,
    pub shannon: f64,
}

/// Evaluates `γ²|mmse'(γ)|/H²` at each knot and returns its maximum.
pub fn derivative_bound_check(
    dist: &TargetDistribution,
    gamma_knots: &[f64],
    policy: MmsePolicy,
) -> Result<DerivativeBoundFit> {
    let h = dist.shannon_entropy()?;
    if h <= 0.0 {
        return Err(Error::DegenerateEntropy);
    }
    if gamma_knots.is_empty() {
        return Err(Error::InvalidConfig("no SNR knots given".into()));
    }
    let mut ratios = Vec::with_capacity(gamma_knots.len());
    for &g in gamma_knots {
        let d = mmse_derivative(dist, g, policy)?;
        ratios.push((g, g * g * d.value.abs() / (h * h)));
    }
    let constant = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(DerivativeBoundFit {
        constant,
        ratios,
        shannon: h,
    })
}

/// One tabulated knot of an mmse curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmseKnot {
    pub gamma: f64,
    pub mmse: f64,
    pub mmse_stderr: f64,
    pub dmmse: f64,
    pub dmmse_stderr: f64,
}

/// mmse as a function of SNR for one target under one evaluation policy.
#[derive(Debug, Clone)]
pub struct MmseCurve {
    dist: TargetDistribution,
    policy: MmsePolicy,
    domain: (f64, f64),
    knots: Vec<MmseKnot>,
}

impl MmseCurve {
    pub fn new(dist: TargetDistribution, policy: MmsePolicy) -> Result<Self> {
        policy.validate(&dist)?;
        Ok(Self {
            dist,
            policy,
            domain: (0.0, f64::INFINITY),
            knots: Vec::new(),
        })
    }

    /// Restricts the SNR range the curve may be evaluated on.
    pub fn with_domain(mut self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0 && hi > lo) {
            return Err(Error::InvalidConfig(format!("bad curve domain [{lo}, {hi}]")));
        }
        self.domain = (lo, hi);
        Ok(self)
    }

    /// Evaluates and caches mmse and its derivative at the given SNRs.
    pub fn tabulate(mut self, gammas: &[f64]) -> Result<Self> {
        let mut knots = Vec::with_capacity(gammas.len());
        for &g in gammas {
            self.check_domain(g, g)?;
            let m = mmse(&self.dist, g, self.policy)?;
            let dm = mmse_derivative(&self.dist, g, self.policy)?;
            knots.push(MmseKnot {
                gamma: g,
                mmse: m.value,
                mmse_stderr: m.stderr,
                dmmse: dm.value,
                dmmse_stderr: dm.stderr,
            });
        }
        knots.sort_by(|a, b| a.gamma.total_cmp(&b.gamma));
        self.knots = knots;
        Ok(self)
    }

    pub fn dist(&self) -> &TargetDistribution {
        &self.dist
    }

    pub fn policy(&self) -> MmsePolicy {
        self.policy
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn knots(&self) -> &[MmseKnot] {
        &self.knots
    }

    pub fn check_domain(&self, lo: f64, hi: f64) -> Result<()> {
        let (dl, dh) = self.domain;
        if lo < dl || hi > dh {
            return Err(Error::Domain {
                lo,
                hi,
                dom_lo: dl,
                dom_hi: dh,
            });
        }
        Ok(())
    }

    pub fn eval(&self, gamma: f64) -> Result<Estimate> {
        self.check_domain(gamma, gamma)?;
        if let Some(k) = self.knots.iter().find(|k| k.gamma == gamma) {
            return Ok(Estimate {
                value: k.mmse,
                stderr: k.mmse_stderr,
            });
        }
        mmse(&self.dist, gamma, self.policy)
    }

    pub fn eval_derivative(&self, gamma: f64) -> Result<Estimate> {
        self.check_domain(gamma, gamma)?;
        if let Some(k) = self.knots.iter().find(|k| k.gamma == gamma) {
            return Ok(Estimate {
                value: k.dmmse,
                stderr: k.dmmse_stderr,
            });
        }
        mmse_derivative(&self.dist, gamma, self.policy)
    }

    /// CSV with header `gamma,mmse,stderr,dmmse,dmmse_stderr`, full
    /// round-trip precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gamma,mmse,stderr,dmmse,dmmse_stderr\n");
        for k in &self.knots {
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                k.gamma, k.mmse, k.mmse_stderr, k.dmmse, k.dmmse_stderr
            ));
        }
        out
    }
}
