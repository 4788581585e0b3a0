//! Discretization and approximation error functionals.
//!
//! Each quantity is available in two independent forms: as a functional of
//! the mmse curve, and as a pathwise Monte-Carlo estimate of the drift
//! mismatch energy along the exact reverse process. Each serves as the
//! other's oracle.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{denoise, mc_expect, summarize, MmseCurve, MmsePolicy, MC_CHUNK};
use crate::error::{Error, Result};
use crate::grid::SnrGrid;
use crate::loss::LossProfile;
use crate::numeric::{derive_seed, rng_from_seed, Estimate};
use crate::quadrature::{adaptive_simpson, composite_simpson};
use crate::target::{sq_dist, TargetDistribution};

/// Relative tolerance of the adaptive Simpson rule used on exact curves.
pub const AREA_REL_TOL: f64 = 1e-9;

/// Simpson panels per interval for the Monte-Carlo area gap.
const MC_AREA_PANELS: usize = 16;

/// Default Brownian-bridge sub-steps per interval for the pathwise estimator.
pub const DEFAULT_SUBSTEPS: usize = 16;

fn single_gaussian_integral(dist: &TargetDistribution, lo: f64, hi: f64) -> Option<f64> {
    let (_, sigma) = dist.as_single_gaussian()?;
    let s2 = sigma * sigma;
    // ∫ d s²/(1 + s²γ) dγ = d ln(1 + s²γ)
    Some(dist.dim() as f64 * ((1.0 + s2 * hi).ln() - (1.0 + s2 * lo).ln()))
}

/// `∫_{lo}^{hi} mmse(γ) dγ`.
pub fn mmse_integral(curve: &MmseCurve, lo: f64, hi: f64) -> Result<Estimate> {
    curve.check_domain(lo, hi)?;
    let dist = curve.dist();
    match curve.policy() {
        MmsePolicy::ClosedForm => Ok(Estimate::exact(
            single_gaussian_integral(dist, lo, hi).expect("validated single Gaussian"),
        )),
        MmsePolicy::Quadrature { .. } => {
            let v = adaptive_simpson(
                |u| {
                    let g = u.exp();
                    g * curve.eval(g).map(|e| e.value).unwrap_or(f64::NAN)
                },
                lo.ln(),
                hi.ln(),
                AREA_REL_TOL,
            );
            Ok(Estimate::exact(v))
        }
        MmsePolicy::MonteCarlo { n_samples, seed } => {
            let (a, b) = (lo.ln(), hi.ln());
            let v = mc_expect(dist, n_samples, seed, |z, xi| {
                composite_simpson(
                    |u| {
                        let g = u.exp();
                        g * summarize(dist, 1.0 / g, &observe_snr(z, xi, g)).cov_trace
                    },
                    a,
                    b,
                    4 * MC_AREA_PANELS,
                )
            });
            Ok(Estimate::from_samples(&v))
        }
    }
}

fn observe_snr(z: &[f64], xi: &[f64], gamma: f64) -> Vec<f64> {
    let s = gamma.sqrt().recip();
    z.iter().zip(xi).map(|(a, b)| a + s * b).collect()
}

/// `E_disc = Σ_k ∫_{γ_{k−1}}^{γ_k} (mmse(γ_{k−1}) − mmse(γ)) dγ`.
///
/// Single Gaussians use the closed form; quadrature curves integrate each
/// interval's gap directly (no cancellation against the total area);
/// Monte-Carlo curves integrate the per-sample gap with shared `(Z, ξ)`.
pub fn disc_error(curve: &MmseCurve, grid: &SnrGrid) -> Result<Estimate> {
    curve.check_domain(grid.gamma_min(), grid.gamma_max())?;
    let dist = curve.dist();
    let g = grid.gammas();
    match curve.policy() {
        MmsePolicy::ClosedForm => {
            let mut left = 0.0;
            for w in g.windows(2) {
                left += (w[1] - w[0]) * curve.eval(w[0])?.value;
            }
            let area =
                single_gaussian_integral(dist, grid.gamma_min(), grid.gamma_max()).expect("validated single Gaussian");
            Ok(Estimate::exact(left - area))
        }
        MmsePolicy::Quadrature { .. } => {
            let mut total = 0.0;
            for w in g.windows(2) {
                let m0 = curve.eval(w[0])?.value;
                total += adaptive_simpson(
                    |u| {
                        let gm = u.exp();
                        let m = curve.eval(gm).map(|e| e.value).unwrap_or(f64::NAN);
                        gm * (m0 - m)
                    },
                    w[0].ln(),
                    w[1].ln(),
                    AREA_REL_TOL,
                );
            }
            Ok(Estimate::exact(total))
        }
        MmsePolicy::MonteCarlo { n_samples, seed } => {
            let v = mc_expect(dist, n_samples, seed, |z, xi| {
                let mut acc = 0.0;
                for w in g.windows(2) {
                    let m0 = summarize(dist, 1.0 / w[0], &observe_snr(z, xi, w[0])).cov_trace;
                    acc += composite_simpson(
                        |u| {
                            let gm = u.exp();
                            let m = summarize(dist, 1.0 / gm, &observe_snr(z, xi, gm)).cov_trace;
                            gm * (m0 - m)
                        },
                        w[0].ln(),
                        w[1].ln(),
                        MC_AREA_PANELS,
                    );
                }
                acc
            });
            Ok(Estimate::from_samples(&v))
        }
    }
}

/// Approximation error and its geometric-grid form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApxReport {
    /// `Σ_k Δγ_k · max(0, L_x0(γ_{k−1}) − mmse(γ_{k−1}))`.
    pub value: Estimate,
    /// Per-level ε-excess `ε_k = γ_{k−1}(L_x0 − mmse)` after clamping.
    pub eps_levels: Vec<f64>,
    /// `(Λ^{1/K} − 1)·Σ ε_k`, present on geometric grids.
    pub geometric_form: Option<f64>,
    /// Levels where the excess came out negative and was clamped to zero.
    pub clamped: usize,
}

/// `E_apx` with the loss frozen at each interval's left knot.
pub fn apx_error(loss: &LossProfile, oracle: &MmseCurve, grid: &SnrGrid) -> Result<ApxReport> {
    let g = grid.gammas();
    let mut value = 0.0;
    let mut var = 0.0;
    let mut eps_levels = Vec::with_capacity(grid.steps());
    let mut clamped = 0;
    for w in g.windows(2) {
        let l = loss.x0_at(w[0])?;
        let m = oracle.eval(w[0])?;
        let mut excess = l - m.value;
        if excess < 0.0 {
            clamped += 1;
            excess = 0.0;
        }
        let dg = w[1] - w[0];
        value += dg * excess;
        var += (dg * m.stderr).powi(2);
        eps_levels.push(w[0] * excess);
    }
    let geometric_form = grid.is_geometric(1e-9).then(|| {
        let k = grid.steps() as f64;
        (grid.dynamic_range().powf(1.0 / k) - 1.0) * eps_levels.iter().sum::<f64>()
    });
    Ok(ApxReport {
        value: Estimate {
            value,
            stderr: var.sqrt(),
        },
        eps_levels,
        geometric_form,
        clamped,
    })
}

/// Schedule-dependent part of `E_disc + E_apx`: `Σ_k Δγ_k·L_x0(γ_{k−1})`.
pub fn combined_objective(loss: &LossProfile, grid: &SnrGrid) -> Result<f64> {
    let mut acc = 0.0;
    for w in grid.gammas().windows(2) {
        acc += (w[1] - w[0]) * loss.x0_at(w[0])?;
    }
    Ok(acc)
}

/// Entropy-controlled upper bounds for one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalBounds {
    /// `(C²H²/2)·Σ(Δγ_k/γ_{k−1})²` on the actual grid.
    pub disc_bound: f64,
    /// `(C²H²/2)·K(Λ^{1/K} − 1)²`, the geometric-grid value.
    pub geo_disc_bound: f64,
    /// `log Λ·(C²H² log Λ/K + ε̄)`; `None` when `K < log Λ`.
    pub kl_total: Option<f64>,
}

pub fn final_bounds(grid: &SnrGrid, entropy: f64, c_fit: f64, eps_bar: f64) -> FinalBounds {
    let ch2 = (c_fit * entropy).powi(2);
    let k = grid.steps() as f64;
    let lam = grid.dynamic_range();
    let log_lam = lam.ln();
    FinalBounds {
        disc_bound: 0.5 * ch2 * grid.relative_step_energy(),
        geo_disc_bound: 0.5 * ch2 * k * (lam.powf(1.0 / k) - 1.0).powi(2),
        kl_total: (k >= log_lam).then(|| log_lam * (ch2 * log_lam / k + eps_bar)),
    }
}

/// Pathwise estimate of `½ E ∫ ‖δ_s‖² ds` for the exact denoiser.
///
/// Each path draws `Z ~ p`, builds the forward process at the grid times
/// from Gaussian increments, fills `M` sub-times per interval by sequential
/// Brownian-bridge sampling, and integrates
/// `‖m_{T−s}(Y_s) − m_{T−s_{k−1}}(Y_{s_{k−1}})‖²/(T−s)²` with the trapezoid
/// rule in `s`.
pub fn pathwise_kl_mc(
    dist: &TargetDistribution,
    grid: &SnrGrid,
    n_paths: usize,
    substeps: usize,
    seed: u64,
) -> Result<Estimate> {
    if n_paths == 0 {
        return Err(Error::InvalidConfig("n_paths must be positive".into()));
    }
    if substeps < 4 {
        return Err(Error::InvalidConfig("at least 4 sub-steps per interval".into()));
    }
    let d = dist.dim();
    let times = grid.noise_times();
    let k = grid.steps();
    let chunks = n_paths.div_ceil(MC_CHUNK);
    let per_chunk: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = rng_from_seed(derive_seed(seed, ci as u64));
            let len = MC_CHUNK.min(n_paths - ci * MC_CHUNK);
            let mut out = Vec::with_capacity(len);
            let mut knots = vec![vec![0.0; d]; k + 1];
            for _ in 0..len {
                let z = dist.sample(&mut rng);
                // Forward values at t_K < … < t_0, built upward from δ.
                let sd = times[k].sqrt();
                for (x, zi) in knots[k].iter_mut().zip(&z) {
                    *x = zi + sd * rng.sample::<f64, _>(StandardNormal);
                }
                for j in (1..=k).rev() {
                    let sd = (times[j - 1] - times[j]).sqrt();
                    let (lo, hi) = knots.split_at_mut(j);
                    for (x, prev) in lo[j - 1].iter_mut().zip(&hi[0]) {
                        *x = prev + sd * rng.sample::<f64, _>(StandardNormal);
                    }
                }
                let mut total = 0.0;
                for j in 1..=k {
                    let (t0, t1) = (times[j - 1], times[j]);
                    let anchor = denoise(dist, t0, &knots[j - 1]);
                    let h = (t0 - t1) / substeps as f64;
                    let mut cur = knots[j - 1].clone();
                    let mut tau = t0;
                    let mut prev_f = 0.0;
                    let mut acc = 0.0;
                    for m in 1..=substeps {
                        let next = if m == substeps { t1 } else { t0 - h * m as f64 };
                        if m == substeps {
                            cur.clone_from(&knots[j]);
                        } else {
                            let span = tau - t1;
                            let frac = (next - t1) / span;
                            let sd = ((next - t1) * (tau - next) / span).sqrt();
                            for (c, e) in cur.iter_mut().zip(&knots[j]) {
                                *c = e + frac * (*c - e) + sd * rng.sample::<f64, _>(StandardNormal);
                            }
                        }
                        tau = next;
                        let f = sq_dist(&denoise(dist, tau, &cur), &anchor) / (tau * tau);
                        acc += 0.5 * h * (prev_f + f);
                        prev_f = f;
                    }
                    total += acc;
                }
                out.push(0.5 * total);
            }
            out
        })
        .collect();
    Ok(Estimate::from_samples(&per_chunk.concat()))
}

/// How the error terms in a report were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    MmseFunctional,
    PathwiseMc,
}

/// The two-term split of the total error on one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoTermSplit {
    pub discretization: f64,
    /// `(1/K) Σ ε_k`.
    pub mean_eps: f64,
    /// `(Λ^{1/K} − 1)·Σ ε_k` when the grid is geometric.
    pub statistical: Option<f64>,
}

/// Error summary of one (target, grid, loss) triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub steps: usize,
    pub gammas: Vec<f64>,
    pub e_disc: Estimate,
    pub e_apx: Estimate,
    pub kl_path_bound: Estimate,
    pub combined_objective: Option<f64>,
    pub mmse_integral: Estimate,
    pub two_term: TwoTermSplit,
    pub final_bounds: Option<FinalBounds>,
    pub clamped_levels: usize,
    pub provenance: Provenance,
}

/// Builds error reports for many grids over one oracle curve, computing
/// `∫ mmse` once per endpoint pair.
pub struct ReportBuilder<'a> {
    curve: &'a MmseCurve,
    loss: Option<&'a LossProfile>,
    entropy_fit: Option<(f64, f64)>,
    integrals: Vec<((u64, u64), Estimate)>,
}

impl<'a> ReportBuilder<'a> {
    pub fn new(curve: &'a MmseCurve) -> Self {
        Self {
            curve,
            loss: None,
            entropy_fit: None,
            integrals: Vec::new(),
        }
    }

    pub fn with_loss(mut self, loss: &'a LossProfile) -> Self {
        self.loss = Some(loss);
        self
    }

    /// Attaches `(H, C_fit)` so reports carry the entropy bounds.
    pub fn with_entropy_fit(mut self, entropy: f64, c_fit: f64) -> Self {
        self.entropy_fit = Some((entropy, c_fit));
        self
    }

    fn integral(&mut self, lo: f64, hi: f64) -> Result<Estimate> {
        let key = (lo.to_bits(), hi.to_bits());
        if let Some((_, e)) = self.integrals.iter().find(|(k, _)| *k == key) {
            return Ok(*e);
        }
        let e = mmse_integral(self.curve, lo, hi)?;
        self.integrals.push((key, e));
        Ok(e)
    }

    pub fn report(&mut self, grid: &SnrGrid) -> Result<ErrorReport> {
        let e_disc = disc_error(self.curve, grid)?;
        let mmse_integral = self.integral(grid.gamma_min(), grid.gamma_max())?;
        let (e_apx, eps_levels, statistical, clamped, combined) = match self.loss {
            Some(loss) => {
                let apx = apx_error(loss, self.curve, grid)?;
                let combined = combined_objective(loss, grid)?;
                (
                    apx.value,
                    apx.eps_levels,
                    apx.geometric_form,
                    apx.clamped,
                    Some(combined),
                )
            }
            None => (Estimate::exact(0.0), vec![0.0; grid.steps()], None, 0, None),
        };
        let mean_eps = eps_levels.iter().sum::<f64>() / grid.steps() as f64;
        let final_bounds = self.entropy_fit.map(|(h, c)| final_bounds(grid, h, c, mean_eps));
        Ok(ErrorReport {
            steps: grid.steps(),
            gammas: grid.gammas().to_vec(),
            e_disc,
            e_apx,
            kl_path_bound: Estimate {
                value: 0.5 * (e_disc.value + e_apx.value),
                stderr: 0.5 * e_disc.stderr.hypot(e_apx.stderr),
            },
            combined_objective: combined,
            mmse_integral,
            two_term: TwoTermSplit {
                discretization: e_disc.value,
                mean_eps,
                statistical,
            },
            final_bounds,
            clamped_levels: clamped,
            provenance: Provenance::MmseFunctional,
        })
    }
}
