//! Self-checks runnable from the command line: every check compares a
//! production routine against an independent route (enumeration, finite
//! differences, closed forms) and reports its worst discrepancy.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::{mmse_derivative, mmse_finite_difference, MmseCurve, MmsePolicy, DEFAULT_HERMITE_NODES};
use crate::error::{Error, Result};
use crate::functionals::{apx_error, combined_objective, disc_error, mmse_integral};
use crate::grid::SnrGrid;
use crate::loss::LossProfile;
use crate::numeric::{rng_from_seed, stage_seed};
use crate::sampler::reverse_step;
use crate::schedule::{eta_axis, grid_geometric, las_beam, las_exact, CandidateSet, LasConfig};
use crate::target::TargetDistribution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Dp,
    Beam,
    Mmse,
    Entropy,
    Geometric,
    Identity,
    Sampler,
    All,
}

impl Suite {
    const EACH: [Suite; 7] = [
        Suite::Dp,
        Suite::Beam,
        Suite::Mmse,
        Suite::Entropy,
        Suite::Geometric,
        Suite::Identity,
        Suite::Sampler,
    ];
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Suite::Dp => "dp",
            Suite::Beam => "beam",
            Suite::Mmse => "mmse",
            Suite::Entropy => "entropy",
            Suite::Geometric => "geometric",
            Suite::Identity => "identity",
            Suite::Sampler => "sampler",
            Suite::All => "all",
        };
        f.write_str(s)
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "dp" => Suite::Dp,
            "beam" => Suite::Beam,
            "mmse" => Suite::Mmse,
            "entropy" => Suite::Entropy,
            "geometric" => Suite::Geometric,
            "identity" => Suite::Identity,
            "sampler" => Suite::Sampler,
            "all" => Suite::All,
            other => return Err(Error::Parse(format!("unknown verification suite `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    pub failures: usize,
    /// Largest discrepancy seen, in the check's own units.
    pub worst: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
}

/// Runs `suite`. A given `target` replaces the built-in targets of the
/// target-dependent checks (mmse and sampler).
pub fn run_suite(suite: Suite, target: Option<&TargetDistribution>, seed: u64) -> Result<VerifyReport> {
    let suites: Vec<Suite> = match suite {
        Suite::All => Suite::EACH.to_vec(),
        s => vec![s],
    };
    let mut checks = Vec::new();
    for s in suites {
        let seed = stage_seed(seed, &s.to_string());
        match s {
            Suite::Dp => checks.push(check_dp(seed)?),
            Suite::Beam => checks.push(check_beam(seed)?),
            Suite::Mmse => checks.push(check_mmse(target, seed)?),
            Suite::Entropy => checks.push(check_entropy(target, seed)?),
            Suite::Geometric => checks.push(check_geometric(seed)?),
            Suite::Identity => checks.extend(check_identities(seed)?),
            Suite::Sampler => checks.push(check_reverse_step(target, seed)?),
            Suite::All => unreachable!(),
        }
    }
    Ok(VerifyReport {
        suite,
        seed,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

struct Tally {
    name: &'static str,
    cases: usize,
    failures: usize,
    worst: f64,
    tolerance: f64,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            cases: 0,
            failures: 0,
            worst: 0.0,
            tolerance,
        }
    }

    fn record(&mut self, discrepancy: f64, ok: bool) {
        self.cases += 1;
        self.worst = self.worst.max(discrepancy);
        if !ok {
            self.failures += 1;
        }
    }

    fn finish(self) -> CheckOutcome {
        CheckOutcome {
            name: self.name.to_string(),
            passed: self.failures == 0 && self.cases > 0,
            cases: self.cases,
            failures: self.failures,
            worst: self.worst,
            tolerance: self.tolerance,
        }
    }
}

/// All increasing index paths `0 = i_0 < … < i_K = n − 1`.
fn all_paths(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, k: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let last = *path.last().unwrap();
        if path.len() == k {
            if last < n - 1 {
                path.push(n - 1);
                out.push(path.clone());
                path.pop();
            }
            return;
        }
        for next in last + 1..n - 1 {
            path.push(next);
            rec(n, k, path, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    if k == 1 {
        out.push(vec![0, n - 1]);
    } else {
        rec(n, k, &mut vec![0], &mut out);
    }
    out
}

fn path_cost(c: &CandidateSet, path: &[usize], lambda: f64, alpha: f64) -> f64 {
    let g = c.gammas();
    let r = c.risks();
    let first: f64 = path
        .windows(2)
        .map(|w| (eta_axis(g[w[1]], lambda) - eta_axis(g[w[0]], lambda)) * r[w[0]])
        .sum();
    let h: Vec<f64> = path.windows(2).map(|w| g[w[1]].ln() - g[w[0]].ln()).collect();
    let smooth: f64 = h.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    first + alpha * smooth
}

fn random_candidates<R: Rng>(rng: &mut R, n: usize) -> CandidateSet {
    let mut g = Vec::with_capacity(n);
    let mut x: f64 = rng.random_range(0.05..1.0);
    for _ in 0..n {
        g.push(x);
        x *= rng.random_range(1.1..3.0);
    }
    let risks = g.iter().map(|v| rng.random_range(0.0..2.0) / (1.0 + v)).collect();
    CandidateSet::new(g, risks).expect("valid random candidates")
}

fn check_dp(seed: u64) -> Result<CheckOutcome> {
    let mut rng = rng_from_seed(seed);
    let mut t = Tally::new("las_exact_vs_enumeration", 0.0);
    for _ in 0..100 {
        let n = rng.random_range(3..=12);
        let k = rng.random_range(1..=4.min(n - 1));
        let c = random_candidates(&mut rng, n);
        let cfg = LasConfig::new(k);
        let got = las_exact(&c, &cfg)?;
        let best = all_paths(n, k)
            .into_iter()
            .map(|p| (path_cost(&c, &p, cfg.lambda, 0.0), p))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap();
        let gap = (got.objective - best.0).abs();
        t.record(gap, gap <= 1e-12 * best.0.abs().max(1.0) && got.indices == best.1);
    }
    Ok(t.finish())
}

fn check_beam(seed: u64) -> Result<CheckOutcome> {
    let mut rng = rng_from_seed(seed);
    let mut t = Tally::new("las_beam_vs_enumeration", 0.0);
    for case in 0..30 {
        let n = rng.random_range(3..=10);
        let k = rng.random_range(1..=4.min(n - 1));
        let alpha = [0.1, 1.0, 12.0][case % 3];
        let c = random_candidates(&mut rng, n);
        let cfg = LasConfig::new(k).with_alpha(alpha).with_beam(n * n, n, 0);
        let got = las_beam(&c, &cfg)?;
        let best = all_paths(n, k)
            .into_iter()
            .map(|p| path_cost(&c, &p, cfg.lambda, alpha))
            .fold(f64::INFINITY, f64::min);
        let gap = (got.objective - best).abs();
        t.record(gap, gap <= 1e-12 * best.abs().max(1.0));
    }
    Ok(t.finish())
}

fn random_probs<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / s).collect()
}

fn check_mmse(target: Option<&TargetDistribution>, seed: u64) -> Result<CheckOutcome> {
    let mut rng = rng_from_seed(seed);
    let targets: Vec<TargetDistribution> = match target {
        Some(t) => vec![t.clone()],
        None => vec![
            TargetDistribution::two_point(1.0)?,
            TargetDistribution::discrete_on_line(&random_probs(&mut rng, 8))?,
        ],
    };
    let mut t = Tally::new("mmse_derivative_vs_finite_difference", 1e-3);
    for dist in &targets {
        let policy = if dist.as_single_gaussian().is_some() {
            MmsePolicy::ClosedForm
        } else if dist.dim() <= 2 {
            MmsePolicy::Quadrature {
                nodes: if dist.dim() == 1 { DEFAULT_HERMITE_NODES } else { 60 },
            }
        } else {
            MmsePolicy::MonteCarlo {
                n_samples: 200_000,
                seed: rng.random(),
            }
        };
        for gamma in [0.3, 1.0, 4.0] {
            let analytic = mmse_derivative(dist, gamma, policy)?;
            let fd = mmse_finite_difference(dist, gamma, 1e-3, policy)?;
            let diff = (analytic.value - fd.value).abs();
            let allowed = (1e-3 * analytic.value.abs()).max(3.0 * analytic.combined_stderr(&fd));
            t.record(diff, diff <= allowed);
        }
    }
    Ok(t.finish())
}

fn check_entropy(target: Option<&TargetDistribution>, seed: u64) -> Result<CheckOutcome> {
    let mut rng = rng_from_seed(seed);
    let mut dists = Vec::new();
    if let Some(d @ TargetDistribution::FiniteDiscrete { .. }) = target {
        dists.push(d.clone());
    }
    for _ in 0..20 {
        let n = rng.random_range(2..=10);
        dists.push(TargetDistribution::discrete_on_line(&random_probs(&mut rng, n))?);
    }
    let mut t = Tally::new("renyi_shannon_inequalities", 1e-10);
    for d in &dists {
        let fit = d.fit_subexponential(1.0)?;
        let lower = fit.shannon - fit.renyi_half;
        let upper = fit.renyi_half - fit.renyi_bound();
        let excess = lower.max(upper).max(0.0);
        t.record(excess, excess <= 1e-10);
    }
    Ok(t.finish())
}

fn step_energy(g: &[f64]) -> f64 {
    g.windows(2).map(|w| ((w[1] - w[0]) / w[0]).powi(2)).sum()
}

fn check_geometric(seed: u64) -> Result<CheckOutcome> {
    let mut rng = rng_from_seed(seed);
    let mut t = Tally::new("geometric_grid_minimizes_step_energy", 1e-9);
    for _ in 0..10 {
        let lo: f64 = rng.random_range(0.01..1.0);
        let hi = lo * rng.random_range(2.0..1e4);
        let k = rng.random_range(2..=4);
        let geo = grid_geometric(1.0 / lo, 1.0 / hi, k)?;
        let best = step_energy(geo.gammas());
        let mut worst: f64 = 0.0;
        for _ in 0..2000 {
            let mut inner: Vec<f64> = (1..k).map(|_| rng.random_range(lo.ln()..hi.ln())).collect();
            inner.sort_by(f64::total_cmp);
            let mut g = vec![lo];
            g.extend(inner.into_iter().map(f64::exp));
            g.push(hi);
            worst = worst.max(best - step_energy(&g));
        }
        t.record(worst.max(0.0), worst <= 1e-9 * best.max(1.0));
    }
    Ok(t.finish())
}

fn check_identities(seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut rng = rng_from_seed(seed);
    let curve = MmseCurve::new(
        TargetDistribution::single_gaussian(vec![0.0], 1.0)?,
        MmsePolicy::ClosedForm,
    )?;
    let mut area = Tally::new("disc_error_closed_form", 1e-9);
    let grid = SnrGrid::new(vec![1.0, 2.0, 4.0])?;
    let v = disc_error(&curve, &grid)?.value;
    // Left sum 0.5 + 2/3 minus ln(5/2).
    let expected = 0.5 + 2.0 / 3.0 - (2.5f64).ln();
    area.record((v - expected).abs(), (v - expected).abs() <= 1e-9);

    let mut split = Tally::new("combined_objective_split", 1e-9);
    for _ in 0..10 {
        let k = rng.random_range(2..=8);
        let mut g: Vec<f64> = vec![rng.random_range(0.05..1.0)];
        for _ in 0..k {
            let last = *g.last().unwrap();
            g.push(last * rng.random_range(1.2..4.0));
        }
        let grid = SnrGrid::new(g.clone())?;
        let excess: Vec<f64> = g.iter().map(|x| rng.random_range(0.0..0.5) / x).collect();
        let loss = LossProfile::from_x0(g.iter().zip(&excess).map(|(x, e)| (*x, 1.0 / (1.0 + x) + e)))?;
        let lhs = combined_objective(&loss, &grid)? - mmse_integral(&curve, grid.gamma_min(), grid.gamma_max())?.value;
        let rhs = disc_error(&curve, &grid)?.value + apx_error(&loss, &curve, &grid)?.value.value;
        let gap = (lhs - rhs).abs();
        split.record(gap, gap <= 1e-9);
    }
    Ok(vec![area.finish(), split.finish()])
}

fn check_reverse_step(target: Option<&TargetDistribution>, seed: u64) -> Result<CheckOutcome> {
    let mut rng = rng_from_seed(seed);
    let d = target.map_or(1, TargetDistribution::dim);
    let state: Vec<f64> = (0..d).map(|i| 2.0 - i as f64).collect();
    let anchor = vec![0.25; d];
    let (tp, tn) = (1.0, 0.5);
    let n = 200_000;
    let mut sum = 0.0;
    let mut sq = 0.0;
    let mut noise = vec![0.0; d];
    for _ in 0..n {
        for v in noise.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let y = reverse_step(&state, tp, tn, &anchor, &noise)?;
        sum += y[0];
        sq += y[0] * y[0];
    }
    let mean = sum / n as f64;
    let var = sq / n as f64 - mean * mean;
    let want_mean = anchor[0] + tn / tp * (state[0] - anchor[0]);
    let want_var = tn * (tp - tn) / tp;
    let z_mean = (mean - want_mean).abs() / (want_var / n as f64).sqrt();
    let z_var = (var - want_var).abs() / (want_var * (2.0 / n as f64).sqrt());
    let mut t = Tally::new("reverse_step_moments_sigma", 4.0);
    t.record(z_mean, z_mean <= 4.0);
    t.record(z_var, z_var <= 4.0);
    Ok(t.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerates_all_paths() {
        // C(n−2, K−1) interior choices.
        assert_eq!(all_paths(6, 1), vec![vec![0, 5]]);
        assert_eq!(all_paths(6, 3).len(), 6);
        assert_eq!(all_paths(12, 4).len(), 120);
        assert!(all_paths(6, 3).iter().all(|p| p.windows(2).all(|w| w[0] < w[1])));
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::EACH {
            assert_eq!(s.to_string().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn point_mass_is_green() {
        let pm = TargetDistribution::point_mass(vec![0.3, -1.0]).unwrap();
        let r = run_suite(Suite::Mmse, Some(&pm), 1).unwrap();
        assert!(r.passed);
        assert_eq!(r.checks[0].worst, 0.0);
    }

    #[test]
    fn dp_suite_passes() {
        let r = run_suite(Suite::Dp, None, 7).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.checks[0].cases, 100);
    }
}
