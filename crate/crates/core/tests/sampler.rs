use rand::Rng;
use rand_distr::StandardNormal;

use lasched::channel::{denoise, mmse, MmsePolicy};
use lasched::grid::SnrGrid;
use lasched::numeric::{derive_seed, rng_from_seed, Estimate};
use lasched::sampler::{reverse_step, sample, second_order_sample, DenoiserKind, SamplerConfig};
use lasched::schedule::{grid_geometric, las_exact, CandidateSet, LasConfig};
use lasched::target::TargetDistribution;
use lasched::toy::{build_toy, ToyConfig, ToyKind};

#[test]
fn reverse_step_matches_euler_maruyama_moments() {
    // Moment recursion of Euler–Maruyama for dY = (c − Y)/t ds + dB with
    // t = t_prev − s, 10⁴ sub-steps.
    let (tp, tn, c, y0) = (1.0, 0.5, 0.0, 2.0);
    let steps = 10_000;
    let ds = (tp - tn) / steps as f64;
    let (mut mean, mut var) = (y0, 0.0);
    for j in 0..steps {
        let t = tp - j as f64 * ds;
        let a = 1.0 - ds / t;
        mean = a * mean + ds / t * c;
        var = a * a * var + ds;
    }
    let m = reverse_step(&[y0], tp, tn, &[c], &[0.0]).unwrap()[0];
    let sd = reverse_step(&[y0], tp, tn, &[c], &[1.0]).unwrap()[0] - m;
    assert_eq!(m, 1.0);
    assert_eq!(sd, 0.5);
    assert!((mean - m).abs() < 1e-3, "{mean}");
    assert!((var - sd * sd).abs() < 1e-3, "{var}");
}

#[test]
fn reverse_step_empirical_moments() {
    let mut rng = rng_from_seed(77);
    let (tp, tn) = (0.8, 0.3);
    let (state, anchor) = ([1.5, -0.5], [0.2, 0.4]);
    let n = 1_000_000;
    let mut draws = [Vec::with_capacity(n), Vec::with_capacity(n)];
    for _ in 0..n {
        let e: Vec<f64> = (0..2).map(|_| rng.sample(StandardNormal)).collect();
        let y = reverse_step(&state, tp, tn, &anchor, &e).unwrap();
        draws[0].push(y[0]);
        draws[1].push(y[1]);
    }
    let var = tn * (tp - tn) / tp;
    for i in 0..2 {
        let want = anchor[i] + tn / tp * (state[i] - anchor[i]);
        let est = Estimate::from_samples(&draws[i]);
        assert!((est.value - want).abs() <= 4.0 * est.stderr);
        let sq: Vec<f64> = draws[i].iter().map(|y| (y - want).powi(2)).collect();
        let v = Estimate::from_samples(&sq);
        assert!((v.value - var).abs() <= 4.0 * v.stderr, "{v:?} vs {var}");
    }
}

#[test]
fn point_mass_contracts_to_its_atom() {
    let z0 = vec![1.0, -2.0];
    let d = TargetDistribution::point_mass(z0.clone()).unwrap();
    let delta = 1e-4;
    let grid = grid_geometric(1.0, delta, 10).unwrap();
    let run = sample(&d, &grid, &SamplerConfig::new(4000, 1)).unwrap();
    let mean_dist: f64 = run
        .samples
        .iter()
        .map(|x| x.iter().zip(&z0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
        .sum::<f64>()
        / run.samples.len() as f64;
    assert!(mean_dist <= 3.0 * (2.0 * delta).sqrt(), "{mean_dist}");
}

/// Variance of the frozen-denoiser chain for `N(0, 1)` after each step,
/// starting from the exact forward marginal `1 + T`.
fn frozen_variances(times: &[f64]) -> Vec<f64> {
    let mut v = vec![1.0 + times[0]];
    for w in times.windows(2) {
        let (tp, tn) = (w[0], w[1]);
        let last = *v.last().unwrap();
        v.push(last * ((1.0 + tn) / (1.0 + tp)).powi(2) + tn * (tp - tn) / tp);
    }
    v
}

#[test]
fn gaussian_chain_follows_frozen_variance_law() {
    let d = TargetDistribution::single_gaussian(vec![0.0], 1.0).unwrap();
    let grid = grid_geometric(1.0, 1e-3, 64).unwrap();
    let oracle = frozen_variances(&grid.noise_times());
    for stop in [8usize, 32, 64] {
        let prefix = SnrGrid::new(grid.gammas()[..=stop].to_vec()).unwrap();
        let run = sample(&d, &prefix, &SamplerConfig::new(100_000, 40 + stop as u64)).unwrap();
        let sq: Vec<f64> = run.samples.iter().map(|x| x[0] * x[0]).collect();
        let v = Estimate::from_samples(&sq);
        assert!(
            (v.value - oracle[stop]).abs() <= 3.0 * v.stderr,
            "step {stop}: {v:?} vs {}",
            oracle[stop]
        );
    }
    // The frozen chain approaches the true marginal 1 + δ as K grows.
    let gaps: Vec<f64> = [8, 32, 128, 512]
        .iter()
        .map(|&k| {
            let g = grid_geometric(1.0, 1e-3, k).unwrap();
            (frozen_variances(&g.noise_times()).last().unwrap() - (1.0 + 1e-3)).abs()
        })
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn nll_approaches_the_exact_sample_value() {
    let d = build_toy(&ToyConfig::new(ToyKind::Circle8)).unwrap();
    let delta: f64 = 1e-3;
    let n = 20_000;
    let mut rng = rng_from_seed(5);
    let exact: Vec<f64> = (0..n)
        .map(|_| {
            let x: Vec<f64> = d
                .sample(&mut rng)
                .into_iter()
                .map(|z| z + delta.sqrt() * rng.sample::<f64, _>(StandardNormal))
                .collect();
            -d.smoothed_log_density(&x, 0.0)
        })
        .collect();
    let exact = Estimate::from_samples(&exact);
    let mut prev: Option<(f64, f64)> = None;
    for k in [5usize, 10, 20, 40] {
        let g = grid_geometric(1.0, delta, k).unwrap();
        let r = sample(&d, &g, &SamplerConfig::new(n, 6)).unwrap().report;
        let gap = (r.nll_mean - exact.value).abs();
        let se = r.nll_stderr.hypot(exact.stderr);
        if let Some((pg, pse)) = prev {
            assert!(gap <= pg + 3.0 * se.hypot(pse), "K={k}: {gap} after {pg}");
        }
        prev = Some((gap, se));
    }
}

#[test]
fn first_order_chain_reproduces_manual_protocol() {
    let d = TargetDistribution::two_point(1.5).unwrap();
    let grid = SnrGrid::new(vec![0.5, 2.0, 30.0]).unwrap();
    let t = grid.noise_times();
    let seed = 321;
    let first = sample(&d, &grid, &SamplerConfig::new(3, seed)).unwrap();
    let second = second_order_sample(&d, &grid, &SamplerConfig::new(3, seed)).unwrap();
    let mut rng = rng_from_seed(derive_seed(seed, 0));
    for i in 0..3 {
        let z = d.sample(&mut rng);
        let y0 = vec![z[0] + t[0].sqrt() * rng.sample::<f64, _>(StandardNormal)];
        let m0 = denoise(&d, t[0], &y0);
        let e1 = vec![rng.sample::<f64, _>(StandardNormal)];
        let y1 = reverse_step(&y0, t[0], t[1], &m0, &e1).unwrap();
        let m1 = denoise(&d, t[1], &y1);
        let e2 = vec![rng.sample::<f64, _>(StandardNormal)];
        let y2 = reverse_step(&y1, t[1], t[2], &m1, &e2).unwrap();
        assert_eq!(first.samples[i], y2);
        // K = 2: the second step extrapolates from both evaluations.
        let l: Vec<f64> = grid.gammas().iter().map(|g| g.ln()).collect();
        let u = (0.5 * (l[1] + l[2]) - l[1]) / (l[1] - l[0]);
        let anchor = vec![m1[0] + u * (m1[0] - m0[0])];
        let y2b = reverse_step(&y1, t[1], t[2], &anchor, &e2).unwrap();
        assert!((second.samples[i][0] - y2b[0]).abs() <= 1e-12);
    }
}

#[test]
fn second_order_is_exact_for_constant_denoiser() {
    let d = TargetDistribution::point_mass(vec![0.5, -0.25, 2.0]).unwrap();
    let grid = grid_geometric(2.0, 1e-3, 9).unwrap();
    let cfg = SamplerConfig::new(2000, 8);
    let a = sample(&d, &grid, &cfg).unwrap();
    let b = second_order_sample(&d, &grid, &cfg).unwrap();
    for (x, y) in a.samples.iter().zip(&b.samples) {
        for (p, q) in x.iter().zip(y) {
            assert!((p - q).abs() <= 1e-10);
        }
    }
}

#[test]
fn second_order_not_worse_on_toy_las_schedule() {
    let d = build_toy(&ToyConfig::new(ToyKind::Circle8)).unwrap();
    let n = 200;
    let gammas: Vec<f64> = (0..n)
        .map(|i| (1000f64.ln() * i as f64 / (n - 1) as f64).exp())
        .collect();
    let risks = gammas
        .iter()
        .map(|&g| mmse(&d, g, MmsePolicy::Quadrature { nodes: 60 }).unwrap().value)
        .collect();
    let cands = CandidateSet::new(gammas, risks).unwrap();
    let grid = las_exact(&cands, &LasConfig::new(5)).unwrap().grid().unwrap();
    let cfg = SamplerConfig::new(20_000, 12);
    let first = sample(&d, &grid, &cfg).unwrap().report;
    let second = second_order_sample(&d, &grid, &cfg).unwrap().report;
    assert!(
        second.nll_mean <= first.nll_mean + 3.0 * first.nll_stderr.hypot(second.nll_stderr),
        "{} vs {}",
        second.nll_mean,
        first.nll_mean
    );
}

#[test]
fn denoiser_error_widens_the_output() {
    let d = TargetDistribution::point_mass(vec![0.0]).unwrap();
    let grid = grid_geometric(1.0, 1e-3, 6).unwrap();
    let spread = |cfg: SamplerConfig| {
        let run = sample(&d, &grid, &cfg).unwrap();
        run.samples.iter().map(|x| x[0] * x[0]).sum::<f64>() / run.samples.len() as f64
    };
    let clean = spread(SamplerConfig::new(5000, 2));
    let noisy = spread(SamplerConfig::new(5000, 2).with_denoiser(DenoiserKind::OraclePlusNoise { sigma_err: 0.5 }));
    assert!(noisy > 10.0 * clean, "{noisy} vs {clean}");
}

#[test]
fn report_serializes_with_config_echo() {
    let d = TargetDistribution::two_point(1.0).unwrap();
    let grid = SnrGrid::new(vec![1.0, 10.0, 100.0]).unwrap();
    let r = sample(&d, &grid, &SamplerConfig::new(100, 3)).unwrap().report;
    let v: serde_json::Value = serde_json::to_value(&r).unwrap();
    assert_eq!(v["n_samples"], 100);
    assert_eq!(v["config"]["order"], "first");
    assert_eq!(v["config"]["init"], "exact_forward");
    assert_eq!(v["gammas"].as_array().unwrap().len(), 3);
    assert!(r.nll_stderr >= 0.0 && r.nll_mean.is_finite());
}
