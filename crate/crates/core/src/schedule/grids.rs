//! Baseline SNR grids: time-uniform, geometric (log-SNR) and EDM-ρ.

use crate::error::{Error, Result};
use crate::grid::SnrGrid;

fn check_endpoints(horizon: f64, delta: f64, steps: usize) -> Result<()> {
    if !(delta > 0.0 && delta < horizon && horizon.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "need 0 < delta < T, got T = {horizon}, delta = {delta}"
        )));
    }
    if steps == 0 {
        return Err(Error::InvalidConfig("K must be at least 1".into()));
    }
    Ok(())
}

/// Pins the endpoints to exactly `1/T` and `1/δ`.
fn pinned(mut gammas: Vec<f64>, horizon: f64, delta: f64) -> Result<SnrGrid> {
    let last = gammas.len() - 1;
    gammas[0] = 1.0 / horizon;
    gammas[last] = 1.0 / delta;
    SnrGrid::new(gammas)
}

/// Uniform reverse-time steps `s_k = k(T − δ)/K`, `γ_k = 1/(T − s_k)`.
pub fn grid_time_uniform(horizon: f64, delta: f64, steps: usize) -> Result<SnrGrid> {
    check_endpoints(horizon, delta, steps)?;
    let span = horizon - delta;
    let gammas = (0..=steps)
        .map(|k| 1.0 / (horizon - span * k as f64 / steps as f64))
        .collect();
    pinned(gammas, horizon, delta)
}

/// Equal SNR ratios `γ_k = (1/T)(T/δ)^{k/K}`.
pub fn grid_geometric(horizon: f64, delta: f64, steps: usize) -> Result<SnrGrid> {
    check_endpoints(horizon, delta, steps)?;
    let lo = (1.0 / horizon).ln();
    let range = (horizon / delta).ln();
    let gammas = (0..=steps)
        .map(|k| (lo + range * k as f64 / steps as f64).exp())
        .collect();
    pinned(gammas, horizon, delta)
}

/// Karras et al. noise levels with `σ_max = √T`, `σ_min = √δ`:
/// `σ_i = (σ_max^{1/ρ} + (i/K)(σ_min^{1/ρ} − σ_max^{1/ρ}))^ρ`, `γ_i = σ_i^{−2}`.
pub fn grid_edm(horizon: f64, delta: f64, steps: usize, rho: f64) -> Result<SnrGrid> {
    check_endpoints(horizon, delta, steps)?;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidConfig(format!("rho must be positive, got {rho}")));
    }
    let hi = horizon.sqrt().powf(1.0 / rho);
    let lo = delta.sqrt().powf(1.0 / rho);
    let gammas = (0..=steps)
        .map(|i| {
            let sigma = (hi + i as f64 / steps as f64 * (lo - hi)).powf(rho);
            1.0 / (sigma * sigma)
        })
        .collect();
    pinned(gammas, horizon, delta)
}
