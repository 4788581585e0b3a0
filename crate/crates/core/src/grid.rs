//! SNR grids `γ_0 < γ_1 < … < γ_K` and their derived time quantities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing SNR knots. Knot `k` corresponds to reverse time
/// `s_k = T − 1/γ_k`, with `T = 1/γ_0` and `δ = 1/γ_K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SnrGrid {
    gammas: Vec<f64>,
}

impl TryFrom<Vec<f64>> for SnrGrid {
    type Error = Error;

    fn try_from(gammas: Vec<f64>) -> Result<Self> {
        Self::new(gammas)
    }
}

impl From<SnrGrid> for Vec<f64> {
    fn from(g: SnrGrid) -> Self {
        g.gammas
    }
}

impl SnrGrid {
    pub fn new(gammas: Vec<f64>) -> Result<Self> {
        if gammas.len() < 2 {
            return Err(Error::InvalidGrid("a grid needs at least two knots".into()));
        }
        if gammas[0] <= 0.0 || gammas.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidGrid("SNR knots must be positive and finite".into()));
        }
        if let Some(w) = gammas.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "SNR knots must strictly increase ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Self { gammas })
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    /// Number of steps `K`.
    pub fn steps(&self) -> usize {
        self.gammas.len() - 1
    }

    pub fn gamma_min(&self) -> f64 {
        self.gammas[0]
    }

    pub fn gamma_max(&self) -> f64 {
        *self.gammas.last().expect("non-empty")
    }

    /// Horizon `T = 1/γ_0`.
    pub fn horizon(&self) -> f64 {
        1.0 / self.gamma_min()
    }

    /// Terminal noise level `δ = 1/γ_K`.
    pub fn delta(&self) -> f64 {
        1.0 / self.gamma_max()
    }

    /// Dynamic range `Λ = γ_K/γ_0`.
    pub fn dynamic_range(&self) -> f64 {
        self.gamma_max() / self.gamma_min()
    }

    /// Step ratios `r_k = γ_k/γ_{k−1}`.
    pub fn ratios(&self) -> Vec<f64> {
        self.gammas.windows(2).map(|w| w[1] / w[0]).collect()
    }

    /// Log-SNR steps `h_k = ln r_k`.
    pub fn log_steps(&self) -> Vec<f64> {
        self.gammas.windows(2).map(|w| w[1].ln() - w[0].ln()).collect()
    }

    /// `Δγ_k = γ_k − γ_{k−1}`.
    pub fn increments(&self) -> Vec<f64> {
        self.gammas.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Forward noise times `t_k = 1/γ_k` (decreasing).
    pub fn noise_times(&self) -> Vec<f64> {
        self.gammas.iter().map(|g| 1.0 / g).collect()
    }

    /// Reverse times `s_k = T − 1/γ_k`, with `s_0 = 0` exactly.
    pub fn reverse_times(&self) -> Vec<f64> {
        let t = self.horizon();
        let mut s: Vec<f64> = self.gammas.iter().map(|g| t - 1.0 / g).collect();
        s[0] = 0.0;
        s
    }

    /// `Σ_k (Δγ_k/γ_{k−1})² = Σ_k (r_k − 1)²`.
    pub fn relative_step_energy(&self) -> f64 {
        self.ratios().iter().map(|r| (r - 1.0) * (r - 1.0)).sum()
    }

    /// Whether all step ratios agree to `rel_tol`.
    pub fn is_geometric(&self, rel_tol: f64) -> bool {
        let h = self.log_steps();
        let mean = h.iter().sum::<f64>() / h.len() as f64;
        h.iter().all(|x| (x - mean).abs() <= rel_tol * mean.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn derived_quantities() {
        let g = SnrGrid::new(vec![1.0, 2.0, 4.0]).unwrap();
        assert_eq!(g.steps(), 2);
        assert_eq!(g.horizon(), 1.0);
        assert_eq!(g.delta(), 0.25);
        assert_eq!(g.dynamic_range(), 4.0);
        assert_relative_eq!(g.ratios().iter().product::<f64>(), 4.0, max_relative = 1e-9);
        let s = g.reverse_times();
        assert_eq!(s[0], 0.0);
        assert!((s[2] - (g.horizon() - g.delta())).abs() < 1e-12);
        assert_eq!(g.relative_step_energy(), 2.0);
        assert!(g.is_geometric(1e-12));
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(SnrGrid::new(vec![1.0]).is_err());
        assert!(SnrGrid::new(vec![1.0, 1.0]).is_err());
        assert!(SnrGrid::new(vec![0.0, 1.0]).is_err());
        assert!(SnrGrid::new(vec![2.0, 1.0]).is_err());
        assert!(SnrGrid::new(vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn serde_validates() {
        let g: SnrGrid = serde_json::from_str("[1.0, 3.0]").unwrap();
        assert_eq!(g.steps(), 1);
        assert!(serde_json::from_str::<SnrGrid>("[3.0, 1.0]").is_err());
    }
}
