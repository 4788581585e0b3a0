//! Per-SNR model risk profiles and the ε ↔ x₀ risk conversion.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `x₀`-prediction risk from an ε-prediction risk at SNR `γ`:
/// `‖x₀ − x̂₀‖² = ‖ε − ε̂‖²/γ`.
pub fn eps_to_x0(loss_eps: f64, gamma: f64) -> f64 {
    loss_eps / gamma
}

/// SNR of a DDPM marginal with cumulative signal level `ᾱ`.
pub fn ddpm_snr(alpha_bar: f64) -> f64 {
    alpha_bar / (1.0 - alpha_bar)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    X0,
    Eps,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::X0 => "x0",
            LossKind::Eps => "eps",
        })
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "x0" => Ok(LossKind::X0),
            "eps" => Ok(LossKind::Eps),
            other => Err(Error::Parse(format!("unknown loss kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossKnot {
    pub gamma: f64,
    pub loss: f64,
    pub kind: LossKind,
}

impl LossKnot {
    pub fn x0_loss(&self) -> f64 {
        match self.kind {
            LossKind::X0 => self.loss,
            LossKind::Eps => eps_to_x0(self.loss, self.gamma),
        }
    }
}

/// Model risk tabulated at strictly increasing SNRs.
///
/// Between knots the `x₀` risk is interpolated linearly in `ln γ`; outside
/// the knot range every query is an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossProfile {
    knots: Vec<LossKnot>,
}

impl LossProfile {
    pub fn new(knots: Vec<LossKnot>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidConfig("loss profile has no knots".into()));
        }
        for k in &knots {
            if !(k.gamma > 0.0 && k.gamma.is_finite()) {
                return Err(Error::InvalidConfig(format!("bad knot SNR {}", k.gamma)));
            }
            if !(k.loss >= 0.0 && k.loss.is_finite()) {
                return Err(Error::InvalidConfig(format!("bad loss value {}", k.loss)));
            }
        }
        if let Some(w) = knots.windows(2).find(|w| w[1].gamma <= w[0].gamma) {
            return Err(Error::InvalidGrid(format!(
                "loss knots must strictly increase in gamma ({} then {})",
                w[0].gamma, w[1].gamma
            )));
        }
        Ok(Self { knots })
    }

    /// `x₀`-kind profile from `(γ, loss)` pairs.
    pub fn from_x0(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        Self::new(
            pairs
                .into_iter()
                .map(|(gamma, loss)| LossKnot {
                    gamma,
                    loss,
                    kind: LossKind::X0,
                })
                .collect(),
        )
    }

    /// `x₀` profile `L(γ) = f(γ)` sampled at `gammas`.
    pub fn from_fn(gammas: &[f64], f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_x0(gammas.iter().map(|&g| (g, f(g))))
    }

    pub fn knots(&self) -> &[LossKnot] {
        &self.knots
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.knots.iter().map(|k| k.gamma).collect()
    }

    /// All risks converted to `x₀` kind.
    pub fn x0_losses(&self) -> Vec<f64> {
        self.knots.iter().map(LossKnot::x0_loss).collect()
    }

    pub fn range(&self) -> (f64, f64) {
        (self.knots[0].gamma, self.knots[self.knots.len() - 1].gamma)
    }

    /// `x₀` risk at `gamma`.
    pub fn x0_at(&self, gamma: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        if let Ok(i) = self.knots.binary_search_by(|k| k.gamma.total_cmp(&gamma)) {
            return Ok(self.knots[i].x0_loss());
        }
        if !(gamma >= lo && gamma <= hi) {
            return Err(Error::Extrapolation { gamma, lo, hi });
        }
        let j = self.knots.partition_point(|k| k.gamma < gamma);
        let (a, b) = (&self.knots[j - 1], &self.knots[j]);
        let u = (gamma.ln() - a.gamma.ln()) / (b.gamma.ln() - a.gamma.ln());
        Ok(a.x0_loss() + u * (b.x0_loss() - a.x0_loss()))
    }

    /// Parses `gamma,loss,kind` CSV; `#` starts a comment line.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("empty loss CSV".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != ["gamma", "loss", "kind"] {
            return Err(Error::Parse(format!(
                "expected header `gamma,loss,kind`, got `{header}`"
            )));
        }
        let mut knots = Vec::new();
        for (n, line) in lines.enumerate() {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 3 {
                return Err(Error::Parse(format!("row {}: expected 3 fields", n + 1)));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: `{s}`: {e}", n + 1)))
            };
            knots.push(LossKnot {
                gamma: num(f[0])?,
                loss: num(f[1])?,
                kind: f[2].parse()?,
            });
        }
        Self::new(knots)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("gamma,loss,kind\n");
        for k in &self.knots {
            out.push_str(&format!("{:.17e},{:.17e},{}\n", k.gamma, k.loss, k.kind));
        }
        out
    }
}
