//! Exact MMSE oracles, error functionals and loss-adaptive sampler schedules
//! for diffusion models under the Brownian forward process `X_t = Z + W_t`.
//!
//! SNR is `γ = 1/t`. Targets are Gaussian mixtures or finite discrete
//! distributions, for which the posterior of `Z` given `X_t` is again a
//! mixture and every quantity below has an exact or quadrature oracle.

pub mod channel;
pub mod error;
pub mod functionals;
pub mod grid;
pub mod loss;
pub mod numeric;
pub mod quadrature;
pub mod sampler;
pub mod schedule;
pub mod target;
pub mod toy;
pub mod verify;

pub use channel::{denoise, mmse, mmse_derivative, posterior, MmseCurve, MmsePolicy};
pub use error::{Error, Result};
pub use functionals::{
    apx_error, combined_objective, disc_error, final_bounds, pathwise_kl_mc, ErrorReport, ReportBuilder,
};
pub use grid::SnrGrid;
pub use loss::{eps_to_x0, LossKind, LossProfile};
pub use numeric::Estimate;
pub use sampler::{sample, second_order_sample, SampleReport, SamplerConfig};
pub use schedule::{las, CandidateSet, LasConfig, Schedule};
pub use target::{InfoProfile, TargetDistribution};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
