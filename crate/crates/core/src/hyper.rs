//! Metropolis-Hastings resampling of Dirichlet concentration parameters.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Below this value the proposal variance is held at [`MIN_VARIANCE`].
pub const SMALL_VALUE: f64 = 1e-6;
pub const MIN_VARIANCE: f64 = 1e-7;

/// Proposal variance around `x`: one tenth of the current value.
pub fn proposal_variance(x: f64) -> f64 {
    if x < SMALL_VALUE {
        MIN_VARIANCE
    } else {
        x / 10.0
    }
}

fn normal_log_pdf(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (x - mean) * (x - mean) / (2.0 * var)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MhStep {
    pub value: f64,
    pub accepted: bool,
}

/// One Metropolis-Hastings step with a Gaussian proposal centred on the
/// current value. Proposals at or below zero are rejected; the asymmetric
/// proposal is corrected by the Hastings ratio.
pub fn mh_step<R: Rng + ?Sized>(
    name: &'static str,
    current: f64,
    log_lik: impl Fn(f64) -> f64,
    rng: &mut R,
) -> Result<MhStep> {
    crate::error::check_positive(name, current)?;
    let ll_cur = log_lik(current);
    if !ll_cur.is_finite() {
        return Err(Error::NonFiniteLikelihood(current));
    }
    let var = proposal_variance(current);
    let proposal = Normal::new(current, var.sqrt())
        .expect("finite positive variance")
        .sample(rng);
    let u: f64 = rng.random();
    if proposal <= 0.0 {
        return Ok(MhStep {
            value: current,
            accepted: false,
        });
    }
    let ll_prop = log_lik(proposal);
    if !ll_prop.is_finite() {
        return Ok(MhStep {
            value: current,
            accepted: false,
        });
    }
    let log_ratio = ll_prop - ll_cur + normal_log_pdf(current, proposal, proposal_variance(proposal))
        - normal_log_pdf(proposal, current, var);
    if u.ln() < log_ratio {
        Ok(MhStep {
            value: proposal,
            accepted: true,
        })
    } else {
        Ok(MhStep {
            value: current,
            accepted: false,
        })
    }
}

/// Running acceptance counts per hyperparameter.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct AcceptanceStats {
    pub proposed: u64,
    pub accepted: u64,
}

impl AcceptanceStats {
    pub fn record(&mut self, step: &MhStep) {
        self.proposed += 1;
        self.accepted += step.accepted as u64;
    }

    pub fn merge(&mut self, other: &AcceptanceStats) {
        self.proposed += other.proposed;
        self.accepted += other.accepted;
    }

    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}
