use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether a run uses the default constants, for which the stretch lemmas
/// hold, or explicitly overridden ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    ProofSafe,
    Override,
}

/// Construction constants. `alpha` sets the level ratio, `beta` the pivot
/// separation and `gamma` the level gap used by pruning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub eps: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: usize,
    pub regime: Regime,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<usize>,
}

impl Overrides {
    pub fn is_empty(&self) -> bool {
        self.alpha.is_none() && self.beta.is_none() && self.gamma.is_none()
    }
}

impl Params {
    /// Proof-safe defaults `alpha = beta = eps / 20`. This single choice is
    /// below every bound the stretch arguments need (`eps/6`, `eps/11`,
    /// `eps/19`, and `1/2` for `beta`).
    pub fn proof_safe(eps: f64) -> Result<Self> {
        Self::with_overrides(eps, Overrides::default())
    }

    pub fn with_overrides(eps: f64, ov: Overrides) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::usage(format!("eps must be positive, got {eps}")));
        }
        let alpha = ov.alpha.unwrap_or(eps / 20.0);
        let beta = ov.beta.unwrap_or(eps / 20.0);
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::usage(format!("alpha must be positive, got {alpha}")));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::usage(format!("beta must lie in (0, 1), got {beta}")));
        }
        let gamma = match ov.gamma {
            Some(0) => return Err(Error::usage("gamma must be at least 1")),
            Some(g) => g,
            None => default_gamma(alpha, beta),
        };
        Ok(Params {
            eps,
            alpha,
            beta,
            gamma,
            regime: if ov.is_empty() {
                Regime::ProofSafe
            } else {
                Regime::Override
            },
        })
    }

    /// Number of non-empty levels below a target's own level whose incoming
    /// edges survive pruning.
    pub fn prune_quota(&self) -> usize {
        self.gamma.saturating_mul(4)
    }
}

/// `ceil(log_{1+alpha}(1/beta)) + 1`, the log evaluated by repeated
/// multiplication: the smallest `k` with `(1+alpha)^k >= 1/beta`, plus one.
pub fn default_gamma(alpha: f64, beta: f64) -> usize {
    let target = 1.0 / beta;
    let mut k = 0usize;
    let mut acc = 1.0f64;
    while acc < target {
        acc *= 1.0 + alpha;
        k += 1;
    }
    k + 1
}
