use serde::{Deserialize, Serialize};

use crate::basis::{BasisKind, KnotSet};
use crate::error::{Result, WapError};

/// Which likelihood branches a fit uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Joint Weibull-and-Poisson model with the shared spatial block.
    Wap,
    /// Weibull responses only; no shared block.
    Weibull,
    /// Poisson counts only; no shared block.
    Poisson,
}

impl ModelKind {
    pub fn uses_weibull(self) -> bool {
        matches!(self, ModelKind::Wap | ModelKind::Weibull)
    }

    pub fn uses_counts(self) -> bool {
        matches!(self, ModelKind::Wap | ModelKind::Poisson)
    }
}

impl std::str::FromStr for ModelKind {
    type Err = WapError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wap" => Ok(ModelKind::Wap),
            "weibull" => Ok(ModelKind::Weibull),
            "poisson" => Ok(ModelKind::Poisson),
            other => Err(WapError::domain(format!("unknown model '{other}'"))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Wap => "wap",
            ModelKind::Weibull => "weibull",
            ModelKind::Poisson => "poisson",
        })
    }
}

/// Switches for the non-latent updates. All on for ordinary fits; calibration
/// studies hold some of them at known values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateMask {
    pub mixing: bool,
    pub hyper: bool,
    pub shape: bool,
}

impl Default for UpdateMask {
    fn default() -> Self {
        Self {
            mixing: true,
            hyper: true,
            shape: true,
        }
    }
}

/// Model constants and basis settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WapModelSpec {
    /// Number of basis functions.
    pub r: usize,
    pub basis: BasisKind,
    /// Explicit knot locations; chosen from the centroids when absent.
    pub knots: Option<KnotSet>,
    /// Bisquare radius; 1.5 x median inter-knot distance when absent.
    pub bisquare_radius: Option<f64>,
    /// Hyperprior constants for every (alpha, kappa) pair.
    pub hyper_r1: f64,
    pub hyper_r2: f64,
    pub hyper_b: f64,
    /// Pseudo-count added to count rows so zero counts keep proper conditionals.
    pub zeta: f64,
    /// Log-gamma prior on the free entries of the mixing matrices.
    pub alpha_v: f64,
    pub kappa_v: f64,
    /// Gamma prior on the Weibull shape coefficients (shape, scale).
    pub shape_prior_alpha: f64,
    pub shape_prior_scale: f64,
    /// Initial random-walk step on log(delta).
    pub mh_step: f64,
    /// Adapt the step toward the target acceptance rate during burn-in.
    pub mh_adapt: bool,
    pub updates: UpdateMask,
}

pub const MH_TARGET_ACCEPTANCE: f64 = 0.44;

impl Default for WapModelSpec {
    fn default() -> Self {
        Self {
            r: 10,
            basis: BasisKind::ThinPlateSpline,
            knots: None,
            bisquare_radius: None,
            hyper_r1: 1.0,
            hyper_r2: -10.0,
            hyper_b: 1.0,
            zeta: 0.001,
            alpha_v: 1000.0,
            kappa_v: 0.001,
            shape_prior_alpha: 10.0,
            shape_prior_scale: 0.1,
            mh_step: 0.3,
            mh_adapt: true,
            updates: UpdateMask::default(),
        }
    }
}

impl WapModelSpec {
    pub fn with_r(r: usize) -> Self {
        Self {
            r,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(WapError::domain(format!("{name} must be positive, got {v}")))
            }
        };
        if self.r == 0 {
            return Err(WapError::domain("basis count r must be at least 1"));
        }
        positive(self.hyper_r1, "hyper_r1")?;
        if !(self.hyper_r2 < 0.0 && self.hyper_r2.is_finite()) {
            return Err(WapError::domain(format!("hyper_r2 must be negative, got {}", self.hyper_r2)));
        }
        positive(self.hyper_b, "hyper_b")?;
        // The (alpha, kappa) prior integrates only when |r2| > b exp(r1 / b);
        // otherwise the shape update drifts to infinity.
        let bound = self.hyper_b * (self.hyper_r1 / self.hyper_b).exp();
        if -self.hyper_r2 <= bound {
            return Err(WapError::domain(format!(
                "hyperprior is improper: |r2| = {} must exceed b exp(r1 / b) = {bound:.4}",
                -self.hyper_r2
            )));
        }
        positive(self.zeta, "zeta")?;
        positive(self.alpha_v, "alpha_v")?;
        positive(self.kappa_v, "kappa_v")?;
        positive(self.shape_prior_alpha, "shape_prior_alpha")?;
        positive(self.shape_prior_scale, "shape_prior_scale")?;
        if !(self.mh_step >= 0.0 && self.mh_step.is_finite()) {
            return Err(WapError::domain("mh_step must be non-negative"));
        }
        if let Some(k) = &self.knots {
            if k.len() != self.r {
                return Err(WapError::shape(format!(
                    "{} explicit knots given but r = {}",
                    k.len(),
                    self.r
                )));
            }
        }
        if let Some(rad) = self.bisquare_radius {
            positive(rad, "bisquare_radius")?;
        }
        Ok(())
    }

    /// Prior mean of a shape coefficient.
    pub fn shape_prior_mean(&self) -> f64 {
        self.shape_prior_alpha * self.shape_prior_scale
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub chains: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            iterations: 2000,
            burn_in: 1000,
            thin: 1,
            seed: 1,
            chains: 1,
        }
    }
}

impl ChainConfig {
    pub fn new(iterations: usize, burn_in: usize, thin: usize, seed: u64) -> Self {
        Self {
            iterations,
            burn_in,
            thin,
            seed,
            chains: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(WapError::domain(format!(
                "burn-in {} must be smaller than iterations {}",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(WapError::domain("thinning must be at least 1"));
        }
        if self.chains == 0 {
            return Err(WapError::domain("chain count must be at least 1"));
        }
        Ok(())
    }

    /// Draws retained per chain.
    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }

    /// Whether the sweep numbered `iteration` (from 0) is retained.
    pub fn keeps(&self, iteration: usize) -> bool {
        iteration >= self.burn_in && (iteration - self.burn_in + 1) % self.thin == 0
    }
}
