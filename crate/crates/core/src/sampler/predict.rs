use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};

use super::chain::ChainOutput;
use super::design::Design;
use super::state::WapState;
use crate::basis::Coord;
use crate::error::{Result, WapError};

/// Linear predictors `(Y_c, Y_d)` of one state at the observed regions.
pub fn predict_state(design: &Design, state: &WapState) -> (DVector<f64>, DVector<f64>) {
    (design.y_c(state), design.y_d(state))
}

fn require_draws(chain: &ChainOutput) -> Result<()> {
    if chain.draws.is_empty() {
        Err(WapError::State("chain has no retained draws".into()))
    } else {
        Ok(())
    }
}

/// Posterior means of the linear predictors at the observed regions.
pub fn predict_linear(chain: &ChainOutput) -> Result<(DVector<f64>, DVector<f64>)> {
    require_draws(chain)?;
    let d = &chain.design;
    let mut yc = DVector::zeros(d.data.n_c());
    let mut yd = DVector::zeros(d.data.n_d());
    for s in &chain.draws {
        yc += d.y_c(s);
        yd += d.y_d(s);
    }
    let n = chain.draws.len() as f64;
    Ok((yc / n, yd / n))
}

/// Covariates and centroids of regions without observations.
#[derive(Debug, Clone)]
pub struct HeldOutRegions {
    pub x_c: DMatrix<f64>,
    pub centroids_c: Vec<Coord>,
    pub x_d: DMatrix<f64>,
    pub centroids_d: Vec<Coord>,
}

/// Posterior mean predictors at held-out regions, with the fine-scale terms
/// at their prior location 0.
pub fn predict_held_out(
    chain: &ChainOutput,
    regions: &HeldOutRegions,
) -> Result<(DVector<f64>, DVector<f64>)> {
    require_draws(chain)?;
    let d = &chain.design;
    if regions.x_c.nrows() != regions.centroids_c.len()
        || regions.x_d.nrows() != regions.centroids_d.len()
    {
        return Err(WapError::shape("held-out covariate rows differ from centroid counts"));
    }
    if (!regions.centroids_c.is_empty() && regions.x_c.ncols() != d.data.p_c())
        || (!regions.centroids_d.is_empty() && regions.x_d.ncols() != d.data.p_d())
    {
        return Err(WapError::shape("held-out covariates have the wrong column count"));
    }
    let psi_c = d.basis_at(&regions.centroids_c)?;
    let psi_d = d.basis_at(&regions.centroids_d)?;
    let mut yc = DVector::zeros(regions.centroids_c.len());
    let mut yd = DVector::zeros(regions.centroids_d.len());
    for s in &chain.draws {
        if !regions.centroids_c.is_empty() {
            yc += &regions.x_c * &s.beta_c + &psi_c * (&s.eta + &s.eta_c);
        }
        if !regions.centroids_d.is_empty() {
            yd += &regions.x_d * &s.beta_d + &psi_d * (&s.eta + &s.eta_d);
        }
    }
    let n = chain.draws.len() as f64;
    Ok((yc / n, yd / n))
}

/// One posterior predictive data set.
#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    /// Index of the retained draw it was simulated from.
    pub draw: usize,
    pub t: Vec<f64>,
    /// Counts held as reals so that draws with astronomically large means
    /// stay representable.
    pub z: Vec<f64>,
}

/// Draws `t = (E / exp(Y_c))^(1/rho)` with `E ~ Exp(1)`.
pub fn sample_weibull<R: Rng + ?Sized>(rho: f64, y_c: f64, rng: &mut R) -> f64 {
    let e: f64 = Exp1.sample(rng);
    ((e.ln() - y_c) / rho).exp()
}

/// Poisson draw with mean `exp(log_mean)`.
pub fn sample_poisson_log<R: Rng + ?Sized>(log_mean: f64, rng: &mut R) -> Result<u64> {
    let lambda = log_mean.exp();
    if lambda == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(lambda)
        .map_err(|e| WapError::Numeric(format!("Poisson mean exp({log_mean}): {e}")))?;
    Ok(dist.sample(rng) as u64)
}

/// Means above this use the normal approximation in [`sample_poisson_log_real`].
pub const POISSON_NORMAL_THRESHOLD: f64 = 1e7;

/// Poisson draw with mean `exp(log_mean)` returned as a real. Means above
/// [`POISSON_NORMAL_THRESHOLD`] are drawn from `N(lambda, lambda)` rounded to
/// the nearest non-negative integer; a mean that overflows `f64` is an error.
pub fn sample_poisson_log_real<R: Rng + ?Sized>(log_mean: f64, rng: &mut R) -> Result<f64> {
    let lambda = log_mean.exp();
    if !lambda.is_finite() {
        return Err(WapError::Numeric(format!("Poisson mean exp({log_mean}) overflows")));
    }
    if lambda <= POISSON_NORMAL_THRESHOLD {
        return sample_poisson_log(log_mean, rng).map(|k| k as f64);
    }
    let z: f64 = StandardNormal.sample(rng);
    Ok((lambda + lambda.sqrt() * z).round().max(0.0))
}

/// `b` replicate data sets, each simulated from a uniformly chosen retained draw.
pub fn posterior_predictive_replicates<R: Rng + ?Sized>(
    chain: &ChainOutput,
    b: usize,
    rng: &mut R,
) -> Result<Vec<Replicate>> {
    if b == 0 {
        return Err(WapError::domain("replicate count must be at least 1"));
    }
    require_draws(chain)?;
    let d = &chain.design;
    let mut out = Vec::with_capacity(b);
    for _ in 0..b {
        let k = rng.random_range(0..chain.draws.len());
        let s = &chain.draws[k];
        let t = if d.kind.uses_weibull() {
            let yc = d.y_c(s);
            let rho = d.rho(&s.delta);
            (0..yc.len()).map(|i| sample_weibull(rho[i], yc[i], rng)).collect()
        } else {
            Vec::new()
        };
        let z = if d.kind.uses_counts() {
            d.y_d(s)
                .iter()
                .map(|&y| sample_poisson_log_real(y, rng))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        out.push(Replicate { draw: k, t, z });
    }
    Ok(out)
}
