//! Goodness-of-fit tools for checking samplers: one-sample Kolmogorov-Smirnov
//! tests, chi-square uniformity of rank histograms, and simulation-based
//! calibration (SBC) ranks.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::basis::{contiguous_groups, BasisKind, Coord};
use crate::diagnostics::TestResult;
use crate::error::{Result, WapError};
use crate::mlg::sample_log_gamma;
use crate::rng::substream;
use crate::sampler::{
    run_chain_from, sample_poisson_log, sample_weibull, ArealDataset, Block, ChainConfig, Design,
    HyperPair, ModelKind, UpdateMask, WapModelSpec, WapState,
};

/// Outcome of a one-sample Kolmogorov-Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub n: usize,
    pub p_value: f64,
}

impl KsResult {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value > level
    }
}

/// One-sample KS test of `sample` against the continuous CDF `cdf`.
pub fn ks_test<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<KsResult> {
    if sample.is_empty() {
        return Err(WapError::shape("KS test needs at least one observation"));
    }
    if sample.iter().any(|v| v.is_nan()) {
        return Err(WapError::domain("KS sample contains NaN"));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x).clamp(0.0, 1.0);
        d = d.max(f - i as f64 / nf).max((i + 1) as f64 / nf - f);
    }
    Ok(KsResult {
        statistic: d,
        n,
        p_value: kolmogorov_p_value(d, n),
    })
}

/// Asymptotic p-value of the KS statistic `d` at sample size `n`, using the
/// small-sample adjusted argument `(sqrt n + 0.12 + 0.11 / sqrt n) d`.
pub fn kolmogorov_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let j = j as f64;
        let term = sign * (-2.0 * j * j * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-12 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Chi-square test that `counts` come from equal-probability bins.
pub fn chi_square_uniformity(counts: &[usize]) -> Result<TestResult> {
    if counts.len() < 2 {
        return Err(WapError::shape("uniformity test needs at least two bins"));
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(WapError::domain("uniformity test needs at least one count"));
    }
    let expected = total as f64 / counts.len() as f64;
    let statistic = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let df = (counts.len() - 1) as f64;
    let dist = ChiSquared::new(df).map_err(|e| WapError::Numeric(e.to_string()))?;
    Ok(TestResult {
        statistic,
        df,
        p_value: dist.sf(statistic),
    })
}

/// SBC rank of `truth` among posterior `draws`: the number of draws strictly
/// below it, so the rank lies in `0..=draws.len()`.
pub fn sbc_rank(draws: &[f64], truth: f64) -> usize {
    draws.iter().filter(|&&d| d < truth).count()
}

/// Bins SBC ranks with maximum value `max_rank` into `bins` equal-width bins.
pub fn rank_histogram(ranks: &[usize], max_rank: usize, bins: usize) -> Result<Vec<usize>> {
    if bins == 0 || (max_rank + 1) % bins != 0 {
        return Err(WapError::shape(format!(
            "{bins} bins do not evenly divide {} rank values",
            max_rank + 1
        )));
    }
    let width = (max_rank + 1) / bins;
    let mut counts = vec![0; bins];
    for &r in ranks {
        if r > max_rank {
            return Err(WapError::Index(format!("rank {r} exceeds {max_rank}")));
        }
        counts[r / width] += 1;
    }
    Ok(counts)
}

/// Settings for a simulation-based calibration run of the joint sampler.
///
/// Hyper pairs and mixing matrices are held fixed at their generating values
/// (identity mixing, every block `(alpha, kappa)`), so the ranks check the
/// latent-block and shape updates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbcConfig {
    /// Sites; each carries one Weibull and one count response.
    pub sites: usize,
    pub r: usize,
    pub replicates: usize,
    pub chain: ChainConfig,
    /// Keep every `thin`-th retained draw when ranking.
    pub thin: usize,
    /// Log-gamma prior shape and rate shared by every latent block.
    pub alpha: f64,
    pub kappa: f64,
    pub bins: usize,
    /// Hold the Weibull shapes at their true values instead of sampling them.
    pub fix_shape: bool,
    pub seed: u64,
}

impl Default for SbcConfig {
    fn default() -> Self {
        Self {
            sites: 25,
            r: 5,
            replicates: 200,
            chain: ChainConfig::new(1500, 500, 1, 0),
            thin: 10,
            alpha: 5.0,
            kappa: 5.0,
            bins: 10,
            fix_shape: false,
            seed: 11,
        }
    }
}

/// Rank statistics of one tracked parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbcParam {
    pub name: String,
    pub ranks: Vec<usize>,
    pub histogram: Vec<usize>,
    pub test: TestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbcResult {
    pub max_rank: usize,
    /// Replicates whose chain completed; ranks come from these only.
    pub completed: usize,
    /// `(replicate, message)` for every replicate whose chain failed.
    pub failures: Vec<(usize, String)>,
    pub params: Vec<SbcParam>,
}

/// Tracked coordinates: `beta_c[0]` and `eta[0]`.
const SBC_NAMES: [&str; 2] = ["beta_c[0]", "eta[0]"];

fn sbc_spec(config: &SbcConfig) -> WapModelSpec {
    WapModelSpec {
        r: config.r,
        basis: BasisKind::Bisquare,
        updates: UpdateMask {
            mixing: false,
            hyper: false,
            shape: !config.fix_shape,
        },
        ..WapModelSpec::default()
    }
}

/// Covariates, centroids and shape groups for an SBC data set; responses are
/// placeholders until the truth is drawn.
fn sbc_template<R: Rng + ?Sized>(sites: usize, rng: &mut R) -> ArealDataset {
    let coin = Bernoulli::new(0.5).expect("valid probability");
    let design = |rng: &mut R| {
        DMatrix::from_fn(sites, 2, |_, _| if coin.sample(rng) { 1.0 } else { 0.0 })
    };
    let x_c = design(rng);
    let x_d = design(rng);
    let centroids: Vec<Coord> = (1..=sites).map(|i| Coord::on_line(i as f64)).collect();
    let ids: Vec<String> = (1..=sites).map(|i| format!("S{i}")).collect();
    ArealDataset {
        region_ids_c: ids.clone(),
        t: vec![1.0; sites],
        x_c,
        centroids_c: centroids.clone(),
        shape_groups: contiguous_groups(sites, 10),
        region_ids_d: ids,
        z: vec![1; sites],
        x_d,
        centroids_d: centroids,
        population: None,
    }
}

/// Draws every latent block and shape coefficient from the prior.
fn sbc_truth<R: Rng + ?Sized>(
    design: &Design,
    config: &SbcConfig,
    rng: &mut R,
) -> Result<WapState> {
    let mut state = design.initial_state();
    for b in Block::ALL {
        let block = state.block_mut(b);
        for v in block.iter_mut() {
            *v = sample_log_gamma(config.alpha, config.kappa, rng)?;
        }
    }
    state.hyper = [HyperPair::new(config.alpha, config.kappa); 7];
    let spec = &design.spec;
    let gamma = Gamma::new(spec.shape_prior_alpha, spec.shape_prior_scale)
        .map_err(|e| WapError::Numeric(e.to_string()))?;
    state.delta = DVector::from_iterator(state.delta.len(), (0..state.delta.len()).map(|_| gamma.sample(rng)));
    Ok(state)
}

/// Thinned draws ranked per replicate, trimmed so that the `L + 1` possible
/// ranks split evenly into the configured bins.
fn sbc_draws(config: &SbcConfig) -> usize {
    let per = config.chain.retained().div_ceil(config.thin);
    ((per + 1) / config.bins * config.bins).saturating_sub(1)
}

/// A data set drawn from the joint model, with the model spec used and the
/// generating state.
#[derive(Debug, Clone)]
pub struct ModelSimulation {
    pub spec: WapModelSpec,
    pub data: ArealDataset,
    pub truth: WapState,
}

/// Draws parameters from the prior described by `config` and simulates one
/// Weibull response and one count per site from them.
pub fn simulate_from_model<R: Rng + ?Sized>(
    config: &SbcConfig,
    rng: &mut R,
) -> Result<ModelSimulation> {
    let spec = sbc_spec(config);
    let mut data = sbc_template(config.sites, rng);
    let template = Design::build(ModelKind::Wap, &spec, &data)?;
    let truth = sbc_truth(&template, config, rng)?;
    let rho = template.rho(&truth.delta);
    let y_c = template.y_c(&truth);
    let y_d = template.y_d(&truth);
    data.t = (0..config.sites).map(|i| sample_weibull(rho[i], y_c[i], rng)).collect();
    data.z = y_d
        .iter()
        .map(|&y| sample_poisson_log(y, rng))
        .collect::<Result<_>>()?;
    Ok(ModelSimulation { spec, data, truth })
}

fn sbc_replicate(config: &SbcConfig, replicate: usize) -> Result<[usize; 2]> {
    let mut rng = substream(config.seed, &[replicate as u64]);
    let ModelSimulation { spec, data, truth } = simulate_from_model(config, &mut rng)?;
    let design = Arc::new(Design::build(ModelKind::Wap, &spec, &data)?);
    let mut init = design.initial_state();
    init.hyper = truth.hyper;
    if config.fix_shape {
        init.delta = truth.delta.clone();
    }
    let chain = run_chain_from(design, &config.chain, init, &mut rng)?;
    let kept: Vec<&WapState> = chain
        .draws
        .iter()
        .step_by(config.thin)
        .take(sbc_draws(config))
        .collect();
    let b0: Vec<f64> = kept.iter().map(|s| s.beta_c[0]).collect();
    let e0: Vec<f64> = kept.iter().map(|s| s.eta[0]).collect();
    Ok([sbc_rank(&b0, truth.beta_c[0]), sbc_rank(&e0, truth.eta[0])])
}

/// Runs simulation-based calibration of the joint sampler: draw parameters
/// from the prior, simulate data, fit, and rank the truth among thinned
/// posterior draws. Replicates run in parallel.
pub fn run_sbc(config: &SbcConfig) -> Result<SbcResult> {
    config.chain.validate()?;
    if config.thin == 0 || config.replicates == 0 || config.bins < 2 {
        return Err(WapError::domain(
            "SBC needs positive thinning and replicates and at least two bins",
        ));
    }
    let max_rank = sbc_draws(config);
    if max_rank == 0 {
        return Err(WapError::domain("too few retained draws for the requested bins"));
    }
    let outcomes: Vec<Result<[usize; 2]>> = (0..config.replicates)
        .into_par_iter()
        .map(|k| sbc_replicate(config, k))
        .collect();
    let mut ranks = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for (k, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(r) => ranks.push(r),
            Err(e) => {
                log::warn!("SBC replicate {k} failed: {e}");
                failures.push((k, e.to_string()));
            }
        }
    }
    if ranks.is_empty() {
        return Err(WapError::Numeric("every SBC replicate failed".into()));
    }
    let params = SBC_NAMES
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let r: Vec<usize> = ranks.iter().map(|x| x[j]).collect();
            let histogram = rank_histogram(&r, max_rank, config.bins)?;
            Ok(SbcParam {
                name: (*name).to_string(),
                test: chi_square_uniformity(&histogram)?,
                ranks: r,
                histogram,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SbcResult {
        max_rank,
        completed: ranks.len(),
        failures,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_tail_values() {
        // Q_KS(1.36) is about 0.049, the classic 5% critical value.
        let lambda: f64 = 1.358;
        let n = 1_000_000;
        let d = lambda / ((n as f64).sqrt() + 0.12 + 0.11 / (n as f64).sqrt());
        assert!((kolmogorov_p_value(d, n) - 0.05).abs() < 1e-3);
        assert_eq!(kolmogorov_p_value(0.0, 10), 1.0);
    }

    #[test]
    fn ks_on_perfect_grid() {
        let n = 1000;
        let sample: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let r = ks_test(&sample, |x| x).unwrap();
        assert!((r.statistic - 0.5 / n as f64).abs() < 1e-12);
        assert!(r.p_value > 0.99);
    }

    #[test]
    fn chi_square_flat_and_skewed() {
        let flat = chi_square_uniformity(&[10, 10, 10, 10]).unwrap();
        assert_eq!(flat.statistic, 0.0);
        assert!((flat.p_value - 1.0).abs() < 1e-12);
        let skew = chi_square_uniformity(&[40, 0, 0, 0]).unwrap();
        assert!((skew.statistic - 120.0).abs() < 1e-12);
        assert!(skew.p_value < 1e-20);
    }

    #[test]
    fn ranks_and_bins() {
        assert_eq!(sbc_rank(&[1.0, 2.0, 3.0], 2.5), 2);
        assert_eq!(rank_histogram(&[0, 1, 2, 3], 3, 2).unwrap(), vec![2, 2]);
        assert!(rank_histogram(&[0], 3, 3).is_err());
        assert!(rank_histogram(&[5], 3, 2).is_err());
    }
}
