//! Fit assessment: SSE, DIC, predictive MSE and p-values, credible-interval
//! summaries, and paired t-tests.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::gamma::gamma;

use crate::error::{Result, WapError};
use crate::sampler::{joint_loglik, posterior_predictive_replicates, Block, ChainOutput, WapState};

/// Sum of squared differences.
pub fn sse(y_hat: &[f64], y: &[f64]) -> Result<f64> {
    if y_hat.len() != y.len() {
        return Err(WapError::shape(format!(
            "sse: {} predictions for {} observations",
            y_hat.len(),
            y.len()
        )));
    }
    Ok(y_hat.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Elementwise mortality / population.
pub fn hazard(mortality: &[u64], population: &[u64]) -> Result<Vec<f64>> {
    if mortality.len() != population.len() {
        return Err(WapError::shape("hazard: mortality and population lengths differ"));
    }
    mortality
        .iter()
        .zip(population)
        .enumerate()
        .map(|(i, (&m, &p))| {
            if p == 0 {
                Err(WapError::domain(format!("hazard: population of region {i} is zero")))
            } else {
                Ok(m as f64 / p as f64)
            }
        })
        .collect()
}

/// Type-7 (linear interpolation) quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q975: f64,
}

impl ParamSummary {
    pub fn above_zero(&self) -> bool {
        self.q025 > 0.0
    }

    pub fn below_zero(&self) -> bool {
        self.q975 < 0.0
    }
}

/// Posterior summaries plus the number of 95% intervals excluding zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub params: Vec<ParamSummary>,
    pub above_zero: usize,
    pub below_zero: usize,
}

/// Summarizes one trace.
pub fn summarize_trace(name: &str, values: &[f64]) -> Result<ParamSummary> {
    if values.is_empty() {
        return Err(WapError::State(format!("no draws for {name}")));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    Ok(ParamSummary {
        name: name.to_string(),
        mean,
        sd,
        q025: quantile_sorted(&sorted, 0.025),
        q975: quantile_sorted(&sorted, 0.975),
    })
}

/// Summarizes named traces.
pub fn summarize(traces: &[(String, Vec<f64>)]) -> Result<FitSummary> {
    let params = traces
        .iter()
        .map(|(n, v)| summarize_trace(n, v))
        .collect::<Result<Vec<_>>>()?;
    let above_zero = params.iter().filter(|p| p.above_zero()).count();
    let below_zero = params.iter().filter(|p| p.below_zero()).count();
    Ok(FitSummary {
        params,
        above_zero,
        below_zero,
    })
}

/// Traces of every coordinate of a latent block.
pub fn block_traces(chain: &ChainOutput, block: Block) -> Vec<(String, Vec<f64>)> {
    let len = chain.draws.first().map_or(0, |s| s.block(block).len());
    (0..len)
        .map(|i| {
            (
                format!("{}[{i}]", block.name()),
                chain.draws.iter().map(|s| s.block(block)[i]).collect(),
            )
        })
        .collect()
}

/// Summary of one latent block across the retained draws.
pub fn summarize_block(chain: &ChainOutput, block: Block) -> Result<FitSummary> {
    if chain.draws.is_empty() {
        return Err(WapError::State("chain has no retained draws".into()));
    }
    summarize(&block_traces(chain, block))
}

/// Statistic, degrees of freedom, and one-sided p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
}

/// Paired t-test of `mean(x - y) < 0`.
///
/// With zero variance of the differences the p-value is 0 for a negative mean
/// difference, 1 for a positive one, and 0.5 when every difference is zero.
pub fn paired_t_one_sided(x: &[f64], y: &[f64]) -> Result<TestResult> {
    if x.len() != y.len() {
        return Err(WapError::shape("paired t-test: samples differ in length"));
    }
    let n = x.len();
    if n < 2 {
        return Err(WapError::domain("paired t-test needs at least two pairs"));
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let df = nf - 1.0;
    if var == 0.0 {
        let (statistic, p_value) = if mean < 0.0 {
            (f64::NEG_INFINITY, 0.0)
        } else if mean > 0.0 {
            (f64::INFINITY, 1.0)
        } else {
            (0.0, 0.5)
        };
        return Ok(TestResult {
            statistic,
            df,
            p_value,
        });
    }
    let statistic = mean / (var / nf).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| WapError::Numeric(format!("t distribution: {e}")))?;
    Ok(TestResult {
        statistic,
        df,
        p_value: dist.cdf(statistic),
    })
}

/// Posterior mean of the continuous state, with shape coefficients averaged
/// on the log scale and hyperparameters averaged as stored.
pub fn posterior_mean_state(chain: &ChainOutput) -> Result<WapState> {
    let first = chain
        .draws
        .first()
        .ok_or_else(|| WapError::State("chain has no retained draws".into()))?;
    let n = chain.draws.len() as f64;
    let mut m = first.clone();
    for b in Block::ALL {
        *m.block_mut(b) = chain.draws.iter().map(|s| s.block(b)).sum::<DVector<f64>>() / n;
        if let Some(v) = m.mixing_mut(b) {
            *v = chain
                .draws
                .iter()
                .map(|s| s.mixing(b).expect("mixing block").clone())
                .sum::<nalgebra::DMatrix<f64>>()
                / n;
        }
    }
    m.delta = chain
        .draws
        .iter()
        .map(|s| s.delta.map(f64::ln))
        .sum::<DVector<f64>>()
        .map(|v| (v / n).exp());
    for (k, hp) in m.hyper.iter_mut().enumerate() {
        hp.alpha = chain.draws.iter().map(|s| s.hyper[k].alpha).sum::<f64>() / n;
        hp.log_kappa = chain.draws.iter().map(|s| s.hyper[k].log_kappa).sum::<f64>() / n;
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DicResult {
    pub dic: f64,
    /// Mean deviance over the retained draws.
    pub d_bar: f64,
    /// Deviance at the posterior mean.
    pub d_hat: f64,
    pub p_d: f64,
}

/// Deviance information criterion with `D = -2 loglik`.
pub fn dic(chain: &ChainOutput) -> Result<DicResult> {
    if chain.retained_loglik.is_empty() {
        return Err(WapError::State("chain has no retained draws".into()));
    }
    let d_bar = -2.0 * chain.retained_loglik.iter().sum::<f64>() / chain.retained_loglik.len() as f64;
    let mean = posterior_mean_state(chain)?;
    let d_hat = -2.0 * joint_loglik(&chain.design, &mean)?;
    let p_d = d_bar - d_hat;
    Ok(DicResult {
        dic: d_bar + p_d,
        d_bar,
        d_hat,
        p_d,
    })
}

/// `E[t] = exp(-y_c / rho) Gamma(1 + 1/rho)` for the Weibull law used here.
pub fn weibull_mean(rho: f64, y_c: f64) -> f64 {
    (-y_c / rho).exp() * gamma(1.0 + 1.0 / rho)
}

/// Posterior means of the responses themselves, averaging the analytic
/// conditional means over the retained draws.
pub fn posterior_response_means(chain: &ChainOutput) -> Result<(Vec<f64>, Vec<f64>)> {
    if chain.draws.is_empty() {
        return Err(WapError::State("chain has no retained draws".into()));
    }
    let d = &chain.design;
    let mut mt = vec![0.0; if d.kind.uses_weibull() { d.data.n_c() } else { 0 }];
    let mut mz = vec![0.0; if d.kind.uses_counts() { d.data.n_d() } else { 0 }];
    for s in &chain.draws {
        if !mt.is_empty() {
            let yc = d.y_c(s);
            let rho = d.rho(&s.delta);
            for i in 0..mt.len() {
                mt[i] += weibull_mean(rho[i], yc[i]);
            }
        }
        if !mz.is_empty() {
            let yd = d.y_d(s);
            for i in 0..mz.len() {
                mz[i] += yd[i].exp();
            }
        }
    }
    let n = chain.draws.len() as f64;
    mt.iter_mut().for_each(|v| *v /= n);
    mz.iter_mut().for_each(|v| *v /= n);
    Ok((mt, mz))
}

/// `log(E[R] / E[sqrt R]^2)` over a sample of replicate values.
pub fn log_correction(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    let s = values.iter().map(|v| v.sqrt()).sum::<f64>() / n;
    (m / (s * s)).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseResult {
    /// Mean squared error of `t` against its posterior predictive mean.
    pub weibull: Option<f64>,
    /// Mean squared error of `log(Z + zeta)` against the corrected
    /// predictive log-mean.
    pub poisson_log: Option<f64>,
    /// Per-region corrections `log(E R~ / E(sqrt R~)^2)` with `R~ = R + zeta`.
    pub corrections: Vec<f64>,
}

/// Predictive MSE for both response types. The count side compares
/// `log(Z + zeta)` with `log E R~ - correction`, computed from `b` posterior
/// predictive replicates.
pub fn mse_with_log_correction<R: Rng + ?Sized>(
    chain: &ChainOutput,
    b: usize,
    rng: &mut R,
) -> Result<MseResult> {
    let d = &chain.design;
    let (mt, _) = posterior_response_means(chain)?;
    let weibull = d.kind.uses_weibull().then(|| {
        let n = mt.len() as f64;
        mt.iter()
            .zip(&d.data.t)
            .map(|(m, t)| (m - t) * (m - t))
            .sum::<f64>()
            / n
    });
    let mut corrections = Vec::new();
    let poisson_log = if d.kind.uses_counts() {
        let reps = posterior_predictive_replicates(chain, b, rng)?;
        let zeta = d.spec.zeta;
        let n_d = d.data.n_d();
        let mut total = 0.0;
        for i in 0..n_d {
            let vals: Vec<f64> = reps.iter().map(|r| r.z[i] + zeta).collect();
            let corr = log_correction(&vals);
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let pred = mean.ln() - corr;
            let obs = (d.data.z[i] as f64 + zeta).ln();
            total += (pred - obs).powi(2);
            corrections.push(corr);
        }
        Some(total / n_d as f64)
    } else {
        None
    };
    Ok(MseResult {
        weibull,
        poisson_log,
        corrections,
    })
}

/// Pearson discrepancy `sum (x - m)^2 / max(m, floor)`.
pub fn pearson_chi_square(x: &[f64], m: &[f64], floor: f64) -> f64 {
    x.iter()
        .zip(m)
        .map(|(xi, mi)| (xi - mi).powi(2) / mi.max(floor))
        .sum()
}

/// Fraction of replicate statistics strictly above the observed one.
pub fn ppp_from_statistics(observed: f64, replicated: &[f64]) -> f64 {
    if replicated.is_empty() {
        return 0.0;
    }
    replicated.iter().filter(|&&r| r > observed).count() as f64 / replicated.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PppResult {
    pub weibull: Option<f64>,
    pub poisson: Option<f64>,
}

/// Minimum replicate count accepted by [`ppp_chi_square`].
pub const PPP_MIN_REPLICATES: usize = 100;

/// Posterior predictive p-values of the Pearson statistic, per response type.
pub fn ppp_chi_square<R: Rng + ?Sized>(
    chain: &ChainOutput,
    b: usize,
    rng: &mut R,
) -> Result<PppResult> {
    if b < PPP_MIN_REPLICATES {
        return Err(WapError::domain(format!(
            "posterior predictive p-value needs at least {PPP_MIN_REPLICATES} replicates, got {b}"
        )));
    }
    let d = &chain.design;
    let zeta = d.spec.zeta;
    let (mt, mz) = posterior_response_means(chain)?;
    let reps = posterior_predictive_replicates(chain, b, rng)?;
    let weibull = d.kind.uses_weibull().then(|| {
        let obs = pearson_chi_square(&d.data.t, &mt, zeta);
        let rep: Vec<f64> = reps
            .iter()
            .map(|r| pearson_chi_square(&r.t, &mt, zeta))
            .collect();
        ppp_from_statistics(obs, &rep)
    });
    let poisson = d.kind.uses_counts().then(|| {
        let z: Vec<f64> = d.data.z.iter().map(|&v| v as f64).collect();
        let obs = pearson_chi_square(&z, &mz, zeta);
        let rep: Vec<f64> = reps
            .iter()
            .map(|r| pearson_chi_square(&r.z, &mz, zeta))
            .collect();
        ppp_from_statistics(obs, &rep)
    });
    Ok(PppResult { weibull, poisson })
}
